//! Guide chapters compiled as doc-tests, so every code block in the book
//! builds and runs against the current API. Only present while rustdoc
//! collects tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/gamma_pp.md")]
pub mod gamma_pp {}

#[doc = include_str!("../../../book/src/drift_correctors.md")]
pub mod drift_correctors {}

#[doc = include_str!("../../../book/src/closed_formulas.md")]
pub mod closed_formulas {}

#[doc = include_str!("../../../book/src/fourier_methods.md")]
pub mod fourier_methods {}

#[doc = include_str!("../../../book/src/monte_carlo.md")]
pub mod monte_carlo {}

#[doc = include_str!("../../../book/src/multivariate.md")]
pub mod multivariate {}

#[doc = include_str!("../../../book/src/calibration.md")]
pub mod calibration_guide {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
