//! Pricing engine for exchange options under variance-gamma-type Lévy
//! models.
//!
//! An exchange option pays `(S2(T) - S1(T))^+`: the right to swap one
//! asset for another. This crate prices it (and positive-strike spreads,
//! through the transform and simulation routes) when the joint log-price
//! dynamics follow:
//!
//! * correlated geometric Brownian motions (`BS`),
//! * a common variance-gamma clock (`VG`),
//! * a common Γ++ clock with a zero atom modeling illiquidity (`VGPP`),
//! * mixed idiosyncratic/common clocks (`SemeraroVGPP`, `LSVGPP`),
//! * a shared subordinated factor with convolution conditions (`BBVGPP`).
//!
//! Three families of pricers cross-validate each other: closed formulas
//! ([`pricing::closed`]), single-inversion Fourier transforms
//! ([`pricing::fourier`]) and deterministic parallel Monte Carlo ([`mc`]).
//! A two-step market calibration ([`calibration`]) fits marginals to
//! vanilla quotes and the dependence block to historical correlation.
//!
//! The accompanying guide under `book/` walks through the concepts; its
//! code blocks compile and run as doc-tests of this crate.

// Validations use `!(x > 0.0)` so NaN fails the check too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod error;
pub mod gammapp;
pub mod mc;
pub mod models;
pub mod pricing;
pub mod specfun;

#[cfg(doctest)]
mod book;
mod optim;
mod quad;

pub use error::{Error, Result};
pub use models::{ModelKind, ModelSpec};
pub use pricing::{ExchangeContract, Method, PriceReport};
