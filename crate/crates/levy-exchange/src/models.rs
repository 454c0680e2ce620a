//! Model parameterizations and their analytic structure: risk-neutral drift
//! correctors, joint characteristic functions, linear correlation formulas
//! and the convolution-condition solver for the common-factor construction.
//!
//! Every model prices the assets as `S_i(T) = S_i(0) exp(ω_i T + r T + Y_i(T))`
//! where `Y_i` is the de-drifted log-price process and `ω_i` is chosen so the
//! discounted price is a martingale. The supported dependence structures are
//!
//! * `BS`: correlated Brownian motions,
//! * `VG` / `VGPP`: one common (gamma or Γ++) stochastic clock for all
//!   Brownian legs,
//! * `SemeraroVGPP`: per-asset clocks `G_j = I_j + α_j Z` mixing an
//!   idiosyncratic and a common Γ++ subordinator,
//! * `LSVGPP`: the Semeraro clocks plus correlated Brownian motions on the
//!   common clock (Luciano-Semeraro),
//! * `BBVGPP`: dependence through a shared subordinated factor,
//!   `Y_j = X_j + a_j Z` (Ballotta-Bonfiglioli), tied together by convolution
//!   conditions so each margin stays in the Γ++ family.

use crate::error::{Error, Result};
use crate::gammapp::GammaPPParams;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Drift and volatility of one Brownian leg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrownianLeg {
    #[serde(default)]
    pub theta: f64,
    pub sigma: f64,
}

/// One asset's marginal dynamic `θ Z(t) + σ W(Z(t))` with a Γ++ subordinator
/// (`sub.a = 0` encodes the plain variance-gamma case).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalVGppParams {
    pub theta: f64,
    pub sigma: f64,
    pub sub: GammaPPParams,
}

impl MarginalVGppParams {
    pub fn new(theta: f64, sigma: f64, sub: GammaPPParams) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain(format!("sigma = {sigma} must be > 0")));
        }
        if !theta.is_finite() {
            return Err(Error::domain("theta must be finite"));
        }
        sub.validate()?;
        Ok(MarginalVGppParams { theta, sigma, sub })
    }

    /// Exponential moment `θ + σ²/2` entering every admissibility bound.
    pub fn exp_moment(&self) -> f64 {
        self.theta + 0.5 * self.sigma * self.sigma
    }
}

/// Common-clock model: all Brownian legs share one subordinator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommonSubModel {
    pub rate: f64,
    #[serde(default)]
    pub a: f64,
    pub alpha: f64,
    pub beta: f64,
    pub legs: Vec<BrownianLeg>,
    #[serde(default)]
    pub rho: f64,
}

/// Pure Black-Scholes benchmark with correlated Brownian motions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BsModel {
    pub rate: f64,
    pub legs: Vec<BrownianLeg>,
    #[serde(default)]
    pub rho: f64,
}

/// One asset of the Semeraro construction: clock `G_j = I_j + α_j Z` with
/// `I_j ~ Γ++(a, A_j t, B/α_j)` idiosyncratic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemeraroLeg {
    pub mu: f64,
    pub sigma: f64,
    pub alpha_j: f64,
    /// Idiosyncratic subordinator shape `A_j`.
    #[serde(rename = "A_j")]
    pub shape_j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemeraroModel {
    pub rate: f64,
    pub a: f64,
    /// Common subordinator shape `A` (so `Z(t) ~ Γ++(a, A t, B)`).
    #[serde(rename = "A")]
    pub common_shape: f64,
    #[serde(rename = "B")]
    pub common_rate: f64,
    pub legs: Vec<SemeraroLeg>,
}

/// Luciano-Semeraro extension: Semeraro clocks plus a correlation matrix for
/// the Brownian motions running on the common clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsModel {
    pub rate: f64,
    pub a: f64,
    #[serde(rename = "A")]
    pub common_shape: f64,
    #[serde(rename = "B")]
    pub common_rate: f64,
    pub legs: Vec<SemeraroLeg>,
    /// Brownian correlation matrix on the common clock.
    pub rho: Vec<Vec<f64>>,
}

/// One asset of the common-factor construction `Y_j = X_j + a_j Z`.
/// The Brownian parameters of the idiosyncratic leg `X_j` are pinned by the
/// convolution conditions and therefore not stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BbLeg {
    /// Loading `a_j` on the common factor.
    #[serde(rename = "a_j")]
    pub loading: f64,
    /// Idiosyncratic subordinator shape `A_{x_j}`.
    #[serde(rename = "A_x")]
    pub idio_shape: f64,
    /// Idiosyncratic subordinator rate `B_{x_j}`.
    #[serde(rename = "B_x")]
    pub idio_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BbModel {
    pub rate: f64,
    pub a: f64,
    /// Drift `β_z` of the common factor `Z = β_z Z_a + γ_z W(Z_a)`.
    #[serde(rename = "beta_z")]
    pub common_drift: f64,
    /// Volatility `γ_z` of the common factor.
    #[serde(rename = "gamma_z")]
    pub common_vol: f64,
    #[serde(rename = "A_z")]
    pub common_shape: f64,
    #[serde(rename = "B_z")]
    pub common_rate: f64,
    pub legs: Vec<BbLeg>,
}

/// Model family selector (the `kind` tag without parameters).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "BS")]
    Bs,
    #[serde(rename = "VG")]
    Vg,
    #[serde(rename = "VGPP")]
    Vgpp,
    #[serde(rename = "SemeraroVGPP")]
    Semeraro,
    #[serde(rename = "LSVGPP")]
    LucianoSemeraro,
    #[serde(rename = "BBVGPP")]
    BallottaBonfiglioli,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "BS" => Ok(ModelKind::Bs),
            "VG" => Ok(ModelKind::Vg),
            "VGPP" => Ok(ModelKind::Vgpp),
            "SemeraroVGPP" => Ok(ModelKind::Semeraro),
            "LSVGPP" => Ok(ModelKind::LucianoSemeraro),
            "BBVGPP" => Ok(ModelKind::BallottaBonfiglioli),
            other => Err(Error::domain(format!(
                "unknown model kind '{other}' (expected BS, VG, VGPP, SemeraroVGPP, LSVGPP or BBVGPP)"
            ))),
        }
    }
}

/// Tagged union of every supported model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ModelSpec {
    #[serde(rename = "BS")]
    Bs(BsModel),
    #[serde(rename = "VG")]
    Vg(CommonSubModel),
    #[serde(rename = "VGPP")]
    Vgpp(CommonSubModel),
    #[serde(rename = "SemeraroVGPP")]
    Semeraro(SemeraroModel),
    #[serde(rename = "LSVGPP")]
    LucianoSemeraro(LsModel),
    #[serde(rename = "BBVGPP")]
    BallottaBonfiglioli(BbModel),
}

impl BbModel {
    /// Brownian parameters of the idiosyncratic leg `X_j`, implied by the
    /// convolution conditions: `β_j = B_{x_j} a_j β_z / B_z` and
    /// `γ_j² = B_{x_j} a_j² γ_z² / B_z`.
    pub fn leg_brownian(&self, j: usize) -> BrownianLeg {
        let l = &self.legs[j];
        BrownianLeg {
            theta: l.idio_rate * l.loading * self.common_drift / self.common_rate,
            sigma: (l.idio_rate * l.loading * l.loading * self.common_vol * self.common_vol
                / self.common_rate)
                .sqrt(),
        }
    }

    /// Marginal law of `Y_j`: the matched exponents give a single
    /// subordinated Brownian leg with clock shape `A_{x_j} + A_z` and
    /// per-unit-clock drift `a_j β_z / B_z` and variance `a_j² γ_z² / B_z`.
    /// The representative returned uses the unit-mean clock gauge, so it is
    /// built from dependence-invariant ratios only.
    pub fn marginal(&self, j: usize) -> Result<MarginalVGppParams> {
        let l = &self.legs[j];
        let shape_y = l.idio_shape + self.common_shape;
        let rate_y = (1.0 - self.a) * shape_y;
        let theta = rate_y * l.loading * self.common_drift / self.common_rate;
        let sigma = (rate_y * l.loading * l.loading * self.common_vol * self.common_vol
            / self.common_rate)
            .sqrt();
        let sub = GammaPPParams::new(self.a, shape_y, rate_y)?;
        MarginalVGppParams::new(theta, sigma.max(f64::MIN_POSITIVE), sub)
    }
}

impl ModelSpec {
    pub fn rate(&self) -> f64 {
        match self {
            ModelSpec::Bs(m) => m.rate,
            ModelSpec::Vg(m) | ModelSpec::Vgpp(m) => m.rate,
            ModelSpec::Semeraro(m) => m.rate,
            ModelSpec::LucianoSemeraro(m) => m.rate,
            ModelSpec::BallottaBonfiglioli(m) => m.rate,
        }
    }

    pub fn n_assets(&self) -> usize {
        match self {
            ModelSpec::Bs(m) => m.legs.len(),
            ModelSpec::Vg(m) | ModelSpec::Vgpp(m) => m.legs.len(),
            ModelSpec::Semeraro(m) => m.legs.len(),
            ModelSpec::LucianoSemeraro(m) => m.legs.len(),
            ModelSpec::BallottaBonfiglioli(m) => m.legs.len(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ModelSpec::Bs(_) => "BS",
            ModelSpec::Vg(_) => "VG",
            ModelSpec::Vgpp(_) => "VGPP",
            ModelSpec::Semeraro(_) => "SemeraroVGPP",
            ModelSpec::LucianoSemeraro(_) => "LSVGPP",
            ModelSpec::BallottaBonfiglioli(_) => "BBVGPP",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_assets() == 0 {
            return Err(Error::domain("model needs at least one asset"));
        }
        if !self.rate().is_finite() {
            return Err(Error::domain("risk-free rate must be finite"));
        }
        match self {
            ModelSpec::Bs(m) => {
                for l in &m.legs {
                    check_leg(l.theta, l.sigma)?;
                }
                check_scalar_rho(m.rho, m.legs.len())?;
            }
            ModelSpec::Vg(m) => {
                if m.a != 0.0 {
                    return Err(Error::domain(format!(
                        "VG requires a = 0 (got {}); use kind VGPP for a > 0",
                        m.a
                    )));
                }
                validate_common_sub(m)?;
            }
            ModelSpec::Vgpp(m) => {
                if !(m.a > 0.0) {
                    return Err(Error::domain(format!(
                        "VGPP requires a in (0, 1), got {}; use kind VG for a = 0",
                        m.a
                    )));
                }
                validate_common_sub(m)?;
            }
            ModelSpec::Semeraro(m) => validate_semeraro_block(
                m.a,
                m.common_shape,
                m.common_rate,
                &m.legs,
            )?,
            ModelSpec::LucianoSemeraro(m) => {
                validate_semeraro_block(m.a, m.common_shape, m.common_rate, &m.legs)?;
                validate_correlation_matrix(&m.rho, m.legs.len())?;
            }
            ModelSpec::BallottaBonfiglioli(m) => {
                GammaPPParams::new(m.a, m.common_shape, m.common_rate)?;
                if !(m.common_vol > 0.0) {
                    return Err(Error::domain("gamma_z must be > 0"));
                }
                for (j, l) in m.legs.iter().enumerate() {
                    if !(l.idio_shape > 0.0 && l.idio_rate > 0.0) {
                        return Err(Error::domain(format!(
                            "asset {j}: A_x and B_x must be > 0"
                        )));
                    }
                    if !l.loading.is_finite() {
                        return Err(Error::domain(format!("asset {j}: a_j must be finite")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Marginal law of asset `j` as a sum of independent subordinated
    /// Brownian legs (or a drifted Brownian motion for `BS`).
    pub fn marginal_law(&self, j: usize) -> Result<MarginalLaw> {
        if j >= self.n_assets() {
            return Err(Error::domain(format!(
                "asset index {j} out of range (model has {})",
                self.n_assets()
            )));
        }
        Ok(match self {
            ModelSpec::Bs(m) => MarginalLaw::BrownianDrift {
                theta: m.legs[j].theta,
                sigma: m.legs[j].sigma,
            },
            ModelSpec::Vg(m) | ModelSpec::Vgpp(m) => {
                MarginalLaw::Components(vec![MarginalVGppParams::new(
                    m.legs[j].theta,
                    m.legs[j].sigma,
                    GammaPPParams::new(m.a, m.alpha, m.beta)?,
                )?])
            }
            ModelSpec::Semeraro(m) => {
                let l = &m.legs[j];
                let clock = GammaPPParams::new(
                    m.a,
                    l.shape_j + m.common_shape,
                    m.common_rate / l.alpha_j,
                )?;
                MarginalLaw::Components(vec![MarginalVGppParams::new(l.mu, l.sigma, clock)?])
            }
            ModelSpec::LucianoSemeraro(m) => {
                // The split of G_j into idiosyncratic and common pieces does
                // not change the margin: two independent Brownian motions on
                // the two clock pieces have the same law as one Brownian
                // motion on the total clock, so the margin equals the
                // single-leg form and is independent of the dependence block.
                let l = &m.legs[j];
                let clock = GammaPPParams::new(
                    m.a,
                    l.shape_j + m.common_shape,
                    m.common_rate / l.alpha_j,
                )?;
                MarginalLaw::Components(vec![MarginalVGppParams::new(l.mu, l.sigma, clock)?])
            }
            ModelSpec::BallottaBonfiglioli(m) => {
                MarginalLaw::Components(vec![m.marginal(j)?])
            }
        })
    }
}

fn check_leg(theta: f64, sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!("sigma = {sigma} must be > 0")));
    }
    if !theta.is_finite() {
        return Err(Error::domain("theta must be finite"));
    }
    Ok(())
}

fn check_scalar_rho(rho: f64, n: usize) -> Result<()> {
    if n > 2 {
        return Err(Error::domain(
            "scalar correlation only supports up to two assets",
        ));
    }
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::domain(format!("rho = {rho} must lie in [-1, 1]")));
    }
    Ok(())
}

fn validate_common_sub(m: &CommonSubModel) -> Result<()> {
    GammaPPParams::new(m.a, m.alpha, m.beta)?;
    for l in &m.legs {
        check_leg(l.theta, l.sigma)?;
    }
    check_scalar_rho(m.rho, m.legs.len())
}

fn validate_semeraro_block(a: f64, shape: f64, rate: f64, legs: &[SemeraroLeg]) -> Result<()> {
    GammaPPParams::new(a, shape, rate)?;
    for (j, l) in legs.iter().enumerate() {
        check_leg(l.mu, l.sigma)?;
        if !(l.alpha_j > 0.0) {
            return Err(Error::domain(format!("asset {j}: alpha_j must be > 0")));
        }
        if !(l.shape_j > 0.0) {
            return Err(Error::domain(format!("asset {j}: A_j must be > 0")));
        }
    }
    Ok(())
}

/// Symmetric, unit-diagonal and positive semidefinite up to a -1e-12
/// eigenvalue floor.
#[allow(clippy::needless_range_loop)] // index pairs are the semantics here
pub(crate) fn validate_correlation_matrix(rho: &[Vec<f64>], n: usize) -> Result<()> {
    if rho.len() != n || rho.iter().any(|r| r.len() != n) {
        return Err(Error::domain(format!("correlation matrix must be {n}x{n}")));
    }
    for i in 0..n {
        if (rho[i][i] - 1.0).abs() > 1e-12 {
            return Err(Error::domain("correlation matrix diagonal must be 1"));
        }
        for j in 0..n {
            if (rho[i][j] - rho[j][i]).abs() > 1e-12 {
                return Err(Error::domain("correlation matrix must be symmetric"));
            }
            if rho[i][j].abs() > 1.0 + 1e-12 {
                return Err(Error::domain("correlation entries must lie in [-1, 1]"));
            }
        }
    }
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| rho[i][j]);
    let eig = nalgebra::SymmetricEigen::new(m);
    if eig.eigenvalues.iter().any(|&l| l < -1e-12) {
        return Err(Error::domain(format!(
            "correlation matrix is not positive semidefinite (min eigenvalue {:.3e})",
            eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
        )));
    }
    Ok(())
}

/// A marginal law as either a drifted Brownian motion or a sum of
/// independent subordinated Brownian legs.
#[derive(Debug, Clone, PartialEq)]
pub enum MarginalLaw {
    BrownianDrift { theta: f64, sigma: f64 },
    Components(Vec<MarginalVGppParams>),
}

impl MarginalLaw {
    /// Characteristic exponent `ln E[exp(iw Y(t))]` at a complex argument.
    pub fn char_exponent(&self, t: f64, w: Complex64) -> Result<Complex64> {
        match self {
            MarginalLaw::BrownianDrift { theta, sigma } => {
                let i = Complex64::I;
                Ok((i * w * *theta - 0.5 * w * w * sigma * sigma) * t)
            }
            MarginalLaw::Components(legs) => {
                let mut acc = Complex64::default();
                for leg in legs {
                    let arg = w * leg.theta + Complex64::I * 0.5 * w * w * leg.sigma * leg.sigma;
                    acc += leg.sub.char_exponent(t, arg)?;
                }
                Ok(acc)
            }
        }
    }

    /// Per-unit-time drift corrector `ω = -ln E[e^{Y(1)}]`, i.e. the constant
    /// making `e^{-rt} S(t)` a martingale under exponentiation.
    pub fn omega(&self) -> Result<f64> {
        // E[e^{Y}] is the characteristic function continued to w = -i.
        let e = self
            .char_exponent(1.0, Complex64::new(0.0, -1.0))
            .map_err(|err| match err {
                Error::Domain(d) => Error::Domain(format!(
                    "martingale admissibility violated: {d} at the exponential moment"
                )),
                other => other,
            })?;
        Ok(-e.re)
    }
}

/// Drift corrector for one subordinated marginal,
/// `ω = α ln((β - μ̂)/(β - aμ̂))` with `μ̂ = θ + σ²/2`.
/// Reduces to `α ln(1 - θ/β - σ²/(2β))` in the gamma-clock case.
pub fn drift_corrector(marginal: &MarginalVGppParams) -> Result<f64> {
    let mu = marginal.exp_moment();
    let sub = &marginal.sub;
    if sub.beta - mu <= 0.0 {
        return Err(Error::domain(format!(
            "martingale admissibility violated: beta - (theta + sigma^2/2) = {} must be > 0",
            sub.beta - mu
        )));
    }
    if sub.a > 0.0 && sub.beta / sub.a - mu <= 0.0 {
        return Err(Error::domain(format!(
            "martingale admissibility violated: beta/a - (theta + sigma^2/2) = {} must be > 0",
            sub.beta / sub.a - mu
        )));
    }
    Ok(sub.alpha * ((sub.beta - mu) / (sub.beta - sub.a * mu)).ln())
}

/// Drift correctors for every asset of a model.
pub fn drift_correctors(spec: &ModelSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    (0..spec.n_assets())
        .map(|j| spec.marginal_law(j)?.omega())
        .collect()
}

/// Joint characteristic function `E[exp(i u · Y(t))]` of the de-drifted
/// log-price vector at a complex vector argument. The drift correctors and
/// the risk-free rate are applied by the pricers, not here.
pub fn cf_joint(spec: &ModelSpec, t: f64, u: &[Complex64]) -> Result<Complex64> {
    if u.len() != spec.n_assets() {
        return Err(Error::domain(format!(
            "argument dimension {} does not match the model's {} assets",
            u.len(),
            spec.n_assets()
        )));
    }
    if !(t > 0.0) {
        return Err(Error::domain(format!("time horizon t = {t} must be > 0")));
    }
    let i = Complex64::I;
    match spec {
        ModelSpec::Bs(m) => {
            let mut expo = Complex64::default();
            for (j, leg) in m.legs.iter().enumerate() {
                expo += i * u[j] * leg.theta - 0.5 * u[j] * u[j] * leg.sigma * leg.sigma;
            }
            if m.legs.len() == 2 {
                expo -= u[0] * u[1] * m.rho * m.legs[0].sigma * m.legs[1].sigma;
            }
            Ok((expo * t).exp())
        }
        ModelSpec::Vg(m) | ModelSpec::Vgpp(m) => {
            let sub = GammaPPParams::new(m.a, m.alpha, m.beta)?;
            // w = u·θ + (i/2) uᵀΣu with Σ the Brownian covariance
            let mut w = Complex64::default();
            for (j, leg) in m.legs.iter().enumerate() {
                w += u[j] * leg.theta + i * 0.5 * u[j] * u[j] * leg.sigma * leg.sigma;
            }
            if m.legs.len() == 2 {
                w += i * u[0] * u[1] * m.rho * m.legs[0].sigma * m.legs[1].sigma;
            }
            sub.cf_time(t, w)
        }
        ModelSpec::Semeraro(m) => {
            let mut expo = Complex64::default();
            let mut common_arg = Complex64::default();
            for (j, l) in m.legs.iter().enumerate() {
                let w = u[j] * l.mu + i * 0.5 * u[j] * u[j] * l.sigma * l.sigma;
                let idio =
                    GammaPPParams::new(m.a, l.shape_j, m.common_rate / l.alpha_j)?;
                expo += idio.char_exponent(t, w)?;
                common_arg += w * l.alpha_j;
            }
            let common = GammaPPParams::new(m.a, m.common_shape, m.common_rate)?;
            expo += common.char_exponent(t, common_arg)?;
            Ok(expo.exp())
        }
        ModelSpec::LucianoSemeraro(m) => {
            let mut expo = Complex64::default();
            let mut common_arg = Complex64::default();
            for (j, l) in m.legs.iter().enumerate() {
                let w = u[j] * l.mu + i * 0.5 * u[j] * u[j] * l.sigma * l.sigma;
                let idio =
                    GammaPPParams::new(m.a, l.shape_j, m.common_rate / l.alpha_j)?;
                expo += idio.char_exponent(t, w)?;
                // common-clock drift vector α_j μ_j
                common_arg += u[j] * (l.alpha_j * l.mu);
            }
            // common-clock covariance √(α_i α_j) σ_i σ_j ρ_{ij}
            for (jj, lj) in m.legs.iter().enumerate() {
                for (kk, lk) in m.legs.iter().enumerate() {
                    let cov = (lj.alpha_j * lk.alpha_j).sqrt() * lj.sigma * lk.sigma
                        * m.rho[jj][kk];
                    common_arg += i * 0.5 * u[jj] * u[kk] * cov;
                }
            }
            let common = GammaPPParams::new(m.a, m.common_shape, m.common_rate)?;
            expo += common.char_exponent(t, common_arg)?;
            Ok(expo.exp())
        }
        ModelSpec::BallottaBonfiglioli(m) => {
            let mut expo = Complex64::default();
            let mut v = Complex64::default();
            for (j, l) in m.legs.iter().enumerate() {
                let bl = m.leg_brownian(j);
                let w = u[j] * bl.theta + i * 0.5 * u[j] * u[j] * bl.sigma * bl.sigma;
                let idio = GammaPPParams::new(m.a, l.idio_shape, l.idio_rate)?;
                expo += idio.char_exponent(t, w)?;
                v += u[j] * l.loading;
            }
            let z_arg =
                v * m.common_drift + i * 0.5 * v * v * m.common_vol * m.common_vol;
            let common = GammaPPParams::new(m.a, m.common_shape, m.common_rate)?;
            expo += common.char_exponent(t, z_arg)?;
            Ok(expo.exp())
        }
    }
}

/// Joint characteristic function at a real vector argument.
pub fn cf_joint_real(spec: &ModelSpec, t: f64, u: &[f64]) -> Result<Complex64> {
    let uc: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    cf_joint(spec, t, &uc)
}

fn variance_of_leg(theta: f64, sigma: f64, sub: &GammaPPParams, t: f64) -> f64 {
    let m = sub.moments();
    theta * theta * m.variance * t + sigma * sigma * m.mean * t
}

/// Linear correlation `corr(Y_i(t), Y_j(t))` in closed form, with every
/// variance assembled from the subordinator cumulants as
/// `Var[Y] = θ² Var[G] + σ² E[G]`.
pub fn linear_correlation(spec: &ModelSpec, t: f64, i: usize, j: usize) -> Result<f64> {
    let n = spec.n_assets();
    if n < 2 {
        return Err(Error::domain(
            "linear correlation requires a multivariate model",
        ));
    }
    if i == j || i >= n || j >= n {
        return Err(Error::domain(format!(
            "asset indices ({i}, {j}) must be distinct and < {n}"
        )));
    }
    match spec {
        ModelSpec::Bs(m) => {
            check_scalar_rho(m.rho, n)?;
            Ok(m.rho)
        }
        ModelSpec::Vg(m) | ModelSpec::Vgpp(m) => {
            let sub = GammaPPParams::new(m.a, m.alpha, m.beta)?;
            let mom = sub.moments();
            let (li, lj) = (&m.legs[i], &m.legs[j]);
            let cov = li.theta * lj.theta * mom.variance * t
                + m.rho * li.sigma * lj.sigma * mom.mean * t;
            let vi = variance_of_leg(li.theta, li.sigma, &sub, t);
            let vj = variance_of_leg(lj.theta, lj.sigma, &sub, t);
            Ok(cov / (vi * vj).sqrt())
        }
        ModelSpec::Semeraro(m) => {
            let z = GammaPPParams::new(m.a, m.common_shape, m.common_rate)?;
            let (li, lj) = (&m.legs[i], &m.legs[j]);
            let cov = li.mu * lj.mu * li.alpha_j * lj.alpha_j * z.moments().variance * t;
            Ok(cov / (semeraro_variance(m.a, m.common_shape, m.common_rate, li, t)?
                * semeraro_variance(m.a, m.common_shape, m.common_rate, lj, t)?)
            .sqrt())
        }
        ModelSpec::LucianoSemeraro(m) => {
            let z = GammaPPParams::new(m.a, m.common_shape, m.common_rate)?;
            let zm = z.moments();
            let (li, lj) = (&m.legs[i], &m.legs[j]);
            let cov = li.mu * lj.mu * li.alpha_j * lj.alpha_j * zm.variance * t
                + m.rho[i][j]
                    * li.sigma
                    * lj.sigma
                    * (li.alpha_j * lj.alpha_j).sqrt()
                    * zm.mean
                    * t;
            Ok(cov / (semeraro_variance(m.a, m.common_shape, m.common_rate, li, t)?
                * semeraro_variance(m.a, m.common_shape, m.common_rate, lj, t)?)
            .sqrt())
        }
        ModelSpec::BallottaBonfiglioli(m) => {
            let z = GammaPPParams::new(m.a, m.common_shape, m.common_rate)?;
            let zm = z.moments();
            let factor_var = m.common_drift * m.common_drift * zm.variance * t
                + m.common_vol * m.common_vol * zm.mean * t;
            let cov = m.legs[i].loading * m.legs[j].loading * factor_var;
            let mi = m.marginal(i)?;
            let mj = m.marginal(j)?;
            let vi = variance_of_leg(mi.theta, mi.sigma, &mi.sub, t);
            let vj = variance_of_leg(mj.theta, mj.sigma, &mj.sub, t);
            Ok(cov / (vi * vj).sqrt())
        }
    }
}

fn semeraro_variance(a: f64, shape: f64, rate: f64, l: &SemeraroLeg, t: f64) -> Result<f64> {
    let clock = GammaPPParams::new(a, l.shape_j + shape, rate / l.alpha_j)?;
    Ok(variance_of_leg(l.mu, l.sigma, &clock, t))
}

/// Solution of the convolution conditions tying the composite process
/// `Y = X + a_1 Z` back to a single subordinated Brownian motion
/// `θ G_Y + σ W(G_Y)` with `G_Y ~ Γ++(a, A_y t, B_y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBConvolutionSolution {
    pub theta_y: f64,
    pub sigma_y: f64,
    pub shape_y: f64,
    pub rate_y: f64,
    /// Brownian parameters of the idiosyncratic leg implied by the matching.
    pub beta_x: f64,
    pub gamma_x: f64,
    /// Set when `a_1 γ_z = 0`, which collapses the factor leg to a constant
    /// and degenerates `σ_y` to zero.
    pub degenerate: bool,
}

impl BBConvolutionSolution {
    /// The matching fixes only the ratios `θ/B_y` and `σ²/B_y`; rescale the
    /// representative so the clock has unit mean for a given `a`.
    pub fn with_unit_mean(&self, a: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&a) {
            return Err(Error::domain(format!("a = {a} must lie in [0, 1)")));
        }
        let target_rate = (1.0 - a) * self.shape_y;
        let c = target_rate / self.rate_y;
        Ok(BBConvolutionSolution {
            theta_y: self.theta_y * c,
            sigma_y: (self.sigma_y * self.sigma_y * c).sqrt(),
            shape_y: self.shape_y,
            rate_y: target_rate,
            beta_x: self.beta_x,
            gamma_x: self.gamma_x,
            degenerate: self.degenerate,
        })
    }
}

/// Solves the exponent-matching (convolution) conditions
///
/// ```text
/// A_y = A_x + A_z,        y(u)/B_y = x(u)/B_x = z(u)/B_z  for all u,
/// ```
///
/// where `y, x, z` are the Brownian-leg arguments of the Y, X and `a_1 Z`
/// components. Matching the `u` and `u²` coefficients pins the idiosyncratic
/// Brownian parameters, `β = B_x a_1 β_z / B_z` and `γ² = B_x a_1² γ_z² / B_z`,
/// and determines `(θ, σ², B_y)` up to a common scale; the representative
/// returned uses the `B_y = B_x` gauge (see
/// [`BBConvolutionSolution::with_unit_mean`] for the unit-mean gauge).
pub fn bb_solve_convolution(
    idio_shape: f64,
    idio_rate: f64,
    common_shape: f64,
    common_rate: f64,
    loading: f64,
    common_drift: f64,
    common_vol: f64,
) -> Result<BBConvolutionSolution> {
    for (name, v) in [
        ("A_x", idio_shape),
        ("B_x", idio_rate),
        ("A_z", common_shape),
        ("B_z", common_rate),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::domain(format!("{name} = {v} must be > 0")));
        }
    }
    if !(common_vol > 0.0) {
        return Err(Error::domain(format!("gamma_z = {common_vol} must be > 0")));
    }
    if !loading.is_finite() {
        return Err(Error::domain(format!("a_1 = {loading} must be finite")));
    }
    let beta_x = idio_rate * loading * common_drift / common_rate;
    let gamma_x = (idio_rate * loading * loading * common_vol * common_vol / common_rate).sqrt();
    let degenerate = loading * common_vol == 0.0;
    Ok(BBConvolutionSolution {
        theta_y: beta_x,
        sigma_y: gamma_x,
        shape_y: idio_shape + common_shape,
        rate_y: idio_rate,
        beta_x,
        gamma_x,
        degenerate,
    })
}

/// Largest characteristic-function mismatch
/// `max_u |cf_Y(u) - cf_X(u) cf_{a_1 Z}(u)|` over a grid of real arguments,
/// the oracle for a convolution solution at a given `a`.
#[allow(clippy::too_many_arguments)] // mirrors the solver inputs plus the solution
pub fn bb_convolution_residual(
    sol: &BBConvolutionSolution,
    a: f64,
    idio_shape: f64,
    idio_rate: f64,
    common_shape: f64,
    common_rate: f64,
    loading: f64,
    common_drift: f64,
    common_vol: f64,
    u_grid: &[f64],
) -> Result<f64> {
    let gy = GammaPPParams::new(a, sol.shape_y, sol.rate_y)?;
    let gx = GammaPPParams::new(a, idio_shape, idio_rate)?;
    let gz = GammaPPParams::new(a, common_shape, common_rate)?;
    let i = Complex64::I;
    let mut worst: f64 = 0.0;
    for &u in u_grid {
        let uc = Complex64::new(u, 0.0);
        let y_arg = uc * sol.theta_y + i * 0.5 * uc * uc * sol.sigma_y * sol.sigma_y;
        let x_arg = uc * sol.beta_x + i * 0.5 * uc * uc * sol.gamma_x * sol.gamma_x;
        let z_arg = uc * (loading * common_drift)
            + i * 0.5 * uc * uc * (loading * common_vol) * (loading * common_vol);
        let lhs = gy.cf_time(1.0, y_arg)?;
        let rhs = gx.cf_time(1.0, x_arg)? * gz.cf_time(1.0, z_arg)?;
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn vg_53_model(a: f64, beta: f64) -> ModelSpec {
        let legs = vec![
            BrownianLeg { theta: -0.2012, sigma: 0.2 },
            BrownianLeg { theta: -0.1712, sigma: 0.3 },
        ];
        let m = CommonSubModel {
            rate: 0.01,
            a,
            alpha: 2.0,
            beta,
            legs,
            rho: 0.8,
        };
        if a == 0.0 {
            ModelSpec::Vg(m)
        } else {
            ModelSpec::Vgpp(m)
        }
    }

    fn table5_ls() -> ModelSpec {
        // printed values; idiosyncratic shapes completed by the unit-mean
        // convention A_j = B/((1-a) alpha_j) - A
        let (a, big_a, big_b) = (0.01, 1.43, 1224.83);
        let legs = vec![
            SemeraroLeg {
                mu: -0.47,
                sigma: 1.06,
                alpha_j: 1.43,
                shape_j: big_b / ((1.0 - a) * 1.43) - big_a,
            },
            SemeraroLeg {
                mu: -0.35,
                sigma: 0.96,
                alpha_j: 1.64,
                shape_j: big_b / ((1.0 - a) * 1.64) - big_a,
            },
        ];
        ModelSpec::LucianoSemeraro(LsModel {
            rate: 0.015,
            a,
            common_shape: big_a,
            common_rate: big_b,
            legs,
            rho: vec![vec![1.0, 0.99], vec![0.99, 1.0]],
        })
    }

    fn table6_bb() -> ModelSpec {
        ModelSpec::BallottaBonfiglioli(BbModel {
            rate: 0.015,
            a: 0.001,
            common_drift: -3.15,
            common_vol: 1.34,
            common_shape: 1.4438,
            common_rate: 62.77,
            legs: vec![
                BbLeg { loading: 4.80, idio_shape: 0.141, idio_rate: 12.20 },
                BbLeg { loading: 4.74, idio_shape: 0.0001, idio_rate: 0.006 },
            ],
        })
    }

    fn semeraro_from_ls(ls: &ModelSpec) -> ModelSpec {
        match ls {
            ModelSpec::LucianoSemeraro(m) => ModelSpec::Semeraro(SemeraroModel {
                rate: m.rate,
                a: m.a,
                common_shape: m.common_shape,
                common_rate: m.common_rate,
                legs: m.legs.clone(),
            }),
            _ => unreachable!(),
        }
    }

    fn all_fixtures() -> Vec<ModelSpec> {
        vec![
            ModelSpec::Bs(BsModel {
                rate: 0.015,
                legs: vec![
                    BrownianLeg { theta: 0.0, sigma: 0.84 },
                    BrownianLeg { theta: 0.0, sigma: 0.91 },
                ],
                rho: 0.96,
            }),
            vg_53_model(0.0, 2.0),
            vg_53_model(0.5, 1.0),
            semeraro_from_ls(&table5_ls()),
            table5_ls(),
            table6_bb(),
        ]
    }

    #[test]
    fn cf_joint_is_one_at_origin() {
        for spec in all_fixtures() {
            let u = vec![Complex64::default(); spec.n_assets()];
            let v = cf_joint(&spec, 1.0, &u).unwrap();
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-14, "{}", spec.kind_name());
        }
    }

    #[test]
    fn cf_joint_is_bounded_and_hermitian() {
        for spec in all_fixtures() {
            for k in 1..=12 {
                let u = 0.7 * k as f64;
                let up = cf_joint_real(&spec, 0.8, &[u, -0.4 * u]).unwrap();
                let um = cf_joint_real(&spec, 0.8, &[-u, 0.4 * u]).unwrap();
                assert!(up.norm() <= 1.0 + 1e-12);
                assert!((up - um.conj()).norm() < 1e-13, "{}", spec.kind_name());
            }
        }
    }

    #[test]
    fn cf_joint_univariate_reduces_to_marginal_cf() {
        let m = CommonSubModel {
            rate: 0.01,
            a: 0.3,
            alpha: 2.0,
            beta: 1.4,
            legs: vec![BrownianLeg { theta: -0.2, sigma: 0.25 }],
            rho: 0.0,
        };
        let spec = ModelSpec::Vgpp(m);
        let sub = GammaPPParams::new(0.3, 2.0, 1.4).unwrap();
        for k in -10..=10 {
            let u = 0.45 * k as f64;
            let lhs = cf_joint_real(&spec, 1.3, &[u]).unwrap();
            let w = Complex64::new(u * -0.2, 0.0)
                + Complex64::I * 0.5 * u * u * 0.25 * 0.25;
            let rhs = sub.cf_time(1.3, w).unwrap();
            assert!((lhs - rhs).norm() < 1e-13);
        }
    }

    #[test]
    fn cf_joint_matches_marginal_law_on_axes() {
        for spec in all_fixtures() {
            let n = spec.n_assets();
            for j in 0..n {
                let law = spec.marginal_law(j).unwrap();
                for k in 1..=8 {
                    let u = 0.6 * k as f64;
                    let mut uv = vec![Complex64::default(); n];
                    uv[j] = Complex64::new(u, 0.0);
                    let joint = cf_joint(&spec, 0.9, &uv).unwrap();
                    let marg = law
                        .char_exponent(0.9, Complex64::new(u, 0.0))
                        .unwrap()
                        .exp();
                    assert!(
                        (joint - marg).norm() < 1e-12,
                        "{} asset {j} at u={u}",
                        spec.kind_name()
                    );
                }
            }
        }
    }

    #[test]
    fn ls_with_zero_brownian_correlation_equals_semeraro() {
        let ls0 = match table5_ls() {
            ModelSpec::LucianoSemeraro(mut m) => {
                m.rho = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
                ModelSpec::LucianoSemeraro(m)
            }
            _ => unreachable!(),
        };
        let sem = semeraro_from_ls(&ls0);
        for iu in -7..=7 {
            for ju in -7..=7 {
                let u = [0.5 * iu as f64, 0.5 * ju as f64];
                let a = cf_joint_real(&ls0, 1.0, &u).unwrap();
                let b = cf_joint_real(&sem, 1.0, &u).unwrap();
                assert!((a - b).norm() <= 1e-12, "at {u:?}: {a} vs {b}");
            }
        }
        // and the correlation formula reduces likewise
        let ca = linear_correlation(&ls0, 1.0, 0, 1).unwrap();
        let cb = linear_correlation(&sem, 1.0, 0, 1).unwrap();
        assert_relative_eq!(ca, cb, epsilon = 1e-14);
    }

    #[test]
    fn drift_corrector_matches_the_gamma_clock_formula() {
        // alpha = beta = 2 (unit mean), theta = -0.2012, sigma = 0.2
        let m = MarginalVGppParams::new(
            -0.2012,
            0.2,
            GammaPPParams::new(0.0, 2.0, 2.0).unwrap(),
        )
        .unwrap();
        let w = drift_corrector(&m).unwrap();
        assert_relative_eq!(w, 2.0 * (1.0 + 0.2012 / 2.0 - 0.01f64).ln(), epsilon = 1e-15);
        assert_relative_eq!(w, 0.17345600701964828, epsilon = 1e-15);
    }

    #[test]
    fn drift_corrector_vanishes_for_degenerate_asset() {
        let sub = GammaPPParams::new(0.2, 2.0, 1.6).unwrap();
        let m = MarginalVGppParams::new(0.0, 1e-9, sub).unwrap();
        assert!(drift_corrector(&m).unwrap().abs() < 1e-15);
    }

    #[test]
    fn drift_corrector_rejects_inadmissible_parameters() {
        let sub = GammaPPParams::new(0.0, 2.0, 1.0).unwrap();
        let m = MarginalVGppParams::new(0.9, 0.6, sub).unwrap(); // mu_hat = 1.08 > beta
        match drift_corrector(&m) {
            Err(Error::Domain(msg)) => assert!(msg.contains("beta - (theta + sigma^2/2)")),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn drift_correctors_agree_with_direct_formula_for_subordinated_kinds() {
        let spec = vg_53_model(0.5, 1.0);
        let ws = drift_correctors(&spec).unwrap();
        let sub = GammaPPParams::new(0.5, 2.0, 1.0).unwrap();
        let w0 = drift_corrector(
            &MarginalVGppParams::new(-0.2012, 0.2, sub).unwrap(),
        )
        .unwrap();
        assert_relative_eq!(ws[0], w0, epsilon = 1e-14);
    }

    #[test]
    fn semeraro_correlation_vanishes_with_zero_drift() {
        let mut legs = vec![
            SemeraroLeg { mu: 0.0, sigma: 0.5, alpha_j: 1.2, shape_j: 2.0 },
            SemeraroLeg { mu: 0.0, sigma: 0.6, alpha_j: 0.8, shape_j: 1.5 },
        ];
        let spec = ModelSpec::Semeraro(SemeraroModel {
            rate: 0.0,
            a: 0.05,
            common_shape: 1.0,
            common_rate: 2.0,
            legs: legs.clone(),
        });
        assert_eq!(linear_correlation(&spec, 1.0, 0, 1).unwrap(), 0.0);
        // nonzero drift gives positive correlation
        legs[0].mu = -0.3;
        legs[1].mu = -0.4;
        let spec = ModelSpec::Semeraro(SemeraroModel {
            rate: 0.0,
            a: 0.05,
            common_shape: 1.0,
            common_rate: 2.0,
            legs,
        });
        let c = linear_correlation(&spec, 1.0, 0, 1).unwrap();
        assert!(c > 0.0 && c < 1.0);
    }

    #[test]
    fn correlation_requires_multivariate_spec_and_distinct_assets() {
        let uni = ModelSpec::Vg(CommonSubModel {
            rate: 0.0,
            a: 0.0,
            alpha: 2.0,
            beta: 2.0,
            legs: vec![BrownianLeg { theta: 0.0, sigma: 0.2 }],
            rho: 0.0,
        });
        assert!(linear_correlation(&uni, 1.0, 0, 1).is_err());
        let spec = vg_53_model(0.0, 2.0);
        assert!(linear_correlation(&spec, 1.0, 1, 1).is_err());
    }

    #[test]
    fn correlation_matches_cf_cross_moment() {
        // Cross-check the closed-form covariance against mixed numerical
        // differentiation of the joint CF at the origin.
        for spec in [vg_53_model(0.5, 1.0), table5_ls(), table6_bb()] {
            let t = 0.7;
            let h = 1e-3;
            let f = |u1: f64, u2: f64| cf_joint_real(&spec, t, &[u1, u2]).unwrap().ln();
            let cross = -((f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h)).re;
            let d2_1 = -((f(h, 0.0) - 2.0 * f(0.0, 0.0) + f(-h, 0.0)) / (h * h)).re;
            let d2_2 = -((f(0.0, h) - 2.0 * f(0.0, 0.0) + f(0.0, -h)) / (h * h)).re;
            let rho_fd = cross / (d2_1 * d2_2).sqrt();
            let rho = linear_correlation(&spec, t, 0, 1).unwrap();
            assert_relative_eq!(rho, rho_fd, max_relative = 1e-4);
        }
    }

    #[test]
    fn bb_solution_reproduces_printed_calibration_row() {
        let sol = bb_solve_convolution(0.141, 12.20, 1.4438, 62.77, 4.80, -3.15, 1.34).unwrap();
        assert_relative_eq!(sol.shape_y, 0.141 + 1.4438, epsilon = 1e-12);
        assert!((sol.shape_y - 1.5839).abs() < 2e-3); // table rounds A_y
        // implied idiosyncratic Brownian leg and unit-mean marginal
        assert_relative_eq!(sol.beta_x, 12.20 * 4.80 * (-3.15) / 62.77, epsilon = 1e-12);
        let um = sol.with_unit_mean(0.001).unwrap();
        assert!((um.theta_y - (-0.38)).abs() < 5e-3);
        assert!((um.sigma_y - 1.025).abs() < 5e-3);
    }

    #[test]
    fn bb_solution_satisfies_cf_equality_oracle() {
        let grid: Vec<f64> = (0..100).map(|k| -12.0 + 24.0 * k as f64 / 99.0).collect();
        let sol = bb_solve_convolution(0.141, 12.20, 1.4438, 62.77, 4.80, -3.15, 1.34).unwrap();
        for a in [0.001, 0.3] {
            let r = bb_convolution_residual(
                &sol, a, 0.141, 12.20, 1.4438, 62.77, 4.80, -3.15, 1.34, &grid,
            )
            .unwrap();
            assert!(r < 1e-10, "cf residual {r} at a={a}");
            // the unit-mean gauge describes the same law
            let um = sol.with_unit_mean(a).unwrap();
            let r2 = bb_convolution_residual(
                &um, a, 0.141, 12.20, 1.4438, 62.77, 4.80, -3.15, 1.34, &grid,
            )
            .unwrap();
            assert!(r2 < 1e-10, "unit-mean cf residual {r2} at a={a}");
        }
    }

    #[test]
    fn bb_solution_mean_and_variance_identities() {
        let (ax, bx, az, bz, a1, bz_d, gz) = (0.141, 12.20, 1.4438, 62.77, 4.80, -3.15, 1.34);
        let sol = bb_solve_convolution(ax, bx, az, bz, a1, bz_d, gz).unwrap();
        // E[Y(1)] = θ A_y / B_y = β A_x / B_x + a_1 β_z A_z / B_z
        let lhs = sol.theta_y * sol.shape_y / sol.rate_y;
        let rhs = sol.beta_x * ax / bx + a1 * bz_d * az / bz;
        assert_relative_eq!(lhs, rhs, epsilon = 1e-10);
        // Var[Y(1)] = θ²(1-a²)A_y/B_y² + σ²(1-a)A_y/B_y against the cumulants
        // of the composite legs, for a representative a.
        let a = 0.3;
        let var_y = sol.theta_y * sol.theta_y * (1.0 - a * a) * sol.shape_y
            / (sol.rate_y * sol.rate_y)
            + sol.sigma_y * sol.sigma_y * (1.0 - a) * sol.shape_y / sol.rate_y;
        let gx = GammaPPParams::new(a, ax, bx).unwrap().moments();
        let gzm = GammaPPParams::new(a, az, bz).unwrap().moments();
        let var_comp = sol.beta_x * sol.beta_x * gx.variance
            + sol.gamma_x * sol.gamma_x * gx.mean
            + (a1 * bz_d) * (a1 * bz_d) * gzm.variance
            + (a1 * gz) * (a1 * gz) * gzm.mean;
        assert_relative_eq!(var_y, var_comp, max_relative = 1e-10);
    }

    #[test]
    fn bb_solver_flags_degenerate_loading() {
        let sol = bb_solve_convolution(0.5, 2.0, 1.0, 3.0, 0.0, -1.0, 0.8).unwrap();
        assert!(sol.degenerate);
        assert_eq!(sol.sigma_y, 0.0);
        assert_eq!(sol.theta_y, 0.0);
        assert_relative_eq!(sol.shape_y, 1.5, epsilon = 1e-15);
    }

    #[test]
    fn bb_solver_rejects_invalid_inputs() {
        assert!(bb_solve_convolution(0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0).is_err());
        assert!(bb_solve_convolution(1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn correlation_matrix_validation() {
        assert!(validate_correlation_matrix(
            &[vec![1.0, 0.5], vec![0.5, 1.0]],
            2
        )
        .is_ok());
        // boundary |rho| = 1 is PSD
        assert!(validate_correlation_matrix(
            &[vec![1.0, 1.0], vec![1.0, 1.0]],
            2
        )
        .is_ok());
        // asymmetric
        assert!(validate_correlation_matrix(
            &[vec![1.0, 0.3], vec![0.5, 1.0]],
            2
        )
        .is_err());
        // not PSD (3x3 with impossible triple)
        assert!(validate_correlation_matrix(
            &[
                vec![1.0, 0.9, -0.9],
                vec![0.9, 1.0, 0.9],
                vec![-0.9, 0.9, 1.0]
            ],
            3
        )
        .is_err());
    }

    #[test]
    fn model_validation_rejects_misuse() {
        let mut m = CommonSubModel {
            rate: 0.01,
            a: 0.2,
            alpha: 2.0,
            beta: 2.0,
            legs: vec![
                BrownianLeg { theta: 0.0, sigma: 0.2 },
                BrownianLeg { theta: 0.0, sigma: 0.3 },
            ],
            rho: 0.5,
        };
        assert!(ModelSpec::Vg(m.clone()).validate().is_err()); // a != 0 under VG
        m.a = 0.0;
        assert!(ModelSpec::Vg(m.clone()).validate().is_ok());
        assert!(ModelSpec::Vgpp(m.clone()).validate().is_err()); // a = 0 under VGPP
        m.rho = 1.5;
        assert!(ModelSpec::Vg(m).validate().is_err());
    }

    #[test]
    fn model_spec_round_trips_through_json_with_symbolic_names() {
        let spec = vg_53_model(0.5, 1.0);
        let json = serde_json::to_string_pretty(&spec).unwrap();
        for key in ["\"kind\"", "\"VGPP\"", "\"theta\"", "\"sigma\"", "\"alpha\"", "\"beta\"", "\"rho\"", "\"a\""] {
            assert!(json.contains(key), "missing {key} in {json}");
        }
        let back: ModelSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);

        let bb = table6_bb();
        let json = serde_json::to_string(&bb).unwrap();
        for key in ["\"a_j\"", "\"A_x\"", "\"B_x\"", "\"beta_z\"", "\"gamma_z\"", "\"A_z\"", "\"B_z\""] {
            assert!(json.contains(key), "missing {key}");
        }
        let back: ModelSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, bb);
    }
}
