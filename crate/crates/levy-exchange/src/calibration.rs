//! Two-step market calibration: nonlinear least squares on vanilla quotes
//! for the marginal parameters (through the damped-transform pricer), then a
//! dependence-parameter fit to the historical log-return correlation.
//!
//! The split works because none of the marginal laws depend on the
//! dependence block: the common/idiosyncratic decomposition of each clock
//! only redistributes a fixed total, and the common-factor construction
//! enters each margin through dependence-invariant ratios.

use crate::error::{Error, Result};
use crate::gammapp::GammaPPParams;
use crate::models::{
    linear_correlation, BbLeg, BbModel, BrownianLeg, BsModel, CommonSubModel, LsModel,
    MarginalLaw, MarginalVGppParams, ModelKind, ModelSpec, SemeraroLeg, SemeraroModel,
};
use crate::optim::{fit_least_squares, FitOptions};
use crate::pricing::fourier::{price_vanilla_calls, FourierGrid};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Strikes further than this from the forward are excluded (the usual
/// deep-ITM/OTM moneyness filter, in currency units).
pub const MONEYNESS_BAND: f64 = 15.0;

/// One vanilla call quote.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VanillaQuote {
    /// Asset index into the snapshot's forwards.
    pub asset: usize,
    pub strike: f64,
    pub maturity: f64,
    pub mid: f64,
}

/// Market data consumed by calibration: forward prices, vanilla quotes and
/// aligned historical log-return series per asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketSnapshot {
    pub as_of: String,
    pub rate: f64,
    pub forwards: Vec<f64>,
    pub quotes: Vec<VanillaQuote>,
    pub returns: Vec<Vec<f64>>,
}

impl MarketSnapshot {
    pub fn validate(&self) -> Result<()> {
        if self.forwards.is_empty() || self.forwards.iter().any(|&f| !(f > 0.0)) {
            return Err(Error::domain("forwards must be positive"));
        }
        if !self.rate.is_finite() {
            return Err(Error::domain("rate must be finite"));
        }
        if self.returns.len() != self.forwards.len() {
            return Err(Error::domain(format!(
                "{} return series for {} assets",
                self.returns.len(),
                self.forwards.len()
            )));
        }
        if let Some(first) = self.returns.first() {
            if self.returns.iter().any(|r| r.len() != first.len()) {
                return Err(Error::domain("return series must have equal length"));
            }
        }
        for q in &self.quotes {
            if q.asset >= self.forwards.len() {
                return Err(Error::domain(format!("quote asset {} out of range", q.asset)));
            }
            if !(q.strike > 0.0 && q.maturity > 0.0 && q.mid >= 0.0) {
                return Err(Error::domain("quotes need positive strike/maturity and mid >= 0"));
            }
            if (q.strike - self.forwards[q.asset]).abs() > MONEYNESS_BAND + 1e-9 {
                return Err(Error::domain(format!(
                    "strike {} further than {MONEYNESS_BAND} from forward {}; \
                     apply the moneyness filter first",
                    q.strike, self.forwards[q.asset]
                )));
            }
        }
        Ok(())
    }

    /// Drop quotes outside the moneyness band.
    pub fn apply_moneyness_filter(&mut self) {
        let forwards = self.forwards.clone();
        self.quotes
            .retain(|q| (q.strike - forwards[q.asset]).abs() <= MONEYNESS_BAND + 1e-9);
    }

    fn quotes_of(&self, asset: usize) -> Vec<&VanillaQuote> {
        self.quotes.iter().filter(|q| q.asset == asset).collect()
    }
}

/// Calibrated marginal parameters: per-asset Brownian legs and clock shapes
/// plus the shared self-decomposability parameter, all under the unit-mean
/// clock convention `β = shape (1 - a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalsFit {
    pub kind: ModelKind,
    pub rate: f64,
    pub theta: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Marginal clock shape per asset (a single shared value for the
    /// common-clock kinds, repeated per asset).
    pub shape: Vec<f64>,
    pub a: f64,
    /// Sum of squared price errors at the optimum.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl MarginalsFit {
    /// Unit-mean clock rate of asset `j`.
    pub fn beta(&self, j: usize) -> f64 {
        self.shape[j] * (1.0 - self.a)
    }

    pub fn marginal_law(&self, j: usize) -> Result<MarginalLaw> {
        Ok(match self.kind {
            ModelKind::Bs => MarginalLaw::BrownianDrift { theta: 0.0, sigma: self.sigma[j] },
            _ => MarginalLaw::Components(vec![MarginalVGppParams::new(
                self.theta[j],
                self.sigma[j],
                GammaPPParams::new(self.a, self.shape[j], self.beta(j))?,
            )?]),
        })
    }
}

/// Knobs of both calibration steps.
#[derive(Debug, Clone, Copy)]
pub struct CalibrationOptions {
    pub n_starts: usize,
    pub max_iterations: usize,
    pub seed: u64,
    pub grid: FourierGrid,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            n_starts: 8,
            max_iterations: 120,
            seed: 20_240_101,
            grid: FourierGrid::default(),
        }
    }
}

/// Full calibration output: the assembled model plus fit diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub model: ModelSpec,
    pub marginals: MarginalsFit,
    /// Sum of squared vanilla price errors of the marginal step.
    pub objective_value: f64,
    pub correlation_target: f64,
    pub correlation_model: f64,
    /// `|target - model|`; nonzero when the target is unattainable and the
    /// dependence fit stops at the boundary of the attainable set.
    pub correlation_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub diagnostics: BTreeMap<String, f64>,
}

// parameter layout per kind: [per-asset block]* [shared block]
fn parameter_layout(kind: ModelKind, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (mut lower, mut upper) = (Vec::new(), Vec::new());
    match kind {
        ModelKind::Bs => {
            for _ in 0..n {
                lower.push(0.01);
                upper.push(4.0);
            }
        }
        ModelKind::Vg | ModelKind::Vgpp => {
            for _ in 0..n {
                lower.extend_from_slice(&[-3.0, 0.02]);
                upper.extend_from_slice(&[1.5, 4.0]);
            }
            lower.push(0.05);
            upper.push(20.0);
            if kind == ModelKind::Vgpp {
                lower.push(1e-6);
                upper.push(0.9);
            }
        }
        _ => {
            for _ in 0..n {
                lower.extend_from_slice(&[-3.0, 0.02, 0.05]);
                upper.extend_from_slice(&[1.5, 4.0, 20.0]);
            }
            lower.push(1e-6);
            upper.push(0.9);
        }
    }
    (lower, upper)
}

fn unpack(kind: ModelKind, n: usize, x: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>, f64) {
    match kind {
        ModelKind::Bs => (vec![0.0; n], x.to_vec(), vec![0.0; n], 0.0),
        ModelKind::Vg | ModelKind::Vgpp => {
            let theta: Vec<f64> = (0..n).map(|j| x[2 * j]).collect();
            let sigma: Vec<f64> = (0..n).map(|j| x[2 * j + 1]).collect();
            let alpha = x[2 * n];
            let a = if kind == ModelKind::Vgpp { x[2 * n + 1] } else { 0.0 };
            (theta, sigma, vec![alpha; n], a)
        }
        _ => {
            let theta: Vec<f64> = (0..n).map(|j| x[3 * j]).collect();
            let sigma: Vec<f64> = (0..n).map(|j| x[3 * j + 1]).collect();
            let shape: Vec<f64> = (0..n).map(|j| x[3 * j + 2]).collect();
            (theta, sigma, shape, x[3 * n])
        }
    }
}

/// First calibration step: box-constrained nonlinear least squares of the
/// model vanilla prices (damped-transform pricer) against the quoted mids,
/// `min_Θ Σ_i (C_i^Θ - C_i)²`, with the clock rate eliminated by the
/// unit-mean convention. Non-convergence returns the best point found,
/// flagged rather than raised.
pub fn calibrate_marginals(
    snapshot: &MarketSnapshot,
    kind: ModelKind,
    initial_guess: Option<&[f64]>,
    options: &CalibrationOptions,
) -> Result<MarginalsFit> {
    snapshot.validate()?;
    let n = snapshot.forwards.len();
    let min_quotes = if kind == ModelKind::Bs { 1 } else { 4 };
    for j in 0..n {
        let cnt = snapshot.quotes_of(j).len();
        if cnt < min_quotes {
            return Err(Error::precondition(format!(
                "asset {j} has {cnt} quotes; at least {min_quotes} are needed for identifiability"
            )));
        }
    }

    // group quotes per (asset, maturity) so each group shares one transform pass
    let mut groups: Vec<(usize, f64, Vec<f64>, Vec<f64>)> = Vec::new();
    for j in 0..n {
        for q in snapshot.quotes_of(j) {
            match groups
                .iter_mut()
                .find(|(a, t, _, _)| *a == j && *t == q.maturity)
            {
                Some((_, _, ks, mids)) => {
                    ks.push(q.strike);
                    mids.push(q.mid);
                }
                None => groups.push((j, q.maturity, vec![q.strike], vec![q.mid])),
            }
        }
    }

    let (lower, upper) = parameter_layout(kind, n);
    let grid = options.grid;
    let rate = snapshot.rate;
    let forwards = snapshot.forwards.clone();
    let residuals = |x: &[f64]| -> Option<Vec<f64>> {
        let (theta, sigma, shape, a) = unpack(kind, n, x);
        let mut out = Vec::new();
        for (j, t, ks, mids) in &groups {
            let law = match kind {
                ModelKind::Bs => MarginalLaw::BrownianDrift { theta: 0.0, sigma: sigma[*j] },
                _ => MarginalLaw::Components(vec![
                    MarginalVGppParams::new(
                        theta[*j],
                        sigma[*j],
                        GammaPPParams::new(a, shape[*j], shape[*j] * (1.0 - a)).ok()?,
                    )
                    .ok()?,
                ]),
            };
            let prices = price_vanilla_calls(&law, rate, forwards[*j], *t, ks, &grid).ok()?;
            for (p, m) in prices.iter().zip(mids) {
                out.push(p - m);
            }
        }
        Some(out)
    };

    // default start: flat-vol heuristic from the closest-to-the-money quote
    let default_start: Vec<f64> = {
        let mut atm_sigma = vec![0.5; n];
        for j in 0..n {
            if let Some(q) = snapshot
                .quotes_of(j)
                .into_iter()
                .min_by(|a, b| {
                    (a.strike - forwards[j])
                        .abs()
                        .total_cmp(&(b.strike - forwards[j]).abs())
                })
            {
                let approx =
                    (2.0 * std::f64::consts::PI / q.maturity).sqrt() * q.mid / forwards[j];
                atm_sigma[j] = approx.clamp(0.05, 3.0);
            }
        }
        match kind {
            ModelKind::Bs => atm_sigma.clone(),
            ModelKind::Vg | ModelKind::Vgpp => {
                let mut v = Vec::new();
                for s in &atm_sigma {
                    v.extend_from_slice(&[-0.2, *s]);
                }
                v.push(2.0);
                if kind == ModelKind::Vgpp {
                    v.push(0.02);
                }
                v
            }
            _ => {
                let mut v = Vec::new();
                for s in &atm_sigma {
                    v.extend_from_slice(&[-0.2, *s, 2.0]);
                }
                v.push(0.02);
                v
            }
        }
    };
    let start = initial_guess.map(<[f64]>::to_vec).unwrap_or(default_start);

    let fit = fit_least_squares(
        residuals,
        &lower,
        &upper,
        Some(&start),
        &FitOptions {
            max_iterations: options.max_iterations,
            n_starts: options.n_starts,
            seed: options.seed,
        },
    )
    .ok_or(Error::Numerical {
        context: "marginal calibration",
        detail: "no feasible parameter vector found".into(),
    })?;

    let (theta, sigma, shape, a) = unpack(kind, n, &fit.params);
    Ok(MarginalsFit {
        kind,
        rate,
        theta,
        sigma,
        shape,
        a,
        objective: fit.objective,
        iterations: fit.iterations,
        converged: fit.converged,
    })
}

/// Pearson correlation over pairwise-complete (both finite) observations.
pub fn empirical_correlation(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::domain("return series must be aligned"));
    }
    let pairs: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(x, y)| (*x, *y))
        .collect();
    if pairs.len() < 3 {
        return Err(Error::domain("need at least 3 complete return pairs"));
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in pairs {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::domain("degenerate return series"));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Second calibration step: fit the dependence block to the historical
/// correlation with the marginals pinned. The common-clock kinds invert
/// their (linear) correlation formula in closed form and recover any
/// attainable target exactly; the multi-clock kinds run a bounded least
/// squares over the dependence block. An unattainable target lands on the
/// boundary of the attainable set with the residual reported.
pub fn calibrate_dependence(
    snapshot: &MarketSnapshot,
    fit: &MarginalsFit,
    options: &CalibrationOptions,
) -> Result<CalibrationResult> {
    snapshot.validate()?;
    if snapshot.forwards.len() != 2 {
        return Err(Error::domain(
            "dependence calibration expects a bivariate snapshot",
        ));
    }
    let target = empirical_correlation(&snapshot.returns[0], &snapshot.returns[1])?;
    let mut diagnostics = BTreeMap::new();
    let t_ref = 1.0;

    let (model, iterations, converged) = match fit.kind {
        ModelKind::Bs => {
            let rho = target.clamp(-1.0, 1.0);
            let model = ModelSpec::Bs(BsModel {
                rate: fit.rate,
                legs: (0..2)
                    .map(|j| BrownianLeg { theta: 0.0, sigma: fit.sigma[j] })
                    .collect(),
                rho,
            });
            (model, 0, true)
        }
        ModelKind::Vg | ModelKind::Vgpp => {
            // corr(ρ_b) is affine in the Brownian correlation: invert and clamp
            let sub = GammaPPParams::new(fit.a, fit.shape[0], fit.beta(0))?;
            let mom = sub.moments();
            let (t1, t2) = (fit.theta[0], fit.theta[1]);
            let (s1, s2) = (fit.sigma[0], fit.sigma[1]);
            let v1 = t1 * t1 * mom.variance + s1 * s1 * mom.mean;
            let v2 = t2 * t2 * mom.variance + s2 * s2 * mom.mean;
            let rho_b = (target * (v1 * v2).sqrt() - t1 * t2 * mom.variance)
                / (s1 * s2 * mom.mean);
            let rho = rho_b.clamp(-1.0, 1.0);
            diagnostics.insert("rho_brownian_unclamped".into(), rho_b);
            let m = CommonSubModel {
                rate: fit.rate,
                a: fit.a,
                alpha: fit.shape[0],
                beta: fit.beta(0),
                legs: (0..2)
                    .map(|j| BrownianLeg { theta: fit.theta[j], sigma: fit.sigma[j] })
                    .collect(),
                rho,
            };
            let model = if fit.kind == ModelKind::Vg {
                ModelSpec::Vg(m)
            } else {
                ModelSpec::Vgpp(m)
            };
            (model, 1, true)
        }
        ModelKind::Semeraro | ModelKind::LucianoSemeraro => {
            // free block: common shape A in (0, min_j shape_j), common rate B
            // (log-parameterized) and, for the correlated-Brownian variant,
            // the Brownian correlation on the common clock
            let min_shape = fit.shape.iter().cloned().fold(f64::INFINITY, f64::min);
            let with_rho = fit.kind == ModelKind::LucianoSemeraro;
            let assemble = |x: &[f64]| -> Result<ModelSpec> {
                let common_shape = x[0];
                let common_rate = x[1].exp();
                let legs: Vec<SemeraroLeg> = (0..2)
                    .map(|j| {
                        // marginal clock: shape_j = A_j + A, rate β_j = B/α_j
                        SemeraroLeg {
                            mu: fit.theta[j],
                            sigma: fit.sigma[j],
                            alpha_j: common_rate / fit.beta(j),
                            shape_j: fit.shape[j] - common_shape,
                        }
                    })
                    .collect();
                Ok(if with_rho {
                    let r = x[2];
                    ModelSpec::LucianoSemeraro(LsModel {
                        rate: fit.rate,
                        a: fit.a,
                        common_shape,
                        common_rate,
                        legs,
                        rho: vec![vec![1.0, r], vec![r, 1.0]],
                    })
                } else {
                    ModelSpec::Semeraro(SemeraroModel {
                        rate: fit.rate,
                        a: fit.a,
                        common_shape,
                        common_rate,
                        legs,
                    })
                })
            };
            let residual = |x: &[f64]| -> Option<Vec<f64>> {
                let spec = assemble(x).ok()?;
                let rho = linear_correlation(&spec, t_ref, 0, 1).ok()?;
                Some(vec![rho - target])
            };
            let mut lower = vec![1e-6, -6.0];
            let mut upper = vec![min_shape - 1e-6, 10.0];
            if with_rho {
                lower.push(-1.0);
                upper.push(1.0);
            }
            let mut start = vec![0.5 * min_shape, (fit.beta(0) * 0.5 * min_shape).ln()];
            if with_rho {
                start.push(0.8);
            }
            let out = fit_least_squares(
                residual,
                &lower,
                &upper,
                Some(&start),
                &FitOptions {
                    max_iterations: options.max_iterations,
                    n_starts: options.n_starts,
                    seed: options.seed ^ 0x5eed,
                },
            )
            .ok_or(Error::Numerical {
                context: "dependence calibration",
                detail: "no feasible dependence block".into(),
            })?;
            (assemble(&out.params)?, out.iterations, out.converged)
        }
        ModelKind::BallottaBonfiglioli => {
            // Gauge choices: B_z = 1 and a_1 scaled out of the factor. The
            // asset-1 ratio conditions then pin (β_z, γ_z) exactly; asset 2's
            // loading solves its two ratio conditions in least squares; the
            // single genuinely free dependence parameter is the common shape.
            let (ath, asg) = (fit.theta[0], fit.sigma[0]);
            let by1 = fit.beta(0);
            let beta_z = ath / by1;
            let gamma_z = (asg * asg / by1).sqrt();
            let r2t = fit.theta[1] / fit.beta(1);
            let r2s = fit.sigma[1] * fit.sigma[1] / fit.beta(1);
            // minimize (a2 β_z - r2t)² + (a2² γ_z² - r2s)² over a2
            let a2 = {
                let obj = |a2: f64| {
                    let e1 = a2 * beta_z - r2t;
                    let e2 = a2 * a2 * gamma_z * gamma_z - r2s;
                    e1 * e1 + e2 * e2
                };
                let mut best = (f64::INFINITY, 1.0);
                for k in 0..=4000 {
                    let cand = -20.0 + 40.0 * k as f64 / 4000.0;
                    let o = obj(cand);
                    if o < best.0 {
                        best = (o, cand);
                    }
                }
                // local polish
                let mut x = best.1;
                let mut step = 0.02;
                for _ in 0..60 {
                    let (l, c, r) = (obj(x - step), obj(x), obj(x + step));
                    if l < c {
                        x -= step;
                    } else if r < c {
                        x += step;
                    } else {
                        step *= 0.5;
                    }
                }
                x
            };
            diagnostics.insert(
                "bb_marginal_distortion".into(),
                ((a2 * beta_z - r2t).abs() / r2t.abs().max(1e-12))
                    .max((a2 * a2 * gamma_z * gamma_z - r2s).abs() / r2s.abs().max(1e-12)),
            );
            let min_shape = fit.shape.iter().cloned().fold(f64::INFINITY, f64::min);
            let assemble = |x: &[f64]| -> Result<ModelSpec> {
                let common_shape = x[0];
                let legs: Vec<BbLeg> = (0..2)
                    .map(|j| {
                        let idio_shape = fit.shape[j] - common_shape;
                        BbLeg {
                            loading: if j == 0 { 1.0 } else { a2 },
                            idio_shape,
                            idio_rate: (1.0 - fit.a) * idio_shape,
                        }
                    })
                    .collect();
                Ok(ModelSpec::BallottaBonfiglioli(BbModel {
                    rate: fit.rate,
                    a: fit.a,
                    common_drift: beta_z,
                    common_vol: gamma_z,
                    common_shape,
                    common_rate: 1.0,
                    legs,
                }))
            };
            let residual = |x: &[f64]| -> Option<Vec<f64>> {
                let spec = assemble(x).ok()?;
                let rho = linear_correlation(&spec, t_ref, 0, 1).ok()?;
                Some(vec![rho - target])
            };
            let out = fit_least_squares(
                residual,
                &[1e-6],
                &[min_shape - 1e-6],
                Some(&[0.5 * min_shape]),
                &FitOptions {
                    max_iterations: options.max_iterations,
                    n_starts: options.n_starts,
                    seed: options.seed ^ 0xbb,
                },
            )
            .ok_or(Error::Numerical {
                context: "dependence calibration",
                detail: "no feasible common-factor shape".into(),
            })?;
            (assemble(&out.params)?, out.iterations, out.converged)
        }
    };

    model.validate()?;
    let correlation_model = linear_correlation(&model, t_ref, 0, 1)?;
    Ok(CalibrationResult {
        objective_value: fit.objective,
        marginals: fit.clone(),
        correlation_target: target,
        correlation_model,
        correlation_residual: (target - correlation_model).abs(),
        iterations,
        converged,
        diagnostics,
        model,
    })
}

/// Run both calibration steps.
pub fn calibrate(
    snapshot: &MarketSnapshot,
    kind: ModelKind,
    initial_guess: Option<&[f64]>,
    options: &CalibrationOptions,
) -> Result<CalibrationResult> {
    let marginals = calibrate_marginals(snapshot, kind, initial_guess, options)?;
    calibrate_dependence(snapshot, &marginals, options)
}

/// Noise-free vanilla quotes generated by a marginal law: the round-trip
/// fixture generator.
pub fn synthetic_quotes(
    law: &MarginalLaw,
    rate: f64,
    forward: f64,
    asset: usize,
    strikes: &[f64],
    maturity: f64,
    grid: &FourierGrid,
) -> Result<Vec<VanillaQuote>> {
    let prices = price_vanilla_calls(law, rate, forward, maturity, strikes, grid)?;
    Ok(strikes
        .iter()
        .zip(prices)
        .map(|(&strike, mid)| VanillaQuote { asset, strike, maturity, mid })
        .collect())
}

/// Gaussian return series with the sample Pearson correlation pinned exactly
/// to `rho` (the second series is built from the empirical orthogonal
/// complement of the first).
pub fn synthetic_returns(n: usize, rho: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    use rand::SeedableRng;
    use rand_distr::Distribution;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..n)
        .map(|_| rand_distr::StandardNormal.sample(&mut rng))
        .collect();
    let z: Vec<f64> = (0..n)
        .map(|_| rand_distr::StandardNormal.sample(&mut rng))
        .collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mx = mean(&x);
    let xc: Vec<f64> = x.iter().map(|v| v - mx).collect();
    let nx = (xc.iter().map(|v| v * v).sum::<f64>()).sqrt();
    let xu: Vec<f64> = xc.iter().map(|v| v / nx).collect();
    // z orthogonalized against x in sample
    let mz = mean(&z);
    let mut zc: Vec<f64> = z.iter().map(|v| v - mz).collect();
    let proj: f64 = zc.iter().zip(&xu).map(|(a, b)| a * b).sum();
    for (v, u) in zc.iter_mut().zip(&xu) {
        *v -= proj * u;
    }
    let nz = (zc.iter().map(|v| v * v).sum::<f64>()).sqrt();
    let y: Vec<f64> = xu
        .iter()
        .zip(&zc)
        .map(|(u, w)| 0.01 * (rho * u + (1.0 - rho * rho).sqrt() * w / nz))
        .collect();
    let xs: Vec<f64> = xu.iter().map(|u| 0.012 * u).collect();
    (xs, y)
}
