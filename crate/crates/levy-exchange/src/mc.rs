//! Monte Carlo simulation of every model kind and MC pricing with standard
//! errors; the universal oracle the analytic routes are checked against.
//!
//! Paths are partitioned into fixed-size blocks and each block draws from its
//! own counter-derived random stream, so estimates are bit-identical for any
//! worker count. Antithetic variates flip only the Gaussian draws within a
//! pair while sharing the subordinator draws, which preserves the
//! subordinated-Brownian law while reducing variance.

use crate::error::{Error, Result};
use crate::gammapp::GammaPPParams;
use crate::models::{self, BrownianLeg, ModelSpec, SemeraroLeg};
use crate::pricing::{ExchangeContract, Method, PriceReport};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::time::Instant;

/// Paths per random-stream block; fixed so the estimator does not depend on
/// the rayon worker count.
const BLOCK_UNITS: usize = 4096;

/// Simulation plan: path count, seed, antithetic pairing and the number of
/// evaluation steps per path (1 suffices for a European exchange payoff).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimPlan {
    pub n_paths: usize,
    pub seed: u64,
    pub antithetic: bool,
    pub n_steps: usize,
}

use serde::{Deserialize, Serialize};

impl SimPlan {
    pub fn new(n_paths: usize, seed: u64) -> Self {
        SimPlan { n_paths, seed, antithetic: false, n_steps: 1 }
    }

    pub fn antithetic(mut self) -> Self {
        self.antithetic = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 2 {
            return Err(Error::domain("n_paths must be >= 2"));
        }
        if self.n_steps == 0 {
            return Err(Error::domain("n_steps must be >= 1"));
        }
        Ok(())
    }
}

/// Square root of a correlation matrix used to correlate Gaussian draws;
/// an eigenvalue floor keeps boundary matrices (|rho| = 1) usable.
#[derive(Debug, Clone)]
struct CorrSqrt {
    n: usize,
    l: Vec<f64>, // row-major n x n
}

impl CorrSqrt {
    fn identity(n: usize) -> Self {
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            l[i * n + i] = 1.0;
        }
        CorrSqrt { n, l }
    }

    fn from_scalar_rho(rho: f64, n: usize) -> Self {
        if n == 1 {
            return CorrSqrt::identity(1);
        }
        let mut l = vec![0.0; 4];
        l[0] = 1.0;
        l[2] = rho;
        l[3] = (1.0 - rho * rho).max(0.0).sqrt();
        CorrSqrt { n: 2, l }
    }

    fn from_matrix(rho: &[Vec<f64>]) -> Self {
        let n = rho.len();
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| rho[i][j]);
        let eig = nalgebra::SymmetricEigen::new(m);
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                l[i * n + j] = eig.eigenvectors[(i, j)] * eig.eigenvalues[j].max(0.0).sqrt();
            }
        }
        CorrSqrt { n, l }
    }

    #[inline]
    #[allow(clippy::needless_range_loop)]
    fn apply(&self, raw: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for j in 0..self.n {
                s += self.l[i * self.n + j] * raw[j];
            }
            out[i] = s;
        }
    }
}

/// Pre-validated per-model increment sampler.
enum Sampler {
    Bs {
        legs: Vec<BrownianLeg>,
        corr: CorrSqrt,
    },
    CommonSub {
        sub: GammaPPParams,
        legs: Vec<BrownianLeg>,
        corr: CorrSqrt,
    },
    Semeraro {
        idio: Vec<GammaPPParams>,
        common: GammaPPParams,
        legs: Vec<SemeraroLeg>,
    },
    LucianoSemeraro {
        idio: Vec<GammaPPParams>,
        common: GammaPPParams,
        legs: Vec<SemeraroLeg>,
        corr: CorrSqrt,
    },
    Bb {
        idio: Vec<GammaPPParams>,
        common: GammaPPParams,
        brownian: Vec<BrownianLeg>,
        loadings: Vec<f64>,
        common_drift: f64,
        common_vol: f64,
    },
}

impl Sampler {
    fn prepare(spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        Ok(match spec {
            ModelSpec::Bs(m) => Sampler::Bs {
                legs: m.legs.clone(),
                corr: CorrSqrt::from_scalar_rho(m.rho, m.legs.len()),
            },
            ModelSpec::Vg(m) | ModelSpec::Vgpp(m) => Sampler::CommonSub {
                sub: GammaPPParams::new(m.a, m.alpha, m.beta)?,
                legs: m.legs.clone(),
                corr: CorrSqrt::from_scalar_rho(m.rho, m.legs.len()),
            },
            ModelSpec::Semeraro(m) => Sampler::Semeraro {
                idio: m
                    .legs
                    .iter()
                    .map(|l| GammaPPParams::new(m.a, l.shape_j, m.common_rate / l.alpha_j))
                    .collect::<Result<_>>()?,
                common: GammaPPParams::new(m.a, m.common_shape, m.common_rate)?,
                legs: m.legs.clone(),
            },
            ModelSpec::LucianoSemeraro(m) => Sampler::LucianoSemeraro {
                idio: m
                    .legs
                    .iter()
                    .map(|l| GammaPPParams::new(m.a, l.shape_j, m.common_rate / l.alpha_j))
                    .collect::<Result<_>>()?,
                common: GammaPPParams::new(m.a, m.common_shape, m.common_rate)?,
                legs: m.legs.clone(),
                corr: CorrSqrt::from_matrix(&m.rho),
            },
            ModelSpec::BallottaBonfiglioli(m) => Sampler::Bb {
                idio: m
                    .legs
                    .iter()
                    .map(|l| GammaPPParams::new(m.a, l.idio_shape, l.idio_rate))
                    .collect::<Result<_>>()?,
                common: GammaPPParams::new(m.a, m.common_shape, m.common_rate)?,
                brownian: (0..m.legs.len()).map(|j| m.leg_brownian(j)).collect(),
                loadings: m.legs.iter().map(|l| l.loading).collect(),
                common_drift: m.common_drift,
                common_vol: m.common_vol,
            },
        })
    }

    fn n_assets(&self) -> usize {
        match self {
            Sampler::Bs { legs, .. } | Sampler::CommonSub { legs, .. } => legs.len(),
            Sampler::Semeraro { legs, .. } | Sampler::LucianoSemeraro { legs, .. } => legs.len(),
            Sampler::Bb { loadings, .. } => loadings.len(),
        }
    }

    fn n_normals(&self) -> usize {
        match self {
            Sampler::Bs { legs, .. } | Sampler::CommonSub { legs, .. } => legs.len(),
            Sampler::Semeraro { legs, .. } => legs.len(),
            Sampler::LucianoSemeraro { legs, .. } => 2 * legs.len(),
            Sampler::Bb { loadings, .. } => loadings.len() + 1,
        }
    }

    fn n_subs(&self) -> usize {
        match self {
            Sampler::Bs { .. } | Sampler::CommonSub { .. } => 1,
            Sampler::Semeraro { legs, .. } | Sampler::LucianoSemeraro { legs, .. } => {
                legs.len() + 1
            }
            Sampler::Bb { loadings, .. } => loadings.len() + 1,
        }
    }

    /// Draw the stochastic-clock increments and raw standard normals of one
    /// step. Gaussian draws and clock draws are separated so an antithetic
    /// twin can be produced with [`Sampler::combine`].
    fn draw<R: rand::Rng + ?Sized>(
        &self,
        dt: f64,
        rng: &mut R,
        subs: &mut [f64],
        normals: &mut [f64],
    ) -> Result<()> {
        match self {
            Sampler::Bs { .. } => {
                subs[0] = dt;
            }
            Sampler::CommonSub { sub, .. } => {
                subs[0] = sub.sample(dt, rng)?.value;
            }
            Sampler::Semeraro { idio, common, .. }
            | Sampler::LucianoSemeraro { idio, common, .. } => {
                for (slot, p) in subs[..idio.len()].iter_mut().zip(idio) {
                    *slot = p.sample(dt, rng)?.value;
                }
                subs[idio.len()] = common.sample(dt, rng)?.value;
            }
            Sampler::Bb { idio, common, .. } => {
                for (slot, p) in subs[..idio.len()].iter_mut().zip(idio) {
                    *slot = p.sample(dt, rng)?.value;
                }
                subs[idio.len()] = common.sample(dt, rng)?.value;
            }
        }
        for slot in normals.iter_mut() {
            *slot = StandardNormal.sample(rng);
        }
        Ok(())
    }

    /// Combine clock draws with (possibly sign-flipped) Gaussian draws into
    /// per-asset log-price increments.
    fn combine(&self, subs: &[f64], normals: &[f64], sign: f64, scratch: &mut [f64], out: &mut [f64]) {
        match self {
            Sampler::Bs { legs, corr } | Sampler::CommonSub { legs, corr, .. } => {
                let g = subs[0];
                let sg = g.sqrt();
                corr.apply(normals, scratch);
                for (j, leg) in legs.iter().enumerate() {
                    out[j] = leg.theta * g + leg.sigma * sg * sign * scratch[j];
                }
            }
            Sampler::Semeraro { legs, .. } => {
                let dz = subs[legs.len()];
                for (j, leg) in legs.iter().enumerate() {
                    let gj = subs[j] + leg.alpha_j * dz;
                    out[j] = leg.mu * gj + leg.sigma * gj.sqrt() * sign * normals[j];
                }
            }
            Sampler::LucianoSemeraro { legs, corr, .. } => {
                let n = legs.len();
                let dz = subs[n];
                let sz = dz.sqrt();
                corr.apply(&normals[n..], scratch);
                for (j, leg) in legs.iter().enumerate() {
                    out[j] = leg.mu * subs[j]
                        + leg.sigma * subs[j].sqrt() * sign * normals[j]
                        + leg.alpha_j * leg.mu * dz
                        + leg.alpha_j.sqrt() * leg.sigma * sz * sign * scratch[j];
                }
            }
            Sampler::Bb {
                brownian,
                loadings,
                common_drift,
                common_vol,
                ..
            } => {
                let n = loadings.len();
                let dza = subs[n];
                let z_inc = common_drift * dza + common_vol * dza.sqrt() * sign * normals[n];
                for j in 0..n {
                    let x = brownian[j].theta * subs[j]
                        + brownian[j].sigma * subs[j].sqrt() * sign * normals[j];
                    out[j] = x + loadings[j] * z_inc;
                }
            }
        }
    }
}

fn block_rng(seed: u64, block: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Log-price increments for every asset, path and step.
/// Layout: `data[path * n_steps * n_assets + step * n_assets + asset]`.
#[derive(Debug, Clone)]
pub struct IncrementSample {
    pub n_paths: usize,
    pub n_steps: usize,
    pub n_assets: usize,
    pub data: Vec<f64>,
}

impl IncrementSample {
    #[inline]
    pub fn increment(&self, path: usize, step: usize, asset: usize) -> f64 {
        self.data[path * self.n_steps * self.n_assets + step * self.n_assets + asset]
    }
}

/// Simulate de-drifted log-price increments on a strictly increasing time
/// grid starting after 0. Drift correctors and the risk-free rate belong to
/// price assembly, not here.
pub fn simulate_increments(
    spec: &ModelSpec,
    t_grid: &[f64],
    plan: &SimPlan,
) -> Result<IncrementSample> {
    plan.validate()?;
    if t_grid.is_empty() || t_grid[0] <= 0.0 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain(
            "t_grid must be strictly increasing and start after 0",
        ));
    }
    let sampler = Sampler::prepare(spec)?;
    let n_assets = sampler.n_assets();
    let n_steps = t_grid.len();
    let mut dts = Vec::with_capacity(n_steps);
    let mut prev = 0.0;
    for &t in t_grid {
        dts.push(t - prev);
        prev = t;
    }

    // with antithetic pairing each unit produces two paths
    let unit_paths = if plan.antithetic { 2 } else { 1 };
    let n_units = plan.n_paths.div_ceil(unit_paths);
    let n_paths = n_units * unit_paths;
    let n_blocks = n_units.div_ceil(BLOCK_UNITS);
    let stride = n_steps * n_assets;

    let blocks: Vec<Vec<f64>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(plan.seed, b as u64);
            let units = if b == n_blocks - 1 {
                n_units - b * BLOCK_UNITS
            } else {
                BLOCK_UNITS
            };
            let mut out = vec![0.0; units * unit_paths * stride];
            let mut subs = vec![0.0; sampler.n_subs()];
            let mut normals = vec![0.0; sampler.n_normals()];
            let mut scratch = vec![0.0; n_assets];
            for u in 0..units {
                for (s, &dt) in dts.iter().enumerate() {
                    sampler
                        .draw(dt, &mut rng, &mut subs, &mut normals)
                        .expect("sampler parameters validated in prepare");
                    let base = u * unit_paths * stride + s * n_assets;
                    sampler.combine(&subs, &normals, 1.0, &mut scratch, &mut out[base..base + n_assets]);
                    if plan.antithetic {
                        let base2 = base + stride;
                        sampler.combine(
                            &subs,
                            &normals,
                            -1.0,
                            &mut scratch,
                            &mut out[base2..base2 + n_assets],
                        );
                    }
                }
            }
            out
        })
        .collect();

    let mut data = Vec::with_capacity(n_paths * stride);
    for b in blocks {
        data.extend_from_slice(&b);
    }
    Ok(IncrementSample { n_paths, n_steps, n_assets, data })
}

/// Monte Carlo price of `(S2(T) - S1(T) - K)^+` with
/// `S_i(T) = S_i(0) exp(ω_i T + r T + Y_i(T))`. The standard error accounts
/// for antithetic pairing (pairs are the i.i.d. units).
pub fn price_exchange_mc(
    contract: &ExchangeContract,
    spec: &ModelSpec,
    plan: &SimPlan,
) -> Result<PriceReport> {
    let start = Instant::now();
    contract.validate()?;
    plan.validate()?;
    if spec.n_assets() != 2 {
        return Err(Error::domain(format!(
            "exchange pricing needs a bivariate model, got {} assets",
            spec.n_assets()
        )));
    }
    let sampler = Sampler::prepare(spec)?;
    let omegas = models::drift_correctors(spec)?;
    let t = contract.maturity_t;
    let r = spec.rate();
    let dt = t / plan.n_steps as f64;
    let n_steps = plan.n_steps;

    let log_base1 = contract.s1_0.ln() + (omegas[0] + r) * t;
    let log_base2 = contract.s2_0.ln() + (omegas[1] + r) * t;
    let k = contract.strike_k;
    let disc = (-r * t).exp();

    let unit_paths = if plan.antithetic { 2 } else { 1 };
    let n_units = plan.n_paths.div_ceil(unit_paths);
    let n_blocks = n_units.div_ceil(BLOCK_UNITS);

    // per-block (sum, sum of squares) of the unit payoff estimates,
    // reduced in block order for thread-count independence
    let partials: Vec<(f64, f64)> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(plan.seed, b as u64);
            let units = if b == n_blocks - 1 {
                n_units - b * BLOCK_UNITS
            } else {
                BLOCK_UNITS
            };
            let mut subs = vec![0.0; sampler.n_subs()];
            let mut normals = vec![0.0; sampler.n_normals()];
            let mut scratch = vec![0.0; 2];
            let mut inc = [0.0; 2];
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for _ in 0..units {
                let mut y = [[0.0f64; 2]; 2]; // [sign][asset]
                for _ in 0..n_steps {
                    sampler
                        .draw(dt, &mut rng, &mut subs, &mut normals)
                        .expect("sampler parameters validated in prepare");
                    sampler.combine(&subs, &normals, 1.0, &mut scratch, &mut inc);
                    y[0][0] += inc[0];
                    y[0][1] += inc[1];
                    if plan.antithetic {
                        sampler.combine(&subs, &normals, -1.0, &mut scratch, &mut inc);
                        y[1][0] += inc[0];
                        y[1][1] += inc[1];
                    }
                }
                let pay = |ya: &[f64; 2]| -> f64 {
                    let s1 = (log_base1 + ya[0]).exp();
                    let s2 = (log_base2 + ya[1]).exp();
                    (s2 - s1 - k).max(0.0)
                };
                let unit = if plan.antithetic {
                    0.5 * (pay(&y[0]) + pay(&y[1]))
                } else {
                    pay(&y[0])
                };
                sum += unit;
                sumsq += unit * unit;
            }
            (sum, sumsq)
        })
        .collect();

    let (sum, sumsq) = partials
        .iter()
        .fold((0.0, 0.0), |(a, b), &(s, q)| (a + s, b + q));
    let nu = n_units as f64;
    let mean = sum / nu;
    let var = ((sumsq / nu) - mean * mean).max(0.0) * nu / (nu - 1.0);
    let se = disc * (var / nu).sqrt();

    let mut report = PriceReport::new(disc * mean, Method::MonteCarlo)
        .with_diag("paths", (n_units * unit_paths) as f64)
        .with_diag("units", nu)
        .with_diag("blocks", n_blocks as f64)
        .with_diag("steps", n_steps as f64);
    report.std_error = Some(se);
    report.runtime = start.elapsed().as_secs_f64();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{BsModel, CommonSubModel, LsModel, SemeraroModel};
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn vgpp_model(a: f64) -> ModelSpec {
        let beta = GammaPPParams::unit_mean_beta(a, 2.0);
        let m = CommonSubModel {
            rate: 0.01,
            a,
            alpha: 2.0,
            beta,
            legs: vec![
                BrownianLeg { theta: -0.2012, sigma: 0.2 },
                BrownianLeg { theta: -0.1712, sigma: 0.3 },
            ],
            rho: 0.8,
        };
        if a == 0.0 { ModelSpec::Vg(m) } else { ModelSpec::Vgpp(m) }
    }

    fn semeraro_model() -> ModelSpec {
        ModelSpec::Semeraro(SemeraroModel {
            rate: 0.015,
            a: 0.05,
            common_shape: 0.8,
            common_rate: 2.4,
            legs: vec![
                SemeraroLeg { mu: -0.3, sigma: 0.45, alpha_j: 1.2, shape_j: 1.1 },
                SemeraroLeg { mu: -0.25, sigma: 0.5, alpha_j: 0.9, shape_j: 1.6 },
            ],
        })
    }

    fn ls_model() -> ModelSpec {
        ModelSpec::LucianoSemeraro(LsModel {
            rate: 0.015,
            a: 0.05,
            common_shape: 0.8,
            common_rate: 2.4,
            legs: vec![
                SemeraroLeg { mu: -0.3, sigma: 0.45, alpha_j: 1.2, shape_j: 1.1 },
                SemeraroLeg { mu: -0.25, sigma: 0.5, alpha_j: 0.9, shape_j: 1.6 },
            ],
            rho: vec![vec![1.0, 0.7], vec![0.7, 1.0]],
        })
    }

    fn bb_model() -> ModelSpec {
        ModelSpec::BallottaBonfiglioli(crate::models::BbModel {
            rate: 0.015,
            a: 0.01,
            common_drift: -0.9,
            common_vol: 0.8,
            common_shape: 1.1,
            common_rate: 2.2,
            legs: vec![
                crate::models::BbLeg { loading: 0.8, idio_shape: 0.9, idio_rate: 2.0 },
                crate::models::BbLeg { loading: 1.1, idio_shape: 1.3, idio_rate: 2.8 },
            ],
        })
    }

    fn all_models() -> Vec<ModelSpec> {
        vec![
            ModelSpec::Bs(BsModel {
                rate: 0.015,
                legs: vec![
                    BrownianLeg { theta: 0.0, sigma: 0.84 },
                    BrownianLeg { theta: 0.0, sigma: 0.91 },
                ],
                rho: 0.96,
            }),
            vgpp_model(0.0),
            vgpp_model(0.3),
            semeraro_model(),
            ls_model(),
            bb_model(),
        ]
    }

    #[test]
    fn reproducible_across_runs_and_thread_counts() {
        let contract = ExchangeContract::new(100.0, 105.0, 1.0, 0.0).unwrap();
        let spec = vgpp_model(0.3);
        let plan = SimPlan::new(40_000, 99).antithetic();
        let p1 = price_exchange_mc(&contract, &spec, &plan).unwrap();
        let p2 = price_exchange_mc(&contract, &spec, &plan).unwrap();
        assert_eq!(p1.price, p2.price);
        assert_eq!(p1.std_error, p2.std_error);
        for threads in [1usize, 3] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            let p = pool.install(|| price_exchange_mc(&contract, &spec, &plan).unwrap());
            assert_eq!(p.price, p1.price, "thread count changed the estimate");
        }
    }

    #[test]
    fn zero_volatility_payoff_is_deterministic() {
        let spec = ModelSpec::Bs(BsModel {
            rate: 0.0,
            legs: vec![
                BrownianLeg { theta: 0.0, sigma: 1e-14 },
                BrownianLeg { theta: 0.0, sigma: 1e-14 },
            ],
            rho: 0.0,
        });
        let contract = ExchangeContract::new(100.0, 107.0, 1.0, 0.0).unwrap();
        let p = price_exchange_mc(&contract, &spec, &SimPlan::new(1000, 1)).unwrap();
        assert_relative_eq!(p.price, 7.0, max_relative = 1e-9);
        assert!(p.std_error.unwrap() < 1e-9);
    }

    #[test]
    fn martingale_property_per_asset_for_every_kind() {
        // e^{-rT} E[S_i(T)] = S_i(0): estimated from the increments plus the
        // drift correctors, within 3 standard errors.
        let t = 0.9;
        for spec in all_models() {
            let omegas = models::drift_correctors(&spec).unwrap();
            let plan = SimPlan::new(400_000, 4242);
            let sample = simulate_increments(&spec, &[t], &plan).unwrap();
            for (asset, omega) in omegas.iter().enumerate() {
                let base = omega * t;
                let mut sum = 0.0;
                let mut sumsq = 0.0;
                for p in 0..sample.n_paths {
                    let v = (base + sample.increment(p, 0, asset)).exp();
                    sum += v;
                    sumsq += v * v;
                }
                let n = sample.n_paths as f64;
                let mean = sum / n;
                let se = (((sumsq / n) - mean * mean).max(0.0) / n).sqrt();
                assert!(
                    (mean - 1.0).abs() < 3.0 * se.max(1e-12),
                    "{} asset {asset}: discounted mean {mean} (se {se})",
                    spec.kind_name()
                );
            }
        }
    }

    #[test]
    fn exchange_for_nothing_prices_the_asset() {
        let spec = vgpp_model(0.3);
        let contract = ExchangeContract::new(1e-9, 105.0, 1.0, 0.0).unwrap();
        let p = price_exchange_mc(&contract, &spec, &SimPlan::new(400_000, 7).antithetic()).unwrap();
        assert!(
            (p.price - 105.0).abs() < 3.0 * p.std_error.unwrap(),
            "price {} se {}",
            p.price,
            p.std_error.unwrap()
        );
    }

    #[test]
    fn joint_zero_increment_frequency_matches_atom_mass() {
        let spec = vgpp_model(0.3);
        let dt = 0.5;
        let plan = SimPlan::new(1_000_000, 31);
        let sample = simulate_increments(&spec, &[dt], &plan).unwrap();
        let mut both_zero = 0usize;
        for p in 0..sample.n_paths {
            if sample.increment(p, 0, 0) == 0.0 && sample.increment(p, 0, 1) == 0.0 {
                both_zero += 1;
            }
        }
        let expect = 0.3f64.powf(2.0 * dt);
        let n = sample.n_paths as f64;
        let se = (expect * (1.0 - expect) / n).sqrt();
        let freq = both_zero as f64 / n;
        assert!(
            (freq - expect).abs() < 3.0 * se,
            "zero-increment frequency {freq} vs a^(alpha dt) = {expect}"
        );
    }

    #[test]
    fn empirical_joint_cf_matches_model_cf() {
        let t = 0.8;
        for spec in [vgpp_model(0.3), semeraro_model(), ls_model(), bb_model()] {
            let plan = SimPlan::new(200_000, 55);
            let sample = simulate_increments(&spec, &[t], &plan).unwrap();
            let n = sample.n_paths as f64;
            for k in 1..=10 {
                let u = [0.31 * k as f64, -0.17 * k as f64];
                let mut acc = Complex64::default();
                for p in 0..sample.n_paths {
                    let phase =
                        u[0] * sample.increment(p, 0, 0) + u[1] * sample.increment(p, 0, 1);
                    acc += Complex64::new(0.0, phase).exp();
                }
                let emp = acc / n;
                let theo = models::cf_joint_real(&spec, t, &u).unwrap();
                assert!(
                    (emp - theo).norm() < 4.0 / n.sqrt(),
                    "{} at {u:?}: emp {emp} vs {theo}",
                    spec.kind_name()
                );
            }
        }
    }

    #[test]
    fn empirical_correlation_matches_formula() {
        let t = 1.0;
        for spec in [vgpp_model(0.3), semeraro_model(), ls_model(), bb_model()] {
            let plan = SimPlan::new(1_000_000, 77);
            let sample = simulate_increments(&spec, &[t], &plan).unwrap();
            let n = sample.n_paths as f64;
            let (mut s1, mut s2, mut s11, mut s22, mut s12) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for p in 0..sample.n_paths {
                let a = sample.increment(p, 0, 0);
                let b = sample.increment(p, 0, 1);
                s1 += a;
                s2 += b;
                s11 += a * a;
                s22 += b * b;
                s12 += a * b;
            }
            let c11 = s11 / n - (s1 / n) * (s1 / n);
            let c22 = s22 / n - (s2 / n) * (s2 / n);
            let c12 = s12 / n - (s1 / n) * (s2 / n);
            let emp = c12 / (c11 * c22).sqrt();
            let theo = models::linear_correlation(&spec, t, 0, 1).unwrap();
            assert!(
                (emp - theo).abs() < 0.01,
                "{}: empirical {emp} vs formula {theo}",
                spec.kind_name()
            );
        }
    }

    #[test]
    fn quadrupling_paths_halves_the_standard_error() {
        let contract = ExchangeContract::new(100.0, 105.0, 1.0, 0.0).unwrap();
        let spec = vgpp_model(0.3);
        let se1 = price_exchange_mc(&contract, &spec, &SimPlan::new(50_000, 5))
            .unwrap()
            .std_error
            .unwrap();
        let se2 = price_exchange_mc(&contract, &spec, &SimPlan::new(200_000, 6))
            .unwrap()
            .std_error
            .unwrap();
        assert!(
            (se1 / se2 - 2.0).abs() < 0.4,
            "se ratio {} not ~2",
            se1 / se2
        );
    }

    #[test]
    fn increments_over_split_grid_compose() {
        // Lévy additivity: two half-steps have the same law as one full step;
        // check the first two moments agree statistically.
        let spec = vgpp_model(0.3);
        let one = simulate_increments(&spec, &[1.0], &SimPlan::new(300_000, 3)).unwrap();
        let two = simulate_increments(&spec, &[0.5, 1.0], &SimPlan::new(300_000, 4)).unwrap();
        for asset in 0..2 {
            let m1: f64 = (0..one.n_paths).map(|p| one.increment(p, 0, asset)).sum::<f64>()
                / one.n_paths as f64;
            let m2: f64 = (0..two.n_paths)
                .map(|p| two.increment(p, 0, asset) + two.increment(p, 1, asset))
                .sum::<f64>()
                / two.n_paths as f64;
            assert!((m1 - m2).abs() < 5e-3, "asset {asset}: {m1} vs {m2}");
        }
    }

    #[test]
    fn rejects_bad_grids_and_plans() {
        let spec = vgpp_model(0.3);
        assert!(simulate_increments(&spec, &[], &SimPlan::new(10, 1)).is_err());
        assert!(simulate_increments(&spec, &[0.0, 1.0], &SimPlan::new(10, 1)).is_err());
        assert!(simulate_increments(&spec, &[1.0, 0.5], &SimPlan::new(10, 1)).is_err());
        let bad_plan = SimPlan { n_paths: 1, seed: 0, antithetic: false, n_steps: 1 };
        assert!(simulate_increments(&spec, &[1.0], &bad_plan).is_err());
    }
}
