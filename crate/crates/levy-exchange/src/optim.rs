//! Box-constrained nonlinear least squares: damped Gauss-Newton
//! (Levenberg-Marquardt) steps on a finite-difference Jacobian, restarted
//! from Latin-hypercube points. Candidate parameter vectors the residual
//! function rejects (model admissibility failures) are treated as failed
//! steps, which together with clamping to the box realizes constraint
//! projection.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

pub(crate) struct FitOutcome {
    pub params: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) struct FitOptions {
    pub max_iterations: usize,
    pub n_starts: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { max_iterations: 120, n_starts: 8, seed: 20_240_101 }
    }
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn clamp(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lower[i], upper[i]);
    }
}

/// One Levenberg-Marquardt run from a feasible starting point.
fn lm_single<F>(
    residuals: &F,
    lower: &[f64],
    upper: &[f64],
    x0: &[f64],
    max_iterations: usize,
) -> Option<FitOutcome>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let dim = x0.len();
    let mut x = x0.to_vec();
    clamp(&mut x, lower, upper);
    let mut r = residuals(&x)?;
    let mut cost = sum_sq(&r);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iterations {
        iterations += 1;
        // forward-difference Jacobian, stepping inward at the upper bound
        let m = r.len();
        let mut jac = DMatrix::<f64>::zeros(m, dim);
        let mut jac_ok = true;
        for p in 0..dim {
            let h = 1e-7 * (1.0 + x[p].abs());
            let mut xp = x.clone();
            let sign = if x[p] + h > upper[p] { -1.0 } else { 1.0 };
            xp[p] += sign * h;
            match residuals(&xp) {
                Some(rp) => {
                    for i in 0..m {
                        jac[(i, p)] = sign * (rp[i] - r[i]) / h;
                    }
                }
                None => {
                    jac_ok = false;
                    break;
                }
            }
        }
        if !jac_ok {
            break;
        }
        let rv = DVector::from_column_slice(&r);
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * &rv;
        if g.amax() < 1e-12 * (1.0 + cost) {
            converged = true;
            break;
        }

        let mut improved = false;
        for _ in 0..12 {
            let mut damped = jtj.clone();
            for d in 0..dim {
                damped[(d, d)] += lambda * (jtj[(d, d)].max(1e-12));
            }
            let Some(step) = damped.lu().solve(&(-&g)) else {
                lambda *= 4.0;
                continue;
            };
            let mut xc: Vec<f64> = (0..dim).map(|i| x[i] + step[i]).collect();
            clamp(&mut xc, lower, upper);
            if let Some(rc) = residuals(&xc) {
                let cc = sum_sq(&rc);
                if cc < cost {
                    let rel_drop = (cost - cc) / cost.max(1e-300);
                    let step_size = (0..dim)
                        .map(|i| (xc[i] - x[i]).abs() / (1.0 + x[i].abs()))
                        .fold(0.0f64, f64::max);
                    x = xc;
                    r = rc;
                    cost = cc;
                    lambda = (lambda / 3.0).max(1e-12);
                    improved = true;
                    if rel_drop < 1e-12 || step_size < 1e-11 || cost < 1e-24 {
                        converged = true;
                    }
                    break;
                }
            }
            lambda *= 4.0;
        }
        if !improved {
            converged = true; // no descent direction left at this scale
            break;
        }
        if converged {
            break;
        }
    }

    Some(FitOutcome { params: x, objective: cost, iterations, converged })
}

/// Latin-hypercube sample of `n` points inside the box.
fn latin_hypercube(
    lower: &[f64],
    upper: &[f64],
    n: usize,
    rng: &mut ChaCha12Rng,
) -> Vec<Vec<f64>> {
    let dim = lower.len();
    let mut strata: Vec<Vec<usize>> = (0..dim).map(|_| (0..n).collect()).collect();
    for s in strata.iter_mut() {
        // Fisher-Yates
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            s.swap(i, j);
        }
    }
    (0..n)
        .map(|k| {
            (0..dim)
                .map(|d| {
                    let u: f64 = rng.random();
                    lower[d] + (upper[d] - lower[d]) * (strata[d][k] as f64 + u) / n as f64
                })
                .collect()
        })
        .collect()
}

/// Multistart box-constrained least squares. Starts from the supplied guess
/// (when feasible) plus Latin-hypercube points; runs are independent and the
/// best objective wins, ties resolved by start index so the result is
/// deterministic under any parallel schedule.
pub(crate) fn fit_least_squares<F>(
    residuals: F,
    lower: &[f64],
    upper: &[f64],
    initial_guess: Option<&[f64]>,
    options: &FitOptions,
) -> Option<FitOutcome>
where
    F: Fn(&[f64]) -> Option<Vec<f64>> + Sync,
{
    assert_eq!(lower.len(), upper.len());
    let mut rng = ChaCha12Rng::seed_from_u64(options.seed);
    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Some(g) = initial_guess {
        starts.push(g.to_vec());
    }
    starts.extend(latin_hypercube(lower, upper, options.n_starts, &mut rng));

    let runs: Vec<Option<FitOutcome>> = starts
        .par_iter()
        .map(|x0| lm_single(&residuals, lower, upper, x0, options.max_iterations))
        .collect();

    let mut best: Option<FitOutcome> = None;
    for run in runs.into_iter().flatten() {
        let better = match &best {
            None => true,
            Some(b) => run.objective < b.objective * (1.0 - 1e-12),
        };
        if better {
            best = Some(run);
        }
    }
    best
}
