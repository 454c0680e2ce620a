//! Internal quadrature kernels: globally adaptive Gauss-Kronrod on finite
//! intervals, tanh-sinh for endpoint-singular integrands on (0, 1), and a
//! log-substituted gamma-weighted integral on the half line.

use crate::error::{Error, Result};
use std::collections::BinaryHeap;

/// 15-point Kronrod abscissae (positive half), QUADPACK `dqk15` constants.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Gauss-Kronrod panel: K15 estimate plus |K15 - G7| error proxy.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resg = WG[3] * fc;
    let mut resk = WGK[7] * fc;
    for j in 0..3 {
        let x = h * XGK[2 * j + 1];
        let s = f(c - x) + f(c + x);
        resg += WG[j] * s;
        resk += WGK[2 * j + 1] * s;
    }
    for j in 0..4 {
        let x = h * XGK[2 * j];
        let s = f(c - x) + f(c + x);
        resk += WGK[2 * j] * s;
    }
    (resk * h, ((resk - resg) * h).abs())
}

struct Panel {
    err: f64,
    a: f64,
    b: f64,
    val: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Outcome of an adaptive integration, with the node count for diagnostics.
#[derive(Debug, Clone, Copy)]
pub(crate) struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

/// Globally adaptive Gauss-Kronrod on `[a, b]` to relative tolerance
/// `rel_tol` (with an absolute floor `abs_floor` for integrals near zero).
pub(crate) fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_floor: f64,
    max_panels: usize,
) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::domain(format!(
            "integration interval [{a}, {b}] must be finite and increasing"
        )));
    }
    let mut heap = BinaryHeap::new();
    let (val, err) = gk15(&f, a, b);
    heap.push(Panel { err, a, b, val });
    let mut evaluations = 15;
    let mut panels = 1;
    loop {
        let total: f64 = heap.iter().map(|p| p.val).sum();
        let total_err: f64 = heap.iter().map(|p| p.err).sum();
        let target = (rel_tol * total.abs()).max(abs_floor);
        if total_err <= target {
            return Ok(QuadResult {
                value: total,
                abs_error: total_err,
                evaluations,
            });
        }
        if panels >= max_panels {
            return Err(Error::Numerical {
                context: "adaptive Gauss-Kronrod quadrature",
                detail: format!(
                    "no convergence after {evaluations} nodes (error {total_err:e}, target {target:e})"
                ),
            });
        }
        let worst = heap.pop().expect("heap nonempty");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // Interval at floating-point resolution; keep its estimate.
            heap.push(Panel {
                err: 0.0,
                a: worst.a,
                b: worst.b,
                val: worst.val,
            });
            continue;
        }
        let (v1, e1) = gk15(&f, worst.a, m);
        let (v2, e2) = gk15(&f, m, worst.b);
        evaluations += 30;
        panels += 1;
        heap.push(Panel {
            err: e1,
            a: worst.a,
            b: m,
            val: v1,
        });
        heap.push(Panel {
            err: e2,
            a: m,
            b: worst.b,
            val: v2,
        });
    }
}

/// Tanh-sinh quadrature of `f` over (0, 1). The integrand receives both `u`
/// and `1 - u` computed without cancellation, so integrable endpoint
/// singularities (power laws at 0 or 1) converge cleanly.
pub(crate) fn integrate_01_tanh_sinh<F: Fn(f64, f64) -> f64>(
    f: F,
    rel_tol: f64,
) -> Result<QuadResult> {
    const T_MAX: f64 = 4.3;
    const MAX_LEVEL: u32 = 12;
    let node = |t: f64| -> (f64, f64, f64) {
        let s = std::f64::consts::FRAC_PI_2 * t.sinh();
        // u = (1 + tanh(s)) / 2, 1 - u = exp(-2s)/(1+exp(-2s)) forms.
        let e = (-2.0 * s.abs()).exp();
        let near = e / (1.0 + e);
        let far = 1.0 / (1.0 + e);
        let (u, omu) = if t >= 0.0 { (far, near) } else { (near, far) };
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() / (s.cosh() * s.cosh() * 2.0);
        (u, omu, w)
    };
    let eval = |t: f64| -> f64 {
        let (u, omu, w) = node(t);
        if u <= 0.0 || omu <= 0.0 || w == 0.0 {
            return 0.0;
        }
        let v = f(u, omu) * w;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };

    let mut h = 1.0;
    let mut sum = eval(0.0);
    let mut k = 1.0;
    while k * h <= T_MAX {
        sum += eval(k * h) + eval(-k * h);
        k += 1.0;
    }
    let mut estimate = sum * h;
    let mut evaluations = (2.0 * k) as usize;
    for _level in 1..=MAX_LEVEL {
        h *= 0.5;
        let mut refine = 0.0;
        let mut t = h;
        while t <= T_MAX {
            refine += eval(t) + eval(-t);
            evaluations += 2;
            t += 2.0 * h;
        }
        let new_estimate = estimate * 0.5 + refine * h;
        let delta = (new_estimate - estimate).abs();
        estimate = new_estimate;
        if delta <= rel_tol * estimate.abs().max(1e-300) && _level >= 3 {
            return Ok(QuadResult {
                value: estimate,
                abs_error: delta,
                evaluations,
            });
        }
    }
    Err(Error::Numerical {
        context: "tanh-sinh quadrature",
        detail: format!("no convergence after {evaluations} nodes"),
    })
}

/// Gamma-weighted half-line integral
/// `∫_0^∞ f(u) u^{shape-1} e^{-u} / Γ(shape) du`
/// via the substitution `u = e^v`, which removes the endpoint singularity for
/// every `shape > 0` and concentrates nodes around the density mode.
pub(crate) fn integrate_gamma_weighted<F: Fn(f64) -> f64>(
    f: F,
    shape: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<QuadResult> {
    if shape <= 0.0 {
        return Err(Error::domain(format!("gamma shape {shape} must be > 0")));
    }
    let ln_gamma = statrs::function::gamma::ln_gamma(shape);
    // log-integrand peaks at v = ln(shape); pad both sides so the dropped
    // tails are below 1e-20 of the peak.
    let budget = 46.0 + 2.0 * (shape.ln().abs() + 1.0);
    let v_lo = shape.ln().min(0.0) - budget / shape - 3.0;
    let v_hi = (shape + 10.0 * (shape + 1.0).sqrt() + budget).ln() + 0.3;
    let g = |v: f64| {
        let u = v.exp();
        let ln_w = shape * v - u - ln_gamma;
        if ln_w < -745.0 {
            return 0.0;
        }
        f(u) * ln_w.exp()
    };
    integrate_adaptive(g, v_lo, v_hi, rel_tol, 1e-300, max_panels)
}
