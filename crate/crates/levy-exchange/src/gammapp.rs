//! The Γ++ distribution: the `a`-remainder of a gamma law.
//!
//! A gamma random variable `X ~ Γ(α, β)` is self-decomposable: for every
//! `a ∈ (0, 1)` there is an independent remainder `Z_a` with
//! `X =d= aX' + Z_a`, equivalently `φ_X(u) = φ_X(au) φ_{Z_a}(u)`. The law of
//! `Z_a`, written `Γ++(a, α, β)`, is infinitely divisible, carries an atom of
//! mass `a^α` at zero and is elsewhere a negative-binomial mixture of Erlang
//! densities with rate `β/a`. Its Lévy process is a subordinator with a
//! strictly positive probability of zero increments, the property the
//! illiquid-market price models in this crate are built on.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma as GammaDist, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

/// Parameters `(a, α, β)` of a Γ++ law. `a = 0` degenerates to the plain
/// gamma law `Γ(α, β)` and is accepted everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPPParams {
    /// Self-decomposability (liquidity) parameter, in `[0, 1)`.
    pub a: f64,
    /// Shape per unit time, `> 0`.
    pub alpha: f64,
    /// Rate, `> 0`.
    pub beta: f64,
}

/// One draw from the law, remembering whether the zero atom was hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPPSample {
    pub value: f64,
    pub atom_hit: bool,
}

/// Density evaluation split into the atom mass and the continuous part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityPoint {
    pub atom_mass: f64,
    pub continuous_density: f64,
}

/// First two moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

/// Above this negative-binomial mean the sampler switches from sequential
/// CDF inversion to the exact gamma-Poisson mixture representation.
const INVERSION_MEAN_LIMIT: f64 = 64.0;

impl GammaPPParams {
    pub fn new(a: f64, alpha: f64, beta: f64) -> Result<Self> {
        let p = GammaPPParams { a, alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a >= 0.0 && self.a < 1.0) {
            return Err(Error::domain(format!("a = {} must lie in [0, 1)", self.a)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::domain(format!("alpha = {} must be > 0", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::domain(format!("beta = {} must be > 0", self.beta)));
        }
        Ok(())
    }

    /// Rate `β = α(1 - a)` giving the subordinator a unit mean per unit time
    /// (the usual "stochastic time runs as fast as calendar time" convention,
    /// applied numerically rather than hard-coded in the law).
    pub fn unit_mean_beta(a: f64, alpha: f64) -> f64 {
        alpha * (1.0 - a)
    }

    /// Characteristic function `φ(u) = ((β - iua)/(β - iu))^α` on the
    /// principal branch. `φ(0) = 1` and `|φ| <= 1`.
    pub fn cf(&self, u: f64) -> Complex64 {
        self.cf_time(1.0, Complex64::new(u, 0.0))
            .expect("real arguments are always inside the analyticity strip")
    }

    /// Characteristic exponent of `Z_a(t)` at a complex argument,
    /// `t α [ln(β - iwa) - ln(β - iw)]`, defined while both shifted rates
    /// keep a positive real part (the analyticity strip used by the damped
    /// Fourier pricers).
    pub fn char_exponent(&self, t: f64, w: Complex64) -> Result<Complex64> {
        let i = Complex64::I;
        let num = self.beta - i * w * self.a;
        let den = self.beta - i * w;
        if den.re <= 0.0 {
            return Err(Error::domain(format!(
                "argument outside analyticity strip: Re(beta - iw) = {} must be > 0",
                den.re
            )));
        }
        if self.a > 0.0 && num.re <= 0.0 {
            return Err(Error::domain(format!(
                "argument outside analyticity strip: Re(beta - iwa) = {} must be > 0",
                num.re
            )));
        }
        Ok((num.ln() - den.ln()) * (self.alpha * t))
    }

    /// `E[exp(iw Z_a(t))]` at a complex argument.
    pub fn cf_time(&self, t: f64, w: Complex64) -> Result<Complex64> {
        Ok(self.char_exponent(t, w)?.exp())
    }

    /// Mean `α(1-a)/β` and variance `α(1-a²)/β²`, the first two cumulants of
    /// the characteristic exponent.
    pub fn moments(&self) -> Moments {
        Moments {
            mean: self.alpha * (1.0 - self.a) / self.beta,
            variance: self.alpha * (1.0 - self.a * self.a) / (self.beta * self.beta),
        }
    }

    /// Density at `x >= 0` as `(atom mass, continuous part)`:
    /// `h_a(x) = a^α δ_0(x) + Σ_{n>=1} C(α+n-1, n) a^α (1-a)^n f_{n, β/a}(x)`
    /// with `f_{n, β/a}` the Erlang density. The mixture is truncated once the
    /// remaining negative-binomial tail weight drops below `series_tol`.
    ///
    /// At `a = 0` the law is plain gamma; the density at `x = 0` is then
    /// infinite for `α < 1`, reported as `f64::INFINITY` rather than an error.
    pub fn density(&self, x: f64, series_tol: f64) -> Result<DensityPoint> {
        self.validate()?;
        if !(x >= 0.0) {
            return Err(Error::domain(format!("density argument x = {x} must be >= 0")));
        }
        if !(series_tol > 0.0) {
            return Err(Error::domain("series_tol must be > 0"));
        }
        if self.a == 0.0 {
            let pdf = if x == 0.0 {
                if self.alpha < 1.0 {
                    f64::INFINITY
                } else if self.alpha == 1.0 {
                    self.beta
                } else {
                    0.0
                }
            } else {
                (self.alpha * self.beta.ln() + (self.alpha - 1.0) * x.ln()
                    - self.beta * x
                    - ln_gamma(self.alpha))
                .exp()
            };
            return Ok(DensityPoint {
                atom_mass: 0.0,
                continuous_density: pdf,
            });
        }

        let atom = self.a.powf(self.alpha);
        let rate = self.beta / self.a;
        // w_1 = α a^α (1-a); w_{n+1} = w_n (α+n)/(n+1) (1-a)
        let mut w = self.alpha * atom * (1.0 - self.a);
        let mut cum = atom + w;
        let mut density = w * erlang_pdf(1, rate, x);
        let mut n = 1usize;
        while 1.0 - cum > series_tol {
            let nf = n as f64;
            w *= (self.alpha + nf) / (nf + 1.0) * (1.0 - self.a);
            n += 1;
            cum += w;
            density += w * erlang_pdf(n, rate, x);
            if n > 20_000_000 {
                return Err(Error::Numerical {
                    context: "gamma++ density series",
                    detail: format!("tail weight {:.3e} above tolerance after {n} terms", 1.0 - cum),
                });
            }
        }
        Ok(DensityPoint {
            atom_mass: atom,
            continuous_density: density,
        })
    }

    /// Draw `Z_a(t)`. The count `S` of Erlang summands follows the negative
    /// binomial law with weights `C(αt+n-1, n) a^{αt} (1-a)^n`; conditionally
    /// on `S = s > 0` the value is `Γ(s, β/a)`, and `S = 0` hits the atom.
    ///
    /// Small negative-binomial means invert the CDF sequentially; large means
    /// use the exact gamma-Poisson mixture so a draw stays O(1) even for the
    /// near-deterministic subordinators produced by market calibration.
    pub fn sample<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> Result<GammaPPSample> {
        self.validate()?;
        if !(t > 0.0) {
            return Err(Error::domain(format!("sample horizon t = {t} must be > 0")));
        }
        let shape = self.alpha * t;
        if self.a == 0.0 {
            let g = GammaDist::new(shape, 1.0 / self.beta)
                .map_err(|e| Error::domain(format!("gamma sampler: {e}")))?;
            return Ok(GammaPPSample {
                value: g.sample(rng),
                atom_hit: false,
            });
        }
        let mean = shape * (1.0 - self.a) / self.a;
        let s = if mean <= INVERSION_MEAN_LIMIT {
            let u: f64 = rng.random();
            let mut w = (shape * self.a.ln()).exp();
            let mut cum = w;
            let mut n = 0usize;
            while cum < u {
                let nf = n as f64;
                w *= (shape + nf) / (nf + 1.0) * (1.0 - self.a);
                n += 1;
                cum += w;
                if n > 100_000_000 {
                    return Err(Error::Numerical {
                        context: "negative binomial inversion",
                        detail: format!("no termination at u = {u}"),
                    });
                }
            }
            n
        } else {
            let lambda = GammaDist::new(shape, (1.0 - self.a) / self.a)
                .map_err(|e| Error::domain(format!("mixing gamma: {e}")))?
                .sample(rng);
            if lambda <= 0.0 {
                0
            } else {
                Poisson::new(lambda)
                    .map_err(|e| Error::domain(format!("mixing poisson: {e}")))?
                    .sample(rng) as usize
            }
        };
        if s == 0 {
            return Ok(GammaPPSample {
                value: 0.0,
                atom_hit: true,
            });
        }
        let g = GammaDist::new(s as f64, self.a / self.beta)
            .map_err(|e| Error::domain(format!("erlang sampler: {e}")))?;
        Ok(GammaPPSample {
            value: g.sample(rng),
            atom_hit: false,
        })
    }

    /// Scaling closure: `c Z_a ~ Γ++(a, α, β/c)` for `c > 0`.
    pub fn scale(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::domain(format!("scale factor c = {c} must be > 0")));
        }
        GammaPPParams::new(self.a, self.alpha, self.beta / c)
    }
}

/// Summation closure: independent `Γ++(a, α_i, β)` variables with a common
/// `a` and `β` add up to `Γ++(a, Σα_i, β)`.
pub fn convolve(p1: &GammaPPParams, p2: &GammaPPParams) -> Result<GammaPPParams> {
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0);
    if !close(p1.a, p2.a) {
        return Err(Error::precondition(format!(
            "convolution requires a shared self-decomposability parameter: {} vs {}",
            p1.a, p2.a
        )));
    }
    if !close(p1.beta, p2.beta) {
        return Err(Error::precondition(format!(
            "convolution requires a shared rate: {} vs {}",
            p1.beta, p2.beta
        )));
    }
    GammaPPParams::new(p1.a, p1.alpha + p2.alpha, p1.beta)
}

fn erlang_pdf(n: usize, rate: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 1 { rate } else { 0.0 };
    }
    let nf = n as f64;
    (nf * rate.ln() + (nf - 1.0) * x.ln() - rate * x - ln_gamma(nf)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }

    #[test]
    fn cf_is_one_at_origin_and_bounded() {
        let p = GammaPPParams::new(0.3, 2.0, 2.5).unwrap();
        assert_eq!(p.cf(0.0), Complex64::new(1.0, 0.0));
        for u in grid(-40.0, 40.0, 81) {
            assert!(p.cf(u).norm() <= 1.0 + 1e-14);
        }
    }

    #[test]
    fn cf_degenerates_as_a_tends_to_one() {
        let p = GammaPPParams::new(1.0 - 1e-12, 1.7, 3.0).unwrap();
        for u in [0.5, -2.0, 17.0] {
            assert!((p.cf(u) - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn cf_at_a_zero_is_gamma_cf() {
        // a=0, u=1, alpha=2, beta=3: (3/(3-i))^2
        let p = GammaPPParams::new(0.0, 2.0, 3.0).unwrap();
        let expected = (Complex64::new(3.0, 0.0) / Complex64::new(3.0, -1.0)).powi(2);
        assert!((p.cf(1.0) - expected).norm() < 1e-15);
    }

    #[test]
    fn self_decomposability_identity() {
        // φ_Γ(u) = φ_Γ(a u) · φ_Γ++(u)
        for (a, alpha, beta) in [(0.3, 2.0, 2.0), (0.04, 2.43, 2.33), (0.9, 0.6, 1.1)] {
            let gamma = GammaPPParams::new(0.0, alpha, beta).unwrap();
            let rem = GammaPPParams::new(a, alpha, beta).unwrap();
            for u in grid(-25.0, 25.0, 61) {
                let lhs = gamma.cf(u);
                let rhs = gamma.cf(a * u) * rem.cf(u);
                assert!(
                    (lhs - rhs).norm() <= 1e-12,
                    "identity fails at u={u}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn char_exponent_rejects_arguments_outside_strip() {
        let p = GammaPPParams::new(0.2, 2.0, 1.5).unwrap();
        // w = -i q makes beta - iw = beta - q: leaves the strip at q >= beta.
        assert!(p.char_exponent(1.0, Complex64::new(0.0, -2.0)).is_err());
        assert!(p.char_exponent(1.0, Complex64::new(0.0, -1.0)).is_ok());
    }

    #[test]
    fn density_atom_mass_is_a_to_alpha() {
        let p = GammaPPParams::new(0.04, 2.43, 2.3328).unwrap();
        let d = p.density(0.0, 1e-12).unwrap();
        assert_relative_eq!(d.atom_mass, 0.04f64.powf(2.43), epsilon = 1e-15);
    }

    #[test]
    fn density_tends_to_gamma_as_a_vanishes() {
        // The mixture needs O(alpha/a) terms, so probe the limit at a = 1e-3
        // where the gamma density is approached at O(a).
        let beta = 2.0f64;
        let alpha = 2.0f64;
        let gpp = GammaPPParams::new(1e-3, alpha, beta).unwrap();
        for x in [0.2, 1.0, 3.0] {
            let d = gpp.density(x, 1e-13).unwrap();
            let gamma_pdf =
                (alpha * beta.ln() + (alpha - 1.0) * x.ln() - beta * x - ln_gamma(alpha)).exp();
            assert_relative_eq!(d.continuous_density, gamma_pdf, max_relative = 5e-3);
            assert!(d.atom_mass < 1e-5);
        }
    }

    #[test]
    fn density_integrates_to_one() {
        // Simpson oracle on the continuous part plus the atom, over a grid
        // of parameter sets.
        for (a, alpha, beta) in [(0.3, 2.0, 2.0), (0.04, 2.43, 2.33), (0.7, 0.8, 1.1), (0.15, 4.0, 3.0)] {
            let p = GammaPPParams::new(a, alpha, beta).unwrap();
            let atom = p.density(0.0, 1e-12).unwrap().atom_mass;
            let n = 40_000usize;
            let hi = 20.0 + 60.0 * alpha / beta;
            let h = hi / n as f64;
            let f = |x: f64| p.density(x, 1e-12).unwrap().continuous_density;
            let mut s = 0.0;
            for i in 0..n {
                let x0 = i as f64 * h;
                s += h / 6.0 * (f(x0) + 4.0 * f(x0 + 0.5 * h) + f(x0 + h));
            }
            assert!(
                (atom + s - 1.0).abs() < 1e-6,
                "({a},{alpha},{beta}): atom {atom} + continuous {s} != 1"
            );
        }
    }

    #[test]
    fn moments_match_known_values() {
        let p = GammaPPParams::new(0.5, 2.0, 4.0).unwrap();
        let m = p.moments();
        assert_relative_eq!(m.mean, 0.25, epsilon = 1e-15);
        assert_relative_eq!(m.variance, 0.09375, epsilon = 1e-15);

        let g = GammaPPParams::new(0.0, 3.0, 2.0).unwrap().moments();
        assert_relative_eq!(g.mean, 1.5, epsilon = 1e-15);
        assert_relative_eq!(g.variance, 0.75, epsilon = 1e-15);

        let d = GammaPPParams::new(1.0 - 1e-13, 3.0, 2.0).unwrap().moments();
        assert!(d.mean < 1e-12 && d.variance < 1e-12);
    }

    #[test]
    fn moments_match_cf_derivatives() {
        // Finite differences of the characteristic exponent at the origin.
        let p = GammaPPParams::new(0.5, 2.0, 4.0).unwrap();
        let h = 1e-3;
        let le = |u: f64| p.cf(u).ln();
        let k1 = (le(h) - le(-h)).im / (2.0 * h);
        let k2 = -(le(h) - 2.0 * le(0.0) + le(-h)).re / (h * h);
        let m = p.moments();
        // central differences carry O(h^2) truncation from higher cumulants
        assert_relative_eq!(k1, m.mean, max_relative = 1e-6);
        assert_relative_eq!(k2, m.variance, max_relative = 1e-5);
    }

    #[test]
    fn unit_mean_convention() {
        let beta = GammaPPParams::unit_mean_beta(0.2, 2.5);
        let p = GammaPPParams::new(0.2, 2.5, beta).unwrap();
        assert_relative_eq!(p.moments().mean, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn sampler_atom_frequency() {
        let p = GammaPPParams::new(0.2, 2.0, 1.6).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let n = 1_000_000usize;
        let mut hits = 0usize;
        for _ in 0..n {
            let s = p.sample(1.0, &mut rng).unwrap();
            assert!(s.value >= 0.0);
            if s.atom_hit {
                assert_eq!(s.value, 0.0);
                hits += 1;
            }
        }
        let expect = 0.2f64.powf(2.0);
        let se = (expect * (1.0 - expect) / n as f64).sqrt();
        assert!(
            ((hits as f64 / n as f64) - expect).abs() < 3.0 * se,
            "atom frequency {} vs {expect}",
            hits as f64 / n as f64
        );
    }

    #[test]
    fn sampler_mean_and_variance() {
        let p = GammaPPParams::new(0.35, 1.7, 2.1).unwrap();
        let t = 1.5;
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let n = 1_000_000usize;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let v = p.sample(t, &mut rng).unwrap().value;
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        let scaled = GammaPPParams::new(p.a, p.alpha * t, p.beta).unwrap().moments();
        assert_relative_eq!(mean, scaled.mean, max_relative = 0.01);
        assert_relative_eq!(var, scaled.variance, max_relative = 0.01);
    }

    #[test]
    fn sampler_mixture_branch_matches_moments() {
        // Large negative-binomial mean exercises the gamma-Poisson branch.
        let p = GammaPPParams::new(0.01, 860.0, 852.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let n = 200_000usize;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let v = p.sample(1.0, &mut rng).unwrap().value;
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        let m = p.moments();
        assert_relative_eq!(mean, m.mean, max_relative = 0.01);
        assert_relative_eq!(var, m.variance, max_relative = 0.02);
    }

    #[test]
    fn sampler_small_a_passes_two_sample_ks_against_gamma() {
        let alpha = 2.0;
        let beta = 2.0;
        let t = 1.0;
        let p = GammaPPParams::new(0.001, alpha, beta).unwrap();
        let gamma = GammaPPParams::new(0.0, alpha, beta).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let n = 200_000usize;
        let mut xs: Vec<f64> = (0..n).map(|_| p.sample(t, &mut rng).unwrap().value).collect();
        let mut ys: Vec<f64> = (0..n)
            .map(|_| gamma.sample(t, &mut rng).unwrap().value)
            .collect();
        xs.sort_by(f64::total_cmp);
        ys.sort_by(f64::total_cmp);
        let mut d: f64 = 0.0;
        let (mut i, mut j) = (0usize, 0usize);
        while i < n && j < n {
            if xs[i] <= ys[j] {
                i += 1;
            } else {
                j += 1;
            }
            d = d.max((i as f64 / n as f64 - j as f64 / n as f64).abs());
        }
        // 1% critical value for the two-sample statistic.
        let crit = 1.628 * (2.0 / n as f64).sqrt();
        assert!(d < crit, "KS statistic {d} exceeds 1% critical value {crit}");
    }

    #[test]
    fn empirical_cf_matches_formula() {
        let p = GammaPPParams::new(0.3, 2.0, 2.0).unwrap();
        let t = 1.0;
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let n = 200_000usize;
        let draws: Vec<f64> = (0..n).map(|_| p.sample(t, &mut rng).unwrap().value).collect();
        for k in 1..=20 {
            let u = 0.35 * k as f64;
            let mut acc = Complex64::default();
            for &x in &draws {
                acc += Complex64::new(0.0, u * x).exp();
            }
            let emp = acc / n as f64;
            assert!(
                (emp - p.cf(u)).norm() < 4.0 / (n as f64).sqrt(),
                "CF mismatch at u={u}"
            );
        }
    }

    #[test]
    fn scale_rules() {
        let p = GammaPPParams::new(0.1, 3.0, 6.0).unwrap();
        assert_eq!(p.scale(1.0).unwrap(), p);
        let s = p.scale(2.0).unwrap();
        assert_eq!(s, GammaPPParams::new(0.1, 3.0, 3.0).unwrap());
        for u in grid(-12.0, 12.0, 50) {
            assert!((s.cf(u) - p.cf(2.0 * u)).norm() <= 1e-12);
        }
        assert!(p.scale(0.0).is_err());
        assert!(p.scale(-1.0).is_err());
    }

    #[test]
    fn convolution_rules() {
        let p1 = GammaPPParams::new(0.1, 1.0, 2.0).unwrap();
        let p2 = GammaPPParams::new(0.1, 2.0, 2.0).unwrap();
        let s = convolve(&p1, &p2).unwrap();
        assert_eq!(s, GammaPPParams::new(0.1, 3.0, 2.0).unwrap());
        for u in grid(-12.0, 12.0, 50) {
            assert!((s.cf(u) - p1.cf(u) * p2.cf(u)).norm() <= 1e-12);
        }
        // neutral element in the small-shape limit
        let eps = GammaPPParams::new(0.1, 1e-15, 2.0).unwrap();
        let q = convolve(&p1, &eps).unwrap();
        for u in grid(-5.0, 5.0, 11) {
            assert!((q.cf(u) - p1.cf(u)).norm() <= 1e-12);
        }
        // mismatched parameters are rejected
        let bad_a = GammaPPParams::new(0.2, 1.0, 2.0).unwrap();
        let bad_b = GammaPPParams::new(0.1, 1.0, 2.5).unwrap();
        assert!(convolve(&p1, &bad_a).is_err());
        assert!(convolve(&p1, &bad_b).is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(GammaPPParams::new(-0.1, 1.0, 1.0).is_err());
        assert!(GammaPPParams::new(1.0, 1.0, 1.0).is_err());
        assert!(GammaPPParams::new(0.5, 0.0, 1.0).is_err());
        assert!(GammaPPParams::new(0.5, 1.0, 0.0).is_err());
    }
}
