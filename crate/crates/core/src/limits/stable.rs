//! Isotropic α-stable densities and their periodisation over the unit torus.
//!
//! Densities are obtained from the radial inversion integral of
//! `φ(t) = exp(−C‖t‖^α)`, with the integration ray rotated into the upper
//! half plane so the oscillatory factor becomes exponentially damped.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quad;

/// Absolute error target for density evaluations.
pub const DENSITY_TOL: f64 = 1e-8;
/// Truncation target for the theta series.
pub const THETA_TOL: f64 = 1e-10;
const THETA_TERM_CAP: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableLimitParams {
    pub alpha: f64,
    /// Scale `C` in `φ(t) = exp(−C‖t‖₂^α)`.
    pub c: f64,
    pub d: usize,
}

impl StableLimitParams {
    pub fn new(alpha: f64, c: f64, d: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} must lie in (0, 2)")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("stable constant C = {c} must be positive")));
        }
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        Ok(Self { alpha, c, d })
    }

    /// Same law run for time `τ`: `φ_τ(t) = exp(−Cτ‖t‖^α)`.
    pub fn at_time(&self, tau: f64) -> Self {
        Self { c: self.c * tau, ..*self }
    }
}

/// A truncated series value with a bound on the discarded tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: f64,
    pub tail_bound: f64,
    pub terms: usize,
}

/// Multivariate Cauchy density, the `α = 1` closed form.
pub fn cauchy_density(c: f64, d: usize, r: f64) -> f64 {
    let h = (d as f64 + 1.0) / 2.0;
    gamma(h) / PI.powf(h) * c / (c * c + r * r).powf(h)
}

/// `M_m(y) = ∫_0^∞ u^m e^{iyu − Cu^α} du` along the ray `u = s e^{iθ₀}`.
fn ray_moment(alpha: f64, c: f64, m: i32, y: f64) -> Result<Complex64> {
    let theta0 = (PI / 2.0).min(PI / (4.0 * alpha));
    let rot = Complex64::from_polar(1.0, theta0);
    let rot_a = Complex64::from_polar(c, alpha * theta0);
    let decay = |s: f64| c * s.powf(alpha) * (alpha * theta0).cos() + y * s * theta0.sin();
    let mut upper = 1.0;
    while decay(upper) < 46.0 + m as f64 * upper.ln().max(0.0) {
        upper *= 2.0;
    }
    let integrand = |s: f64| -> Complex64 {
        if s == 0.0 {
            return if m == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
        }
        let e = -rot_a * s.powf(alpha) + Complex64::i() * y * s * rot;
        s.powi(m) * e.exp()
    };
    let re = quad::integrate(|s| integrand(s).re, 0.0, upper, 1e-15, 1e-13, 4000);
    let im = quad::integrate(|s| integrand(s).im, 0.0, upper, 1e-15, 1e-13, 4000);
    let err = re.error.hypot(im.error);
    if err > 1e-11 {
        return Err(Error::Accuracy { what: format!("stable inversion integral (alpha={alpha}, y={y})"), achieved: err });
    }
    Ok(rot.powi(m + 1) * Complex64::new(re.value, im.value))
}

/// `∫_0^∞ s^m e^{−Cs^α} ds`.
fn radial_moment(alpha: f64, c: f64, m: f64) -> f64 {
    gamma((m + 1.0) / alpha) / (alpha * c.powf((m + 1.0) / alpha))
}

/// Radial density by quadrature, ignoring closed forms.
pub fn stable_density_quadrature(params: &StableLimitParams, r: f64) -> Result<f64> {
    let StableLimitParams { alpha, c, d } = *params;
    let r = r.abs();
    match d {
        1 => {
            if r == 0.0 {
                return Ok(radial_moment(alpha, c, 0.0) / PI);
            }
            Ok(ray_moment(alpha, c, 0, r)?.re / PI)
        }
        2 => {
            if r == 0.0 {
                return Ok(radial_moment(alpha, c, 1.0) / (2.0 * PI));
            }
            // J₀ through its integral representation; symmetric about π/2
            let mut failure = None;
            let est = quad::integrate(
                |tau| match ray_moment(alpha, c, 1, r * tau.sin()) {
                    Ok(v) => v.re,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                },
                0.0,
                PI / 2.0,
                1e-13,
                1e-12,
                400,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            if est.error > DENSITY_TOL {
                return Err(Error::Accuracy { what: "2-d stable density".into(), achieved: est.error });
            }
            Ok(est.value / PI.powi(2))
        }
        3 => {
            let scale = c.powf(-1.0 / alpha);
            if r < 1e-4 * scale {
                let m2 = radial_moment(alpha, c, 2.0);
                let m4 = radial_moment(alpha, c, 4.0);
                return Ok((m2 - r * r * m4 / 6.0) / (2.0 * PI * PI));
            }
            Ok(ray_moment(alpha, c, 1, r)?.im / (2.0 * PI * PI * r))
        }
        _ => Err(Error::Unsupported(format!("stable density quadrature in dimension {d}"))),
    }
}

/// `f_α(x)`: the density with characteristic function `exp(−C‖t‖₂^α)`.
pub fn stable_density(params: &StableLimitParams, x: &[f64]) -> Result<f64> {
    if x.len() != params.d {
        return Err(Error::DimensionMismatch { expected: params.d, got: x.len() });
    }
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    stable_density_radial(params, r)
}

pub fn stable_density_radial(params: &StableLimitParams, r: f64) -> Result<f64> {
    if params.alpha == 1.0 {
        return Ok(cauchy_density(params.c, params.d, r));
    }
    stable_density_quadrature(params, r)
}

/// `f_α(x, τ) = τ^{−d/α} f_α(τ^{−1/α} x)`, the law of the process at time `τ`.
pub fn stable_scaled(params: &StableLimitParams, x: &[f64], tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("time tau = {tau} must be positive")));
    }
    stable_density(&params.at_time(tau), x)
}

/// Odometer over the integer vectors with `‖m‖_∞ = j`.
pub(crate) fn for_each_in_shell(d: usize, j: i64, mut f: impl FnMut(&[i64])) {
    if j == 0 {
        f(&vec![0; d]);
        return;
    }
    let mut m = vec![-j; d];
    loop {
        if m.iter().any(|c| c.abs() == j) {
            f(&m);
        }
        let mut axis = 0;
        loop {
            if axis == d {
                return;
            }
            if m[axis] < j {
                m[axis] += 1;
                break;
            }
            m[axis] = -j;
            axis += 1;
        }
    }
}

/// Number of integer vectors with `‖m‖_∞ = j` in dimension `d`.
pub(crate) fn shell_size(d: usize, j: i64) -> f64 {
    if j == 0 {
        return 1.0;
    }
    (2.0 * j as f64 + 1.0).powi(d as i32) - (2.0 * j as f64 - 1.0).powi(d as i32)
}

/// Sum shells `j = 0, 1, …` of `term(m)` until the bound `shell_size(i)·g(i)`
/// summed over the remaining shells `i > j` falls below `tol`. `g` must be
/// decreasing.
pub(crate) fn shell_series_complex(
    d: usize,
    tol: f64,
    term_cap: usize,
    what: &str,
    g: impl Fn(i64) -> f64,
    mut term: impl FnMut(&[i64]) -> Complex64,
) -> Result<(Complex64, f64, usize)> {
    let mut total = Complex64::new(0.0, 0.0);
    let mut terms = 0usize;
    let mut j = 0i64;
    loop {
        for_each_in_shell(d, j, |m| total += term(m));
        terms += shell_size(d, j) as usize;
        if shell_size(d, j + 1) * g(j + 1) <= tol {
            let mut tail = 0.0;
            for i in j + 1..j + 1_000_000 {
                let b = shell_size(d, i) * g(i);
                tail += b;
                if b <= 1e-6 * tol {
                    break;
                }
            }
            if tail <= tol {
                return Ok((total, tail, terms));
            }
        }
        if terms >= term_cap {
            let tail = shell_size(d, j + 1) * g(j + 1);
            return Err(Error::Accuracy { what: what.into(), achieved: tail });
        }
        j += 1;
    }
}

pub(crate) fn shell_series(
    d: usize,
    tol: f64,
    term_cap: usize,
    what: &str,
    g: impl Fn(i64) -> f64,
    mut term: impl FnMut(&[i64]) -> f64,
) -> Result<SeriesValue> {
    let (v, tail_bound, terms) = shell_series_complex(d, tol, term_cap, what, g, |m| Complex64::new(term(m), 0.0))?;
    Ok(SeriesValue { value: v.re, tail_bound, terms })
}

/// `θ_α(z, τ)` from its Fourier series
/// `Σ_{m∈Z^d} exp(−Cτ(2π‖m‖₂)^α) cos(2π m·z)`.
pub fn stable_theta(params: &StableLimitParams, z: &[f64], tau: f64) -> Result<SeriesValue> {
    if z.len() != params.d {
        return Err(Error::DimensionMismatch { expected: params.d, got: z.len() });
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("time tau = {tau} must be positive")));
    }
    let ct = params.c * tau;
    let alpha = params.alpha;
    // ‖m‖₂ ≥ ‖m‖_∞ = j on shell j
    let g = |j: i64| (-ct * (2.0 * PI * j as f64).powf(alpha)).exp();
    shell_series(params.d, THETA_TOL, THETA_TERM_CAP, "stable theta dual series", g, |m| {
        let n2: f64 = m.iter().map(|&c| (c * c) as f64).sum();
        let dot: f64 = m.iter().zip(z).map(|(&a, b)| a as f64 * b).sum();
        (-ct * (2.0 * PI * n2.sqrt()).powf(alpha)).exp() * (2.0 * PI * dot).cos()
    })
}

/// Hurwitz zeta `ζ(s, a) = Σ_{n≥0} (n + a)^{−s}` for `s > 1` and `a` large,
/// by Euler–Maclaurin after `shift` explicit terms.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    const B2K: [f64; 8] = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0, -3617.0 / 510.0];
    let shift = (20.0 - a).max(0.0).ceil() as usize;
    let mut sum: f64 = (0..shift).map(|n| (a + n as f64).powf(-s)).sum();
    let b = a + shift as f64;
    sum += b.powf(1.0 - s) / (s - 1.0) + 0.5 * b.powf(-s);
    // B_{2k}/(2k)! · s(s+1)…(s+2k−2) · b^{−s−2k+1}
    let mut rising = s;
    let mut fact = 2.0;
    let mut pow = b.powf(-s - 1.0);
    for (k, bk) in B2K.iter().enumerate() {
        let term = bk / fact * rising * pow;
        sum += term;
        let k2 = 2.0 * (k as f64 + 1.0);
        rising *= (s + k2 - 1.0) * (s + k2);
        fact *= (k2 + 1.0) * (k2 + 2.0);
        pow /= b * b;
    }
    sum
}

/// Direct periodisation `Σ_{k∈Z} f_α(z + k, τ)` in one dimension, summing
/// `|k| ≤ cutoff` explicitly and the rest from the large-`x` expansion
/// `f(x) ~ π⁻¹ Σ_j (−1)^{j+1} Γ(jα+1)/j! sin(jπα/2) (Cτ)^j x^{−jα−1}`.
pub fn stable_theta_spatial(params: &StableLimitParams, z: f64, tau: f64, cutoff: usize) -> Result<SeriesValue> {
    if params.d != 1 {
        return Err(Error::Unsupported("spatial theta series is implemented for d = 1".into()));
    }
    let p = params.at_time(tau);
    let k = cutoff as i64;
    let mut direct = 0.0;
    for i in -k..=k {
        direct += stable_density_radial(&p, z + i as f64)?;
    }
    let alpha = p.alpha;
    let mut tail = 0.0;
    let mut last = f64::INFINITY;
    let mut coeff_fact = 1.0;
    for j in 1..=60 {
        coeff_fact *= j as f64;
        let jf = j as f64;
        let s = jf * alpha + 1.0;
        let coeff = if j % 2 == 1 { 1.0 } else { -1.0 } * gamma(s) / coeff_fact * (jf * PI * alpha / 2.0).sin() * p.c.powi(j) / PI;
        let zsum = hurwitz_zeta(s, k as f64 + 1.0 + z) + hurwitz_zeta(s, k as f64 + 1.0 - z);
        let term = coeff * zsum;
        if coeff.abs() < 1e-300 || (jf * alpha / 2.0).fract().abs() < 1e-12 {
            continue;
        }
        if term.abs() > last && j > 3 {
            // asymptotic series began to diverge
            break;
        }
        tail += term;
        last = term.abs();
        if last < 1e-18 {
            break;
        }
    }
    Ok(SeriesValue { value: direct + tail, tail_bound: last, terms: 2 * cutoff + 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(alpha: f64, c: f64, d: usize) -> StableLimitParams {
        StableLimitParams::new(alpha, c, d).unwrap()
    }

    #[test]
    fn cauchy_examples() {
        assert!((stable_density(&p(1.0, 1.0, 1), &[0.0]).unwrap() - 1.0 / PI).abs() < 1e-15);
        assert!((stable_density(&p(1.0, 1.0, 1), &[1.0]).unwrap() - 0.5 / PI).abs() < 1e-15);
        assert!((stable_scaled(&p(1.0, 1.0, 1), &[0.0], 2.0).unwrap() - 0.5 / PI).abs() < 1e-15);
    }

    #[test]
    fn quadrature_matches_cauchy() {
        for d in 1..=3 {
            let par = p(1.0, 1.3, d);
            for r in [0.0, 0.2, 1.0, 3.7, 25.0] {
                let q = stable_density_quadrature(&par, r).unwrap();
                let exact = cauchy_density(1.3, d, r);
                assert!((q - exact).abs() < 1e-10, "d={d} r={r} q={q} exact={exact}");
            }
        }
    }

    #[test]
    fn gaussian_limit_nearby() {
        // α close to 2 approaches the normal law with variance 2C
        let par = p(1.999, 0.5, 1);
        let q = stable_density(&par, &[0.7]).unwrap();
        let g = (-0.49f64 / 2.0).exp() / (2.0 * PI).sqrt();
        assert!((q - g).abs() < 2e-3);
    }

    #[test]
    fn normalisation_half() {
        let par = p(0.5, 1.0, 1);
        let core = quad::integrate(|x| stable_density_radial(&par, x).unwrap(), 0.0, 1000.0, 1e-10, 1e-10, 2000);
        // tail ∫_X^∞ f ≈ π⁻¹Γ(1.5) sin(π/4) · 2 X^{-1/2} to leading order
        let x: f64 = 1000.0;
        let lead = gamma(1.5) * (PI / 4.0).sin() / PI;
        let second = -gamma(2.0) / 2.0 * (PI / 2.0).sin() / PI;
        let mut tail = lead * 2.0 * x.powf(-0.5) + second * x.powf(-1.0);
        // ∫_X^∞ x^{-jα-1} = X^{-jα}/(jα), coefficients of f's expansion
        for j in 3..8 {
            let jf = j as f64;
            let a = if j % 2 == 1 { 1.0 } else { -1.0 } * gamma(jf * 0.5 + 1.0) / gamma(jf + 1.0) * (jf * PI / 4.0).sin() / PI;
            tail += a * x.powf(-jf * 0.5) / (jf * 0.5);
        }
        assert!((2.0 * (core.value + tail) - 1.0).abs() < 1e-6, "{}", 2.0 * (core.value + tail));
    }

    #[test]
    fn isotropy_and_self_similarity() {
        let par = p(1.5, 0.8, 2);
        let a = stable_density(&par, &[0.6, 0.8]).unwrap();
        let b = stable_density(&par, &[1.0, 0.0]).unwrap();
        assert!((a - b).abs() < 1e-12);
        let par1 = p(0.7, 1.0, 1);
        let lam: f64 = 3.0;
        let lhs = stable_scaled(&par1, &[lam.powf(1.0 / 0.7) * 0.4], lam * 1.5).unwrap();
        let rhs = lam.powf(-1.0 / 0.7) * stable_scaled(&par1, &[0.4], 1.5).unwrap();
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn three_dim_small_radius_continuous() {
        let par = p(1.5, 1.0, 3);
        let a = stable_density_radial(&par, 0.0).unwrap();
        let b = stable_density_radial(&par, 2e-4).unwrap();
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn hurwitz_zeta_matches_direct_sum() {
        // ζ(3, 1/2) = 7ζ(3)
        let zeta3 = 1.202_056_903_159_594_3;
        let expect = 7.0 * zeta3 - (0.5f64.powi(-3) + 1.5f64.powi(-3) + 2.5f64.powi(-3));
        assert!((hurwitz_zeta(3.0, 3.5) - expect).abs() < 1e-14);
        // ζ(2, 1) = π²/6
        assert!((hurwitz_zeta(2.0, 1.0) - PI * PI / 6.0).abs() < 1e-13);
        let direct: f64 = (0..100_000).map(|n| (n as f64 + 250.3).powf(-2.5)).sum::<f64>() + hurwitz_zeta(2.5, 100_250.3);
        assert!((hurwitz_zeta(2.5, 250.3) - direct).abs() < 1e-15);
    }

    #[test]
    fn theta_large_time_is_uniform() {
        let v = stable_theta(&p(1.0, 1.0, 1), &[0.3], 100.0).unwrap();
        assert!((v.value - 1.0).abs() < 1e-3);
        assert!(v.tail_bound <= THETA_TOL);
    }

    #[test]
    fn theta_series_agree() {
        for alpha in [0.5, 1.0, 1.5] {
            let par = p(alpha, 1.0, 1);
            let dual = stable_theta(&par, &[0.3], 1.0).unwrap().value;
            let spatial = stable_theta_spatial(&par, 0.3, 1.0, 200).unwrap().value;
            assert!((dual - spatial).abs() < 1e-8, "alpha={alpha}: {dual} vs {spatial}");
        }
    }

    #[test]
    fn theta_symmetric_and_two_dim() {
        let par = p(1.2, 0.7, 2);
        let a = stable_theta(&par, &[0.2, 0.7], 0.5).unwrap().value;
        let b = stable_theta(&par, &[0.8, 0.3], 0.5).unwrap().value;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn shell_enumeration() {
        for d in 1..=3 {
            for j in 0..4 {
                let mut count = 0;
                for_each_in_shell(d, j, |m| {
                    assert_eq!(m.iter().map(|c| c.abs()).max().unwrap(), j);
                    count += 1;
                });
                assert_eq!(count as f64, shell_size(d, j));
            }
        }
    }
}
