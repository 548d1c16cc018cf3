//! The circulant walk itself: normalisation `Ω_W`, the one-step kernel, its
//! Fourier symbol, exact `n`-step kernels by spectral powering, and the
//! numerical diagnostics on the symbol (stable expansion, spectral gap,
//! Gaussian approximation).

mod diagnostics;
pub mod io;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{self, Sign};
use crate::profile::Profile;
use crate::torus::{TorusGeometry, DEFAULT_SIZE_CAP};

pub use diagnostics::{
    estimate_stable_constant, gaussian_symbol_check, spectral_gap, DeviationAtN, FitWindow, GaussianSymbolReport, StableFit,
};

/// Negative kernel values below this are reported as a warning after clamping.
pub const CLAMP_WARN_THRESHOLD: f64 = 1e-10;

/// Everything that determines the Markov chain: torus, profile, bandwidth.
#[derive(Debug, Clone)]
pub struct WalkSpec {
    geom: TorusGeometry,
    profile: Profile,
    bandwidth: f64,
    size_cap: usize,
}

impl WalkSpec {
    pub fn new(geom: TorusGeometry, profile: Profile, bandwidth: f64) -> Result<Self> {
        if profile.dim() != geom.dim() {
            return Err(Error::DimensionMismatch { expected: geom.dim(), got: profile.dim() });
        }
        if !(bandwidth >= 1.0 && bandwidth.is_finite()) {
            return Err(Error::InvalidParameter(format!("bandwidth W = {bandwidth} must be at least 1")));
        }
        if !(bandwidth < geom.side() as f64 / 2.0) {
            return Err(Error::InvalidParameter(format!("bandwidth W = {bandwidth} must be below L/2 = {}", geom.side() as f64 / 2.0)));
        }
        Ok(Self { geom, profile, bandwidth, size_cap: DEFAULT_SIZE_CAP })
    }

    pub fn with_size_cap(mut self, cap: usize) -> Self {
        self.size_cap = cap;
        self
    }

    pub fn geom(&self) -> &TorusGeometry {
        &self.geom
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    /// Bandwidth `W`.
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn size_cap(&self) -> usize {
        self.size_cap
    }

    /// `f(x/W)` at every site, origin included, in enumeration order.
    pub(crate) fn scaled_profile_values(&self) -> Result<Vec<f64>> {
        self.geom.ensure_within(self.size_cap)?;
        let g = self.geom;
        let w = self.bandwidth;
        let profile = &self.profile;
        let mut out = vec![0.0; g.sites()];
        out.par_chunks_mut(4096).enumerate().for_each(|(c, chunk)| {
            let mut coords = vec![0i64; g.dim()];
            let mut y = vec![0.0; g.dim()];
            for (j, slot) in chunk.iter_mut().enumerate() {
                g.coords_into(c * 4096 + j, &mut coords);
                for (yy, &cc) in y.iter_mut().zip(&coords) {
                    *yy = cc as f64 / w;
                }
                *slot = profile.eval_unchecked(&y);
            }
        });
        Ok(out)
    }
}

/// Sum in fixed-size chunks so the rounding does not depend on scheduling.
pub(crate) fn stable_sum(values: &[f64]) -> f64 {
    let partial: Vec<f64> = values.par_chunks(4096).map(|c| c.iter().sum::<f64>()).collect();
    partial.iter().sum()
}

/// What a field represents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum FieldTag {
    Exact { n: u64 },
    Prediction { n: u64, label: String },
    Empirical { n: u64, chains: u64 },
}

impl FieldTag {
    pub fn steps(&self) -> u64 {
        match self {
            FieldTag::Exact { n } | FieldTag::Prediction { n, .. } | FieldTag::Empirical { n, .. } => *n,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FieldTag::Exact { .. } => "exact",
            FieldTag::Prediction { .. } => "prediction",
            FieldTag::Empirical { .. } => "empirical",
        }
    }
}

/// A mass function over the torus in enumeration order.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelField {
    pub geom: TorusGeometry,
    pub values: Vec<f64>,
    pub tag: FieldTag,
    /// Total magnitude of negative round-off removed by clamping.
    pub clamped_mass: f64,
}

impl KernelField {
    pub fn total(&self) -> f64 {
        stable_sum(&self.values)
    }

    pub fn at(&self, x: &[i64]) -> Result<f64> {
        Ok(self.values[self.geom.index_of(x)?])
    }

    /// `max_x |v(x) − v(−x)|`.
    pub fn max_asymmetry(&self) -> f64 {
        (0..self.values.len())
            .into_par_iter()
            .map(|i| (self.values[i] - self.values[self.geom.negated_index(i)]).abs())
            .reduce(|| 0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &[f64]) -> f64 {
        self.values.iter().zip(other).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Real Fourier multiplier `p̂₁(k) = Σ_x p₁(x) e^{2πi k·x/L}` over the dual
/// lattice, in enumeration order.
#[derive(Debug, Clone, PartialEq)]
pub struct Symbol {
    pub geom: TorusGeometry,
    pub values: Vec<f64>,
    /// Largest discarded imaginary part.
    pub imag_residue: f64,
}

impl Symbol {
    pub fn at(&self, k: &[i64]) -> Result<f64> {
        Ok(self.values[self.geom.index_of(k)?])
    }
}

/// A walk with its one-step kernel and symbol precomputed, so that many
/// `n`-step queries cost one transform each.
#[derive(Debug, Clone)]
pub struct Walk {
    spec: WalkSpec,
    omega: f64,
    one_step: Vec<f64>,
    symbol: Symbol,
}

impl Walk {
    pub fn new(spec: WalkSpec) -> Result<Self> {
        let mut vals = spec.scaled_profile_values()?;
        vals[spec.geom.origin_index()] = 0.0;
        let omega = stable_sum(&vals);
        if !(omega > 0.0) {
            return Err(Error::DegenerateWalk);
        }
        vals.par_iter_mut().for_each(|v| *v /= omega);
        let symbol = compute_symbol(&spec.geom, &vals)?;
        Ok(Self { spec, omega, one_step: vals, symbol })
    }

    pub fn spec(&self) -> &WalkSpec {
        &self.spec
    }

    pub fn geom(&self) -> &TorusGeometry {
        &self.spec.geom
    }

    /// `Ω_W = Σ_{x≠0} f(x/W)`.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn one_step_values(&self) -> &[f64] {
        &self.one_step
    }

    pub fn one_step(&self) -> KernelField {
        KernelField { geom: self.spec.geom, values: self.one_step.clone(), tag: FieldTag::Exact { n: 1 }, clamped_mass: 0.0 }
    }

    pub fn symbol(&self) -> &Symbol {
        &self.symbol
    }

    fn powered_symbol(&self, n: u64, drop_zero: bool) -> Vec<Complex64> {
        let origin = self.spec.geom.origin_index();
        self.symbol
            .values
            .par_iter()
            .enumerate()
            .map(|(i, &s)| if drop_zero && i == origin { Complex64::new(0.0, 0.0) } else { Complex64::new(int_pow(s, n), 0.0) })
            .collect()
    }

    /// `p_n(x) = N⁻¹ Σ_k p̂₁(k)^n e^{−2πi k·x/L}`; `n = 0` gives the point
    /// mass at the origin.
    pub fn n_step(&self, n: u64) -> KernelField {
        let geom = self.spec.geom;
        if n == 0 {
            let mut values = vec![0.0; geom.sites()];
            values[geom.origin_index()] = 1.0;
            return KernelField { geom, values, tag: FieldTag::Exact { n: 0 }, clamped_mass: 0.0 };
        }
        let inv_n = 1.0 / geom.sites() as f64;
        let raw = fft::dft(&geom, &self.powered_symbol(n, false), Sign::Minus);
        let mut values: Vec<f64> = raw.par_iter().map(|c| c.re * inv_n).collect();
        let (mut clamped, mut most_negative) = (0.0, 0.0f64);
        for v in values.iter_mut() {
            if *v < 0.0 {
                clamped += -*v;
                most_negative = most_negative.min(*v);
                *v = 0.0;
            }
        }
        if most_negative < -CLAMP_WARN_THRESHOLD {
            log::warn!("n_step(n={n}): clamped negative values down to {most_negative:e} (total {clamped:e})");
        }
        KernelField { geom, values, tag: FieldTag::Exact { n }, clamped_mass: clamped }
    }

    /// `N·p_n(x) − 1 = Σ_{k≠0} p̂₁(k)^n e^{−2πi k·x/L}`, computed without the
    /// `k = 0` term so its accuracy is relative to its own size.
    pub fn uniform_deviation(&self, n: u64) -> Vec<f64> {
        let geom = self.spec.geom;
        if n == 0 {
            let mut v = vec![-1.0; geom.sites()];
            v[geom.origin_index()] = geom.sites() as f64 - 1.0;
            return v;
        }
        let raw = fft::dft(&geom, &self.powered_symbol(n, true), Sign::Minus);
        raw.into_par_iter().map(|c| c.re).collect()
    }
}

/// `s^n`, exact in sign for any `n`.
#[inline]
pub fn int_pow(s: f64, n: u64) -> f64 {
    if n <= i32::MAX as u64 {
        s.powi(n as i32)
    } else {
        let mag = s.abs().powf(n as f64);
        if s < 0.0 && n % 2 == 1 {
            -mag
        } else {
            mag
        }
    }
}

fn compute_symbol(geom: &TorusGeometry, p1: &[f64]) -> Result<Symbol> {
    let raw = fft::dft_real(geom, p1, Sign::Plus);
    let scale = raw.iter().map(|c| c.re.abs()).fold(0.0, f64::max).max(1.0);
    let imag_residue = raw.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if imag_residue > 1e-12 * scale {
        return Err(Error::HypothesisViolation(format!("symbol has imaginary residue {imag_residue:e}; the profile is not symmetric")));
    }
    let mut values: Vec<f64> = raw.iter().map(|c| c.re).collect();
    let origin = geom.origin_index();
    if (values[origin] - 1.0).abs() > 1e-10 {
        return Err(Error::HypothesisViolation(format!("symbol at k = 0 is {} rather than 1", values[origin])));
    }
    values[origin] = 1.0;
    for v in values.iter_mut() {
        if v.abs() > 1.0 + 1e-12 {
            return Err(Error::HypothesisViolation(format!("symbol value {v} outside [-1, 1]")));
        }
        *v = v.clamp(-1.0, 1.0);
    }
    Ok(Symbol { geom: *geom, values, imag_residue })
}

/// `Ω_W = Σ_{0≠x∈Λ} f(x/W)`.
pub fn normalization(spec: &WalkSpec) -> Result<f64> {
    let mut vals = spec.scaled_profile_values()?;
    vals[spec.geom.origin_index()] = 0.0;
    let omega = stable_sum(&vals);
    if !(omega > 0.0) {
        return Err(Error::DegenerateWalk);
    }
    Ok(omega)
}

pub fn one_step(spec: &WalkSpec) -> Result<KernelField> {
    Ok(Walk::new(spec.clone())?.one_step())
}

pub fn symbol(spec: &WalkSpec) -> Result<Symbol> {
    Ok(Walk::new(spec.clone())?.symbol)
}

pub fn n_step(spec: &WalkSpec, n: u64) -> Result<KernelField> {
    Ok(Walk::new(spec.clone())?.n_step(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{CustomMetadata, DensityFn};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn cube_walk(l: usize, d: usize, w: f64) -> WalkSpec {
        WalkSpec::new(TorusGeometry::new(l, d).unwrap(), Profile::hypercube(1.0, d).unwrap(), w).unwrap()
    }

    #[test]
    fn normalization_examples() {
        assert!((normalization(&cube_walk(100, 1, 2.0)).unwrap() - 2.0).abs() < 1e-15);
        assert!((normalization(&cube_walk(100, 1, 1.0)).unwrap() - 1.0).abs() < 1e-15);
        let g = WalkSpec::new(TorusGeometry::new(1000, 1).unwrap(), Profile::gaussian(1).unwrap(), 10.0).unwrap();
        let om = normalization(&g).unwrap();
        assert!(om > 9.0 && om < 11.0, "{om}");
    }

    #[test]
    fn spec_rejects_bad_bandwidth() {
        let geom = TorusGeometry::new(10, 1).unwrap();
        let p = Profile::hypercube(1.0, 1).unwrap();
        assert!(WalkSpec::new(geom, p.clone(), 0.5).is_err());
        assert!(WalkSpec::new(geom, p.clone(), 5.0).is_err());
        assert!(WalkSpec::new(geom, Profile::hypercube(1.0, 2).unwrap(), 2.0).is_err());
    }

    #[test]
    fn degenerate_walk_detected() {
        let f: DensityFn = Arc::new(|x: &[f64]| if x[0].abs() < 0.5 { 1.0 } else { 0.0 });
        let meta = CustomMetadata { continuity_point: vec![0.0], ..Default::default() };
        let p = Profile::custom("narrow", 1, f, meta).unwrap();
        let spec = WalkSpec::new(TorusGeometry::new(16, 1).unwrap(), p, 1.5).unwrap();
        assert!(matches!(normalization(&spec), Err(Error::DegenerateWalk)));
    }

    #[test]
    fn one_step_examples() {
        let k = one_step(&cube_walk(100, 1, 2.0)).unwrap();
        for x in [-2i64, -1, 1, 2] {
            assert!((k.at(&[x]).unwrap() - 0.25).abs() < 1e-15);
        }
        assert_eq!(k.at(&[0]).unwrap(), 0.0);
        assert_eq!(k.at(&[3]).unwrap(), 0.0);
        assert!((k.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn symbol_examples() {
        let s = symbol(&cube_walk(100, 1, 2.0)).unwrap();
        assert_eq!(s.at(&[0]).unwrap(), 1.0);
        let direct = 0.5 * ((2.0 * PI * 25.0 / 100.0).cos() + (2.0 * PI * 50.0 / 100.0).cos());
        assert!((s.at(&[25]).unwrap() - direct).abs() < 1e-14);
        assert!((s.at(&[25]).unwrap() + 0.5).abs() < 1e-14);
    }

    #[test]
    fn two_step_return_probability() {
        let walk = Walk::new(cube_walk(30, 1, 3.0)).unwrap();
        let p1 = walk.one_step_values();
        let geom = walk.geom();
        // direct convolution p_2(0) = Σ_y p_1(y) p_1(−y)
        let p2_0: f64 = (0..geom.sites()).map(|i| p1[i] * p1[geom.negated_index(i)]).sum();
        let spectral: f64 = walk.symbol().values.iter().map(|s| s * s).sum::<f64>() / geom.sites() as f64;
        assert!((p2_0 - spectral).abs() < 1e-15);
        assert!((walk.n_step(2).at(&[0]).unwrap() - p2_0).abs() < 1e-15);
    }

    #[test]
    fn asymmetric_profile_rejected() {
        let f: DensityFn = Arc::new(|x: &[f64]| if x[0] >= 0.0 && x[0] <= 1.0 { 1.0 } else { 0.0 });
        let meta = CustomMetadata { continuity_point: vec![0.5], ..Default::default() };
        let p = Profile::custom("half", 1, f, meta).unwrap();
        let spec = WalkSpec::new(TorusGeometry::new(32, 1).unwrap(), p, 3.0).unwrap();
        assert!(matches!(symbol(&spec), Err(Error::HypothesisViolation(_))));
    }

    #[test]
    fn n_step_identity_and_zero() {
        let walk = Walk::new(cube_walk(20, 2, 2.0)).unwrap();
        let p1 = walk.n_step(1);
        assert!(p1.max_abs_diff(walk.one_step_values()) < 1e-12);
        let p0 = walk.n_step(0);
        assert_eq!(p0.at(&[0, 0]).unwrap(), 1.0);
        assert_eq!(p0.total(), 1.0);
    }

    #[test]
    fn n_step_converges_to_uniform() {
        let walk = Walk::new(cube_walk(8, 1, 2.0)).unwrap();
        for n in [10000u64, 10001] {
            assert!((walk.n_step(n).at(&[0]).unwrap() - 0.125).abs() < 1e-6);
        }
        // nearest-neighbour steps on an even cycle are periodic
        let walk = Walk::new(cube_walk(8, 1, 1.0)).unwrap();
        assert!((walk.n_step(10000).at(&[0]).unwrap() - 0.25).abs() < 1e-6);
        assert!(walk.n_step(10001).at(&[0]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn deviation_matches_direct_difference() {
        let walk = Walk::new(cube_walk(64, 1, 4.0)).unwrap();
        let n = 40;
        let p = walk.n_step(n);
        let dev = walk.uniform_deviation(n);
        let nn = 64.0;
        for (a, b) in p.values.iter().zip(&dev) {
            assert!((nn * a - 1.0 - b).abs() < 1e-12);
        }
        assert!((walk.uniform_deviation(0)[walk.geom().origin_index()] - 63.0).abs() < 1e-15);
    }

    #[test]
    fn int_pow_large_exponent() {
        assert_eq!(int_pow(-0.5, 3), -0.125);
        assert_eq!(int_pow(-1.0, 1u64 << 40), 1.0);
        assert_eq!(int_pow(-1.0, (1u64 << 40) + 1), -1.0);
    }
}
