//! Symmetric density profiles `f` on `R^d` and the metadata the local limit
//! theorems need: tail index, covariance, third-moment finiteness and a
//! continuity point with positive density.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Config-file grammar for the built-in kinds, e.g.
/// `{"kind":"power_law","alpha":1.0}` or `{"kind":"hypercube","r":1.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileSpec {
    Hypercube { r: f64 },
    Ball { r: f64 },
    Gaussian,
    PowerLaw { alpha: f64 },
}

pub type DensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum ProfileKind {
    Hypercube {
        r: f64,
    },
    Ball {
        r: f64,
    },
    Gaussian,
    /// `c·(‖x‖₂ ∨ 1)^{−d−α}` with `c` the normalising constant.
    PowerLaw {
        alpha: f64,
        norm: f64,
    },
    Custom {
        name: String,
        density: DensityFn,
    },
}

impl fmt::Debug for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileKind::Hypercube { r } => write!(f, "Hypercube {{ r: {r} }}"),
            ProfileKind::Ball { r } => write!(f, "Ball {{ r: {r} }}"),
            ProfileKind::Gaussian => write!(f, "Gaussian"),
            ProfileKind::PowerLaw { alpha, norm } => write!(f, "PowerLaw {{ alpha: {alpha}, norm: {norm} }}"),
            ProfileKind::Custom { name, .. } => write!(f, "Custom {{ name: {name:?} }}"),
        }
    }
}

/// Metadata a custom profile must declare.
#[derive(Debug, Clone, Default)]
pub struct CustomMetadata {
    pub tail_index: Option<f64>,
    pub envelope: Option<(f64, f64)>,
    pub covariance: Option<DMatrix<f64>>,
    pub has_third_moment: bool,
    pub continuity_point: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Profile {
    kind: ProfileKind,
    dim: usize,
    tail_index: Option<f64>,
    envelope: Option<(f64, f64)>,
    covariance: Option<DMatrix<f64>>,
    has_third_moment: bool,
    continuity_point: Vec<f64>,
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    PI.powf(h) / gamma(h + 1.0)
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} = {v} must be positive and finite")));
    }
    Ok(())
}

fn scaled_identity(d: usize, s: f64) -> DMatrix<f64> {
    DMatrix::from_diagonal_element(d, d, s)
}

impl Profile {
    pub fn hypercube(r: f64, d: usize) -> Result<Self> {
        check_positive("r", r)?;
        Self::builtin(ProfileKind::Hypercube { r }, d, None, None, Some(scaled_identity(d, r * r / 3.0)), true)
    }

    pub fn ball(r: f64, d: usize) -> Result<Self> {
        check_positive("r", r)?;
        Self::builtin(ProfileKind::Ball { r }, d, None, None, Some(scaled_identity(d, r * r / (d as f64 + 2.0))), true)
    }

    pub fn gaussian(d: usize) -> Result<Self> {
        Self::builtin(ProfileKind::Gaussian, d, None, None, Some(scaled_identity(d, 1.0)), true)
    }

    pub fn make_power_law(alpha: f64, d: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::InvalidParameter(format!("tail index alpha = {alpha} must lie in (0, 2)")));
        }
        let norm = power_law_norm(alpha, d);
        Self::builtin(ProfileKind::PowerLaw { alpha, norm }, d, Some(alpha), Some((norm, norm)), None, false)
    }

    pub fn custom(name: impl Into<String>, d: usize, density: DensityFn, meta: CustomMetadata) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if meta.continuity_point.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: meta.continuity_point.len() });
        }
        if let Some(a) = meta.tail_index {
            if !(a > 0.0 && a < 2.0) {
                return Err(Error::InvalidParameter(format!("tail index alpha = {a} must lie in (0, 2)")));
            }
        }
        if let Some(cov) = &meta.covariance {
            if cov.nrows() != d || cov.ncols() != d {
                return Err(Error::DimensionMismatch { expected: d, got: cov.nrows() });
            }
        }
        Ok(Self {
            kind: ProfileKind::Custom { name: name.into(), density },
            dim: d,
            tail_index: meta.tail_index,
            envelope: meta.envelope,
            covariance: meta.covariance,
            has_third_moment: meta.has_third_moment,
            continuity_point: meta.continuity_point,
        })
    }

    fn builtin(
        kind: ProfileKind,
        d: usize,
        tail_index: Option<f64>,
        envelope: Option<(f64, f64)>,
        covariance: Option<DMatrix<f64>>,
        has_third_moment: bool,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        Ok(Self { kind, dim: d, tail_index, envelope, covariance, has_third_moment, continuity_point: vec![0.0; d] })
    }

    pub fn from_spec(spec: &ProfileSpec, d: usize) -> Result<Self> {
        match *spec {
            ProfileSpec::Hypercube { r } => Self::hypercube(r, d),
            ProfileSpec::Ball { r } => Self::ball(r, d),
            ProfileSpec::Gaussian => Self::gaussian(d),
            ProfileSpec::PowerLaw { alpha } => Self::make_power_law(alpha, d),
        }
    }

    /// The config-grammar form, absent for custom profiles.
    pub fn spec(&self) -> Option<ProfileSpec> {
        match self.kind {
            ProfileKind::Hypercube { r } => Some(ProfileSpec::Hypercube { r }),
            ProfileKind::Ball { r } => Some(ProfileSpec::Ball { r }),
            ProfileKind::Gaussian => Some(ProfileSpec::Gaussian),
            ProfileKind::PowerLaw { alpha, .. } => Some(ProfileSpec::PowerLaw { alpha }),
            ProfileKind::Custom { .. } => None,
        }
    }

    /// Short human-readable label (`hypercube(r=1)`, `power_law(alpha=1)`, …).
    pub fn label(&self) -> String {
        match &self.kind {
            ProfileKind::Hypercube { r } => format!("hypercube(r={r})"),
            ProfileKind::Ball { r } => format!("ball(r={r})"),
            ProfileKind::Gaussian => "gaussian".into(),
            ProfileKind::PowerLaw { alpha, .. } => format!("power_law(alpha={alpha})"),
            ProfileKind::Custom { name, .. } => format!("custom({name})"),
        }
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tail_index(&self) -> Option<f64> {
        self.tail_index
    }

    /// Constants `(c₁, c₂)` with `c₁ ≤ f(x)(‖x‖₂∨1)^{d+α} ≤ c₂`.
    pub fn envelope(&self) -> Option<(f64, f64)> {
        self.envelope
    }

    pub fn covariance(&self) -> Option<&DMatrix<f64>> {
        self.covariance.as_ref()
    }

    pub fn has_third_moment(&self) -> bool {
        self.has_third_moment
    }

    pub fn continuity_point(&self) -> &[f64] {
        &self.continuity_point
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(self.eval_unchecked(x))
    }

    /// Density at `x` without the length check; `x.len()` must equal `dim`.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let d = self.dim as f64;
        match &self.kind {
            ProfileKind::Hypercube { r } => {
                if x.iter().all(|c| c.abs() <= *r) {
                    (2.0 * r).powi(-(self.dim as i32))
                } else {
                    0.0
                }
            }
            ProfileKind::Ball { r } => {
                let n2: f64 = x.iter().map(|c| c * c).sum();
                if n2 <= r * r {
                    gamma(d / 2.0 + 1.0) / (PI.powf(d / 2.0) * r.powi(self.dim as i32))
                } else {
                    0.0
                }
            }
            ProfileKind::Gaussian => {
                let n2: f64 = x.iter().map(|c| c * c).sum();
                (2.0 * PI).powf(-d / 2.0) * (-0.5 * n2).exp()
            }
            ProfileKind::PowerLaw { alpha, norm } => {
                let n = x.iter().map(|c| c * c).sum::<f64>().sqrt().max(1.0);
                norm * n.powf(-d - alpha)
            }
            ProfileKind::Custom { density, .. } => density(x),
        }
    }

    /// For the canonical power law, the scale `C` of its characteristic
    /// function `1 − φ(t) = C‖t‖^α + O(‖t‖²)`.
    pub fn analytic_stable_constant(&self) -> Option<f64> {
        match self.kind {
            ProfileKind::PowerLaw { alpha, norm } => Some(norm * levy_integral_constant(alpha, self.dim)),
            _ => None,
        }
    }
}

/// Normalising constant of `(‖x‖₂ ∨ 1)^{−d−α}`: `1 / (V_d (1 + d/α))`.
pub fn power_law_norm(alpha: f64, d: usize) -> f64 {
    1.0 / (unit_ball_volume(d) * (1.0 + d as f64 / alpha))
}

/// `∫_{R^d} (1 − cos(ξ·y)) ‖y‖^{−d−α} dy / ‖ξ‖^α`.
pub fn levy_integral_constant(alpha: f64, d: usize) -> f64 {
    let dh = d as f64 / 2.0;
    PI.powf(dh) * gamma(1.0 - alpha / 2.0) / (alpha * 2f64.powf(alpha - 1.0) * gamma((d as f64 + alpha) / 2.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub profile: String,
    pub checks: Vec<HypothesisCheck>,
    pub continuity_point: Vec<f64>,
    pub covariance: Option<Vec<Vec<f64>>>,
    /// Smallest and largest sampled value of `f(x)(‖x‖₂∨1)^{d+α}`.
    pub envelope_scan: Option<(f64, f64)>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn sample_directions(d: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for i in 0..d {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        dirs.push(e);
    }
    let s = 1.0 / (d as f64).sqrt();
    dirs.push(vec![s; d]);
    if d >= 2 {
        let mut v: Vec<f64> = (0..d).map(|i| if i % 2 == 0 { s } else { -s }).collect();
        v[0] = s;
        dirs.push(v);
    }
    dirs
}

/// Check the hypotheses the local limit theorems place on the profile.
pub fn validate(profile: &Profile) -> ValidationReport {
    let d = profile.dim();
    let mut checks = Vec::new();

    // symmetry on a sampled grid of radii and directions
    let dirs = sample_directions(d);
    let radii: Vec<f64> = (0..=60).map(|i| 0.05 * i as f64).chain((1..=40).map(|i| 10f64.powf(i as f64 / 10.0))).collect();
    let mut worst_asym: f64 = 0.0;
    for dir in &dirs {
        for &r in &radii {
            let x: Vec<f64> = dir.iter().map(|c| c * r).collect();
            let mx: Vec<f64> = x.iter().map(|c| -c).collect();
            let (a, b) = (profile.eval_unchecked(&x), profile.eval_unchecked(&mx));
            worst_asym = worst_asym.max((a - b).abs());
        }
    }
    checks.push(HypothesisCheck {
        name: "symmetry".into(),
        passed: worst_asym <= 1e-14,
        detail: format!("max |f(x) - f(-x)| over sampled grid = {worst_asym:e}"),
    });

    let mut envelope_scan = None;
    if let Some(alpha) = profile.tail_index() {
        let scan_radii: Vec<f64> = (0..=100).map(|i| 0.01 * i as f64).chain((0..=300).map(|i| 10f64.powf(i as f64 / 100.0))).collect();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for dir in &dirs {
            for &r in &scan_radii {
                let x: Vec<f64> = dir.iter().map(|c| c * r).collect();
                let v = profile.eval_unchecked(&x) * r.max(1.0).powf(d as f64 + alpha);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        envelope_scan = Some((lo, hi));
        let (passed, detail) = match profile.envelope() {
            Some((c1, c2)) => {
                let tol = 1e-12 * c2.abs().max(1.0);
                (
                    lo > 0.0 && lo >= c1 - tol && hi <= c2 + tol,
                    format!("scan range [{lo:e}, {hi:e}] against declared envelope [{c1:e}, {c2:e}] for ‖x‖ in [0, 1e3]"),
                )
            }
            None => (lo > 0.0 && hi.is_finite(), format!("scan range [{lo:e}, {hi:e}] (no declared constants)")),
        };
        checks.push(HypothesisCheck { name: "tail_envelope".into(), passed, detail });
    }

    let covariance = profile.covariance().map(|cov| {
        let pd = cov.clone().cholesky().is_some();
        let symmetric = (cov - cov.transpose()).abs().max() <= 1e-14;
        checks.push(HypothesisCheck {
            name: "covariance_positive_definite".into(),
            passed: pd && symmetric,
            detail: format!("symmetric = {symmetric}, cholesky succeeded = {pd}"),
        });
        (0..d).map(|i| (0..d).map(|j| cov[(i, j)]).collect()).collect()
    });
    if covariance.is_none() {
        checks.push(HypothesisCheck {
            name: "covariance_positive_definite".into(),
            passed: profile.tail_index().is_some(),
            detail: "covariance absent (infinite second moment)".into(),
        });
    }

    let third_ok = !profile.has_third_moment() || (profile.covariance().is_some() && profile.tail_index().is_none());
    checks.push(HypothesisCheck {
        name: "third_moment_flag".into(),
        passed: third_ok,
        detail: format!(
            "has_third_moment = {}, covariance present = {}, tail index = {:?}",
            profile.has_third_moment(),
            profile.covariance().is_some(),
            profile.tail_index()
        ),
    });

    let x0 = profile.continuity_point().to_vec();
    let f0 = profile.eval_unchecked(&x0);
    // continuity probed on a shrinking sphere around x0
    let mut cont_gap: f64 = 0.0;
    for dir in &dirs {
        let y: Vec<f64> = x0.iter().zip(dir).map(|(a, b)| a + 1e-9 * b).collect();
        cont_gap = cont_gap.max((profile.eval_unchecked(&y) - f0).abs());
    }
    checks.push(HypothesisCheck {
        name: "continuity_point".into(),
        passed: f0 > 0.0 && cont_gap <= 1e-6 * f0.max(1e-300),
        detail: format!("f(x0) = {f0:e} at x0 = {x0:?}, max nearby deviation {cont_gap:e}"),
    });

    ValidationReport { profile: profile.label(), checks, continuity_point: x0, covariance, envelope_scan }
}
