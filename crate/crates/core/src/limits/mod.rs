//! Limit objects the walk is compared against: stable densities and theta
//! functions, Jacobi theta and reciprocity, the lattice covariance, the
//! regime predictions and the heat-kernel bound.

pub mod bounds;
pub mod gaussian;
pub mod jacobi;
pub mod stable;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::WalkSpec;

pub use bounds::{stable_upper_bound, truncated_variance, upper_bound_at, TruncatedVariance};
pub use gaussian::{lattice_covariance, lattice_covariance_of, sigma_l_sq, sigma_l_sq_at, GaussianLimitParams, GaussianSummary};
pub use jacobi::{jacobi_theta, reciprocity_check, JacobiValue, ReciprocityCheck};
pub use stable::{
    cauchy_density, hurwitz_zeta, stable_density, stable_density_quadrature, stable_density_radial, stable_scaled, stable_theta,
    stable_theta_spatial, SeriesValue, StableLimitParams,
};

/// Which local limit applies: free-space density (I), torus theta function
/// (II) or uniform equilibrium (III).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    I,
    II,
    III,
}

impl Regime {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "i" | "1" | "sub" | "subcritical" => Ok(Regime::I),
            "ii" | "2" | "critical" => Ok(Regime::II),
            "iii" | "3" | "super" | "supercritical" => Ok(Regime::III),
            other => Err(Error::Config(format!("unknown regime {other:?}"))),
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::I => "I",
            Regime::II => "II",
            Regime::III => "III",
        })
    }
}

/// Convert a constant fitted in the variable `W‖k‖/L` to the
/// characteristic-function scale, where the frequency is `2πk/L`.
pub fn fitted_to_characteristic(c_fit: f64, alpha: f64) -> f64 {
    c_fit / (2.0 * PI).powf(alpha)
}

fn canonical_f64(spec: &WalkSpec, x: &[i64]) -> Result<Vec<f64>> {
    Ok(spec.geom().canonical_rep(x)?.to_f64())
}

/// Stable-regime prediction for `p_n(x)`.
pub fn stable_prediction(spec: &WalkSpec, n: u64, x: &[i64], regime: Regime, params: &StableLimitParams) -> Result<f64> {
    if spec.profile().tail_index().is_none() {
        return Err(Error::HypothesisViolation(format!("profile {} has no tail index", spec.profile().label())));
    }
    if params.d != spec.geom().dim() {
        return Err(Error::DimensionMismatch { expected: spec.geom().dim(), got: params.d });
    }
    let geom = spec.geom();
    let inv_n = 1.0 / geom.sites() as f64;
    let xs = canonical_f64(spec, x)?;
    let (l, w, a) = (geom.side() as f64, spec.bandwidth(), params.alpha);
    match regime {
        Regime::I => stable_scaled(params, &xs, n as f64 * w.powf(a)),
        Regime::II => {
            let z: Vec<f64> = xs.iter().map(|v| v / l).collect();
            Ok(inv_n * stable_theta(params, &z, n as f64 * (w / l).powf(a))?.value)
        }
        Regime::III => Ok(inv_n),
    }
}

/// Gaussian-regime prediction for `p_n(x)`.
///
/// Regime I uses the density of `N(0, nW²Γ_L)`, normalised by
/// `(2πnW²)^{d/2}·√det Γ_L`.
pub fn gaussian_prediction(spec: &WalkSpec, n: u64, x: &[i64], regime: Regime, glp: &GaussianLimitParams) -> Result<f64> {
    let profile = spec.profile();
    if profile.covariance().is_none() {
        return Err(Error::HypothesisViolation(format!("profile {} has no finite covariance", profile.label())));
    }
    if regime != Regime::III && !profile.has_third_moment() {
        return Err(Error::HypothesisViolation(format!("regime {regime} requires a finite third moment")));
    }
    let geom = spec.geom();
    if glp.dim() != geom.dim() {
        return Err(Error::DimensionMismatch { expected: geom.dim(), got: glp.dim() });
    }
    let inv_n = 1.0 / geom.sites() as f64;
    let xs = canonical_f64(spec, x)?;
    let (l, w, d) = (geom.side() as f64, spec.bandwidth(), geom.dim() as f64);
    let spread = n as f64 * w * w;
    match regime {
        Regime::I => Ok((2.0 * PI * spread).powf(-d / 2.0) / glp.det.sqrt() * (-glp.inverse_form(&xs) / (2.0 * spread)).exp()),
        Regime::II => {
            let z: Vec<f64> = xs.iter().map(|v| v / l).collect();
            let form = &glp.gamma * (2.0 * PI * spread / (l * l));
            Ok(inv_n * jacobi_theta(&z, &form)?.value.re)
        }
        Regime::III => Ok(inv_n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Profile;
    use crate::torus::TorusGeometry;

    fn power(l: usize, w: f64) -> WalkSpec {
        WalkSpec::new(TorusGeometry::new(l, 1).unwrap(), Profile::make_power_law(1.0, 1).unwrap(), w).unwrap()
    }

    #[test]
    fn stable_prediction_examples() {
        let spec = power(1024, 16.0);
        let par = StableLimitParams::new(1.0, 1.0, 1).unwrap();
        assert_eq!(stable_prediction(&spec, 10, &[3], Regime::III, &par).unwrap(), 1.0 / 1024.0);
        let v = stable_prediction(&spec, 10, &[0], Regime::I, &par).unwrap();
        assert!((v - 1.0 / (160.0 * PI)).abs() < 1e-15);
        let v = stable_prediction(&spec, 64, &[0], Regime::II, &par).unwrap();
        let theta = stable_theta(&par, &[0.0], 1.0).unwrap().value;
        assert!((v - theta / 1024.0).abs() < 1e-15);
    }

    #[test]
    fn regime_two_predictions_normalised() {
        let spec = power(128, 4.0);
        let par = StableLimitParams::new(1.0, 0.3, 1).unwrap();
        let total: f64 = (-63..=64).map(|x| stable_prediction(&spec, 200, &[x], Regime::II, &par).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-6);

        let geom = TorusGeometry::new(48, 2).unwrap();
        let spec = WalkSpec::new(geom, Profile::hypercube(1.0, 2).unwrap(), 3.0).unwrap();
        let glp = lattice_covariance(&spec).unwrap();
        let mut total = 0.0;
        for i in 0..geom.sites() {
            total += gaussian_prediction(&spec, 80, geom.point_at(i).coords(), Regime::II, &glp).unwrap();
        }
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn gaussian_regime_examples() {
        let geom = TorusGeometry::new(512, 1).unwrap();
        let spec = WalkSpec::new(geom, Profile::hypercube(1.0, 1).unwrap(), 4.0).unwrap();
        let glp = lattice_covariance(&spec).unwrap();
        let n = 50;
        let at0 = gaussian_prediction(&spec, n, &[0], Regime::I, &glp).unwrap();
        assert!((at0 - (2.0 * PI * 800.0 * glp.det).powf(-0.5)).abs() < 1e-15);
        let total: f64 = (0..512).map(|i| gaussian_prediction(&spec, n, geom.point_at(i).coords(), Regime::I, &glp).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-4);
        let r = reciprocity_check(&[0], &geom, n, 4.0, &glp).unwrap();
        let ii = gaussian_prediction(&spec, n, &[0], Regime::II, &glp).unwrap();
        assert!((ii - r.rhs / 512.0).abs() < 1e-10);
    }

    #[test]
    fn hypotheses_enforced() {
        let spec = power(64, 4.0);
        let gspec = WalkSpec::new(TorusGeometry::new(64, 1).unwrap(), Profile::hypercube(1.0, 1).unwrap(), 4.0).unwrap();
        let glp = lattice_covariance(&gspec).unwrap();
        assert!(matches!(gaussian_prediction(&spec, 4, &[0], Regime::I, &glp), Err(Error::HypothesisViolation(_))));
        let par = StableLimitParams::new(1.0, 1.0, 1).unwrap();
        assert!(matches!(stable_prediction(&gspec, 4, &[0], Regime::I, &par), Err(Error::HypothesisViolation(_))));
        assert_eq!(Regime::parse("II").unwrap(), Regime::II);
    }
}
