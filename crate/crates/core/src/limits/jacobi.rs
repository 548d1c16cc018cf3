//! Multidimensional Jacobi theta function and its reciprocity formula.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::gaussian::GaussianLimitParams;
use super::stable::shell_series_complex;
use crate::error::{Error, Result};
use crate::torus::TorusGeometry;

/// Series are cut once the Gaussian tail bound drops below this.
pub const JACOBI_TOL: f64 = 1e-12;
/// Smallest admissible eigenvalue of the quadratic form.
pub const DEFAULT_EIGEN_FLOOR: f64 = 1e-6;
const JACOBI_TERM_CAP: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiValue {
    pub value: Complex64,
    pub tail_bound: f64,
    pub terms: usize,
}

fn smallest_eigenvalue(gamma: &DMatrix<f64>) -> f64 {
    gamma.clone().symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// `θ(z, Γ) = Σ_{k∈Z^d} exp(−π⟨kΓ, k⟩ + 2πi⟨k, z⟩)`.
pub fn jacobi_theta(z: &[f64], gamma: &DMatrix<f64>) -> Result<JacobiValue> {
    jacobi_theta_with_floor(z, gamma, DEFAULT_EIGEN_FLOOR)
}

pub fn jacobi_theta_with_floor(z: &[f64], gamma: &DMatrix<f64>, floor: f64) -> Result<JacobiValue> {
    let d = z.len();
    if gamma.nrows() != d || gamma.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, got: gamma.nrows() });
    }
    let lmin = smallest_eigenvalue(gamma);
    if !(lmin >= floor) {
        return Err(Error::Accuracy { what: format!("jacobi theta: smallest eigenvalue {lmin:e} below floor {floor:e}"), achieved: lmin });
    }
    // ⟨kΓ,k⟩ ≥ λ_min ‖k‖_∞²
    let g = |j: i64| (-PI * lmin * (j * j) as f64).exp();
    let (value, tail_bound, terms) = shell_series_complex(d, JACOBI_TOL, JACOBI_TERM_CAP, "jacobi theta series", g, |k| {
        let mut q = 0.0;
        for a in 0..d {
            for b in 0..d {
                q += k[a] as f64 * gamma[(a, b)] * k[b] as f64;
            }
        }
        let phase: f64 = k.iter().zip(z).map(|(&a, b)| a as f64 * b).sum();
        Complex64::from_polar((-PI * q).exp(), 2.0 * PI * phase)
    })?;
    Ok(JacobiValue { value, tail_bound, terms })
}

/// Both sides of the reciprocity identity
/// `θ(x/L, 2πnW²Γ_L/L²) = N/((2πnW²)^{d/2}√det Γ_L) Σ_k exp(−⟨(kL+x)Γ_L⁻¹,(kL+x)⟩/(2nW²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReciprocityCheck {
    pub lhs: f64,
    pub lhs_imag: f64,
    pub rhs: f64,
    pub abs_diff: f64,
}

/// `N/((2πnW²)^{d/2}·√det Γ_L)`.
pub fn reciprocity_prefactor(geom: &TorusGeometry, n: u64, w: f64, glp: &GaussianLimitParams) -> f64 {
    let d = geom.dim() as f64;
    geom.sites() as f64 / ((2.0 * PI * n as f64 * w * w).powf(d / 2.0) * glp.det.sqrt())
}

/// Right-hand side: periodised Gaussian sum over images `kL + x`.
pub fn periodised_gaussian(geom: &TorusGeometry, x: &[f64], n: u64, w: f64, glp: &GaussianLimitParams) -> Result<f64> {
    let d = geom.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.len() });
    }
    let l = geom.side() as f64;
    let spread = 2.0 * n as f64 * w * w;
    let inv = &glp.inverse;
    // for canonical x every image in shell j ≥ 1 lies at sup-distance ≥ (j − 1/2)L
    let g = |j: i64| if j == 0 { 1.0 } else { (-((j as f64 - 0.5) * l).powi(2) / (glp.lambda_max * spread)).exp() };
    let pre = reciprocity_prefactor(geom, n, w, glp);
    let (v, _, _) = shell_series_complex(d, 1e-14 / pre.max(1.0), JACOBI_TERM_CAP, "periodised gaussian", g, |k| {
        let y: Vec<f64> = k.iter().zip(x).map(|(&a, b)| a as f64 * l + b).collect();
        let mut q = 0.0;
        for a in 0..d {
            for b in 0..d {
                q += y[a] * inv[(a, b)] * y[b];
            }
        }
        Complex64::new((-q / spread).exp(), 0.0)
    })?;
    Ok(pre * v.re)
}

pub fn reciprocity_check(x: &[i64], geom: &TorusGeometry, n: u64, w: f64, glp: &GaussianLimitParams) -> Result<ReciprocityCheck> {
    let rep = geom.canonical_rep(x)?;
    let l = geom.side() as f64;
    let z: Vec<f64> = rep.coords().iter().map(|&c| c as f64 / l).collect();
    let form = &glp.gamma * (2.0 * PI * n as f64 * w * w / (l * l));
    let lhs = jacobi_theta(&z, &form)?;
    let rhs = periodised_gaussian(geom, &rep.to_f64(), n, w, glp)?;
    Ok(ReciprocityCheck { lhs: lhs.value.re, lhs_imag: lhs.value.im, rhs, abs_diff: (lhs.value.re - rhs).abs() })
}
