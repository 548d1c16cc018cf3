//! The discretised covariance `Γ_L` and the Gaussian-regime quantities built
//! from it.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{Walk, WalkSpec};
use crate::torus::TorusGeometry;

/// `Γ_L` with its determinant, inverse and extreme eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLimitParams {
    pub gamma: DMatrix<f64>,
    pub det: f64,
    pub inverse: DMatrix<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

/// Serialisable summary of [`GaussianLimitParams`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSummary {
    pub gamma: Vec<Vec<f64>>,
    pub det: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl GaussianLimitParams {
    pub fn new(gamma: DMatrix<f64>) -> Result<Self> {
        if gamma.nrows() != gamma.ncols() || gamma.nrows() == 0 {
            return Err(Error::InvalidParameter("covariance must be a non-empty square matrix".into()));
        }
        let asym = (&gamma - gamma.transpose()).abs().max();
        if asym > 1e-12 * gamma.abs().max().max(1.0) {
            return Err(Error::HypothesisViolation(format!("covariance is not symmetric (asymmetry {asym:e})")));
        }
        let gamma = (&gamma + gamma.transpose()) * 0.5;
        let eig = gamma.clone().symmetric_eigen().eigenvalues;
        let lambda_min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let lambda_max = eig.iter().copied().fold(0.0, f64::max);
        if !(lambda_min > 1e-12 * lambda_max.max(f64::MIN_POSITIVE)) {
            return Err(Error::HypothesisViolation(format!(
                "covariance is numerically singular (eigenvalues in [{lambda_min:e}, {lambda_max:e}])"
            )));
        }
        let chol = gamma.clone().cholesky().ok_or_else(|| Error::HypothesisViolation("covariance is not positive definite".into()))?;
        let det = chol.l().diagonal().iter().map(|v| v * v).product();
        let inverse = chol.inverse();
        Ok(Self { gamma, det, inverse, lambda_min, lambda_max })
    }

    pub fn dim(&self) -> usize {
        self.gamma.nrows()
    }

    /// `⟨vΓ_L, v⟩`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let d = self.dim();
        let mut q = 0.0;
        for a in 0..d {
            for b in 0..d {
                q += v[a] * self.gamma[(a, b)] * v[b];
            }
        }
        q
    }

    /// `⟨vΓ_L⁻¹, v⟩`.
    pub fn inverse_form(&self, v: &[f64]) -> f64 {
        let d = self.dim();
        let mut q = 0.0;
        for a in 0..d {
            for b in 0..d {
                q += v[a] * self.inverse[(a, b)] * v[b];
            }
        }
        q
    }

    pub fn summary(&self) -> GaussianSummary {
        let d = self.dim();
        GaussianSummary {
            gamma: (0..d).map(|i| (0..d).map(|j| self.gamma[(i, j)]).collect()).collect(),
            det: self.det,
            lambda_min: self.lambda_min,
            lambda_max: self.lambda_max,
        }
    }
}

fn require_covariance(spec: &WalkSpec) -> Result<()> {
    if spec.profile().covariance().is_none() {
        return Err(Error::HypothesisViolation(format!("profile {} has no finite covariance", spec.profile().label())));
    }
    Ok(())
}

/// `(Γ_L)_{ij} = Σ_x p₁(x) x_i x_j / W²` from an explicit one-step kernel.
pub fn covariance_from_one_step(geom: &TorusGeometry, p1: &[f64], w: f64) -> Result<GaussianLimitParams> {
    let d = geom.dim();
    let partials: Vec<Vec<f64>> = p1
        .par_chunks(4096)
        .enumerate()
        .map(|(c, chunk)| {
            let mut acc = vec![0.0; d * d];
            let mut x = vec![0i64; d];
            for (j, &p) in chunk.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                geom.coords_into(c * 4096 + j, &mut x);
                for a in 0..d {
                    for b in 0..d {
                        acc[a * d + b] += p * (x[a] * x[b]) as f64;
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; d * d];
    for part in &partials {
        for (t, v) in total.iter_mut().zip(part) {
            *t += v;
        }
    }
    let m = DMatrix::from_row_slice(d, d, &total) / (w * w);
    GaussianLimitParams::new(m)
}

/// Lattice covariance `Γ_L` of the walk.
pub fn lattice_covariance(spec: &WalkSpec) -> Result<GaussianLimitParams> {
    require_covariance(spec)?;
    let mut vals = spec.scaled_profile_values()?;
    vals[spec.geom().origin_index()] = 0.0;
    let omega = crate::kernel::stable_sum(&vals);
    if !(omega > 0.0) {
        return Err(Error::DegenerateWalk);
    }
    vals.iter_mut().for_each(|v| *v /= omega);
    covariance_from_one_step(spec.geom(), &vals, spec.bandwidth())
}

pub fn lattice_covariance_of(walk: &Walk) -> Result<GaussianLimitParams> {
    require_covariance(walk.spec())?;
    covariance_from_one_step(walk.geom(), walk.one_step_values(), walk.spec().bandwidth())
}

/// `σ_L²(k) = (W²/L²)⟨kΓ_L, k⟩` at a dual lattice point.
pub fn sigma_l_sq(glp: &GaussianLimitParams, k: &[i64], geom: &TorusGeometry, w: f64) -> Result<f64> {
    let rep = geom.canonical_rep(k)?;
    Ok(sigma_l_sq_at(glp, &rep.to_f64(), geom.side() as f64, w))
}

/// [`sigma_l_sq`] at a real frequency vector.
pub fn sigma_l_sq_at(glp: &GaussianLimitParams, k: &[f64], l: f64, w: f64) -> f64 {
    w * w / (l * l) * glp.quadratic_form(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Profile;

    fn cube(l: usize, d: usize, w: f64) -> WalkSpec {
        WalkSpec::new(TorusGeometry::new(l, d).unwrap(), Profile::hypercube(1.0, d).unwrap(), w).unwrap()
    }

    #[test]
    fn covariance_examples() {
        let glp = lattice_covariance(&cube(100, 1, 2.0)).unwrap();
        assert!((glp.gamma[(0, 0)] - 0.625).abs() < 1e-15);
        let big = lattice_covariance(&cube(4000, 1, 400.0)).unwrap();
        assert!((big.gamma[(0, 0)] - 1.0 / 3.0).abs() < 3.0 / 400.0);
        let two = lattice_covariance(&cube(40, 2, 3.0)).unwrap();
        assert!(two.gamma[(0, 1)].abs() < 1e-12);
        assert!((&two.gamma * &two.inverse - DMatrix::identity(2, 2)).abs().max() < 1e-10);
    }

    #[test]
    fn spec_and_walk_agree() {
        let spec = cube(50, 2, 4.0);
        let a = lattice_covariance(&spec).unwrap();
        let b = lattice_covariance_of(&Walk::new(spec).unwrap()).unwrap();
        assert!((a.gamma - b.gamma).abs().max() < 1e-14);
    }

    #[test]
    fn power_law_refused() {
        let spec = WalkSpec::new(TorusGeometry::new(64, 1).unwrap(), Profile::make_power_law(1.0, 1).unwrap(), 4.0).unwrap();
        assert!(matches!(lattice_covariance(&spec), Err(Error::HypothesisViolation(_))));
    }

    #[test]
    fn sigma_examples() {
        let geom = TorusGeometry::new(100, 1).unwrap();
        let glp = GaussianLimitParams::new(DMatrix::from_element(1, 1, 0.625)).unwrap();
        assert_eq!(sigma_l_sq(&glp, &[0], &geom, 2.0).unwrap(), 0.0);
        assert!((sigma_l_sq(&glp, &[10], &geom, 2.0).unwrap() - 0.025).abs() < 1e-15);
        assert_eq!(sigma_l_sq(&glp, &[13], &geom, 2.0).unwrap(), sigma_l_sq(&glp, &[-13], &geom, 2.0).unwrap());
    }
}
