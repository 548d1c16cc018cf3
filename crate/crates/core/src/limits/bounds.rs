//! Heat-kernel upper bound and the truncated one-step variance.

use serde::{Deserialize, Serialize};

use super::stable::StableLimitParams;
use crate::error::Result;
use crate::kernel::{Walk, WalkSpec};
use crate::torus::{NormExponent, TorusGeometry};

/// `min(n^{−d/α}W^{−d}, nW^α/(r∨W)^{d+α}) + 1/N` at periodic distance `r`.
pub fn upper_bound_at(geom: &TorusGeometry, w: f64, n: u64, r: f64, alpha: f64) -> f64 {
    let d = geom.dim() as f64;
    let nf = n as f64;
    let on_diag = nf.powf(-d / alpha) * w.powf(-d);
    let off_diag = nf * w.powf(alpha) / r.max(w).powf(d + alpha);
    on_diag.min(off_diag) + 1.0 / geom.sites() as f64
}

/// The bracketed bound with the constant dropped, at lattice site `x`.
pub fn stable_upper_bound(spec: &WalkSpec, n: u64, x: &[i64], params: &StableLimitParams) -> Result<f64> {
    let r = spec.geom().periodic_norm(x, NormExponent::L2)?;
    Ok(upper_bound_at(spec.geom(), spec.bandwidth(), n, r, params.alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedVariance {
    pub cutoff: f64,
    /// `Σ_z ‖z‖₂² p₁(z) 1{‖z‖₂ < cutoff}`.
    pub value: f64,
    /// `W^α·cutoff^{2−α}` (with `α = 2` for finite-variance profiles).
    pub predicted_order: f64,
    pub ratio: f64,
}

pub fn truncated_variance(walk: &Walk, cutoff: f64) -> TruncatedVariance {
    let geom = walk.geom();
    let p1 = walk.one_step_values();
    let mut x = vec![0i64; geom.dim()];
    let mut value = 0.0;
    for (i, &p) in p1.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        geom.coords_into(i, &mut x);
        let r2: f64 = x.iter().map(|&c| (c * c) as f64).sum();
        if r2.sqrt() < cutoff {
            value += r2 * p;
        }
    }
    let alpha = walk.spec().profile().tail_index().unwrap_or(2.0);
    let w = walk.spec().bandwidth();
    let predicted_order = if cutoff.is_finite() {
        w.powf(alpha) * cutoff.powf(2.0 - alpha)
    } else if alpha == 2.0 {
        w * w
    } else {
        f64::INFINITY
    };
    TruncatedVariance { cutoff, value, predicted_order, ratio: value / predicted_order }
}
