//! Exact kernel versus regime prediction on a spatial window.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::regime::{classify_regime, mode_exponent, Mode, RegimeReport, Thresholds};
use crate::error::{Error, Result};
use crate::kernel::{estimate_stable_constant, FitWindow, StableFit, Walk};
use crate::limits::{
    fitted_to_characteristic, gaussian_prediction, lattice_covariance_of, stable_prediction, upper_bound_at, GaussianLimitParams,
    GaussianSummary, Regime, StableLimitParams,
};
use crate::torus::TorusGeometry;

/// Where the stable scale `C` for predictions comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StableConstantSource {
    /// Fit if the window holds enough frequencies, otherwise analytic.
    #[default]
    Auto,
    Fit,
    Analytic,
    Value(f64),
}

/// Spatial window over which the relative error is measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Window {
    /// `‖x‖₂ ≤ radius` (periodic norm).
    Ball {
        radius: f64,
    },
    Full,
}

impl Window {
    pub fn describe(&self) -> String {
        match self {
            Window::Ball { radius } => format!("ball(r={radius:.6})"),
            Window::Full => "full".into(),
        }
    }

    pub fn contains(&self, r2: f64) -> bool {
        match self {
            Window::Ball { radius } => r2 <= radius * radius,
            Window::Full => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CompareOptions {
    pub thresholds: Thresholds,
    pub fit_window: FitWindow,
    pub stable_constant: StableConstantSource,
    pub regime: Option<Regime>,
    pub window: Option<Window>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitSummary {
    Stable {
        alpha: f64,
        /// Scale in `exp(−C‖t‖^α)`.
        c: f64,
        source: String,
        fit: Option<StableFit>,
    },
    Gaussian(GaussianSummary),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub side: usize,
    pub dim: usize,
    pub bandwidth: f64,
    pub profile: String,
    pub mode: Mode,
    /// `alpha=<α>` in stable mode, `gauss` otherwise.
    pub alpha_or_gauss: String,
    pub n: u64,
    pub t: f64,
    pub regime: Regime,
    pub regime_forced: bool,
    pub classification: RegimeReport,
    pub window: String,
    pub window_sites: usize,
    /// `max |p_n(x)/prediction(x) − 1|` over the window.
    pub sup_rel_error: f64,
    /// `Σ |p_n(x) − prediction(x)|` over the window.
    pub l1_error: f64,
    /// `max_x p_n(x)/bound(x)` over the whole torus.
    pub bound_ratio_max: f64,
    pub bound_ratio_argmax: Vec<i64>,
    pub limit: LimitSummary,
    pub clamped_mass: f64,
    pub runtime_ms: f64,
}

enum Limit {
    Stable(StableLimitParams),
    Gaussian(GaussianLimitParams),
}

/// Stable limit parameters for the walk: tail index and characteristic
/// scale, with a description of where the scale came from.
pub fn stable_params(
    walk: &Walk,
    source: StableConstantSource,
    window: FitWindow,
) -> Result<(StableLimitParams, String, Option<StableFit>)> {
    let profile = walk.spec().profile();
    let alpha = profile.tail_index().ok_or_else(|| Error::HypothesisViolation(format!("profile {} has no tail index", profile.label())))?;
    let d = walk.geom().dim();
    let analytic = || {
        profile.analytic_stable_constant().ok_or_else(|| Error::Unsupported(format!("no analytic stable constant for {}", profile.label())))
    };
    let from_fit = |fit: &StableFit| {
        fit.constant_at_tail_index
            .map(|c| fitted_to_characteristic(c, alpha))
            .ok_or_else(|| Error::Accuracy { what: "stable constant fit at the tail index".into(), achieved: fit.residual })
    };
    let (c, label, fit) = match source {
        StableConstantSource::Value(value) => (value, "value".to_string(), None),
        StableConstantSource::Analytic => (analytic()?, "analytic".into(), None),
        StableConstantSource::Fit => {
            let fit = estimate_stable_constant(walk, window)?;
            (from_fit(&fit)?, "fit".into(), Some(fit))
        }
        StableConstantSource::Auto => match estimate_stable_constant(walk, window) {
            Ok(fit) => (from_fit(&fit)?, "fit".into(), Some(fit)),
            Err(Error::InsufficientResolution { found, .. }) => {
                log::info!("fit window holds {found} frequencies; using the analytic stable constant");
                (analytic()?, "analytic (fit window too small)".into(), None)
            }
            Err(e) => return Err(e),
        },
    };
    Ok((StableLimitParams::new(alpha, c, d)?, label, fit))
}

/// Default comparison window for a regime.
pub fn default_window(walk: &Walk, n: u64, mode: Mode, regime: Regime, glp: Option<&GaussianLimitParams>) -> Result<Window> {
    let w = walk.spec().bandwidth();
    let nf = n as f64;
    Ok(match (mode, regime) {
        (Mode::Stable, Regime::I) => {
            let alpha = mode_exponent(walk.spec(), mode)?;
            Window::Ball { radius: 3.0 * (nf * w.powf(alpha)).powf(1.0 / alpha) }
        }
        (Mode::Gaussian, Regime::I | Regime::II) => {
            let lmax = glp.map(|g| g.lambda_max).ok_or_else(|| Error::InvalidParameter("gaussian window needs the covariance".into()))?;
            Window::Ball { radius: (3.0 * (nf * w * w * lmax).sqrt()).min(0.3 * nf.powf(2.0 / 3.0) * w) }
        }
        _ => Window::Full,
    })
}

/// `max_x p_n(x)/bound(x)` and where it is attained.
pub fn bound_ratio(geom: &TorusGeometry, values: &[f64], w: f64, n: u64, alpha: f64) -> (f64, Vec<i64>) {
    let d = geom.dim();
    let (best, idx) = values
        .par_iter()
        .enumerate()
        .map(|(i, &p)| {
            let mut x = vec![0i64; d];
            geom.coords_into(i, &mut x);
            let r = x.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
            (p / upper_bound_at(geom, w, n, r, alpha), i)
        })
        .reduce(|| (f64::NEG_INFINITY, usize::MAX), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    (best, geom.point_at(idx).into_coords())
}

pub fn compare(walk: &Walk, n: u64, mode: Mode, opts: &CompareOptions) -> Result<ComparisonReport> {
    let started = Instant::now();
    let spec = walk.spec();
    let geom = *walk.geom();
    let classification = classify_regime(spec, n, mode, opts.thresholds)?;
    let regime = match opts.regime.or(classification.classification.regime()) {
        Some(r) => r,
        None => {
            return Err(Error::HypothesisViolation(format!(
                "n = {n} is outside every regime of the threshold rule (t = {:.4}); force a regime to compare anyway",
                classification.t
            )))
        }
    };
    let exponent = classification.exponent;
    let (limit, summary) = match mode {
        Mode::Stable => {
            let (p, source, fit) = stable_params(walk, opts.stable_constant, opts.fit_window)?;
            (Limit::Stable(p), LimitSummary::Stable { alpha: p.alpha, c: p.c, source, fit })
        }
        Mode::Gaussian => {
            let g = lattice_covariance_of(walk)?;
            let s = g.summary();
            (Limit::Gaussian(g), LimitSummary::Gaussian(s))
        }
    };
    let glp = match &limit {
        Limit::Gaussian(g) => Some(g),
        Limit::Stable(_) => None,
    };
    let window = match opts.window {
        Some(w) => w,
        None => default_window(walk, n, mode, regime, glp)?,
    };

    let field = walk.n_step(n);
    let d = geom.dim();
    let sites: Vec<usize> = (0..geom.sites())
        .into_par_iter()
        .filter(|&i| {
            let mut x = vec![0i64; d];
            geom.coords_into(i, &mut x);
            window.contains(x.iter().map(|&c| (c * c) as f64).sum())
        })
        .collect();
    if sites.is_empty() {
        return Err(Error::EmptyWindow(window.describe()));
    }

    let inv_n = 1.0 / geom.sites() as f64;
    let (sup_rel_error, l1_error) = if regime == Regime::III {
        // prediction 1/N: relative error is N·p_n − 1, computed without the k = 0 term
        let dev = walk.uniform_deviation(n);
        let sup = sites.iter().map(|&i| dev[i].abs()).fold(0.0, f64::max);
        let l1 = sites.iter().map(|&i| dev[i].abs()).sum::<f64>() * inv_n;
        (sup, l1)
    } else {
        let preds: Vec<f64> = sites
            .par_iter()
            .map(|&i| {
                let x = geom.point_at(i);
                match &limit {
                    Limit::Stable(p) => stable_prediction(spec, n, x.coords(), regime, p),
                    Limit::Gaussian(g) => gaussian_prediction(spec, n, x.coords(), regime, g),
                }
            })
            .collect::<Result<_>>()?;
        let mut sup: f64 = 0.0;
        let mut l1 = 0.0;
        for (&i, &q) in sites.iter().zip(&preds) {
            let p = field.values[i];
            sup = sup.max((p / q - 1.0).abs());
            l1 += (p - q).abs();
        }
        (sup, l1)
    };

    let (bound_ratio_max, bound_ratio_argmax) = bound_ratio(&geom, &field.values, spec.bandwidth(), n, exponent);
    Ok(ComparisonReport {
        side: geom.side(),
        dim: d,
        bandwidth: spec.bandwidth(),
        profile: spec.profile().label(),
        mode,
        alpha_or_gauss: match mode {
            Mode::Stable => format!("alpha={exponent}"),
            Mode::Gaussian => "gauss".into(),
        },
        n,
        t: classification.t,
        regime,
        regime_forced: opts.regime.is_some(),
        classification,
        window: window.describe(),
        window_sites: sites.len(),
        sup_rel_error,
        l1_error,
        bound_ratio_max,
        bound_ratio_argmax,
        limit: summary,
        clamped_mass: field.clamped_mass,
        runtime_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::WalkSpec;
    use crate::profile::Profile;

    fn walk(l: usize, p: Profile, w: f64) -> Walk {
        Walk::new(WalkSpec::new(TorusGeometry::new(l, p.dim()).unwrap(), p, w).unwrap()).unwrap()
    }

    #[test]
    fn supercritical_gaussian_example() {
        let wk = walk(64, Profile::hypercube(1.0, 1).unwrap(), 8.0);
        let r = compare(&wk, 4000, Mode::Gaussian, &CompareOptions::default()).unwrap();
        assert_eq!(r.regime, Regime::III);
        assert!(r.sup_rel_error <= 1e-3, "{r:?}");
        assert!(r.bound_ratio_max > 0.0);
        let direct = wk.n_step(4000).values.iter().map(|p| (64.0 * p - 1.0).abs()).fold(0.0, f64::max);
        assert!((direct - r.sup_rel_error).abs() < 1e-12);
    }

    #[test]
    fn indeterminate_needs_forcing() {
        let wk = walk(1024, Profile::make_power_law(1.0, 1).unwrap(), 16.0);
        assert!(matches!(compare(&wk, 8, Mode::Stable, &CompareOptions::default()), Err(Error::HypothesisViolation(_))));
        let opts = CompareOptions { regime: Some(Regime::I), ..Default::default() };
        let r = compare(&wk, 8, Mode::Stable, &opts).unwrap();
        assert!(r.regime_forced);
        assert!(r.sup_rel_error.is_finite());
    }

    #[test]
    fn stable_constant_sources() {
        let wk = walk(4096, Profile::make_power_law(1.0, 1).unwrap(), 16.0);
        let (fit, label, _) = stable_params(&wk, StableConstantSource::Auto, FitWindow::default()).unwrap();
        assert_eq!(label, "fit");
        let (ana, _, _) = stable_params(&wk, StableConstantSource::Analytic, FitWindow::default()).unwrap();
        assert!((ana.c - std::f64::consts::PI / 4.0).abs() < 1e-12);
        assert!((fit.c / ana.c - 1.0).abs() < 0.05);
        let small = walk(128, Profile::make_power_law(1.0, 1).unwrap(), 8.0);
        let (_, label, _) = stable_params(&small, StableConstantSource::Auto, FitWindow::default()).unwrap();
        assert!(label.starts_with("analytic"));
        assert!(stable_params(&small, StableConstantSource::Fit, FitWindow::default()).is_err());
    }
}
