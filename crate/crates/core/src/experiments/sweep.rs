//! Scaling families `(L_j, W_j, n_j)` and the comparison table along them.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::compare::{compare, CompareOptions, ComparisonReport, StableConstantSource, Window};
use super::regime::{Mode, Thresholds};
use crate::error::{Error, Result};
use crate::kernel::{FitWindow, Walk, WalkSpec};
use crate::limits::Regime;
use crate::profile::{Profile, ProfileSpec};
use crate::torus::{TorusGeometry, DEFAULT_SIZE_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Member {
    #[serde(rename = "L")]
    pub side: usize,
    #[serde(rename = "W")]
    pub bandwidth: f64,
    pub n: u64,
}

/// Members at fixed `t`: `W₀ = L^{w_exponent}`, `n = round(t(L/W₀)^α)`, then
/// `W = L(t/n)^{1/α}` so that `n(W/L)^α = t` holds exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scaling {
    pub t: f64,
    #[serde(rename = "L")]
    pub sides: Vec<usize>,
    pub w_exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub name: String,
    pub mode: Mode,
    #[serde(default = "one")]
    pub d: usize,
    pub profile: ProfileSpec,
    #[serde(default)]
    pub members: Vec<Member>,
    #[serde(default)]
    pub scaling: Option<Scaling>,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_k_min")]
    pub k_min: f64,
    #[serde(default)]
    pub stable_constant: StableConstantSource,
    #[serde(default = "default_cap")]
    pub size_cap: usize,
    #[serde(default)]
    pub regime: Option<Regime>,
    #[serde(default)]
    pub window: Option<Window>,
}

fn one() -> usize {
    1
}
fn default_delta() -> f64 {
    FitWindow::default().delta
}
fn default_k_min() -> f64 {
    FitWindow::default().k_min
}
fn default_cap() -> usize {
    DEFAULT_SIZE_CAP
}

impl FamilySpec {
    fn exponent(&self, profile: &Profile) -> Result<f64> {
        match self.mode {
            Mode::Stable => profile.tail_index().ok_or_else(|| Error::Config("stable family needs a power-law profile".into())),
            Mode::Gaussian => Ok(2.0),
        }
    }

    /// Explicit members followed by generated ones.
    pub fn expand(&self) -> Result<Vec<Member>> {
        let profile = Profile::from_spec(&self.profile, self.d)?;
        let alpha = self.exponent(&profile)?;
        let mut out = self.members.clone();
        if let Some(s) = &self.scaling {
            if !(s.t > 0.0) {
                return Err(Error::Config(format!("scaling time t = {} must be positive", s.t)));
            }
            for &l in &s.sides {
                let lf = l as f64;
                let w0 = lf.powf(s.w_exponent);
                let n = (s.t * (lf / w0).powf(alpha)).round().max(1.0) as u64;
                let w = lf * (s.t / n as f64).powf(1.0 / alpha);
                out.push(Member { side: l, bandwidth: w, n });
            }
        }
        if out.is_empty() {
            return Err(Error::Config(format!("family {:?} has no members", self.name)));
        }
        Ok(out)
    }

    pub fn options(&self) -> CompareOptions {
        CompareOptions {
            thresholds: self.thresholds,
            fit_window: FitWindow { delta: self.delta, k_min: self.k_min },
            stable_constant: self.stable_constant,
            regime: self.regime,
            window: self.window,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub name: String,
    pub reports: Vec<ComparisonReport>,
    pub sup_rel_errors: Vec<f64>,
    pub strictly_decreasing: bool,
    /// `max/min` of `bound_ratio_max` over the members.
    pub bound_ratio_spread: f64,
}

pub fn convergence_sweep(family: &FamilySpec) -> Result<SweepResult> {
    let members = family.expand()?;
    let profile = Profile::from_spec(&family.profile, family.d)?;
    let mut specs = Vec::with_capacity(members.len());
    for m in &members {
        let geom = TorusGeometry::new(m.side, family.d)?;
        geom.ensure_within(family.size_cap)?;
        specs.push((WalkSpec::new(geom, profile.clone(), m.bandwidth)?.with_size_cap(family.size_cap), m.n));
    }
    let opts = family.options();
    let mut reports = Vec::with_capacity(specs.len());
    for (spec, n) in specs {
        let walk = Walk::new(spec)?;
        reports.push(compare(&walk, n, family.mode, &opts)?);
    }
    let sup_rel_errors: Vec<f64> = reports.iter().map(|r| r.sup_rel_error).collect();
    let strictly_decreasing = sup_rel_errors.windows(2).all(|p| p[1] < p[0]);
    let ratios: Vec<f64> = reports.iter().map(|r| r.bound_ratio_max).collect();
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SweepResult { name: family.name.clone(), reports, sup_rel_errors, strictly_decreasing, bound_ratio_spread: hi / lo })
}

pub const CSV_COLUMNS: [&str; 12] =
    ["L", "d", "W", "alpha_or_gauss", "n", "t", "regime", "window", "sup_rel_error", "l1_error", "bound_ratio_max", "runtime_ms"];

pub fn write_reports_csv<W: Write>(out: W, reports: &[ComparisonReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in reports {
        w.write_record([
            r.side.to_string(),
            r.dim.to_string(),
            format!("{}", r.bandwidth),
            r.alpha_or_gauss.clone(),
            r.n.to_string(),
            format!("{}", r.t),
            r.regime.to_string(),
            r.window.clone(),
            format!("{:e}", r.sup_rel_error),
            format!("{:e}", r.l1_error),
            format!("{:e}", r.bound_ratio_max),
            format!("{:.3}", r.runtime_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}
