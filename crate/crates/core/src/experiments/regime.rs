//! Finite-size regime classification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::WalkSpec;
use crate::limits::Regime;

/// Which family of limit theorems is being tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Stable,
    Gaussian,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "stable" => Ok(Mode::Stable),
            "gaussian" => Ok(Mode::Gaussian),
            other => Err(Error::Config(format!("unknown mode {other:?} (expected stable or gaussian)"))),
        }
    }
}

/// Thresholds turning the asymptotic conditions into a decision rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default = "default_t_lo")]
    pub t_lo: f64,
    #[serde(default = "default_t_hi")]
    pub t_hi: f64,
    #[serde(default = "default_c_log")]
    pub c_log: f64,
}

fn default_t_lo() -> f64 {
    0.25
}
fn default_t_hi() -> f64 {
    4.0
}
fn default_c_log() -> f64 {
    5.0
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { t_lo: default_t_lo(), t_hi: default_t_hi(), c_log: default_c_log() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Subcritical,
    Critical,
    Supercritical,
    Indeterminate,
}

impl Classification {
    pub fn regime(self) -> Option<Regime> {
        match self {
            Classification::Subcritical => Some(Regime::I),
            Classification::Critical => Some(Regime::II),
            Classification::Supercritical => Some(Regime::III),
            Classification::Indeterminate => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub mode: Mode,
    /// Exponent in `t = n(W/L)^α`; 2 in Gaussian mode.
    pub exponent: f64,
    pub n: u64,
    pub t: f64,
    pub n_over_log_w: f64,
    pub n_over_log_l: f64,
    pub classification: Classification,
    pub thresholds: Thresholds,
}

/// Exponent governing the time scale, checked against the profile.
pub fn mode_exponent(spec: &WalkSpec, mode: Mode) -> Result<f64> {
    let p = spec.profile();
    match mode {
        Mode::Stable => {
            p.tail_index().ok_or_else(|| Error::HypothesisViolation(format!("stable mode needs a tail index; {} has none", p.label())))
        }
        Mode::Gaussian => {
            if p.covariance().is_none() {
                return Err(Error::HypothesisViolation(format!("gaussian mode needs a finite covariance; {} has none", p.label())));
            }
            Ok(2.0)
        }
    }
}

pub fn classify_regime(spec: &WalkSpec, n: u64, mode: Mode, thresholds: Thresholds) -> Result<RegimeReport> {
    let exponent = mode_exponent(spec, mode)?;
    let (l, w) = (spec.geom().side() as f64, spec.bandwidth());
    let nf = n as f64;
    let t = nf * (w / l).powf(exponent);
    let (log_w, log_l) = (w.ln(), l.ln());
    let long_w = nf > thresholds.c_log * log_w;
    let long_l = nf > thresholds.c_log * log_l;
    let classification = if t < thresholds.t_lo && long_w {
        Classification::Subcritical
    } else if t >= thresholds.t_lo && t <= thresholds.t_hi && long_w {
        Classification::Critical
    } else if t > thresholds.t_hi && long_l {
        Classification::Supercritical
    } else {
        Classification::Indeterminate
    };
    Ok(RegimeReport { mode, exponent, n, t, n_over_log_w: nf / log_w, n_over_log_l: nf / log_l, classification, thresholds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Profile;
    use crate::torus::TorusGeometry;

    fn spec(l: usize, w: f64, p: Profile) -> WalkSpec {
        WalkSpec::new(TorusGeometry::new(l, 1).unwrap(), p, w).unwrap()
    }

    #[test]
    fn classification_examples() {
        let s = spec(1024, 16.0, Profile::make_power_law(1.0, 1).unwrap());
        let r = classify_regime(&s, 8, Mode::Stable, Thresholds::default()).unwrap();
        assert!((r.t - 0.125).abs() < 1e-15);
        assert_eq!(r.classification, Classification::Indeterminate);
        let r = classify_regime(&s, 64, Mode::Stable, Thresholds::default()).unwrap();
        assert_eq!(r.classification, Classification::Critical);
        let g = spec(64, 8.0, Profile::hypercube(1.0, 1).unwrap());
        let r = classify_regime(&g, 2000, Mode::Gaussian, Thresholds::default()).unwrap();
        assert!((r.t - 31.25).abs() < 1e-12);
        assert_eq!(r.classification, Classification::Supercritical);
    }

    #[test]
    fn mode_must_match_profile() {
        let g = spec(64, 8.0, Profile::hypercube(1.0, 1).unwrap());
        assert!(classify_regime(&g, 10, Mode::Stable, Thresholds::default()).is_err());
        let s = spec(64, 8.0, Profile::make_power_law(1.0, 1).unwrap());
        assert!(classify_regime(&s, 10, Mode::Gaussian, Thresholds::default()).is_err());
    }
}
