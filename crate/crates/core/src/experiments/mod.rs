//! Regime classification, exact-versus-limit comparisons and parameter
//! sweeps.

pub mod compare;
pub mod regime;
pub mod sweep;

pub use compare::{
    bound_ratio, compare, default_window, stable_params, CompareOptions, ComparisonReport, LimitSummary, StableConstantSource, Window,
};
pub use regime::{classify_regime, Classification, Mode, RegimeReport, Thresholds};
pub use sweep::{convergence_sweep, write_reports_csv, FamilySpec, Member, Scaling, SweepResult};
