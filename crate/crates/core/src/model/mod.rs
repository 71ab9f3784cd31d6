//! Kinetics and motility families, hypothesis checks, homogeneous steady
//! states and global-stability thresholds.

mod equilibria;
mod hypotheses;
mod kinetics;
mod motility;
mod stability;

pub use equilibria::{
    coexistence_by_bisection, compute_equilibria, Equilibrium, EquilibriumKind, EquilibriumSet,
    RESIDUAL_TOL,
};
pub use hypotheses::{
    check_hypotheses, HypothesisReport, HypothesisStatus, Violation, SAMPLING_TOL,
};
pub use kinetics::{CustomKinetics, KineticsKind, KineticsModel};
pub use motility::{MotilityKind, MotilityModel};
pub use stability::{
    global_stability_report, k0_bound, taxis_threshold, Regime, StabilityThresholds,
    THRESHOLD_GRID_POINTS,
};

use std::sync::Arc;

/// Shared scalar evaluator used by custom kinetics and motility.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
