//! Lyapunov functionals, the `zeta` integral, trajectory classification and
//! decay-rate fits.

mod lyapunov;
mod pattern;

pub use lyapunov::{
    lyapunov_v1, lyapunov_v2, zeta, zeta_bounds_check, zeta_by_quadrature, ZetaBoundsReport,
    QUADRATURE_TOL, ZETA_DELTA_FACTOR, ZETA_SAMPLES,
};
pub use pattern::{
    classify_pattern, decay_fit, DecayFit, DecayVerdict, PatternClass, PatternKind,
    DECAY_MIN_POINTS, DECAY_TAIL_FRACTION, DEFAULT_TAIL_FRACTION, EXPONENTIAL_R2, MIN_TAIL_POINTS,
    OSCILLATION_THRESHOLD, PERIODICITY_THRESHOLD, SPATIAL_STD_THRESHOLD,
};
