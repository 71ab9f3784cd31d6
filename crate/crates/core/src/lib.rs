//! Numerical laboratory for predator-prey systems with density-dependent
//! motility and prey-taxis,
//!
//! ```text
//! u_t = (d(v) u_x)_x - (u chi(v) v_x)_x + gamma u F(v) - theta u - alpha u^2
//! v_t = D v_xx - u F(v) + f(v)
//! ```
//!
//! on an interval with homogeneous Neumann boundaries.
//!
//! * [`model`]: kinetics, motility, steady states and stability thresholds.
//! * [`linstab`]: dispersion relation and unstable interval modes.
//! * [`solver`]: conservative finite-volume method of lines (RK4 or IMEX).
//! * [`diagnostics`]: Lyapunov functionals and trajectory classification.

// Negated comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
mod error;
pub mod linstab;
pub mod model;
pub mod numerics;
pub mod solver;

pub use error::{Error, Result};
