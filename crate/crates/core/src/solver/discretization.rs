use super::{SolverConfig, State};
use crate::model::{KineticsModel, MotilityModel};
use crate::{Error, Result};

/// Spatial operator of the method of lines for one configuration.
#[derive(Debug, Clone, Copy)]
pub struct Discretization<'a> {
    pub kinetics: &'a KineticsModel,
    pub motility: &'a MotilityModel,
    pub diffusivity: f64,
    pub h: f64,
    pub reactions: bool,
}

impl<'a> Discretization<'a> {
    pub fn new(cfg: &'a SolverConfig) -> Self {
        Discretization {
            kinetics: &cfg.kinetics,
            motility: &cfg.motility,
            diffusivity: cfg.diffusivity,
            h: cfg.grid.h(),
            reactions: cfg.reactions,
        }
    }

    /// Time derivatives of `(u, v)` written into `du`, `dv`.
    pub fn rhs_into(&self, u: &[f64], v: &[f64], du: &mut [f64], dv: &mut [f64]) {
        let n = u.len();
        let inv_h = 1.0 / self.h;
        let inv_h2 = inv_h * inv_h;
        let dd = self.diffusivity;
        if self.reactions {
            for i in 0..n {
                let (ru, rv) = self.kinetics.reaction_unchecked(u[i], v[i]);
                du[i] = ru;
                dv[i] = rv;
            }
        } else {
            du.fill(0.0);
            dv.fill(0.0);
        }
        for i in 0..n - 1 {
            let dvf = v[i + 1] - v[i];
            let (d_face, chi_face) = self.motility.eval(0.5 * (v[i] + v[i + 1]));
            let u_face = 0.5 * (u[i] + u[i + 1]);
            // Flux times h, scaled by 1/h^2 once below.
            let flux_u = (d_face * (u[i + 1] - u[i]) - u_face * chi_face * dvf) * inv_h2;
            let flux_v = dd * dvf * inv_h2;
            du[i] += flux_u;
            du[i + 1] -= flux_u;
            dv[i] += flux_v;
            dv[i + 1] -= flux_v;
        }
    }

    /// `(max_i d(v_i), max_faces |chi(v_f) (v_{i+1} - v_i) / h|)`.
    pub fn transport_speeds(&self, v: &[f64]) -> (f64, f64) {
        let d_max = v
            .iter()
            .map(|&x| self.motility.motility(x))
            .fold(0.0f64, f64::max);
        let w_max = v
            .windows(2)
            .map(|w| (self.motility.taxis(0.5 * (w[0] + w[1])) * (w[1] - w[0]) / self.h).abs())
            .fold(0.0f64, f64::max);
        (d_max, w_max)
    }

    /// Largest row sum of the reaction Jacobian over the cells; zero when
    /// reactions are off.
    pub fn reaction_rate(&self, u: &[f64], v: &[f64]) -> f64 {
        if !self.reactions {
            return 0.0;
        }
        let k = self.kinetics;
        let (gamma, theta, alpha) = (k.gamma(), k.theta(), k.alpha());
        u.iter()
            .zip(v)
            .map(|(&u, &v)| {
                let f = k.response(v);
                let df = k.response_deriv(v);
                let pred = (gamma * f - theta - 2.0 * alpha * u).abs() + (gamma * u * df).abs();
                let prey = f.abs() + (k.growth_deriv(v) - u * df).abs();
                pred.max(prey)
            })
            .fold(0.0, f64::max)
    }

    /// Face motilities `d(v_{i+1/2})` at the `n - 1` interior faces.
    pub fn face_motility(&self, v: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(v.windows(2).map(|w| self.motility.motility(0.5 * (w[0] + w[1]))));
    }
}

/// Applies the Neumann diffusion operator with face coefficients `w`
/// (length `n - 1`): `(L x)_i = (w_{i+1/2}(x_{i+1}-x_i) - w_{i-1/2}(x_i-x_{i-1})) / h^2`.
pub(crate) fn apply_diffusion(w: &[f64], h: f64, x: &[f64], out: &mut [f64]) {
    let inv_h2 = 1.0 / (h * h);
    out.fill(0.0);
    for i in 0..x.len() - 1 {
        let f = w[i] * (x[i + 1] - x[i]) * inv_h2;
        out[i] += f;
        out[i + 1] -= f;
    }
}

/// Solves `(I - c L) x = rhs` for the tridiagonal Neumann operator of
/// [`apply_diffusion`] (Thomas algorithm; the matrix is diagonally dominant).
pub(crate) fn solve_implicit(
    w: &[f64],
    h: f64,
    c: f64,
    rhs: &[f64],
    x: &mut [f64],
    scratch: &mut Vec<f64>,
) {
    let n = rhs.len();
    let s = c / (h * h);
    let lower = |i: usize| -s * w[i - 1]; // coefficient of x_{i-1} in row i
    let upper = |i: usize| -s * w[i]; // coefficient of x_{i+1} in row i
    let diag = |i: usize| {
        let left = if i > 0 { w[i - 1] } else { 0.0 };
        let right = if i + 1 < n { w[i] } else { 0.0 };
        1.0 + s * (left + right)
    };
    scratch.clear();
    scratch.resize(n, 0.0);
    let mut denom = diag(0);
    scratch[0] = if n > 1 { upper(0) / denom } else { 0.0 };
    x[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag(i) - lower(i) * scratch[i - 1];
        if i + 1 < n {
            scratch[i] = upper(i) / denom;
        }
        x[i] = (rhs[i] - lower(i) * x[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        x[i] -= scratch[i] * x[i + 1];
    }
}

/// Semi-discrete right-hand side `(du/dt, dv/dt)`.
pub fn rhs(state: &State, cfg: &SolverConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = cfg.grid.n_cells();
    if state.u.len() != n || state.v.len() != n {
        return Err(Error::param("state", format!("expected {n} cells")));
    }
    if !state.is_finite() {
        return Err(Error::Domain(format!("non-finite state at t = {}", state.t)));
    }
    let mut du = vec![0.0; n];
    let mut dv = vec![0.0; n];
    Discretization::new(cfg).rhs_into(&state.u, &state.v, &mut du, &mut dv);
    Ok((du, dv))
}

/// Explicit step size
/// `cfl * min(h^2 / (2 max(d_max, D)), h / w_max)`, capped by the output
/// interval and `max_dt`.
pub fn stable_dt(state: &State, cfg: &SolverConfig) -> f64 {
    let disc = Discretization::new(cfg);
    let (d_max, w_max) = disc.transport_speeds(&state.v);
    explicit_dt(cfg, disc.h, d_max, w_max)
}

pub(crate) fn explicit_dt(cfg: &SolverConfig, h: f64, d_max: f64, w_max: f64) -> f64 {
    let diffusive = h * h / (2.0 * d_max.max(cfg.diffusivity));
    let advective = h / (w_max + 1e-300);
    cap(cfg, cfg.cfl_safety * diffusive.min(advective))
}

/// `cfl * min(h / w_max, 1 / r_max)` with `r_max` from
/// [`Discretization::reaction_rate`]; diffusion does not limit the step.
pub(crate) fn imex_dt(cfg: &SolverConfig, h: f64, w_max: f64, r_max: f64) -> f64 {
    let advective = h / (w_max + 1e-300);
    let reactive = 1.0 / (r_max + 1e-300);
    cap(cfg, cfg.cfl_safety * advective.min(reactive))
}

fn cap(cfg: &SolverConfig, dt: f64) -> f64 {
    let mut dt = dt.min(cfg.output_interval);
    if let Some(m) = cfg.max_dt {
        dt = dt.min(m);
    }
    dt
}
