use log::warn;

use super::discretization::{apply_diffusion, explicit_dt, imex_dt, solve_implicit, Discretization};
use super::{init_state, Grid1D, Scheme, SolverConfig, State, BLOWUP_LIMIT, NEGATIVITY_LIMIT};
use crate::diagnostics::{lyapunov_v1, lyapunov_v2};
use crate::model::{compute_equilibria, Equilibrium};
use crate::{Error, Result};

/// Scalar diagnostics recorded at every output time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeseriesRow {
    pub t: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub min_v: f64,
    pub max_v: f64,
    /// `||u - u_base||_{L^2}`.
    pub l2_dev_u: f64,
    pub l2_dev_v: f64,
    /// Spatial standard deviation of `u`.
    pub std_u: f64,
    pub std_v: f64,
    /// Prey-only Lyapunov functional, when every `v_i > 0`.
    pub v1: Option<f64>,
    /// Coexistence Lyapunov functional, when the state exists and `u, v > 0`.
    pub v2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: Grid1D,
    pub snapshots: Vec<State>,
    pub timeseries: Vec<TimeseriesRow>,
    /// Accepted time steps.
    pub steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> Option<&State> {
        self.snapshots.last()
    }
}

fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| (lo.min(y), hi.max(y)))
}

struct Recorder<'a> {
    cfg: &'a SolverConfig,
    base_u: Vec<f64>,
    base_v: Vec<f64>,
    coexistence: Option<Equilibrium>,
}

impl Recorder<'_> {
    fn row(&self, s: &State) -> TimeseriesRow {
        let grid = &self.cfg.grid;
        let h = grid.h();
        let (min_u, max_u) = min_max(&s.u);
        let (min_v, max_v) = min_max(&s.v);
        let l2 = |x: &[f64], b: &[f64]| {
            (h * x.iter().zip(b).map(|(x, b)| (x - b) * (x - b)).sum::<f64>()).sqrt()
        };
        let kin = &self.cfg.kinetics;
        let (v1, v2) = if self.cfg.reactions {
            let v1 = if min_v > 0.0 {
                lyapunov_v1(s, grid, kin).ok()
            } else {
                None
            };
            let v2 = match &self.coexistence {
                Some(eq) if min_u > 0.0 && min_v > 0.0 => lyapunov_v2(s, grid, kin, eq).ok(),
                _ => None,
            };
            (v1, v2)
        } else {
            (None, None)
        };
        TimeseriesRow {
            t: s.t,
            mass_u: h * s.u.iter().sum::<f64>(),
            mass_v: h * s.v.iter().sum::<f64>(),
            min_u,
            max_u,
            min_v,
            max_v,
            l2_dev_u: l2(&s.u, &self.base_u),
            l2_dev_v: l2(&s.v, &self.base_v),
            std_u: mean_std(&s.u).1,
            std_v: mean_std(&s.v).1,
            v1,
            v2,
        }
    }
}

/// Work arrays for one integration.
struct Stepper {
    n: usize,
    k: [Vec<f64>; 8],
    tmp_u: Vec<f64>,
    tmp_v: Vec<f64>,
    faces: Vec<f64>,
    faces_v: Vec<f64>,
    scratch: Vec<f64>,
}

impl Stepper {
    fn new(n: usize) -> Self {
        Stepper {
            n,
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp_u: vec![0.0; n],
            tmp_v: vec![0.0; n],
            faces: Vec::with_capacity(n),
            faces_v: Vec::with_capacity(n),
            scratch: Vec::with_capacity(n),
        }
    }

    fn rk4(&mut self, disc: &Discretization, s: &mut State, dt: f64) {
        let n = self.n;
        let [k1u, k1v, k2u, k2v, k3u, k3v, k4u, k4v] = &mut self.k;
        let (tu, tv) = (&mut self.tmp_u, &mut self.tmp_v);
        disc.rhs_into(&s.u, &s.v, k1u, k1v);
        for i in 0..n {
            tu[i] = s.u[i] + 0.5 * dt * k1u[i];
            tv[i] = s.v[i] + 0.5 * dt * k1v[i];
        }
        disc.rhs_into(tu, tv, k2u, k2v);
        for i in 0..n {
            tu[i] = s.u[i] + 0.5 * dt * k2u[i];
            tv[i] = s.v[i] + 0.5 * dt * k2v[i];
        }
        disc.rhs_into(tu, tv, k3u, k3v);
        for i in 0..n {
            tu[i] = s.u[i] + dt * k3u[i];
            tv[i] = s.v[i] + dt * k3v[i];
        }
        disc.rhs_into(tu, tv, k4u, k4v);
        let c = dt / 6.0;
        for i in 0..n {
            s.u[i] += c * (k1u[i] + 2.0 * (k2u[i] + k3u[i]) + k4u[i]);
            s.v[i] += c * (k1v[i] + 2.0 * (k2v[i] + k3v[i]) + k4v[i]);
        }
        s.t += dt;
    }

    /// ARS(2,2,2): L-stable, second order, stiffly accurate. The implicit
    /// operator is diffusion frozen at the step start; the explicit part is
    /// `F(y) - L_n y`, so the splitting error stays second order.
    fn imex(&mut self, disc: &Discretization, s: &mut State, dt: f64) {
        let n = self.n;
        let h = disc.h;
        let g = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
        let delta = 1.0 - 1.0 / (2.0 * g);
        disc.face_motility(&s.v, &mut self.faces);
        self.faces_v.clear();
        self.faces_v.resize(n - 1, disc.diffusivity);
        let (faces, faces_v, scratch) = (&self.faces, &self.faces_v, &mut self.scratch);
        let [e1u, e1v, y2u, y2v, e2u, e2v, l2u, l2v] = &mut self.k;
        let (tu, tv) = (&mut self.tmp_u, &mut self.tmp_v);

        // E1 = F(y) - L y
        disc.rhs_into(&s.u, &s.v, e1u, e1v);
        apply_diffusion(faces, h, &s.u, tu);
        apply_diffusion(faces_v, h, &s.v, tv);
        for i in 0..n {
            e1u[i] -= tu[i];
            e1v[i] -= tv[i];
            tu[i] = s.u[i] + dt * g * e1u[i];
            tv[i] = s.v[i] + dt * g * e1v[i];
        }
        // (I - g dt L) Y2 = y + g dt E1
        solve_implicit(faces, h, g * dt, tu, y2u, scratch);
        solve_implicit(faces_v, h, g * dt, tv, y2v, scratch);
        apply_diffusion(faces, h, y2u, l2u);
        apply_diffusion(faces_v, h, y2v, l2v);
        disc.rhs_into(y2u, y2v, e2u, e2v);
        for i in 0..n {
            e2u[i] -= l2u[i];
            e2v[i] -= l2v[i];
            tu[i] = s.u[i] + dt * (delta * e1u[i] + (1.0 - delta) * e2u[i] + (1.0 - g) * l2u[i]);
            tv[i] = s.v[i] + dt * (delta * e1v[i] + (1.0 - delta) * e2v[i] + (1.0 - g) * l2v[i]);
        }
        solve_implicit(faces, h, g * dt, tu, &mut s.u, scratch);
        solve_implicit(faces_v, h, g * dt, tv, &mut s.v, scratch);
        s.t += dt;
    }
}

#[derive(Debug, Clone, Copy)]
struct Event {
    t: f64,
    output: bool,
    snapshot: bool,
}

fn event_times(cfg: &SolverConfig) -> Vec<Event> {
    let mut events: Vec<Event> = Vec::new();
    let n_out = (cfg.t_end / cfg.output_interval).floor() as usize;
    for k in 0..=n_out {
        events.push(Event {
            t: k as f64 * cfg.output_interval,
            output: true,
            snapshot: false,
        });
    }
    events.push(Event {
        t: cfg.t_end,
        output: true,
        snapshot: false,
    });
    for &t in &cfg.snapshot_times {
        events.push(Event {
            t,
            output: false,
            snapshot: true,
        });
    }
    events.sort_by(|a, b| a.t.total_cmp(&b.t));
    let merge_tol = 1e-9 * cfg.output_interval.min(cfg.t_end);
    let mut merged: Vec<Event> = Vec::with_capacity(events.len());
    for e in events {
        match merged.last_mut() {
            Some(last) if (e.t - last.t).abs() <= merge_tol => {
                last.output |= e.output;
                last.snapshot |= e.snapshot;
                // Prefer the exact requested endpoint.
                if e.t == cfg.t_end {
                    last.t = e.t;
                }
            }
            _ => merged.push(e),
        }
    }
    merged
}

fn check_state(s: &State) -> Option<(String, bool, &'static str, f64)> {
    let mut min_u = f64::INFINITY;
    let mut min_v = f64::INFINITY;
    for (&u, &v) in s.u.iter().zip(&s.v) {
        if !(u.is_finite() && v.is_finite()) {
            return Some(("non-finite value".into(), true, "", 0.0));
        }
        if u.abs() > BLOWUP_LIMIT || v.abs() > BLOWUP_LIMIT {
            return Some((format!("|field| exceeds {BLOWUP_LIMIT:e}"), true, "", 0.0));
        }
        min_u = min_u.min(u);
        min_v = min_v.min(v);
    }
    if min_u < NEGATIVITY_LIMIT {
        return Some((String::new(), false, "u", min_u));
    }
    if min_v < NEGATIVITY_LIMIT {
        return Some((String::new(), false, "v", min_v));
    }
    None
}

/// Integrates from [`init_state`] to `t_end`.
///
/// Steps land exactly on every output and snapshot time, so snapshots are
/// taken at completed steps without interpolation. The step size is
/// recomputed before every step.
pub fn integrate(cfg: &SolverConfig) -> Result<Trajectory> {
    let state = init_state(cfg)?;
    integrate_from(cfg, state)
}

/// Same as [`integrate`] starting from an explicit state at `t = 0`.
pub fn integrate_from(cfg: &SolverConfig, mut state: State) -> Result<Trajectory> {
    cfg.validate()?;
    let n = cfg.grid.n_cells();
    if state.u.len() != n || state.v.len() != n {
        return Err(Error::param("state", format!("expected {n} cells")));
    }
    if cfg.kinetics.alpha() == 0.0 && !cfg.motility.chi_is_minus_dprime() {
        warn!("alpha = 0 and chi != -d': global boundedness is not guaranteed for this configuration");
    }
    let (base_u, base_v) = cfg.base_arrays();
    let coexistence = compute_equilibria(&cfg.kinetics)
        .ok()
        .and_then(|set| set.coexistence);
    let recorder = Recorder {
        cfg,
        base_u,
        base_v,
        coexistence,
    };
    let disc = Discretization::new(cfg);
    let mut stepper = Stepper::new(n);
    let mut traj = Trajectory {
        grid: cfg.grid,
        snapshots: Vec::new(),
        timeseries: Vec::new(),
        steps: 0,
    };

    for event in event_times(cfg) {
        while state.t < event.t {
            let (d_max, w_max) = disc.transport_speeds(&state.v);
            let mut dt = match cfg.scheme {
                Scheme::ExplicitRk4 => explicit_dt(cfg, disc.h, d_max, w_max),
                Scheme::Imex => imex_dt(cfg, disc.h, w_max, disc.reaction_rate(&state.u, &state.v)),
            };
            let remaining = event.t - state.t;
            if dt >= remaining || remaining - dt <= 1e-10 * dt {
                dt = remaining;
            }
            match cfg.scheme {
                Scheme::ExplicitRk4 => stepper.rk4(&disc, &mut state, dt),
                Scheme::Imex => stepper.imex(&disc, &mut state, dt),
            }
            if dt == remaining {
                state.t = event.t;
            }
            traj.steps += 1;
            if let Some((reason, blowup, field, min)) = check_state(&state) {
                let t = state.t;
                traj.snapshots.push(state);
                return Err(if blowup {
                    Error::BlowUp {
                        t,
                        reason,
                        partial: Box::new(traj),
                    }
                } else {
                    Error::NonPhysical {
                        t,
                        field,
                        min,
                        partial: Box::new(traj),
                    }
                });
            }
        }
        if event.output {
            traj.timeseries.push(recorder.row(&state));
        }
        if event.snapshot {
            traj.snapshots.push(state.clone());
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{KineticsModel, MotilityModel};
    use crate::solver::{BaseState, Perturbation};

    fn small_cfg(scheme: Scheme) -> SolverConfig {
        let kin = KineticsModel::pattern_cases();
        let eq = compute_equilibria(&kin).unwrap().coexistence.unwrap();
        let mut cfg = SolverConfig::new(
            kin,
            MotilityModel::d1(),
            0.1,
            Grid1D::new(8.0 * std::f64::consts::PI, 32).unwrap(),
            BaseState::Equilibrium(eq),
            2.0,
        );
        cfg.scheme = scheme;
        cfg.snapshot_times = vec![0.0, 0.5, 1.3, 2.0];
        cfg.output_interval = 0.1;
        cfg
    }

    #[test]
    fn events_hit_requested_times() {
        let traj = integrate(&small_cfg(Scheme::ExplicitRk4)).unwrap();
        let ts: Vec<f64> = traj.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(ts.len(), 4);
        for (a, b) in ts.iter().zip([0.0, 0.5, 1.3, 2.0]) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert_eq!(traj.timeseries.len(), 21);
        assert!(traj.timeseries.windows(2).all(|w| w[1].t > w[0].t));
        assert_eq!(traj.timeseries.last().unwrap().t, 2.0);
    }

    #[test]
    fn imex_runs_and_records_lyapunov() {
        let traj = integrate(&small_cfg(Scheme::Imex)).unwrap();
        assert!(traj.timeseries.iter().all(|r| r.v1.is_some() && r.v2.is_some()));
    }

    #[test]
    fn blowup_is_reported_with_partial_output() {
        let mut cfg = small_cfg(Scheme::ExplicitRk4);
        cfg.base = BaseState::Arrays {
            u: vec![1.5; 32],
            v: vec![1.0; 32],
        };
        cfg.perturbation = Perturbation { epsilon: 0.0, seed: 1 };
        let mut state = init_state(&cfg).unwrap();
        state.u[5] = 2e6;
        match integrate_from(&cfg, state) {
            Err(Error::BlowUp { partial, .. }) => assert_eq!(partial.snapshots.len(), 2),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }
}
