//! Conservative finite-volume method of lines on `[0, ell]` with homogeneous
//! Neumann boundaries.
//!
//! Cells are uniform, unknowns live at cell centres `x_i = (i + 1/2) h`.
//! Face coefficients use arithmetic means of the neighbouring cells and the
//! taxis flux is centrally differenced, so the scheme is second order in
//! space. Boundary faces carry zero flux, which makes `h * sum(u)` change only
//! through the reaction terms.

mod discretization;
mod integrate;

pub use discretization::{rhs, stable_dt, Discretization};
pub use integrate::{integrate, integrate_from, TimeseriesRow, Trajectory};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Equilibrium, KineticsModel, MotilityModel};
use crate::{Error, Result};

/// Name of the generator behind [`init_state`], for run manifests.
pub const PRNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.9, seed_from_u64)";

/// Fields larger than this abort the run.
pub const BLOWUP_LIMIT: f64 = 1e6;

/// Densities below this abort the run as a scheme failure.
pub const NEGATIVITY_LIMIT: f64 = -1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    length: f64,
    n_cells: usize,
}

impl Grid1D {
    pub fn new(length: f64, n_cells: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::param("length", format!("must be > 0, got {length}")));
        }
        if n_cells < 8 {
            return Err(Error::param("n_cells", format!("must be >= 8, got {n_cells}")));
        }
        Ok(Grid1D { length, n_cells })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn h(&self) -> f64 {
        self.length / self.n_cells as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        let h = self.h();
        (0..self.n_cells).map(|i| (i as f64 + 0.5) * h).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl State {
    pub fn homogeneous(t: f64, n: usize, u: f64, v: f64) -> Self {
        State {
            t,
            u: vec![u; n],
            v: vec![v; n],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    ExplicitRk4,
    /// Second-order ARS(2,2,2) with implicit diffusion frozen at the start of
    /// each step; all other terms stay explicit.
    Imex,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::ExplicitRk4 => "rk4",
            Scheme::Imex => "imex",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BaseState {
    Equilibrium(Equilibrium),
    Arrays { u: Vec<f64>, v: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    /// Relative amplitude.
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for Perturbation {
    fn default() -> Self {
        Perturbation {
            epsilon: 0.01,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub kinetics: KineticsModel,
    pub motility: MotilityModel,
    pub diffusivity: f64,
    pub grid: Grid1D,
    pub scheme: Scheme,
    pub cfl_safety: f64,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
    /// Spacing of timeseries rows; also caps the time step.
    pub output_interval: f64,
    /// Optional extra cap on the time step.
    pub max_dt: Option<f64>,
    pub perturbation: Perturbation,
    pub base: BaseState,
    /// `false` switches the reaction terms off (pure transport).
    pub reactions: bool,
}

impl SolverConfig {
    /// Defaults: RK4, `cfl_safety = 0.4`, 200 snapshots and 2000 timeseries
    /// rows evenly spaced over `[0, t_end]`, `epsilon = 0.01`, seed 42.
    pub fn new(
        kinetics: KineticsModel,
        motility: MotilityModel,
        diffusivity: f64,
        grid: Grid1D,
        base: BaseState,
        t_end: f64,
    ) -> Self {
        SolverConfig {
            kinetics,
            motility,
            diffusivity,
            grid,
            scheme: Scheme::ExplicitRk4,
            cfl_safety: 0.4,
            t_end,
            snapshot_times: even_times(t_end, 200),
            output_interval: t_end / 2000.0,
            max_dt: None,
            perturbation: Perturbation::default(),
            base,
            reactions: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::param("t_end", format!("must be > 0, got {}", self.t_end)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::param(
                "cfl_safety",
                format!("must lie in (0, 1], got {}", self.cfl_safety),
            ));
        }
        if !(self.diffusivity.is_finite() && self.diffusivity > 0.0) {
            return Err(Error::param("D", format!("must be > 0, got {}", self.diffusivity)));
        }
        if !(self.output_interval.is_finite() && self.output_interval > 0.0) {
            return Err(Error::param(
                "output_interval",
                format!("must be > 0, got {}", self.output_interval),
            ));
        }
        if let Some(m) = self.max_dt {
            if !(m > 0.0) {
                return Err(Error::param("max_dt", format!("must be > 0, got {m}")));
            }
        }
        let eps = self.perturbation.epsilon;
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::param("epsilon", format!("must be >= 0, got {eps}")));
        }
        if let Some(t) = self.snapshot_times.iter().find(|&&t| !(0.0..=self.t_end).contains(&t)) {
            return Err(Error::param("snapshot_times", format!("{t} outside [0, t_end]")));
        }
        if let BaseState::Arrays { u, v } = &self.base {
            let n = self.grid.n_cells();
            if u.len() != n || v.len() != n {
                return Err(Error::param(
                    "base",
                    format!("arrays must have {n} entries, got {} and {}", u.len(), v.len()),
                ));
            }
            if u.iter().chain(v).any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::param("base", "arrays must be finite and nonnegative"));
            }
        }
        Ok(())
    }

    /// Unperturbed base fields.
    pub fn base_arrays(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.grid.n_cells();
        match &self.base {
            BaseState::Equilibrium(eq) => (vec![eq.u; n], vec![eq.v; n]),
            BaseState::Arrays { u, v } => (u.clone(), v.clone()),
        }
    }
}

/// `count` times evenly spaced over `[0, t_end]`, both ends included.
pub fn even_times(t_end: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![t_end],
        _ => (0..count)
            .map(|i| t_end * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Initial state: each base value `b` becomes `b (1 + eps xi)` with `xi`
/// uniform on `[-1, 1]`; zero base values get the additive, nonnegative
/// perturbation `eps K (1 + xi) / 2` instead. All `u` draws precede the `v`
/// draws.
pub fn init_state(cfg: &SolverConfig) -> Result<State> {
    cfg.validate()?;
    let (mut u, mut v) = cfg.base_arrays();
    let eps = cfg.perturbation.epsilon;
    if eps > 0.0 {
        let floor = eps * cfg.kinetics.capacity();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.perturbation.seed);
        for field in [&mut u, &mut v] {
            for x in field.iter_mut() {
                let xi: f64 = rng.random_range(-1.0..=1.0);
                if *x == 0.0 {
                    *x = 0.5 * floor * (1.0 + xi);
                } else {
                    *x *= 1.0 + eps * xi;
                }
            }
        }
    }
    Ok(State { t: 0.0, u, v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::compute_equilibria;

    fn case1(eps: f64, seed: u64) -> SolverConfig {
        let kin = KineticsModel::pattern_cases();
        let eq = compute_equilibria(&kin).unwrap().coexistence.unwrap();
        let grid = Grid1D::new(8.0 * std::f64::consts::PI, 64).unwrap();
        let mut cfg = SolverConfig::new(kin, MotilityModel::d1(), 0.1, grid, BaseState::Equilibrium(eq), 1.0);
        cfg.perturbation = Perturbation { epsilon: eps, seed };
        cfg
    }

    #[test]
    fn zero_amplitude_reproduces_base() {
        let s = init_state(&case1(0.0, 7)).unwrap();
        assert!(s.u.iter().all(|&x| x == 1.5));
        assert!(s.v.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn seeded_perturbation_is_deterministic() {
        let a = init_state(&case1(0.01, 42)).unwrap();
        let b = init_state(&case1(0.01, 42)).unwrap();
        assert_eq!(a, b);
        let c = init_state(&case1(0.01, 43)).unwrap();
        assert_ne!(a.u, c.u);
    }

    #[test]
    fn amplitude_bound() {
        let s = init_state(&case1(0.01, 42)).unwrap();
        assert!(s.u.iter().all(|&x| (x - 1.5).abs() <= 0.015));
        assert!(s.v.iter().all(|&x| (x - 1.0).abs() <= 0.01));
    }

    #[test]
    fn zero_components_get_additive_floor() {
        let kin = KineticsModel::rosenzweig_macarthur(1.0, 1.0, 0.0, 1.0, 4.0, 1.0).unwrap();
        let eq = compute_equilibria(&kin).unwrap().prey_only;
        let grid = Grid1D::new(10.0, 32).unwrap();
        let cfg = SolverConfig::new(kin, MotilityModel::d1(), 0.1, grid, BaseState::Equilibrium(eq), 1.0);
        let s = init_state(&cfg).unwrap();
        assert!(s.u.iter().all(|&x| (0.0..=0.04).contains(&x)));
        assert!(s.u.iter().any(|&x| x > 0.0));
    }

    #[test]
    fn grid_validation() {
        assert!(Grid1D::new(1.0, 7).is_err());
        assert!(Grid1D::new(0.0, 64).is_err());
        let g = Grid1D::new(1.0, 10).unwrap();
        assert!((g.centers()[0] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let mut cfg = case1(0.01, 1);
        cfg.t_end = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = case1(-0.1, 1);
        assert!(cfg.validate().is_err());
        cfg.perturbation.epsilon = 0.0;
        cfg.cfl_safety = 1.5;
        assert!(cfg.validate().is_err());
    }
}
