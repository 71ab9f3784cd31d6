//! Subcommand implementations. Each one fills a [`RunDir`] and returns the
//! error that decides the exit code, if any.

use log::info;
use rayon::prelude::*;
use serde_json::json;

use preytaxis_core::diagnostics::{classify_pattern, decay_fit, DecayFit, PatternClass, DEFAULT_TAIL_FRACTION};
use preytaxis_core::linstab::{
    beta_coefficients, bifurcation_curves, dispersion, interval_spectrum, linearize, mode_cutoff,
    stability_cutoff, steady_threshold_diffusivity, unstable_modes, BetaCoefficients, LinearizedSystem, Mode,
    StabilityClass,
};
use preytaxis_core::model::{
    check_hypotheses, compute_equilibria, global_stability_report, Equilibrium, HypothesisStatus, KineticsKind,
    KineticsModel, MotilityModel, Regime,
};
use preytaxis_core::solver::{
    even_times, init_state, integrate_from, BaseState, Grid1D, Perturbation, SolverConfig, Trajectory,
};

use crate::config::{BaseChoice, RunConfig};
use crate::error::CliError;
use crate::output::{fmt_f64, text_cell, Csv, RunDir};

/// Points in the hypothesis sampling grid.
const HYPOTHESIS_SAMPLES: usize = 2001;

/// Dispersion grid extends this far past the largest unstable wavenumber.
const K_GRID_STRETCH: f64 = 1.5;

struct Model {
    kin: KineticsModel,
    mot: MotilityModel,
}

fn load_model(cfg: &RunConfig) -> Result<Model, CliError> {
    Ok(Model {
        kin: cfg.kinetics()?,
        mot: cfg.motility()?,
    })
}

fn coexistence(model: &Model) -> Result<Equilibrium, CliError> {
    compute_equilibria(&model.kin)?.coexistence.ok_or_else(|| {
        CliError::NoEquilibrium(format!(
            "gamma F(K) = {} does not exceed theta = {}",
            model.kin.gamma_f_capacity(),
            model.kin.theta()
        ))
    })
}

/// Closed-form betas exist only for Rosenzweig-MacArthur with `alpha = 0`.
fn betas(model: &Model, eq: &Equilibrium) -> Option<BetaCoefficients> {
    let rm = matches!(model.kin.kind(), KineticsKind::RosenzweigMacArthur);
    (rm && model.kin.alpha() == 0.0)
        .then(|| beta_coefficients(&model.kin, &model.mot, eq).ok())
        .flatten()
}

fn beta_json(b: &BetaCoefficients) -> serde_json::Value {
    json!({"beta1": b.beta1, "beta2": b.beta2, "beta3": b.beta3})
}

fn equilibrium_json(eq: &Equilibrium) -> serde_json::Value {
    json!({"kind": eq.kind.as_str(), "u": eq.u, "v": eq.v, "residual": eq.residual})
}

fn hypothesis_json(status: &HypothesisStatus) -> serde_json::Value {
    match status {
        HypothesisStatus::Holds => json!("holds"),
        HypothesisStatus::Fails(v) => json!({
            "fails": {"witness": v.witness, "inequality": v.inequality, "value": v.value}
        }),
        HypothesisStatus::NotChecked(reason) => json!({"not_checked": reason}),
    }
}

fn record_hypotheses(run: &mut RunDir, model: &Model) {
    let v_max = model.kin.capacity();
    if let Ok(h) = check_hypotheses(&model.kin, &model.mot, v_max, HYPOTHESIS_SAMPLES) {
        run.record(
            "hypotheses",
            json!({
                "v_max": h.v_max,
                "samples": h.n_samples,
                "h1": hypothesis_json(&h.h1),
                "h2": hypothesis_json(&h.h2),
                "h3": hypothesis_json(&h.h3),
                "h4": hypothesis_json(&h.h4),
            }),
        );
    }
}

pub fn equilibria(cfg: &RunConfig, run: &mut RunDir) -> Result<(), CliError> {
    let model = load_model(cfg)?;
    let set = compute_equilibria(&model.kin)?;
    let mut csv = Csv::new(&["kind", "u", "v", "residual"]);
    for eq in set.all() {
        csv.row(&[eq.kind.as_str().into(), fmt_f64(eq.u), fmt_f64(eq.v), fmt_f64(eq.residual)]);
    }
    run.write_csv("equilibria.csv", &csv)?;
    run.record("gamma_f_capacity", model.kin.gamma_f_capacity());
    run.record("coexistence", set.coexistence.as_ref().map(equilibrium_json));
    record_hypotheses(run, &model);
    Ok(())
}

fn stability_class_counts(modes: &[Mode]) -> (usize, usize) {
    let hopf = modes.iter().filter(|m| m.class() == StabilityClass::HopfUnstable).count();
    let steady = modes.iter().filter(|m| m.class() == StabilityClass::SteadyUnstable).count();
    (hopf, steady)
}

pub fn dispersion_cmd(cfg: &RunConfig, run: &mut RunDir) -> Result<(), CliError> {
    let model = load_model(cfg)?;
    let eq = coexistence(&model)?;
    let sys = linearize(&model.kin, &model.mot, cfg.analysis.diffusivity, &eq)?;
    let ell = cfg.ell();
    let n_max = cfg.analysis.n_max.unwrap_or_else(|| mode_cutoff(&sys, ell));
    let k_max = cfg.analysis.k_max.unwrap_or_else(|| default_k_max(&sys, ell, n_max));
    if !(k_max > 0.0) {
        return Err(CliError::Config(format!("[analysis] k_max must be > 0, got {k_max}")));
    }

    let mut csv = Csv::new(&["k", "a", "b", "delta", "re_rho1", "im_rho1", "re_rho2", "im_rho2", "class"]);
    let count = cfg.analysis.k_count;
    for i in 0..count {
        let k = k_max * i as f64 / (count - 1) as f64;
        let p = dispersion(&sys, k);
        csv.row(&[
            fmt_f64(p.k),
            fmt_f64(p.a),
            fmt_f64(p.b),
            fmt_f64(p.delta),
            fmt_f64(p.rho[0].re),
            fmt_f64(p.rho[0].im),
            fmt_f64(p.rho[1].re),
            fmt_f64(p.rho[1].im),
            p.class.as_str().into(),
        ]);
    }
    run.write_csv("dispersion.csv", &csv)?;

    let spectrum = interval_spectrum(&sys, ell, n_max);
    let mut modes = Csv::new(&["n", "k", "class"]);
    for m in &spectrum {
        modes.row(&[m.n.to_string(), fmt_f64(m.k()), m.class().as_str().into()]);
    }
    run.write_csv("modes.csv", &modes)?;

    let unstable: Vec<usize> = spectrum
        .iter()
        .filter(|m| m.class() != StabilityClass::Stable)
        .map(|m| m.n)
        .collect();
    let (hopf, steady) = stability_class_counts(&spectrum);
    run.record("equilibrium", equilibrium_json(&eq));
    run.record("D", cfg.analysis.diffusivity);
    run.record("ell", ell);
    run.record("n_max", n_max);
    run.record("unstable_modes", &unstable);
    run.record("n_unstable_hopf", hopf);
    run.record("n_unstable_steady", steady);
    run.record("betas", betas(&model, &eq).as_ref().map(beta_json));
    Ok(())
}

fn default_k_max(sys: &LinearizedSystem, ell: f64, n_max: usize) -> f64 {
    let modes = n_max as f64 * std::f64::consts::PI / ell;
    (K_GRID_STRETCH * stability_cutoff(sys).sqrt()).max(modes)
}

pub fn bifurcation(cfg: &RunConfig, run: &mut RunDir) -> Result<(), CliError> {
    let model = load_model(cfg)?;
    let eq = coexistence(&model)?;
    let a = &cfg.analysis;
    let eta: Vec<f64> = (0..a.eta_count)
        .map(|i| a.eta_min + (a.eta_max - a.eta_min) * i as f64 / (a.eta_count - 1) as f64)
        .collect();
    let curves = bifurcation_curves(&model.kin, &model.mot, &eq, &eta)?;
    let mut csv = Csv::new(&["eta", "D_H", "D_S"]);
    for i in 0..eta.len() {
        csv.row(&[fmt_f64(curves.eta[i]), fmt_f64(curves.d_hopf[i]), fmt_f64(curves.d_steady[i])]);
    }
    run.write_csv("curves.csv", &csv)?;

    // b(D_S(eta), eta) should vanish; report the worst row relative to the
    // size of the terms it cancels.
    let sys = linearize(&model.kin, &model.mot, 1.0, &eq)?;
    let mut worst: Option<(f64, f64, f64)> = None;
    for (&e, &ds) in curves.eta.iter().zip(&curves.d_steady) {
        if !(ds.is_finite() && ds > 0.0) {
            continue;
        }
        let b = sys.with_diffusivity(ds).det_coeff(e).abs();
        let jac = &sys.jacobian;
        let scale = (sys.d_star() * ds * e * e).abs()
            + ((sys.d_star() * jac[1][1] + sys.taxis_strength() * jac[1][0] + jac[0][0] * ds) * e).abs()
            + (jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0]).abs();
        let rel = b / scale.max(f64::MIN_POSITIVE);
        if worst.is_none_or(|w| rel > w.2) {
            worst = Some((e, b, rel));
        }
    }
    run.record(
        "identity_check",
        worst.map(|(e, b, rel)| json!({"eta": e, "abs_b": b, "relative": rel})),
    );

    let beta = betas(&model, &eq);
    let threshold = match &beta {
        Some(b) if b.beta2 > 0.0 => steady_threshold_diffusivity(b, sys.d_star())?,
        _ => None,
    };
    run.record("equilibrium", equilibrium_json(&eq));
    run.record("betas", beta.as_ref().map(beta_json));
    run.record("steady_threshold_D", threshold);
    Ok(())
}

/// Builds the solver configuration for prey diffusivity `diffusivity`.
fn solver_config(cfg: &RunConfig, model: &Model, diffusivity: f64) -> Result<SolverConfig, CliError> {
    let set = compute_equilibria(&model.kin)?;
    let base = match cfg.solver.base {
        BaseChoice::Coexistence => set.coexistence.ok_or_else(|| {
            CliError::NoEquilibrium("base = coexistence but no coexistence state exists".into())
        })?,
        BaseChoice::PreyOnly => set.prey_only,
        BaseChoice::Auto => set.coexistence.unwrap_or(set.prey_only),
    };
    let grid = Grid1D::new(cfg.length, cfg.n_cells).map_err(|e| CliError::Config(e.to_string()))?;
    let s = &cfg.solver;
    let mut sc = SolverConfig::new(
        model.kin.clone(),
        model.mot.clone(),
        diffusivity,
        grid,
        BaseState::Equilibrium(base),
        s.t_end,
    );
    sc.scheme = s.scheme;
    sc.cfl_safety = s.cfl_safety;
    sc.snapshot_times = even_times(s.t_end, s.snapshot_count);
    sc.output_interval = s.t_end / s.output_count as f64;
    sc.perturbation = Perturbation {
        epsilon: s.epsilon,
        seed: s.seed,
    };
    sc.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(sc)
}

fn write_trajectory(run: &mut RunDir, traj: &Trajectory) -> Result<(), CliError> {
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    let mut ts = Csv::new(&[
        "t", "mass_u", "mass_v", "min_u", "max_u", "min_v", "max_v", "l2_dev_u", "l2_dev_v", "V1", "V2",
    ]);
    for r in &traj.timeseries {
        ts.row(&[
            fmt_f64(r.t),
            fmt_f64(r.mass_u),
            fmt_f64(r.mass_v),
            fmt_f64(r.min_u),
            fmt_f64(r.max_u),
            fmt_f64(r.min_v),
            fmt_f64(r.max_v),
            fmt_f64(r.l2_dev_u),
            fmt_f64(r.l2_dev_v),
            opt(r.v1),
            opt(r.v2),
        ]);
    }
    run.write_csv("timeseries.csv", &ts)?;

    let x = traj.grid.centers();
    let mut snaps = Csv::new(&["t", "x", "u", "v"]);
    for s in &traj.snapshots {
        let t = fmt_f64(s.t);
        for ((x, u), v) in x.iter().zip(&s.u).zip(&s.v) {
            snaps.row(&[t.clone(), fmt_f64(*x), fmt_f64(*u), fmt_f64(*v)]);
        }
    }
    run.write_csv("snapshots.csv", &snaps)?;

    let mut fin = Csv::new(&["x", "u", "v"]);
    if let Some(s) = traj.final_state() {
        for ((x, u), v) in x.iter().zip(&s.u).zip(&s.v) {
            fin.row(&[fmt_f64(*x), fmt_f64(*u), fmt_f64(*v)]);
        }
    }
    run.write_csv("final_state.csv", &fin)?;
    Ok(())
}

fn pattern_json(p: &PatternClass) -> serde_json::Value {
    json!({
        "class": p.kind.as_str(),
        "spatially_inhomogeneous": p.spatially_inhomogeneous,
        "oscillating": p.oscillating,
        "periodic": p.periodic,
        "final_std_u": p.final_std_u,
        "tail_mean_std_u": p.tail_mean_std_u,
        "mass_oscillation": p.mass_oscillation,
        "max_autocorrelation": p.max_autocorrelation,
        "tail_points": p.tail_points,
    })
}

fn decay_json(f: &DecayFit, target: &Equilibrium) -> serde_json::Value {
    json!({
        "target": target.kind.as_str(),
        "verdict": f.verdict.as_str(),
        "rate": f.rate,
        "r_squared": f.r_squared,
        "algebraic_exponent": f.algebraic_exponent,
        "algebraic_r_squared": f.algebraic_r_squared,
        "points": f.points,
    })
}

/// Target of the convergence results when the configuration lies in a
/// globally stable regime.
fn stable_target(report_regime: Regime, satisfied: Option<bool>, model: &Model) -> Option<Equilibrium> {
    let set = compute_equilibria(&model.kin).ok()?;
    match report_regime {
        Regime::PreyOnlyExponential | Regime::PreyOnlyAlgebraic => Some(set.prey_only),
        Regime::CoexistenceRegime if satisfied == Some(true) => set.coexistence,
        _ => None,
    }
}

pub fn simulate(cfg: &RunConfig, run: &mut RunDir) -> Result<(), CliError> {
    let model = load_model(cfg)?;
    let sc = solver_config(cfg, &model, cfg.analysis.diffusivity)?;
    let state = init_state(&sc)?;
    let v0_max = state.v.iter().cloned().fold(0.0, f64::max);
    let report = global_stability_report(&model.kin, &model.mot, sc.diffusivity, v0_max)?;
    run.record(
        "stability",
        json!({
            "regime": report.regime.as_str(),
            "gamma_f_capacity": report.gamma_f_capacity,
            "k0": report.k0,
            "d_min": report.d_min,
            "d_min_satisfied": report.satisfied,
        }),
    );
    run.record("scheme", sc.scheme.as_str());
    info!(
        "simulating {} cells to t = {} with {}",
        sc.grid.n_cells(),
        sc.t_end,
        sc.scheme.as_str()
    );
    let traj = match integrate_from(&sc, state) {
        Ok(t) => t,
        Err(e) => {
            let partial = match &e {
                preytaxis_core::Error::BlowUp { partial, .. } | preytaxis_core::Error::NonPhysical { partial, .. } => {
                    Some(partial.as_ref())
                }
                _ => None,
            };
            if let Some(p) = partial {
                write_trajectory(run, p)?;
                run.record("steps", p.steps);
            }
            return Err(e.into());
        }
    };
    write_trajectory(run, &traj)?;
    run.record("steps", traj.steps);
    match classify_pattern(&traj, DEFAULT_TAIL_FRACTION) {
        Ok(p) => run.record("pattern", pattern_json(&p)),
        Err(e) => run.record("pattern", json!({"error": e.to_string()})),
    }
    if let Some(target) = stable_target(report.regime, report.satisfied, &model) {
        match decay_fit(&traj.timeseries, &target) {
            Ok(f) => run.record("decay", decay_json(&f, &target)),
            Err(e) => run.record("decay", json!({"error": e.to_string()})),
        }
    }
    Ok(())
}

/// Regime predicted by the interval spectrum.
fn predicted_regime(modes: &[Mode]) -> &'static str {
    let (hopf, steady) = stability_class_counts(modes);
    let marginal = modes.iter().any(|m| m.class() == StabilityClass::Marginal);
    let hopf_only_homogeneous = modes
        .iter()
        .filter(|m| m.class() == StabilityClass::HopfUnstable)
        .all(|m| m.n == 0);
    match (hopf, steady) {
        (0, 0) if marginal => "marginal",
        (0, 0) => "stable",
        (_, 0) if hopf_only_homogeneous => "homogeneous_hopf",
        (_, 0) => "hopf",
        (0, _) => "steady",
        _ => "hopf_and_steady",
    }
}

struct SweepRow {
    d: f64,
    modes: Option<(usize, usize, &'static str)>,
    simulated: Option<String>,
    error: Option<CliError>,
}

fn sweep_point(cfg: &RunConfig, model: &Model, d: f64, simulate: bool) -> SweepRow {
    let mut row = SweepRow {
        d,
        modes: None,
        simulated: None,
        error: None,
    };
    let eq = match coexistence(model) {
        Ok(eq) => eq,
        Err(e) => {
            row.error = Some(e);
            return row;
        }
    };
    match unstable_modes(&model.kin, &model.mot, d, &eq, cfg.ell()) {
        Ok(modes) => {
            let (h, s) = stability_class_counts(&modes);
            row.modes = Some((h, s, predicted_regime(&modes)));
        }
        Err(e) => {
            row.error = Some(e.into());
            return row;
        }
    }
    if simulate {
        let result = solver_config(cfg, model, d).and_then(|sc| {
            let traj = preytaxis_core::solver::integrate(&sc)?;
            Ok(classify_pattern(&traj, DEFAULT_TAIL_FRACTION)?)
        });
        match result {
            Ok(p) => row.simulated = Some(p.kind.as_str().to_string()),
            Err(e) => row.error = Some(e),
        }
    }
    row
}

fn sweep_threads() -> Result<Option<usize>, CliError> {
    match std::env::var("PREYTAXIS_THREADS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("PREYTAXIS_THREADS must be a positive integer, got '{s}'"))),
        },
        Err(_) => Ok(None),
    }
}

/// Fails before anything is written when the sweep is malformed.
pub fn check_sweep(cfg: &RunConfig) -> Result<Vec<f64>, CliError> {
    let points = cfg
        .analysis
        .sweep
        .clone()
        .ok_or_else(|| CliError::Config("sweep needs [analysis] sweep_D or sweep_range".into()))?;
    if points.len() < 2 {
        return Err(CliError::Config(format!("sweep needs at least 2 points, got {}", points.len())));
    }
    if let Some(bad) = points.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
        return Err(CliError::Config(format!("sweep values must be > 0, got {bad}")));
    }
    sweep_threads()?;
    Ok(points)
}

pub fn sweep(cfg: &RunConfig, run: &mut RunDir, simulate: bool) -> Result<(), CliError> {
    let points = check_sweep(cfg)?;
    let model = load_model(cfg)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = sweep_threads()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    // `collect` on an indexed parallel iterator keeps the input order.
    let rows: Vec<SweepRow> = pool.install(|| {
        points
            .par_iter()
            .map(|&d| sweep_point(cfg, &model, d, simulate))
            .collect()
    });

    let mut csv = Csv::new(&[
        "D",
        "n_unstable_hopf",
        "n_unstable_steady",
        "predicted_regime",
        "simulated_class",
        "error",
    ]);
    for r in &rows {
        let (h, s, regime) = match r.modes {
            Some((h, s, regime)) => (h.to_string(), s.to_string(), regime.to_string()),
            None => Default::default(),
        };
        let err = r.error.as_ref().map(|e| text_cell(&e.to_string())).unwrap_or_default();
        csv.row(&[fmt_f64(r.d), h, s, regime, r.simulated.clone().unwrap_or_default(), err]);
    }
    run.write_csv("sweep.csv", &csv)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    run.record("points", rows.len());
    run.record("failed_points", failed);
    run.record("simulate", simulate);
    if failed == rows.len() {
        let first = rows.into_iter().find_map(|r| r.error).expect("every row failed");
        return Err(first);
    }
    Ok(())
}
