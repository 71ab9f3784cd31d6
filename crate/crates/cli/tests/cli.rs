use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const CASE1: &str = "[motility]\nkind = d1\n[domain]\nlength = 8*pi\n[analysis]\nD = 1/10\n";
const CASE2: &str = "[motility]\nkind = d2\n[domain]\nlength = 4*pi\n[analysis]\nD = 1/4800\n";
const CASE3: &str = "[motility]\nkind = d3\n[domain]\nlength = 8*pi\n[analysis]\nD = 1/10\n";
const DECAY: &str = "[model]\ngamma = 1\n[domain]\nn_cells = 128\n[solver]\nt_end = 100\nepsilon = 0.2\n[analysis]\nD = 0.1\n";
const SHORT_SIM: &str = "[domain]\nn_cells = 32\n[solver]\nt_end = 2\nsnapshot_count = 5\noutput_count = 300\n";

struct Run {
    _tmp: TempDir,
    out: PathBuf,
    output: Output,
}

impl Run {
    fn code(&self) -> i32 {
        self.output.status.code().expect("process exited normally")
    }

    fn manifest(&self) -> Value {
        let text = fs::read_to_string(self.out.join("manifest.json")).expect("manifest written");
        serde_json::from_str(&text).expect("manifest is JSON")
    }

    fn csv(&self, name: &str) -> Vec<Vec<String>> {
        read_csv(&self.out.join(name))
    }
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let rows: Vec<Vec<String>> = text
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    let width = rows[0].len();
    assert!(rows.iter().all(|r| r.len() == width), "ragged CSV {}", path.display());
    rows
}

fn run_with(cmd: &str, config: &str, extra: &[&str], env: &[(&str, &str)]) -> Run {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("run.ini");
    fs::write(&cfg_path, config).unwrap();
    let out = tmp.path().join("out");
    let mut command = Command::new(env!("CARGO_BIN_EXE_preytaxis-lab"));
    command
        .arg(cmd)
        .arg("--config")
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .args(extra);
    for (k, v) in env {
        command.env(k, v);
    }
    let output = command.output().expect("binary runs");
    Run { _tmp: tmp, out, output }
}

fn run(cmd: &str, config: &str) -> Run {
    run_with(cmd, config, &[], &[])
}

fn column(rows: &[Vec<String>], name: &str) -> usize {
    rows[0].iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn modes_with(r: &Run, pred: impl Fn(&str) -> bool) -> Vec<usize> {
    let rows = r.csv("modes.csv");
    rows[1..]
        .iter()
        .filter(|row| pred(&row[2]))
        .map(|row| row[0].parse().unwrap())
        .collect()
}

#[test]
fn equilibria_of_the_pattern_parameters() {
    let r = run("equilibria", "");
    assert_eq!(r.code(), 0);
    let rows = r.csv("equilibria.csv");
    assert_eq!(rows[0], ["kind", "u", "v", "residual"]);
    let co = rows.iter().find(|row| row[0] == "coexistence").expect("coexistence row");
    assert!((co[1].parse::<f64>().unwrap() - 1.5).abs() < 1e-10);
    assert!((co[2].parse::<f64>().unwrap() - 1.0).abs() < 1e-10);
    assert!(co[3].parse::<f64>().unwrap() < 1e-10);
    assert_eq!(r.manifest()["status"], "ok");
}

#[test]
fn equilibria_without_coexistence() {
    let r = run("equilibria", "[model]\nkind = rm\ngamma = 1\n");
    assert_eq!(r.code(), 0);
    let rows = r.csv("equilibria.csv");
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|row| row[0] != "coexistence"));
}

#[test]
fn misspelled_key_exits_2_without_files() {
    let r = run("equilibria", "[model]\ngama = 2\n");
    assert_eq!(r.code(), 2);
    assert!(!r.out.exists());
}

#[test]
fn duplicate_key_exits_2() {
    let r = run("simulate", "[solver]\nt_end = 1\nt_end = 2\n");
    assert_eq!(r.code(), 2);
    assert!(!r.out.exists());
}

#[test]
fn invalid_model_exits_3() {
    let r = run("equilibria", "[model]\ntheta = -1\n");
    assert_eq!(r.code(), 3);
    assert_eq!(r.manifest()["status"], "model_error");
    let r = run("dispersion", "[motility]\nkind = custom\n");
    assert_eq!(r.code(), 3);
}

#[test]
fn missing_coexistence_exits_4() {
    for cmd in ["dispersion", "bifurcation"] {
        let r = run(cmd, "[model]\ngamma = 1\n");
        assert_eq!(r.code(), 4, "{cmd}");
        assert_eq!(r.manifest()["exit_code"], 4);
    }
}

#[test]
fn case1_modes() {
    let r = run("dispersion", CASE1);
    assert_eq!(r.code(), 0);
    assert_eq!(modes_with(&r, |c| c == "hopf_unstable"), [0, 1, 2, 3]);
    assert_eq!(modes_with(&r, |c| c != "stable"), [0, 1, 2, 3]);
    let betas = &r.manifest()["results"]["betas"];
    assert!((betas["beta2"].as_f64().unwrap() + 5.0 / 16.0).abs() < 1e-12);
    let d = r.csv("dispersion.csv");
    assert_eq!(d[0].len(), 9);
    assert!(d.len() > 100);
}

#[test]
fn case2_modes() {
    let r = run("dispersion", CASE2);
    assert_eq!(r.code(), 0);
    let steady = modes_with(&r, |c| c == "steady_unstable");
    assert_eq!(steady, (12..=81).collect::<Vec<_>>());
}

#[test]
fn case3_modes() {
    let r = run("dispersion", CASE3);
    assert_eq!(r.code(), 0);
    assert_eq!(modes_with(&r, |c| c != "stable"), (0..=6).collect::<Vec<_>>());
}

#[test]
fn case2_threshold() {
    let r = run("bifurcation", CASE2);
    assert_eq!(r.code(), 0);
    let m = r.manifest();
    let d = m["results"]["steady_threshold_D"].as_f64().unwrap();
    assert!((d - 49.0 / 19200.0).abs() < 1e-9, "threshold {d}");
    assert!(m["results"]["identity_check"]["relative"].as_f64().unwrap() < 1e-10);
    let rows = r.csv("curves.csv");
    assert_eq!(rows[0], ["eta", "D_H", "D_S"]);
}

#[test]
fn case1_has_no_threshold() {
    let r = run("bifurcation", CASE1);
    assert_eq!(r.code(), 0);
    assert!(r.manifest()["results"]["steady_threshold_D"].is_null());
}

#[test]
fn simulate_writes_all_outputs() {
    let r = run("simulate", SHORT_SIM);
    assert_eq!(r.code(), 0);
    let ts = r.csv("timeseries.csv");
    assert_eq!(
        ts[0],
        ["t", "mass_u", "mass_v", "min_u", "max_u", "min_v", "max_v", "l2_dev_u", "l2_dev_v", "V1", "V2"]
    );
    assert_eq!(ts.len(), 302);
    let v2 = column(&ts, "V2");
    assert!(ts[1..].iter().all(|row| !row[v2].is_empty()));
    let snaps = r.csv("snapshots.csv");
    assert_eq!(snaps.len(), 1 + 5 * 32);
    let fin = r.csv("final_state.csv");
    assert_eq!(fin.len(), 33);
    let m = r.manifest();
    let files: Vec<&str> = m["files"].as_array().unwrap().iter().map(|f| f["name"].as_str().unwrap()).collect();
    assert_eq!(files, ["timeseries.csv", "snapshots.csv", "final_state.csv"]);
    assert_eq!(m["prng"]["seed"], 42);
    assert!(m["results"]["pattern"]["class"].is_string());
}

#[test]
fn reruns_are_byte_identical() {
    let a = run("simulate", SHORT_SIM);
    let b = run("simulate", SHORT_SIM);
    for name in ["timeseries.csv", "snapshots.csv", "final_state.csv"] {
        assert_eq!(fs::read(a.out.join(name)).unwrap(), fs::read(b.out.join(name)).unwrap(), "{name}");
    }
    let c = run_with("simulate", SHORT_SIM, &["--seed", "7"], &[]);
    assert_ne!(fs::read(a.out.join("final_state.csv")).unwrap(), fs::read(c.out.join("final_state.csv")).unwrap());
    assert_eq!(c.manifest()["prng"]["seed"], 7);
}

#[test]
fn prey_only_decay_is_exponential() {
    let r = run("simulate", DECAY);
    assert_eq!(r.code(), 0);
    let m = r.manifest();
    assert_eq!(m["results"]["stability"]["regime"], "prey_only_exponential");
    assert_eq!(m["results"]["decay"]["verdict"], "exponential");
    let rate = m["results"]["decay"]["rate"].as_f64().unwrap();
    assert!((rate - 0.2).abs() < 0.04, "rate {rate}");
    // Without coexistence the V2 column stays empty.
    let ts = r.csv("timeseries.csv");
    let v2 = column(&ts, "V2");
    assert!(ts[1..].iter().all(|row| row[v2].is_empty()));
}

#[test]
fn blowup_exits_5_with_partial_outputs() {
    let cfg = "[motility]\nkind = constant\nd_const = 0.01\nchi_const = 20\n[domain]\nn_cells = 64\n\
               [solver]\nt_end = 20\nepsilon = 0.5\ncfl_safety = 1\n";
    let r = run("simulate", cfg);
    assert_eq!(r.code(), 5);
    let m = r.manifest();
    assert_eq!(m["status"], "blowup");
    assert!(r.csv("timeseries.csv").len() >= 2);
    assert!(r.out.join("final_state.csv").exists());
}

#[test]
fn d2_sweep_brackets_the_threshold() {
    let cfg = "[motility]\nkind = d2\n[domain]\nlength = 4*pi\n[analysis]\nsweep_D = 1e-4, 1e-3, 1e-2\n";
    let r = run("sweep", cfg);
    assert_eq!(r.code(), 0);
    let rows = r.csv("sweep.csv");
    let steady = column(&rows, "n_unstable_steady");
    let counts: Vec<usize> = rows[1..].iter().map(|row| row[steady].parse().unwrap()).collect();
    assert!(counts[0] > 0 && counts[1] > 0 && counts[2] == 0, "{counts:?}");
    let d: Vec<f64> = rows[1..].iter().map(|row| row[0].parse().unwrap()).collect();
    assert_eq!(d, [1e-4, 1e-3, 1e-2]);
}

#[test]
fn d1_sweep_never_has_steady_modes() {
    let cfg = "[analysis]\nsweep_range = 1e-4, 10, 9\n";
    let r = run("sweep", cfg);
    assert_eq!(r.code(), 0);
    let rows = r.csv("sweep.csv");
    assert_eq!(rows.len(), 10);
    let steady = column(&rows, "n_unstable_steady");
    assert!(rows[1..].iter().all(|row| row[steady] == "0"));
}

#[test]
fn sweep_order_ignores_thread_count() {
    let cfg = "[motility]\nkind = d2\n[domain]\nlength = 4*pi\n[analysis]\nsweep_range = 1e-4, 1e-1, 16\n";
    let one = run_with("sweep", cfg, &[], &[("PREYTAXIS_THREADS", "1")]);
    let many = run_with("sweep", cfg, &[], &[("PREYTAXIS_THREADS", "4")]);
    assert_eq!(fs::read(one.out.join("sweep.csv")).unwrap(), fs::read(many.out.join("sweep.csv")).unwrap());
}

#[test]
fn sweep_with_simulation_classifies_rows() {
    let cfg = format!("{SHORT_SIM}[analysis]\nsweep_D = 0.05, 0.1\n");
    let r = run_with("sweep", &cfg, &["--simulate"], &[]);
    assert_eq!(r.code(), 0);
    let rows = r.csv("sweep.csv");
    let class = column(&rows, "simulated_class");
    assert!(rows[1..].iter().all(|row| !row[class].is_empty()));
}

#[test]
fn single_point_sweep_exits_2() {
    let r = run("sweep", "[analysis]\nsweep_D = 0.1\n");
    assert_eq!(r.code(), 2);
    assert!(!r.out.exists());
}

#[test]
fn sweep_without_coexistence_fails() {
    let r = run("sweep", "[model]\ngamma = 1\n[analysis]\nsweep_D = 0.1, 0.2\n");
    assert_eq!(r.code(), 4);
    let rows = r.csv("sweep.csv");
    let err = column(&rows, "error");
    assert!(rows[1..].iter().all(|row| !row[err].is_empty()));
}

#[test]
fn every_float_has_seventeen_significant_digits() {
    let r = run("equilibria", "");
    for row in &r.csv("equilibria.csv")[1..] {
        for cell in &row[1..] {
            let mantissa = cell.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.replace('.', "").len(), 17, "{cell}");
        }
    }
}
