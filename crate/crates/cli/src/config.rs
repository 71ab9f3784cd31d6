//! Flat INI-style run configuration: `[section]` headers, `key = value`
//! lines, `#` comments. Unknown sections or keys are errors.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use preytaxis_core::model::{KineticsModel, MotilityModel};
use preytaxis_core::solver::Scheme;

use crate::error::CliError;

const KEYS: &[(&str, &[&str])] = &[
    ("model", &["kind", "gamma", "theta", "alpha", "mu", "K", "lambda"]),
    ("motility", &["kind", "d_const", "chi_const"]),
    ("domain", &["length", "n_cells"]),
    (
        "solver",
        &[
            "scheme",
            "cfl_safety",
            "t_end",
            "snapshot_count",
            "output_count",
            "epsilon",
            "seed",
            "base",
        ],
    ),
    (
        "analysis",
        &[
            "D", "ell", "n_max", "eta_min", "eta_max", "eta_count", "k_max", "k_count", "sweep_D",
            "sweep_range", "sweep_spacing",
        ],
    ),
    ("output", &["directory"]),
];

/// Raw `section -> key -> value` map, kept for the manifest echo.
pub type RawConfig = BTreeMap<String, BTreeMap<String, String>>;

pub fn parse_ini(text: &str) -> Result<RawConfig, CliError> {
    let mut raw = RawConfig::new();
    let mut section: Option<String> = None;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| CliError::Config(format!("line {lineno}: malformed section header")))?
                .trim();
            if !KEYS.iter().any(|(s, _)| *s == name) {
                return Err(CliError::Config(format!("line {lineno}: unknown section [{name}]")));
            }
            raw.entry(name.to_string()).or_default();
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {lineno}: expected key = value")))?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section
            .as_deref()
            .ok_or_else(|| CliError::Config(format!("line {lineno}: key '{key}' outside a section")))?;
        let allowed = KEYS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key) {
            return Err(CliError::Config(format!("line {lineno}: unknown key '{key}' in [{sec}]")));
        }
        if value.is_empty() {
            return Err(CliError::Config(format!("line {lineno}: empty value for '{key}'")));
        }
        let entries = raw.get_mut(sec).expect("section inserted above");
        if entries.insert(key.to_string(), value.to_string()).is_some() {
            return Err(CliError::Config(format!("line {lineno}: duplicate key '{key}' in [{sec}]")));
        }
    }
    Ok(raw)
}

/// Evaluates a number, `pi`, or a product/quotient of those, e.g. `8*pi`,
/// `1/4800`, `-2.5e-3`.
pub fn eval_number(expr: &str) -> Option<f64> {
    let mut value = 1.0;
    let mut op = '*';
    let mut rest = expr.trim();
    loop {
        let end = rest.find(['*', '/']).unwrap_or(rest.len());
        let token = rest[..end].trim();
        let (sign, token) = match token.strip_prefix('-') {
            Some(t) => (-1.0, t.trim()),
            None => (1.0, token),
        };
        let x = sign
            * if token.eq_ignore_ascii_case("pi") {
                PI
            } else {
                token.parse::<f64>().ok()?
            };
        value = if op == '*' { value * x } else { value / x };
        if end == rest.len() {
            break;
        }
        op = rest.as_bytes()[end] as char;
        rest = &rest[end + 1..];
    }
    value.is_finite().then_some(value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    LotkaVolterra,
    RosenzweigMacArthur,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseChoice {
    Auto,
    Coexistence,
    PreyOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub gamma: f64,
    pub theta: f64,
    pub alpha: f64,
    pub mu: f64,
    pub capacity: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotilitySection {
    pub kind: String,
    pub d_const: Option<f64>,
    pub chi_const: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSection {
    pub scheme: Scheme,
    pub cfl_safety: f64,
    pub t_end: f64,
    pub snapshot_count: usize,
    pub output_count: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub base: BaseChoice,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSection {
    pub diffusivity: f64,
    pub ell: Option<f64>,
    pub n_max: Option<usize>,
    pub eta_min: f64,
    pub eta_max: f64,
    pub eta_count: usize,
    pub k_max: Option<f64>,
    pub k_count: usize,
    pub sweep: Option<Vec<f64>>,
}

/// Parsed run configuration. Every key is optional; defaults reproduce the
/// standard pattern-forming parameter set (`K = 4, gamma = 2, theta = 1,
/// lambda = 1, mu = 1`) with motility `d1` on `[0, 8 pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub raw: RawConfig,
    pub model: ModelSection,
    pub motility: MotilitySection,
    pub length: f64,
    pub n_cells: usize,
    pub solver: SolverSection,
    pub analysis: AnalysisSection,
    pub output_dir: Option<PathBuf>,
}

struct Reader<'a> {
    raw: &'a RawConfig,
}

impl Reader<'_> {
    fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.raw.get(section).and_then(|s| s.get(key)).map(String::as_str)
    }

    fn f64(&self, section: &str, key: &str, default: f64) -> Result<f64, CliError> {
        self.opt_f64(section, key).map(|v| v.unwrap_or(default))
    }

    fn opt_f64(&self, section: &str, key: &str) -> Result<Option<f64>, CliError> {
        self.get(section, key)
            .map(|s| {
                eval_number(s).ok_or_else(|| CliError::Config(format!("[{section}] {key}: not a number: '{s}'")))
            })
            .transpose()
    }

    fn opt_usize(&self, section: &str, key: &str) -> Result<Option<usize>, CliError> {
        self.get(section, key)
            .map(|s| {
                s.parse::<usize>()
                    .map_err(|_| CliError::Config(format!("[{section}] {key}: not a count: '{s}'")))
            })
            .transpose()
    }

    fn usize(&self, section: &str, key: &str, default: usize) -> Result<usize, CliError> {
        self.opt_usize(section, key).map(|v| v.unwrap_or(default))
    }
}

fn sweep_points(r: &Reader) -> Result<Option<Vec<f64>>, CliError> {
    let list = r.get("analysis", "sweep_D");
    let range = r.get("analysis", "sweep_range");
    let bad = |msg: String| CliError::Config(msg);
    match (list, range) {
        (Some(_), Some(_)) => Err(bad("give either sweep_D or sweep_range, not both".into())),
        (Some(list), None) => list
            .split(',')
            .map(|s| eval_number(s).ok_or_else(|| bad(format!("[analysis] sweep_D: not a number: '{s}'"))))
            .collect::<Result<Vec<_>, _>>()
            .map(Some),
        (None, Some(range)) => {
            let parts: Vec<&str> = range.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(bad("[analysis] sweep_range: expected 'min, max, count'".into()));
            }
            let lo = eval_number(parts[0]).ok_or_else(|| bad(format!("sweep_range: bad min '{}'", parts[0])))?;
            let hi = eval_number(parts[1]).ok_or_else(|| bad(format!("sweep_range: bad max '{}'", parts[1])))?;
            let count: usize = parts[2]
                .parse()
                .map_err(|_| bad(format!("sweep_range: bad count '{}'", parts[2])))?;
            let spacing = match r.get("analysis", "sweep_spacing").unwrap_or("log") {
                "log" => Spacing::Log,
                "linear" => Spacing::Linear,
                other => return Err(bad(format!("[analysis] sweep_spacing: expected log or linear, got '{other}'"))),
            };
            if spacing == Spacing::Log && !(lo > 0.0 && hi > 0.0) {
                return Err(bad("sweep_range: log spacing needs positive bounds".into()));
            }
            let points = (0..count)
                .map(|i| {
                    let s = if count > 1 { i as f64 / (count - 1) as f64 } else { 0.0 };
                    match spacing {
                        Spacing::Linear => lo + s * (hi - lo),
                        Spacing::Log => (lo.ln() + s * (hi.ln() - lo.ln())).exp(),
                    }
                })
                .collect();
            Ok(Some(points))
        }
        (None, None) => {
            if r.get("analysis", "sweep_spacing").is_some() {
                return Err(bad("sweep_spacing needs sweep_range".into()));
            }
            Ok(None)
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw = parse_ini(text)?;
        let r = Reader { raw: &raw };
        let kind = match r.get("model", "kind").unwrap_or("rm") {
            "rm" | "rosenzweig_macarthur" => ModelKind::RosenzweigMacArthur,
            "lv" | "lotka_volterra" => ModelKind::LotkaVolterra,
            other => return Err(CliError::Config(format!("[model] kind: expected rm or lv, got '{other}'"))),
        };
        let model = ModelSection {
            kind,
            gamma: r.f64("model", "gamma", 2.0)?,
            theta: r.f64("model", "theta", 1.0)?,
            alpha: r.f64("model", "alpha", 0.0)?,
            mu: r.f64("model", "mu", 1.0)?,
            capacity: r.f64("model", "K", 4.0)?,
            lambda: r.f64("model", "lambda", 1.0)?,
        };
        let motility = MotilitySection {
            kind: r.get("motility", "kind").unwrap_or("d1").to_string(),
            d_const: r.opt_f64("motility", "d_const")?,
            chi_const: r.opt_f64("motility", "chi_const")?,
        };
        if !["d1", "d2", "d3", "constant", "custom"].contains(&motility.kind.as_str()) {
            return Err(CliError::Config(format!(
                "[motility] kind: expected d1, d2, d3, constant or custom, got '{}'",
                motility.kind
            )));
        }
        let scheme = match r.get("solver", "scheme").unwrap_or("rk4") {
            "rk4" => Scheme::ExplicitRk4,
            "imex" => Scheme::Imex,
            other => return Err(CliError::Config(format!("[solver] scheme: expected rk4 or imex, got '{other}'"))),
        };
        let base = match r.get("solver", "base").unwrap_or("auto") {
            "auto" => BaseChoice::Auto,
            "coexistence" => BaseChoice::Coexistence,
            "prey_only" => BaseChoice::PreyOnly,
            other => {
                return Err(CliError::Config(format!(
                    "[solver] base: expected auto, coexistence or prey_only, got '{other}'"
                )))
            }
        };
        let seed = match r.get("solver", "seed") {
            Some(s) => s
                .parse::<u64>()
                .map_err(|_| CliError::Config(format!("[solver] seed: not an unsigned integer: '{s}'")))?,
            None => 42,
        };
        let solver = SolverSection {
            scheme,
            cfl_safety: r.f64("solver", "cfl_safety", 0.4)?,
            t_end: r.f64("solver", "t_end", 100.0)?,
            snapshot_count: r.usize("solver", "snapshot_count", 200)?,
            output_count: r.usize("solver", "output_count", 2000)?,
            epsilon: r.f64("solver", "epsilon", 0.01)?,
            seed,
            base,
        };
        if solver.output_count == 0 {
            return Err(CliError::Config("[solver] output_count must be >= 1".into()));
        }
        let analysis = AnalysisSection {
            diffusivity: r.f64("analysis", "D", 0.1)?,
            ell: r.opt_f64("analysis", "ell")?,
            n_max: r.opt_usize("analysis", "n_max")?,
            eta_min: r.f64("analysis", "eta_min", 0.01)?,
            eta_max: r.f64("analysis", "eta_max", 10.0)?,
            eta_count: r.usize("analysis", "eta_count", 400)?,
            k_max: r.opt_f64("analysis", "k_max")?,
            k_count: r.usize("analysis", "k_count", 401)?,
            sweep: sweep_points(&r)?,
        };
        if !(analysis.eta_min > 0.0 && analysis.eta_max > analysis.eta_min && analysis.eta_count >= 2) {
            return Err(CliError::Config(
                "[analysis] eta grid needs 0 < eta_min < eta_max and eta_count >= 2".into(),
            ));
        }
        if analysis.k_count < 2 {
            return Err(CliError::Config("[analysis] k_count must be >= 2".into()));
        }
        let length = r.f64("domain", "length", 8.0 * PI)?;
        let n_cells = r.usize("domain", "n_cells", 256)?;
        let output_dir = r.get("output", "directory").map(PathBuf::from);
        Ok(RunConfig {
            raw,
            model,
            motility,
            length,
            n_cells,
            solver,
            analysis,
            output_dir,
        })
    }

    pub fn kinetics(&self) -> Result<KineticsModel, CliError> {
        let m = &self.model;
        let kin = match m.kind {
            ModelKind::LotkaVolterra => KineticsModel::lotka_volterra(m.gamma, m.theta, m.alpha, m.mu, m.capacity),
            ModelKind::RosenzweigMacArthur => {
                KineticsModel::rosenzweig_macarthur(m.gamma, m.theta, m.alpha, m.mu, m.capacity, m.lambda)
            }
        };
        kin.map_err(|e| CliError::Model(e.to_string()))
    }

    pub fn motility(&self) -> Result<MotilityModel, CliError> {
        let m = &self.motility;
        match m.kind.as_str() {
            "d1" => Ok(MotilityModel::d1()),
            "d2" => Ok(MotilityModel::d2()),
            "d3" => Ok(MotilityModel::d3()),
            "constant" => {
                let d = m
                    .d_const
                    .ok_or_else(|| CliError::Model("constant motility needs d_const".into()))?;
                MotilityModel::constant(d, m.chi_const.unwrap_or(0.0)).map_err(|e| CliError::Model(e.to_string()))
            }
            _ => Err(CliError::Model(
                "custom motility needs evaluator functions and is only available through the library".into(),
            )),
        }
    }

    /// Interval used for mode analysis: `[analysis] ell`, else the domain length.
    pub fn ell(&self) -> f64 {
        self.analysis.ell.unwrap_or(self.length)
    }
}
