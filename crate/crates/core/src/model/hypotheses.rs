use super::{KineticsModel, MotilityModel};
use crate::numerics::central_diff;
use crate::{Error, Result};

/// Slack allowed on non-strict inequalities before a sample counts as a
/// violation. Strict inequalities fail as soon as they are not satisfied.
pub const SAMPLING_TOL: f64 = 1e-12;

const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Sampled prey density where the inequality failed.
    pub witness: f64,
    pub inequality: &'static str,
    /// Value of the tested quantity at the witness.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum HypothesisStatus {
    Holds,
    Fails(Violation),
    NotChecked(String),
}

impl HypothesisStatus {
    pub fn holds(&self) -> bool {
        matches!(self, HypothesisStatus::Holds)
    }

    pub fn fails(&self) -> bool {
        matches!(self, HypothesisStatus::Fails(_))
    }
}

/// Sampled verdicts on the motility (H1), response (H2), growth (H3) and
/// `phi = f/F` monotonicity (H4) hypotheses.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub h1: HypothesisStatus,
    pub h2: HypothesisStatus,
    pub h3: HypothesisStatus,
    pub h4: HypothesisStatus,
    pub v_max: f64,
    pub n_samples: usize,
}

/// Collects the first violation over a list of named sample checks.
struct Checker {
    failure: Option<Violation>,
    unchecked: Option<String>,
}

impl Checker {
    fn new() -> Self {
        Checker {
            failure: None,
            unchecked: None,
        }
    }

    fn record(&mut self, ok: bool, witness: f64, inequality: &'static str, value: f64) {
        if !ok && self.failure.is_none() {
            self.failure = Some(Violation {
                witness,
                inequality,
                value,
            });
        }
    }

    /// `x > 0`.
    fn positive(&mut self, v: f64, x: f64, what: &'static str) {
        self.record(x > 0.0, v, what, x);
    }

    /// `x < 0`.
    fn negative(&mut self, v: f64, x: f64, what: &'static str) {
        self.record(x < 0.0, v, what, x);
    }

    /// `x >= 0` up to the sampling tolerance.
    fn nonneg(&mut self, v: f64, x: f64, what: &'static str) {
        self.record(x >= -SAMPLING_TOL, v, what, x);
    }

    /// `x <= 0` up to the sampling tolerance.
    fn nonpos(&mut self, v: f64, x: f64, what: &'static str) {
        self.record(x <= SAMPLING_TOL, v, what, x);
    }

    fn zero(&mut self, v: f64, x: f64, what: &'static str) {
        self.record(x.abs() <= SAMPLING_TOL, v, what, x);
    }

    fn finish(self) -> HypothesisStatus {
        match (self.failure, self.unchecked) {
            (Some(f), _) => HypothesisStatus::Fails(f),
            (None, Some(reason)) => HypothesisStatus::NotChecked(reason),
            (None, None) => HypothesisStatus::Holds,
        }
    }
}

/// Samples `[0, v_max]` uniformly at `n_samples` points and checks the four
/// structural hypotheses. Derivatives of `phi` use the closed form for
/// builtins and central differences (step `1e-6`) for custom kinetics.
pub fn check_hypotheses(
    kin: &KineticsModel,
    mot: &MotilityModel,
    v_max: f64,
    n_samples: usize,
) -> Result<HypothesisReport> {
    if !(v_max.is_finite() && v_max > 0.0) {
        return Err(Error::param("v_max", format!("must be > 0, got {v_max}")));
    }
    if n_samples < 100 {
        return Err(Error::param("n_samples", format!("must be >= 100, got {n_samples}")));
    }
    let samples: Vec<f64> = (0..n_samples)
        .map(|i| v_max * i as f64 / (n_samples - 1) as f64)
        .collect();
    let k = kin.capacity();

    let mut h1 = Checker::new();
    for &v in &samples {
        h1.positive(v, mot.motility(v), "d(v) > 0");
        h1.nonneg(v, mot.taxis(v), "chi(v) >= 0");
        h1.nonpos(v, mot.motility_deriv(v), "d'(v) <= 0");
    }

    let mut h2 = Checker::new();
    h2.zero(0.0, kin.response(0.0), "F(0) = 0");
    for &v in &samples {
        if v > 0.0 {
            h2.positive(v, kin.response(v), "F(v) > 0 for v > 0");
        }
        h2.positive(v, kin.response_deriv(v), "F'(v) > 0");
    }

    let mut h3 = Checker::new();
    h3.zero(0.0, kin.growth(0.0), "f(0) = 0");
    h3.zero(k, kin.growth(k), "f(K) = 0");
    let mut beyond = 0usize;
    for &v in &samples {
        h3.nonpos(v, kin.growth(v) - kin.mu() * v, "f(v) <= mu v");
        if v > k {
            beyond += 1;
            h3.negative(v, kin.growth(v), "f(v) < 0 for v > K");
        }
    }
    if beyond == 0 {
        h3.unchecked = Some(format!(
            "no samples beyond K = {k} in [0, {v_max}]; f(v) < 0 for v > K not sampled"
        ));
    }

    let mut h4 = Checker::new();
    let builtin = kin.is_builtin();
    let phi0 = if builtin {
        kin.phi(0.0)
    } else {
        kin.phi(1e-8 * v_max)
    };
    h4.positive(0.0, phi0, "phi(0+) > 0");
    for &v in &samples {
        let dphi = if builtin {
            kin.phi_deriv(v)
        } else {
            // Keep the stencil inside (0, inf).
            let x = v.max(2.0 * FD_STEP);
            central_diff(|s| kin.phi(s), x, FD_STEP)
        };
        h4.negative(v, dphi, "phi'(v) < 0");
    }

    Ok(HypothesisReport {
        h1: h1.finish(),
        h2: h2.finish(),
        h3: h3.finish(),
        h4: h4.finish(),
        v_max,
        n_samples,
    })
}
