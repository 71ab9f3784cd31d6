use crate::model::Equilibrium;
use crate::solver::{TimeseriesRow, Trajectory};
use crate::{Error, Result};

/// Share of the timeseries used by [`classify_pattern`] by default.
pub const DEFAULT_TAIL_FRACTION: f64 = 0.2;
/// Minimum number of rows in the classification window.
pub const MIN_TAIL_POINTS: usize = 50;
/// Tail-averaged spatial std of `u` above which a run is inhomogeneous.
pub const SPATIAL_STD_THRESHOLD: f64 = 1e-2;
/// Relative peak-to-peak of `mass_u` above which a run oscillates.
pub const OSCILLATION_THRESHOLD: f64 = 1e-2;
/// Autocorrelation needed to call the tail periodic.
pub const PERIODICITY_THRESHOLD: f64 = 0.95;

/// Share of the timeseries used by [`decay_fit`].
pub const DECAY_TAIL_FRACTION: f64 = 0.5;
pub const DECAY_MIN_POINTS: usize = 100;
/// Minimum `r^2` for an exponential verdict.
pub const EXPONENTIAL_R2: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternKind {
    HomogeneousStationary,
    HomogeneousPeriodic,
    StationaryInhomogeneous,
    SpatioTemporal,
}

impl PatternKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PatternKind::HomogeneousStationary => "homogeneous_stationary",
            PatternKind::HomogeneousPeriodic => "homogeneous_periodic",
            PatternKind::StationaryInhomogeneous => "stationary_inhomogeneous",
            PatternKind::SpatioTemporal => "spatio_temporal",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternClass {
    pub kind: PatternKind,
    pub spatially_inhomogeneous: bool,
    pub oscillating: bool,
    /// Tail autocorrelation of `mass_u` reaches [`PERIODICITY_THRESHOLD`].
    pub periodic: bool,
    pub final_std_u: f64,
    pub tail_mean_std_u: f64,
    /// Peak-to-peak of `mass_u` over the tail divided by its mean.
    pub mass_oscillation: f64,
    /// Largest tail autocorrelation past the first zero crossing.
    pub max_autocorrelation: f64,
    pub tail_points: usize,
}

fn tail(rows: &[TimeseriesRow], fraction: f64) -> &[TimeseriesRow] {
    let len = ((rows.len() as f64) * fraction).ceil() as usize;
    &rows[rows.len() - len.min(rows.len())..]
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// Maximum Pearson autocorrelation over lags between the first zero crossing
/// of the sample autocorrelation and `n / 2`. Zero when the series is flat or
/// never decorrelates.
fn max_autocorrelation(x: &[f64]) -> f64 {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = x.iter().map(|y| y - mean).collect();
    let c0: f64 = c.iter().map(|y| y * y).sum();
    if c0 <= 1e-28 * mean.abs().max(1.0).powi(2) * n as f64 {
        return 0.0;
    }
    let acf = |lag: usize| c[..n - lag].iter().zip(&c[lag..]).map(|(a, b)| a * b).sum::<f64>() / c0;
    let Some(first) = (1..=n / 2).find(|&lag| acf(lag) <= 0.0) else {
        return 0.0;
    };
    (first..=n / 2)
        .map(|lag| pearson(&x[..n - lag], &x[lag..]))
        .fold(0.0, f64::max)
}

/// Labels a trajectory from its timeseries tail.
///
/// Inhomogeneous: tail-averaged spatial std of `u` above
/// [`SPATIAL_STD_THRESHOLD`]. Oscillating: relative peak-to-peak of `mass_u`
/// above [`OSCILLATION_THRESHOLD`]. Only row order is used, so the result does
/// not depend on the time unit.
pub fn classify_pattern(traj: &Trajectory, tail_fraction: f64) -> Result<PatternClass> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::param("tail_fraction", format!("must lie in (0, 1], got {tail_fraction}")));
    }
    let rows = tail(&traj.timeseries, tail_fraction);
    if rows.len() < MIN_TAIL_POINTS {
        return Err(Error::InsufficientData(format!(
            "tail window has {} rows, need {MIN_TAIL_POINTS}",
            rows.len()
        )));
    }
    let tail_mean_std_u = rows.iter().map(|r| r.std_u).sum::<f64>() / rows.len() as f64;
    let final_std_u = rows[rows.len() - 1].std_u;
    let mass: Vec<f64> = rows.iter().map(|r| r.mass_u).collect();
    let (lo, hi) = mass
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &m| (l.min(m), h.max(m)));
    let mean = mass.iter().sum::<f64>() / mass.len() as f64;
    let mass_oscillation = if mean.abs() > 0.0 { (hi - lo) / mean.abs() } else { 0.0 };
    let max_autocorrelation = max_autocorrelation(&mass);

    let spatially_inhomogeneous = tail_mean_std_u > SPATIAL_STD_THRESHOLD;
    let oscillating = mass_oscillation > OSCILLATION_THRESHOLD;
    let periodic = oscillating && max_autocorrelation >= PERIODICITY_THRESHOLD;
    let kind = match (spatially_inhomogeneous, oscillating) {
        (false, false) => PatternKind::HomogeneousStationary,
        (false, true) => PatternKind::HomogeneousPeriodic,
        (true, false) => PatternKind::StationaryInhomogeneous,
        (true, true) => PatternKind::SpatioTemporal,
    };
    Ok(PatternClass {
        kind,
        spatially_inhomogeneous,
        oscillating,
        periodic,
        final_std_u,
        tail_mean_std_u,
        mass_oscillation,
        max_autocorrelation,
        tail_points: rows.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayVerdict {
    Exponential,
    Algebraic,
    NoDecay,
}

impl DecayVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            DecayVerdict::Exponential => "exponential",
            DecayVerdict::Algebraic => "algebraic",
            DecayVerdict::NoDecay => "no_decay",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// `r` in `||u - u_eq|| ~ exp(-r t)`.
    pub rate: f64,
    pub r_squared: f64,
    /// `p` in `||u - u_eq|| ~ (1 + t)^(-p)`.
    pub algebraic_exponent: f64,
    pub algebraic_r_squared: f64,
    pub verdict: DecayVerdict,
    pub points: usize,
}

/// Least-squares line `y = a + b x`; returns `(b, r^2)`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

/// Fits the decay of `||u - u_eq||_inf` (from the min/max columns) over the
/// last half of the timeseries.
pub fn decay_fit(timeseries: &[TimeseriesRow], eq: &Equilibrium) -> Result<DecayFit> {
    let rows = tail(timeseries, DECAY_TAIL_FRACTION);
    let mut t = Vec::with_capacity(rows.len());
    let mut log_norm = Vec::with_capacity(rows.len());
    for r in rows {
        let norm = (r.max_u - eq.u).abs().max((r.min_u - eq.u).abs());
        if norm > 0.0 && norm.is_finite() {
            t.push(r.t);
            log_norm.push(norm.ln());
        }
    }
    if t.len() < DECAY_MIN_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} tail rows with a positive norm, need {DECAY_MIN_POINTS}",
            t.len()
        )));
    }
    let (slope, r_squared) = linear_fit(&t, &log_norm);
    let log_t: Vec<f64> = t.iter().map(|t| (1.0 + t).ln()).collect();
    let (alg_slope, algebraic_r_squared) = linear_fit(&log_t, &log_norm);
    let rate = -slope;
    let algebraic_exponent = -alg_slope;
    let verdict = if r_squared >= algebraic_r_squared && r_squared >= EXPONENTIAL_R2 && rate > 0.0 {
        DecayVerdict::Exponential
    } else if algebraic_exponent > 0.0 && algebraic_r_squared > r_squared {
        DecayVerdict::Algebraic
    } else {
        DecayVerdict::NoDecay
    };
    Ok(DecayFit {
        rate,
        r_squared,
        algebraic_exponent,
        algebraic_r_squared,
        verdict,
        points: t.len(),
    })
}
