//! Linear stability of homogeneous steady states.
//!
//! Perturbations `Phi = (u - u_s, v - v_s)` obey `Phi_t = A Phi_xx + B Phi`
//! with Neumann boundaries. A cosine mode of wavenumber `k` grows like
//! `exp(rho t)` where `rho` solves `rho^2 + a rho + b = 0`,
//! `a = -trace(M_k)`, `b = det(M_k)`, `M_k = -k^2 A + B`.
//!
//! Bands and curves are expressed in `eta = k^2`.

use num_complex::Complex64;

use crate::model::{Equilibrium, EquilibriumKind, KineticsKind, KineticsModel, MotilityModel, RESIDUAL_TOL};
use crate::numerics::bisect;
use crate::{Error, Result};

/// `|Re rho|` at or below this is classified [`StabilityClass::Marginal`].
pub const MARGINAL_TOL: f64 = 1e-12;

/// Extra modes scanned beyond the last instability band.
pub const MODE_MARGIN: usize = 2;

pub type Mat2 = [[f64; 2]; 2];

/// Linearization of the reaction-diffusion-taxis system at `(u_s, v_s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedSystem {
    /// `[[d(v_s), -u_s chi(v_s)], [0, D]]`.
    pub diffusion: Mat2,
    /// Reaction Jacobian `[[B1, B2], [B3, B4]]`.
    pub jacobian: Mat2,
    pub equilibrium: Equilibrium,
}

impl LinearizedSystem {
    pub fn d_star(&self) -> f64 {
        self.diffusion[0][0]
    }

    /// `u_s chi(v_s)`.
    pub fn taxis_strength(&self) -> f64 {
        -self.diffusion[0][1]
    }

    pub fn prey_diffusivity(&self) -> f64 {
        self.diffusion[1][1]
    }

    /// `M = -eta A + B`.
    pub fn mode_matrix(&self, eta: f64) -> Mat2 {
        let (a, b) = (&self.diffusion, &self.jacobian);
        [
            [-eta * a[0][0] + b[0][0], -eta * a[0][1] + b[0][1]],
            [-eta * a[1][0] + b[1][0], -eta * a[1][1] + b[1][1]],
        ]
    }

    /// Trace coefficient `a(D, eta) = (d + D) eta - (B1 + B4)`.
    pub fn trace_coeff(&self, eta: f64) -> f64 {
        let b = &self.jacobian;
        (self.d_star() + self.prey_diffusivity()) * eta - (b[0][0] + b[1][1])
    }

    /// Determinant coefficient
    /// `b(D, eta) = d D eta^2 - (d B4 + u chi B3 + B1 D) eta + B1 B4 - B2 B3`.
    pub fn det_coeff(&self, eta: f64) -> f64 {
        let b = &self.jacobian;
        let (d, dd) = (self.d_star(), self.prey_diffusivity());
        let mid = d * b[1][1] + self.taxis_strength() * b[1][0] + b[0][0] * dd;
        d * dd * eta * eta - mid * eta + (b[0][0] * b[1][1] - b[0][1] * b[1][0])
    }

    /// Same system with a different prey diffusivity.
    pub fn with_diffusivity(&self, diffusivity: f64) -> Self {
        let mut out = self.clone();
        out.diffusion[1][1] = diffusivity;
        out
    }
}

/// Linearizes at `eq`. The Jacobian is the exact derivative of the reaction
/// terms, so it is valid at every steady state, not only at coexistence.
pub fn linearize(
    kin: &KineticsModel,
    mot: &MotilityModel,
    diffusivity: f64,
    eq: &Equilibrium,
) -> Result<LinearizedSystem> {
    if !(eq.residual < RESIDUAL_TOL) {
        return Err(Error::Domain(format!(
            "({}, {}) is not a steady state: residual {:e}",
            eq.u, eq.v, eq.residual
        )));
    }
    if !(diffusivity.is_finite() && diffusivity > 0.0) {
        return Err(Error::param("D", format!("must be > 0, got {diffusivity}")));
    }
    let (u, v) = (eq.u, eq.v);
    let (d, chi) = mot.eval(v);
    if !(d > 0.0) {
        return Err(Error::Domain(format!("motility d({v}) = {d} is not positive")));
    }
    let fp = kin.response_deriv(v);
    let jacobian = [
        [
            kin.gamma() * kin.response(v) - kin.theta() - 2.0 * kin.alpha() * u,
            kin.gamma() * u * fp,
        ],
        [-kin.response(v), -u * fp + kin.growth_deriv(v)],
    ];
    Ok(LinearizedSystem {
        diffusion: [[d, -u * chi], [0.0, diffusivity]],
        jacobian,
        equilibrium: *eq,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StabilityClass {
    Stable,
    HopfUnstable,
    SteadyUnstable,
    Marginal,
}

impl StabilityClass {
    pub fn as_str(self) -> &'static str {
        match self {
            StabilityClass::Stable => "stable",
            StabilityClass::HopfUnstable => "hopf_unstable",
            StabilityClass::SteadyUnstable => "steady_unstable",
            StabilityClass::Marginal => "marginal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionPoint {
    pub k: f64,
    pub a: f64,
    pub b: f64,
    /// `a^2 - 4 b`.
    pub delta: f64,
    /// Roots of `rho^2 + a rho + b`, larger real part first.
    pub rho: [Complex64; 2],
    pub class: StabilityClass,
}

impl DispersionPoint {
    pub fn max_re(&self) -> f64 {
        self.rho[0].re.max(self.rho[1].re)
    }
}

/// Roots of `rho^2 + a rho + b = 0` without cancellation: the larger-magnitude
/// real root comes from the quadratic formula, the other from `b / q`.
pub fn quadratic_roots(a: f64, b: f64) -> [Complex64; 2] {
    let delta = a * a - 4.0 * b;
    if delta >= 0.0 {
        let sq = delta.sqrt();
        let q = -0.5 * (a + if a >= 0.0 { sq } else { -sq });
        if q == 0.0 {
            return [Complex64::new(0.0, 0.0); 2];
        }
        let (r1, r2) = (q, b / q);
        let (hi, lo) = if r1 >= r2 { (r1, r2) } else { (r2, r1) };
        [Complex64::new(hi, 0.0), Complex64::new(lo, 0.0)]
    } else {
        let im = 0.5 * (-delta).sqrt();
        [Complex64::new(-0.5 * a, im), Complex64::new(-0.5 * a, -im)]
    }
}

fn classify(a: f64, b: f64, delta: f64, max_re: f64) -> StabilityClass {
    if max_re.abs() <= MARGINAL_TOL {
        StabilityClass::Marginal
    } else if max_re < 0.0 {
        StabilityClass::Stable
    } else if delta < 0.0 && a < 0.0 {
        StabilityClass::HopfUnstable
    } else {
        debug_assert!(b < 0.0 || a < 0.0);
        StabilityClass::SteadyUnstable
    }
}

/// Dispersion relation at wavenumber `k >= 0`.
pub fn dispersion(sys: &LinearizedSystem, k: f64) -> DispersionPoint {
    let eta = k * k;
    let a = sys.trace_coeff(eta);
    let b = sys.det_coeff(eta);
    let delta = a * a - 4.0 * b;
    let rho = quadratic_roots(a, b);
    let max_re = rho[0].re.max(rho[1].re);
    DispersionPoint {
        k,
        a,
        b,
        delta,
        rho,
        class: classify(a, b, delta, max_re),
    }
}

/// Coefficients of the Rosenzweig-MacArthur (`alpha = 0`) dispersion relation
/// at coexistence: `a = (d + D) eta - beta1`, `b = d D eta^2 - beta2 eta + beta3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaCoefficients {
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
}

impl BetaCoefficients {
    pub fn trace_coeff(&self, diffusivity: f64, d_star: f64, eta: f64) -> f64 {
        (d_star + diffusivity) * eta - self.beta1
    }

    pub fn det_coeff(&self, diffusivity: f64, d_star: f64, eta: f64) -> f64 {
        d_star * diffusivity * eta * eta - self.beta2 * eta + self.beta3
    }

    /// `a^2 - 4b` written as a quadratic in `eta`.
    pub fn discriminant(&self, diffusivity: f64, d_star: f64, eta: f64) -> f64 {
        let (p, q, r) = self.discriminant_coeffs(diffusivity, d_star);
        p * eta * eta - 2.0 * q * eta + r
    }

    /// `(p, q, r)` with `Delta(eta) = p eta^2 - 2 q eta + r`.
    fn discriminant_coeffs(&self, diffusivity: f64, d_star: f64) -> (f64, f64, f64) {
        let diff = diffusivity - d_star;
        (
            diff * diff,
            (diffusivity + d_star) * self.beta1 - 2.0 * self.beta2,
            self.beta1 * self.beta1 - 4.0 * self.beta3,
        )
    }

    /// `Lambda = beta2^2 - 4 beta3 D d`.
    pub fn steady_discriminant(&self, diffusivity: f64, d_star: f64) -> f64 {
        self.beta2 * self.beta2 - 4.0 * self.beta3 * diffusivity * d_star
    }
}

/// Closed-form beta coefficients for Rosenzweig-MacArthur kinetics with
/// `alpha = 0`, evaluated at the coexistence state `eq`.
pub fn beta_coefficients(
    kin: &KineticsModel,
    mot: &MotilityModel,
    eq: &Equilibrium,
) -> Result<BetaCoefficients> {
    if !matches!(kin.kind(), KineticsKind::RosenzweigMacArthur) || kin.alpha() != 0.0 {
        return Err(Error::Unsupported(
            "beta coefficients require Rosenzweig-MacArthur kinetics with alpha = 0".into(),
        ));
    }
    if eq.kind != EquilibriumKind::Coexistence {
        return Err(Error::Unsupported(format!(
            "beta coefficients are defined at coexistence, got {}",
            eq.kind.as_str()
        )));
    }
    let (mu, k, lambda, theta) = (kin.mu(), kin.capacity(), kin.half_saturation(), kin.theta());
    let v = eq.v;
    let (d, chi) = mot.eval(v);
    let beta1 = mu * v * (k - lambda - 2.0 * v) / (k * (lambda + v));
    let beta2 = beta1 * d - mu * v * (k - v) * chi / k;
    let beta3 = lambda * theta * mu * (k - v) / (k * (lambda + v));
    Ok(BetaCoefficients { beta1, beta2, beta3 })
}

/// Hopf (`a = 0`) and steady-state (`b = 0`) bifurcation curves in the
/// `(eta, D)` plane.
#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationCurve {
    pub eta: Vec<f64>,
    pub d_hopf: Vec<f64>,
    pub d_steady: Vec<f64>,
}

/// Evaluates `D_H(eta)` and `D_S(eta)` on `eta_grid`. Negative values are
/// returned unchanged.
pub fn bifurcation_curves(
    kin: &KineticsModel,
    mot: &MotilityModel,
    eq: &Equilibrium,
    eta_grid: &[f64],
) -> Result<BifurcationCurve> {
    if let Some(bad) = eta_grid.iter().find(|&&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::param("eta", format!("grid values must be > 0, got {bad}")));
    }
    // The curves do not depend on D; any positive value linearizes.
    let sys = linearize(kin, mot, 1.0, eq)?;
    Ok(BifurcationCurve {
        eta: eta_grid.to_vec(),
        d_hopf: eta_grid.iter().map(|&e| hopf_curve(&sys, e)).collect(),
        d_steady: eta_grid.iter().map(|&e| steady_curve(&sys, e)).collect(),
    })
}

/// `D` solving `a(D, eta) = 0`.
pub fn hopf_curve(sys: &LinearizedSystem, eta: f64) -> f64 {
    let b = &sys.jacobian;
    (b[0][0] + b[1][1]) / eta - sys.d_star()
}

/// `D` solving `b(D, eta) = 0`.
pub fn steady_curve(sys: &LinearizedSystem, eta: f64) -> f64 {
    let b = &sys.jacobian;
    let d = sys.d_star();
    let c1 = d * b[1][1] + sys.taxis_strength() * b[1][0];
    let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
    (c1 * eta - det) / (d * eta * eta - b[0][0] * eta)
}

/// Interval of `eta = k^2` values; `upper` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub lower: f64,
    pub upper: f64,
}

impl Band {
    pub fn contains(&self, eta: f64) -> bool {
        eta > self.lower && eta < self.upper
    }

    fn probe(&self) -> f64 {
        if self.upper.is_finite() {
            0.5 * (self.lower + self.upper)
        } else {
            2.0 * self.lower + 1.0
        }
    }
}

/// Band of `eta` where `b(D, eta) < 0`: present iff `beta2 > 0` and
/// `Lambda > 0`. Endpoints are the roots of `b(D, .)`; the sign inside is
/// verified before returning.
pub fn steady_band(beta: &BetaCoefficients, diffusivity: f64, d_star: f64) -> Result<Option<Band>> {
    if !(diffusivity > 0.0 && d_star > 0.0) {
        return Err(Error::param("D", "D and d(v_*) must be > 0"));
    }
    let lambda = beta.steady_discriminant(diffusivity, d_star);
    if !(beta.beta2 > 0.0 && lambda > 0.0) {
        return Ok(None);
    }
    let lead = diffusivity * d_star;
    let upper = (beta.beta2 + lambda.sqrt()) / (2.0 * lead);
    // Product of the roots is beta3 / (D d).
    let lower = beta.beta3 / (lead * upper);
    let band = Band { lower, upper };
    let mid = beta.det_coeff(diffusivity, d_star, band.probe());
    if !(mid < 0.0) {
        return Err(Error::BandCheck(format!(
            "b(D, eta) = {mid} at the midpoint of ({lower}, {upper})"
        )));
    }
    Ok(Some(band))
}

/// Band of `eta >= 0` where the discriminant `a^2 - 4b` is negative, from the
/// roots of the discriminant itself. The degenerate case `D = d(v_*)` makes
/// the discriminant linear in `eta`.
pub fn hopf_band(beta: &BetaCoefficients, diffusivity: f64, d_star: f64) -> Result<Option<Band>> {
    let (p, q, r) = beta.discriminant_coeffs(diffusivity, d_star);
    let scale = (diffusivity * diffusivity + d_star * d_star).max(f64::MIN_POSITIVE);
    let band = if p <= 1e-28 * scale {
        // r - 2 q eta
        if q == 0.0 {
            (r < 0.0).then_some(Band {
                lower: 0.0,
                upper: f64::INFINITY,
            })
        } else {
            let root = r / (2.0 * q);
            if q > 0.0 {
                if r < 0.0 {
                    Some(Band { lower: 0.0, upper: f64::INFINITY })
                } else {
                    Some(Band { lower: root, upper: f64::INFINITY })
                }
            } else if root > 0.0 {
                Some(Band { lower: 0.0, upper: root })
            } else {
                None
            }
        }
    } else {
        let disc = q * q - p * r;
        if disc <= 0.0 {
            None
        } else {
            let sq = disc.sqrt();
            let hi = (q + sq) / p;
            let lo = (q - sq) / p;
            (hi > 0.0).then_some(Band {
                lower: lo.max(0.0),
                upper: hi,
            })
        }
    };
    if let Some(band) = band {
        let probe = band.probe();
        let mid = beta.discriminant(diffusivity, d_star, probe);
        if !(mid < 0.0) {
            return Err(Error::BandCheck(format!(
                "discriminant {mid} at eta = {probe} inside ({}, {})",
                band.lower, band.upper
            )));
        }
    }
    Ok(band)
}

/// Diffusivity at which `Lambda = beta2^2 - 4 beta3 D d` changes sign, by
/// bisection. `None` when `beta2 <= 0` (no steady band for any `D`).
pub fn steady_threshold_diffusivity(beta: &BetaCoefficients, d_star: f64) -> Result<Option<f64>> {
    if !(beta.beta2 > 0.0) {
        return Ok(None);
    }
    if !(beta.beta3 > 0.0 && d_star > 0.0) {
        return Err(Error::Unsupported(
            "threshold requires beta3 > 0 and d(v_*) > 0".into(),
        ));
    }
    let lam = |dd: f64| beta.steady_discriminant(dd, d_star);
    let mut hi = 1.0;
    while lam(hi) >= 0.0 {
        hi *= 2.0;
    }
    bisect(lam, 0.0, hi, 0.0).map(Some)
}

/// Mode `cos(n pi x / ell)` with its dispersion point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub n: usize,
    pub point: DispersionPoint,
}

impl Mode {
    pub fn k(&self) -> f64 {
        self.point.k
    }

    pub fn class(&self) -> StabilityClass {
        self.point.class
    }
}

/// `eta` beyond which `a > 0` and `b > 0`, so every mode is stable.
pub fn stability_cutoff(sys: &LinearizedSystem) -> f64 {
    let b = &sys.jacobian;
    let (d, dd) = (sys.d_star(), sys.prey_diffusivity());
    let eta_a = (b[0][0] + b[1][1]) / (d + dd);
    let lead = d * dd;
    let mid = d * b[1][1] + sys.taxis_strength() * b[1][0] + b[0][0] * dd;
    let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
    let disc = mid * mid - 4.0 * lead * det;
    let eta_b = if disc >= 0.0 {
        (mid + disc.sqrt()) / (2.0 * lead)
    } else {
        0.0
    };
    eta_a.max(eta_b).max(0.0)
}

/// Smallest `n` whose `eta = (n pi / ell)^2` exceeds every instability band,
/// plus [`MODE_MARGIN`].
pub fn mode_cutoff(sys: &LinearizedSystem, ell: f64) -> usize {
    let cut = stability_cutoff(sys);
    let n = (cut.sqrt() * ell / std::f64::consts::PI).floor() as usize + 1;
    n + MODE_MARGIN
}

/// Dispersion points of modes `n = 0..=n_max` on `[0, ell]`.
pub fn interval_spectrum(sys: &LinearizedSystem, ell: f64, n_max: usize) -> Vec<Mode> {
    (0..=n_max)
        .map(|n| Mode {
            n,
            point: dispersion(sys, n as f64 * std::f64::consts::PI / ell),
        })
        .collect()
}

/// Non-stable interval modes `k = n pi / ell` about `eq`.
pub fn unstable_modes(
    kin: &KineticsModel,
    mot: &MotilityModel,
    diffusivity: f64,
    eq: &Equilibrium,
    ell: f64,
) -> Result<Vec<Mode>> {
    if !(ell > 0.0 && ell.is_finite()) {
        return Err(Error::param("ell", format!("must be > 0, got {ell}")));
    }
    let sys = linearize(kin, mot, diffusivity, eq)?;
    let n_max = mode_cutoff(&sys, ell);
    Ok(interval_spectrum(&sys, ell, n_max)
        .into_iter()
        .filter(|m| m.class() != StabilityClass::Stable)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilizingDiffusivity {
    /// The `n = 0` mode is not stable, independently of `D`.
    pub homogeneous_unstable: bool,
    /// Supremum of `D_H` and `D_S` over `eta = (n pi / ell)^2`, `n >= 1`,
    /// floored at zero (the `eta -> inf` limit). Absent when the homogeneous
    /// mode is unstable.
    pub threshold: Option<f64>,
}

/// Smallest prey diffusivity stabilizing every admissible mode on `[0, ell]`.
pub fn min_stabilizing_d(
    kin: &KineticsModel,
    mot: &MotilityModel,
    eq: &Equilibrium,
    ell: f64,
) -> Result<StabilizingDiffusivity> {
    if !(ell > 0.0 && ell.is_finite()) {
        return Err(Error::param("ell", format!("must be > 0, got {ell}")));
    }
    if eq.kind != EquilibriumKind::Coexistence {
        return Err(Error::Unsupported("stabilizing diffusivity is defined at coexistence".into()));
    }
    let sys = linearize(kin, mot, 1.0, eq)?;
    if dispersion(&sys, 0.0).class != StabilityClass::Stable {
        return Ok(StabilizingDiffusivity {
            homogeneous_unstable: true,
            threshold: None,
        });
    }
    let b = &sys.jacobian;
    let d = sys.d_star();
    let trace = b[0][0] + b[1][1];
    let c1 = d * b[1][1] + sys.taxis_strength() * b[1][0];
    let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
    let mut best = 0.0f64;
    let mut n = 1usize;
    loop {
        let eta = (n as f64 * std::f64::consts::PI / ell).powi(2);
        best = best.max(hopf_curve(&sys, eta)).max(steady_curve(&sys, eta));
        // Both curves are bounded by terms decreasing in eta (B1 <= 0 here).
        let hopf_bound = trace.abs() / eta - d;
        let steady_bound = (c1.abs() / eta + det.abs() / (eta * eta)) / d;
        if (hopf_bound <= best && steady_bound <= best.max(1e-13)) || n >= 10_000_000 {
            break;
        }
        n += 1;
    }
    Ok(StabilizingDiffusivity {
        homogeneous_unstable: false,
        threshold: Some(best),
    })
}
