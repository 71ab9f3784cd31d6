use std::fmt;

use super::ScalarFn;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotilityKind {
    D1,
    D2,
    D3,
    Constant,
    Custom,
}

#[derive(Clone)]
enum Repr {
    /// `d(v) = 1 / (offset + exp(slope (v - 1)))`.
    Sigmoid { offset: f64, slope: f64 },
    Constant { d: f64, chi: f64 },
    Custom { d: ScalarFn, d_prime: ScalarFn, chi: ScalarFn },
}

/// Predator motility `d(v)` and prey-taxis sensitivity `chi(v)`.
#[derive(Clone)]
pub struct MotilityModel {
    kind: MotilityKind,
    repr: Repr,
    chi_is_minus_dprime: bool,
}

impl fmt::Debug for MotilityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_struct("MotilityModel");
        s.field("kind", &self.kind);
        if let Repr::Constant { d, chi } = self.repr {
            s.field("d", &d).field("chi", &chi);
        }
        s.field("chi_is_minus_dprime", &self.chi_is_minus_dprime).finish()
    }
}

impl MotilityModel {
    fn sigmoid(kind: MotilityKind, offset: f64, slope: f64) -> Self {
        MotilityModel {
            kind,
            repr: Repr::Sigmoid { offset, slope },
            chi_is_minus_dprime: true,
        }
    }

    /// `d1(v) = 1 / (1 + e^{2(v-1)})`, `chi = -d1'`.
    pub fn d1() -> Self {
        Self::sigmoid(MotilityKind::D1, 1.0, 2.0)
    }

    /// `d2(v) = 1 / (1 + e^{(v-1)/10})`, `chi = -d2'`.
    pub fn d2() -> Self {
        Self::sigmoid(MotilityKind::D2, 1.0, 0.1)
    }

    /// `d3(v) = 1 / (9 + e^{2(v-1)})`, `chi = -d3'`.
    pub fn d3() -> Self {
        Self::sigmoid(MotilityKind::D3, 9.0, 2.0)
    }

    /// Constant motility with constant taxis sensitivity. A negative `chi`
    /// (prey repulsion) is representable; the hypothesis check reports it.
    pub fn constant(d: f64, chi: f64) -> Result<Self> {
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::param("d_const", format!("must be finite and > 0, got {d}")));
        }
        if !chi.is_finite() {
            return Err(Error::param("chi_const", format!("must be finite, got {chi}")));
        }
        Ok(MotilityModel {
            kind: MotilityKind::Constant,
            repr: Repr::Constant { d, chi },
            chi_is_minus_dprime: chi == 0.0,
        })
    }

    pub fn custom(d: ScalarFn, d_prime: ScalarFn, chi: ScalarFn, chi_is_minus_dprime: bool) -> Self {
        MotilityModel {
            kind: MotilityKind::Custom,
            repr: Repr::Custom { d, d_prime, chi },
            chi_is_minus_dprime,
        }
    }

    pub fn kind(&self) -> MotilityKind {
        self.kind
    }

    pub fn chi_is_minus_dprime(&self) -> bool {
        self.chi_is_minus_dprime
    }

    #[inline]
    pub fn motility(&self, v: f64) -> f64 {
        match &self.repr {
            Repr::Sigmoid { offset, slope } => 1.0 / (offset + (slope * (v - 1.0)).exp()),
            Repr::Constant { d, .. } => *d,
            Repr::Custom { d, .. } => d(v),
        }
    }

    #[inline]
    pub fn motility_deriv(&self, v: f64) -> f64 {
        match &self.repr {
            Repr::Sigmoid { offset, slope } => {
                let d = 1.0 / (offset + (slope * (v - 1.0)).exp());
                // e / (c + e)^2 = d (1 - c d); stays finite when e overflows.
                -slope * d * (1.0 - offset * d)
            }
            Repr::Constant { .. } => 0.0,
            Repr::Custom { d_prime, .. } => d_prime(v),
        }
    }

    #[inline]
    pub fn taxis(&self, v: f64) -> f64 {
        match &self.repr {
            Repr::Sigmoid { .. } => -self.motility_deriv(v),
            Repr::Constant { chi, .. } => *chi,
            Repr::Custom { chi, .. } => chi(v),
        }
    }

    /// `(d(v), chi(v))` sharing one exponential for the builtins.
    #[inline]
    pub fn eval(&self, v: f64) -> (f64, f64) {
        match &self.repr {
            Repr::Sigmoid { offset, slope } => {
                let d = 1.0 / (offset + (slope * (v - 1.0)).exp());
                (d, slope * d * (1.0 - offset * d))
            }
            Repr::Constant { d, chi } => (*d, *chi),
            Repr::Custom { d, chi, .. } => (d(v), chi(v)),
        }
    }
}
