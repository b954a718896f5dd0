//! Phase-dependent reflection amplitude of an IRS element.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Parameters of the amplitude law
/// `α(φ) = (1 − κ)·((sin(φ − ϑ) + 1)/2)^ξ + κ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseShiftProfile {
    kappa_min: f64,
    xi: f64,
    vartheta: f64,
}

impl PhaseShiftProfile {
    pub fn new(kappa_min: f64, xi: f64, vartheta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&kappa_min) {
            return Err(Error::Domain(format!("kappa_min must lie in [0, 1], got {kappa_min}")));
        }
        if !(xi >= 0.0 && xi.is_finite()) {
            return Err(Error::Domain(format!("xi must be finite and >= 0, got {xi}")));
        }
        if !(vartheta >= 0.0 && vartheta.is_finite()) {
            return Err(Error::Domain(format!("vartheta must be finite and >= 0, got {vartheta}")));
        }
        Ok(PhaseShiftProfile { kappa_min, xi, vartheta })
    }

    /// Unit amplitude at every phase.
    pub fn ideal() -> Self {
        PhaseShiftProfile { kappa_min: 1.0, xi: 0.0, vartheta: 0.0 }
    }

    pub fn kappa_min(&self) -> f64 {
        self.kappa_min
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn vartheta(&self) -> f64 {
        self.vartheta
    }

    pub fn is_ideal(&self) -> bool {
        self.kappa_min == 1.0 || self.xi == 0.0
    }

    /// The phase that maximizes the amplitude, wrapped.
    pub fn peak_phase(&self) -> f64 {
        wrap_phase(self.vartheta + 0.5 * PI)
    }
}

impl Default for PhaseShiftProfile {
    fn default() -> Self {
        PhaseShiftProfile { kappa_min: 0.8, xi: 1.6, vartheta: 0.43 * PI }
    }
}

/// Wraps a phase to `[−π, π)`.
pub fn wrap_phase(phi: f64) -> f64 {
    let w = (phi + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if w >= PI { w - 2.0 * PI } else { w }
}

/// Phases of the IRS elements, each kept in `[−π, π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector(Vec<f64>);

impl PhaseVector {
    pub fn new(phases: impl IntoIterator<Item = f64>) -> Self {
        PhaseVector(phases.into_iter().map(wrap_phase).collect())
    }

    pub fn constant(n: usize, phi: f64) -> Self {
        Self::new(std::iter::repeat_n(phi, n))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn amplitude(phi: f64, profile: &PhaseShiftProfile) -> f64 {
    if profile.is_ideal() {
        return 1.0;
    }
    let base = 0.5 * ((phi - profile.vartheta).sin() + 1.0);
    (1.0 - profile.kappa_min) * base.max(0.0).powf(profile.xi) + profile.kappa_min
}

/// `dα/dφ`. Zero for the ideal profile, and zero by convention at the
/// trough when `ξ < 1` where the power term is singular.
pub fn amplitude_derivative(phi: f64, profile: &PhaseShiftProfile) -> f64 {
    if profile.is_ideal() {
        return 0.0;
    }
    let arg = phi - profile.vartheta;
    let base = 0.5 * (arg.sin() + 1.0);
    if base <= 0.0 {
        return 0.0;
    }
    0.5 * (1.0 - profile.kappa_min) * profile.xi * arg.cos() * base.powf(profile.xi - 1.0)
}
