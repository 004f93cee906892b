//! Normalized resonance line shapes.
//!
//! Both shapes are Lorentzian in the core but carry compact support: the
//! wings are cut at [`WINDOW_WIDTHS`] full widths from the center and the
//! remaining mass is rescaled to exactly 1. A pure Lorentzian keeps ~0.64%
//! of its mass outside ±50 FWHM, so without the rescaling the windowed
//! integral could never meet the 1e-4 normalization budget; with it, the
//! unit integral holds exactly on the support and therefore also over the
//! positive half-line whenever the center sits more than 50 widths above
//! zero. The cut moves the peak value up by the same 0.64% relative to the
//! textbook 2/(π·FWHM).
//!
//! The asymmetric shape is a phenomenological stand-in for line asymmetry:
//! two half-Lorentzians of different widths joined continuously at the
//! center, rescaled to unit total mass. It reduces to the symmetric shape
//! when the two widths agree, and mirroring the evaluation point about the
//! center is the same as swapping the widths.

use serde::{Deserialize, Serialize};

use crate::error::EsrError;
use crate::Result;

/// Support half-width in units of the full width at half maximum.
pub const WINDOW_WIDTHS: f64 = 50.0;

/// Fraction of a unit Lorentzian's mass inside ±[`WINDOW_WIDTHS`] FWHM:
/// (2/π)·atan(100) ≈ 0.993634.
pub fn window_mass() -> f64 {
    (2.0 / std::f64::consts::PI) * (2.0 * WINDOW_WIDTHS).atan()
}

/// Asymmetry of a two-half-width line: a_s = (Γ_R − Γ_L)/(Γ_R + Γ_L).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryParams {
    pub a_s: f64,
}

impl AsymmetryParams {
    pub fn new(a_s: f64) -> Result<Self> {
        if !(a_s.is_finite() && a_s.abs() < 1.0) {
            return Err(EsrError::param("a_s", "must satisfy |a_s| < 1"));
        }
        Ok(AsymmetryParams { a_s })
    }

    /// Left and right full widths for a given mean width.
    pub fn widths(&self, fwhm: f64) -> (f64, f64) {
        (fwhm * (1.0 - self.a_s), fwhm * (1.0 + self.a_s))
    }
}

/// Windowed Lorentzian density (1/Hz), unit integral over its support
/// |ω − ω₀| ≤ 50·fwhm. FWHM crossings stay at ω₀ ± fwhm/2.
pub fn lorentzian(omega: f64, omega0: f64, fwhm: f64) -> f64 {
    debug_assert!(fwhm > 0.0);
    let x = omega - omega0;
    if x.abs() > WINDOW_WIDTHS * fwhm {
        return 0.0;
    }
    let gamma = 0.5 * fwhm;
    (1.0 / std::f64::consts::PI) * gamma / (x * x + gamma * gamma) / window_mass()
}

/// Windowed two-half-width Lorentzian density (1/Hz): half-width Γ_L/2 below
/// the center and Γ_R/2 above, continuous at the peak, unit total integral.
/// Support is 50·Γ_L below and 50·Γ_R above the center.
pub fn asym_lorentzian(omega: f64, omega0: f64, fwhm_left: f64, fwhm_right: f64) -> f64 {
    debug_assert!(fwhm_left > 0.0 && fwhm_right > 0.0);
    let x = omega - omega0;
    let (gamma_l, gamma_r) = (0.5 * fwhm_left, 0.5 * fwhm_right);
    if x < -WINDOW_WIDTHS * fwhm_left || x > WINDOW_WIDTHS * fwhm_right {
        return 0.0;
    }
    let gamma = if x < 0.0 { gamma_l } else { gamma_r };
    let peak_shape = gamma * gamma / (x * x + gamma * gamma);
    let total_mass = (2.0 * WINDOW_WIDTHS).atan() * (gamma_l + gamma_r);
    peak_shape / total_mass
}

/// Peak-normalized symmetric profile (value 1 at δ = 0), used by the map
/// synthesizer where dips scale against the exact-resonance value. Unlike
/// the unit-area densities this keeps the full Lorentzian tails: sub-step
/// line centers are recovered from exactly those wings when the sweep grid
/// is coarser than the line.
pub fn lorentzian_profile(delta: f64, fwhm: f64) -> f64 {
    let gamma = 0.5 * fwhm;
    gamma * gamma / (delta * delta + gamma * gamma)
}

/// Peak-normalized asymmetric profile, full tails.
pub fn asym_profile(delta: f64, fwhm_left: f64, fwhm_right: f64) -> f64 {
    let gamma = if delta < 0.0 {
        0.5 * fwhm_left
    } else {
        0.5 * fwhm_right
    };
    gamma * gamma / (delta * delta + gamma * gamma)
}
