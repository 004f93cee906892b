//! Physical constants (CODATA 2018), frozen at construction.

/// Fundamental constants used throughout the crate. All values are CODATA
/// 2018; the set is immutable after construction so every module computes
/// against the same numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Planck constant, J·s (exact).
    pub h: f64,
    /// Bohr magneton β, J/T.
    pub bohr_magneton: f64,
    /// Boltzmann constant k_B, J/K (exact).
    pub boltzmann: f64,
    /// Vacuum permeability μ₀, T·m/A.
    pub vacuum_permeability: f64,
    /// Free-electron g-factor magnitude g_e.
    pub free_electron_g: f64,
    /// Electron gyromagnetic ratio magnitude γ_S, rad/(s·T).
    pub gamma_electron: f64,
    /// Proton gyromagnetic ratio γ_I, rad/(s·T).
    pub gamma_proton: f64,
}

/// CODATA 2018 values.
pub const CODATA: PhysicalConstants = PhysicalConstants {
    h: 6.626_070_15e-34,
    bohr_magneton: 9.274_010_078_3e-24,
    boltzmann: 1.380_649e-23,
    vacuum_permeability: 1.256_637_062_12e-6,
    free_electron_g: 2.002_319_304_362_56,
    gamma_electron: 1.760_859_630_23e11,
    gamma_proton: 2.675_221_874_4e8,
};

impl PhysicalConstants {
    /// Zeeman frequency g·β·B/h in Hz for a field in Tesla.
    pub fn zeeman_frequency_hz(&self, g: f64, b_tesla: f64) -> f64 {
        g * self.bohr_magneton * b_tesla / self.h
    }

    /// Resonance field h·f/(g·β) in Tesla for a transition frequency in Hz.
    pub fn resonance_field_tesla(&self, g: f64, frequency_hz: f64) -> f64 {
        self.h * frequency_hz / (g * self.bohr_magneton)
    }
}
