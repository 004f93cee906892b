//! Minimum detectable spin count and its conversion to a concentration
//! against the lattice site density.
//!
//! ```text
//! N_min = (3·k_B·V_s·T_s / (g²β²μ₀·S(S+1))) · (Δω/ω) · 1/(η·Q_L) · √(P_n/P)
//! ```
//!
//! Δω/ω is a ratio of like units (both Hz here). The fill factor η defaults
//! to 1 and the mode volume to the full crystal volume — both conservative,
//! upper-bound readings for a field-confining dielectric.

use serde::{Deserialize, Serialize};

use crate::constants::CODATA;
use crate::error::EsrError;
use crate::spin::SpinQuantum;
use crate::Result;

/// Everything the spin-count formula needs.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SensitivityInput {
    /// Mode volume V_s, m³.
    pub mode_volume_m3: f64,
    /// Sample temperature T_s, K.
    pub sample_temperature_k: f64,
    /// Electron effective spin S.
    pub spin: SpinQuantum,
    /// g-factor entering the magnetic-moment scale.
    pub g: f64,
    /// Filling factor in (0, 1].
    pub fill_factor: f64,
    /// Loaded quality factor Q_L.
    pub loaded_q: f64,
    /// Noise-to-input power ratio P_n/P.
    pub noise_power_ratio: f64,
    /// Resonance line width Δω, Hz.
    pub line_width_hz: f64,
    /// Mode frequency ω, Hz.
    pub mode_frequency_hz: f64,
}

impl SensitivityInput {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mode_volume_m3", self.mode_volume_m3),
            ("sample_temperature_k", self.sample_temperature_k),
            ("g", self.g),
            ("loaded_q", self.loaded_q),
            ("noise_power_ratio", self.noise_power_ratio),
            ("line_width_hz", self.line_width_hz),
            ("mode_frequency_hz", self.mode_frequency_hz),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(EsrError::param(name, "must be finite and > 0"));
            }
        }
        if !(self.fill_factor > 0.0 && self.fill_factor <= 1.0) {
            return Err(EsrError::param("fill_factor", "must lie in (0, 1]"));
        }
        if self.spin.value() <= 0.0 {
            return Err(EsrError::param("spin", "S must be > 0"));
        }
        Ok(())
    }
}

/// Crystal lattice for the ppm conversion: one substitutional site per cubic
/// cell.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LatticeSpec {
    /// Cubic lattice constant, m.
    pub lattice_constant_m: f64,
    pub sites_per_cell: f64,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        // Perovskite cell, one substitutional site per cell.
        LatticeSpec {
            lattice_constant_m: 3.905e-10,
            sites_per_cell: 1.0,
        }
    }
}

impl LatticeSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lattice_constant_m.is_finite() && self.lattice_constant_m > 0.0) {
            return Err(EsrError::param("lattice_constant_m", "must be > 0"));
        }
        if !(self.sites_per_cell.is_finite() && self.sites_per_cell > 0.0) {
            return Err(EsrError::param("sites_per_cell", "must be > 0"));
        }
        Ok(())
    }

    /// Substitutional sites in a volume.
    pub fn sites_in(&self, volume_m3: f64) -> f64 {
        self.sites_per_cell * volume_m3 / self.lattice_constant_m.powi(3)
    }
}

/// Cylinder volume helper for crystal specimens.
pub fn cylinder_volume_m3(diameter_m: f64, height_m: f64) -> f64 {
    std::f64::consts::PI * (diameter_m / 2.0).powi(2) * height_m
}

/// Minimum detectable number of spins.
pub fn n_min(inp: &SensitivityInput) -> Result<f64> {
    inp.validate()?;
    let c = CODATA;
    let moment = inp.g * inp.g * c.bohr_magneton * c.bohr_magneton * c.vacuum_permeability;
    let thermal = 3.0 * c.boltzmann * inp.mode_volume_m3 * inp.sample_temperature_k;
    let spin_factor = inp.spin.casimir();
    let ratio = inp.line_width_hz / inp.mode_frequency_hz;
    Ok(thermal / (moment * spin_factor) * ratio / (inp.fill_factor * inp.loaded_q)
        * inp.noise_power_ratio.sqrt())
}

/// Converts a spin count in a volume to parts per million of the lattice
/// sites in that volume.
pub fn ppm_of(count: f64, volume_m3: f64, lattice: &LatticeSpec) -> Result<f64> {
    lattice.validate()?;
    if !(count.is_finite() && count >= 0.0) {
        return Err(EsrError::param("count", "must be finite and >= 0"));
    }
    if !(volume_m3.is_finite() && volume_m3 > 0.0) {
        return Err(EsrError::param("volume_m3", "must be > 0"));
    }
    Ok(1e6 * count / lattice.sites_in(volume_m3))
}

/// The crystal-cylinder operating point used throughout the docs and tests:
/// d = 3.27 mm × h = 3.66 mm at 20 mK, S = ½, g = g_e, Δω = 3×10⁵ Hz on the
/// 0.4546 GHz mode with Q_L = 1000 and P_n/P = 1.
pub fn reference_operating_point() -> SensitivityInput {
    SensitivityInput {
        mode_volume_m3: cylinder_volume_m3(3.27e-3, 3.66e-3),
        sample_temperature_k: 0.02,
        spin: SpinQuantum::HALF,
        g: CODATA.free_electron_g,
        fill_factor: 1.0,
        loaded_q: 1000.0,
        noise_power_ratio: 1.0,
        line_width_hz: 3.0e5,
        mode_frequency_hz: 4.546e8,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn g_squared_scaling() {
        let base = reference_operating_point();
        let mut doubled = base;
        doubled.g = 2.0 * base.g;
        let ratio = n_min(&base).unwrap() / n_min(&doubled).unwrap();
        assert!((ratio - 4.0).abs() < 1e-12);
    }

    #[test]
    fn q_scaling() {
        let base = reference_operating_point();
        let mut doubled = base;
        doubled.loaded_q = 2.0 * base.loaded_q;
        let ratio = n_min(&base).unwrap() / n_min(&doubled).unwrap();
        assert!((ratio - 2.0).abs() < 1e-12);
    }

    #[test]
    fn reference_point_spin_count() {
        // Independent constant-by-constant evaluation:
        //   3k_B·V·T = 2.54626e-32, g²β²μ₀·S(S+1) = 3.24992e-52,
        //   Δω/ω = 6.59921e-4, 1/(ηQ) = 1e-3  ⇒  N_min ≈ 5.1704e13.
        let n = n_min(&reference_operating_point()).unwrap();
        assert!((n - 5.1704e13).abs() / 5.1704e13 < 1e-3, "N_min = {n:e}");
    }

    #[test]
    fn cylinder_site_count() {
        let v = cylinder_volume_m3(3.27e-3, 3.66e-3);
        assert!((v - 3.073e-8).abs() < 1e-11);
        let lattice = LatticeSpec::default();
        let sites = lattice.sites_in(v);
        assert!((sites - 5.16e20).abs() / 5.16e20 < 1e-2, "sites = {sites:e}");
    }

    #[test]
    fn ppm_conversion_points() {
        let v = cylinder_volume_m3(3.27e-3, 3.66e-3);
        let lattice = LatticeSpec::default();
        // Saturation: every site occupied.
        let sites = lattice.sites_in(v);
        assert!((ppm_of(sites, v, &lattice).unwrap() - 1e6).abs() < 1e-6);
        // 5.16e14 spins in the crystal ≈ 1 ppm.
        let one_ppm = ppm_of(5.16e14, v, &lattice).unwrap();
        assert!((one_ppm - 1.0).abs() < 1e-3, "ppm = {one_ppm}");
    }

    #[test]
    fn reference_point_lands_near_one_ppm() {
        let inp = reference_operating_point();
        let n = n_min(&inp).unwrap();
        let ppm = ppm_of(n, inp.mode_volume_m3, &LatticeSpec::default()).unwrap();
        assert!(
            ppm.log10().abs() <= 1.0,
            "expected within one decade of 1 ppm, got {ppm}"
        );
    }

    #[test]
    fn rejects_nonpositive_inputs() {
        let mut bad = reference_operating_point();
        bad.loaded_q = 0.0;
        assert!(n_min(&bad).is_err());
        let mut bad2 = reference_operating_point();
        bad2.fill_factor = 1.5;
        assert!(n_min(&bad2).is_err());
    }

    proptest! {
        #[test]
        fn homogeneity_identities(lambda in 0.1f64..10.0) {
            let base = reference_operating_point();
            let n0 = n_min(&base).unwrap();

            // Scaling both V_s and T_s by λ scales N_min by λ².
            let mut scaled = base;
            scaled.mode_volume_m3 *= lambda;
            scaled.sample_temperature_k *= lambda;
            let n1 = n_min(&scaled).unwrap();
            prop_assert!((n1 / n0 - lambda * lambda).abs() < 1e-9 * lambda * lambda);

            // Scaling P_n/P by λ scales N_min by √λ.
            let mut noisy = base;
            noisy.noise_power_ratio *= lambda;
            let n2 = n_min(&noisy).unwrap();
            prop_assert!((n2 / n0 - lambda.sqrt()).abs() < 1e-12 * lambda.sqrt().max(1.0));
        }

        #[test]
        fn monotonicity(factor in 1.01f64..4.0) {
            let base = reference_operating_point();
            let lattice = LatticeSpec::default();
            let ppm0 = ppm_of(n_min(&base).unwrap(), base.mode_volume_m3, &lattice).unwrap();

            let mut hotter = base;
            hotter.sample_temperature_k *= factor;
            prop_assert!(ppm_of(n_min(&hotter).unwrap(), base.mode_volume_m3, &lattice).unwrap() > ppm0);

            let mut wider = base;
            wider.line_width_hz *= factor;
            prop_assert!(ppm_of(n_min(&wider).unwrap(), base.mode_volume_m3, &lattice).unwrap() > ppm0);

            let mut better_q = base;
            better_q.loaded_q *= factor;
            prop_assert!(ppm_of(n_min(&better_q).unwrap(), base.mode_volume_m3, &lattice).unwrap() < ppm0);

            let mut bigger_g = base;
            bigger_g.g *= factor;
            prop_assert!(ppm_of(n_min(&bigger_g).unwrap(), base.mode_volume_m3, &lattice).unwrap() < ppm0);

            let mut higher_f = base;
            higher_f.mode_frequency_hz *= factor;
            prop_assert!(ppm_of(n_min(&higher_f).unwrap(), base.mode_volume_m3, &lattice).unwrap() < ppm0);
        }
    }
}
