//! Run configuration: JSON schema, defaults, and aggregated validation.
//!
//! Validation never stops at the first problem — every offending key is
//! reported with the constraint it violates. Unknown keys are rejected at
//! the top level and inside every section, so typos cannot silently fall
//! back to defaults.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use esr_core::hamiltonian::{SpinSystem, DEFAULT_FIELD_STEP_T};
use esr_core::lineshape::AsymmetryParams;
use esr_core::spectrum::{ModeSpec, SynthParams};
use esr_core::spin::SpinQuantum;

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "ESR_OUT_DIR";
const TOP_LEVEL_KEYS: [&str; 5] = ["spin_system", "modes", "sweep", "synth", "output"];

/// One validation failure: the offending key and the violated constraint.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigError {
    pub key: String,
    pub constraint: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.key, self.constraint)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinSystemConfig {
    pub s: f64,
    pub i: f64,
    pub g_par: f64,
    pub g_perp: f64,
    pub a_par_hz: f64,
    pub e_rhombic_hz: f64,
    pub d_fine_hz: f64,
    pub line_width_fwhm_hz: f64,
}

impl Default for SpinSystemConfig {
    fn default() -> Self {
        // Effective spin-1/2 ion, I = 0, on the measured parallel g-factor.
        SpinSystemConfig {
            s: 0.5,
            i: 0.0,
            g_par: 5.51,
            g_perp: 0.0,
            a_par_hz: 0.0,
            e_rhombic_hz: 0.0,
            d_fine_hz: 0.0,
            line_width_fwhm_hz: 3.0e5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub frequency_hz: f64,
    #[serde(default = "default_q")]
    pub loaded_q: f64,
    #[serde(default = "default_theta")]
    pub theta_rad: f64,
    #[serde(default = "default_fill")]
    pub fill_factor: f64,
}

fn default_q() -> f64 {
    1000.0
}
fn default_theta() -> f64 {
    std::f64::consts::FRAC_PI_2
}
fn default_fill() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub b_min_t: f64,
    pub b_max_t: f64,
    pub b_step_t: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            b_min_t: 0.0,
            b_max_t: 1.0,
            b_step_t: DEFAULT_FIELD_STEP_T,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub spin_signal_depth_db: f64,
    pub noise_db_rms: f64,
    pub seed: u64,
    /// Two-half-width line asymmetry (Γ_R − Γ_L)/(Γ_R + Γ_L); absent means
    /// symmetric lines.
    pub asymmetry_a_s: Option<f64>,
    pub f_window_mode_widths: f64,
    pub f_points: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let p = SynthParams::default();
        SynthConfig {
            spin_signal_depth_db: p.spin_signal_depth_db,
            noise_db_rms: p.noise_db_rms,
            seed: p.seed,
            asymmetry_a_s: None,
            f_window_mode_widths: p.f_window_mode_widths,
            f_points: p.f_points,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub spin_system: SpinSystemConfig,
    pub modes: Vec<ModeConfig>,
    pub sweep: SweepConfig,
    pub synth: SynthConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            spin_system: SpinSystemConfig::default(),
            // The three low-order modes used across the docs.
            modes: [4.546e8, 5.993e8, 6.228e8]
                .iter()
                .map(|&f| ModeConfig {
                    frequency_hz: f,
                    loaded_q: default_q(),
                    theta_rad: default_theta(),
                    fill_factor: default_fill(),
                })
                .collect(),
            sweep: SweepConfig::default(),
            synth: SynthConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl RunConfig {
    /// sha256 of the canonical serialized form; stamped into every artifact.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn spin_system(&self) -> SpinSystem {
        let c = &self.spin_system;
        SpinSystem {
            s: SpinQuantum::new(c.s).expect("validated"),
            i: SpinQuantum::new(c.i).expect("validated"),
            g_par: c.g_par,
            g_perp: c.g_perp,
            a_par_hz: c.a_par_hz,
            e_rhombic_hz: c.e_rhombic_hz,
            d_fine_hz: c.d_fine_hz,
            line_width_fwhm_hz: c.line_width_fwhm_hz,
        }
    }

    pub fn mode_specs(&self) -> Vec<ModeSpec> {
        self.modes
            .iter()
            .map(|m| ModeSpec {
                frequency_hz: m.frequency_hz,
                loaded_q: m.loaded_q,
                theta_rad: m.theta_rad,
                fill_factor: m.fill_factor,
            })
            .collect()
    }

    pub fn synth_params(&self) -> SynthParams {
        SynthParams {
            spin_signal_depth_db: self.synth.spin_signal_depth_db,
            noise_db_rms: self.synth.noise_db_rms,
            seed: self.synth.seed,
            asym: self
                .synth
                .asymmetry_a_s
                .map(|a| AsymmetryParams::new(a).expect("validated")),
            f_window_mode_widths: self.synth.f_window_mode_widths,
            f_points: self.synth.f_points,
        }
    }

    pub fn output_dir(&self) -> std::path::PathBuf {
        match &self.output.dir {
            Some(d) => d.into(),
            None => std::env::var(OUT_DIR_ENV)
                .unwrap_or_else(|_| "esr_out".to_string())
                .into(),
        }
    }
}

/// Parses and validates raw config text. All structural and physical
/// problems are aggregated; defaults fill any absent section.
pub fn validate_config(raw: &str) -> Result<RunConfig, Vec<ConfigError>> {
    let mut errors = Vec::new();

    if raw.trim().is_empty() {
        return Err(vec![ConfigError {
            key: "config".into(),
            constraint: format!(
                "empty file; expected a JSON object with (optional) keys: {}",
                TOP_LEVEL_KEYS.join(", ")
            ),
        }]);
    }

    let value: serde_json::Value = match serde_json::from_str(raw) {
        Ok(v) => v,
        Err(e) => {
            return Err(vec![ConfigError {
                key: "config".into(),
                constraint: format!(
                    "invalid JSON ({e}); expected an object with keys: {}",
                    TOP_LEVEL_KEYS.join(", ")
                ),
            }]);
        }
    };
    let obj = match value.as_object() {
        Some(o) => o,
        None => {
            return Err(vec![ConfigError {
                key: "config".into(),
                constraint: format!(
                    "expected a JSON object with keys: {}",
                    TOP_LEVEL_KEYS.join(", ")
                ),
            }]);
        }
    };

    for key in obj.keys() {
        if !TOP_LEVEL_KEYS.contains(&key.as_str()) {
            errors.push(ConfigError {
                key: key.clone(),
                constraint: format!("unknown key; known keys are: {}", TOP_LEVEL_KEYS.join(", ")),
            });
        }
    }

    fn section<T: Default + for<'de> Deserialize<'de>>(
        obj: &serde_json::Map<String, serde_json::Value>,
        name: &str,
        errors: &mut Vec<ConfigError>,
    ) -> T {
        match obj.get(name) {
            None => T::default(),
            Some(v) => match serde_json::from_value::<T>(v.clone()) {
                Ok(t) => t,
                Err(e) => {
                    errors.push(ConfigError {
                        key: name.into(),
                        constraint: e.to_string(),
                    });
                    T::default()
                }
            },
        }
    }

    let spin_system: SpinSystemConfig = section(obj, "spin_system", &mut errors);
    let sweep: SweepConfig = section(obj, "sweep", &mut errors);
    let synth: SynthConfig = section(obj, "synth", &mut errors);
    let output: OutputConfig = section(obj, "output", &mut errors);
    let modes: Vec<ModeConfig> = match obj.get("modes") {
        None => RunConfig::default().modes,
        Some(v) => match serde_json::from_value(v.clone()) {
            Ok(m) => m,
            Err(e) => {
                errors.push(ConfigError {
                    key: "modes".into(),
                    constraint: e.to_string(),
                });
                RunConfig::default().modes
            }
        },
    };

    let config = RunConfig {
        spin_system,
        modes,
        sweep,
        synth,
        output,
    };
    physical_validation(&config, &mut errors);

    if errors.is_empty() {
        Ok(config)
    } else {
        Err(errors)
    }
}

/// Checks every module precondition up front so computation never starts on
/// a bad configuration.
fn physical_validation(config: &RunConfig, errors: &mut Vec<ConfigError>) {
    let mut push = |key: &str, constraint: String| {
        errors.push(ConfigError {
            key: key.into(),
            constraint,
        });
    };

    let s = &config.spin_system;
    if SpinQuantum::new(s.s).is_err() {
        push("spin_system.s", "must be a non-negative half-integer".into());
    }
    if SpinQuantum::new(s.i).is_err() {
        push("spin_system.i", "must be a non-negative half-integer".into());
    }
    if !(s.g_par.is_finite() && s.g_par > 0.0) {
        push("spin_system.g_par", "must be finite and > 0".into());
    }
    if !(s.line_width_fwhm_hz.is_finite() && s.line_width_fwhm_hz > 0.0) {
        push("spin_system.line_width_fwhm_hz", "must be finite and > 0".into());
    }
    for (name, v) in [
        ("spin_system.g_perp", s.g_perp),
        ("spin_system.a_par_hz", s.a_par_hz),
        ("spin_system.e_rhombic_hz", s.e_rhombic_hz),
        ("spin_system.d_fine_hz", s.d_fine_hz),
    ] {
        if !v.is_finite() {
            push(name, "must be finite".into());
        }
    }

    if config.modes.is_empty() {
        push("modes", "at least one mode is required".into());
    }
    for (k, m) in config.modes.iter().enumerate() {
        if !(m.frequency_hz.is_finite() && m.frequency_hz > 0.0) {
            push(&format!("modes[{k}].frequency_hz"), "must be finite and > 0".into());
        }
        if !(m.loaded_q.is_finite() && m.loaded_q > 0.0) {
            push(&format!("modes[{k}].loaded_q"), "loaded_q > 0".into());
        }
        if !(m.fill_factor > 0.0 && m.fill_factor <= 1.0) {
            push(&format!("modes[{k}].fill_factor"), "must lie in (0, 1]".into());
        }
        if !m.theta_rad.is_finite() {
            push(&format!("modes[{k}].theta_rad"), "must be finite".into());
        }
    }

    let w = &config.sweep;
    if !(w.b_step_t.is_finite() && w.b_step_t > 0.0) {
        push("sweep.b_step_t", "must be finite and > 0".into());
    }
    if !(w.b_min_t.is_finite() && w.b_max_t.is_finite() && w.b_min_t < w.b_max_t) {
        push("sweep.b_min_t/b_max_t", "must be finite with b_min_t < b_max_t".into());
    }
    if w.b_min_t < 0.0 {
        push("sweep.b_min_t", "must be >= 0".into());
    }

    let y = &config.synth;
    if !(y.spin_signal_depth_db.is_finite() && y.spin_signal_depth_db >= 0.0) {
        push("synth.spin_signal_depth_db", "must be >= 0".into());
    }
    if !(y.noise_db_rms.is_finite() && y.noise_db_rms >= 0.0) {
        push("synth.noise_db_rms", "must be >= 0".into());
    }
    if let Some(a) = y.asymmetry_a_s {
        if !(a.is_finite() && a.abs() < 1.0) {
            push("synth.asymmetry_a_s", "must satisfy |a_s| < 1".into());
        }
    }
    if !(y.f_window_mode_widths.is_finite() && y.f_window_mode_widths > 0.0) {
        push("synth.f_window_mode_widths", "must be > 0".into());
    }
    if y.f_points < 3 {
        push("synth.f_points", "must be >= 3".into());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_names_required_keys() {
        let errs = validate_config("").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert!(errs[0].constraint.contains("spin_system"));
        assert!(errs[0].constraint.contains("modes"));
        assert!(errs[0].constraint.contains("sweep"));
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = validate_config("{}").unwrap();
        assert_eq!(cfg.modes.len(), 3);
        assert_eq!(cfg.sweep.b_step_t, DEFAULT_FIELD_STEP_T);
        assert_eq!(cfg.spin_system.g_par, 5.51);
        assert!(!cfg.hash().is_empty());
    }

    #[test]
    fn negative_q_names_key_and_constraint() {
        let raw = r#"{"modes": [{"frequency_hz": 4.5e8, "loaded_q": -3.0}]}"#;
        let errs = validate_config(raw).unwrap_err();
        assert!(errs
            .iter()
            .any(|e| e.key == "modes[0].loaded_q" && e.constraint.contains("loaded_q > 0")));
    }

    #[test]
    fn errors_are_aggregated_not_first_only() {
        let raw = r#"{
            "spin_system": {"s": 0.3, "i": 0.0, "g_par": -1.0, "g_perp": 0.0,
                             "a_par_hz": 0.0, "e_rhombic_hz": 0.0, "d_fine_hz": 0.0,
                             "line_width_fwhm_hz": -5.0},
            "sweep": {"b_min_t": 1.0, "b_max_t": 0.5, "b_step_t": 0.0},
            "bogus": 1
        }"#;
        let errs = validate_config(raw).unwrap_err();
        assert!(errs.len() >= 5, "got {errs:?}");
        assert!(errs.iter().any(|e| e.key == "bogus"));
        assert!(errs.iter().any(|e| e.key == "spin_system.s"));
        assert!(errs.iter().any(|e| e.key == "spin_system.g_par"));
        assert!(errs.iter().any(|e| e.key == "sweep.b_step_t"));
    }

    #[test]
    fn unknown_section_keys_rejected() {
        let raw = r#"{"synth": {"spin_signal_depth_db": 3.0, "noise_db_rms": 0.0,
                       "seed": 1, "asymmetry_a_s": null,
                       "f_window_mode_widths": 3.0, "f_points": 21, "typo_key": 5}}"#;
        let errs = validate_config(raw).unwrap_err();
        assert!(errs.iter().any(|e| e.key == "synth" && e.constraint.contains("typo_key")));
    }

    #[test]
    fn hash_stable_and_sensitive() {
        let a = validate_config("{}").unwrap();
        let b = validate_config("{}").unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = validate_config(r#"{"synth": {"spin_signal_depth_db": 6.0,
            "noise_db_rms": 0.0, "seed": 2, "asymmetry_a_s": null,
            "f_window_mode_widths": 3.0, "f_points": 161}}"#)
        .unwrap();
        assert_ne!(a.hash(), c.hash());
    }
}
