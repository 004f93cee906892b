//! Subcommand implementations. Every artifact embeds the resolved config
//! hash (sha256) and the RNG seed so runs are reproducible and outputs are
//! attributable to their exact inputs.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use esr_core::analysis::{
    detect_peaks, fit_g_linear, fit_spin_params, ParamMask, PeakEstimate,
};
use esr_core::hamiltonian::SpinSystem;
use esr_core::io::{self, Provenance, DB_CONVENTION};
use esr_core::ligand::{
    ab_from_eta, feasible_gmax, g_from_ab, solve_eta, EtaRoot, FeasibilityBound,
    K0_FERMI_CONTACT,
};
use esr_core::sensitivity::{
    cylinder_volume_m3, n_min, ppm_of, LatticeSpec, SensitivityInput,
};
use esr_core::spectrum::{field_grid, synth_map, ModeSpec};
use esr_core::spin::SpinQuantum;
use esr_core::CODATA;

use crate::config::{ConfigError, RunConfig};

/// A failed command: human message plus structured details for the error
/// JSON.
#[derive(Debug)]
pub struct CliFailure {
    pub message: String,
    pub details: Vec<ConfigError>,
}

impl CliFailure {
    pub fn new(message: impl Into<String>) -> Self {
        CliFailure {
            message: message.into(),
            details: Vec::new(),
        }
    }

    pub fn with_details(message: impl Into<String>, details: Vec<ConfigError>) -> Self {
        CliFailure {
            message: message.into(),
            details,
        }
    }
}

impl<E: std::error::Error> From<E> for CliFailure {
    fn from(e: E) -> Self {
        CliFailure::new(e.to_string())
    }
}

pub type CmdResult = Result<(), CliFailure>;

fn load_config(path: &Path) -> Result<RunConfig, CliFailure> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliFailure::new(format!("cannot read config {}: {e}", path.display())))?;
    crate::config::validate_config(&raw).map_err(|details| {
        CliFailure::with_details(
            format!("configuration {} failed validation", path.display()),
            details,
        )
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliFailure> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliFailure::new(format!("serialization failed: {e}")))?;
    text.push('\n');
    io::write_atomic(path, text.as_bytes())
        .map_err(|e| CliFailure::new(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn hash_of(parts: &[&str]) -> String {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update(p.as_bytes());
        hasher.update([0u8]);
    }
    hex::encode(hasher.finalize())
}

// ---------------------------------------------------------------- validate

pub fn cmd_validate(config_path: &Path) -> CmdResult {
    let config = load_config(config_path)?;
    let echo = serde_json::json!({
        "config_hash": config.hash(),
        "resolved": config,
    });
    println!("{}", serde_json::to_string_pretty(&echo).expect("serializes"));
    Ok(())
}

// ------------------------------------------------------------------- synth

pub fn cmd_synth(config_path: &Path, out_dir: Option<PathBuf>, traces_only: bool) -> CmdResult {
    let config = load_config(config_path)?;
    let hash = config.hash();
    let sys = config.spin_system();
    let params = config.synth_params();
    let grid = field_grid(
        config.sweep.b_min_t,
        config.sweep.b_max_t,
        config.sweep.b_step_t,
    )?;
    let dir = out_dir.unwrap_or_else(|| config.output_dir());
    let prov = Provenance {
        config_hash: hash.clone(),
        seed: Some(params.seed),
    };

    // One map per mode: modes sit far apart relative to their widths, and
    // per-mode files match how swept spectra are analyzed.
    for mode in config.mode_specs() {
        let map = synth_map(&sys, std::slice::from_ref(&mode), &grid, &params)?;
        let tag = format!("{:.0}", mode.frequency_hz);
        if !traces_only {
            let map_path = dir.join(format!("map_{tag}hz.csv"));
            io::write_map_csv(&map_path, &map, mode.frequency_hz, &prov)?;
            println!("wrote {}", map_path.display());
        }
        let trace = map.trace_at(mode.frequency_hz, mode.frequency_hz);
        let trace_path = dir.join(format!("trace_{tag}hz.csv"));
        io::write_trace_csv(&trace_path, &trace, &prov)?;
        println!("wrote {}", trace_path.display());
    }

    let resolved = serde_json::json!({ "config_hash": hash, "resolved": config });
    let mut text = serde_json::to_string_pretty(&resolved).expect("serializes");
    text.push('\n');
    let echo_path = dir.join("resolved_config.json");
    io::write_atomic(&echo_path, text.as_bytes())?;
    println!("wrote {}", echo_path.display());
    Ok(())
}

// ------------------------------------------------------------------- peaks

#[derive(Debug, Serialize)]
struct PeaksArtifact {
    config_hash: String,
    seed: Option<u64>,
    db_convention: &'static str,
    trace: String,
    mode_frequency_hz: f64,
    snr_threshold: f64,
    peaks: Vec<PeakEstimate>,
}

pub fn cmd_peaks(trace_path: &Path, snr_threshold: f64, out: Option<PathBuf>) -> CmdResult {
    let (trace, prov) = io::read_trace_csv(trace_path)?;
    let peaks = detect_peaks(&trace, snr_threshold)?;
    let artifact = PeaksArtifact {
        config_hash: prov.config_hash,
        seed: prov.seed,
        db_convention: DB_CONVENTION,
        trace: trace_path.display().to_string(),
        mode_frequency_hz: trace.mode_frequency_hz,
        snr_threshold,
        peaks,
    };
    let out = out.unwrap_or_else(|| trace_path.with_extension("peaks.json"));
    write_json(&out, &artifact)?;
    for p in &artifact.peaks {
        println!(
            "peak: B = {:.6e} T, depth = {:.4} dB, fwhm_B = {:.3e} T, snr = {:.1}",
            p.b_center_t, p.depth_db, p.fwhm_b_t, p.snr
        );
    }
    Ok(())
}

fn read_peaks_artifact(path: &Path) -> Result<(f64, PeakEstimate, String), CliFailure> {
    #[derive(serde::Deserialize)]
    struct PeaksIn {
        config_hash: String,
        mode_frequency_hz: f64,
        peaks: Vec<PeakEstimate>,
    }
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliFailure::new(format!("cannot read {}: {e}", path.display())))?;
    let parsed: PeaksIn = serde_json::from_str(&raw).map_err(|e| {
        CliFailure::new(format!("{} is not a peaks artifact: {e}", path.display()))
    })?;
    let deepest = parsed
        .peaks
        .iter()
        .max_by(|a, b| a.depth_db.partial_cmp(&b.depth_db).unwrap())
        .copied()
        .ok_or_else(|| CliFailure::new(format!("{} contains no peaks", path.display())))?;
    Ok((parsed.mode_frequency_hz, deepest, parsed.config_hash))
}

// -------------------------------------------------------------------- fitg

#[derive(Debug, Serialize)]
struct GFitArtifact {
    config_hash: String,
    forced_zero_intercept: bool,
    g_eff: f64,
    g_eff_sigma: f64,
    intercept_hz: f64,
    slope_hz_per_t: f64,
    points: Vec<(f64, f64)>,
    residuals_hz: Vec<f64>,
    covariance: [[f64; 2]; 2],
}

pub fn cmd_fitg(
    peaks_files: &[PathBuf],
    extra_points: &[(f64, f64)],
    zero_intercept: bool,
    out_json: Option<PathBuf>,
    out_csv: Option<PathBuf>,
) -> CmdResult {
    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut sources: Vec<String> = Vec::new();
    for file in peaks_files {
        let (f_mode, peak, hash) = read_peaks_artifact(file)?;
        points.push((peak.b_center_t, f_mode));
        sources.push(hash);
    }
    points.extend_from_slice(extra_points);
    for &(b, f) in extra_points {
        sources.push(format!("point:{b},{f}"));
    }
    if points.is_empty() {
        return Err(CliFailure::new(
            "no input points; pass --peaks files and/or --point B,F",
        ));
    }

    let fit = fit_g_linear(&points, zero_intercept)?;
    let source_refs: Vec<&str> = sources.iter().map(|s| s.as_str()).collect();
    let artifact = GFitArtifact {
        config_hash: hash_of(&source_refs),
        forced_zero_intercept: zero_intercept,
        g_eff: fit.g_eff,
        g_eff_sigma: fit.covariance[0][0].max(0.0).sqrt(),
        intercept_hz: fit.intercept_hz,
        slope_hz_per_t: fit.slope_hz_per_t,
        points: points.clone(),
        residuals_hz: fit.residuals_hz.clone(),
        covariance: fit.covariance,
    };
    let json_path = out_json.unwrap_or_else(|| PathBuf::from("gfit.json"));
    write_json(&json_path, &artifact)?;

    // Plot data: measured points and the fitted line.
    let csv_path = out_csv.unwrap_or_else(|| PathBuf::from("gfit_points.csv"));
    let mut csv = String::new();
    csv.push_str("# esr-gfit v1\n");
    csv.push_str(&format!("# db_convention: {DB_CONVENTION}\n"));
    csv.push_str(&format!("# config_hash: {}\n", artifact.config_hash));
    csv.push_str(&format!("# g_eff: {}\n", fit.g_eff));
    csv.push_str(&format!("# intercept_hz: {}\n", fit.intercept_hz));
    csv.push_str("b_tesla,freq_hz,fit_hz\n");
    let mut ordered = points.clone();
    ordered.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for (b, f) in ordered {
        csv.push_str(&format!(
            "{b},{f},{}\n",
            fit.slope_hz_per_t * b + fit.intercept_hz
        ));
    }
    io::write_atomic(&csv_path, csv.as_bytes())?;
    println!("wrote {}", csv_path.display());
    println!(
        "g_eff = {:.6} +/- {:.2e}, intercept = {:.4e} Hz",
        fit.g_eff, artifact.g_eff_sigma, fit.intercept_hz
    );
    Ok(())
}

// --------------------------------------------------------------------- fit

#[derive(Debug, Serialize)]
struct SpinFitArtifact {
    config_hash: String,
    free: Vec<String>,
    refined: SpinSystem,
    objective_hz2: f64,
    residuals_hz: Vec<f64>,
    iterations: usize,
    converged: bool,
}

pub fn parse_free_mask(list: &str) -> Result<ParamMask, CliFailure> {
    let mut mask = ParamMask::default();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match name {
            "g_par" => mask.g_par = true,
            "a_par" => mask.a_par = true,
            "e_rhombic" => mask.e_rhombic = true,
            "d_fine" => mask.d_fine = true,
            other => {
                return Err(CliFailure::new(format!(
                    "unknown free parameter `{other}`; known: g_par, a_par, e_rhombic, d_fine"
                )))
            }
        }
    }
    if mask.count() == 0 {
        return Err(CliFailure::new("--free must name at least one parameter"));
    }
    Ok(mask)
}

pub fn cmd_fit(
    config_path: &Path,
    peaks_files: &[PathBuf],
    free: &str,
    out: Option<PathBuf>,
) -> CmdResult {
    let config = load_config(config_path)?;
    let mask = parse_free_mask(free)?;
    let template = config.spin_system();
    let modes = config.mode_specs();

    let mut lines: Vec<(ModeSpec, PeakEstimate)> = Vec::new();
    for file in peaks_files {
        let (f_mode, peak, _) = read_peaks_artifact(file)?;
        // Match the artifact to a configured mode for its drive angle.
        let mode = modes
            .iter()
            .min_by(|a, b| {
                (a.frequency_hz - f_mode)
                    .abs()
                    .partial_cmp(&(b.frequency_hz - f_mode).abs())
                    .unwrap()
            })
            .copied()
            .map(|mut m| {
                m.frequency_hz = f_mode;
                m
            })
            .ok_or_else(|| CliFailure::new("config declares no modes"))?;
        lines.push((mode, peak));
    }

    let report = fit_spin_params(&lines, &template, &mask)?;
    let mut free_names = Vec::new();
    if mask.g_par {
        free_names.push("g_par".to_string());
    }
    if mask.a_par {
        free_names.push("a_par".to_string());
    }
    if mask.e_rhombic {
        free_names.push("e_rhombic".to_string());
    }
    if mask.d_fine {
        free_names.push("d_fine".to_string());
    }
    let artifact = SpinFitArtifact {
        config_hash: config.hash(),
        free: free_names,
        refined: report.system,
        objective_hz2: report.objective_hz2,
        residuals_hz: report.residuals_hz.clone(),
        iterations: report.iterations,
        converged: report.converged,
    };
    let out = out.unwrap_or_else(|| PathBuf::from("spinfit.json"));
    write_json(&out, &artifact)?;
    println!(
        "refined g_par = {:.6}, objective = {:.4e} Hz^2 after {} iterations",
        report.system.g_par, report.objective_hz2, report.iterations
    );
    Ok(())
}

// ------------------------------------------------------------------ gmodel

#[derive(Debug, Serialize)]
struct GmodelForwardRow {
    eta: f64,
    a: f64,
    b: f64,
    g_par: f64,
    g_perp: f64,
    abs_g_par: f64,
    abs_g_perp: f64,
}

#[derive(Debug, Serialize)]
struct GmodelInverse {
    target_g: f64,
    k_range: (f64, f64),
    k_step: f64,
    eta_range: (f64, f64),
    roots: Vec<KRoot>,
    feasibility: FeasibilityBound,
    target_feasible: bool,
}

#[derive(Debug, Serialize)]
struct KRoot {
    k: f64,
    #[serde(flatten)]
    root: EtaRoot,
}

#[derive(Debug, Serialize)]
struct GmodelArtifact {
    config_hash: String,
    k: f64,
    g_e: f64,
    forward: Option<Vec<GmodelForwardRow>>,
    inverse: Option<GmodelInverse>,
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_gmodel(
    eta: Option<f64>,
    eta_range: (f64, f64),
    eta_table_step: Option<f64>,
    k: f64,
    target_g: Option<f64>,
    k_range: Option<(f64, f64)>,
    k_step: f64,
    out: Option<PathBuf>,
) -> CmdResult {
    let forward_row = |eta: f64, k: f64| -> Result<GmodelForwardRow, CliFailure> {
        let ab = ab_from_eta(eta)?;
        let g = g_from_ab(ab, k, CODATA.free_electron_g);
        Ok(GmodelForwardRow {
            eta,
            a: ab.a,
            b: ab.b,
            g_par: g.g_par,
            g_perp: g.g_perp,
            abs_g_par: g.g_par.abs(),
            abs_g_perp: g.g_perp.abs(),
        })
    };

    let forward = if let Some(eta) = eta {
        Some(vec![forward_row(eta, k)?])
    } else if let Some(step) = eta_table_step {
        if !(step.is_finite() && step > 0.0) {
            return Err(CliFailure::new("--eta-step must be > 0"));
        }
        let mut rows = Vec::new();
        let mut x = eta_range.0;
        while x <= eta_range.1 + 1e-12 {
            rows.push(forward_row(x, k)?);
            x += step;
        }
        Some(rows)
    } else {
        None
    };

    let inverse = if let Some(target) = target_g {
        let (k_lo, k_hi) = k_range.unwrap_or((k, k));
        if !(0.0..=K0_FERMI_CONTACT).contains(&k_lo)
            || !(0.0..=K0_FERMI_CONTACT).contains(&k_hi)
            || k_lo > k_hi
        {
            return Err(CliFailure::new(format!(
                "--k-range must be ordered within [0, {K0_FERMI_CONTACT}]"
            )));
        }
        let mut roots = Vec::new();
        let steps = ((k_hi - k_lo) / k_step).round().max(0.0) as usize;
        for i in 0..=steps {
            let kk = (k_lo + i as f64 * k_step).min(k_hi);
            for root in solve_eta(target, kk, eta_range)? {
                roots.push(KRoot { k: kk, root });
            }
        }
        let feasibility = feasible_gmax((k_lo, k_hi))?;
        let target_feasible = !roots.is_empty();
        Some(GmodelInverse {
            target_g: target,
            k_range: (k_lo, k_hi),
            k_step,
            eta_range,
            roots,
            feasibility,
            target_feasible,
        })
    } else {
        None
    };

    if forward.is_none() && inverse.is_none() {
        return Err(CliFailure::new(
            "nothing to do: pass --eta or --eta-step for a forward table, and/or --target-g for the inverse solve",
        ));
    }

    let artifact = GmodelArtifact {
        config_hash: hash_of(&[&format!(
            "gmodel:{eta:?}:{eta_range:?}:{eta_table_step:?}:{k}:{target_g:?}:{k_range:?}:{k_step}"
        )]),
        k,
        g_e: CODATA.free_electron_g,
        forward,
        inverse,
    };

    if let Some(rows) = &artifact.forward {
        println!("{:>10} {:>8} {:>8} {:>9} {:>9}", "eta", "a", "b", "g_par", "g_perp");
        for r in rows.iter().take(25) {
            println!(
                "{:>10.4} {:>8.4} {:>8.4} {:>9.4} {:>9.4}",
                r.eta, r.a, r.b, r.g_par, r.g_perp
            );
        }
        if rows.len() > 25 {
            println!("... ({} rows total)", rows.len());
        }
    }
    if let Some(inv) = &artifact.inverse {
        println!(
            "target |g_par| = {}: {} root(s); max |g_par| over scan = {:.4} (analytic cap {:.4})",
            inv.target_g,
            inv.roots.len(),
            inv.feasibility.max_abs_g_par,
            inv.feasibility.analytic_bound
        );
        for r in inv.roots.iter().take(25) {
            println!(
                "  k = {:.3}: eta = {:.4}, g_par = {:.4}, g_perp = {:.4}",
                r.k, r.root.eta, r.root.g_par, r.root.g_perp
            );
        }
    }

    let out = out.unwrap_or_else(|| PathBuf::from("gmodel.json"));
    write_json(&out, &artifact)
}

// ------------------------------------------------------------------- sense

#[derive(Debug, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SenseParams {
    /// Mode volume; when absent it is computed from the crystal cylinder.
    pub mode_volume_m3: Option<f64>,
    #[serde(default = "default_diameter")]
    pub crystal_diameter_m: f64,
    #[serde(default = "default_height")]
    pub crystal_height_m: f64,
    pub sample_temperature_k: f64,
    #[serde(default = "default_spin")]
    pub spin: f64,
    /// Defaults to the free-electron g.
    pub g: Option<f64>,
    #[serde(default = "default_fill")]
    pub fill_factor: f64,
    pub loaded_q: f64,
    #[serde(default = "default_pn")]
    pub noise_power_ratio: f64,
    pub line_width_hz: f64,
    pub modes_hz: Vec<f64>,
    #[serde(default)]
    pub lattice: LatticeDef,
}

fn default_diameter() -> f64 {
    3.27e-3
}
fn default_height() -> f64 {
    3.66e-3
}
fn default_spin() -> f64 {
    0.5
}
fn default_fill() -> f64 {
    1.0
}
fn default_pn() -> f64 {
    1.0
}

#[derive(Debug, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeDef {
    pub lattice_constant_m: f64,
    pub sites_per_cell: f64,
}

impl Default for LatticeDef {
    fn default() -> Self {
        let l = LatticeSpec::default();
        LatticeDef {
            lattice_constant_m: l.lattice_constant_m,
            sites_per_cell: l.sites_per_cell,
        }
    }
}

#[derive(Debug, Serialize)]
struct SenseRow {
    mode_frequency_hz: f64,
    n_min_spins: f64,
    concentration_ppm: f64,
}

#[derive(Debug, Serialize)]
struct SenseArtifact {
    config_hash: String,
    mode_volume_m3: f64,
    sample_temperature_k: f64,
    g: f64,
    fill_factor: f64,
    loaded_q: f64,
    noise_power_ratio: f64,
    line_width_hz: f64,
    lattice_constant_m: f64,
    total_sites: f64,
    rows: Vec<SenseRow>,
}

pub fn cmd_sense(params_path: &Path, out: Option<PathBuf>) -> CmdResult {
    let raw = std::fs::read_to_string(params_path)
        .map_err(|e| CliFailure::new(format!("cannot read {}: {e}", params_path.display())))?;
    let params: SenseParams = serde_json::from_str(&raw)
        .map_err(|e| CliFailure::new(format!("invalid sense parameters: {e}")))?;
    if params.modes_hz.is_empty() {
        return Err(CliFailure::new("modes_hz must list at least one frequency"));
    }

    let volume = params
        .mode_volume_m3
        .unwrap_or_else(|| cylinder_volume_m3(params.crystal_diameter_m, params.crystal_height_m));
    let lattice = LatticeSpec {
        lattice_constant_m: params.lattice.lattice_constant_m,
        sites_per_cell: params.lattice.sites_per_cell,
    };
    let g = params.g.unwrap_or(CODATA.free_electron_g);
    let spin = SpinQuantum::new(params.spin)?;

    let mut rows = Vec::new();
    for &f in &params.modes_hz {
        let inp = SensitivityInput {
            mode_volume_m3: volume,
            sample_temperature_k: params.sample_temperature_k,
            spin,
            g,
            fill_factor: params.fill_factor,
            loaded_q: params.loaded_q,
            noise_power_ratio: params.noise_power_ratio,
            line_width_hz: params.line_width_hz,
            mode_frequency_hz: f,
        };
        let n = n_min(&inp)?;
        let ppm = ppm_of(n, volume, &lattice)?;
        rows.push(SenseRow {
            mode_frequency_hz: f,
            n_min_spins: n,
            concentration_ppm: ppm,
        });
    }

    let artifact = SenseArtifact {
        config_hash: hash_of(&[&raw]),
        mode_volume_m3: volume,
        sample_temperature_k: params.sample_temperature_k,
        g,
        fill_factor: params.fill_factor,
        loaded_q: params.loaded_q,
        noise_power_ratio: params.noise_power_ratio,
        line_width_hz: params.line_width_hz,
        lattice_constant_m: lattice.lattice_constant_m,
        total_sites: lattice.sites_in(volume),
        rows,
    };

    println!(
        "{:>16} {:>14} {:>12}",
        "frequency (Hz)", "N_min (spins)", "ppm"
    );
    for r in &artifact.rows {
        println!(
            "{:>16.4e} {:>14.4e} {:>12.4}",
            r.mode_frequency_hz, r.n_min_spins, r.concentration_ppm
        );
    }

    let out = out.unwrap_or_else(|| PathBuf::from("sense.json"));
    write_json(&out, &artifact)
}
