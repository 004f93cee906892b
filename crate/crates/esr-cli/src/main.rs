//! `esr` — synthesize swept-field ESR transmission spectra, analyze sweep
//! traces, solve the ligand-field g-model, and evaluate detection
//! sensitivity. One command per process; outputs are written atomically and
//! carry the resolved config hash and seed. Failures print machine-readable
//! error JSON on stderr and exit nonzero.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::CliFailure;

#[derive(Parser)]
#[command(
    name = "esr",
    version,
    about = "Spin-Hamiltonian ESR toolkit: spectrum synthesis, sweep analysis, g-model, sensitivity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a config file and echo the resolved configuration.
    Validate(ValidateArgs),
    /// Synthesize transmission maps and sweep traces, one pair per mode.
    Synth(SynthArgs),
    /// Detect absorption dips in a sweep-trace CSV.
    Peaks(PeaksArgs),
    /// Fit the effective g-factor to (B, f) resonance points.
    Fitg(FitgArgs),
    /// Refine spin-system parameters against detected lines.
    Fit(FitArgs),
    /// Ligand-field g-model: forward table, inverse eta solve, feasibility.
    Gmodel(GmodelArgs),
    /// Minimum detectable spin count and ppm concentration per mode.
    Sense(SenseArgs),
}

#[derive(Args)]
struct ValidateArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (defaults to config `output.dir`, then $ESR_OUT_DIR,
    /// then ./esr_out).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Skip the 2D maps and write only the sweep traces.
    #[arg(long)]
    traces_only: bool,
}

#[derive(Args)]
struct PeaksArgs {
    /// Sweep-trace CSV produced by `esr synth` (or matching its schema).
    #[arg(long)]
    trace: PathBuf,
    /// Detection threshold in noise-RMS units below the baseline.
    #[arg(long, default_value_t = 5.0)]
    snr_threshold: f64,
    /// Output JSON path (defaults next to the trace).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitgArgs {
    /// Peak JSON files from `esr peaks`; the deepest peak of each is used.
    #[arg(long = "peaks")]
    peaks: Vec<PathBuf>,
    /// Extra resonance points as `B_tesla,freq_hz` (repeatable).
    #[arg(long = "point", value_parser = parse_point)]
    points: Vec<(f64, f64)>,
    /// Force the fit line through zero frequency at zero field.
    #[arg(long)]
    zero_intercept: bool,
    /// Output JSON path.
    #[arg(long)]
    out_json: Option<PathBuf>,
    /// Plot-data CSV path (points plus fit line).
    #[arg(long)]
    out_csv: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// JSON run configuration providing the template spin system and modes.
    #[arg(long)]
    config: PathBuf,
    /// Peak JSON files, one per mode.
    #[arg(long = "peaks", required = true)]
    peaks: Vec<PathBuf>,
    /// Comma-separated free parameters: g_par, a_par, e_rhombic, d_fine.
    #[arg(long, default_value = "g_par")]
    free: String,
    /// Output JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GmodelArgs {
    /// Forward-evaluate a single splitting ratio η = δ/ζ.
    #[arg(long)]
    eta: Option<f64>,
    /// η scan interval as `lo,hi`.
    #[arg(long, value_parser = parse_pair, default_value = "-100,100")]
    eta_range: (f64, f64),
    /// Emit a forward table over the η interval at this step.
    #[arg(long)]
    eta_step: Option<f64>,
    /// Orbital reduction factor k.
    #[arg(long, default_value_t = 0.33)]
    k: f64,
    /// Solve |g_par(η, k)| = target over the k range.
    #[arg(long)]
    target_g: Option<f64>,
    /// k scan interval as `lo,hi` (defaults to the single --k).
    #[arg(long, value_parser = parse_pair)]
    k_range: Option<(f64, f64)>,
    /// k scan step.
    #[arg(long, default_value_t = 1e-3)]
    k_step: f64,
    /// Output JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SenseArgs {
    /// JSON sensitivity parameter file.
    #[arg(long)]
    params: PathBuf,
    /// Output JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected `lo,hi`".into());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|e| format!("lo: {e}"))?;
    let hi: f64 = parts[1].trim().parse().map_err(|e| format!("hi: {e}"))?;
    Ok((lo, hi))
}

fn parse_point(s: &str) -> Result<(f64, f64), String> {
    parse_pair(s)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<(), CliFailure> = match cli.command {
        Command::Validate(a) => commands::cmd_validate(&a.config),
        Command::Synth(a) => commands::cmd_synth(&a.config, a.out_dir, a.traces_only),
        Command::Peaks(a) => commands::cmd_peaks(&a.trace, a.snr_threshold, a.out),
        Command::Fitg(a) => commands::cmd_fitg(
            &a.peaks,
            &a.points,
            a.zero_intercept,
            a.out_json,
            a.out_csv,
        ),
        Command::Fit(a) => commands::cmd_fit(&a.config, &a.peaks, &a.free, a.out),
        Command::Gmodel(a) => commands::cmd_gmodel(
            a.eta,
            a.eta_range,
            a.eta_step,
            a.k,
            a.target_g,
            a.k_range,
            a.k_step,
            a.out,
        ),
        Command::Sense(a) => commands::cmd_sense(&a.params, a.out),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let payload = serde_json::json!({
                "error": {
                    "message": failure.message,
                    "details": failure.details,
                }
            });
            eprintln!("{}", serde_json::to_string_pretty(&payload).expect("serializes"));
            ExitCode::FAILURE
        }
    }
}
