//! Synthesis of swept-field transmission density maps and the single-mode
//! sweep traces cut from them.
//!
//! Per mode the baseline S21(f) is a resonator Lorentzian of width f/Q
//! (0 dB at the mode center). At every field step each drive-allowed
//! transition multiplies the linear transmission down — rendered in dB as a
//! subtracted dip — by `depth · intensity · profile(f − f_t(B))`, where the
//! profile is the peak-normalized line shape. The dip therefore equals
//! `depth · intensity` exactly at resonance, and the B-domain footprint of
//! the line is the frequency-domain shape carried across through the local
//! slope df/dB = g·β/h. Gaussian noise of a fixed RMS is added in dB with a
//! deterministic per-row RNG stream, so maps are reproducible for a given
//! seed regardless of evaluation order.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::EsrError;
use crate::hamiltonian::{transition_table, SpinSystem};
use crate::lineshape::{asym_profile, lorentzian_profile, AsymmetryParams};
use crate::Result;

/// One resonator mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    /// Mode frequency in Hz.
    pub frequency_hz: f64,
    /// Loaded quality factor; the mode line width is frequency/Q.
    pub loaded_q: f64,
    /// Angle between the mode magnetic field vector and the DC field, rad.
    pub theta_rad: f64,
    /// Filling factor in (0, 1].
    pub fill_factor: f64,
}

impl ModeSpec {
    pub fn new(frequency_hz: f64, loaded_q: f64, theta_rad: f64, fill_factor: f64) -> Result<Self> {
        let mode = ModeSpec {
            frequency_hz,
            loaded_q,
            theta_rad,
            fill_factor,
        };
        mode.validate()?;
        Ok(mode)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.frequency_hz.is_finite() && self.frequency_hz > 0.0) {
            return Err(EsrError::param("frequency_hz", "must be finite and > 0"));
        }
        if !(self.loaded_q.is_finite() && self.loaded_q > 0.0) {
            return Err(EsrError::param("loaded_q", "must be finite and > 0"));
        }
        if !self.theta_rad.is_finite() {
            return Err(EsrError::param("theta_rad", "must be finite"));
        }
        if !(self.fill_factor > 0.0 && self.fill_factor <= 1.0) {
            return Err(EsrError::param("fill_factor", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Mode line width frequency/Q in Hz.
    pub fn width_hz(&self) -> f64 {
        self.frequency_hz / self.loaded_q
    }
}

/// Map synthesis knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    /// Peak dip depth in dB for a unit-intensity transition at resonance.
    pub spin_signal_depth_db: f64,
    /// RMS of additive Gaussian noise in dB; 0 disables noise.
    pub noise_db_rms: f64,
    /// RNG seed.
    pub seed: u64,
    /// Optional line asymmetry.
    pub asym: Option<AsymmetryParams>,
    /// Frequency window half-width per mode, in mode widths (f/Q).
    pub f_window_mode_widths: f64,
    /// Frequency pixels per mode window (forced odd so the center pixel is
    /// the mode frequency itself).
    pub f_points: usize,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            spin_signal_depth_db: 6.0,
            noise_db_rms: 0.0,
            seed: 1,
            asym: None,
            f_window_mode_widths: 3.0,
            f_points: 161,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.spin_signal_depth_db.is_finite() && self.spin_signal_depth_db >= 0.0) {
            return Err(EsrError::param("spin_signal_depth_db", "must be >= 0"));
        }
        if !(self.noise_db_rms.is_finite() && self.noise_db_rms >= 0.0) {
            return Err(EsrError::param("noise_db_rms", "must be >= 0"));
        }
        if !(self.f_window_mode_widths.is_finite() && self.f_window_mode_widths > 0.0) {
            return Err(EsrError::param("f_window_mode_widths", "must be > 0"));
        }
        if self.f_points < 3 {
            return Err(EsrError::param("f_points", "must be >= 3"));
        }
        Ok(())
    }
}

/// 2D transmission map over (B, f), dB values.
#[derive(Debug, Clone)]
pub struct SpectrumMap {
    pub b_axis_t: Vec<f64>,
    pub f_axis_hz: Vec<f64>,
    /// Rows follow `b_axis_t`, columns follow `f_axis_hz`.
    pub s21_db: Array2<f64>,
    pub seed: u64,
}

impl SpectrumMap {
    /// The swept-field trace at the frequency pixel nearest `f_hz`.
    pub fn trace_at(&self, f_hz: f64, mode_frequency_hz: f64) -> SweepTrace {
        let col = self
            .f_axis_hz
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - f_hz)
                    .abs()
                    .partial_cmp(&(b.1 - f_hz).abs())
                    .unwrap()
            })
            .map(|(i, _)| i)
            .unwrap_or(0);
        SweepTrace {
            mode_frequency_hz,
            b_points_t: self.b_axis_t.clone(),
            s21_db: self.s21_db.column(col).to_vec(),
            seed: Some(self.seed),
            source: format!("map column {col}"),
        }
    }
}

/// One swept-field transmission trace at fixed probe frequency.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepTrace {
    pub mode_frequency_hz: f64,
    pub b_points_t: Vec<f64>,
    pub s21_db: Vec<f64>,
    pub seed: Option<u64>,
    pub source: String,
}

impl SweepTrace {
    pub fn validate(&self) -> Result<()> {
        if self.b_points_t.len() != self.s21_db.len() {
            return Err(EsrError::param(
                "trace",
                "b and s21 arrays must have equal length",
            ));
        }
        if !self.b_points_t.windows(2).all(|w| w[1] > w[0]) {
            return Err(EsrError::param("trace", "b axis must be strictly increasing"));
        }
        if !(self.mode_frequency_hz.is_finite() && self.mode_frequency_hz > 0.0) {
            return Err(EsrError::param("mode_frequency_hz", "must be > 0"));
        }
        Ok(())
    }
}

/// Uniform field grid from `b_min` to `b_max` (inclusive end, clamped).
pub fn field_grid(b_min_t: f64, b_max_t: f64, step_t: f64) -> Result<Vec<f64>> {
    if !(step_t.is_finite() && step_t > 0.0) {
        return Err(EsrError::param("step_t", "must be finite and > 0"));
    }
    if !(b_min_t.is_finite() && b_max_t.is_finite() && b_min_t < b_max_t) {
        return Err(EsrError::param("b_range", "must be finite with b_min < b_max"));
    }
    let steps = ((b_max_t - b_min_t) / step_t).ceil() as usize;
    let mut grid: Vec<f64> = (0..=steps).map(|k| b_min_t + k as f64 * step_t).collect();
    if let Some(last) = grid.last_mut() {
        if *last > b_max_t {
            *last = b_max_t;
        }
    }
    // A clamped endpoint can collide with the previous grid point.
    if grid.len() >= 2 && grid[grid.len() - 1] <= grid[grid.len() - 2] {
        grid.pop();
    }
    Ok(grid)
}

/// Synthesizes the transmission map for a set of modes over a field grid.
/// Mode frequency windows must not overlap; the map's frequency axis is
/// their concatenation.
pub fn synth_map(
    sys: &SpinSystem,
    modes: &[ModeSpec],
    b_grid: &[f64],
    params: &SynthParams,
) -> Result<SpectrumMap> {
    sys.validate()?;
    params.validate()?;
    if modes.is_empty() {
        return Err(EsrError::param("modes", "at least one mode is required"));
    }
    for m in modes {
        m.validate()?;
    }
    if b_grid.len() < 2 || !b_grid.windows(2).all(|w| w[1] > w[0]) {
        return Err(EsrError::param(
            "b_grid",
            "must be strictly increasing with >= 2 points",
        ));
    }

    let mut sorted: Vec<ModeSpec> = modes.to_vec();
    sorted.sort_by(|a, b| a.frequency_hz.partial_cmp(&b.frequency_hz).unwrap());
    let windows: Vec<(f64, f64)> = sorted
        .iter()
        .map(|m| {
            let half = params.f_window_mode_widths * m.width_hz();
            (m.frequency_hz - half, m.frequency_hz + half)
        })
        .collect();
    for w in windows.windows(2) {
        if w[0].1 >= w[1].0 {
            return Err(EsrError::OverlappingModes {
                first_hz: sorted[0].frequency_hz,
                second_hz: sorted[1].frequency_hz,
            });
        }
    }

    // Frequency axis: odd pixel count per window, center pixel exactly at
    // the mode frequency.
    let pixels_per_mode = params.f_points | 1;
    let mut f_axis = Vec::with_capacity(pixels_per_mode * sorted.len());
    let mut col_mode = Vec::with_capacity(f_axis.capacity());
    for (idx, (lo, hi)) in windows.iter().enumerate() {
        let n = pixels_per_mode;
        let stepf = (hi - lo) / (n - 1) as f64;
        for k in 0..n {
            f_axis.push(lo + k as f64 * stepf);
            col_mode.push(idx);
        }
    }

    let baseline_db: Vec<f64> = f_axis
        .iter()
        .zip(&col_mode)
        .map(|(&f, &mi)| mode_baseline_db(&sorted[mi], f))
        .collect();

    let (width_l, width_r) = match params.asym {
        Some(a) => a.widths(sys.line_width_fwhm_hz),
        None => (sys.line_width_fwhm_hz, sys.line_width_fwhm_hz),
    };

    let n_rows = b_grid.len();
    let n_cols = f_axis.len();
    let mut s21 = Array2::<f64>::zeros((n_rows, n_cols));

    for (row, &b) in b_grid.iter().enumerate() {
        // Transition tables per mode angle at this field.
        let mut row_noise: Option<ChaCha8Rng> = if params.noise_db_rms > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(row as u64);
            Some(rng)
        } else {
            None
        };
        let normal = Normal::new(0.0, params.noise_db_rms.max(f64::MIN_POSITIVE))
            .expect("valid stddev");

        let mut tables = Vec::with_capacity(sorted.len());
        for m in &sorted {
            tables.push(transition_table(sys, b, m.theta_rad)?);
        }

        for col in 0..n_cols {
            let mi = col_mode[col];
            let f = f_axis[col];
            let mut dip = 0.0;
            for line in &tables[mi] {
                let delta = f - line.frequency_hz;
                let profile = if params.asym.is_some() {
                    asym_profile(delta, width_l, width_r)
                } else {
                    lorentzian_profile(delta, sys.line_width_fwhm_hz)
                };
                if profile > 0.0 {
                    dip += params.spin_signal_depth_db * line.intensity * profile;
                }
            }
            let noise = match &mut row_noise {
                Some(rng) => normal.sample(rng),
                None => 0.0,
            };
            s21[(row, col)] = baseline_db[col] - dip + noise;
        }
    }

    Ok(SpectrumMap {
        b_axis_t: b_grid.to_vec(),
        f_axis_hz: f_axis,
        s21_db: s21,
        seed: params.seed,
    })
}

/// Resonator amplitude response in dB: 20·log10 of a Lorentzian of FWHM
/// frequency/Q in power, 0 dB at the mode center.
pub fn mode_baseline_db(mode: &ModeSpec, f_hz: f64) -> f64 {
    let x = 2.0 * mode.loaded_q * (f_hz - mode.frequency_hz) / mode.frequency_hz;
    -10.0 * (1.0 + x * x).log10()
}

/// Synthesizes a single mode and cuts the sweep trace at its center pixel.
pub fn synth_sweep(
    sys: &SpinSystem,
    mode: &ModeSpec,
    b_grid: &[f64],
    params: &SynthParams,
) -> Result<(SpectrumMap, SweepTrace)> {
    let map = synth_map(sys, std::slice::from_ref(mode), b_grid, params)?;
    let trace = map.trace_at(mode.frequency_hz, mode.frequency_hz);
    Ok((map, trace))
}

/// Line width carried from frequency to field through the local slope
/// df/dB = g·β/h — handy for building field grids that resolve the line.
pub fn line_width_tesla(sys: &SpinSystem) -> f64 {
    let slope = crate::constants::CODATA.zeeman_frequency_hz(sys.g_par, 1.0);
    sys.line_width_fwhm_hz / slope
}
