//! Swept-trace peak detection, effective g-factor regression, and nonlinear
//! refinement of spin-system parameters against detected lines.

use serde::{Deserialize, Serialize};

use crate::constants::CODATA;
use crate::error::EsrError;
use crate::hamiltonian::{transition_table, SpinSystem};
use crate::simplex;
use crate::spectrum::{ModeSpec, SweepTrace};
use crate::Result;

/// Scaled-MAD floor so signal-to-noise stays finite on noise-free traces.
pub const NOISE_RMS_FLOOR_DB: f64 = 1e-12;
/// Relative objective-change convergence target for the simplex refinement.
pub const FIT_REL_TOL: f64 = 1e-10;

/// One detected absorption dip.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PeakEstimate {
    /// Refined dip center, Tesla.
    pub b_center_t: f64,
    /// Dip depth below the baseline at the deepest sample, dB.
    pub depth_db: f64,
    /// Full width at half depth in Tesla, from interpolated crossings. For
    /// lines narrower than the grid this is resolution-limited from above.
    pub fwhm_b_t: f64,
    /// depth / noise RMS (scaled median absolute deviation).
    pub snr: f64,
}

/// Effective-g regression result for f = (gβ/h)·B + c.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GFitResult {
    pub g_eff: f64,
    pub intercept_hz: f64,
    pub slope_hz_per_t: f64,
    /// Per-point residuals f_i − fit(B_i), Hz.
    pub residuals_hz: Vec<f64>,
    /// Covariance of (g_eff, intercept); the intercept row/column is zero
    /// when the intercept is forced.
    pub covariance: [[f64; 2]; 2],
    pub forced_zero_intercept: bool,
}

/// Which spin-system parameters a refinement may vary.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct ParamMask {
    pub g_par: bool,
    pub a_par: bool,
    pub e_rhombic: bool,
    pub d_fine: bool,
}

impl ParamMask {
    pub fn g_only() -> Self {
        ParamMask {
            g_par: true,
            ..ParamMask::default()
        }
    }

    pub fn count(&self) -> usize {
        [self.g_par, self.a_par, self.e_rhombic, self.d_fine]
            .iter()
            .filter(|&&b| b)
            .count()
    }
}

/// Refinement outcome.
#[derive(Debug, Clone, Serialize)]
pub struct SpinFitReport {
    pub system: SpinSystem,
    /// Final sum of squared frequency residuals, Hz².
    pub objective_hz2: f64,
    /// Per-line residuals f_mode − predicted, Hz.
    pub residuals_hz: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Best objective after each simplex iteration; non-increasing.
    pub objective_history: Vec<f64>,
}

/// Detects dips below `baseline − snr_threshold · noise_rms` where the
/// baseline is the trace median and the noise RMS the scaled median absolute
/// deviation — dips are outliers by construction, so both are robust to
/// them. Centers are refined by a three-point interpolation on reciprocal
/// dip depth, which is exact for Lorentzian profiles of any width (an
/// ordinary parabola on the dB values is biased by up to a quarter step once
/// the line is narrower than the grid); plateaus fall back to their
/// midpoint. Returns peaks ordered by field; an empty list on featureless
/// traces is a result, not an error.
pub fn detect_peaks(trace: &SweepTrace, snr_threshold: f64) -> Result<Vec<PeakEstimate>> {
    trace.validate()?;
    if trace.b_points_t.len() < 5 {
        return Err(EsrError::param("trace", "needs at least 5 points"));
    }
    if !(snr_threshold.is_finite() && snr_threshold > 0.0) {
        return Err(EsrError::param("snr_threshold", "must be > 0"));
    }

    let y = &trace.s21_db;
    let b = &trace.b_points_t;
    let n = y.len();

    let baseline = median(y);
    let mad = median(&y.iter().map(|v| (v - baseline).abs()).collect::<Vec<_>>());
    let noise_rms = (1.4826 * mad).max(NOISE_RMS_FLOOR_DB);
    let level = baseline - snr_threshold * noise_rms;

    let mut peaks = Vec::new();
    let mut i = 1;
    while i < n - 1 {
        // Plateau-aware local minimum: y[i] < y[i-1] and the run of equal
        // values ends with a rise.
        if y[i] < y[i - 1] {
            let mut j = i;
            while j + 1 < n && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < n && y[j + 1] > y[i] {
                let idx = (i + j) / 2;
                if y[idx] < level {
                    peaks.push(estimate_peak(b, y, idx, baseline, noise_rms));
                }
                i = j + 1;
                continue;
            }
        }
        i += 1;
    }
    Ok(peaks)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn estimate_peak(b: &[f64], y: &[f64], idx: usize, baseline: f64, noise_rms: f64) -> PeakEstimate {
    let depth = baseline - y[idx];
    let b_center = refine_center(b, y, idx, baseline);

    // Half-depth crossings by linear interpolation outward from the dip.
    let half_level = baseline - 0.5 * depth;
    let left = crossing(b, y, idx, half_level, true).unwrap_or(b[0]);
    let right = crossing(b, y, idx, half_level, false).unwrap_or(b[b.len() - 1]);
    let fwhm = (right - left).max(f64::MIN_POSITIVE);

    PeakEstimate {
        b_center_t: b_center,
        depth_db: depth,
        fwhm_b_t: fwhm,
        snr: depth / noise_rms,
    }
}

/// Sub-step center refinement. Reciprocal depth of a Lorentzian dip is an
/// upward parabola in B whose vertex is the true center, independent of how
/// well the grid resolves the width; fall back to a plain parabola on the dB
/// values (and finally the grid point) when the reciprocal is unusable.
fn refine_center(b: &[f64], y: &[f64], idx: usize, baseline: f64) -> f64 {
    if idx == 0 || idx + 1 >= y.len() {
        return b[idx];
    }
    let (x0, x1, x2) = (b[idx - 1], b[idx], b[idx + 1]);
    let depths = [
        baseline - y[idx - 1],
        baseline - y[idx],
        baseline - y[idx + 1],
    ];
    let half_span = 0.5 * (x2 - x0);

    if depths.iter().all(|&d| d > 0.0) {
        let z = [1.0 / depths[0], 1.0 / depths[1], 1.0 / depths[2]];
        if let Some(v) = parabola_vertex((x0, z[0]), (x1, z[1]), (x2, z[2]), false) {
            if (v - x1).abs() <= half_span {
                return v;
            }
        }
    }
    if let Some(v) = parabola_vertex((x0, y[idx - 1]), (x1, y[idx]), (x2, y[idx + 1]), true) {
        if (v - x1).abs() <= half_span {
            return v;
        }
    }
    b[idx]
}

/// Vertex of the quadratic through three points; `minimum` selects the
/// required curvature sign (upward parabola for reciprocal depth, downward
/// never applies here since dips are minima in y).
fn parabola_vertex(
    p0: (f64, f64),
    p1: (f64, f64),
    p2: (f64, f64),
    minimum: bool,
) -> Option<f64> {
    let (x0, y0) = p0;
    let (x1, y1) = p1;
    let (x2, y2) = p2;
    let denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
    if denom == 0.0 {
        return None;
    }
    let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
    let bq = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
    if a == 0.0 {
        return None;
    }
    if minimum && a >= 0.0 {
        // Looking for a minimum of y: need downward-opening data around a
        // dip, i.e. positive curvature of y.
        return Some(-bq / (2.0 * a));
    }
    if !minimum && a <= 0.0 {
        return None;
    }
    Some(-bq / (2.0 * a))
}

fn crossing(b: &[f64], y: &[f64], idx: usize, level: f64, leftward: bool) -> Option<f64> {
    let n = y.len();
    let mut k = idx;
    loop {
        let next = if leftward {
            if k == 0 {
                return None;
            }
            k - 1
        } else {
            if k + 1 >= n {
                return None;
            }
            k + 1
        };
        if y[next] >= level {
            // Interpolate between k (below) and next (at/above).
            let t = if (y[next] - y[k]).abs() < f64::MIN_POSITIVE {
                0.5
            } else {
                (level - y[k]) / (y[next] - y[k])
            };
            return Some(b[k] + t * (b[next] - b[k]));
        }
        k = next;
    }
}

/// Least squares of f = (gβ/h)·B + c over (B, f) points. With
/// `force_zero_intercept` a single point suffices and c is pinned to zero.
pub fn fit_g_linear(points: &[(f64, f64)], force_zero_intercept: bool) -> Result<GFitResult> {
    let n = points.len();
    let needed = if force_zero_intercept { 1 } else { 2 };
    if n < needed {
        return Err(EsrError::Underdetermined {
            points: n,
            parameters: needed,
        });
    }
    for &(b, f) in points {
        if !(b.is_finite() && f.is_finite()) {
            return Err(EsrError::param("points", "must be finite"));
        }
        if b == 0.0 && force_zero_intercept && n == 1 {
            return Err(EsrError::param("points", "B = 0 cannot determine a slope"));
        }
    }

    let to_g = CODATA.h / CODATA.bohr_magneton;
    let (slope, intercept, var_slope, var_intercept, cov_si) = if force_zero_intercept {
        let sxx: f64 = points.iter().map(|(b, _)| b * b).sum();
        if sxx == 0.0 {
            return Err(EsrError::param("points", "all B = 0"));
        }
        let sxy: f64 = points.iter().map(|(b, f)| b * f).sum();
        let slope = sxy / sxx;
        let ssr: f64 = points.iter().map(|(b, f)| (f - slope * b).powi(2)).sum();
        let sigma2 = if n > 1 { ssr / (n - 1) as f64 } else { 0.0 };
        (slope, 0.0, sigma2 / sxx, 0.0, 0.0)
    } else {
        let nf = n as f64;
        let mean_b: f64 = points.iter().map(|(b, _)| b).sum::<f64>() / nf;
        let mean_f: f64 = points.iter().map(|(_, f)| f).sum::<f64>() / nf;
        let sxx: f64 = points.iter().map(|(b, _)| (b - mean_b).powi(2)).sum();
        if sxx == 0.0 {
            return Err(EsrError::param("points", "all B identical"));
        }
        let sxy: f64 = points
            .iter()
            .map(|(b, f)| (b - mean_b) * (f - mean_f))
            .sum();
        let slope = sxy / sxx;
        let intercept = mean_f - slope * mean_b;
        let ssr: f64 = points
            .iter()
            .map(|(b, f)| (f - slope * b - intercept).powi(2))
            .sum();
        let sigma2 = if n > 2 { ssr / (n - 2) as f64 } else { 0.0 };
        (
            slope,
            intercept,
            sigma2 / sxx,
            sigma2 * (1.0 / nf + mean_b * mean_b / sxx),
            -sigma2 * mean_b / sxx,
        )
    };

    let residuals: Vec<f64> = points
        .iter()
        .map(|(b, f)| f - slope * b - intercept)
        .collect();

    Ok(GFitResult {
        g_eff: slope * to_g,
        intercept_hz: intercept,
        slope_hz_per_t: slope,
        residuals_hz: residuals,
        covariance: [
            [var_slope * to_g * to_g, cov_si * to_g],
            [cov_si * to_g, var_intercept],
        ],
        forced_zero_intercept: force_zero_intercept,
    })
}

/// Refines the free parameters of `template` so predicted transition
/// frequencies at the detected peak fields match the mode frequencies, by
/// simplex descent on the summed squared residuals. Underdetermined systems
/// are rejected; if the iteration budget runs out the best-so-far refinement
/// is reported inside the error.
pub fn fit_spin_params(
    lines: &[(ModeSpec, PeakEstimate)],
    template: &SpinSystem,
    free: &ParamMask,
) -> Result<SpinFitReport> {
    template.validate()?;
    let n_free = free.count();
    if n_free == 0 {
        return Err(EsrError::param("free", "at least one free parameter"));
    }
    if lines.len() < n_free {
        return Err(EsrError::Underdetermined {
            points: lines.len(),
            parameters: n_free,
        });
    }

    let pack = |sys: &SpinSystem| -> Vec<f64> {
        let mut x = Vec::new();
        if free.g_par {
            x.push(sys.g_par);
        }
        if free.a_par {
            x.push(sys.a_par_hz);
        }
        if free.e_rhombic {
            x.push(sys.e_rhombic_hz);
        }
        if free.d_fine {
            x.push(sys.d_fine_hz);
        }
        x
    };
    let unpack = |x: &[f64]| -> SpinSystem {
        let mut sys = *template;
        let mut k = 0;
        if free.g_par {
            sys.g_par = x[k];
            k += 1;
        }
        if free.a_par {
            sys.a_par_hz = x[k];
            k += 1;
        }
        if free.e_rhombic {
            sys.e_rhombic_hz = x[k];
            k += 1;
        }
        if free.d_fine {
            sys.d_fine_hz = x[k];
        }
        sys
    };

    let objective_of = |sys: &SpinSystem| -> f64 {
        if sys.validate().is_err() {
            return f64::INFINITY;
        }
        let mut total = 0.0;
        for (mode, peak) in lines {
            let predicted = predicted_frequency(sys, peak.b_center_t, mode);
            let residual = mode.frequency_hz - predicted;
            total += residual * residual;
        }
        total
    };

    let x0 = pack(template);
    let steps: Vec<f64> = x0
        .iter()
        .enumerate()
        .map(|(k, v)| {
            // g-like parameters move by 5%, energies by 5% with a 0.1 MHz
            // floor so zero starting values still span a simplex.
            if free.g_par && k == 0 {
                (0.05 * v.abs()).max(0.01)
            } else {
                (0.05 * v.abs()).max(1e5)
            }
        })
        .collect();

    let mut eval = |x: &[f64]| objective_of(&unpack(x));
    let budget = 500 * n_free;
    // A fit that resolves the mode frequencies at the 1e-10 relative level
    // has nothing left to gain: squared-residual floor at that scale.
    let scale_hz2: f64 = lines
        .iter()
        .map(|(m, _)| m.frequency_hz * m.frequency_hz)
        .sum();
    let floor = FIT_REL_TOL * scale_hz2;
    let result = simplex::minimize(&mut eval, &x0, &steps, FIT_REL_TOL, floor, budget);

    let refined = unpack(&result.x);
    let residuals: Vec<f64> = lines
        .iter()
        .map(|(mode, peak)| mode.frequency_hz - predicted_frequency(&refined, peak.b_center_t, mode))
        .collect();
    let report = SpinFitReport {
        system: refined,
        objective_hz2: result.objective,
        residuals_hz: residuals,
        iterations: result.iterations,
        converged: result.converged,
        objective_history: result.history,
    };
    if !result.converged {
        return Err(EsrError::FitNotConverged {
            iterations: report.iterations,
            objective: report.objective_hz2,
            target: FIT_REL_TOL,
        });
    }
    Ok(report)
}

/// The allowed transition frequency nearest the mode frequency at the given
/// field; 0 when the table is empty so the residual stays large.
pub fn predicted_frequency(sys: &SpinSystem, b_tesla: f64, mode: &ModeSpec) -> f64 {
    match transition_table(sys, b_tesla.max(0.0), mode.theta_rad) {
        Ok(lines) => lines
            .iter()
            .map(|l| l.frequency_hz)
            .min_by(|a, b| {
                (a - mode.frequency_hz)
                    .abs()
                    .partial_cmp(&(b - mode.frequency_hz).abs())
                    .unwrap()
            })
            .unwrap_or(0.0),
        Err(_) => 0.0,
    }
}
