//! Effective spin Hamiltonian at a DC field, its spectrum, and the table of
//! drive-allowed transitions.
//!
//! The Hamiltonian (all terms in Hz) is
//!
//! ```text
//! H = (g∥·β·B/h)·Sz + E·(Sx² + Sy²) + A∥·Sz·Iz + D·(Sz² − ⅓S(S+1))
//! ```
//!
//! with the field along z. The drive operator of a mode whose magnetic field
//! vector sits at angle θ to the DC field is cosθ·Sz + sinθ·Sx, the
//! transverse part being the Hermitian combination ½(S₊ + S₋).

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::CODATA;
use crate::eigen::{eigensolve, Eigensystem};
use crate::error::EsrError;
use crate::spin::{embed_product, identity, spin_matrices, ProductOperators, SpinQuantum};
use crate::Result;

/// Default field-sweep step in Tesla.
pub const DEFAULT_FIELD_STEP_T: f64 = 4e-4;
/// Transitions with squared drive matrix element below this are dropped.
pub const INTENSITY_FLOOR: f64 = 1e-12;
/// Bisection tolerance on |transition frequency − mode frequency| in Hz.
pub const RESONANCE_TOLERANCE_HZ: f64 = 1.0;

/// Physical model of one paramagnetic species. Energies are stored in Hz;
/// conversion to Joules happens only through the constants table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinSystem {
    /// Effective electron spin S.
    pub s: SpinQuantum,
    /// Nuclear spin I.
    pub i: SpinQuantum,
    /// Parallel g-factor.
    pub g_par: f64,
    /// Perpendicular g-factor. Carried for reporting; the field-along-z
    /// Hamiltonian does not use it.
    pub g_perp: f64,
    /// Hyperfine constant A∥ in Hz.
    pub a_par_hz: f64,
    /// Rhombic distortion energy E in Hz.
    pub e_rhombic_hz: f64,
    /// Axial fine-structure energy D in Hz.
    pub d_fine_hz: f64,
    /// Full width at half maximum of the resonance line in Hz.
    pub line_width_fwhm_hz: f64,
}

impl SpinSystem {
    /// Spin-½, I = 0 species with the given g∥ and line width.
    pub fn electron_only(g_par: f64, line_width_fwhm_hz: f64) -> Result<Self> {
        let sys = SpinSystem {
            s: SpinQuantum::HALF,
            i: SpinQuantum::ZERO,
            g_par,
            g_perp: 0.0,
            a_par_hz: 0.0,
            e_rhombic_hz: 0.0,
            d_fine_hz: 0.0,
            line_width_fwhm_hz,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g_par.is_finite() && self.g_par > 0.0) {
            return Err(EsrError::param("g_par", "must be finite and > 0"));
        }
        if !(self.line_width_fwhm_hz.is_finite() && self.line_width_fwhm_hz > 0.0) {
            return Err(EsrError::param("line_width_fwhm_hz", "must be finite and > 0"));
        }
        for (name, v) in [
            ("g_perp", self.g_perp),
            ("a_par_hz", self.a_par_hz),
            ("e_rhombic_hz", self.e_rhombic_hz),
            ("d_fine_hz", self.d_fine_hz),
        ] {
            if !v.is_finite() {
                return Err(EsrError::param(name, "must be finite"));
            }
        }
        Ok(())
    }

    /// Operators of this system on the product space.
    pub fn operators(&self) -> ProductOperators {
        embed_product(&spin_matrices(self.s), &spin_matrices(self.i))
    }
}

/// One allowed ESR transition at a fixed field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionLine {
    /// DC field at which the table was evaluated, Tesla.
    pub b_field_t: f64,
    /// Transition frequency E_upper − E_lower in Hz.
    pub frequency_hz: f64,
    /// Squared drive matrix element |⟨upper| cosθ·Sz + sinθ·Sx |lower⟩|².
    pub intensity: f64,
    /// Index of the lower level in the ascending eigenvalue order.
    pub lower_index: usize,
    /// Index of the upper level.
    pub upper_index: usize,
    /// Line width (FWHM) in Hz, copied from the spin system.
    pub width_fwhm_hz: f64,
}

/// Builds the spin Hamiltonian in Hz at field `b_tesla`.
pub fn build_hamiltonian(sys: &SpinSystem, b_tesla: f64) -> Result<Array2<Complex64>> {
    sys.validate()?;
    if !b_tesla.is_finite() {
        return Err(EsrError::param("b_tesla", "must be finite"));
    }
    let ops = sys.operators();
    Ok(build_hamiltonian_with(sys, b_tesla, &ops))
}

/// Same as [`build_hamiltonian`] but reuses precomputed operators; used by
/// field scans that evaluate many B points.
pub fn build_hamiltonian_with(
    sys: &SpinSystem,
    b_tesla: f64,
    ops: &ProductOperators,
) -> Array2<Complex64> {
    let dim = ops.dim();
    let zeeman_hz = CODATA.zeeman_frequency_hz(sys.g_par, b_tesla);

    let mut h = ops.electron.sz.mapv(|v| v * Complex64::new(zeeman_hz, 0.0));
    if sys.e_rhombic_hz != 0.0 {
        let sx2 = ops.electron.sx.dot(&ops.electron.sx);
        let sy2 = ops.electron.sy.dot(&ops.electron.sy);
        h = h + (sx2 + sy2).mapv(|v| v * Complex64::new(sys.e_rhombic_hz, 0.0));
    }
    if sys.a_par_hz != 0.0 {
        let sziz = ops.electron.sz.dot(&ops.nuclear.sz);
        h = h + sziz.mapv(|v| v * Complex64::new(sys.a_par_hz, 0.0));
    }
    if sys.d_fine_hz != 0.0 {
        h = h + fine_structure_operator(sys, ops)
            .mapv(|v| v * Complex64::new(sys.d_fine_hz, 0.0));
    }
    // Keep the matrix explicitly Hermitian at the rounding level.
    for i in 0..dim {
        h[(i, i)] = Complex64::new(h[(i, i)].re, 0.0);
    }
    h
}

/// The dimensionless axial operator Sz² − ⅓S(S+1)·1. Identically zero for
/// S = ½, which is why the fine-structure term drops out there.
pub fn fine_structure_operator(sys: &SpinSystem, ops: &ProductOperators) -> Array2<Complex64> {
    let sz2 = ops.electron.sz.dot(&ops.electron.sz);
    let shift = identity(ops.dim()).mapv(|v| v * Complex64::new(sys.s.casimir() / 3.0, 0.0));
    sz2 - shift
}

/// Drive operator cosθ·Sz + sinθ·Sx on the product space.
pub fn drive_operator(ops: &ProductOperators, theta_rad: f64) -> Array2<Complex64> {
    let c = Complex64::new(theta_rad.cos(), 0.0);
    let s = Complex64::new(theta_rad.sin(), 0.0);
    ops.electron.sz.mapv(|v| v * c) + ops.electron.sx.mapv(|v| v * s)
}

/// Diagonalizes the Hamiltonian and lists every transition with
/// E_upper > E_lower whose drive intensity reaches [`INTENSITY_FLOOR`];
/// ΔM selection comes out of the matrix element itself.
pub fn transition_table(
    sys: &SpinSystem,
    b_tesla: f64,
    theta_rad: f64,
) -> Result<Vec<TransitionLine>> {
    if b_tesla < 0.0 {
        return Err(EsrError::param("b_tesla", "must be >= 0"));
    }
    let ops = sys.operators();
    let h = build_hamiltonian(sys, b_tesla)?;
    let eig = eigensolve(&h)?;
    Ok(transition_table_with(sys, b_tesla, theta_rad, &ops, &eig))
}

fn transition_table_with(
    sys: &SpinSystem,
    b_tesla: f64,
    theta_rad: f64,
    ops: &ProductOperators,
    eig: &Eigensystem,
) -> Vec<TransitionLine> {
    let drive = drive_operator(ops, theta_rad);
    let n = eig.values.len();
    let mut lines = Vec::new();
    for lower in 0..n {
        for upper in (lower + 1)..n {
            let freq = eig.values[upper] - eig.values[lower];
            if freq <= 0.0 {
                continue;
            }
            let intensity = drive_intensity(&drive, eig, lower, upper);
            if intensity < INTENSITY_FLOOR {
                continue;
            }
            lines.push(TransitionLine {
                b_field_t: b_tesla,
                frequency_hz: freq,
                intensity,
                lower_index: lower,
                upper_index: upper,
                width_fwhm_hz: sys.line_width_fwhm_hz,
            });
        }
    }
    lines
}

/// |⟨upper| drive |lower⟩|², independent of eigenvector phases.
fn drive_intensity(drive: &Array2<Complex64>, eig: &Eigensystem, lower: usize, upper: usize) -> f64 {
    let n = eig.values.len();
    let mut amp = Complex64::new(0.0, 0.0);
    for a in 0..n {
        let bra = eig.vectors[(a, upper)].conj();
        for b in 0..n {
            amp += bra * drive[(a, b)] * eig.vectors[(b, lower)];
        }
    }
    amp.norm_sqr()
}

/// All fields in `b_range` at which some drive-allowed transition frequency
/// crosses `f_mode_hz`: a uniform pre-scan at `scan_step_t` brackets each
/// sorted-level-pair crossing, then bisection refines it to
/// [`RESONANCE_TOLERANCE_HZ`]. Returns an empty list when nothing crosses.
pub fn resonance_fields(
    sys: &SpinSystem,
    f_mode_hz: f64,
    theta_rad: f64,
    b_range: (f64, f64),
    scan_step_t: f64,
) -> Result<Vec<f64>> {
    if !(f_mode_hz.is_finite() && f_mode_hz > 0.0) {
        return Err(EsrError::param("f_mode_hz", "must be finite and > 0"));
    }
    if b_range.0 > b_range.1 {
        return Err(EsrError::param("b_range", "must be ordered (lo <= hi)"));
    }
    if !(scan_step_t.is_finite() && scan_step_t > 0.0) {
        return Err(EsrError::param("scan_step_t", "must be finite and > 0"));
    }
    sys.validate()?;

    let ops = sys.operators();
    let dim = ops.dim();
    let gaps = |b: f64| -> Result<Vec<f64>> {
        let h = build_hamiltonian_with(sys, b, &ops);
        let eig = eigensolve(&h)?;
        let mut out = Vec::with_capacity(dim * (dim - 1) / 2);
        for lo in 0..dim {
            for up in (lo + 1)..dim {
                out.push(eig.values[up] - eig.values[lo]);
            }
        }
        Ok(out)
    };

    // Uniform grid over the range, endpoints included.
    let span = b_range.1 - b_range.0;
    let steps = (span / scan_step_t).ceil().max(1.0) as usize;
    let grid: Vec<f64> = (0..=steps)
        .map(|k| (b_range.0 + k as f64 * scan_step_t).min(b_range.1))
        .collect();

    let mut prev = gaps(grid[0])?;
    let mut roots: Vec<f64> = Vec::new();
    for w in 1..grid.len() {
        let cur = gaps(grid[w])?;
        for pair in 0..prev.len() {
            let d0 = prev[pair] - f_mode_hz;
            let d1 = cur[pair] - f_mode_hz;
            if d0 == 0.0 {
                roots.push(grid[w - 1]);
            } else if d0 * d1 < 0.0 {
                roots.push(bisect_pair(sys, &ops, pair, f_mode_hz, grid[w - 1], grid[w])?);
            } else if d1 == 0.0 && w == grid.len() - 1 {
                roots.push(grid[w]);
            }
        }
        prev = cur;
    }

    // Keep only drive-allowed crossings and deduplicate near-identical roots
    // coming from different level pairs.
    let mut allowed = Vec::new();
    for &b in &roots {
        let lines = transition_table(sys, b.max(0.0), theta_rad)?;
        if lines
            .iter()
            .any(|l| (l.frequency_hz - f_mode_hz).abs() <= 10.0 * RESONANCE_TOLERANCE_HZ)
        {
            allowed.push(b);
        }
    }
    allowed.sort_by(|a, b| a.partial_cmp(b).unwrap());
    allowed.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    Ok(allowed)
}

fn bisect_pair(
    sys: &SpinSystem,
    ops: &ProductOperators,
    pair: usize,
    f_mode_hz: f64,
    mut lo: f64,
    mut hi: f64,
) -> Result<f64> {
    let gap_at = |b: f64| -> Result<f64> {
        let h = build_hamiltonian_with(sys, b, ops);
        let eig = eigensolve(&h)?;
        let dim = eig.values.len();
        let mut idx = 0;
        for l in 0..dim {
            for u in (l + 1)..dim {
                if idx == pair {
                    return Ok(eig.values[u] - eig.values[l]);
                }
                idx += 1;
            }
        }
        unreachable!("pair index within bounds");
    };

    let mut d_lo = gap_at(lo)? - f_mode_hz;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let d_mid = gap_at(mid)? - f_mode_hz;
        if d_mid.abs() < RESONANCE_TOLERANCE_HZ || (hi - lo) < f64::EPSILON * lo.abs().max(1e-12) {
            return Ok(mid);
        }
        if d_lo * d_mid <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            d_lo = d_mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
