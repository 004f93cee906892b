//! Low-field coupled |F, M_F⟩ representation for S = ½, I = ½, its mixing
//! angle, and a diagonalization cross-check.
//!
//! Below the crossover field the Zeeman energy is smaller than the hyperfine
//! energy and the product basis stops being a good description; the total
//! spin F = S + I takes over. The mixed pair is
//!
//! ```text
//! |1,0⟩ = cosφ·|½,−½⟩ + sinφ·|−½,½⟩
//! |0,0⟩ = −sinφ·|½,−½⟩ + cosφ·|−½,½⟩
//! ```
//!
//! with φ = atan[(x + √(A² − x²))/A], x = (γ_S − γ_I)B/2π, all in Hz. The
//! stretch states |1,±1⟩ stay pure product states.
//!
//! The printed closed form is the primary definition of φ. The cross-check
//! Hamiltonian uses isotropic hyperfine A(S·I), because a pure Sz·Iz coupling
//! produces no singlet-triplet mixing at all; the angle extracted from its
//! numeric |1,0⟩-like eigenvector is reported side by side and never silently
//! substituted. The two do not agree away from B = 0 (the closed form is
//! non-monotonic and returns to π/4 at the crossover); the comparison report
//! exists to make that visible.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::Serialize;

use crate::constants::CODATA;
use crate::eigen::eigensolve;
use crate::error::EsrError;
use crate::hamiltonian::SpinSystem;
use crate::spin::{embed_product, spin_matrices, SpinQuantum};
use crate::Result;

/// The four coupled states over the |M_S, M_I⟩ product basis
/// (|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩ at indices 0..4).
#[derive(Debug, Clone)]
pub struct CoupledStates {
    /// Mixing angle φ in radians.
    pub mixing_angle: f64,
    /// State vectors in the order |1,1⟩, |1,0⟩, |1,−1⟩, |0,0⟩.
    pub states: [Array1<Complex64>; 4],
    /// Total-spin label F per state.
    pub f_labels: [f64; 4],
    /// Magnetic label M_F per state.
    pub mf_labels: [f64; 4],
    /// Effective g-factor of the F = 1 manifold: slope of the |1,±1⟩
    /// splitting per unit M_F in units of β/h. Those two levels are exact
    /// eigenstates with energies linear in B, so the slope is
    /// h(γ_S − γ_I)/(4πβ), field-independent.
    pub g_f: f64,
}

/// Side-by-side comparison of the closed-form basis against direct
/// diagonalization of the isotropic low-field Hamiltonian.
#[derive(Debug, Clone, Serialize)]
pub struct LowFieldReport {
    pub b_tesla: f64,
    pub a_hz: f64,
    /// φ from the printed closed form.
    pub phi_formula_rad: f64,
    /// φ extracted from the numeric |1,0⟩-like eigenvector.
    pub phi_numeric_rad: f64,
    pub phi_discrepancy_rad: f64,
    /// |⟨analytic|numeric⟩| for |1,1⟩, |1,0⟩, |1,−1⟩, |0,0⟩.
    pub overlaps: [f64; 4],
    /// Eigenvalues ascending, Hz.
    pub energies_hz: Vec<f64>,
    /// g_F measured from the numeric stretch-state splitting at this field
    /// (analytic derivative at B = 0).
    pub g_f_numeric: f64,
}

/// Low-field level structure: energies, eigenvectors and the comparison
/// report.
#[derive(Debug, Clone)]
pub struct LowFieldLevels {
    pub energies_hz: Vec<f64>,
    pub vectors: Array2<Complex64>,
    pub report: LowFieldReport,
}

/// Crossover field 2πA/(γ_S − γ_I) beyond which the discriminant of the
/// mixing-angle formula turns negative.
pub fn crossover_field_tesla(a_hz: f64, gamma_s: f64, gamma_i: f64) -> f64 {
    std::f64::consts::TAU * a_hz / (gamma_s - gamma_i)
}

/// The closed-form mixing angle. `a_hz` must be positive and the field must
/// stay at or below the crossover; outside that domain the formula is
/// complex-valued and an error naming the crossover field is returned.
pub fn mixing_angle(a_hz: f64, gamma_s: f64, gamma_i: f64, b_tesla: f64) -> Result<f64> {
    if !(a_hz.is_finite() && a_hz > 0.0) {
        return Err(EsrError::param("a_hz", "hyperfine constant must be > 0"));
    }
    let x = (gamma_s - gamma_i) * b_tesla / std::f64::consts::TAU;
    let disc = a_hz * a_hz - x * x;
    if disc < 0.0 {
        return Err(EsrError::MixingAngleDomain {
            b_tesla,
            crossover_tesla: crossover_field_tesla(a_hz, gamma_s, gamma_i),
        });
    }
    Ok(((x + disc.sqrt()) / a_hz).atan())
}

/// Builds the four coupled states for a given mixing angle.
pub fn coupled_states(phi_rad: f64) -> Result<CoupledStates> {
    if !phi_rad.is_finite() {
        return Err(EsrError::param("phi_rad", "must be finite"));
    }
    let c = phi_rad.cos();
    let s = phi_rad.sin();
    let basis = |coeffs: [f64; 4]| {
        Array1::from_iter(coeffs.iter().map(|&v| Complex64::new(v, 0.0)))
    };
    let states = [
        basis([1.0, 0.0, 0.0, 0.0]),
        basis([0.0, c, s, 0.0]),
        basis([0.0, 0.0, 0.0, 1.0]),
        basis([0.0, -s, c, 0.0]),
    ];
    Ok(CoupledStates {
        mixing_angle: phi_rad,
        states,
        f_labels: [1.0, 1.0, 1.0, 0.0],
        mf_labels: [1.0, 0.0, -1.0, 0.0],
        g_f: stretch_state_g_f(CODATA.gamma_electron, CODATA.gamma_proton),
    })
}

/// g_F from the stretch-state splitting slope: h(γ_S − γ_I)/(4πβ).
pub fn stretch_state_g_f(gamma_s: f64, gamma_i: f64) -> f64 {
    CODATA.h * (gamma_s - gamma_i) / (2.0 * std::f64::consts::TAU * CODATA.bohr_magneton)
}

/// The isotropic low-field Hamiltonian
/// (γ_S/2π)B·Sz − (γ_I/2π)B·Iz + A(SxIx + SyIy + SzIz) on the S = ½ ⊗ I = ½
/// product space, in Hz.
pub fn lowfield_hamiltonian(
    a_hz: f64,
    gamma_s: f64,
    gamma_i: f64,
    b_tesla: f64,
) -> Array2<Complex64> {
    let ops = embed_product(
        &spin_matrices(SpinQuantum::HALF),
        &spin_matrices(SpinQuantum::HALF),
    );
    let fs = gamma_s * b_tesla / std::f64::consts::TAU;
    let fi = gamma_i * b_tesla / std::f64::consts::TAU;
    let dot = ops.electron.sx.dot(&ops.nuclear.sx)
        + ops.electron.sy.dot(&ops.nuclear.sy)
        + ops.electron.sz.dot(&ops.nuclear.sz);
    ops.electron.sz.mapv(|v| v * Complex64::new(fs, 0.0))
        - ops.nuclear.sz.mapv(|v| v * Complex64::new(fi, 0.0))
        + dot.mapv(|v| v * Complex64::new(a_hz, 0.0))
}

/// Diagonalizes the low-field Hamiltonian and compares the spectrum and
/// eigenvectors against the closed-form coupled basis.
pub fn lowfield_levels(
    a_hz: f64,
    gamma_s: f64,
    gamma_i: f64,
    b_tesla: f64,
) -> Result<LowFieldLevels> {
    if b_tesla < 0.0 {
        return Err(EsrError::param("b_tesla", "must be >= 0"));
    }
    let phi = mixing_angle(a_hz, gamma_s, gamma_i, b_tesla)?;
    let analytic = coupled_states(phi)?;

    let h = lowfield_hamiltonian(a_hz, gamma_s, gamma_i, b_tesla);
    let eig = eigensolve(&h)?;
    let n = eig.values.len();

    // For each analytic state take the best-overlapping numeric eigenvector.
    let mut overlaps = [0.0f64; 4];
    let mut matched = [0usize; 4];
    for (k, state) in analytic.states.iter().enumerate() {
        let mut best = (0usize, 0.0f64);
        for col in 0..n {
            let mut amp = Complex64::new(0.0, 0.0);
            for row in 0..n {
                amp += state[row].conj() * eig.vectors[(row, col)];
            }
            let ov = amp.norm();
            if ov > best.1 {
                best = (col, ov);
            }
        }
        matched[k] = best.0;
        overlaps[k] = best.1;
    }

    // Mixing angle of the numeric |1,0⟩-like eigenvector: strip the global
    // phase so the |↑↓⟩ component is real non-negative, then read the tilt.
    let col = matched[1];
    let c1 = eig.vectors[(1, col)];
    let c2 = eig.vectors[(2, col)];
    let phi_numeric = if c1.norm() > 0.0 {
        let phase = c1.conj() / c1.norm();
        let c1r = (c1 * phase).re;
        let c2r = (c2 * phase).re;
        c2r.atan2(c1r)
    } else {
        std::f64::consts::FRAC_PI_2
    };

    // Numeric g_F from the stretch-state splitting at this field; at B = 0
    // fall back to the analytic derivative.
    let g_f_numeric = if b_tesla > 0.0 {
        let split = eig.values[matched[0]] - eig.values[matched[2]];
        split * CODATA.h / (2.0 * CODATA.bohr_magneton * b_tesla)
    } else {
        stretch_state_g_f(gamma_s, gamma_i)
    };

    let report = LowFieldReport {
        b_tesla,
        a_hz,
        phi_formula_rad: phi,
        phi_numeric_rad: phi_numeric,
        phi_discrepancy_rad: (phi - phi_numeric).abs(),
        overlaps,
        energies_hz: eig.values.clone(),
        g_f_numeric,
    };
    Ok(LowFieldLevels {
        energies_hz: eig.values,
        vectors: eig.vectors,
        report,
    })
}

/// Convenience: a spin system describing the I = ½ low-field species used by
/// the cross-check (g from γ_S, only the hyperfine term).
pub fn lowfield_system(a_hz: f64, line_width_fwhm_hz: f64) -> Result<SpinSystem> {
    let mut sys = SpinSystem::electron_only(CODATA.free_electron_g, line_width_fwhm_hz)?;
    sys.i = SpinQuantum::HALF;
    sys.a_par_hz = a_hz;
    Ok(sys)
}
