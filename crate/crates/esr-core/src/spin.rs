//! Exact spin operator algebra for arbitrary half-integer or integer spin,
//! and its embedding onto the electron ⊗ nuclear product space.
//!
//! Matrices are built in the |m⟩ basis ordered m = s, s−1, …, −s. The product
//! basis |M_S, M_I⟩ keeps M_S outer and M_I inner, both descending, so state
//! labels map to deterministic indices. Everything is complex even when a
//! given operator happens to be real: S_y and anisotropy terms are
//! intrinsically complex.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::EsrError;
use crate::Result;

/// A non-negative half-integer spin quantum number.
///
/// Stored as twice the spin so that values such as 5/2 are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpinQuantum {
    twice: u32,
}

impl SpinQuantum {
    /// Validates that `value` is a non-negative half-integer.
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(EsrError::InvalidSpin { value });
        }
        let twice = 2.0 * value;
        if (twice - twice.round()).abs() > 1e-9 {
            return Err(EsrError::InvalidSpin { value });
        }
        Ok(SpinQuantum {
            twice: twice.round() as u32,
        })
    }

    pub const ZERO: SpinQuantum = SpinQuantum { twice: 0 };
    pub const HALF: SpinQuantum = SpinQuantum { twice: 1 };

    /// The spin value s.
    pub fn value(self) -> f64 {
        f64::from(self.twice) / 2.0
    }

    /// Hilbert-space dimension 2s + 1.
    pub fn multiplicity(self) -> usize {
        self.twice as usize + 1
    }

    /// The Casimir eigenvalue s(s+1).
    pub fn casimir(self) -> f64 {
        let s = self.value();
        s * (s + 1.0)
    }

    /// Magnetic quantum number for a basis index (index 0 ↔ m = s).
    pub fn m_of_index(self, index: usize) -> f64 {
        self.value() - index as f64
    }
}

impl std::fmt::Display for SpinQuantum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.twice % 2 == 0 {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

impl serde::Serialize for SpinQuantum {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.value())
    }
}

impl<'de> serde::Deserialize<'de> for SpinQuantum {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let value = f64::deserialize(deserializer)?;
        SpinQuantum::new(value).map_err(|_| {
            serde::de::Error::custom(format!(
                "spin quantum number {value} is not a non-negative half-integer"
            ))
        })
    }
}

/// The five operators of one spin: z, x, y and the ladder pair.
///
/// Invariants (enforced by construction, checked in tests): sz, sx, sy are
/// Hermitian, s_plus = s_minus†, [sx, sy] = i·sz and cyclic permutations,
/// and sx² + sy² + sz² = s(s+1)·1.
#[derive(Debug, Clone)]
pub struct SpinOperators {
    pub spin: SpinQuantum,
    pub sz: Array2<Complex64>,
    pub sx: Array2<Complex64>,
    pub sy: Array2<Complex64>,
    pub s_plus: Array2<Complex64>,
    pub s_minus: Array2<Complex64>,
}

impl SpinOperators {
    pub fn dim(&self) -> usize {
        self.sz.nrows()
    }
}

/// Electron and nuclear operator families embedded on the product space of
/// dimension (2S+1)(2I+1).
#[derive(Debug, Clone)]
pub struct ProductOperators {
    pub electron: SpinOperators,
    pub nuclear: SpinOperators,
}

impl ProductOperators {
    pub fn dim(&self) -> usize {
        self.electron.dim()
    }
}

/// Standard angular-momentum matrices for spin `s` in the descending |m⟩
/// basis; ladder elements are √(s(s+1) − m(m±1)).
pub fn spin_matrices(s: SpinQuantum) -> SpinOperators {
    let n = s.multiplicity();
    let mut sz = Array2::<Complex64>::zeros((n, n));
    let mut s_plus = Array2::<Complex64>::zeros((n, n));

    for i in 0..n {
        let m = s.m_of_index(i);
        sz[(i, i)] = Complex64::new(m, 0.0);
        // S+ |m⟩ = √(s(s+1) − m(m+1)) |m+1⟩; |m+1⟩ sits at index i−1.
        if i > 0 {
            let amp = (s.casimir() - m * (m + 1.0)).sqrt();
            s_plus[(i - 1, i)] = Complex64::new(amp, 0.0);
        }
    }
    let s_minus = adjoint(&s_plus);
    let half = Complex64::new(0.5, 0.0);
    let half_i = Complex64::new(0.0, -0.5);
    let sx = (&s_plus + &s_minus).mapv(|v| v * half);
    let sy = (&s_plus - &s_minus).mapv(|v| v * half_i);

    SpinOperators {
        spin: s,
        sz,
        sx,
        sy,
        s_plus,
        s_minus,
    }
}

/// Tensors electron operators with the nuclear identity and vice versa,
/// producing both families on the (2S+1)(2I+1) product space.
pub fn embed_product(elec: &SpinOperators, nuc: &SpinOperators) -> ProductOperators {
    let id_e = identity(elec.dim());
    let id_n = identity(nuc.dim());
    let lift_e = |op: &Array2<Complex64>| kron(op, &id_n);
    let lift_n = |op: &Array2<Complex64>| kron(&id_e, op);

    ProductOperators {
        electron: SpinOperators {
            spin: elec.spin,
            sz: lift_e(&elec.sz),
            sx: lift_e(&elec.sx),
            sy: lift_e(&elec.sy),
            s_plus: lift_e(&elec.s_plus),
            s_minus: lift_e(&elec.s_minus),
        },
        nuclear: SpinOperators {
            spin: nuc.spin,
            sz: lift_n(&nuc.sz),
            sx: lift_n(&nuc.sx),
            sy: lift_n(&nuc.sy),
            s_plus: lift_n(&nuc.s_plus),
            s_minus: lift_n(&nuc.s_minus),
        },
    }
}

/// Complex identity matrix.
pub fn identity(n: usize) -> Array2<Complex64> {
    Array2::from_diag_elem(n, Complex64::new(1.0, 0.0))
}

/// Conjugate transpose.
pub fn adjoint(a: &Array2<Complex64>) -> Array2<Complex64> {
    a.t().mapv(|v| v.conj())
}

/// Kronecker product, left factor outer.
pub fn kron(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = Array2::<Complex64>::zeros((ra * rb, ca * cb));
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[(i, j)];
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Largest elementwise absolute difference of two matrices.
pub fn max_abs_diff(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Commutator [a, b].
pub fn commutator(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    a.dot(b) - b.dot(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scaled(a: &Array2<Complex64>, s: f64) -> Array2<Complex64> {
        a.mapv(|v| v * Complex64::new(s, 0.0))
    }

    #[test]
    fn rejects_invalid_spin() {
        assert!(SpinQuantum::new(-0.5).is_err());
        assert!(SpinQuantum::new(0.3).is_err());
        assert!(SpinQuantum::new(f64::NAN).is_err());
        assert!(SpinQuantum::new(2.5).is_ok());
    }

    #[test]
    fn spin_half_matrices() {
        let ops = spin_matrices(SpinQuantum::HALF);
        assert_eq!(ops.dim(), 2);
        assert_eq!(ops.sz[(0, 0)], Complex64::new(0.5, 0.0));
        assert_eq!(ops.sz[(1, 1)], Complex64::new(-0.5, 0.0));
        assert_eq!(ops.sx[(0, 1)], Complex64::new(0.5, 0.0));
        assert_eq!(ops.sx[(1, 0)], Complex64::new(0.5, 0.0));
        // Eigenvalues of sx = [[0, 1/2], [1/2, 0]] are ±1/2 from λ² = 1/4.
        let det = ops.sx[(0, 0)] * ops.sx[(1, 1)] - ops.sx[(0, 1)] * ops.sx[(1, 0)];
        assert!((det.re + 0.25).abs() < 1e-15 && det.im.abs() < 1e-15);
    }

    #[test]
    fn spin_five_half_sz_squared_trace() {
        // Sum of m² over m ∈ {±5/2, ±3/2, ±1/2} = 2·(25/4 + 9/4 + 1/4) = 17.5.
        let ops = spin_matrices(SpinQuantum::new(2.5).unwrap());
        let sz2 = ops.sz.dot(&ops.sz);
        let trace: Complex64 = (0..ops.dim()).map(|i| sz2[(i, i)]).sum();
        assert!((trace.re - 17.5).abs() < 1e-12);
        assert!(trace.im.abs() < 1e-15);
    }

    #[test]
    fn algebra_invariants_for_all_spins() {
        let i_unit = Complex64::new(0.0, 1.0);
        for twice in 0..=5u32 {
            let s = SpinQuantum::new(f64::from(twice) / 2.0).unwrap();
            let ops = spin_matrices(s);
            let n = ops.dim();

            // Hermiticity and ladder adjointness.
            assert!(max_abs_diff(&ops.sz, &adjoint(&ops.sz)) < 1e-12);
            assert!(max_abs_diff(&ops.sx, &adjoint(&ops.sx)) < 1e-12);
            assert!(max_abs_diff(&ops.sy, &adjoint(&ops.sy)) < 1e-12);
            assert!(max_abs_diff(&ops.s_plus, &adjoint(&ops.s_minus)) < 1e-12);

            // [sx, sy] = i sz and cyclic permutations.
            let expect_z = ops.sz.mapv(|v| v * i_unit);
            let expect_x = ops.sx.mapv(|v| v * i_unit);
            let expect_y = ops.sy.mapv(|v| v * i_unit);
            assert!(max_abs_diff(&commutator(&ops.sx, &ops.sy), &expect_z) < 1e-12);
            assert!(max_abs_diff(&commutator(&ops.sy, &ops.sz), &expect_x) < 1e-12);
            assert!(max_abs_diff(&commutator(&ops.sz, &ops.sx), &expect_y) < 1e-12);

            // Casimir: sx² + sy² + sz² = s(s+1)·1.
            let casimir =
                ops.sx.dot(&ops.sx) + ops.sy.dot(&ops.sy) + ops.sz.dot(&ops.sz);
            let expected = scaled(&identity(n), s.casimir());
            assert!(max_abs_diff(&casimir, &expected) < 1e-12);
        }
    }

    #[test]
    fn embed_identity_when_nuclear_spin_zero() {
        let e = spin_matrices(SpinQuantum::HALF);
        let n = spin_matrices(SpinQuantum::ZERO);
        let prod = embed_product(&e, &n);
        assert_eq!(prod.dim(), 2);
        assert!(max_abs_diff(&prod.electron.sz, &e.sz) < 1e-15);
    }

    #[test]
    fn embed_half_half_diagonals() {
        let e = spin_matrices(SpinQuantum::HALF);
        let n = spin_matrices(SpinQuantum::HALF);
        let prod = embed_product(&e, &n);
        assert_eq!(prod.dim(), 4);
        let sz_diag: Vec<f64> = (0..4).map(|i| prod.electron.sz[(i, i)].re).collect();
        assert_eq!(sz_diag, vec![0.5, 0.5, -0.5, -0.5]);
        // SzIz = elementwise product of the two diagonals.
        let sziz = prod.electron.sz.dot(&prod.nuclear.sz);
        let diag: Vec<f64> = (0..4).map(|i| sziz[(i, i)].re).collect();
        assert_eq!(diag, vec![0.25, -0.25, -0.25, 0.25]);
    }

    #[test]
    fn embedding_preserves_algebra_and_families_commute() {
        let i_unit = Complex64::new(0.0, 1.0);
        for (ts, ti) in [(1u32, 1u32), (1, 0), (5, 1), (2, 1)] {
            let s = SpinQuantum::new(f64::from(ts) / 2.0).unwrap();
            let i = SpinQuantum::new(f64::from(ti) / 2.0).unwrap();
            let prod = embed_product(&spin_matrices(s), &spin_matrices(i));
            let dim = prod.dim();
            assert_eq!(dim, s.multiplicity() * i.multiplicity());

            // Commutators survive the embedding.
            let expect_z = prod.electron.sz.mapv(|v| v * i_unit);
            assert!(
                max_abs_diff(&commutator(&prod.electron.sx, &prod.electron.sy), &expect_z)
                    < 1e-12
            );
            let expect_iz = prod.nuclear.sz.mapv(|v| v * i_unit);
            assert!(
                max_abs_diff(&commutator(&prod.nuclear.sx, &prod.nuclear.sy), &expect_iz)
                    < 1e-12
            );

            // Casimir values survive the embedding.
            let cas_e = prod.electron.sx.dot(&prod.electron.sx)
                + prod.electron.sy.dot(&prod.electron.sy)
                + prod.electron.sz.dot(&prod.electron.sz);
            assert!(max_abs_diff(&cas_e, &scaled(&identity(dim), s.casimir())) < 1e-12);

            // Electron and nuclear operators commute elementwise.
            for a in [&prod.electron.sz, &prod.electron.sx, &prod.electron.sy] {
                for b in [&prod.nuclear.sz, &prod.nuclear.sx, &prod.nuclear.sy] {
                    let zero = Array2::<Complex64>::zeros((dim, dim));
                    assert!(max_abs_diff(&commutator(a, b), &zero) < 1e-12);
                }
            }
        }
    }
}
