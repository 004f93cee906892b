//! Spin-Hamiltonian toolkit for multi-mode ESR spectroscopy of dilute
//! paramagnetic ions in a dielectric resonator.
//!
//! The crate covers the full desk-scale pipeline:
//!
//! * exact spin operator algebra on the electron ⊗ nuclear product space
//!   ([`spin`]),
//! * construction and diagonalization of the effective spin Hamiltonian and
//!   enumeration of drive-allowed transitions ([`hamiltonian`], [`eigen`]),
//! * the low-field coupled |F, M_F⟩ basis with its mixing angle and a
//!   diagonalization cross-check ([`coupled`]),
//! * the tetragonal triplet-splitting g-factor model, forward and inverse
//!   ([`ligand`]),
//! * normalized line shapes and synthesis of swept-field transmission maps
//!   ([`lineshape`], [`spectrum`]),
//! * peak detection, effective g-factor regression and nonlinear parameter
//!   refinement ([`analysis`]),
//! * minimum detectable spin count and ppm conversion ([`sensitivity`]).
//!
//! All energies are carried in Hz; conversion to Joules happens only through
//! [`constants::PhysicalConstants`]. The product basis |M_S, M_I⟩ is ordered
//! with M_S outer and M_I inner, both descending; every matrix index in the
//! crate refers to that ordering.

pub mod analysis;
pub mod constants;
pub mod coupled;
pub mod eigen;
pub mod error;
pub mod hamiltonian;
pub mod io;
pub mod ligand;
pub mod lineshape;
pub mod sensitivity;
pub mod simplex;
pub mod spectrum;
pub mod spin;

pub use constants::{PhysicalConstants, CODATA};
pub use error::EsrError;
pub use hamiltonian::{SpinSystem, TransitionLine};
pub use spin::SpinQuantum;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, EsrError>;
