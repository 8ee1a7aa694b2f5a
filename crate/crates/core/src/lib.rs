//! Dynamics of a two-level atom in a q-deformed harmonic-oscillator trap,
//! driven by a classical single-mode light field.
//!
//! The crate is organised bottom-up:
//!
//! * [`qnum`]: q-numbers, q-factorials and q-exponentials.
//! * [`fock`]: the truncated q-Fock space, trap spectrum and q-coherent states.
//! * [`coupling`]: matrix elements of `F = exp[i eps (a+ + a)]`.
//! * [`dynamics`]: the full Hamiltonian, spectral propagation and an adaptive
//!   Runge-Kutta cross-check.
//! * [`observables`]: population inversion, revivals and Q-function fields.

pub mod coupling;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod observables;
pub mod qnum;

pub use coupling::{CouplingMatrix, CouplingMode, Prefactor};
pub use dynamics::{AtomFieldState, Propagator, SimulationConfig};
pub use error::{QtrapError, Result};
pub use fock::{CoherentState, FockSpace};
pub use observables::{InversionTrace, ProbeKind, QField, QGrid, Revival};
pub use qnum::{DeformationKind, DeformationParameter};

pub use nalgebra;
pub use num_complex::Complex64;
