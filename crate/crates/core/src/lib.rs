//! Sparse SYK traversable-wormhole simulation: Majorana operators, the
//! doubled Hamiltonian, thermofield-double states, transmission signals
//! (exact, Krylov and under dephasing) and disorder-ensemble sweeps.

pub mod ensemble;
pub mod error;
pub mod linalg;
pub mod lindblad;
pub mod ode;
pub mod pauli;
pub mod spectral;
pub mod syk;
pub mod krylov;
pub mod tfd;
pub mod transmission;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = faer::c64;
