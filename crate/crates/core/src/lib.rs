//! Reduced dynamics of two qubits coupled to local and collective thermal
//! reservoirs in the resonance approximation.
//!
//! * [`spectral`]: reservoir spectral functions and principal-value integrals
//! * [`system`]: Hamiltonian spectrum and cluster partition
//! * [`rates`]: lowest-order thermalization and decoherence rates
//! * [`propagator`]: closed-form resonance propagator
//! * [`solvable`]: exact energy-conserving model used as an oracle
//! * [`entanglement`]: concurrence, initial states, disentanglement bounds
//! * [`experiments`]: figure protocols, sweeps and CSV output

pub mod entanglement;
pub mod error;
pub mod experiments;
pub mod propagator;
pub mod quadrature;
pub mod rates;
pub mod solvable;
pub mod spectral;
pub mod system;

pub use error::{Error, Result};
pub use num_complex::Complex64;
