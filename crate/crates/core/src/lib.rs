//! Simulation of cross-Kerr based logical gates on photonic qubits encoded in a
//! two-photon decoherence-free subspace (`|0̄⟩ = |HV⟩`, `|1̄⟩ = |VH⟩`).
//!
//! * [`photonic_state`]: sparse polarization/path states and linear optics.
//! * [`kerr_homodyne`]: probe coupling, X-quadrature readout, success probabilities.
//! * [`dfs_gates`]: path coupler, CNOT, Toffoli and Fredkin circuits with feed-forward.
//! * [`loss_fidelity`]: probe photon loss and the resulting conditional fidelities.

pub mod dfs_gates;
pub mod error;
pub mod kerr_homodyne;
pub mod loss_fidelity;
pub mod photonic_state;

pub use error::{DfsError, ErrorKind, Result};
pub use num_complex::Complex64;
