//! Probe photon loss: dephasing between probe branches, the conditional
//! density after an X-quadrature readout, and the resulting gate fidelity.

mod density;
mod dephasing;
mod surface;

pub use self::density::{conditional_density, fidelity_after_feedforward, DensityOperator, DIAGONAL_FLOOR};
pub use self::dephasing::{b_matrix, branch_decomposition, BranchDecomposition, DephasingMatrix};
pub use self::surface::{
    fidelity_surface, format_sig, lossy_gate_fidelity, surface_csv, surface_grid, surface_point, uniform_input,
    SurfacePoint, DEFAULT_ALPHA, DEFAULT_STEPS, DEFAULT_THETA, SURFACE_HEADER,
};
