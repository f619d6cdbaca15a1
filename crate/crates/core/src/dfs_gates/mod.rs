//! Logical gates on decoherence-free qubits: the path coupler and the CNOT,
//! Toffoli and Fredkin circuits with their measurement feed-forward.
//!
//! Photon layout (canonical paths):
//!
//! | gate    | qubits (basis order) | paths                                   |
//! |---------|----------------------|-----------------------------------------|
//! | CNOT    | AB, CD               | A C2, B C1, C T1, D T4                  |
//! | Toffoli | AB, EF, CD           | A C2, B C1, C T1, D T4, E C4, F C3      |
//! | Fredkin | AB, CD, EF           | A C2, B C1, C T1, D T4, E T5, F T8      |

mod circuit;
mod coupler;
mod gates;
mod report;

pub use self::circuit::{BranchOutcome, Circuit, FeedForwardOp, MeasurementStage, SampledRun, Step, BRANCH_WEIGHT_FLOOR};
pub use self::coupler::{path_coupler, ArmPair, CouplerArm, CouplerMarker, PathCoupler, Port};
pub use self::gates::{
    ideal_logical_unitary, logical_basis_state, random_logical_state, GateProbes, LogicalGate,
};
pub use self::report::{analytic_success, run_gate, BranchSummary, GateReport, RunMode, StageSummary};
pub use crate::kerr_homodyne::GateKind;

use crate::error::{DfsError, Result};
use crate::photonic_state::{Element, PhotonicState};

/// Exchanges the polarizations of two photons in every term.
pub fn polarization_swap(state: &PhotonicState, photon1: &str, photon2: &str) -> Result<PhotonicState> {
    if photon1 == photon2 {
        return Err(DfsError::Invalid(format!("cannot swap photon {photon1} with itself")));
    }
    state.apply(&Element::PolarizationSwap { first: photon1.into(), second: photon2.into(), on_paths: None })
}

/// Relabels one photon's path `a ↔ b` in every term.
pub fn path_swap(state: &PhotonicState, photon: &str, pair: (&str, &str)) -> Result<PhotonicState> {
    state.apply(&Element::PathSwap { photon: photon.into(), a: pair.0.into(), b: pair.1.into() })
}

fn gate_run(kind: GateKind, input: &PhotonicState, probes: &GateProbes, mode: RunMode<'_>) -> Result<GateReport> {
    run_gate(&LogicalGate::new(kind)?, input, probes, mode)
}

pub fn cnot(input: &PhotonicState, probes: &GateProbes, mode: RunMode<'_>) -> Result<GateReport> {
    gate_run(GateKind::Cnot, input, probes, mode)
}

pub fn toffoli(input: &PhotonicState, probes: &GateProbes, mode: RunMode<'_>) -> Result<GateReport> {
    gate_run(GateKind::Toffoli, input, probes, mode)
}

pub fn fredkin(input: &PhotonicState, probes: &GateProbes, mode: RunMode<'_>) -> Result<GateReport> {
    gate_run(GateKind::Fredkin, input, probes, mode)
}

pub fn enumerate_branches(gate: GateKind, input: &PhotonicState, probes: &GateProbes) -> Result<Vec<BranchOutcome>> {
    LogicalGate::new(gate)?.enumerate_branches(input, probes)
}
