use num_complex::Complex64;
use rand::RngCore;
use serde::{Serialize, Serializer};

use crate::dfs_gates::gates::{GateProbes, LogicalGate};
use crate::error::Result;
use crate::kerr_homodyne::{success_probability, DecisionGeometry, GateKind};
use crate::photonic_state::{fidelity_pure, PhotonicState};

fn complex_pairs<S: Serializer>(v: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let pairs: Vec<[f64; 2]> = v.iter().map(|c| [c.re, c.im]).collect();
    pairs.serialize(s)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchSummary {
    pub classes: Vec<u32>,
    pub probability: f64,
    pub fidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageSummary {
    pub label: String,
    pub alpha: f64,
    pub theta: f64,
    pub gamma_t: f64,
    pub geometry: DecisionGeometry,
}

/// Outcome of one gate run: per-branch fidelities against the ideal gate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateReport {
    pub gate: GateKind,
    #[serde(serialize_with = "complex_pairs")]
    pub input: Vec<Complex64>,
    pub branches: Vec<BranchSummary>,
    pub p_analytic: f64,
    pub worst_fidelity: f64,
    /// Probability-weighted mean over the reported branches.
    pub mean_fidelity: f64,
    /// Sampled runs only: whether every readout matched its true class.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success: Option<bool>,
    pub stages: Vec<StageSummary>,
}

impl GateReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report fields are always serializable")
    }

    pub fn total_probability(&self) -> f64 {
        self.branches.iter().map(|b| b.probability).sum()
    }
}

/// How a gate run reads out its probes.
pub enum RunMode<'a> {
    Enumerated,
    Sampled(&'a mut dyn RngCore),
}

/// Product of the single-readout success probabilities of every stage.
pub fn analytic_success(probes: &GateProbes) -> Result<f64> {
    probes
        .stages()
        .iter()
        .map(|p| success_probability(p.alpha(), p.theta(), p.gamma_t()))
        .product()
}

fn stage_summaries(gate: &LogicalGate, probes: &GateProbes) -> Result<Vec<StageSummary>> {
    gate.circuit()
        .stages()
        .zip(probes.stages())
        .map(|(s, p)| {
            Ok(StageSummary {
                label: s.label.clone(),
                alpha: p.alpha(),
                theta: p.theta(),
                gamma_t: p.gamma_t(),
                geometry: DecisionGeometry::new(p, s.classes())?,
            })
        })
        .collect()
}

pub fn run_gate(gate: &LogicalGate, input: &PhotonicState, probes: &GateProbes, mode: RunMode<'_>) -> Result<GateReport> {
    let coeffs = gate.validate_input(input)?;
    let ideal = gate.ideal_output(&coeffs)?;
    let (branches, success) = match mode {
        RunMode::Enumerated => {
            let outcomes = gate.enumerate_branches(input, probes)?;
            let branches = outcomes
                .iter()
                .map(|o| {
                    Ok(BranchSummary {
                        classes: o.class_sequence.clone(),
                        probability: o.probability,
                        fidelity: fidelity_pure(&o.output_state, &ideal)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (branches, None)
        }
        RunMode::Sampled(rng) => {
            let run = gate.run_sampled(input, probes, rng)?;
            let probability = run.records.iter().map(|r| r.class_probability).product();
            let branch = BranchSummary {
                classes: run.class_sequence(),
                probability,
                fidelity: fidelity_pure(&run.output_state.normalized()?, &ideal)?,
            };
            (vec![branch], Some(run.success()))
        }
    };
    let worst_fidelity = branches.iter().map(|b| b.fidelity).fold(1.0, f64::min);
    let total: f64 = branches.iter().map(|b| b.probability).sum();
    let mean_fidelity = if total > 0.0 {
        branches.iter().map(|b| b.probability * b.fidelity).sum::<f64>() / total
    } else {
        branches.iter().map(|b| b.fidelity).sum::<f64>() / branches.len() as f64
    };
    Ok(GateReport {
        gate: gate.kind(),
        input: coeffs,
        branches,
        p_analytic: analytic_success(probes)?,
        worst_fidelity,
        mean_fidelity,
        success,
        stages: stage_summaries(gate, probes)?,
    })
}
