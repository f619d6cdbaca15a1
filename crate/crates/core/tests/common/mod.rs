//! Hand-written branch-to-class term sets for the coupler and the three gates,
//! compared against symbolic propagation.

#![allow(dead_code)]

use std::collections::BTreeMap;

use dfs_kerr::dfs_gates::{CouplerMarker, GateKind, GateProbes, LogicalGate, PathCoupler};
use dfs_kerr::kerr_homodyne::{measure_probe, MeasureMode, ProbeDescriptor};
use dfs_kerr::photonic_state::{BasisTerm, PhotonicState};
use dfs_kerr::Complex64;

pub const AMPLITUDE_TOLERANCE: f64 = 1e-12;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Single-qubit coefficients, one pair per logical qubit.
pub const BETA: [Complex64; 2] = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
pub const GAMMA: [Complex64; 2] = [Complex64::new(0.8, 0.0), Complex64::new(-0.6, 0.0)];
pub const DELTA: [Complex64; 2] = [Complex64::new(0.5, 0.5), Complex64::new(0.5, -0.5)];
pub const EPSILON: [Complex64; 2] = [Complex64::new(0.28, 0.0), Complex64::new(0.0, 0.96)];

/// Product coefficients, first factor most significant.
pub fn kron(factors: &[[Complex64; 2]]) -> Vec<Complex64> {
    factors.iter().fold(vec![c(1.0, 0.0)], |acc, f| acc.iter().flat_map(|a| [a * f[0], a * f[1]]).collect())
}

/// One printed line: fixed logical bits (`None` = summed over), a path per
/// photon, the probe index and a sign.
pub struct Row {
    pub bits: Vec<Option<u8>>,
    pub paths: Vec<&'static str>,
    pub k: i32,
    pub sign: f64,
}

fn row(bits: &[Option<u8>], paths: &[&'static str], k: i32, sign: f64) -> Row {
    Row { bits: bits.to_vec(), paths: paths.to_vec(), k, sign }
}

/// Expands rows over their free qubits. `qubit_photons[q]` are the photon
/// indices of logical qubit `q`; the amplitude of a term is
/// `scale · sign · coeffs[bits]`.
pub fn expand(
    rows: &[Row],
    qubit_photons: &[(usize, usize)],
    coeffs: &[Complex64],
    scale: f64,
) -> BTreeMap<BasisTerm, Complex64> {
    let n_qubits = qubit_photons.len();
    let mut out: BTreeMap<BasisTerm, Complex64> = BTreeMap::new();
    for r in rows {
        for index in 0..(1usize << n_qubits) {
            let bits: Vec<u8> = (0..n_qubits).map(|q| ((index >> (n_qubits - 1 - q)) & 1) as u8).collect();
            if r.bits.iter().zip(&bits).any(|(fixed, b)| fixed.is_some_and(|f| f != *b)) {
                continue;
            }
            let mut pols = vec!['?'; 2 * n_qubits];
            for (q, &(first, second)) in qubit_photons.iter().enumerate() {
                let (p1, p2) = if bits[q] == 0 { ('H', 'V') } else { ('V', 'H') };
                pols[first] = p1;
                pols[second] = p2;
            }
            let key = format!("{}|{}|{}", pols.iter().collect::<String>(), r.paths.join(","), r.k);
            let term: BasisTerm = key.parse().expect("well-formed expected term");
            *out.entry(term).or_insert(c(0.0, 0.0)) += scale * r.sign * coeffs[index];
        }
    }
    out.retain(|_, a| a.norm() > 1e-15);
    out
}

#[derive(Debug)]
pub struct TermSetCheck {
    pub name: &'static str,
    pub expected_terms: usize,
    pub actual_terms: usize,
    pub missing: Vec<String>,
    pub unexpected: Vec<String>,
    pub max_deviation: f64,
}

impl TermSetCheck {
    pub fn passed(&self) -> bool {
        self.missing.is_empty() && self.unexpected.is_empty() && self.max_deviation <= AMPLITUDE_TOLERANCE
    }
}

pub fn compare(name: &'static str, actual: &PhotonicState, expected: &BTreeMap<BasisTerm, Complex64>) -> TermSetCheck {
    let got: BTreeMap<&BasisTerm, Complex64> = actual.terms().map(|(t, a)| (t, *a)).collect();
    let missing = expected.keys().filter(|t| !got.contains_key(t)).map(|t| t.to_string()).collect();
    let unexpected = got.keys().filter(|t| !expected.contains_key(**t)).map(|t| t.to_string()).collect();
    let max_deviation = expected
        .iter()
        .filter_map(|(t, want)| got.get(t).map(|have| (have - want).norm()))
        .fold(0.0, f64::max);
    TermSetCheck { name, expected_terms: expected.len(), actual_terms: got.len(), missing, unexpected, max_deviation }
}

fn probe() -> ProbeDescriptor {
    ProbeDescriptor::new(70.0, 0.35, 0.0).unwrap()
}

const CTRL0: Option<u8> = Some(0);
const CTRL1: Option<u8> = Some(1);
const FREE: Option<u8> = None;

/// Coupler after the splitters, probe attached: control `|0̄⟩` with the target
/// on T1,T4 and `|1̄⟩` with it on T2,T3 fan out over four classes.
pub fn coupler_probed() -> TermSetCheck {
    let coeffs = kron(&[BETA, DELTA]);
    let mut terms = Vec::new();
    for (bit, paths) in [(0usize, "C2,C1,T1,T4"), (1, "C2,C1,T2,T3")] {
        for tgt in 0..2usize {
            let (a, b) = if bit == 0 { ('H', 'V') } else { ('V', 'H') };
            let (cc, d) = if tgt == 0 { ('H', 'V') } else { ('V', 'H') };
            let t: BasisTerm = format!("{a}{b}{cc}{d}|{paths}|0").parse().unwrap();
            terms.push((t, coeffs[2 * bit + tgt]));
        }
    }
    let input = PhotonicState::from_terms(&["A", "B", "C", "D"], terms).unwrap();
    let coupler = PathCoupler::standard("c", CouplerMarker::new("A", "C1", "C2"), ("C", "T1", "T2"), ("D", "T3", "T4"));
    let probed = coupler.circuit().unwrap().state_at_stage(&input, &[probe()], 0, &[]).unwrap();
    let rows = [
        row(&[CTRL0, FREE], &["C2", "C1", "T1", "T4"], 0, 1.0),
        row(&[CTRL1, FREE], &["C1", "C1", "T1", "T4"], 0, 1.0),
        row(&[CTRL0, FREE], &["C2", "C1", "T2", "T4"], 2, 1.0),
        row(&[CTRL1, FREE], &["C1", "C1", "T2", "T4"], 2, -1.0),
        row(&[CTRL0, FREE], &["C2", "C1", "T1", "T3"], 3, 1.0),
        row(&[CTRL1, FREE], &["C1", "C1", "T1", "T3"], 3, -1.0),
        row(&[CTRL0, FREE], &["C2", "C1", "T2", "T3"], 5, 1.0),
        row(&[CTRL1, FREE], &["C1", "C1", "T2", "T3"], 5, 1.0),
    ];
    compare("coupler", &probed, &expand(&rows, &[(0, 1), (2, 3)], &coeffs, 0.5))
}

/// CNOT: control routed by PBS, target spread by BS and BS′, one probe.
pub fn cnot_probed() -> TermSetCheck {
    let gate = LogicalGate::new(GateKind::Cnot).unwrap();
    let coeffs = kron(&[BETA, DELTA]);
    let probes = GateProbes::uniform(GateKind::Cnot, 70.0, 0.35, 0.0).unwrap();
    let probed = gate.state_at_stage(&gate.encode(&coeffs).unwrap(), &probes, 0, &[]).unwrap();
    let rows = [
        row(&[CTRL0, FREE], &["C2", "C1", "T1", "T4"], 0, 1.0),
        row(&[CTRL1, FREE], &["C1", "C1", "T2", "T3"], 0, 1.0),
        row(&[CTRL0, FREE], &["C2", "C1", "T1", "T3"], 2, 1.0),
        row(&[CTRL1, FREE], &["C1", "C1", "T2", "T4"], -2, 1.0),
        row(&[CTRL0, FREE], &["C2", "C1", "T2", "T4"], 3, 1.0),
        row(&[CTRL1, FREE], &["C1", "C1", "T1", "T3"], -3, 1.0),
        row(&[CTRL0, FREE], &["C2", "C1", "T2", "T3"], 5, 1.0),
        row(&[CTRL1, FREE], &["C1", "C1", "T1", "T4"], -5, 1.0),
    ];
    compare("cnot", &probed, &expand(&rows, &[(0, 1), (2, 3)], &coeffs, 0.5))
}

/// Toffoli second control stage after a class-0 first readout: EF routed,
/// each target path split in two, sixteen terms over seven classes.
pub fn toffoli_second_stage() -> TermSetCheck {
    let gate = LogicalGate::new(GateKind::Toffoli).unwrap();
    // qubit order AB, EF, CD
    let coeffs = kron(&[BETA, GAMMA, DELTA]);
    let probes = GateProbes::uniform(GateKind::Toffoli, 70.0, 0.35, 0.0).unwrap();
    let probed = gate.state_at_stage(&gate.encode(&coeffs).unwrap(), &probes, 1, &[0]).unwrap();
    // photons A B C D E F
    let rows = [
        row(&[CTRL0, CTRL0, FREE], &["C2", "C1", "T11", "T41", "C4", "C3"], 0, 1.0),
        row(&[CTRL1, CTRL0, FREE], &["C1", "C1", "T21", "T31", "C4", "C3"], 0, 1.0),
        row(&[CTRL0, CTRL1, FREE], &["C2", "C1", "T12", "T42", "C3", "C3"], 0, 1.0),
        row(&[CTRL1, CTRL1, FREE], &["C1", "C1", "T22", "T32", "C3", "C3"], 0, 1.0),
        row(&[CTRL0, CTRL0, FREE], &["C2", "C1", "T11", "T42", "C4", "C3"], 2, 1.0),
        row(&[CTRL1, CTRL0, FREE], &["C1", "C1", "T21", "T32", "C4", "C3"], 2, 1.0),
        row(&[CTRL0, CTRL1, FREE], &["C2", "C1", "T12", "T41", "C3", "C3"], -2, 1.0),
        row(&[CTRL1, CTRL1, FREE], &["C1", "C1", "T22", "T31", "C3", "C3"], -2, 1.0),
        row(&[CTRL0, CTRL0, FREE], &["C2", "C1", "T12", "T41", "C4", "C3"], 3, 1.0),
        row(&[CTRL1, CTRL0, FREE], &["C1", "C1", "T22", "T31", "C4", "C3"], 3, 1.0),
        row(&[CTRL0, CTRL1, FREE], &["C2", "C1", "T11", "T42", "C3", "C3"], -3, 1.0),
        row(&[CTRL1, CTRL1, FREE], &["C1", "C1", "T21", "T32", "C3", "C3"], -3, 1.0),
        row(&[CTRL0, CTRL0, FREE], &["C2", "C1", "T12", "T42", "C4", "C3"], 5, 1.0),
        row(&[CTRL1, CTRL0, FREE], &["C1", "C1", "T22", "T32", "C4", "C3"], 5, 1.0),
        row(&[CTRL0, CTRL1, FREE], &["C2", "C1", "T11", "T41", "C3", "C3"], -5, 1.0),
        row(&[CTRL1, CTRL1, FREE], &["C1", "C1", "T21", "T31", "C3", "C3"], -5, 1.0),
    ];
    compare("toffoli", &probed, &expand(&rows, &[(0, 1), (4, 5), (2, 3)], &coeffs, 0.5))
}

/// Fredkin target stage: four splitters, sixteen path patterns, fifteen
/// classes with the two class-0 patterns balanced.
pub fn fredkin_target_stage() -> TermSetCheck {
    let gate = LogicalGate::new(GateKind::Fredkin).unwrap();
    let coeffs = kron(&[BETA, DELTA, EPSILON]);
    let probes = GateProbes::uniform(GateKind::Fredkin, 70.0, 0.35, 0.0).unwrap();
    let probed = gate.state_at_stage(&gate.encode(&coeffs).unwrap(), &probes, 0, &[]).unwrap();
    let all = [FREE, FREE, FREE];
    let patterns: [([&'static str; 4], i32); 16] = [
        (["T1", "T4", "T5", "T8"], 0),
        (["T2", "T3", "T6", "T7"], 0),
        (["T2", "T4", "T5", "T8"], 1),
        (["T1", "T3", "T6", "T7"], -1),
        (["T1", "T3", "T5", "T8"], 2),
        (["T2", "T4", "T6", "T7"], -2),
        (["T2", "T3", "T5", "T8"], 3),
        (["T1", "T4", "T6", "T7"], -3),
        (["T1", "T4", "T6", "T8"], 4),
        (["T2", "T3", "T5", "T7"], -4),
        (["T2", "T4", "T6", "T8"], 5),
        (["T1", "T3", "T5", "T7"], -5),
        (["T1", "T3", "T6", "T8"], 6),
        (["T2", "T4", "T5", "T7"], -6),
        (["T2", "T3", "T6", "T8"], 7),
        (["T1", "T4", "T5", "T7"], -7),
    ];
    let rows: Vec<Row> = patterns
        .iter()
        .map(|(p, k)| row(&all, &["C2", "C1", p[0], p[1], p[2], p[3]], *k, 1.0))
        .collect();
    compare("fredkin-targets", &probed, &expand(&rows, &[(0, 1), (2, 3), (4, 5)], &coeffs, 0.25))
}

/// Fredkin target stage read out at class 0 on its peak: the two balanced
/// patterns survive with equal weight.
pub fn fredkin_target_class_zero() -> TermSetCheck {
    let gate = LogicalGate::new(GateKind::Fredkin).unwrap();
    let coeffs = kron(&[BETA, DELTA, EPSILON]);
    let probes = GateProbes::uniform(GateKind::Fredkin, 70.0, 0.35, 0.0).unwrap();
    let probed = gate.state_at_stage(&gate.encode(&coeffs).unwrap(), &probes, 0, &[]).unwrap();
    let x = probes.stages()[0].class_mean(0);
    let (collapsed, _) = measure_probe(&probed, MeasureMode::Projected { class: 0, x }).unwrap();
    let all = [FREE, FREE, FREE];
    let rows = [
        row(&all, &["C2", "C1", "T1", "T4", "T5", "T8"], 0, 1.0),
        row(&all, &["C2", "C1", "T2", "T3", "T6", "T7"], 0, 1.0),
    ];
    compare(
        "fredkin-targets-class-0",
        &collapsed,
        &expand(&rows, &[(0, 1), (2, 3), (4, 5)], &coeffs, std::f64::consts::FRAC_1_SQRT_2),
    )
}

/// Fredkin control stage after a class-0 target readout: the control routes
/// onto C1 and picks one of the two patterns for class 0, the other for ±2.
pub fn fredkin_control_stage() -> TermSetCheck {
    let gate = LogicalGate::new(GateKind::Fredkin).unwrap();
    let coeffs = kron(&[BETA, DELTA, EPSILON]);
    let probes = GateProbes::uniform(GateKind::Fredkin, 70.0, 0.35, 0.0).unwrap();
    let probed = gate.state_at_stage(&gate.encode(&coeffs).unwrap(), &probes, 1, &[0]).unwrap();
    let rows = [
        row(&[CTRL0, FREE, FREE], &["C2", "C1", "T1", "T4", "T5", "T8"], 0, 1.0),
        row(&[CTRL1, FREE, FREE], &["C1", "C1", "T2", "T3", "T6", "T7"], 0, 1.0),
        row(&[CTRL0, FREE, FREE], &["C2", "C1", "T2", "T3", "T6", "T7"], 2, 1.0),
        row(&[CTRL1, FREE, FREE], &["C1", "C1", "T1", "T4", "T5", "T8"], -2, 1.0),
    ];
    compare(
        "fredkin-control",
        &probed,
        &expand(&rows, &[(0, 1), (2, 3), (4, 5)], &coeffs, std::f64::consts::FRAC_1_SQRT_2),
    )
}

pub fn all_checks() -> Vec<TermSetCheck> {
    vec![
        coupler_probed(),
        cnot_probed(),
        toffoli_second_stage(),
        fredkin_target_stage(),
        fredkin_target_class_zero(),
        fredkin_control_stage(),
    ]
}
