use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::dfs_gates::circuit::{BranchOutcome, Circuit, FeedForwardOp, MeasurementStage, SampledRun};
use crate::dfs_gates::coupler::{CouplerMarker, PathCoupler};
use crate::error::{DfsError, Result};
use crate::kerr_homodyne::{GateKind, KerrCoupling, ProbeDescriptor};
use crate::photonic_state::{BsVariant, Element, LogicalQubit, PathId, PhotonicState, NORM_TOLERANCE};

const PHOTONS: [&str; 6] = ["A", "B", "C", "D", "E", "F"];

/// Probe parameters for each measurement of a gate, in circuit order.
#[derive(Clone, Debug, PartialEq)]
pub struct GateProbes {
    kind: GateKind,
    stages: Vec<ProbeDescriptor>,
}

impl GateProbes {
    pub fn new(kind: GateKind, stages: Vec<ProbeDescriptor>) -> Result<Self> {
        if stages.len() != kind.measurement_count() as usize {
            return Err(DfsError::Dimension(format!(
                "{kind} needs {} probes, got {}",
                kind.measurement_count(),
                stages.len()
            )));
        }
        Ok(GateProbes { kind, stages })
    }

    /// The same probe for every measurement.
    pub fn uniform(kind: GateKind, alpha: f64, theta: f64, gamma_t: f64) -> Result<Self> {
        let p = ProbeDescriptor::new(alpha, theta, gamma_t)?;
        Self::new(kind, vec![p; kind.measurement_count() as usize])
    }

    /// CNOT: controlled stage `alpha2`, closing coupler `alpha1`.
    pub fn cnot(alpha2: f64, alpha1: f64, theta: f64, gamma_t: f64) -> Result<Self> {
        let p = |a| ProbeDescriptor::new(a, theta, gamma_t);
        Self::new(GateKind::Cnot, vec![p(alpha2)?, p(alpha1)?])
    }

    /// Toffoli: first stage `alpha3`, second stage `alpha4`, three couplers `alpha1`.
    pub fn toffoli(alpha3: f64, alpha4: f64, alpha1: f64, theta: f64, gamma_t: f64) -> Result<Self> {
        let p = |a| ProbeDescriptor::new(a, theta, gamma_t);
        Self::new(GateKind::Toffoli, vec![p(alpha3)?, p(alpha4)?, p(alpha1)?, p(alpha1)?, p(alpha1)?])
    }

    /// Fredkin: target stage `alpha5`, control stage `alpha6`, two couplers `alpha1`.
    pub fn fredkin(alpha5: f64, alpha6: f64, alpha1: f64, theta: f64, gamma_t: f64) -> Result<Self> {
        let p = |a| ProbeDescriptor::new(a, theta, gamma_t);
        Self::new(GateKind::Fredkin, vec![p(alpha5)?, p(alpha6)?, p(alpha1)?, p(alpha1)?])
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn stages(&self) -> &[ProbeDescriptor] {
        &self.stages
    }
}

/// A logical gate: photon layout, logical qubits and its optical circuit.
#[derive(Clone, Debug)]
pub struct LogicalGate {
    kind: GateKind,
    photons: Vec<String>,
    qubits: Vec<LogicalQubit>,
    canonical_paths: Vec<PathId>,
    circuit: Circuit,
}

fn pbs(photon: &str, a: &str, b: &str) -> Element {
    Element::Pbs { photons: vec![photon.into()], port_a: a.into(), port_b: b.into() }
}

fn bs(photon: &str, up: &str, down: &str, variant: BsVariant) -> Element {
    Element::BeamSplitter { photon: photon.into(), up: up.into(), down: down.into(), variant }
}

fn flip(photon: &str, path: &str) -> Element {
    Element::BitFlip { photon: photon.into(), path: path.into() }
}

fn relabel(photon: &str, from: &str, to: &str) -> Element {
    Element::PathSwap { photon: photon.into(), a: from.into(), b: to.into() }
}

fn table(rows: Vec<(u32, Vec<FeedForwardOp>)>) -> BTreeMap<u32, Vec<FeedForwardOp>> {
    rows.into_iter().collect()
}

fn swap(photon: &str, a: &str, b: &str) -> FeedForwardOp {
    FeedForwardOp::path_swap(photon, a, b)
}

fn phase(photon: &str, path: &str, k: u32) -> FeedForwardOp {
    FeedForwardOp::phase_mod(photon, path, k)
}

/// Marker A routed by its polarization onto C1 (`|1̄⟩`) or C2 (`|0̄⟩`), target
/// CD spread over T1..T4 and the controlled probe stage.
fn controlled_stage(c: &mut Circuit, label: &str) -> Result<()> {
    c.apply(pbs("A", "C1", "C2"))
        .apply(bs("C", "T1", "T2", BsVariant::Bs))
        .apply(bs("D", "T3", "T4", BsVariant::BsPrime));
    let coupling = KerrCoupling::from_triples(&[("A", "C1", -5), ("C", "T2", 3), ("D", "T3", 2)])?;
    let ff = table(vec![
        (0, vec![]),
        (2, vec![phase("A", "C1", 2), swap("D", "T3", "T4")]),
        (3, vec![phase("A", "C1", 3), swap("C", "T1", "T2")]),
        (5, vec![phase("A", "C1", 5), swap("C", "T1", "T2"), swap("D", "T3", "T4")]),
    ]);
    c.measure(MeasurementStage::new(label, coupling, ff)?);
    Ok(())
}

fn ab_coupler(label: &str, route: bool) -> PathCoupler {
    PathCoupler::standard(label, CouplerMarker::new("A", "C1", "C2"), ("C", "T1", "T2"), ("D", "T3", "T4"))
        .with_route_marker(route)
}

fn cnot_circuit() -> Result<Circuit> {
    let mut c = Circuit::new();
    controlled_stage(&mut c, "cnot")?;
    c.apply(flip("C", "T2")).apply(flip("D", "T3")).apply(pbs("A", "C1", "C2"));
    c.extend(ab_coupler("coupler", true).steps()?);
    Ok(c)
}

fn toffoli_circuit() -> Result<Circuit> {
    let mut c = Circuit::new();
    controlled_stage(&mut c, "first-control")?;
    c.apply(pbs("E", "C3", "C4"));
    for (photon, from, up, down) in
        [("C", "T1", "T11", "T12"), ("C", "T2", "T21", "T22"), ("D", "T4", "T41", "T42"), ("D", "T3", "T31", "T32")]
    {
        c.apply(relabel(photon, from, up)).apply(bs(photon, up, down, BsVariant::Bs));
    }
    let coupling = KerrCoupling::from_triples(&[
        ("E", "C3", -5),
        ("C", "T12", 3),
        ("C", "T22", 3),
        ("D", "T32", 2),
        ("D", "T42", 2),
    ])?;
    let swap_c = || vec![swap("C", "T11", "T12"), swap("C", "T21", "T22")];
    let swap_d = || vec![swap("D", "T31", "T32"), swap("D", "T41", "T42")];
    let ff = table(vec![
        (0, vec![]),
        (2, [vec![phase("E", "C3", 2)], swap_d()].concat()),
        (3, [vec![phase("E", "C3", 3)], swap_c()].concat()),
        (5, [vec![phase("E", "C3", 5)], swap_c(), swap_d()].concat()),
    ]);
    c.measure(MeasurementStage::new("second-control", coupling, ff)?);
    c.apply(flip("C", "T22")).apply(flip("D", "T32"));
    let marker = CouplerMarker::new("E", "C3", "C4");
    c.extend(
        PathCoupler::single_arm("merge-c", marker.clone(), "C", &[("T11", "T12"), ("T21", "T22")], 2)
            .with_route_marker(false)
            .steps()?,
    );
    c.extend(
        PathCoupler::single_arm("merge-d", marker, "D", &[("T41", "T42"), ("T31", "T32")], 2)
            .with_route_marker(false)
            .steps()?,
    );
    for (photon, from, to) in [("C", "T11", "T1"), ("C", "T21", "T2"), ("D", "T31", "T3"), ("D", "T41", "T4")] {
        c.apply(relabel(photon, from, to));
    }
    c.extend(ab_coupler("coupler", false).steps()?);
    c.apply(pbs("A", "C1", "C2")).apply(pbs("E", "C3", "C4"));
    Ok(c)
}

fn fredkin_circuit() -> Result<Circuit> {
    let mut c = Circuit::new();
    c.apply(bs("C", "T1", "T2", BsVariant::Bs))
        .apply(bs("D", "T3", "T4", BsVariant::BsPrime))
        .apply(bs("E", "T5", "T6", BsVariant::Bs))
        .apply(bs("F", "T7", "T8", BsVariant::BsPrime));
    let coupling = KerrCoupling::from_triples(&[("C", "T2", 1), ("D", "T3", 2), ("E", "T6", 4), ("F", "T7", -7)])?;
    let sc = || swap("C", "T1", "T2");
    let sd = || swap("D", "T3", "T4");
    let se = || swap("E", "T5", "T6");
    let ff = table(vec![
        (0, vec![]),
        (1, vec![phase("C", "T1", 1), sc()]),
        (2, vec![phase("D", "T4", 2), sd()]),
        (3, vec![phase("D", "T4", 3), sc(), sd()]),
        (4, vec![phase("E", "T5", 4), se()]),
        (5, vec![phase("E", "T5", 5), sc(), se()]),
        (6, vec![phase("E", "T5", 6), sd(), se()]),
        (7, vec![phase("E", "T5", 7), sc(), sd(), se()]),
    ]);
    c.measure(MeasurementStage::new("targets", coupling, ff)?);
    c.apply(pbs("A", "C1", "C2"));
    let coupling = KerrCoupling::from_triples(&[("A", "C1", -2), ("C", "T2", 2)])?;
    let ff = table(vec![
        (0, vec![]),
        (2, vec![phase("A", "C1", 2), sc(), sd(), se(), swap("F", "T7", "T8")]),
    ]);
    c.measure(MeasurementStage::new("control", coupling, ff)?);
    c.apply(Element::PolarizationSwap { first: "C".into(), second: "E".into(), on_paths: Some(("T2".into(), "T6".into())) })
        .apply(Element::PolarizationSwap {
            first: "D".into(),
            second: "F".into(),
            on_paths: Some(("T3".into(), "T7".into())),
        })
        .apply(pbs("A", "C1", "C2"));
    c.extend(ab_coupler("coupler-cd", true).steps()?);
    c.extend(
        PathCoupler::standard("coupler-ef", CouplerMarker::new("A", "C1", "C2"), ("E", "T5", "T6"), ("F", "T7", "T8"))
            .steps()?,
    );
    Ok(c)
}

impl LogicalGate {
    pub fn new(kind: GateKind) -> Result<Self> {
        let (photons, qubits, paths, circuit): (&[&str], Vec<(&str, &str)>, &[&str], Circuit) = match kind {
            GateKind::Cnot => (&PHOTONS[..4], vec![("A", "B"), ("C", "D")], &["C2", "C1", "T1", "T4"], cnot_circuit()?),
            GateKind::Toffoli => (
                &PHOTONS,
                vec![("A", "B"), ("E", "F"), ("C", "D")],
                &["C2", "C1", "T1", "T4", "C4", "C3"],
                toffoli_circuit()?,
            ),
            GateKind::Fredkin => (
                &PHOTONS,
                vec![("A", "B"), ("C", "D"), ("E", "F")],
                &["C2", "C1", "T1", "T4", "T5", "T8"],
                fredkin_circuit()?,
            ),
        };
        Ok(LogicalGate {
            kind,
            photons: photons.iter().map(|s| s.to_string()).collect(),
            qubits: qubits.into_iter().map(|(a, b)| LogicalQubit::new(a, b)).collect(),
            canonical_paths: paths.iter().map(|p| PathId::new(p)).collect(),
            circuit,
        })
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn photons(&self) -> &[String] {
        &self.photons
    }

    /// Logical qubits in basis-index order (first is the most significant bit).
    pub fn qubits(&self) -> &[LogicalQubit] {
        &self.qubits
    }

    pub fn canonical_paths(&self) -> &[PathId] {
        &self.canonical_paths
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn dimension(&self) -> usize {
        1 << self.qubits.len()
    }

    /// Logical coefficient vector → photonic state on the canonical paths.
    pub fn encode(&self, coeffs: &[Complex64]) -> Result<PhotonicState> {
        let paths: Vec<&str> = self.canonical_paths.iter().map(|p| p.as_str()).collect();
        Ok(PhotonicState::from_logical(&self.photons, &self.qubits, coeffs, &paths)?.with_paths(self.circuit.paths()))
    }

    /// Photonic state → logical coefficients; every term must sit on the
    /// canonical paths inside the logical subspace.
    pub fn decode(&self, state: &PhotonicState) -> Result<Vec<Complex64>> {
        if state.photons() != self.photons.as_slice() {
            return Err(DfsError::RegistryMismatch(format!("{:?} vs {:?}", state.photons(), self.photons)));
        }
        if state.probe().is_some() {
            return Err(DfsError::ProbeActive);
        }
        let pairs = self
            .qubits
            .iter()
            .map(|q| Ok((state.photon_index(&q.first)?, state.photon_index(&q.second)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.dimension()];
        for (t, a) in state.terms() {
            if t.paths() != self.canonical_paths.as_slice() {
                return Err(DfsError::OutsideDfs(format!("term {t} is off the canonical paths")));
            }
            let mut index = 0;
            for &(p, q) in &pairs {
                let bit = LogicalQubit::decode(t.pol(p), t.pol(q))
                    .ok_or_else(|| DfsError::OutsideDfs(format!("term {t} is not anti-correlated")))?;
                index = index << 1 | bit as usize;
            }
            coeffs[index] += a;
        }
        Ok(coeffs)
    }

    pub fn validate_input(&self, state: &PhotonicState) -> Result<Vec<Complex64>> {
        let coeffs = self.decode(state)?;
        let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(DfsError::NotNormalized(norm));
        }
        Ok(coeffs)
    }

    pub fn ideal_output(&self, coeffs: &[Complex64]) -> Result<PhotonicState> {
        let u = ideal_logical_unitary(self.kind);
        if coeffs.len() != u.ncols() {
            return Err(DfsError::Dimension(format!("{} coefficients for a {}-dim gate", coeffs.len(), u.ncols())));
        }
        let out = &u * DVector::from_column_slice(coeffs);
        self.encode(out.as_slice())
    }

    pub fn enumerate_branches(&self, input: &PhotonicState, probes: &GateProbes) -> Result<Vec<BranchOutcome>> {
        self.check_probes(probes)?;
        self.validate_input(input)?;
        self.circuit.run_enumerated(input, probes.stages())
    }

    pub fn run_sampled(&self, input: &PhotonicState, probes: &GateProbes, rng: &mut dyn rand::RngCore) -> Result<SampledRun> {
        self.check_probes(probes)?;
        self.validate_input(input)?;
        self.circuit.run_sampled(input, probes.stages(), rng)
    }

    pub fn run_projected(
        &self,
        input: &PhotonicState,
        probes: &GateProbes,
        readouts: &[(u32, Option<f64>)],
    ) -> Result<BranchOutcome> {
        self.check_probes(probes)?;
        self.validate_input(input)?;
        self.circuit.run_projected(input, probes.stages(), readouts)
    }

    /// State with the probe of measurement `stage` attached, earlier
    /// readouts forced to the given classes.
    pub fn state_at_stage(
        &self,
        input: &PhotonicState,
        probes: &GateProbes,
        stage: usize,
        earlier: &[u32],
    ) -> Result<PhotonicState> {
        self.check_probes(probes)?;
        self.circuit.state_at_stage(input, probes.stages(), stage, earlier)
    }

    fn check_probes(&self, probes: &GateProbes) -> Result<()> {
        if probes.kind() != self.kind {
            return Err(DfsError::Invalid(format!("{} probes given to {}", probes.kind(), self.kind)));
        }
        Ok(())
    }
}

/// CNOT (4×4), Toffoli or Fredkin (8×8) over the logical basis, first qubit
/// most significant.
pub fn ideal_logical_unitary(kind: GateKind) -> DMatrix<Complex64> {
    let n = 1 << kind.qubit_count();
    let perm = |i: usize| -> usize {
        match kind {
            GateKind::Cnot if i >= 2 => i ^ 1,
            GateKind::Toffoli if i >= 6 => i ^ 1,
            GateKind::Fredkin if i == 5 || i == 6 => i ^ 3,
            _ => i,
        }
    };
    DMatrix::from_fn(n, n, |r, c| if perm(c) == r { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
}

/// Normalized vector of i.i.d. complex-normal coefficients.
pub fn random_logical_state<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..1 << n_qubits)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for c in &mut v {
        *c /= norm;
    }
    v
}

/// Unit vector `e_index` of the logical basis.
pub fn logical_basis_state(dimension: usize, index: usize) -> Vec<Complex64> {
    (0..dimension).map(|i| Complex64::new(if i == index { 1.0 } else { 0.0 }, 0.0)).collect()
}
