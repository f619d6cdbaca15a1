use std::collections::{BTreeMap, BTreeSet};

use rand::RngCore;
use serde::Serialize;

use crate::error::{DfsError, Result};
use crate::kerr_homodyne::{
    attach_probe, class_weights, measure_probe, phase_mod_value, phase_unreduced, HomodyneRecord, KerrCoupling,
    MeasureMode, ProbeDescriptor,
};
use crate::photonic_state::{Element, PathId, PhotonicState};

/// Classes whose total weight is below this are treated as unreachable.
pub const BRANCH_WEIGHT_FLOOR: f64 = 1e-24;

/// Classically conditioned correction applied after a probe readout.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum FeedForwardOp {
    Identity { photon: String, paths: (String, String) },
    PathSwap { photon: String, paths: (String, String) },
    SigmaZ { photon: String, path: String },
    /// Cancels the `±k` relative phase: terms where `photon` sits on `path`
    /// (the `−k` sub-branch) get `e^{i[φ(x,k) − φ(x,−k)]}`.
    PhaseMod { photon: String, path: String, k: u32 },
}

impl FeedForwardOp {
    pub fn path_swap(photon: &str, a: &str, b: &str) -> Self {
        FeedForwardOp::PathSwap { photon: photon.into(), paths: (a.into(), b.into()) }
    }

    pub fn sigma_z(photon: &str, path: &str) -> Self {
        FeedForwardOp::SigmaZ { photon: photon.into(), path: path.into() }
    }

    pub fn phase_mod(photon: &str, path: &str, k: u32) -> Self {
        FeedForwardOp::PhaseMod { photon: photon.into(), path: path.into(), k }
    }

    /// The optical element realising this correction for a readout at `x`.
    pub fn element(&self, x: f64, probe: &ProbeDescriptor) -> Option<Element> {
        match self {
            FeedForwardOp::Identity { .. } => None,
            FeedForwardOp::PathSwap { photon, paths } => Some(Element::PathSwap {
                photon: photon.clone(),
                a: PathId::new(&paths.0),
                b: PathId::new(&paths.1),
            }),
            FeedForwardOp::SigmaZ { photon, path } => {
                Some(Element::PhaseFlip { photon: photon.clone(), path: PathId::new(path) })
            }
            FeedForwardOp::PhaseMod { photon, path, k } => {
                let k = *k as i32;
                let radians = phase_unreduced(x, k, probe) - phase_unreduced(x, -k, probe);
                debug_assert!({
                    let twice = (2.0 * phase_mod_value(x, k, probe)).rem_euclid(std::f64::consts::TAU);
                    let got = radians.rem_euclid(std::f64::consts::TAU);
                    let diff = (got - twice).abs();
                    diff.min(std::f64::consts::TAU - diff) < 1e-6
                });
                Some(Element::Phase { photon: photon.clone(), path: PathId::new(path), radians })
            }
        }
    }

    pub(crate) fn paths(&self) -> Vec<PathId> {
        match self {
            FeedForwardOp::Identity { paths, .. } | FeedForwardOp::PathSwap { paths, .. } => {
                vec![PathId::new(&paths.0), PathId::new(&paths.1)]
            }
            FeedForwardOp::SigmaZ { path, .. } | FeedForwardOp::PhaseMod { path, .. } => vec![PathId::new(path)],
        }
    }
}

/// One probe interaction: couple, read out, correct.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementStage {
    pub label: String,
    pub coupling: KerrCoupling,
    pub feed_forward: BTreeMap<u32, Vec<FeedForwardOp>>,
}

impl MeasurementStage {
    pub fn new(label: &str, coupling: KerrCoupling, feed_forward: BTreeMap<u32, Vec<FeedForwardOp>>) -> Result<Self> {
        let missing: Vec<u32> =
            coupling.reachable_classes().into_iter().filter(|c| !feed_forward.contains_key(c)).collect();
        if !missing.is_empty() {
            return Err(DfsError::Invalid(format!("stage {label}: no feed-forward for classes {missing:?}")));
        }
        Ok(MeasurementStage { label: label.to_string(), coupling, feed_forward })
    }

    pub fn classes(&self) -> BTreeSet<u32> {
        self.coupling.reachable_classes()
    }

    fn correct(&self, state: &PhotonicState, class: u32, x: f64, probe: &ProbeDescriptor) -> Result<PhotonicState> {
        let ops = self.feed_forward.get(&class).ok_or(DfsError::EmptyClass(class))?;
        let mut s = state.clone();
        for op in ops {
            if let Some(e) = op.element(x, probe) {
                s = s.apply(&e)?;
            }
        }
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    Apply(Element),
    Measure(MeasurementStage),
}

/// A fixed sequence of optical elements and probe measurements.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Circuit {
    steps: Vec<Step>,
}

#[derive(Clone, Debug)]
pub struct BranchOutcome {
    pub class_sequence: Vec<u32>,
    pub probability: f64,
    pub output_state: PhotonicState,
    pub records: Vec<HomodyneRecord>,
}

/// Result of a single sampled run.
#[derive(Clone, Debug)]
pub struct SampledRun {
    pub output_state: PhotonicState,
    pub records: Vec<HomodyneRecord>,
}

impl SampledRun {
    /// True when every readout was assigned to the class it was drawn from.
    pub fn success(&self) -> bool {
        self.records.iter().all(|r| r.true_class == Some(r.chosen_class))
    }

    pub fn class_sequence(&self) -> Vec<u32> {
        self.records.iter().map(|r| r.chosen_class).collect()
    }
}

enum Walk {
    Finished(PhotonicState, Vec<HomodyneRecord>),
    Stopped(PhotonicState),
}

type Readout<'a> = dyn FnMut(usize, &PhotonicState) -> Result<(PhotonicState, HomodyneRecord)> + 'a;

impl Circuit {
    pub fn new() -> Self {
        Circuit::default()
    }

    pub fn from_steps(steps: Vec<Step>) -> Self {
        Circuit { steps }
    }

    pub fn push(&mut self, step: Step) -> &mut Self {
        self.steps.push(step);
        self
    }

    pub fn apply(&mut self, element: Element) -> &mut Self {
        self.push(Step::Apply(element))
    }

    pub fn measure(&mut self, stage: MeasurementStage) -> &mut Self {
        self.push(Step::Measure(stage))
    }

    pub fn extend(&mut self, steps: impl IntoIterator<Item = Step>) -> &mut Self {
        self.steps.extend(steps);
        self
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn stages(&self) -> impl Iterator<Item = &MeasurementStage> {
        self.steps.iter().filter_map(|s| match s {
            Step::Measure(m) => Some(m),
            Step::Apply(_) => None,
        })
    }

    pub fn measurement_count(&self) -> usize {
        self.stages().count()
    }

    /// Every path label referenced by an element, coupling or correction.
    pub fn paths(&self) -> BTreeSet<PathId> {
        let mut out = BTreeSet::new();
        for step in &self.steps {
            match step {
                Step::Apply(e) => out.extend(element_paths(e)),
                Step::Measure(m) => {
                    out.extend(m.coupling.entries().iter().map(|e| e.path.clone()));
                    for op in m.feed_forward.values().flatten() {
                        out.extend(op.paths());
                    }
                }
            }
        }
        out
    }

    fn check_probes(&self, probes: &[ProbeDescriptor]) -> Result<()> {
        if probes.len() != self.measurement_count() {
            return Err(DfsError::Dimension(format!(
                "{} probes for {} measurements",
                probes.len(),
                self.measurement_count()
            )));
        }
        Ok(())
    }

    fn walk(
        &self,
        input: &PhotonicState,
        probes: &[ProbeDescriptor],
        stop_at: Option<usize>,
        readout: &mut Readout<'_>,
    ) -> Result<Walk> {
        self.check_probes(probes)?;
        let mut state = input.clone().with_paths(self.paths());
        let mut records = Vec::new();
        let mut stage = 0;
        for step in &self.steps {
            match step {
                Step::Apply(e) => state = state.apply(e)?,
                Step::Measure(m) => {
                    let probed = attach_probe(&state, probes[stage], m.coupling.clone())?;
                    if stop_at == Some(stage) {
                        return Ok(Walk::Stopped(probed));
                    }
                    let (collapsed, rec) = readout(stage, &probed)?;
                    state = m.correct(&collapsed, rec.chosen_class, rec.x, &probes[stage])?;
                    records.push(rec);
                    stage += 1;
                }
            }
        }
        Ok(Walk::Finished(state, records))
    }

    /// Every branch sequence with non-zero probability, each read out at its
    /// class mean.
    pub fn run_enumerated(&self, input: &PhotonicState, probes: &[ProbeDescriptor]) -> Result<Vec<BranchOutcome>> {
        self.check_probes(probes)?;
        let state = input.clone().with_paths(self.paths());
        let mut out = Vec::new();
        self.branch(0, state, probes, 0, Vec::new(), Vec::new(), 1.0, &mut out)?;
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn branch(
        &self,
        from: usize,
        mut state: PhotonicState,
        probes: &[ProbeDescriptor],
        stage: usize,
        classes: Vec<u32>,
        records: Vec<HomodyneRecord>,
        probability: f64,
        out: &mut Vec<BranchOutcome>,
    ) -> Result<()> {
        for (i, step) in self.steps.iter().enumerate().skip(from) {
            match step {
                Step::Apply(e) => state = state.apply(e)?,
                Step::Measure(m) => {
                    let probed = attach_probe(&state, probes[stage], m.coupling.clone())?;
                    for (class, w) in class_weights(&probed)? {
                        if w < BRANCH_WEIGHT_FLOOR {
                            continue;
                        }
                        let (collapsed, rec) = measure_probe(&probed, MeasureMode::Enumerated(class))?;
                        let corrected = m.correct(&collapsed, class, rec.x, &probes[stage])?;
                        let mut cs = classes.clone();
                        cs.push(class);
                        let mut rs = records.clone();
                        rs.push(rec);
                        self.branch(i + 1, corrected, probes, stage + 1, cs, rs, probability * w, out)?;
                    }
                    return Ok(());
                }
            }
        }
        out.push(BranchOutcome { class_sequence: classes, probability, output_state: state, records });
        Ok(())
    }

    /// One run with every readout drawn from the physical outcome distribution.
    pub fn run_sampled(
        &self,
        input: &PhotonicState,
        probes: &[ProbeDescriptor],
        rng: &mut dyn RngCore,
    ) -> Result<SampledRun> {
        let mut readout = |_: usize, s: &PhotonicState| measure_probe(s, MeasureMode::Sampled(&mut *rng));
        match self.walk(input, probes, None, &mut readout)? {
            Walk::Finished(output_state, records) => Ok(SampledRun { output_state, records }),
            Walk::Stopped(_) => unreachable!("walk without a stop point always finishes"),
        }
    }

    /// One branch with each readout forced to `(class, x)`; `x = None` reads
    /// at the class mean.
    pub fn run_projected(
        &self,
        input: &PhotonicState,
        probes: &[ProbeDescriptor],
        readouts: &[(u32, Option<f64>)],
    ) -> Result<BranchOutcome> {
        if readouts.len() != self.measurement_count() {
            return Err(DfsError::Dimension(format!(
                "{} readouts for {} measurements",
                readouts.len(),
                self.measurement_count()
            )));
        }
        let mut probability = 1.0;
        let mut readout = |stage: usize, s: &PhotonicState| {
            let (class, x) = readouts[stage];
            let x = x.unwrap_or_else(|| probes[stage].class_mean(class as i32));
            let r = measure_probe(s, MeasureMode::Projected { class, x })?;
            probability *= r.1.class_probability;
            Ok(r)
        };
        match self.walk(input, probes, None, &mut readout)? {
            Walk::Finished(output_state, records) => Ok(BranchOutcome {
                class_sequence: records.iter().map(|r| r.chosen_class).collect(),
                probability,
                output_state,
                records,
            }),
            Walk::Stopped(_) => unreachable!("walk without a stop point always finishes"),
        }
    }

    /// The state right after the probe of measurement `stage` is coupled,
    /// earlier readouts forced to `earlier` classes at their means.
    pub fn state_at_stage(
        &self,
        input: &PhotonicState,
        probes: &[ProbeDescriptor],
        stage: usize,
        earlier: &[u32],
    ) -> Result<PhotonicState> {
        if earlier.len() != stage || stage >= self.measurement_count() {
            return Err(DfsError::Dimension(format!("stage {stage} with {} earlier classes", earlier.len())));
        }
        let mut readout =
            |i: usize, s: &PhotonicState| measure_probe(s, MeasureMode::Enumerated(earlier[i]));
        match self.walk(input, probes, Some(stage), &mut readout)? {
            Walk::Stopped(s) => Ok(s),
            Walk::Finished(..) => unreachable!("stage index checked above"),
        }
    }
}

fn element_paths(e: &Element) -> Vec<PathId> {
    match e {
        Element::Pbs { port_a, port_b, .. } => vec![port_a.clone(), port_b.clone()],
        Element::BeamSplitter { up, down, .. } => vec![up.clone(), down.clone()],
        Element::BitFlip { path, .. } | Element::PhaseFlip { path, .. } | Element::Phase { path, .. } => {
            vec![path.clone()]
        }
        Element::PathSwap { a, b, .. } => vec![a.clone(), b.clone()],
        Element::PolarizationSwap { on_paths, .. } => {
            on_paths.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect()
        }
        Element::CollectiveDephasing { .. } => Vec::new(),
    }
}
