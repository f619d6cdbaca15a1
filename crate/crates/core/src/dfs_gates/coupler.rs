//! The path coupler: merges the two path patterns of a marker-correlated
//! superposition back onto a single pattern without touching polarization.

use std::collections::BTreeMap;

use crate::dfs_gates::circuit::{BranchOutcome, Circuit, FeedForwardOp, MeasurementStage, Step};
use crate::error::{DfsError, Result};
use crate::kerr_homodyne::{attach_probe, measure_probe, CouplingEntry, KerrCoupling, MeasureMode, ProbeDescriptor};
use crate::photonic_state::{BsVariant, Element, PathId, PhotonicState};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Port {
    Up,
    Down,
}

impl Port {
    fn is_down(self) -> bool {
        self == Port::Down
    }
}

/// Photon whose path tells the two branches apart.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplerMarker {
    pub photon: String,
    pub branch_path: PathId,
    pub reference_path: PathId,
}

impl CouplerMarker {
    pub fn new(photon: &str, branch_path: &str, reference_path: &str) -> Self {
        CouplerMarker { photon: photon.into(), branch_path: branch_path.into(), reference_path: reference_path.into() }
    }
}

/// Beam splitter over one path pair; `keep` is the port the photon must
/// leave through, the other port carries the Kerr coupling.
#[derive(Clone, Debug, PartialEq)]
pub struct ArmPair {
    pub up: PathId,
    pub down: PathId,
    pub variant: BsVariant,
    pub keep: Port,
}

impl ArmPair {
    pub fn new(up: &str, down: &str, variant: BsVariant, keep: Port) -> Self {
        ArmPair { up: up.into(), down: down.into(), variant, keep }
    }

    pub fn keep_path(&self) -> &PathId {
        match self.keep {
            Port::Up => &self.up,
            Port::Down => &self.down,
        }
    }

    pub fn coupled_path(&self) -> &PathId {
        match self.keep {
            Port::Up => &self.down,
            Port::Down => &self.up,
        }
    }

    /// Sign of `M[out][branch_in] / M[out][keep_in]` for the given output.
    fn relative_sign(&self, out_down: bool) -> f64 {
        let keep_in = self.keep.is_down();
        let m = |input: bool| self.variant.amplitude(input, out_down);
        (m(!keep_in) / m(keep_in)).signum()
    }
}

/// One photon of the coupled pattern; a term holds it on exactly one pair.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplerArm {
    pub photon: String,
    pub pairs: Vec<ArmPair>,
    pub weight: i32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathCoupler {
    pub label: String,
    pub marker: CouplerMarker,
    pub arms: Vec<CouplerArm>,
    /// Open and close with a PBS on the marker's two paths.
    pub route_marker: bool,
}

impl PathCoupler {
    /// Two-photon coupler: `c` behind a BS with the photon kept up,
    /// `d` behind a BS′ with the photon kept down, weights 2 and 3.
    pub fn standard(label: &str, marker: CouplerMarker, c: (&str, &str, &str), d: (&str, &str, &str)) -> Self {
        PathCoupler {
            label: label.into(),
            marker,
            arms: vec![
                CouplerArm {
                    photon: c.0.into(),
                    pairs: vec![ArmPair::new(c.1, c.2, BsVariant::Bs, Port::Up)],
                    weight: 2,
                },
                CouplerArm {
                    photon: d.0.into(),
                    pairs: vec![ArmPair::new(d.1, d.2, BsVariant::BsPrime, Port::Down)],
                    weight: 3,
                },
            ],
            route_marker: true,
        }
    }

    /// One-photon coupler over several `(up, down)` pairs, BS with the
    /// photon kept up.
    pub fn single_arm(label: &str, marker: CouplerMarker, photon: &str, pairs: &[(&str, &str)], weight: i32) -> Self {
        PathCoupler {
            label: label.into(),
            marker,
            arms: vec![CouplerArm {
                photon: photon.into(),
                pairs: pairs.iter().map(|&(u, d)| ArmPair::new(u, d, BsVariant::Bs, Port::Up)).collect(),
                weight,
            }],
            route_marker: true,
        }
    }

    pub fn with_route_marker(mut self, route: bool) -> Self {
        self.route_marker = route;
        self
    }

    pub fn coupling(&self) -> Result<KerrCoupling> {
        KerrCoupling::new(
            self.arms
                .iter()
                .flat_map(|a| {
                    a.pairs.iter().map(|p| CouplingEntry {
                        photon: a.photon.clone(),
                        path: p.coupled_path().clone(),
                        weight: a.weight,
                    })
                })
                .collect(),
        )
    }

    /// Derives the correction for every class from the beam-splitter
    /// matrices: swap each arm found on its coupled port, and flip the marker
    /// branch's sign when the two branches arrive with opposite signs.
    pub fn feed_forward_table(&self) -> Result<BTreeMap<u32, Vec<FeedForwardOp>>> {
        if self.arms.iter().any(|a| a.weight <= 0 || a.pairs.is_empty()) {
            return Err(DfsError::Invalid(format!("{}: arm weights must be positive", self.label)));
        }
        let mut signs = Vec::with_capacity(self.arms.len());
        for arm in &self.arms {
            let s: Vec<(f64, f64)> = arm.pairs.iter().map(|p| (p.relative_sign(p.keep.is_down()), p.relative_sign(!p.keep.is_down()))).collect();
            if s.windows(2).any(|w| w[0] != w[1]) {
                return Err(DfsError::Invalid(format!("{}: pairs of arm {} disagree in sign", self.label, arm.photon)));
            }
            signs.push(s[0]);
        }
        let mut table = BTreeMap::new();
        for subset in 0u32..(1 << self.arms.len()) {
            let coupled = |i: usize| subset >> i & 1 == 1;
            let class: i32 = (0..self.arms.len()).filter(|&i| coupled(i)).map(|i| self.arms[i].weight).sum();
            let sign: f64 =
                (0..self.arms.len()).map(|i| if coupled(i) { signs[i].1 } else { signs[i].0 }).product();
            let mut ops = Vec::new();
            if sign < 0.0 {
                ops.push(FeedForwardOp::sigma_z(&self.marker.photon, self.marker.branch_path.as_str()));
            }
            for (i, arm) in self.arms.iter().enumerate() {
                if coupled(i) {
                    for p in &arm.pairs {
                        ops.push(FeedForwardOp::path_swap(&arm.photon, p.up.as_str(), p.down.as_str()));
                    }
                }
            }
            if table.insert(class as u32, ops).is_some() {
                return Err(DfsError::Invalid(format!("{}: class {class} reached by two arm patterns", self.label)));
            }
        }
        Ok(table)
    }

    pub fn stage(&self) -> Result<MeasurementStage> {
        MeasurementStage::new(&self.label, self.coupling()?, self.feed_forward_table()?)
    }

    fn marker_pbs(&self) -> Element {
        Element::Pbs {
            photons: vec![self.marker.photon.clone()],
            port_a: self.marker.branch_path.clone(),
            port_b: self.marker.reference_path.clone(),
        }
    }

    fn splitters(&self) -> Vec<Element> {
        self.arms
            .iter()
            .flat_map(|a| {
                a.pairs.iter().map(|p| Element::BeamSplitter {
                    photon: a.photon.clone(),
                    up: p.up.clone(),
                    down: p.down.clone(),
                    variant: p.variant,
                })
            })
            .collect()
    }

    pub fn steps(&self) -> Result<Vec<Step>> {
        let mut steps = Vec::new();
        if self.route_marker {
            steps.push(Step::Apply(self.marker_pbs()));
        }
        steps.extend(self.splitters().into_iter().map(Step::Apply));
        steps.push(Step::Measure(self.stage()?));
        if self.route_marker {
            steps.push(Step::Apply(self.marker_pbs()));
        }
        Ok(steps)
    }

    pub fn circuit(&self) -> Result<Circuit> {
        let mut c = Circuit::new();
        c.extend(self.steps()?);
        Ok(c)
    }

    /// Checks the two-branch form the coupler expects once the marker is
    /// routed: marker on the reference path with every arm on a keep path, or
    /// marker on the branch path with every arm on a coupled path.
    pub fn validate_routed(&self, state: &PhotonicState) -> Result<()> {
        let marker = state.photon_index(&self.marker.photon)?;
        let arms = self
            .arms
            .iter()
            .map(|a| Ok((state.photon_index(&a.photon)?, a)))
            .collect::<Result<Vec<_>>>()?;
        for (t, _) in state.terms() {
            let on_branch = if *t.path(marker) == self.marker.reference_path {
                false
            } else if *t.path(marker) == self.marker.branch_path {
                true
            } else {
                return Err(DfsError::MalformedBranches(format!("{}: marker off both paths in {t}", self.label)));
            };
            for (i, arm) in &arms {
                let path = t.path(*i);
                let ok = arm.pairs.iter().any(|p| {
                    if on_branch {
                        p.coupled_path() == path
                    } else {
                        p.keep_path() == path
                    }
                });
                if !ok {
                    return Err(DfsError::MalformedBranches(format!(
                        "{}: photon {} on {path} does not match the marker branch in {t}",
                        self.label, arm.photon
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Runs one coupler on `state` with a single readout.
pub fn path_coupler(
    state: &PhotonicState,
    coupler: &PathCoupler,
    probe: ProbeDescriptor,
    mode: MeasureMode<'_>,
) -> Result<(PhotonicState, BranchOutcome)> {
    if state.probe().is_some() {
        return Err(DfsError::ProbeActive);
    }
    let stage = coupler.stage()?;
    let mut s = state.clone().with_paths(Circuit::from_steps(coupler.steps()?).paths());
    if coupler.route_marker {
        s = s.apply(&coupler.marker_pbs())?;
    }
    coupler.validate_routed(&s)?;
    s = s.apply_all(&coupler.splitters())?;
    let probed = attach_probe(&s, probe, stage.coupling.clone())?;
    let (collapsed, rec) = measure_probe(&probed, mode)?;
    let mut out = collapsed;
    for op in stage.feed_forward.get(&rec.chosen_class).ok_or(DfsError::EmptyClass(rec.chosen_class))? {
        if let Some(e) = op.element(rec.x, &probe) {
            out = out.apply(&e)?;
        }
    }
    if coupler.route_marker {
        out = out.apply(&coupler.marker_pbs())?;
    }
    let outcome = BranchOutcome {
        class_sequence: vec![rec.chosen_class],
        probability: rec.class_probability,
        output_state: out.clone(),
        records: vec![rec],
    };
    Ok((out, outcome))
}
