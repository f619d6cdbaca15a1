//! Cross-Kerr probe tagging and the Gaussian X-quadrature measurement model.

mod erfc;
mod measure;

use std::collections::BTreeSet;
use std::f64::consts::{PI, SQRT_2, TAU};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

pub use self::erfc::{erf, erfc};
pub use self::measure::{class_weights, measure_probe, HomodyneRecord, MeasureMode};
use crate::error::{DfsError, Result};
use crate::photonic_state::{BasisTerm, PathId, PhotonicState, Registry};

/// Coherent probe `|α⟩` with per-photon Kerr phase `θ` and dissipation `γt`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProbeDescriptor {
    alpha: f64,
    theta: f64,
    gamma_t: f64,
}

impl ProbeDescriptor {
    pub fn new(alpha: f64, theta: f64, gamma_t: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(DfsError::Domain(format!("alpha must be positive, got {alpha}")));
        }
        if !(theta > 0.0 && theta < PI / 2.0) {
            return Err(DfsError::Domain(format!("theta must lie in (0, pi/2), got {theta}")));
        }
        if !(gamma_t >= 0.0 && gamma_t.is_finite()) {
            return Err(DfsError::Domain(format!("gamma_t must be non-negative, got {gamma_t}")));
        }
        Ok(ProbeDescriptor { alpha, theta, gamma_t })
    }

    pub fn lossless(alpha: f64, theta: f64) -> Result<Self> {
        Self::new(alpha, theta, 0.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn gamma_t(&self) -> f64 {
        self.gamma_t
    }

    /// Coherence parameter `A = e^{-γt/2}`.
    pub fn coherence(&self) -> f64 {
        (-0.5 * self.gamma_t).exp()
    }

    /// `Aα`, the surviving probe amplitude.
    pub fn effective_amplitude(&self) -> f64 {
        self.coherence() * self.alpha
    }

    /// Peak position `2Aα cos kθ` of the X-quadrature distribution.
    pub fn class_mean(&self, k: i32) -> f64 {
        2.0 * self.effective_amplitude() * (k as f64 * self.theta).cos()
    }
}

/// Kerr phase increments: the probe picks up `weight·θ` whenever `photon`
/// occupies `path`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KerrCoupling {
    entries: Vec<CouplingEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CouplingEntry {
    pub photon: String,
    pub path: PathId,
    pub weight: i32,
}

impl KerrCoupling {
    pub fn new(entries: Vec<CouplingEntry>) -> Result<Self> {
        for (i, a) in entries.iter().enumerate() {
            if entries[..i].iter().any(|b| b.photon == a.photon && b.path == a.path) {
                return Err(DfsError::Invalid(format!("coupling lists ({}, {}) twice", a.photon, a.path)));
            }
        }
        Ok(KerrCoupling { entries })
    }

    /// Convenience constructor from `(photon, path, weight)` triples.
    pub fn from_triples(triples: &[(&str, &str, i32)]) -> Result<Self> {
        Self::new(
            triples
                .iter()
                .map(|&(photon, path, weight)| CouplingEntry { photon: photon.into(), path: path.into(), weight })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[CouplingEntry] {
        &self.entries
    }

    /// Every `|k|` a basis term can produce, each photon occupying at most
    /// one of its coupled paths.
    pub fn reachable_classes(&self) -> BTreeSet<u32> {
        let mut photons: Vec<&str> = Vec::new();
        for e in &self.entries {
            if !photons.contains(&e.photon.as_str()) {
                photons.push(&e.photon);
            }
        }
        let mut sums: BTreeSet<i32> = BTreeSet::from([0]);
        for p in photons {
            let mut next = BTreeSet::new();
            for s in &sums {
                next.insert(*s);
                for e in self.entries.iter().filter(|e| e.photon == p) {
                    next.insert(s + e.weight);
                }
            }
            sums = next;
        }
        sums.into_iter().map(i32::unsigned_abs).collect()
    }

    pub(crate) fn compile(&self, reg: &Registry) -> Result<CompiledCoupling> {
        let entries = self
            .entries
            .iter()
            .map(|e| {
                reg.check_path(&e.path)?;
                Ok((reg.photon_index(&e.photon)?, e.path.clone(), e.weight))
            })
            .collect::<Result<_>>()?;
        Ok(CompiledCoupling { entries })
    }
}

pub(crate) struct CompiledCoupling {
    entries: Vec<(usize, PathId, i32)>,
}

impl CompiledCoupling {
    pub(crate) fn probe_index(&self, term: &BasisTerm) -> i32 {
        self.entries
            .iter()
            .filter(|(p, path, _)| term.path(*p) == path)
            .map(|(_, _, w)| w)
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActiveProbe {
    pub descriptor: ProbeDescriptor,
    pub coupling: KerrCoupling,
}

impl ActiveProbe {
    pub fn geometry(&self) -> Result<DecisionGeometry> {
        DecisionGeometry::new(&self.descriptor, self.coupling.reachable_classes())
    }
}

/// Couples the probe to the state: every term's probe index becomes the sum
/// of the weights of the coupled `(photon, path)` pairs it occupies.
pub fn attach_probe(state: &PhotonicState, probe: ProbeDescriptor, coupling: KerrCoupling) -> Result<PhotonicState> {
    if state.probe().is_some() {
        return Err(DfsError::ProbeActive);
    }
    let compiled = coupling.compile(state.registry())?;
    let mut out = state.map_terms(|t, a| {
        let mut v = smallvec::SmallVec::new();
        v.push((t.with_probe_k(compiled.probe_index(t)), a));
        v
    });
    out.set_probe(Some(ActiveProbe { descriptor: probe, coupling }));
    Ok(out)
}

/// `(2π)^{-1/4} exp[-(x − 2Aα cos kθ)²/4]`
pub fn gaussian_amplitude(x: f64, k: i32, probe: &ProbeDescriptor) -> f64 {
    let d = x - probe.class_mean(k);
    (2.0 * PI).powf(-0.25) * (-d * d / 4.0).exp()
}

pub(crate) fn phase_unreduced(x: f64, k: i32, probe: &ProbeDescriptor) -> f64 {
    (x - probe.class_mean(k)) * probe.effective_amplitude() * (k as f64 * probe.theta()).sin()
}

/// `φ(x, kθ) = (x − 2Aα cos kθ)·Aα sin kθ`, reduced to `[0, 2π)`.
pub fn phase_mod_value(x: f64, k: i32, probe: &ProbeDescriptor) -> f64 {
    let r = phase_unreduced(x, k, probe).rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// `1 − ½ erfc[Aα(1 − cos θ)/√2]`
pub fn success_probability(alpha: f64, theta: f64, gamma_t: f64) -> Result<f64> {
    let p = ProbeDescriptor::new(alpha, theta, gamma_t)?;
    Ok(1.0 - 0.5 * erfc(p.effective_amplitude() * (1.0 - theta.cos()) / SQRT_2))
}

/// Probability that a unit-variance sample lands past the midpoint between
/// two means `distance` apart: `½ erfc(D / 2√2)`.
pub fn pairwise_error_probability(distance: f64) -> f64 {
    0.5 * erfc(distance / (2.0 * SQRT_2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    Cnot,
    Toffoli,
    Fredkin,
}

impl GateKind {
    pub const ALL: [GateKind; 3] = [GateKind::Cnot, GateKind::Toffoli, GateKind::Fredkin];

    /// Number of X-homodyne measurements in one run of the gate.
    pub fn measurement_count(self) -> u32 {
        match self {
            GateKind::Cnot => 2,
            GateKind::Toffoli => 5,
            GateKind::Fredkin => 4,
        }
    }

    pub fn qubit_count(self) -> usize {
        match self {
            GateKind::Cnot => 2,
            GateKind::Toffoli | GateKind::Fredkin => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Cnot => "cnot",
            GateKind::Toffoli => "toffoli",
            GateKind::Fredkin => "fredkin",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = DfsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cnot" => Ok(GateKind::Cnot),
            "toffoli" => Ok(GateKind::Toffoli),
            "fredkin" => Ok(GateKind::Fredkin),
            other => Err(DfsError::Invalid(format!("unknown gate `{other}`"))),
        }
    }
}

/// `P_suc^n` with `n` the gate's measurement count.
pub fn gate_success_probability(gate: GateKind, alpha: f64, theta: f64, gamma_t: f64) -> Result<f64> {
    Ok(success_probability(alpha, theta, gamma_t)?.powi(gate.measurement_count() as i32))
}

/// Nearest-mean decision regions for a set of phase classes.
///
/// Classes are ordered by decreasing mean (for `|k|θ < π` this is increasing
/// `|k|`); `thresholds[i]` separates `classes[i]` from `classes[i + 1]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecisionGeometry {
    pub classes: Vec<u32>,
    pub means: Vec<f64>,
    pub half_distances: Vec<f64>,
    pub thresholds: Vec<f64>,
}

impl DecisionGeometry {
    pub fn new(probe: &ProbeDescriptor, classes: impl IntoIterator<Item = u32>) -> Result<Self> {
        let mut entries: Vec<(u32, f64)> = classes
            .into_iter()
            .collect::<BTreeSet<u32>>()
            .into_iter()
            .map(|k| (k, probe.class_mean(k as i32)))
            .collect();
        if entries.is_empty() {
            return Err(DfsError::Invalid("decision geometry needs at least one class".into()));
        }
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let classes: Vec<u32> = entries.iter().map(|e| e.0).collect();
        let means: Vec<f64> = entries.iter().map(|e| e.1).collect();
        let half_distances = means.windows(2).map(|w| (w[0] - w[1]) / 2.0).collect();
        let thresholds = means.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
        Ok(DecisionGeometry { classes, means, half_distances, thresholds })
    }

    pub fn position(&self, class: u32) -> Option<usize> {
        self.classes.iter().position(|&c| c == class)
    }

    pub fn mean(&self, class: u32) -> Option<f64> {
        self.position(class).map(|i| self.means[i])
    }

    /// Half the distance from `class` to its nearest neighbouring mean, or
    /// `None` for a single-class geometry.
    pub fn half_distance(&self, class: u32) -> Option<f64> {
        let i = self.position(class)?;
        let below = i.checked_sub(1).map(|j| self.half_distances[j]);
        let above = self.half_distances.get(i).copied();
        match (below, above) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// Interval `[lower, upper)` of x assigned to `class` (infinite at the ends).
    pub fn region(&self, class: u32) -> Option<(f64, f64)> {
        let i = self.position(class)?;
        let upper = if i == 0 { f64::INFINITY } else { self.thresholds[i - 1] };
        let lower = self.thresholds.get(i).copied().unwrap_or(f64::NEG_INFINITY);
        Some((lower, upper))
    }
}

/// Nearest-mean classification; an exact threshold hit goes to the smaller `|k|`.
pub fn classify(x: f64, geometry: &DecisionGeometry) -> u32 {
    for (i, &t) in geometry.thresholds.iter().enumerate() {
        if x > t {
            return geometry.classes[i];
        }
        if x == t {
            return geometry.classes[i].min(geometry.classes[i + 1]);
        }
    }
    *geometry.classes.last().expect("geometry is never empty")
}

/// Probability of a correct decision when the true class is drawn from
/// `priors` (pairs of class and weight), integrating every decision region.
pub fn exact_success_probability(geometry: &DecisionGeometry, priors: &[(u32, f64)]) -> Result<f64> {
    let total: f64 = priors.iter().map(|p| p.1).sum();
    if !(total > 0.0) {
        return Err(DfsError::Invalid("priors must have positive total weight".into()));
    }
    let mut p = 0.0;
    for &(class, w) in priors {
        let (lo, hi) = geometry.region(class).ok_or(DfsError::EmptyClass(class))?;
        let m = geometry.mean(class).expect("class has a region");
        p += w / total * normal_interval(lo - m, hi - m);
    }
    Ok(p)
}

/// `P(lo ≤ Z < hi)` for a standard normal `Z`.
fn normal_interval(lo: f64, hi: f64) -> f64 {
    let upper_tail = |z: f64| {
        if z == f64::INFINITY {
            0.0
        } else if z == f64::NEG_INFINITY {
            1.0
        } else {
            0.5 * erfc(z / SQRT_2)
        }
    };
    upper_tail(lo) - upper_tail(hi)
}
