//! Few-photon polarization + path states and the passive linear-optics
//! elements acting on them.
//!
//! A [`PhotonicState`] is a sparse map from [`BasisTerm`] to complex amplitude.
//! Every photon carries one polarization and occupies one spatial path; the
//! optional probe index records the multiple of the Kerr phase picked up by
//! the attached coherent probe (zero when no probe is attached).

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{DfsError, Result};
use crate::kerr_homodyne::ActiveProbe;

/// Amplitudes below this magnitude are dropped after every element.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

/// Tolerance for `|c0|^2 + |c1|^2 = 1` and for normalized-state checks.
pub const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub fn flipped(self) -> Self {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Polarization::H => 'H',
            Polarization::V => 'V',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            'H' => Some(Polarization::H),
            'V' => Some(Polarization::V),
            _ => None,
        }
    }
}

/// Label of a spatial mode, e.g. `C1` or `T32`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PathId(Arc<str>);

impl PathId {
    pub fn new(label: &str) -> Self {
        PathId(Arc::from(label))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for PathId {
    fn from(label: &str) -> Self {
        PathId::new(label)
    }
}

impl fmt::Display for PathId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for PathId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub(crate) type PerPhoton<T> = SmallVec<[T; 6]>;

/// One basis ket: a polarization and a path per photon (registration order)
/// plus the probe phase index.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisTerm {
    pols: PerPhoton<Polarization>,
    paths: PerPhoton<PathId>,
    probe_k: i32,
}

impl BasisTerm {
    pub fn new(pols: &[Polarization], paths: &[PathId], probe_k: i32) -> Result<Self> {
        if pols.len() != paths.len() {
            return Err(DfsError::Dimension(format!(
                "{} polarizations for {} paths",
                pols.len(),
                paths.len()
            )));
        }
        Ok(BasisTerm {
            pols: pols.iter().copied().collect(),
            paths: paths.iter().cloned().collect(),
            probe_k,
        })
    }

    pub fn pols(&self) -> &[Polarization] {
        &self.pols
    }

    pub fn paths(&self) -> &[PathId] {
        &self.paths
    }

    pub fn probe_k(&self) -> i32 {
        self.probe_k
    }

    pub fn pol(&self, photon: usize) -> Polarization {
        self.pols[photon]
    }

    pub fn path(&self, photon: usize) -> &PathId {
        &self.paths[photon]
    }

    pub fn photon_count(&self) -> usize {
        self.pols.len()
    }

    pub(crate) fn with_probe_k(&self, k: i32) -> Self {
        let mut t = self.clone();
        t.probe_k = k;
        t
    }

    fn key_string(&self) -> String {
        let pols: String = self.pols.iter().map(|p| p.symbol()).collect();
        let paths: Vec<&str> = self.paths.iter().map(|p| p.as_str()).collect();
        format!("{}|{}|{}", pols, paths.join(","), self.probe_k)
    }
}

/// Parses the key part of a dump line: `HVHV|C1,C2,T1,T4|0`.
impl FromStr for BasisTerm {
    type Err = DfsError;

    fn from_str(s: &str) -> Result<Self> {
        let mut fields = s.split('|');
        let (Some(pols), Some(paths), Some(k), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(DfsError::Invalid(format!("bad basis term `{s}`")));
        };
        let pols = pols
            .chars()
            .map(|c| Polarization::from_symbol(c).ok_or_else(|| DfsError::Invalid(format!("bad polarization `{c}`"))))
            .collect::<Result<Vec<_>>>()?;
        let paths: Vec<PathId> = paths.split(',').map(PathId::new).collect();
        let k = k
            .trim()
            .parse::<i32>()
            .map_err(|e| DfsError::Invalid(format!("bad probe index `{k}`: {e}")))?;
        BasisTerm::new(&pols, &paths, k)
    }
}

impl fmt::Display for BasisTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key_string())
    }
}

/// A logical qubit carried by two photons: `|0̄⟩ = |H⟩|V⟩`, `|1̄⟩ = |V⟩|H⟩`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LogicalQubit {
    pub first: String,
    pub second: String,
}

impl LogicalQubit {
    pub fn new(first: &str, second: &str) -> Self {
        LogicalQubit { first: first.to_string(), second: second.to_string() }
    }

    pub fn encoding(bit: bool) -> (Polarization, Polarization) {
        if bit {
            (Polarization::V, Polarization::H)
        } else {
            (Polarization::H, Polarization::V)
        }
    }

    /// Logical value of a term, or `None` when the pair is not anti-correlated.
    pub fn decode(first: Polarization, second: Polarization) -> Option<bool> {
        match (first, second) {
            (Polarization::H, Polarization::V) => Some(false),
            (Polarization::V, Polarization::H) => Some(true),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        format!("{}{}", self.first, self.second)
    }
}

/// Photon names in registration order plus the set of known path labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Registry {
    photons: Vec<String>,
    paths: BTreeSet<PathId>,
}

impl Registry {
    pub fn new<S: AsRef<str>>(photons: &[S]) -> Result<Self> {
        let mut names: Vec<String> = Vec::with_capacity(photons.len());
        for p in photons {
            let p = p.as_ref();
            if names.iter().any(|n| n == p) {
                return Err(DfsError::DuplicatePhoton(p.to_string()));
            }
            names.push(p.to_string());
        }
        Ok(Registry { photons: names, paths: BTreeSet::new() })
    }

    pub fn photons(&self) -> &[String] {
        &self.photons
    }

    pub fn paths(&self) -> &BTreeSet<PathId> {
        &self.paths
    }

    pub fn photon_index(&self, name: &str) -> Result<usize> {
        self.photons
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| DfsError::UnknownPhoton(name.to_string()))
    }

    pub fn check_path(&self, path: &PathId) -> Result<()> {
        if self.paths.contains(path) {
            Ok(())
        } else {
            Err(DfsError::UnknownPath(path.to_string()))
        }
    }

    pub fn register_path(&mut self, path: PathId) {
        self.paths.insert(path);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BsVariant {
    /// `up → (up + down)/√2`, `down → (up − down)/√2`
    Bs,
    /// `up → (down − up)/√2`, `down → (up + down)/√2`
    BsPrime,
}

impl BsVariant {
    /// Amplitude for a photon entering `input` (`false` = up, `true` = down)
    /// to leave through `output`.
    pub fn amplitude(self, input_down: bool, output_down: bool) -> f64 {
        let s = FRAC_1_SQRT_2;
        match (self, input_down, output_down) {
            (BsVariant::Bs, false, _) => s,
            (BsVariant::Bs, true, false) => s,
            (BsVariant::Bs, true, true) => -s,
            (BsVariant::BsPrime, false, false) => -s,
            (BsVariant::BsPrime, false, true) => s,
            (BsVariant::BsPrime, true, _) => s,
        }
    }
}

/// A passive optical element (or a deterministic classical correction)
/// addressed by photon name and path label.
#[derive(Clone, Debug, PartialEq)]
pub enum Element {
    /// Polarizing beam splitter between `port_a` and `port_b`: H is
    /// transmitted (keeps its port), V is reflected (changes port).
    Pbs { photons: Vec<String>, port_a: PathId, port_b: PathId },
    BeamSplitter { photon: String, up: PathId, down: PathId, variant: BsVariant },
    /// Bit flip `H ↔ V` on the given path.
    BitFlip { photon: String, path: PathId },
    /// `σ_z = |H⟩⟨H| − |V⟩⟨V|` on the given path.
    PhaseFlip { photon: String, path: PathId },
    /// Phase `e^{iφ}` on every term where the photon occupies the path.
    Phase { photon: String, path: PathId, radians: f64 },
    /// Exchanges the two path labels of one photon.
    PathSwap { photon: String, a: PathId, b: PathId },
    /// Exchanges the polarizations of two photons, optionally only on terms
    /// where the photons sit on the given paths.
    PolarizationSwap { first: String, second: String, on_paths: Option<(PathId, PathId)> },
    /// `H → e^{iγ1} H`, `V → e^{iγ2} V` on every listed photon.
    CollectiveDephasing { photons: Vec<String>, gamma1: f64, gamma2: f64 },
}

pub(crate) type Images = SmallVec<[(BasisTerm, Complex64); 2]>;

fn single(term: BasisTerm, amp: Complex64) -> Images {
    let mut v = Images::new();
    v.push((term, amp));
    v
}

/// An element with its photon names and paths resolved against a registry.
pub(crate) enum CompiledElement {
    Pbs { photons: SmallVec<[usize; 2]>, port_a: PathId, port_b: PathId },
    BeamSplitter { photon: usize, up: PathId, down: PathId, variant: BsVariant },
    BitFlip { photon: usize, path: PathId },
    PhaseFlip { photon: usize, path: PathId },
    Phase { photon: usize, path: PathId, factor: Complex64 },
    PathSwap { photon: usize, a: PathId, b: PathId },
    PolarizationSwap { first: usize, second: usize, on_paths: Option<(PathId, PathId)> },
    CollectiveDephasing { photons: SmallVec<[usize; 2]>, h: Complex64, v: Complex64 },
}

impl Element {
    pub(crate) fn compile(&self, reg: &Registry) -> Result<CompiledElement> {
        let path = |p: &PathId| -> Result<PathId> {
            reg.check_path(p)?;
            Ok(p.clone())
        };
        Ok(match self {
            Element::Pbs { photons, port_a, port_b } => CompiledElement::Pbs {
                photons: photons.iter().map(|p| reg.photon_index(p)).collect::<Result<_>>()?,
                port_a: path(port_a)?,
                port_b: path(port_b)?,
            },
            Element::BeamSplitter { photon, up, down, variant } => {
                if up == down {
                    return Err(DfsError::Invalid(format!("beam splitter ports coincide: {up}")));
                }
                CompiledElement::BeamSplitter {
                    photon: reg.photon_index(photon)?,
                    up: path(up)?,
                    down: path(down)?,
                    variant: *variant,
                }
            }
            Element::BitFlip { photon, path: p } => {
                CompiledElement::BitFlip { photon: reg.photon_index(photon)?, path: path(p)? }
            }
            Element::PhaseFlip { photon, path: p } => {
                CompiledElement::PhaseFlip { photon: reg.photon_index(photon)?, path: path(p)? }
            }
            Element::Phase { photon, path: p, radians } => CompiledElement::Phase {
                photon: reg.photon_index(photon)?,
                path: path(p)?,
                factor: Complex64::from_polar(1.0, *radians),
            },
            Element::PathSwap { photon, a, b } => {
                if a == b {
                    return Err(DfsError::Invalid(format!("path swap needs two distinct paths, got {a} twice")));
                }
                CompiledElement::PathSwap { photon: reg.photon_index(photon)?, a: path(a)?, b: path(b)? }
            }
            Element::PolarizationSwap { first, second, on_paths } => {
                let first = reg.photon_index(first)?;
                let second = reg.photon_index(second)?;
                if first == second {
                    return Err(DfsError::Invalid("polarization swap of a photon with itself".into()));
                }
                let on_paths = match on_paths {
                    Some((a, b)) => Some((path(a)?, path(b)?)),
                    None => None,
                };
                CompiledElement::PolarizationSwap { first, second, on_paths }
            }
            Element::CollectiveDephasing { photons, gamma1, gamma2 } => CompiledElement::CollectiveDephasing {
                photons: photons.iter().map(|p| reg.photon_index(p)).collect::<Result<_>>()?,
                h: Complex64::from_polar(1.0, *gamma1),
                v: Complex64::from_polar(1.0, *gamma2),
            },
        })
    }
}

impl CompiledElement {
    pub(crate) fn image(&self, term: &BasisTerm) -> Images {
        let one = Complex64::new(1.0, 0.0);
        match self {
            CompiledElement::Pbs { photons, port_a, port_b } => {
                let mut t = term.clone();
                for &p in photons {
                    if t.pols[p] == Polarization::V {
                        if t.paths[p] == *port_a {
                            t.paths[p] = port_b.clone();
                        } else if t.paths[p] == *port_b {
                            t.paths[p] = port_a.clone();
                        }
                    }
                }
                single(t, one)
            }
            CompiledElement::BeamSplitter { photon, up, down, variant } => {
                let p = *photon;
                let input_down = if term.paths[p] == *up {
                    false
                } else if term.paths[p] == *down {
                    true
                } else {
                    return single(term.clone(), one);
                };
                let mut out = Images::new();
                for (label, output_down) in [(up, false), (down, true)] {
                    let mut t = term.clone();
                    t.paths[p] = label.clone();
                    out.push((t, Complex64::new(variant.amplitude(input_down, output_down), 0.0)));
                }
                out
            }
            CompiledElement::BitFlip { photon, path } => {
                let mut t = term.clone();
                if t.paths[*photon] == *path {
                    t.pols[*photon] = t.pols[*photon].flipped();
                }
                single(t, one)
            }
            CompiledElement::PhaseFlip { photon, path } => {
                let sign = if term.paths[*photon] == *path && term.pols[*photon] == Polarization::V {
                    -one
                } else {
                    one
                };
                single(term.clone(), sign)
            }
            CompiledElement::Phase { photon, path, factor } => {
                let f = if term.paths[*photon] == *path { *factor } else { one };
                single(term.clone(), f)
            }
            CompiledElement::PathSwap { photon, a, b } => {
                let mut t = term.clone();
                if t.paths[*photon] == *a {
                    t.paths[*photon] = b.clone();
                } else if t.paths[*photon] == *b {
                    t.paths[*photon] = a.clone();
                }
                single(t, one)
            }
            CompiledElement::PolarizationSwap { first, second, on_paths } => {
                let applies = match on_paths {
                    Some((a, b)) => term.paths[*first] == *a && term.paths[*second] == *b,
                    None => true,
                };
                let mut t = term.clone();
                if applies {
                    t.pols.swap(*first, *second);
                }
                single(t, one)
            }
            CompiledElement::CollectiveDephasing { photons, h, v } => {
                let f = photons.iter().fold(one, |acc, &p| match term.pols[p] {
                    Polarization::H => acc * h,
                    Polarization::V => acc * v,
                });
                single(term.clone(), f)
            }
        }
    }
}

/// Sparse superposition of [`BasisTerm`]s.
#[derive(Clone, Debug)]
pub struct PhotonicState {
    registry: Registry,
    terms: BTreeMap<BasisTerm, Complex64>,
    probe: Option<ActiveProbe>,
}

impl PhotonicState {
    /// Builds a state from explicit terms. Every path used by a term is
    /// registered; amplitudes below the prune threshold are dropped.
    pub fn from_terms<S: AsRef<str>>(
        photons: &[S],
        terms: impl IntoIterator<Item = (BasisTerm, Complex64)>,
    ) -> Result<Self> {
        let mut registry = Registry::new(photons)?;
        let mut map = BTreeMap::new();
        for (term, amp) in terms {
            if term.photon_count() != registry.photons.len() {
                return Err(DfsError::Dimension(format!(
                    "term {term} has {} photons, registry has {}",
                    term.photon_count(),
                    registry.photons.len()
                )));
            }
            if term.probe_k != 0 {
                return Err(DfsError::Invalid(format!("term {term} carries a probe index without a probe")));
            }
            for p in &term.paths {
                registry.register_path(p.clone());
            }
            *map.entry(term).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        map.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
        Ok(PhotonicState { registry, terms: map, probe: None })
    }

    /// Normalized product state of logical qubits, one path per photon.
    pub fn init_register<S: AsRef<str>>(
        photons: &[S],
        logical_qubits: &[(LogicalQubit, Complex64, Complex64)],
        initial_paths: &[&str],
    ) -> Result<Self> {
        for (q, c0, c1) in logical_qubits {
            let norm = c0.norm_sqr() + c1.norm_sqr();
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(DfsError::NotNormalized(norm));
            }
            if q.first == q.second {
                return Err(DfsError::Invalid(format!("logical qubit {} uses one photon twice", q.label())));
            }
        }
        let qubits: Vec<LogicalQubit> = logical_qubits.iter().map(|(q, _, _)| q.clone()).collect();
        let n = qubits.len();
        let mut coeffs = vec![Complex64::new(1.0, 0.0); 1 << n];
        for (idx, c) in coeffs.iter_mut().enumerate() {
            for (qi, (_, c0, c1)) in logical_qubits.iter().enumerate() {
                let bit = (idx >> (n - 1 - qi)) & 1 == 1;
                *c *= if bit { *c1 } else { *c0 };
            }
        }
        Self::from_logical(photons, &qubits, &coeffs, initial_paths)
    }

    /// State `Σ_i c_i |i⟩` over the logical basis of `qubits` (first qubit is
    /// the most significant bit), every photon on its given path.
    pub fn from_logical<S: AsRef<str>>(
        photons: &[S],
        qubits: &[LogicalQubit],
        coeffs: &[Complex64],
        initial_paths: &[&str],
    ) -> Result<Self> {
        let registry = Registry::new(photons)?;
        let n_photons = registry.photons.len();
        if initial_paths.len() != n_photons {
            return Err(DfsError::Dimension(format!(
                "{} initial paths for {} photons",
                initial_paths.len(),
                n_photons
            )));
        }
        if coeffs.len() != 1 << qubits.len() {
            return Err(DfsError::Dimension(format!(
                "{} coefficients for {} logical qubits",
                coeffs.len(),
                qubits.len()
            )));
        }
        let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(DfsError::NotNormalized(norm));
        }
        let mut slots = vec![None; n_photons];
        let mut pairs = Vec::with_capacity(qubits.len());
        for q in qubits {
            let a = registry.photon_index(&q.first)?;
            let b = registry.photon_index(&q.second)?;
            for i in [a, b] {
                if slots[i].is_some() || a == b {
                    return Err(DfsError::Invalid(format!("photon {} assigned to two logical qubits", registry.photons[i])));
                }
                slots[i] = Some(());
            }
            pairs.push((a, b));
        }
        if let Some(i) = slots.iter().position(Option::is_none) {
            return Err(DfsError::Invalid(format!("photon {} belongs to no logical qubit", registry.photons[i])));
        }
        let paths: Vec<PathId> = initial_paths.iter().map(|p| PathId::new(p)).collect();
        let n = qubits.len();
        let mut terms = Vec::new();
        for (idx, c) in coeffs.iter().enumerate() {
            let mut pols = vec![Polarization::H; n_photons];
            for (qi, &(a, b)) in pairs.iter().enumerate() {
                let (pa, pb) = LogicalQubit::encoding((idx >> (n - 1 - qi)) & 1 == 1);
                pols[a] = pa;
                pols[b] = pb;
            }
            terms.push((BasisTerm::new(&pols, &paths, 0)?, *c));
        }
        Self::from_terms(&registry.photons, terms)
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn photons(&self) -> &[String] {
        &self.registry.photons
    }

    pub fn photon_index(&self, name: &str) -> Result<usize> {
        self.registry.photon_index(name)
    }

    /// Returns a copy with additional path labels registered.
    pub fn with_paths<I, P>(mut self, paths: I) -> Self
    where
        I: IntoIterator<Item = P>,
        P: Into<PathId>,
    {
        for p in paths {
            self.registry.register_path(p.into());
        }
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = (&BasisTerm, &Complex64)> {
        self.terms.iter()
    }

    pub fn amplitude(&self, term: &BasisTerm) -> Complex64 {
        self.terms.get(term).copied().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOLERANCE
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(DfsError::Invalid("cannot normalize a zero state".into()));
        }
        let mut out = self.clone();
        for a in out.terms.values_mut() {
            *a /= n;
        }
        Ok(out)
    }

    pub fn probe(&self) -> Option<&ActiveProbe> {
        self.probe.as_ref()
    }

    pub(crate) fn set_probe(&mut self, probe: Option<ActiveProbe>) {
        self.probe = probe;
    }

    /// Rebuilds the term map through `f`, pruning numeric dust.
    pub(crate) fn map_terms(&self, mut f: impl FnMut(&BasisTerm, Complex64) -> Images) -> Self {
        let mut out: BTreeMap<BasisTerm, Complex64> = BTreeMap::new();
        for (term, amp) in &self.terms {
            for (t, a) in f(term, *amp) {
                *out.entry(t).or_insert(Complex64::new(0.0, 0.0)) += a;
            }
        }
        out.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
        PhotonicState { registry: self.registry.clone(), terms: out, probe: self.probe.clone() }
    }

    pub(crate) fn retain_terms(&self, mut keep: impl FnMut(&BasisTerm) -> bool) -> Self {
        let mut out = self.clone();
        out.terms.retain(|t, _| keep(t));
        out
    }

    pub fn apply(&self, element: &Element) -> Result<Self> {
        let compiled = element.compile(&self.registry)?;
        Ok(self.map_terms(|term, amp| {
            compiled.image(term).into_iter().map(|(t, a)| (t, a * amp)).collect()
        }))
    }

    pub fn apply_all<'a>(&self, elements: impl IntoIterator<Item = &'a Element>) -> Result<Self> {
        let mut s = self.clone();
        for e in elements {
            s = s.apply(e)?;
        }
        Ok(s)
    }

    pub fn apply_x_on_path(&self, photon: &str, path: &str) -> Result<Self> {
        self.apply(&Element::BitFlip { photon: photon.into(), path: path.into() })
    }

    pub fn apply_sigma_z_on_path(&self, photon: &str, path: &str) -> Result<Self> {
        self.apply(&Element::PhaseFlip { photon: photon.into(), path: path.into() })
    }

    pub fn apply_phase_on_path(&self, photon: &str, path: &str, radians: f64) -> Result<Self> {
        self.apply(&Element::Phase { photon: photon.into(), path: path.into(), radians })
    }

    pub fn apply_pbs(&self, photons: &[&str], port_a: &str, port_b: &str) -> Result<Self> {
        self.apply(&Element::Pbs {
            photons: photons.iter().map(|p| p.to_string()).collect(),
            port_a: port_a.into(),
            port_b: port_b.into(),
        })
    }

    pub fn apply_bs(&self, photon: &str, up: &str, down: &str, variant: BsVariant) -> Result<Self> {
        self.apply(&Element::BeamSplitter { photon: photon.into(), up: up.into(), down: down.into(), variant })
    }

    pub fn apply_collective_dephasing(&self, pair: (&str, &str), gamma1: f64, gamma2: f64) -> Result<Self> {
        self.apply(&Element::CollectiveDephasing {
            photons: vec![pair.0.to_string(), pair.1.to_string()],
            gamma1,
            gamma2,
        })
    }

    /// `⟨self|other⟩`; registries must list the same photons in the same order.
    pub fn inner(&self, other: &PhotonicState) -> Result<Complex64> {
        if self.registry.photons != other.registry.photons {
            return Err(DfsError::RegistryMismatch(format!(
                "{:?} vs {:?}",
                self.registry.photons, other.registry.photons
            )));
        }
        let (small, large, conj_small) = if self.terms.len() <= other.terms.len() {
            (&self.terms, &other.terms, true)
        } else {
            (&other.terms, &self.terms, false)
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (t, a) in small {
            if let Some(b) = large.get(t) {
                acc += if conj_small { a.conj() * b } else { b.conj() * a };
            }
        }
        Ok(acc)
    }

    /// Check that every term has anti-correlated polarizations on each pair.
    pub fn check_dfs(&self, qubits: &[LogicalQubit]) -> Result<()> {
        let pairs = qubits
            .iter()
            .map(|q| Ok((self.photon_index(&q.first)?, self.photon_index(&q.second)?, q.label())))
            .collect::<Result<Vec<_>>>()?;
        for t in self.terms.keys() {
            for (a, b, label) in &pairs {
                if LogicalQubit::decode(t.pols[*a], t.pols[*b]).is_none() {
                    return Err(DfsError::OutsideDfs(format!("term {t} on pair {label}")));
                }
            }
        }
        Ok(())
    }

    /// One line per term, `pols|paths|k|re|im`, in canonical key order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (t, a) in &self.terms {
            out.push_str(&format!("{}|{:?}|{:?}\n", t.key_string(), a.re, a.im));
        }
        out
    }
}

/// `|⟨a|b⟩|²` for normalized states over the same photon registry.
pub fn fidelity_pure(a: &PhotonicState, b: &PhotonicState) -> Result<f64> {
    for s in [a, b] {
        if !s.is_normalized() {
            return Err(DfsError::Invalid(format!("state not normalized (norm² = {})", s.norm_sqr())));
        }
    }
    Ok(a.inner(b)?.norm_sqr().min(1.0))
}
