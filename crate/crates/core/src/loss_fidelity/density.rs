use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::dephasing::{b_matrix, BranchDecomposition, DephasingMatrix};
use crate::error::{DfsError, Result};
use crate::kerr_homodyne::{gaussian_amplitude, phase_unreduced, KerrCoupling, ProbeDescriptor};
use crate::photonic_state::{BasisTerm, Element, PhotonicState, Registry};

/// Basis entries whose diagonal weight falls below this fraction of the
/// trace are dropped.
pub const DIAGONAL_FLOOR: f64 = 1e-30;

/// Dense density matrix over the basis terms it actually touches.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    registry: Registry,
    basis: Vec<BasisTerm>,
    matrix: DMatrix<Complex64>,
}

type LinearMap = Vec<Vec<(usize, Complex64)>>;

impl DensityOperator {
    pub fn from_pure(state: &PhotonicState) -> Self {
        let (basis, amps): (Vec<BasisTerm>, Vec<Complex64>) = state.terms().map(|(t, a)| (t.clone(), *a)).unzip();
        let n = basis.len();
        let matrix = DMatrix::from_fn(n, n, |i, j| amps[i] * amps[j].conj());
        DensityOperator { registry: state.registry().clone(), basis, matrix }
    }

    pub fn from_parts(registry: Registry, basis: Vec<BasisTerm>, matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != basis.len() || matrix.ncols() != basis.len() {
            return Err(DfsError::Dimension(format!(
                "{}x{} matrix over {} basis terms",
                matrix.nrows(),
                matrix.ncols(),
                basis.len()
            )));
        }
        if basis.iter().collect::<BTreeSet<_>>().len() != basis.len() {
            return Err(DfsError::Invalid("repeated basis term".into()));
        }
        Ok(DensityOperator { registry, basis, matrix })
    }

    pub fn basis(&self) -> &[BasisTerm] {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|c| c.re).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let tr = self.trace();
        if !(tr > 0.0 && tr.is_finite()) {
            return Err(DfsError::Invalid(format!("cannot normalize a density with trace {tr}")));
        }
        let mut out = self.clone();
        out.matrix /= Complex64::new(tr, 0.0);
        Ok(out)
    }

    /// `max |ρ − ρ†|`
    pub fn hermiticity_error(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.dim() == 0 {
            return Vec::new();
        }
        let h = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// The eigenvector of the largest eigenvalue, as a normalized state.
    pub fn dominant_state(&self) -> Result<PhotonicState> {
        if self.dim() == 0 {
            return Err(DfsError::Invalid("empty density".into()));
        }
        let h = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(h);
        let (best, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty spectrum");
        let v = eig.eigenvectors.column(best);
        let terms = self.basis.iter().cloned().zip(v.iter().copied());
        let s = PhotonicState::from_terms(self.registry.photons(), terms.map(|(t, a)| (t.with_probe_k(0), a)))?;
        s.normalized()
    }

    fn check_registry(&self, state: &PhotonicState) -> Result<()> {
        if state.photons() != self.registry.photons() {
            return Err(DfsError::Dimension(format!(
                "density over {:?}, state over {:?}",
                self.registry.photons(),
                state.photons()
            )));
        }
        Ok(())
    }

    /// `⟨ψ|ρ|ψ⟩`
    pub fn expectation(&self, state: &PhotonicState) -> Result<f64> {
        self.check_registry(state)?;
        let amps: Vec<Complex64> = self.basis.iter().map(|t| state.amplitude(t)).collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, ai) in amps.iter().enumerate() {
            if *ai == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (j, aj) in amps.iter().enumerate() {
                acc += ai.conj() * self.matrix[(i, j)] * aj;
            }
        }
        Ok(acc.re)
    }

    /// `⟨ψ|ρ|ψ⟩ / tr ρ`, clamped to `[0, 1]`.
    pub fn fidelity(&self, ideal: &PhotonicState) -> Result<f64> {
        if !ideal.is_normalized() {
            return Err(DfsError::Invalid("ideal state must be normalized".into()));
        }
        Ok((self.expectation(ideal)? / self.trace()).clamp(0.0, 1.0))
    }

    /// `ρ → M ρ M†` for a map given as images of the current basis.
    fn conjugate(&self, images: impl Fn(&BasisTerm) -> Vec<(BasisTerm, Complex64)>) -> Self {
        let mut new_basis: BTreeMap<BasisTerm, usize> = BTreeMap::new();
        let map: LinearMap = self
            .basis
            .iter()
            .map(|t| {
                images(t)
                    .into_iter()
                    .map(|(img, a)| {
                        let next = new_basis.len();
                        (*new_basis.entry(img).or_insert(next), a)
                    })
                    .collect()
            })
            .collect();
        let n = new_basis.len();
        let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        for (j, row_j) in map.iter().enumerate() {
            for (l, row_l) in map.iter().enumerate() {
                let r = self.matrix[(j, l)];
                if r == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for &(a, ma) in row_j {
                    for &(b, mb) in row_l {
                        m[(a, b)] += ma * r * mb.conj();
                    }
                }
            }
        }
        let mut basis = vec![None; n];
        for (t, i) in new_basis {
            basis[i] = Some(t);
        }
        DensityOperator {
            registry: self.registry.clone(),
            basis: basis.into_iter().map(|t| t.expect("every index assigned")).collect(),
            matrix: m,
        }
        .pruned()
    }

    fn pruned(self) -> Self {
        let floor = DIAGONAL_FLOOR * self.trace().max(f64::MIN_POSITIVE);
        let keep: Vec<usize> = (0..self.dim()).filter(|&i| self.matrix[(i, i)].re > floor).collect();
        if keep.len() == self.dim() {
            return self;
        }
        let m = DMatrix::from_fn(keep.len(), keep.len(), |a, b| self.matrix[(keep[a], keep[b])]);
        DensityOperator {
            registry: self.registry,
            basis: keep.iter().map(|&i| self.basis[i].clone()).collect(),
            matrix: m,
        }
    }

    pub fn apply(&self, element: &Element) -> Result<Self> {
        let compiled = element.compile(&self.registry)?;
        Ok(self.conjugate(|t| compiled.image(t).into_vec()))
    }

    pub fn with_paths<I, P>(mut self, paths: I) -> Self
    where
        I: IntoIterator<Item = P>,
        P: Into<crate::photonic_state::PathId>,
    {
        for p in paths {
            self.registry.register_path(p.into());
        }
        self
    }

    /// Couples a lossy probe, reads its X quadrature at `x` and returns the
    /// trace-normalized conditional density of the photons.
    pub fn measure_probe(
        &self,
        coupling: &KerrCoupling,
        probe: &ProbeDescriptor,
        n_steps: usize,
        x: f64,
    ) -> Result<Self> {
        let compiled = coupling.compile(&self.registry)?;
        let ks: Vec<i32> = self.basis.iter().map(|t| compiled.probe_index(t)).collect();
        let k_set: Vec<i32> = ks.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        let dephasing = b_matrix(probe.alpha(), probe.theta(), probe.gamma_t(), n_steps, &k_set)?;
        let weighted = self.readout_weighted(&ks, &dephasing, x, probe);
        weighted.normalized()
    }

    fn readout_weighted(&self, ks: &[i32], dephasing: &DephasingMatrix, x: f64, probe: &ProbeDescriptor) -> Self {
        let amp: BTreeMap<i32, Complex64> = dephasing
            .ks()
            .iter()
            .map(|&k| (k, Complex64::from_polar(gaussian_amplitude(x, k, probe), phase_unreduced(x, k, probe))))
            .collect();
        let n = self.dim();
        let matrix = DMatrix::from_fn(n, n, |j, l| {
            let (k, q) = (ks[j], ks[l]);
            let b = dephasing.b(k, q).expect("k-set covers the basis");
            let coherence = Complex64::from_polar(b.re.exp(), b.im);
            self.matrix[(j, l)] * coherence * amp[&k] * amp[&q].conj()
        });
        DensityOperator { registry: self.registry.clone(), basis: self.basis.clone(), matrix }
            .conjugate(|t| vec![(t.with_probe_k(0), Complex64::new(1.0, 0.0))])
    }
}

/// `Σ_{k,l} C_kl f(x,k) f(x,l) e^{i[δ_kl + φ(x,k) − φ(x,l)]} |φ_k⟩⟨φ_l|`,
/// trace-normalized, over the photonic terms (probe index reset to zero).
pub fn conditional_density(
    branches: &BranchDecomposition,
    dephasing: &DephasingMatrix,
    x: f64,
    probe: &ProbeDescriptor,
) -> Result<DensityOperator> {
    if branches.ks() != dephasing.ks() {
        return Err(DfsError::Dimension(format!(
            "branch indices {:?} vs dephasing indices {:?}",
            branches.ks(),
            dephasing.ks()
        )));
    }
    let mut registry = None;
    let mut terms = Vec::new();
    for (_, ket) in branches.iter() {
        registry.get_or_insert_with(|| ket.registry().clone());
        terms.extend(ket.terms().map(|(t, a)| (t.clone(), *a)));
    }
    let registry = registry.ok_or_else(|| DfsError::Invalid("no branches".into()))?;
    let basis: Vec<BasisTerm> = terms.iter().map(|(t, _)| t.clone()).collect();
    let n = basis.len();
    let ks: Vec<i32> = basis.iter().map(|t| t.probe_k()).collect();
    let matrix = DMatrix::from_fn(n, n, |i, j| terms[i].1 * terms[j].1.conj());
    let pure = DensityOperator::from_parts(registry, basis, matrix)?;
    pure.readout_weighted(&ks, dephasing, x, probe).normalized()
}

/// Applies the remaining deterministic elements and returns
/// `⟨ideal|ρ|ideal⟩ / tr ρ`.
pub fn fidelity_after_feedforward(density: &DensityOperator, ops: &[Element], ideal: &PhotonicState) -> Result<f64> {
    let mut rho = density.clone().with_paths(ideal.registry().paths().iter().cloned());
    for op in ops {
        rho = rho.apply(op)?;
    }
    rho.fidelity(ideal)
}
