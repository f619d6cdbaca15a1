use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{DfsError, Result};
use crate::photonic_state::PhotonicState;

/// A probed state split by probe index into unnormalized kets `|φ_k⟩`.
#[derive(Clone, Debug)]
pub struct BranchDecomposition {
    branches: BTreeMap<i32, PhotonicState>,
}

impl BranchDecomposition {
    pub fn ks(&self) -> Vec<i32> {
        self.branches.keys().copied().collect()
    }

    pub fn branch(&self, k: i32) -> Option<&PhotonicState> {
        self.branches.get(&k)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, &PhotonicState)> {
        self.branches.iter().map(|(k, s)| (*k, s))
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    /// `⟨φ_k|φ_k⟩` for every branch.
    pub fn norms(&self) -> BTreeMap<i32, f64> {
        self.branches.iter().map(|(k, s)| (*k, s.norm_sqr())).collect()
    }
}

pub fn branch_decomposition(state: &PhotonicState) -> Result<BranchDecomposition> {
    if state.probe().is_none() {
        return Err(DfsError::NoProbe);
    }
    let ks: std::collections::BTreeSet<i32> = state.terms().map(|(t, _)| t.probe_k()).collect();
    let branches = ks.into_iter().map(|k| (k, state.retain_terms(|t| t.probe_k() == k))).collect();
    Ok(BranchDecomposition { branches })
}

/// Probe-loss coherence factors between probe branches:
/// `B_kl = α²(1 − A^{2/N}) Σ_{n=1}^{N} A^{2(n−1)/N} [e^{i(k−l)nθ/N} − 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DephasingMatrix {
    ks: Vec<i32>,
    b: DMatrix<Complex64>,
    pub alpha: f64,
    pub theta: f64,
    pub gamma_t: f64,
    pub n_steps: usize,
}

impl DephasingMatrix {
    pub fn ks(&self) -> &[i32] {
        &self.ks
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.b
    }

    fn index(&self, k: i32) -> Option<usize> {
        self.ks.iter().position(|&x| x == k)
    }

    pub fn b(&self, k: i32, l: i32) -> Option<Complex64> {
        Some(self.b[(self.index(k)?, self.index(l)?)])
    }

    /// `C_kl = e^{Re B_kl}`
    pub fn c(&self, k: i32, l: i32) -> Option<f64> {
        self.b(k, l).map(|b| b.re.exp())
    }

    /// `δ_kl = Im B_kl`
    pub fn delta(&self, k: i32, l: i32) -> Option<f64> {
        self.b(k, l).map(|b| b.im)
    }
}

pub fn b_matrix(alpha: f64, theta: f64, gamma_t: f64, n_steps: usize, k_set: &[i32]) -> Result<DephasingMatrix> {
    if n_steps == 0 {
        return Err(DfsError::Domain("step count N must be at least 1".into()));
    }
    if !(alpha > 0.0 && alpha.is_finite()) || !theta.is_finite() || !(gamma_t >= 0.0 && gamma_t.is_finite()) {
        return Err(DfsError::Domain(format!("bad probe parameters alpha={alpha} theta={theta} gamma_t={gamma_t}")));
    }
    let mut ks = k_set.to_vec();
    ks.sort_unstable();
    if ks.windows(2).any(|w| w[0] == w[1]) {
        return Err(DfsError::Invalid(format!("repeated probe index in {k_set:?}")));
    }
    let n = n_steps as f64;
    // 1 − A^{2/N} with A = e^{−γt/2}
    let prefactor = alpha * alpha * -(-gamma_t / n).exp_m1();
    let dim = ks.len();
    let mut b = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    if prefactor > 0.0 {
        for i in 0..dim {
            for j in (i + 1)..dim {
                let dk = (ks[i] - ks[j]) as f64;
                let mut sum = Complex64::new(0.0, 0.0);
                for step in 1..=n_steps {
                    let weight = (-gamma_t * (step - 1) as f64 / n).exp();
                    let phase = dk * step as f64 * theta / n;
                    sum += weight * Complex64::new(phase.cos() - 1.0, phase.sin());
                }
                b[(i, j)] = prefactor * sum;
                b[(j, i)] = b[(i, j)].conj();
            }
        }
    }
    Ok(DephasingMatrix { ks, b, alpha, theta, gamma_t, n_steps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_and_lossless_cases() {
        let m = b_matrix(70.0, 0.35, 1.0, 200, &[-5, -3, -2, 0, 2, 3, 5]).unwrap();
        for &k in m.ks() {
            assert_eq!(m.b(k, k), Some(Complex64::new(0.0, 0.0)));
            assert_eq!(m.c(k, k), Some(1.0));
        }
        let z = b_matrix(70.0, 0.35, 0.0, 200, &[0, 2, 3]).unwrap();
        assert!(z.matrix().iter().all(|b| *b == Complex64::new(0.0, 0.0)));
        assert!(b_matrix(70.0, 0.35, 1.0, 0, &[0]).is_err());
        assert!(b_matrix(70.0, 0.35, 1.0, 10, &[0, 0]).is_err());
    }

    #[test]
    fn hermitian_and_bounded() {
        let m = b_matrix(40.0, 0.35, 0.5, 50, &[-7, -1, 0, 4, 6]).unwrap();
        let b = m.matrix();
        assert!((b - b.adjoint()).norm() < 1e-12);
        for &k in m.ks() {
            for &l in m.ks() {
                let c = m.c(k, l).unwrap();
                assert!(c > 0.0 && c <= 1.0);
            }
        }
    }

    #[test]
    fn single_step_closed_form() {
        // N = 1: B = α²(1 − A²)(e^{i(k−l)θ} − 1)
        let (a, t, g) = (3.0, 0.4, 0.7);
        let m = b_matrix(a, t, g, 1, &[0, 2]).unwrap();
        let want = a * a * (1.0 - (-g as f64).exp()) * (Complex64::from_polar(1.0, -2.0 * t) - 1.0);
        assert!((m.b(0, 2).unwrap() - want).norm() < 1e-14);
    }
}
