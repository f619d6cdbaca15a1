use num_complex::Complex64;
use serde::Serialize;

use super::density::DensityOperator;
use crate::dfs_gates::{GateKind, GateProbes, LogicalGate, Step};
use crate::error::{DfsError, Result};
use crate::kerr_homodyne::DecisionGeometry;

pub const DEFAULT_ALPHA: f64 = 70.0;
pub const DEFAULT_THETA: f64 = 0.35;
pub const DEFAULT_STEPS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SurfacePoint {
    pub delta_over_d: f64,
    pub gamma_t: f64,
    pub alpha: f64,
    pub theta: f64,
    pub n_steps: usize,
    pub fidelity: f64,
}

/// Equal-weight superposition of every logical basis state.
pub fn uniform_input(kind: GateKind) -> Vec<Complex64> {
    let dim = 1usize << kind.qubit_count();
    vec![Complex64::new(1.0 / (dim as f64).sqrt(), 0.0); dim]
}

/// Conditional fidelity of a gate whose every readout lands `δ/d` of the way
/// from the class-0 peak towards its nearest neighbour, with probe loss.
///
/// Each stage reads `x = m₀ − (δ/d)·d` (`d` half the gap from class 0 to the
/// next class mean), conditions the density on it and applies the class-0
/// correction.
pub fn lossy_gate_fidelity(
    gate: &LogicalGate,
    input: &[Complex64],
    probes: &GateProbes,
    delta_over_d: f64,
    n_steps: usize,
) -> Result<f64> {
    if !(0.0..1.0).contains(&delta_over_d) {
        return Err(DfsError::Domain(format!("delta/d must lie in [0, 1), got {delta_over_d}")));
    }
    if probes.kind() != gate.kind() {
        return Err(DfsError::Invalid(format!("{} probes given to {}", probes.kind(), gate.kind())));
    }
    let state = gate.encode(input)?;
    gate.validate_input(&state)?;
    let ideal = gate.ideal_output(input)?;
    let mut rho = DensityOperator::from_pure(&state);
    let mut stage = 0;
    for step in gate.circuit().steps() {
        match step {
            Step::Apply(e) => rho = rho.apply(e)?,
            Step::Measure(m) => {
                let probe = &probes.stages()[stage];
                let geometry = DecisionGeometry::new(probe, m.classes())?;
                let m0 = probe.class_mean(0);
                let x = match geometry.half_distance(0) {
                    Some(d) => m0 - delta_over_d * d,
                    None => m0,
                };
                rho = rho.measure_probe(&m.coupling, probe, n_steps, x)?;
                for op in m.feed_forward.get(&0).into_iter().flatten() {
                    if let Some(e) = op.element(x, probe) {
                        rho = rho.apply(&e)?;
                    }
                }
                stage += 1;
            }
        }
    }
    rho.fidelity(&ideal)
}

/// Fidelity on a `(γt, δ/d)` grid, rows ordered by `γt` then `δ/d`.
pub fn fidelity_surface(
    kind: GateKind,
    alpha: f64,
    theta: f64,
    gamma_grid: &[f64],
    delta_grid: &[f64],
    n_steps: usize,
) -> Result<Vec<SurfacePoint>> {
    if gamma_grid.is_empty() || delta_grid.is_empty() {
        return Err(DfsError::Invalid("surface grids must be non-empty".into()));
    }
    surface_grid(gamma_grid, delta_grid)?
        .into_iter()
        .map(|(g, dd)| surface_point(kind, alpha, theta, g, dd, n_steps))
        .collect()
}

/// Sorted `(γt, δ/d)` grid points; rejects `δ/d` outside `[0, 1)`.
pub fn surface_grid(gamma_grid: &[f64], delta_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if let Some(bad) = delta_grid.iter().find(|d| !(0.0..1.0).contains(*d)) {
        return Err(DfsError::Domain(format!("delta/d must lie in [0, 1), got {bad}")));
    }
    let mut gs = gamma_grid.to_vec();
    let mut ds = delta_grid.to_vec();
    gs.sort_by(f64::total_cmp);
    ds.sort_by(f64::total_cmp);
    Ok(gs.iter().flat_map(|&g| ds.iter().map(move |&d| (g, d))).collect())
}

pub fn surface_point(
    kind: GateKind,
    alpha: f64,
    theta: f64,
    gamma_t: f64,
    delta_over_d: f64,
    n_steps: usize,
) -> Result<SurfacePoint> {
    let gate = LogicalGate::new(kind)?;
    let probes = GateProbes::uniform(kind, alpha, theta, gamma_t)?;
    let fidelity = lossy_gate_fidelity(&gate, &uniform_input(kind), &probes, delta_over_d, n_steps)?;
    Ok(SurfacePoint { delta_over_d, gamma_t, alpha, theta, n_steps, fidelity })
}

/// Formats `x` with 12 significant digits.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.11e}")
    }
}

pub const SURFACE_HEADER: &str = "delta_over_d,gamma_t,alpha,theta,N,fidelity";

pub fn surface_csv(points: &[SurfacePoint]) -> String {
    let mut out = String::from(SURFACE_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            format_sig(p.delta_over_d),
            format_sig(p.gamma_t),
            format_sig(p.alpha),
            format_sig(p.theta),
            p.n_steps,
            format_sig(p.fidelity)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig_formatting() {
        assert_eq!(format_sig(1.0), "1");
        assert_eq!(format_sig(0.35), "0.35");
        assert_eq!(format_sig(0.123456789012345), "0.123456789012");
        assert_eq!(format_sig(70.0), "70");
        assert_eq!(format_sig(1.5e-9), "1.50000000000e-9");
        assert_eq!(format_sig(0.0), "0");
    }

    #[test]
    fn grid_order_and_domain() {
        let g = surface_grid(&[1.0, 0.0], &[0.5, 0.0]).unwrap();
        assert_eq!(g, vec![(0.0, 0.0), (0.0, 0.5), (1.0, 0.0), (1.0, 0.5)]);
        assert!(surface_grid(&[0.0], &[1.0]).is_err());
    }
}
