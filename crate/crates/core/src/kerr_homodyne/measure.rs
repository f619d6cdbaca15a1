use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::Serialize;
use smallvec::smallvec;

use super::{classify, gaussian_amplitude, phase_unreduced, DecisionGeometry, ProbeDescriptor};
use crate::error::{DfsError, Result};
use crate::photonic_state::PhotonicState;

/// How the probe's X quadrature is read out.
pub enum MeasureMode<'a> {
    /// Draw `x` from the outcome distribution and collapse physically.
    Sampled(&'a mut dyn RngCore),
    /// Project onto one class, reading `x` at that class's mean.
    Enumerated(u32),
    /// Project onto one class at a caller-chosen `x`.
    Projected { class: u32, x: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomodyneRecord {
    pub x: f64,
    pub chosen_class: u32,
    pub class_probability: f64,
    pub delta_over_d: f64,
    /// Class the sample was drawn from (sampled mode only).
    pub true_class: Option<u32>,
}

/// Total probability carried by each `|k|` of the active probe.
pub fn class_weights(state: &PhotonicState) -> Result<BTreeMap<u32, f64>> {
    if state.probe().is_none() {
        return Err(DfsError::NoProbe);
    }
    let norm = state.norm_sqr();
    let mut w = BTreeMap::new();
    for (t, a) in state.terms() {
        *w.entry(t.probe_k().unsigned_abs()).or_insert(0.0) += a.norm_sqr() / norm;
    }
    Ok(w)
}

/// Reads out the probe, returning the post-measurement state (probe
/// detached, all probe indices reset to zero) and the outcome record.
pub fn measure_probe(state: &PhotonicState, mode: MeasureMode<'_>) -> Result<(PhotonicState, HomodyneRecord)> {
    let probe = state.probe().ok_or(DfsError::NoProbe)?.clone();
    let desc = probe.descriptor;
    let geometry = probe.geometry()?;
    let weights = class_weights(state)?;
    let weight = |c: u32| weights.get(&c).copied().unwrap_or(0.0);

    let (collapsed, x, chosen, true_class) = match mode {
        MeasureMode::Enumerated(class) => {
            let x = desc.class_mean(class as i32);
            (project(state, class, x, &desc)?, x, class, None)
        }
        MeasureMode::Projected { class, x } => (project(state, class, x, &desc)?, x, class, None),
        MeasureMode::Sampled(rng) => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut drawn = *weights.keys().next_back().ok_or(DfsError::EmptyClass(0))?;
            for (&c, &w) in &weights {
                acc += w;
                if u < acc {
                    drawn = c;
                    break;
                }
            }
            let z: f64 = rng.sample(StandardNormal);
            let x = desc.class_mean(drawn as i32) + z;
            let chosen = classify(x, &geometry);
            let collapsed = state.map_terms(|t, a| {
                let k = t.probe_k();
                let f = gaussian_amplitude(x, k, &desc);
                smallvec![(t.clone(), a * Complex64::from_polar(f, phase_unreduced(x, k, &desc)))]
            });
            (collapsed.normalized()?, x, chosen, Some(drawn))
        }
    };

    let mut out = collapsed.map_terms(|t, a| smallvec![(t.with_probe_k(0), a)]);
    out.set_probe(None);
    let record = HomodyneRecord {
        x,
        chosen_class: chosen,
        class_probability: weight(chosen),
        delta_over_d: offset_ratio(&geometry, chosen, x, &desc),
        true_class,
    };
    Ok((out, record))
}

fn project(state: &PhotonicState, class: u32, x: f64, desc: &ProbeDescriptor) -> Result<PhotonicState> {
    let kept = state.retain_terms(|t| t.probe_k().unsigned_abs() == class);
    if kept.is_empty() {
        return Err(DfsError::EmptyClass(class));
    }
    let phased = kept.map_terms(|t, a| {
        smallvec![(t.clone(), a * Complex64::from_polar(1.0, phase_unreduced(x, t.probe_k(), desc)))]
    });
    phased.normalized()
}

fn offset_ratio(geometry: &DecisionGeometry, class: u32, x: f64, desc: &ProbeDescriptor) -> f64 {
    match geometry.half_distance(class) {
        Some(d) if d > 0.0 => (x - desc.class_mean(class as i32)).abs() / d,
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kerr_homodyne::{attach_probe, pairwise_error_probability, phase_mod_value, KerrCoupling};
    use crate::photonic_state::{BasisTerm, LogicalQubit};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn two_path_state(a_up: f64, a_down: f64) -> PhotonicState {
        let up: BasisTerm = "H|T1|0".parse().unwrap();
        let down: BasisTerm = "H|T2|0".parse().unwrap();
        PhotonicState::from_terms(&["C"], [(up, c(a_up)), (down, c(a_down))]).unwrap()
    }

    #[test]
    fn attach_sets_indices() {
        let s = two_path_state(0.6, 0.8);
        let p = ProbeDescriptor::new(30.0, 0.3, 0.0).unwrap();
        let probed = attach_probe(&s, p, KerrCoupling::from_triples(&[("C", "T2", 1)]).unwrap()).unwrap();
        let ks: Vec<i32> = probed.terms().map(|(t, _)| t.probe_k()).collect();
        assert_eq!(ks, vec![0, 1]);
        let again = attach_probe(&probed, p, KerrCoupling::from_triples(&[("C", "T2", 1)]).unwrap());
        assert_eq!(again.unwrap_err(), DfsError::ProbeActive);
        let bad = attach_probe(&s, p, KerrCoupling::from_triples(&[("C", "T9", 1)]).unwrap());
        assert!(matches!(bad, Err(DfsError::UnknownPath(_))));
    }

    #[test]
    fn no_probe_is_state_error() {
        let s = two_path_state(1.0, 0.0);
        let err = measure_probe(&s, MeasureMode::Enumerated(0)).unwrap_err();
        assert_eq!(err, DfsError::NoProbe);
        assert_eq!(err.kind(), crate::error::ErrorKind::State);
    }

    #[test]
    fn single_class_state_is_unchanged() {
        let s = PhotonicState::init_register(
            &["A", "B"],
            &[(LogicalQubit::new("A", "B"), c(0.6), Complex64::new(0.0, 0.8))],
            &["C1", "C2"],
        )
        .unwrap();
        let p = ProbeDescriptor::new(20.0, 0.4, 0.0).unwrap();
        let coupling = KerrCoupling::from_triples(&[("A", "C2", 1)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let probed = attach_probe(&s, p, coupling.clone()).unwrap();
            let (out, rec) = measure_probe(&probed, MeasureMode::Sampled(&mut rng)).unwrap();
            assert_eq!(rec.chosen_class, 0);
            assert_eq!(rec.class_probability, 1.0);
            let f = crate::photonic_state::fidelity_pure(&s, &out).unwrap();
            assert!((f - 1.0).abs() < 1e-12);
            assert!(out.probe().is_none());
        }
    }

    #[test]
    fn enumerated_projection_and_empty_class() {
        let s = two_path_state(0.6, 0.8);
        let p = ProbeDescriptor::new(30.0, 0.3, 0.0).unwrap();
        let probed = attach_probe(&s, p, KerrCoupling::from_triples(&[("C", "T2", 2)]).unwrap()).unwrap();
        let (out, rec) = measure_probe(&probed, MeasureMode::Enumerated(2)).unwrap();
        assert!((rec.class_probability - 0.64).abs() < 1e-15);
        assert_eq!(rec.delta_over_d, 0.0);
        assert_eq!(out.dump(), "H|T2|0|1.0|0.0\n");
        let err = measure_probe(&probed, MeasureMode::Enumerated(1)).unwrap_err();
        assert_eq!(err, DfsError::EmptyClass(1));
    }

    #[test]
    fn plus_minus_pair_relative_phase() {
        let s = two_path_state(FRAC, FRAC);
        let p = ProbeDescriptor::new(30.0, 0.3, 0.0).unwrap();
        let coupling = KerrCoupling::from_triples(&[("C", "T1", -2), ("C", "T2", 2)]).unwrap();
        let probed = attach_probe(&s, p, coupling).unwrap();
        let x = p.class_mean(2) + 0.41;
        let (out, _) = measure_probe(&probed, MeasureMode::Projected { class: 2, x }).unwrap();
        let up = out.amplitude(&"H|T1|0".parse().unwrap());
        let down = out.amplitude(&"H|T2|0".parse().unwrap());
        let rel = (down / up).arg().rem_euclid(std::f64::consts::TAU);
        let want = (2.0 * phase_mod_value(x, 2, &p)).rem_euclid(std::f64::consts::TAU);
        assert!((rel - want).abs() < 1e-9, "{rel} vs {want}");
    }

    const FRAC: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn sampled_error_rate_two_classes() {
        let s = two_path_state(FRAC, FRAC);
        let p = ProbeDescriptor::new(8.0, 0.5, 0.0).unwrap();
        let coupling = KerrCoupling::from_triples(&[("C", "T2", 1)]).unwrap();
        let probed = attach_probe(&s, p, coupling).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut errors = 0u32;
        for _ in 0..n {
            let (_, rec) = measure_probe(&probed, MeasureMode::Sampled(&mut rng)).unwrap();
            if Some(rec.chosen_class) != rec.true_class {
                errors += 1;
            }
        }
        let expected = pairwise_error_probability(p.class_mean(0) - p.class_mean(1));
        let sigma = (expected * (1.0 - expected) / n as f64).sqrt();
        let rate = errors as f64 / n as f64;
        assert!((rate - expected).abs() <= 3.0 * sigma, "rate {rate} expected {expected} ± {sigma}");
    }
}
