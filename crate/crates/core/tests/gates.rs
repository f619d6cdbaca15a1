use dfs_kerr::dfs_gates::{
    cnot, enumerate_branches, Circuit, logical_basis_state, path_coupler, polarization_swap, random_logical_state, run_gate,
    CouplerMarker, GateKind, GateProbes, LogicalGate, PathCoupler, RunMode,
};
use dfs_kerr::kerr_homodyne::{MeasureMode, ProbeDescriptor};
use dfs_kerr::photonic_state::{fidelity_pure, BasisTerm, LogicalQubit, PhotonicState, Polarization};
use dfs_kerr::{Complex64, DfsError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn probes(kind: GateKind) -> GateProbes {
    GateProbes::uniform(kind, 70.0, 0.35, 0.0).unwrap()
}

fn check_all_branches(kind: GateKind, coeffs: &[Complex64]) {
    let gate = LogicalGate::new(kind).unwrap();
    let input = gate.encode(coeffs).unwrap();
    let report = run_gate(&gate, &input, &probes(kind), RunMode::Enumerated).unwrap();
    assert!((report.total_probability() - 1.0).abs() < 1e-9, "{kind}: total {}", report.total_probability());
    for b in &report.branches {
        assert!(b.fidelity >= 1.0 - 1e-9, "{kind} {:?}: fidelity {}", b.classes, b.fidelity);
    }
}

#[test]
fn every_gate_on_basis_states() {
    for kind in GateKind::ALL {
        let dim = 1 << kind.qubit_count();
        for i in 0..dim {
            check_all_branches(kind, &logical_basis_state(dim, i));
        }
    }
}

#[test]
fn every_gate_on_random_superpositions() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for kind in GateKind::ALL {
        for _ in 0..5 {
            let v = random_logical_state(kind.qubit_count(), &mut rng);
            check_all_branches(kind, &v);
        }
    }
}

#[test]
fn cnot_flips_target_when_control_set() {
    let gate = LogicalGate::new(GateKind::Cnot).unwrap();
    let input = gate.encode(&logical_basis_state(4, 2)).unwrap();
    let report = cnot(&input, &probes(GateKind::Cnot), RunMode::Enumerated).unwrap();
    let expected = gate.encode(&logical_basis_state(4, 3)).unwrap();
    for o in enumerate_branches(GateKind::Cnot, &input, &probes(GateKind::Cnot)).unwrap() {
        assert!((fidelity_pure(&o.output_state, &expected).unwrap() - 1.0).abs() < 1e-12);
    }
    assert!(report.worst_fidelity > 1.0 - 1e-12);
}

#[test]
fn cnot_has_sixteen_branches_for_generic_input() {
    let gate = LogicalGate::new(GateKind::Cnot).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let product = [c(h * h, 0.0); 4];
    let outcomes = gate.enumerate_branches(&gate.encode(&product).unwrap(), &probes(GateKind::Cnot)).unwrap();
    assert_eq!(outcomes.len(), 16);
}

#[test]
fn zero_probability_classes_are_omitted() {
    // a bare controlled stage (no splitters) on |0̄⟩|0̄⟩ only ever reads class 0
    let gate = LogicalGate::new(GateKind::Cnot).unwrap();
    let stage = gate.circuit().stages().next().unwrap().clone();
    let mut circuit = Circuit::new();
    circuit.measure(stage);
    let zero = gate.encode(&logical_basis_state(4, 0)).unwrap();
    let probe = ProbeDescriptor::new(70.0, 0.35, 0.0).unwrap();
    let outcomes = circuit.run_enumerated(&zero, &[probe]).unwrap();
    assert_eq!(outcomes.len(), 1);
    assert_eq!(outcomes[0].class_sequence, vec![0]);
    assert_eq!(outcomes[0].probability, 1.0);
}

#[test]
fn off_peak_readouts_are_compensated() {
    // x away from the class mean exercises the phase modulation
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for kind in GateKind::ALL {
        let gate = LogicalGate::new(kind).unwrap();
        let v = random_logical_state(kind.qubit_count(), &mut rng);
        let input = gate.encode(&v).unwrap();
        let ideal = gate.ideal_output(&v).unwrap();
        let p = probes(kind);
        for o in gate.enumerate_branches(&input, &p).unwrap() {
            let readouts: Vec<(u32, Option<f64>)> = o
                .class_sequence
                .iter()
                .zip(p.stages())
                .map(|(&k, probe)| (k, Some(probe.class_mean(k as i32) + 0.37)))
                .collect();
            let b = gate.run_projected(&input, &p, &readouts).unwrap();
            let f = fidelity_pure(&b.output_state, &ideal).unwrap();
            assert!(f > 1.0 - 1e-9, "{kind} {:?}: {f}", o.class_sequence);
        }
    }
}

#[test]
fn outputs_on_canonical_paths_and_in_dfs() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for kind in GateKind::ALL {
        let gate = LogicalGate::new(kind).unwrap();
        let v = random_logical_state(kind.qubit_count(), &mut rng);
        for o in gate.enumerate_branches(&gate.encode(&v).unwrap(), &probes(kind)).unwrap() {
            o.output_state.check_dfs(gate.qubits()).unwrap();
            for (t, _) in o.output_state.terms() {
                assert_eq!(t.paths(), gate.canonical_paths());
            }
        }
    }
}

#[test]
fn non_dfs_input_rejected() {
    let gate = LogicalGate::new(GateKind::Cnot).unwrap();
    let t: BasisTerm = "HHHV|C2,C1,T1,T4|0".parse().unwrap();
    let s = PhotonicState::from_terms(gate.photons(), [(t, c(1.0, 0.0))]).unwrap();
    let err = cnot(&s, &probes(GateKind::Cnot), RunMode::Enumerated).unwrap_err();
    assert!(matches!(err, DfsError::OutsideDfs(_)));
}

#[test]
fn sampled_runs_succeed_with_strong_probe() {
    let gate = LogicalGate::new(GateKind::Fredkin).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let v = random_logical_state(3, &mut rng);
    let input = gate.encode(&v).unwrap();
    let p = GateProbes::uniform(GateKind::Fredkin, 1000.0, 0.35, 0.0).unwrap();
    for _ in 0..20 {
        let r = run_gate(&gate, &input, &p, RunMode::Sampled(&mut rng)).unwrap();
        assert_eq!(r.success, Some(true));
        assert!(r.worst_fidelity > 1.0 - 1e-9);
    }
}

fn coupler_input(b1: Complex64, b2: Complex64, d1: Complex64, d2: Complex64) -> PhotonicState {
    // (β1|0̄⟩ + β2|1̄⟩) with the target on T1,T4 for |0̄⟩ and T2,T3 for |1̄⟩
    let mut terms = Vec::new();
    for (ctrl, b, paths) in [(false, b1, "C2,C1,T1,T4"), (true, b2, "C2,C1,T2,T3")] {
        for (tgt, d) in [(false, d1), (true, d2)] {
            let (a, bb) = LogicalQubit::encoding(ctrl);
            let (cc, dd) = LogicalQubit::encoding(tgt);
            let pols: String = [a, bb, cc, dd].iter().map(|p| p.symbol()).collect();
            terms.push((format!("{pols}|{paths}|0").parse::<BasisTerm>().unwrap(), b * d));
        }
    }
    PhotonicState::from_terms(&["A", "B", "C", "D"], terms).unwrap()
}

#[test]
fn coupler_merges_paths() {
    let coupler = PathCoupler::standard("c", CouplerMarker::new("A", "C1", "C2"), ("C", "T1", "T2"), ("D", "T3", "T4"));
    let (b1, b2, d1, d2) = (c(0.6, 0.0), c(0.0, 0.8), c(0.28, 0.96), c(0.0, 0.0));
    let input = coupler_input(b1, b2, d1, d2);
    let expected = coupler_input(b1, b2, d1, d2);
    let expected_terms: Vec<(BasisTerm, Complex64)> = expected
        .terms()
        .map(|(t, a)| {
            let paths = ["C2", "C1", "T1", "T4"].map(dfs_kerr::photonic_state::PathId::new);
            (BasisTerm::new(t.pols(), &paths, 0).unwrap(), *a)
        })
        .collect();
    let expected = PhotonicState::from_terms(&["A", "B", "C", "D"], expected_terms).unwrap();
    let probe = ProbeDescriptor::new(70.0, 0.35, 0.0).unwrap();
    let mut total = 0.0;
    for class in [0, 2, 3, 5] {
        let (out, outcome) = path_coupler(&input, &coupler, probe, MeasureMode::Enumerated(class)).unwrap();
        total += outcome.probability;
        assert!((fidelity_pure(&out, &expected).unwrap() - 1.0).abs() < 1e-12, "class {class}");
    }
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn coupler_rejects_malformed_input() {
    let coupler = PathCoupler::standard("c", CouplerMarker::new("A", "C1", "C2"), ("C", "T1", "T2"), ("D", "T3", "T4"));
    let t: BasisTerm = "VHHV|C2,C1,T1,T4|0".parse().unwrap();
    let s = PhotonicState::from_terms(&["A", "B", "C", "D"], [(t, c(1.0, 0.0))]).unwrap();
    let probe = ProbeDescriptor::new(70.0, 0.35, 0.0).unwrap();
    let err = path_coupler(&s, &coupler, probe, MeasureMode::Enumerated(0)).unwrap_err();
    assert!(matches!(err, DfsError::MalformedBranches(_)));
}

#[test]
fn polarization_swap_exchanges_single_photon_states() {
    let (x1, x2) = (c(0.6, 0.0), c(0.0, 0.8));
    let (e1, e2) = (c(0.8, 0.0), c(0.6, 0.0));
    let mk = |a1: Complex64, a2: Complex64, b1: Complex64, b2: Complex64| {
        let mut terms = Vec::new();
        for (p, a) in [(Polarization::H, a1), (Polarization::V, a2)] {
            for (q, b) in [(Polarization::H, b1), (Polarization::V, b2)] {
                let paths = ["i1", "i2"].map(dfs_kerr::photonic_state::PathId::new);
                terms.push((BasisTerm::new(&[p, q], &paths, 0).unwrap(), a * b));
            }
        }
        PhotonicState::from_terms(&["1", "2"], terms).unwrap()
    };
    let swapped = polarization_swap(&mk(x1, x2, e1, e2), "1", "2").unwrap();
    assert!((fidelity_pure(&swapped, &mk(e1, e2, x1, x2)).unwrap() - 1.0).abs() < 1e-12);
    let twice = polarization_swap(&swapped, "1", "2").unwrap();
    assert!((fidelity_pure(&twice, &mk(x1, x2, e1, e2)).unwrap() - 1.0).abs() < 1e-12);
    assert!(polarization_swap(&swapped, "1", "1").is_err());
}

#[test]
fn report_json_shape() {
    let gate = LogicalGate::new(GateKind::Cnot).unwrap();
    let input = gate.encode(&logical_basis_state(4, 1)).unwrap();
    let report = run_gate(&gate, &input, &probes(GateKind::Cnot), RunMode::Enumerated).unwrap();
    let v: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(v["gate"], "cnot");
    assert_eq!(v["input"][1], serde_json::json!([1.0, 0.0]));
    assert!(v.get("success").is_none());
    let labels: Vec<&str> = v["stages"].as_array().unwrap().iter().map(|s| s["label"].as_str().unwrap()).collect();
    assert_eq!(labels, ["cnot", "coupler"]);
    let p = v["p_analytic"].as_f64().unwrap();
    assert!((p - report.p_analytic).abs() == 0.0 && p > 0.999);
    for b in v["branches"].as_array().unwrap() {
        assert_eq!(b["classes"].as_array().unwrap().len(), 2);
    }
}
