use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use qdsim::lattice::{Boundary, Lattice};
use qdsim::protocols::{CorrectionPolicy, QuantumDouble, Session};
use qdsim::state::Layout;
use qdsim::toric::{
    fig3_lattice, phase_distance, reference_phase_experiment, AncillaState, Fig3Config, Pauli, Stabilizer, ToricCode,
    ToricSession,
};
use qdsim::{FiniteGroup, IrrepLabel, Mode, SparseState};

fn prepared(code: &ToricCode) -> ToricSession {
    let mut s = ToricSession::new(code.clone(), Mode::branch());
    s.prepare_toric_code().unwrap();
    s
}

/// `Π_v (1 + A_v)|0…0⟩`, normalized, built from bit masks.
fn projector_oracle(code: &ToricCode) -> SparseState {
    let mut s = code.vacuum();
    for v in code.lattice().stabilizer_vertices() {
        let (_, edges) = code.support(Stabilizer::Vertex(v)).unwrap();
        let mask: u128 = edges.iter().fold(0, |m, &e| m | (1 << e));
        let amps: Vec<_> = s.entries().iter().flat_map(|&(k, a)| [(k, a), (k ^ mask, a)]).collect();
        s = SparseState::from_amplitudes(s.layout().clone(), amps);
        s.normalize().unwrap();
    }
    s
}

fn code_only(state: &SparseState, num_edges: usize) -> SparseState {
    state
        .restrict_to_prefix(Arc::new(Layout::uniform(num_edges, 2).unwrap()))
        .unwrap()
}

#[test]
fn preparation_matches_projector_formula() {
    for boundary in [Boundary::RoughSmooth, Boundary::Open] {
        for (n, m) in [(2, 2), (3, 2), (3, 3)] {
            let code = ToricCode::new(Lattice::new(n, m, boundary).unwrap()).unwrap();
            let s = prepared(&code);
            let oracle = projector_oracle(&code);
            assert!(s.state.max_amplitude_diff(&oracle) < 1e-12, "{boundary} {n}x{m}");
            for (label, x) in code.stabilizer_table(&s.state).unwrap() {
                assert!((x - 1.0).abs() < 1e-10, "{label}");
            }
        }
    }
}

#[test]
fn every_preparation_branch_converges() {
    let code = ToricCode::new(fig3_lattice()).unwrap();
    let oracle = projector_oracle(&code);
    let steps = ToricSession::new(code.clone(), Mode::branch())
        .preparation_schedule()
        .unwrap()
        .len();
    let mut seen = 0;
    for bits in 0u32..(1 << steps) {
        let mut s = ToricSession::new(code.clone(), Mode::branch());
        match s.prepare_with(|i| Some(((bits >> i) & 1) as usize)) {
            Ok(()) => {
                seen += 1;
                assert!(s.state.max_amplitude_diff(&oracle) < 1e-12, "branch {bits:b}");
            }
            Err(qdsim::Error::ZeroProbability { .. }) => {}
            Err(e) => panic!("{e}"),
        }
    }
    assert!(seen > 1);
}

#[test]
fn stabilizer_measurements_on_product_state() {
    let code = ToricCode::new(Lattice::new(3, 3, Boundary::Open).unwrap()).unwrap();
    let centre = code.lattice().vertex(1, 1).unwrap();
    let mut s = ToricSession::new(code.clone(), Mode::branch());
    for f in 0..code.lattice().num_faces() {
        let (sign, out) = s.measure_stabilizer(Stabilizer::Plaquette(f)).unwrap();
        assert_eq!(sign, 1);
        assert!((out.probability - 1.0).abs() < 1e-12);
    }
    let a = code.ancilla("a").unwrap();
    let mut probe = ToricSession::new(code.clone(), Mode::branch());
    let (_, edges) = code.support(Stabilizer::Vertex(centre)).unwrap();
    probe.prepare_ancilla("a", AncillaState::Plus).unwrap();
    for e in edges {
        qdsim::toric::controlled_pauli(&mut probe.state, a, e, Pauli::X).unwrap();
    }
    let p = probe.state.outcome_probabilities(a, &qdsim::Basis::fourier(2)).unwrap();
    assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
}

#[test]
fn strings_create_defects_at_their_ends() {
    let code = ToricCode::new(Lattice::new(3, 3, Boundary::Open).unwrap()).unwrap();
    let lat = code.lattice().clone();
    let gs = prepared(&code);
    let mut s = gs.clone();
    s.apply_string(Pauli::Z, &[lat.horizontal(1, 0).unwrap()]).unwrap();
    for v in lat.stabilizer_vertices() {
        let x = code.stabilizer_expectation(&s.state, Stabilizer::Vertex(v)).unwrap();
        let end = v == lat.vertex(1, 0).unwrap() || v == lat.vertex(1, 1).unwrap();
        assert!((x - if end { -1.0 } else { 1.0 }).abs() < 1e-10);
    }
    let face = lat.face(0, 0).unwrap();
    let mut loop_state = gs.clone();
    let cycle: Vec<_> = lat.face_cycle(face).unwrap().iter().map(|x| x.0).collect();
    loop_state.apply_string(Pauli::Z, &cycle).unwrap();
    assert!(loop_state.state.max_amplitude_diff(&gs.state) < 1e-12);
    let mut twice = gs.clone();
    let path = [lat.vertical(0, 1).unwrap(), lat.vertical(1, 1).unwrap()];
    twice.apply_string(Pauli::X, &path).unwrap();
    assert!(
        code.stabilizer_expectation(&twice.state, Stabilizer::Plaquette(face))
            .unwrap()
            < -0.5
    );
    twice.apply_string(Pauli::X, &path).unwrap();
    assert!(twice.state.max_amplitude_diff(&gs.state) < 1e-12);
}

#[test]
fn magnetic_superposition_has_half_weight() {
    let code = ToricCode::new(fig3_lattice()).unwrap();
    let mut s = prepared(&code);
    let e = code.lattice().vertical(1, 0).unwrap();
    s.prepare_ancilla("A2", AncillaState::Plus).unwrap();
    s.controlled_pauli("A2", e, Pauli::X).unwrap();
    let f = code.lattice().face(1, 0).unwrap();
    let b = code.stabilizer_expectation(&s.state, Stabilizer::Plaquette(f)).unwrap();
    // ⟨B⟩ = P(vacuum) − P(defect)
    assert!(b.abs() < 1e-12);
}

#[test]
fn logical_operators() {
    let code = ToricCode::new(Lattice::new(3, 3, Boundary::RoughSmooth).unwrap()).unwrap();
    let mut s = prepared(&code);
    assert_eq!(s.measure_logical_z().unwrap().0, 1);
    s.apply_logical_x().unwrap();
    assert_eq!(s.measure_logical_z().unwrap().0, -1);
    let lat = code.lattice().clone();
    for row in 1..3 {
        let path: Vec<_> = (-1..3).map(|j| lat.horizontal(row, j).unwrap()).collect();
        assert_eq!(s.measure_string(Pauli::Z, &path).unwrap().0, -1);
    }
    s.apply_logical_x().unwrap();
    assert_eq!(s.measure_logical_z().unwrap().0, 1);
    let open = ToricCode::new(Lattice::new(3, 3, Boundary::Open).unwrap()).unwrap();
    assert!(prepared(&open).measure_logical_z().is_err());
}

#[test]
fn repeated_string_measurement_agrees() {
    let code = ToricCode::new(fig3_lattice()).unwrap();
    let lat = code.lattice().clone();
    let mut s = prepared(&code);
    s.apply_string(Pauli::X, &[lat.horizontal(0, 0).unwrap()]).unwrap();
    let (z, _) = lat.logical_paths().unwrap();
    s.mode = Mode::sample(7);
    let first = s.measure_string(Pauli::Z, &z).unwrap().0;
    for _ in 0..3 {
        assert_eq!(s.measure_string(Pauli::Z, &z).unwrap().0, first);
    }
}

#[test]
fn fig3_interferometer() {
    let code = ToricCode::new(fig3_lattice()).unwrap();
    assert!(code.lattice().num_faces() >= 4);
    let t = Instant::now();
    let mut main = prepared(&code);
    let r = main.interferometry_fig3(Fig3Config::default()).unwrap();
    assert!((r.p_minus - 1.0).abs() < 1e-10);
    assert!(phase_distance(r.ledger.phi_s, PI) < 1e-10);
    let out = main.measure_ancilla("A2", Pauli::X).unwrap();
    assert_eq!(out.outcome, 1);
    assert!(t.elapsed().as_secs_f64() < 1.0);

    let mut control = prepared(&code);
    let r = control
        .interferometry_fig3(Fig3Config {
            reference: true,
            ..Fig3Config::default()
        })
        .unwrap();
    assert!(r.p_minus < 1e-10);

    let mut twice = prepared(&code);
    let r = twice
        .interferometry_fig3(Fig3Config {
            windings: 2,
            ..Fig3Config::default()
        })
        .unwrap();
    assert!(r.p_minus < 1e-10);
}

#[test]
fn fig3_returns_code_to_ground_state() {
    let code = ToricCode::new(fig3_lattice()).unwrap();
    let mut s = prepared(&code);
    let gs = s.state.clone();
    s.interferometry_fig3(Fig3Config::default()).unwrap();
    s.measure_ancilla("A2", Pauli::X).unwrap();
    s.prepare_ancilla("A2", AncillaState::Zero).unwrap();
    s.prepare_ancilla("A1", AncillaState::Zero).unwrap();
    assert!((s.state.overlap(&gs).unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn reference_phase_sweep() {
    let lat = fig3_lattice();
    for u in [0.0, 0.5, 1.0, 2.0] {
        let r = reference_phase_experiment(&lat, u).unwrap();
        assert_eq!(r.t_braid, 4.0);
        assert!(phase_distance(r.phi_s, PI) < 1e-10, "U={u}");
        assert!(phase_distance(r.main_phase, PI + 4.0 * u * r.t_braid) < 1e-10);
        assert!(phase_distance(r.reference_phase, 4.0 * u * r.t_braid) < 1e-10);
    }
    assert!(reference_phase_experiment(&lat, -1.0).is_err());
}

#[test]
fn single_qubit_errors_are_corrected() {
    let code = ToricCode::new(fig3_lattice()).unwrap();
    let gs = prepared(&code);
    for kind in [Pauli::X, Pauli::Z] {
        for e in 0..code.lattice().num_edges() {
            let mut s = gs.clone();
            s.apply_string(kind, &[e]).unwrap();
            let fixes = s.error_correct().unwrap();
            assert_eq!(fixes, vec![(kind, e)]);
            assert!((s.state.overlap(&gs.state).unwrap() - 1.0).abs() < 1e-10);
            assert_eq!(s.measure_logical_z().unwrap().0, 1);
        }
    }
}

#[test]
fn z2_quantum_double_agrees_with_pauli_code() {
    for boundary in [Boundary::Open, Boundary::RoughSmooth] {
        let lat = Lattice::new(3, 3, boundary).unwrap();
        let ne = lat.num_edges();
        let code = ToricCode::new(lat.clone()).unwrap();
        let qd = QuantumDouble::new(FiniteGroup::z2(), lat.clone()).unwrap();

        let toric = prepared(&code);
        let mut double = Session::new(qd.clone(), Mode::sample(3));
        double.prepare_ground_state(CorrectionPolicy::PaperCorrection).unwrap();
        let t = code_only(&toric.state, ne);
        let d = code_only(&double.state, ne);
        assert!(t.max_amplitude_diff(&d) < 1e-12, "{boundary}: ground state");

        // electric pair vs Z string
        let path = [
            lat.vertex(1, 0).unwrap(),
            lat.vertex(1, 1).unwrap(),
            lat.vertex(2, 1).unwrap(),
        ];
        let mut t2 = toric.clone();
        t2.apply_string(Pauli::Z, &lat.path_edges(&path).unwrap()).unwrap();
        let mut d2 = double.clone();
        d2.create_electric_vacuum_pair(IrrepLabel::Sign, &path).unwrap();
        assert!(code_only(&t2.state, ne).max_amplitude_diff(&code_only(&d2.state, ne)) < 1e-12);

        // magnetic pair vs X on the shared edge
        let f0 = lat.face(0, 0).unwrap();
        let f1 = lat.face(0, 1).unwrap();
        let mut t3 = toric.clone();
        t3.apply_string(Pauli::X, &[lat.shared_edge(f0, f1).unwrap()]).unwrap();
        let mut d3 = double.clone();
        d3.create_magnetic_vacuum_pair(1, f0, f1).unwrap();
        assert!(code_only(&t3.state, ne).max_amplitude_diff(&code_only(&d3.state, ne)) < 1e-12);

        // gauge transformation vs the vertex operator
        let v = lat.vertex(1, 1).unwrap();
        let mut t4 = t3.clone();
        let (_, star) = code.support(Stabilizer::Vertex(v)).unwrap();
        t4.apply_string(Pauli::X, &star).unwrap();
        let mut d4 = d3.clone();
        d4.gauge_transform(v, 1).unwrap();
        assert!(code_only(&t4.state, ne).max_amplitude_diff(&code_only(&d4.state, ne)) < 1e-12);

        // stabilizer expectations: (1 + ⟨A⟩)/2 = ⟨A(v) projector⟩
        for v in lat.stabilizer_vertices() {
            let pa = code.stabilizer_expectation(&t3.state, Stabilizer::Vertex(v)).unwrap();
            let qa = qd.vertex_projector_expectation(&d3.state, v).unwrap();
            assert!(((1.0 + pa) / 2.0 - qa).abs() < 1e-12);
        }
    }
}
