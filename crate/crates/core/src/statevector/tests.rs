use std::f64::consts::PI;

use super::*;
use crate::pauli::Pauli;
use crate::scalar::c;

type C64 = Complex<f64>;

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() < tol
}

/// Embed single-qubit operators (one per qubit, `None` = identity) by explicit
/// Kronecker products; qubit 0 is the fastest index.
fn embed(n: usize, ops: &[(usize, CMatrix<f64>)]) -> CMatrix<f64> {
    let mut full = CMatrix::<f64>::identity(1);
    for q in (0..n).rev() {
        let factor = ops
            .iter()
            .find(|(t, _)| *t == q)
            .map(|(_, m)| m.clone())
            .unwrap_or_else(|| CMatrix::identity(2));
        full = full.kron(&factor);
    }
    full
}

fn pauli_matrix(p: Pauli) -> CMatrix<f64> {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    let data = match p {
        Pauli::X => vec![z, o, o, z],
        Pauli::Y => vec![z, -i, i, z],
        Pauli::Z => vec![o, z, z, -o],
    };
    CMatrix::from_vec(2, 2, data).unwrap()
}

/// Dense unitary of a gate on an `n`-qubit register built only from Kronecker
/// products of 2x2 blocks.
fn dense_gate(n: usize, op: &GateOp, theta: f64) -> CMatrix<f64> {
    match op.kind {
        GateKind::Rzz => {
            let zz = embed(
                n,
                &[
                    (op.targets[0], pauli_matrix(Pauli::Z)),
                    (op.targets[1], pauli_matrix(Pauli::Z)),
                ],
            );
            CMatrix::identity(1 << n)
                .scale(c(theta.cos(), 0.0))
                .add(&zz.scale(c(0.0, -theta.sin())))
        }
        GateKind::Cnot => {
            let p0 = CMatrix::from_real_diag(&[1.0, 0.0]);
            let p1 = CMatrix::from_real_diag(&[0.0, 1.0]);
            embed(n, &[(op.targets[0], p0)]).add(&embed(
                n,
                &[(op.targets[0], p1), (op.targets[1], pauli_matrix(Pauli::X))],
            ))
        }
        kind => embed(n, &[(op.targets[0], gate_unitary(kind, theta))]),
    }
}

fn random_circuit(n: usize, gates: usize, rng: &mut SeededRng) -> Circuit {
    let mut circ = Circuit::new(n);
    for _ in 0..gates {
        let kind = GateKind::ALL[rng.below(GateKind::ALL.len())];
        let a = rng.below(n);
        let targets = if kind.arity() == 2 {
            if n < 2 {
                continue;
            }
            let mut b = rng.below(n - 1);
            if b >= a {
                b += 1;
            }
            vec![a, b]
        } else {
            vec![a]
        };
        if kind.is_rotation() {
            circ.push_param(kind, &targets).unwrap();
        } else {
            circ.push_gate(kind, &targets).unwrap();
        }
    }
    circ
}

fn random_params(circ: &Circuit, rng: &mut SeededRng) -> Vec<f64> {
    (0..circ.num_params()).map(|_| rng.uniform_in(-PI, PI)).collect()
}

fn random_state(n: usize, rng: &mut SeededRng) -> StateVector<f64> {
    StateVector::from_amplitudes(rng.unit_vector(1 << n)).unwrap()
}

#[test]
fn basis_state_bit_order() {
    let s = init_basis_state::<f64>(2, "00").unwrap();
    assert_eq!(s.amplitudes()[0], c(1.0, 0.0));
    let s = init_basis_state::<f64>(2, "11").unwrap();
    assert_eq!(s.amplitudes()[3], c(1.0, 0.0));
    let s = init_basis_state::<f64>(3, "100").unwrap();
    assert_eq!(s.amplitudes()[4], c(1.0, 0.0));
    assert!(init_basis_state::<f64>(3, "10").is_err());
    assert!(init_basis_state::<f64>(2, "1x").is_err());
}

#[test]
fn rx_pi_flips_with_phase() {
    let mut circ = Circuit::new(1);
    circ.push_fixed(GateKind::Rx, &[0], PI).unwrap();
    let out = apply_circuit(&StateVector::<f64>::zero_state(1), &circ, &[]).unwrap();
    assert!(close(out.amplitudes()[0], c(0.0, 0.0), 1e-15));
    assert!(close(out.amplitudes()[1], c(0.0, -1.0), 1e-15));
}

#[test]
fn rzz_phase_on_even_parity() {
    let theta = 0.731;
    let mut circ = Circuit::new(2);
    circ.push_param(GateKind::Rzz, &[0, 1]).unwrap();
    let out = apply_circuit(&StateVector::<f64>::zero_state(2), &circ, &[theta]).unwrap();
    assert!(close(out.amplitudes()[0], c((-theta).cos(), (-theta).sin()), 1e-15));
}

#[test]
fn parameter_count_checked() {
    let circ = hardware_efficient_ansatz(2, 1).unwrap();
    let s = StateVector::<f64>::zero_state(2);
    assert!(apply_circuit(&s, &circ, &[0.0]).is_err());
    assert!(apply_circuit(&StateVector::<f64>::zero_state(3), &circ, &vec![0.0; circ.num_params()]).is_err());
}

#[test]
fn circuits_match_dense_gate_product() {
    let mut rng = SeededRng::new(42);
    for trial in 0..20 {
        let n = 1 + trial % 4;
        let circ = random_circuit(n, 25, &mut rng);
        let params = random_params(&circ, &mut rng);
        let input = random_state(n, &mut rng);
        let out = apply_circuit(&input, &circ, &params).unwrap();
        let mut full = CMatrix::<f64>::identity(1 << n);
        for op in circ.ops() {
            full = dense_gate(n, op, op.resolve_angle(&params)).matmul(&full);
        }
        let expected = full.matvec(input.amplitudes());
        for (a, b) in out.amplitudes().iter().zip(&expected) {
            assert!(close(*a, *b, 1e-10), "trial {trial}");
        }
        assert!((out.norm() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn gates_are_unitary() {
    let mut rng = SeededRng::new(3);
    for kind in GateKind::ALL {
        for _ in 0..100 {
            let theta = rng.uniform_in(-10.0, 10.0);
            let u = gate_unitary::<f64>(kind, theta);
            let id = CMatrix::identity(u.rows());
            assert!(u.adjoint().matmul(&u).max_abs_diff(&id) < 1e-12, "{kind:?}");
        }
    }
}

#[test]
fn random_circuits_preserve_norm() {
    let mut rng = SeededRng::new(8);
    for n in 1..=10 {
        let circ = random_circuit(n, 60, &mut rng);
        let params = random_params(&circ, &mut rng);
        let out = apply_circuit(&random_state(n, &mut rng), &circ, &params).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-10, "n={n}");
    }
}

#[test]
fn zero_parameters_act_as_identity() {
    for (n, d) in [(1, 1), (3, 2), (4, 5)] {
        let circ = hardware_efficient_ansatz(n, d).unwrap();
        for idx in 0..1usize << n {
            let s = StateVector::<f64>::basis(n, idx);
            let out = apply_circuit(&s, &circ, &vec![0.0; circ.num_params()]).unwrap();
            let overlap = inner_product(&s, &out).unwrap();
            assert!((overlap.norm() - 1.0).abs() < 1e-14);
        }
    }
}

#[test]
fn pauli_expectation_examples() {
    let z0 = PauliTerm::unit(PauliString::single(0, Pauli::Z));
    let s0 = StateVector::<f64>::zero_state(1);
    assert_eq!(pauli_expectation(&s0, &z0).unwrap(), 1.0);

    let mut circ = Circuit::new(1);
    circ.push_fixed(GateKind::Rx, &[0], PI / 2.0).unwrap();
    let s = apply_circuit(&s0, &circ, &[]).unwrap();
    assert!(pauli_expectation(&s, &z0).unwrap().abs() < 1e-15);

    let mut bell = Circuit::new(2);
    bell.push_gate(GateKind::H, &[0]).unwrap();
    bell.push_gate(GateKind::Cnot, &[0, 1]).unwrap();
    let b = apply_circuit(&StateVector::<f64>::zero_state(2), &bell, &[]).unwrap();
    let xx = PauliTerm::unit(PauliString::pair(0, Pauli::X, 1, Pauli::X));
    assert!((pauli_expectation(&b, &xx).unwrap() - 1.0).abs() < 1e-14);
    let yy = PauliTerm::unit(PauliString::pair(0, Pauli::Y, 1, Pauli::Y));
    assert!((pauli_expectation(&b, &yy).unwrap() + 1.0).abs() < 1e-14);
    let scaled = PauliTerm::new(-2.5, PauliString::pair(0, Pauli::Z, 1, Pauli::Z));
    assert!((pauli_expectation(&b, &scaled).unwrap() + 2.5).abs() < 1e-14);
}

#[test]
fn pauli_action_matches_dense_matrices() {
    let mut rng = SeededRng::new(17);
    let letters = [Pauli::X, Pauli::Y, Pauli::Z];
    for _ in 0..50 {
        let n = 1 + rng.below(4);
        let mut factors: Vec<(usize, Pauli)> = Vec::new();
        for q in 0..n {
            if rng.uniform() < 0.7 {
                factors.push((q, letters[rng.below(3)]));
            }
        }
        let p = PauliString::new(factors.clone()).unwrap();
        let dense = embed(n, &factors.iter().map(|&(q, l)| (q, pauli_matrix(l))).collect::<Vec<_>>());
        let s = random_state(n, &mut rng);
        let applied = s.apply_pauli(&p).unwrap();
        let expected = dense.matvec(s.amplitudes());
        for (a, b) in applied.amplitudes().iter().zip(&expected) {
            assert!(close(*a, *b, 1e-12));
        }
        let e = s.pauli_string_expectation(&p).unwrap();
        assert!(e * e <= 1.0 + 1e-12);
        let full = s.pauli_string_matrix_element(&s, &p).unwrap();
        assert!(full.im.abs() < 1e-12);
    }
}

#[test]
fn inner_product_examples() {
    let zero = StateVector::<f64>::zero_state(1);
    let one = StateVector::<f64>::basis(1, 1);
    assert_eq!(inner_product(&zero, &zero).unwrap(), c(1.0, 0.0));
    assert_eq!(inner_product(&zero, &one).unwrap(), c(0.0, 0.0));
    let theta = 1.234;
    let mut circ = Circuit::new(1);
    circ.push_param(GateKind::Rx, &[0]).unwrap();
    let rotated = apply_circuit(&zero, &circ, &[theta]).unwrap();
    let ov = inner_product(&zero, &rotated).unwrap();
    assert!(close(ov, c((theta / 2.0).cos(), 0.0), 1e-15));
    assert!(inner_product(&zero, &StateVector::zero_state(2)).is_err());
}

#[test]
fn sampling_deterministic_cases() {
    let z0 = PauliTerm::unit(PauliString::single(0, Pauli::Z));
    let s0 = StateVector::<f64>::zero_state(1);
    for shots in [1, 10, 1000] {
        assert_eq!(sample_pauli_expectation(&s0, &z0, shots, 5).unwrap(), 1.0);
    }
    let mut rng = SeededRng::new(1);
    let s = random_state(3, &mut rng);
    let t = PauliTerm::new(0.7, PauliString::pair(0, Pauli::X, 2, Pauli::Y));
    assert_eq!(
        sample_pauli_expectation(&s, &t, 0, 9).unwrap().to_bits(),
        pauli_expectation(&s, &t).unwrap().to_bits()
    );
}

#[test]
fn sampling_plus_state_statistics() {
    let mut circ = Circuit::new(1);
    circ.push_gate(GateKind::H, &[0]).unwrap();
    let plus = apply_circuit(&StateVector::<f64>::zero_state(1), &circ, &[]).unwrap();
    let z0 = PauliTerm::unit(PauliString::single(0, Pauli::Z));
    let est = sample_pauli_expectation(&plus, &z0, 10_000, 77).unwrap();
    assert!(est.abs() <= 5.0 / 100.0);
}

#[test]
fn sampling_estimator_within_five_sigma() {
    let mut rng = SeededRng::new(2718);
    let letters = [Pauli::X, Pauli::Y, Pauli::Z];
    let shots = 100_000;
    for trial in 0..20 {
        let n = 1 + rng.below(4);
        let s = random_state(n, &mut rng);
        let factors: Vec<(usize, Pauli)> = (0..n).map(|q| (q, letters[rng.below(3)])).collect();
        let t = PauliTerm::unit(PauliString::new(factors).unwrap());
        let exact = pauli_expectation(&s, &t).unwrap();
        let est = sample_pauli_expectation(&s, &t, shots, 1000 + trial).unwrap();
        let sigma = ((1.0 - exact * exact).max(1e-12) / shots as f64).sqrt();
        assert!((est - exact).abs() <= 5.0 * sigma, "trial {trial}: {est} vs {exact}");
    }
}

#[test]
fn projection_and_kron_are_inverse() {
    let mut rng = SeededRng::new(4);
    let a = random_state(2, &mut rng);
    let b = random_state(1, &mut rng);
    let joint = StateVector::kron(&a, &b);
    assert_eq!(joint.num_qubits(), 3);
    for v in 0..2 {
        let proj = joint.project_register(&[2], v).unwrap();
        let expected = a.scaled(b.amplitudes()[v]);
        for (x, y) in proj.amplitudes().iter().zip(expected.amplitudes()) {
            assert!(close(*x, *y, 1e-15));
        }
    }
    // Projecting qubits 0 and 2 leaves qubit 1.
    let p = joint.project_register(&[0, 2], 0b11).unwrap();
    assert_eq!(p.num_qubits(), 1);
    assert!(close(p.amplitudes()[1], joint.amplitudes()[0b111], 1e-15));
}

#[test]
fn permutation_relabels_qubits() {
    let s = StateVector::<f64>::from_bitstring(3, "001").unwrap();
    // new qubit 2 <- old qubit 0
    let p = s.permute_qubits(&[1, 2, 0]).unwrap();
    assert_eq!(p.amplitudes()[0b100], c(1.0, 0.0));
    assert!(s.permute_qubits(&[0, 0, 1]).is_err());
}

#[test]
fn register_operator_matches_embedding() {
    let mut rng = SeededRng::new(6);
    let s = random_state(3, &mut rng);
    let m = CMatrix::from_fn(2, 2, |_, _| rng.complex_normal::<f64>());
    let out = s.apply_operator(&[1], &m).unwrap();
    let dense = embed(3, &[(1, m.clone())]);
    let expected = dense.matvec(s.amplitudes());
    for (x, y) in out.amplitudes().iter().zip(&expected) {
        assert!(close(*x, *y, 1e-12));
    }
    // Two-qubit operator on (2, 0) equals the Kronecker embedding with qubit 2 as low bit.
    let a = CMatrix::from_fn(2, 2, |_, _| rng.complex_normal::<f64>());
    let b = CMatrix::from_fn(2, 2, |_, _| rng.complex_normal::<f64>());
    let joint = b.kron(&a); // a on low bit (qubit 2), b on high bit (qubit 0)
    let out = s.apply_operator(&[2, 0], &joint).unwrap();
    let dense = embed(3, &[(2, a), (0, b)]);
    let expected = dense.matvec(s.amplitudes());
    for (x, y) in out.amplitudes().iter().zip(&expected) {
        assert!(close(*x, *y, 1e-12));
    }
}

#[test]
fn single_precision_engine_runs() {
    let circ = hardware_efficient_ansatz(3, 2).unwrap();
    let params: Vec<f32> = (0..circ.num_params()).map(|i| 0.1 * i as f32).collect();
    let out = apply_circuit(&StateVector::<f32>::zero_state(3), &circ, &params).unwrap();
    assert!((out.norm() - 1.0).abs() < 1e-5);
}
