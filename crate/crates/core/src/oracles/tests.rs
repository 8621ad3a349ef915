use super::*;
use crate::hybrid::{ClassicalTensor, ContractionCase, DenseTensor, HybridNetwork, IndexKind, QuantumTensor, TensorIndex};
use crate::pauli::{build_1d_cluster, build_2d_web, Hamiltonian, Pauli, PauliString};
use crate::rng::SeededRng;
use crate::scalar::{c, Complex};
use crate::statevector::{hardware_efficient_ansatz, Circuit, GateKind};

fn zz_plus_x() -> Hamiltonian<f64> {
    Hamiltonian::from_terms(
        2,
        [
            (1.0, PauliString::pair(0, Pauli::Z, 1, Pauli::Z)),
            (0.5, PauliString::single(0, Pauli::X)),
            (0.5, PauliString::single(1, Pauli::X)),
        ],
    )
    .unwrap()
}

fn random_hamiltonian(n: usize, terms: usize, rng: &mut SeededRng) -> Hamiltonian<f64> {
    let letters = [Pauli::X, Pauli::Y, Pauli::Z];
    let mut h = Hamiltonian::new(n);
    for _ in 0..terms {
        let s = PauliString::new((0..n).filter_map(|q| {
            let r = rng.below(5);
            (r < 3).then(|| (q, letters[r]))
        }))
        .unwrap();
        h.add_term(rng.uniform_in(-1.0, 1.0), s).unwrap();
    }
    h
}

#[test]
fn small_examples() {
    let zz = Hamiltonian::from_terms(2, [(1.0, PauliString::pair(0, Pauli::Z, 1, Pauli::Z))]).unwrap();
    assert!((exact_ground_energy(&zz).unwrap().energy + 1.0).abs() < 1e-12);
    let g = exact_ground_energy(&zz_plus_x()).unwrap();
    assert!((g.energy + 2f64.sqrt()).abs() < 1e-12);
    assert!(g.residual < 1e-10);
    for form in [OperatorForm::MatrixFree, OperatorForm::Sparse] {
        let opts = LanczosOptions { form, ..Default::default() };
        let g = exact_ground_energy_with(&zz_plus_x(), EdMethod::Lanczos, &opts).unwrap();
        assert!((g.energy + 2f64.sqrt()).abs() < 1e-10);
    }
}

#[test]
fn dense_matrix_matches_hand_assembly() {
    // Z0Z1 + 0.5 X0 + 0.5 X1, little-endian basis |q1 q0⟩
    let m = dense_matrix(&zz_plus_x()).unwrap();
    let want = [
        [1.0, 0.5, 0.5, 0.0],
        [0.5, -1.0, 0.0, 0.5],
        [0.5, 0.0, -1.0, 0.5],
        [0.0, 0.5, 0.5, 1.0],
    ];
    for r in 0..4 {
        for col in 0..4 {
            assert_eq!(m[(r, col)], c(want[r][col], 0.0));
        }
    }
    let y = Hamiltonian::from_terms(1, [(1.0, PauliString::single(0, Pauli::Y))]).unwrap();
    let m = dense_matrix(&y).unwrap();
    assert_eq!(m[(0, 1)], c(0.0, -1.0));
    assert_eq!(m[(1, 0)], c(0.0, 1.0));
}

#[test]
fn built_models_are_hermitian() {
    for h in [
        build_1d_cluster::<f64>(3, 3, 0.7, 5).unwrap().0,
        build_2d_web::<f64>(3, 3, 1.3, 9).unwrap().0,
        random_hamiltonian(6, 20, &mut SeededRng::new(1)),
    ] {
        assert!(dense_matrix(&h).unwrap().hermiticity_defect() < 1e-12);
    }
}

#[test]
fn lanczos_agrees_with_dense() {
    let mut rng = SeededRng::new(77);
    for trial in 0..12 {
        let n = 1 + rng.below(8);
        let h = random_hamiltonian(n, 2 + rng.below(3 * n), &mut rng);
        if h.is_empty() {
            continue;
        }
        let dense = exact_ground_energy_with(&h, EdMethod::Dense, &LanczosOptions::default()).unwrap();
        for form in [OperatorForm::MatrixFree, OperatorForm::Sparse] {
            let opts = LanczosOptions {
                seed: trial,
                form,
                ..Default::default()
            };
            let lz = exact_ground_energy_with(&h, EdMethod::Lanczos, &opts).unwrap();
            assert!((lz.energy - dense.energy).abs() < 1e-8, "trial {trial}: {} vs {}", lz.energy, dense.energy);
            assert!(lz.residual < 1e-8);
        }
    }
}

#[test]
fn lanczos_agrees_with_dense_at_twelve_qubits() {
    let h = build_1d_cluster::<f64>(4, 3, 1.0, 3).unwrap().0;
    let dense = exact_ground_energy_with(&h, EdMethod::Dense, &LanczosOptions::default()).unwrap();
    let lz = exact_ground_energy_with(&h, EdMethod::Lanczos, &LanczosOptions::default()).unwrap();
    assert!((lz.energy - dense.energy).abs() < 1e-8);
    assert!(dense.residual < 1e-8);
}

#[test]
fn dense_path_is_term_order_invariant() {
    let mut rng = SeededRng::new(4);
    let h = random_hamiltonian(5, 25, &mut rng);
    let mut terms: Vec<_> = h.terms().iter().map(|t| (t.coefficient, t.string.clone())).collect();
    terms.reverse();
    terms.rotate_left(3);
    let permuted = Hamiltonian::from_terms(5, terms).unwrap();
    let a = exact_ground_energy_with(&h, EdMethod::Dense, &LanczosOptions::default()).unwrap();
    let b = exact_ground_energy_with(&permuted, EdMethod::Dense, &LanczosOptions::default()).unwrap();
    assert_eq!(a.energy.to_bits(), b.energy.to_bits());
}

#[test]
fn matrix_free_is_thread_count_independent() {
    let h = build_2d_web::<f64>(3, 4, 0.9, 2).unwrap().0;
    let v: Vec<Complex<f64>> = SeededRng::new(3).unit_vector(1 << 12);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let mut out = vec![c(0.0, 0.0); v.len()];
        pool.install(|| apply_hamiltonian(&h, &v, &mut out));
        out
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn size_limits() {
    let big = Hamiltonian::<f64>::from_terms(13, [(1.0, PauliString::single(12, Pauli::Z))]).unwrap();
    assert!(matches!(
        exact_ground_energy_with(&big, EdMethod::Dense, &LanczosOptions::default()),
        Err(crate::error::Error::SizeExceeded { qubits: 13, limit: 12 })
    ));
    let huge = Hamiltonian::<f64>::from_terms(21, [(1.0, PauliString::single(20, Pauli::Z))]).unwrap();
    assert!(matches!(
        exact_ground_energy(&huge),
        Err(crate::error::Error::SizeExceeded { qubits: 21, limit: 20 })
    ));
}

#[test]
fn sparse_operator_merges_duplicates() {
    let s = SparseOperator::from_hamiltonian(&zz_plus_x()).unwrap();
    // diagonal ZZ plus two single flips per row
    assert_eq!(s.nnz(), 12);
    assert_eq!(s.dim(), 4);
}

fn basis_family() -> DenseTensor<f64> {
    // ψ^i = |i⟩: axes [classical i, quantum q]
    DenseTensor::new(
        vec![2, 2],
        vec![IndexKind::Classical, IndexKind::Quantum],
        vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
    )
    .unwrap()
}

fn bell_dense() -> DenseTensor<f64> {
    let h = 0.5f64.sqrt();
    DenseTensor::new(
        vec![2, 2],
        vec![IndexKind::Quantum, IndexKind::Quantum],
        vec![c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)],
    )
    .unwrap()
}

#[test]
fn pair_examples() {
    let h = 0.5f64.sqrt();
    let alpha = DenseTensor::new(vec![2], vec![IndexKind::Classical], vec![c(h, 0.0), c(h, 0.0)]).unwrap();
    let r = dense_contract_pair(&basis_family(), 0, &alpha, 0, 1).unwrap();
    assert_eq!(r.tensor.dims(), &[2]);
    assert!((r.tensor.data()[0] - c(h, 0.0)).norm() < 1e-15 && (r.tensor.data()[1] - c(h, 0.0)).norm() < 1e-15);
    assert_eq!(r.norm_sqr, None);

    let r = dense_contract_pair(&basis_family(), 0, &basis_family(), 0, 3).unwrap();
    let want = [1.0, 0.0, 0.0, 1.0];
    for (got, w) in r.tensor.data().iter().zip(want) {
        assert_eq!(*got, c(w, 0.0));
    }

    let r = dense_contract_pair(&bell_dense(), 1, &bell_dense(), 0, 5).unwrap();
    let want = [0.5, 0.0, 0.0, 0.5];
    for (got, w) in r.tensor.data().iter().zip(want) {
        assert!((got - c(w, 0.0)).norm() < 1e-15);
    }
    assert!((r.norm_sqr.unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn pair_errors() {
    let v3 = DenseTensor::new(vec![3], vec![IndexKind::Classical], vec![c(1.0, 0.0); 3]).unwrap();
    assert!(matches!(
        dense_contract_pair(&basis_family(), 0, &v3, 0, 1),
        Err(crate::error::Error::Dimension(_))
    ));
    // quantum axis labelled as Case 1
    let v2 = DenseTensor::new(vec![2], vec![IndexKind::Classical], vec![c(1.0, 0.0); 2]).unwrap();
    assert!(dense_contract_pair(&basis_family(), 1, &v2, 0, 1).is_err());
    let big = DenseTensor::<f64>::zeros(vec![2; 8], vec![IndexKind::Quantum; 8]);
    assert!(matches!(
        dense_contract_pair(&big, 0, &big, 0, 5),
        Err(crate::error::Error::SizeExceeded { .. })
    ));
}

fn random_family(n: usize, chi: usize, rng: &mut SeededRng) -> QuantumTensor<f64> {
    let circ = hardware_efficient_ansatz(n, 2).unwrap();
    let params = (0..circ.num_params()).map(|_| rng.uniform_in(-3.0, 3.0)).collect();
    let inputs: Vec<usize> = (0..chi).map(|i| (i * 5 + 1) % (1 << n)).collect();
    QuantumTensor::shared(circ, inputs, "i", params).unwrap()
}

fn random_state(n: usize, rng: &mut SeededRng) -> QuantumTensor<f64> {
    let circ = hardware_efficient_ansatz(n, 2).unwrap();
    let params = (0..circ.num_params()).map(|_| rng.uniform_in(-3.0, 3.0)).collect();
    QuantumTensor::state(circ, params).unwrap()
}

fn axis_of(t: &QuantumTensor<f64>, label: &str) -> usize {
    t.indices().position(|i| i.label == label).unwrap()
}

/// Realize one edge through the network and compare against the oracle.
fn check_edge(
    a: QuantumTensor<f64>,
    a_label: &str,
    b: either::Either<QuantumTensor<f64>, ClassicalTensor<f64>>,
    b_label: &str,
    case: u8,
) {
    let a_dense = a.to_dense().unwrap();
    let a_axis = axis_of(&a, a_label);
    let mut net = HybridNetwork::new();
    let na = net.add_quantum(a);
    let (nb, b_dense, b_axis) = match b {
        either::Either::Left(q) => {
            let d = q.to_dense().unwrap();
            let ax = axis_of(&q, b_label);
            (net.add_quantum(q), d, ax)
        }
        either::Either::Right(cl) => {
            let d = cl.to_dense();
            let ax = cl.indices().iter().position(|i| i.label == b_label).unwrap();
            (net.add_classical(cl), d, ax)
        }
    };
    let got_case = net.connect((na, a_label), (nb, b_label)).unwrap();
    assert_eq!(got_case.number(), Some(case));
    let realized = net.realize().unwrap();
    let oracle = dense_contract_pair(&a_dense, a_axis, &b_dense, b_axis, case).unwrap();
    let diff = realized.tensor.max_abs_diff(&oracle.tensor).expect("same shape");
    assert!(diff < 1e-10, "case {case}: {diff}");
    if case == 5 {
        assert!((realized.norm_sqr - oracle.norm_sqr.unwrap()).abs() < 1e-10);
    }
}

mod either {
    pub enum Either<L, R> {
        Left(L),
        Right(R),
    }
}

#[test]
fn network_cases_match_oracle() {
    let mut rng = SeededRng::new(55);
    for _ in 0..10 {
        // Case 1: classical label of a family with a classical vector
        let chi = 2 + rng.below(3);
        let alpha: Vec<_> = (0..chi).map(|_| rng.complex_normal()).collect();
        check_edge(
            random_family(3, chi, &mut rng),
            "i",
            either::Either::Right(ClassicalTensor::vector("a", alpha).unwrap()),
            "a",
            1,
        );
        // Case 2: one qubit of a state with a rank-2 classical tensor
        let m = crate::linalg::CMatrix::from_fn(2, 3, |_, _| rng.complex_normal());
        check_edge(
            random_state(3, &mut rng),
            "q1",
            either::Either::Right(ClassicalTensor::matrix("in", "out", &m).unwrap()),
            "in",
            2,
        );
        // Case 3: classical labels of two families
        check_edge(
            random_family(2, 3, &mut rng),
            "i",
            either::Either::Left(random_family(3, 3, &mut rng)),
            "i",
            3,
        );
        // Case 4: a two-qubit register against a four-valued label
        let a = random_state(4, &mut rng)
            .with_quantum_indices(vec![("r".into(), vec![1, 3]), ("s".into(), vec![0, 2])])
            .unwrap();
        check_edge(a, "r", either::Either::Left(random_family(2, 4, &mut rng)), "i", 4);
        // Case 5: registers of two states
        check_edge(
            random_state(3, &mut rng),
            "q2",
            either::Either::Left(random_state(4, &mut rng)),
            "q0",
            5,
        );
    }
}

#[test]
fn multi_edge_network_matches_chained_oracle() {
    // family --(i:Case 1)-- α, then its q0 --(Case 5)-- a Bell pair
    let mut rng = SeededRng::new(9);
    let fam = random_family(2, 2, &mut rng);
    let alpha = vec![c(0.3, 0.2), c(-0.8, 0.1)];
    let mut circ = Circuit::new(2);
    circ.push_gate(GateKind::H, &[0]).unwrap();
    circ.push_gate(GateKind::Cnot, &[0, 1]).unwrap();
    let bell = QuantumTensor::state(circ, vec![]).unwrap();

    let step1 = dense_contract_pair(
        &fam.to_dense().unwrap(),
        0,
        &ClassicalTensor::vector("a", alpha.clone()).unwrap().to_dense(),
        0,
        1,
    )
    .unwrap();
    // step1 axes: [q0, q1]
    let step2 = dense_contract_pair(&step1.tensor, 0, &bell.to_dense().unwrap(), 0, 5).unwrap();

    let mut net = HybridNetwork::new();
    let f = net.add_quantum(fam);
    let v = net.add_classical(ClassicalTensor::vector("a", alpha).unwrap());
    let b = net.add_quantum(bell);
    assert_eq!(net.connect((f, "i"), (v, "a")).unwrap(), ContractionCase::Case1);
    assert_eq!(net.connect((f, "q0"), (b, "q0")).unwrap(), ContractionCase::Case5);
    let r = net.realize().unwrap();
    assert!(r.tensor.max_abs_diff(&step2.tensor).unwrap() < 1e-10);
    assert_eq!(r.open.len(), 2);
    let _ = TensorIndex::classical("unused", 1);
}

#[test]
fn dense_tree_state_examples() {
    use crate::tree::build_two_layer_qq;
    let mut bell = Circuit::new(2);
    bell.push_gate(GateKind::H, &[0]).unwrap();
    bell.push_gate(GateKind::Cnot, &[0, 1]).unwrap();
    let t = build_two_layer_qq::<f64>(bell, vec![Circuit::identity(1); 2], &[]).unwrap();
    let psi = dense_tree_state(&t).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!((psi[0].re - h).abs() < 1e-12 && (psi[3].re - h).abs() < 1e-12);
    assert!(psi[1].norm() < 1e-12 && psi[2].norm() < 1e-12);

    // root |01⟩ (qubit 1 set) over 2-qubit identity branches → |0̄1̄⟩ = qubits 2,3 set
    let mut x = Circuit::new(2);
    x.push_gate(GateKind::X, &[1]).unwrap();
    let t = build_two_layer_qq::<f64>(x, vec![Circuit::identity(2); 2], &[]).unwrap();
    let psi = dense_tree_state(&t).unwrap();
    for (i, a) in psi.iter().enumerate() {
        let want = if i == 0b1100 { 1.0 } else { 0.0 };
        assert!((a.re - want).abs() < 1e-12 && a.im.abs() < 1e-12);
    }
}

#[test]
fn dense_tree_state_is_normalized_for_qq() {
    use crate::tree::build_two_layer_qq;
    let mut rng = SeededRng::new(31);
    for _ in 0..10 {
        let root = hardware_efficient_ansatz(3, 2).unwrap();
        let branches = vec![hardware_efficient_ansatz(3, 2).unwrap(); 3];
        let total = root.num_params() + 3 * branches[0].num_params();
        let p: Vec<f64> = (0..total).map(|_| rng.uniform_in(-3.0, 3.0)).collect();
        let psi = dense_tree_state(&build_two_layer_qq(root, branches, &p).unwrap()).unwrap();
        let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-10);
    }
}

#[test]
fn dense_tree_state_size_limit() {
    use crate::tree::build_two_layer_qq;
    let t = build_two_layer_qq::<f64>(Circuit::identity(2), vec![Circuit::identity(9); 2], &[]).unwrap();
    assert!(matches!(dense_tree_state(&t), Err(crate::error::Error::SizeExceeded { .. })));
}
