//! The property suite behind `hybridtn verify`. Every check compares the
//! library against an independent reference and reports its worst deviation.

use faer::{Mat, Side};
use hybrid_tn::hybrid::{
    measure_branch_matrix, reconstruct_signed, ClassicalTensor, HybridNetwork, MeasureOptions,
    MeasurementStrategy, MpsTensor, QuantumTensor,
};
use hybrid_tn::linalg::CMatrix;
use hybrid_tn::oracles::{dense_contract_pair, dense_tree_state};
use hybrid_tn::pauli::{
    build_1d_cluster, build_2d_web, Hamiltonian, Pauli, PauliString, PauliTerm, ProductObservable, SpinModel,
};
use hybrid_tn::rng::SeededRng;
use hybrid_tn::statevector::{hardware_efficient_ansatz, sample_pauli_expectation, Circuit, GateKind, StateVector};
use hybrid_tn::tree::{
    build_two_layer_qc, build_two_layer_qq, cost_estimate, tree_expectation, tree_norm_sqr, HybridTree,
    PreparedTree, TreeEvalOptions,
};
use hybrid_tn::variational::{gradient_c, metric_a, solve_subspace, IteConfig, IteProblem, SubspaceProblem};
use num_complex::Complex64;
use serde::Serialize;

pub const EXACT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    /// Largest deviation seen, when the check is a tolerance comparison.
    pub worst: Option<f64>,
    pub tol: Option<f64>,
    pub detail: String,
}

impl Check {
    fn within(name: impl Into<String>, cases: usize, worst: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            // NaN fails
            passed: worst <= tol,
            cases,
            worst: Some(worst),
            tol: Some(tol),
            detail: String::new(),
        }
    }

    fn flag(name: impl Into<String>, cases: usize, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            cases,
            worst: None,
            tol: None,
            detail,
        }
    }

    fn with_detail(mut self, detail: String) -> Self {
        self.detail = detail;
        self
    }

    fn failed(name: impl Into<String>, err: impl std::fmt::Display) -> Self {
        Self::flag(name, 0, false, format!("error: {err}"))
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Nonzero adds the sampling smoke checks at this many shots.
    pub shots: usize,
    /// Flip the sign of the `Y` term in the open-index reconstruction.
    pub mutate_y_sign: bool,
    pub contraction_instances: usize,
    pub strategy_tensors: usize,
    pub normalization_trees: usize,
    pub subspace_problems: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            shots: 0,
            mutate_y_sign: false,
            contraction_instances: 200,
            strategy_tensors: 50,
            normalization_trees: 100,
            subspace_problems: 100,
        }
    }
}

pub fn run_suite(opts: &VerifyOptions) -> Vec<Check> {
    let s = opts.seed;
    let mut out: Vec<Check> = (1..=5).map(|case| contraction_case(case, opts.contraction_instances, s)).collect();
    for strategy in [
        MeasurementStrategy::HadamardTest,
        MeasurementStrategy::SuperpositionInput,
        MeasurementStrategy::PauliOpenIndex,
    ] {
        out.push(strategy_equivalence(strategy, opts.strategy_tensors, s));
    }
    let y_sign = if opts.mutate_y_sign { 1.0 } else { -1.0 };
    out.push(pauli_reconstruction(200, s, y_sign));
    out.push(mutation_detected(s));
    out.push(normalization(opts.normalization_trees, s));
    out.extend(single_rotation_metric());
    out.extend(metric_and_gradient(s));
    out.push(subspace(opts.subspace_problems, s));
    out.push(cost_linearity(SpinModel::Cluster1d));
    out.push(cost_linearity(SpinModel::Web2d));
    if opts.shots > 0 {
        out.push(sampled_pauli(opts.shots, s));
        out.push(sampled_branch_matrix(opts.shots, s));
    }
    out
}

pub fn format_table(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut s = String::new();
    for c in checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        let numbers = match (c.worst, c.tol) {
            (Some(w), Some(t)) => format!("worst {w:.3e} (tol {t:.0e})"),
            _ => String::new(),
        };
        s.push_str(&format!("{verdict}  {:width$}  {:>5} cases  {numbers}", c.name, c.cases));
        if !c.detail.is_empty() {
            s.push_str(&format!("  {}", c.detail));
        }
        s.push('\n');
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    s.push_str(&format!("{} passed, {failed} failed\n", checks.len() - failed));
    s
}

fn random_params(count: usize, rng: &mut SeededRng) -> Vec<f64> {
    (0..count).map(|_| rng.uniform_in(-3.2, 3.2)).collect()
}

fn random_state(n: usize, rng: &mut SeededRng) -> QuantumTensor<f64> {
    let circ = hardware_efficient_ansatz(n, 2).unwrap();
    let p = random_params(circ.num_params(), rng);
    QuantumTensor::state(circ, p).unwrap()
}

fn distinct_inputs(n: usize, chi: usize, rng: &mut SeededRng) -> Vec<usize> {
    let mut inputs = Vec::new();
    while inputs.len() < chi {
        let b = rng.below(1 << n);
        if !inputs.contains(&b) {
            inputs.push(b);
        }
    }
    inputs
}

fn random_shared(n: usize, chi: usize, rng: &mut SeededRng) -> QuantumTensor<f64> {
    let circ = hardware_efficient_ansatz(n, 2).unwrap();
    let p = random_params(circ.num_params(), rng);
    QuantumTensor::shared(circ, distinct_inputs(n, chi, rng), "i", p).unwrap()
}

fn random_distinct(n: usize, chi: usize, rng: &mut SeededRng) -> QuantumTensor<f64> {
    let circuits: Vec<_> = (0..chi).map(|_| hardware_efficient_ansatz(n, 1).unwrap()).collect();
    let total = circuits.iter().map(|c| c.num_params()).sum();
    QuantumTensor::distinct(circuits, "i", random_params(total, rng)).unwrap()
}

fn random_pauli(n: usize, skip: &[usize], rng: &mut SeededRng) -> PauliString {
    let letters = [Pauli::X, Pauli::Y, Pauli::Z];
    PauliString::new((0..n).filter(|q| !skip.contains(q)).filter_map(|q| {
        let r = rng.below(4);
        (r < 3).then(|| (q, letters[r]))
    }))
    .unwrap()
}

enum Other {
    Quantum(QuantumTensor<f64>),
    Classical(ClassicalTensor<f64>),
}

/// Deviation between the network realization of one edge and the literal
/// pair contraction, including the tracked norm for Bell projections.
fn edge_deviation(a: QuantumTensor<f64>, a_label: &str, b: Other, b_label: &str) -> Result<(u8, f64), String> {
    let a_dense = a.to_dense().map_err(|e| e.to_string())?;
    let a_axis = a.indices().position(|i| i.label == a_label).ok_or("missing label")?;
    let mut net = HybridNetwork::new();
    let na = net.add_quantum(a);
    let (nb, b_dense, b_axis) = match b {
        Other::Quantum(q) => {
            let d = q.to_dense().map_err(|e| e.to_string())?;
            let ax = q.indices().position(|i| i.label == b_label).ok_or("missing label")?;
            (net.add_quantum(q), d, ax)
        }
        Other::Classical(t) => {
            let d = t.to_dense();
            let ax = t.indices().iter().position(|i| i.label == b_label).ok_or("missing label")?;
            (net.add_classical(t), d, ax)
        }
    };
    let case = net
        .connect((na, a_label), (nb, b_label))
        .map_err(|e| e.to_string())?
        .number()
        .ok_or("edge has no case number")?;
    let realized = net.realize().map_err(|e| e.to_string())?;
    let oracle = dense_contract_pair(&a_dense, a_axis, &b_dense, b_axis, case).map_err(|e| e.to_string())?;
    let mut dev = realized.tensor.max_abs_diff(&oracle.tensor).ok_or("shape mismatch")?;
    if let Some(n) = oracle.norm_sqr {
        dev = dev.max((realized.norm_sqr - n).abs());
    }
    Ok((case, dev))
}

fn random_edge(case: u8, rng: &mut SeededRng) -> (QuantumTensor<f64>, String, Other, String) {
    match case {
        1 => {
            let n = 1 + rng.below(4);
            let chi = 1 + rng.below((1 << n).min(4));
            let alpha = (0..chi).map(|_| rng.complex_normal()).collect();
            let v = ClassicalTensor::vector("a", alpha).unwrap();
            (random_shared(n, chi, rng), "i".into(), Other::Classical(v), "a".into())
        }
        2 => {
            let n = 1 + rng.below(4);
            let q = rng.below(n);
            let cols = 1 + rng.below(4);
            let m = CMatrix::from_fn(2, cols, |_, _| rng.complex_normal());
            let t = ClassicalTensor::matrix("in", "out", &m).unwrap();
            (random_state(n, rng), format!("q{q}"), Other::Classical(t), "in".into())
        }
        3 => {
            let (na, nb) = (1 + rng.below(3), 1 + rng.below(3));
            let chi = 1 + rng.below((1usize << na.min(nb)).min(4));
            let a = random_shared(na, chi, rng);
            let b = if rng.below(2) == 0 { random_shared(nb, chi, rng) } else { random_distinct(nb, chi, rng) };
            (a, "i".into(), Other::Quantum(b), "i".into())
        }
        4 => {
            let n = 2 + rng.below(3);
            let first = rng.below(n);
            let second = (first + 1 + rng.below(n - 1)) % n;
            let reg = vec![first, second];
            let rest: Vec<usize> = (0..n).filter(|q| !reg.contains(q)).collect();
            let mut groups = vec![("r".to_string(), reg)];
            if !rest.is_empty() {
                groups.push(("s".to_string(), rest));
            }
            let a = random_state(n, rng).with_quantum_indices(groups).unwrap();
            let m = 2 + rng.below(2);
            (a, "r".into(), Other::Quantum(random_shared(m, 4, rng)), "i".into())
        }
        5 => {
            let (na, nb) = (1 + rng.below(4), 1 + rng.below(4));
            let (qa, qb) = (rng.below(na), rng.below(nb));
            let b = random_state(nb, rng);
            (random_state(na, rng), format!("q{qa}"), Other::Quantum(b), format!("q{qb}"))
        }
        _ => unreachable!("cases are 1 to 5"),
    }
}

/// Network realization against the dense pair contraction on random edges of one case.
pub fn contraction_case(case: u8, instances: usize, seed: u64) -> Check {
    let name = format!("contraction case {case} vs dense oracle");
    let mut rng = SeededRng::fork(seed, 100 + case as u64);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let (a, al, b, bl) = random_edge(case, &mut rng);
        match edge_deviation(a, &al, b, &bl) {
            Ok((got, _)) if got != case => {
                return Check::flag(name, instances, false, format!("edge classified as case {got}"))
            }
            Ok((_, dev)) => worst = worst.max(dev),
            Err(e) => return Check::failed(name, e),
        }
    }
    Check::within(name, instances, worst, EXACT_TOL)
}

/// A strategy's exact-mode branch matrix against `direct` inner products.
pub fn strategy_equivalence(strategy: MeasurementStrategy, tensors: usize, seed: u64) -> Check {
    let name = format!("{} matches direct", strategy.name());
    let mut rng = SeededRng::fork(seed, 200 + strategy as u64);
    let mut worst: f64 = 0.0;
    for i in 0..tensors {
        let (t, p) = match strategy {
            MeasurementStrategy::PauliOpenIndex => {
                let n = 2 + rng.below(4);
                let w = 1 + rng.below(2.min(n - 1));
                let mut qubits: Vec<usize> = (0..n).collect();
                // a random choice of open qubits
                for j in 0..w {
                    let s = j + rng.below(n - j);
                    qubits.swap(j, s);
                }
                let open = qubits[..w].to_vec();
                let rest = qubits[w..].to_vec();
                let t = random_state(n, &mut rng)
                    .with_quantum_indices(vec![("up".into(), open.clone()), ("rest".into(), rest)])
                    .unwrap();
                (t, PauliTerm::unit(random_pauli(n, &open, &mut rng)))
            }
            _ => {
                let n = 1 + rng.below(5);
                let chi = 1 + rng.below((1 << n).min(4));
                let shared = strategy == MeasurementStrategy::SuperpositionInput || i % 2 == 0;
                let t = if shared { random_shared(n, chi, &mut rng) } else { random_distinct(n, chi, &mut rng) };
                (t, PauliTerm::new(rng.uniform_in(-2.0, 2.0), random_pauli(n, &[], &mut rng)))
            }
        };
        let direct = measure_branch_matrix(&t, &p, MeasureOptions::default());
        let got = measure_branch_matrix(&t, &p, MeasureOptions::exact(strategy));
        match (direct, got) {
            (Ok(d), Ok(g)) => worst = worst.max(g.max_abs_diff(&d)),
            (Err(e), _) | (_, Err(e)) => return Check::failed(name, e),
        }
    }
    Check::within(name, tensors, worst, EXACT_TOL)
}

/// Open-qubit reconstruction `½(E(I)I + E(X)X + y_sign·E(Y)Y + E(Z)Z)` against
/// direct matrix elements `⟨ψ|(|i'⟩⟨i| ⊗ O)|ψ⟩`. The correct sign is −1.
pub fn pauli_reconstruction(instances: usize, seed: u64, y_sign: f64) -> Check {
    let name = if y_sign < 0.0 {
        "reconstruction with -E(Y)Y matches direct".to_string()
    } else {
        "reconstruction with +E(Y)Y matches direct".to_string()
    };
    let mut rng = SeededRng::fork(seed, 300);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let n = 2 + rng.below(4);
        let open = rng.below(n);
        let rest: Vec<usize> = (0..n).filter(|&q| q != open).collect();
        let t = random_state(n, &mut rng)
            .with_quantum_indices(vec![("up".into(), vec![open]), ("rest".into(), rest)])
            .unwrap();
        let o = random_pauli(n, &[open], &mut rng);
        let psi = &t.states().unwrap()[0];
        let es: Vec<f64> = [None, Some(Pauli::X), Some(Pauli::Y), Some(Pauli::Z)]
            .iter()
            .map(|a| {
                let s = match a {
                    None => o.clone(),
                    Some(a) => PauliString::single(open, *a).disjoint_product(&o).unwrap(),
                };
                psi.pauli_string_expectation(&s).unwrap()
            })
            .collect();
        let m = reconstruct_signed(1, &es, y_sign);
        let direct = measure_branch_matrix(&t, &PauliTerm::unit(o), MeasureOptions::default()).unwrap();
        worst = worst.max(m.max_abs_diff(&direct));
    }
    Check::within(name, instances, worst, EXACT_TOL)
}

/// The reconstruction check must fail when the `Y` sign is flipped.
pub fn mutation_detected(seed: u64) -> Check {
    let mutated = pauli_reconstruction(50, seed, 1.0);
    let detail = format!("mutated worst {:.3e}", mutated.worst.unwrap_or(f64::NAN));
    Check::flag("flipped Y sign is detected", 50, !mutated.passed, detail)
}

fn random_qq(rng: &mut SeededRng) -> HybridTree<f64> {
    let k = 1 + rng.below(4);
    let n = 1 + rng.below(3);
    let root = hardware_efficient_ansatz(k, 1 + rng.below(3)).unwrap();
    let dv = 1 + rng.below(2);
    let branches: Vec<_> = (0..k).map(|_| hardware_efficient_ansatz(n, dv).unwrap()).collect();
    let total = root.num_params() + branches.iter().map(|c| c.num_params()).sum::<usize>();
    build_two_layer_qq(root, branches, &random_params(total, rng)).unwrap()
}

/// Random quantum-quantum trees: identity expectation, the raw contracted norm
/// and the norm of the dense materialization are all 1.
pub fn normalization(trees: usize, seed: u64) -> Check {
    let name = "qq trees are normalized";
    let mut rng = SeededRng::fork(seed, 400);
    let mut worst: f64 = 0.0;
    for _ in 0..trees {
        let tree = random_qq(&mut rng);
        let k = tree.layout().num_subsystems();
        let run = || -> hybrid_tn::Result<f64> {
            let e = tree_expectation(&tree, &ProductObservable::identity(k), 0, 0)?;
            let raw = tree_norm_sqr(&tree)?;
            let dense: f64 = dense_tree_state(&tree)?.iter().map(|a| a.norm_sqr()).sum();
            Ok((e - 1.0).abs().max((raw - 1.0).abs()).max((dense - 1.0).abs()))
        };
        match run() {
            Ok(d) => worst = worst.max(d),
            Err(e) => return Check::failed(name, e),
        }
    }
    Check::within(name, trees, worst, EXACT_TOL)
}

/// `RX(θ)|0⟩` under `H = Z`, so `E = cos θ`, at δ = 1e-3. A is 1/4 to 1e-4 at
/// every θ. C carries the forward-difference bias `(δ/4) cos θ`, so it equals
/// `−½ sin θ` to 1e-4 at θ = π/2 and `½(cos(θ+δ) − cos θ)/δ` to 1e-10 everywhere.
pub fn single_rotation_metric() -> Vec<Check> {
    let delta = 1e-3;
    let mut h = Hamiltonian::new(1);
    h.add_term(1.0, PauliString::single(0, Pauli::Z)).unwrap();
    let config = IteConfig { delta, ..IteConfig::default() };
    let thetas: [f64; 6] = [-2.5, -0.7, 0.3, 1.2, std::f64::consts::FRAC_PI_2, 2.9];
    let (mut worst_a, mut worst_fd, mut at_half_pi): (f64, f64, f64) = (0.0, 0.0, f64::NAN);
    for theta in thetas {
        let mut c = Circuit::new(1);
        c.push_param(GateKind::Rx, &[0]).unwrap();
        let tree = build_two_layer_qq(Circuit::identity(1), vec![c], &[theta]).unwrap();
        let run = || -> hybrid_tn::Result<(f64, f64)> {
            let problem = IteProblem::new(&tree, &h)?;
            let a = metric_a(&problem, &[theta], delta)?;
            let (_, cv) = gradient_c(&problem, &[theta], &config)?;
            Ok((a.get(0, 0), cv[0]))
        };
        let (a, c) = match run() {
            Ok(v) => v,
            Err(e) => return vec![Check::failed("single-rotation metric", e)],
        };
        worst_a = worst_a.max((a - 0.25).abs());
        worst_fd = worst_fd.max((c - 0.5 * ((theta + delta).cos() - theta.cos()) / delta).abs());
        if theta == std::f64::consts::FRAC_PI_2 {
            at_half_pi = (c + 0.5 * theta.sin()).abs();
        }
    }
    vec![
        Check::within("single rotation A = 1/4", thetas.len(), worst_a, 1e-4),
        Check::within("single rotation C = -sin(t)/2 at t = pi/2", 1, at_half_pi, 1e-4),
        Check::within("single rotation C = analytic forward difference", thetas.len(), worst_fd, EXACT_TOL),
    ]
}

fn normalized_dense(tree: &HybridTree<f64>, p: &[f64]) -> Vec<Complex64> {
    let psi = dense_tree_state(&tree.with_params(p).unwrap()).unwrap();
    let norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    psi.into_iter().map(|a| a / norm).collect()
}

fn dense_energy(tree: &HybridTree<f64>, h: &Hamiltonian<f64>, p: &[f64]) -> f64 {
    StateVector::from_amplitudes(normalized_dense(tree, p)).unwrap().energy(h).unwrap()
}

/// Central differences of the dense normalized state: tangent Gram matrix and energy gradient.
fn dense_tangents(tree: &HybridTree<f64>, h: &Hamiltonian<f64>, p: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let s = 1e-5;
    let mut tangents = Vec::new();
    let mut grad = Vec::new();
    for i in 0..p.len() {
        let (mut up, mut down) = (p.to_vec(), p.to_vec());
        up[i] += s;
        down[i] -= s;
        let (a, b) = (normalized_dense(tree, &up), normalized_dense(tree, &down));
        tangents.push(a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * s)).collect::<Vec<_>>());
        grad.push((dense_energy(tree, h, &up) - dense_energy(tree, h, &down)) / (2.0 * s));
    }
    let gram = tangents
        .iter()
        .map(|ti| tangents.iter().map(|tj| ti.iter().zip(tj).map(|(a, b)| (a.conj() * b).re).sum()).collect())
        .collect();
    (gram, grad)
}

fn dense_test_families(rng: &mut SeededRng) -> Vec<HybridTree<f64>> {
    let root = hardware_efficient_ansatz(2, 1).unwrap();
    let branches = vec![hardware_efficient_ansatz(2, 1).unwrap(); 2];
    let total = root.num_params() + 2 * branches[0].num_params();
    let qq = build_two_layer_qq(root, branches, &random_params(total, rng)).unwrap();
    let mps = MpsTensor::random(2, 2, 2, rng).unwrap();
    let branches = vec![hardware_efficient_ansatz(2, 1).unwrap(); 2];
    let total = 2 * branches[0].num_params();
    let qc = build_two_layer_qc(mps, branches, &random_params(total, rng)).unwrap();
    vec![qq, qc]
}

/// A against the dense tangent Gram matrix and 2C against the dense energy
/// gradient, at δ = 2e-3 and 1e-3. Both errors must be O(δ), and the
/// forward-difference error in C must shrink as δ halves.
pub fn metric_and_gradient(seed: u64) -> Vec<Check> {
    let mut rng = SeededRng::fork(seed, 500);
    let (h, _) = build_1d_cluster::<f64>(2, 2, 0.8, seed).unwrap();
    let (mut worst_a, mut worst_c): (f64, f64) = (0.0, 0.0);
    let mut min_ratio = f64::INFINITY;
    let families = dense_test_families(&mut rng);
    for tree in &families {
        let p = tree.params();
        let (gram, grad) = dense_tangents(tree, &h, &p);
        let problem = IteProblem::new(tree, &h).unwrap();
        let mut errs = Vec::new();
        for delta in [2e-3, 1e-3] {
            let config = IteConfig { delta, ..IteConfig::default() };
            let a = metric_a(&problem, &p, delta).unwrap();
            let (_, c) = gradient_c(&problem, &p, &config).unwrap();
            let mut ea: f64 = 0.0;
            for (i, row) in gram.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    ea = ea.max((a.get(i, j) - v).abs());
                }
            }
            let ec = c.iter().zip(&grad).map(|(c, g)| (2.0 * c - g).abs()).fold(0.0, f64::max);
            worst_a = worst_a.max(ea / delta);
            worst_c = worst_c.max(ec / delta);
            errs.push(ec);
        }
        min_ratio = min_ratio.min(errs[0] / errs[1]);
    }
    let cases = families.len();
    vec![
        Check::within("A vs tangent Gram, error / delta", cases, worst_a, 20.0),
        Check::within("2C vs energy gradient, error / delta", cases, worst_c, 50.0),
        Check::flag(
            "C error halves with delta",
            cases,
            min_ratio >= 1.5,
            format!("smallest ratio {min_ratio:.2}"),
        ),
    ]
}

fn random_hermitian(n: usize, rng: &mut SeededRng) -> CMatrix<f64> {
    let m = CMatrix::from_fn(n, n, |_, _| rng.complex_normal());
    m.add(&m.adjoint())
}

/// Lowest eigenvalue of `S^{-1/2} H S^{-1/2}`, computed with faer.
pub fn brute_generalized(h: &CMatrix<f64>, s: &CMatrix<f64>) -> f64 {
    let n = h.rows();
    let se = Mat::<Complex64>::from_fn(n, n, |r, c| s[(r, c)]).self_adjoint_eigen(Side::Lower).unwrap();
    let inv_sqrt = Mat::<Complex64>::from_fn(n, n, |r, c| {
        (0..n)
            .map(|k| se.U()[(r, k)] * se.U()[(c, k)].conj() / se.S().column_vector()[k].re.sqrt())
            .sum()
    });
    let hm = Mat::<Complex64>::from_fn(n, n, |r, c| h[(r, c)]);
    let reduced = &inv_sqrt * &hm * &inv_sqrt;
    let e = reduced.self_adjoint_eigen(Side::Lower).unwrap();
    e.S().column_vector().iter().map(|z| z.re).fold(f64::INFINITY, f64::min)
}

/// `solve_subspace` on random positive-definite problems: the eigenvalue
/// matches faer, `α†Sα = 1`, and `λ ≤ min H_ii/S_ii`.
pub fn subspace(problems: usize, seed: u64) -> Check {
    let name = "subspace solve vs brute force";
    let mut rng = SeededRng::fork(seed, 600);
    let mut worst: f64 = 0.0;
    let mut bound_ok = true;
    for trial in 0..problems {
        let n = 1 + trial % 6;
        let h = random_hermitian(n, &mut rng);
        let b = CMatrix::from_fn(n, n, |_, _| rng.complex_normal::<f64>());
        let s = b.adjoint().matmul(&b).add(&CMatrix::identity(n).scale(Complex64::new(0.1, 0.0)));
        let (lambda, alpha) = match solve_subspace(&SubspaceProblem { h: h.clone(), s: s.clone() }) {
            Ok(v) => v,
            Err(e) => return Check::failed(name, e),
        };
        let want = brute_generalized(&h, &s);
        worst = worst.max((lambda - want).abs() / want.abs().max(1.0));
        worst = worst.max((s.sandwich(&alpha, &alpha).re - 1.0).abs());
        let best = (0..n).map(|i| h[(i, i)].re / s[(i, i)].re).fold(f64::INFINITY, f64::min);
        bound_ok &= lambda <= best + EXACT_TOL;
    }
    let mut check = Check::within(name, problems, worst, EXACT_TOL);
    if !bound_ok {
        check.passed = false;
        check.detail = "lambda exceeds min H_ii/S_ii".into();
    }
    check
}

/// Quantum-tensor evaluations of one energy call for `k` subsystems of 2 spins.
pub fn quantum_evaluations(model: SpinModel, k: usize) -> hybrid_tn::Result<usize> {
    let (h, _) = match model {
        SpinModel::Cluster1d => build_1d_cluster::<f64>(2, k, 1.0, 0)?,
        SpinModel::Web2d => build_2d_web::<f64>(2, k, 1.0, 0)?,
    };
    let root = hardware_efficient_ansatz(k, 1)?;
    let branches = vec![hardware_efficient_ansatz(2, 1)?; k];
    let total = root.num_params() + k * branches[0].num_params();
    let mut rng = SeededRng::new(k as u64);
    let tree = build_two_layer_qq(root, branches, &random_params(total, &mut rng))?;
    let report = PreparedTree::new(&tree)?.energy(&h, &TreeEvalOptions::default())?;
    Ok(report.stats.branch_evaluations + report.stats.root_evaluations)
}

/// Measured evaluations per energy call for k = 2..6 form an exact
/// arithmetic progression, and the cost model's branch count equals k.
pub fn cost_linearity(model: SpinModel) -> Check {
    let name = format!("evaluations linear in k ({})", model_name(model));
    let ks: Vec<usize> = (2..=6).collect();
    let counts = match ks.iter().map(|&k| quantum_evaluations(model, k)).collect::<hybrid_tn::Result<Vec<_>>>() {
        Ok(c) => c,
        Err(e) => return Check::failed(name, e),
    };
    let step = counts[1] as i64 - counts[0] as i64;
    let linear = step > 0 && counts.windows(2).all(|w| w[1] as i64 - w[0] as i64 == step);
    let model_ok = ks.iter().all(|&k| {
        let root = hardware_efficient_ansatz(k, 1).unwrap();
        let branches = vec![hardware_efficient_ansatz(2, 1).unwrap(); k];
        let total = root.num_params() + k * branches[0].num_params();
        let tree = build_two_layer_qq(root, branches, &vec![0.0; total]).unwrap();
        cost_estimate(&tree, 0.01).quantum_evals == k
    });
    Check::flag(name, ks.len(), linear && model_ok, format!("counts {counts:?}"))
}

fn model_name(m: SpinModel) -> &'static str {
    match m {
        SpinModel::Cluster1d => "1d_cluster",
        SpinModel::Web2d => "2d_web",
    }
}

/// Sampled Pauli expectations on random states lie within 5σ of the exact
/// value, σ = sqrt((1 − ⟨P⟩²)/shots).
pub fn sampled_pauli(shots: usize, seed: u64) -> Check {
    let name = format!("sampled Pauli expectations within 5 sigma ({shots} shots)");
    let mut rng = SeededRng::fork(seed, 700);
    let cases = 20;
    let mut worst: f64 = 0.0;
    for i in 0..cases {
        let n = 1 + rng.below(5);
        let psi = &random_state(n, &mut rng).states().unwrap()[0];
        let mut p = random_pauli(n, &[], &mut rng);
        if p.is_identity() {
            p = PauliString::single(0, Pauli::Z);
        }
        let exact = psi.pauli_string_expectation(&p).unwrap();
        let sampled = sample_pauli_expectation(psi, &PauliTerm::unit(p), shots, seed ^ i as u64).unwrap();
        let sigma = ((1.0 - exact * exact).max(0.0) / shots as f64).sqrt();
        if sigma > 0.0 {
            worst = worst.max((sampled - exact).abs() / sigma);
        } else if sampled != exact {
            worst = f64::INFINITY;
        }
    }
    Check::within(name, cases, worst, 5.0).with_detail("worst is in units of sigma".into())
}

/// Hadamard-test branch matrices from samples against `direct`. Each entry
/// is a combination of at most two ±1 means over `shots/4` draws, so a
/// conservative σ is `2·sqrt(4/shots)`.
pub fn sampled_branch_matrix(shots: usize, seed: u64) -> Check {
    let name = format!("sampled Hadamard-test matrices within 5 sigma ({shots} shots)");
    let mut rng = SeededRng::fork(seed, 800);
    let cases = 10;
    let sigma = 2.0 * (4.0 / shots as f64).sqrt();
    let mut worst: f64 = 0.0;
    for i in 0..cases {
        let n = 1 + rng.below(3);
        let chi = 1 + rng.below((1 << n).min(3));
        let t = random_shared(n, chi, &mut rng);
        let p = PauliTerm::unit(random_pauli(n, &[], &mut rng));
        let direct = measure_branch_matrix(&t, &p, MeasureOptions::default()).unwrap();
        let opts = MeasureOptions {
            strategy: MeasurementStrategy::HadamardTest,
            shots,
            seed: seed ^ (i as u64),
        };
        match measure_branch_matrix(&t, &p, opts) {
            Ok(m) => worst = worst.max(m.max_abs_diff(&direct) / sigma),
            Err(e) => return Check::failed(name, e),
        }
    }
    Check::within(name, cases, worst, 5.0).with_detail("worst is in units of sigma".into())
}
