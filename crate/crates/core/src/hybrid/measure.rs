use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::pauli::{Pauli, PauliString, PauliTerm};
use crate::rng::SeededRng;
use crate::scalar::{c, c_i, c_real, c_zero, Complex, Real};
use crate::statevector::{inner_product, sample_pm_one_mean, StateVector};

use super::{FamilyMode, HermitianObservable, QuantumTensor};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementStrategy {
    /// Statevector inner products.
    Direct,
    /// Ancilla-controlled superposition of two family members, read out in X, Y, Z.
    HadamardTest,
    /// Shared circuit run on superposed inputs.
    SuperpositionInput,
    /// Pauli tomography of an open quantum index.
    PauliOpenIndex,
}

impl MeasurementStrategy {
    pub fn name(self) -> &'static str {
        match self {
            MeasurementStrategy::Direct => "direct",
            MeasurementStrategy::HadamardTest => "hadamard_test",
            MeasurementStrategy::SuperpositionInput => "superposition_input",
            MeasurementStrategy::PauliOpenIndex => "pauli_open_index",
        }
    }
}

/// `shots` is the budget for one group of Pauli components (one pair of
/// labels, or one open-index tomography), split equally between them.
/// `shots == 0` means exact expectation values.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureOptions {
    pub strategy: MeasurementStrategy,
    pub shots: usize,
    pub seed: u64,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        Self {
            strategy: MeasurementStrategy::Direct,
            shots: 0,
            seed: 0,
        }
    }
}

impl MeasureOptions {
    pub fn exact(strategy: MeasurementStrategy) -> Self {
        Self {
            strategy,
            ..Self::default()
        }
    }
}

/// `M^{i',i} = ⟨ψ^{i'}| P |ψ^i⟩` (times the term coefficient), Hermitized.
pub fn measure_branch_observable<R: Real>(
    q: &QuantumTensor<R>,
    local_obs: &PauliTerm<R>,
    opts: MeasureOptions,
) -> Result<HermitianObservable<R>> {
    Ok(HermitianObservable::from_measured(&measure_branch_matrix(q, local_obs, opts)?))
}

/// As [`measure_branch_observable`] but without the final Hermitization.
pub fn measure_branch_matrix<R: Real>(
    q: &QuantumTensor<R>,
    local_obs: &PauliTerm<R>,
    opts: MeasureOptions,
) -> Result<CMatrix<R>> {
    let states = q.states()?;
    measure_prepared(q, &states, local_obs, opts)
}

/// As [`measure_branch_matrix`] with the family states already simulated.
///
/// A tensor with classical indices is measured over its classical labels.
/// A tensor without one is measured over its first quantum index, which is
/// then treated as open and must not be touched by `local_obs`.
pub fn measure_prepared<R: Real>(
    q: &QuantumTensor<R>,
    states: &[StateVector<R>],
    local_obs: &PauliTerm<R>,
    opts: MeasureOptions,
) -> Result<CMatrix<R>> {
    if states.len() != q.num_labels() {
        return Err(Error::Dimension(format!(
            "{} prepared states for {} labels",
            states.len(),
            q.num_labels()
        )));
    }
    if let Some(m) = local_obs.string.max_qubit() {
        if m >= q.num_qubits() {
            return Err(Error::QubitOutOfRange {
                index: m,
                num_qubits: q.num_qubits(),
            });
        }
    }
    let mut rng = SeededRng::new(opts.seed);
    let p = &local_obs.string;
    let coef = c_real(local_obs.coefficient);
    let open = if q.classical_indices().is_empty() {
        let qubits = q.quantum_indices()[0].qubits.clone();
        if qubits.iter().any(|&u| p.get(u).is_some()) {
            return Err(Error::InvalidArgument(
                "observable acts on the open quantum index".into(),
            ));
        }
        Some(qubits)
    } else {
        None
    };
    use MeasurementStrategy::*;
    let m = match (opts.strategy, &open) {
        (Direct, None) => direct_labels(states, p)?,
        (Direct, Some(u)) => direct_open(&states[0], u, p)?,
        (HadamardTest, None) => hadamard_test(states, p, opts.shots, &mut rng)?,
        (SuperpositionInput, None) => superposition_input(q, states, p, opts.shots, &mut rng)?,
        (PauliOpenIndex, Some(u)) => pauli_open_index(&states[0], u, p, opts.shots, &mut rng)?,
        (s, _) => {
            return Err(Error::IncompatibleStrategy {
                strategy: s.name(),
                reason: if open.is_some() {
                    "tensor has no classical index; the open index must be measured directly or by Pauli tomography"
                        .into()
                } else {
                    "tensor has a classical index and no open quantum index".into()
                },
            })
        }
    };
    Ok(m.scale(coef))
}

fn direct_labels<R: Real>(states: &[StateVector<R>], p: &PauliString) -> Result<CMatrix<R>> {
    let chi = states.len();
    let acted: Vec<_> = states.iter().map(|s| s.apply_pauli(p)).collect::<Result<_>>()?;
    let mut m = CMatrix::zeros(chi, chi);
    for ip in 0..chi {
        for i in 0..chi {
            m[(ip, i)] = inner_product(&states[ip], &acted[i])?;
        }
    }
    Ok(m)
}

fn direct_open<R: Real>(psi: &StateVector<R>, open: &[usize], p: &PauliString) -> Result<CMatrix<R>> {
    let chi = 1 << open.len();
    let acted = psi.apply_pauli(p)?;
    let kets: Vec<_> = (0..chi).map(|i| acted.project_register(open, i)).collect::<Result<_>>()?;
    let bras: Vec<_> = (0..chi).map(|i| psi.project_register(open, i)).collect::<Result<_>>()?;
    let mut m = CMatrix::zeros(chi, chi);
    for ip in 0..chi {
        for i in 0..chi {
            m[(ip, i)] = inner_product(&bras[ip], &kets[i])?;
        }
    }
    Ok(m)
}

/// `⟨s|P|s⟩` exactly, or as a `shots`-sample mean of ±1 outcomes scaled by `‖s‖²`.
fn estimate<R: Real>(s: &StateVector<R>, p: &PauliString, shots: usize, rng: &mut SeededRng) -> Result<R> {
    let exact = s.pauli_string_expectation(p)?;
    if shots == 0 {
        return Ok(exact);
    }
    let norm = s.norm_sqr();
    if norm == R::zero() {
        return Ok(R::zero());
    }
    let unit = (exact / norm).to_f64_lossy();
    Ok(R::lit(sample_pm_one_mean((1.0 + unit) / 2.0, shots, rng)) * norm)
}

fn split(shots: usize, parts: usize) -> usize {
    if shots == 0 {
        0
    } else {
        (shots / parts).max(1)
    }
}

fn hadamard_test<R: Real>(
    states: &[StateVector<R>],
    p: &PauliString,
    shots: usize,
    rng: &mut SeededRng,
) -> Result<CMatrix<R>> {
    let chi = states.len();
    let n = states[0].num_qubits();
    let per = split(shots, 4);
    let strings: Vec<PauliString> = [None, Some(Pauli::X), Some(Pauli::Y), Some(Pauli::Z)]
        .iter()
        .map(|a| match a {
            None => Ok(p.clone()),
            Some(a) => PauliString::single(n, *a).disjoint_product(p),
        })
        .collect::<Result<_>>()?;
    let half = R::lit(0.5).sqrt();
    let mut m = CMatrix::zeros(chi, chi);
    let mut diag_sum = vec![R::zero(); chi];
    let mut diag_count = vec![0usize; chi];
    let pairs: Vec<(usize, usize)> = if chi == 1 {
        vec![(0, 0)]
    } else {
        (0..chi).flat_map(|i| (i + 1..chi).map(move |j| (i, j))).collect()
    };
    for (i, j) in pairs {
        // ancilla (qubit n) |0⟩ carries ψ^i, |1⟩ carries ψ^j
        let phi = StateVector::kron(&states[i], &StateVector::basis(1, 0)).scaled(c_real(half));
        let mut phi = phi;
        phi.axpy(c_real(half), &StateVector::kron(&states[j], &StateVector::basis(1, 1)));
        let e: Vec<R> = strings
            .iter()
            .map(|s| estimate(&phi, s, per, rng))
            .collect::<Result<_>>()?;
        let (ei, ex, ey, ez) = (e[0], e[1], e[2], e[3]);
        if i != j {
            let mji = c(ex, -ey);
            m[(j, i)] = mji;
            m[(i, j)] = mji.conj();
        }
        diag_sum[i] += ei + ez;
        diag_sum[j] += ei - ez;
        diag_count[i] += 1;
        diag_count[j] += 1;
    }
    for i in 0..chi {
        m[(i, i)] = c_real(diag_sum[i] / R::lit(diag_count[i] as f64));
    }
    Ok(m)
}

fn superposition_input<R: Real>(
    q: &QuantumTensor<R>,
    states: &[StateVector<R>],
    p: &PauliString,
    shots: usize,
    rng: &mut SeededRng,
) -> Result<CMatrix<R>> {
    let inputs = match q.mode() {
        FamilyMode::SharedUnitary { inputs, .. } => inputs,
        FamilyMode::DistinctUnitaries { .. } => {
            return Err(Error::IncompatibleStrategy {
                strategy: MeasurementStrategy::SuperpositionInput.name(),
                reason: "requires one shared circuit with per-label inputs".into(),
            })
        }
    };
    let chi = inputs.len();
    let n = q.num_qubits();
    for i in 0..chi {
        for j in i + 1..chi {
            if inputs[i] == inputs[j] {
                return Err(Error::IncompatibleStrategy {
                    strategy: MeasurementStrategy::SuperpositionInput.name(),
                    reason: format!("labels {i} and {j} share the input basis state"),
                });
            }
        }
    }
    let per = split(shots, 4);
    let half = R::lit(0.5).sqrt();
    let mut m = CMatrix::zeros(chi, chi);
    for i in 0..chi {
        m[(i, i)] = c_real(estimate(&states[i], p, split(shots, 1), rng)?);
    }
    for i in 0..chi {
        for j in i + 1..chi {
            let mut e = [R::zero(); 4];
            for (slot, phase) in [c_real(R::one()), -c_real(R::one()), c_i(), -c_i()].into_iter().enumerate() {
                let mut input = StateVector::basis(n, inputs[i]).scaled(c_real(half));
                input.axpy(phase * half, &StateVector::basis(n, inputs[j]));
                let out = q.evolve_input(input)?;
                e[slot] = estimate(&out, p, per, rng)?;
            }
            let two = R::lit(2.0);
            let z: Complex<R> = c((e[0] - e[1]) / two, (e[3] - e[2]) / two);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    Ok(m)
}

fn pauli_open_index<R: Real>(
    psi: &StateVector<R>,
    open: &[usize],
    p: &PauliString,
    shots: usize,
    rng: &mut SeededRng,
) -> Result<CMatrix<R>> {
    let w = open.len();
    let count = 1usize << (2 * w);
    let per = split(shots, count);
    let mut es = Vec::with_capacity(count);
    for code in 0..count {
        let sigma = open_string(open, code)?;
        es.push(estimate(psi, &sigma.disjoint_product(p)?, per, rng)?);
    }
    Ok(reconstruct_signed(w, &es, -R::one()))
}

const LETTERS: [Option<Pauli>; 4] = [None, Some(Pauli::X), Some(Pauli::Y), Some(Pauli::Z)];

/// Pauli string on `open` for a base-4 code (I, X, Y, Z), `open[0]` the lowest digit.
fn open_string(open: &[usize], code: usize) -> Result<PauliString> {
    PauliString::new(
        open.iter()
            .enumerate()
            .filter_map(|(k, &q)| LETTERS[code >> (2 * k) & 3].map(|p| (q, p))),
    )
}

fn pauli_matrix<R: Real>(p: Option<Pauli>) -> CMatrix<R> {
    let (o, z) = (c_real(R::one()), c_zero());
    let data = match p {
        None => [o, z, z, o],
        Some(Pauli::X) => [z, o, o, z],
        Some(Pauli::Y) => [z, -c_i(), c_i(), z],
        Some(Pauli::Z) => [o, z, z, -o],
    };
    CMatrix::from_vec(2, 2, data.to_vec()).unwrap()
}

/// `(1/2^w) Σ_σ E(σ) σ'` over the `4^w` register strings, where `σ'` is `σ`
/// with each `Y` factor scaled by `y_sign` (`-1` gives the transpose).
#[doc(hidden)]
pub fn reconstruct_signed<R: Real>(w: usize, es: &[R], y_sign: R) -> CMatrix<R> {
    let dim = 1 << w;
    let mut out = CMatrix::zeros(dim, dim);
    for (code, &e) in es.iter().enumerate() {
        if e == R::zero() {
            continue;
        }
        // register qubit 0 is the low bit, so it is the fast (right) Kronecker factor
        let mut term = CMatrix::identity(1);
        for k in 0..w {
            let letter = LETTERS[code >> (2 * k) & 3];
            let mut f = pauli_matrix::<R>(letter);
            if letter == Some(Pauli::Y) {
                f = f.scale(c_real(y_sign));
            }
            term = f.kron(&term);
        }
        out = out.add(&term.scale(c_real(e)));
    }
    out.scale(c_real(R::one() / R::lit(dim as f64)))
}

/// `M̃[i'][i] = ⟨ψ|(|i'⟩⟨i| ⊗ O)|ψ⟩` from the `4^w` expectations `E(σ ⊗ O)`,
/// indexed by base-4 codes (I, X, Y, Z) with register qubit 0 as the lowest digit.
pub fn reconstruct_open_register<R: Real>(w: usize, expectations: &[R]) -> Result<HermitianObservable<R>> {
    if expectations.len() != 1 << (2 * w) {
        return Err(Error::Dimension(format!(
            "{w}-qubit register needs {} expectations, got {}",
            1usize << (2 * w),
            expectations.len()
        )));
    }
    Ok(HermitianObservable::from_measured(&reconstruct_signed(w, expectations, -R::one())))
}

/// `½(E(I) I + E(X) X − E(Y) Y + E(Z) Z)`.
pub fn reconstruct_from_pauli<R: Real>(e_i: R, e_x: R, e_y: R, e_z: R) -> HermitianObservable<R> {
    HermitianObservable::from_measured(&reconstruct_signed(1, &[e_i, e_x, e_y, e_z], -R::one()))
}
