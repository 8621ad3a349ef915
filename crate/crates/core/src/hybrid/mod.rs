//! Quantum and classical tensors, the network model joining them, and the
//! procedures that turn a quantum tensor into a measured branch observable.

mod dense;
mod measure;
mod mps;
mod network;

pub use dense::DenseTensor;
pub use measure::{
    measure_branch_matrix, measure_branch_observable, measure_prepared, reconstruct_from_pauli,
    reconstruct_open_register, reconstruct_signed, MeasureOptions, MeasurementStrategy,
};
pub use mps::{family_matrix_element, mps_expectation, MpsCore, MpsTensor};
pub use network::{
    ContractionCase, Endpoint, HybridNetwork, NetworkDescription, Node, NodeId, RealizedState,
    DEFAULT_BELL_BUDGET,
};

use std::collections::HashSet;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::{c_zero, Complex, Real};
use crate::statevector::{Circuit, StateVector};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexKind {
    Quantum,
    Classical,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TensorIndex {
    pub label: String,
    pub dim: usize,
    pub kind: IndexKind,
}

impl TensorIndex {
    pub fn classical(label: impl Into<String>, dim: usize) -> Self {
        Self {
            label: label.into(),
            dim,
            kind: IndexKind::Classical,
        }
    }

    pub fn quantum(label: impl Into<String>, qubits: usize) -> Self {
        Self {
            label: label.into(),
            dim: 1 << qubits,
            kind: IndexKind::Quantum,
        }
    }
}

/// A quantum index together with the qubits it groups (`qubits[0]` is the low bit).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantumIndex {
    pub index: TensorIndex,
    pub qubits: Vec<usize>,
}

/// How the states of a quantum tensor are prepared from its classical labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FamilyMode {
    /// `|ψ^i⟩ = U^i |0…0⟩`; circuit `i` reads its parameters from the
    /// consecutive slice after those of circuits `0..i`.
    DistinctUnitaries { circuits: Vec<Circuit> },
    /// `|ψ^i⟩ = U |b_i⟩` with computational-basis inputs `b_i`.
    SharedUnitary { circuit: Circuit, inputs: Vec<usize> },
}

/// Family of circuit-prepared states. Subscript (quantum) indices are the
/// qubit registers, superscript (classical) indices select the family member.
/// Family members are ordered with the first classical index fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumTensor<R> {
    num_qubits: usize,
    mode: FamilyMode,
    classical: Vec<TensorIndex>,
    quantum: Vec<QuantumIndex>,
    params: Vec<R>,
}

fn default_quantum_indices(n: usize) -> Vec<QuantumIndex> {
    (0..n)
        .map(|q| QuantumIndex {
            index: TensorIndex::quantum(format!("q{q}"), 1),
            qubits: vec![q],
        })
        .collect()
}

impl<R: Real> QuantumTensor<R> {
    /// A single state `U|0…0⟩` (no classical index), one quantum index `q{i}` per qubit.
    pub fn state(circuit: Circuit, params: Vec<R>) -> Result<Self> {
        let n = circuit.num_qubits();
        Self::build(
            n,
            FamilyMode::SharedUnitary {
                circuit,
                inputs: vec![0],
            },
            vec![],
            params,
        )
    }

    /// `|ψ^i⟩ = U^i|0̄⟩`, one circuit per value of the classical index `label`.
    pub fn distinct(circuits: Vec<Circuit>, label: &str, params: Vec<R>) -> Result<Self> {
        let n = circuits
            .first()
            .map(|c| c.num_qubits())
            .ok_or_else(|| Error::InvalidArgument("need at least one circuit".into()))?;
        if circuits.iter().any(|c| c.num_qubits() != n) {
            return Err(Error::Dimension("circuits act on different registers".into()));
        }
        let dim = circuits.len();
        Self::build(
            n,
            FamilyMode::DistinctUnitaries { circuits },
            vec![TensorIndex::classical(label, dim)],
            params,
        )
    }

    /// `|ψ^i⟩ = U|b_i⟩` for basis inputs `b_i`, labelled by the classical index `label`.
    pub fn shared(circuit: Circuit, inputs: Vec<usize>, label: &str, params: Vec<R>) -> Result<Self> {
        let n = circuit.num_qubits();
        let dim = inputs.len();
        Self::build(
            n,
            FamilyMode::SharedUnitary { circuit, inputs },
            vec![TensorIndex::classical(label, dim)],
            params,
        )
    }

    fn build(num_qubits: usize, mode: FamilyMode, classical: Vec<TensorIndex>, params: Vec<R>) -> Result<Self> {
        let t = Self {
            num_qubits,
            mode,
            classical,
            quantum: default_quantum_indices(num_qubits),
            params,
        };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        let labels = self.num_labels();
        match &self.mode {
            FamilyMode::DistinctUnitaries { circuits } => {
                if circuits.len() != labels {
                    return Err(Error::Dimension(format!(
                        "{} circuits for {labels} classical labels",
                        circuits.len()
                    )));
                }
            }
            FamilyMode::SharedUnitary { circuit: _, inputs } => {
                if inputs.len() != labels {
                    return Err(Error::Dimension(format!(
                        "{} inputs for {labels} classical labels",
                        inputs.len()
                    )));
                }
                if let Some(&bad) = inputs.iter().find(|&&b| b >> self.num_qubits != 0) {
                    return Err(Error::InvalidArgument(format!(
                        "input basis state {bad} outside a {}-qubit register",
                        self.num_qubits
                    )));
                }
            }
        }
        if self.params.len() != self.expected_params() {
            return Err(Error::Dimension(format!(
                "tensor takes {} parameters, got {}",
                self.expected_params(),
                self.params.len()
            )));
        }
        let mut covered = vec![false; self.num_qubits];
        for qi in &self.quantum {
            if qi.index.dim != 1 << qi.qubits.len() {
                return Err(Error::Dimension(format!(
                    "quantum index `{}` of dimension {} groups {} qubits",
                    qi.index.label,
                    qi.index.dim,
                    qi.qubits.len()
                )));
            }
            for &q in &qi.qubits {
                if q >= self.num_qubits || std::mem::replace(&mut covered[q], true) {
                    return Err(Error::InvalidArgument(
                        "quantum indices must partition the qubits".into(),
                    ));
                }
            }
        }
        if covered.iter().any(|c| !c) {
            return Err(Error::InvalidArgument(
                "quantum indices must cover every qubit".into(),
            ));
        }
        let mut seen = HashSet::new();
        for label in self.indices().map(|i| &i.label) {
            if !seen.insert(label.clone()) {
                return Err(Error::InvalidArgument(format!("duplicate index label `{label}`")));
            }
        }
        Ok(())
    }

    fn expected_params(&self) -> usize {
        match &self.mode {
            FamilyMode::DistinctUnitaries { circuits } => circuits.iter().map(|c| c.num_params()).sum(),
            FamilyMode::SharedUnitary { circuit, .. } => circuit.num_params(),
        }
    }

    /// Regroup the qubits into named quantum indices (`(label, qubits)` pairs).
    pub fn with_quantum_indices(mut self, groups: Vec<(String, Vec<usize>)>) -> Result<Self> {
        self.quantum = groups
            .into_iter()
            .map(|(label, qubits)| QuantumIndex {
                index: TensorIndex::quantum(label, qubits.len()),
                qubits,
            })
            .collect();
        self.validate()?;
        Ok(self)
    }

    /// Replace the classical indices (their dimensions must multiply to the family size).
    pub fn with_classical_indices(mut self, indices: Vec<TensorIndex>) -> Result<Self> {
        if indices.iter().any(|i| i.kind != IndexKind::Classical) {
            return Err(Error::InvalidArgument("classical indices must be classical".into()));
        }
        self.classical = indices;
        self.validate()?;
        Ok(self)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn mode(&self) -> &FamilyMode {
        &self.mode
    }

    pub fn classical_indices(&self) -> &[TensorIndex] {
        &self.classical
    }

    pub fn quantum_indices(&self) -> &[QuantumIndex] {
        &self.quantum
    }

    /// Classical indices first, then quantum indices, in declaration order.
    pub fn indices(&self) -> impl Iterator<Item = &TensorIndex> {
        self.classical.iter().chain(self.quantum.iter().map(|q| &q.index))
    }

    pub fn num_labels(&self) -> usize {
        self.classical.iter().map(|i| i.dim).product()
    }

    pub fn params(&self) -> &[R] {
        &self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn set_params(&mut self, params: &[R]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::Dimension(format!(
                "tensor takes {} parameters, got {}",
                self.params.len(),
                params.len()
            )));
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    /// True when the family is orthonormal by construction: one shared unitary
    /// applied to pairwise distinct basis inputs.
    pub fn is_orthonormal_by_construction(&self) -> bool {
        match &self.mode {
            FamilyMode::SharedUnitary { inputs, .. } => {
                let set: HashSet<_> = inputs.iter().collect();
                set.len() == inputs.len()
            }
            FamilyMode::DistinctUnitaries { circuits } => circuits.len() == 1,
        }
    }

    /// Prepare every family member by statevector simulation.
    pub fn states(&self) -> Result<Vec<StateVector<R>>> {
        match &self.mode {
            FamilyMode::DistinctUnitaries { circuits } => {
                let mut offset = 0;
                let mut out = Vec::with_capacity(circuits.len());
                for circ in circuits {
                    let p = &self.params[offset..offset + circ.num_params()];
                    offset += circ.num_params();
                    let mut s = StateVector::zero_state(self.num_qubits);
                    s.apply_circuit_in_place(circ, p)?;
                    out.push(s);
                }
                Ok(out)
            }
            FamilyMode::SharedUnitary { circuit, inputs } => inputs
                .iter()
                .map(|&b| {
                    let mut s = StateVector::basis(self.num_qubits, b);
                    s.apply_circuit_in_place(circuit, &self.params)?;
                    Ok(s)
                })
                .collect(),
        }
    }

    /// Run the shared unitary on an arbitrary input state.
    pub fn evolve_input(&self, input: StateVector<R>) -> Result<StateVector<R>> {
        match &self.mode {
            FamilyMode::SharedUnitary { circuit, .. } => {
                let mut s = input;
                s.apply_circuit_in_place(circuit, &self.params)?;
                Ok(s)
            }
            FamilyMode::DistinctUnitaries { .. } => Err(Error::InvalidArgument(
                "distinct-unitary tensors have no shared circuit".into(),
            )),
        }
    }

    /// Dense form with axes `[classical…, quantum…]`, first axis fastest.
    pub fn to_dense(&self) -> Result<DenseTensor<R>> {
        let states = self.states()?;
        let mut dims: Vec<usize> = self.classical.iter().map(|i| i.dim).collect();
        let mut kinds = vec![IndexKind::Classical; dims.len()];
        for q in &self.quantum {
            dims.push(q.index.dim);
            kinds.push(IndexKind::Quantum);
        }
        let n_class = self.classical.len();
        let mut out = DenseTensor::zeros(dims, kinds);
        let total = out.len();
        for flat in 0..total {
            let multi = out.unflatten(flat);
            let label = DenseTensor::<R>::flatten_with(&multi[..n_class], &out.dims()[..n_class]);
            let mut amp_index = 0usize;
            for (qi, &v) in self.quantum.iter().zip(&multi[n_class..]) {
                for (bit, &q) in qi.qubits.iter().enumerate() {
                    if v >> bit & 1 == 1 {
                        amp_index |= 1 << q;
                    }
                }
            }
            out.data_mut()[flat] = states[label].amplitudes()[amp_index];
        }
        Ok(out)
    }
}

/// Inputs `|i⟩^{⊗n}` for `i ∈ {0, 1}`: all-zeros and all-ones.
pub fn repeated_bit_inputs(n: usize) -> Vec<usize> {
    vec![0, (1usize << n) - 1]
}

/// Dense classical tensor; all indices classical, first index fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalTensor<R> {
    indices: Vec<TensorIndex>,
    entries: Vec<Complex<R>>,
}

impl<R: Real> ClassicalTensor<R> {
    pub fn new(indices: Vec<TensorIndex>, entries: Vec<Complex<R>>) -> Result<Self> {
        if indices.iter().any(|i| i.kind != IndexKind::Classical) {
            return Err(Error::InvalidArgument("classical tensor with a quantum index".into()));
        }
        let expected: usize = indices.iter().map(|i| i.dim).product();
        if entries.len() != expected {
            return Err(Error::Dimension(format!(
                "classical tensor of shape {:?} needs {expected} entries, got {}",
                indices.iter().map(|i| i.dim).collect::<Vec<_>>(),
                entries.len()
            )));
        }
        let mut seen = HashSet::new();
        for i in &indices {
            if !seen.insert(&i.label) {
                return Err(Error::InvalidArgument(format!("duplicate index label `{}`", i.label)));
            }
        }
        Ok(Self { indices, entries })
    }

    pub fn vector(label: &str, entries: Vec<Complex<R>>) -> Result<Self> {
        let dim = entries.len();
        Self::new(vec![TensorIndex::classical(label, dim)], entries)
    }

    /// Rank-2 tensor from a row-major matrix: `entries[(i1, i2)] = m[(i1, i2)]`.
    pub fn matrix(row_label: &str, col_label: &str, m: &CMatrix<R>) -> Result<Self> {
        let (r, c) = (m.rows(), m.cols());
        let mut entries = vec![c_zero(); r * c];
        for i in 0..r {
            for j in 0..c {
                entries[i + r * j] = m[(i, j)];
            }
        }
        Self::new(
            vec![TensorIndex::classical(row_label, r), TensorIndex::classical(col_label, c)],
            entries,
        )
    }

    pub fn indices(&self) -> &[TensorIndex] {
        &self.indices
    }

    pub fn shape(&self) -> Vec<usize> {
        self.indices.iter().map(|i| i.dim).collect()
    }

    pub fn entries(&self) -> &[Complex<R>] {
        &self.entries
    }

    pub fn get(&self, multi: &[usize]) -> Complex<R> {
        self.entries[DenseTensor::<R>::flatten_with(multi, &self.shape())]
    }

    pub fn to_dense(&self) -> DenseTensor<R> {
        DenseTensor::new(
            self.shape(),
            vec![IndexKind::Classical; self.indices.len()],
            self.entries.clone(),
        )
        .expect("shape checked at construction")
    }
}

/// Hermitian matrix `M^{i',i}` (row `i'`, column `i`).
#[derive(Clone, PartialEq)]
pub struct HermitianObservable<R>(CMatrix<R>);

impl<R: Real> std::fmt::Debug for HermitianObservable<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "HermitianObservable({:?})", self.0)
    }
}

impl<R: Real> HermitianObservable<R> {
    /// Accepts `m` if `max |M - M†| <= tol`; stores the exactly Hermitian part.
    pub fn new(m: CMatrix<R>, tol: R) -> Result<Self> {
        let defect = m.hermiticity_defect();
        if !(defect <= tol) {
            return Err(Error::InvalidArgument(format!(
                "matrix is not Hermitian (defect {defect})"
            )));
        }
        Ok(Self(m.hermitized()))
    }

    /// `(M + M†)/2` of a measured matrix.
    pub fn from_measured(m: &CMatrix<R>) -> Self {
        Self(m.hermitized())
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &CMatrix<R> {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix<R> {
        self.0
    }
}

impl<R: Real> Deref for HermitianObservable<R> {
    type Target = CMatrix<R>;
    fn deref(&self) -> &CMatrix<R> {
        &self.0
    }
}
