use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hybrid::{
    family_matrix_element, measure_prepared, HermitianObservable, MeasureOptions, MeasurementStrategy,
    QuantumTensor,
};
use crate::linalg::CMatrix;
use crate::pauli::{decompose_for_layout, Hamiltonian, Pauli, PauliString, PauliTerm, ProductObservable, SubsystemLayout};
use crate::rng::SeededRng;
use crate::scalar::{c_real, c_zero, Complex, Real};
use crate::statevector::{inner_product, sample_pauli_expectation, StateVector};

use super::{HybridTree, Payload, TreeNode};

/// Where the root tensor enters the contraction.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractionOrder {
    /// Measure or contract every branch, then evaluate the root against the branch matrices.
    #[default]
    BranchesFirst,
    /// Reconstruct the root's coefficient density over all child labels first
    /// (Pauli tomography for a quantum root), then contract it with the branch matrices.
    RootFirst,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeEvalOptions {
    /// Strategy for quantum branch families.
    pub strategy: MeasurementStrategy,
    /// Shots per Pauli-component group; 0 means exact.
    pub shots: usize,
    pub seed: u64,
    pub order: ContractionOrder,
}

impl Default for TreeEvalOptions {
    fn default() -> Self {
        Self {
            strategy: MeasurementStrategy::Direct,
            shots: 0,
            seed: 0,
            order: ContractionOrder::BranchesFirst,
        }
    }
}

/// Work counters of one evaluation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EvalStats {
    pub terms: usize,
    pub branch_evaluations: usize,
    pub cache_hits: usize,
    pub root_evaluations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyReport<R> {
    pub energy: R,
    pub norm_sqr: R,
    pub stats: EvalStats,
}

#[derive(Debug, PartialEq)]
struct Shape {
    children: Vec<Vec<usize>>,
    subsystem: Vec<Option<usize>>,
    param_ranges: Vec<(usize, usize)>,
    /// Subsystems under each node, in leaf order.
    below: Vec<Vec<usize>>,
    layout: SubsystemLayout,
}

impl Shape {
    fn build<R: Real>(tree: &HybridTree<R>) -> (Self, Vec<Payload<R>>) {
        let mut shape = Shape {
            children: vec![],
            subsystem: vec![],
            param_ranges: vec![],
            below: vec![],
            layout: tree.layout().clone(),
        };
        let mut payloads = vec![];
        let mut offset = 0;
        fn walk<R: Real>(
            node: &TreeNode<R>,
            shape: &mut Shape,
            payloads: &mut Vec<Payload<R>>,
            offset: &mut usize,
        ) -> usize {
            let id = payloads.len();
            payloads.push(node.payload.clone());
            shape.children.push(vec![]);
            shape.subsystem.push(node.subsystem);
            shape.below.push(vec![]);
            let k = node.payload.num_params();
            shape.param_ranges.push((*offset, *offset + k));
            *offset += k;
            let mut below = node.subsystem.into_iter().collect::<Vec<_>>();
            for (_, c) in &node.children {
                let cid = walk(c, shape, payloads, offset);
                shape.children[id].push(cid);
                below.extend(shape.below[cid].clone());
            }
            shape.below[id] = below;
            id
        }
        walk(tree.root(), &mut shape, &mut payloads, &mut offset);
        (shape, payloads)
    }
}

#[derive(Debug)]
struct PreparedNode<R> {
    payload: Payload<R>,
    states: Option<Vec<StateVector<R>>>,
}

impl<R: Real> PreparedNode<R> {
    fn new(payload: Payload<R>) -> Result<Self> {
        let states = match &payload {
            Payload::Quantum(q) => Some(q.states()?),
            _ => None,
        };
        Ok(Self { payload, states })
    }

    fn orthonormal(&self) -> bool {
        matches!(&self.payload, Payload::Quantum(q) if q.is_orthonormal_by_construction())
    }
}

/// A tree with every node's family simulated. Cloning is cheap and a
/// parameter shift re-simulates only the owning node.
#[derive(Clone, Debug)]
pub struct PreparedTree<R> {
    shape: Arc<Shape>,
    nodes: Vec<Arc<PreparedNode<R>>>,
}

type Memo<R> = HashMap<(usize, Vec<PauliString>), Option<CMatrix<R>>>;

fn fnv(seed: u64, parts: &[&[u8]]) -> u64 {
    let mut h = 0xcbf29ce484222325u64 ^ seed;
    for p in parts {
        for &b in *p {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x100000001b3);
        }
        h = h.wrapping_mul(0x100000001b3) ^ 0xff;
    }
    h
}

fn pauli_matrix<R: Real>(p: Pauli) -> CMatrix<R> {
    let (o, z, i) = (c_real(R::one()), c_zero::<R>(), Complex::new(R::zero(), R::one()));
    let data = match p {
        Pauli::X => vec![z, o, o, z],
        Pauli::Y => vec![z, -i, i, z],
        Pauli::Z => vec![o, z, z, -o],
    };
    CMatrix::from_vec(2, 2, data).unwrap()
}

/// Coefficients `c_σ = tr(σ M) / 2^w` of `M = Σ c_σ σ` over a `w`-qubit register,
/// keyed by base-4 codes (I, X, Y, Z) with register qubit 0 as the lowest digit.
fn pauli_coefficients<R: Real>(m: &CMatrix<R>) -> Vec<(usize, R)> {
    let dim = m.rows();
    let w = dim.trailing_zeros() as usize;
    let letters = [None, Some(Pauli::X), Some(Pauli::Y), Some(Pauli::Z)];
    let mut out = Vec::new();
    for code in 0..1usize << (2 * w) {
        let mut x = 0usize;
        let mut z = 0usize;
        let mut ny = 0u32;
        for k in 0..w {
            match letters[code >> (2 * k) & 3] {
                Some(Pauli::X) => x |= 1 << k,
                Some(Pauli::Y) => {
                    x |= 1 << k;
                    z |= 1 << k;
                    ny += 1;
                }
                Some(Pauli::Z) => z |= 1 << k,
                None => {}
            }
        }
        // tr(σ M) = Σ_b ⟨b|σ M|b⟩ = Σ_b phase(b^x) M[b^x][b]... with σ|c⟩ = i^{ny}(−1)^{|c&z|}|c^x⟩
        let mut tr = c_zero::<R>();
        for b in 0..dim {
            let cidx = b ^ x;
            let sign = if (cidx & z).count_ones() % 2 == 1 { -R::one() } else { R::one() };
            // ⟨b|σ = (σ|b⟩)† since σ is Hermitian: ⟨b|σ|c⟩ = i^{ny}(−1)^{|c&z|} δ_{b, c^x}
            tr += m[(cidx, b)] * sign;
        }
        let phase = match ny % 4 {
            0 => Complex::new(R::one(), R::zero()),
            1 => Complex::new(R::zero(), R::one()),
            2 => Complex::new(-R::one(), R::zero()),
            _ => Complex::new(R::zero(), -R::one()),
        };
        let c = (tr * phase).re / R::lit(dim as f64);
        if c.abs() > R::lit(1e-14) {
            out.push((code, c));
        }
    }
    out
}

impl<R: Real> PreparedTree<R> {
    pub fn new(tree: &HybridTree<R>) -> Result<Self> {
        let (shape, payloads) = Shape::build(tree);
        let nodes = payloads
            .into_par_iter()
            .map(|p| PreparedNode::new(p).map(Arc::new))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            shape: Arc::new(shape),
            nodes,
        })
    }

    pub fn num_params(&self) -> usize {
        self.shape.param_ranges.last().map_or(0, |r| r.1)
    }

    pub fn params(&self) -> Vec<R> {
        self.nodes.iter().flat_map(|n| n.payload.params()).collect()
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.shape.layout
    }

    /// True when every family is orthonormal by construction, so `⟨ψ|ψ⟩ = 1` exactly.
    pub fn is_self_normalizing(&self) -> bool {
        self.subtree_orthonormal(0)
    }

    /// Per parameter, whether it is a circuit angle (as opposed to a classical entry).
    pub fn quantum_param_mask(&self) -> Vec<bool> {
        self.nodes
            .iter()
            .flat_map(|n| std::iter::repeat_n(n.payload.is_quantum(), n.payload.num_params()))
            .collect()
    }

    fn owner(&self, index: usize) -> Option<usize> {
        self.shape
            .param_ranges
            .iter()
            .position(|&(a, b)| (a..b).contains(&index))
    }

    /// Copy with parameter `index` shifted by `delta`; only its node is re-simulated.
    pub fn with_param_shift(&self, index: usize, delta: R) -> Result<Self> {
        let v = self.owner(index).ok_or_else(|| {
            Error::InvalidArgument(format!("parameter {index} out of range ({})", self.num_params()))
        })?;
        let (start, _) = self.shape.param_ranges[v];
        let mut payload = self.nodes[v].payload.clone();
        let mut p = payload.params();
        p[index - start] += delta;
        payload.set_params(&p)?;
        let mut out = self.clone();
        out.nodes[v] = Arc::new(PreparedNode::new(payload)?);
        Ok(out)
    }

    /// Copy with all parameters replaced; nodes whose parameters are unchanged are shared.
    pub fn with_params(&self, params: &[R]) -> Result<Self> {
        if params.len() != self.num_params() {
            return Err(Error::Dimension(format!(
                "tree takes {} parameters, got {}",
                self.num_params(),
                params.len()
            )));
        }
        let nodes = self
            .nodes
            .par_iter()
            .zip(self.shape.param_ranges.par_iter())
            .map(|(node, &(a, b))| {
                let new = &params[a..b];
                if node.payload.params() == new {
                    Ok(node.clone())
                } else {
                    let mut payload = node.payload.clone();
                    payload.set_params(new)?;
                    Ok(Arc::new(PreparedNode::new(payload)?))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            shape: self.shape.clone(),
            nodes,
        })
    }

    fn subtree_key(&self, v: usize, obs: &ProductObservable) -> Vec<PauliString> {
        self.shape.below[v].iter().map(|&s| obs.factors[s].clone()).collect()
    }

    /// Orthonormal family by construction throughout the subtree.
    fn subtree_orthonormal(&self, v: usize) -> bool {
        self.nodes[v].orthonormal() && self.shape.children[v].iter().all(|&c| self.subtree_orthonormal(c))
    }

    fn check_obs(&self, obs: &ProductObservable) -> Result<()> {
        let layout = &self.shape.layout;
        if obs.factors.len() != layout.num_subsystems() {
            return Err(Error::InvalidArgument(format!(
                "observable has {} factors for {} subsystems",
                obs.factors.len(),
                layout.num_subsystems()
            )));
        }
        for (s, f) in obs.factors.iter().enumerate() {
            if let Some(q) = f.max_qubit() {
                if q >= layout.subsystem_size() {
                    return Err(Error::InvalidArgument(format!(
                        "factor {s} acts on local qubit {q} of a {}-qubit subsystem",
                        layout.subsystem_size()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Effective matrix of node `v` for `obs`, or `None` when it is exactly the identity.
    fn expect_matrix(
        &self,
        v: usize,
        obs: &ProductObservable,
        opts: &TreeEvalOptions,
        memo: &mut Memo<R>,
        stats: &mut EvalStats,
    ) -> Result<Option<CMatrix<R>>> {
        let key = (v, self.subtree_key(v, obs));
        if let Some(m) = memo.get(&key) {
            stats.cache_hits += 1;
            return Ok(m.clone());
        }
        let m = if key.1.iter().all(|p| p.is_identity()) && self.subtree_orthonormal(v) {
            None
        } else if self.shape.children[v].is_empty() {
            stats.branch_evaluations += 1;
            Some(self.leaf_matrix(v, &key.1[0], opts)?)
        } else {
            let ops = self.shape.children[v]
                .iter()
                .map(|&c| self.expect_matrix(c, obs, opts, memo, stats))
                .collect::<Result<Vec<_>>>()?;
            stats.branch_evaluations += 1;
            Some(self.internal_matrix(v, &ops, opts, &key.1)?)
        };
        memo.insert(key, m.clone());
        Ok(m)
    }

    fn leaf_matrix(&self, v: usize, local: &PauliString, opts: &TreeEvalOptions) -> Result<CMatrix<R>> {
        let node = &self.nodes[v];
        let raw = match &node.payload {
            Payload::Quantum(q) => measure_prepared(
                q,
                node.states.as_ref().unwrap(),
                &PauliTerm::unit(local.clone()),
                MeasureOptions {
                    strategy: opts.strategy,
                    shots: opts.shots,
                    seed: fnv(opts.seed, &[&v.to_le_bytes(), local.to_string().as_bytes()]),
                },
            )?,
            _ => {
                let n = self.shape.layout.subsystem_size();
                let ops: Vec<Option<CMatrix<R>>> = (0..n).map(|q| local.get(q).map(pauli_matrix)).collect();
                pair_matrix(node, node, &self.site_qubits(v), &ops)?
            }
        };
        Ok(HermitianObservable::from_measured(&raw).into_matrix())
    }

    /// Qubits of each child-facing site of a quantum node (single physical qubits at a leaf).
    fn site_qubits(&self, v: usize) -> Vec<Vec<usize>> {
        match &self.nodes[v].payload {
            Payload::Quantum(q) if !self.shape.children[v].is_empty() => {
                q.quantum_indices().iter().map(|i| i.qubits.clone()).collect()
            }
            Payload::Quantum(q) => (0..q.num_qubits()).map(|i| vec![i]).collect(),
            _ => vec![],
        }
    }

    fn internal_matrix(
        &self,
        v: usize,
        ops: &[Option<CMatrix<R>>],
        opts: &TreeEvalOptions,
        key: &[PauliString],
    ) -> Result<CMatrix<R>> {
        let node = &self.nodes[v];
        let sampled = opts.shots > 0 && node.payload.is_quantum();
        let raw = if sampled {
            self.sampled_quantum_matrix(v, ops, opts, key)?
        } else {
            pair_matrix(node, node, &self.site_qubits(v), ops)?
        };
        Ok(HermitianObservable::from_measured(&raw).into_matrix())
    }

    /// Expand `⊗ ops` into Pauli strings over the node's registers and
    /// estimate each string from samples.
    fn sampled_quantum_matrix(
        &self,
        v: usize,
        ops: &[Option<CMatrix<R>>],
        opts: &TreeEvalOptions,
        key: &[PauliString],
    ) -> Result<CMatrix<R>> {
        let node = &self.nodes[v];
        let Payload::Quantum(q) = &node.payload else { unreachable!() };
        let states = node.states.as_ref().unwrap();
        let sites = self.site_qubits(v);
        let letters = [None, Some(Pauli::X), Some(Pauli::Y), Some(Pauli::Z)];
        let mut expansion: Vec<(R, Vec<(usize, Pauli)>)> = vec![(R::one(), vec![])];
        for (op, qubits) in ops.iter().zip(&sites) {
            let Some(op) = op else { continue };
            let coeffs = pauli_coefficients(op);
            let mut next = Vec::with_capacity(expansion.len() * coeffs.len());
            for (c0, f0) in &expansion {
                for &(code, c1) in &coeffs {
                    let mut f = f0.clone();
                    for (k, &qb) in qubits.iter().enumerate() {
                        if let Some(p) = letters[code >> (2 * k) & 3] {
                            f.push((qb, p));
                        }
                    }
                    next.push((*c0 * c1, f));
                }
            }
            expansion = next;
        }
        let chi = states.len();
        let mut out = CMatrix::zeros(chi, chi);
        let base = fnv(opts.seed, &[&v.to_le_bytes(), format!("{key:?}").as_bytes()]);
        for (idx, (coef, factors)) in expansion.into_iter().enumerate() {
            let term = PauliTerm::new(coef, PauliString::new(factors)?);
            let seed = SeededRng::fork(base, idx as u64).next_u64();
            let m = if q.classical_indices().is_empty() {
                let e = sample_pauli_expectation(&states[0], &term, opts.shots, seed)?;
                CMatrix::from_vec(1, 1, vec![c_real(e)])?
            } else {
                let strategy = match opts.strategy {
                    MeasurementStrategy::HadamardTest | MeasurementStrategy::SuperpositionInput => opts.strategy,
                    _ => MeasurementStrategy::HadamardTest,
                };
                measure_prepared(q, states, &term, MeasureOptions { strategy, shots: opts.shots, seed })?
            };
            out = out.add(&m);
        }
        Ok(out)
    }

    /// Pre-compute the distinct leaf matrices of many observables in parallel.
    fn warm_leaves(
        &self,
        observables: &[&ProductObservable],
        opts: &TreeEvalOptions,
        memo: &mut Memo<R>,
        stats: &mut EvalStats,
    ) -> Result<()> {
        let mut wanted: Vec<(usize, PauliString)> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (v, s) in self.shape.subsystem.iter().enumerate() {
            let Some(s) = s else { continue };
            for obs in observables {
                let f = &obs.factors[*s];
                if f.is_identity() && self.nodes[v].orthonormal() {
                    continue;
                }
                if seen.insert((v, f.clone())) {
                    wanted.push((v, f.clone()));
                }
            }
        }
        let mats = wanted
            .par_iter()
            .map(|(v, f)| self.leaf_matrix(*v, f, opts))
            .collect::<Result<Vec<_>>>()?;
        stats.branch_evaluations += mats.len();
        for ((v, f), m) in wanted.into_iter().zip(mats) {
            memo.insert((v, vec![f]), Some(m));
        }
        Ok(())
    }

    fn root_value(
        &self,
        obs: &ProductObservable,
        opts: &TreeEvalOptions,
        memo: &mut Memo<R>,
        stats: &mut EvalStats,
    ) -> Result<R> {
        stats.root_evaluations += 1;
        let children = &self.shape.children[0];
        let ops = children
            .iter()
            .map(|&c| self.expect_matrix(c, obs, opts, memo, stats))
            .collect::<Result<Vec<_>>>()?;
        match opts.order {
            ContractionOrder::BranchesFirst => {
                let key = self.subtree_key(0, obs);
                let m = self.internal_matrix(0, &ops, opts, &key)?;
                Ok(m[(0, 0)].re)
            }
            ContractionOrder::RootFirst => {
                let density = self.root_density(opts)?;
                let dims: Vec<usize> = children
                    .iter()
                    .map(|&c| self.nodes[c].payload.up_dim())
                    .collect();
                Ok(contract_density(&density, &dims, &ops).re)
            }
        }
    }

    /// `D[d', d] = conj(T[d']) T[d]` over the joint child labels (first child fastest).
    fn root_density(&self, opts: &TreeEvalOptions) -> Result<CMatrix<R>> {
        let root = &self.nodes[0];
        match &root.payload {
            Payload::Quantum(q) => {
                let all: Vec<usize> = self.site_qubits(0).into_iter().flatten().collect();
                let merged: QuantumTensor<R> = q
                    .clone()
                    .with_quantum_indices(vec![("labels".into(), all)])?;
                let m = measure_prepared(
                    &merged,
                    root.states.as_ref().unwrap(),
                    &PauliTerm::unit(PauliString::identity()),
                    MeasureOptions {
                        strategy: MeasurementStrategy::PauliOpenIndex,
                        shots: opts.shots,
                        seed: fnv(opts.seed, &[b"root-density"]),
                    },
                )?;
                Ok(m)
            }
            Payload::Mps(m) => {
                let t = m.to_dense(0);
                Ok(CMatrix::from_fn(t.len(), t.len(), |a, b| t[a].conj() * t[b]))
            }
            Payload::Classical(c) => {
                let t = c.entries();
                Ok(CMatrix::from_fn(t.len(), t.len(), |a, b| t[a].conj() * t[b]))
            }
        }
    }

    /// Unnormalized `⟨ψ|O|ψ⟩` and `⟨ψ|ψ⟩`.
    fn raw_expectation(
        &self,
        obs: &ProductObservable,
        opts: &TreeEvalOptions,
        memo: &mut Memo<R>,
        stats: &mut EvalStats,
    ) -> Result<(R, R)> {
        self.check_obs(obs)?;
        let value = self.root_value(obs, opts, memo, stats)?;
        let id = ProductObservable::identity(obs.factors.len());
        let norm = self.root_value(&id, opts, memo, stats)?;
        Ok((value, norm))
    }

    /// `⟨ψ|O|ψ⟩ / ⟨ψ|ψ⟩`.
    pub fn expectation(&self, obs: &ProductObservable, opts: &TreeEvalOptions) -> Result<R> {
        let mut memo = Memo::new();
        let mut stats = EvalStats::default();
        let (v, n) = self.raw_expectation(obs, opts, &mut memo, &mut stats)?;
        Ok(v / n)
    }

    pub fn norm_sqr(&self) -> Result<R> {
        let id = ProductObservable::identity(self.shape.layout.num_subsystems());
        let mut memo = Memo::new();
        self.root_value(&id, &TreeEvalOptions::default(), &mut memo, &mut EvalStats::default())
    }

    /// `Σ c_t ⟨O_t⟩` over pre-decomposed terms, sharing branch matrices between terms.
    pub fn energy_terms(&self, terms: &[(R, ProductObservable)], opts: &TreeEvalOptions) -> Result<EnergyReport<R>> {
        let mut memo = Memo::new();
        let mut stats = EvalStats::default();
        for (_, o) in terms {
            self.check_obs(o)?;
        }
        let refs: Vec<&ProductObservable> = terms.iter().map(|(_, o)| o).collect();
        self.warm_leaves(&refs, opts, &mut memo, &mut stats)?;
        let id = ProductObservable::identity(self.shape.layout.num_subsystems());
        let norm = self.root_value(&id, opts, &mut memo, &mut stats)?;
        let mut energy = R::zero();
        for (c, o) in terms {
            stats.terms += 1;
            energy += *c * self.root_value(o, opts, &mut memo, &mut stats)?;
        }
        Ok(EnergyReport {
            energy: energy / norm,
            norm_sqr: norm,
            stats,
        })
    }

    pub fn energy(&self, h: &Hamiltonian<R>, opts: &TreeEvalOptions) -> Result<EnergyReport<R>> {
        if h.num_qubits() != self.shape.layout.num_qubits() {
            return Err(Error::InvalidArgument(format!(
                "Hamiltonian on {} qubits, tree holds {}",
                h.num_qubits(),
                self.shape.layout.num_qubits()
            )));
        }
        let terms = decompose_for_layout(h, &self.shape.layout)?;
        self.energy_terms(&terms, opts)
    }

    /// Raw effective matrices (before Hermitization) of every non-root node, pre-order.
    pub fn intermediate_observables(&self, obs: &ProductObservable) -> Result<Vec<(usize, CMatrix<R>)>> {
        self.check_obs(obs)?;
        let opts = TreeEvalOptions::default();
        let mut out = Vec::new();
        for v in 1..self.nodes.len() {
            let node = &self.nodes[v];
            let raw = if self.shape.children[v].is_empty() {
                let local = &obs.factors[self.shape.subsystem[v].unwrap()];
                match &node.payload {
                    Payload::Quantum(q) => measure_prepared(
                        q,
                        node.states.as_ref().unwrap(),
                        &PauliTerm::unit(local.clone()),
                        MeasureOptions::default(),
                    )?,
                    _ => {
                        let n = self.shape.layout.subsystem_size();
                        let ops: Vec<_> = (0..n).map(|q| local.get(q).map(pauli_matrix)).collect();
                        pair_matrix(node, node, &[], &ops)?
                    }
                }
            } else {
                let mut memo = Memo::new();
                let mut stats = EvalStats::default();
                let ops = self.shape.children[v]
                    .iter()
                    .map(|&c| self.expect_matrix(c, obs, &opts, &mut memo, &mut stats))
                    .collect::<Result<Vec<_>>>()?;
                pair_matrix(node, node, &self.site_qubits(v), &ops)?
            };
            out.push((v, raw));
        }
        Ok(out)
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        let same = Arc::ptr_eq(&self.shape, &other.shape)
            || (self.shape == other.shape
                && self.nodes.iter().zip(&other.nodes).all(|(a, b)| {
                    a.payload.kind() == b.payload.kind()
                        && a.payload.num_params() == b.payload.num_params()
                        && a.payload.up_dim() == b.payload.up_dim()
                }));
        if same {
            Ok(())
        } else {
            Err(Error::Structure("trees differ in structure or layout".into()))
        }
    }

    fn overlap_matrix(&self, other: &Self, v: usize) -> Result<Option<CMatrix<R>>> {
        if self.subtree_shared(other, v) && self.subtree_orthonormal(v) {
            return Ok(None);
        }
        let ops = self.shape.children[v]
            .iter()
            .map(|&c| self.overlap_matrix(other, c))
            .collect::<Result<Vec<_>>>()?;
        let ops = if ops.is_empty() {
            vec![None; self.shape.layout.subsystem_size()]
        } else {
            ops
        };
        Ok(Some(pair_matrix(&self.nodes[v], &other.nodes[v], &self.site_qubits(v), &ops)?))
    }

    fn subtree_shared(&self, other: &Self, v: usize) -> bool {
        Arc::ptr_eq(&self.nodes[v], &other.nodes[v])
            && self.shape.children[v].iter().all(|&c| self.subtree_shared(other, c))
    }

    /// Unnormalized `⟨ψ_self|ψ_other⟩`.
    pub fn overlap(&self, other: &Self) -> Result<Complex<R>> {
        self.same_shape(other)?;
        Ok(self
            .overlap_matrix(other, 0)?
            .map_or(Complex::new(R::one(), R::zero()), |m| m[(0, 0)]))
    }
}

/// `G[u', u] = ⟨T_bra^{u'}| ⊗_c X_c |T_ket^{u}⟩` for two nodes of the same shape;
/// `None` operators are identities.
fn pair_matrix<R: Real>(
    bra: &PreparedNode<R>,
    ket: &PreparedNode<R>,
    sites: &[Vec<usize>],
    ops: &[Option<CMatrix<R>>],
) -> Result<CMatrix<R>> {
    match (&bra.payload, &ket.payload) {
        (Payload::Quantum(_), Payload::Quantum(_)) => {
            let (sb, sk) = (bra.states.as_ref().unwrap(), ket.states.as_ref().unwrap());
            let acted: Vec<StateVector<R>> = sk
                .par_iter()
                .map(|s| {
                    let mut s = s.clone();
                    for (op, qubits) in ops.iter().zip(sites) {
                        if let Some(op) = op {
                            s = s.apply_operator(qubits, op)?;
                        }
                    }
                    Ok(s)
                })
                .collect::<Result<_>>()?;
            let mut m = CMatrix::zeros(sb.len(), acted.len());
            for (a, b) in sb.iter().enumerate() {
                for (c, k) in acted.iter().enumerate() {
                    m[(a, c)] = inner_product(b, k)?;
                }
            }
            Ok(m)
        }
        (Payload::Mps(b), Payload::Mps(k)) => {
            let refs: Vec<Option<&CMatrix<R>>> = ops.iter().map(|o| o.as_ref()).collect();
            family_matrix_element(b, k, &refs)
        }
        (Payload::Classical(b), Payload::Classical(k)) => {
            let up_b = if b.indices().len() > ops.len() { b.indices()[0].dim } else { 1 };
            let up_k = if k.indices().len() > ops.len() { k.indices()[0].dim } else { 1 };
            let dims: Vec<usize> = k.indices().iter().skip(usize::from(up_k > 1 || k.indices().len() > ops.len())).map(|i| i.dim).collect();
            let rest: usize = dims.iter().product();
            let mut g = CMatrix::zeros(up_b, up_k);
            for ub in 0..up_b {
                for uk in 0..up_k {
                    let tb: Vec<Complex<R>> = (0..rest).map(|d| b.entries()[ub + up_b * d]).collect();
                    let tk: Vec<Complex<R>> = (0..rest).map(|d| k.entries()[uk + up_k * d]).collect();
                    g[(ub, uk)] = contract_density_pair(&tb, &tk, &dims, ops);
                }
            }
            Ok(g)
        }
        _ => Err(Error::Structure("paired nodes carry different payload kinds".into())),
    }
}

fn digits(mut flat: usize, dims: &[usize]) -> Vec<usize> {
    dims.iter()
        .map(|&d| {
            let x = flat % d;
            flat /= d;
            x
        })
        .collect()
}

fn product_element<R: Real>(ops: &[Option<CMatrix<R>>], a: &[usize], b: &[usize]) -> Complex<R> {
    let mut el = Complex::new(R::one(), R::zero());
    for ((op, &x), &y) in ops.iter().zip(a).zip(b) {
        el *= match op {
            Some(m) => m[(x, y)],
            None if x == y => Complex::new(R::one(), R::zero()),
            None => return c_zero(),
        };
    }
    el
}

/// `Σ conj(a[d']) b[d] Π_c X_c[d'_c, d_c]`.
fn contract_density_pair<R: Real>(a: &[Complex<R>], b: &[Complex<R>], dims: &[usize], ops: &[Option<CMatrix<R>>]) -> Complex<R> {
    let mut acc = c_zero();
    for (i, ai) in a.iter().enumerate() {
        if *ai == c_zero() {
            continue;
        }
        let di = digits(i, dims);
        for (j, bj) in b.iter().enumerate() {
            acc += ai.conj() * bj * product_element(ops, &di, &digits(j, dims));
        }
    }
    acc
}

/// `Σ D[d', d] Π_c X_c[d'_c, d_c]`.
fn contract_density<R: Real>(d: &CMatrix<R>, dims: &[usize], ops: &[Option<CMatrix<R>>]) -> Complex<R> {
    let mut acc = c_zero();
    for i in 0..d.rows() {
        let di = digits(i, dims);
        for j in 0..d.cols() {
            let e = d[(i, j)];
            if e == c_zero() {
                continue;
            }
            acc += e * product_element(ops, &di, &digits(j, dims));
        }
    }
    acc
}

/// `⟨ψ|O|ψ⟩ / ⟨ψ|ψ⟩` for a product observable.
pub fn tree_expectation<R: Real>(tree: &HybridTree<R>, obs: &ProductObservable, shots: usize, seed: u64) -> Result<R> {
    tree_expectation_with(
        tree,
        obs,
        &TreeEvalOptions {
            shots,
            seed,
            ..TreeEvalOptions::default()
        },
    )
}

pub fn tree_expectation_with<R: Real>(tree: &HybridTree<R>, obs: &ProductObservable, opts: &TreeEvalOptions) -> Result<R> {
    PreparedTree::new(tree)?.expectation(obs, opts)
}

pub fn tree_energy<R: Real>(tree: &HybridTree<R>, h: &Hamiltonian<R>) -> Result<EnergyReport<R>> {
    tree_energy_with(tree, h, &TreeEvalOptions::default())
}

pub fn tree_energy_with<R: Real>(tree: &HybridTree<R>, h: &Hamiltonian<R>, opts: &TreeEvalOptions) -> Result<EnergyReport<R>> {
    PreparedTree::new(tree)?.energy(h, opts)
}

/// Unnormalized `⟨ψ_a|ψ_b⟩`.
pub fn tree_overlap<R: Real>(a: &HybridTree<R>, b: &HybridTree<R>) -> Result<Complex<R>> {
    PreparedTree::new(a)?.overlap(&PreparedTree::new(b)?)
}

/// `⟨ψ_a|ψ_b⟩ / (‖ψ_a‖ ‖ψ_b‖)`.
pub fn tree_overlap_normalized<R: Real>(a: &HybridTree<R>, b: &HybridTree<R>) -> Result<Complex<R>> {
    let (pa, pb) = (PreparedTree::new(a)?, PreparedTree::new(b)?);
    let raw = pa.overlap(&pb)?;
    Ok(raw / (pa.norm_sqr()? * pb.norm_sqr()?).sqrt())
}

pub fn tree_norm_sqr<R: Real>(tree: &HybridTree<R>) -> Result<R> {
    PreparedTree::new(tree)?.norm_sqr()
}
