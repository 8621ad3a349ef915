//! Hybrid tree tensor networks: construction, bottom-up evaluation of
//! expectation values and overlaps, and cost accounting.

mod cost;
mod eval;

pub use cost::{cost_estimate, CostEstimate};
pub use eval::{
    tree_energy, tree_energy_with, tree_expectation, tree_expectation_with, tree_norm_sqr, tree_overlap,
    tree_overlap_normalized, ContractionOrder, EnergyReport, EvalStats, PreparedTree, TreeEvalOptions,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hybrid::{
    repeated_bit_inputs, ClassicalTensor, ContractionCase, FamilyMode, MpsTensor, QuantumTensor,
};
use crate::pauli::SubsystemLayout;
use crate::scalar::{Complex, Real};
use crate::statevector::Circuit;

#[derive(Clone, Debug, PartialEq)]
pub enum Payload<R> {
    Quantum(QuantumTensor<R>),
    Mps(MpsTensor<R>),
    Classical(ClassicalTensor<R>),
}

impl<R: Real> Payload<R> {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Quantum(_) => "quantum",
            Payload::Mps(_) => "mps",
            Payload::Classical(_) => "classical",
        }
    }

    pub fn is_quantum(&self) -> bool {
        matches!(self, Payload::Quantum(_))
    }

    /// Dimension of the index joining this node to its parent.
    fn up_dim(&self) -> usize {
        match self {
            Payload::Quantum(q) => q.num_labels(),
            Payload::Mps(m) => m.up_dim(),
            Payload::Classical(c) => c.indices().first().map_or(1, |i| i.dim),
        }
    }

    /// Dimensions of the indices facing the children (or the physical qubits at a leaf).
    fn down_dims(&self, is_root: bool, is_leaf: bool) -> Vec<usize> {
        match self {
            Payload::Quantum(q) if is_leaf => vec![2; q.num_qubits()],
            Payload::Quantum(q) => q.quantum_indices().iter().map(|i| i.index.dim).collect(),
            Payload::Mps(m) => m.cores().iter().map(|c| c.phys).collect(),
            Payload::Classical(c) => {
                let skip = usize::from(!is_root);
                c.indices().iter().skip(skip).map(|i| i.dim).collect()
            }
        }
    }

    pub fn num_params(&self) -> usize {
        match self {
            Payload::Quantum(q) => q.num_params(),
            Payload::Mps(m) => 2 * m.num_entries(),
            Payload::Classical(c) => 2 * c.entries().len(),
        }
    }

    pub fn params(&self) -> Vec<R> {
        match self {
            Payload::Quantum(q) => q.params().to_vec(),
            Payload::Mps(m) => m.to_real_params(),
            Payload::Classical(c) => c.entries().iter().flat_map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn set_params(&mut self, p: &[R]) -> Result<()> {
        match self {
            Payload::Quantum(q) => q.set_params(p),
            Payload::Mps(m) => m.set_real_params(p),
            Payload::Classical(c) => {
                if p.len() != 2 * c.entries().len() {
                    return Err(Error::Dimension(format!(
                        "classical tensor takes {} real parameters, got {}",
                        2 * c.entries().len(),
                        p.len()
                    )));
                }
                let entries = p.chunks_exact(2).map(|z| Complex::new(z[0], z[1])).collect();
                *c = ClassicalTensor::new(c.indices().to_vec(), entries)?;
                Ok(())
            }
        }
    }
}

/// Node of a hybrid tree. Leaves carry the subsystem whose qubits they hold.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeNode<R> {
    pub payload: Payload<R>,
    pub children: Vec<(ContractionCase, TreeNode<R>)>,
    pub subsystem: Option<usize>,
}

fn edge_case<R: Real>(parent: &Payload<R>, child: &Payload<R>) -> ContractionCase {
    match (parent.is_quantum(), child.is_quantum()) {
        (true, true) => ContractionCase::Case4,
        (false, true) => ContractionCase::Case1,
        (true, false) => ContractionCase::Case2,
        (false, false) => ContractionCase::ClassicalPair,
    }
}

impl<R: Real> TreeNode<R> {
    pub fn leaf(payload: Payload<R>, subsystem: usize) -> Self {
        Self {
            payload,
            children: vec![],
            subsystem: Some(subsystem),
        }
    }

    /// Internal node; edge cases are derived from the payload kinds.
    pub fn internal(payload: Payload<R>, children: Vec<TreeNode<R>>) -> Self {
        let children = children
            .into_iter()
            .map(|c| (edge_case(&payload, &c.payload), c))
            .collect();
        Self {
            payload,
            children,
            subsystem: None,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    fn depth(&self) -> usize {
        1 + self.children.iter().map(|(_, c)| c.depth()).max().unwrap_or(0)
    }

    fn max_degree(&self, is_root: bool) -> usize {
        let own = self.children.len() + usize::from(!is_root);
        self.children
            .iter()
            .map(|(_, c)| c.max_degree(false))
            .fold(own, usize::max)
    }

    /// Nodes in pre-order (root first).
    pub fn preorder(&self) -> Vec<&TreeNode<R>> {
        let mut out = vec![self];
        for (_, c) in &self.children {
            out.extend(c.preorder());
        }
        out
    }

    fn set_params_from(&mut self, p: &[R], offset: &mut usize) -> Result<()> {
        let k = self.payload.num_params();
        self.payload.set_params(&p[*offset..*offset + k])?;
        *offset += k;
        for (_, c) in &mut self.children {
            c.set_params_from(p, offset)?;
        }
        Ok(())
    }

    fn validate(&self, is_root: bool, n: usize, seen: &mut Vec<bool>) -> Result<()> {
        let leaf = self.is_leaf();
        match (&self.payload, is_root) {
            (Payload::Quantum(q), true) if !q.classical_indices().is_empty() => {
                return Err(Error::Structure("root quantum tensor must not have a classical index".into()))
            }
            (Payload::Quantum(q), false) if q.classical_indices().is_empty() => {
                return Err(Error::Structure(
                    "non-root quantum tensor needs a classical index towards its parent".into(),
                ))
            }
            (Payload::Mps(m), true) if m.up_dim() != 1 => {
                return Err(Error::Structure("root MPS must have a trivial left bond".into()))
            }
            (Payload::Classical(c), false) if c.indices().is_empty() => {
                return Err(Error::Structure("non-root classical tensor needs an index".into()))
            }
            _ => {}
        }
        let down = self.payload.down_dims(is_root, leaf);
        if leaf {
            let s = self
                .subsystem
                .ok_or_else(|| Error::Structure("leaf without a subsystem".into()))?;
            if s >= seen.len() || std::mem::replace(&mut seen[s], true) {
                return Err(Error::Structure(format!("subsystem {s} missing from layout or used twice")));
            }
            if down.len() != n || down.iter().any(|&d| d != 2) {
                return Err(Error::Structure(format!(
                    "leaf for subsystem {s} must hold {n} qubits, found sites {down:?}"
                )));
            }
            if is_root {
                return Err(Error::Structure("a tree needs at least one branch".into()));
            }
            return Ok(());
        }
        if self.subsystem.is_some() {
            return Err(Error::Structure("internal node carries a subsystem".into()));
        }
        if down.len() != self.children.len() {
            return Err(Error::Structure(format!(
                "{} node has {} child-facing indices but {} children",
                self.payload.kind(),
                down.len(),
                self.children.len()
            )));
        }
        for (d, (case, child)) in down.iter().zip(&self.children) {
            if *case != edge_case(&self.payload, &child.payload) {
                return Err(Error::Structure(format!("edge labelled {case:?} does not match its payloads")));
            }
            if child.payload.up_dim() != *d {
                return Err(Error::Dimension(format!(
                    "edge dimension mismatch: parent index {d}, child index {}",
                    child.payload.up_dim()
                )));
            }
            child.validate(false, n, seen)?;
        }
        Ok(())
    }
}

/// A validated hybrid tree over a subsystem layout.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridTree<R> {
    root: TreeNode<R>,
    layout: SubsystemLayout,
    depth: usize,
    max_degree: usize,
}

impl<R: Real> HybridTree<R> {
    pub fn new(root: TreeNode<R>, layout: SubsystemLayout) -> Result<Self> {
        let mut seen = vec![false; layout.num_subsystems()];
        root.validate(true, layout.subsystem_size(), &mut seen)?;
        if let Some(s) = seen.iter().position(|s| !s) {
            return Err(Error::Structure(format!("no leaf holds subsystem {s}")));
        }
        Ok(Self {
            depth: root.depth(),
            max_degree: root.max_degree(true),
            root,
            layout,
        })
    }

    pub fn root(&self) -> &TreeNode<R> {
        &self.root
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    /// Replace the layout (same `k` and `n`).
    pub fn with_layout(mut self, layout: SubsystemLayout) -> Result<Self> {
        if layout.num_subsystems() != self.layout.num_subsystems()
            || layout.subsystem_size() != self.layout.subsystem_size()
        {
            return Err(Error::Structure("layout shape differs from the tree".into()));
        }
        self.layout = layout;
        Ok(self)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn num_qubits(&self) -> usize {
        self.layout.num_qubits()
    }

    pub fn num_params(&self) -> usize {
        self.root.preorder().iter().map(|n| n.payload.num_params()).sum()
    }

    /// All parameters, node by node in pre-order.
    pub fn params(&self) -> Vec<R> {
        self.root.preorder().iter().flat_map(|n| n.payload.params()).collect()
    }

    pub fn set_params(&mut self, p: &[R]) -> Result<()> {
        if p.len() != self.num_params() {
            return Err(Error::Dimension(format!(
                "tree takes {} parameters, got {}",
                self.num_params(),
                p.len()
            )));
        }
        self.root.set_params_from(p, &mut 0)
    }

    pub fn with_params(&self, p: &[R]) -> Result<Self> {
        let mut t = self.clone();
        t.set_params(p)?;
        Ok(t)
    }

    /// True when every non-root family is orthonormal by construction and
    /// the root is a normalized quantum state, so the tree state has unit norm.
    pub fn is_self_normalizing(&self) -> bool {
        self.root.payload.is_quantum()
            && self.root.preorder().iter().skip(1).all(|n| match &n.payload {
                Payload::Quantum(q) => q.is_orthonormal_by_construction(),
                _ => false,
            })
    }

    pub fn describe(&self) -> TreeDescription {
        let mut nodes = Vec::new();
        describe_node(&self.root, None, None, &mut nodes);
        TreeDescription {
            subsystems: self.layout.num_subsystems(),
            subsystem_size: self.layout.subsystem_size(),
            depth: self.depth,
            max_degree: self.max_degree,
            num_params: self.num_params(),
            nodes,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.describe()).expect("tree description serializes")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TreeDescription {
    pub subsystems: usize,
    pub subsystem_size: usize,
    pub depth: usize,
    pub max_degree: usize,
    pub num_params: usize,
    pub nodes: Vec<NodeDescription>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NodeDescription {
    pub id: usize,
    pub parent: Option<usize>,
    pub edge: Option<ContractionCase>,
    pub payload: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub circuit_gates: Option<Vec<usize>>,
    pub num_params: usize,
    pub up_dim: usize,
    pub bond_dims: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subsystem: Option<usize>,
}

fn describe_node<R: Real>(
    node: &TreeNode<R>,
    parent: Option<usize>,
    edge: Option<ContractionCase>,
    out: &mut Vec<NodeDescription>,
) {
    let id = out.len();
    let (mode, gates) = match &node.payload {
        Payload::Quantum(q) => match q.mode() {
            FamilyMode::SharedUnitary { circuit, .. } => (Some("shared_unitary"), Some(vec![circuit.ops().len()])),
            FamilyMode::DistinctUnitaries { circuits } => (
                Some("distinct_unitaries"),
                Some(circuits.iter().map(|c| c.ops().len()).collect()),
            ),
        },
        _ => (None, None),
    };
    out.push(NodeDescription {
        id,
        parent,
        edge,
        payload: node.payload.kind(),
        mode,
        circuit_gates: gates,
        num_params: node.payload.num_params(),
        up_dim: if parent.is_some() { node.payload.up_dim() } else { 1 },
        bond_dims: node.payload.down_dims(parent.is_none(), node.is_leaf()),
        subsystem: node.subsystem,
    });
    for (case, c) in &node.children {
        describe_node(c, Some(id), Some(*case), out);
    }
}

fn split_params<R: Real>(params: &[R], counts: &[usize]) -> Result<Vec<Vec<R>>> {
    let total: usize = counts.iter().sum();
    if params.len() != total {
        return Err(Error::Dimension(format!("expected {total} parameters, got {}", params.len())));
    }
    let mut offset = 0;
    Ok(counts
        .iter()
        .map(|&k| {
            let s = params[offset..offset + k].to_vec();
            offset += k;
            s
        })
        .collect())
}

fn branch_family<R: Real>(circuit: Circuit, params: Vec<R>) -> Result<QuantumTensor<R>> {
    let n = circuit.num_qubits();
    QuantumTensor::shared(circuit, repeated_bit_inputs(n), "i", params)
}

fn check_branches(circuits: &[Circuit]) -> Result<usize> {
    let n = circuits
        .first()
        .map(|c| c.num_qubits())
        .ok_or_else(|| Error::InvalidArgument("need at least one branch".into()))?;
    if circuits.iter().any(|c| c.num_qubits() != n) {
        return Err(Error::Dimension("branch circuits act on different qubit counts".into()));
    }
    Ok(n)
}

/// Two-layer quantum-quantum tree: a `k`-qubit root state whose qubit `j` is
/// joined to the label of branch `j`, a shared circuit on inputs `|i⟩^{⊗n}`.
/// `params` holds the root parameters followed by each branch's.
pub fn build_two_layer_qq<R: Real>(
    root_circuit: Circuit,
    branch_circuits: Vec<Circuit>,
    params: &[R],
) -> Result<HybridTree<R>> {
    let k = branch_circuits.len();
    let n = check_branches(&branch_circuits)?;
    if root_circuit.num_qubits() != k {
        return Err(Error::Dimension(format!(
            "root acts on {} qubits for {k} branches",
            root_circuit.num_qubits()
        )));
    }
    let mut counts = vec![root_circuit.num_params()];
    counts.extend(branch_circuits.iter().map(|c| c.num_params()));
    let mut parts = split_params(params, &counts)?.into_iter();
    let root = QuantumTensor::state(root_circuit, parts.next().unwrap())?;
    let leaves = branch_circuits
        .into_iter()
        .zip(parts)
        .enumerate()
        .map(|(j, (c, p))| Ok(TreeNode::leaf(Payload::Quantum(branch_family(c, p)?), j)))
        .collect::<Result<Vec<_>>>()?;
    HybridTree::new(
        TreeNode::internal(Payload::Quantum(root), leaves),
        SubsystemLayout::block_major(k, n),
    )
}

/// Two-layer tree with an MPS root (one site of dimension 2 per branch) over
/// quantum branches. `branch_params` concatenates the branch parameters.
pub fn build_two_layer_qc<R: Real>(
    root: MpsTensor<R>,
    branch_circuits: Vec<Circuit>,
    branch_params: &[R],
) -> Result<HybridTree<R>> {
    let k = branch_circuits.len();
    let n = check_branches(&branch_circuits)?;
    if root.num_sites() != k {
        return Err(Error::Dimension(format!("root MPS has {} sites for {k} branches", root.num_sites())));
    }
    let counts: Vec<usize> = branch_circuits.iter().map(|c| c.num_params()).collect();
    let parts = split_params(branch_params, &counts)?;
    let leaves = branch_circuits
        .into_iter()
        .zip(parts)
        .enumerate()
        .map(|(j, (c, p))| Ok(TreeNode::leaf(Payload::Quantum(branch_family(c, p)?), j)))
        .collect::<Result<Vec<_>>>()?;
    HybridTree::new(
        TreeNode::internal(Payload::Mps(root), leaves),
        SubsystemLayout::block_major(k, n),
    )
}

/// Two-layer tree with a quantum root over MPS branch families; each branch
/// MPS has an open left bond of dimension 2 and `n` physical qubit sites.
pub fn build_two_layer_cq<R: Real>(
    root_circuit: Circuit,
    branches: Vec<MpsTensor<R>>,
    root_params: &[R],
) -> Result<HybridTree<R>> {
    let k = branches.len();
    let n = branches
        .first()
        .map(|m| m.num_sites())
        .ok_or_else(|| Error::InvalidArgument("need at least one branch".into()))?;
    if root_circuit.num_qubits() != k {
        return Err(Error::Dimension(format!(
            "root acts on {} qubits for {k} branches",
            root_circuit.num_qubits()
        )));
    }
    let root = QuantumTensor::state(root_circuit, root_params.to_vec())?;
    let leaves = branches
        .into_iter()
        .enumerate()
        .map(|(j, m)| TreeNode::leaf(Payload::Mps(m), j))
        .collect();
    HybridTree::new(
        TreeNode::internal(Payload::Quantum(root), leaves),
        SubsystemLayout::block_major(k, n),
    )
}
