use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{c_one, Real};
use crate::statevector::StateVector;

use super::{ClassicalTensor, DenseTensor, IndexKind, QuantumTensor, TensorIndex};

pub const DEFAULT_BELL_BUDGET: usize = 2;

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq)]
pub enum Node<R> {
    Quantum(QuantumTensor<R>),
    Classical(ClassicalTensor<R>),
}

impl<R: Real> Node<R> {
    /// Classical indices first, then quantum indices.
    fn indices(&self) -> Vec<&TensorIndex> {
        match self {
            Node::Quantum(q) => q.indices().collect(),
            Node::Classical(c) => c.indices().iter().collect(),
        }
    }

    fn index(&self, label: &str) -> Option<&TensorIndex> {
        self.indices().into_iter().find(|i| i.label == label)
    }

    fn is_quantum(&self) -> bool {
        matches!(self, Node::Quantum(_))
    }
}

/// Edge type by the kinds of the two joined indices and their owning tensors.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ContractionCase {
    /// Classical index of a quantum tensor with a classical tensor.
    Case1,
    /// Quantum index of a quantum tensor with a classical tensor.
    Case2,
    /// Classical indices of two quantum tensors.
    Case3,
    /// Quantum index with a classical index, both on quantum tensors.
    Case4,
    /// Quantum indices of two quantum tensors (Bell projection).
    Case5,
    /// Two classical tensors; ordinary index summation.
    ClassicalPair,
}

impl ContractionCase {
    pub fn number(self) -> Option<u8> {
        match self {
            ContractionCase::Case1 => Some(1),
            ContractionCase::Case2 => Some(2),
            ContractionCase::Case3 => Some(3),
            ContractionCase::Case4 => Some(4),
            ContractionCase::Case5 => Some(5),
            ContractionCase::ClassicalPair => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Endpoint {
    pub node: NodeId,
    pub index: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
struct Edge {
    a: Endpoint,
    b: Endpoint,
    case: ContractionCase,
}

/// Network of quantum and classical tensors joined by typed edges.
#[derive(Clone, Debug)]
pub struct HybridNetwork<R> {
    nodes: Vec<Node<R>>,
    edges: Vec<Edge>,
    used: HashSet<Endpoint>,
    bell_budget: usize,
}

impl<R: Real> Default for HybridNetwork<R> {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NetworkDescription {
    pub nodes: Vec<NodeDescription>,
    pub edges: Vec<EdgeDescription>,
    pub bell_budget: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct NodeDescription {
    pub id: NodeId,
    pub kind: &'static str,
    pub indices: Vec<TensorIndex>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EdgeDescription {
    pub a: Endpoint,
    pub b: Endpoint,
    pub case: ContractionCase,
}

/// Result of contracting every edge. Open axes are ordered by node, and
/// within a node classical indices precede quantum ones.
#[derive(Clone, Debug)]
pub struct RealizedState<R> {
    pub open: Vec<Endpoint>,
    pub tensor: DenseTensor<R>,
    /// `Σ |entries|²`, reported because Bell projections do not preserve the norm.
    pub norm_sqr: R,
    pub bell_edges: usize,
}

impl<R: Real> HybridNetwork<R> {
    pub fn new() -> Self {
        Self::with_bell_budget(DEFAULT_BELL_BUDGET)
    }

    pub fn with_bell_budget(r: usize) -> Self {
        Self {
            nodes: Vec::new(),
            edges: Vec::new(),
            used: HashSet::new(),
            bell_budget: r,
        }
    }

    pub fn add_quantum(&mut self, t: QuantumTensor<R>) -> NodeId {
        self.nodes.push(Node::Quantum(t));
        self.nodes.len() - 1
    }

    pub fn add_classical(&mut self, t: ClassicalTensor<R>) -> NodeId {
        self.nodes.push(Node::Classical(t));
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[Node<R>] {
        &self.nodes
    }

    pub fn bell_edges(&self) -> usize {
        self.edges.iter().filter(|e| e.case == ContractionCase::Case5).count()
    }

    pub fn edge_cases(&self) -> Vec<ContractionCase> {
        self.edges.iter().map(|e| e.case).collect()
    }

    /// Join two indices and record the classified edge. The quantum-tensor
    /// side is normalized to `a` where the case definition distinguishes sides.
    pub fn connect(&mut self, a: (NodeId, &str), b: (NodeId, &str)) -> Result<ContractionCase> {
        let ea = Endpoint {
            node: a.0,
            index: a.1.to_string(),
        };
        let eb = Endpoint {
            node: b.0,
            index: b.1.to_string(),
        };
        if ea == eb {
            return Err(Error::IndexReused(format!("{}:{} joined to itself", a.0, a.1)));
        }
        let ia = self.lookup(&ea)?.clone();
        let ib = self.lookup(&eb)?.clone();
        for e in [&ea, &eb] {
            if self.used.contains(e) {
                return Err(Error::IndexReused(format!("{}:{}", e.node, e.index)));
            }
        }
        if ia.dim != ib.dim {
            return Err(Error::Dimension(format!(
                "cannot join `{}` (dim {}) with `{}` (dim {})",
                ia.label, ia.dim, ib.label, ib.dim
            )));
        }
        let (qa, qb) = (self.nodes[a.0].is_quantum(), self.nodes[b.0].is_quantum());
        use IndexKind::*;
        let (case, ea, eb) = match (qa, qb) {
            (false, false) => (ContractionCase::ClassicalPair, ea, eb),
            (true, false) | (false, true) => {
                let (eq, ec, iq) = if qa { (ea, eb, &ia) } else { (eb, ea, &ib) };
                let case = match iq.kind {
                    Classical => ContractionCase::Case1,
                    Quantum => ContractionCase::Case2,
                };
                (case, eq, ec)
            }
            (true, true) => match (ia.kind, ib.kind) {
                (Classical, Classical) => (ContractionCase::Case3, ea, eb),
                (Quantum, Quantum) => (ContractionCase::Case5, ea, eb),
                (Quantum, Classical) => (ContractionCase::Case4, ea, eb),
                (Classical, Quantum) => (ContractionCase::Case4, eb, ea),
            },
        };
        if case == ContractionCase::Case5 && self.bell_edges() >= self.bell_budget {
            return Err(Error::BellBudgetExceeded {
                budget: self.bell_budget,
            });
        }
        self.used.insert(ea.clone());
        self.used.insert(eb.clone());
        self.edges.push(Edge { a: ea, b: eb, case });
        Ok(case)
    }

    fn lookup(&self, e: &Endpoint) -> Result<&TensorIndex> {
        let node = self
            .nodes
            .get(e.node)
            .ok_or_else(|| Error::UnknownIndex(format!("no node {}", e.node)))?;
        node.index(&e.index)
            .ok_or_else(|| Error::UnknownIndex(format!("node {} has no index `{}`", e.node, e.index)))
    }

    pub fn describe(&self) -> NetworkDescription {
        NetworkDescription {
            nodes: self
                .nodes
                .iter()
                .enumerate()
                .map(|(id, n)| NodeDescription {
                    id,
                    kind: if n.is_quantum() { "quantum" } else { "classical" },
                    indices: n.indices().into_iter().cloned().collect(),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDescription {
                    a: e.a.clone(),
                    b: e.b.clone(),
                    case: e.case,
                })
                .collect(),
            bell_budget: self.bell_budget,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.describe()).expect("network description serializes")
    }

    /// Contract every edge and return the global (possibly unnormalized) state.
    pub fn realize(&self) -> Result<RealizedState<R>> {
        if self.nodes.is_empty() {
            return Err(Error::InvalidArgument("empty network".into()));
        }
        let mut comp: Vec<Option<Family<R>>> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(id, n)| Family::from_node(id, n).map(Some))
            .collect::<Result<_>>()?;
        let mut owner: Vec<usize> = (0..self.nodes.len()).collect();

        for edge in &self.edges {
            let (ca, cb) = (owner[edge.a.node], owner[edge.b.node]);
            let merged = if ca == cb {
                comp[ca].take().unwrap()
            } else {
                let fa = comp[ca].take().unwrap();
                let fb = comp[cb].take().unwrap();
                for o in owner.iter_mut() {
                    if *o == cb {
                        *o = ca;
                    }
                }
                Family::merge(fa, fb)
            };
            comp[ca] = Some(merged.contract(&edge.a, &edge.b)?);
        }

        let mut remaining = comp.into_iter().flatten();
        let mut family = remaining.next().unwrap();
        for f in remaining {
            family = Family::merge(family, f);
        }

        let mut open: Vec<Endpoint> = Vec::new();
        for (id, n) in self.nodes.iter().enumerate() {
            for idx in n.indices() {
                let e = Endpoint {
                    node: id,
                    index: idx.label.clone(),
                };
                if !self.used.contains(&e) {
                    open.push(e);
                }
            }
        }
        let tensor = family.to_dense(&open)?;
        Ok(RealizedState {
            norm_sqr: tensor.norm_sqr(),
            open,
            tensor,
            bell_edges: self.bell_edges(),
        })
    }
}

#[derive(Clone, Debug)]
struct ClassicalSlot {
    at: Endpoint,
    dim: usize,
}

#[derive(Clone, Debug)]
struct QuantumSlot {
    at: Endpoint,
    width: usize,
}

/// A component during realization: one register state per joint value of
/// the classical slots (first slot fastest). Quantum slots occupy
/// consecutive qubit ranges in slot order.
#[derive(Clone, Debug)]
struct Family<R> {
    classical: Vec<ClassicalSlot>,
    quantum: Vec<QuantumSlot>,
    states: Vec<StateVector<R>>,
}

impl<R: Real> Family<R> {
    fn from_node(id: NodeId, node: &Node<R>) -> Result<Self> {
        match node {
            Node::Quantum(q) => {
                let mut order = Vec::with_capacity(q.num_qubits());
                let mut quantum = Vec::new();
                for qi in q.quantum_indices() {
                    order.extend_from_slice(&qi.qubits);
                    quantum.push(QuantumSlot {
                        at: Endpoint {
                            node: id,
                            index: qi.index.label.clone(),
                        },
                        width: qi.qubits.len(),
                    });
                }
                let states = q
                    .states()?
                    .iter()
                    .map(|s| s.permute_qubits(&order))
                    .collect::<Result<_>>()?;
                Ok(Self {
                    classical: classical_slots(id, q.classical_indices()),
                    quantum,
                    states,
                })
            }
            Node::Classical(c) => Ok(Self {
                classical: classical_slots(id, c.indices()),
                quantum: vec![],
                states: c
                    .entries()
                    .iter()
                    .map(|&z| StateVector::from_amplitudes(vec![z]))
                    .collect::<Result<_>>()?,
            }),
        }
    }

    fn num_qubits(&self) -> usize {
        self.quantum.iter().map(|s| s.width).sum()
    }

    fn classical_dims(&self) -> Vec<usize> {
        self.classical.iter().map(|s| s.dim).collect()
    }

    /// `a` occupies the low qubits and the fast classical positions.
    fn merge(a: Self, b: Self) -> Self {
        let mut states = Vec::with_capacity(a.states.len() * b.states.len());
        for sb in &b.states {
            for sa in &a.states {
                states.push(StateVector::kron(sa, sb));
            }
        }
        let mut classical = a.classical;
        classical.extend(b.classical);
        let mut quantum = a.quantum;
        quantum.extend(b.quantum);
        Self {
            classical,
            quantum,
            states,
        }
    }

    fn qubit_range(&self, slot: usize) -> Vec<usize> {
        let start: usize = self.quantum[..slot].iter().map(|s| s.width).sum();
        (start..start + self.quantum[slot].width).collect()
    }

    fn find_classical(&self, e: &Endpoint) -> Option<usize> {
        self.classical.iter().position(|s| &s.at == e)
    }

    fn find_quantum(&self, e: &Endpoint) -> Option<usize> {
        self.quantum.iter().position(|s| &s.at == e)
    }

    /// Sum over the joined value of the two endpoints (both already in this family).
    fn contract(self, a: &Endpoint, b: &Endpoint) -> Result<Self> {
        match (self.find_classical(a), self.find_classical(b)) {
            (Some(x), Some(y)) => Ok(self.contract_cc(x, y)),
            (Some(x), None) => {
                let q = self.slot_q(b)?;
                self.contract_qc(q, x)
            }
            (None, Some(y)) => {
                let q = self.slot_q(a)?;
                self.contract_qc(q, y)
            }
            (None, None) => {
                let (x, y) = (self.slot_q(a)?, self.slot_q(b)?);
                self.contract_qq(x, y)
            }
        }
    }

    fn slot_q(&self, e: &Endpoint) -> Result<usize> {
        self.find_quantum(e)
            .ok_or_else(|| Error::Structure(format!("endpoint {}:{} lost during realization", e.node, e.index)))
    }

    /// Iterate over the joint labels with slot `drop` removed; yields
    /// `(new_label, old_labels_for_each_value_of_drop)`.
    fn reduced_labels(dims: &[usize], drop: &[usize]) -> (Vec<usize>, Vec<Vec<usize>>) {
        let kept: Vec<usize> = (0..dims.len()).filter(|i| !drop.contains(i)).collect();
        let new_dims: Vec<usize> = kept.iter().map(|&i| dims[i]).collect();
        let n_new: usize = new_dims.iter().product();
        let d = dims[drop[0]];
        let mut table = Vec::with_capacity(n_new);
        for flat in 0..n_new {
            let mut multi = vec![0; dims.len()];
            let mut rem = flat;
            for (&k, &nd) in kept.iter().zip(&new_dims) {
                multi[k] = rem % nd;
                rem /= nd;
            }
            let olds = (0..d)
                .map(|v| {
                    for &dd in drop {
                        multi[dd] = v;
                    }
                    DenseTensor::<R>::flatten_with(&multi, dims)
                })
                .collect();
            table.push(olds);
        }
        (new_dims, table)
    }

    fn contract_cc(mut self, x: usize, y: usize) -> Self {
        let dims = self.classical_dims();
        let (_, table) = Self::reduced_labels(&dims, &[x, y]);
        let states = table
            .iter()
            .map(|olds| {
                let mut acc = self.states[olds[0]].zeros_like();
                for &o in olds {
                    acc.axpy(c_one(), &self.states[o]);
                }
                acc
            })
            .collect();
        let (hi, lo) = (x.max(y), x.min(y));
        self.classical.remove(hi);
        self.classical.remove(lo);
        self.states = states;
        self
    }

    fn contract_qc(mut self, qslot: usize, cslot: usize) -> Result<Self> {
        let qubits = self.qubit_range(qslot);
        let dims = self.classical_dims();
        let (_, table) = Self::reduced_labels(&dims, &[cslot]);
        let states = table
            .iter()
            .map(|olds| {
                let mut acc: Option<StateVector<R>> = None;
                for (v, &o) in olds.iter().enumerate() {
                    let p = self.states[o].project_register(&qubits, v)?;
                    match &mut acc {
                        None => acc = Some(p),
                        Some(a) => a.axpy(c_one(), &p),
                    }
                }
                Ok(acc.unwrap())
            })
            .collect::<Result<_>>()?;
        self.classical.remove(cslot);
        self.quantum.remove(qslot);
        self.states = states;
        Ok(self)
    }

    fn contract_qq(mut self, x: usize, y: usize) -> Result<Self> {
        let (rx, ry) = (self.qubit_range(x), self.qubit_range(y));
        let w = rx.len();
        let mut qubits = rx;
        qubits.extend(ry);
        let states = self
            .states
            .iter()
            .map(|s| {
                let mut acc: Option<StateVector<R>> = None;
                for v in 0..1usize << w {
                    let p = s.project_register(&qubits, v | v << w)?;
                    match &mut acc {
                        None => acc = Some(p),
                        Some(a) => a.axpy(c_one(), &p),
                    }
                }
                Ok(acc.unwrap())
            })
            .collect::<Result<_>>()?;
        let (hi, lo) = (x.max(y), x.min(y));
        self.quantum.remove(hi);
        self.quantum.remove(lo);
        self.states = states;
        Ok(self)
    }

    /// Lay the family out as a dense tensor over `open` (every slot must appear).
    fn to_dense(&self, open: &[Endpoint]) -> Result<DenseTensor<R>> {
        if open.len() != self.classical.len() + self.quantum.len() {
            return Err(Error::Structure("open index bookkeeping mismatch".into()));
        }
        enum Src {
            C(usize),
            Q(Vec<usize>),
        }
        let mut dims = Vec::with_capacity(open.len());
        let mut kinds = Vec::with_capacity(open.len());
        let mut srcs = Vec::with_capacity(open.len());
        let slots: HashMap<&Endpoint, (usize, bool)> = self
            .classical
            .iter()
            .enumerate()
            .map(|(i, s)| (&s.at, (i, false)))
            .chain(self.quantum.iter().enumerate().map(|(i, s)| (&s.at, (i, true))))
            .collect();
        for e in open {
            let &(i, is_q) = slots
                .get(e)
                .ok_or_else(|| Error::Structure(format!("open index {}:{} not found", e.node, e.index)))?;
            if is_q {
                dims.push(1 << self.quantum[i].width);
                kinds.push(IndexKind::Quantum);
                srcs.push(Src::Q(self.qubit_range(i)));
            } else {
                dims.push(self.classical[i].dim);
                kinds.push(IndexKind::Classical);
                srcs.push(Src::C(i));
            }
        }
        let cdims = self.classical_dims();
        debug_assert_eq!(self.states[0].num_qubits(), self.num_qubits());
        let mut out = DenseTensor::zeros(dims, kinds);
        for flat in 0..out.len() {
            let multi = out.unflatten(flat);
            let mut cl = vec![0; cdims.len()];
            let mut amp = 0usize;
            for (src, &v) in srcs.iter().zip(&multi) {
                match src {
                    Src::C(i) => cl[*i] = v,
                    Src::Q(qs) => {
                        for (bit, &q) in qs.iter().enumerate() {
                            if v >> bit & 1 == 1 {
                                amp |= 1 << q;
                            }
                        }
                    }
                }
            }
            let label = DenseTensor::<R>::flatten_with(&cl, &cdims);
            out.data_mut()[flat] = self.states[label].amplitudes()[amp];
        }
        Ok(out)
    }
}

fn classical_slots(id: NodeId, indices: &[TensorIndex]) -> Vec<ClassicalSlot> {
    indices
        .iter()
        .map(|i| ClassicalSlot {
            at: Endpoint {
                node: id,
                index: i.label.clone(),
            },
            dim: i.dim,
        })
        .collect()
}
