use serde::Serialize;

use crate::scalar::Real;

use super::{HybridTree, TreeNode};

/// Cost model of one local-observable evaluation on a `(D, t)` tree.
///
/// A quantum node costs `C_q = χ²/ε²` (shots to resolve a `χ × χ` matrix to
/// precision `ε`), a classical node `C_c = tχ⁴`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostEstimate {
    /// Quantum tensors measured below the root.
    pub quantum_evals: usize,
    /// Root evaluations per observable.
    pub root_evals: usize,
    /// Classical contraction flops over all classical nodes.
    pub classical_flops: f64,
    pub leaves: usize,
    pub depth: usize,
    pub max_degree: usize,
    pub bond_dim: usize,
    pub c_q: f64,
    pub c_c: f64,
    /// `C_q·n_q + C_c·n_c` per layer, root layer first.
    pub layer_costs: Vec<f64>,
    pub total_cost: f64,
    /// `Σ_{i=1}^{D} t^{i-1} (C_q + C_c)`.
    pub bound: f64,
    /// `t^{D-1}`; equals the leaf count of a full two-layer tree.
    pub leading_factor: f64,
}

pub fn cost_estimate<R: Real>(tree: &HybridTree<R>, epsilon: f64) -> CostEstimate {
    assert!(epsilon > 0.0, "epsilon must be positive");
    let mut layers: Vec<(usize, usize)> = Vec::new();
    let mut bond = 1usize;
    let mut leaves = 0usize;
    fn walk<R: Real>(n: &TreeNode<R>, level: usize, layers: &mut Vec<(usize, usize)>, bond: &mut usize, leaves: &mut usize) {
        if layers.len() <= level {
            layers.push((0, 0));
        }
        if n.payload.is_quantum() {
            layers[level].0 += 1;
        } else {
            layers[level].1 += 1;
        }
        if level > 0 {
            *bond = (*bond).max(n.payload.up_dim());
        }
        if n.is_leaf() {
            *leaves += 1;
        }
        for (_, c) in &n.children {
            walk(c, level + 1, layers, bond, leaves);
        }
    }
    walk(tree.root(), 0, &mut layers, &mut bond, &mut leaves);

    let t = tree.max_degree() as f64;
    let chi = bond as f64;
    let c_q = chi * chi / (epsilon * epsilon);
    let c_c = t * chi.powi(4);
    let layer_costs: Vec<f64> = layers.iter().map(|&(q, c)| c_q * q as f64 + c_c * c as f64).collect();
    let depth = tree.depth();
    let quantum_nodes: usize = layers.iter().map(|l| l.0).sum();
    let classical_nodes: usize = layers.iter().map(|l| l.1).sum();
    CostEstimate {
        quantum_evals: quantum_nodes - usize::from(tree.root().payload.is_quantum()),
        root_evals: 1,
        classical_flops: classical_nodes as f64 * c_c,
        leaves,
        depth,
        max_degree: tree.max_degree(),
        bond_dim: bond,
        c_q,
        c_c,
        total_cost: layer_costs.iter().sum(),
        layer_costs,
        bound: (0..depth).map(|i| t.powi(i as i32) * (c_q + c_c)).sum(),
        leading_factor: t.powi(depth as i32 - 1),
    }
}
