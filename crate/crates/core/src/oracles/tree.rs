use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tree::{HybridTree, Payload, TreeNode};

/// Largest tree the dense oracle will materialize.
pub const DENSE_TREE_QUBIT_LIMIT: usize = 16;

/// Unnormalized amplitudes of the tree state over the global qubits, by
/// explicit summation over every bond label.
pub fn dense_tree_state(tree: &HybridTree<f64>) -> Result<Vec<Complex64>> {
    let layout = tree.layout();
    let n = layout.subsystem_size();
    let total = layout.num_qubits();
    if total > DENSE_TREE_QUBIT_LIMIT {
        return Err(Error::SizeExceeded {
            qubits: total,
            limit: DENSE_TREE_QUBIT_LIMIT,
        });
    }
    let (vecs, leaves) = subtree(tree.root(), true)?;
    let local = &vecs[0];
    // local qubit (leaf position j, site i) -> global qubit
    let map: Vec<usize> = leaves
        .iter()
        .flat_map(|&s| (0..n).map(move |i| layout.global(s, i)))
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); 1 << total];
    for (idx, a) in local.iter().enumerate() {
        let mut g = 0usize;
        for (bit, &q) in map.iter().enumerate() {
            if idx >> bit & 1 == 1 {
                g |= 1 << q;
            }
        }
        out[g] = *a;
    }
    Ok(out)
}

/// Child-facing site dimensions of an internal node.
fn sites(node: &TreeNode<f64>, is_root: bool) -> Vec<usize> {
    match &node.payload {
        Payload::Quantum(q) => q.quantum_indices().iter().map(|i| 1 << i.qubits.len()).collect(),
        Payload::Mps(m) => m.cores().iter().map(|c| c.phys).collect(),
        Payload::Classical(c) => c.indices().iter().skip(usize::from(!is_root)).map(|i| i.dim).collect(),
    }
}

fn up_dim(node: &TreeNode<f64>, is_root: bool) -> usize {
    if is_root {
        return 1;
    }
    match &node.payload {
        Payload::Quantum(q) => q.num_labels(),
        Payload::Mps(m) => m.cores()[0].left,
        Payload::Classical(c) => c.indices()[0].dim,
    }
}

/// `T[u; d]` for one up label and one assignment of site values.
fn coefficient(
    node: &TreeNode<f64>,
    states: &Option<Vec<Vec<Complex64>>>,
    u: usize,
    d: &[usize],
    up: usize,
    leaf: bool,
) -> Complex64 {
    match &node.payload {
        Payload::Quantum(q) => {
            let amps = &states.as_ref().unwrap()[u];
            let mut idx = 0usize;
            if leaf {
                for (i, &b) in d.iter().enumerate() {
                    idx |= b << i;
                }
            } else {
                for (qi, &v) in q.quantum_indices().iter().zip(d) {
                    for (k, &qb) in qi.qubits.iter().enumerate() {
                        idx |= (v >> k & 1) << qb;
                    }
                }
            }
            amps[idx]
        }
        Payload::Mps(m) => {
            let mut row = vec![Complex64::new(0.0, 0.0); m.cores()[0].left];
            row[u] = Complex64::new(1.0, 0.0);
            for (core, &p) in m.cores().iter().zip(d) {
                let mut next = vec![Complex64::new(0.0, 0.0); core.right];
                for (l, rl) in row.iter().enumerate() {
                    for (r, nr) in next.iter_mut().enumerate() {
                        *nr += rl * core.at(l, p, r);
                    }
                }
                row = next;
            }
            row[0]
        }
        Payload::Classical(c) => {
            let mut flat = 0usize;
            let mut stride = up;
            for (&v, i) in d.iter().zip(c.indices().iter().skip(c.indices().len() - d.len())) {
                flat += v * stride;
                stride *= i.dim;
            }
            c.entries()[u + flat]
        }
    }
}

/// Per up label, the dense vector over the subtree's leaves (first leaf lowest),
/// plus the subsystems of those leaves.
fn subtree(node: &TreeNode<f64>, is_root: bool) -> Result<(Vec<Vec<Complex64>>, Vec<usize>)> {
    let leaf = node.is_leaf();
    let up = up_dim(node, is_root);
    let states = match &node.payload {
        Payload::Quantum(q) => Some(
            q.states()?
                .into_iter()
                .map(|s| s.into_amplitudes())
                .collect::<Vec<_>>(),
        ),
        _ => None,
    };
    if leaf {
        let n = match &node.payload {
            Payload::Quantum(q) => q.num_qubits(),
            Payload::Mps(m) => m.num_sites(),
            Payload::Classical(c) => c.indices().len() - 1,
        };
        let vecs = (0..up)
            .map(|u| {
                (0..1usize << n)
                    .map(|idx| {
                        let bits: Vec<usize> = (0..n).map(|i| idx >> i & 1).collect();
                        coefficient(node, &states, u, &bits, up, true)
                    })
                    .collect()
            })
            .collect();
        return Ok((vecs, vec![node.subsystem.unwrap()]));
    }
    let dims = sites(node, is_root);
    let mut children = Vec::new();
    let mut leaves = Vec::new();
    for (_, c) in &node.children {
        let (v, l) = subtree(c, false)?;
        children.push(v);
        leaves.extend(l);
    }
    let sizes: Vec<usize> = children.iter().map(|c| c[0].len()).collect();
    let total: usize = sizes.iter().product();
    let combos: usize = dims.iter().product();
    let mut vecs = vec![vec![Complex64::new(0.0, 0.0); total]; up];
    for (u, out) in vecs.iter_mut().enumerate() {
        for flat in 0..combos {
            let mut rest = flat;
            let d: Vec<usize> = dims
                .iter()
                .map(|&k| {
                    let x = rest % k;
                    rest /= k;
                    x
                })
                .collect();
            let t = coefficient(node, &states, u, &d, up, false);
            if t == Complex64::new(0.0, 0.0) {
                continue;
            }
            // kron of children[c][d_c], child 0 in the lowest bits
            let mut prod = vec![t];
            for (c, &dc) in d.iter().enumerate() {
                let v = &children[c][dc];
                let mut next = Vec::with_capacity(prod.len() * v.len());
                for b in v {
                    for a in &prod {
                        next.push(a * b);
                    }
                }
                prod = next;
            }
            for (o, p) in out.iter_mut().zip(prod) {
                *o += p;
            }
        }
    }
    Ok((vecs, leaves))
}
