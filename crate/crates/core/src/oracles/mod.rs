//! Brute-force references: exact diagonalization, literal pair contraction
//! and dense materialization of hybrid trees.

mod contract;
mod ed;
mod tree;

pub use contract::{dense_contract_pair, PairContraction, PAIR_SIZE_LIMIT};
pub use ed::{
    apply_hamiltonian, dense_matrix, exact_ground_energy, exact_ground_energy_with, residual_norm, EdMethod,
    GroundState, LanczosOptions, OperatorForm, SparseOperator, AUTO_DENSE_THRESHOLD, DENSE_QUBIT_LIMIT,
    LANCZOS_QUBIT_LIMIT,
};
pub use tree::{dense_tree_state, DENSE_TREE_QUBIT_LIMIT};

#[cfg(test)]
mod tests;
