#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::approx_constant)]

pub mod error;
pub mod hybrid;
pub mod linalg;
pub mod oracles;
pub mod pauli;
pub mod rng;
pub mod scalar;
pub mod statevector;
pub mod tree;
pub mod variational;

pub use error::{Error, Result};
pub use scalar::{Complex, Real};

pub type CMatrix64 = linalg::CMatrix<f64>;
pub type Hamiltonian64 = pauli::Hamiltonian<f64>;
pub type StateVector64 = statevector::StateVector<f64>;
pub type QuantumTensor64 = hybrid::QuantumTensor<f64>;
pub type MpsTensor64 = hybrid::MpsTensor<f64>;
pub type HybridTree64 = tree::HybridTree<f64>;
pub type PreparedTree64 = tree::PreparedTree<f64>;
pub type IteResult64 = variational::IteResult<f64>;

pub type CMatrix32 = linalg::CMatrix<f32>;
pub type Hamiltonian32 = pauli::Hamiltonian<f32>;
pub type StateVector32 = statevector::StateVector<f32>;
pub type QuantumTensor32 = hybrid::QuantumTensor<f32>;
pub type MpsTensor32 = hybrid::MpsTensor<f32>;
pub type HybridTree32 = tree::HybridTree<f32>;
pub type PreparedTree32 = tree::PreparedTree<f32>;
pub type IteResult32 = variational::IteResult<f32>;
