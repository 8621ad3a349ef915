use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMatrix};
use crate::scalar::{Complex, Real};

/// Overlap eigenvalues below this are discarded.
pub const SUBSPACE_CUTOFF: f64 = 1e-10;

/// `H^{ij} = ⟨ψ^i|H|ψ^j⟩` and `S^{ij} = ⟨ψ^i|ψ^j⟩` over a fixed span.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceProblem<R: Real> {
    pub h: CMatrix<R>,
    pub s: CMatrix<R>,
}

/// Lowest solution of `H α = λ S α` with `α† S α = 1`, by reduction onto the
/// well-conditioned eigenbasis of `S`.
pub fn solve_subspace<R: Real>(p: &SubspaceProblem<R>) -> Result<(R, Vec<Complex<R>>)> {
    let n = p.s.rows();
    if !p.s.is_square() || !p.h.is_square() || p.h.rows() != n {
        return Err(Error::Dimension("H and S must be square and of equal size".into()));
    }
    let (svals, svecs) = hermitian_eigen(&p.s)?;
    let keep: Vec<usize> = (0..n).filter(|&i| svals[i] > R::lit(SUBSPACE_CUTOFF)).collect();
    if keep.is_empty() {
        return Err(Error::Singular("overlap matrix is numerically zero".into()));
    }
    // V = U_k Λ_k^{-1/2}
    let v = CMatrix::from_fn(n, keep.len(), |r, c| svecs[(r, keep[c])] / svals[keep[c]].sqrt());
    let reduced = v.adjoint().matmul(&p.h.hermitized()).matmul(&v);
    let (hvals, hvecs) = hermitian_eigen(&reduced)?;
    let y: Vec<Complex<R>> = (0..keep.len()).map(|i| hvecs[(i, 0)]).collect();
    Ok((hvals[0], v.matvec(&y)))
}
