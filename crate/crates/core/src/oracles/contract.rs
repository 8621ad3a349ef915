use crate::error::{Error, Result};
use crate::hybrid::{DenseTensor, IndexKind};
use crate::scalar::{c_zero, Real};

/// Largest product of the two operand sizes accepted by [`dense_contract_pair`].
pub const PAIR_SIZE_LIMIT: usize = 1 << 14;

#[derive(Clone, Debug, PartialEq)]
pub struct PairContraction<R> {
    pub tensor: DenseTensor<R>,
    /// Squared norm of the result, reported for Bell-projection (Case 5) edges.
    pub norm_sqr: Option<R>,
}

fn has_quantum(t: &DenseTensor<impl Real>) -> bool {
    t.kinds().contains(&IndexKind::Quantum)
}

/// Literal `Σ_i a[.., i, ..] b[.., i, ..]` over `a_axis` and `b_axis`.
///
/// `a` is the dense form of a quantum tensor (classical axes then quantum
/// axes); `b` is either a classical tensor (Cases 1, 2) or another quantum
/// tensor (Cases 3–5). Output axes are `a`'s remaining axes followed by `b`'s.
pub fn dense_contract_pair<R: Real>(
    a: &DenseTensor<R>,
    a_axis: usize,
    b: &DenseTensor<R>,
    b_axis: usize,
    case: u8,
) -> Result<PairContraction<R>> {
    if a.len().saturating_mul(b.len()) > PAIR_SIZE_LIMIT {
        return Err(Error::SizeExceeded {
            qubits: (a.len() * b.len()).trailing_zeros() as usize,
            limit: PAIR_SIZE_LIMIT.trailing_zeros() as usize,
        });
    }
    if a_axis >= a.rank() || b_axis >= b.rank() {
        return Err(Error::Dimension("contraction axis out of range".into()));
    }
    let d = a.dims()[a_axis];
    if b.dims()[b_axis] != d {
        return Err(Error::Dimension(format!(
            "axis dimensions differ: {d} vs {}",
            b.dims()[b_axis]
        )));
    }
    use IndexKind::*;
    let (ka, kb) = (a.kinds()[a_axis], b.kinds()[b_axis]);
    let ok = has_quantum(a)
        && match case {
            1 => ka == Classical && !has_quantum(b),
            2 => ka == Quantum && !has_quantum(b),
            3 => ka == Classical && kb == Classical && has_quantum(b),
            4 => ka == Quantum && kb == Classical && has_quantum(b),
            5 => ka == Quantum && kb == Quantum,
            _ => false,
        };
    if !ok {
        return Err(Error::InvalidArgument(format!(
            "axes ({ka:?}, {kb:?}) do not form a Case-{case} contraction"
        )));
    }

    let a_rest: Vec<usize> = (0..a.rank()).filter(|&i| i != a_axis).collect();
    let b_rest: Vec<usize> = (0..b.rank()).filter(|&i| i != b_axis).collect();
    let mut dims: Vec<usize> = a_rest.iter().map(|&i| a.dims()[i]).collect();
    dims.extend(b_rest.iter().map(|&i| b.dims()[i]));
    let mut kinds: Vec<IndexKind> = a_rest.iter().map(|&i| a.kinds()[i]).collect();
    kinds.extend(b_rest.iter().map(|&i| b.kinds()[i]));

    let mut out = DenseTensor::zeros(dims, kinds);
    let mut ia = vec![0usize; a.rank()];
    let mut ib = vec![0usize; b.rank()];
    for flat in 0..out.len() {
        let multi = out.unflatten(flat);
        for (k, &ax) in a_rest.iter().enumerate() {
            ia[ax] = multi[k];
        }
        for (k, &ax) in b_rest.iter().enumerate() {
            ib[ax] = multi[a_rest.len() + k];
        }
        let mut acc = c_zero();
        for i in 0..d {
            ia[a_axis] = i;
            ib[b_axis] = i;
            acc += a.get(&ia) * b.get(&ib);
        }
        out.data_mut()[flat] = acc;
    }
    let norm_sqr = (case == 5).then(|| out.norm_sqr());
    Ok(PairContraction { tensor: out, norm_sqr })
}
