use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::rng::SeededRng;
use crate::scalar::{c_one, c_zero, Complex, Real};

/// Rank-3 core `A[l, p, r]` stored at `(l * phys + p) * right + r`.
#[derive(Clone, Debug, PartialEq)]
pub struct MpsCore<R> {
    pub left: usize,
    pub phys: usize,
    pub right: usize,
    pub data: Vec<Complex<R>>,
}

impl<R: Real> MpsCore<R> {
    pub fn new(left: usize, phys: usize, right: usize, data: Vec<Complex<R>>) -> Result<Self> {
        if left == 0 || phys == 0 || right == 0 {
            return Err(Error::Dimension("MPS core with a zero dimension".into()));
        }
        if data.len() != left * phys * right {
            return Err(Error::Dimension(format!(
                "core {left}x{phys}x{right} needs {} entries, got {}",
                left * phys * right,
                data.len()
            )));
        }
        Ok(Self {
            left,
            phys,
            right,
            data,
        })
    }

    #[inline]
    pub fn at(&self, l: usize, p: usize, r: usize) -> Complex<R> {
        self.data[(l * self.phys + p) * self.right + r]
    }
}

/// Matrix product state. The left boundary bond may exceed 1 only for a
/// family (one open "up" index labelling a set of states); the right
/// boundary bond is always 1.
#[derive(Clone, Debug, PartialEq)]
pub struct MpsTensor<R> {
    cores: Vec<MpsCore<R>>,
}

impl<R: Real> MpsTensor<R> {
    /// A single MPS state; both boundary bonds must be 1.
    pub fn new(cores: Vec<MpsCore<R>>) -> Result<Self> {
        let m = Self::family(cores)?;
        if m.cores[0].left != 1 {
            return Err(Error::Dimension("left boundary bond must be 1".into()));
        }
        Ok(m)
    }

    /// A family of MPS states indexed by the left boundary bond.
    pub fn family(cores: Vec<MpsCore<R>>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::InvalidArgument("MPS needs at least one core".into()));
        }
        for w in cores.windows(2) {
            if w[0].right != w[1].left {
                return Err(Error::Dimension(format!(
                    "bond mismatch: {} vs {}",
                    w[0].right, w[1].left
                )));
            }
        }
        if cores.last().unwrap().right != 1 {
            return Err(Error::Dimension("right boundary bond must be 1".into()));
        }
        Ok(Self { cores })
    }

    /// Product state with site `s` in basis state `values[s]`.
    pub fn product_state(phys: usize, values: &[usize]) -> Result<Self> {
        let cores = values
            .iter()
            .map(|&v| {
                if v >= phys {
                    return Err(Error::InvalidArgument(format!("site value {v} >= {phys}")));
                }
                let mut data = vec![c_zero(); phys];
                data[v] = c_one();
                MpsCore::new(1, phys, 1, data)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(cores)
    }

    /// Random complex-Gaussian cores with bond dimension `chi` (capped by the
    /// boundary-to-site dimension counts) and an open left bond `up`.
    pub fn random_family(sites: usize, phys: usize, chi: usize, up: usize, rng: &mut SeededRng) -> Result<Self> {
        let mut cores = Vec::with_capacity(sites);
        let mut left = up;
        for s in 0..sites {
            let right = if s + 1 == sites { 1 } else { chi };
            let data = (0..left * phys * right).map(|_| rng.complex_normal()).collect();
            cores.push(MpsCore::new(left, phys, right, data)?);
            left = right;
        }
        Self::family(cores)
    }

    pub fn random(sites: usize, phys: usize, chi: usize, rng: &mut SeededRng) -> Result<Self> {
        Self::random_family(sites, phys, chi, 1, rng)
    }

    pub fn cores(&self) -> &[MpsCore<R>] {
        &self.cores
    }

    pub fn cores_mut(&mut self) -> &mut [MpsCore<R>] {
        &mut self.cores
    }

    pub fn num_sites(&self) -> usize {
        self.cores.len()
    }

    pub fn up_dim(&self) -> usize {
        self.cores[0].left
    }

    pub fn bond_dim(&self) -> usize {
        self.cores.iter().map(|c| c.right).max().unwrap_or(1)
    }

    pub fn num_entries(&self) -> usize {
        self.cores.iter().map(|c| c.data.len()).sum()
    }

    /// Real parameter view: real and imaginary parts of every entry, core by core.
    pub fn to_real_params(&self) -> Vec<R> {
        self.cores
            .iter()
            .flat_map(|c| c.data.iter().flat_map(|z| [z.re, z.im]))
            .collect()
    }

    pub fn set_real_params(&mut self, p: &[R]) -> Result<()> {
        if p.len() != 2 * self.num_entries() {
            return Err(Error::Dimension(format!(
                "MPS takes {} real parameters, got {}",
                2 * self.num_entries(),
                p.len()
            )));
        }
        let mut it = p.chunks_exact(2);
        for core in &mut self.cores {
            for z in &mut core.data {
                let pair = it.next().unwrap();
                *z = Complex::new(pair[0], pair[1]);
            }
        }
        Ok(())
    }

    /// Dense amplitudes of family member `up`; site 0 is the fastest index.
    pub fn to_dense(&self, up: usize) -> Vec<Complex<R>> {
        // Contract from the right so the running vector is indexed by (left bond, sites s..).
        let last = self.cores.last().unwrap();
        let mut acc: Vec<Complex<R>> = (0..last.left * last.phys).map(|i| last.data[i]).collect();
        let mut tail = last.phys;
        for core in self.cores.iter().rev().skip(1) {
            let mut next = vec![c_zero(); core.left * core.phys * tail];
            for l in 0..core.left {
                for p in 0..core.phys {
                    for r in 0..core.right {
                        let a = core.at(l, p, r);
                        if a == c_zero() {
                            continue;
                        }
                        for t in 0..tail {
                            next[(l * tail + t) * core.phys + p] += a * acc[r * tail + t];
                        }
                    }
                }
            }
            acc = next;
            tail *= core.phys;
        }
        acc[up * tail..(up + 1) * tail].to_vec()
    }
}

type Env<R> = Vec<Complex<R>>;

/// One transfer step: `E'[r', r] = Σ E[l', l] conj(B[l', p', r']) O[p', p] K[l, p, r]`.
fn transfer<R: Real>(env: &Env<R>, bra: &MpsCore<R>, op: Option<&CMatrix<R>>, ket: &MpsCore<R>) -> Env<R> {
    let phys = ket.phys;
    // T[l', p, r] = Σ_l E[l', l] K[l, p, r]
    let mut t = vec![c_zero(); bra.left * phys * ket.right];
    for lb in 0..bra.left {
        for lk in 0..ket.left {
            let e = env[lb * ket.left + lk];
            if e == c_zero() {
                continue;
            }
            for p in 0..phys {
                for r in 0..ket.right {
                    t[(lb * phys + p) * ket.right + r] += e * ket.at(lk, p, r);
                }
            }
        }
    }
    // U[l', p', r] = Σ_p O[p', p] T[l', p, r]
    let u = match op {
        None => t,
        Some(o) => {
            let mut u = vec![c_zero(); t.len()];
            for lb in 0..bra.left {
                for pp in 0..phys {
                    for p in 0..phys {
                        let op_el = o[(pp, p)];
                        if op_el == c_zero() {
                            continue;
                        }
                        for r in 0..ket.right {
                            u[(lb * phys + pp) * ket.right + r] += op_el * t[(lb * phys + p) * ket.right + r];
                        }
                    }
                }
            }
            u
        }
    };
    let mut out = vec![c_zero(); bra.right * ket.right];
    for lb in 0..bra.left {
        for pp in 0..phys {
            for rb in 0..bra.right {
                let b = bra.at(lb, pp, rb).conj();
                if b == c_zero() {
                    continue;
                }
                for r in 0..ket.right {
                    out[rb * ket.right + r] += b * u[(lb * phys + pp) * ket.right + r];
                }
            }
        }
    }
    out
}

fn check_pair<R: Real>(bra: &MpsTensor<R>, ket: &MpsTensor<R>, ops: &[Option<&CMatrix<R>>]) -> Result<()> {
    if bra.num_sites() != ket.num_sites() || ops.len() != ket.num_sites() {
        return Err(Error::Dimension(format!(
            "site count mismatch: bra {}, ket {}, operators {}",
            bra.num_sites(),
            ket.num_sites(),
            ops.len()
        )));
    }
    for (s, ((b, k), o)) in bra.cores.iter().zip(&ket.cores).zip(ops).enumerate() {
        if b.phys != k.phys {
            return Err(Error::Dimension(format!("physical dimension mismatch at site {s}")));
        }
        if let Some(o) = o {
            if o.rows() != k.phys || o.cols() != k.phys {
                return Err(Error::Dimension(format!(
                    "operator at site {s} is {}x{}, site dimension {}",
                    o.rows(),
                    o.cols(),
                    k.phys
                )));
            }
        }
    }
    Ok(())
}

/// `G[a', a] = ⟨bra^{a'}| ⊗_s O_s |ket^{a}⟩` over the open left bonds of two
/// families; `None` entries in `ops` stand for the identity.
pub fn family_matrix_element<R: Real>(
    bra: &MpsTensor<R>,
    ket: &MpsTensor<R>,
    ops: &[Option<&CMatrix<R>>],
) -> Result<CMatrix<R>> {
    check_pair(bra, ket, ops)?;
    let (ub, uk) = (bra.up_dim(), ket.up_dim());
    let mut out = CMatrix::zeros(ub, uk);
    for a_b in 0..ub {
        for a_k in 0..uk {
            let mut env = vec![c_zero(); ub * uk];
            env[a_b * uk + a_k] = c_one();
            for ((b, k), o) in bra.cores.iter().zip(&ket.cores).zip(ops) {
                env = transfer(&env, b, *o, k);
            }
            out[(a_b, a_k)] = env[0];
        }
    }
    Ok(out)
}

/// `⟨m| ⊗_s obs_s |m⟩` by left-to-right transfer matrices.
pub fn mps_expectation<R: Real>(m: &MpsTensor<R>, obs: &[CMatrix<R>]) -> Result<Complex<R>> {
    if m.up_dim() != 1 {
        return Err(Error::InvalidArgument(
            "expectation of an MPS family; use family_matrix_element".into(),
        ));
    }
    let ops: Vec<_> = obs.iter().map(Some).collect();
    Ok(family_matrix_element(m, m, &ops)?[(0, 0)])
}
