use faer::{Mat, Side};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{tridiagonal_ql, CMatrix};
use crate::pauli::{Hamiltonian, PauliTerm};
use crate::rng::SeededRng;
use crate::scalar::{c_zero, Complex};
use crate::statevector::StateVector;

type C64 = Complex<f64>;

pub const DENSE_QUBIT_LIMIT: usize = 12;
pub const LANCZOS_QUBIT_LIMIT: usize = 20;
/// `Auto` uses the dense solver up to this many qubits.
pub const AUTO_DENSE_THRESHOLD: usize = 10;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdMethod {
    Auto,
    Dense,
    Lanczos,
}

/// How Lanczos applies the Hamiltonian.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorForm {
    /// Pauli action on the fly, parallel over amplitude stripes.
    MatrixFree,
    /// Assembled compressed-row sparse matrix.
    Sparse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LanczosOptions {
    pub seed: u64,
    pub krylov_dim: usize,
    pub max_restarts: usize,
    pub ritz_tol: f64,
    pub residual_tol: f64,
    pub form: OperatorForm,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            seed: 0x5eed,
            krylov_dim: 60,
            max_restarts: 40,
            ritz_tol: 1e-10,
            residual_tol: 1e-8,
            form: OperatorForm::MatrixFree,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub energy: f64,
    pub state: StateVector<f64>,
    /// `‖Hv − E₀v‖` measured with the matrix-free operator.
    pub residual: f64,
    pub method: EdMethod,
    /// Hamiltonian applications (Lanczos) or 0 (dense).
    pub matvecs: usize,
}

/// Ground energy with the default method choice and Lanczos options.
pub fn exact_ground_energy(h: &Hamiltonian<f64>) -> Result<GroundState> {
    exact_ground_energy_with(h, EdMethod::Auto, &LanczosOptions::default())
}

pub fn exact_ground_energy_with(h: &Hamiltonian<f64>, method: EdMethod, opts: &LanczosOptions) -> Result<GroundState> {
    let n = h.num_qubits();
    let method = match method {
        EdMethod::Auto if n <= AUTO_DENSE_THRESHOLD => EdMethod::Dense,
        EdMethod::Auto => EdMethod::Lanczos,
        m => m,
    };
    match method {
        EdMethod::Dense => dense_ground(h),
        _ => lanczos_ground(h, opts),
    }
}

fn check_size(n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(Error::SizeExceeded { qubits: n, limit });
    }
    Ok(())
}

/// Coefficient times the phase in `P|b⟩ = i^{#Y} (−1)^{|b & z|} |b ^ x⟩`.
fn phase(t: &PauliTerm<f64>, z: usize, b: usize) -> C64 {
    let sign = if (b & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
    let c = t.coefficient * sign;
    match t.string.num_y() % 4 {
        0 => C64::new(c, 0.0),
        1 => C64::new(0.0, c),
        2 => C64::new(-c, 0.0),
        _ => C64::new(0.0, -c),
    }
}

/// Dense `2^n × 2^n` matrix assembled term by term in canonical (sorted) order.
pub fn dense_matrix(h: &Hamiltonian<f64>) -> Result<CMatrix<f64>> {
    let n = h.num_qubits();
    check_size(n, DENSE_QUBIT_LIMIT)?;
    let dim = 1usize << n;
    let mut m = CMatrix::zeros(dim, dim);
    for t in h.sorted_terms() {
        let (x, z) = t.string.masks();
        for col in 0..dim {
            m[(col ^ x, col)] += phase(&t, z, col);
        }
    }
    Ok(m)
}

/// `out = H v`, gathered per output amplitude so the reduction order is
/// fixed regardless of the thread count.
pub fn apply_hamiltonian(h: &Hamiltonian<f64>, v: &[C64], out: &mut [C64]) {
    let terms: Vec<(PauliTerm<f64>, usize, usize)> = h
        .sorted_terms()
        .into_iter()
        .map(|t| {
            let (x, z) = t.string.masks();
            (t, x, z)
        })
        .collect();
    const STRIPE: usize = 1 << 12;
    out.par_chunks_mut(STRIPE).enumerate().for_each(|(chunk, slice)| {
        let base = chunk * STRIPE;
        for (off, o) in slice.iter_mut().enumerate() {
            let j = base + off;
            let mut acc = c_zero();
            for (t, x, z) in &terms {
                let b = j ^ x;
                acc += phase(t, *z, b) * v[b];
            }
            *o = acc;
        }
    });
}

/// Compressed-row form of a Pauli Hamiltonian.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseOperator {
    pub fn from_hamiltonian(h: &Hamiltonian<f64>) -> Result<Self> {
        let n = h.num_qubits();
        check_size(n, LANCZOS_QUBIT_LIMIT)?;
        let dim = 1usize << n;
        let mut triplets: Vec<(usize, usize, C64)> = Vec::new();
        for t in h.terms() {
            let (x, z) = t.string.masks();
            for col in 0..dim {
                triplets.push((col ^ x, col, phase(t, z, col)));
            }
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::new();
        let mut vals: Vec<C64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            cols.push(c);
            vals.push(v);
            row_ptr[r + 1] = cols.len();
        }
        for r in 1..=dim {
            row_ptr[r] = row_ptr[r].max(row_ptr[r - 1]);
        }
        Ok(Self {
            dim,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn matvec(&self, v: &[C64], out: &mut [C64]) {
        out.par_iter_mut().enumerate().for_each(|(r, o)| {
            let mut acc = c_zero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * v[self.cols[k]];
            }
            *o = acc;
        });
    }
}

/// `‖Hv − e v‖` with the matrix-free operator.
pub fn residual_norm(h: &Hamiltonian<f64>, e: f64, v: &[C64]) -> f64 {
    let mut hv = vec![c_zero(); v.len()];
    apply_hamiltonian(h, v, &mut hv);
    hv.iter()
        .zip(v)
        .map(|(a, b)| (a - b * e).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn dense_ground(h: &Hamiltonian<f64>) -> Result<GroundState> {
    let m = dense_matrix(h)?;
    let dim = m.rows();
    let failed = |e| Error::NoConvergence(format!("dense eigensolver: {e:?}"));
    // an even number of Y factors in every term keeps the matrix real
    let real = h.terms().iter().all(|t| t.string.num_y() % 2 == 0);
    let (energy, v): (f64, Vec<C64>) = if real {
        let eig = Mat::<f64>::from_fn(dim, dim, |r, c| m[(r, c)].re)
            .self_adjoint_eigen(Side::Lower)
            .map_err(failed)?;
        let values: Vec<f64> = eig.S().column_vector().iter().copied().collect();
        let idx = lowest(&values)?;
        (values[idx], eig.U().col(idx).iter().map(|&x| C64::new(x, 0.0)).collect())
    } else {
        let eig = Mat::<C64>::from_fn(dim, dim, |r, c| m[(r, c)])
            .self_adjoint_eigen(Side::Lower)
            .map_err(failed)?;
        let values: Vec<f64> = eig.S().column_vector().iter().map(|z| z.re).collect();
        let idx = lowest(&values)?;
        (values[idx], eig.U().col(idx).iter().copied().collect())
    };
    let residual = residual_norm(h, energy, &v);
    Ok(GroundState {
        energy,
        state: StateVector::from_amplitudes(v)?,
        residual,
        method: EdMethod::Dense,
        matvecs: 0,
    })
}

fn lowest(values: &[f64]) -> Result<usize> {
    values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::InvalidArgument("empty Hamiltonian".into()))
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).fold(c_zero(), |acc, (x, y)| acc + x.conj() * y)
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Lowest eigenpair of the tridiagonal `(alpha, beta)`; returns the value and its eigenvector.
fn tridiagonal_lowest(alpha: &[f64], beta: &[f64]) -> Result<(f64, Vec<f64>)> {
    let m = alpha.len();
    let mut d = alpha.to_vec();
    let mut e = vec![0.0; m];
    e[1..m].copy_from_slice(&beta[..m - 1]);
    let mut z = vec![0.0; m * m];
    for i in 0..m {
        z[i * m + i] = 1.0;
    }
    tridiagonal_ql(&mut d, &mut e, Some((&mut z, m)))?;
    let (k, &val) = d
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    Ok((val, (0..m).map(|i| z[i * m + k]).collect()))
}

fn lanczos_ground(h: &Hamiltonian<f64>, opts: &LanczosOptions) -> Result<GroundState> {
    let n = h.num_qubits();
    check_size(n, LANCZOS_QUBIT_LIMIT)?;
    let dim = 1usize << n;
    let sparse = match opts.form {
        OperatorForm::Sparse => Some(SparseOperator::from_hamiltonian(h)?),
        OperatorForm::MatrixFree => None,
    };
    let apply = |v: &[C64], out: &mut [C64]| match &sparse {
        Some(s) => s.matvec(v, out),
        None => apply_hamiltonian(h, v, out),
    };
    let krylov = opts.krylov_dim.clamp(1, dim);
    let mut rng = SeededRng::new(opts.seed);
    let mut start: Vec<C64> = rng.unit_vector(dim);
    let mut matvecs = 0usize;
    let mut prev_theta = f64::INFINITY;

    for _restart in 0..=opts.max_restarts {
        let mut basis: Vec<Vec<C64>> = vec![start.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut w = vec![c_zero(); dim];
        let mut best: Option<(f64, Vec<f64>)> = None;
        for j in 0..krylov {
            apply(&basis[j], &mut w);
            matvecs += 1;
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            // full reorthogonalization, applied twice
            for _ in 0..2 {
                for v in &basis {
                    let proj = dot(v, &w);
                    for (wi, vi) in w.iter_mut().zip(v) {
                        *wi -= proj * vi;
                    }
                }
            }
            let b = norm(&w);
            beta.push(b);
            let (theta, s) = tridiagonal_lowest(&alpha, &beta)?;
            let resid_est = b * s[j].abs();
            let settled = (theta - prev_theta).abs() < opts.ritz_tol && resid_est < opts.residual_tol;
            prev_theta = theta;
            best = Some((theta, s));
            if settled || b < 1e-14 || j + 1 == krylov {
                break;
            }
            basis.push(w.iter().map(|z| z / b).collect());
        }
        let (theta, s) = best.unwrap();
        let mut x = vec![c_zero(); dim];
        for (coef, v) in s.iter().zip(&basis) {
            for (xi, vi) in x.iter_mut().zip(v) {
                *xi += vi * *coef;
            }
        }
        let nx = norm(&x);
        x.iter_mut().for_each(|z| *z /= nx);
        let residual = residual_norm(h, theta, &x);
        if residual < opts.residual_tol {
            return Ok(GroundState {
                energy: theta,
                state: StateVector::from_amplitudes(x)?,
                residual,
                method: EdMethod::Lanczos,
                matvecs,
            });
        }
        start = x;
    }
    Err(Error::NoConvergence(format!(
        "Lanczos did not reach residual {} after {} restarts",
        opts.residual_tol, opts.max_restarts
    )))
}
