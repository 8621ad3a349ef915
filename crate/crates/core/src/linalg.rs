//! Small dense linear algebra: complex matrices, Hermitian and real-symmetric
//! eigensolvers, Cholesky solves.
//!
//! Matrices here are tiny (branch observables, subspace problems, McLachlan
//! metrics of a few hundred parameters), so plain row-major storage is used.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::{c_one, c_zero, Complex, Real};

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix<R> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<R>>,
}

impl<R: Real> CMatrix<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![c_zero(); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = c_one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex<R>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "matrix {}x{} needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<R>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real_diag(diag: &[R]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex::new(d, R::zero());
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex<R>] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex<R>> {
        self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a.re == R::zero() && a.im == R::zero() {
                    continue;
                }
                for c in 0..other.cols {
                    out.data[r * other.cols + c] += a * other[(k, c)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[Complex<R>]) -> Vec<Complex<R>> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|r| {
                self.data[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .fold(c_zero(), |acc, (a, b)| acc + *a * *b)
            })
            .collect()
    }

    /// Kronecker product `self ⊗ other` (self is the slow index).
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        Self::from_fn(rows, cols, |r, c| {
            self[(r / other.rows, c / other.cols)] * other[(r % other.rows, c % other.cols)]
        })
    }

    pub fn scale(&self, s: Complex<R>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| *z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a + *b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex::new(-R::one(), R::zero())))
    }

    pub fn trace(&self) -> Complex<R> {
        (0..self.rows.min(self.cols)).fold(c_zero(), |acc, i| acc + self[(i, i)])
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> R {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).norm())
            .fold(R::zero(), R::max)
    }

    pub fn max_abs(&self) -> R {
        self.data.iter().map(|z| z.norm()).fold(R::zero(), R::max)
    }

    /// `max |M - M†|`.
    pub fn hermiticity_defect(&self) -> R {
        if !self.is_square() {
            return R::infinity();
        }
        self.max_abs_diff(&self.adjoint())
    }

    /// `(M + M†) / 2`; exactly Hermitian.
    pub fn hermitized(&self) -> Self {
        assert!(self.is_square());
        let half = R::lit(0.5);
        let n = self.rows;
        let mut out = Self::zeros(n, n);
        for r in 0..n {
            for c in r..n {
                let v = (self[(r, c)] + self[(c, r)].conj()).scale(half);
                if r == c {
                    out[(r, c)] = Complex::new(v.re, R::zero());
                } else {
                    out[(r, c)] = v;
                    out[(c, r)] = v.conj();
                }
            }
        }
        out
    }

    /// `⟨u| M |v⟩`.
    pub fn sandwich(&self, u: &[Complex<R>], v: &[Complex<R>]) -> Complex<R> {
        let mv = self.matvec(v);
        u.iter().zip(&mv).fold(c_zero(), |acc, (a, b)| acc + a.conj() * *b)
    }
}

impl<R> Index<(usize, usize)> for CMatrix<R> {
    type Output = Complex<R>;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex<R> {
        &self.data[r * self.cols + c]
    }
}

impl<R> IndexMut<(usize, usize)> for CMatrix<R> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex<R> {
        &mut self.data[r * self.cols + c]
    }
}

impl<R: Real> fmt::Debug for CMatrix<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Returns ascending eigenvalues and the eigenvectors as columns.
pub fn hermitian_eigen<R: Real>(m: &CMatrix<R>) -> Result<(Vec<R>, CMatrix<R>)> {
    if !m.is_square() {
        return Err(Error::Dimension("eigensolver needs a square matrix".into()));
    }
    let n = m.rows();
    let mut a = m.hermitized();
    let mut v = CMatrix::<R>::identity(n);
    let eps = R::epsilon();
    for _sweep in 0..100 {
        let mut off = R::zero();
        let mut diag = R::zero();
        for p in 0..n {
            diag += a[(p, p)].norm_sqr();
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off <= eps * eps * (diag + R::min_positive_value()) {
            return Ok(sort_eigen(a, v));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= R::min_positive_value() {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Phase-rotate to a real symmetric 2x2 problem, then a real Jacobi rotation.
                let phase = apq / mag;
                let theta = (aqq - app) / (R::lit(2.0) * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + R::one()).sqrt());
                let t = if theta == R::zero() { R::one() } else { t };
                let cs = R::one() / (t * t + R::one()).sqrt();
                let sn = t * cs;
                // Rotation G acting on columns p, q: [c, -s e^{iφ}; s e^{-iφ}, c] (unitary).
                let s_p = phase.scale(sn); // s e^{iφ}
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp.scale(cs) - akq * s_p.conj();
                    a[(k, q)] = akp * s_p + akq.scale(cs);
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk.scale(cs) - aqk * s_p;
                    a[(q, k)] = apk * s_p.conj() + aqk.scale(cs);
                }
                a[(p, q)] = c_zero();
                a[(q, p)] = c_zero();
                a[(p, p)] = Complex::new(a[(p, p)].re, R::zero());
                a[(q, q)] = Complex::new(a[(q, q)].re, R::zero());
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp.scale(cs) - vkq * s_p.conj();
                    v[(k, q)] = vkp * s_p + vkq.scale(cs);
                }
            }
        }
    }
    Err(Error::NoConvergence("Jacobi eigensolver exceeded 100 sweeps".into()))
}

fn sort_eigen<R: Real>(a: CMatrix<R>, v: CMatrix<R>) -> (Vec<R>, CMatrix<R>) {
    let n = a.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Dense row-major real symmetric matrix helper used by the McLachlan solver.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix<R> {
    pub dim: usize,
    pub data: Vec<R>,
}

impl<R: Real> SymMatrix<R> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![R::zero(); dim * dim],
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> R {
        self.data[r * self.dim + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: R) {
        self.data[r * self.dim + c] = v;
    }

    /// `(A + Aᵀ)/2`.
    pub fn symmetrized(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                out.set(r, c, (self.get(r, c) + self.get(c, r)) * R::lit(0.5));
            }
        }
        out
    }

    pub fn max_asymmetry(&self) -> R {
        let n = self.dim;
        let mut worst = R::zero();
        for r in 0..n {
            for c in 0..r {
                worst = worst.max((self.get(r, c) - self.get(c, r)).abs());
            }
        }
        worst
    }

    pub fn matvec(&self, v: &[R]) -> Vec<R> {
        (0..self.dim)
            .map(|r| (0..self.dim).map(|c| self.get(r, c) * v[c]).sum())
            .collect()
    }
}

/// Solve `(A + shift·I) x = b` for symmetric positive definite `A + shift·I`.
/// Returns `None` when the Cholesky factorisation breaks down.
pub fn cholesky_solve<R: Real>(a: &SymMatrix<R>, shift: R, b: &[R]) -> Option<Vec<R>> {
    let n = a.dim;
    assert_eq!(b.len(), n);
    let mut l = vec![R::zero(); n * n];
    for j in 0..n {
        let mut d = a.get(j, j) + shift;
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > R::zero()) || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    let mut y = vec![R::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![R::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Some(x)
}

/// Eigenvalues (ascending) and eigenvectors of a real symmetric matrix via
/// Householder tridiagonalisation followed by implicit QL iterations.
/// Eigenvectors are returned as columns of a row-major `dim x dim` buffer.
pub fn symmetric_eigen<R: Real>(a: &SymMatrix<R>) -> Result<(Vec<R>, Vec<R>)> {
    let n = a.dim;
    let mut z = a.symmetrized().data;
    let mut d = vec![R::zero(); n];
    let mut e = vec![R::zero(); n];
    tridiagonalize(n, &mut z, &mut d, &mut e);
    tridiagonal_ql(&mut d, &mut e, Some((&mut z, n)))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
    let values = order.iter().map(|&i| d[i]).collect();
    let mut vectors = vec![R::zero(); n * n];
    for r in 0..n {
        for (c, &src) in order.iter().enumerate() {
            vectors[r * n + c] = z[r * n + src];
        }
    }
    Ok((values, vectors))
}

/// Householder reduction (tred2). On return `z` holds the orthogonal
/// transformation, `d` the diagonal and `e[1..]` the sub-diagonal.
fn tridiagonalize<R: Real>(n: usize, z: &mut [R], d: &mut [R], e: &mut [R]) {
    if n == 0 {
        return;
    }
    let at = |i: usize, j: usize| i * n + j;
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = R::zero();
        if l > 0 {
            let scale: R = (0..=l).map(|k| z[at(i, k)].abs()).sum();
            if scale == R::zero() {
                e[i] = z[at(i, l)];
            } else {
                for k in 0..=l {
                    z[at(i, k)] /= scale;
                    h += z[at(i, k)] * z[at(i, k)];
                }
                let f = z[at(i, l)];
                let g = if f >= R::zero() { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                z[at(i, l)] = f - g;
                let mut f = R::zero();
                for j in 0..=l {
                    z[at(j, i)] = z[at(i, j)] / h;
                    let mut g = R::zero();
                    for k in 0..=j {
                        g += z[at(j, k)] * z[at(i, k)];
                    }
                    for k in (j + 1)..=l {
                        g += z[at(k, j)] * z[at(i, k)];
                    }
                    e[j] = g / h;
                    f += e[j] * z[at(i, j)];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = z[at(i, j)];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        z[at(j, k)] -= f * e[k] + g * z[at(i, k)];
                    }
                }
            }
        } else {
            e[i] = z[at(i, l)];
        }
        d[i] = h;
    }
    d[0] = R::zero();
    e[0] = R::zero();
    for i in 0..n {
        if d[i] != R::zero() {
            for j in 0..i {
                let mut g = R::zero();
                for k in 0..i {
                    g += z[at(i, k)] * z[at(k, j)];
                }
                for k in 0..i {
                    z[at(k, j)] -= g * z[at(k, i)];
                }
            }
        }
        d[i] = z[at(i, i)];
        z[at(i, i)] = R::one();
        for j in 0..i {
            z[at(j, i)] = R::zero();
            z[at(i, j)] = R::zero();
        }
    }
}

/// Implicit QL on a symmetric tridiagonal matrix (tqli). `d` is the diagonal,
/// `e[1..]` the sub-diagonal. When `z` is given the rotations are accumulated
/// into it (row-major, `n` columns).
pub fn tridiagonal_ql<R: Real>(
    d: &mut [R],
    e: &mut [R],
    mut z: Option<(&mut [R], usize)>,
) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = R::zero();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= R::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::NoConvergence("tridiagonal QL exceeded 60 iterations".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (R::lit(2.0) * e[l]);
            let mut r = g.hypot(R::one());
            let sign_r = if g >= R::zero() { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let mut s = R::one();
            let mut c = R::one();
            let mut p = R::zero();
            let mut i = m;
            let mut early = false;
            while i > l {
                i -= 1;
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == R::zero() {
                    d[i + 1] -= p;
                    e[m] = R::zero();
                    early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + R::lit(2.0) * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some((zz, cols)) = z.as_mut() {
                    let cols = *cols;
                    for k in 0..cols {
                        f = zz[k * cols + i + 1];
                        zz[k * cols + i + 1] = s * zz[k * cols + i] + c * f;
                        zz[k * cols + i] = c * zz[k * cols + i] - s * f;
                    }
                }
            }
            if early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = R::zero();
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn random_hermitian(n: usize, rng: &mut SeededRng) -> CMatrix<f64> {
        let raw = CMatrix::from_fn(n, n, |_, _| rng.complex_normal());
        raw.add(&raw.adjoint())
    }

    #[test]
    fn jacobi_reconstructs_random_hermitian() {
        let mut rng = SeededRng::new(11);
        for n in 1..7 {
            let m = random_hermitian(n, &mut rng);
            let (vals, vecs) = hermitian_eigen(&m).unwrap();
            let lam = CMatrix::from_real_diag(&vals);
            let back = vecs.matmul(&lam).matmul(&vecs.adjoint());
            assert!(back.max_abs_diff(&m) < 1e-12, "n={n}");
            let gram = vecs.adjoint().matmul(&vecs);
            assert!(gram.max_abs_diff(&CMatrix::identity(n)) < 1e-12);
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn jacobi_diagonal_input() {
        let m = CMatrix::from_real_diag(&[1.0, -1.0]);
        let (vals, _) = hermitian_eigen(&m).unwrap();
        assert_eq!(vals, vec![-1.0, 1.0]);
    }

    #[test]
    fn symmetric_eigen_matches_definition() {
        let mut rng = SeededRng::new(5);
        for n in [1usize, 2, 3, 8, 17] {
            let mut a = SymMatrix::<f64>::zeros(n);
            for r in 0..n {
                for c in 0..=r {
                    let v = rng.normal();
                    a.set(r, c, v);
                    a.set(c, r, v);
                }
            }
            let (vals, vecs) = symmetric_eigen(&a).unwrap();
            for (k, &lam) in vals.iter().enumerate() {
                let col: Vec<f64> = (0..n).map(|r| vecs[r * n + k]).collect();
                let av = a.matvec(&col);
                for r in 0..n {
                    assert!((av[r] - lam * col[r]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn cholesky_solves_spd_system() {
        let mut a = SymMatrix::<f64>::zeros(3);
        let vals = [[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]];
        for (r, row) in vals.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                a.set(r, c, v);
            }
        }
        let b = [1.0, 2.0, 3.0];
        let x = cholesky_solve(&a, 0.0, &b).unwrap();
        let ax = a.matvec(&x);
        for i in 0..3 {
            assert!((ax[i] - b[i]).abs() < 1e-12);
        }
        let singular = SymMatrix::<f64>::zeros(2);
        assert!(cholesky_solve(&singular, 0.0, &[1.0, 0.0]).is_none());
    }
}
