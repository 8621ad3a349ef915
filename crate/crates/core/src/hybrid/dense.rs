use crate::error::{Error, Result};
use crate::scalar::{c_zero, norm_sqr, Complex, Real};

use super::IndexKind;

/// Dense tensor with labelled axis kinds, first axis fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor<R> {
    dims: Vec<usize>,
    kinds: Vec<IndexKind>,
    data: Vec<Complex<R>>,
}

impl<R: Real> DenseTensor<R> {
    pub fn new(dims: Vec<usize>, kinds: Vec<IndexKind>, data: Vec<Complex<R>>) -> Result<Self> {
        if dims.len() != kinds.len() {
            return Err(Error::Dimension("one kind per axis required".into()));
        }
        if dims.contains(&0) {
            return Err(Error::Dimension("axis of dimension 0".into()));
        }
        let n: usize = dims.iter().product();
        if data.len() != n {
            return Err(Error::Dimension(format!(
                "tensor of shape {dims:?} needs {n} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, kinds, data })
    }

    pub fn zeros(dims: Vec<usize>, kinds: Vec<IndexKind>) -> Self {
        let n = dims.iter().product();
        Self::new(dims, kinds, vec![c_zero(); n]).expect("consistent shape")
    }

    pub fn scalar(v: Complex<R>) -> Self {
        Self {
            dims: vec![],
            kinds: vec![],
            data: vec![v],
        }
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn kinds(&self) -> &[IndexKind] {
        &self.kinds
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Complex<R>] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex<R>] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex<R>> {
        self.data
    }

    pub fn flatten_with(multi: &[usize], dims: &[usize]) -> usize {
        let mut flat = 0;
        let mut stride = 1;
        for (&m, &d) in multi.iter().zip(dims) {
            debug_assert!(m < d);
            flat += m * stride;
            stride *= d;
        }
        flat
    }

    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        self.dims
            .iter()
            .map(|&d| {
                let m = flat % d;
                flat /= d;
                m
            })
            .collect()
    }

    pub fn get(&self, multi: &[usize]) -> Complex<R> {
        self.data[Self::flatten_with(multi, &self.dims)]
    }

    pub fn norm_sqr(&self) -> R {
        self.data.iter().map(|&z| norm_sqr(z)).sum()
    }

    /// Largest entrywise deviation; `None` if shapes differ.
    pub fn max_abs_diff(&self, other: &Self) -> Option<R> {
        if self.dims != other.dims {
            return None;
        }
        Some(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (a - b).norm())
                .fold(R::zero(), R::max),
        )
    }

    pub fn scaled(&self, s: R) -> Self {
        Self {
            dims: self.dims.clone(),
            kinds: self.kinds.clone(),
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }
}
