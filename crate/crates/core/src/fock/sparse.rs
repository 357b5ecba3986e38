use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Compressed-sparse-row operator on a (possibly multi-mode) truncated Fock space.
///
/// `dims` lists the per-mode dimensions; the flat index is row-major with
/// mode 0 slowest, so `kron` of single-mode operators matches `dims` order.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    dims: Vec<usize>,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
    anti_herm: OnceLock<f64>,
}

fn total(dims: &[usize]) -> usize {
    dims.iter().product()
}

impl SparseOperator {
    fn from_csr(dims: Vec<usize>, indptr: Vec<usize>, indices: Vec<usize>, values: Vec<C64>) -> Self {
        debug_assert_eq!(indptr.len(), total(&dims) + 1);
        SparseOperator {
            dims,
            indptr,
            indices,
            values,
            anti_herm: OnceLock::new(),
        }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let n = total(dims);
        Self::from_csr(dims.to_vec(), vec![0; n + 1], Vec::new(), Vec::new())
    }

    pub fn identity(dims: &[usize]) -> Self {
        Self::diagonal(dims, &vec![C64::new(1.0, 0.0); total(dims)])
    }

    pub fn diagonal(dims: &[usize], diag: &[C64]) -> Self {
        let n = total(dims);
        assert_eq!(diag.len(), n, "diagonal length must equal the space dimension");
        Self::from_triplets(dims, (0..n).map(|i| (i, i, diag[i]))).expect("diagonal entries are in range")
    }

    /// Builds from (row, col, value) triplets. Duplicates are summed, exact zeros dropped.
    pub fn from_triplets<I>(dims: &[usize], triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let n = total(dims);
        let mut t: Vec<(usize, usize, C64)> = triplets.into_iter().collect();
        for &(r, c, _) in &t {
            if r >= n {
                return Err(Error::IndexOutOfRange { index: r, dim: n });
            }
            if c >= n {
                return Err(Error::IndexOutOfRange { index: c, dim: n });
            }
        }
        t.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut values: Vec<C64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows = Vec::with_capacity(t.len());
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                rows.push(r);
                last = Some((r, c));
            }
        }
        let mut ki = Vec::with_capacity(indices.len());
        let mut kv = Vec::with_capacity(values.len());
        for ((r, c), v) in rows.into_iter().zip(indices).zip(values) {
            if v != C64::new(0.0, 0.0) {
                indptr[r + 1] += 1;
                ki.push(c);
                kv.push(v);
            }
        }
        for i in 0..n {
            indptr[i + 1] += indptr[i];
        }
        Ok(Self::from_csr(dims.to_vec(), indptr, ki, kv))
    }

    pub fn from_dense(dims: &[usize], m: &DMatrix<C64>) -> Result<Self> {
        let n = total(dims);
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: vec![n, n],
                found: vec![m.nrows(), m.ncols()],
            });
        }
        let mut indptr = Vec::with_capacity(n + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for r in 0..n {
            for c in 0..n {
                let v = m[(r, c)];
                if v != C64::new(0.0, 0.0) {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self::from_csr(dims.to_vec(), indptr, indices, values))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let (lo, hi) = (self.indptr[r], self.indptr[r + 1]);
        match self.indices[lo..hi].binary_search(&c) {
            Ok(k) => self.values[lo + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// Iterates stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim()).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.values[k]))
        })
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.indptr[r]..self.indptr[r + 1]).map(move |k| (self.indices[k], self.values[k]))
    }

    pub(crate) fn check_same_dims(&self, other: &[usize]) -> Result<()> {
        if self.dims != other {
            return Err(Error::DimensionMismatch {
                expected: self.dims.clone(),
                found: other.to_vec(),
            });
        }
        Ok(())
    }

    /// y = A x. Panics on length mismatch (internal hot path).
    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        for (r, yr) in y.iter_mut().enumerate() {
            let (lo, hi) = (self.indptr[r], self.indptr[r + 1]);
            let mut acc = C64::new(0.0, 0.0);
            for k in lo..hi {
                acc += self.values[k] * x[self.indices[k]];
            }
            *yr = acc;
        }
    }

    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: vec![self.dim()],
                found: vec![x.len()],
            });
        }
        let mut y = vec![C64::new(0.0, 0.0); x.len()];
        self.matvec_into(x, &mut y);
        Ok(y)
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim();
        let mut counts = vec![0usize; n + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0usize; self.nnz()];
        let mut values = vec![C64::new(0.0, 0.0); self.nnz()];
        for r in 0..n {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let c = self.indices[k];
                let dst = next[c];
                indices[dst] = r;
                values[dst] = self.values[k].conj();
                next[c] += 1;
            }
        }
        Self::from_csr(self.dims.clone(), indptr, indices, values)
    }

    pub fn scale(&self, s: C64) -> Self {
        if s == C64::new(0.0, 0.0) {
            return Self::zeros(&self.dims);
        }
        Self::from_csr(
            self.dims.clone(),
            self.indptr.clone(),
            self.indices.clone(),
            self.values.iter().map(|v| v * s).collect(),
        )
    }

    /// Returns a·self + b·other.
    pub fn combine(&self, a: C64, other: &Self, b: C64) -> Result<Self> {
        self.check_same_dims(&other.dims)?;
        let n = self.dim();
        let mut indptr = Vec::with_capacity(n + 1);
        indptr.push(0);
        let mut indices = Vec::with_capacity(self.nnz() + other.nnz());
        let mut values = Vec::with_capacity(self.nnz() + other.nnz());
        for r in 0..n {
            let (mut i, ie) = (self.indptr[r], self.indptr[r + 1]);
            let (mut j, je) = (other.indptr[r], other.indptr[r + 1]);
            while i < ie || j < je {
                let ci = if i < ie { self.indices[i] } else { usize::MAX };
                let cj = if j < je { other.indices[j] } else { usize::MAX };
                let (c, v) = if ci == cj {
                    let v = a * self.values[i] + b * other.values[j];
                    i += 1;
                    j += 1;
                    (ci, v)
                } else if ci < cj {
                    i += 1;
                    (ci, a * self.values[i - 1])
                } else {
                    j += 1;
                    (cj, b * other.values[j - 1])
                };
                if v != C64::new(0.0, 0.0) {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self::from_csr(self.dims.clone(), indptr, indices, values))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(C64::new(1.0, 0.0), other, C64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(C64::new(1.0, 0.0), other, C64::new(-1.0, 0.0))
    }

    /// Operator product self · other.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_same_dims(&other.dims)?;
        let n = self.dim();
        let mut acc = vec![C64::new(0.0, 0.0); n];
        let mut mark = vec![usize::MAX; n];
        let mut cols: Vec<usize> = Vec::new();
        let mut indptr = Vec::with_capacity(n + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for r in 0..n {
            cols.clear();
            for k in self.indptr[r]..self.indptr[r + 1] {
                let (m, a) = (self.indices[k], self.values[k]);
                for kk in other.indptr[m]..other.indptr[m + 1] {
                    let c = other.indices[kk];
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = C64::new(0.0, 0.0);
                        cols.push(c);
                    }
                    acc[c] += a * other.values[kk];
                }
            }
            cols.sort_unstable();
            for &c in &cols {
                if acc[c] != C64::new(0.0, 0.0) {
                    indices.push(c);
                    values.push(acc[c]);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self::from_csr(self.dims.clone(), indptr, indices, values))
    }

    /// Tensor product; the result's modes are self's modes followed by other's.
    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.dim(), other.dim());
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let mut indptr = Vec::with_capacity(n * m + 1);
        indptr.push(0);
        let mut indices = Vec::with_capacity(self.nnz() * other.nnz());
        let mut values = Vec::with_capacity(self.nnz() * other.nnz());
        for r1 in 0..n {
            for r2 in 0..m {
                for k1 in self.indptr[r1]..self.indptr[r1 + 1] {
                    let (c1, v1) = (self.indices[k1], self.values[k1]);
                    for k2 in other.indptr[r2]..other.indptr[r2 + 1] {
                        indices.push(c1 * m + other.indices[k2]);
                        values.push(v1 * other.values[k2]);
                    }
                }
                indptr.push(indices.len());
            }
        }
        Self::from_csr(dims, indptr, indices, values)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest absolute row sum (induced infinity norm).
    pub fn inf_norm(&self) -> f64 {
        (0..self.dim())
            .map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    /// max |A - A^dag|.
    pub fn hermiticity_deviation(&self) -> f64 {
        self.sub(&self.adjoint()).map(|d| d.max_abs()).unwrap_or(f64::INFINITY)
    }

    /// max |G + G^dag|, cached after the first call.
    pub fn anti_hermiticity_deviation(&self) -> f64 {
        *self
            .anti_herm
            .get_or_init(|| self.add(&self.adjoint()).map(|d| d.max_abs()).unwrap_or(f64::INFINITY))
    }

    pub fn is_anti_hermitian(&self, tol: f64) -> bool {
        self.anti_hermiticity_deviation() <= tol * self.max_abs().max(1.0)
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }
}
