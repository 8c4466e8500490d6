//! Square real matrices in dense row-major or compressed sparse row storage,
//! and the scalar functionals the estimators and the variance theory consume.
//!
//! All indices in this module are 0-based.

use crate::error::{Error, Result};

/// Compressed sparse row storage. Column indices are strictly increasing
/// within each row, so no `(i, j)` pair is stored twice.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrStorage {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrStorage {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Storage {
    /// Row-major, `d * d` entries.
    Dense(Vec<f64>),
    Sparse(CsrStorage),
}

/// An explicit `d x d` matrix, immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixHandle {
    dim: usize,
    storage: Storage,
}

impl MatrixHandle {
    pub fn from_dense(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("matrix dimension must be at least 1"));
        }
        if dim.checked_mul(dim) != Some(data.len()) {
            return Err(Error::invalid(format!(
                "dense data has {} entries, expected {dim}x{dim}",
                data.len()
            )));
        }
        Ok(Self {
            dim,
            storage: Storage::Dense(data),
        })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let d = rows.len();
        let mut data = Vec::with_capacity(d * d);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(Error::invalid(format!("row {i} has {} entries, expected {d}", r.len())));
            }
            data.extend_from_slice(r);
        }
        Self::from_dense(d, data)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::from_triplets(dim, (0..dim).map(|i| (i, i, 1.0)))
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::from_triplets(dim, std::iter::empty())
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Self::from_triplets(values.len(), values.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    /// Builds sparse storage from `(row, col, value)` triplets. Duplicate
    /// positions are summed; explicit zeros are kept.
    pub fn from_triplets<I>(dim: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        if dim == 0 {
            return Err(Error::invalid("matrix dimension must be at least 1"));
        }
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (i, j, v) in triplets {
            if i >= dim || j >= dim {
                return Err(Error::IndexOutOfRange { index: i.max(j), dim });
            }
            entries.push((i, j, v));
        }
        // Stable sort keeps the summation order of duplicates equal to input order.
        entries.sort_by_key(|&(i, j, _)| (i, j));

        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            last = Some((i, j));
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            dim,
            storage: Storage::Sparse(CsrStorage {
                row_ptr,
                col_idx,
                values,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    /// Number of stored entries (`d * d` for dense storage).
    pub fn stored_entries(&self) -> usize {
        match &self.storage {
            Storage::Dense(a) => a.len(),
            Storage::Sparse(s) => s.nnz(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Result<f64> {
        self.check_index(i)?;
        self.check_index(j)?;
        Ok(self.entry(i, j))
    }

    #[inline]
    fn entry(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(a) => a[i * self.dim + j],
            Storage::Sparse(s) => s.get(i, j),
        }
    }

    fn check_index(&self, p: usize) -> Result<()> {
        if p >= self.dim {
            Err(Error::IndexOutOfRange {
                index: p,
                dim: self.dim,
            })
        } else {
            Ok(())
        }
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dim {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                got: u.len(),
            })
        } else {
            Ok(())
        }
    }

    /// Calls `f(i, j, a_ij)` for every stored entry, row by row.
    pub fn for_each_entry(&self, mut f: impl FnMut(usize, usize, f64)) {
        match &self.storage {
            Storage::Dense(a) => {
                for (k, &v) in a.iter().enumerate() {
                    f(k / self.dim, k % self.dim, v);
                }
            }
            Storage::Sparse(s) => {
                for i in 0..self.dim {
                    let (cols, vals) = s.row(i);
                    for (&j, &v) in cols.iter().zip(vals) {
                        f(i, j, v);
                    }
                }
            }
        }
    }

    pub fn to_dense(&self) -> Self {
        let mut data = vec![0.0; self.dim * self.dim];
        self.for_each_entry(|i, j, v| data[i * self.dim + j] = v);
        Self {
            dim: self.dim,
            storage: Storage::Dense(data),
        }
    }

    /// Sparse copy holding only the nonzero entries.
    pub fn to_sparse(&self) -> Self {
        let mut trip = Vec::new();
        self.for_each_entry(|i, j, v| {
            if v != 0.0 {
                trip.push((i, j, v))
            }
        });
        Self::from_triplets(self.dim, trip).expect("indices come from a valid matrix")
    }

    pub fn transpose(&self) -> Self {
        let mut trip = Vec::with_capacity(self.stored_entries());
        self.for_each_entry(|i, j, v| trip.push((j, i, v)));
        let t = Self::from_triplets(self.dim, trip).expect("indices come from a valid matrix");
        if self.is_sparse() {
            t
        } else {
            t.to_dense()
        }
    }

    /// `u^T A u`.
    pub fn quad_form(&self, u: &[f64]) -> Result<f64> {
        self.check_len(u)?;
        Ok(self.quad_form_unchecked(u))
    }

    #[inline]
    pub(crate) fn quad_form_unchecked(&self, u: &[f64]) -> f64 {
        let d = self.dim;
        match &self.storage {
            Storage::Dense(a) => a
                .chunks_exact(d)
                .zip(u)
                .map(|(row, &ui)| ui * row.iter().zip(u).map(|(a, b)| a * b).sum::<f64>())
                .sum(),
            Storage::Sparse(s) => (0..d)
                .map(|i| {
                    let (cols, vals) = s.row(i);
                    u[i] * cols.iter().zip(vals).map(|(&j, &v)| v * u[j]).sum::<f64>()
                })
                .sum(),
        }
    }

    /// `A u`.
    pub fn mat_vec(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len(u)?;
        let mut out = vec![0.0; self.dim];
        self.mat_vec_into(u, &mut out);
        Ok(out)
    }

    pub(crate) fn mat_vec_into(&self, u: &[f64], out: &mut [f64]) {
        let d = self.dim;
        match &self.storage {
            Storage::Dense(a) => {
                for (o, row) in out.iter_mut().zip(a.chunks_exact(d)) {
                    *o = row.iter().zip(u).map(|(a, b)| a * b).sum();
                }
            }
            Storage::Sparse(s) => {
                for (i, o) in out.iter_mut().enumerate() {
                    let (cols, vals) = s.row(i);
                    *o = cols.iter().zip(vals).map(|(&j, &v)| v * u[j]).sum();
                }
            }
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.entry(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.entry(i, i)).sum()
    }

    /// `sum_i a_ii^2`.
    pub fn diag_norm_sq(&self) -> f64 {
        (0..self.dim).map(|i| self.entry(i, i).powi(2)).sum()
    }

    /// `||A + A^T||_F^2 = sum_{i,j} (a_ij + a_ji)^2`.
    pub fn sym_frobenius_sq(&self) -> f64 {
        let mut total = 0.0;
        match &self.storage {
            Storage::Dense(_) => {
                for i in 0..self.dim {
                    for j in 0..self.dim {
                        total += (self.entry(i, j) + self.entry(j, i)).powi(2);
                    }
                }
            }
            Storage::Sparse(s) => {
                // Positions stored in only one orientation count twice (once as
                // (i, j), once as the missing mirror); both-present pairs are
                // visited from each side.
                self.for_each_entry(|i, j, v| {
                    let t = s.get(j, i);
                    let present = s.row(j).0.binary_search(&i).is_ok();
                    total += (v + t).powi(2);
                    if !present {
                        total += v * v;
                    }
                });
            }
        }
        total
    }

    /// `||A_{p,:}^T + A_{:,p}||^2`, row `p` read as a vector plus column `p`.
    pub fn cross_norm_sq(&self, p: usize) -> Result<f64> {
        self.check_index(p)?;
        Ok((0..self.dim)
            .map(|i| (self.entry(p, i) + self.entry(i, p)).powi(2))
            .sum())
    }

    /// `cross_norm_sq(p)` for every `p`, in `O(nnz log nnz)` for sparse storage.
    pub fn cross_norms_sq(&self) -> Vec<f64> {
        match &self.storage {
            Storage::Dense(_) => (0..self.dim)
                .map(|p| self.cross_norm_sq(p).expect("p in range"))
                .collect(),
            Storage::Sparse(s) => {
                // sum_i (a_pi + a_ip)^2 = sum_i a_pi^2 + sum_i a_ip^2 + 2 sum_i a_pi a_ip
                let mut out = vec![0.0; self.dim];
                self.for_each_entry(|i, j, v| {
                    out[i] += v * v;
                    out[j] += v * v;
                    out[i] += 2.0 * v * s.get(j, i);
                });
                out
            }
        }
    }

    /// `||A_{p,:}||^2`.
    pub fn row_norm_sq(&self, p: usize) -> Result<f64> {
        self.check_index(p)?;
        Ok(match &self.storage {
            Storage::Dense(a) => a[p * self.dim..(p + 1) * self.dim].iter().map(|v| v * v).sum(),
            Storage::Sparse(s) => s.row(p).1.iter().map(|v| v * v).sum(),
        })
    }
}
