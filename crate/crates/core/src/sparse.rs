//! Compressed sparse row matrices assembled from triplets.

use crate::{Error, Result, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

/// Coordinate-format accumulator. Duplicate entries are summed on `build`.
#[derive(Clone, Debug)]
pub struct TripletBuilder<T> {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, T)>,
}

impl<T: Scalar> TripletBuilder<T> {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, entries: Vec::new() }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self { nrows, ncols, entries: Vec::with_capacity(cap) }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, v: T) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, v));
    }

    /// Sums duplicates and drops entries that are exactly zero.
    pub fn build(mut self) -> CsrMatrix<T> {
        self.entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; self.nrows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values = Vec::with_capacity(self.entries.len());
        let mut rows = Vec::with_capacity(self.entries.len());

        let mut iter = self.entries.into_iter().peekable();
        while let Some((r, c, mut v)) = iter.next() {
            while let Some(&(r2, c2, v2)) = iter.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            if v != T::zero() {
                rows.push(r);
                col_idx.push(c);
                values.push(v);
            }
        }
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..self.nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { nrows: self.nrows, ncols: self.ncols, row_ptr, col_idx, values }
    }
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    /// Entry `(i, j)`, zero if not stored.
    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => T::zero(),
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.ncols, "matvec: input length");
        assert_eq!(y.len(), self.nrows, "matvec: output length");
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    pub fn transpose(&self) -> Self {
        let mut b = TripletBuilder::with_capacity(self.ncols, self.nrows, self.nnz());
        for (i, j, v) in self.triplets() {
            b.push(j, i, v);
        }
        b.build()
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &Self, s: T) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.nrows * self.ncols,
                found: other.nrows * other.ncols,
            });
        }
        let mut b = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz() + other.nnz());
        for (i, j, v) in self.triplets() {
            b.push(i, j, v);
        }
        for (i, j, v) in other.triplets() {
            b.push(i, j, s * v);
        }
        Ok(b.build())
    }

    pub fn scaled(&self, s: T) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= s;
        }
        out
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.nrows).map(|i| self.row(i).1.iter().copied().sum()).collect()
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// Lower and upper bandwidth `(kl, ku)`.
    pub fn bandwidth(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for (i, j, _) in self.triplets() {
            if j < i {
                kl = kl.max(i - j);
            } else {
                ku = ku.max(j - i);
            }
        }
        (kl, ku)
    }

    /// Replaces the listed rows by identity rows.
    pub fn with_identity_rows(&self, rows: &[bool]) -> Self {
        assert_eq!(rows.len(), self.nrows);
        let mut b = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz());
        for (i, j, v) in self.triplets() {
            if !rows[i] {
                b.push(i, j, v);
            }
        }
        for (i, &fixed) in rows.iter().enumerate() {
            if fixed {
                b.push(i, i, T::one());
            }
        }
        b.build()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CsrMatrix<f64> {
        let mut b = TripletBuilder::new(3, 3);
        b.push(0, 0, 2.0);
        b.push(0, 2, 1.0);
        b.push(2, 0, -1.0);
        b.push(1, 1, 3.0);
        b.push(1, 1, 1.0);
        b.push(2, 2, 0.5);
        b.push(2, 1, 1.0);
        b.push(2, 1, -1.0);
        b.build()
    }

    #[test]
    fn duplicates_summed_and_zeros_dropped() {
        let a = sample();
        assert_eq!(a.get(1, 1), 4.0);
        assert_eq!(a.nnz(), 5);
        assert!(a.values().iter().all(|&v| v != 0.0));
        assert_eq!(a.get(2, 1), 0.0);
    }

    #[test]
    fn matvec_and_transpose() {
        let a = sample();
        let x = [1.0, 2.0, 3.0];
        assert_eq!(a.mul_vec(&x), vec![5.0, 8.0, 0.5]);
        let at = a.transpose();
        assert_eq!(at.get(0, 2), -1.0);
        assert_eq!(at.get(2, 0), 1.0);
    }

    #[test]
    fn identity_rows_and_bandwidth() {
        let a = sample().with_identity_rows(&[false, false, true]);
        assert_eq!(a.row(2).0, &[2]);
        assert_eq!(a.get(2, 2), 1.0);
        assert_eq!(sample().bandwidth(), (2, 2));
    }

    #[test]
    fn add_scaled_merges_patterns() {
        let a = sample();
        let c = a.add_scaled(&a, -1.0).unwrap();
        assert_eq!(c.nnz(), 0);
        let d = a.add_scaled(&a.transpose(), 1.0).unwrap();
        assert_eq!(d.get(0, 2), 0.0);
        assert_eq!(d.get(0, 0), 4.0);
    }
}
