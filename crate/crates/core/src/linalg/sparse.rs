use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::group::C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const PAR_MIN: usize = 1 << 14;

/// Sparse complex square matrix in compressed-row form.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<C64>,
    pub hermitian: bool,
    pub unitary: bool,
}

impl LinearOperator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: vec![0; dim + 1],
            cols: Vec::new(),
            vals: Vec::new(),
            hermitian: true,
            unitary: false,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(vec![C64::new(1.0, 0.0); dim])
    }

    pub fn diagonal(d: Vec<C64>) -> Self {
        let dim = d.len();
        let herm = d.iter().all(|z| z.im == 0.0);
        let unit = d.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12);
        let mut out = Self::from_rows(dim, |i, row| {
            if d[i] != ZERO {
                row.push((i, d[i]))
            }
        });
        out.hermitian = herm;
        out.unitary = unit;
        out
    }

    /// Build from a row generator `f(i, row)` pushing `(column, value)`
    /// pairs. Duplicate columns are summed and exact zeros dropped.
    pub fn from_rows<F>(dim: usize, f: F) -> Self
    where
        F: Fn(usize, &mut Vec<(usize, C64)>) + Sync,
    {
        assert!(dim <= u32::MAX as usize);
        let chunk = 4096;
        let parts: Vec<(Vec<usize>, Vec<u32>, Vec<C64>)> = (0..dim.div_ceil(chunk))
            .into_par_iter()
            .map(|c| {
                let mut lens = Vec::with_capacity(chunk);
                let mut cols = Vec::new();
                let mut vals = Vec::new();
                let mut row = Vec::new();
                for i in c * chunk..((c + 1) * chunk).min(dim) {
                    row.clear();
                    f(i, &mut row);
                    row.sort_unstable_by_key(|e| e.0);
                    let start = cols.len();
                    for &(j, v) in row.iter() {
                        if cols.len() > start && *cols.last().unwrap() as usize == j {
                            *vals.last_mut().unwrap() += v;
                        } else {
                            cols.push(j as u32);
                            vals.push(v);
                        }
                    }
                    // drop exact zeros produced by cancellation
                    let mut w = start;
                    for r in start..cols.len() {
                        if vals[r] != ZERO {
                            cols[w] = cols[r];
                            vals[w] = vals[r];
                            w += 1;
                        }
                    }
                    cols.truncate(w);
                    vals.truncate(w);
                    lens.push(w - start);
                }
                (lens, cols, vals)
            })
            .collect();
        let nnz: usize = parts.iter().map(|p| p.1.len()).sum();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for (lens, c, v) in parts {
            for l in lens {
                row_ptr.push(row_ptr.last().unwrap() + l);
            }
            cols.extend(c);
            vals.extend(v);
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
            hermitian: false,
            unitary: false,
        }
    }

    /// Build from a column generator `f(j, col)` pushing `(row, value)`.
    pub fn from_columns<F>(dim: usize, f: F) -> Self
    where
        F: Fn(usize, &mut Vec<(usize, C64)>) + Sync,
    {
        Self::from_rows(dim, f).transpose()
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        Self::from_rows(m.nrows(), |i, row| {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != ZERO {
                    row.push((j, v));
                }
            }
        })
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .zip(&self.vals[r])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.row(i).find(|e| e.0 == j).map(|e| e.1).unwrap_or(ZERO)
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|i| self.row(i).all(|(j, _)| j == i))
    }

    pub fn diagonal_values(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.dim];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        let body = |(i, yi): (usize, &mut C64)| {
            let mut acc = ZERO;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            *yi = acc;
        };
        if self.dim >= PAR_MIN {
            y.par_iter_mut().enumerate().for_each(body);
        } else {
            y.iter_mut().enumerate().for_each(body);
        }
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.dim + 1];
        for &c in &self.cols {
            counts[c as usize + 1] += 1;
        }
        for i in 0..self.dim {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut cols = vec![0u32; self.nnz()];
        let mut vals = vec![ZERO; self.nnz()];
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let c = self.cols[k] as usize;
                let p = next[c];
                cols[p] = i as u32;
                vals[p] = self.vals[k];
                next[c] += 1;
            }
        }
        Self {
            dim: self.dim,
            row_ptr,
            cols,
            vals,
            hermitian: self.hermitian,
            unitary: self.unitary,
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut t = self.transpose();
        t.vals.iter_mut().for_each(|v| *v = v.conj());
        t
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= s);
        out.hermitian = self.hermitian && s.im == 0.0;
        out.unitary = self.unitary && (s.norm() - 1.0).abs() < 1e-14;
        out
    }

    /// self + s * other
    pub fn add_scaled(&self, other: &Self, s: C64) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut out = Self::from_rows(self.dim, |i, row| {
            row.extend(self.row(i));
            row.extend(other.row(i).map(|(j, v)| (j, v * s)));
        });
        out.hermitian = self.hermitian && other.hermitian && s.im == 0.0;
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.add_scaled(other, C64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(other, C64::new(-1.0, 0.0))
    }

    pub fn sum<'a>(dim: usize, ops: impl IntoIterator<Item = &'a LinearOperator>) -> Self {
        let ops: Vec<_> = ops.into_iter().collect();
        let mut out = Self::from_rows(dim, |i, row| {
            for op in &ops {
                row.extend(op.row(i));
            }
        });
        out.hermitian = ops.iter().all(|o| o.hermitian);
        out
    }

    /// Sparse product self * other.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut out = Self::from_rows(self.dim, |i, row| {
            for (k, a) in self.row(i) {
                row.extend(other.row(k).map(|(j, b)| (j, a * b)));
            }
        });
        out.unitary = self.unitary && other.unitary;
        out
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.matmul(other).sub(&other.matmul(self))
    }

    /// Largest absolute entry of self - other.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn frobenius(&self) -> f64 {
        self.vals.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Kronecker product with an identity acting on more significant
    /// index digits: result index = i + dim * a for a in 0..factor.
    pub fn extend_identity(&self, factor: usize) -> Self {
        let d = self.dim;
        let mut out = Self::from_rows(d * factor, |i, row| {
            let (a, r) = (i / d, i % d);
            row.extend(self.row(r).map(|(j, v)| (j + a * d, v)));
        });
        out.hermitian = self.hermitian;
        out.unitary = self.unitary;
        out
    }

    /// Verify hermiticity (exactly for dim <= 4096, by random probes above)
    /// and set the flag.
    pub fn checked_hermitian(mut self) -> Result<Self> {
        let dev = self.hermiticity_deviation();
        if dev > 1e-10 * (1.0 + self.max_abs()) {
            return Err(Error::NotHermitian(dev));
        }
        self.hermitian = true;
        Ok(self)
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        if self.dim <= 4096 {
            self.max_abs_diff(&self.adjoint())
        } else {
            let mut rng = crate::state::seeded_rng(0x5eed);
            let mut dev: f64 = 0.0;
            for _ in 0..3 {
                let x = crate::state::random_vector(self.dim, &mut rng);
                let y = crate::state::random_vector(self.dim, &mut rng);
                let a = crate::state::inner(&x, &self.matvec(&y));
                let b = crate::state::inner(&self.matvec(&x), &y);
                dev = dev.max((a - b).norm());
            }
            dev
        }
    }

    /// Verify unitarity (exactly for dim <= 4096, by random probes above)
    /// and set the flag.
    pub fn checked_unitary(mut self) -> Result<Self> {
        let dev = self.unitarity_deviation();
        if dev > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "operator is not unitary (deviation {dev:e})"
            )));
        }
        self.unitary = true;
        Ok(self)
    }

    pub fn unitarity_deviation(&self) -> f64 {
        if self.dim <= 4096 {
            self.adjoint()
                .matmul(self)
                .max_abs_diff(&Self::identity(self.dim))
        } else {
            let mut rng = crate::state::seeded_rng(0x5eed);
            let mut dev: f64 = 0.0;
            for _ in 0..3 {
                let x = crate::state::random_vector(self.dim, &mut rng);
                let n = crate::state::norm(&self.matvec(&x));
                dev = dev.max((n - 1.0).abs());
            }
            dev
        }
    }
}
