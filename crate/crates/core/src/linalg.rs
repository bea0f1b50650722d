//! Row-major dense matrices and the small least-squares solver used by the
//! recovery algorithms.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{abs, dot, sqrt};
use crate::{Error, Result};

/// Relative pivot floor below which Cholesky hands over to pivoted elimination.
const CHOLESKY_PIVOT_FLOOR: f64 = 1e-10;
/// Relative pivot floor below which pivoted elimination reports rank deficiency.
const ELIMINATION_PIVOT_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDimension("matrix must have at least one row and column"));
        }
        if entries.len() != rows * cols {
            return Err(Error::InvalidDimension("entry count does not match rows x cols"));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.entries[i * n + i] = 1.0;
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidDimension("ragged rows"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.entries[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.entries[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|v| v.is_finite())
    }

    /// `A x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::InvalidDimension("matvec operand length"));
        }
        Ok((0..self.rows).map(|r| dot(self.row(r), x)).collect())
    }

    /// `Aᵀ v`.
    pub fn tr_matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::InvalidDimension("transposed matvec operand length"));
        }
        let mut out = vec![0.0; self.cols];
        for (r, &vr) in v.iter().enumerate() {
            if vr == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(r)) {
                *o += a * vr;
            }
        }
        Ok(out)
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::InvalidDimension("matmul inner dimensions differ"));
        }
        let mut out = vec![0.0; self.rows * rhs.cols];
        for r in 0..self.rows {
            let dst = &mut out[r * rhs.cols..(r + 1) * rhs.cols];
            for (k, &a) in self.row(r).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (d, b) in dst.iter_mut().zip(rhs.row(k)) {
                    *d += a * b;
                }
            }
        }
        DenseMatrix::new(self.rows, rhs.cols, out)
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = vec![0.0; self.entries.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[c * self.rows + r] = self.get(r, c);
            }
        }
        DenseMatrix { rows: self.cols, cols: self.rows, entries: out }
    }

    /// The first `count` rows as a new matrix.
    pub fn top_rows(&self, count: usize) -> Result<DenseMatrix> {
        if count == 0 || count > self.rows {
            return Err(Error::InvalidDimension("row count out of range"));
        }
        DenseMatrix::new(count, self.cols, self.entries[..count * self.cols].to_vec())
    }

    /// Squared ℓ2 norm of every column.
    pub fn column_norms_sq(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (o, a) in out.iter_mut().zip(self.row(r)) {
                *o += a * a;
            }
        }
        out
    }

    /// Largest eigenvalue of `AᵀA` (the squared spectral norm), by power
    /// iteration from a deterministic start vector.
    pub fn spectral_norm_sq(&self) -> f64 {
        let n = self.cols;
        // Deterministic, generically non-orthogonal start.
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64 * 0.125).collect();
        let nv = crate::math::norm2(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        let mut estimate = 0.0;
        for _ in 0..2000 {
            let av = self.matvec(&v).expect("dimensions checked");
            let mut w = self.tr_matvec(&av).expect("dimensions checked");
            let next = dot(&v, &w);
            let nw = crate::math::norm2(&w);
            if nw == 0.0 {
                return 0.0;
            }
            w.iter_mut().for_each(|x| *x /= nw);
            v = w;
            if abs(next - estimate) <= 1e-13 * next {
                estimate = next;
                break;
            }
            estimate = next;
        }
        estimate
    }
}

/// Least-squares coefficients of `y` on the columns `support` of `a`.
///
/// Solves the normal equations by Cholesky, falling back to elimination with
/// complete pivoting when a Cholesky pivot drops below `1e-10` relative to the
/// largest diagonal entry. Rank deficiency under pivoting is reported as
/// [`Error::DegenerateSupport`].
pub fn least_squares(a: &DenseMatrix, support: &[usize], y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != a.rows() {
        return Err(Error::InvalidDimension("right-hand side length"));
    }
    let s = support.len();
    if s == 0 {
        return Ok(Vec::new());
    }
    if support.iter().any(|&c| c >= a.cols()) {
        return Err(Error::InvalidDimension("support index out of range"));
    }
    if s > a.rows() {
        return Err(Error::DegenerateSupport { support: support.to_vec() });
    }
    let cols: Vec<Vec<f64>> = support.iter().map(|&c| a.column(c)).collect();
    let mut gram = vec![0.0; s * s];
    for i in 0..s {
        for j in 0..=i {
            let g = dot(&cols[i], &cols[j]);
            gram[i * s + j] = g;
            gram[j * s + i] = g;
        }
    }
    let rhs: Vec<f64> = cols.iter().map(|c| dot(c, y)).collect();

    if let Some(x) = cholesky_solve(&gram, &rhs, s) {
        return Ok(x);
    }
    pivoted_solve(gram, rhs, s).ok_or_else(|| Error::DegenerateSupport { support: support.to_vec() })
}

fn cholesky_solve(gram: &[f64], rhs: &[f64], s: usize) -> Option<Vec<f64>> {
    let scale = (0..s).map(|i| gram[i * s + i]).fold(0.0, f64::max);
    if scale <= 0.0 {
        return None;
    }
    let mut l = vec![0.0; s * s];
    for j in 0..s {
        let mut d = gram[j * s + j];
        for k in 0..j {
            d -= l[j * s + k] * l[j * s + k];
        }
        if d < CHOLESKY_PIVOT_FLOOR * scale {
            return None;
        }
        let d = sqrt(d);
        l[j * s + j] = d;
        for i in j + 1..s {
            let mut v = gram[i * s + j];
            for k in 0..j {
                v -= l[i * s + k] * l[j * s + k];
            }
            l[i * s + j] = v / d;
        }
    }
    let mut z = vec![0.0; s];
    for i in 0..s {
        let mut v = rhs[i];
        for k in 0..i {
            v -= l[i * s + k] * z[k];
        }
        z[i] = v / l[i * s + i];
    }
    let mut x = vec![0.0; s];
    for i in (0..s).rev() {
        let mut v = z[i];
        for k in i + 1..s {
            v -= l[k * s + i] * x[k];
        }
        x[i] = v / l[i * s + i];
    }
    Some(x)
}

fn pivoted_solve(mut m: Vec<f64>, mut b: Vec<f64>, s: usize) -> Option<Vec<f64>> {
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(abs(*v)));
    if scale == 0.0 {
        return None;
    }
    let mut perm: Vec<usize> = (0..s).collect();
    for k in 0..s {
        let (mut pr, mut pc, mut best) = (k, k, 0.0);
        for r in k..s {
            for c in k..s {
                let v = abs(m[r * s + c]);
                if v > best {
                    best = v;
                    pr = r;
                    pc = c;
                }
            }
        }
        if best < ELIMINATION_PIVOT_FLOOR * scale {
            return None;
        }
        if pr != k {
            for c in 0..s {
                m.swap(k * s + c, pr * s + c);
            }
            b.swap(k, pr);
        }
        if pc != k {
            for r in 0..s {
                m.swap(r * s + k, r * s + pc);
            }
            perm.swap(k, pc);
        }
        let piv = m[k * s + k];
        for r in k + 1..s {
            let f = m[r * s + k] / piv;
            if f == 0.0 {
                continue;
            }
            for c in k..s {
                m[r * s + c] -= f * m[k * s + c];
            }
            b[r] -= f * b[k];
        }
    }
    let mut z = vec![0.0; s];
    for i in (0..s).rev() {
        let mut v = b[i];
        for c in i + 1..s {
            v -= m[i * s + c] * z[c];
        }
        z[i] = v / m[i * s + i];
    }
    let mut x = vec![0.0; s];
    for (i, &p) in perm.iter().enumerate() {
        x[p] = z[i];
    }
    Some(x)
}

/// `‖y − A_S x_S‖₂` for coefficients `coef` on `support`.
pub fn support_residual_norm(a: &DenseMatrix, support: &[usize], coef: &[f64], y: &[f64]) -> f64 {
    let mut r = y.to_vec();
    for (&c, &v) in support.iter().zip(coef) {
        for (row, ri) in r.iter_mut().enumerate() {
            *ri -= a.get(row, c) * v;
        }
    }
    crate::math::norm2(&r)
}
