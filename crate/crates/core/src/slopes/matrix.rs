//! Dense matrices over a local ring, with a division-free characteristic
//! polynomial and valuation-pivoted linear solving.

use crate::error::{Error, Result};
use crate::local::{LocalElem, LocalRing};
use crate::newton::Valuation;
use crate::ring::Ring;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<LocalElem>,
}

impl Matrix {
    pub fn zeros(r: &LocalRing, rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![r.exact_zero(); rows * cols] }
    }

    pub fn identity(r: &LocalRing, n: usize) -> Self {
        let mut m = Self::zeros(r, n, n);
        for i in 0..n {
            m.set(i, i, r.one());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> LocalElem) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<LocalElem>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Precondition("rows of unequal length".into()));
        }
        Ok(Matrix { rows: n, cols: m, data: rows.into_iter().flatten().collect() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &LocalElem {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: LocalElem) {
        self.data[i * self.cols + j] = x;
    }

    pub fn entries(&self) -> &[LocalElem] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[LocalElem] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn add(&self, r: &LocalRing, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix::from_fn(self.rows, self.cols, |i, j| r.add(self.get(i, j), other.get(i, j)))
    }

    pub fn sub(&self, r: &LocalRing, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix::from_fn(self.rows, self.cols, |i, j| r.sub(self.get(i, j), other.get(i, j)))
    }

    pub fn scale(&self, r: &LocalRing, c: &LocalElem) -> Matrix {
        Matrix::from_fn(self.rows, self.cols, |i, j| r.mul(c, self.get(i, j)))
    }

    pub fn mul(&self, r: &LocalRing, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        Matrix::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = r.exact_zero();
            for k in 0..self.cols {
                let a = self.get(i, k);
                if r.is_zero(a) && a.is_exact() {
                    continue;
                }
                acc = r.add(&acc, &r.mul(a, other.get(k, j)));
            }
            acc
        })
    }

    /// Apply `f` to every entry.
    pub fn map(&self, f: impl Fn(&LocalElem) -> LocalElem) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    /// Truncate every entry to absolute precision `pi^n`.
    pub fn truncate(&self, r: &LocalRing, n: i64) -> Matrix {
        self.map(|x| r.with_prec_pi(x, n))
    }

    pub fn pow(&self, r: &LocalRing, mut n: u64, trunc: Option<i64>) -> Matrix {
        let cut = |m: Matrix| match trunc {
            Some(t) => m.truncate(r, t),
            None => m,
        };
        let mut base = self.clone();
        let mut acc = Matrix::identity(r, self.rows);
        while n > 0 {
            if n & 1 == 1 {
                acc = cut(acc.mul(r, &base));
            }
            n >>= 1;
            if n > 0 {
                base = cut(base.mul(r, &base));
            }
        }
        acc
    }

    /// Least valuation (lower bound) among the entries.
    pub fn min_valuation(&self, r: &LocalRing) -> Valuation {
        self.data.iter().map(|x| r.val_lb(x)).min().unwrap_or(Valuation::Infinite)
    }

    pub fn is_integral(&self, r: &LocalRing) -> bool {
        self.min_valuation(r) >= Valuation::int(0)
    }

    pub fn eq_to_prec(&self, r: &LocalRing, other: &Matrix) -> bool {
        (self.rows, self.cols) == (other.rows, other.cols)
            && self.data.iter().zip(&other.data).all(|(a, b)| r.eq_to_prec(a, b))
    }

    /// Leading principal submatrix of size `n`.
    fn leading(&self, n: usize) -> Matrix {
        Matrix::from_fn(n, n, |i, j| self.get(i, j).clone())
    }
}

/// Coefficients of `det(X I - M)`, highest degree first, by Berkowitz's
/// division-free recursion. Exact entries give exact coefficients.
pub fn charpoly(r: &LocalRing, m: &Matrix) -> Vec<LocalElem> {
    assert!(m.is_square());
    let n = m.rows();
    let mut v = vec![r.one()];
    for s in 0..n {
        // M = leading s x s block, R = row s left of the diagonal, C = column s above it
        let lead = m.leading(s);
        let a = m.get(s, s).clone();
        let mut t = vec![r.one(), r.neg(&a)];
        // vec = M^k C, starting from C
        let mut col: Vec<LocalElem> = (0..s).map(|i| m.get(i, s).clone()).collect();
        for _ in 0..s {
            let dot = (0..s).fold(r.exact_zero(), |acc, i| r.add(&acc, &r.mul(m.get(s, i), &col[i])));
            t.push(r.neg(&dot));
            col = (0..s)
                .map(|i| (0..s).fold(r.exact_zero(), |acc, j| r.add(&acc, &r.mul(lead.get(i, j), &col[j]))))
                .collect();
        }
        let mut next = Vec::with_capacity(s + 2);
        for i in 0..s + 2 {
            let mut acc = r.exact_zero();
            for (j, vj) in v.iter().enumerate() {
                if j <= i && i - j < t.len() {
                    acc = r.add(&acc, &r.mul(&t[i - j], vj));
                }
            }
            next.push(acc);
        }
        v = next;
    }
    v
}

/// Solve `M x = b` by Gaussian elimination, pivoting on least valuation.
pub fn solve(r: &LocalRing, m: &Matrix, b: &[LocalElem]) -> Result<Vec<LocalElem>> {
    let n = m.rows();
    if !m.is_square() || b.len() != n {
        return Err(Error::Precondition("solve needs a square system".into()));
    }
    let mut a: Vec<Vec<LocalElem>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    let mut rhs = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    for c in 0..n {
        let mut best: Option<(usize, usize, Valuation)> = None;
        for i in c..n {
            for j in c..n {
                if let Ok(v) = r.val(&a[i][j]) {
                    if !v.is_infinite() && best.as_ref().is_none_or(|bv| v < bv.2) {
                        best = Some((i, j, v));
                    }
                }
            }
        }
        let (pi, pj, _) = best.ok_or_else(|| Error::Precision("singular or under-resolved system".into()))?;
        a.swap(c, pi);
        rhs.swap(c, pi);
        for row in a.iter_mut() {
            row.swap(c, pj);
        }
        perm.swap(c, pj);
        let inv = r.try_inv(&a[c][c])?;
        for i in c + 1..n {
            let f = r.mul(&a[i][c], &inv);
            if r.is_zero(&f) && f.is_exact() {
                continue;
            }
            for j in c..n {
                let d = r.mul(&f, &a[c][j]);
                a[i][j] = r.sub(&a[i][j], &d);
            }
            let d = r.mul(&f, &rhs[c]);
            rhs[i] = r.sub(&rhs[i], &d);
        }
    }
    let mut y = vec![r.exact_zero(); n];
    for c in (0..n).rev() {
        let mut s = rhs[c].clone();
        for j in c + 1..n {
            s = r.sub(&s, &r.mul(&a[c][j], &y[j]));
        }
        y[c] = r.try_div(&s, &a[c][c])?;
    }
    let mut x = vec![r.exact_zero(); n];
    for (c, &col) in perm.iter().enumerate() {
        x[col] = y[c].clone();
    }
    Ok(x)
}

/// Evaluate a polynomial (low degree first) at a square matrix.
pub fn eval_poly(r: &LocalRing, coeffs: &[LocalElem], m: &Matrix, trunc: Option<i64>) -> Matrix {
    let n = m.rows();
    let mut acc = Matrix::zeros(r, n, n);
    for c in coeffs.iter().rev() {
        acc = acc.mul(r, m);
        for i in 0..n {
            let d = r.add(acc.get(i, i), c);
            acc.set(i, i, d);
        }
        if let Some(t) = trunc {
            acc = acc.truncate(r, t);
        }
    }
    acc
}
