//! Dense LU with partial pivoting. Cells stay under ~100 unknowns.

use std::ops::{Index, IndexMut};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn add(&mut self, row: usize, col: usize, v: f64) {
        self.data[row * self.n + col] += v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.n..(r + 1) * self.n]
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.n + c]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.n + c]
    }
}

/// Zero-based column whose pivot vanished.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Singular {
    pub column: usize,
}

/// Solves `a * x = b` in place; `a` is overwritten by its factors and `b` by `x`.
pub fn solve_in_place(a: &mut DenseMatrix, b: &mut [f64]) -> Result<(), Singular> {
    let n = a.n;
    assert_eq!(b.len(), n);
    let tiny = a.max_abs() * f64::EPSILON * 1e-3;
    for k in 0..n {
        let (mut piv, mut best) = (k, a[(k, k)].abs());
        for r in k + 1..n {
            let v = a[(r, k)].abs();
            if v > best {
                piv = r;
                best = v;
            }
        }
        if !(best > tiny) || best == 0.0 {
            return Err(Singular { column: k });
        }
        if piv != k {
            for c in 0..n {
                a.data.swap(k * n + c, piv * n + c);
            }
            b.swap(k, piv);
        }
        let pivot = a[(k, k)];
        for r in k + 1..n {
            let f = a[(r, k)] / pivot;
            if f == 0.0 {
                continue;
            }
            a[(r, k)] = f;
            for c in k + 1..n {
                let v = a[(k, c)];
                a[(r, c)] -= f * v;
            }
            b[r] -= f * b[k];
        }
    }
    for k in (0..n).rev() {
        let mut s = b[k];
        for c in k + 1..n {
            s -= a[(k, c)] * b[c];
        }
        b[k] = s / a[(k, k)];
    }
    Ok(())
}
