//! Dense vectors, node-stacked iterates, and small dense matrices.
//!
//! Everything is `f64`, row-major, and deterministic: reductions always run
//! in ascending index order so that serial and parallel callers agree
//! bitwise.

use alloc::vec;
use alloc::vec::Vec;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(norm_sq(a))
}

/// The stacked iterate `(x_1, ..., x_n)`, stored as `n` rows of length `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeStack {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl NodeStack {
    pub fn zeros(n: usize, d: usize) -> Self {
        NodeStack {
            n,
            d,
            data: vec![0.0; n * d],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let d = rows[0].len();
        let mut data = Vec::with_capacity(n * d);
        for row in rows {
            assert_eq!(row.len(), d, "inconsistent row length");
            data.extend_from_slice(row);
        }
        NodeStack { n, d, data }
    }

    /// Every row is a copy of `v`.
    pub fn consensus(n: usize, v: &[f64]) -> Self {
        let mut s = NodeStack::zeros(n, v.len());
        for i in 0..n {
            s.row_mut(i).copy_from_slice(v);
        }
        s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Squared norm over all `n*d` entries.
    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.data)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.data {
            *v *= c;
        }
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: f64, other: &NodeStack) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for i in 0..self.data.len() {
            self.data[i] += c * other.data[i];
        }
    }

    /// `a*x + b*y`, freshly allocated.
    pub fn lin_comb(a: f64, x: &NodeStack, b: f64, y: &NodeStack) -> NodeStack {
        debug_assert_eq!(x.data.len(), y.data.len());
        let mut out = NodeStack::zeros(x.n, x.d);
        for i in 0..x.data.len() {
            out.data[i] = a * x.data[i] + b * y.data[i];
        }
        out
    }

    pub fn dot(&self, other: &NodeStack) -> f64 {
        dot(&self.data, &other.data)
    }

    /// Per-coordinate mean over nodes.
    pub fn node_mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.d];
        for i in 0..self.n {
            let row = self.row(i);
            for j in 0..self.d {
                mean[j] += row[j];
            }
        }
        for m in &mut mean {
            *m /= self.n as f64;
        }
        mean
    }
}

/// Dense `n x n` matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    /// `out = M v`
    pub fn mul_vec(&self, v: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            out[i] = dot(row, v);
        }
    }

    /// `out = M^T v`
    pub fn mul_vec_transpose(&self, v: &[f64], out: &mut [f64]) {
        for j in 0..self.n {
            out[j] = 0.0;
        }
        for i in 0..self.n {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            for j in 0..self.n {
                out[j] += row[j] * v[i];
            }
        }
    }

    /// Applies the matrix node-block-wise to a stack: `out_i = sum_j M_ij x_j`.
    /// The Kronecker product with the identity is never materialized.
    pub fn apply_to_stack(&self, x: &NodeStack) -> NodeStack {
        debug_assert_eq!(self.n, x.n());
        let d = x.d();
        let mut out = NodeStack::zeros(x.n(), d);
        for i in 0..self.n {
            for j in 0..self.n {
                let w = self.get(i, j);
                if w != 0.0 {
                    let src = x.row(j);
                    let dst = out.row_mut(i);
                    for c in 0..d {
                        dst[c] += w * src[c];
                    }
                }
            }
        }
        out
    }
}
