use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::graph::SchrodingerOp;
use crate::scalar::Real;

use super::dense::SymDense;

/// Row count above which matrix-vector products run on the thread pool.
const PARALLEL_ROWS: usize = 20_000;

/// A symmetric linear map on `ℝⁿ` given by its action.
pub trait SymOperator<T>: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[T], y: &mut [T]);
}

/// Compressed symmetric matrix storing both triangles.
#[derive(Clone, Debug)]
pub struct SparseSym<T> {
    n: usize,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Real> SparseSym<T> {
    /// Builds from per-row `(column, value)` maps.
    pub fn from_rows(rows: Vec<BTreeMap<usize, T>>) -> Self {
        let n = rows.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        offsets.push(0);
        for row in rows {
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            offsets.push(cols.len());
        }
        Self { n, offsets, cols, vals }
    }

    /// The μ-symmetrization `M^{1/2} S M^{-1/2}` of an operator on its free
    /// vertices. It has the same spectrum, and `y = M^{1/2} f` carries
    /// `‖f‖_μ` to the Euclidean norm.
    pub fn from_operator(op: &SchrodingerOp<T>) -> Self {
        let g = op.graph();
        let rows = op
            .free()
            .iter()
            .map(|&v| {
                let mut row = BTreeMap::new();
                let mv = g.mu(v);
                let mut diag = op.potential()[v];
                for (u, w) in g.neighbors(v) {
                    if u == v {
                        continue;
                    }
                    diag += w / mv;
                    if let Some(j) = op.slot(u) {
                        *row.entry(j).or_insert_with(T::zero) -= w / (mv * g.mu(u)).sqrt();
                    }
                }
                *row.entry(op.slot(v).expect("free vertex")).or_insert_with(T::zero) += diag;
                row
            })
            .collect();
        Self::from_rows(rows)
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        (self.offsets[i]..self.offsets[i + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    pub fn dim_rows(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn to_dense(&self) -> SymDense<T> {
        let mut m = SymDense::zeros(self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if j >= i {
                    m.set(i, j, v);
                }
            }
        }
        m
    }

    /// Gershgorin bound on the spectral radius.
    pub fn norm_bound(&self) -> T {
        (0..self.n)
            .map(|i| self.row(i).fold(T::zero(), |acc, (_, v)| acc + v.abs()))
            .fold(T::zero(), T::max)
    }
}

impl<T: Real> SymOperator<T> for SparseSym<T> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        let row = |i: usize| self.row(i).fold(T::zero(), |acc, (j, v)| acc + v * x[j]);
        if self.n >= PARALLEL_ROWS {
            y[..self.n].par_iter_mut().enumerate().for_each(|(i, yi)| *yi = row(i));
        } else {
            for (i, yi) in y.iter_mut().enumerate().take(self.n) {
                *yi = row(i);
            }
        }
    }
}

impl<T: Real> SymOperator<T> for SymDense<T> {
    fn dim(&self) -> usize {
        SymDense::dim(self)
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        self.mul_vec(x, y);
    }
}

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub(crate) fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub(crate) fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn scale<T: Real>(alpha: T, x: &mut [T]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

pub(crate) fn random_unit<T: Real>(n: usize, rng: &mut ChaCha8Rng) -> Vec<T> {
    let mut v: Vec<T> = (0..n).map(|_| T::from_f64_lossy(rng.random::<f64>() - 0.5)).collect();
    let nv = norm(&v);
    scale(T::one() / nv, &mut v);
    v
}

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
