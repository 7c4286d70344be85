//! Distance-layer quotients. When the hop layers around a root form an
//! equitable partition, radial functions span an invariant subspace and the
//! ground state is radial (it is the unique positive eigenfunction), so the
//! bottom of the spectrum is that of a small tridiagonal matrix.

use crate::error::{Error, Result};
use crate::graph::{SchrodingerOp, UNREACHED};
use crate::scalar::Real;

use super::dense::tridiagonal_eigenvalues;

/// Per-layer data of an equitable partition into hop layers.
///
/// A vertex of layer `k` has total weighted degree `degree[k]`, `up[k]`
/// free neighbours in layer `k − 1`, `lateral[k]` in layer `k` and `down[k]`
/// in layer `k + 1`; neighbours outside the free set are Dirichlet.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfile<T> {
    pub sizes: Vec<f64>,
    pub degree: Vec<T>,
    pub up: Vec<T>,
    pub lateral: Vec<T>,
    pub down: Vec<T>,
    pub weight: T,
    pub mu: T,
    pub potential: T,
}

impl<T: Real> RadialProfile<T> {
    /// Dirichlet ball of radius `radius` in the `d`-regular tree with unit
    /// weights and measure.
    pub fn regular_tree_ball(d: usize, radius: usize) -> Self {
        let layers = radius + 1;
        let df = T::from_count(d);
        let mut sizes = Vec::with_capacity(layers);
        let mut up = Vec::with_capacity(layers);
        let mut down = Vec::with_capacity(layers);
        for k in 0..layers {
            sizes.push(if k == 0 {
                1.0
            } else {
                d as f64 * ((d - 1) as f64).powi(k as i32 - 1)
            });
            up.push(if k == 0 { T::zero() } else { T::one() });
            down.push(if k == radius {
                T::zero()
            } else if k == 0 {
                df
            } else {
                df - T::one()
            });
        }
        Self {
            sizes,
            degree: vec![df; layers],
            up,
            lateral: vec![T::zero(); layers],
            down,
            weight: T::one(),
            mu: T::one(),
            potential: T::zero(),
        }
    }

    /// One branch of the `d`-regular tree hanging below a Dirichlet parent,
    /// with `depth + 1` free layers and Dirichlet data beneath the last.
    pub fn regular_tree_branch(d: usize, depth: usize) -> Self {
        let layers = depth + 1;
        let df = T::from_count(d);
        let mut sizes = Vec::with_capacity(layers);
        let mut up = Vec::with_capacity(layers);
        let mut down = Vec::with_capacity(layers);
        for k in 0..layers {
            sizes.push(((d - 1) as f64).powi(k as i32));
            up.push(if k == 0 { T::zero() } else { T::one() });
            down.push(if k == depth { T::zero() } else { df - T::one() });
        }
        Self {
            sizes,
            degree: vec![df; layers],
            up,
            lateral: vec![T::zero(); layers],
            down,
            weight: T::one(),
            mu: T::one(),
            potential: T::zero(),
        }
    }

    /// Extracts the profile of the free part of `op` around `root`, failing
    /// unless the layers are equitable and the data constant on each layer.
    pub fn from_operator(op: &SchrodingerOp<T>, root: usize) -> Result<Self> {
        let g = op.graph();
        if op.mask()[root] {
            return Err(Error::InvalidArgument("root is masked".into()));
        }
        let free: Vec<bool> = op.mask().iter().map(|&m| !m).collect();
        // Hop distance inside the free subgraph.
        let mut dist = vec![UNREACHED; g.num_vertices()];
        dist[root] = 0;
        let mut order = vec![root];
        let mut i = 0;
        while i < order.len() {
            let v = order[i];
            i += 1;
            for (u, _) in g.neighbors(v) {
                if free[u] && dist[u] == UNREACHED {
                    dist[u] = dist[v] + 1;
                    order.push(u);
                }
            }
        }
        if order.len() != op.dim() {
            return Err(Error::Disconnected("free part of operator".into()));
        }
        let layers = dist.iter().filter(|&&d| d != UNREACHED).max().unwrap_or(&0) + 1;
        let weight = g.edges().first().map_or(T::one(), |e| e.w);
        let mu = g.mu(root);
        let potential = op.potential()[root];
        let mut rows: Vec<Option<[T; 4]>> = vec![None; layers];
        let mut sizes = vec![0.0; layers];
        for &v in &order {
            let k = dist[v];
            sizes[k] += 1.0;
            if g.mu(v) != mu || op.potential()[v] != potential {
                return Err(Error::InvalidArgument(format!("layer data differ at vertex {v}")));
            }
            let mut counts = [T::zero(); 4];
            for (u, w) in g.neighbors(v) {
                if w != weight {
                    return Err(Error::InvalidArgument("non-uniform weights".into()));
                }
                if u == v {
                    continue;
                }
                counts[0] += T::one();
                if free[u] {
                    match dist[u] as isize - k as isize {
                        -1 => counts[1] += T::one(),
                        0 => counts[2] += T::one(),
                        1 => counts[3] += T::one(),
                        _ => unreachable!("hop layers differ by at most one"),
                    }
                }
            }
            match &rows[k] {
                None => rows[k] = Some(counts),
                Some(prev) if *prev == counts => {}
                Some(_) => {
                    return Err(Error::InvalidArgument(format!(
                        "layer {k} is not equitable (vertex {v})"
                    )))
                }
            }
        }
        let rows: Vec<[T; 4]> = rows.into_iter().map(|r| r.expect("nonempty layer")).collect();
        Ok(Self {
            sizes,
            degree: rows.iter().map(|r| r[0]).collect(),
            up: rows.iter().map(|r| r[1]).collect(),
            lateral: rows.iter().map(|r| r[2]).collect(),
            down: rows.iter().map(|r| r[3]).collect(),
            weight,
            mu,
            potential,
        })
    }

    pub fn layers(&self) -> usize {
        self.sizes.len()
    }

    pub fn num_vertices(&self) -> f64 {
        self.sizes.iter().sum()
    }

    /// Symmetrized tridiagonal quotient `(diagonal, off-diagonal)`.
    pub fn quotient(&self) -> (Vec<T>, Vec<T>) {
        let c = self.weight / self.mu;
        let l = self.layers();
        let diag = (0..l)
            .map(|k| c * (self.degree[k] - self.lateral[k]) + self.potential)
            .collect();
        let off = (0..l.saturating_sub(1))
            .map(|k| -c * (self.down[k] * self.up[k + 1]).sqrt())
            .collect();
        (diag, off)
    }

    /// Bottom of the spectrum of the Dirichlet operator the profile describes.
    pub fn lambda0(&self) -> Result<T> {
        let (diag, off) = self.quotient();
        Ok(tridiagonal_eigenvalues(&diag, &off)?[0])
    }
}
