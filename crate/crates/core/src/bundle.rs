//! Flat orthogonal bundles over graphs and their connection Laplacians.
//!
//! Edge `e = (u, v)` stores `O_{uv}`, the transport from the fiber at `v`
//! to the fiber at `u`; the reverse orientation uses `O_{vu} = O_{uv}ᵀ`.
//! The connection Laplacian is
//! `(Δf)(x) = μ(x)⁻¹ Σ_{y~x} w(xy)(f(x) − O_{xy} f(y))`.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::covering::{lift_cover, CoveringGraph, FiberAction, Generator, Move, Voltages};
use crate::error::{Error, Result};
use crate::graph::io::{parse_err, parse_index, parse_operator, parse_scalar, write_operator};
use crate::graph::{cycle, SchrodingerOp, WeightedGraph};
use crate::scalar::Real;
use crate::spectral::{lowest, LanczosOptions, Method, SparseSym, SymDense, SymOperator, DENSE_LIMIT};

/// Tolerance for orthogonality of connection matrices.
pub const ORTHOGONALITY_TOL: f64 = 1e-12;

/// Square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    pub dim: usize,
    pub entries: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![T::zero(); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = T::one();
        }
        Self { dim, entries }
    }

    pub fn from_rows(dim: usize, entries: Vec<T>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::InvalidArgument(format!(
                "{} entries for a {dim}×{dim} matrix",
                entries.len()
            )));
        }
        Ok(Self { dim, entries })
    }

    /// Rotation of the plane by `angle`.
    pub fn rotation(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            dim: 2,
            entries: vec![c, -s, s, c],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.dim + j]
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim;
        Self {
            dim: d,
            entries: (0..d * d).map(|k| self.get(k % d, k / d)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let d = self.dim;
        let mut entries = vec![T::zero(); d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                for j in 0..d {
                    entries[i * d + j] += a * other.get(k, j);
                }
            }
        }
        Self { dim: d, entries }
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        (0..self.dim)
            .map(|i| (0..self.dim).fold(T::zero(), |acc, j| acc + self.get(i, j) * x[j]))
            .collect()
    }

    /// Largest entry of `|a − b|`.
    pub fn distance(&self, other: &Self) -> T {
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    /// `max |OᵀO − I|`.
    pub fn orthogonality_defect(&self) -> T {
        self.transpose().mul(self).distance(&Self::identity(self.dim))
    }
}

/// Section of a bundle: a `d`-vector per vertex, stored vertex-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Section<T> {
    pub dim: usize,
    pub values: Vec<T>,
}

impl<T: Real> Section<T> {
    pub fn at(&self, v: usize) -> &[T] {
        &self.values[v * self.dim..(v + 1) * self.dim]
    }

    /// `Σ_v |f(v)|² μ(v)`.
    pub fn norm_sq(&self, mu: &[T]) -> T {
        mu.iter().enumerate().fold(T::zero(), |acc, (v, &m)| {
            acc + m * self.at(v).iter().fold(T::zero(), |s, &x| s + x * x)
        })
    }
}

/// Graph with an orthogonal connection on the trivial `ℝᵈ` bundle.
#[derive(Clone, Debug)]
pub struct GraphBundle<T> {
    graph: Arc<WeightedGraph<T>>,
    dim: usize,
    connection: Vec<Matrix<T>>,
}

impl<T: Real> GraphBundle<T> {
    /// Bundle with one matrix per edge in edge order.
    pub fn new(graph: Arc<WeightedGraph<T>>, dim: usize, connection: Vec<Matrix<T>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("fiber dimension must be positive".into()));
        }
        if connection.len() != graph.num_edges() {
            return Err(Error::InvalidArgument(format!(
                "{} connection matrices for {} edges",
                connection.len(),
                graph.num_edges()
            )));
        }
        let tol = T::from_f64_lossy(ORTHOGONALITY_TOL);
        for (e, m) in connection.iter().enumerate() {
            if m.dim != dim {
                return Err(Error::InvalidArgument(format!(
                    "edge {e} carries a {0}×{0} matrix",
                    m.dim
                )));
            }
            let defect = m.orthogonality_defect();
            if !(defect <= tol) {
                return Err(Error::InvalidArgument(format!(
                    "edge {e} matrix is not orthogonal (defect {defect})"
                )));
            }
        }
        Ok(Self { graph, dim, connection })
    }

    pub fn trivial(graph: Arc<WeightedGraph<T>>, dim: usize) -> Self {
        let connection = vec![Matrix::identity(dim); graph.num_edges()];
        Self { graph, dim, connection }
    }

    pub fn graph(&self) -> &Arc<WeightedGraph<T>> {
        &self.graph
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn edge_matrix(&self, e: usize) -> &Matrix<T> {
        &self.connection[e]
    }

    /// `O_{xy}` for the half-edge `h` from `x` to `y`.
    pub fn transport(&self, h: usize) -> Matrix<T> {
        let m = &self.connection[h / 2];
        if h % 2 == 0 {
            m.clone()
        } else {
            m.transpose()
        }
    }

    /// Product of transports along a closed vertex walk `v₀ v₁ … v₀`; each
    /// step uses the first edge joining consecutive vertices.
    pub fn holonomy(&self, walk: &[usize]) -> Result<Matrix<T>> {
        if walk.len() < 2 || walk.first() != walk.last() {
            return Err(Error::InvalidArgument("holonomy needs a closed walk".into()));
        }
        let mut acc = Matrix::identity(self.dim);
        for pair in walk.windows(2) {
            let h = self
                .graph
                .halves(pair[0])
                .iter()
                .copied()
                .find(|&h| self.graph.head(h) == pair[1])
                .ok_or_else(|| Error::InvalidArgument(format!("{} and {} are not adjacent", pair[0], pair[1])))?;
            acc = acc.mul(&self.transport(h));
        }
        Ok(acc)
    }

    /// `(Δf)(x)` on the full vertex set.
    pub fn apply(&self, f: &Section<T>) -> Section<T> {
        let d = self.dim;
        let mut out = vec![T::zero(); f.values.len()];
        for x in 0..self.graph.num_vertices() {
            let mx = self.graph.mu(x);
            for &h in self.graph.halves(x) {
                let y = self.graph.head(h);
                let w = self.graph.half_weight(h);
                let moved = self.transport(h).apply(f.at(y));
                for i in 0..d {
                    out[x * d + i] += w * (f.at(x)[i] - moved[i]) / mx;
                }
            }
        }
        Section { dim: d, values: out }
    }

    /// `M^{1/2} Δ M^{-1/2}` as a sparse symmetric matrix over `(vertex, i)`.
    pub fn symmetrized(&self) -> SparseSym<T> {
        let d = self.dim;
        let g = &self.graph;
        let mut rows: Vec<BTreeMap<usize, T>> = vec![BTreeMap::new(); g.num_vertices() * d];
        for x in 0..g.num_vertices() {
            let mx = g.mu(x);
            for &h in g.halves(x) {
                let y = g.head(h);
                let w = g.half_weight(h);
                let o = self.transport(h);
                let scale = w / (mx * g.mu(y)).sqrt();
                for i in 0..d {
                    *rows[x * d + i].entry(x * d + i).or_insert_with(T::zero) += w / mx;
                    for j in 0..d {
                        let c = o.get(i, j);
                        if c != T::zero() {
                            *rows[x * d + i].entry(y * d + j).or_insert_with(T::zero) -= scale * c;
                        }
                    }
                }
            }
        }
        SparseSym::from_rows(rows)
    }

    /// Dimension of the space of parallel sections, `f(x) = O_{xy} f(y)` on
    /// every edge: transport a frame along a spanning tree and intersect the
    /// kernels of the edge conditions.
    pub fn parallel_dimension(&self) -> Result<usize> {
        let g = &self.graph;
        let n = g.num_vertices();
        let d = self.dim;
        let mut frame: Vec<Option<Matrix<T>>> = vec![None; n];
        frame[0] = Some(Matrix::identity(d));
        let mut queue = VecDeque::from([0usize]);
        while let Some(x) = queue.pop_front() {
            for &h in g.halves(x) {
                let y = g.head(h);
                if frame[y].is_none() {
                    // f(y) = O_{yx} f(x) = O_{xy}ᵀ f(x).
                    let p = self.transport(h).transpose().mul(frame[x].as_ref().unwrap());
                    frame[y] = Some(p);
                    queue.push_back(y);
                }
            }
        }
        // Gram matrix of the stacked conditions (P_x − O_{xy} P_y).
        let mut gram = vec![T::zero(); d * d];
        for (e, edge) in g.edges().iter().enumerate() {
            let px = frame[edge.u].as_ref().unwrap();
            let py = frame[edge.v].as_ref().unwrap();
            let c = self.connection[e].mul(py);
            for a in 0..d {
                for b in 0..d {
                    let mut s = T::zero();
                    for r in 0..d {
                        s += (px.get(r, a) - c.get(r, a)) * (px.get(r, b) - c.get(r, b));
                    }
                    gram[a * d + b] += s;
                }
            }
        }
        let values = SymDense::from_rows(d, gram)?.eigenvalues()?;
        let tol = T::from_f64_lossy(1e-9) * T::from_count(g.num_edges().max(1));
        Ok(values.iter().filter(|&&x| x <= tol).count())
    }
}

/// Lowest eigenpairs of a connection Laplacian.
#[derive(Clone, Debug)]
pub struct ConnectionSpectrum<T> {
    pub values: Vec<T>,
    /// `μ`-normalized sections.
    pub vectors: Vec<Section<T>>,
    pub residuals: Vec<T>,
    pub method: Method,
}

impl<T: Real> ConnectionSpectrum<T> {
    pub fn lambda0(&self) -> T {
        self.values[0]
    }
}

pub fn connection_spectrum<T: Real>(bundle: &GraphBundle<T>, k: usize, tol: T) -> Result<ConnectionSpectrum<T>> {
    let a = bundle.symmetrized();
    let n = a.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} for dimension {n}")));
    }
    let (values, reduced, method) = if n <= DENSE_LIMIT {
        let eig = a.to_dense().eigen()?;
        (
            eig.values[..k].to_vec(),
            (0..k).map(|j| eig.vector(j)).collect::<Vec<_>>(),
            Method::Dense,
        )
    } else {
        let res = lowest(&a, k, tol, &LanczosOptions::default())?;
        (res.values, res.vectors, Method::Lanczos)
    };
    let g = bundle.graph();
    let d = bundle.dim();
    let mut vectors = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for (y, &lambda) in reduced.iter().zip(&values) {
        let mut ay = vec![T::zero(); n];
        a.apply(y, &mut ay);
        let r = ay
            .iter()
            .zip(y)
            .fold(T::zero(), |acc, (&p, &q)| acc + (p - lambda * q) * (p - lambda * q))
            .sqrt();
        let ny = y.iter().fold(T::zero(), |acc, &q| acc + q * q).sqrt();
        residuals.push(r / ny);
        let values = y
            .iter()
            .enumerate()
            .map(|(i, &q)| q / (ny * g.mu(i / d).sqrt()))
            .collect();
        vectors.push(Section { dim: d, values });
    }
    if method == Method::Lanczos {
        if let Some(&r) = residuals.iter().find(|&&r| r > tol) {
            return Err(Error::NotConverged {
                iterations: 0,
                residual: r.lossy_f64(),
            });
        }
    }
    Ok(ConnectionSpectrum {
        values,
        vectors,
        residuals,
        method,
    })
}

pub fn connection_lambda0<T: Real>(bundle: &GraphBundle<T>) -> Result<ConnectionSpectrum<T>> {
    connection_spectrum(bundle, 1, T::from_f64_lossy(1e-10))
}

/// `C_n` with every edge `(i, i+1)` rotating by `θ/n`, so that the holonomy
/// around the cycle is rotation by `θ`.
pub fn build_cycle_connection<T: Real>(n: usize, theta: T) -> Result<GraphBundle<T>> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "a cycle needs at least 3 vertices, got {n}"
        )));
    }
    let graph = Arc::new(cycle::<T>(n).build()?);
    let step = Matrix::rotation(theta / T::from_count(n));
    GraphBundle::new(graph, 2, vec![step; n])
}

/// Bundle on the total space: each lifted edge carries its base matrix.
/// Lifted edges keep the orientation of the base edge they cover.
pub fn pullback<T: Real>(cover: &CoveringGraph<T>, bundle: &GraphBundle<T>) -> Result<GraphBundle<T>> {
    if cover.base().num_edges() != bundle.graph().num_edges()
        || cover.base().num_vertices() != bundle.graph().num_vertices()
    {
        return Err(Error::InvalidArgument("bundle lives on another graph".into()));
    }
    let total = cover.total();
    let connection = (0..total.num_edges())
        .map(|e| bundle.edge_matrix(cover.edge_projection(e)).clone())
        .collect();
    Ok(GraphBundle {
        graph: total.clone(),
        dim: bundle.dim(),
        connection,
    })
}

/// `q`-fold cyclic cover `C_{qn} → C_n`, the closing edge carrying a
/// `q`-cycle.
pub fn cyclic_cover<T: Real>(n: usize, q: usize) -> Result<CoveringGraph<T>> {
    if q == 0 {
        return Err(Error::InvalidArgument("cover degree must be positive".into()));
    }
    let base = Arc::new(cycle::<T>(n).build()?);
    let (voltages, action) = if q == 1 {
        (Voltages::new(&base, 0, &[])?, FiberAction::new(vec![])?)
    } else {
        let cycle: Vec<String> = (1..=q).map(|i| i.to_string()).collect();
        let shift = Generator {
            name: "c".into(),
            action: Move::from_cycles(q, &format!("({})", cycle.join(" ")))?,
        };
        (Voltages::new(&base, 0, &[(n - 1, 0)])?, FiberAction::new(vec![shift])?)
    };
    lift_cover(base, voltages, Arc::new(action), 0)
}

/// `min_k 2 − 2cos((θ + 2πk)/n)`: bottom of the rotation connection on `C_n`
/// with total angle `θ`.
pub fn cycle_connection_formula(n: usize, theta: f64) -> f64 {
    (0..n)
        .map(|k| 2.0 - 2.0 * ((theta + 2.0 * std::f64::consts::PI * k as f64) / n as f64).cos())
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Debug, Serialize)]
pub struct HolonomyReport {
    pub n: usize,
    pub q: usize,
    pub theta: f64,
    pub base_lambda0: f64,
    pub cover_lambda0: f64,
    pub base_formula: f64,
    pub cover_formula: f64,
    /// `base − cover`.
    pub gap: f64,
    pub base_parallel: usize,
    pub cover_parallel: usize,
    /// Both bottoms at `θ = 2π`.
    pub control_base_lambda0: f64,
    pub control_cover_lambda0: f64,
}

/// Rotation connection with `θ = 2π/q` on `C_n` against its pullback to the
/// `q`-fold cyclic cover, plus the `θ = 2π` control.
pub fn holonomy_gap_experiment(n: usize, q: usize) -> Result<HolonomyReport> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let theta = two_pi / q.max(1) as f64;
    let cover = cyclic_cover::<f64>(n, q)?;
    let base = build_cycle_connection(n, theta)?;
    let lifted = pullback(&cover, &base)?;
    let control = build_cycle_connection(n, two_pi)?;
    let control_lifted = pullback(&cover, &control)?;
    let base_lambda0 = connection_lambda0(&base)?.lambda0();
    let cover_lambda0 = connection_lambda0(&lifted)?.lambda0();
    Ok(HolonomyReport {
        n,
        q,
        theta,
        base_lambda0,
        cover_lambda0,
        base_formula: cycle_connection_formula(n, theta),
        cover_formula: cycle_connection_formula(n * q, theta * q as f64),
        gap: base_lambda0 - cover_lambda0,
        base_parallel: base.parallel_dimension()?,
        cover_parallel: lifted.parallel_dimension()?,
        control_base_lambda0: connection_lambda0(&control)?.lambda0(),
        control_cover_lambda0: connection_lambda0(&control_lifted)?.lambda0(),
    })
}

/// Reads a graph file followed by `conn <u> <v> <d·d entries>` lines.
/// Edges without a `conn` line carry the identity; a line naming `(v, u)`
/// for the stored edge `(u, v)` is transposed.
pub fn parse_bundle<T: Real>(text: &str) -> Result<GraphBundle<T>> {
    let mut graph_text = String::new();
    let mut conns = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.starts_with("conn") {
            conns.push((no + 1, line.to_string()));
            graph_text.push('\n');
        } else {
            graph_text.push_str(raw);
            graph_text.push('\n');
        }
    }
    let op = parse_operator::<T>(&graph_text)?;
    let graph = op.graph_arc().clone();
    let mut dim = None;
    let mut assigned: Vec<Option<Matrix<T>>> = vec![None; graph.num_edges()];
    for (no, line) in conns {
        let mut toks = line.split_whitespace().skip(1);
        let u = parse_index(toks.next(), no, "connection endpoint")?;
        let v = parse_index(toks.next(), no, "connection endpoint")?;
        let entries = toks
            .map(|t| parse_scalar::<T>(Some(t), no, "matrix entry"))
            .collect::<Result<Vec<T>>>()?;
        let d = (1..=entries.len()).find(|d| d * d >= entries.len()).unwrap_or(0);
        if d == 0 || d * d != entries.len() {
            return Err(parse_err(no, format!("{} entries is not a square", entries.len())));
        }
        if *dim.get_or_insert(d) != d {
            return Err(parse_err(no, "fiber dimension changes"));
        }
        let m = Matrix::from_rows(d, entries)?;
        let slot = (0..graph.num_edges())
            .find(|&e| {
                let edge = graph.edge(e);
                assigned[e].is_none() && ((edge.u, edge.v) == (u, v) || (edge.u, edge.v) == (v, u))
            })
            .ok_or_else(|| parse_err(no, format!("no unassigned edge {u}--{v}")))?;
        let edge = graph.edge(slot);
        assigned[slot] = Some(if (edge.u, edge.v) == (u, v) { m } else { m.transpose() });
    }
    let d = dim.ok_or_else(|| parse_err(0, "no connection lines"))?;
    let connection = assigned
        .into_iter()
        .map(|m| m.unwrap_or_else(|| Matrix::identity(d)))
        .collect();
    GraphBundle::new(graph, d, connection)
}

/// Graph records with zero potential, then one `conn` line per edge.
pub fn write_bundle<T: Real>(bundle: &GraphBundle<T>) -> String {
    let op = SchrodingerOp::laplacian(bundle.graph().clone());
    let mut out = write_operator(&op);
    for (e, edge) in bundle.graph().edges().iter().enumerate() {
        let entries: Vec<String> = bundle.connection[e].entries.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(out, "conn {} {} {}", edge.u, edge.v, entries.join(" "));
    }
    out
}
