//! Weighted graphs with a vertex measure and a Dirichlet mask, standing in
//! for a Riemannian manifold with (possibly empty) boundary.

mod builders;
pub mod io;
mod operator;

use std::collections::{HashSet, VecDeque};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use builders::{bouquet, cycle, explicit, grid, path, regular_tree};
pub use operator::{induced_dirichlet, Convention, SchrodingerOp, VertexFunction};

/// Sentinel distance for vertices not reached by a search.
pub const UNREACHED: usize = usize::MAX;

#[derive(Clone, Debug, PartialEq)]
pub struct Edge<T> {
    pub u: usize,
    pub v: usize,
    pub w: T,
}

/// Adjacency is stored over half-edges: half-edge `2e` runs `u -> v` and
/// `2e + 1` runs `v -> u`. A self-loop contributes both halves to its vertex,
/// which is what the universal cover sees.
#[derive(Clone, Debug)]
pub struct WeightedGraph<T> {
    name: String,
    mu: Vec<T>,
    edges: Vec<Edge<T>>,
    offsets: Vec<usize>,
    halves: Vec<usize>,
    mask: Vec<bool>,
    voltage_base: bool,
}

impl<T: Scalar> WeightedGraph<T> {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_vertices(&self) -> usize {
        self.mu.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge<T> {
        &self.edges[e]
    }

    pub fn measure(&self) -> &[T] {
        &self.mu
    }

    pub fn mu(&self, v: usize) -> T {
        self.mu[v]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn is_masked(&self, v: usize) -> bool {
        self.mask[v]
    }

    pub fn has_mask(&self) -> bool {
        self.mask.iter().any(|&m| m)
    }

    /// True when loops and parallel edges were admitted at construction.
    pub fn is_voltage_base(&self) -> bool {
        self.voltage_base
    }

    /// Half-edges leaving `v`.
    pub fn halves(&self, v: usize) -> &[usize] {
        &self.halves[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn head(&self, h: usize) -> usize {
        let e = &self.edges[h / 2];
        if h % 2 == 0 {
            e.v
        } else {
            e.u
        }
    }

    pub fn tail(&self, h: usize) -> usize {
        let e = &self.edges[h / 2];
        if h % 2 == 0 {
            e.u
        } else {
            e.v
        }
    }

    pub fn half_weight(&self, h: usize) -> T {
        self.edges[h / 2].w
    }

    /// `(neighbor, weight)` over half-edges leaving `v`, loops included.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        self.halves(v).iter().map(move |&h| (self.head(h), self.half_weight(h)))
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn weighted_degree(&self, v: usize) -> T {
        self.neighbors(v).fold(T::zero(), |acc, (_, w)| acc + w)
    }

    pub fn total_measure(&self) -> T {
        self.mu.iter().fold(T::zero(), |acc, &m| acc + m)
    }

    /// Same graph with a different Dirichlet mask.
    pub fn with_mask(&self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.num_vertices() {
            return Err(Error::InvalidArgument(format!(
                "mask length {} for {} vertices",
                mask.len(),
                self.num_vertices()
            )));
        }
        Ok(Self { mask, ..self.clone() })
    }

    /// Same graph with a different vertex measure.
    pub fn with_measure(&self, mu: Vec<T>) -> Result<Self> {
        if mu.len() != self.num_vertices() {
            return Err(Error::InvalidArgument("measure length".into()));
        }
        check_positive("vertex measure", mu.iter().copied().enumerate())?;
        Ok(Self { mu, ..self.clone() })
    }

    /// Hop distance from `sources`, explored no further than `max`.
    pub fn hop_distances(&self, sources: &[usize], max: Option<usize>) -> Vec<usize> {
        let mut dist = vec![UNREACHED; self.num_vertices()];
        let mut queue = VecDeque::new();
        for &s in sources {
            if dist[s] == UNREACHED {
                dist[s] = 0;
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            if max.is_some_and(|m| dist[v] >= m) {
                continue;
            }
            for (u, _) in self.neighbors(v) {
                if dist[u] == UNREACHED {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        dist
    }

    /// Closed hop ball `{v : d(center, v) <= r}`, ascending.
    pub fn ball(&self, center: usize, r: usize) -> Vec<usize> {
        self.ball_around(&[center], r)
    }

    pub fn ball_around(&self, centers: &[usize], r: usize) -> Vec<usize> {
        let dist = self.hop_distances(centers, Some(r));
        (0..self.num_vertices()).filter(|&v| dist[v] <= r).collect()
    }

    /// Connected components of the subgraph induced on `keep`.
    pub fn components(&self, keep: &[bool]) -> Vec<Vec<usize>> {
        let n = self.num_vertices();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if !keep[start] || seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut i = 0;
            while i < comp.len() {
                let v = comp[i];
                i += 1;
                for (u, _) in self.neighbors(v) {
                    if keep[u] && !seen[u] {
                        seen[u] = true;
                        comp.push(u);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.num_vertices() > 0 && self.components(&vec![true; self.num_vertices()]).len() == 1
    }

    /// Largest hop distance between two vertices.
    pub fn diameter(&self) -> usize {
        (0..self.num_vertices())
            .map(|v| {
                self.hop_distances(&[v], None)
                    .into_iter()
                    .filter(|&d| d != UNREACHED)
                    .max()
                    .unwrap_or(0)
            })
            .max()
            .unwrap_or(0)
    }

    /// Converts every weight and measure into another scalar type.
    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(T) -> U) -> WeightedGraph<U> {
        WeightedGraph {
            name: self.name.clone(),
            mu: self.mu.iter().map(|&m| f(m)).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| Edge {
                    u: e.u,
                    v: e.v,
                    w: f(e.w),
                })
                .collect(),
            offsets: self.offsets.clone(),
            halves: self.halves.clone(),
            mask: self.mask.clone(),
            voltage_base: self.voltage_base,
        }
    }
}

/// How vertex measures are assigned by [`GraphBuilder`].
#[derive(Clone, Debug, PartialEq)]
pub enum Measure<T> {
    /// μ ≡ 1.
    Combinatorial,
    /// μ(v) = weighted degree of v.
    Normalized,
    Uniform(T),
    Custom(Vec<T>),
}

/// Structural description of a graph; validated by [`GraphBuilder::build`].
#[derive(Clone, Debug)]
pub struct GraphBuilder<T> {
    name: String,
    n: usize,
    edges: Vec<(usize, usize, T)>,
    measure: Measure<T>,
    mask: Vec<usize>,
    voltage_base: bool,
}

impl<T: Scalar> GraphBuilder<T> {
    pub fn new(name: impl Into<String>, n: usize) -> Self {
        Self {
            name: name.into(),
            n,
            edges: Vec::new(),
            measure: Measure::Combinatorial,
            mask: Vec::new(),
            voltage_base: false,
        }
    }

    pub fn edge(mut self, u: usize, v: usize, w: T) -> Self {
        self.edges.push((u, v, w));
        self
    }

    pub fn add_edge(&mut self, u: usize, v: usize, w: T) {
        self.edges.push((u, v, w));
    }

    /// Sets every edge weight to `w`.
    pub fn weights(mut self, w: T) -> Self {
        for e in &mut self.edges {
            e.2 = w;
        }
        self
    }

    pub fn measure(mut self, measure: Measure<T>) -> Self {
        self.measure = measure;
        self
    }

    pub fn mask(mut self, vertices: impl IntoIterator<Item = usize>) -> Self {
        self.mask.extend(vertices);
        self
    }

    /// Admit loops and parallel edges; only meaningful for bases of voltage
    /// constructions, where they lift to genuine edges.
    pub fn voltage_base(mut self) -> Self {
        self.voltage_base = true;
        self
    }

    pub fn name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn build(self) -> Result<WeightedGraph<T>> {
        let n = self.n;
        if n == 0 {
            return Err(Error::InvalidArgument("graph without vertices".into()));
        }
        let mut seen = HashSet::new();
        let mut edges = Vec::with_capacity(self.edges.len());
        for (i, &(u, v, w)) in self.edges.iter().enumerate() {
            if u >= n {
                return Err(Error::VertexOutOfRange(u));
            }
            if v >= n {
                return Err(Error::VertexOutOfRange(v));
            }
            if !(w > T::zero()) || !w.lossy_f64().is_finite() {
                return Err(Error::NonPositive {
                    what: "edge weight",
                    location: format!("edge {i} ({u}--{v})"),
                    value: w.to_string(),
                });
            }
            if !self.voltage_base {
                if u == v {
                    return Err(Error::InvalidArgument(format!(
                        "self-loop at {u} outside a voltage base"
                    )));
                }
                if !seen.insert((u.min(v), u.max(v))) {
                    return Err(Error::DuplicateEdge(u, v));
                }
            }
            edges.push(Edge { u, v, w });
        }

        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (e, edge) in edges.iter().enumerate() {
            buckets[edge.u].push(2 * e);
            buckets[edge.v].push(2 * e + 1);
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut halves = Vec::with_capacity(2 * edges.len());
        offsets.push(0);
        for b in buckets {
            halves.extend(b);
            offsets.push(halves.len());
        }

        let mut mask = vec![false; n];
        for v in self.mask {
            if v >= n {
                return Err(Error::VertexOutOfRange(v));
            }
            mask[v] = true;
        }

        let mut graph = WeightedGraph {
            name: self.name,
            mu: vec![T::one(); n],
            edges,
            offsets,
            halves,
            mask,
            voltage_base: self.voltage_base,
        };
        graph.mu = match self.measure {
            Measure::Combinatorial => vec![T::one(); n],
            Measure::Uniform(m) => vec![m; n],
            Measure::Normalized => (0..n).map(|v| graph.weighted_degree(v)).collect(),
            Measure::Custom(mu) => {
                if mu.len() != n {
                    return Err(Error::InvalidArgument(format!(
                        "measure has {} entries for {n} vertices",
                        mu.len()
                    )));
                }
                mu
            }
        };
        check_positive("vertex measure", graph.mu.iter().copied().enumerate())?;
        if !graph.is_connected() {
            return Err(Error::Disconnected(graph.name.clone()));
        }
        Ok(graph)
    }
}

fn check_positive<T: Scalar>(what: &'static str, values: impl Iterator<Item = (usize, T)>) -> Result<()> {
    for (i, x) in values {
        if !(x > T::zero()) || !x.lossy_f64().is_finite() {
            return Err(Error::NonPositive {
                what,
                location: format!("vertex {i}"),
                value: x.to_string(),
            });
        }
    }
    Ok(())
}
