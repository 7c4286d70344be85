use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::WeightedGraph;

const NONE: usize = usize::MAX;

/// A real function on the vertices with its nonzero set cached.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexFunction<T> {
    values: Vec<T>,
    support: Vec<usize>,
}

impl<T: Scalar> VertexFunction<T> {
    pub fn new(values: Vec<T>) -> Self {
        let support = (0..values.len()).filter(|&i| !values[i].is_zero()).collect();
        Self { values, support }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![T::zero(); n])
    }

    pub fn constant(n: usize, c: T) -> Self {
        Self::new(vec![c; n])
    }

    pub fn indicator(n: usize, set: &[usize]) -> Self {
        let mut values = vec![T::zero(); n];
        for &v in set {
            values[v] = T::one();
        }
        Self::new(values)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn get(&self, v: usize) -> T {
        self.values[v]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn is_zero(&self) -> bool {
        self.support.is_empty()
    }

    pub fn scaled(&self, c: T) -> Self {
        Self::new(self.values.iter().map(|&x| x * c).collect())
    }

    pub fn pointwise(&self, other: &Self) -> Self {
        Self::new(self.values.iter().zip(&other.values).map(|(&a, &b)| a * b).collect())
    }

    /// `Σ μ f g`.
    pub fn inner(&self, other: &Self, mu: &[T]) -> T {
        self.support
            .iter()
            .fold(T::zero(), |acc, &v| acc + self.values[v] * other.values[v] * mu[v])
    }

    pub fn norm_sq(&self, mu: &[T]) -> T {
        self.inner(self, mu)
    }
}

/// Measure convention detected on an operator's graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    Combinatorial,
    Normalized,
    Custom,
}

/// `(Sf)(v) = μ(v)⁻¹ Σ_{u~v} w(uv)(f(v) − f(u)) + V(v) f(v)`, realized on
/// the vertices outside the Dirichlet mask. Masked vertices are absent from
/// the state space but their edges still load the diagonal.
#[derive(Clone, Debug)]
pub struct SchrodingerOp<T> {
    graph: Arc<WeightedGraph<T>>,
    potential: Vec<T>,
    mask: Vec<bool>,
    free: Vec<usize>,
    slot: Vec<usize>,
}

impl<T: Scalar> SchrodingerOp<T> {
    /// Operator with the graph's own mask.
    pub fn new(graph: Arc<WeightedGraph<T>>, potential: Vec<T>) -> Result<Self> {
        let mask = graph.mask().to_vec();
        Self::with_mask(graph, potential, mask)
    }

    pub fn laplacian(graph: Arc<WeightedGraph<T>>) -> Self {
        let n = graph.num_vertices();
        Self::new(graph, vec![T::zero(); n]).expect("zero potential is valid")
    }

    pub fn with_mask(graph: Arc<WeightedGraph<T>>, potential: Vec<T>, mask: Vec<bool>) -> Result<Self> {
        let n = graph.num_vertices();
        if potential.len() != n || mask.len() != n {
            return Err(Error::InvalidArgument(format!(
                "potential/mask length does not match {n} vertices"
            )));
        }
        if potential.iter().any(|v| !v.lossy_f64().is_finite()) {
            return Err(Error::InvalidArgument("non-finite potential".into()));
        }
        let mut slot = vec![NONE; n];
        let mut free = Vec::new();
        for v in 0..n {
            if !mask[v] {
                slot[v] = free.len();
                free.push(v);
            }
        }
        Ok(Self {
            graph,
            potential,
            mask,
            free,
            slot,
        })
    }

    pub fn graph(&self) -> &WeightedGraph<T> {
        &self.graph
    }

    pub fn graph_arc(&self) -> &Arc<WeightedGraph<T>> {
        &self.graph
    }

    pub fn potential(&self) -> &[T] {
        &self.potential
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn num_vertices(&self) -> usize {
        self.graph.num_vertices()
    }

    /// Vertices outside the mask, ascending; these index reduced vectors.
    pub fn free(&self) -> &[usize] {
        &self.free
    }

    pub fn dim(&self) -> usize {
        self.free.len()
    }

    /// Position of `v` among the free vertices.
    pub fn slot(&self, v: usize) -> Option<usize> {
        (self.slot[v] != NONE).then_some(self.slot[v])
    }

    pub fn min_potential(&self) -> T {
        self.free
            .iter()
            .map(|&v| self.potential[v])
            .fold(None, |acc: Option<T>, x| match acc {
                Some(a) if a <= x => Some(a),
                _ => Some(x),
            })
            .unwrap_or_else(T::zero)
    }

    pub fn convention(&self) -> Convention {
        let g = &self.graph;
        let n = g.num_vertices();
        if (0..n).all(|v| g.mu(v) == T::one()) {
            Convention::Combinatorial
        } else if (0..n).all(|v| g.mu(v) == g.weighted_degree(v)) {
            Convention::Normalized
        } else {
            Convention::Custom
        }
    }

    /// Same graph and potential, Dirichlet outside `keep` (in addition to
    /// the current mask).
    pub fn induced_dirichlet(&self, keep: &[usize]) -> Result<Self> {
        let n = self.num_vertices();
        let mut mask = vec![true; n];
        for &v in keep {
            if v >= n {
                return Err(Error::VertexOutOfRange(v));
            }
            mask[v] = self.mask[v];
        }
        if mask.iter().all(|&m| m) {
            return Err(Error::EmptyDomain("no free vertex in kept set".into()));
        }
        Self::with_mask(self.graph.clone(), self.potential.clone(), mask)
    }

    /// Same graph and mask, different potential.
    pub fn with_potential(&self, potential: Vec<T>) -> Result<Self> {
        Self::with_mask(self.graph.clone(), potential, self.mask.clone())
    }

    fn check_domain(&self, f: &VertexFunction<T>) -> Result<()> {
        if f.len() != self.num_vertices() {
            return Err(Error::InvalidArgument(format!(
                "function has {} values for {} vertices",
                f.len(),
                self.num_vertices()
            )));
        }
        match f.support().iter().find(|&&v| self.mask[v]) {
            Some(&v) => Err(Error::BoundaryViolation(v)),
            None => Ok(()),
        }
    }

    fn row(&self, v: usize, f: &[T]) -> T {
        let g = &self.graph;
        let fv = f[v];
        let mut acc = T::zero();
        for (u, w) in g.neighbors(v) {
            acc += w * (fv - f[u]);
        }
        acc / g.mu(v) + self.potential[v] * fv
    }

    pub fn apply(&self, f: &VertexFunction<T>) -> Result<VertexFunction<T>> {
        self.check_domain(f)?;
        let values = f.values();
        let mut out = vec![T::zero(); self.num_vertices()];
        for &v in &self.free {
            out[v] = self.row(v, values);
        }
        Ok(VertexFunction::new(out))
    }

    /// Applies the operator to a full-length vector without the mask check;
    /// masked entries of the result are zero.
    pub fn apply_values(&self, f: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.num_vertices()];
        for &v in &self.free {
            out[v] = self.row(v, f);
        }
        out
    }

    /// Value of `Sf` at a single vertex, ignoring the mask on `f`.
    pub fn apply_at(&self, f: &[T], v: usize) -> T {
        self.row(v, f)
    }

    /// Action on reduced coordinates (entries indexed by [`Self::free`]).
    pub fn apply_reduced(&self, x: &[T], y: &mut [T]) {
        let g = &self.graph;
        for (i, &v) in self.free.iter().enumerate() {
            let xv = x[i];
            let mut acc = T::zero();
            for (u, w) in g.neighbors(v) {
                let xu = match self.slot[u] {
                    NONE => T::zero(),
                    j => x[j],
                };
                acc += w * (xv - xu);
            }
            y[i] = acc / g.mu(v) + self.potential[v] * xv;
        }
    }

    pub fn expand(&self, reduced: &[T]) -> VertexFunction<T> {
        let mut values = vec![T::zero(); self.num_vertices()];
        for (i, &v) in self.free.iter().enumerate() {
            values[v] = reduced[i];
        }
        VertexFunction::new(values)
    }

    pub fn restrict(&self, f: &VertexFunction<T>) -> Vec<T> {
        self.free.iter().map(|&v| f.get(v)).collect()
    }

    /// `⟨Sf, f⟩_μ`.
    pub fn quadratic_form(&self, f: &VertexFunction<T>) -> Result<T> {
        let sf = self.apply(f)?;
        Ok(sf.inner(f, self.graph.measure()))
    }

    /// `Σ_e w(e)|f(u) − f(v)|² + Σ_v V(v)|f(v)|²μ(v)`, evaluated edge by edge.
    pub fn energy(&self, f: &VertexFunction<T>) -> Result<T> {
        self.check_domain(f)?;
        let g = &self.graph;
        let x = f.values();
        let mut acc = T::zero();
        for e in g.edges() {
            let d = x[e.u] - x[e.v];
            acc += e.w * d * d;
        }
        for &v in f.support() {
            acc += self.potential[v] * x[v] * x[v] * g.mu(v);
        }
        Ok(acc)
    }

    pub fn inner(&self, f: &VertexFunction<T>, g: &VertexFunction<T>) -> T {
        f.inner(g, self.graph.measure())
    }

    pub fn norm_sq(&self, f: &VertexFunction<T>) -> T {
        f.norm_sq(self.graph.measure())
    }

    /// Largest `deg_w(v)/μ(v)` over free vertices.
    pub fn max_degree_ratio(&self) -> T {
        self.free
            .iter()
            .map(|&v| self.graph.weighted_degree(v) / self.graph.mu(v))
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }
}

/// Dirichlet operator (`V ≡ 0`) on `keep`; everything else is boundary.
pub fn induced_dirichlet<T: Scalar>(graph: &Arc<WeightedGraph<T>>, keep: &[usize]) -> Result<SchrodingerOp<T>> {
    if keep.is_empty() {
        return Err(Error::EmptyDomain("empty kept set".into()));
    }
    SchrodingerOp::laplacian(graph.clone()).induced_dirichlet(keep)
}
