//! Permutation-voltage coverings `p: G₂ → G₁`.
//!
//! Every base edge carries a generator (identity on spanning-tree edges);
//! the edge `u → v` with generator `g` lifts to `(u, x) ~ (v, x·g)`. Lazy
//! fibers are discovered breadth-first from the basepoint out to a hop radius.

mod action;
mod domains;
pub mod spec;

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::{GraphBuilder, Measure, SchrodingerOp, VertexFunction, WeightedGraph};
use crate::scalar::Scalar;

pub use action::{inverse_word, reduce_word, Coset, FiberAction, FreeWord, Generator, Move, Word};
pub use domains::{fiber_ball_multiplicity, fundamental_domains, preimage_in_domain, FundamentalDomains};

/// Generator per base edge; `None` is the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Voltages {
    pub root: usize,
    pub per_edge: Vec<Option<usize>>,
    pub tree: Vec<usize>,
}

impl Voltages {
    /// Voltages on the listed edges; the remaining edges must contain a
    /// spanning tree, which is chosen breadth-first from `root` with lowest
    /// edge ids first.
    pub fn new<T: Scalar>(base: &WeightedGraph<T>, root: usize, assigned: &[(usize, usize)]) -> Result<Self> {
        let mut per_edge = vec![None; base.num_edges()];
        for &(e, g) in assigned {
            if e >= base.num_edges() {
                return Err(Error::Voltage(format!("edge {e} out of range")));
            }
            if per_edge[e].is_some() {
                return Err(Error::Voltage(format!("edge {e} has two voltages")));
            }
            per_edge[e] = Some(g);
        }
        let n = base.num_vertices();
        if root >= n {
            return Err(Error::VertexOutOfRange(root));
        }
        let mut seen = vec![false; n];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        let mut tree = Vec::new();
        while let Some(v) = queue.pop_front() {
            let mut halves: Vec<usize> = base.halves(v).to_vec();
            halves.sort_unstable();
            for h in halves {
                let u = base.head(h);
                if per_edge[h / 2].is_none() && !seen[u] {
                    seen[u] = true;
                    tree.push(h / 2);
                    queue.push_back(u);
                }
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::Voltage("edges without voltage do not span the base".into()));
        }
        tree.sort_unstable();
        Ok(Self { root, per_edge, tree })
    }

    /// Voltages with an explicit spanning tree; tree edges must be identity.
    pub fn with_tree<T: Scalar>(
        base: &WeightedGraph<T>,
        root: usize,
        tree: Vec<usize>,
        assigned: &[(usize, usize)],
    ) -> Result<Self> {
        let mut v = Self::new_unchecked(base, root, assigned)?;
        let n = base.num_vertices();
        if tree.len() + 1 != n {
            return Err(Error::Voltage(format!(
                "spanning tree needs {} edges, got {}",
                n - 1,
                tree.len()
            )));
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                p[r] = p[p[r]];
                r = p[r];
            }
            r
        }
        for &e in &tree {
            if e >= base.num_edges() {
                return Err(Error::Voltage(format!("tree edge {e} out of range")));
            }
            if v.per_edge[e].is_some() {
                return Err(Error::Voltage(format!("tree edge {e} carries a voltage")));
            }
            let edge = base.edge(e);
            let (a, b) = (find(&mut parent, edge.u), find(&mut parent, edge.v));
            if a == b {
                return Err(Error::Voltage(format!("tree edge {e} closes a cycle")));
            }
            parent[a] = b;
        }
        let mut tree = tree;
        tree.sort_unstable();
        v.tree = tree;
        Ok(v)
    }

    fn new_unchecked<T: Scalar>(base: &WeightedGraph<T>, root: usize, assigned: &[(usize, usize)]) -> Result<Self> {
        let mut per_edge = vec![None; base.num_edges()];
        for &(e, g) in assigned {
            if e >= base.num_edges() {
                return Err(Error::Voltage(format!("edge {e} out of range")));
            }
            per_edge[e] = Some(g);
        }
        if root >= base.num_vertices() {
            return Err(Error::VertexOutOfRange(root));
        }
        Ok(Self {
            root,
            per_edge,
            tree: Vec::new(),
        })
    }

    /// Chords of the spanning tree.
    pub fn chords(&self) -> Vec<usize> {
        (0..self.per_edge.len())
            .filter(|e| self.tree.binary_search(e).is_err())
            .collect()
    }
}

/// Total space of a voltage lift together with its projection.
#[derive(Clone, Debug)]
pub struct CoveringGraph<T> {
    base: Arc<WeightedGraph<T>>,
    action: Arc<FiberAction>,
    voltages: Voltages,
    total: Arc<WeightedGraph<T>>,
    proj: Vec<usize>,
    coset: Vec<Coset>,
    depth: Vec<usize>,
    frontier: Vec<bool>,
    edge_proj: Vec<usize>,
    index: HashMap<(usize, Coset), usize>,
    r_trunc: Option<usize>,
}

/// Builds the component of `(root, basepoint)` in the voltage lift. Lazy
/// fibers stop at hop radius `r_trunc`; finite fibers ignore it.
pub fn lift_cover<T: Scalar>(
    base: Arc<WeightedGraph<T>>,
    voltages: Voltages,
    action: Arc<FiberAction>,
    r_trunc: usize,
) -> Result<CoveringGraph<T>> {
    if voltages.per_edge.len() != base.num_edges() {
        return Err(Error::Voltage("voltage list does not match base edges".into()));
    }
    for (e, g) in voltages.per_edge.iter().enumerate() {
        if let Some(g) = g {
            if *g >= action.num_generators() {
                return Err(Error::Voltage(format!("edge {e}: unknown generator {g}")));
            }
        }
    }
    let limit = if action.is_finite() { None } else { Some(r_trunc) };
    let step = |x: Coset, e: usize, backward: bool| -> Result<Coset> {
        match voltages.per_edge[e] {
            None => Ok(x),
            Some(g) => action.apply(g, x, backward),
        }
    };

    let mut index: HashMap<(usize, Coset), usize> = HashMap::new();
    let mut proj = Vec::new();
    let mut coset = Vec::new();
    let mut depth = Vec::new();
    let start = (voltages.root, action.basepoint());
    index.insert(start, 0);
    proj.push(start.0);
    coset.push(start.1);
    depth.push(0);
    let mut head = 0;
    while head < proj.len() {
        let (v, x, d) = (proj[head], coset[head], depth[head]);
        head += 1;
        if limit.is_some_and(|r| d >= r) {
            continue;
        }
        for &h in base.halves(v) {
            let y = step(x, h / 2, h % 2 == 1)?;
            let key = (base.head(h), y);
            if !index.contains_key(&key) {
                index.insert(key, proj.len());
                proj.push(key.0);
                coset.push(y);
                depth.push(d + 1);
            }
        }
    }

    let n = proj.len();
    let mut builder = GraphBuilder::new(format!("cover-of-{}", base.name()), n)
        .measure(Measure::Custom(proj.iter().map(|&v| base.mu(v)).collect()))
        .mask((0..n).filter(|&t| base.is_masked(proj[t])))
        .voltage_base();
    let mut edge_proj = Vec::new();
    let mut halves_found = vec![0usize; n];
    for t in 0..n {
        let (v, x) = (proj[t], coset[t]);
        for &h in base.halves(v) {
            if h % 2 == 1 {
                continue;
            }
            let e = h / 2;
            let y = step(x, e, false)?;
            if let Some(&s) = index.get(&(base.head(h), y)) {
                // Bijectivity: stepping back must return to x.
                if step(y, e, true)? != x {
                    return Err(Error::Voltage(format!(
                        "generator on edge {e} is not invertible at {x}"
                    )));
                }
                builder.add_edge(t, s, base.edge(e).w);
                edge_proj.push(e);
                halves_found[t] += 1;
                halves_found[s] += 1;
            }
        }
    }
    let frontier: Vec<bool> = (0..n).map(|t| halves_found[t] < base.degree(proj[t])).collect();
    if frontier.iter().all(|&f| f) {
        return Err(Error::Truncation(format!(
            "radius {r_trunc} leaves no vertex with a complete neighbourhood"
        )));
    }
    let total = Arc::new(builder.build()?);
    Ok(CoveringGraph {
        base,
        action,
        voltages,
        total,
        proj,
        coset,
        depth,
        frontier,
        edge_proj,
        index,
        r_trunc: limit,
    })
}

impl<T: Scalar> CoveringGraph<T> {
    pub fn base(&self) -> &Arc<WeightedGraph<T>> {
        &self.base
    }

    pub fn total(&self) -> &Arc<WeightedGraph<T>> {
        &self.total
    }

    pub fn action(&self) -> &Arc<FiberAction> {
        &self.action
    }

    pub fn voltages(&self) -> &Voltages {
        &self.voltages
    }

    pub fn num_vertices(&self) -> usize {
        self.proj.len()
    }

    pub fn project(&self, t: usize) -> usize {
        self.proj[t]
    }

    pub fn projection(&self) -> &[usize] {
        &self.proj
    }

    pub fn coset(&self, t: usize) -> Coset {
        self.coset[t]
    }

    /// Base edge under total edge `e` (same orientation).
    pub fn edge_projection(&self, e: usize) -> usize {
        self.edge_proj[e]
    }

    /// Hop distance from the root `(x₀, basepoint)`, which is vertex 0.
    pub fn depth(&self, t: usize) -> usize {
        self.depth[t]
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn base_root(&self) -> usize {
        self.voltages.root
    }

    pub fn is_frontier(&self, t: usize) -> bool {
        self.frontier[t]
    }

    pub fn frontier(&self) -> &[bool] {
        &self.frontier
    }

    pub fn interior(&self) -> Vec<usize> {
        (0..self.num_vertices()).filter(|&t| !self.frontier[t]).collect()
    }

    /// Truncation radius, `None` when the whole (finite) component was built.
    pub fn truncation(&self) -> Option<usize> {
        self.r_trunc
    }

    /// True when the cover is complete and finite.
    pub fn is_finite(&self) -> bool {
        self.frontier.iter().all(|&f| !f)
    }

    pub fn vertex(&self, v: usize, x: Coset) -> Option<usize> {
        self.index.get(&(v, x)).copied()
    }

    /// Discovered fiber over `v`, ascending in vertex index.
    pub fn fiber(&self, v: usize) -> Vec<usize> {
        (0..self.num_vertices()).filter(|&t| self.proj[t] == v).collect()
    }

    pub fn lift_function(&self, f: &VertexFunction<T>) -> VertexFunction<T> {
        VertexFunction::new(self.proj.iter().map(|&v| f.get(v)).collect())
    }

    /// `S₂ = Δ + V∘p`, Dirichlet over the lifted mask.
    pub fn lift_operator(&self, op: &SchrodingerOp<T>) -> Result<SchrodingerOp<T>> {
        if !Arc::ptr_eq(op.graph_arc(), &self.base) && op.num_vertices() != self.base.num_vertices() {
            return Err(Error::InvalidArgument("operator lives on another graph".into()));
        }
        let potential = self.proj.iter().map(|&v| op.potential()[v]).collect();
        let mask = self.proj.iter().map(|&v| op.mask()[v]).collect();
        SchrodingerOp::with_mask(self.total.clone(), potential, mask)
    }

    /// Lifted operator with every frontier vertex added to the mask.
    pub fn lift_operator_dirichlet_frontier(&self, op: &SchrodingerOp<T>) -> Result<SchrodingerOp<T>> {
        let lifted = self.lift_operator(op)?;
        let mask = (0..self.num_vertices())
            .map(|t| lifted.mask()[t] || self.frontier[t])
            .collect();
        SchrodingerOp::with_mask(self.total.clone(), lifted.potential().to_vec(), mask)
    }
}
