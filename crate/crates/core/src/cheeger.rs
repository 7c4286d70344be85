//! Cheeger constants, ground states and the ground-state transform.
//!
//! For a weight `φ` (≡ 1 when absent) the Cheeger ratio of a set `K` of
//! free vertices is `Σ_{∂K} w φ(u)φ(v) / Σ_K φ²μ`, where `∂K` counts every
//! edge leaving `K`, including edges into the Dirichlet mask.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::covering::CoveringGraph;
use crate::error::{Error, Result};
use crate::graph::{GraphBuilder, Measure, SchrodingerOp, VertexFunction, WeightedGraph};
use crate::scalar::{Real, Scalar};
use crate::spectral::{lowest, lowest_eigenpairs, LanczosOptions, SparseSym, SymOperator, DENSE_LIMIT};

/// Largest number of free vertices the brute-force enumeration accepts.
pub const BRUTE_LIMIT: usize = 22;

/// Spectral gap above which the ground state is declared unique.
pub const GAP_THRESHOLD: f64 = 1e-10;

const NONE: usize = usize::MAX;

/// Class of admissible sets `K`; both require `K` nonempty and disjoint
/// from the mask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheegerConvention {
    /// Any `K`, except all free vertices of a graph without mask.
    Proper,
    /// `vol(K) ≤ vol(free)/2`.
    Balanced,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheegerMethod {
    Brute,
    Sweep,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheegerReport<T> {
    pub h: T,
    /// Sorted vertex ids of the minimizing set.
    pub witness: Vec<usize>,
    pub convention: CheegerConvention,
    pub method: CheegerMethod,
    pub weighted: bool,
    /// Number of admissible sets evaluated.
    pub candidates: u64,
}

impl<T: Scalar> CheegerReport<T> {
    /// Witness as one line of sorted vertex ids.
    pub fn witness_dump(&self) -> String {
        let ids: Vec<String> = self.witness.iter().map(usize::to_string).collect();
        ids.join(" ")
    }
}

fn weight_at<T: Scalar>(phi: Option<&[T]>, v: usize) -> T {
    phi.map_or(T::one(), |p| p[v])
}

fn check_weight<T: Scalar>(graph: &WeightedGraph<T>, phi: Option<&[T]>) -> Result<()> {
    let Some(p) = phi else { return Ok(()) };
    if p.len() != graph.num_vertices() {
        return Err(Error::InvalidArgument("weight function has the wrong length".into()));
    }
    for (v, &x) in p.iter().enumerate() {
        let bad = if graph.is_masked(v) {
            x < T::zero()
        } else {
            !(x > T::zero())
        };
        if bad {
            return Err(Error::NonPositive {
                what: "weight function",
                location: format!("vertex {v}"),
                value: x.to_string(),
            });
        }
    }
    Ok(())
}

/// Cheeger ratio of `set`.
pub fn cheeger_ratio<T: Scalar>(graph: &WeightedGraph<T>, phi: Option<&[T]>, set: &[usize]) -> Result<T> {
    check_weight(graph, phi)?;
    let n = graph.num_vertices();
    let mut inside = vec![false; n];
    for &v in set {
        if v >= n {
            return Err(Error::VertexOutOfRange(v));
        }
        if graph.is_masked(v) {
            return Err(Error::BoundaryViolation(v));
        }
        inside[v] = true;
    }
    let mut cut = T::zero();
    for e in graph.edges() {
        if inside[e.u] != inside[e.v] {
            cut += e.w * weight_at(phi, e.u) * weight_at(phi, e.v);
        }
    }
    let vol = set.iter().fold(T::zero(), |acc, &v| {
        let p = weight_at(phi, v);
        acc + p * p * graph.mu(v)
    });
    if vol.is_zero() {
        return Err(Error::EmptyDomain("empty set has no Cheeger ratio".into()));
    }
    Ok(cut / vol)
}

struct Admissible<T> {
    convention: CheegerConvention,
    closed: bool,
    free_count: usize,
    total: T,
}

impl<T: Scalar> Admissible<T> {
    fn accepts(&self, size: usize, vol: T) -> bool {
        size > 0
            && match self.convention {
                CheegerConvention::Proper => !(self.closed && size == self.free_count),
                CheegerConvention::Balanced => vol + vol <= self.total,
            }
    }
}

struct Weighted<T> {
    free: Vec<usize>,
    /// Per free slot: (neighbour slot or `NONE` for a masked neighbour, `wφφ`).
    adjacency: Vec<Vec<(usize, T)>>,
    vols: Vec<T>,
    rules: Admissible<T>,
}

fn weighted<T: Scalar>(
    graph: &WeightedGraph<T>,
    phi: Option<&[T]>,
    convention: CheegerConvention,
) -> Result<Weighted<T>> {
    check_weight(graph, phi)?;
    let free: Vec<usize> = (0..graph.num_vertices()).filter(|&v| !graph.is_masked(v)).collect();
    if free.is_empty() {
        return Err(Error::EmptyDomain("every vertex is masked".into()));
    }
    let mut slot = vec![NONE; graph.num_vertices()];
    for (i, &v) in free.iter().enumerate() {
        slot[v] = i;
    }
    let adjacency = free
        .iter()
        .map(|&v| {
            graph
                .neighbors(v)
                .filter(|&(u, _)| u != v)
                .map(|(u, w)| (slot[u], w * weight_at(phi, u) * weight_at(phi, v)))
                .collect()
        })
        .collect();
    let vols: Vec<T> = free
        .iter()
        .map(|&v| {
            let p = weight_at(phi, v);
            p * p * graph.mu(v)
        })
        .collect();
    let total = vols.iter().fold(T::zero(), |a, &b| a + b);
    let rules = Admissible {
        convention,
        closed: !graph.has_mask(),
        free_count: free.len(),
        total,
    };
    Ok(Weighted {
        free,
        adjacency,
        vols,
        rules,
    })
}

fn better<T: Scalar>(h: T, key: u32, best: Option<(T, u32)>) -> bool {
    best.is_none_or(|(b, k)| h < b || (h == b && key < k))
}

/// Exact minimum over every admissible set by Gray-code enumeration; large
/// instances split the subsets into prefix blocks run in parallel.
pub fn cheeger_exact<T: Scalar>(
    graph: &WeightedGraph<T>,
    phi: Option<&[T]>,
    convention: CheegerConvention,
) -> Result<CheegerReport<T>> {
    let wg = weighted(graph, phi, convention)?;
    let m = wg.free.len();
    if m > BRUTE_LIMIT {
        return Err(Error::SizeGuard(format!(
            "{m} free vertices exceed the brute-force limit {BRUTE_LIMIT}"
        )));
    }
    let high = if m > 12 { 6 } else { 0 };
    let low = m - high;
    let block = |prefix: u32| -> (Option<(T, u32)>, u64) {
        let mut set = 0u32;
        let (mut cut, mut vol, mut size) = (T::zero(), T::zero(), 0usize);
        let mut toggle = |set: &mut u32, i: usize| {
            let entering = *set & (1 << i) == 0;
            for &(j, w) in &wg.adjacency[i] {
                let other_in = j != NONE && *set & (1 << j) != 0;
                if entering == other_in {
                    cut -= w;
                } else {
                    cut += w;
                }
            }
            if entering {
                vol += wg.vols[i];
                size += 1;
            } else {
                vol -= wg.vols[i];
                size -= 1;
            }
            *set ^= 1 << i;
            (cut, vol, size)
        };
        let mut state = (T::zero(), T::zero(), 0usize);
        for i in low..m {
            if prefix & (1 << (i - low)) != 0 {
                state = toggle(&mut set, i);
            }
        }
        let mut best = None;
        let mut count = 0u64;
        let mut consider = |set: u32, (cut, vol, size): (T, T, usize)| {
            if wg.rules.accepts(size, vol) {
                count += 1;
                let h = cut / vol;
                if better(h, set, best) {
                    best = Some((h, set));
                }
            }
        };
        consider(set, state);
        for step in 1u32..1 << low {
            let i = step.trailing_zeros() as usize;
            let s = toggle(&mut set, i);
            consider(set, s);
        }
        (best, count)
    };
    let blocks: Vec<(Option<(T, u32)>, u64)> = if high == 0 {
        vec![block(0)]
    } else {
        (0u32..1 << high).into_par_iter().map(block).collect()
    };
    let candidates = blocks.iter().map(|b| b.1).sum();
    let best = blocks
        .into_iter()
        .filter_map(|b| b.0)
        .fold(None, |acc, (h, s)| if better(h, s, acc) { Some((h, s)) } else { acc })
        .ok_or_else(|| Error::EmptyDomain("no admissible set".into()))?;
    let witness: Vec<usize> = (0..m).filter(|&i| best.1 & (1 << i) != 0).map(|i| wg.free[i]).collect();
    Ok(CheegerReport {
        h: cheeger_ratio(graph, phi, &witness)?,
        witness,
        convention,
        method: CheegerMethod::Brute,
        weighted: phi.is_some(),
        candidates,
    })
}

/// Lowest `k` eigenvectors of a symmetric matrix, dense or Lanczos by size.
fn lowest_vectors<T: Real>(a: &SparseSym<T>, k: usize) -> Result<Vec<Vec<T>>> {
    if a.dim() <= DENSE_LIMIT {
        let eig = a.to_dense().eigen()?;
        Ok((0..k).map(|j| eig.vector(j)).collect())
    } else {
        Ok(lowest(a, k, T::from_f64_lossy(1e-8), &LanczosOptions::default())?.vectors)
    }
}

/// Upper bound from the level sets of the two lowest eigenvectors of the
/// weighted Dirichlet Laplacian on each free component, swept from both ends.
pub fn cheeger_sweep<T: Real>(
    graph: &WeightedGraph<T>,
    phi: Option<&[T]>,
    convention: CheegerConvention,
) -> Result<CheegerReport<T>> {
    let wg = weighted(graph, phi, convention)?;
    let m = wg.free.len();
    let mut slot_keep = vec![false; graph.num_vertices()];
    for &v in &wg.free {
        slot_keep[v] = true;
    }
    let mut slot = vec![NONE; graph.num_vertices()];
    for (i, &v) in wg.free.iter().enumerate() {
        slot[v] = i;
    }
    let components: Vec<Vec<usize>> = graph
        .components(&slot_keep)
        .into_iter()
        .map(|c| c.into_iter().map(|v| slot[v]).collect())
        .collect();

    let per_component = components
        .par_iter()
        .map(|comp| -> Result<(Option<(T, Vec<usize>)>, u64)> {
            let mut local = vec![NONE; m];
            for (j, &i) in comp.iter().enumerate() {
                local[i] = j;
            }
            let rows = comp
                .iter()
                .map(|&i| {
                    let mut row = BTreeMap::new();
                    let mut diag = T::zero();
                    for &(j, w) in &wg.adjacency[i] {
                        diag += w / wg.vols[i];
                        if j != NONE {
                            *row.entry(local[j]).or_insert_with(T::zero) -= w / (wg.vols[i] * wg.vols[j]).sqrt();
                        }
                    }
                    *row.entry(local[i]).or_insert_with(T::zero) += diag;
                    row
                })
                .collect();
            let a = SparseSym::from_rows(rows);
            let vectors = lowest_vectors(&a, comp.len().min(2))?;
            let mut best: Option<(T, Vec<usize>)> = None;
            let mut count = 0u64;
            let mut inside = vec![false; m];
            for y in &vectors {
                let f: Vec<T> = comp
                    .iter()
                    .enumerate()
                    .map(|(j, &i)| y[j] / wg.vols[i].sqrt())
                    .collect();
                let mut order: Vec<usize> = (0..comp.len()).collect();
                order.sort_by(|&a, &b| {
                    f[a].partial_cmp(&f[b])
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(a.cmp(&b))
                });
                let order: Vec<usize> = order.into_iter().map(|j| comp[j]).collect();
                for reversed in [false, true] {
                    let seq: Vec<usize> = if reversed {
                        order.iter().rev().copied().collect()
                    } else {
                        order.clone()
                    };
                    let (mut cut, mut vol) = (T::zero(), T::zero());
                    for (size, &i) in seq.iter().enumerate() {
                        for &(j, w) in &wg.adjacency[i] {
                            if j != NONE && inside[j] {
                                cut -= w;
                            } else {
                                cut += w;
                            }
                        }
                        inside[i] = true;
                        vol += wg.vols[i];
                        if wg.rules.accepts(size + 1, vol) {
                            count += 1;
                            let h = cut / vol;
                            if best.as_ref().is_none_or(|(b, _)| h < *b) {
                                best = Some((h, seq[..=size].to_vec()));
                            }
                        }
                    }
                    for &i in &seq {
                        inside[i] = false;
                    }
                }
            }
            Ok((best, count))
        })
        .collect::<Result<Vec<_>>>()?;
    let candidates = per_component.iter().map(|c| c.1).sum();
    let (_, set) = per_component
        .into_iter()
        .filter_map(|c| c.0)
        .fold(None, |acc: Option<(T, Vec<usize>)>, cur| match acc {
            Some(a) if a.0 <= cur.0 => Some(a),
            _ => Some(cur),
        })
        .ok_or_else(|| Error::EmptyDomain("no admissible level set".into()))?;
    let mut witness: Vec<usize> = set.into_iter().map(|i| wg.free[i]).collect();
    witness.sort_unstable();
    Ok(CheegerReport {
        h: cheeger_ratio(graph, phi, &witness)?,
        witness,
        convention,
        method: CheegerMethod::Sweep,
        weighted: phi.is_some(),
        candidates,
    })
}

/// Exact value when the free part is small enough, sweep bound otherwise.
pub fn cheeger_auto<T: Real>(
    graph: &WeightedGraph<T>,
    phi: Option<&[T]>,
    convention: CheegerConvention,
) -> Result<CheegerReport<T>> {
    let free = (0..graph.num_vertices()).filter(|&v| !graph.is_masked(v)).count();
    if free <= BRUTE_LIMIT {
        cheeger_exact(graph, phi, convention)
    } else {
        cheeger_sweep(graph, phi, convention)
    }
}

/// Perron eigenpair of an operator whose free part is connected.
#[derive(Clone, Debug)]
pub struct GroundState<T> {
    /// Positive on free vertices, zero on the mask, unit `μ`-norm.
    pub phi: VertexFunction<T>,
    pub lambda0: T,
    /// `min φ` over free vertices.
    pub margin: T,
    /// `λ₁ − λ₀`, infinite for a single free vertex.
    pub gap: T,
    pub unique: bool,
    pub residual: T,
}

pub fn ground_state<T: Real>(op: &SchrodingerOp<T>) -> Result<GroundState<T>> {
    let keep: Vec<bool> = op.mask().iter().map(|&m| !m).collect();
    let comps = op.graph().components(&keep);
    if comps.len() != 1 {
        return Err(Error::Disconnected(format!(
            "{} free components after masking",
            comps.len()
        )));
    }
    let k = op.dim().min(2);
    let rep = lowest_eigenpairs(op, k, T::from_f64_lossy(1e-11))?;
    let phi = rep.vectors[0].clone();
    let margin = op.free().iter().map(|&v| phi.get(v)).fold(T::infinity(), T::min);
    if !(margin > T::zero()) {
        return Err(Error::Invariant(format!("ground state not positive (min {margin})")));
    }
    let gap = if k == 2 {
        rep.values[1] - rep.values[0]
    } else {
        T::infinity()
    };
    Ok(GroundState {
        lambda0: rep.values[0],
        margin,
        gap,
        unique: gap > T::from_f64_lossy(GAP_THRESHOLD),
        residual: rep.residuals[0],
        phi,
    })
}

/// Ground-state transform of `S − λ` by a positive `λ`-harmonic weight `φ`:
/// a pure Laplacian with weights `wφ(u)φ(v)` and measure `μφ²`.
///
/// It keeps the free vertices and the masked vertices with `φ > 0` next to
/// them; the latter stay masked.
#[derive(Clone, Debug)]
pub struct RenormalizedOp<T> {
    pub graph: Arc<WeightedGraph<T>>,
    pub op: SchrodingerOp<T>,
    /// Original vertex of each renormalized vertex.
    pub vertices: Vec<usize>,
    pub lambda: T,
    /// The weight on the original vertex set.
    pub phi: Vec<T>,
}

impl<T: Scalar> RenormalizedOp<T> {
    /// `g ↦ g/φ` on the kept vertices.
    pub fn pull(&self, g: &VertexFunction<T>) -> VertexFunction<T> {
        VertexFunction::new(
            self.vertices
                .iter()
                .map(|&v| {
                    if self.phi[v].is_zero() {
                        T::zero()
                    } else {
                        g.get(v) / self.phi[v]
                    }
                })
                .collect(),
        )
    }

    /// `f ↦ φf` back on the original vertex set.
    pub fn push(&self, f: &VertexFunction<T>) -> VertexFunction<T> {
        let mut out = vec![T::zero(); self.phi.len()];
        for (i, &v) in self.vertices.iter().enumerate() {
            out[v] = self.phi[v] * f.get(i);
        }
        VertexFunction::new(out)
    }

    /// `Σ_e w̃(e)|f(u) − f(v)|²` for `f` on the renormalized vertices.
    pub fn dirichlet_energy(&self, f: &VertexFunction<T>) -> T {
        self.graph.edges().iter().fold(T::zero(), |acc, e| {
            let d = f.get(e.u) - f.get(e.v);
            acc + e.w * d * d
        })
    }
}

pub fn renormalize<T: Real>(op: &SchrodingerOp<T>, gs: &GroundState<T>) -> Result<RenormalizedOp<T>> {
    renormalize_with(op, gs.phi.values(), gs.lambda0)
}

pub fn renormalize_with<T: Scalar>(op: &SchrodingerOp<T>, phi: &[T], lambda: T) -> Result<RenormalizedOp<T>> {
    let g = op.graph();
    let n = g.num_vertices();
    if phi.len() != n {
        return Err(Error::InvalidArgument("weight function has the wrong length".into()));
    }
    for v in 0..n {
        let bad = if op.mask()[v] {
            phi[v] < T::zero()
        } else {
            !(phi[v] > T::zero())
        };
        if bad {
            return Err(Error::NonPositive {
                what: "ground state",
                location: format!("vertex {v}"),
                value: phi[v].to_string(),
            });
        }
    }
    let kept: Vec<bool> = (0..n)
        .map(|v| !op.mask()[v] || (phi[v] > T::zero() && g.neighbors(v).any(|(u, _)| !op.mask()[u])))
        .collect();
    let vertices: Vec<usize> = (0..n).filter(|&v| kept[v]).collect();
    let mut index = vec![NONE; n];
    for (i, &v) in vertices.iter().enumerate() {
        index[v] = i;
    }
    let mut b = GraphBuilder::new(format!("{}-renormalized", g.name()), vertices.len())
        .measure(Measure::Custom(
            vertices.iter().map(|&v| g.mu(v) * phi[v] * phi[v]).collect(),
        ))
        .mask(
            vertices
                .iter()
                .enumerate()
                .filter(|&(_, &v)| op.mask()[v])
                .map(|(i, _)| i),
        );
    if g.is_voltage_base() {
        b = b.voltage_base();
    }
    for e in g.edges() {
        let both_masked = op.mask()[e.u] && op.mask()[e.v];
        if e.u == e.v || both_masked || !kept[e.u] || !kept[e.v] {
            continue;
        }
        b.add_edge(index[e.u], index[e.v], e.w * phi[e.u] * phi[e.v]);
    }
    let graph = Arc::new(b.build()?);
    let op_new = SchrodingerOp::laplacian(graph.clone());
    Ok(RenormalizedOp {
        graph,
        op: op_new,
        vertices,
        lambda,
        phi: phi.to_vec(),
    })
}

/// The `λ`-harmonic weight with boundary value 1: `φ = 1` on the mask and
/// `(S − λ)φ = 0` on the free vertices. Requires `λ < λ₀` and every free
/// component to touch the mask.
pub fn harmonic_weight<T: Real>(op: &SchrodingerOp<T>, lambda: T) -> Result<Vec<T>> {
    let g = op.graph();
    let a = SparseSym::from_operator(op);
    let n = op.dim();
    if n == 0 {
        return Err(Error::EmptyDomain("every vertex is masked".into()));
    }
    // Symmetrized system (A − λ)y = M^{1/2} b with b(v) = μ(v)⁻¹ Σ_{u masked} w.
    let rhs: Vec<T> = op
        .free()
        .iter()
        .map(|&v| {
            let s = g
                .neighbors(v)
                .filter(|&(u, _)| op.mask()[u])
                .fold(T::zero(), |acc, (_, w)| acc + w);
            s / g.mu(v).sqrt()
        })
        .collect();
    let shifted = Shifted { a: &a, lambda };
    let y = conjugate_gradient(&shifted, &rhs)?;
    let mut phi = vec![T::one(); g.num_vertices()];
    for (i, &v) in op.free().iter().enumerate() {
        phi[v] = y[i] / g.mu(v).sqrt();
        if !(phi[v] > T::zero()) {
            return Err(Error::Invariant(format!(
                "harmonic weight not positive at vertex {v}; λ must lie below λ₀ and every component must touch the mask"
            )));
        }
    }
    Ok(phi)
}

struct Shifted<'a, T> {
    a: &'a SparseSym<T>,
    lambda: T,
}

impl<T: Real> SymOperator<T> for Shifted<'_, T> {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        self.a.apply(x, y);
        for (yi, &xi) in y.iter_mut().zip(x) {
            *yi -= self.lambda * xi;
        }
    }
}

fn conjugate_gradient<T: Real, A: SymOperator<T>>(a: &A, b: &[T]) -> Result<Vec<T>> {
    let n = b.len();
    let dot = |x: &[T], y: &[T]| x.iter().zip(y).fold(T::zero(), |acc, (&p, &q)| acc + p * q);
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![T::zero(); n];
    if bnorm.is_zero() {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![T::zero(); n];
    let mut rr = dot(&r, &r);
    let tol = T::from_f64_lossy(1e-14) * bnorm;
    let max_iter = 20 * n + 100;
    for _ in 0..max_iter {
        if rr.sqrt() <= tol {
            return Ok(x);
        }
        a.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > T::zero()) {
            return Err(Error::Breakdown(pap.lossy_f64()));
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    if rr.sqrt() <= T::from_f64_lossy(1e-10) * bnorm {
        Ok(x)
    } else {
        Err(Error::NotConverged {
            iterations: max_iter,
            residual: (rr.sqrt() / bnorm).lossy_f64(),
        })
    }
}

/// One side of a Cheeger lower-bound check: `lhs ≥ h²/(2D)`, where `D` is
/// the largest `deg/μ` over free vertices (1 under the normalized measure).
#[derive(Clone, Debug, Serialize)]
pub struct CheegerBound {
    pub lhs: f64,
    pub h: f64,
    pub degree_ratio: f64,
    pub rhs: f64,
    pub holds: bool,
    pub method: CheegerMethod,
    pub convention: CheegerConvention,
    /// Witness in the original vertex numbering.
    pub witness: Vec<usize>,
}

impl CheegerBound {
    fn new<T: Real>(lhs: T, report: &CheegerReport<T>, degree_ratio: T, relabel: Option<&[usize]>) -> Self {
        let h = report.h.lossy_f64();
        let d = degree_ratio.lossy_f64();
        let lhs = lhs.lossy_f64();
        let rhs = h * h / (2.0 * d);
        Self {
            lhs,
            h,
            degree_ratio: d,
            rhs,
            holds: lhs + 1e-9 * lhs.abs().max(1.0) >= rhs,
            method: report.method,
            convention: report.convention,
            witness: report.witness.iter().map(|&v| relabel.map_or(v, |r| r[v])).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LowerBoundReport {
    pub masked: bool,
    /// Masked: `λ₀ − min V ≥ h²/(2D)`. Closed: `λ₁(Δ) ≥ h_bal²/(2D)`.
    pub plain: CheegerBound,
    /// The same inequality for the renormalized operator: `λ₀ − λ` with the
    /// harmonic weight at `λ = λ₀/2` when masked, `λ₁ − λ₀` with the ground
    /// state when closed.
    pub renormalized: CheegerBound,
    pub lambda: f64,
    /// Bottom (masked) or second eigenvalue (closed) of the renormalized
    /// operator, which must equal `renormalized.lhs`.
    pub renormalized_measured: f64,
}

impl LowerBoundReport {
    pub fn holds(&self) -> bool {
        self.plain.holds && self.renormalized.holds
    }
}

/// Discrete Cheeger inequality with constant 1/2 for a normalized operator,
/// before and after renormalization.
pub fn cheeger_lower_bound_check<T: Real>(op: &SchrodingerOp<T>) -> Result<LowerBoundReport> {
    let g = op.graph();
    if (0..g.num_vertices()).any(|v| g.mu(v) != g.weighted_degree(v)) {
        return Err(Error::InvalidArgument(
            "convention mismatch: the Cheeger check needs the normalized measure".into(),
        ));
    }
    let masked = op.mask().iter().any(|&m| m);
    let graph = op.graph().with_mask(op.mask().to_vec())?;
    let tol = T::from_f64_lossy(1e-11);
    if masked {
        let lambda0 = lowest_eigenpairs(op, 1, tol)?.lambda0();
        let h = cheeger_auto(&graph, None, CheegerConvention::Proper)?;
        let plain = CheegerBound::new(lambda0 - op.min_potential(), &h, op.max_degree_ratio(), None);
        let lambda = lambda0 / T::from_f64_lossy(2.0);
        let phi = harmonic_weight(op, lambda)?;
        let ren = renormalize_with(op, &phi, lambda)?;
        let measured = lowest_eigenpairs(&ren.op, 1, tol)?.lambda0();
        let h = cheeger_auto(&ren.graph, None, CheegerConvention::Proper)?;
        let renormalized = CheegerBound::new(lambda0 - lambda, &h, ren.op.max_degree_ratio(), Some(&ren.vertices));
        Ok(LowerBoundReport {
            masked,
            plain,
            renormalized,
            lambda: lambda.lossy_f64(),
            renormalized_measured: measured.lossy_f64(),
        })
    } else {
        if op.dim() < 2 {
            return Err(Error::EmptyDomain("a closed graph needs two vertices".into()));
        }
        let lap = SchrodingerOp::laplacian(op.graph_arc().clone());
        let lambda1 = lowest_eigenpairs(&lap, 2, tol)?.values[1];
        let h = cheeger_auto(&graph, None, CheegerConvention::Balanced)?;
        let plain = CheegerBound::new(lambda1, &h, op.max_degree_ratio(), None);
        let gs = ground_state(op)?;
        let ren = renormalize(op, &gs)?;
        let measured = lowest_eigenpairs(&ren.op, 2, tol)?.values[1];
        let h = cheeger_auto(&ren.graph, None, CheegerConvention::Balanced)?;
        let renormalized = CheegerBound::new(gs.gap, &h, ren.op.max_degree_ratio(), Some(&ren.vertices));
        Ok(LowerBoundReport {
            masked,
            plain,
            renormalized,
            lambda: gs.lambda0.lossy_f64(),
            renormalized_measured: measured.lossy_f64(),
        })
    }
}

/// Cheeger constants of the annuli `ball(outer) ∖ ball(k)` of a cover.
#[derive(Clone, Debug, Serialize)]
pub struct CheegerTrace {
    pub removal_radii: Vec<usize>,
    pub outer_radius: usize,
    /// Sweep bound per removal radius.
    pub h: Vec<f64>,
    pub witness_sizes: Vec<usize>,
    /// Exact value where the annulus has at most [`BRUTE_LIMIT`] vertices.
    pub exact: Vec<Option<f64>>,
    /// `max_k h`, the estimate of the essential Cheeger constant.
    pub estimate: f64,
}

impl CheegerTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,h_estimate,witness_size\n");
        for ((k, h), s) in self.removal_radii.iter().zip(&self.h).zip(&self.witness_sizes) {
            out.push_str(&format!("{k},{h},{s}\n"));
        }
        out
    }

    pub fn last(&self) -> f64 {
        self.h.last().copied().unwrap_or(f64::NAN)
    }
}

/// Sweep Cheeger constant (proper convention) of each annulus around the
/// root, with the removed ball, everything beyond `outer` and the lifted
/// mask all Dirichlet.
pub fn cheeger_ess<T: Real>(
    cover: &CoveringGraph<T>,
    removal_radii: &[usize],
    outer: usize,
    phi: Option<&[T]>,
) -> Result<CheegerTrace> {
    if cover.is_finite() {
        return Err(Error::EmptyDomain(
            "a finite cover has no complement of large balls".into(),
        ));
    }
    if let Some(trunc) = cover.truncation() {
        if outer + 1 > trunc {
            return Err(Error::Truncation(format!(
                "outer radius {outer} needs truncation at least {}",
                outer + 1
            )));
        }
    }
    if let Some(&k) = removal_radii.iter().find(|&&k| k >= outer) {
        return Err(Error::InvalidArgument(format!(
            "removal radius {k} is not below the outer radius {outer}"
        )));
    }
    let total = cover.total();
    let rows = removal_radii
        .par_iter()
        .map(|&k| -> Result<(f64, usize, Option<f64>)> {
            let mask: Vec<bool> = (0..total.num_vertices())
                .map(|t| {
                    let d = cover.depth(t);
                    d <= k || d > outer || total.is_masked(t)
                })
                .collect();
            if mask.iter().all(|&m| m) {
                return Err(Error::EmptyDomain(format!("annulus {k}..{outer} is empty")));
            }
            let g = total.with_mask(mask)?;
            let sweep = cheeger_sweep(&g, phi, CheegerConvention::Proper)?;
            let free = (0..g.num_vertices()).filter(|&v| !g.is_masked(v)).count();
            let exact = if free <= BRUTE_LIMIT {
                Some(cheeger_exact(&g, phi, CheegerConvention::Proper)?.h.lossy_f64())
            } else {
                None
            };
            Ok((sweep.h.lossy_f64(), sweep.witness.len(), exact))
        })
        .collect::<Result<Vec<_>>>()?;
    let h: Vec<f64> = rows.iter().map(|r| r.0).collect();
    Ok(CheegerTrace {
        removal_radii: removal_radii.to_vec(),
        outer_radius: outer,
        estimate: h.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        witness_sizes: rows.iter().map(|r| r.1).collect(),
        exact: rows.iter().map(|r| r.2).collect(),
        h,
    })
}

/// Bottom of the base against the bottom of the frontier-Dirichlet lift.
#[derive(Clone, Debug, Serialize)]
pub struct BottomComparison {
    pub base_lambda0: f64,
    pub lifted_lambda0: f64,
    /// `lifted − base`, nonnegative up to solver tolerance.
    pub difference: f64,
    pub holds: bool,
    /// `max |(S₂ − λ₀)φ̃|` over free non-frontier vertices for the lifted
    /// base ground state `φ̃`.
    pub lifted_residual: f64,
}

pub fn bottom_comparison<T: Real>(cover: &CoveringGraph<T>, op_base: &SchrodingerOp<T>) -> Result<BottomComparison> {
    let gs = ground_state(op_base)?;
    let lifted = cover.lift_operator_dirichlet_frontier(op_base)?;
    let lifted_lambda0 = lowest_eigenpairs(&lifted, 1, T::from_f64_lossy(1e-10))?.lambda0();
    let full = cover.lift_operator(op_base)?;
    let phi = cover.lift_function(&gs.phi);
    let residual = (0..cover.num_vertices())
        .filter(|&t| !cover.is_frontier(t) && !full.mask()[t])
        .map(|t| {
            (full.apply_at(phi.values(), t) - gs.lambda0 * phi.get(t))
                .abs()
                .lossy_f64()
        })
        .fold(0.0, f64::max);
    let base = gs.lambda0.lossy_f64();
    let lifted_lambda0 = lifted_lambda0.lossy_f64();
    Ok(BottomComparison {
        base_lambda0: base,
        lifted_lambda0,
        difference: lifted_lambda0 - base,
        holds: lifted_lambda0 >= base - 1e-9,
        lifted_residual: residual,
    })
}
