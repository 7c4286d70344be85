use crate::error::{Error, Result};
use crate::graph::UNREACHED;
use crate::scalar::Scalar;

use super::CoveringGraph;

/// Discrete Voronoi cells of a fiber: `D_y` holds the non-frontier vertices
/// nearest to `y`, ties going to the fiber point of least index.
#[derive(Clone, Debug, PartialEq)]
pub struct FundamentalDomains {
    pub center: usize,
    pub fiber: Vec<usize>,
    /// Position in `fiber` of the owning point, per total vertex.
    pub owner: Vec<usize>,
    /// Hop distance to the owning point, per total vertex.
    pub distance: Vec<usize>,
    pub domains: Vec<Vec<usize>>,
}

impl FundamentalDomains {
    pub fn domain_of(&self, y: usize) -> Option<&[usize]> {
        self.fiber.binary_search(&y).ok().map(|i| self.domains[i].as_slice())
    }

    /// Largest distance from a vertex to its owner over `vertices`.
    pub fn max_radius(&self, vertices: impl IntoIterator<Item = usize>) -> usize {
        vertices
            .into_iter()
            .map(|t| self.distance[t])
            .filter(|&d| d != UNREACHED)
            .max()
            .unwrap_or(0)
    }
}

pub fn fundamental_domains<T: Scalar>(cover: &CoveringGraph<T>, x: usize) -> Result<FundamentalDomains> {
    let g = cover.total();
    let n = g.num_vertices();
    if x >= cover.base().num_vertices() {
        return Err(Error::VertexOutOfRange(x));
    }
    let fiber = cover.fiber(x);
    let mut owner = vec![UNREACHED; n];
    let mut distance = vec![UNREACHED; n];
    let mut layer = Vec::with_capacity(fiber.len());
    for (i, &y) in fiber.iter().enumerate() {
        owner[y] = i;
        distance[y] = 0;
        layer.push(y);
    }
    let mut d = 0;
    while !layer.is_empty() {
        let mut next = Vec::new();
        for &v in &layer {
            for (u, _) in g.neighbors(v) {
                if distance[u] == UNREACHED {
                    distance[u] = d + 1;
                    owner[u] = owner[v];
                    next.push(u);
                } else if distance[u] == d + 1 && owner[v] < owner[u] {
                    owner[u] = owner[v];
                }
            }
        }
        layer = next;
        d += 1;
    }
    let mut domains = vec![Vec::new(); fiber.len()];
    for t in 0..n {
        if !cover.is_frontier(t) && owner[t] != UNREACHED {
            domains[owner[t]].push(t);
        }
    }
    let fd = FundamentalDomains {
        center: x,
        fiber,
        owner,
        distance,
        domains,
    };
    if !cover.base().has_mask() {
        // Every vertex reaches the fiber along a lifted base path.
        let diam = cover.base().diameter();
        let trusted = (0..n).filter(|&t| match cover.truncation() {
            None => true,
            Some(r) => cover.depth(t) + diam <= r,
        });
        for t in trusted {
            if fd.distance[t] > diam {
                return Err(Error::Invariant(format!(
                    "vertex {t} lies {} hops from the fiber, base diameter is {diam}",
                    fd.distance[t]
                )));
            }
        }
    }
    Ok(fd)
}

/// `N(r)`: the largest number of fiber points over `x` within `r` hops of a
/// single non-frontier vertex.
pub fn fiber_ball_multiplicity<T: Scalar>(cover: &CoveringGraph<T>, x: usize, r: usize) -> Result<usize> {
    if cover.truncation().is_some_and(|t| r > t) {
        return Err(Error::Truncation(format!("radius {r} exceeds the truncation")));
    }
    let g = cover.total();
    let mut hits = vec![0usize; g.num_vertices()];
    for y in cover.fiber(x) {
        for z in g.ball(y, r) {
            hits[z] += 1;
        }
    }
    Ok((0..g.num_vertices())
        .filter(|&z| !cover.is_frontier(z))
        .map(|z| hits[z])
        .max()
        .unwrap_or(0))
}

/// `p⁻¹(K) ∩ D_y` for `K` inside the base ball `B(x, r)`, verified to lie in
/// the ball `B(y, r)` of the total space.
pub fn preimage_in_domain<T: Scalar>(
    cover: &CoveringGraph<T>,
    domains: &FundamentalDomains,
    k: &[usize],
    r: usize,
    y: usize,
) -> Result<Vec<usize>> {
    let base = cover.base();
    let x = domains.center;
    let dist = base.hop_distances(&[x], Some(r));
    if let Some(&v) = k.iter().find(|&&v| v >= base.num_vertices() || dist[v] > r) {
        return Err(Error::InvalidArgument(format!(
            "vertex {v} lies outside the ball of radius {r}"
        )));
    }
    let domain = domains
        .domain_of(y)
        .ok_or_else(|| Error::InvalidArgument(format!("{y} is not a fiber point over {x}")))?;
    let mut inside = vec![false; base.num_vertices()];
    for &v in k {
        inside[v] = true;
    }
    let out: Vec<usize> = domain.iter().copied().filter(|&t| inside[cover.project(t)]).collect();
    let near = cover.total().hop_distances(&[y], Some(r));
    if let Some(&t) = out.iter().find(|&&t| near[t] > r) {
        return Err(Error::Invariant(format!(
            "preimage vertex {t} escapes the ball of radius {r} around {y}"
        )));
    }
    Ok(out)
}
