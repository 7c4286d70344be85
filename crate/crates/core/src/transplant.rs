//! Cut-offs on the total space built from a partition of unity indexed by
//! the fiber over a base point, and transplantation of approximate
//! eigenfunctions from the base to the cover.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::amenability::{folner_defect, generator_set};
use crate::covering::CoveringGraph;
use crate::error::{Error, Result};
use crate::graph::{SchrodingerOp, VertexFunction, UNREACHED};
use crate::scalar::{Real, Scalar};

const NONE: usize = usize::MAX;

/// The functions `ψ_y`, `φ_y` (one per discovered fiber point over `x`) and
/// the remainder `φ₁`, stored sparsely on the total space.
#[derive(Clone, Debug)]
pub struct PartitionOfUnity<T> {
    pub center: usize,
    /// Discovered fiber over `center`, ascending in vertex index.
    pub fiber: Vec<usize>,
    pub radius: usize,
    pub taper: usize,
    pub psi: Vec<Vec<(usize, T)>>,
    pub phi: Vec<Vec<(usize, T)>>,
    pub phi1: Vec<T>,
    /// `ψ₁ + Σ ψ_y` per total vertex.
    pub denominator: Vec<T>,
    /// True when the base point's ball of radius `r` already carries the
    /// whole mass, so `ψ₁ ≡ 0`.
    pub compact_branch: bool,
    /// Vertices whose `(r+s)`-ball was discovered in full; the partition
    /// identities are exact there.
    pub complete: Vec<bool>,
    position: Vec<usize>,
}

impl<T: Scalar> PartitionOfUnity<T> {
    /// Index of `y` in [`Self::fiber`].
    pub fn position(&self, y: usize) -> Option<usize> {
        self.position.get(y).copied().filter(|&i| i != NONE)
    }

    /// `φ_y` as a dense function on the total space.
    pub fn phi_dense(&self, i: usize) -> Vec<T> {
        let mut out = vec![T::zero(); self.denominator.len()];
        for &(z, v) in &self.phi[i] {
            out[z] = v;
        }
        out
    }

    pub fn num_vertices(&self) -> usize {
        self.denominator.len()
    }
}

fn taper<T: Scalar>(r: usize, s: usize, d: usize) -> T {
    if d <= r {
        T::one()
    } else if d >= r + s {
        T::zero()
    } else {
        T::from_count(r + s - d) / T::from_count(s)
    }
}

/// `ψ_y(z) = Σ_w ψ_u(w)` over the preimages `w` of `z` in the universal
/// cover; those are the non-backtracking walks from `y` to `z`, and the
/// radial taper only sees their length.
fn pushed_down_cutoff<T: Scalar>(cover: &CoveringGraph<T>, y: usize, r: usize, s: usize) -> Result<Vec<(usize, T)>> {
    let g = cover.total();
    let mut acc: HashMap<usize, T> = HashMap::new();
    acc.insert(y, T::one());
    // Walk counts keyed by the last half-edge taken.
    let mut level: HashMap<usize, u64> = HashMap::new();
    for &h in g.halves(y) {
        *level.entry(h).or_insert(0) += 1;
    }
    for len in 1..r + s {
        let weight: T = taper(r, s, len);
        let mut next: HashMap<usize, u64> = HashMap::new();
        for (&h, &count) in &level {
            let z = g.head(h);
            *acc.entry(z).or_insert_with(T::zero) += weight * T::from_u64(count).expect("walk count");
            if len + 1 == r + s || cover.is_frontier(z) {
                continue;
            }
            for &k in g.halves(z) {
                if k == h ^ 1 {
                    continue;
                }
                let slot = next.entry(k).or_insert(0);
                *slot = slot
                    .checked_add(count)
                    .ok_or_else(|| Error::SizeGuard("non-backtracking walk count overflow".into()))?;
            }
        }
        level = next;
    }
    let mut out: Vec<(usize, T)> = acc.into_iter().filter(|(_, v)| !v.is_zero()).collect();
    out.sort_unstable_by_key(|&(z, _)| z);
    Ok(out)
}

/// Builds `φ_y = ψ_y / (ψ₁ + Σ ψ_{y'})` around the base vertex `x`, with
/// `ψ_u = clamp((r+s−d)/s, 0, 1)` on the universal cover.
pub fn build_partition<T: Scalar>(
    cover: &CoveringGraph<T>,
    x: usize,
    r: usize,
    s: usize,
) -> Result<PartitionOfUnity<T>> {
    if s < 1 {
        return Err(Error::InvalidArgument("taper width must be at least 1".into()));
    }
    if x >= cover.base().num_vertices() {
        return Err(Error::VertexOutOfRange(x));
    }
    if let Some(t) = cover.truncation() {
        if r + s + 1 > t {
            return Err(Error::Truncation(format!(
                "partition radius {r} with taper {s} needs truncation at least {}, got {t}",
                r + s + 1
            )));
        }
    }
    let n = cover.num_vertices();
    let fiber = cover.fiber(x);
    let mut position = vec![NONE; n];
    for (i, &y) in fiber.iter().enumerate() {
        position[y] = i;
    }
    let psi = fiber
        .par_iter()
        .map(|&y| pushed_down_cutoff(cover, y, r, s))
        .collect::<Result<Vec<_>>>()?;

    let complete: Vec<bool> = match cover.truncation() {
        None => vec![true; n],
        Some(t) => (0..n).map(|z| cover.depth(z) + r + s <= t).collect(),
    };
    let mut sum = vec![T::zero(); n];
    for f in &psi {
        for &(z, v) in f {
            sum[z] += v;
        }
    }
    let compact_branch = (0..n).filter(|&z| complete[z]).all(|z| sum[z] >= T::one());
    let phi1_numerator: Vec<T> = if compact_branch {
        vec![T::zero(); n]
    } else {
        let dist = cover.base().hop_distances(&[x], None);
        (0..n)
            .map(|z| {
                let d = dist[cover.project(z)];
                let f1 = if d == UNREACHED { T::zero() } else { taper::<T>(r, s, d) };
                T::one() - f1
            })
            .collect()
    };
    let denominator: Vec<T> = (0..n).map(|z| phi1_numerator[z] + sum[z]).collect();
    let divide = |num: T, z: usize| {
        if denominator[z].is_zero() {
            T::zero()
        } else {
            num / denominator[z]
        }
    };
    let phi = psi
        .iter()
        .map(|f| f.iter().map(|&(z, v)| (z, divide(v, z))).collect())
        .collect();
    let phi1 = (0..n).map(|z| divide(phi1_numerator[z], z)).collect();
    Ok(PartitionOfUnity {
        center: x,
        fiber,
        radius: r,
        taper: s,
        psi,
        phi,
        phi1,
        denominator,
        compact_branch,
        complete,
        position,
    })
}

/// A finite subset `P` of the fiber with `χ = Σ_{y∈P} φ_y` and the sets
/// `Q₊ = {y : χ = 1 on ball(y,r)}`, `Q = {y : χ ≠ 0 somewhere on ball(y,r)}`
/// and `Q₋ = Q ∖ Q₊`.
#[derive(Clone, Debug)]
pub struct TransplantPlan<T> {
    pub p: Vec<usize>,
    pub chi: Vec<T>,
    pub q_plus: Vec<usize>,
    pub q_minus: Vec<usize>,
    pub q: Vec<usize>,
    pub avoid: Vec<usize>,
}

impl<T: Scalar> TransplantPlan<T> {
    /// `#Q₋ / #Q₊`, infinite when `Q₊` is empty.
    pub fn ratio(&self) -> f64 {
        if self.q_plus.is_empty() {
            f64::INFINITY
        } else {
            self.q_minus.len() as f64 / self.q_plus.len() as f64
        }
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.chi.len()).filter(|&z| !self.chi[z].is_zero()).collect()
    }

    /// `max_z |(S₂ − λ)(χθ)(z)|`.
    pub fn uniform_bound(&self, op_total: &SchrodingerOp<T>, lambda: T, theta: &[T]) -> T {
        let chi_theta: Vec<T> = self.chi.iter().zip(theta).map(|(&c, &t)| c * t).collect();
        let s = op_total.apply_values(&chi_theta);
        op_total
            .free()
            .iter()
            .map(|&z| (s[z] - lambda * chi_theta[z]).magnitude())
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }
}

/// Sums `φ_y` over `P` and classifies the fiber into `Q₊`, `Q₋`.
pub fn assemble_chi<T: Scalar>(
    cover: &CoveringGraph<T>,
    pou: &PartitionOfUnity<T>,
    p: &[usize],
    avoid: Option<&[usize]>,
) -> Result<TransplantPlan<T>> {
    if p.is_empty() {
        return Err(Error::EmptyDomain("P is empty".into()));
    }
    let (r, s) = (pou.radius, pou.taper);
    let mut members = p.to_vec();
    members.sort_unstable();
    members.dedup();
    for &y in &members {
        if pou.position(y).is_none() {
            return Err(Error::InvalidArgument(format!(
                "vertex {y} is not in the fiber over {}",
                pou.center
            )));
        }
        if let Some(t) = cover.truncation() {
            if cover.depth(y) + 2 * (r + s) > t {
                return Err(Error::Truncation(format!(
                    "fiber point {y} at depth {} is within {} of the frontier; the budget is unverifiable",
                    cover.depth(y),
                    2 * (r + s)
                )));
            }
        }
    }
    let mut chi = vec![T::zero(); pou.num_vertices()];
    for &y in &members {
        for &(z, v) in &pou.phi[pou.position(y).unwrap()] {
            chi[z] += v;
        }
    }
    let avoid: Vec<usize> = avoid.map(|k| k.to_vec()).unwrap_or_default();
    if let Some(&z) = avoid.iter().find(|&&z| !chi[z].is_zero()) {
        return Err(Error::InvalidArgument(format!(
            "supp χ meets the avoided set at vertex {z}"
        )));
    }

    let g = cover.total();
    let near = g.ball_around(&members, 2 * r + s);
    let mut q_plus = Vec::new();
    let mut q_minus = Vec::new();
    for y in near.into_iter().filter(|&y| pou.position(y).is_some()) {
        let ball = g.ball(y, r);
        if ball.iter().all(|&z| chi[z] == T::one()) {
            q_plus.push(y);
        } else if ball.iter().any(|&z| !chi[z].is_zero()) {
            q_minus.push(y);
        }
    }
    q_plus.sort_unstable();
    q_minus.sort_unstable();
    let mut q: Vec<usize> = q_plus.iter().chain(&q_minus).copied().collect();
    q.sort_unstable();
    Ok(TransplantPlan {
        p: members,
        chi,
        q_plus,
        q_minus,
        q,
        avoid,
    })
}

/// Measured quantities of one transplant.
#[derive(Clone, Debug, Serialize)]
pub struct TransplantReport {
    pub rho1: f64,
    pub rho2: f64,
    pub c0: f64,
    pub q_plus: usize,
    pub q_minus: usize,
    pub ratio: f64,
    pub support_measure: f64,
    pub budget_rhs: f64,
    pub budget_holds: bool,
    pub chi_theta_norm_sq: f64,
    /// Smallest depth over `supp ζ`.
    pub escape_radius: usize,
}

/// Rayleigh quotients before and after transplanting.
#[derive(Clone, Debug, Serialize)]
pub struct RayleighReport {
    pub base: f64,
    pub total: f64,
    pub c_prime: f64,
    pub bound: f64,
    pub holds: bool,
}

struct Lifted<T> {
    op_total: SchrodingerOp<T>,
    theta: Vec<T>,
    chi_theta: Vec<T>,
    norm_sq: T,
    support_measure: T,
}

fn check_support<T: Real>(cover: &CoveringGraph<T>, pou: &PartitionOfUnity<T>, f: &VertexFunction<T>) -> Result<T> {
    let base = cover.base();
    if f.len() != base.num_vertices() {
        return Err(Error::InvalidArgument("f does not live on the base".into()));
    }
    let dist = base.hop_distances(&[pou.center], Some(pou.radius));
    let mut measure = T::zero();
    for &v in f.support() {
        if dist[v] == UNREACHED || dist[v] > pou.radius {
            return Err(Error::Support {
                center: pou.center,
                radius: pou.radius,
                vertex: v,
            });
        }
        measure += base.mu(v);
    }
    Ok(measure)
}

fn lift_and_cut<T: Real>(
    cover: &CoveringGraph<T>,
    op_base: &SchrodingerOp<T>,
    f: &VertexFunction<T>,
    pou: &PartitionOfUnity<T>,
    plan: &TransplantPlan<T>,
) -> Result<Lifted<T>> {
    let support_measure = check_support(cover, pou, f)?;
    let norm = op_base.norm_sq(f);
    if (norm - T::one()).abs() > T::from_f64_lossy(1e-9) {
        return Err(Error::InvalidArgument(format!(
            "f must have unit norm, got ‖f‖² = {norm}"
        )));
    }
    if plan.q_plus.is_empty() {
        return Err(Error::EmptyDomain("Q₊ is empty, the cut-off kills the lift".into()));
    }
    let op_total = cover.lift_operator(op_base)?;
    let theta = cover.lift_function(f).into_values();
    let chi_theta: Vec<T> = plan.chi.iter().zip(&theta).map(|(&c, &t)| c * t).collect();
    let mu = cover.total().measure();
    let norm_sq = (0..chi_theta.len())
        .filter(|&z| !cover.is_frontier(z))
        .fold(T::zero(), |acc, z| acc + chi_theta[z] * chi_theta[z] * mu[z]);
    if norm_sq.is_zero() {
        return Err(Error::ZeroFunction);
    }
    Ok(Lifted {
        op_total,
        theta,
        chi_theta,
        norm_sq,
        support_measure,
    })
}

fn residual_norm<T: Real>(op: &SchrodingerOp<T>, f: &[T], lambda: T) -> T {
    let s = op.apply_values(f);
    let mu = op.graph().measure();
    op.free()
        .iter()
        .fold(T::zero(), |acc, &v| {
            let d = s[v] - lambda * f[v];
            acc + d * d * mu[v]
        })
        .sqrt()
}

/// `ζ = χθ/‖χθ‖` for the lift `θ` of `f`, with the measured residuals and the
/// budget `ρ₂² ≤ ρ₁² + C₀² (#Q₋/#Q₊) μ(supp f)`.
pub fn transplant<T: Real>(
    cover: &CoveringGraph<T>,
    op_base: &SchrodingerOp<T>,
    f: &VertexFunction<T>,
    lambda: T,
    pou: &PartitionOfUnity<T>,
    plan: &TransplantPlan<T>,
) -> Result<(VertexFunction<T>, TransplantReport)> {
    let l = lift_and_cut(cover, op_base, f, pou, plan)?;
    let scale = T::one() / l.norm_sq.sqrt();
    let zeta: Vec<T> = l.chi_theta.iter().map(|&v| v * scale).collect();
    let rho1 = residual_norm(op_base, f.values(), lambda).lossy_f64();
    let rho2 = residual_norm(&l.op_total, &zeta, lambda).lossy_f64();
    let c0 = plan.uniform_bound(&l.op_total, lambda, &l.theta).lossy_f64();
    let ratio = plan.ratio();
    let mu = l.support_measure.lossy_f64();
    let budget_rhs = rho1 * rho1 + c0 * c0 * ratio * mu;
    let zeta = VertexFunction::new(zeta);
    let escape_radius = zeta.support().iter().map(|&z| cover.depth(z)).min().unwrap_or(0);
    let report = TransplantReport {
        rho1,
        rho2,
        c0,
        q_plus: plan.q_plus.len(),
        q_minus: plan.q_minus.len(),
        ratio,
        support_measure: mu,
        budget_rhs,
        budget_holds: rho2 * rho2 <= budget_rhs * (1.0 + 1e-12) + 1e-300,
        chi_theta_norm_sq: l.norm_sq.lossy_f64(),
        escape_radius,
    };
    Ok((zeta, report))
}

/// Rayleigh-quotient version: `R(ζ) ≤ R(f)⁺ + C′ #Q₋ μ(supp f)/‖χθ‖²` with
/// `C′ = max_z |S₂(χθ)(z)·(χθ)(z)|`.
pub fn transplant_rayleigh<T: Real>(
    cover: &CoveringGraph<T>,
    op_base: &SchrodingerOp<T>,
    f: &VertexFunction<T>,
    pou: &PartitionOfUnity<T>,
    plan: &TransplantPlan<T>,
) -> Result<(VertexFunction<T>, RayleighReport)> {
    let l = lift_and_cut(cover, op_base, f, pou, plan)?;
    let base = op_base.quadratic_form(f)?.lossy_f64();
    let s = l.op_total.apply_values(&l.chi_theta);
    let mu = cover.total().measure();
    let mut form = T::zero();
    let mut c_prime = T::zero();
    for &z in l.op_total.free() {
        let local = s[z] * l.chi_theta[z];
        form += local * mu[z];
        c_prime = c_prime.max(local.abs());
    }
    let norm_sq = l.norm_sq.lossy_f64();
    let total = form.lossy_f64() / norm_sq;
    let kept = plan.q_plus.len() as f64 / norm_sq;
    let bound = base.max(base * kept)
        + c_prime.lossy_f64() * plan.q_minus.len() as f64 * l.support_measure.lossy_f64() / norm_sq;
    let scale = T::one() / l.norm_sq.sqrt();
    let zeta = VertexFunction::new(l.chi_theta.iter().map(|&v| v * scale).collect());
    Ok((
        zeta,
        RayleighReport {
            base,
            total,
            c_prime: c_prime.lossy_f64(),
            bound,
            holds: total <= bound + 1e-12 * bound.abs().max(1.0),
        },
    ))
}

/// One member of a Weyl family.
#[derive(Clone, Debug)]
pub struct WeylMember<T> {
    pub k: usize,
    pub exclusion_radius: usize,
    pub p: Vec<usize>,
    /// Følner defect of the cosets of `P` against `G_{2r+2}`.
    pub folner_epsilon: f64,
    pub zeta: VertexFunction<T>,
    pub report: TransplantReport,
}

/// A Weyl family escaping the balls `ball(root, e_k)`.
#[derive(Clone, Debug)]
pub struct WeylFamily<T> {
    pub members: Vec<WeylMember<T>>,
    /// Set when some scale could not be built; the members before it are kept.
    pub partial: bool,
    pub notes: Vec<String>,
}

impl<T: Scalar> WeylFamily<T> {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,ratio,rho1,rho2,budget_rhs,escape_radius\n");
        for m in &self.members {
            let r = &m.report;
            out.push_str(&format!(
                "{},{:.12e},{:.12e},{:.12e},{:.12e},{}\n",
                m.k, r.ratio, r.rho1, r.rho2, r.budget_rhs, r.escape_radius
            ));
        }
        out
    }
}

/// For each exclusion radius `e_k` and size `n_k`, chooses `P_k` as the `n_k`
/// fiber points nearest to the first fiber point whose cut-off misses
/// `ball(root, e_k)`, measured outside that ball, and transplants `f` with it. Scales whose Følner defect
/// exceeds `max_epsilon` or that run into the truncation end the family.
#[allow(clippy::too_many_arguments)]
pub fn weyl_family<T: Real>(
    cover: &CoveringGraph<T>,
    op_base: &SchrodingerOp<T>,
    f: &VertexFunction<T>,
    lambda: T,
    pou: &PartitionOfUnity<T>,
    exclusion_radii: &[usize],
    sizes: &[usize],
    max_epsilon: f64,
) -> Result<WeylFamily<T>> {
    if cover.is_finite() {
        return Err(Error::FiniteCover);
    }
    if exclusion_radii.len() != sizes.len() {
        return Err(Error::InvalidArgument("one size per exclusion radius".into()));
    }
    let (r, s) = (pou.radius, pou.taper);
    let generators = generator_set(cover, (2 * r + 2) as f64, false)?;
    let root = cover.root();
    let depth_to_root: Vec<usize> = (0..cover.num_vertices()).map(|t| cover.depth(t)).collect();

    let build = |k: usize| -> Result<WeylMember<T>> {
        let e = exclusion_radii[k];
        let candidates: Vec<usize> = pou
            .fiber
            .iter()
            .copied()
            .filter(|&y| depth_to_root[y] > e + r + s)
            .collect();
        let seed = *candidates
            .iter()
            .min_by_key(|&&y| (depth_to_root[y], y))
            .ok_or_else(|| Error::Truncation(format!("no fiber point beyond radius {}", e + r + s)))?;
        // Distances from the seed within the region outside the escape ball.
        let g = cover.total();
        let mut from_seed = vec![UNREACHED; g.num_vertices()];
        from_seed[seed] = 0;
        let mut queue = std::collections::VecDeque::from([seed]);
        while let Some(z) = queue.pop_front() {
            for (w, _) in g.neighbors(z) {
                if from_seed[w] == UNREACHED && depth_to_root[w] > e + r + s {
                    from_seed[w] = from_seed[z] + 1;
                    queue.push_back(w);
                }
            }
        }
        let mut ordered: Vec<usize> = candidates.into_iter().filter(|&y| from_seed[y] != UNREACHED).collect();
        ordered.sort_by_key(|&y| (from_seed[y], y));
        if ordered.len() < sizes[k] {
            return Err(Error::Truncation(format!(
                "only {} fiber points available",
                ordered.len()
            )));
        }
        let p: Vec<usize> = ordered[..sizes[k]].to_vec();
        let cosets: Vec<_> = p.iter().map(|&y| cover.coset(y)).collect();
        let folner_epsilon = folner_defect(&generators, &cosets)? as f64 / p.len() as f64;
        let avoid = cover.total().ball(root, e);
        let plan = assemble_chi(cover, pou, &p, Some(&avoid))?;
        let (zeta, report) = transplant(cover, op_base, f, lambda, pou, &plan)?;
        Ok(WeylMember {
            k,
            exclusion_radius: e,
            p,
            folner_epsilon,
            zeta,
            report,
        })
    };
    let results: Vec<Result<WeylMember<T>>> = (0..sizes.len()).into_par_iter().map(build).collect();

    let mut family = WeylFamily {
        members: Vec::new(),
        partial: false,
        notes: Vec::new(),
    };
    for (k, res) in results.into_iter().enumerate() {
        match res {
            Ok(m) if m.folner_epsilon <= max_epsilon => family.members.push(m),
            Ok(m) => {
                family.partial = true;
                family.notes.push(format!(
                    "scale {k}: Følner defect {} above {max_epsilon}",
                    m.folner_epsilon
                ));
                break;
            }
            Err(Error::Truncation(msg)) => {
                family.partial = true;
                family.notes.push(format!("scale {k}: {msg}"));
                break;
            }
            Err(other) => return Err(other),
        }
    }
    Ok(family)
}
