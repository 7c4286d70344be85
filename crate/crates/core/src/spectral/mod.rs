//! Eigensolvers and the exhaustion estimators for `λ₀` and `λ₀^ess`.

mod dense;
mod inertia;
mod lanczos;
mod radial;
mod sparse;

use rayon::prelude::*;
use serde::Serialize;

use crate::covering::CoveringGraph;
use crate::error::{Error, Result};
use crate::graph::{SchrodingerOp, VertexFunction, UNREACHED};
use crate::scalar::Real;

pub use dense::{tridiagonal_eigenvalues, Eigen, SymDense};
pub use inertia::{count_below, rcm_order};
pub use lanczos::{lowest, LanczosOptions, LanczosResult};
pub use radial::RadialProfile;
pub use sparse::{SparseSym, SymOperator};

/// Dimension up to which the dense solver is used.
pub const DENSE_LIMIT: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dense,
    Lanczos,
}

/// Lowest eigenpairs with `μ`-normalized eigenvectors on the full vertex set.
#[derive(Clone, Debug)]
pub struct SpectralReport<T> {
    pub values: Vec<T>,
    pub vectors: Vec<VertexFunction<T>>,
    /// `‖(S − λ)f‖_μ / ‖f‖_μ` per pair.
    pub residuals: Vec<T>,
    pub iterations: usize,
    pub tol: T,
    pub method: Method,
}

impl<T: Real> SpectralReport<T> {
    pub fn lambda0(&self) -> T {
        self.values[0]
    }
}

pub fn lowest_eigenpairs<T: Real>(op: &SchrodingerOp<T>, k: usize, tol: T) -> Result<SpectralReport<T>> {
    lowest_eigenpairs_with(op, k, tol, &LanczosOptions::default())
}

pub fn lowest_eigenpairs_with<T: Real>(
    op: &SchrodingerOp<T>,
    k: usize,
    tol: T,
    opts: &LanczosOptions,
) -> Result<SpectralReport<T>> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} for dimension {n}")));
    }
    if tol <= T::zero() {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let a = SparseSym::from_operator(op);
    let (values, reduced, iterations, method) = if n <= DENSE_LIMIT {
        let eig = a.to_dense().eigen()?;
        let vecs = (0..k).map(|j| eig.vector(j)).collect();
        (eig.values[..k].to_vec(), vecs, 1, Method::Dense)
    } else {
        let res = lowest(&a, k, tol, opts)?;
        (res.values, res.vectors, res.matvecs, Method::Lanczos)
    };
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
        vectors.push(unsymmetrize(op, y));
    }
    // Dense solves are exact up to rounding and are reported as they are.
    if let Some(&r) = residuals.iter().find(|&&r| r > tol) {
        if method == Method::Lanczos {
            return Err(Error::NotConverged {
                iterations,
                residual: r.lossy_f64(),
            });
        }
    }
    Ok(SpectralReport {
        values,
        vectors,
        residuals,
        iterations,
        tol,
        method,
    })
}

/// `f = M^{-1/2} y`, scaled to unit `μ`-norm with a positive coordinate sum.
fn unsymmetrize<T: Real>(op: &SchrodingerOp<T>, y: &[T]) -> VertexFunction<T> {
    let g = op.graph();
    let mut values = vec![T::zero(); op.num_vertices()];
    for (i, &v) in op.free().iter().enumerate() {
        values[v] = y[i] / g.mu(v).sqrt();
    }
    let f = VertexFunction::new(values);
    let norm = f.norm_sq(g.measure()).sqrt();
    let sum = f.values().iter().fold(T::zero(), |a, &b| a + b);
    let sign = if sum < T::zero() { -T::one() } else { T::one() };
    f.scaled(sign / norm)
}

/// Bottom of the spectrum with the residual and iteration count.
pub fn lambda0<T: Real>(op: &SchrodingerOp<T>, tol: T) -> Result<(T, T, usize)> {
    let rep = lowest_eigenpairs(op, 1, tol)?;
    Ok((rep.values[0], rep.residuals[0], rep.iterations))
}

/// `⟨Sf, f⟩_μ / ‖f‖²_μ`.
pub fn rayleigh<T: Real>(op: &SchrodingerOp<T>, f: &VertexFunction<T>) -> Result<T> {
    let n2 = op.norm_sq(f);
    if n2 <= T::zero() {
        return Err(Error::ZeroFunction);
    }
    Ok(op.quadratic_form(f)? / n2)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeylResidual<T> {
    /// `‖(S − λ)f‖_μ / ‖f‖_μ`.
    pub residual: T,
    /// Smallest hop distance from the reference vertex to `supp f`.
    pub inner_radius: Option<usize>,
}

pub fn weyl_residual<T: Real>(
    op: &SchrodingerOp<T>,
    f: &VertexFunction<T>,
    lambda: T,
    reference: Option<usize>,
) -> Result<WeylResidual<T>> {
    let n2 = op.norm_sq(f);
    if n2 <= T::zero() {
        return Err(Error::ZeroFunction);
    }
    let sf = op.apply(f)?;
    let r = VertexFunction::new(
        sf.values()
            .iter()
            .zip(f.values())
            .map(|(&a, &b)| a - lambda * b)
            .collect(),
    );
    let inner_radius = reference.map(|x| {
        let dist = op.graph().hop_distances(&[x], None);
        f.support()
            .iter()
            .map(|&v| dist[v])
            .filter(|&d| d != UNREACHED)
            .min()
            .unwrap_or(UNREACHED)
    });
    Ok(WeylResidual {
        residual: (op.norm_sq(&r) / n2).sqrt(),
        inner_radius,
    })
}

/// Number of eigenvalues in `[a, b]`: a dense solve on small problems,
/// otherwise the inertia of shifted factorizations. The endpoints are widened
/// by `1e-12` relative to the operator scale.
pub fn eigenvalue_count<T: Real>(op: &SchrodingerOp<T>, a: T, b: T) -> Result<usize> {
    if a > b {
        return Err(Error::InvalidArgument("empty interval".into()));
    }
    if op.dim() == 0 {
        return Ok(0);
    }
    let m = SparseSym::from_operator(op);
    let scale = m.norm_bound().max(T::one());
    let tau = T::from_f64_lossy(1e-12) * scale;
    if op.dim() <= DENSE_LIMIT {
        let values = m.to_dense().eigenvalues()?;
        return Ok(values.iter().filter(|&&l| l >= a - tau && l <= b + tau).count());
    }
    let perm = rcm_order(&m);
    let (upper, _) = count_below(&m, &perm, b + tau)?;
    let (lower, _) = count_below(&m, &perm, a - tau)?;
    Ok(upper - lower)
}

/// Direction in which a trace must move as the radius grows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Monotone {
    NonIncreasing,
    NonDecreasing,
}

/// Dirichlet bottoms along an exhaustion, with a `1/r²` extrapolation. Each value
/// bounds the bottom of its untruncated domain from above.
#[derive(Clone, Debug, Serialize)]
pub struct ExhaustionTrace {
    pub radii: Vec<usize>,
    pub lambda0: Vec<f64>,
    pub residuals: Vec<f64>,
    pub iterations: Vec<usize>,
    pub limit: f64,
    pub fit_residual: f64,
    pub monotone: Monotone,
    /// Outer radius for essential-spectrum traces.
    pub outer_radius: Option<usize>,
}

impl ExhaustionTrace {
    fn new(radii: Vec<usize>, rows: Vec<(f64, f64, usize)>, monotone: Monotone, outer_radius: Option<usize>) -> Self {
        let lambda0: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let (limit, fit_residual) = fit_inverse_square(&radii, &lambda0);
        Self {
            radii,
            residuals: rows.iter().map(|r| r.1).collect(),
            iterations: rows.iter().map(|r| r.2).collect(),
            lambda0,
            limit,
            fit_residual,
            monotone,
            outer_radius,
        }
    }

    pub fn last(&self) -> f64 {
        *self.lambda0.last().expect("nonempty trace")
    }

    /// Largest violation of monotonicity, positive when the trace moves the
    /// wrong way.
    pub fn monotonicity_defect(&self) -> f64 {
        self.lambda0
            .windows(2)
            .map(|w| match self.monotone {
                Monotone::NonIncreasing => w[1] - w[0],
                Monotone::NonDecreasing => w[0] - w[1],
            })
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("radius,lambda0,residual,iterations\n");
        for i in 0..self.radii.len() {
            out.push_str(&format!(
                "{},{:.12e},{:.3e},{}\n",
                self.radii[i], self.lambda0[i], self.residuals[i], self.iterations[i]
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Least-squares fit `λ(r) ≈ L + c/r²` over the larger half of the positive
/// radii, where the asymptotic form is credible; returns `L` and the
/// root-mean-square residual. With one usable point `L` is that value.
pub fn fit_inverse_square(radii: &[usize], values: &[f64]) -> (f64, f64) {
    let all: Vec<(f64, f64)> = radii
        .iter()
        .zip(values)
        .filter(|(&r, _)| r > 0)
        .map(|(&r, &v)| (1.0 / (r as f64 * r as f64), v))
        .collect();
    let pts = &all[all.len() / 2..];
    match pts.len() {
        0 => (values.last().copied().unwrap_or(f64::NAN), 0.0),
        1 => (pts[0].1, 0.0),
        m => {
            let mf = m as f64;
            let sx: f64 = pts.iter().map(|p| p.0).sum();
            let sy: f64 = pts.iter().map(|p| p.1).sum();
            let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
            let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
            let det = mf * sxx - sx * sx;
            if det.abs() < f64::MIN_POSITIVE {
                return (sy / mf, 0.0);
            }
            let c = (mf * sxy - sx * sy) / det;
            let l = (sy - c * sx) / mf;
            let rss: f64 = pts.iter().map(|p| (p.1 - l - c * p.0).powi(2)).sum();
            (l, (rss / mf).sqrt())
        }
    }
}

const TRACE_TOL: f64 = 1e-10;

fn solve_rows<T: Real>(ops: Vec<Result<SchrodingerOp<T>>>) -> Result<Vec<(f64, f64, usize)>> {
    ops.into_par_iter()
        .map(|op| {
            let (l, r, it) = lambda0(&op?, T::from_f64_lossy(TRACE_TOL))?;
            Ok((l.lossy_f64(), r.lossy_f64(), it))
        })
        .collect()
}

fn check_radii(radii: &[usize]) -> Result<()> {
    if radii.is_empty() || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("radii must be nonempty and ascending".into()));
    }
    Ok(())
}

/// `λ₀` of the lifted operator, Dirichlet outside `B(root, r)`, per radius.
pub fn lambda0_exhaustion<T: Real>(
    cover: &CoveringGraph<T>,
    op_base: &SchrodingerOp<T>,
    radii: &[usize],
) -> Result<ExhaustionTrace> {
    check_radii(radii)?;
    if let Some(t) = cover.truncation() {
        if radii.last().is_some_and(|&r| r + 1 > t) {
            return Err(Error::Truncation(format!(
                "radius {} needs truncation at least {}",
                radii[radii.len() - 1],
                radii[radii.len() - 1] + 1
            )));
        }
    }
    let lifted = cover.lift_operator(op_base)?;
    let total = cover.total();
    let ops = radii
        .iter()
        .map(|&r| lifted.induced_dirichlet(&total.ball(cover.root(), r)))
        .collect();
    Ok(ExhaustionTrace::new(
        radii.to_vec(),
        solve_rows(ops)?,
        Monotone::NonIncreasing,
        None,
    ))
}

/// `λ₀` of the lifted operator on the annulus `B(root, outer) ∖ B(root, k)`
/// per removal radius `k`. Truncating at `outer` biases the values upward.
pub fn lambda0_ess_estimate<T: Real>(
    cover: &CoveringGraph<T>,
    op_base: &SchrodingerOp<T>,
    removal_radii: &[usize],
    outer_radius: usize,
) -> Result<ExhaustionTrace> {
    check_radii(removal_radii)?;
    if removal_radii.last().is_some_and(|&k| k >= outer_radius) {
        return Err(Error::InvalidArgument(
            "removal radii must stay below the outer radius".into(),
        ));
    }
    if let Some(t) = cover.truncation() {
        if outer_radius + 1 > t {
            return Err(Error::Truncation(format!(
                "outer radius {outer_radius} needs truncation at least {}",
                outer_radius + 1
            )));
        }
    }
    let lifted = cover.lift_operator(op_base)?;
    let total = cover.total();
    let dist = total.hop_distances(&[cover.root()], Some(outer_radius));
    let ops = removal_radii
        .iter()
        .map(|&k| {
            let keep: Vec<usize> = (0..total.num_vertices())
                .filter(|&v| dist[v] > k && dist[v] <= outer_radius)
                .collect();
            lifted.induced_dirichlet(&keep)
        })
        .collect();
    Ok(ExhaustionTrace::new(
        removal_radii.to_vec(),
        solve_rows(ops)?,
        Monotone::NonDecreasing,
        Some(outer_radius),
    ))
}

/// Ball exhaustion of the `d`-regular tree through its radial quotient.
pub fn regular_tree_exhaustion(d: usize, radii: &[usize]) -> Result<ExhaustionTrace> {
    check_radii(radii)?;
    let rows = radii
        .par_iter()
        .map(|&r| Ok((RadialProfile::<f64>::regular_tree_ball(d, r).lambda0()?, 0.0, 1)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExhaustionTrace::new(
        radii.to_vec(),
        rows,
        Monotone::NonIncreasing,
        None,
    ))
}

/// Annuli of the `d`-regular tree. The annulus `B(outer) ∖ B(k)` splits into
/// identical branches of depth `outer − k − 1`, each handled radially.
pub fn regular_tree_ess(d: usize, removal_radii: &[usize], outer_radius: usize) -> Result<ExhaustionTrace> {
    check_radii(removal_radii)?;
    if removal_radii.last().is_some_and(|&k| k >= outer_radius) {
        return Err(Error::InvalidArgument(
            "removal radii must stay below the outer radius".into(),
        ));
    }
    let rows = removal_radii
        .par_iter()
        .map(|&k| {
            let profile = RadialProfile::<f64>::regular_tree_branch(d, outer_radius - k - 1);
            Ok((profile.lambda0()?, 0.0, 1))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExhaustionTrace::new(
        removal_radii.to_vec(),
        rows,
        Monotone::NonDecreasing,
        Some(outer_radius),
    ))
}
