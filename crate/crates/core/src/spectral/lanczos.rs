//! Thick-restart Lanczos with full reorthogonalization for the lowest
//! eigenpairs of a symmetric operator. Converged pairs are locked one at a
//! time and the search continues in their orthogonal complement, so repeated
//! eigenvalues are recovered with their multiplicity.

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::dense::SymDense;
use super::sparse::{axpy, dot, norm, random_unit, scale, seeded_rng, SymOperator};

#[derive(Clone, Debug)]
pub struct LanczosOptions {
    /// Krylov basis size before a restart; `0` picks a size from `k`.
    pub basis: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            basis: 0,
            max_restarts: 4000,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LanczosResult<T> {
    pub values: Vec<T>,
    pub vectors: Vec<Vec<T>>,
    pub residuals: Vec<T>,
    pub matvecs: usize,
}

fn orthogonalize<T: Real>(r: &mut [T], locked: &[Vec<T>], basis: &[Vec<T>]) {
    for _ in 0..2 {
        for q in locked.iter().chain(basis) {
            let c = dot(q, r);
            axpy(-c, q, r);
        }
    }
}

fn combine<T: Real>(vs: &[Vec<T>], coeffs: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); vs[0].len()];
    for (v, &c) in vs.iter().zip(coeffs) {
        axpy(c, v, &mut out);
    }
    out
}

/// Lowest `k` eigenpairs with Euclidean residual `‖Ay − θy‖ ≤ tol`.
pub fn lowest<T: Real, A: SymOperator<T>>(a: &A, k: usize, tol: T, opts: &LanczosOptions) -> Result<LanczosResult<T>> {
    let n = a.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} for dimension {n}")));
    }
    let mut rng = seeded_rng(opts.seed);
    let basis_size = if opts.basis == 0 {
        (3 * k + 30).max(40)
    } else {
        opts.basis.max(2)
    };
    let tiny = T::epsilon() * T::from_f64_lossy(1e3);

    let mut locked: Vec<Vec<T>> = Vec::new();
    let mut locked_vals: Vec<T> = Vec::new();
    let mut residuals: Vec<T> = Vec::new();
    let mut matvecs = 0usize;
    let mut start = random_unit::<T>(n, &mut rng);

    while locked.len() < k {
        let avail = n - locked.len();
        let m = basis_size.min(avail);

        let mut v0 = start.clone();
        orthogonalize(&mut v0, &locked, &[]);
        let mut nv = norm(&v0);
        let mut tries = 0;
        while nv <= tiny {
            tries += 1;
            if tries > 8 {
                return Err(Error::NotConverged {
                    iterations: matvecs,
                    residual: f64::NAN,
                });
            }
            v0 = random_unit(n, &mut rng);
            orthogonalize(&mut v0, &locked, &[]);
            nv = norm(&v0);
        }
        scale(T::one() / nv, &mut v0);

        let mut vs: Vec<Vec<T>> = vec![v0];
        let mut ws: Vec<Vec<T>> = Vec::new();
        let mut h = vec![vec![T::zero(); m]; m];
        let mut last_res = T::infinity();
        let mut done = false;

        for _restart in 0..opts.max_restarts {
            let mut j = ws.len();
            let resid = loop {
                let mut w = vec![T::zero(); n];
                a.apply(&vs[j], &mut w);
                matvecs += 1;
                for i in 0..=j {
                    let hij = dot(&vs[i], &w);
                    h[i][j] = hij;
                    h[j][i] = hij;
                }
                let mut r = w.clone();
                ws.push(w);
                for i in 0..=j {
                    axpy(-h[i][j], &vs[i], &mut r);
                }
                orthogonalize(&mut r, &locked, &vs);
                if j + 1 == m {
                    break r;
                }
                let beta = norm(&r);
                if beta <= tiny {
                    r = random_unit(n, &mut rng);
                    orthogonalize(&mut r, &locked, &vs);
                    let nr = norm(&r);
                    if nr <= tiny {
                        // Krylov space exhausted the complement.
                        break vec![T::zero(); n];
                    }
                    scale(T::one() / nr, &mut r);
                } else {
                    scale(T::one() / beta, &mut r);
                }
                vs.push(r);
                j += 1;
            };

            let size = ws.len();
            let mut proj = SymDense::zeros(size);
            for (i, row) in h.iter().enumerate().take(size) {
                for (jj, &x) in row.iter().enumerate().take(size).skip(i) {
                    proj.set(i, jj, x);
                }
            }
            let eig = proj.eigen()?;
            let s0 = eig.vector(0);
            let y0 = combine(&vs[..size], &s0);
            let z0 = combine(&ws, &s0);
            let mut r0 = z0.clone();
            axpy(-eig.values[0], &y0, &mut r0);
            let res0 = norm(&r0);
            last_res = res0;
            if res0 <= tol || size == avail {
                let ny = norm(&y0);
                let mut y = y0;
                scale(T::one() / ny, &mut y);
                locked.push(y);
                locked_vals.push(eig.values[0]);
                residuals.push(res0);
                start = if size > 1 {
                    combine(&vs[..size], &eig.vector(1))
                } else {
                    random_unit(n, &mut rng)
                };
                done = true;
                break;
            }

            // Thick restart on the lower half of the Ritz spectrum.
            let keep = (size / 2).max(1).min(size - 1).max(1);
            let mut new_vs = Vec::with_capacity(m);
            let mut new_ws = Vec::with_capacity(m);
            for i in 0..keep {
                let s = eig.vector(i);
                new_vs.push(combine(&vs[..size], &s));
                new_ws.push(combine(&ws, &s));
            }
            for row in h.iter_mut() {
                row.iter_mut().for_each(|x| *x = T::zero());
            }
            for (i, &theta) in eig.values.iter().enumerate().take(keep) {
                h[i][i] = theta;
            }
            let mut next = resid;
            orthogonalize(&mut next, &locked, &new_vs);
            let mut nn = norm(&next);
            if nn <= tiny {
                next = random_unit(n, &mut rng);
                orthogonalize(&mut next, &locked, &new_vs);
                nn = norm(&next);
            }
            scale(T::one() / nn, &mut next);
            new_vs.push(next);
            vs = new_vs;
            ws = new_ws;
        }
        if !done {
            return Err(Error::NotConverged {
                iterations: matvecs,
                residual: last_res.lossy_f64(),
            });
        }
    }

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| locked_vals[i].partial_cmp(&locked_vals[j]).expect("finite"));
    Ok(LanczosResult {
        values: order.iter().map(|&i| locked_vals[i]).collect(),
        vectors: order.iter().map(|&i| locked[i].clone()).collect(),
        residuals: order.iter().map(|&i| residuals[i]).collect(),
        matvecs,
    })
}
