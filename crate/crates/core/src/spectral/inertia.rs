//! Eigenvalue counting by Sylvester's law of inertia: the number of negative
//! pivots of `LDLᵀ = A − σI` equals the number of eigenvalues below `σ`.
//! The factorization runs in band storage after a reverse Cuthill–McKee
//! reordering.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::sparse::SparseSym;

/// Band storage cap, in stored entries.
const BAND_LIMIT: usize = 50_000_000;

/// Reverse Cuthill–McKee permutation: `perm[new] = old`.
pub fn rcm_order<T: Real>(a: &SparseSym<T>) -> Vec<usize> {
    let n = a.dim_rows();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).count()).collect();
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let start = (0..n)
            .filter(|&i| !seen[i])
            .min_by_key(|&i| degree[i])
            .expect("unvisited vertex");
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = a.row(v).map(|(j, _)| j).filter(|&j| !seen[j]).collect();
            next.sort_by_key(|&j| (degree[j], j));
            next.dedup();
            for j in next {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

/// Number of eigenvalues strictly below `sigma`, with the shift actually
/// used (nudged when a pivot vanishes).
pub fn count_below<T: Real>(a: &SparseSym<T>, perm: &[usize], sigma: T) -> Result<(usize, T)> {
    let n = a.dim_rows();
    let mut inv = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let mut bw = 0;
    for i in 0..n {
        for (j, _) in a.row(i) {
            bw = bw.max(inv[i].abs_diff(inv[j]));
        }
    }
    if n.saturating_mul(bw + 1) > BAND_LIMIT {
        return Err(Error::SizeGuard(format!(
            "bandwidth {bw} too large for banded factorization of order {n}"
        )));
    }
    let scale = a.norm_bound().max(T::one());
    let mut shift = sigma;
    for attempt in 0..8 {
        match banded_negative_pivots(a, &inv, bw, shift, scale) {
            Some(count) => return Ok((count, shift)),
            None => {
                let nudge = T::from_f64_lossy(1e-12 * f64::from(1u32 << attempt));
                shift += nudge * scale;
            }
        }
    }
    Err(Error::Breakdown(sigma.lossy_f64()))
}

fn banded_negative_pivots<T: Real>(a: &SparseSym<T>, inv: &[usize], bw: usize, sigma: T, scale: T) -> Option<usize> {
    let n = inv.len();
    let width = bw + 1;
    // band[i * width + (i - j)] holds entry (i, j) for j in [i - bw, i].
    let mut band = vec![T::zero(); n * width];
    for i in 0..n {
        for (j, v) in a.row(i) {
            let (pi, pj) = (inv[i], inv[j]);
            if pj <= pi {
                band[pi * width + (pi - pj)] += v;
            }
        }
        band[inv[i] * width] -= sigma;
    }
    let tiny = T::epsilon() * scale;
    let mut d = vec![T::zero(); n];
    let mut negatives = 0;
    for j in 0..n {
        let lo = j.saturating_sub(bw);
        let mut dj = band[j * width];
        for k in lo..j {
            let l = band[j * width + (j - k)];
            dj -= l * l * d[k];
        }
        if dj.abs() <= tiny {
            return None;
        }
        d[j] = dj;
        if dj < T::zero() {
            negatives += 1;
        }
        let hi = (j + bw).min(n - 1);
        for i in j + 1..=hi {
            let lo_i = i.saturating_sub(bw);
            let mut s = band[i * width + (i - j)];
            for k in lo_i.max(lo)..j {
                s -= band[i * width + (i - k)] * band[j * width + (j - k)] * d[k];
            }
            band[i * width + (i - j)] = s / dj;
        }
    }
    Some(negatives)
}
