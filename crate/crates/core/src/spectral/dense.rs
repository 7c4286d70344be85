//! Dense symmetric eigensolver: Householder tridiagonalization followed by
//! implicit QL with Wilkinson-free shifts (the EISPACK `tred2`/`tql2` pair).

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major symmetric matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SymDense<T> {
    n: usize,
    a: Vec<T>,
}

impl<T: Real> SymDense<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            a: vec![T::zero(); n * n],
        }
    }

    pub fn from_rows(n: usize, a: Vec<T>) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::InvalidArgument("matrix size".into()));
        }
        Ok(Self { n, a })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.a[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: T) {
        self.a[i * self.n + j] = x;
        self.a[j * self.n + i] = x;
    }

    pub fn add(&mut self, i: usize, j: usize, x: T) {
        self.a[i * self.n + j] += x;
        if i != j {
            self.a[j * self.n + i] += x;
        }
    }

    pub fn mul_vec(&self, x: &[T], y: &mut [T]) {
        for i in 0..self.n {
            let row = &self.a[i * self.n..(i + 1) * self.n];
            y[i] = row.iter().zip(x).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
        }
    }

    /// All eigenpairs, ascending. Column `j` of the returned row-major
    /// matrix is the unit eigenvector for `values[j]`.
    pub fn eigen(&self) -> Result<Eigen<T>> {
        let n = self.n;
        if n == 0 {
            return Ok(Eigen {
                values: Vec::new(),
                vectors: Vec::new(),
                n,
            });
        }
        let mut v = self.a.clone();
        let mut d = vec![T::zero(); n];
        let mut e = vec![T::zero(); n];
        tred2(n, &mut v, &mut d, &mut e);
        tql2(n, &mut v, &mut d, &mut e)?;

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).expect("finite eigenvalues"));
        let values = order.iter().map(|&i| d[i]).collect();
        let mut vectors = vec![T::zero(); n * n];
        for (new, &old) in order.iter().enumerate() {
            for r in 0..n {
                vectors[r * n + new] = v[r * n + old];
            }
        }
        Ok(Eigen { values, vectors, n })
    }

    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        Ok(self.eigen()?.values)
    }
}

#[derive(Clone, Debug)]
pub struct Eigen<T> {
    pub values: Vec<T>,
    vectors: Vec<T>,
    n: usize,
}

impl<T: Real> Eigen<T> {
    pub fn vector(&self, j: usize) -> Vec<T> {
        (0..self.n).map(|r| self.vectors[r * self.n + j]).collect()
    }
}

fn tred2<T: Real>(n: usize, v: &mut [T], d: &mut [T], e: &mut [T]) {
    let idx = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = T::zero();
                v[idx(j, i)] = T::zero();
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for j in 0..i {
                e[j] = T::zero();
            }
            for j in 0..i {
                f = d[j];
                v[idx(j, i)] = f;
                g = e[j] + v[idx(j, j)] * f;
                for k in j + 1..i {
                    g += v[idx(k, j)] * d[k];
                    e[k] += v[idx(k, j)] * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    let dec = f * e[k] + g * d[k];
                    v[idx(k, j)] -= dec;
                }
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = T::zero();
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[idx(n - 1, i)] = v[idx(i, i)];
        v[idx(i, i)] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[idx(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g += v[idx(k, i + 1)] * v[idx(k, j)];
                }
                for k in 0..=i {
                    let dec = g * d[k];
                    v[idx(k, j)] -= dec;
                }
            }
        }
        for k in 0..=i {
            v[idx(k, i + 1)] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
        v[idx(n - 1, j)] = T::zero();
    }
    v[idx(n - 1, n - 1)] = T::one();
    e[0] = T::zero();
}

fn tql2<T: Real>(n: usize, v: &mut [T], d: &mut [T], e: &mut [T]) -> Result<()> {
    let idx = |i: usize, j: usize| i * n + j;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    let two = T::one() + T::one();
    let eps = T::epsilon();
    let mut f = T::zero();
    let mut tst1 = T::zero();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::NotConverged {
                        iterations: iter,
                        residual: e[l].lossy_f64(),
                    });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for x in d.iter_mut().take(n).skip(l + 2) {
                    *x -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        h = v[idx(k, i + 1)];
                        v[idx(k, i + 1)] = s * v[idx(k, i)] + c * h;
                        v[idx(k, i)] = c * v[idx(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    Ok(())
}

/// Eigenvalues of the symmetric tridiagonal matrix with the given diagonal
/// and off-diagonal.
pub fn tridiagonal_eigenvalues<T: Real>(diag: &[T], off: &[T]) -> Result<Vec<T>> {
    let n = diag.len();
    let mut m = SymDense::zeros(n);
    for i in 0..n {
        m.set(i, i, diag[i]);
        if i + 1 < n {
            m.set(i, i + 1, off[i]);
        }
    }
    m.eigenvalues()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let m = SymDense::from_rows(2, vec![1.0, -1.0, -1.0, 3.0]).unwrap();
        let eig = m.eigen().unwrap();
        let s = 2f64.sqrt();
        assert!((eig.values[0] - (2.0 - s)).abs() < 1e-14);
        assert!((eig.values[1] - (2.0 + s)).abs() < 1e-14);
        let v = eig.vector(0);
        let mut y = vec![0.0; 2];
        m.mul_vec(&v, &mut y);
        assert!((y[0] - eig.values[0] * v[0]).abs() < 1e-14);
    }

    #[test]
    fn circulant_c4() {
        let mut m = SymDense::<f64>::zeros(4);
        for i in 0..4 {
            m.set(i, i, 2.0);
            m.set(i, (i + 1) % 4, -1.0);
        }
        let vals = m.eigenvalues().unwrap();
        for (a, b) in vals.iter().zip([0.0, 2.0, 2.0, 4.0]) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn single_precision() {
        let m = SymDense::from_rows(2, vec![2.0f32, 1.0, 1.0, 2.0]).unwrap();
        let vals = m.eigenvalues().unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-6 && (vals[1] - 3.0).abs() < 1e-6);
    }
}
