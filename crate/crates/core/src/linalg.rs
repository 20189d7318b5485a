//! Small dense linear algebra on row-major `n×n` slices.

use crate::scalar::Real;

pub fn identity<T: Real>(n: usize) -> Vec<T> {
    let mut m = vec![T::zero(); n * n];
    for i in 0..n {
        m[i * n + i] = T::one();
    }
    m
}

pub fn matmul<T: Real>(a: &[T], b: &[T], n: usize, m: usize, p: usize) -> Vec<T> {
    let mut c = vec![T::zero(); n * p];
    for i in 0..n {
        for k in 0..m {
            let aik = a[i * m + k];
            if aik == T::zero() {
                continue;
            }
            for j in 0..p {
                c[i * p + j] += aik * b[k * p + j];
            }
        }
    }
    c
}

pub fn transpose<T: Real>(a: &[T], rows: usize, cols: usize) -> Vec<T> {
    let mut t = vec![T::zero(); rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            t[j * rows + i] = a[i * cols + j];
        }
    }
    t
}

/// Inverse by Gauss–Jordan elimination with partial pivoting; `None` if singular.
pub fn inverse<T: Real>(a: &[T], n: usize) -> Option<Vec<T>> {
    let mut m = a.to_vec();
    let mut inv = identity::<T>(n);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i * n + col].abs().partial_cmp(&m[j * n + col].abs()).unwrap())?;
        if m[piv * n + col] == T::zero() {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
                inv.swap(piv * n + k, col * n + k);
            }
        }
        let d = T::one() / m[col * n + col];
        for k in 0..n {
            m[col * n + k] *= d;
            inv[col * n + k] *= d;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r * n + col];
            if f == T::zero() {
                continue;
            }
            for k in 0..n {
                let t = f * m[col * n + k];
                m[r * n + k] -= t;
                let t = f * inv[col * n + k];
                inv[r * n + k] -= t;
            }
        }
    }
    Some(inv)
}

/// Determinant by LU with partial pivoting.
pub fn determinant<T: Real>(a: &[T], n: usize) -> T {
    let mut m = a.to_vec();
    let mut det = T::one();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().partial_cmp(&m[j * n + col].abs()).unwrap())
            .unwrap();
        if m[piv * n + col] == T::zero() {
            return T::zero();
        }
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
            }
            det = -det;
        }
        let p = m[col * n + col];
        det *= p;
        for r in col + 1..n {
            let f = m[r * n + col] / p;
            for k in col..n {
                let t = f * m[col * n + k];
                m[r * n + k] -= t;
            }
        }
    }
    det
}

/// Lower Cholesky factor `L` with `A = L Lᵀ`; `None` unless positive definite.
pub fn cholesky<T: Real>(a: &[T], n: usize) -> Option<Vec<T>> {
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= T::zero() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Eigenvalues are sorted descending; each eigenvector (a column of the
/// returned matrix) has its first nonzero entry positive.
pub fn symmetric_eigen<T: Real>(a: &[T], n: usize) -> (Vec<T>, Vec<T>) {
    let mut m = a.to_vec();
    let mut v = identity::<T>(n);
    let eps = T::epsilon();
    for _sweep in 0..100 {
        let mut off = T::zero();
        let mut scale = T::zero();
        for i in 0..n {
            for j in 0..n {
                let x = m[i * n + j] * m[i * n + j];
                if i == j {
                    scale += x;
                } else {
                    off += x;
                }
            }
        }
        if off <= eps * eps * (scale + off) || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (apq + apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let t = if theta == T::zero() { T::one() } else { t };
                let cs = T::one() / (t * t + T::one()).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = cs * mkp - sn * mkq;
                    m[k * n + q] = sn * mkp + cs * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = cs * mpk - sn * mqk;
                    m[q * n + k] = sn * mpk + cs * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = cs * vkp - sn * vkq;
                    v[k * n + q] = sn * vkp + cs * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].partial_cmp(&m[i * n + i]).unwrap());
    let vals: Vec<T> = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vecs = vec![T::zero(); n * n];
    for (c, &src) in order.iter().enumerate() {
        let tiny = T::epsilon() * cn_sqrt::<T>(n);
        let first = (0..n).map(|k| v[k * n + src]).find(|x| x.abs() > tiny).unwrap_or(T::one());
        let s = if first < T::zero() { -T::one() } else { T::one() };
        for k in 0..n {
            vecs[k * n + c] = s * v[k * n + src];
        }
    }
    (vals, vecs)
}

fn cn_sqrt<T: Real>(n: usize) -> T {
    T::from_usize(n).unwrap().sqrt()
}

/// `g`-orthonormal frame by modified Gram–Schmidt on the coordinate basis.
///
/// Returns `E` (row-major, columns are the frame vectors) with `Eᵀ g E = I`.
pub fn orthonormal_frame<T: Real>(g: &[T], n: usize) -> Vec<T> {
    let basis: Vec<Vec<T>> = (0..n)
        .map(|i| {
            let mut e = vec![T::zero(); n];
            e[i] = T::one();
            e
        })
        .collect();
    let cols = gram_schmidt(g, n, &basis);
    let mut e = vec![T::zero(); n * n];
    for (c, v) in cols.iter().enumerate() {
        for k in 0..n {
            e[k * n + c] = v[k];
        }
    }
    e
}

pub fn inner<T: Real>(g: &[T], n: usize, u: &[T], v: &[T]) -> T {
    let mut s = T::zero();
    for i in 0..n {
        let mut r = T::zero();
        for j in 0..n {
            r += g[i * n + j] * v[j];
        }
        s += u[i] * r;
    }
    s
}

/// Modified Gram–Schmidt in the inner product `g`; drops vectors that
/// become numerically dependent.
pub fn gram_schmidt<T: Real>(g: &[T], n: usize, vectors: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = Vec::new();
    let tol = T::epsilon().sqrt();
    for v in vectors {
        let mut w = v.clone();
        let norm0 = inner(g, n, &w, &w).sqrt();
        for _pass in 0..2 {
            for e in &out {
                let p = inner(g, n, e, &w);
                for k in 0..n {
                    w[k] -= p * e[k];
                }
            }
        }
        let norm = inner(g, n, &w, &w).sqrt();
        if norm <= tol * norm0 || norm == T::zero() {
            continue;
        }
        for x in w.iter_mut() {
            *x /= norm;
        }
        out.push(w);
    }
    out
}

/// Least-squares line fit `y ≈ a + b x`; returns `(a, b, stderr_b)`.
pub fn linear_fit<T: Real>(x: &[T], y: &[T]) -> (T, T, T) {
    let n = T::from_usize(x.len()).unwrap();
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    let b = sxy / sxx;
    let a = my - b * mx;
    let mut rss = T::zero();
    for (&xi, &yi) in x.iter().zip(y) {
        let r = yi - a - b * xi;
        rss += r * r;
    }
    let dof = T::from_usize(x.len().saturating_sub(2).max(1)).unwrap();
    let se = (rss / dof / sxx).sqrt();
    (a, b, se)
}
