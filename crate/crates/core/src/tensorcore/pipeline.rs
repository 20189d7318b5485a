//! Christoffel symbols, Riemann, Ricci and scalar curvature from metric
//! derivatives, generic over the coefficient type so the same code runs on
//! plain values and on jets (for covariant derivatives of curvature).

use crate::error::{GeomError, Result};
use crate::jet::Jet;
use crate::scalar::{c, to_f64, Real};

/// Coefficient ring used by the curvature pipeline.
pub trait Coef<T: Real>: Clone {
    fn value(&self) -> T;
    fn zero_like(&self) -> Self;
    fn constant_like(&self, v: T) -> Self;
    fn scale(&self, s: T) -> Self;
    fn recip(&self) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn add_assign(&mut self, o: &Self);
    fn is_exact_zero(&self) -> bool;
}

impl<T: Real> Coef<T> for T {
    fn value(&self) -> T {
        *self
    }
    fn zero_like(&self) -> T {
        T::zero()
    }
    fn constant_like(&self, v: T) -> T {
        v
    }
    fn scale(&self, s: T) -> T {
        *self * s
    }
    fn recip(&self) -> T {
        T::one() / *self
    }
    fn add(&self, o: &T) -> T {
        *self + *o
    }
    fn sub(&self, o: &T) -> T {
        *self - *o
    }
    fn mul(&self, o: &T) -> T {
        *self * *o
    }
    fn add_assign(&mut self, o: &T) {
        *self += *o;
    }
    fn is_exact_zero(&self) -> bool {
        *self == T::zero()
    }
}

impl<T: Real> Coef<T> for Jet<T> {
    fn value(&self) -> T {
        Jet::value(self)
    }
    fn zero_like(&self) -> Jet<T> {
        Jet::zero_like(self)
    }
    fn constant_like(&self, v: T) -> Jet<T> {
        Jet::constant_like(self, v)
    }
    fn scale(&self, s: T) -> Jet<T> {
        Jet::scale(self, s)
    }
    fn recip(&self) -> Jet<T> {
        Jet::recip(self)
    }
    fn add(&self, o: &Jet<T>) -> Jet<T> {
        self + o
    }
    fn sub(&self, o: &Jet<T>) -> Jet<T> {
        self - o
    }
    fn mul(&self, o: &Jet<T>) -> Jet<T> {
        self * o
    }
    fn add_assign(&mut self, o: &Jet<T>) {
        *self += o;
    }
    fn is_exact_zero(&self) -> bool {
        self.coeffs().iter().all(|&x| x == T::zero())
    }
}

/// Metric with first and second coordinate derivatives.
///
/// `dg[(a*n + i)*n + j] = ∂_a g_ij`, `ddg[((a*n + b)*n + i)*n + j] = ∂_a ∂_b g_ij`.
#[derive(Clone, Debug)]
pub struct MetricDerivs<C> {
    pub n: usize,
    pub g: Vec<C>,
    pub dg: Vec<C>,
    pub ddg: Vec<C>,
}

/// Plain-valued derivatives from metric jets of order ≥ 2.
pub fn derivs_from_jets<T: Real>(g: &[Jet<T>], n: usize) -> Result<MetricDerivs<T>> {
    let order = g[0].order();
    if order < 2 {
        return Err(GeomError::InsufficientOrder { needed: 2, have: order });
    }
    let mut dg = vec![T::zero(); n * n * n];
    let mut ddg = vec![T::zero(); n * n * n * n];
    for i in 0..n {
        for j in i..n {
            let gij = &g[i * n + j];
            for a in 0..n {
                let v = gij.partial(&[a]);
                dg[(a * n + i) * n + j] = v;
                dg[(a * n + j) * n + i] = v;
                for b in a..n {
                    let w = gij.partial(&[a, b]);
                    for (p, q) in [(a, b), (b, a)] {
                        ddg[((p * n + q) * n + i) * n + j] = w;
                        ddg[((p * n + q) * n + j) * n + i] = w;
                    }
                }
            }
        }
    }
    Ok(MetricDerivs { n, g: g.iter().map(|j| j.value()).collect(), dg, ddg })
}

/// Jet-valued derivatives of order `K` from metric jets of order `K + 2`.
pub fn derivs_as_jets<T: Real>(g: &[Jet<T>], n: usize) -> Result<MetricDerivs<Jet<T>>> {
    let order = g[0].order();
    if order < 2 {
        return Err(GeomError::InsufficientOrder { needed: 2, have: order });
    }
    let k = order - 2;
    let zero = g[0].truncate(k).zero_like();
    let mut dg = vec![zero.clone(); n * n * n];
    let mut ddg = vec![zero; n * n * n * n];
    for i in 0..n {
        for j in i..n {
            let gij = &g[i * n + j];
            for a in 0..n {
                let d = gij.derivative(a);
                for b in a..n {
                    let dd = d.derivative(b);
                    for (p, q) in [(a, b), (b, a)] {
                        ddg[((p * n + q) * n + i) * n + j] = dd.clone();
                        ddg[((p * n + q) * n + j) * n + i] = dd.clone();
                    }
                }
                let d = d.truncate(k);
                dg[(a * n + i) * n + j] = d.clone();
                dg[(a * n + j) * n + i] = d;
            }
        }
    }
    Ok(MetricDerivs { n, g: g.iter().map(|j| j.truncate(k)).collect(), dg, ddg })
}

/// Inverse of a matrix over a coefficient ring, pivoting on plain values.
pub fn invert<T: Real, C: Coef<T>>(a: &[C], n: usize) -> Result<Vec<C>> {
    let mut m: Vec<C> = a.to_vec();
    let mut inv: Vec<C> = vec![a[0].zero_like(); n * n];
    for i in 0..n {
        inv[i * n + i] = a[0].constant_like(T::one());
    }
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if m[r * n + col].value().abs() > m[piv * n + col].value().abs() {
                piv = r;
            }
        }
        let p = m[piv * n + col].value();
        if p == T::zero() || !p.is_finite() {
            return Err(GeomError::SingularMetric { min_eig: 0.0, max_eig: to_f64(p) });
        }
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
                inv.swap(piv * n + k, col * n + k);
            }
        }
        let d = m[col * n + col].recip();
        for k in 0..n {
            m[col * n + k] = m[col * n + k].mul(&d);
            inv[col * n + k] = inv[col * n + k].mul(&d);
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r * n + col].clone();
            if f.is_exact_zero() {
                continue;
            }
            for k in 0..n {
                let t = f.mul(&m[col * n + k]);
                m[r * n + k] = m[r * n + k].sub(&t);
                let t = f.mul(&inv[col * n + k]);
                inv[r * n + k] = inv[r * n + k].sub(&t);
            }
        }
    }
    Ok(inv)
}

/// Connection and curvature built from [`MetricDerivs`].
#[derive(Clone, Debug)]
pub struct Geometry<C> {
    pub n: usize,
    pub g: Vec<C>,
    pub ginv: Vec<C>,
    /// Γ_{l,ij} (first kind), index `(l*n + i)*n + j`.
    pub gamma_low: Vec<C>,
    /// Γ^k_{ij}, index `(k*n + i)*n + j`.
    pub gamma: Vec<C>,
    /// R_{ijkl} = g(R(∂_i,∂_j)∂_k, ∂_l), index `((i*n + j)*n + k)*n + l`.
    pub riemann: Vec<C>,
    pub ricci: Vec<C>,
    pub scalar: C,
}

/// Curvature from metric derivatives.
///
/// R_{ijkl} = ½(∂_i∂_k g_jl + ∂_j∂_l g_ik − ∂_i∂_l g_jk − ∂_j∂_k g_il)
///            − Γ_{m,il} Γ^m_{jk} + Γ_{m,jl} Γ^m_{ik},
/// which gives the round sphere R_{ijkl} = g_il g_jk − g_ik g_jl.
pub fn geometry<T: Real, C: Coef<T>>(d: &MetricDerivs<C>) -> Result<Geometry<C>> {
    let n = d.n;
    let ginv = invert(&d.g, n)?;
    let half: T = c(0.5);
    let zero = d.g[0].zero_like();

    let mut gamma_low = vec![zero.clone(); n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in i..n {
                let v = d.dg[(i * n + j) * n + l]
                    .add(&d.dg[(j * n + i) * n + l])
                    .sub(&d.dg[(l * n + i) * n + j])
                    .scale(half);
                gamma_low[(l * n + i) * n + j] = v.clone();
                gamma_low[(l * n + j) * n + i] = v;
            }
        }
    }
    let mut gamma = vec![zero.clone(); n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut acc = zero.clone();
                for l in 0..n {
                    acc.add_assign(&ginv[k * n + l].mul(&gamma_low[(l * n + i) * n + j]));
                }
                gamma[(k * n + i) * n + j] = acc.clone();
                gamma[(k * n + j) * n + i] = acc;
            }
        }
    }

    let dd = |a: usize, b: usize, i: usize, j: usize| &d.ddg[((a * n + b) * n + i) * n + j];
    let mut riemann = vec![zero.clone(); n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut r = dd(i, k, j, l)
                        .add(dd(j, l, i, k))
                        .sub(dd(i, l, j, k))
                        .sub(dd(j, k, i, l))
                        .scale(half);
                    for m in 0..n {
                        let a = gamma_low[(m * n + j) * n + l].mul(&gamma[(m * n + i) * n + k]);
                        let b = gamma_low[(m * n + i) * n + l].mul(&gamma[(m * n + j) * n + k]);
                        r.add_assign(&a.sub(&b));
                    }
                    riemann[((i * n + j) * n + k) * n + l] = r;
                }
            }
        }
    }

    let mut ricci = vec![zero.clone(); n * n];
    for j in 0..n {
        for k in j..n {
            let mut acc = zero.clone();
            for i in 0..n {
                for l in 0..n {
                    acc.add_assign(&ginv[i * n + l].mul(&riemann[((i * n + j) * n + k) * n + l]));
                }
            }
            ricci[j * n + k] = acc.clone();
            ricci[k * n + j] = acc;
        }
    }
    let mut scalar = zero;
    for j in 0..n {
        for k in 0..n {
            scalar.add_assign(&ginv[j * n + k].mul(&ricci[j * n + k]));
        }
    }
    Ok(Geometry { n, g: d.g.clone(), ginv, gamma_low, gamma, riemann, ricci, scalar })
}

/// Christoffel symbols Γ^k_ij from metric jets of order ≥ 1 (plain values).
pub fn christoffel_from_jets<T: Real>(g: &[Jet<T>], n: usize) -> Result<(Vec<T>, Vec<T>)> {
    let order = g[0].order();
    if order < 1 {
        return Err(GeomError::InsufficientOrder { needed: 1, have: order });
    }
    let gv: Vec<T> = g.iter().map(|j| j.value()).collect();
    let ginv = invert::<T, T>(&gv, n)?;
    let dg = |a: usize, i: usize, j: usize| g[i * n + j].partial(&[a]);
    let mut low = vec![T::zero(); n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                low[(l * n + i) * n + j] = c::<T>(0.5) * (dg(i, j, l) + dg(j, i, l) - dg(l, i, j));
            }
        }
    }
    let mut gamma = vec![T::zero(); n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut acc = T::zero();
                for l in 0..n {
                    acc += ginv[k * n + l] * low[(l * n + i) * n + j];
                }
                gamma[(k * n + i) * n + j] = acc;
            }
        }
    }
    Ok((ginv, gamma))
}
