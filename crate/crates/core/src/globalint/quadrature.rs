//! Tensor-product quadrature rules and a deterministic parallel reducer.

use crate::error::{GeomError, Result};
use crate::scalar::{c, cn, Real};

/// One-dimensional rule on an axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    /// Gauss–Legendre nodes in each of `cells` equal subintervals.
    GaussLegendre,
    /// Equispaced nodes with equal weights, for periodic axes.
    Trapezoid,
}

/// Per-axis node counts and cell partition; the rule follows the axis periodicity.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureGrid {
    pub nodes: Vec<usize>,
    pub cells: Vec<usize>,
}

/// Default nodes per axis by dimension: 32 up to dimension 4, 12 in
/// dimension 5 and 8 from dimension 6 on.
pub fn default_nodes(dim: usize) -> usize {
    match dim {
        0..=4 => 32,
        5 => 12,
        _ => 8,
    }
}

impl QuadratureGrid {
    /// Uniform grid with [`default_nodes`] per axis.
    pub fn default_for(dim: usize) -> QuadratureGrid {
        QuadratureGrid::uniform(dim, default_nodes(dim))
    }

    pub fn uniform(dim: usize, nodes: usize) -> QuadratureGrid {
        QuadratureGrid { nodes: vec![nodes; dim], cells: vec![1; dim] }
    }

    pub fn new(nodes: Vec<usize>, cells: Vec<usize>) -> Result<QuadratureGrid> {
        if nodes.len() != cells.len() {
            return Err(GeomError::DimensionMismatch { expected: nodes.len(), got: cells.len() });
        }
        if nodes.iter().chain(&cells).any(|&k| k == 0) {
            return Err(GeomError::InvalidParameter("node and cell counts must be positive".into()));
        }
        Ok(QuadratureGrid { nodes, cells })
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    /// Same grid with every axis refined by `factor`.
    pub fn refined(&self, factor: usize) -> QuadratureGrid {
        QuadratureGrid { nodes: self.nodes.iter().map(|n| n * factor).collect(), cells: self.cells.clone() }
    }

    /// Halved node counts (at least 2 per axis).
    pub fn coarsened(&self) -> QuadratureGrid {
        QuadratureGrid { nodes: self.nodes.iter().map(|n| (n / 2).max(2)).collect(), cells: self.cells.clone() }
    }

    /// Rule used on an axis.
    pub fn rule(periodic: bool) -> Rule {
        if periodic {
            Rule::Trapezoid
        } else {
            Rule::GaussLegendre
        }
    }

    /// Nodes per chart for the given periodicity pattern.
    pub fn nodes_per_chart(&self, periodic: &[bool]) -> usize {
        (0..self.dim())
            .map(|a| if periodic[a] { self.nodes[a] } else { self.nodes[a] * self.cells[a] })
            .product()
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1], by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss nodes and weights on [−1, 1] for the weight (1 − t²)^a, a ≥ 0, by
/// Golub–Welsch on the symmetric Jacobi recurrence.
pub fn gauss_gegenbauer(n: usize, a: f64) -> (Vec<f64>, Vec<f64>) {
    let mut jm = vec![0.0; n * n];
    for j in 1..n {
        let jf = j as f64;
        let b = (jf * (jf + 2.0 * a) / ((2.0 * jf + 2.0 * a + 1.0) * (2.0 * jf + 2.0 * a - 1.0))).sqrt();
        jm[(j - 1) * n + j] = b;
        jm[j * n + j - 1] = b;
    }
    let mass = std::f64::consts::PI.sqrt() * half_gamma(2.0 * a + 2.0) / half_gamma(2.0 * a + 3.0);
    let (vals, vecs) = crate::linalg::symmetric_eigen(&jm, n);
    let mut out: Vec<(f64, f64)> = (0..n).map(|i| (vals[i], mass * vecs[i] * vecs[i])).collect();
    out.sort_by(|p, q| p.0.total_cmp(&q.0));
    out.into_iter().unzip()
}

/// Γ(m/2) for a positive integer m.
fn half_gamma(m: f64) -> f64 {
    let mut v = if (m as u64).is_multiple_of(2) { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut x = if (m as u64).is_multiple_of(2) { 1.0 } else { 0.5 };
    while x < m / 2.0 - 1e-9 {
        v *= x;
        x += 1.0;
    }
    v
}

/// Nodes and weights on one axis of [lo, hi].
pub fn axis_rule<T: Real>(lo: T, hi: T, periodic: bool, nodes: usize, cells: usize) -> (Vec<T>, Vec<T>) {
    let width = hi - lo;
    if QuadratureGrid::rule(periodic) == Rule::Trapezoid {
        let h = width / cn::<T>(nodes);
        let x = (0..nodes).map(|k| lo + h * cn::<T>(k)).collect();
        return (x, vec![h; nodes]);
    }
    let (gx, gw) = gauss_legendre(nodes);
    let cw = width / cn::<T>(cells);
    let half = cw * c::<T>(0.5);
    let mut x = Vec::with_capacity(nodes * cells);
    let mut w = Vec::with_capacity(nodes * cells);
    for k in 0..cells {
        let mid = lo + cw * cn::<T>(k) + half;
        for (a, b) in gx.iter().zip(&gw) {
            x.push(mid + half * c::<T>(*a));
            w.push(half * c::<T>(*b));
        }
    }
    (x, w)
}

/// Σ f(i) over `0..n` as a fixed binary tree of partial sums: the split
/// points depend only on `n`, so the result does not depend on thread count.
pub fn pairwise_sum<T: Real>(n: usize, ncomp: usize, f: &(dyn Fn(usize) -> Result<Vec<T>> + Sync)) -> Result<Vec<T>> {
    tree_reduce(n, &|| vec![T::zero(); ncomp], f, &|mut a: Vec<T>, b: Vec<T>| {
        for (x, y) in a.iter_mut().zip(b) {
            *x += y;
        }
        a
    })
}

const LEAF: usize = 512;

/// Fold of `map(i)` over `0..n` with an associative `combine`, on a fixed tree.
/// On error the leftmost failing leaf wins.
pub fn tree_reduce<A, Z, M, C>(n: usize, zero: &Z, map: &M, combine: &C) -> Result<A>
where
    A: Send,
    Z: Fn() -> A + Sync + ?Sized,
    M: Fn(usize) -> Result<A> + Sync + ?Sized,
    C: Fn(A, A) -> A + Sync + ?Sized,
{
    reduce(0, n, zero, map, combine)
}

fn reduce<A, Z, M, C>(lo: usize, hi: usize, zero: &Z, map: &M, combine: &C) -> Result<A>
where
    A: Send,
    Z: Fn() -> A + Sync + ?Sized,
    M: Fn(usize) -> Result<A> + Sync + ?Sized,
    C: Fn(A, A) -> A + Sync + ?Sized,
{
    if hi - lo <= LEAF {
        let mut acc = zero();
        for i in lo..hi {
            acc = combine(acc, map(i)?);
        }
        return Ok(acc);
    }
    let mid = lo + (hi - lo) / 2;
    let (a, b) = rayon::join(|| reduce(lo, mid, zero, map, combine), || reduce(mid, hi, zero, map, combine));
    Ok(combine(a?, b?))
}
