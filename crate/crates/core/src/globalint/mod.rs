//! Quadrature over atlases and the global curvature integrals built on it.

mod atlas;
mod descent;
mod functionals;
mod quadrature;

pub use atlas::{Atlas, AtlasChart, LocateFn, WeightFn};
pub use descent::{yamabe_descent, DescentOptions, DescentStep, DescentTrajectory};
pub use functionals::{
    conformal_volume_check, hilbert_einstein, holder_check, l_halfpower, rayleigh_lambda, sobolev_check,
    yamabe_quotient, ConformalVolumeReport, HolderReport, SobolevReport,
};
pub use quadrature::{axis_rule, gauss_gegenbauer, gauss_legendre, pairwise_sum, tree_reduce, default_nodes, QuadratureGrid, Rule};

use crate::error::{GeomError, Result};
use crate::jet::Jet;
use crate::linalg;
use crate::scalar::{c, to_f64, Real};
use crate::tensorcore::{curvature_at, ricci_derivatives, weyl_pm_from_frame, CurvaturePoint, ScalarFn};

/// A quadrature node: chart index, coordinates and the combined
/// quadrature × partition weight (without the volume element).
pub struct Node<'a, T> {
    pub chart: usize,
    pub atlas_chart: &'a AtlasChart<T>,
    pub x: Vec<T>,
    pub weight: T,
}

struct ChartRule<T> {
    axes: Vec<(Vec<T>, Vec<T>)>,
    count: usize,
}

struct Plan<T> {
    rules: Vec<ChartRule<T>>,
    offsets: Vec<usize>,
    total: usize,
}

fn plan<T: Real>(atlas: &Atlas<T>, grid: &QuadratureGrid) -> Result<Plan<T>> {
    let n = atlas.dim();
    if grid.dim() != n {
        return Err(GeomError::DimensionMismatch { expected: n, got: grid.dim() });
    }
    let mut rules = Vec::new();
    let mut offsets = Vec::new();
    let mut total = 0;
    for ac in &atlas.charts {
        let r = &ac.region;
        let axes: Vec<(Vec<T>, Vec<T>)> =
            (0..n).map(|a| axis_rule(r.lower[a], r.upper[a], r.periodic[a], grid.nodes[a], grid.cells[a])).collect();
        let count = axes.iter().map(|(x, _)| x.len()).product();
        offsets.push(total);
        total += count;
        rules.push(ChartRule { axes, count });
    }
    Ok(Plan { rules, offsets, total })
}

impl<T: Real> Plan<T> {
    fn node<'a>(&self, atlas: &'a Atlas<T>, i: usize) -> Node<'a, T> {
        let chart = self.offsets.partition_point(|&o| o <= i) - 1;
        let rule = &self.rules[chart];
        let mut k = i - self.offsets[chart];
        let n = rule.axes.len();
        let mut x = vec![T::zero(); n];
        let mut w = T::one();
        for a in (0..n).rev() {
            let (xs, ws) = &rule.axes[a];
            let j = k % xs.len();
            k /= xs.len();
            x[a] = xs[j];
            w *= ws[j];
        }
        let ac = &atlas.charts[chart];
        let weight = if ac.weight.is_some() { w * ac.weight_at(&x) } else { w };
        Node { chart, atlas_chart: ac, x, weight }
    }
}

/// Number of quadrature nodes of `grid` on `atlas`.
pub fn node_count<T: Real>(atlas: &Atlas<T>, grid: &QuadratureGrid) -> Result<usize> {
    Ok(plan(atlas, grid)?.rules.iter().map(|r| r.count).sum())
}

/// √det g at a chart point.
pub fn volume_element<T: Real>(g: &[T], n: usize) -> Result<T> {
    let l = linalg::cholesky(g, n).ok_or(GeomError::SingularMetric { min_eig: 0.0, max_eig: 0.0 })?;
    Ok((0..n).map(|i| l[i * n + i]).fold(T::one(), |a, b| a * b))
}

/// ∫ f dμ_g for a vector of `ncomp` densities; `f` sees each node with
/// nonzero weight. Deterministic pairwise reduction.
pub fn integrate<T, F>(atlas: &Atlas<T>, grid: &QuadratureGrid, ncomp: usize, f: F) -> Result<Vec<T>>
where
    T: Real,
    F: Fn(&Node<T>) -> Result<Vec<T>> + Sync,
{
    let p = plan(atlas, grid)?;
    let n = atlas.dim();
    pairwise_sum(p.total, ncomp, &|i| {
        let node = p.node(atlas, i);
        if node.weight == T::zero() {
            return Ok(vec![T::zero(); ncomp]);
        }
        let vol = volume_element(&node.atlas_chart.chart.metric_at(&node.x)?, n)?;
        let s = node.weight * vol;
        Ok(f(&node)?.into_iter().map(|v| v * s).collect())
    })
}

/// Per-node data with the full weight (quadrature × partition × √det g).
pub struct NodeSample<T> {
    pub chart: usize,
    pub x: Vec<T>,
    pub weight: T,
}

/// Materialized nodes with nonzero weight, in plan order.
pub fn collect_nodes<T: Real>(atlas: &Atlas<T>, grid: &QuadratureGrid) -> Result<Vec<NodeSample<T>>> {
    let p = plan(atlas, grid)?;
    let n = atlas.dim();
    let mut out = Vec::new();
    for i in 0..p.total {
        let node = p.node(atlas, i);
        if node.weight == T::zero() {
            continue;
        }
        let vol = volume_element(&node.atlas_chart.chart.metric_at(&node.x)?, n)?;
        out.push(NodeSample { chart: node.chart, x: node.x, weight: node.weight * vol });
    }
    Ok(out)
}

pub fn volume<T: Real>(atlas: &Atlas<T>, grid: &QuadratureGrid) -> Result<T> {
    Ok(integrate(atlas, grid, 1, |_| Ok(vec![T::one()]))?[0])
}

/// ∫ f dμ for a global field `f` (ambient or chart coordinates per the atlas).
pub fn integrate_field<T: Real>(atlas: &Atlas<T>, grid: &QuadratureGrid, f: &ScalarFn<T>) -> Result<T> {
    let pulled: Vec<ScalarFn<T>> = (0..atlas.charts.len()).map(|i| atlas.field_on(i, f)).collect();
    Ok(integrate(atlas, grid, 1, |node| Ok(vec![eval_plain(&pulled[node.chart], &node.x)?]))?[0])
}

pub(crate) fn eval_plain<T: Real>(f: &ScalarFn<T>, x: &[T]) -> Result<T> {
    Ok(f(&Jet::variables(x, 0)?).value())
}

fn require_closed<T: Real>(atlas: &Atlas<T>) -> Result<()> {
    if atlas.closed {
        Ok(())
    } else {
        Err(GeomError::NotClosed)
    }
}

fn require_dim<T: Real>(atlas: &Atlas<T>, n: usize) -> Result<()> {
    if atlas.dim() != n {
        return Err(GeomError::DimensionMismatch { expected: n, got: atlas.dim() });
    }
    Ok(())
}

fn pi2<T: Real>() -> T {
    T::PI() * T::PI()
}

/// Terms of 32π²χ = (1/6)∫Sc² − 2∫|Ring|² + ∫|W|².
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gbc4<T> {
    pub scal2_term: T,
    pub ricci_term: T,
    pub weyl_term: T,
    pub total: T,
    pub chi_estimate: T,
    pub volume: T,
}

pub fn gbc4<T: Real>(atlas: &Atlas<T>, grid: &QuadratureGrid) -> Result<Gbc4<T>> {
    require_closed(atlas)?;
    require_dim(atlas, 4)?;
    let v = integrate(atlas, grid, 4, |node| {
        let cp = curvature_at(&node.atlas_chart.chart, &node.x)?;
        Ok(vec![cp.scalar * cp.scalar, cp.norms.ring2, cp.norms.w2, T::one()])
    })?;
    let scal2_term = v[0] / c::<T>(6.0);
    let ricci_term = -c::<T>(2.0) * v[1];
    let weyl_term = v[2];
    let total = scal2_term + ricci_term + weyl_term;
    Ok(Gbc4 { scal2_term, ricci_term, weyl_term, total, chi_estimate: total / (c::<T>(32.0) * pi2()), volume: v[3] })
}

/// Pointwise 4D Gauss–Bonnet–Chern density (1/6)Sc² − 2|Ring|² + |W|².
pub fn gbc4_density<T: Real>(cp: &CurvaturePoint<T>) -> T {
    cp.scalar * cp.scalar / c::<T>(6.0) - c::<T>(2.0) * cp.norms.ring2 + cp.norms.w2
}

/// Terms of 64π³χ = (1/225)∫Sc³ − (1/10)∫Sc|Ring|² + (1/4)∫tr(Ring³) for LCF metrics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gbc6<T> {
    pub sc3_term: T,
    pub sc_ring_term: T,
    pub ring3_term: T,
    pub total: T,
    pub chi_estimate: T,
    pub volume: T,
    /// Largest |W|² seen at a node (the LCF precondition).
    pub max_weyl2: T,
}

/// Default LCF tolerance on |W|² at the nodes.
pub const LCF_TOLERANCE: f64 = 1e-6;

type Worst<T> = (T, usize);

fn worst_combine<T: Real>(a: Worst<T>, b: Worst<T>) -> Worst<T> {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// Sums plus the node with the largest `check` value.
fn integrate_tracking<T, F>(atlas: &Atlas<T>, grid: &QuadratureGrid, ncomp: usize, f: F) -> Result<(Vec<T>, Worst<T>, Plan<T>)>
where
    T: Real,
    F: Fn(&Node<T>) -> Result<(Vec<T>, T)> + Sync,
{
    let p = plan(atlas, grid)?;
    let n = atlas.dim();
    let zero = || (vec![T::zero(); ncomp], (T::neg_infinity(), usize::MAX));
    let (sums, worst) = tree_reduce(
        p.total,
        &zero,
        &|i| {
            let node = p.node(atlas, i);
            if node.weight == T::zero() {
                return Ok(zero());
            }
            let vol = volume_element(&node.atlas_chart.chart.metric_at(&node.x)?, n)?;
            let (vals, check) = f(&node)?;
            let s = node.weight * vol;
            Ok((vals.into_iter().map(|v| v * s).collect(), (check, i)))
        },
        &|(mut a, wa), (b, wb)| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            (a, worst_combine(wa, wb))
        },
    )?;
    Ok((sums, worst, p))
}

fn lcf_error<T: Real>(atlas: &Atlas<T>, p: &Plan<T>, worst: Worst<T>) -> GeomError {
    let node = p.node(atlas, worst.1);
    GeomError::Precondition(format!(
        "metric is not locally conformally flat: |W|^2 = {:.3e} at chart {} point {:?}",
        to_f64(worst.0),
        node.chart,
        node.x.iter().map(|v| to_f64(*v)).collect::<Vec<_>>()
    ))
}

pub fn gbc6<T: Real>(atlas: &Atlas<T>, grid: &QuadratureGrid) -> Result<Gbc6<T>> {
    require_closed(atlas)?;
    require_dim(atlas, 6)?;
    let (v, worst, p) = integrate_tracking(atlas, grid, 4, |node| {
        let cp = curvature_at(&node.atlas_chart.chart, &node.x)?;
        let sc = cp.scalar;
        Ok((vec![sc * sc * sc, sc * cp.norms.ring2, cp.tr_ring3(), T::one()], cp.norms.w2))
    })?;
    if worst.0 > c(LCF_TOLERANCE) {
        return Err(lcf_error(atlas, &p, worst));
    }
    let sc3_term = v[0] / c::<T>(225.0);
    let sc_ring_term = -v[1] / c::<T>(10.0);
    let ring3_term = v[2] / c::<T>(4.0);
    let total = sc3_term + sc_ring_term + ring3_term;
    Ok(Gbc6 {
        sc3_term,
        sc_ring_term,
        ring3_term,
        total,
        chi_estimate: total / (c::<T>(64.0) * pi2::<T>() * T::PI()),
        volume: v[3],
        max_weyl2: worst.0.max(T::zero()),
    })
}

/// Both sides of ∫|∇Ring|² = (2/15)∫|∇Sc|² − (3/2)∫tr(Ring³) − (1/5)∫Sc|Ring|².
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GurskyTerms<T> {
    pub grad_ring: T,
    pub grad_scalar: T,
    pub ring3: T,
    pub sc_ring2: T,
    pub lhs: T,
    pub rhs: T,
    /// |lhs − rhs| / max(1, |lhs|).
    pub residual: T,
}

pub fn gursky_identity<T: Real>(atlas: &Atlas<T>, grid: &QuadratureGrid) -> Result<GurskyTerms<T>> {
    require_closed(atlas)?;
    require_dim(atlas, 6)?;
    let (v, worst, p) = integrate_tracking(atlas, grid, 4, |node| {
        let chart = &node.atlas_chart.chart;
        let cp = curvature_at(chart, &node.x)?;
        let rd = ricci_derivatives(chart, &node.x)?;
        Ok((vec![rd.grad_ring2(&cp.metric), rd.grad_scalar2(), cp.tr_ring3(), cp.scalar * cp.norms.ring2], cp.norms.w2))
    })?;
    if worst.0 > c(LCF_TOLERANCE) {
        return Err(lcf_error(atlas, &p, worst));
    }
    let lhs = v[0];
    let rhs = c::<T>(2.0 / 15.0) * v[1] - c::<T>(1.5) * v[2] - c::<T>(0.2) * v[3];
    let residual = (lhs - rhs).abs() / lhs.abs().max(T::one());
    Ok(GurskyTerms { grad_ring: v[0], grad_scalar: v[1], ring3: v[2], sc_ring2: v[3], lhs, rhs, residual })
}

/// Gursky residual |lhs − rhs| / max(1, |lhs|).
pub fn gursky_identity_residual<T: Real>(atlas: &Atlas<T>, grid: &QuadratureGrid) -> Result<T> {
    Ok(gursky_identity(atlas, grid)?.residual)
}

/// τ = (1/48π²)∫(|W⁺|² − |W⁻|²) with each chart's orientation sign.
pub fn signature_integral<T: Real>(atlas: &Atlas<T>, grid: &QuadratureGrid) -> Result<T> {
    require_closed(atlas)?;
    require_dim(atlas, 4)?;
    let v = integrate(atlas, grid, 1, |node| {
        let cp = curvature_at(&node.atlas_chart.chart, &node.x)?;
        let (p, m) = weyl_pm_from_frame(&cp.weyl_frame, node.atlas_chart.orientation);
        Ok(vec![p - m])
    })?;
    Ok(v[0] / (c::<T>(48.0) * pi2()))
}
