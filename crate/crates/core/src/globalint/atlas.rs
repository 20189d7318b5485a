//! Chart atlases with partition-of-unity weights.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{GeomError, Result};
use crate::jet::Jet;
use crate::linalg;
use crate::scalar::{c, to_f64, Real};
use crate::tensorcore::catalog::{self, Pole};
use crate::tensorcore::{Domain, MetricChart, ScalarFn};

/// Partition weight as a function of chart coordinates.
pub type WeightFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
/// Chart coordinates of an ambient point, if the chart's region contains it.
pub type LocateFn<T> = Arc<dyn Fn(&[T]) -> Option<Vec<T>> + Send + Sync>;

#[derive(Clone)]
pub struct AtlasChart<T> {
    pub chart: MetricChart<T>,
    /// Integration box (a sub-box of the chart domain).
    pub region: Domain<T>,
    /// Partition weight; `None` means the region tiles the manifold with weight 1.
    pub weight: Option<WeightFn<T>>,
    /// ±1 relative to a global orientation.
    pub orientation: T,
    pub locate: Option<LocateFn<T>>,
}

impl<T: Real> AtlasChart<T> {
    pub fn whole(chart: MetricChart<T>) -> AtlasChart<T> {
        AtlasChart { region: chart.domain().clone(), chart, weight: None, orientation: T::one(), locate: None }
    }

    pub fn weight_at(&self, x: &[T]) -> T {
        self.weight.as_ref().map_or(T::one(), |w| w(x))
    }
}

/// Charts covering a manifold, with a closedness flag and, when every chart
/// has an embedding, ambient coordinates for global fields.
#[derive(Clone)]
pub struct Atlas<T> {
    pub name: String,
    pub charts: Vec<AtlasChart<T>>,
    pub closed: bool,
    /// Global fields take embedding coordinates instead of chart coordinates.
    pub ambient: bool,
}

impl<T: Real> Atlas<T> {
    pub fn new(name: impl Into<String>, charts: Vec<AtlasChart<T>>, closed: bool) -> Result<Atlas<T>> {
        let name = name.into();
        let dim = charts.first().ok_or_else(|| GeomError::InvalidParameter("empty atlas".into()))?.chart.dim();
        if let Some(bad) = charts.iter().find(|c| c.chart.dim() != dim || c.region.dim() != dim) {
            return Err(GeomError::DimensionMismatch { expected: dim, got: bad.chart.dim() });
        }
        let ambient = charts.iter().all(|c| c.chart.embedding().is_some());
        Ok(Atlas { name, charts, closed, ambient })
    }

    /// A single chart; global fields use chart coordinates.
    pub fn single(chart: MetricChart<T>, closed: bool) -> Atlas<T> {
        let name = chart.name().to_string();
        Atlas { name, charts: vec![AtlasChart::whole(chart)], closed, ambient: false }
    }

    pub fn dim(&self) -> usize {
        self.charts[0].chart.dim()
    }

    /// A global field pulled back to chart `i` (ambient coordinates when available).
    pub fn field_on(&self, i: usize, f: &ScalarFn<T>) -> ScalarFn<T> {
        let f = f.clone();
        match self.charts[i].chart.embedding() {
            Some(e) if self.ambient => {
                let map = e.map.clone();
                Arc::new(move |x: &[Jet<T>]| f(&map(x)))
            }
            _ => f,
        }
    }

    /// Global coordinates of a chart point.
    pub fn global_point(&self, i: usize, x: &[T]) -> Vec<T> {
        if self.ambient {
            self.charts[i].chart.embed(x).unwrap_or_else(|| x.to_vec())
        } else {
            x.to_vec()
        }
    }

    /// Applies `f` to every chart, keeping regions, weights and orientation.
    pub fn map_charts(&self, name: impl Into<String>, f: impl Fn(usize, &MetricChart<T>) -> Result<MetricChart<T>>) -> Result<Atlas<T>> {
        let charts = self
            .charts
            .iter()
            .enumerate()
            .map(|(i, ac)| Ok(AtlasChart { chart: f(i, &ac.chart)?, ..ac.clone() }))
            .collect::<Result<Vec<_>>>()?;
        Ok(Atlas { name: name.into(), charts, closed: self.closed, ambient: self.ambient })
    }

    /// Homothety g → s·g on every chart.
    pub fn scaled(&self, s: T) -> Atlas<T> {
        self.map_charts(format!("{}*{}", self.name, s), |_, ch| Ok(ch.scaled(s))).expect("scaling cannot fail")
    }

    /// Max |Σ weights − 1| over `samples` random ambient points of a sphere atlas.
    pub fn partition_residual(&self, radius: T, samples: usize, seed: u64) -> Result<T> {
        let n = self.dim();
        if !self.ambient || self.charts.iter().any(|c| c.locate.is_none()) {
            return Ok(T::zero());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = T::zero();
        for _ in 0..samples {
            let v: Vec<f64> = (0..=n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            let y: Vec<T> = v.iter().map(|a| radius * c::<T>(a / norm)).collect();
            let mut sum = T::zero();
            for ac in &self.charts {
                if let Some(x) = (ac.locate.as_ref().unwrap())(&y) {
                    sum += ac.weight_at(&x);
                }
            }
            worst = worst.max((sum - T::one()).abs());
        }
        Ok(worst)
    }

    /// Errors with [`GeomError::Partition`] if weights fail to sum to one.
    pub fn check_partition(&self, radius: T, samples: usize, seed: u64) -> Result<()> {
        let r = self.partition_residual(radius, samples, seed)?;
        if r > c(1e-10) {
            return Err(GeomError::Partition { sample: samples, sum: 1.0 + to_f64(r) });
        }
        Ok(())
    }

    /// Cubed-sphere atlas: 2(n+1) gnomonic faces tiling Sⁿ(R).
    pub fn cubed_sphere(n: usize, radius: T) -> Result<Atlas<T>> {
        let mut charts = Vec::new();
        for axis in 0..=n {
            for positive in [true, false] {
                let chart = catalog::sphere_gnomonic(n, radius, axis, positive)?;
                let sign = if positive { T::one() } else { -T::one() };
                let locate: LocateFn<T> = Arc::new(move |y: &[T]| {
                    let (mut best, mut arg) = (T::neg_infinity(), 0);
                    for (a, v) in y.iter().enumerate() {
                        if v.abs() > best {
                            best = v.abs();
                            arg = a;
                        }
                    }
                    if arg != axis || y[axis] * sign <= T::zero() {
                        return None;
                    }
                    let d = y[axis].abs();
                    Some(y.iter().enumerate().filter(|&(a, _)| a != axis).map(|(_, v)| *v / d).collect())
                });
                let orientation = embedded_orientation(&chart);
                charts.push(AtlasChart { region: chart.domain().clone(), chart, weight: None, orientation, locate: Some(locate) });
            }
        }
        Atlas::new(format!("cubed_sphere({n},{radius})"), charts, true)
    }

    /// Two stereographic charts with a smooth partition of unity whose
    /// transition band is `r ∈ [0.8, 1.25]` in chart radius.
    pub fn stereographic_pair(n: usize, radius: T) -> Result<Atlas<T>> {
        let hw = c::<T>(BAND_OUTER);
        let mut charts = Vec::new();
        for pole in [Pole::North, Pole::South] {
            let chart = catalog::stereographic_chart(n, radius, pole, hw)?;
            let sign = if pole == Pole::North { T::one() } else { -T::one() };
            let weight: WeightFn<T> = Arc::new(|x: &[T]| {
                let r = x.iter().map(|v| *v * *v).sum::<T>().sqrt();
                pair_weight(r)
            });
            let locate: LocateFn<T> = Arc::new(move |y: &[T]| {
                let d = radius - sign * y[n];
                if d <= T::zero() {
                    return None;
                }
                let x: Vec<T> = y[..n].iter().map(|v| *v / d).collect();
                if x.iter().all(|v| v.abs() <= hw) {
                    Some(x)
                } else {
                    None
                }
            });
            let orientation = embedded_orientation(&chart);
            charts.push(AtlasChart { region: chart.domain().clone(), chart, weight: Some(weight), orientation, locate: Some(locate) });
        }
        Atlas::new(format!("stereographic_pair({n},{radius})"), charts, true)
    }

    /// Single hyperspherical chart (measure-zero coordinate singularities).
    pub fn polar_sphere(n: usize, radius: T) -> Result<Atlas<T>> {
        Atlas::new(format!("polar_sphere({n},{radius})"), vec![AtlasChart::whole(catalog::sphere_polar(n, radius)?)], true)
    }

    pub fn flat_torus(n: usize) -> Atlas<T> {
        Atlas::single(catalog::flat_torus(n), true)
    }

    /// Heisenberg nilmanifold on its fundamental box; integrands must be
    /// invariant under the lattice (functions of x, y periodic in both).
    pub fn nil3() -> Atlas<T> {
        Atlas::single(catalog::nil3(), true)
    }

    /// Product atlas with pairwise product charts and weights.
    pub fn product(a: &Atlas<T>, b: &Atlas<T>) -> Result<Atlas<T>> {
        let mut charts = Vec::new();
        let na = a.dim();
        for ca in &a.charts {
            for cb in &b.charts {
                let chart = catalog::product(&ca.chart, &cb.chart);
                let region = Domain::new(
                    [ca.region.lower.clone(), cb.region.lower.clone()].concat(),
                    [ca.region.upper.clone(), cb.region.upper.clone()].concat(),
                    [ca.region.periodic.clone(), cb.region.periodic.clone()].concat(),
                );
                let weight: Option<WeightFn<T>> = match (&ca.weight, &cb.weight) {
                    (None, None) => None,
                    (wa, wb) => {
                        let (wa, wb) = (wa.clone(), wb.clone());
                        Some(Arc::new(move |x: &[T]| {
                            wa.as_ref().map_or(T::one(), |w| w(&x[..na])) * wb.as_ref().map_or(T::one(), |w| w(&x[na..]))
                        }))
                    }
                };
                charts.push(AtlasChart { chart, region, weight, orientation: ca.orientation * cb.orientation, locate: None });
            }
        }
        let mut out = Atlas::new(format!("{}x{}", a.name, b.name), charts, a.closed && b.closed)?;
        out.ambient = a.ambient && b.ambient;
        Ok(out)
    }
}

const BAND_INNER: f64 = 0.8;
const BAND_OUTER: f64 = 1.25;

fn smooth_step<T: Real>(t: T) -> T {
    if t <= T::zero() {
        T::zero()
    } else {
        (-t.recip()).exp()
    }
}

/// 1 for r ≤ 0.8, 0 for r ≥ 1.25, smooth in between.
fn bump<T: Real>(r: T) -> T {
    let a = smooth_step(c::<T>(BAND_OUTER) - r);
    let b = smooth_step(r - c::<T>(BAND_INNER));
    a / (a + b)
}

/// Weight of a stereographic chart; the other chart sees radius 1/r.
fn pair_weight<T: Real>(r: T) -> T {
    let b = bump(r);
    if b == T::zero() {
        return T::zero();
    }
    let other = if r > T::zero() { bump(r.recip()) } else { T::zero() };
    b / (b + other)
}

/// Sign of det[y, ∂₁y, …, ∂ₙy] at the chart center (outward normal first).
fn embedded_orientation<T: Real>(chart: &MetricChart<T>) -> T {
    let n = chart.dim();
    let Some(e) = chart.embedding() else { return T::one() };
    if e.ambient_dim != n + 1 {
        return T::one();
    }
    let d = chart.domain();
    let x0: Vec<T> = (0..n).map(|a| d.lower[a] + d.width(a) * c::<T>(0.5)).collect();
    let Ok(vars) = Jet::variables(&x0, 1) else { return T::one() };
    let y = (e.map)(&vars);
    let m = n + 1;
    let mut mat = vec![T::zero(); m * m];
    for (r, yr) in y.iter().enumerate() {
        mat[r * m] = yr.value();
        for a in 0..n {
            mat[r * m + a + 1] = yr.partial(&[a]);
        }
    }
    linalg::determinant(&mat, m).signum()
}
