use std::fmt;
use std::sync::Arc;

use crate::error::{GeomError, Result};
use crate::jet::{Jet, MAX_ORDER};
use crate::linalg;
use crate::scalar::{c, to_f64, Real};

/// Metric components as functions of coordinate jets, row-major `n×n`.
pub type MetricFn<T> = Arc<dyn Fn(&[Jet<T>]) -> Vec<Jet<T>> + Send + Sync>;
/// Scalar field evaluable in jet arithmetic.
pub type ScalarFn<T> = Arc<dyn Fn(&[Jet<T>]) -> Jet<T> + Send + Sync>;
/// Vector-valued map evaluable in jet arithmetic.
pub type MapFn<T> = Arc<dyn Fn(&[Jet<T>]) -> Vec<Jet<T>> + Send + Sync>;

/// Wraps a closure as a [`ScalarFn`].
pub fn scalar_fn<T: Real>(f: impl Fn(&[Jet<T>]) -> Jet<T> + Send + Sync + 'static) -> ScalarFn<T> {
    Arc::new(f)
}

/// Axis-aligned coordinate box with optional periodic axes.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub periodic: Vec<bool>,
}

impl<T: Real> Domain<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>, periodic: Vec<bool>) -> Domain<T> {
        assert_eq!(lower.len(), upper.len());
        assert_eq!(lower.len(), periodic.len());
        Domain { lower, upper, periodic }
    }

    pub fn cube(n: usize, lo: T, hi: T) -> Domain<T> {
        Domain::new(vec![lo; n], vec![hi; n], vec![false; n])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn width(&self, axis: usize) -> T {
        self.upper[axis] - self.lower[axis]
    }

    /// Checks `x` against the box and wraps periodic axes into `[lo, hi)`.
    pub fn normalize(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.dim() {
            return Err(GeomError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        let mut out = x.to_vec();
        for (a, v) in out.iter_mut().enumerate() {
            let (lo, hi) = (self.lower[a], self.upper[a]);
            if !v.is_finite() {
                return Err(outside(a, *v, lo, hi));
            }
            if self.periodic[a] {
                let w = hi - lo;
                let k = ((*v - lo) / w).floor();
                *v = *v - k * w;
                if *v >= hi {
                    *v = lo;
                }
            } else {
                let slack = c::<T>(1e-12) * (T::one() + w_abs(lo, hi));
                if *v < lo - slack || *v > hi + slack {
                    return Err(outside(a, *v, lo, hi));
                }
            }
        }
        Ok(out)
    }

    pub fn contains(&self, x: &[T]) -> bool {
        self.normalize(x).is_ok()
    }
}

fn w_abs<T: Real>(lo: T, hi: T) -> T {
    lo.abs().max(hi.abs())
}

fn outside<T: Real>(axis: usize, v: T, lo: T, hi: T) -> GeomError {
    GeomError::OutsideDomain { axis, value: to_f64(v), lo: to_f64(lo), hi: to_f64(hi) }
}

/// Isometric or conformal placement of the chart in an ambient Euclidean space.
#[derive(Clone)]
pub struct Embedding<T> {
    pub ambient_dim: usize,
    pub map: MapFn<T>,
}

/// An `n`-dimensional coordinate chart carrying an analytic metric.
#[derive(Clone)]
pub struct MetricChart<T> {
    name: String,
    domain: Domain<T>,
    metric: MetricFn<T>,
    embedding: Option<Embedding<T>>,
    injectivity_guard: T,
}

impl<T: Real> fmt::Debug for MetricChart<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricChart")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("domain", &self.domain)
            .finish()
    }
}

impl<T: Real> MetricChart<T> {
    pub fn new(name: impl Into<String>, domain: Domain<T>, metric: MetricFn<T>) -> MetricChart<T> {
        MetricChart { name: name.into(), domain, metric, embedding: None, injectivity_guard: T::infinity() }
    }

    pub fn with_embedding(mut self, ambient_dim: usize, map: MapFn<T>) -> MetricChart<T> {
        self.embedding = Some(Embedding { ambient_dim, map });
        self
    }

    pub fn with_injectivity_guard(mut self, r: T) -> MetricChart<T> {
        self.injectivity_guard = r;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> MetricChart<T> {
        self.name = name.into();
        self
    }

    pub fn with_domain(mut self, domain: Domain<T>) -> MetricChart<T> {
        assert_eq!(domain.dim(), self.dim());
        self.domain = domain;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &Domain<T> {
        &self.domain
    }

    pub fn metric_fn(&self) -> &MetricFn<T> {
        &self.metric
    }

    pub fn embedding(&self) -> Option<&Embedding<T>> {
        self.embedding.as_ref()
    }

    pub fn injectivity_guard(&self) -> T {
        self.injectivity_guard
    }

    /// Metric components evaluated on caller-supplied coordinate jets.
    pub fn eval_jets(&self, vars: &[Jet<T>]) -> Vec<Jet<T>> {
        (self.metric)(vars)
    }

    /// Metric component jets at `x` up to the given order.
    pub fn metric_jet(&self, x: &[T], order: usize) -> Result<Vec<Jet<T>>> {
        if order > MAX_ORDER {
            return Err(GeomError::OrderTooHigh(order));
        }
        let x = self.domain.normalize(x)?;
        let vars = Jet::variables(&x, order)?;
        Ok((self.metric)(&vars))
    }

    /// Plain metric values at `x`, row-major.
    pub fn metric_at(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(self.metric_jet(x, 0)?.iter().map(|j| j.value()).collect())
    }

    /// Ambient image of `x` under the embedding.
    pub fn embed(&self, x: &[T]) -> Option<Vec<T>> {
        let e = self.embedding.as_ref()?;
        let x = self.domain.normalize(x).ok()?;
        let vars = Jet::variables(&x, 0).ok()?;
        Some((e.map)(&vars).iter().map(|j| j.value()).collect())
    }

    /// Rescales the metric by the constant `s` (g ↦ s·g).
    pub fn scaled(&self, s: T) -> MetricChart<T> {
        let inner = self.metric.clone();
        let metric: MetricFn<T> = Arc::new(move |x| inner(x).into_iter().map(|j| j * s).collect());
        let sq = s.sqrt();
        let embedding = self.embedding.as_ref().map(|e| {
            let m = e.map.clone();
            Embedding {
                ambient_dim: e.ambient_dim,
                map: Arc::new(move |x: &[Jet<T>]| m(x).into_iter().map(|j| j * sq).collect()) as MapFn<T>,
            }
        });
        MetricChart {
            name: format!("{}*{}", self.name, s),
            domain: self.domain.clone(),
            metric,
            embedding,
            injectivity_guard: self.injectivity_guard * sq,
        }
    }

    /// Verifies symmetry, positive definiteness and periodic matching at the given points.
    pub fn check_invariants(&self, points: &[Vec<T>]) -> Result<()> {
        let n = self.dim();
        for x in points {
            let g = self.metric_at(x)?;
            check_metric(&g, n)?;
            for a in 0..n {
                if !self.domain.periodic[a] {
                    continue;
                }
                let mut lo = x.clone();
                lo[a] = self.domain.lower[a];
                let mut hi = x.clone();
                hi[a] = self.domain.upper[a];
                let glo = (self.metric)(&Jet::variables(&lo, 0)?);
                let ghi = (self.metric)(&Jet::variables(&hi, 0)?);
                for (p, q) in glo.iter().zip(&ghi) {
                    let d = (p.value() - q.value()).abs();
                    if d > c::<T>(1e-12) * (T::one() + p.value().abs()) {
                        return Err(GeomError::Precondition(format!(
                            "metric '{}' does not match across periodic axis {a} (diff {:e})",
                            self.name,
                            to_f64(d)
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Symmetry and nondegeneracy check on plain metric values.
pub fn check_metric<T: Real>(g: &[T], n: usize) -> Result<()> {
    let mut scale = T::zero();
    for v in g {
        scale = scale.max(v.abs());
    }
    for i in 0..n {
        for j in 0..i {
            let d = (g[i * n + j] - g[j * n + i]).abs();
            if d > c::<T>(1e-12) * (T::one() + scale) {
                return Err(GeomError::Precondition(format!("metric not symmetric at ({i},{j})")));
            }
        }
    }
    if linalg::cholesky(g, n).is_some() {
        // Gershgorin bounds settle the well-conditioned case without an eigensolve.
        let mut lower = T::infinity();
        let mut upper = T::zero();
        for i in 0..n {
            let off: T = (0..n).filter(|&j| j != i).map(|j| g[i * n + j].abs()).sum();
            lower = lower.min(g[i * n + i] - off);
            upper = upper.max(g[i * n + i] + off);
        }
        if lower > c::<T>(1e-10) * upper {
            return Ok(());
        }
        let (vals, _) = linalg::symmetric_eigen(g, n);
        let (max, min) = (vals[0], vals[n - 1]);
        if min > c::<T>(1e-10) * max {
            return Ok(());
        }
        return Err(GeomError::SingularMetric { min_eig: to_f64(min), max_eig: to_f64(max) });
    }
    let (vals, _) = linalg::symmetric_eigen(g, n);
    Err(GeomError::SingularMetric { min_eig: to_f64(vals[n - 1]), max_eig: to_f64(vals[0]) })
}

/// Metric component jets of `chart` at `x`.
pub fn metric_jet<T: Real>(chart: &MetricChart<T>, x: &[T], order: usize) -> Result<Vec<Jet<T>>> {
    chart.metric_jet(x, order)
}
