//! Conformal rescalings, the scalar-curvature law, the Yamabe operator and
//! explicit conformal maps between model spaces.

use std::sync::Arc;

use crate::error::{GeomError, Result};
use crate::globalint::{self, Atlas, QuadratureGrid};
use crate::jet::Jet;
use crate::sampling::interior_points;
use crate::scalar::{c, cn, to_f64, Real};
use crate::tensorcore::catalog::{self, Pole};
use crate::tensorcore::{curvature_at, gradient_norm2, scalar_laplacian, Domain, MapFn, MetricChart, MetricFn, ScalarFn};

/// Distance to a removed set below which a map refuses to evaluate.
pub const REMOVED_SET_GUARD: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactorForm {
    /// g' = e^{2f} g
    Exponential,
    /// g' = u^{4/(n−2)} g
    Power,
}

#[derive(Clone)]
pub struct ConformalFactor<T> {
    pub form: FactorForm,
    pub field: ScalarFn<T>,
    pub dim: usize,
}

impl<T: Real> ConformalFactor<T> {
    pub fn exponential(f: ScalarFn<T>, dim: usize) -> ConformalFactor<T> {
        ConformalFactor { form: FactorForm::Exponential, field: f, dim }
    }

    pub fn power(u: ScalarFn<T>, dim: usize) -> Result<ConformalFactor<T>> {
        power_dim(dim)?;
        Ok(ConformalFactor { form: FactorForm::Power, field: u, dim })
    }

    pub fn constant(f: T, dim: usize) -> ConformalFactor<T> {
        ConformalFactor::exponential(Arc::new(move |x: &[Jet<T>]| x[0].constant_like(f)), dim)
    }

    /// Same metric in exponential form, f = (2/(n−2)) ln u.
    pub fn to_exponential(&self) -> Result<ConformalFactor<T>> {
        Ok(ConformalFactor::exponential(self.log_field()?, self.dim))
    }

    /// Same metric in power form, u = e^{(n−2)f/2}.
    pub fn to_power(&self) -> Result<ConformalFactor<T>> {
        match self.form {
            FactorForm::Power => Ok(self.clone()),
            FactorForm::Exponential => {
                let k = c::<T>(0.5) * (cn::<T>(power_dim(self.dim)?) - c(2.0));
                let f = self.field.clone();
                ConformalFactor::power(Arc::new(move |x: &[Jet<T>]| f(x).scale(k).exp()), self.dim)
            }
        }
    }

    /// f with g' = e^{2f} g.
    pub fn log_field(&self) -> Result<ScalarFn<T>> {
        match self.form {
            FactorForm::Exponential => Ok(self.field.clone()),
            FactorForm::Power => {
                let k = c::<T>(2.0) / (cn::<T>(power_dim(self.dim)?) - c(2.0));
                let u = self.field.clone();
                Ok(Arc::new(move |x: &[Jet<T>]| u(x).ln().scale(k)))
            }
        }
    }

    /// Field value at a point.
    pub fn value_at(&self, x: &[T]) -> Result<T> {
        Ok((self.field)(&Jet::variables(x, 0)?).value())
    }
}

fn power_dim(n: usize) -> Result<usize> {
    if n < 3 {
        return Err(GeomError::InvalidParameter(format!("power form needs dimension ≥ 3, got {n}")));
    }
    Ok(n)
}

/// e^{2f} g.
pub fn exp_scale<T: Real>(chart: &MetricChart<T>, f: &ScalarFn<T>) -> MetricChart<T> {
    let base = chart.metric_fn().clone();
    let f = f.clone();
    let metric: MetricFn<T> = Arc::new(move |x| {
        let e = f(x).scale(c(2.0)).exp();
        base(x).into_iter().map(|g| g * &e).collect()
    });
    MetricChart::new(format!("conformal({})", chart.name()), chart.domain().clone(), metric)
        .with_injectivity_guard(chart.injectivity_guard())
}

/// Points where the power-form positivity is checked.
const POSITIVITY_SAMPLES: usize = 64;

/// The rescaled chart g' for either factor form; power-form factors are
/// checked positive on a fixed sample of the domain.
pub fn conformal_scale<T: Real>(chart: &MetricChart<T>, factor: &ConformalFactor<T>) -> Result<MetricChart<T>> {
    if factor.dim != chart.dim() {
        return Err(GeomError::DimensionMismatch { expected: chart.dim(), got: factor.dim });
    }
    if factor.form == FactorForm::Power {
        for x in interior_points(chart.domain(), POSITIVITY_SAMPLES, 0, 0.0) {
            let u = factor.value_at(&x)?;
            if !(u > T::zero()) {
                return Err(GeomError::NonPositiveFactor { value: to_f64(u), point: x.iter().map(|v| to_f64(*v)).collect() });
            }
        }
    }
    Ok(exp_scale(chart, &factor.log_field()?))
}

/// e^{−2f}(Sc + 2(n−1)Δf − (n−2)(n−1)|∇f|²), with Δ the positive Laplacian of g.
pub fn conformal_scalar_formula<T: Real>(chart: &MetricChart<T>, f: &ScalarFn<T>, x: &[T]) -> Result<T> {
    let n = cn::<T>(chart.dim());
    let sc = curvature_at(chart, x)?.scalar;
    let lap = scalar_laplacian(chart, f, x)?;
    let grad = gradient_norm2(chart, f, x)?;
    let fv = f(&Jet::variables(&chart.domain().normalize(x)?, 0)?).value();
    let k = n - T::one();
    Ok((-(fv * c(2.0))).exp() * (sc + c::<T>(2.0) * k * lap - (n - c(2.0)) * k * grad))
}

/// |Sc(e^{2f}g) − formula| / max(1, |Sc(e^{2f}g)|), the direct value from the rescaled chart.
pub fn conformal_formula_residual<T: Real>(chart: &MetricChart<T>, f: &ScalarFn<T>, x: &[T]) -> Result<T> {
    let direct = curvature_at(&exp_scale(chart, f), x)?.scalar;
    let formula = conformal_scalar_formula(chart, f, x)?;
    Ok((direct - formula).abs() / direct.abs().max(T::one()))
}

/// (4(n−1)/(n−2))Δu − (Sc' u^{(n+2)/(n−2)} − Sc u) at x, Sc' from `target`.
pub fn yamabe_residual<T: Real>(chart: &MetricChart<T>, u: &ConformalFactor<T>, target: &ScalarFn<T>, x: &[T]) -> Result<T> {
    let n = power_dim(chart.dim())? as f64;
    let u = u.to_power()?;
    let xn = chart.domain().normalize(x)?;
    let uv = u.value_at(&xn)?;
    if !(uv > T::zero()) {
        return Err(GeomError::NonPositiveFactor { value: to_f64(uv), point: x.iter().map(|v| to_f64(*v)).collect() });
    }
    let lap = scalar_laplacian(chart, &u.field, x)?;
    let sc = curvature_at(chart, x)?.scalar;
    let sc2 = target(&Jet::variables(&xn, 0)?).value();
    let a = c::<T>(4.0 * (n - 1.0) / (n - 2.0));
    let q = c::<T>((n + 2.0) / (n - 2.0));
    Ok(a * lap - (sc2 * uv.powf(q) - sc * uv))
}

/// Points used to certify the constant-Sc hypothesis.
const CONSTANT_SC_SAMPLES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Inequality1<T> {
    /// (R/(2(n−1)))(e^{2f}−1) − (−Δf + ((n−2)/2)|∇f|²)
    pub slack: T,
    /// Sc(e^{2f}g) + R from the rescaled chart.
    pub direct_margin: T,
    /// |direct_margin − 2(n−1)e^{−2f}·slack|
    pub equivalence: T,
}

/// Signed slack of −Δf + ((n−2)/2)|∇f|² ≤ (R/(2(n−1)))(e^{2f}−1), which holds
/// exactly when Sc(e^{2f}g) ≥ −R for a chart with Sc ≡ −R.
pub fn inequality1_check<T: Real>(chart: &MetricChart<T>, f: &ScalarFn<T>, r: T, x: &[T]) -> Result<Inequality1<T>> {
    if !(r > T::zero()) {
        return Err(GeomError::InvalidParameter(format!("R must be positive, got {}", to_f64(r))));
    }
    let mut pts = interior_points(chart.domain(), CONSTANT_SC_SAMPLES, 0, 0.05);
    pts.push(x.to_vec());
    for p in &pts {
        let sc = curvature_at(chart, p)?.scalar;
        if (sc + r).abs() > c(1e-6) {
            return Err(GeomError::Precondition(format!(
                "scalar curvature {:.6e} is not {:.6e} at {:?}",
                to_f64(sc),
                to_f64(-r),
                p.iter().map(|v| to_f64(*v)).collect::<Vec<_>>()
            )));
        }
    }
    let n = cn::<T>(chart.dim());
    let k = n - T::one();
    let lap = scalar_laplacian(chart, f, x)?;
    let grad = gradient_norm2(chart, f, x)?;
    let fv = f(&Jet::variables(&chart.domain().normalize(x)?, 0)?).value();
    let e2f = (fv * c(2.0)).exp();
    let slack = r / (c::<T>(2.0) * k) * (e2f - T::one()) - (-lap + (n - c(2.0)) * c(0.5) * grad);
    let direct_margin = curvature_at(&exp_scale(chart, f), x)?.scalar + r;
    let equivalence = (direct_margin - c::<T>(2.0) * k * slack / e2f).abs();
    Ok(Inequality1 { slack, direct_margin, equivalence })
}

/// Guard rejecting points on a removed set.
pub type GuardFn<T> = Arc<dyn Fn(&[T]) -> Result<()> + Send + Sync>;

/// A map F between charts with F*(g_target) = λ² g_source.
#[derive(Clone)]
pub struct ConformalMap<T> {
    pub name: String,
    pub source: MetricChart<T>,
    pub target: MetricChart<T>,
    pub map: MapFn<T>,
    pub factor: ScalarFn<T>,
    pub guard: Option<GuardFn<T>>,
}

impl<T: Real> ConformalMap<T> {
    pub fn identity(chart: MetricChart<T>) -> ConformalMap<T> {
        ConformalMap {
            name: format!("identity({})", chart.name()),
            target: chart.clone(),
            source: chart,
            map: Arc::new(|x: &[Jet<T>]| x.to_vec()),
            factor: Arc::new(|x: &[Jet<T>]| x[0].constant_like(T::one())),
            guard: None,
        }
    }

    /// Euclidean inversion x ↦ x/|x|² on [−2, 2]ᵐ minus the origin, λ = |x|⁻².
    pub fn inversion(m: usize) -> ConformalMap<T> {
        let source = catalog::euclidean::<T>(m).with_domain(Domain::cube(m, c(-2.0), c(2.0)));
        ConformalMap {
            name: format!("inversion({m})"),
            source,
            target: catalog::euclidean(m),
            map: Arc::new(|x: &[Jet<T>]| {
                let inv = sum_sq(x).recip();
                x.iter().map(|v| v * &inv).collect()
            }),
            factor: Arc::new(|x: &[Jet<T>]| sum_sq(x).recip()),
            guard: Some(Arc::new(|x: &[T]| {
                let r = x.iter().map(|v| *v * *v).fold(T::zero(), |a, b| a + b).sqrt();
                if r < c(REMOVED_SET_GUARD) {
                    Err(GeomError::RemovedSet(to_f64(r)))
                } else {
                    Ok(())
                }
            })),
        }
    }

    pub fn check(&self, x: &[T]) -> Result<()> {
        match &self.guard {
            Some(g) => g(x),
            None => Ok(()),
        }
    }

    /// F(x).
    pub fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        self.check(x)?;
        let xn = self.source.domain().normalize(x)?;
        Ok((self.map)(&Jet::variables(&xn, 0)?).iter().map(|j| j.value()).collect())
    }

    /// λ(x).
    pub fn factor_at(&self, x: &[T]) -> Result<T> {
        self.check(x)?;
        let xn = self.source.domain().normalize(x)?;
        Ok((self.factor)(&Jet::variables(&xn, 0)?).value())
    }

    /// max|F*g_target − λ²g_source| / max|λ²g_source| at x.
    pub fn pullback_residual(&self, x: &[T]) -> Result<T> {
        self.check(x)?;
        let n = self.source.dim();
        let p = self.target.dim();
        let xn = self.source.domain().normalize(x)?;
        let vars = Jet::variables(&xn, 1)?;
        let y = (self.map)(&vars);
        if y.len() != p {
            return Err(GeomError::DimensionMismatch { expected: p, got: y.len() });
        }
        let yv: Vec<T> = y.iter().map(|j| j.value()).collect();
        let h = self.target.metric_at(&yv)?;
        let g = self.source.metric_at(&xn)?;
        let lam = (self.factor)(&vars).value();
        let l2 = lam * lam;
        let (mut diff, mut scale) = (T::zero(), T::zero());
        for i in 0..n {
            for j in 0..n {
                let mut s = T::zero();
                for a in 0..p {
                    for b in 0..p {
                        s += h[a * p + b] * y[a].partial(&[i]) * y[b].partial(&[j]);
                    }
                }
                let want = l2 * g[i * n + j];
                diff = diff.max((s - want).abs());
                scale = scale.max(want.abs());
            }
        }
        Ok(diff / scale)
    }

    /// Largest pullback residual over the given points.
    pub fn max_pullback_residual(&self, points: &[Vec<T>]) -> Result<T> {
        let mut worst = T::zero();
        for x in points {
            worst = worst.max(self.pullback_residual(x)?);
        }
        Ok(worst)
    }
}

fn sum_sq<T: Real>(x: &[Jet<T>]) -> Jet<T> {
    let mut s = x[0].zero_like();
    for v in x {
        s += &v.square();
    }
    s
}

/// Height coordinate y_{m+1} of the polar embedding, signed by the pole.
fn pole_sign<T: Real>(pole: Pole) -> T {
    match pole {
        Pole::North => T::one(),
        Pole::South => -T::one(),
    }
}

/// Stereographic projection σ from the sphere of radius R (polar chart) to ℝᵐ,
/// x = y'/(R ∓ y_{m+1}), with λ = (1+|x|²)/(2R).
pub fn stereographic_map<T: Real>(m: usize, radius: T, pole: Pole) -> Result<ConformalMap<T>> {
    if m < 1 {
        return Err(GeomError::InvalidParameter("dimension must be at least 1".into()));
    }
    let source = catalog::sphere_polar::<T>(m, radius)?;
    let embed = source.embedding().expect("polar sphere is embedded").map.clone();
    let s = pole_sign::<T>(pole);
    let e2 = embed.clone();
    let map: MapFn<T> = Arc::new(move |x: &[Jet<T>]| project(&e2(x), m, radius, s));
    let factor: ScalarFn<T> = Arc::new(move |x: &[Jet<T>]| {
        let p = project(&embed(x), m, radius, s);
        (sum_sq(&p) + T::one()).scale(T::one() / (radius * c(2.0)))
    });
    let guard_embed = source.clone();
    let guard: GuardFn<T> = Arc::new(move |x: &[T]| {
        let y = guard_embed.embed(x).ok_or(GeomError::RemovedSet(0.0))?;
        let d = radius - s * y[m];
        if d < c(REMOVED_SET_GUARD) {
            Err(GeomError::RemovedSet(to_f64(d)))
        } else {
            Ok(())
        }
    });
    Ok(ConformalMap {
        name: format!("stereographic({m},{})", to_f64(radius)),
        source,
        target: catalog::euclidean(m),
        map,
        factor,
        guard: Some(guard),
    })
}

fn project<T: Real>(y: &[Jet<T>], m: usize, radius: T, s: T) -> Vec<Jet<T>> {
    let inv = (y[m].scale(-s) + radius).recip();
    y[..m].iter().map(|v| v * &inv).collect()
}

/// S^m∖S^k → H^{k+1} × S^{m−k−1}: stereographic projection from e_{m+1}
/// (which sends S^k = S^m ∩ span(e_1..e_k, e_{m+1}) to ℝ^k × {0}) followed by
/// (u, v) ↦ ((u, |v|), v/|v|). λ = (1+|x|²)/(2ρ), ρ = |v|.
pub fn sphere_minus_subsphere<T: Real>(m: usize, k: usize) -> Result<ConformalMap<T>> {
    if m < 2 || k < 1 || k + 2 > m {
        return Err(GeomError::InvalidParameter(format!("need m ≥ 2 and 1 ≤ k ≤ m−2, got m={m}, k={k}")));
    }
    let sigma = stereographic_map::<T>(m, T::one(), Pole::North)?;
    let q = m - k - 1;
    let mut half = catalog::hyperbolic_halfspace::<T>(k + 1);
    let mut hd = half.domain().clone();
    hd.lower[k] = c(1e-9);
    hd.upper[k] = c(1e9);
    for i in 0..k {
        hd.lower[i] = c(-1e9);
        hd.upper[i] = c(1e9);
    }
    half = half.with_domain(hd);
    let target = catalog::product(&half, &catalog::sphere_polar::<T>(q, T::one())?);
    let smap = sigma.map.clone();
    let map: MapFn<T> = Arc::new(move |x: &[Jet<T>]| {
        let p = smap(x);
        let rho = sum_sq(&p[k..]).sqrt();
        let mut out: Vec<Jet<T>> = p[..k].to_vec();
        out.push(rho.clone());
        let inv = rho.recip();
        let w: Vec<Jet<T>> = p[k..].iter().map(|v| v * &inv).collect();
        out.extend(sphere_angles(&w));
        out
    });
    let smap = sigma.map.clone();
    let factor: ScalarFn<T> = Arc::new(move |x: &[Jet<T>]| {
        let p = smap(x);
        (sum_sq(&p) + T::one()) * sum_sq(&p[k..]).sqrt().recip().scale(c(0.5))
    });
    let smap = sigma.map.clone();
    let sguard = sigma.guard.clone();
    let guard: GuardFn<T> = Arc::new(move |x: &[T]| {
        if let Some(g) = &sguard {
            g(x)?;
        }
        let p = smap(&Jet::variables(x, 0)?);
        let rho = p[k..].iter().map(|j| j.value() * j.value()).fold(T::zero(), |a, b| a + b).sqrt();
        if rho < c(REMOVED_SET_GUARD) {
            Err(GeomError::RemovedSet(to_f64(rho)))
        } else {
            Ok(())
        }
    });
    Ok(ConformalMap {
        name: format!("sphere_minus_subsphere({m},{k})"),
        source: sigma.source,
        target,
        map,
        factor,
        guard: Some(guard),
    })
}

/// Hyperspherical angles (θ₁, …, θ_{q−1}, φ) of a unit vector in ℝ^{q+1},
/// matching the polar sphere chart; φ ∈ [0, 2π).
fn sphere_angles<T: Real>(w: &[Jet<T>]) -> Vec<Jet<T>> {
    let q = w.len() - 1;
    let mut out = Vec::with_capacity(q);
    for i in 0..q - 1 {
        let rest = sum_sq(&w[i + 1..]).sqrt();
        out.push(rest.atan2(&w[i]));
    }
    let mut phi = w[q].atan2(&w[q - 1]);
    if phi.value() < T::zero() {
        phi = phi + (T::PI() + T::PI());
    }
    out.push(phi);
    out
}

/// |Δ_h φ − ((m−2)/2)|∇φ|²_h| with φ = −ln λ and h = λ²g_source = F*g_target,
/// for scalar-flat source and target.
pub fn liouville_phi_residual<T: Real>(map: &ConformalMap<T>, x: &[T]) -> Result<T> {
    map.check(x)?;
    let tol = c::<T>(1e-6);
    let sc = curvature_at(&map.source, x)?.scalar;
    let y = map.apply(x)?;
    let sct = curvature_at(&map.target, &y)?.scalar;
    if sc.abs() > tol || sct.abs() > tol {
        return Err(GeomError::Precondition(format!(
            "source and target must be scalar-flat (got {:.3e} and {:.3e})",
            to_f64(sc),
            to_f64(sct)
        )));
    }
    let lam = map.factor.clone();
    let log_lam: ScalarFn<T> = Arc::new(move |x: &[Jet<T>]| lam(x).ln());
    let h = exp_scale(&map.source, &log_lam);
    let lam = map.factor.clone();
    let phi: ScalarFn<T> = Arc::new(move |x: &[Jet<T>]| -lam(x).ln());
    let m = cn::<T>(map.source.dim());
    let lap = scalar_laplacian(&h, &phi, x)?;
    let grad = gradient_norm2(&h, &phi, x)?;
    Ok((lap - (m - c(2.0)) * c(0.5) * grad).abs())
}

/// (∫uΔu dμ, ∫|∇u|² dμ) over a closed atlas.
pub fn integration_identity_check<T: Real>(atlas: &Atlas<T>, u: &ScalarFn<T>, grid: &QuadratureGrid) -> Result<(T, T)> {
    if !atlas.closed {
        return Err(GeomError::NotClosed);
    }
    let fs: Vec<ScalarFn<T>> = (0..atlas.charts.len()).map(|i| atlas.field_on(i, u)).collect();
    let v = globalint::integrate(atlas, grid, 2, |node| {
        let chart = &node.atlas_chart.chart;
        let f = &fs[node.chart];
        let val = f(&Jet::variables(&node.x, 0)?).value();
        Ok(vec![val * scalar_laplacian(chart, f, &node.x)?, gradient_norm2(chart, f, &node.x)?])
    })?;
    Ok((v[0], v[1]))
}
