//! Steepest descent of the Yamabe quotient in a finite function basis.

use super::{collect_nodes, eval_plain, require_closed, Atlas, QuadratureGrid};
use crate::error::{GeomError, Result};
use crate::jet::Jet;
use crate::linalg;
use crate::scalar::{c, to_f64, Real};
use crate::tensorcore::{curvature_at, pipeline, scalar_laplacian, ScalarFn};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DescentOptions {
    pub initial_step: f64,
    pub armijo: f64,
    pub max_iters: usize,
    /// Stop when the L² gradient norm falls below this.
    pub grad_tol: f64,
    /// Allowed relative increase of the quotient per accepted step.
    pub monotone_tol: f64,
    /// Step halvings before giving up on a line search.
    pub max_halvings: usize,
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions { initial_step: 0.1, armijo: 1e-4, max_iters: 200, grad_tol: 1e-9, monotone_tol: 1e-12, max_halvings: 60 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DescentStep<T> {
    pub iteration: usize,
    pub quotient: T,
    /// Variance of Sc of u^{4/(n−2)}g with respect to its own volume.
    pub scalar_variance: T,
    pub grad_norm: T,
    /// Step taken to reach this iterate (0 for the start).
    pub step: T,
    pub coefficients: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DescentTrajectory<T> {
    pub steps: Vec<DescentStep<T>>,
    /// L² distance from u₀ to its projection on the basis, relative to ‖u₀‖.
    pub projection_residual: T,
    pub converged: bool,
    /// Accepted steps that were halved because u touched 0.
    pub positivity_halvings: usize,
}

impl<T: Real> DescentTrajectory<T> {
    pub fn last(&self) -> &DescentStep<T> {
        self.steps.last().expect("trajectory has the initial iterate")
    }
}

struct NodeCache<T> {
    w: T,
    sc: T,
    phi: Vec<T>,
    lap: Vec<T>,
    /// ⟨∇φ_k, ∇φ_l⟩, row-major m×m.
    gram: Vec<T>,
}

struct Problem<T> {
    nodes: Vec<NodeCache<T>>,
    m: usize,
    a: T,
    p: T,
}

struct Eval<T> {
    q: T,
    grad: Vec<T>,
}

impl<T: Real> Problem<T> {
    fn values(&self, coef: &[T]) -> Vec<T> {
        self.nodes.iter().map(|nd| nd.phi.iter().zip(coef).map(|(a, b)| *a * *b).fold(T::zero(), |s, v| s + v)).collect()
    }

    fn positive(&self, u: &[T]) -> bool {
        u.iter().all(|v| *v > T::zero())
    }

    fn eval(&self, coef: &[T], want_grad: bool) -> Eval<T> {
        let m = self.m;
        let u = self.values(coef);
        let (mut e, mut d) = (T::zero(), T::zero());
        let mut de = vec![T::zero(); m];
        let mut dd = vec![T::zero(); m];
        for (nd, &uv) in self.nodes.iter().zip(&u) {
            let mut gc = vec![T::zero(); m];
            for k in 0..m {
                for l in 0..m {
                    gc[k] += nd.gram[k * m + l] * coef[l];
                }
            }
            let grad2 = (0..m).map(|k| gc[k] * coef[k]).fold(T::zero(), |s, v| s + v);
            let up1 = uv.powf(self.p - T::one());
            e += nd.w * (self.a * grad2 + nd.sc * uv * uv);
            d += nd.w * up1 * uv;
            if want_grad {
                for k in 0..m {
                    de[k] += nd.w * c::<T>(2.0) * (self.a * gc[k] + nd.sc * uv * nd.phi[k]);
                    dd[k] += nd.w * self.p * up1 * nd.phi[k];
                }
            }
        }
        let two_p = c::<T>(2.0) / self.p;
        let dn = d.powf(two_p);
        let q = e / dn;
        let grad = if want_grad { (0..m).map(|k| (de[k] - two_p * e * dd[k] / d) / dn).collect() } else { Vec::new() };
        Eval { q, grad }
    }

    /// Sc of u^{4/(n−2)}g at the nodes and its u^p-weighted variance.
    fn scalar_variance(&self, coef: &[T]) -> T {
        let u = self.values(coef);
        let pts: Vec<(T, T)> = self
            .nodes
            .iter()
            .zip(&u)
            .map(|(nd, &uv)| {
                let lap = nd.lap.iter().zip(coef).map(|(a, b)| *a * *b).fold(T::zero(), |s, v| s + v);
                let sc = (self.a * lap + nd.sc * uv) / uv.powf(self.p - T::one());
                (nd.w * uv.powf(self.p), sc)
            })
            .collect();
        let total = pts.iter().fold(T::zero(), |s, (w, _)| s + *w);
        let mean = pts.iter().fold(T::zero(), |s, (w, v)| s + *w * *v) / total;
        pts.iter().fold(T::zero(), |s, (w, v)| s + *w * (*v - mean) * (*v - mean)) / total
    }
}

/// Minimizes the Yamabe quotient over u = Σ c_k φ_k by L²-steepest descent
/// with Armijo backtracking. A trial step that makes u nonpositive at any node
/// is halved, never clamped.
pub fn yamabe_descent<T: Real>(
    atlas: &Atlas<T>,
    grid: &QuadratureGrid,
    u0: &ScalarFn<T>,
    basis: &[ScalarFn<T>],
    opts: &DescentOptions,
) -> Result<DescentTrajectory<T>> {
    require_closed(atlas)?;
    let n = atlas.dim();
    if n < 3 {
        return Err(GeomError::InvalidParameter(format!("dimension {n} < 3")));
    }
    if basis.is_empty() {
        return Err(GeomError::InvalidParameter("empty basis".into()));
    }
    let m = basis.len();
    let nf = n as f64;
    let a = c::<T>(4.0 * (nf - 1.0) / (nf - 2.0));
    let p = c::<T>(2.0 * nf / (nf - 2.0));

    let fields: Vec<Vec<ScalarFn<T>>> = (0..atlas.charts.len()).map(|i| basis.iter().map(|b| atlas.field_on(i, b)).collect()).collect();
    let u0s: Vec<ScalarFn<T>> = (0..atlas.charts.len()).map(|i| atlas.field_on(i, u0)).collect();
    let mut nodes = Vec::new();
    let mut u0_vals = Vec::new();
    for s in collect_nodes(atlas, grid)? {
        let chart = &atlas.charts[s.chart].chart;
        let ginv = pipeline::invert::<T, T>(&chart.metric_at(&s.x)?, n)?;
        let xn = chart.domain().normalize(&s.x)?;
        let vars = Jet::variables(&xn, 1)?;
        let mut phi = Vec::with_capacity(m);
        let mut dphi = Vec::with_capacity(m);
        let mut lap = Vec::with_capacity(m);
        for f in &fields[s.chart] {
            let j = f(&vars);
            phi.push(j.value());
            dphi.push((0..n).map(|i| j.partial(&[i])).collect::<Vec<T>>());
            lap.push(scalar_laplacian(chart, f, &s.x)?);
        }
        let mut gram = vec![T::zero(); m * m];
        for k in 0..m {
            for l in 0..m {
                let mut v = T::zero();
                for i in 0..n {
                    for j in 0..n {
                        v += ginv[i * n + j] * dphi[k][i] * dphi[l][j];
                    }
                }
                gram[k * m + l] = v;
            }
        }
        u0_vals.push(eval_plain(&u0s[s.chart], &s.x)?);
        nodes.push(NodeCache { w: s.weight, sc: curvature_at(chart, &s.x)?.scalar, phi, lap, gram });
    }
    let prob = Problem { nodes, m, a, p };

    // L² Gram matrix of the basis and the projection of u₀.
    let mut mass = vec![T::zero(); m * m];
    let mut rhs = vec![T::zero(); m];
    let mut u0_norm = T::zero();
    for (nd, &u) in prob.nodes.iter().zip(&u0_vals) {
        for k in 0..m {
            rhs[k] += nd.w * nd.phi[k] * u;
            for l in 0..m {
                mass[k * m + l] += nd.w * nd.phi[k] * nd.phi[l];
            }
        }
        u0_norm += nd.w * u * u;
    }
    let mass_inv = linalg::inverse(&mass, m).ok_or_else(|| GeomError::InvalidParameter("basis is linearly dependent on the grid".into()))?;
    let mut coef: Vec<T> = (0..m).map(|k| (0..m).map(|l| mass_inv[k * m + l] * rhs[l]).fold(T::zero(), |s, v| s + v)).collect();
    let proj = prob.values(&coef);
    let mut resid = T::zero();
    for ((nd, &u), &pv) in prob.nodes.iter().zip(&u0_vals).zip(&proj) {
        resid += nd.w * (u - pv) * (u - pv);
    }
    let projection_residual = (resid / u0_norm).sqrt();
    if let Some((i, v)) = proj.iter().enumerate().find(|(_, v)| **v <= T::zero()) {
        return Err(GeomError::NonPositiveFactor { value: to_f64(*v), point: vec![i as f64] });
    }

    let mut steps = Vec::new();
    let mut ev = prob.eval(&coef, true);
    let natural = |g: &[T]| -> Vec<T> { (0..m).map(|k| (0..m).map(|l| mass_inv[k * m + l] * g[l]).fold(T::zero(), |s, v| s + v)).collect() };
    let mut dir = natural(&ev.grad);
    let mut gnorm2 = dir.iter().zip(&ev.grad).map(|(a, b)| *a * *b).fold(T::zero(), |s, v| s + v);
    steps.push(DescentStep {
        iteration: 0,
        quotient: ev.q,
        scalar_variance: prob.scalar_variance(&coef),
        grad_norm: gnorm2.sqrt(),
        step: T::zero(),
        coefficients: coef.clone(),
    });
    let mut converged = gnorm2.sqrt() < c(opts.grad_tol);
    let mut positivity_halvings = 0;
    let mut it = 0;
    while !converged && it < opts.max_iters {
        it += 1;
        let mut alpha = c::<T>(opts.initial_step);
        let mut accepted = None;
        for _ in 0..opts.max_halvings {
            let trial: Vec<T> = coef.iter().zip(&dir).map(|(c0, d)| *c0 - alpha * *d).collect();
            if !prob.positive(&prob.values(&trial)) {
                positivity_halvings += 1;
                alpha *= c(0.5);
                continue;
            }
            let q = prob.eval(&trial, false).q;
            if q <= ev.q - c::<T>(opts.armijo) * alpha * gnorm2 {
                accepted = Some(trial);
                break;
            }
            alpha *= c(0.5);
        }
        let Some(trial) = accepted else {
            // No further decrease at working precision.
            converged = true;
            break;
        };
        // Fix the scale ∫u² = ∫1; the quotient is homogeneous of degree 0.
        let u = prob.values(&trial);
        let (mut l2, mut vol) = (T::zero(), T::zero());
        for (nd, uv) in prob.nodes.iter().zip(&u) {
            l2 += nd.w * *uv * *uv;
            vol += nd.w;
        }
        let s = (vol / l2).sqrt();
        coef = trial.into_iter().map(|v| v * s).collect();
        let next = prob.eval(&coef, true);
        if next.q > ev.q + c::<T>(opts.monotone_tol) * ev.q.abs().max(T::one()) {
            return Err(GeomError::Precondition(format!(
                "quotient increased from {:.12e} to {:.12e}",
                to_f64(ev.q),
                to_f64(next.q)
            )));
        }
        ev = next;
        dir = natural(&ev.grad);
        gnorm2 = dir.iter().zip(&ev.grad).map(|(a, b)| *a * *b).fold(T::zero(), |s, v| s + v);
        converged = gnorm2.sqrt() < c(opts.grad_tol);
        steps.push(DescentStep {
            iteration: it,
            quotient: ev.q,
            scalar_variance: prob.scalar_variance(&coef),
            grad_norm: gnorm2.sqrt(),
            step: alpha,
            coefficients: coef.clone(),
        });
    }
    Ok(DescentTrajectory { steps, projection_residual, converged, positivity_halvings })
}
