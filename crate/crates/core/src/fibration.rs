//! Connection metrics g_ε = π*g_B + ε²θ⊗θ on local circle-bundle trivializations.

use std::sync::Arc;

use crate::error::{GeomError, Result};
use crate::jet::Jet;
use crate::scalar::{c, Real};
use crate::tensorcore::{self, catalog, christoffel_at, curvature_at, Domain, MapFn, MetricChart, MetricFn};

/// Base chart, connection potential a (θ = dt + a) and fiber scale ε.
#[derive(Clone)]
pub struct ConnectionData<T> {
    pub base: MetricChart<T>,
    /// Components a_i of the potential as functions of base coordinates.
    pub potential: MapFn<T>,
    pub eps: T,
}

impl<T: Real> ConnectionData<T> {
    pub fn new(base: MetricChart<T>, potential: MapFn<T>, eps: T) -> Result<ConnectionData<T>> {
        if !(eps > T::zero()) {
            return Err(GeomError::InvalidParameter(format!("fiber scale must be positive, got {eps}")));
        }
        if base.dim() < 2 {
            return Err(GeomError::InvalidParameter("base dimension must be at least 2".into()));
        }
        Ok(ConnectionData { base, potential, eps })
    }

    pub fn trivial(base: MetricChart<T>, eps: T) -> Result<ConnectionData<T>> {
        let n = base.dim();
        ConnectionData::new(base, Arc::new(move |x: &[Jet<T>]| vec![x[0].zero_like(); n]), eps)
    }

    /// Flat plane with a = (λ/2)(x dy − y dx), so ω = λ dx∧dy.
    pub fn flat_plane(lambda: T, eps: T) -> Result<ConnectionData<T>> {
        let base = catalog::euclidean::<T>(2);
        let half = lambda * c::<T>(0.5);
        ConnectionData::new(base, Arc::new(move |x: &[Jet<T>]| vec![-(&x[1] * half), &x[0] * half]), eps)
    }

    /// Unit S² (polar chart) with a = λ(1 − cos θ)dφ, so ω = λ·dA.
    pub fn sphere_area_form(lambda: T, eps: T) -> Result<ConnectionData<T>> {
        let base = catalog::sphere_polar::<T>(2, T::one())?;
        ConnectionData::new(
            base,
            Arc::new(move |x: &[Jet<T>]| vec![x[0].zero_like(), x[0].cos().rsub(T::one()) * lambda]),
            eps,
        )
    }

    /// Same base and ε with the potential shifted by an exact form dχ,
    /// given through its components `dchi`.
    pub fn gauge_shift(&self, dchi: MapFn<T>) -> ConnectionData<T> {
        let a = self.potential.clone();
        let potential: MapFn<T> = Arc::new(move |x: &[Jet<T>]| {
            let d = dchi(x);
            a(x).into_iter().zip(d).map(|(p, q)| p + q).collect()
        });
        ConnectionData { base: self.base.clone(), potential, eps: self.eps }
    }

    /// ω_ij = ∂_i a_j − ∂_j a_i at a base point, row-major.
    pub fn omega(&self, x: &[T]) -> Result<Vec<T>> {
        let n = self.base.dim();
        let x = self.base.domain().normalize(x)?;
        let a = (self.potential)(&Jet::variables(&x, 1)?);
        let mut w = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                w[i * n + j] = a[j].partial(&[i]) - a[i].partial(&[j]);
            }
        }
        Ok(w)
    }

    /// Maximum |dω| component at a base point (needs second derivatives of a).
    pub fn d_omega_residual(&self, x: &[T]) -> Result<T> {
        let n = self.base.dim();
        let x = self.base.domain().normalize(x)?;
        let a = (self.potential)(&Jet::variables(&x, 2)?);
        let dw = |k: usize, i: usize, j: usize| a[j].partial(&[k, i]) - a[i].partial(&[k, j]);
        let mut worst = T::zero();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max((dw(i, j, k) + dw(j, k, i) + dw(k, i, j)).abs());
                }
            }
        }
        Ok(worst)
    }
}

/// Connection metric on base × S¹ with fiber coordinate t ∈ [0, 2π):
/// [g_B + ε² a aᵀ, ε² a; ε² aᵀ, ε²].
pub fn connection_metric<T: Real>(data: &ConnectionData<T>) -> Result<MetricChart<T>> {
    let n = data.base.dim();
    let m = n + 1;
    let gb = data.base.metric_fn().clone();
    let pot = data.potential.clone();
    let e2 = data.eps * data.eps;
    let metric: MetricFn<T> = Arc::new(move |x| {
        let g = gb(&x[..n]);
        let a = pot(&x[..n]);
        let mut out = vec![x[0].zero_like(); m * m];
        for i in 0..n {
            for j in 0..n {
                out[i * m + j] = &g[i * n + j] + &(&a[i] * &a[j] * e2);
            }
            let v = &a[i] * e2;
            out[i * m + n] = v.clone();
            out[n * m + i] = v;
        }
        out[n * m + n] = x[0].constant_like(e2);
        out
    });
    let d = data.base.domain();
    let two_pi = T::PI() + T::PI();
    let domain = Domain::new(
        [d.lower.clone(), vec![T::zero()]].concat(),
        [d.upper.clone(), vec![two_pi]].concat(),
        [d.periodic.clone(), vec![true]].concat(),
    );
    Ok(MetricChart::new(format!("connection({},{})", data.base.name(), data.eps), domain, metric)
        .with_injectivity_guard(data.base.injectivity_guard().min(T::PI() * data.eps)))
}

/// ‖ω‖² = g^{ik} g^{jl} ω_ij ω_kl (both index orders counted).
pub fn omega_hs_norm<T: Real>(data: &ConnectionData<T>, x: &[T]) -> Result<T> {
    let n = data.base.dim();
    let w = data.omega(x)?;
    let g = data.base.metric_at(x)?;
    let gi = tensorcore::pipeline::invert::<T, T>(&g, n)?;
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    s += gi[i * n + k] * gi[j * n + l] * w[i * n + j] * w[k * n + l];
                }
            }
        }
    }
    Ok(s)
}

/// Scalar curvature predicted by the submersion formula: Sc_B − (ε²/4)‖ω‖².
pub fn oneill_formula<T: Real>(data: &ConnectionData<T>, base_point: &[T]) -> Result<T> {
    let sb = curvature_at(&data.base, base_point)?.scalar;
    let w2 = omega_hs_norm(data, base_point)?;
    Ok(sb - data.eps * data.eps / c::<T>(4.0) * w2)
}

/// |direct Sc(g_ε) − (Sc_B − (ε²/4)‖ω‖²)| at a total-space point (base coords, t).
pub fn oneill_residual<T: Real>(data: &ConnectionData<T>, point: &[T]) -> Result<T> {
    let n = data.base.dim();
    if point.len() != n + 1 {
        return Err(GeomError::DimensionMismatch { expected: n + 1, got: point.len() });
    }
    let total = connection_metric(data)?;
    let direct = curvature_at(&total, point)?.scalar;
    Ok((direct - oneill_formula(data, &point[..n])?).abs())
}

/// Horizontal part of ∇_ξ ξ for the fiber field ξ = ∂_t (zero when fibers are geodesics).
pub fn fiber_geodesic_residual<T: Real>(data: &ConnectionData<T>, point: &[T]) -> Result<T> {
    let total = connection_metric(data)?;
    let m = total.dim();
    let (_, _, gamma) = christoffel_at(&total, point)?;
    let t = m - 1;
    Ok((0..m).map(|k| gamma[(k * m + t) * m + t].abs()).fold(T::zero(), T::max))
}

/// A-tensor comparison for horizontal lifts of constant base vectors X, Y.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ATensorCheck<T> {
    /// |A_X̃ Ỹ| computed from the Christoffel symbols of g_ε.
    pub computed_norm: T,
    /// |−(ε/2) ω(X, Y) V| with V = ξ/ε.
    pub formula_norm: T,
    pub residual: T,
}

pub fn a_tensor_check<T: Real>(data: &ConnectionData<T>, xv: &[T], yv: &[T], point: &[T]) -> Result<ATensorCheck<T>> {
    let n = data.base.dim();
    let m = n + 1;
    if xv.len() != n || yv.len() != n || point.len() != m {
        return Err(GeomError::DimensionMismatch { expected: n, got: xv.len() });
    }
    let total = connection_metric(data)?;
    let (_, _, gamma) = christoffel_at(&total, point)?;
    let base_pt = data.base.domain().normalize(&point[..n])?;
    let aj = (data.potential)(&Jet::variables(&base_pt, 1)?);
    let a: Vec<T> = aj.iter().map(|j| j.value()).collect();
    let lift = |v: &[T]| {
        let mut out = v.to_vec();
        out.push(-(0..n).map(|i| v[i] * a[i]).sum::<T>());
        out
    };
    let xl = lift(xv);
    let yl = lift(yv);
    // Z = ∇_X̃ Ỹ; only the t-component of Ỹ varies along X̃.
    let mut z = vec![T::zero(); m];
    z[n] = -(0..n)
        .map(|i| (0..n).map(|j| yv[i] * xv[j] * aj[i].partial(&[j])).sum::<T>())
        .sum::<T>();
    for k in 0..m {
        for i in 0..m {
            for j in 0..m {
                z[k] += gamma[(k * m + i) * m + j] * xl[i] * yl[j];
            }
        }
    }
    // Vertical projection onto ξ = ∂_t: coefficient a·Z + Z^t; |ξ| = ε.
    let coef = (0..n).map(|i| a[i] * z[i]).sum::<T>() + z[n];
    let w = data.omega(&point[..n])?;
    let wxy: T = (0..n).map(|i| (0..n).map(|j| w[i * n + j] * xv[i] * yv[j]).sum::<T>()).sum();
    let predicted = -c::<T>(0.5) * wxy;
    let eps = data.eps;
    Ok(ATensorCheck {
        computed_norm: coef.abs() * eps,
        formula_norm: predicted.abs() * eps,
        residual: (coef - predicted).abs() * eps,
    })
}

/// Least-squares (slope, intercept) of Sc(g_ε) against ε² at a total-space point.
pub fn epsilon_slope<T: Real>(
    base: &MetricChart<T>,
    potential: &MapFn<T>,
    eps_list: &[T],
    point: &[T],
) -> Result<(T, T)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &e in eps_list {
        let data = ConnectionData::new(base.clone(), potential.clone(), e)?;
        let total = connection_metric(&data)?;
        xs.push(e * e);
        ys.push(curvature_at(&total, point)?.scalar);
    }
    let (a, b, _) = crate::linalg::linear_fit(&xs, &ys);
    Ok((b, a))
}
