use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::chart::{check_metric, MetricChart, ScalarFn};
use super::pipeline::{self, Geometry};
use crate::error::{GeomError, Result};
use crate::jet::Jet;
use crate::linalg;
use crate::scalar::{c, cn, to_f64, Real};

#[inline(always)]
fn ix4(n: usize, i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * n + j) * n + k) * n + l
}

/// Squared norms of the curvature pieces, all indices raised with g⁻¹.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvatureNorms<T> {
    pub rm2: T,
    pub ric2: T,
    pub ring2: T,
    pub w2: T,
}

/// Pointwise curvature data at one chart point.
#[derive(Clone, Debug)]
pub struct CurvaturePoint<T> {
    pub point: Vec<T>,
    pub dim: usize,
    pub metric: Vec<T>,
    pub metric_inv: Vec<T>,
    /// √det g.
    pub volume_element: T,
    /// Γ^k_ij at `(k*n + i)*n + j`.
    pub christoffel: Vec<T>,
    /// R_ijkl = g(R(∂_i,∂_j)∂_k, ∂_l).
    pub riemann_low: Vec<T>,
    pub ricci: Vec<T>,
    pub scalar: T,
    pub traceless_ricci: Vec<T>,
    pub weyl_low: Vec<T>,
    /// Columns form a g-orthonormal frame (modified Gram–Schmidt).
    pub frame: Vec<T>,
    pub riemann_frame: Vec<T>,
    pub ricci_frame: Vec<T>,
    pub weyl_frame: Vec<T>,
    pub norms: CurvatureNorms<T>,
}

/// (h ⃝∧ k)_ijkl = h_il k_jk + h_jk k_il − h_ik k_jl − h_jl k_ik.
pub fn kulkarni_nomizu<T: Real>(h: &[T], k: &[T], n: usize) -> Vec<T> {
    let mut out = vec![T::zero(); n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for a in 0..n {
                for b in 0..n {
                    out[ix4(n, i, j, a, b)] = h[i * n + b] * k[j * n + a] + h[j * n + a] * k[i * n + b]
                        - h[i * n + a] * k[j * n + b]
                        - h[j * n + b] * k[i * n + a];
                }
            }
        }
    }
    out
}

/// T'_abcd = Σ E_ia E_jb E_kc E_ld T_ijkl.
pub fn to_frame4<T: Real>(t: &[T], e: &[T], n: usize) -> Vec<T> {
    let mut cur = t.to_vec();
    let mut next = vec![T::zero(); cur.len()];
    // Contract one slot at a time; each pass rotates the slots.
    for _slot in 0..4 {
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for a in 0..n {
                        let mut s = T::zero();
                        for i in 0..n {
                            s += e[i * n + a] * cur[ix4(n, i, p, q, r)];
                        }
                        next[ix4(n, p, q, r, a)] = s;
                    }
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

pub fn to_frame2<T: Real>(t: &[T], e: &[T], n: usize) -> Vec<T> {
    let et = linalg::transpose(e, n, n);
    linalg::matmul(&linalg::matmul(&et, t, n, n, n), e, n, n, n)
}

/// Weyl tensor from Riemann, Ricci and scalar curvature with metric `g`.
pub fn weyl_from<T: Real>(rm: &[T], ric: &[T], sc: T, g: &[T], n: usize) -> Vec<T> {
    let nf: T = cn(n);
    let one = T::one();
    let two: T = c(2.0);
    let a: Vec<T> = (0..n * n)
        .map(|k| (ric[k] - sc / (two * (nf - one)) * g[k]) / (nf - two))
        .collect();
    let ag = kulkarni_nomizu(&a, g, n);
    rm.iter().zip(&ag).map(|(&r, &s)| r - s).collect()
}

impl<T: Real> CurvaturePoint<T> {
    fn from_geometry(x: &[T], geo: Geometry<T>) -> Result<CurvaturePoint<T>> {
        let n = geo.n;
        let g = geo.g;
        let chol = linalg::cholesky(&g, n).ok_or(GeomError::SingularMetric { min_eig: 0.0, max_eig: 0.0 })?;
        let volume_element = (0..n).map(|i| chol[i * n + i]).fold(T::one(), |a, b| a * b);
        let nf: T = cn(n);
        let sc = geo.scalar;
        let ring: Vec<T> = (0..n * n).map(|k| geo.ricci[k] - sc / nf * g[k]).collect();
        let weyl = if n >= 3 { weyl_from(&geo.riemann, &geo.ricci, sc, &g, n) } else { vec![T::zero(); n * n * n * n] };

        let frame = linalg::orthonormal_frame(&g, n);
        let rf = to_frame4(&geo.riemann, &frame, n);
        let mut ricf = vec![T::zero(); n * n];
        for b in 0..n {
            for cc in 0..n {
                let mut s = T::zero();
                for a in 0..n {
                    s += rf[ix4(n, a, b, cc, a)];
                }
                ricf[b * n + cc] = s;
            }
        }
        let id = linalg::identity::<T>(n);
        let scf: T = (0..n).map(|a| ricf[a * n + a]).sum();
        let wf = if n >= 3 { weyl_from(&rf, &ricf, scf, &id, n) } else { vec![T::zero(); n * n * n * n] };
        let sq = |v: &[T]| v.iter().map(|&x| x * x).sum::<T>();
        let ric2 = sq(&ricf);
        let norms = CurvatureNorms { rm2: sq(&rf), ric2, ring2: ric2 - scf * scf / nf, w2: sq(&wf) };

        Ok(CurvaturePoint {
            point: x.to_vec(),
            dim: n,
            metric: g,
            metric_inv: geo.ginv,
            volume_element,
            christoffel: geo.gamma,
            riemann_low: geo.riemann,
            ricci: geo.ricci,
            scalar: sc,
            traceless_ricci: ring,
            weyl_low: weyl,
            frame,
            riemann_frame: rf,
            ricci_frame: ricf,
            weyl_frame: wf,
            norms,
        })
    }

    /// Traceless Ricci in the orthonormal frame.
    pub fn ring_frame(&self) -> Vec<T> {
        let n = self.dim;
        let sc = self.scalar;
        let nf: T = cn(n);
        let mut r = self.ricci_frame.clone();
        for a in 0..n {
            r[a * n + a] -= sc / nf;
        }
        r
    }

    /// tr(Ring³) with indices raised by g.
    pub fn tr_ring3(&self) -> T {
        let n = self.dim;
        let r = self.ring_frame();
        let r2 = linalg::matmul(&r, &r, n, n, n);
        let mut t = T::zero();
        for a in 0..n {
            for b in 0..n {
                t += r2[a * n + b] * r[b * n + a];
            }
        }
        t
    }

    /// Sectional curvature of the plane spanned by coordinate vectors `u`, `v`.
    pub fn sectional(&self, u: &[T], v: &[T]) -> Result<T> {
        let n = self.dim;
        let g = &self.metric;
        let uu = linalg::inner(g, n, u, u);
        let vv = linalg::inner(g, n, v, v);
        let uv = linalg::inner(g, n, u, v);
        let gram = uu * vv - uv * uv;
        if gram <= c::<T>(1e-14) * uu * vv || gram <= T::zero() {
            return Err(GeomError::DegeneratePlane(to_f64(gram)));
        }
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        s += self.riemann_low[ix4(n, i, j, k, l)] * u[i] * v[j] * v[k] * u[l];
                    }
                }
            }
        }
        Ok(s / gram)
    }
}

/// Full curvature data of `chart` at `x`.
pub fn curvature_at<T: Real>(chart: &MetricChart<T>, x: &[T]) -> Result<CurvaturePoint<T>> {
    let n = chart.dim();
    let gj = chart.metric_jet(x, 2)?;
    let gv: Vec<T> = gj.iter().map(|j| j.value()).collect();
    check_metric(&gv, n)?;
    let d = pipeline::derivs_from_jets(&gj, n)?;
    let geo = pipeline::geometry::<T, T>(&d)?;
    CurvaturePoint::from_geometry(x, geo)
}

/// Curvature quantities carried as jets of order `k` (metric jets of order `k + 2`).
pub fn geometry_jets<T: Real>(chart: &MetricChart<T>, x: &[T], k: usize) -> Result<Geometry<Jet<T>>> {
    let n = chart.dim();
    let gj = chart.metric_jet(x, k + 2)?;
    let gv: Vec<T> = gj.iter().map(|j| j.value()).collect();
    check_metric(&gv, n)?;
    let d = pipeline::derivs_as_jets(&gj, n)?;
    pipeline::geometry::<T, Jet<T>>(&d)
}

/// Plain metric, inverse and Christoffel symbols at `x`.
pub fn christoffel_at<T: Real>(chart: &MetricChart<T>, x: &[T]) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    let n = chart.dim();
    let gj = chart.metric_jet(x, 1)?;
    let gv: Vec<T> = gj.iter().map(|j| j.value()).collect();
    check_metric(&gv, n)?;
    let (ginv, gamma) = pipeline::christoffel_from_jets(&gj, n)?;
    Ok((gv, ginv, gamma))
}

/// Covariant derivative ∇_k T_ij of a symmetric 2-tensor given as order-1 jets,
/// returned at index `(k*n + i)*n + j`.
pub fn covariant_derivative_2<T: Real>(t: &[Jet<T>], gamma: &[T], n: usize) -> Vec<T> {
    let mut out = vec![T::zero(); n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut s = t[i * n + j].partial(&[k]);
                for m in 0..n {
                    s -= gamma[(m * n + k) * n + i] * t[m * n + j].value();
                    s -= gamma[(m * n + k) * n + j] * t[i * n + m].value();
                }
                out[(k * n + i) * n + j] = s;
            }
        }
    }
    out
}

/// Derivative data of Ricci and scalar curvature at `x` (order-3 metric jets).
#[derive(Clone, Debug)]
pub struct RicciDerivatives<T> {
    pub n: usize,
    pub ginv: Vec<T>,
    /// ∇_k R_ij at `(k*n + i)*n + j`.
    pub nabla_ric: Vec<T>,
    /// ∂_i Sc.
    pub d_scalar: Vec<T>,
    pub scalar: T,
    pub ricci: Vec<T>,
    pub volume_element: T,
}

pub fn ricci_derivatives<T: Real>(chart: &MetricChart<T>, x: &[T]) -> Result<RicciDerivatives<T>> {
    let geo = geometry_jets(chart, x, 1)?;
    let n = geo.n;
    let gamma: Vec<T> = geo.gamma.iter().map(|j| j.value()).collect();
    let ginv: Vec<T> = geo.ginv.iter().map(|j| j.value()).collect();
    let gv: Vec<T> = geo.g.iter().map(|j| j.value()).collect();
    let chol = linalg::cholesky(&gv, n).ok_or(GeomError::SingularMetric { min_eig: 0.0, max_eig: 0.0 })?;
    let volume_element = (0..n).map(|i| chol[i * n + i]).fold(T::one(), |a, b| a * b);
    let nabla_ric = covariant_derivative_2(&geo.ricci, &gamma, n);
    let d_scalar = (0..n).map(|i| geo.scalar.partial(&[i])).collect();
    Ok(RicciDerivatives {
        n,
        ginv,
        nabla_ric,
        d_scalar,
        scalar: geo.scalar.value(),
        ricci: geo.ricci.iter().map(|j| j.value()).collect(),
        volume_element,
    })
}

impl<T: Real> RicciDerivatives<T> {
    /// max_i |g^{jk} ∇_k R_ij − ½ ∂_i Sc|.
    pub fn bianchi_residual(&self) -> T {
        let n = self.n;
        let mut worst = T::zero();
        for i in 0..n {
            let mut div = T::zero();
            for j in 0..n {
                for k in 0..n {
                    div += self.ginv[j * n + k] * self.nabla_ric[(k * n + i) * n + j];
                }
            }
            worst = worst.max((div - c::<T>(0.5) * self.d_scalar[i]).abs());
        }
        worst
    }

    /// |∇Sc|².
    pub fn grad_scalar2(&self) -> T {
        let n = self.n;
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..n {
                s += self.ginv[i * n + j] * self.d_scalar[i] * self.d_scalar[j];
            }
        }
        s
    }

    /// |∇Ring|² with ∇Ring = ∇Ric − (∇Sc / n) g.
    pub fn grad_ring2(&self, g: &[T]) -> T {
        let n = self.n;
        let nf: T = cn(n);
        let mut t = vec![T::zero(); n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    t[(k * n + i) * n + j] = self.nabla_ric[(k * n + i) * n + j] - self.d_scalar[k] / nf * g[i * n + j];
                }
            }
        }
        norm3(&t, &self.ginv, n)
    }
}

fn norm3<T: Real>(t: &[T], ginv: &[T], n: usize) -> T {
    // Raise all three indices then contract.
    let mut up = t.to_vec();
    for slot in 0..3 {
        let mut next = vec![T::zero(); n * n * n];
        for a in 0..n {
            for b in 0..n {
                for cc in 0..n {
                    let mut s = T::zero();
                    for m in 0..n {
                        let idx = match slot {
                            0 => (m * n + b) * n + cc,
                            1 => (a * n + m) * n + cc,
                            _ => (a * n + b) * n + m,
                        };
                        let gi = match slot {
                            0 => ginv[a * n + m],
                            1 => ginv[b * n + m],
                            _ => ginv[cc * n + m],
                        };
                        s += gi * up[idx];
                    }
                    next[(a * n + b) * n + cc] = s;
                }
            }
        }
        up = next;
    }
    t.iter().zip(&up).map(|(&a, &b)| a * b).sum()
}

/// Contracted second Bianchi residual max_i |g^{jk}∇_k R_ij − ½∂_i Sc|.
pub fn contracted_bianchi_residual<T: Real>(chart: &MetricChart<T>, x: &[T]) -> Result<T> {
    Ok(ricci_derivatives(chart, x)?.bianchi_residual())
}

/// Δ Sc with the positive-spectrum sign (order-4 metric jets).
pub fn scalar_curvature_laplacian<T: Real>(chart: &MetricChart<T>, x: &[T]) -> Result<T> {
    let geo = geometry_jets(chart, x, 2)?;
    let n = geo.n;
    let gamma: Vec<T> = geo.gamma.iter().map(|j| j.value()).collect();
    let ginv: Vec<T> = geo.ginv.iter().map(|j| j.value()).collect();
    Ok(laplacian_from(&geo.scalar, &ginv, &gamma, n))
}

fn laplacian_from<T: Real>(f: &Jet<T>, ginv: &[T], gamma: &[T], n: usize) -> T {
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            let mut h = f.partial(&[i, j]);
            for k in 0..n {
                h -= gamma[(k * n + i) * n + j] * f.partial(&[k]);
            }
            s += ginv[i * n + j] * h;
        }
    }
    -s
}

/// Δ_g f = −g^{ij}(∂_i∂_j f − Γ^k_ij ∂_k f).
pub fn scalar_laplacian<T: Real>(chart: &MetricChart<T>, f: &ScalarFn<T>, x: &[T]) -> Result<T> {
    let (_, ginv, gamma) = christoffel_at(chart, x)?;
    let x = chart.domain().normalize(x)?;
    let fj = f(&Jet::variables(&x, 2)?);
    if fj.order() < 2 {
        return Err(GeomError::InsufficientOrder { needed: 2, have: fj.order() });
    }
    Ok(laplacian_from(&fj, &ginv, &gamma, chart.dim()))
}

/// |∇f|²_g.
pub fn gradient_norm2<T: Real>(chart: &MetricChart<T>, f: &ScalarFn<T>, x: &[T]) -> Result<T> {
    let n = chart.dim();
    let ginv = pipeline::invert::<T, T>(&chart.metric_at(x)?, n)?;
    let x = chart.domain().normalize(x)?;
    let fj = f(&Jet::variables(&x, 1)?);
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            s += ginv[i * n + j] * fj.partial(&[i]) * fj.partial(&[j]);
        }
    }
    Ok(s)
}

/// Sc + αΔf − β|∇f|².
pub fn weighted_scalar<T: Real>(chart: &MetricChart<T>, f: &ScalarFn<T>, alpha: T, beta: T, x: &[T]) -> Result<T> {
    let sc = curvature_at(chart, x)?.scalar;
    if alpha == T::zero() && beta == T::zero() {
        return Ok(sc);
    }
    let lap = scalar_laplacian(chart, f, x)?;
    let grad = gradient_norm2(chart, f, x)?;
    Ok(sc + alpha * lap - beta * grad)
}

/// Residuals of the two standard |Rm|² decompositions.
pub fn rm_decomposition_residuals<T: Real>(chart: &MetricChart<T>, x: &[T]) -> Result<(T, T)> {
    let n = chart.dim();
    if n < 3 {
        return Err(GeomError::InvalidParameter(format!("decomposition needs n >= 3, got {n}")));
    }
    let cp = curvature_at(chart, x)?;
    Ok(decomposition_residuals(&cp))
}

pub fn decomposition_residuals<T: Real>(cp: &CurvaturePoint<T>) -> (T, T) {
    let nf: T = cn(cp.dim);
    let one = T::one();
    let two: T = c(2.0);
    let four: T = c(4.0);
    let nm = cp.norms;
    let sc2 = cp.scalar * cp.scalar;
    let r1 = nm.rm2 - (nm.w2 + four / (nf - two) * nm.ric2 - two / ((nf - one) * (nf - two)) * sc2);
    let r2 = nm.rm2 - (nm.w2 + four / (nf - two) * nm.ring2 + two / (nf * (nf - one)) * sc2);
    (r1.abs(), r2.abs())
}

/// Hodge star on Λ² in the basis (12, 13, 14, 23, 24, 34) of an oriented 4-frame.
fn hodge4<T: Real>(orientation: T) -> [[T; 6]; 6] {
    let mut s = [[T::zero(); 6]; 6];
    let pairs = [(0, 5, 1.0), (1, 4, -1.0), (2, 3, 1.0)];
    for (a, b, v) in pairs {
        s[a][b] = c::<T>(v) * orientation;
        s[b][a] = c::<T>(v) * orientation;
    }
    s
}

const PAIRS4: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// (|W⁺|², |W⁻|²) from the Weyl tensor in an oriented orthonormal 4-frame.
pub fn weyl_pm_from_frame<T: Real>(wf: &[T], orientation: T) -> (T, T) {
    let n = 4;
    let mut m = [[T::zero(); 6]; 6];
    for (p, &(a, b)) in PAIRS4.iter().enumerate() {
        for (q, &(cc, d)) in PAIRS4.iter().enumerate() {
            m[p][q] = wf[ix4(n, a, b, cc, d)];
        }
    }
    let s = hodge4(orientation);
    let half: T = c(0.5);
    let mut out = (T::zero(), T::zero());
    for sign in [T::one(), -T::one()] {
        let mut proj = [[T::zero(); 6]; 6];
        for i in 0..6 {
            for j in 0..6 {
                let id = if i == j { T::one() } else { T::zero() };
                proj[i][j] = half * (id + sign * s[i][j]);
            }
        }
        let mut pm = [[T::zero(); 6]; 6];
        for i in 0..6 {
            for j in 0..6 {
                let mut acc = T::zero();
                for k in 0..6 {
                    for l in 0..6 {
                        acc += proj[i][k] * m[k][l] * proj[l][j];
                    }
                }
                pm[i][j] = acc;
            }
        }
        let norm: T = pm.iter().flatten().map(|&x| x * x).sum::<T>() * c::<T>(4.0);
        if sign > T::zero() {
            out.0 = norm;
        } else {
            out.1 = norm;
        }
    }
    out
}

/// (|W⁺|², |W⁻|²) at `x`; `orientation` is ±1 relative to the coordinate orientation.
pub fn weyl_pm_norms<T: Real>(chart: &MetricChart<T>, x: &[T], orientation: T) -> Result<(T, T)> {
    if chart.dim() != 4 {
        return Err(GeomError::DimensionMismatch { expected: 4, got: chart.dim() });
    }
    let cp = curvature_at(chart, x)?;
    Ok(weyl_pm_from_frame(&cp.weyl_frame, orientation.signum()))
}

/// Two tangent vectors at a base point.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentPlane<T> {
    pub point: Vec<T>,
    pub u: Vec<T>,
    pub v: Vec<T>,
}

impl<T: Real> TangentPlane<T> {
    pub fn new(point: Vec<T>, u: Vec<T>, v: Vec<T>) -> TangentPlane<T> {
        TangentPlane { point, u, v }
    }
}

/// Sectional curvature of a tangent plane.
pub fn sectional<T: Real>(chart: &MetricChart<T>, plane: &TangentPlane<T>) -> Result<T> {
    curvature_at(chart, &plane.point)?.sectional(&plane.u, &plane.v)
}

/// Orthonormal basis (e1, e2) of the plane and (e3, e4) of its g-orthogonal complement.
fn split_plane<T: Real>(cp: &CurvaturePoint<T>, plane: &TangentPlane<T>) -> Result<Vec<Vec<T>>> {
    let n = cp.dim;
    let mut vecs = vec![plane.u.clone(), plane.v.clone()];
    let span = linalg::gram_schmidt(&cp.metric, n, &vecs);
    if span.len() < 2 {
        return Err(GeomError::DegeneratePlane(0.0));
    }
    for i in 0..n {
        let mut e = vec![T::zero(); n];
        e[i] = T::one();
        vecs.push(e);
    }
    let basis = linalg::gram_schmidt(&cp.metric, n, &vecs);
    Ok(basis)
}

/// K⊥(σ) = ½(K(σ) + K(σ⊥)).
pub fn biorthogonal<T: Real>(chart: &MetricChart<T>, plane: &TangentPlane<T>) -> Result<T> {
    if chart.dim() != 4 {
        return Err(GeomError::DimensionMismatch { expected: 4, got: chart.dim() });
    }
    let cp = curvature_at(chart, &plane.point)?;
    biorthogonal_at(&cp, plane)
}

pub fn biorthogonal_at<T: Real>(cp: &CurvaturePoint<T>, plane: &TangentPlane<T>) -> Result<T> {
    let b = split_plane(cp, plane)?;
    let k1 = cp.sectional(&b[0], &b[1])?;
    let k2 = cp.sectional(&b[2], &b[3])?;
    Ok(c::<T>(0.5) * (k1 + k2))
}

/// Orthogonal complement plane of `plane`, as coordinate vectors.
pub fn complement_plane<T: Real>(cp: &CurvaturePoint<T>, plane: &TangentPlane<T>) -> Result<TangentPlane<T>> {
    let b = split_plane(cp, plane)?;
    Ok(TangentPlane::new(plane.point.clone(), b[2].clone(), b[3].clone()))
}

/// Random rotation of R^n (QR of a Gaussian matrix, sign-fixed).
pub fn random_rotation<T: Real>(rng: &mut ChaCha8Rng, n: usize) -> Vec<T> {
    let cols: Vec<Vec<T>> = (0..n)
        .map(|_| (0..n).map(|_| c::<T>(StandardNormal.sample(rng))).collect())
        .collect();
    let id = linalg::identity::<T>(n);
    let q = linalg::gram_schmidt(&id, n, &cols);
    let mut m = vec![T::zero(); n * n];
    for (j, v) in q.iter().enumerate() {
        for i in 0..n {
            m[i * n + j] = v[i];
        }
    }
    if linalg::determinant(&m, n) < T::zero() {
        for i in 0..n {
            m[i * n] = -m[i * n];
        }
    }
    m
}

pub const DEFAULT_KULKARNI_FRAMES: usize = 32;
pub const KULKARNI_SEED: u64 = 0x6b75_6c6b;

/// Kulkarni residual from curvature data: pair-sum spread over random
/// orthonormal frames plus the deviation of K⊥ from Sc/12.
pub fn kulkarni_residual_at<T: Real>(cp: &CurvaturePoint<T>, frames: usize, seed: u64) -> Result<T> {
    let n = cp.dim;
    if n != 4 {
        return Err(GeomError::DimensionMismatch { expected: 4, got: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rf = &cp.riemann_frame;
    let twelfth = cp.scalar / c::<T>(12.0);
    let mut spread = T::zero();
    let mut bio = T::zero();
    for f in 0..frames.max(1) {
        let o = if f == 0 { linalg::identity::<T>(n) } else { random_rotation::<T>(&mut rng, n) };
        let k = |a: usize, b: usize| {
            let mut s = T::zero();
            for i in 0..n {
                for j in 0..n {
                    let oij = o[i * n + a] * o[j * n + b];
                    if oij == T::zero() {
                        continue;
                    }
                    for p in 0..n {
                        for q in 0..n {
                            s += oij * o[p * n + b] * o[q * n + a] * rf[ix4(n, i, j, p, q)];
                        }
                    }
                }
            }
            s
        };
        let (k12, k13, k14, k23, k24, k34) = (k(0, 1), k(0, 2), k(0, 3), k(1, 2), k(1, 3), k(2, 3));
        let sums = [k12 + k34, k13 + k24, k14 + k23];
        let mx = sums.iter().copied().fold(T::neg_infinity(), T::max);
        let mn = sums.iter().copied().fold(T::infinity(), T::min);
        spread = spread.max(mx - mn);
        for s in sums {
            bio = bio.max((c::<T>(0.5) * s - twelfth).abs());
        }
    }
    Ok(spread + bio)
}

/// Kulkarni locally-conformally-flat residual at `x` with the default 32 frames.
pub fn kulkarni_lcf_residual<T: Real>(chart: &MetricChart<T>, x: &[T]) -> Result<T> {
    if chart.dim() != 4 {
        return Err(GeomError::DimensionMismatch { expected: 4, got: chart.dim() });
    }
    let cp = curvature_at(chart, x)?;
    kulkarni_residual_at(&cp, DEFAULT_KULKARNI_FRAMES, KULKARNI_SEED)
}
