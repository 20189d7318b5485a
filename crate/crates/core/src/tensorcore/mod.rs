//! Pointwise differential geometry on coordinate charts.

pub mod catalog;
mod chart;
mod curvature;
pub mod pipeline;

pub use catalog::{model_metric, ModelMetric, Pole};
pub use chart::{check_metric, metric_jet, scalar_fn, Domain, Embedding, MapFn, MetricChart, MetricFn, ScalarFn};
pub use curvature::{
    biorthogonal, biorthogonal_at, christoffel_at, complement_plane, contracted_bianchi_residual,
    covariant_derivative_2, curvature_at, decomposition_residuals, geometry_jets, gradient_norm2, kulkarni_lcf_residual,
    kulkarni_nomizu, kulkarni_residual_at, random_rotation, ricci_derivatives, rm_decomposition_residuals,
    scalar_curvature_laplacian, scalar_laplacian, sectional, to_frame2, to_frame4, weighted_scalar, weyl_from,
    weyl_pm_from_frame, weyl_pm_norms, CurvatureNorms, CurvaturePoint, RicciDerivatives, TangentPlane,
    DEFAULT_KULKARNI_FRAMES, KULKARNI_SEED,
};
