//! Coordinate-chart Riemannian geometry with jet differentiation.
//!
//! The numeric core is generic over the scalar type (`f32` or `f64`) through
//! [`Real`]; the aliases below fix it to `f64`.

// `!(x > 0)` style guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conformal;
pub mod error;
pub mod fibration;
pub mod geodesy;
pub mod globalint;
pub mod jet;
pub mod kleinian;
pub mod linalg;
pub mod sampling;
pub mod scalar;
pub mod tensorcore;

pub use error::{GeomError, Result};
pub use scalar::Real;

pub type Jet64 = jet::Jet<f64>;
pub type Chart = tensorcore::MetricChart<f64>;
pub type Curvature = tensorcore::CurvaturePoint<f64>;
