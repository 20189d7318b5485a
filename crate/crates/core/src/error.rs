use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("point outside chart domain: axis {axis} value {value} not in [{lo}, {hi}]")]
    OutsideDomain { axis: usize, value: f64, lo: f64, hi: f64 },

    #[error("jet order {0} exceeds the supported maximum of 4")]
    OrderTooHigh(usize),

    #[error("insufficient jet order: need {needed}, have {have}")]
    InsufficientOrder { needed: usize, have: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular metric: smallest eigenvalue {min_eig:e} vs largest {max_eig:e}")]
    SingularMetric { min_eig: f64, max_eig: f64 },

    #[error("degenerate tangent plane (Gram determinant {0:e})")]
    DegeneratePlane(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("point lies on the removed set (distance {0:e})")]
    RemovedSet(f64),

    #[error("geodesic left the chart domain at {point:?} (t = {t})")]
    DomainExit { point: Vec<f64>, t: f64 },

    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),

    #[error("atlas is not closed")]
    NotClosed,

    #[error("partition of unity fails at sample {sample}: weights sum to {sum}")]
    Partition { sample: usize, sum: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("nonpositive conformal factor {value:e} at {point:?}")]
    NonPositiveFactor { value: f64, point: Vec<f64> },

    #[error("point not on the hyperboloid sheet (residual {0:e})")]
    OffSheet(f64),
}

pub type Result<T> = std::result::Result<T, GeomError>;
