use thiserror::Error;

pub type Result<T> = std::result::Result<T, GeometryError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("point {point:?} lies outside the domain of chart `{chart}`")]
    OutOfDomain { chart: String, point: Vec<f64> },

    #[error("metric is degenerate (|det| = {det:e})")]
    DegenerateMetric { det: f64 },

    #[error("2-plane is degenerate (|Gram determinant| = {gram:e})")]
    DegeneratePlane { gram: f64 },

    #[error("induced metric on leaf {axes:?} is degenerate (|det| = {det:e})")]
    DegenerateLeaf { axes: Vec<usize>, det: f64 },

    #[error("warping function is not positive (w = {value}) at {point:?}")]
    NonPositiveWarping { point: Vec<f64>, value: f64 },

    #[error("fiber has dimension {dim}, reduction needs a 1-dimensional fiber")]
    FiberNotOneDimensional { dim: usize },

    #[error("fiber metric is not c0*dy^2 with c0 = +-1 (got {value})")]
    FiberNotUnit { value: f64 },

    #[error("field `{label}` is not Killing (residual {residual:e})")]
    NotKilling { label: String, residual: f64 },

    #[error("field `{label}` is not a geodesic Killing field")]
    NotGeodesicKilling { label: String },

    #[error("stress-energy is not of perfect-fluid form (isotropy residual {isotropy:e})")]
    NotFluidForm { isotropy: f64 },

    #[error("unknown solution id `{0}`")]
    UnknownSolution(String),

    #[error("bad parameters: {0}")]
    BadParams(String),

    #[error("total signature {negative}/{positive} is not Lorentzian")]
    NotLorentzian { negative: usize, positive: usize },

    #[error("unsupported ambient space: {0}")]
    UnsupportedAmbient(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(transparent)]
    Expression(#[from] crate::expr::ExprError),
}
