use thiserror::Error;

/// Every failure the library reports.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("axis {axis} out of range for a {ndim}-axis grid")]
    InvalidAxis { axis: usize, ndim: usize },
    #[error("order-{order} stencil needs {needed} nodes along axis {axis}, grid has {found}")]
    StencilTooLarge {
        order: usize,
        axis: usize,
        needed: usize,
        found: usize,
    },
    #[error("axis {0} is not periodic but the stencil asks for periodic wrap")]
    NotPeriodic(usize),
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
    #[error("expected a {expected} field, got {found}")]
    RankMismatch {
        expected: &'static str,
        found: &'static str,
    },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("quadrature: {0}")]
    Quadrature(String),
    #[error("time {t} outside the sampled range [{lo}, {hi}]")]
    TimeOutOfRange { t: f64, lo: f64, hi: f64 },
    #[error("{0} is not available for this flow map")]
    Unavailable(String),
    #[error("singular deformation gradient at node {node}: |J| = {det:e}")]
    SingularMap { node: usize, det: f64 },
    #[error("resampling failed: {0}")]
    Resample(String),
    #[error("unknown flow `{0}`")]
    UnknownFlow(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("particle {particle} left the bounding box at t = {t}")]
    ParticleEscaped { particle: usize, t: f64 },
    #[error("label {0:?} lies in the excluded core region")]
    LabelExcluded([f64; 3]),
    #[error("point {0:?} is outside the chart's validity domain")]
    OutsideChart([f64; 3]),
    #[error("chart `{0}` is not orthogonal")]
    NonOrthogonalChart(String),
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("target {target} is {distance:e} from a nonzero source node (minimum {minimum:e})")]
    TargetTooClose {
        target: usize,
        distance: f64,
        minimum: f64,
    },
    #[error("vorticity source is nonzero ({value:e}) within two cells of the boundary")]
    NonCompactSource { value: f64 },
    #[error("potential is not harmonic: Laplace residual {0:e}")]
    NotHarmonic(f64),
    #[error("self-validation of `{flow}` failed: residual {residual:e} exceeds {tolerance:e}")]
    SelfValidation {
        flow: String,
        residual: f64,
        tolerance: f64,
    },
    #[error("no pressure given and the force potential alone leaves residual {0:e}")]
    MissingPressure(f64),
    #[error("config: {0}")]
    Config(String),
    #[error("file format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
