use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("density profile is not positive: min rho = {min:e} at x3 = {at}")]
    NonPositiveDensity { min: f64, at: f64 },
    #[error("no integration constant gives a positive internal energy: {0}")]
    NoValidConstant(String),
    #[error("invalid physical parameters: {0}")]
    BadParams(String),

    #[error("degenerate box extents on axis {axis}: [{lo}, {hi}]")]
    BadExtents { axis: usize, lo: f64, hi: f64 },
    #[error("at least 2 cells per axis required, got {got} on axis {axis}")]
    TooFewCells { axis: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("profile covers [{lo}, {hi}] but the mesh spans [{mesh_lo}, {mesh_hi}] vertically")]
    ProfileDomainMismatch {
        lo: f64,
        hi: f64,
        mesh_lo: f64,
        mesh_hi: f64,
    },
    #[error("spaces are defined on different meshes")]
    MeshMismatch,

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    SingularSystem { pivot: usize, value: f64 },
    #[error("eigensolver stalled after {iterations} iterations (residual {residual:e})")]
    EigensolverStall { iterations: usize, residual: f64 },
    #[error("profile has no region with rho' > 0")]
    NoUnstableRegion,
    #[error("alpha(0) = {alpha0:e} <= 0: the profile is not unstable")]
    NotUnstable { alpha0: f64 },
    #[error("no sign change of alpha(s) - s^2 below s = {s_max}")]
    BracketFailure { s_max: f64 },
    #[error("growing mode is degenerate: {0}")]
    DegenerateMode(String),
    #[error("penalty schedule exhausted without stabilisation (last change {last_change:e})")]
    PenaltyNonconvergence { last_change: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolveFailure(String),
    #[error("amplitude gain {gain} is below e")]
    InsufficientGrowth { gain: f64 },
    #[error("wrong profile class: {0}")]
    WrongProfileClass(String),
    #[error("Picard iteration diverged (contraction factor {factor})")]
    PicardDivergence { factor: f64 },
    #[error("positivity lost at t = {t}: min density {min_rho:e}, min energy {min_e:e}")]
    PositivityLoss { t: f64, min_rho: f64, min_e: f64 },
    #[error("time step {dt:e} exceeds the stability limit {limit:e}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("no escape before t_max = {t_max} for delta = {delta:e}")]
    NoEscape { delta: f64, t_max: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
