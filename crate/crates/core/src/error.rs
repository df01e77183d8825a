//! Error type shared by all toolkit operations.

use thiserror::Error;

/// Errors produced by grid construction, pairings, degree queries and rate fits.
#[derive(Error, Debug)]
pub enum Error {
    #[error("grid too small: nx={nx}, ny={ny} (need at least 3x3)")]
    GridTooSmall { nx: usize, ny: usize },

    #[error("grid spacing must be positive, got {0}")]
    NonPositiveSpacing(f64),

    #[error("non-finite sample {value} at node ({x}, {y})")]
    NonFiniteSample { x: f64, y: f64, value: f64 },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("Hölder exponent must lie in (0,1), got {0}")]
    HolderExponentOutOfRange(f64),

    #[error("pair budget {budget} below the required minimum {min}")]
    PairBudgetTooSmall { budget: usize, min: usize },

    #[error("kernel under-resolved: eps={eps} < 2h={min} for h={h}")]
    KernelUnderResolved { eps: f64, h: f64, min: f64 },

    #[error("erosion by eps={eps} leaves no interior nodes")]
    ErodedToNothing { eps: f64 },

    #[error("rate fit needs at least 4 usable rungs, got {0}")]
    TooFewRungs(usize),

    #[error("epsilon ladder must be strictly decreasing and dyadic")]
    LadderNotDyadic,

    #[error("test function support leaves the grid interior")]
    SupportOutsideGrid,

    #[error("degree undefined near boundary image: dist(y, u(dU)) = {dist:.3e} <= {safe:.3e}")]
    DegreeUndefinedNearBoundary { dist: f64, safe: f64 },

    #[error("winding sum did not converge to an integer (got {0})")]
    WindingNotInteger(f64),

    #[error("domain U not strictly inside the grid rectangle")]
    DomainOutsideGrid,

    #[error("matrix field is not a metric: min det = {min_det:.3e} < lambda = {lambda:.3e}")]
    MetricNotPositive { min_det: f64, lambda: f64 },

    #[error("diffeomorphism leaves the metric's domain")]
    RangeViolation,

    #[error("no admissible disk found for the pullback mollification study")]
    NoAdmissibleDisk,

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("partition parts overlap")]
    OverlappingParts,

    #[error("generator parameters out of range: {0}")]
    BadGeneratorParameters(String),

    #[error("generator under-resolved: top frequency {lambda:.3e} needs h <= {max_h:.3e}, got {h:.3e}")]
    GeneratorUnderResolved { lambda: f64, h: f64, max_h: f64 },

    #[error("malformed GRID2D input: {0}")]
    MalformedGrid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
