use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("metric not positive definite at site {site} (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { site: usize, min_eigenvalue: f64 },

    #[error("mass must be positive and finite, got {0}")]
    InvalidMass(f64),

    #[error("Peierls phase {phase} on link {link} outside (-pi/2, pi/2)")]
    PhaseOutOfRange { link: usize, phase: f64 },

    #[error("coupling ({row}, {col}) at graph distance {distance} exceeds range {max_range}")]
    LocalityViolation {
        row: usize,
        col: usize,
        distance: usize,
        max_range: usize,
    },

    #[error("coupling ({row}, {col}) is purely imaginary; phase is ambiguous at +-pi/2")]
    PhaseAmbiguity { row: usize, col: usize },

    #[error("point {0:?} lies outside the chart")]
    OutOfChart(Vec<f64>),

    #[error("time-dependent metric needs at least 3 samples, got {0}")]
    InsufficientTimeSamples(usize),

    #[error("unsupported cochain degree {0}")]
    UnsupportedDegree(usize),

    #[error("Hodge star needs a diagonal spatial metric (site {site}, off-diagonal {value:e})")]
    NonDiagonalMetric { site: usize, value: f64 },

    #[error("length mismatch for {what}: expected {expected}, got {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("open cycle: {0}")]
    OpenCycle(String),

    #[error("holonomy targets given for {given} generators but the lattice has {available}")]
    HolonomyMismatch { given: usize, available: usize },

    #[error("operation needs a {needed} lattice, got {found}")]
    WrongTopology { needed: &'static str, found: String },

    #[error("total flux {0} is not an integer multiple of 2 pi")]
    NonIntegerChern(f64),

    #[error("invalid time interval [{t1}, {t2}] or step count {steps}")]
    InvalidTimeInterval { t1: f64, t2: f64, steps: usize },

    #[error("singular linear solve in propagator step")]
    SingularSolve,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
