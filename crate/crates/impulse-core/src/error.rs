//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum MapError {
    #[error("invalid interval [{lo}, {hi}]")]
    BadInterval { lo: f64, hi: f64 },
    #[error("map needs at least one branch")]
    EmptyBranches,
    #[error("branch pieces must tile the domain with no gaps or overlaps")]
    BranchesDontTile,
    #[error("map is discontinuous at {x} ({left} vs {right})")]
    DiscontinuousAt { x: f64, left: f64, right: f64 },
    #[error("branch image [{lo}, {hi}] leaves the domain")]
    NotSelfMap { lo: f64, hi: f64 },
    #[error("branch is not monotone on [{lo}, {hi}]")]
    NonMonotoneBranch { lo: f64, hi: f64 },
    #[error("invalid branch rule: {0}")]
    BadRule(String),
    #[error("declared Lipschitz constant {declared} below sampled estimate {estimate}")]
    BadLipschitz { declared: f64, estimate: f64 },
    #[error("argument {x} outside domain [{lo}, {hi}]")]
    OutsideDomain { x: f64, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Error)]
pub enum DistError {
    #[error("geometric parameter must lie in (0, 1), got {0}")]
    BadGeometricParameter(f64),
    #[error("pmf must be nonempty with nonnegative entries")]
    BadPmf,
    #[error("p_0 must be positive")]
    ZeroAtOrigin,
    #[error("pmf plus declared tail mass sums to {0}, expected 1")]
    NotNormalized(f64),
    #[error("pmf has non-finite mean")]
    DivergentMean,
    #[error("state {0} has zero stationary weight")]
    UndefinedState(usize),
    #[error("cylinder must be nonempty")]
    EmptyCylinder,
}

#[derive(Debug, Clone, Error)]
pub enum SystemError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("maps must share the system domain")]
    DomainMismatch,
}

#[derive(Debug, Clone, Error)]
pub enum OperatorError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("grid needs at least two bins")]
    BadGrid,
    #[error("state truncation must be at least one")]
    BadTruncation,
    #[error("measure mass {0} outside the grid domain")]
    MassOutsideDomain(f64),
    #[error("weights must be nonnegative and sum to one with the tail")]
    BadWeights,
    #[error("path-sum oracle limited to {max} steps, requested {requested}")]
    PathSumTooDeep { requested: usize, max: usize },
    #[error("grids must match")]
    GridMismatch,
}

#[derive(Debug, Clone, Error)]
pub enum StabilityError {
    #[error("constants must be nonnegative, mean time must be nonnegative")]
    BadArguments,
    #[error("gap query requires L0 >= 1; use the contraction report directly")]
    GapRequiresExpandingImpulse,
    #[error("splitting search requires monotone injective maps")]
    NotInjective,
    #[error("certificate invalid: {0}")]
    InvalidCertificate(String),
}
