//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh parse error: {0}")]
    Parse(String),

    #[error("non-manifold input: {0}")]
    NonManifold(String),

    #[error("non-orientable input")]
    NonOrientable,

    #[error("non-single-component accepted only with flag --allow-multi ({0} components)")]
    MultiComponent(usize),

    #[error("mesh is not closed (boundary edges present)")]
    NotClosed,

    #[error("isolated vertex {0} has no incident face")]
    IsolatedVertex(usize),

    #[error("disconnected target vertex {0}")]
    DisconnectedTarget(usize),

    #[error("seed vertex {0} lies outside the ball")]
    SeedOutsideBall(usize),

    #[error("curvature precondition violated: {0}")]
    CurvaturePrecondition(String),

    #[error("graph test failed: {0}")]
    GraphTest(String),

    #[error("time step violates CFL bound: dt = {dt:.3e} > {limit:.3e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("linear solver failed to converge: {0}")]
    SolverNonConvergence(String),

    #[error("eigensolver iteration stagnated after {0} iterations")]
    IterationStagnation(usize),

    #[error("no blowup detected: {0}")]
    NoBlowup(String),

    #[error("voxel resolution too coarse: eps = {eps:.3e} < 2 voxel diagonals = {diag2:.3e}")]
    VoxelResolution { eps: f64, diag2: f64 },

    #[error("sample window [{0}, {1}] is not covered by the provided samples")]
    WindowNotCovered(f64, f64),

    #[error("no positive start found for the doubling search")]
    NoPositiveStart,

    #[error("inconsistent sheet count at vertex {vertex}: expected {expected}, found {found}")]
    SheetCount {
        vertex: usize,
        expected: usize,
        found: usize,
    },

    #[error("sheet bundle has m = {0} < 2 sheets")]
    TooFewSheets(usize),

    #[error("multiplicity ill-defined at this resolution: |theta - {nearest}| = {gap:.3} > 0.25")]
    MultiplicityIllDefined { nearest: i64, gap: f64 },

    #[error("offset operator singular at vertex {0} (s equals a principal curvature radius)")]
    OffsetSingular(usize),

    #[error("support violation: phi is nonzero outside the ball at vertex {0}")]
    SupportViolation(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature failed to converge: {0}")]
    QuadratureNonConvergence(String),

    #[error("log-profile sandwich failed: admissible radius range [{0:.3e}, {1:.3e}]")]
    SandwichFailed(f64, f64),

    #[error("under-resolved annulus: {0}")]
    UnderResolvedAnnulus(String),

    #[error("distance exceeds parametrix validity radius: d = {d:.3e} > {limit:.3e}")]
    ParametrixRange { d: f64, limit: f64 },

    #[error("t = {0:.3e} too small for the configured spectral truncation")]
    TruncationTooSmall(f64),

    #[error("solution is not positive on the scan domain")]
    NotPositive,

    #[error("residual too large: {0:.3e}")]
    ResidualTooLarge(f64),

    #[error("insufficient clearance for the Harnack chain: {0}")]
    InsufficientClearance(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("not a shrinker: residual sup {0:.3e} exceeds threshold {1:.3e}")]
    NotAShrinker(f64, f64),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
