use thiserror::Error;

/// Errors raised by chain construction, norm evaluation and the constructive procedures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum JsumError {
    #[error("chain must contain at least one space")]
    EmptyChain,
    #[error("invalid coordinate space {index}: {reason}")]
    InvalidSpace { index: usize, reason: String },
    #[error("map {index} has shape {rows}x{cols}, expected {expected_rows}x{expected_cols}")]
    ShapeMismatch {
        index: usize,
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },
    #[error("expected {expected} maps for {spaces} spaces, got {got}")]
    MapCount { spaces: usize, expected: usize, got: usize },
    #[error("map {index} is not a contraction: operator norm {norm}")]
    ContractionViolation { index: usize, norm: f64 },
    #[error("spectral validation requires Euclidean endpoints, map {index} joins p={from} and p={to}")]
    SpectralNonEuclidean { index: usize, from: f64, to: f64 },
    #[error("outer exponent must lie in (1, inf), got {0}")]
    InvalidOuterExponent(f64),
    #[error("exponent sequence must be nondecreasing, p[{index}] = {prev} > p[{next_index}] = {next}", next_index = index + 1)]
    DecreasingExponents { index: usize, prev: f64, next: f64 },
    #[error("index {index} out of range 0..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("expected a vector of dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("composite map requires n <= m, got n={n}, m={m}")]
    ReversedIndices { n: usize, m: usize },
    #[error("vector has {got} blocks, chain has {expected} spaces")]
    BlockCount { expected: usize, got: usize },
    #[error("the omega seminorm is only defined for eventually constant tails")]
    ZeroTailOmega,
    #[error("cannot add a zero-tail vector with nonzero last block to an eventually constant vector")]
    IncompatibleTails,
    #[error("invalid index set: {0}")]
    InvalidSubset(String),
    #[error("brute-force oracle limited to N <= {limit}, chain has N = {n}")]
    OracleLimit { n: usize, limit: usize },
    #[error("zero vector has no norming functional")]
    ZeroVector,
    #[error("invalid interval {lo}..={hi} for N = {n}")]
    InvalidInterval { lo: usize, hi: usize, n: usize },
    #[error("invalid step sequence: {0}")]
    InvalidStepSequence(String),
    #[error("block interval too short: n_next = {n_next} must exceed n_k + 1 = {}", n_k + 1)]
    ShortBlock { n_k: usize, n_next: usize },
    #[error("support violation: {0}")]
    SupportViolation(String),
    #[error("skip condition violated between blocks {first} and {second}: gap {gap} < 2")]
    SkipViolation { first: usize, second: usize, gap: i64 },
    #[error("overlapping supports between blocks {first} and {second}")]
    OverlappingSupports { first: usize, second: usize },
    #[error("range membership violated for x^{index}: deviation {deviation}")]
    RangeMembership { index: usize, deviation: f64 },
    #[error("subspace is trivial")]
    TrivialSubspace,
    #[error("subspace basis is linearly dependent (relative singular value {0})")]
    DependentBasis(f64),
    #[error("threshold unreachable at k = {k}: best ratio {ratio}, threshold {threshold}")]
    ThresholdUnreachable {
        k: usize,
        ratio: f64,
        threshold: f64,
        stage: String,
    },
    #[error("block {k} too small for a functional: norm {norm} <= 5/6")]
    BlockTooSmall { k: usize, norm: f64 },
    #[error("block system has no functionals attached")]
    MissingFunctionals,
    #[error("{got} coefficients exceed the block count {blocks}")]
    TooManyCoefficients { got: usize, blocks: usize },
    #[error("smallness condition fails: sum = {0} >= 1")]
    SmallnessViolated(f64),
    #[error("functionals are not biorthogonal to the pairs: deviation {0}")]
    NotBiorthogonal(f64),
    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),
    #[error("limit operator needs an eventually constant tail")]
    ZeroTailLimit,
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, JsumError>;
