use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed graph input: {0}")]
    MalformedInput(String),
    #[error("self-loop at vertex {0}")]
    SelfLoop(u32),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(u32, u32),
    #[error("vertex {vertex} out of range for graph on {n} vertices")]
    VertexOutOfRange { vertex: u32, n: u32 },
    #[error("activity must be a positive finite real, got {0}")]
    InvalidActivity(f64),
    #[error("edge probability d/n = {0} exceeds 1")]
    EdgeProbability(f64),
    #[error("vertices {0} and {1} are adjacent but both fixed occupied")]
    NotIndependent(u32, u32),
    #[error("vertex {0} is assigned both occupied and unoccupied")]
    ConflictingAssignment(u32),
    #[error("vertex {0} is fixed by the boundary condition")]
    VertexFixed(u32),
    #[error("graph has {n} vertices, exceeding the exact-solver guard of {guard}")]
    SizeGuard { n: u32, guard: u32 },
    #[error("node budget of {0} exhausted during tree expansion")]
    NodeBudget(u64),
    #[error("state cap of {0} exceeded while building the branching matrix")]
    StateCap(usize),
    #[error("power iteration did not converge within {0} iterations")]
    NonConvergence(u64),
    #[error("no activity satisfies the decay condition at arity {arity} with connective constant {delta} (arity * delta <= 1)")]
    ThresholdUnreachable { arity: u32, delta: f64 },
    #[error("no decay certificate reached for vertex {vertex}: interval [{lower}, {upper}] still wider than target at depth {depth}")]
    NoDecay {
        vertex: u32,
        lower: f64,
        upper: f64,
        depth: u32,
    },
    #[error("{0}")]
    InvalidArgument(String),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

/// `x` is finite and strictly above `lo`.
#[inline]
pub(crate) fn finite_above(x: f64, lo: f64) -> bool {
    x.is_finite() && x > lo
}

/// `x` is finite and at least `lo`.
#[inline]
pub(crate) fn finite_at_least(x: f64, lo: f64) -> bool {
    x.is_finite() && x >= lo
}
