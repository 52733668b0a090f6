use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Graph construction rejected a self-loop or duplicate edge.
    #[error("not a simple graph: {0}")]
    NotSimpleGraph(String),

    /// An edge weight function is missing an edge.
    #[error("missing weight for edge ({0}, {1})")]
    MissingEdgeWeight(usize, usize),

    /// Tensor operation on operands of different arity.
    #[error("arity mismatch: {0} vs {1}")]
    ArityMismatch(usize, usize),

    /// A support point is out of range for the declared dimensions.
    #[error("point {0:?} out of range for dims {1:?}")]
    PointOutOfRange(Vec<u64>, Vec<u64>),

    /// Materializing a tensor power would exceed the support budget.
    #[error("support budget exceeded: {0} points requested, cap {1}")]
    SupportBudget(u128, u64),

    /// Exhaustive cut search rejected a graph with too many vertices.
    #[error("graph too large for exhaustive cut search: {0} vertices, cap {1}")]
    GraphTooLarge(usize, usize),

    /// Cut search needs at least two vertices.
    #[error("cuts need at least 2 vertices, got {0}")]
    GraphTooSmall(usize),

    /// A product partition does not match the tensor dimensions.
    #[error("invalid product partition: {0}")]
    InvalidPartition(String),

    /// Labeling legs or lengths do not match the support.
    #[error("labeling does not match support: {0}")]
    LabelingMismatch(String),

    /// The support admits no injective sum-zero labeling.
    #[error("support is not tight: on leg {leg}, indices {a} and {b} are forced equal")]
    NotTight { leg: usize, a: u64, b: u64 },

    /// Relation construction got classes that do not respect a fiber.
    #[error("invalid relation: {0}")]
    InvalidRelation(String),

    /// Relation enumeration would exceed the configured budget.
    #[error("relation enumeration budget exceeded: {0} candidates, cap {1}")]
    EnumerationBudget(u128, u64),

    /// A declared symmetry does not fix the support or fails a check.
    #[error("invalid symmetry: {0}")]
    InvalidSymmetry(String),

    /// Probability vector is not a distribution.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// Marginal constraints cannot be met on the given index set.
    #[error("infeasible marginals: {0}")]
    InfeasibleMarginals(String),

    /// Operation defined only for a specific arity.
    #[error("expected arity {expected}, got {got}")]
    WrongArity { expected: usize, got: usize },

    /// Sum-inequality hypothesis r > p violated.
    #[error("sum inequality needs r > p: r = {r}, p = {p}")]
    SumInequalityHypothesis { r: f64, p: usize },

    /// Empty search range.
    #[error("empty range: {0}")]
    EmptyRange(String),

    /// Expansion or search budget exceeded.
    #[error("budget exceeded: {0}")]
    Budget(String),

    /// Hash configuration rejected.
    #[error("invalid hash config: {0}")]
    InvalidHashConfig(String),

    /// A type-class restriction got non-integral type counts.
    #[error("non-integral type: {0}")]
    NonIntegralType(String),

    /// Bad argument outside any more specific case.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// JSON input could not be parsed into the expected shape.
    #[error("malformed input: {0}")]
    MalformedInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
