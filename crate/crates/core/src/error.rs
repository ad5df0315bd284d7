use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate distribution: {0}")]
    Degenerate(String),
    #[error("augmentation requires exponential tail")]
    NotExponentialTail,
    #[error("outside the hypothesis: {0}")]
    OutsideHypothesis(String),
    #[error("even-sum conditioning infeasible")]
    EvenSumInfeasible,
    #[error("survival conditioning infeasible")]
    SurvivalInfeasible,
    #[error("node cap of {0} exceeded while generating a tree")]
    NodeCap(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("selection returned an already-matched half-edge {0}")]
    AlreadyMatched(usize),
    #[error("state cap exceeded: {0} free vertices")]
    StateCap(usize),
    #[error("no stationary distribution; use hitting_time")]
    Absorbing,
    #[error("target unreachable from start")]
    Unreachable,
    #[error("linear solve failed: {0}")]
    Solver(String),
    #[error("truncation removed everything")]
    EmptyTruncation,
    #[error("subcritical: branching rate {0} <= 1")]
    Subcritical(f64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
