//! Crate-wide error type.

use thiserror::Error;

use crate::subproblem::SolveStatus;

#[derive(Debug, Error)]
pub enum Error {
    /// Scenario parameters fail validation.
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// Gain table file cannot be parsed or holds invalid values.
    #[error("gain table: {0}")]
    GainTable(String),

    /// Operands have incompatible shapes.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Channel matrix has no full-rank right inverse.
    #[error("channel matrix is rank deficient")]
    RankDeficient,

    /// SINR thresholds cannot be met under the power budget.
    #[error("QoS unreachable: {0}")]
    QosUnreachable(String),

    /// No feasible starting precoder exists for the scenario.
    #[error("scenario infeasible: {0}")]
    ScenarioInfeasible(String),

    /// A precoder was requested from a solve that holds no optimal point.
    #[error("subproblem holds no optimal solution (status {0:?})")]
    NotOptimal(SolveStatus),

    /// The conic backend rejected the assembled program.
    #[error("conic backend: {0}")]
    Backend(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
