use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("client {0} is not assigned to any facility")]
    UnassignedClient(usize),
    #[error("client {client} is assigned to facility {facility}, which is not open")]
    UnknownFacility { client: usize, facility: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("point set has fewer than two distinct locations")]
    DegenerateSet,
    #[error("center set is empty")]
    EmptyCenters,
    #[error("aspect ratio needs {levels} levels, above the cap of {cap}")]
    AspectRatioTooLarge { levels: u32, cap: u32 },
    #[error("points {0} and {1} share a block at the requested level")]
    SameBlock(usize, usize),
    #[error("point {0} is not a leaf of the tree")]
    UnknownLeaf(usize),
    #[error("inconsistent configurations: {0}")]
    InconsistentConfigs(String),
    #[error("matching graph has no perfect matching")]
    NoPerfectMatching,
    #[error("supply mismatch for color {color}: {supplied} clients, {demanded} demanded")]
    SupplyMismatch {
        color: usize,
        supplied: u64,
        demanded: u64,
    },
    #[error("no fairness-feasible solution exists")]
    Infeasible,
    #[error("flow on arc {0} is not integral")]
    NonIntegralFlow(usize),
    #[error("corrupt DP table: {0}")]
    CorruptTable(String),
    #[error("DP state budget of {0} entries exceeded")]
    StateBudgetExceeded(u64),
    #[error("enumeration budget of {0} exceeded")]
    BudgetExceeded(u64),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("parse error: {0}")]
    Parse(String),
}
