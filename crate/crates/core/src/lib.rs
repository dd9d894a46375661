//! Fair k-median with ratio constraints on client colors.
//!
//! Three solvers share one instance model: an exhaustive oracle, an exact
//! dynamic program over a randomly shifted tree embedding (`O(log k)`
//! approximation), and a portal-based dynamic program over hierarchical
//! split-trees for doubling metrics (`1 + eps`).

pub mod dp_doubling;
pub mod dp_tree;
pub mod error;
pub mod estimate;
pub mod fixtures;
pub mod flow;
pub mod format;
pub mod generate;
pub mod hierarchy;
pub mod hst;
pub mod matching;
pub mod metric;
pub mod model;
pub mod nets;
pub mod oracle;
pub mod report;
pub mod split_tree;

pub use dp_doubling::{solve_qptas, DoublingConfig, DoublingTable, QptasOptions};
pub use dp_tree::{solve_log_k, HstTable, LogKOptions, TreeConfig};
pub use error::{Error, Result};
pub use flow::{
    assign_clients, build_assignment_network, extract_assignment, min_cost_flow, FlowNetwork,
};
pub use format::InstanceFile;
pub use generate::{generate, ColorDist, GenParams, SpaceKind};
pub use hierarchy::{Block, BlockId, Hierarchy};
pub use hst::{build_hst, hst_distance, hst_units, Hst};
pub use matching::{build_phi, min_weight_perfect_matching, tau, MatchGraph};
pub use metric::{MetricSpace, PointId, Space, DIST_TOL};
pub use model::{
    ratio_feasible, recount_lambda, solution_cost, validate_fairness, Client, FacilityIdx,
    FairInstance, FairnessReport, Loads, Solution, SolveOutcome, Violation,
};
pub use nets::{aspect_ratio, build_net, preprocess_doubling, reduce_to_centers, BackMap, Net};
pub use oracle::{brute_force_fixed_centers, brute_force_opt, OracleBudget};
pub use report::{run, Algo, BenchRow, RunOptions, RunReport};
pub use split_tree::{build_split_tree, portal_route_distance, SplitTree};
