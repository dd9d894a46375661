//! Solver orchestration and the JSON run report.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dp_doubling::{solve_qptas, QptasOptions};
use crate::dp_tree::{solve_log_k, LogKOptions};
use crate::error::{Error, Result};
use crate::flow::assign_clients;
use crate::model::{
    validate_fairness, FacilityIdx, FairInstance, FairnessReport, Loads, SolveOutcome,
};
use crate::oracle::{brute_force_fixed_centers, brute_force_opt, OracleBudget};

pub const REPORT_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Brute,
    Hst,
    Qptas,
    Assign,
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algo::Brute => "brute",
            Algo::Hst => "hst",
            Algo::Qptas => "qptas",
            Algo::Assign => "assign",
        })
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Algo> {
        match s {
            "brute" => Ok(Algo::Brute),
            "hst" => Ok(Algo::Hst),
            "qptas" => Ok(Algo::Qptas),
            "assign" => Ok(Algo::Assign),
            other => Err(Error::InvalidParams(format!("unknown algorithm {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub seed: u64,
    pub epsilon: f64,
    pub trees: usize,
    pub rho: Option<f64>,
    pub max_states: u64,
    pub reduce_threshold: usize,
    pub oracle_budget: OracleBudget,
    /// Compare against the exhaustive optimum when it fits the budget.
    pub with_oracle: bool,
    /// Centers for `assign`.
    pub open: Vec<FacilityIdx>,
    /// Loads for `assign`; the best fair loads are searched when absent.
    pub lambda: Option<Loads>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            seed: 0,
            epsilon: 0.5,
            trees: 1,
            rho: None,
            max_states: 10_000_000,
            reduce_threshold: 12,
            oracle_budget: OracleBudget::default(),
            with_oracle: true,
            open: Vec::new(),
            lambda: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub name: String,
    pub clients: usize,
    pub facilities: usize,
    pub k: usize,
    pub l: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub spec_version: String,
    pub instance: InstanceSummary,
    pub algorithm: Algo,
    pub seed: u64,
    pub trees: usize,
    pub epsilon: f64,
    pub wall_ms: f64,
    pub cost: f64,
    pub oracle_cost: Option<f64>,
    pub ratio: Option<f64>,
    pub fairness: FairnessReport,
    pub states: u64,
    pub open: Vec<FacilityIdx>,
    /// Facility serving each client.
    pub assignment: Vec<Option<FacilityIdx>>,
    pub lambda: Loads,
}

/// Runs one solver on `inst`, validates its answer, and compares it with the
/// exhaustive optimum when that is affordable.
pub fn run(name: &str, inst: &FairInstance, algo: Algo, opts: &RunOptions) -> Result<RunReport> {
    let started = Instant::now();
    let outcome = match algo {
        Algo::Brute => SolveOutcome {
            solution: brute_force_opt(inst, None, opts.oracle_budget)?,
            states: 0,
        },
        Algo::Hst => solve_log_k(
            inst,
            LogKOptions {
                seed: opts.seed,
                trees: opts.trees,
                reduce_threshold: opts.reduce_threshold,
                max_states: opts.max_states,
            },
        )?,
        Algo::Qptas => solve_qptas(
            inst,
            QptasOptions {
                epsilon: opts.epsilon,
                seed: opts.seed,
                trees: opts.trees,
                rho: opts.rho,
                max_states: opts.max_states,
                ..QptasOptions::default()
            },
        )?,
        Algo::Assign => {
            let solution = match &opts.lambda {
                Some(lambda) => assign_clients(inst, &opts.open, lambda)?,
                None => brute_force_fixed_centers(inst, &opts.open, None, opts.oracle_budget)?,
            };
            SolveOutcome {
                solution,
                states: 0,
            }
        }
    };
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    let sol = outcome.solution;
    let fairness = validate_fairness(&sol, inst)?;
    let oracle_cost = if opts.with_oracle {
        match brute_force_opt(inst, None, opts.oracle_budget) {
            Ok(o) => Some(o.cost),
            Err(Error::BudgetExceeded(_)) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let ratio = oracle_cost.map(|o| {
        if o > 0.0 {
            sol.cost / o
        } else if sol.cost == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    });
    Ok(RunReport {
        spec_version: REPORT_VERSION.into(),
        instance: InstanceSummary {
            name: name.into(),
            clients: inst.clients.len(),
            facilities: inst.facilities.len(),
            k: inst.k,
            l: inst.l,
        },
        algorithm: algo,
        seed: opts.seed,
        trees: opts.trees,
        epsilon: opts.epsilon,
        wall_ms,
        cost: sol.cost,
        oracle_cost,
        ratio,
        fairness,
        states: outcome.states,
        open: sol.open,
        assignment: sol.assignment,
        lambda: sol.lambda,
    })
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// One row of the benchmark table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance: String,
    pub algo: Algo,
    pub seed: u64,
    pub cost: f64,
    pub oracle_cost: Option<f64>,
    pub ratio: Option<f64>,
    pub feasible: bool,
    pub wall_ms: f64,
    pub states: u64,
}

impl From<&RunReport> for BenchRow {
    fn from(r: &RunReport) -> BenchRow {
        BenchRow {
            instance: r.instance.name.clone(),
            algo: r.algorithm,
            seed: r.seed,
            cost: r.cost,
            oracle_cost: r.oracle_cost,
            ratio: r.ratio,
            feasible: r.fairness.feasible,
            wall_ms: r.wall_ms,
            states: r.states,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::t1;

    #[test]
    fn brute_on_t1() {
        let r = run("t1", &t1(), Algo::Brute, &RunOptions::default()).unwrap();
        assert_eq!(r.cost, 6.0);
        assert!(r.fairness.feasible);
        assert_eq!(r.ratio, Some(1.0));
        assert_eq!(r.spec_version, REPORT_VERSION);
    }

    #[test]
    fn hst_on_t1_is_bounded_below() {
        let opts = RunOptions {
            trees: 5,
            ..RunOptions::default()
        };
        let r = run("t1", &t1(), Algo::Hst, &opts).unwrap();
        assert!(r.cost >= 6.0 && r.ratio.unwrap() >= 1.0);
        assert!(r.fairness.feasible);
    }

    #[test]
    fn assign_with_and_without_loads() {
        let mut opts = RunOptions {
            open: vec![0, 1],
            ..RunOptions::default()
        };
        assert_eq!(run("t1", &t1(), Algo::Assign, &opts).unwrap().cost, 6.0);
        opts.lambda = Some([(0, vec![1, 1]), (1, vec![1, 1])].into_iter().collect());
        assert_eq!(run("t1", &t1(), Algo::Assign, &opts).unwrap().cost, 6.0);
    }

    #[test]
    fn reports_are_deterministic_apart_from_timing() {
        let opts = RunOptions {
            trees: 3,
            rho: Some(0.5),
            seed: 9,
            ..RunOptions::default()
        };
        let mut a = run("t1", &t1(), Algo::Qptas, &opts).unwrap();
        let mut b = run("t1", &t1(), Algo::Qptas, &opts).unwrap();
        a.wall_ms = 0.0;
        b.wall_ms = 0.0;
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn algo_names_round_trip() {
        for a in [Algo::Brute, Algo::Hst, Algo::Qptas, Algo::Assign] {
            assert_eq!(a.to_string().parse::<Algo>().unwrap(), a);
        }
        assert!("greedy".parse::<Algo>().is_err());
    }
}
