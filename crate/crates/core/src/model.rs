//! Fair k-median instances, solutions, and the (α, β)-proportional fairness check.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{MetricSpace, PointId, DIST_TOL};

/// Index into [`FairInstance::facilities`].
pub type FacilityIdx = usize;
/// Per open facility, the number of assigned clients of each color.
pub type Loads = BTreeMap<FacilityIdx, Vec<u32>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Client {
    pub point: PointId,
    /// Zero-based color; instance files use one-based colors.
    pub color: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FairInstance {
    pub metric: MetricSpace,
    pub clients: Vec<Client>,
    pub facilities: Vec<PointId>,
    pub k: usize,
    pub l: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl FairInstance {
    pub fn new(
        metric: MetricSpace,
        clients: Vec<Client>,
        facilities: Vec<PointId>,
        k: usize,
        alpha: Vec<f64>,
        beta: Vec<f64>,
    ) -> Result<Self> {
        let l = alpha.len();
        let inst = FairInstance {
            metric,
            clients,
            facilities,
            k,
            l,
            alpha,
            beta,
        };
        inst.validate()?;
        Ok(inst)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        if self.k == 0 {
            return bad("k must be positive".into());
        }
        if self.l == 0 {
            return bad("l must be positive".into());
        }
        if self.beta.len() != self.l || self.alpha.len() != self.l {
            return bad(format!("alpha and beta must both have {} entries", self.l));
        }
        for (i, (&a, &b)) in self.alpha.iter().zip(&self.beta).enumerate() {
            if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || a > b {
                return bad(format!("color {}: need 0 <= alpha <= beta <= 1", i + 1));
            }
        }
        let n = self.metric.len();
        for (i, c) in self.clients.iter().enumerate() {
            if c.point >= n {
                return bad(format!("client {i} references unknown point {}", c.point));
            }
            if c.color >= self.l {
                return bad(format!("client {i} has color outside [l]"));
            }
        }
        let mut seen = vec![false; n];
        for &f in &self.facilities {
            if f >= n {
                return bad(format!("facility references unknown point {f}"));
            }
            if std::mem::replace(&mut seen[f], true) {
                return bad(format!("facility point {f} listed twice"));
            }
        }
        Ok(())
    }

    /// Same instance over a different metric on the same point ids.
    pub fn with_metric(&self, metric: MetricSpace) -> FairInstance {
        assert_eq!(metric.len(), self.metric.len());
        FairInstance {
            metric,
            ..self.clone()
        }
    }

    /// Number of clients plus facilities.
    pub fn size(&self) -> usize {
        self.clients.len() + self.facilities.len()
    }

    pub fn color_histogram(&self) -> Vec<u32> {
        let mut h = vec![0u32; self.l];
        for c in &self.clients {
            h[c.color] += 1;
        }
        h
    }

    /// Every point id referenced by a client or facility, sorted and deduplicated.
    pub fn used_points(&self) -> Vec<PointId> {
        let mut pts: Vec<PointId> = self
            .clients
            .iter()
            .map(|c| c.point)
            .chain(self.facilities.iter().copied())
            .collect();
        pts.sort_unstable();
        pts.dedup();
        pts
    }

    pub fn ratio_feasible(&self, counts: &[u32]) -> bool {
        ratio_feasible(counts, &self.alpha, &self.beta)
    }
}

/// Whether a cluster with per-color `counts` meets the proportional bounds.
/// Empty clusters are vacuously feasible.
pub fn ratio_feasible(counts: &[u32], alpha: &[f64], beta: &[f64]) -> bool {
    let total: u32 = counts.iter().sum();
    if total == 0 {
        return true;
    }
    let total = f64::from(total);
    counts
        .iter()
        .zip(alpha.iter().zip(beta))
        .all(|(&q, (&a, &b))| {
            let q = f64::from(q);
            a * total <= q + DIST_TOL && q <= b * total + DIST_TOL
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    /// Open facilities, sorted.
    pub open: Vec<FacilityIdx>,
    /// Facility serving each client; `None` marks an unassigned client.
    pub assignment: Vec<Option<FacilityIdx>>,
    /// Per open facility, the number of assigned clients of each color.
    pub lambda: Loads,
    pub cost: f64,
}

impl Solution {
    /// Builds a solution from a total assignment, deriving `lambda` and `cost`.
    pub fn from_assignment(
        inst: &FairInstance,
        mut open: Vec<FacilityIdx>,
        assignment: Vec<FacilityIdx>,
    ) -> Result<Solution> {
        open.sort_unstable();
        open.dedup();
        let mut sol = Solution {
            open,
            assignment: assignment.into_iter().map(Some).collect(),
            lambda: BTreeMap::new(),
            cost: 0.0,
        };
        sol.lambda = recount_lambda(&sol, inst)?;
        sol.cost = solution_cost(&sol, inst)?;
        Ok(sol)
    }

    pub fn empty(inst: &FairInstance) -> Solution {
        Solution {
            open: Vec::new(),
            assignment: vec![None; inst.clients.len()],
            lambda: BTreeMap::new(),
            cost: 0.0,
        }
    }

    pub fn facility_of(&self, client: usize) -> Option<FacilityIdx> {
        self.assignment.get(client).copied().flatten()
    }
}

fn checked_facility(sol: &Solution, inst: &FairInstance, client: usize) -> Result<FacilityIdx> {
    let f = sol
        .facility_of(client)
        .ok_or(Error::UnassignedClient(client))?;
    if f >= inst.facilities.len() || sol.open.binary_search(&f).is_err() {
        return Err(Error::UnknownFacility {
            client,
            facility: f,
        });
    }
    Ok(f)
}

/// Per-facility color counts implied by the assignment.
pub fn recount_lambda(sol: &Solution, inst: &FairInstance) -> Result<Loads> {
    if sol.assignment.len() > inst.clients.len() {
        return Err(Error::InvalidInstance(
            "assignment has more entries than clients".into(),
        ));
    }
    let mut lambda: Loads = sol.open.iter().map(|&f| (f, vec![0; inst.l])).collect();
    for (j, c) in inst.clients.iter().enumerate() {
        let f = checked_facility(sol, inst, j)?;
        lambda.get_mut(&f).expect("open facility")[c.color] += 1;
    }
    Ok(lambda)
}

pub fn solution_cost(sol: &Solution, inst: &FairInstance) -> Result<f64> {
    solution_cost_with(sol, inst, |a, b| inst.metric.dist(a, b))
}

/// Cost of `sol` under an arbitrary point distance.
pub fn solution_cost_with(
    sol: &Solution,
    inst: &FairInstance,
    dist: impl Fn(PointId, PointId) -> f64,
) -> Result<f64> {
    let mut total = 0.0;
    for (j, c) in inst.clients.iter().enumerate() {
        let f = checked_facility(sol, inst, j)?;
        total += dist(c.point, inst.facilities[f]);
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub facility: FacilityIdx,
    /// Zero-based color.
    pub color: usize,
    pub observed: f64,
    pub required: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

/// Checks every nonempty cluster against the (α, β) bounds. Counts are
/// recomputed from the assignment, so a stale `lambda` cannot hide a violation.
pub fn validate_fairness(sol: &Solution, inst: &FairInstance) -> Result<FairnessReport> {
    let lambda = recount_lambda(sol, inst)?;
    let mut violations = Vec::new();
    for (&f, counts) in &lambda {
        if ratio_feasible(counts, &inst.alpha, &inst.beta) {
            continue;
        }
        let total = f64::from(counts.iter().sum::<u32>());
        for (t, &q) in counts.iter().enumerate() {
            if !ratio_feasible_single(q, total, inst.alpha[t], inst.beta[t]) {
                violations.push(Violation {
                    facility: f,
                    color: t,
                    observed: f64::from(q) / total,
                    required: (inst.alpha[t], inst.beta[t]),
                });
            }
        }
    }
    Ok(FairnessReport {
        feasible: violations.is_empty(),
        violations,
    })
}

fn ratio_feasible_single(q: u32, total: f64, a: f64, b: f64) -> bool {
    let q = f64::from(q);
    a * total <= q + DIST_TOL && q <= b * total + DIST_TOL
}

/// A solver's answer together with how much table space it used.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub solution: Solution,
    /// Table entries stored, summed over sampled trees.
    pub states: u64,
}

impl SolveOutcome {
    pub fn empty(inst: &FairInstance) -> SolveOutcome {
        SolveOutcome {
            solution: Solution::empty(inst),
            states: 0,
        }
    }

    /// Cheapest successful run, earliest on ties; the first error if none
    /// succeeded.
    pub fn best(runs: Vec<Result<SolveOutcome>>) -> Result<SolveOutcome> {
        let states = runs.iter().flatten().map(|r| r.states).sum();
        let mut best: Option<SolveOutcome> = None;
        let mut first_err = None;
        for run in runs {
            match run {
                Ok(r) => {
                    if best
                        .as_ref()
                        .is_none_or(|b| r.solution.cost < b.solution.cost)
                    {
                        best = Some(r);
                    }
                }
                Err(e) => {
                    first_err.get_or_insert(e);
                }
            }
        }
        match best {
            Some(mut b) => {
                b.states = states;
                Ok(b)
            }
            None => Err(first_err.unwrap_or(Error::Infeasible)),
        }
    }
}
