//! Exhaustive solvers used as ground truth.

use crate::error::{Error, Result};
use crate::metric::PointId;
use crate::model::{ratio_feasible, FacilityIdx, FairInstance, Loads, Solution};

/// Cap on the number of assignments an exhaustive search may visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_assignments: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_assignments: 10_000_000,
        }
    }
}

/// Optional replacement for the instance metric.
pub type DistFn<'a> = &'a dyn Fn(PointId, PointId) -> f64;

fn subsets_by_size(n: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for size in 1..=max.min(n) {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            out.push(idx.clone());
            let Some(i) = (0..size).rev().find(|&i| idx[i] != i + n - size) else {
                break;
            };
            idx[i] += 1;
            for j in i + 1..size {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    out
}

fn work(subsets: &[Vec<usize>], clients: usize) -> u64 {
    subsets
        .iter()
        .map(|s| {
            (s.len() as u64)
                .checked_pow(clients as u32)
                .unwrap_or(u64::MAX)
        })
        .fold(0u64, u64::saturating_add)
}

/// Best assignment over every mixed-radix assignment of clients to `centers`.
/// `accept` sees per-center color counts.
fn search(
    inst: &FairInstance,
    centers: &[FacilityIdx],
    dist: DistFn<'_>,
    accept: &dyn Fn(&[Vec<u32>]) -> bool,
) -> Option<(f64, Vec<FacilityIdx>)> {
    let n = inst.clients.len();
    let m = centers.len();
    let cost: Vec<Vec<f64>> = inst
        .clients
        .iter()
        .map(|c| {
            centers
                .iter()
                .map(|&f| dist(c.point, inst.facilities[f]))
                .collect()
        })
        .collect();
    let mut digits = vec![0usize; n];
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let mut counts = vec![vec![0u32; inst.l]; m];
        let mut total = 0.0;
        for (j, &d) in digits.iter().enumerate() {
            counts[d][inst.clients[j].color] += 1;
            total += cost[j][d];
        }
        if accept(&counts) && best.as_ref().is_none_or(|(b, _)| total < *b) {
            best = Some((total, digits.clone()));
        }
        let Some(pos) = (0..n).find(|&j| digits[j] + 1 < m) else {
            break;
        };
        digits[pos] += 1;
        for d in &mut digits[..pos] {
            *d = 0;
        }
    }
    best.map(|(c, d)| (c, d.into_iter().map(|i| centers[i]).collect()))
}

fn finish(
    inst: &FairInstance,
    open: Vec<FacilityIdx>,
    assignment: Vec<FacilityIdx>,
    cost: f64,
) -> Result<Solution> {
    let mut sol = Solution::from_assignment(inst, open, assignment)?;
    sol.cost = cost;
    Ok(sol)
}

/// Exact fair optimum over all center sets of size at most `k` and all
/// assignments. Ties keep the first solution in enumeration order.
pub fn brute_force_opt(
    inst: &FairInstance,
    dist: Option<DistFn<'_>>,
    budget: OracleBudget,
) -> Result<Solution> {
    if inst.clients.is_empty() {
        return Ok(Solution::empty(inst));
    }
    let subsets = subsets_by_size(inst.facilities.len(), inst.k);
    let needed = work(&subsets, inst.clients.len());
    if needed > budget.max_assignments {
        return Err(Error::BudgetExceeded(needed));
    }
    let metric_dist = |a, b| inst.metric.dist(a, b);
    let dist: DistFn<'_> = dist.unwrap_or(&metric_dist);
    let fair = |counts: &[Vec<u32>]| {
        counts
            .iter()
            .all(|c| ratio_feasible(c, &inst.alpha, &inst.beta))
    };
    let mut best: Option<(f64, Vec<FacilityIdx>, Vec<FacilityIdx>)> = None;
    for s in &subsets {
        if let Some((c, a)) = search(inst, s, dist, &fair) {
            if best.as_ref().is_none_or(|(b, _, _)| c < *b) {
                best = Some((c, s.clone(), a));
            }
        }
    }
    let (cost, open, assignment) = best.ok_or(Error::Infeasible)?;
    finish(inst, open, assignment, cost)
}

/// Cheapest assignment to the fixed `centers`: fair when `lambda` is absent,
/// realizing exactly `lambda` when it is given.
pub fn brute_force_fixed_centers(
    inst: &FairInstance,
    centers: &[FacilityIdx],
    lambda: Option<&Loads>,
    budget: OracleBudget,
) -> Result<Solution> {
    let mut centers = centers.to_vec();
    centers.sort_unstable();
    centers.dedup();
    if centers.is_empty() {
        return if inst.clients.is_empty() {
            Ok(Solution::empty(inst))
        } else {
            Err(Error::EmptyCenters)
        };
    }
    if centers.iter().any(|&f| f >= inst.facilities.len()) {
        return Err(Error::InvalidParams("unknown center".into()));
    }
    let needed = work(std::slice::from_ref(&centers), inst.clients.len());
    if needed > budget.max_assignments {
        return Err(Error::BudgetExceeded(needed));
    }
    let target: Option<Vec<Vec<u32>>> = lambda.map(|lam| {
        centers
            .iter()
            .map(|f| lam.get(f).cloned().unwrap_or_else(|| vec![0; inst.l]))
            .collect()
    });
    let accept = |counts: &[Vec<u32>]| match &target {
        Some(t) => counts == t.as_slice(),
        None => counts
            .iter()
            .all(|c| ratio_feasible(c, &inst.alpha, &inst.beta)),
    };
    let metric_dist = |a, b| inst.metric.dist(a, b);
    let (cost, assignment) =
        search(inst, &centers, &metric_dist, &accept).ok_or(Error::Infeasible)?;
    finish(inst, centers, assignment, cost)
}
