//! Exact fair k-median on an HST by left-to-right child absorption, and the
//! `O(log k)` solver built on it.

use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimate::local_search_centers;
use crate::flow::assign_clients;
use crate::hierarchy::BlockId;
use crate::hst::{build_hst, Hst};
use crate::model::{ratio_feasible, FacilityIdx, FairInstance, Loads, SolveOutcome};
use crate::nets::reduce_to_centers;

/// State of a subtree, or of the first `absorbed` children of a block.
/// `boundary[t] > 0` clients of color `t` enter from outside to be served
/// inside; `< 0` clients inside are served outside.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeConfig {
    pub block: BlockId,
    pub budget: u32,
    pub absorbed: u32,
    pub boundary: Vec<i32>,
}

impl TreeConfig {
    pub fn enter(&self) -> Vec<u32> {
        self.boundary.iter().map(|&q| q.max(0) as u32).collect()
    }

    /// Nonpositive counts.
    pub fn leave(&self) -> Vec<i32> {
        self.boundary.iter().map(|&q| q.min(0)).collect()
    }

    pub fn crossings(&self) -> u64 {
        crossings(&self.boundary)
    }
}

fn crossings(boundary: &[i32]) -> u64 {
    boundary.iter().map(|q| q.unsigned_abs() as u64).sum()
}

/// Cost of the prefix made of the first child alone: the child's cost plus
/// every crossing client paying the connecting edge.
pub fn absorb_first_child(edge: f64, child_cost: f64, child: &TreeConfig) -> f64 {
    child_cost + edge * child.crossings() as f64
}

/// Cost of extending a prefix by the next child.
pub fn absorb_next_child(edge: f64, prefix_cost: f64, child_cost: f64, child: &TreeConfig) -> f64 {
    prefix_cost + child_cost + edge * child.crossings() as f64
}

/// Every count vector a single open facility may serve: nonzero, within the
/// per-color client totals, and inside the ratio bounds.
pub fn fair_loads(inst: &FairInstance) -> Vec<Vec<u32>> {
    let hist = inst.color_histogram();
    let mut out = Vec::new();
    let mut v = vec![0u32; inst.l];
    loop {
        if v.iter().any(|&q| q > 0) && ratio_feasible(&v, &inst.alpha, &inst.beta) {
            out.push(v.clone());
        }
        let Some(t) = (0..inst.l).find(|&t| v[t] < hist[t]) else {
            break;
        };
        v[t] += 1;
        for x in &mut v[..t] {
            *x = 0;
        }
    }
    out
}

#[derive(Debug, Clone)]
enum Back {
    Leaf(Vec<(FacilityIdx, Vec<u32>)>),
    /// Prefix of one child: same boundary, child budget.
    First(u32),
    Next {
        prev: (Vec<i32>, u32),
        child: (Vec<i32>, u32),
    },
}

/// Costs by budget; entry `k` is the best with at most `k` open facilities.
#[derive(Debug, Clone)]
struct Entry {
    cost: Vec<f64>,
    back: Vec<Option<Back>>,
}

impl Entry {
    fn new(k: usize) -> Entry {
        Entry {
            cost: vec![f64::INFINITY; k + 1],
            back: vec![None; k + 1],
        }
    }

    fn offer(&mut self, k: usize, cost: f64, back: impl FnOnce() -> Back) {
        if cost < self.cost[k] {
            self.cost[k] = cost;
            self.back[k] = Some(back());
        }
    }

    fn close_under_budget(&mut self) {
        for k in 1..self.cost.len() {
            if self.cost[k - 1] <= self.cost[k] {
                self.cost[k] = self.cost[k - 1];
                self.back[k] = self.back[k - 1].clone();
            }
        }
    }
}

type Table = BTreeMap<Vec<i32>, Entry>;

/// Filled dynamic-programming tables for one HST. Costs are in tree edge
/// units (a level-`i` edge has length `2^i`).
#[derive(Debug, Clone)]
pub struct HstTable {
    k: usize,
    l: usize,
    /// Per block: prefix tables `T_1..T_u`, or the single leaf table.
    tables: Vec<Vec<Table>>,
    children: Vec<Vec<BlockId>>,
    root: BlockId,
    states: u64,
}

struct Caps {
    inside: Vec<Vec<u32>>,
    total: Vec<u32>,
}

impl Caps {
    fn admits(&self, inside: &[u32], net: &[i32]) -> bool {
        net.iter()
            .enumerate()
            .all(|(t, &q)| q >= -(inside[t] as i32) && q <= (self.total[t] - inside[t]) as i32)
    }
}

fn add(a: &[u32], b: &[u32]) -> Vec<u32> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

impl HstTable {
    pub fn fill(inst: &FairInstance, tree: &Hst, max_states: u64) -> Result<HstTable> {
        let h = tree.hierarchy();
        let (k, l) = (inst.k, inst.l);
        let n_blocks = h.blocks().len();
        let mut leaf_clients = vec![Vec::new(); n_blocks];
        let mut leaf_facilities = vec![Vec::new(); n_blocks];
        for (j, c) in inst.clients.iter().enumerate() {
            let b = h.leaf_of(c.point).ok_or(Error::UnknownLeaf(c.point))?;
            leaf_clients[b].push(j);
        }
        for (f, &p) in inst.facilities.iter().enumerate() {
            let b = h.leaf_of(p).ok_or(Error::UnknownLeaf(p))?;
            leaf_facilities[b].push(f);
        }
        let mut caps = Caps {
            inside: vec![vec![0; l]; n_blocks],
            total: inst.color_histogram(),
        };
        let order = h.bottom_up();
        for &b in &order {
            let block = h.block(b);
            caps.inside[b] = if block.children.is_empty() {
                let mut v = vec![0; l];
                for &j in &leaf_clients[b] {
                    v[inst.clients[j].color] += 1;
                }
                v
            } else {
                block
                    .children
                    .iter()
                    .fold(vec![0; l], |acc, &c| add(&acc, &caps.inside[c]))
            };
        }
        let loads = fair_loads(inst);
        let mut table = HstTable {
            k,
            l,
            tables: vec![Vec::new(); n_blocks],
            children: h.blocks().iter().map(|b| b.children.clone()).collect(),
            root: h.root(),
            states: 0,
        };
        for &b in &order {
            let block = h.block(b);
            if block.children.is_empty() {
                let t = leaf_table(
                    inst,
                    &leaf_clients[b],
                    &leaf_facilities[b],
                    &loads,
                    &caps,
                    &caps.inside[b],
                );
                table.count(t.len(), max_states)?;
                table.tables[b] = vec![t];
                continue;
            }
            let edge = (1u64 << block.level) as f64;
            let mut prefixes: Vec<Table> = Vec::with_capacity(block.children.len());
            let mut inside = vec![0; l];
            for (i, &c) in block.children.iter().enumerate() {
                inside = add(&inside, &caps.inside[c]);
                let child = table.tables[c].last().expect("child filled");
                let mut next = Table::new();
                if i == 0 {
                    for (net, e) in child {
                        let cfg = TreeConfig {
                            block: c,
                            budget: 0,
                            absorbed: 0,
                            boundary: net.clone(),
                        };
                        let mut entry = Entry::new(k);
                        for kc in 0..=k {
                            if e.cost[kc].is_finite() {
                                entry.offer(kc, absorb_first_child(edge, e.cost[kc], &cfg), || {
                                    Back::First(kc as u32)
                                });
                            }
                        }
                        next.insert(net.clone(), entry);
                    }
                } else {
                    let prev = &prefixes[i - 1];
                    for (pnet, pe) in prev {
                        for (cnet, ce) in child {
                            let net: Vec<i32> = pnet.iter().zip(cnet).map(|(a, b)| a + b).collect();
                            if !caps.admits(&inside, &net) {
                                continue;
                            }
                            let cfg = TreeConfig {
                                block: c,
                                budget: 0,
                                absorbed: 0,
                                boundary: cnet.clone(),
                            };
                            let entry = next.entry(net).or_insert_with(|| Entry::new(k));
                            for kp in 0..=k {
                                if !pe.cost[kp].is_finite() {
                                    continue;
                                }
                                for kc in 0..=k - kp {
                                    if !ce.cost[kc].is_finite() {
                                        continue;
                                    }
                                    let cost =
                                        absorb_next_child(edge, pe.cost[kp], ce.cost[kc], &cfg);
                                    entry.offer(kp + kc, cost, || Back::Next {
                                        prev: (pnet.clone(), kp as u32),
                                        child: (cnet.clone(), kc as u32),
                                    });
                                }
                            }
                        }
                    }
                }
                for e in next.values_mut() {
                    e.close_under_budget();
                }
                table.count(next.len(), max_states)?;
                prefixes.push(next);
            }
            table.tables[b] = prefixes;
        }
        Ok(table)
    }

    fn count(&mut self, added: usize, max_states: u64) -> Result<()> {
        self.states += added as u64;
        if self.states > max_states {
            return Err(Error::StateBudgetExceeded(self.states));
        }
        Ok(())
    }

    /// Number of stored boundary vectors over all tables.
    pub fn states(&self) -> u64 {
        self.states
    }

    /// Best cost with at most `config.budget` open facilities, for a block's
    /// first `config.absorbed` children (zero for leaves).
    pub fn cost(&self, config: &TreeConfig) -> Option<f64> {
        let tables = self.tables.get(config.block)?;
        let idx = (config.absorbed as usize).max(1) - 1;
        let e = tables.get(idx)?.get(&config.boundary)?;
        let c = *e.cost.get(config.budget.min(self.k as u32) as usize)?;
        c.is_finite().then_some(c)
    }

    fn root_config(&self) -> TreeConfig {
        TreeConfig {
            block: self.root,
            budget: self.k as u32,
            absorbed: self.children[self.root].len() as u32,
            boundary: vec![0; self.l],
        }
    }

    /// Optimal fair cost under the tree metric, in edge units.
    pub fn root_cost(&self) -> Option<f64> {
        self.cost(&self.root_config())
    }

    /// Open facilities and their per-color loads in an optimal root solution.
    pub fn traceback(&self) -> Result<(Vec<FacilityIdx>, Loads)> {
        if self.root_cost().is_none() {
            return Err(Error::Infeasible);
        }
        let mut lambda = BTreeMap::new();
        let root = self.root_config();
        let mut stack = vec![(
            root.block,
            self.tables[root.block].len() - 1,
            root.boundary,
            root.budget,
        )];
        let corrupt = |what: &str| Error::CorruptTable(what.into());
        while let Some((block, idx, net, k)) = stack.pop() {
            let entry = self.tables[block]
                .get(idx)
                .and_then(|t| t.get(&net))
                .ok_or_else(|| corrupt("missing entry"))?;
            match entry.back[k as usize]
                .as_ref()
                .ok_or_else(|| corrupt("missing backpointer"))?
            {
                Back::Leaf(open) => {
                    for (f, load) in open {
                        lambda.insert(*f, load.clone());
                    }
                }
                Back::First(kc) => {
                    let c = self.children[block][0];
                    stack.push((c, self.tables[c].len() - 1, net, *kc));
                }
                Back::Next { prev, child } => {
                    let c = self.children[block][idx];
                    stack.push((block, idx - 1, prev.0.clone(), prev.1));
                    stack.push((c, self.tables[c].len() - 1, child.0.clone(), child.1));
                }
            }
        }
        Ok((lambda.keys().copied().collect(), lambda))
    }
}

fn leaf_table(
    inst: &FairInstance,
    clients: &[usize],
    facilities: &[FacilityIdx],
    loads: &[Vec<u32>],
    caps: &Caps,
    inside: &[u32],
) -> Table {
    let k = inst.k;
    let mut start = vec![0i32; inst.l];
    for &j in clients {
        start[inst.clients[j].color] -= 1;
    }
    // Fold facilities one at a time; all choices inside a leaf are free.
    // (boundary, opened) -> loads of the facilities opened so far.
    type Folded = BTreeMap<(Vec<i32>, usize), Vec<(FacilityIdx, Vec<u32>)>>;
    let mut states: Folded = BTreeMap::new();
    states.insert((start, 0), Vec::new());
    for &f in facilities {
        let mut next = states.clone();
        for ((net, used), open) in &states {
            if *used == k {
                continue;
            }
            for load in loads {
                let n: Vec<i32> = net.iter().zip(load).map(|(a, &b)| a + b as i32).collect();
                next.entry((n, used + 1)).or_insert_with(|| {
                    let mut o = open.clone();
                    o.push((f, load.clone()));
                    o
                });
            }
        }
        states = next;
    }
    let mut table = Table::new();
    for ((net, used), open) in states {
        if !caps.admits(inside, &net) {
            continue;
        }
        let entry = table.entry(net).or_insert_with(|| Entry::new(k));
        entry.offer(used, 0.0, || Back::Leaf(open));
    }
    for e in table.values_mut() {
        e.close_under_budget();
    }
    table
}

/// Zero-cost configurations of a leaf, one per reachable boundary and budget.
pub fn tree_leaf_entries(
    inst: &FairInstance,
    tree: &Hst,
    block: BlockId,
) -> Result<Vec<(TreeConfig, f64)>> {
    let h = tree.hierarchy();
    if !h.block(block).children.is_empty() {
        return Err(Error::InvalidParams(format!("block {block} is not a leaf")));
    }
    let members = &h.block(block).members;
    let clients: Vec<usize> = (0..inst.clients.len())
        .filter(|&j| members.binary_search(&inst.clients[j].point).is_ok())
        .collect();
    let facilities: Vec<FacilityIdx> = (0..inst.facilities.len())
        .filter(|&f| members.binary_search(&inst.facilities[f]).is_ok())
        .collect();
    let mut inside = vec![0u32; inst.l];
    for &j in &clients {
        inside[inst.clients[j].color] += 1;
    }
    let caps = Caps {
        inside: Vec::new(),
        total: inst.color_histogram(),
    };
    let table = leaf_table(
        inst,
        &clients,
        &facilities,
        &fair_loads(inst),
        &caps,
        &inside,
    );
    let mut out = Vec::new();
    for (net, e) in table {
        for k in 0..=inst.k {
            // Report the exact budget at which each boundary first appears.
            if e.cost[k].is_finite() && (k == 0 || !e.cost[k - 1].is_finite()) {
                out.push((
                    TreeConfig {
                        block,
                        budget: k as u32,
                        absorbed: 0,
                        boundary: net.clone(),
                    },
                    0.0,
                ));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogKOptions {
    pub seed: u64,
    pub trees: usize,
    /// Above this many clients plus facilities, points are first moved onto
    /// local-search centers.
    pub reduce_threshold: usize,
    pub max_states: u64,
}

impl Default for LogKOptions {
    fn default() -> Self {
        LogKOptions {
            seed: 0,
            trees: 1,
            reduce_threshold: 12,
            max_states: 10_000_000,
        }
    }
}

/// Independent per-tree seeds derived from one seed.
pub fn tree_seeds(seed: u64, trees: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trees).map(|_| rng.next_u64()).collect()
}

/// Best of `trees` HST samples: each tree's optimal (F, λ) is realized by a
/// min-cost assignment and costed in the original metric.
pub fn solve_log_k(inst: &FairInstance, opts: LogKOptions) -> Result<SolveOutcome> {
    if opts.trees == 0 {
        return Err(Error::InvalidParams("at least one tree is required".into()));
    }
    if inst.clients.is_empty() {
        return Ok(SolveOutcome::empty(inst));
    }
    let embedded = if inst.size() > opts.reduce_threshold {
        let centers: Vec<_> = local_search_centers(inst)
            .into_iter()
            .map(|f| inst.facilities[f])
            .collect();
        reduce_to_centers(inst, &centers)?.0
    } else {
        inst.clone()
    };
    let points = embedded.used_points();
    let runs: Vec<Result<SolveOutcome>> = tree_seeds(opts.seed, opts.trees)
        .into_par_iter()
        .map(|seed| {
            let tree = build_hst(&embedded.metric, &points, seed)?;
            let table = HstTable::fill(&embedded, &tree, opts.max_states)?;
            let (open, lambda) = table.traceback()?;
            let solution = assign_clients(inst, &open, &lambda)?;
            Ok(SolveOutcome {
                solution,
                states: table.states(),
            })
        })
        .collect();
    SolveOutcome::best(runs)
}
