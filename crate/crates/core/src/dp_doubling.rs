//! Portal-flow dynamic program over a split tree, and the `(1 + eps)`
//! solver for doubling metrics built on it.

use std::collections::BTreeMap;
use std::rc::Rc;

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::dp_tree::{fair_loads, solve_log_k, tree_seeds, LogKOptions};
use crate::error::{Error, Result};
use crate::flow::assign_clients;
use crate::hierarchy::BlockId;
use crate::matching::{flows_consistent, tau, tau_color, PortalFlow};
use crate::model::{FacilityIdx, FairInstance, Loads, SolveOutcome};
use crate::nets::preprocess_doubling;
use crate::oracle::{brute_force_opt, OracleBudget};
use crate::split_tree::{build_split_tree, SplitTree};

/// Budget and per-portal, per-color signed client flow of one block.
/// `flows[i * colors + t] > 0`: clients of color `t` enter through portal
/// `i`; `< 0`: they leave through it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DoublingConfig {
    pub block: BlockId,
    pub budget: u32,
    pub flows: Vec<i32>,
}

impl DoublingConfig {
    pub fn zero(block: BlockId, portals: usize, colors: usize) -> DoublingConfig {
        DoublingConfig {
            block,
            budget: 0,
            flows: vec![0; portals * colors],
        }
    }

    pub fn portal_count(&self, colors: usize) -> usize {
        self.flows.len() / colors
    }

    /// Clients of color `t` entering through portal `i`.
    pub fn enter(&self, i: usize, t: usize, colors: usize) -> u32 {
        self.flows[i * colors + t].max(0) as u32
    }

    /// Clients of color `t` leaving through portal `i`, as a nonpositive count.
    pub fn leave(&self, i: usize, t: usize, colors: usize) -> i32 {
        self.flows[i * colors + t].min(0)
    }

    pub fn color_net(&self, t: usize, colors: usize) -> Vec<i32> {
        self.flows.iter().skip(t).step_by(colors).copied().collect()
    }

    pub fn is_zero(&self) -> bool {
        self.flows.iter().all(|&q| q == 0)
    }
}

/// Per-block limits on how many clients of each color may cross its border.
#[derive(Debug, Clone)]
struct Bounds {
    /// Clients of each color inside the block.
    inside: Vec<u32>,
    facility_inside: bool,
    facility_outside: bool,
}

impl Bounds {
    /// Largest total entering and leaving flow for color `t`.
    fn limits(&self, t: usize, total: &[u32]) -> (i32, i32) {
        let enter = if self.facility_inside {
            total[t] - self.inside[t]
        } else {
            0
        };
        let leave = if self.facility_outside {
            self.inside[t]
        } else {
            0
        };
        (enter as i32, leave as i32)
    }
}

#[derive(Debug, Clone)]
enum Back {
    Leaf(Option<(FacilityIdx, Vec<u32>)>),
    Inner {
        states: Rc<[u32]>,
        budgets: Rc<[u32]>,
    },
}

#[derive(Debug, Clone)]
struct State {
    flows: Vec<i32>,
    /// Entry `k` is the best with at most `k` open facilities.
    cost: Vec<f64>,
    back: Vec<Option<Back>>,
}

#[derive(Debug, Clone, Default)]
struct BlockTable {
    states: Vec<State>,
    index: FxHashMap<Vec<i32>, usize>,
}

impl BlockTable {
    fn offer(
        &mut self,
        flows: &[i32],
        k: usize,
        budgets: usize,
        cost: f64,
        back: impl FnOnce() -> Back,
    ) {
        let i = match self.index.get(flows) {
            Some(&i) => i,
            None => {
                self.index.insert(flows.to_vec(), self.states.len());
                self.states.push(State {
                    flows: flows.to_vec(),
                    cost: vec![f64::INFINITY; budgets + 1],
                    back: vec![None; budgets + 1],
                });
                self.states.len() - 1
            }
        };
        let s = &mut self.states[i];
        if cost < s.cost[k] {
            s.cost[k] = cost;
            s.back[k] = Some(back());
        }
    }

    fn close_under_budget(&mut self) {
        for s in &mut self.states {
            for k in 1..s.cost.len() {
                if s.cost[k - 1] <= s.cost[k] {
                    s.cost[k] = s.cost[k - 1];
                    s.back[k] = s.back[k - 1].clone();
                }
            }
        }
    }
}

/// Every vector over `m` portals whose positive parts sum to `enter` and
/// negative parts to `leave`.
fn signed_splits(m: usize, enter: i32, leave: i32) -> Vec<Vec<i32>> {
    fn rec(i: usize, m: usize, a: i32, d: i32, cur: &mut Vec<i32>, out: &mut Vec<Vec<i32>>) {
        if i == m {
            if a == 0 && d == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for v in -d..=a {
            cur.push(v);
            rec(i + 1, m, a - v.max(0), d - (-v).max(0), cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if m > 0 {
        rec(0, m, enter, leave, &mut Vec::with_capacity(m), &mut out);
    } else if enter == 0 && leave == 0 {
        out.push(Vec::new());
    }
    out
}

/// Filled tables for one split tree. Costs are portal-routed distances.
#[derive(Debug, Clone)]
pub struct DoublingTable {
    k: usize,
    l: usize,
    tables: Vec<BlockTable>,
    children: Vec<Vec<BlockId>>,
    root: BlockId,
    states: u64,
}

struct Ctx<'a> {
    inst: &'a FairInstance,
    tree: &'a SplitTree,
    total: Vec<u32>,
    bounds: Vec<Bounds>,
    leaf_clients: Vec<Vec<usize>>,
    leaf_facility: Vec<Option<FacilityIdx>>,
}

impl<'a> Ctx<'a> {
    fn new(inst: &'a FairInstance, tree: &'a SplitTree) -> Result<Ctx<'a>> {
        let h = tree.hierarchy();
        let n = h.blocks().len();
        let mut leaf_clients = vec![Vec::new(); n];
        let mut leaf_facility = vec![None; n];
        for (j, c) in inst.clients.iter().enumerate() {
            leaf_clients[h.leaf_of(c.point).ok_or(Error::UnknownLeaf(c.point))?].push(j);
        }
        for (f, &p) in inst.facilities.iter().enumerate() {
            leaf_facility[h.leaf_of(p).ok_or(Error::UnknownLeaf(p))?] = Some(f);
        }
        let mut inside = vec![vec![0u32; inst.l]; n];
        let mut facilities = vec![0usize; n];
        for b in h.bottom_up() {
            let block = h.block(b);
            if block.children.is_empty() {
                for &j in &leaf_clients[b] {
                    inside[b][inst.clients[j].color] += 1;
                }
                facilities[b] = usize::from(leaf_facility[b].is_some());
            } else {
                for &c in &block.children {
                    for t in 0..inst.l {
                        inside[b][t] += inside[c][t];
                    }
                    facilities[b] += facilities[c];
                }
            }
        }
        let all = inst.facilities.len();
        let bounds = (0..n)
            .map(|b| Bounds {
                inside: inside[b].clone(),
                facility_inside: facilities[b] > 0,
                facility_outside: facilities[b] < all,
            })
            .collect();
        Ok(Ctx {
            inst,
            tree,
            total: inst.color_histogram(),
            bounds,
            leaf_clients,
            leaf_facility,
        })
    }

    fn admits(&self, block: BlockId, flows: &[i32]) -> bool {
        let l = self.inst.l;
        (0..l).all(|t| {
            let (max_in, max_out) = self.bounds[block].limits(t, &self.total);
            let (mut a, mut d) = (0, 0);
            for q in flows.iter().skip(t).step_by(l) {
                a += q.max(&0);
                d += (-q).max(0);
            }
            a <= max_in && d <= max_out
        })
    }

    fn leaf_table(&self, block: BlockId, loads: &[Vec<u32>]) -> BlockTable {
        let (k, l) = (self.inst.k, self.inst.l);
        let mut base = vec![0i32; l];
        for &j in &self.leaf_clients[block] {
            base[self.inst.clients[j].color] -= 1;
        }
        let mut table = BlockTable::default();
        if self.admits(block, &base) {
            table.offer(&base, 0, k, 0.0, || Back::Leaf(None));
        }
        if let Some(f) = self.leaf_facility[block] {
            for load in loads {
                let flows: Vec<i32> = base.iter().zip(load).map(|(a, &b)| a + b as i32).collect();
                if self.admits(block, &flows) {
                    table.offer(&flows, 1, k, 0.0, || Back::Leaf(Some((f, load.clone()))));
                }
            }
        }
        table.close_under_budget();
        table
    }
}

/// Zero-cost leaf configurations: closed or absent facility, or an open
/// facility with each fair load, offset by the leaf's own clients leaving.
pub fn leaf_entries(
    inst: &FairInstance,
    tree: &SplitTree,
    block: BlockId,
) -> Result<Vec<(DoublingConfig, f64)>> {
    if !tree.hierarchy().block(block).children.is_empty() {
        return Err(Error::InvalidParams(format!("block {block} is not a leaf")));
    }
    let ctx = Ctx::new(inst, tree)?;
    let table = ctx.leaf_table(block, &fair_loads(inst));
    let mut out = Vec::new();
    for s in table.states {
        for k in 0..s.cost.len() {
            if s.cost[k].is_finite() && (k == 0 || !s.cost[k - 1].is_finite()) {
                out.push((
                    DoublingConfig {
                        block,
                        budget: k as u32,
                        flows: s.flows.clone(),
                    },
                    0.0,
                ));
            }
        }
    }
    Ok(out)
}

/// Cost of realizing `parent` from the given child configurations and their
/// table costs: the child costs plus the inter-portal matching cost.
pub fn combine(
    tree: &SplitTree,
    colors: usize,
    parent: &DoublingConfig,
    children: &[(&DoublingConfig, f64)],
) -> Result<f64> {
    let h = tree.hierarchy();
    let kids = &h.block(parent.block).children;
    let mut seen = Vec::new();
    for (c, _) in children {
        if !kids.contains(&c.block) || seen.contains(&c.block) {
            return Err(Error::InvalidParams(format!(
                "block {} is not a distinct child",
                c.block
            )));
        }
        seen.push(c.block);
    }
    if children.iter().map(|(c, _)| c.budget).sum::<u32>() > parent.budget {
        return Err(Error::Infeasible);
    }
    for t in 0..colors {
        let p = parent.color_net(t, colors);
        let cs: Vec<Vec<i32>> = children
            .iter()
            .map(|(c, _)| c.color_net(t, colors))
            .collect();
        let refs: Vec<&[i32]> = cs.iter().map(Vec::as_slice).collect();
        if !flows_consistent(&p, &refs) {
            return Err(Error::Infeasible);
        }
    }
    let cfgs: Vec<&DoublingConfig> = children.iter().map(|(c, _)| *c).collect();
    let routing = match tau(parent, &cfgs, tree, colors) {
        Err(Error::NoPerfectMatching) => return Err(Error::Infeasible),
        other => other?,
    };
    Ok(children.iter().map(|(_, c)| c).sum::<f64>() + routing)
}

/// Consistent parent flows for one color, each with its matching cost.
type Options = Rc<Vec<(u32, f64)>>;

impl DoublingTable {
    pub fn fill(inst: &FairInstance, tree: &SplitTree, max_states: u64) -> Result<DoublingTable> {
        let ctx = Ctx::new(inst, tree)?;
        let h = tree.hierarchy();
        let (k, l) = (inst.k, inst.l);
        let loads = fair_loads(inst);
        let mut out = DoublingTable {
            k,
            l,
            tables: vec![BlockTable::default(); h.blocks().len()],
            children: h.blocks().iter().map(|b| b.children.clone()).collect(),
            root: h.root(),
            states: 0,
        };
        for b in h.bottom_up() {
            let table = if h.block(b).children.is_empty() {
                ctx.leaf_table(b, &loads)
            } else {
                out.fill_inner(&ctx, b, max_states)?
            };
            out.states += table.states.len() as u64;
            if out.states > max_states {
                return Err(Error::StateBudgetExceeded(out.states));
            }
            out.tables[b] = table;
        }
        Ok(out)
    }

    fn fill_inner(&self, ctx: &Ctx<'_>, b: BlockId, max_states: u64) -> Result<BlockTable> {
        let (k, l) = (self.k, self.l);
        let h = ctx.tree.hierarchy();
        let metric = h.metric();
        let kids = &self.children[b];
        let parent_portals = ctx.tree.portals(b);
        let m = parent_portals.len();
        let child_tables: Vec<&BlockTable> = kids.iter().map(|&c| &self.tables[c]).collect();
        if child_tables.iter().any(|t| t.states.is_empty()) {
            return Ok(BlockTable::default());
        }
        // Intern each child's per-color nets so combinations are keyed by ids.
        let mut ids: Vec<Vec<Vec<u32>>> = Vec::with_capacity(kids.len());
        let mut nets_by_id: Vec<Vec<Vec<Vec<i32>>>> = Vec::with_capacity(kids.len());
        for t in child_tables.iter() {
            let mut seen: Vec<FxHashMap<Vec<i32>, u32>> = vec![FxHashMap::default(); l];
            let mut nets: Vec<Vec<Vec<i32>>> = vec![Vec::new(); l];
            let per_state = t
                .states
                .iter()
                .map(|s| {
                    (0..l)
                        .map(|c| {
                            let net: Vec<i32> =
                                s.flows.iter().skip(c).step_by(l).copied().collect();
                            *seen[c].entry(net.clone()).or_insert_with(|| {
                                nets[c].push(net);
                                nets[c].len() as u32 - 1
                            })
                        })
                        .collect()
                })
                .collect();
            ids.push(per_state);
            nets_by_id.push(nets);
        }
        // Parent per-color nets are interned too; a parent state is keyed by
        // its tuple of per-color ids.
        let mut parent_ids: Vec<FxHashMap<Vec<i32>, u32>> = vec![FxHashMap::default(); l];
        let mut parent_nets: Vec<Vec<Vec<i32>>> = vec![Vec::new(); l];
        let mut cache: Vec<FxHashMap<Vec<u32>, Options>> = vec![FxHashMap::default(); l];
        let mut slots: FxHashMap<Vec<u32>, usize> = FxHashMap::default();
        let mut key: Vec<u32> = Vec::with_capacity(kids.len());
        let mut slot_key: Vec<u32> = Vec::with_capacity(l);
        let mut states: Vec<State> = Vec::new();
        let mut pick = vec![0usize; kids.len()];
        loop {
            // Parent options per color; an empty list kills the combination.
            let mut per_color: Vec<Options> = Vec::with_capacity(l);
            for t in 0..l {
                key.clear();
                key.extend(pick.iter().enumerate().map(|(j, &i)| ids[j][i][t]));
                let opts = match cache[t].get(key.as_slice()) {
                    Some(o) => o.clone(),
                    None => {
                        let nets: Vec<Vec<i32>> = key
                            .iter()
                            .enumerate()
                            .map(|(j, &id)| nets_by_id[j][t][id as usize].clone())
                            .collect();
                        let found = parent_options(ctx, b, t, &nets, kids, parent_portals, metric)?;
                        let o: Options = Rc::new(
                            found
                                .into_iter()
                                .map(|(net, w)| {
                                    let id =
                                        *parent_ids[t].entry(net.clone()).or_insert_with(|| {
                                            parent_nets[t].push(net);
                                            parent_nets[t].len() as u32 - 1
                                        });
                                    (id, w)
                                })
                                .collect(),
                        );
                        cache[t].insert(key.clone(), o.clone());
                        o
                    }
                };
                if opts.is_empty() {
                    break;
                }
                per_color.push(opts);
            }
            if per_color.len() == l {
                let picked: Vec<&State> = pick
                    .iter()
                    .zip(&child_tables)
                    .map(|(&i, t)| &t.states[i])
                    .collect();
                let (conv, splits) = convolve(&picked, k);
                if conv.iter().any(|c| c.is_finite()) {
                    let picks: Rc<[u32]> = pick.iter().map(|&i| i as u32).collect();
                    let mut choice = vec![0usize; l];
                    loop {
                        let mut routing = 0.0;
                        slot_key.clear();
                        for t in 0..l {
                            let (id, w) = per_color[t][choice[t]];
                            routing += w;
                            slot_key.push(id);
                        }
                        let slot = match slots.get(slot_key.as_slice()) {
                            Some(&i) => i,
                            None => {
                                let mut flows = vec![0i32; m * l];
                                for (t, &id) in slot_key.iter().enumerate() {
                                    for (i, &q) in parent_nets[t][id as usize].iter().enumerate() {
                                        flows[i * l + t] = q;
                                    }
                                }
                                states.push(State {
                                    flows,
                                    cost: vec![f64::INFINITY; k + 1],
                                    back: vec![None; k + 1],
                                });
                                slots.insert(slot_key.clone(), states.len() - 1);
                                if states.len() as u64 + self.states > max_states {
                                    return Err(Error::StateBudgetExceeded(
                                        states.len() as u64 + self.states,
                                    ));
                                }
                                states.len() - 1
                            }
                        };
                        let state = &mut states[slot];
                        for kk in 0..=k {
                            let c = conv[kk] + routing;
                            if c < state.cost[kk] {
                                state.cost[kk] = c;
                                state.back[kk] = Some(Back::Inner {
                                    states: picks.clone(),
                                    budgets: splits[kk].clone(),
                                });
                            }
                        }
                        let Some(t) = (0..l).rev().find(|&t| choice[t] + 1 < per_color[t].len())
                        else {
                            break;
                        };
                        choice[t] += 1;
                        for c in &mut choice[t + 1..] {
                            *c = 0;
                        }
                    }
                }
            }
            let Some(j) = (0..kids.len())
                .rev()
                .find(|&j| pick[j] + 1 < child_tables[j].states.len())
            else {
                break;
            };
            pick[j] += 1;
            for p in &mut pick[j + 1..] {
                *p = 0;
            }
        }
        let mut table = BlockTable {
            index: states
                .iter()
                .enumerate()
                .map(|(i, s)| (s.flows.clone(), i))
                .collect(),
            states,
        };
        table.close_under_budget();
        Ok(table)
    }

    /// Number of stored configurations over all blocks.
    pub fn states(&self) -> u64 {
        self.states
    }

    /// Best cost for `config` with at most `config.budget` open facilities.
    pub fn cost(&self, config: &DoublingConfig) -> Option<f64> {
        let t = self.tables.get(config.block)?;
        let s = &t.states[*t.index.get(&config.flows)?];
        let c = s.cost[(config.budget as usize).min(self.k)];
        c.is_finite().then_some(c)
    }

    pub fn root_config(&self) -> DoublingConfig {
        let m = match self.tables[self.root].states.first() {
            Some(s) => s.flows.len() / self.l,
            None => 0,
        };
        DoublingConfig {
            block: self.root,
            budget: self.k as u32,
            flows: vec![0; m * self.l],
        }
    }

    /// Best portal-routed cost with no flow crossing the root.
    pub fn root_cost(&self) -> Option<f64> {
        self.cost(&self.root_config())
    }

    /// Open facilities and their loads in the best root solution.
    pub fn traceback(&self) -> Result<(Vec<FacilityIdx>, Loads)> {
        if self.root_cost().is_none() {
            return Err(Error::Infeasible);
        }
        let root = self.root_config();
        let start = self.tables[self.root].index[&root.flows];
        let mut lambda = BTreeMap::new();
        let mut stack = vec![(self.root, start, self.k)];
        let corrupt = |what: &str| Error::CorruptTable(what.into());
        while let Some((block, idx, k)) = stack.pop() {
            let state = self.tables[block]
                .states
                .get(idx)
                .ok_or_else(|| corrupt("missing state"))?;
            match state.back[k]
                .as_ref()
                .ok_or_else(|| corrupt("missing backpointer"))?
            {
                Back::Leaf(open) => {
                    if let Some((f, load)) = open {
                        lambda.insert(*f, load.clone());
                    }
                }
                Back::Inner { states, budgets } => {
                    let kids = &self.children[block];
                    if states.len() != kids.len() || budgets.iter().sum::<u32>() as usize > k {
                        return Err(corrupt("backpointer does not fit the block"));
                    }
                    for ((&c, &s), &kc) in kids.iter().zip(states.iter()).zip(budgets.iter()) {
                        stack.push((c, s as usize, kc as usize));
                    }
                }
            }
        }
        Ok((lambda.keys().copied().collect(), lambda))
    }
}

/// Min-plus convolution of the children's cost-by-budget vectors, with the
/// split achieving each total.
fn convolve(states: &[&State], k: usize) -> (Vec<f64>, Vec<Rc<[u32]>>) {
    let mut cost = vec![f64::INFINITY; k + 1];
    let mut split: Vec<Vec<u32>> = vec![Vec::new(); k + 1];
    cost[0] = 0.0;
    for s in states {
        let mut next = vec![f64::INFINITY; k + 1];
        let mut next_split: Vec<Vec<u32>> = vec![Vec::new(); k + 1];
        for a in 0..=k {
            if !cost[a].is_finite() {
                continue;
            }
            for c in 0..=k - a {
                let v = cost[a] + s.cost[c];
                if v < next[a + c] {
                    next[a + c] = v;
                    let mut sp = split[a].clone();
                    sp.push(c as u32);
                    next_split[a + c] = sp;
                }
            }
        }
        cost = next;
        split = next_split;
    }
    (cost, split.into_iter().map(Rc::from).collect())
}

/// All parent flows for color `t` that admit a perfect matching against the
/// children's flows, with the matching cost.
fn parent_options(
    ctx: &Ctx<'_>,
    block: BlockId,
    t: usize,
    nets: &[Vec<i32>],
    kids: &[BlockId],
    parent_portals: &[usize],
    metric: &crate::metric::MetricSpace,
) -> Result<Vec<(Vec<i32>, f64)>> {
    let pos = |v: &[i32]| v.iter().map(|&q| q.max(0)).sum::<i32>();
    let neg = |v: &[i32]| v.iter().map(|&q| (-q).max(0)).sum::<i32>();
    let c: i32 = nets.iter().map(|v| pos(v)).sum();
    let b: i32 = nets.iter().map(|v| neg(v)).sum();
    let widest = nets.iter().map(|v| pos(v) + neg(v)).max().unwrap_or(0);
    let net = c - b;
    let (max_in, max_out) = ctx.bounds[block].limits(t, &ctx.total);
    let lo = 0.max(-net).max(widest - c);
    let hi = b.min(max_out).min(max_in - net);
    let mut out = Vec::new();
    for d in lo..=hi {
        let a = d + net;
        for p in signed_splits(parent_portals.len(), a, d) {
            let children: Vec<PortalFlow<'_>> = kids
                .iter()
                .zip(nets)
                .map(|(&kb, n)| PortalFlow {
                    portals: ctx.tree.portals(kb),
                    net: n,
                })
                .collect();
            let parent = PortalFlow {
                portals: parent_portals,
                net: &p,
            };
            let w = tau_color(parent, &children, metric)?;
            out.push((p, w));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QptasOptions {
    pub epsilon: f64,
    pub seed: u64,
    pub trees: usize,
    /// Portal density; derived from `epsilon` when absent.
    pub rho: Option<f64>,
    pub max_states: u64,
    /// Work cap for the exhaustive cost estimate; larger instances use the
    /// tree solver instead.
    pub oracle_budget: OracleBudget,
}

impl Default for QptasOptions {
    fn default() -> Self {
        QptasOptions {
            epsilon: 0.5,
            seed: 0,
            trees: 1,
            rho: None,
            max_states: 10_000_000,
            oracle_budget: OracleBudget {
                max_assignments: 1_000_000,
            },
        }
    }
}

/// `eps / (d log2 n)` clamped into `(0, 1/2]`.
pub fn default_rho(epsilon: f64, doubling_dim: Option<u32>, n: usize) -> f64 {
    let d = f64::from(doubling_dim.unwrap_or(2).max(1));
    let log_n = (n.max(2) as f64).log2();
    (epsilon / (d * log_n)).min(0.5)
}

/// A feasible solution cost used only to scale the merge threshold.
pub fn estimate_cost(inst: &FairInstance, budget: OracleBudget, seed: u64) -> Result<f64> {
    match brute_force_opt(inst, None, budget) {
        Err(Error::BudgetExceeded(_)) => {
            let opts = LogKOptions {
                seed,
                trees: 3,
                ..LogKOptions::default()
            };
            Ok(solve_log_k(inst, opts)?.solution.cost)
        }
        other => Ok(other?.cost),
    }
}

pub fn solve_qptas(inst: &FairInstance, opts: QptasOptions) -> Result<SolveOutcome> {
    if !(opts.epsilon > 0.0 && opts.epsilon < 1.0) {
        return Err(Error::InvalidParams(format!(
            "epsilon {} must lie in (0, 1)",
            opts.epsilon
        )));
    }
    if opts.trees == 0 {
        return Err(Error::InvalidParams("at least one tree is required".into()));
    }
    if inst.clients.is_empty() {
        return Ok(SolveOutcome::empty(inst));
    }
    let estimate = estimate_cost(inst, opts.oracle_budget, opts.seed)?;
    let (pre, _) = preprocess_doubling(inst, opts.epsilon, estimate)?;
    let rho = opts
        .rho
        .unwrap_or_else(|| default_rho(opts.epsilon, inst.metric.doubling_dim_hint(), inst.size()));
    let points = pre.used_points();
    let runs: Vec<Result<SolveOutcome>> = tree_seeds(opts.seed, opts.trees)
        .into_par_iter()
        .map(|seed| {
            let tree = build_split_tree(&pre.metric, &points, rho, seed)?;
            let table = DoublingTable::fill(&pre, &tree, opts.max_states)?;
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
