//! Min-cost flow with vertex supplies, and the client assignment network
//! that realizes fixed per-facility color counts.

use std::collections::{BTreeMap, VecDeque};

use crate::error::{Error, Result};
use crate::model::{FacilityIdx, FairInstance, Loads, Solution};

#[derive(Debug, Clone, PartialEq)]
pub struct FlowArc {
    pub from: usize,
    pub to: usize,
    pub capacity: i64,
    pub cost: f64,
}

/// Vertices carry supplies `b(v)`: positive supplies units, negative demands.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlowNetwork {
    pub supply: Vec<i64>,
    pub arcs: Vec<FlowArc>,
}

impl FlowNetwork {
    pub fn add_vertex(&mut self, supply: i64) -> usize {
        self.supply.push(supply);
        self.supply.len() - 1
    }

    pub fn add_arc(&mut self, from: usize, to: usize, capacity: i64, cost: f64) -> usize {
        self.arcs.push(FlowArc {
            from,
            to,
            capacity,
            cost,
        });
        self.arcs.len() - 1
    }

    pub fn flow_cost(&self, flow: &[i64]) -> f64 {
        self.arcs
            .iter()
            .zip(flow)
            .map(|(a, &f)| a.cost * f as f64)
            .sum()
    }
}

/// Client-to-(facility, color) network. Arc `i` joins client
/// `pairs[i].0` to facility `pairs[i].1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentNetwork {
    pub network: FlowNetwork,
    pub pairs: Vec<(usize, FacilityIdx)>,
    pub clients: usize,
}

pub fn build_assignment_network(
    inst: &FairInstance,
    open: &[FacilityIdx],
    lambda: &Loads,
) -> Result<AssignmentNetwork> {
    if let Some(f) = lambda.keys().find(|f| !open.contains(f)) {
        return Err(Error::InvalidParams(format!(
            "counts given for closed facility {f}"
        )));
    }
    let hist = inst.color_histogram();
    for (color, &demanded) in hist.iter().enumerate() {
        let supplied: u64 = lambda.values().map(|v| u64::from(v[color])).sum();
        if supplied != u64::from(demanded) {
            return Err(Error::SupplyMismatch {
                color,
                supplied,
                demanded: u64::from(demanded),
            });
        }
    }
    let mut network = FlowNetwork::default();
    for _ in &inst.clients {
        network.add_vertex(1);
    }
    let mut slot = BTreeMap::new();
    for &f in open {
        for color in 0..inst.l {
            let want = lambda.get(&f).map_or(0, |v| v[color]);
            slot.insert((f, color), network.add_vertex(-i64::from(want)));
        }
    }
    let mut pairs = Vec::new();
    for (j, c) in inst.clients.iter().enumerate() {
        for &f in open {
            let cost = inst.metric.dist(c.point, inst.facilities[f]);
            network.add_arc(j, slot[&(f, c.color)], 1, cost);
            pairs.push((j, f));
        }
    }
    Ok(AssignmentNetwork {
        network,
        pairs,
        clients: inst.clients.len(),
    })
}

/// Successive shortest augmenting paths from a super source to a super sink.
/// Returns the integral flow on each arc.
pub fn min_cost_flow(net: &FlowNetwork) -> Result<Vec<i64>> {
    let n = net.supply.len();
    if net.supply.iter().sum::<i64>() != 0 || net.arcs.iter().any(|a| a.capacity < 0) {
        return Err(Error::Infeasible);
    }
    let (source, sink) = (n, n + 1);
    // Residual graph: edge 2i is forward, 2i+1 its reverse.
    let mut to = Vec::new();
    let mut cap = Vec::new();
    let mut cost = Vec::new();
    let mut adj = vec![Vec::new(); n + 2];
    let mut push = |a: usize, b: usize, c: i64, w: f64, adj: &mut Vec<Vec<usize>>| {
        adj[a].push(to.len());
        to.push(b);
        cap.push(c);
        cost.push(w);
        adj[b].push(to.len());
        to.push(a);
        cap.push(0);
        cost.push(-w);
    };
    for a in &net.arcs {
        push(a.from, a.to, a.capacity, a.cost, &mut adj);
    }
    let mut required = 0;
    for (v, &b) in net.supply.iter().enumerate() {
        if b > 0 {
            push(source, v, b, 0.0, &mut adj);
            required += b;
        } else if b < 0 {
            push(v, sink, -b, 0.0, &mut adj);
        }
    }
    let mut sent = 0;
    while sent < required {
        // Bellman-Ford queue variant; residual costs may be negative.
        let mut dist = vec![f64::INFINITY; n + 2];
        let mut via = vec![usize::MAX; n + 2];
        let mut queued = vec![false; n + 2];
        let mut queue = VecDeque::from([source]);
        dist[source] = 0.0;
        while let Some(u) = queue.pop_front() {
            queued[u] = false;
            for &e in &adj[u] {
                let v = to[e];
                if cap[e] > 0 && dist[u] + cost[e] < dist[v] - 1e-12 {
                    dist[v] = dist[u] + cost[e];
                    via[v] = e;
                    if !queued[v] {
                        queued[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        if dist[sink].is_infinite() {
            return Err(Error::Infeasible);
        }
        let mut bottleneck = required - sent;
        let mut v = sink;
        while v != source {
            let e = via[v];
            bottleneck = bottleneck.min(cap[e]);
            v = to[e ^ 1];
        }
        let mut v = sink;
        while v != source {
            let e = via[v];
            cap[e] -= bottleneck;
            cap[e ^ 1] += bottleneck;
            v = to[e ^ 1];
        }
        sent += bottleneck;
    }
    Ok((0..net.arcs.len()).map(|i| cap[2 * i + 1]).collect())
}

/// Reads the client-to-facility mapping off an integral flow.
pub fn extract_assignment(flow: &[i64], net: &AssignmentNetwork) -> Result<Vec<FacilityIdx>> {
    let mut assigned = vec![None; net.clients];
    for (&(j, f), &x) in net.pairs.iter().zip(flow) {
        match x {
            0 => {}
            1 if assigned[j].is_none() => assigned[j] = Some(f),
            _ => return Err(Error::NonIntegralFlow(j)),
        }
    }
    assigned
        .into_iter()
        .enumerate()
        .map(|(j, f)| f.ok_or(Error::NonIntegralFlow(j)))
        .collect()
}

/// Cheapest assignment realizing exactly `lambda` at the `open` facilities.
pub fn assign_clients(
    inst: &FairInstance,
    open: &[FacilityIdx],
    lambda: &Loads,
) -> Result<Solution> {
    let net = build_assignment_network(inst, open, lambda)?;
    let flow = min_cost_flow(&net.network)?;
    let assignment = extract_assignment(&flow, &net)?;
    Solution::from_assignment(inst, open.to_vec(), assignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::t1;
    use crate::metric::MetricSpace;
    use crate::model::Client;

    fn lambda(entries: &[(FacilityIdx, &[u32])]) -> Loads {
        entries.iter().map(|&(f, v)| (f, v.to_vec())).collect()
    }

    #[test]
    fn one_facility_two_colors() {
        let m = MetricSpace::line(&[0.0, 1.0, 2.0]).unwrap();
        let inst = FairInstance::new(
            m,
            vec![Client { point: 1, color: 0 }, Client { point: 2, color: 1 }],
            vec![0],
            1,
            vec![0.0, 0.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        let net = build_assignment_network(&inst, &[0], &lambda(&[(0, &[1, 1])])).unwrap();
        assert_eq!(net.network.supply.len(), 4);
        assert_eq!(net.network.arcs.len(), 2);
        assert_eq!(net.network.supply.iter().sum::<i64>(), 0);
    }

    #[test]
    fn t1_network_and_assignment() {
        let inst = t1();
        let lam = lambda(&[(0, &[1, 1]), (1, &[1, 1])]);
        let net = build_assignment_network(&inst, &[0, 1], &lam).unwrap();
        assert_eq!(net.network.supply.iter().filter(|&&b| b > 0).count(), 4);
        assert_eq!(net.network.supply.len(), 8);
        assert_eq!(net.network.arcs.len(), 8);
        let flow = min_cost_flow(&net.network).unwrap();
        let a = extract_assignment(&flow, &net).unwrap();
        assert_eq!(a, vec![0, 0, 1, 1]);
        assert_eq!(net.network.flow_cost(&flow), 6.0);
        let sol = assign_clients(&inst, &[0, 1], &lam).unwrap();
        assert_eq!(sol.cost, 6.0);
        assert_eq!(sol.lambda, lam);
    }

    #[test]
    fn zero_clients_give_an_empty_network() {
        let m = MetricSpace::line(&[0.0]).unwrap();
        let inst = FairInstance::new(m, vec![], vec![0], 1, vec![0.0], vec![1.0]).unwrap();
        let net = build_assignment_network(&inst, &[], &BTreeMap::new()).unwrap();
        assert!(net.network.supply.is_empty() && net.network.arcs.is_empty());
        assert_eq!(min_cost_flow(&net.network).unwrap(), Vec::<i64>::new());
    }

    #[test]
    fn supply_mismatch_is_reported() {
        let inst = t1();
        let err = build_assignment_network(&inst, &[0, 1], &lambda(&[(0, &[2, 1]), (1, &[1, 1])]));
        assert_eq!(
            err.unwrap_err(),
            Error::SupplyMismatch {
                color: 0,
                supplied: 3,
                demanded: 2
            }
        );
    }

    #[test]
    fn elementary_flows() {
        let mut net = FlowNetwork::default();
        let a = net.add_vertex(1);
        let b = net.add_vertex(0);
        let c = net.add_vertex(-1);
        net.add_arc(a, b, 1, 2.0);
        net.add_arc(b, c, 1, 3.0);
        assert_eq!(min_cost_flow(&net).unwrap(), vec![1, 1]);

        let mut net = FlowNetwork::default();
        let x = net.add_vertex(1);
        let y = net.add_vertex(1);
        let f = net.add_vertex(-2);
        net.add_arc(x, f, 1, 1.0);
        net.add_arc(y, f, 1, 1.0);
        assert_eq!(min_cost_flow(&net).unwrap(), vec![1, 1]);

        let mut net = FlowNetwork::default();
        let x = net.add_vertex(2);
        let f = net.add_vertex(-2);
        net.add_arc(x, f, 1, 1.0);
        assert_eq!(min_cost_flow(&net), Err(Error::Infeasible));
    }

    #[test]
    fn symmetric_ties_keep_the_optimal_cost() {
        let m = MetricSpace::line(&[0.0, 2.0, 1.0, 1.0]).unwrap();
        let inst = FairInstance::new(
            m,
            vec![Client { point: 2, color: 0 }, Client { point: 3, color: 0 }],
            vec![0, 1],
            2,
            vec![0.0],
            vec![1.0],
        )
        .unwrap();
        let sol = assign_clients(&inst, &[0, 1], &lambda(&[(0, &[1]), (1, &[1])])).unwrap();
        assert_eq!(sol.cost, 2.0);
        assert_ne!(sol.assignment[0], sol.assignment[1]);
    }

    #[test]
    fn closed_facility_counts_are_rejected() {
        let inst = t1();
        let err = build_assignment_network(&inst, &[0], &lambda(&[(1, &[2, 2])]));
        assert!(matches!(err, Err(Error::InvalidParams(_))));
    }
}
