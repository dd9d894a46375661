//! Per-color bipartite graphs between a block's portal flows and its
//! children's, and their minimum-weight perfect matchings.

use crate::dp_doubling::DoublingConfig;
use crate::error::{Error, Result};
use crate::metric::{MetricSpace, PointId};
use crate::split_tree::SplitTree;

/// One block's signed flow for a single color: `net[i] > 0` clients enter
/// through portal `i`, `net[i] < 0` clients leave through it.
#[derive(Debug, Clone, Copy)]
pub struct PortalFlow<'a> {
    pub portals: &'a [PointId],
    pub net: &'a [i32],
}

impl PortalFlow<'_> {
    fn entering(&self) -> i64 {
        self.net.iter().map(|&q| q.max(0) as i64).sum()
    }

    fn leaving(&self) -> i64 {
        self.net.iter().map(|&q| (-q).max(0) as i64).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VertexClass {
    /// A client entering the parent block (left side).
    ParentEnter,
    /// A client leaving a child block (left side).
    ChildLeave,
    /// A client entering a child block (right side).
    ChildEnter,
    /// A client leaving the parent block (right side).
    ParentLeave,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub class: VertexClass,
    pub portal: PointId,
    /// Child index for the child classes.
    pub child: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchGraph {
    pub left: Vec<Vertex>,
    pub right: Vec<Vertex>,
    /// `(left, right, weight)`.
    pub edges: Vec<(usize, usize, f64)>,
}

impl MatchGraph {
    pub fn is_empty(&self) -> bool {
        self.left.is_empty() && self.right.is_empty()
    }

    /// Dense weights, `None` where no edge exists.
    pub fn weights(&self) -> Vec<Vec<Option<f64>>> {
        let mut w = vec![vec![None; self.right.len()]; self.left.len()];
        for &(a, b, c) in &self.edges {
            w[a][b] = Some(w[a][b].map_or(c, |x: f64| x.min(c)));
        }
        w
    }
}

fn expand(
    flow: &PortalFlow<'_>,
    positive: bool,
    class: VertexClass,
    child: Option<usize>,
    out: &mut Vec<Vertex>,
) {
    for (i, &q) in flow.net.iter().enumerate() {
        let count = if positive { q.max(0) } else { (-q).max(0) };
        for _ in 0..count {
            out.push(Vertex {
                class,
                portal: flow.portals[i],
                child,
            });
        }
    }
}

/// Builds the graph for one color. Left: clients entering the parent and
/// clients leaving a child. Right: clients entering a child and clients
/// leaving the parent.
pub fn build_phi(
    parent: PortalFlow<'_>,
    children: &[PortalFlow<'_>],
    metric: &MetricSpace,
) -> Result<MatchGraph> {
    let mut left = Vec::new();
    let mut right = Vec::new();
    expand(&parent, true, VertexClass::ParentEnter, None, &mut left);
    for (j, c) in children.iter().enumerate() {
        expand(c, false, VertexClass::ChildLeave, Some(j), &mut left);
    }
    for (j, c) in children.iter().enumerate() {
        expand(c, true, VertexClass::ChildEnter, Some(j), &mut right);
    }
    expand(&parent, false, VertexClass::ParentLeave, None, &mut right);
    if left.len() != right.len() {
        return Err(Error::InconsistentConfigs(format!(
            "{} left vertices against {} right vertices",
            left.len(),
            right.len()
        )));
    }
    let mut edges = Vec::new();
    for (a, u) in left.iter().enumerate() {
        for (b, v) in right.iter().enumerate() {
            use VertexClass::*;
            let joined = match (u.class, v.class) {
                (ParentEnter, ChildEnter) | (ChildLeave, ParentLeave) => true,
                (ChildLeave, ChildEnter) => u.child != v.child,
                _ => false,
            };
            if joined {
                edges.push((a, b, metric.dist(u.portal, v.portal)));
            }
        }
    }
    Ok(MatchGraph { left, right, edges })
}

/// Whether the per-color flows admit a perfect matching (closed form of
/// Hall's condition for this graph shape).
pub fn flows_consistent(parent: &[i32], children: &[&[i32]]) -> bool {
    let pos = |v: &[i32]| v.iter().map(|&q| q.max(0) as i64).sum::<i64>();
    let neg = |v: &[i32]| v.iter().map(|&q| (-q).max(0) as i64).sum::<i64>();
    let (a, d) = (pos(parent), neg(parent));
    let c: i64 = children.iter().map(|v| pos(v)).sum();
    let b: i64 = children.iter().map(|v| neg(v)).sum();
    a + b == c + d && a <= c && children.iter().all(|v| pos(v) + neg(v) <= c + d)
}

/// Minimum-weight perfect matching by shortest augmenting paths with
/// potentials. Returns `(left, right)` pairs and the total weight.
pub fn min_weight_perfect_matching(g: &MatchGraph) -> Result<(Vec<(usize, usize)>, f64)> {
    let n = g.left.len();
    if n != g.right.len() {
        return Err(Error::InconsistentConfigs("sides differ in size".into()));
    }
    let w = g.weights();
    let pairs = hungarian(n, |a, b| w[a][b])?;
    let total = pairs.iter().map(|&(a, b)| w[a][b].unwrap()).sum();
    Ok((pairs, total))
}

/// `cost(a, b)` is `None` where no edge exists. 1-based arrays with a
/// virtual column 0, in the classic formulation.
fn hungarian(n: usize, cost: impl Fn(usize, usize) -> Option<f64>) -> Result<Vec<(usize, usize)>> {
    const INF: f64 = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                if let Some(c) = cost(i0 - 1, j - 1) {
                    let cur = c - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if delta == INF {
                return Err(Error::NoPerfectMatching);
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> = (1..=n).map(|j| (owner[j] - 1, j - 1)).collect();
    pairs.sort_unstable();
    Ok(pairs)
}

/// Weight of the minimum matching for one color, zero for an empty graph.
pub fn tau_color(
    parent: PortalFlow<'_>,
    children: &[PortalFlow<'_>],
    metric: &MetricSpace,
) -> Result<f64> {
    if parent.entering() + parent.leaving() == 0
        && children.iter().all(|c| c.entering() + c.leaving() == 0)
    {
        return Ok(0.0);
    }
    let g = build_phi(parent, children, metric)?;
    Ok(min_weight_perfect_matching(&g)?.1)
}

/// Inter-portal routing cost between a block configuration and its
/// children's, summed over colors.
pub fn tau(
    parent: &DoublingConfig,
    children: &[&DoublingConfig],
    tree: &SplitTree,
    colors: usize,
) -> Result<f64> {
    let metric = tree.hierarchy().metric();
    let mut total = 0.0;
    for t in 0..colors {
        let pnet = parent.color_net(t, colors);
        let cnets: Vec<Vec<i32>> = children.iter().map(|c| c.color_net(t, colors)).collect();
        let pf = PortalFlow {
            portals: tree.portals(parent.block),
            net: &pnet,
        };
        let cfs: Vec<PortalFlow<'_>> = children
            .iter()
            .zip(&cnets)
            .map(|(c, net)| PortalFlow {
                portals: tree.portals(c.block),
                net,
            })
            .collect();
        total += tau_color(pf, &cfs, metric)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(g: &MatchGraph) -> Option<f64> {
        let w = g.weights();
        let n = g.left.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best: Option<f64> = None;
        fn rec(k: usize, perm: &mut Vec<usize>, w: &[Vec<Option<f64>>], best: &mut Option<f64>) {
            let n = perm.len();
            if k == n {
                let total: Option<f64> = (0..n).map(|i| w[i][perm[i]]).sum();
                if let Some(t) = total {
                    *best = Some(best.map_or(t, |b| b.min(t)));
                }
                return;
            }
            for i in k..n {
                perm.swap(k, i);
                rec(k + 1, perm, w, best);
                perm.swap(k, i);
            }
        }
        rec(0, &mut perm, &w, &mut best);
        best
    }

    fn line(n: usize) -> MetricSpace {
        MetricSpace::line(&(0..n).map(|i| (i * i) as f64).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn single_forced_edge() {
        let m = line(4);
        let g = build_phi(
            PortalFlow {
                portals: &[0],
                net: &[1],
            },
            &[PortalFlow {
                portals: &[2],
                net: &[1],
            }],
            &m,
        )
        .unwrap();
        assert_eq!(g.left.len(), 1);
        assert_eq!(g.edges, vec![(0, 0, 4.0)]);
    }

    #[test]
    fn cross_child_edge() {
        let m = line(4);
        let g = build_phi(
            PortalFlow {
                portals: &[0],
                net: &[0],
            },
            &[
                PortalFlow {
                    portals: &[1],
                    net: &[-1],
                },
                PortalFlow {
                    portals: &[3],
                    net: &[1],
                },
            ],
            &m,
        )
        .unwrap();
        assert_eq!(g.left[0].class, VertexClass::ChildLeave);
        assert_eq!(g.right[0].class, VertexClass::ChildEnter);
        assert_eq!(g.edges, vec![(0, 0, 8.0)]);
    }

    #[test]
    fn same_child_pairs_are_not_joined() {
        let m = line(4);
        let g = build_phi(
            PortalFlow {
                portals: &[0],
                net: &[0],
            },
            &[PortalFlow {
                portals: &[1, 2],
                net: &[-1, 1],
            }],
            &m,
        )
        .unwrap();
        assert!(g.edges.is_empty());
        assert_eq!(
            min_weight_perfect_matching(&g),
            Err(Error::NoPerfectMatching)
        );
        assert!(!flows_consistent(&[0], &[&[-1, 1]]));
    }

    #[test]
    fn unbalanced_sides_are_rejected() {
        let m = line(2);
        let err = build_phi(
            PortalFlow {
                portals: &[0],
                net: &[2],
            },
            &[PortalFlow {
                portals: &[1],
                net: &[1],
            }],
            &m,
        );
        assert!(matches!(err, Err(Error::InconsistentConfigs(_))));
    }

    #[test]
    fn empty_and_tiny_matchings() {
        let empty = MatchGraph {
            left: vec![],
            right: vec![],
            edges: vec![],
        };
        assert_eq!(min_weight_perfect_matching(&empty).unwrap().1, 0.0);
        let v = Vertex {
            class: VertexClass::ParentEnter,
            portal: 0,
            child: None,
        };
        let one = MatchGraph {
            left: vec![v],
            right: vec![v],
            edges: vec![(0, 0, 3.0)],
        };
        assert_eq!(
            min_weight_perfect_matching(&one).unwrap(),
            (vec![(0, 0)], 3.0)
        );
    }

    #[test]
    fn complete_graphs_match_permutation_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = Vertex {
            class: VertexClass::ParentEnter,
            portal: 0,
            child: None,
        };
        for n in 1..=6 {
            for _ in 0..20 {
                let mut edges = Vec::new();
                for a in 0..n {
                    for b in 0..n {
                        if rng.gen_bool(0.7) || n == 5 {
                            edges.push((a, b, rng.gen_range(0..20) as f64));
                        }
                    }
                }
                let g = MatchGraph {
                    left: vec![v; n],
                    right: vec![v; n],
                    edges,
                };
                match (min_weight_perfect_matching(&g), brute(&g)) {
                    (Ok((pairs, w)), Some(b)) => {
                        assert_eq!(w, b);
                        assert_eq!(pairs.len(), n);
                    }
                    (Err(Error::NoPerfectMatching), None) => {}
                    other => panic!("mismatch {other:?}"),
                }
            }
        }
    }

    #[test]
    fn consistency_predicate_matches_matching_existence() {
        let m = line(6);
        let portals: [&[PointId]; 3] = [&[0, 1], &[2, 3], &[4, 5]];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut seen = 0;
        while seen < 300 {
            let mut nets: Vec<Vec<i32>> = (0..3)
                .map(|_| (0..2).map(|_| rng.gen_range(-2..=2)).collect())
                .collect();
            let parent = nets.remove(0);
            let children: Vec<&[i32]> = nets.iter().map(Vec::as_slice).collect();
            let pf = PortalFlow {
                portals: portals[0],
                net: &parent,
            };
            let cfs: Vec<PortalFlow<'_>> = children
                .iter()
                .enumerate()
                .map(|(j, n)| PortalFlow {
                    portals: portals[j + 1],
                    net: n,
                })
                .collect();
            let Ok(g) = build_phi(pf, &cfs, &m) else {
                continue;
            };
            if g.left.len() > 6 {
                continue;
            }
            seen += 1;
            let ok = flows_consistent(&parent, &children);
            match min_weight_perfect_matching(&g) {
                Ok((_, w)) => {
                    assert!(ok);
                    assert_eq!(Some(w), brute(&g));
                }
                Err(Error::NoPerfectMatching) => assert!(!ok),
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn tau_sums_colors() {
        let m = line(4);
        let pf = PortalFlow {
            portals: &[0],
            net: &[1],
        };
        let cf = PortalFlow {
            portals: &[2],
            net: &[1],
        };
        let zero = PortalFlow {
            portals: &[0],
            net: &[0],
        };
        assert_eq!(
            tau_color(
                zero,
                &[PortalFlow {
                    portals: &[2],
                    net: &[0]
                }],
                &m
            )
            .unwrap(),
            0.0
        );
        let a = tau_color(pf, &[cf], &m).unwrap();
        let pf2 = PortalFlow {
            portals: &[1],
            net: &[-1],
        };
        let cf2 = PortalFlow {
            portals: &[3],
            net: &[-1],
        };
        let b = tau_color(pf2, &[cf2], &m).unwrap();
        assert_eq!((a, b), (4.0, 8.0));
    }
}
