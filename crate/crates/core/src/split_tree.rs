//! Randomized split-tree decomposition with per-block portal nets.

use crate::error::{Error, Result};
use crate::hierarchy::{self, BlockId, Centers, Hierarchy, Leaves, DEFAULT_LEVEL_CAP};
use crate::metric::{MetricSpace, PointId, DIST_TOL};
use crate::nets::greedy_extend;

#[derive(Debug, Clone)]
pub struct SplitTree {
    hierarchy: Hierarchy,
    rho: f64,
    portals: Vec<Vec<PointId>>,
}

pub fn build_split_tree(
    metric: &MetricSpace,
    points: &[PointId],
    rho: f64,
    seed: u64,
) -> Result<SplitTree> {
    build_split_tree_capped(metric, points, rho, seed, DEFAULT_LEVEL_CAP)
}

pub fn build_split_tree_capped(
    metric: &MetricSpace,
    points: &[PointId],
    rho: f64,
    seed: u64,
    level_cap: u32,
) -> Result<SplitTree> {
    if !(rho > 0.0 && rho <= 0.5) {
        return Err(Error::InvalidParams(format!(
            "portal density {rho} must lie in (0, 1/2]"
        )));
    }
    let sample = hierarchy::sample(metric, points, seed, Leaves::PerPoint, level_cap)?;
    // Net chain: Y_0 is everything, Y_i thins Y_{i-1} at radius 2^(i-2),
    // floored at the distance unit.
    let mut chain: Vec<Vec<PointId>> = vec![sample.order.clone()];
    for i in 1..=sample.levels.max(1) as i32 {
        let radius = 2f64.powi(i - 2).max(1.0) * sample.unit;
        let prev = chain.last().unwrap();
        chain.push(greedy_extend(Vec::new(), prev, radius, metric));
    }
    let hierarchy = Hierarchy::carve(
        metric,
        &sample,
        Centers::Global(&chain),
        Leaves::PerPoint,
        seed,
    );

    // Portals top-down: a child keeps the parent portals it contains and is
    // topped up greedily, so each portal set stays a net and nests.
    let mut portals = vec![Vec::new(); hierarchy.blocks().len()];
    let rank = |p: PointId| hierarchy.order().iter().position(|&q| q == p).unwrap();
    let order_of = |members: &[PointId]| {
        let mut m = members.to_vec();
        m.sort_by_key(|&p| rank(p));
        m
    };
    let mut top_down = hierarchy.bottom_up();
    top_down.reverse();
    for b in top_down {
        let block = hierarchy.block(b);
        let inherited: Vec<PointId> = match block.parent {
            Some(p) => portals[p]
                .iter()
                .copied()
                .filter(|q| block.members.binary_search(q).is_ok())
                .collect(),
            None => Vec::new(),
        };
        let radius = rho * hierarchy.scale(block.level + 1);
        portals[b] = greedy_extend(inherited, &order_of(&block.members), radius, metric);
    }
    Ok(SplitTree {
        hierarchy,
        rho,
        portals,
    })
}

impl SplitTree {
    pub fn hierarchy(&self) -> &Hierarchy {
        &self.hierarchy
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn portals(&self, block: BlockId) -> &[PointId] {
        &self.portals[block]
    }

    /// Covering and packing radius of the portal net of a level-`level` block.
    pub fn portal_radius(&self, level: u32) -> f64 {
        self.rho * self.hierarchy.scale(level + 1)
    }

    pub fn max_portals(&self) -> usize {
        self.portals.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        self.hierarchy.dump(Some(&self.portals))
    }

    /// Structural check of the hierarchy, the portal nets and their nesting.
    pub fn check(&self) -> std::result::Result<(), String> {
        self.hierarchy.check(true)?;
        let metric = self.hierarchy.metric();
        for b in self.hierarchy.blocks() {
            let ps = &self.portals[b.id];
            let r = self.portal_radius(b.level);
            if ps.iter().any(|p| b.members.binary_search(p).is_err()) {
                return Err(format!("block {} has a portal outside it", b.id));
            }
            for &x in &b.members {
                if !ps
                    .iter()
                    .any(|&p| metric.dist(x, p) <= r * (1.0 + DIST_TOL))
                {
                    return Err(format!(
                        "point {x} is not covered by portals of block {}",
                        b.id
                    ));
                }
            }
            for (i, &p) in ps.iter().enumerate() {
                if ps[i + 1..]
                    .iter()
                    .any(|&q| metric.dist(p, q) < r * (1.0 - DIST_TOL))
                {
                    return Err(format!("portals of block {} are not {r}-separated", b.id));
                }
            }
            if !b.children.is_empty() {
                let below: Vec<PointId> = b
                    .children
                    .iter()
                    .flat_map(|&c| self.portals[c].iter().copied())
                    .collect();
                if ps.iter().any(|p| !below.contains(p)) {
                    return Err(format!(
                        "portals of block {} are not inherited by its children",
                        b.id
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Cheapest way from `u` to `v` through a portal of each one's
/// level-`level` block.
pub fn portal_route_distance(u: PointId, v: PointId, tree: &SplitTree, level: u32) -> Result<f64> {
    let h = tree.hierarchy();
    let unknown = |p| Error::UnknownLeaf(p);
    let bu = h.block_at(u, level).ok_or_else(|| unknown(u))?;
    let bv = h.block_at(v, level).ok_or_else(|| unknown(v))?;
    if bu == bv {
        return Err(Error::SameBlock(u, v));
    }
    let m = h.metric();
    let mut best = f64::INFINITY;
    for &p in tree.portals(bu) {
        for &q in tree.portals(bv) {
            best = best.min(m.dist(u, p) + m.dist(p, q) + m.dist(q, v));
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::t1;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_point_is_root_and_leaf() {
        let m = MetricSpace::line(&[3.0]).unwrap();
        let t = build_split_tree(&m, &[0], 0.5, 1).unwrap();
        let h = t.hierarchy();
        assert_eq!(h.levels(), 0);
        assert_eq!(h.blocks().len(), 1);
        assert_eq!(h.leaf_of(0), Some(h.root()));
        assert_eq!(t.portals(h.root()), &[0]);
    }

    #[test]
    fn two_points_split_below_root_for_every_order() {
        let m = MetricSpace::line(&[0.0, 1.0]).unwrap();
        let mut orders = std::collections::HashSet::new();
        for seed in 0..20 {
            let t = build_split_tree(&m, &[0, 1], 0.5, seed).unwrap();
            let h = t.hierarchy();
            assert_eq!(h.levels(), 1);
            let root = h.block(h.root());
            assert_eq!(root.members, vec![0, 1]);
            assert_eq!(root.children.len(), 2);
            // The root ball has radius 2*varrho >= 1, so it is claimed by
            // the first point in the order, which is the sole root portal.
            assert_eq!(root.center, h.order()[0]);
            assert_eq!(t.portals(h.root()), &[h.order()[0]]);
            orders.insert(h.order().to_vec());
            t.check().unwrap();
        }
        assert_eq!(orders.len(), 2);
    }

    #[test]
    fn colocated_copies_become_separate_leaves() {
        let m = MetricSpace::line(&[5.0, 5.0, 5.0]).unwrap();
        let t = build_split_tree(&m, &[0, 1, 2], 0.5, 3).unwrap();
        let h = t.hierarchy();
        assert_eq!(h.levels(), 1);
        assert_eq!(h.block(h.root()).children.len(), 3);
        t.check().unwrap();
    }

    #[test]
    fn t1_trees_satisfy_all_invariants() {
        let inst = t1();
        let pts = inst.used_points();
        for seed in 0..100 {
            for rho in [0.5, 0.25, 0.1] {
                let t = build_split_tree(&inst.metric, &pts, rho, seed).unwrap();
                t.check().unwrap();
            }
        }
    }

    #[test]
    fn routes_through_forced_portals() {
        let m = MetricSpace::line(&[0.0, 1.0, 2.0, 3.0, 10.0, 11.0, 12.0]).unwrap();
        let pts: Vec<PointId> = (0..7).collect();
        for seed in 0..30 {
            let t = build_split_tree(&m, &pts, 0.5, seed).unwrap();
            let h = t.hierarchy();
            for level in 0..h.levels() {
                for u in 0..7 {
                    for v in 0..7 {
                        if h.block_at(u, level) == h.block_at(v, level) {
                            assert_eq!(
                                portal_route_distance(u, v, &t, level),
                                Err(Error::SameBlock(u, v))
                            );
                            continue;
                        }
                        let r = portal_route_distance(u, v, &t, level).unwrap();
                        let bu = h.block_at(u, level).unwrap();
                        let bv = h.block_at(v, level).unwrap();
                        if t.portals(bu).contains(&u) && t.portals(bv).contains(&v) {
                            assert_eq!(r, m.dist(u, v));
                        }
                        if let ([p], [q]) = (t.portals(bu), t.portals(bv)) {
                            assert_eq!(r, m.dist(u, *p) + m.dist(*p, *q) + m.dist(*q, v));
                        }
                        assert!(r >= m.dist(u, v) - 1e-9);
                        assert!(r <= m.dist(u, v) + 4.0 * t.portal_radius(level) + 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn random_plane_trees_are_well_formed() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for seed in 0..40 {
            let coords: Vec<[f64; 2]> = (0..15)
                .map(|_| [rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)])
                .collect();
            let m = MetricSpace::euclidean(coords).unwrap();
            let pts: Vec<PointId> = m.points().collect();
            let t = build_split_tree(&m, &pts, 0.3, seed).unwrap();
            t.check().unwrap();
        }
    }

    #[test]
    fn level_cap_is_enforced() {
        let m = MetricSpace::line(&[0.0, 1.0, 1e6]).unwrap();
        let err = build_split_tree_capped(&m, &[0, 1, 2], 0.5, 0, 10).unwrap_err();
        assert!(matches!(err, Error::AspectRatioTooLarge { cap: 10, .. }));
    }

    #[test]
    fn dump_lists_every_block() {
        let inst = t1();
        let t = build_split_tree(&inst.metric, &inst.used_points(), 0.5, 2).unwrap();
        let v: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(v["levels"], t.hierarchy().levels());
        let blocks = v["blocks"].as_array().unwrap();
        assert_eq!(blocks.len(), t.hierarchy().blocks().len());
        for key in ["id", "level", "center", "members", "portals", "parent"] {
            assert!(blocks[0].get(key).is_some(), "missing {key}");
        }
    }
}
