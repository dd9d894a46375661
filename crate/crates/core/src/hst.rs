//! Hierarchically separated tree embedding with level-`i` edges of length
//! `2^i` (in units of the smallest nonzero distance).

use crate::error::{Error, Result};
use crate::hierarchy::{self, BlockId, Centers, Hierarchy, Leaves, DEFAULT_LEVEL_CAP};
use crate::metric::{MetricSpace, PointId, DIST_TOL};

#[derive(Debug, Clone)]
pub struct Hst {
    hierarchy: Hierarchy,
}

pub fn build_hst(metric: &MetricSpace, points: &[PointId], seed: u64) -> Result<Hst> {
    build_hst_capped(metric, points, seed, DEFAULT_LEVEL_CAP)
}

pub fn build_hst_capped(
    metric: &MetricSpace,
    points: &[PointId],
    seed: u64,
    level_cap: u32,
) -> Result<Hst> {
    let sample = hierarchy::sample(metric, points, seed, Leaves::PerLocation, level_cap)?;
    let hierarchy = Hierarchy::carve(
        metric,
        &sample,
        Centers::WithinParent,
        Leaves::PerLocation,
        seed,
    );
    Ok(Hst { hierarchy })
}

/// Tree distance in edge units: `2^(j+2) - 4` when the lowest common
/// ancestor sits at level `j`, zero within a leaf.
pub fn hst_units(u: PointId, v: PointId, tree: &Hst) -> Result<u64> {
    let h = &tree.hierarchy;
    for p in [u, v] {
        if !h.contains(p) {
            return Err(Error::UnknownLeaf(p));
        }
    }
    let j = h.lca_level(u, v).expect("both points are in the tree");
    Ok((1u64 << (j + 2)) - 4)
}

/// Tree distance in metric units.
pub fn hst_distance(u: PointId, v: PointId, tree: &Hst) -> Result<f64> {
    Ok(hst_units(u, v, tree)? as f64 * tree.hierarchy.unit())
}

impl Hst {
    pub fn hierarchy(&self) -> &Hierarchy {
        &self.hierarchy
    }

    /// Length, in edge units, of the edge from `block` up to its parent.
    pub fn edge_units(&self, block: BlockId) -> Option<u64> {
        let b = self.hierarchy.block(block);
        b.parent.map(|p| 1u64 << self.hierarchy.block(p).level)
    }

    pub fn to_json(&self) -> String {
        self.hierarchy.dump(None)
    }

    /// Structural check: nesting and diameters, edge lengths, and that points
    /// farther apart than `2^(i+1)` never share a level-`i` block.
    pub fn check(&self) -> std::result::Result<(), String> {
        let h = &self.hierarchy;
        h.check(false)?;
        for b in h.blocks() {
            for &c in &b.children {
                if self.edge_units(c) != Some(1 << b.level) {
                    return Err(format!("edge above block {c} has the wrong length"));
                }
            }
        }
        let pts: Vec<PointId> = h.points().collect();
        let m = h.metric();
        for &u in &pts {
            for &v in &pts {
                let j = h.lca_level(u, v).unwrap();
                if m.dist(u, v) > h.scale(j + 1) * (1.0 + DIST_TOL) {
                    return Err(format!(
                        "points {u},{v} share a level-{j} block but are too far apart"
                    ));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::t1;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_point_tree() {
        let m = MetricSpace::line(&[1.0]).unwrap();
        let t = build_hst(&m, &[0], 0).unwrap();
        assert_eq!(t.hierarchy().levels(), 0);
        assert_eq!(hst_distance(0, 0, &t).unwrap(), 0.0);
    }

    #[test]
    fn distant_pair_is_split_at_low_levels() {
        let m = MetricSpace::line(&[0.0, 1.0, 9.0]).unwrap();
        for seed in 0..50 {
            let t = build_hst(&m, &[0, 1, 2], seed).unwrap();
            let h = t.hierarchy();
            t.check().unwrap();
            for level in 0..=2 {
                assert_ne!(h.block_at(1, level), h.block_at(2, level));
            }
        }
    }

    #[test]
    fn path_sum_distances() {
        // Unit spacing: the pair at distance 1 meets at level 1 or above.
        let m = MetricSpace::line(&[0.0, 1.0, 3.0]).unwrap();
        for seed in 0..50 {
            let t = build_hst(&m, &[0, 1, 2], seed).unwrap();
            let h = t.hierarchy();
            for (u, v) in [(0, 1), (1, 2), (0, 2)] {
                let j = h.lca_level(u, v).unwrap();
                let expected = 2 * (1..=j).map(|t| 1u64 << t).sum::<u64>();
                assert_eq!(hst_units(u, v, &t).unwrap(), expected);
                if j == 1 {
                    assert_eq!(expected, 4);
                }
                if j == 2 {
                    assert_eq!(expected, 12);
                }
            }
        }
    }

    #[test]
    fn colocated_points_share_a_leaf() {
        let m = MetricSpace::line(&[0.0, 0.0, 4.0]).unwrap();
        let t = build_hst(&m, &[0, 1, 2], 5).unwrap();
        assert_eq!(t.hierarchy().leaf_of(0), t.hierarchy().leaf_of(1));
        assert_eq!(hst_distance(0, 1, &t).unwrap(), 0.0);
        t.check().unwrap();
    }

    #[test]
    fn unknown_points_are_rejected() {
        let m = MetricSpace::line(&[0.0, 2.0, 5.0]).unwrap();
        let t = build_hst(&m, &[0, 1], 0).unwrap();
        assert_eq!(hst_units(0, 2, &t), Err(Error::UnknownLeaf(2)));
    }

    #[test]
    fn t1_trees_hold_invariants() {
        let inst = t1();
        let pts = inst.used_points();
        for seed in 0..100 {
            build_hst(&inst.metric, &pts, seed)
                .unwrap()
                .check()
                .unwrap();
        }
    }

    #[test]
    fn tree_distance_is_a_metric_that_bounds_the_source() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for seed in 0..30 {
            let coords: Vec<[f64; 2]> = (0..10)
                .map(|_| [rng.gen_range(0.0..20.0), rng.gen_range(0.0..20.0)])
                .collect();
            let m = MetricSpace::euclidean(coords).unwrap();
            let pts: Vec<PointId> = m.points().collect();
            let t = build_hst(&m, &pts, seed).unwrap();
            t.check().unwrap();
            let unit = t.hierarchy().unit();
            for &u in &pts {
                for &v in &pts {
                    let d = hst_distance(u, v, &t).unwrap();
                    assert_eq!(d, hst_distance(v, u, &t).unwrap());
                    assert!(m.dist(u, v) <= d / 2.0 + 2.0 * unit + 1e-9);
                    for &w in &pts {
                        assert!(
                            d <= hst_distance(u, w, &t).unwrap() + hst_distance(w, v, &t).unwrap()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn dump_omits_portals() {
        let inst = t1();
        let t = build_hst(&inst.metric, &inst.used_points(), 1).unwrap();
        let v: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
        assert!(v["blocks"][0].get("portals").is_none());
        assert!(v["blocks"][0].get("members").is_some());
    }
}
