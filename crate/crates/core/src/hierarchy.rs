//! Randomized ball carving shared by the split tree and the HST.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{MetricSpace, PointId, DIST_TOL};

pub type BlockId = usize;

/// Largest number of levels a tree may have unless the caller says otherwise.
pub const DEFAULT_LEVEL_CAP: u32 = 48;

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub id: BlockId,
    pub level: u32,
    pub center: PointId,
    /// Sorted ascending.
    pub members: Vec<PointId>,
    pub parent: Option<BlockId>,
    /// Ordered by smallest member id.
    pub children: Vec<BlockId>,
}

/// How colocated points are treated at the bottom level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Leaves {
    /// Every point id becomes its own leaf.
    PerPoint,
    /// Colocated points share a leaf.
    PerLocation,
}

/// How ball centers are chosen at a level.
pub(crate) enum Centers<'a> {
    /// A global center list per level, in carving order.
    Global(&'a [Vec<PointId>]),
    /// The members of the parent block, in carving order.
    WithinParent,
}

/// A nested sequence of partitions, from one block holding everything at
/// `levels` down to leaves at level 0. Every point has exactly one block per
/// level, so single-child chains are kept.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    metric: MetricSpace,
    levels: u32,
    unit: f64,
    varrho: f64,
    order: Vec<PointId>,
    blocks: Vec<Block>,
    root: BlockId,
    /// `path[p][i]` is the level-`i` block holding `p`; empty for points not
    /// in the tree.
    path: Vec<Vec<BlockId>>,
    seed: u64,
}

pub(crate) struct Sample {
    pub order: Vec<PointId>,
    pub varrho: f64,
    pub unit: f64,
    pub levels: u32,
}

pub(crate) fn sample(
    metric: &MetricSpace,
    points: &[PointId],
    seed: u64,
    leaves: Leaves,
    cap: u32,
) -> Result<Sample> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted = points.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != points.len() || sorted.iter().any(|&p| p >= metric.len()) {
        return Err(Error::InvalidParams(
            "tree points must be distinct ids of the metric".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order = sorted;
    order.shuffle(&mut rng);
    let varrho = rng.gen_range(0.5..1.0);
    let unit = metric.min_nonzero_distance(points).unwrap_or(1.0);
    let diam = metric.diameter(points);
    let mut levels = if diam == 0.0 {
        0
    } else {
        let ratio = (diam / unit).log2() - 1e-9;
        let l = ratio.ceil().max(1.0);
        if !l.is_finite() || l > cap as f64 {
            return Err(Error::AspectRatioTooLarge {
                levels: if l.is_finite() { l as u32 } else { u32::MAX },
                cap,
            });
        }
        l as u32
    };
    if levels == 0 && leaves == Leaves::PerPoint && points.len() > 1 {
        levels = 1;
    }
    if levels > cap {
        return Err(Error::AspectRatioTooLarge { levels, cap });
    }
    Ok(Sample {
        order,
        varrho,
        unit,
        levels,
    })
}

impl Hierarchy {
    pub(crate) fn carve(
        metric: &MetricSpace,
        sample: &Sample,
        centers: Centers<'_>,
        leaves: Leaves,
        seed: u64,
    ) -> Hierarchy {
        let levels = sample.levels;
        let rank = {
            let mut rank = vec![usize::MAX; metric.len()];
            for (i, &p) in sample.order.iter().enumerate() {
                rank[p] = i;
            }
            rank
        };
        let mut members = sample.order.clone();
        members.sort_unstable();
        let mut blocks = vec![Block {
            id: 0,
            level: levels,
            center: sample.order[0],
            members,
            parent: None,
            children: Vec::new(),
        }];
        let mut frontier = vec![0];
        for level in (0..levels).rev() {
            let radius = 2f64.powi(level as i32) * sample.varrho * sample.unit;
            let mut next = Vec::new();
            for &pid in &frontier {
                let parent = blocks[pid].members.clone();
                let candidates: Vec<PointId> = match &centers {
                    Centers::Global(per_level) => per_level[level as usize].clone(),
                    Centers::WithinParent => {
                        let mut c = parent.clone();
                        c.sort_by_key(|&p| rank[p]);
                        c
                    }
                };
                // Group members by the first center whose ball claims them.
                let mut groups: Vec<(PointId, Vec<PointId>)> = Vec::new();
                for &x in &parent {
                    let c = candidates
                        .iter()
                        .copied()
                        .find(|&c| metric.dist(x, c) <= radius)
                        .expect("carving centers cover every point");
                    match groups.iter_mut().find(|(g, _)| *g == c) {
                        Some((_, g)) => g.push(x),
                        None => groups.push((c, vec![x])),
                    }
                }
                if level == 0 && leaves == Leaves::PerPoint {
                    groups = groups
                        .into_iter()
                        .flat_map(|(_, g)| g.into_iter().map(|x| (x, vec![x])))
                        .collect();
                }
                groups.sort_by_key(|(_, g)| g[0]);
                for (center, group) in groups {
                    let id = blocks.len();
                    blocks.push(Block {
                        id,
                        level,
                        center,
                        members: group,
                        parent: Some(pid),
                        children: Vec::new(),
                    });
                    blocks[pid].children.push(id);
                    next.push(id);
                }
            }
            frontier = next;
        }
        let mut path = vec![Vec::new(); metric.len()];
        for &p in &sample.order {
            path[p] = vec![usize::MAX; levels as usize + 1];
        }
        for b in &blocks {
            for &p in &b.members {
                path[p][b.level as usize] = b.id;
            }
        }
        Hierarchy {
            metric: metric.clone(),
            levels,
            unit: sample.unit,
            varrho: sample.varrho,
            order: sample.order.clone(),
            blocks,
            root: 0,
            path,
            seed,
        }
    }

    pub fn metric(&self) -> &MetricSpace {
        &self.metric
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// Distance scale: the smallest nonzero distance among the tree's points.
    pub fn unit(&self) -> f64 {
        self.unit
    }

    pub fn varrho(&self) -> f64 {
        self.varrho
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The random carving order.
    pub fn order(&self) -> &[PointId] {
        &self.order
    }

    pub fn root(&self) -> BlockId {
        self.root
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, id: BlockId) -> &Block {
        &self.blocks[id]
    }

    pub fn points(&self) -> impl Iterator<Item = PointId> + '_ {
        self.blocks[self.root].members.iter().copied()
    }

    pub fn contains(&self, p: PointId) -> bool {
        self.path.get(p).is_some_and(|v| !v.is_empty())
    }

    pub fn block_at(&self, p: PointId, level: u32) -> Option<BlockId> {
        self.path.get(p)?.get(level as usize).copied()
    }

    pub fn leaf_of(&self, p: PointId) -> Option<BlockId> {
        self.block_at(p, 0)
    }

    /// Lowest level at which `u` and `v` share a block.
    pub fn lca_level(&self, u: PointId, v: PointId) -> Option<u32> {
        let (a, b) = (self.path.get(u)?, self.path.get(v)?);
        if a.is_empty() || b.is_empty() {
            return None;
        }
        (0..=self.levels).find(|&i| a[i as usize] == b[i as usize])
    }

    /// Blocks in an order where every child precedes its parent.
    pub fn bottom_up(&self) -> Vec<BlockId> {
        let mut ids: Vec<BlockId> = (0..self.blocks.len()).collect();
        ids.sort_by_key(|&b| (self.blocks[b].level, b));
        ids
    }

    pub fn max_children(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| b.children.len())
            .max()
            .unwrap_or(0)
    }

    /// `2^level` in metric units.
    pub fn scale(&self, level: u32) -> f64 {
        2f64.powi(level as i32) * self.unit
    }

    /// Checks nesting, partitioning, leaf shape, and the `2^(i+1)` diameter
    /// bound, reporting the first failure.
    pub fn check(&self, leaves_per_point: bool) -> std::result::Result<(), String> {
        let root = &self.blocks[self.root];
        if root.level != self.levels || root.parent.is_some() {
            return Err("root is not the single top-level block".into());
        }
        for b in &self.blocks {
            let d = self.metric.diameter(&b.members);
            if d > self.scale(b.level + 1) * (1.0 + DIST_TOL) {
                return Err(format!(
                    "block {} at level {} has diameter {d} above {}",
                    b.id,
                    b.level,
                    self.scale(b.level + 1)
                ));
            }
            if b.level == 0 {
                if !b.children.is_empty() {
                    return Err(format!("leaf {} has children", b.id));
                }
                let ok = if leaves_per_point {
                    b.members.len() == 1
                } else {
                    b.members
                        .iter()
                        .all(|&p| self.metric.dist(p, b.members[0]) == 0.0)
                };
                if !ok {
                    return Err(format!("leaf {} is not a single location", b.id));
                }
                continue;
            }
            let mut union: Vec<PointId> = Vec::new();
            for &c in &b.children {
                let child = &self.blocks[c];
                if child.level + 1 != b.level || child.parent != Some(b.id) {
                    return Err(format!("block {c} is misplaced under {}", b.id));
                }
                union.extend(&child.members);
            }
            union.sort_unstable();
            if union != b.members {
                return Err(format!("children of block {} do not partition it", b.id));
            }
        }
        Ok(())
    }
}

#[derive(Serialize)]
pub(crate) struct DumpBlock<'a> {
    pub id: BlockId,
    pub level: u32,
    pub center: PointId,
    pub members: &'a [PointId],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub portals: Option<&'a [PointId]>,
    pub parent: Option<BlockId>,
}

#[derive(Serialize)]
pub(crate) struct Dump<'a> {
    pub levels: u32,
    pub blocks: Vec<DumpBlock<'a>>,
}

impl Hierarchy {
    pub(crate) fn dump<'a>(&'a self, portals: Option<&'a [Vec<PointId>]>) -> String {
        let blocks = self
            .blocks
            .iter()
            .map(|b| DumpBlock {
                id: b.id,
                level: b.level,
                center: b.center,
                members: &b.members,
                portals: portals.map(|p| p[b.id].as_slice()),
                parent: b.parent,
            })
            .collect();
        serde_json::to_string_pretty(&Dump {
            levels: self.levels,
            blocks,
        })
        .expect("tree dump serializes")
    }
}
