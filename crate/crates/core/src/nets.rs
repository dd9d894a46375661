//! Greedy nets, aspect ratios, and the two point-relocation reductions.

use crate::error::{Error, Result};
use crate::metric::{MetricSpace, PointId};
use crate::model::FairInstance;

/// A subset of centers that is both a `rho`-covering and a `rho`-packing.
#[derive(Debug, Clone, PartialEq)]
pub struct Net {
    pub centers: Vec<PointId>,
    pub rho: f64,
}

impl Net {
    pub fn covers(&self, points: &[PointId], metric: &MetricSpace) -> bool {
        points
            .iter()
            .all(|&p| self.centers.iter().any(|&c| metric.dist(p, c) <= self.rho))
    }

    pub fn is_packing(&self, metric: &MetricSpace) -> bool {
        self.centers.iter().enumerate().all(|(i, &a)| {
            self.centers[i + 1..]
                .iter()
                .all(|&b| metric.dist(a, b) >= self.rho)
        })
    }
}

/// Scans `order` and keeps a point when it is farther than `rho` from every
/// point kept so far. `order` must be a permutation of `points`.
pub fn build_net(
    points: &[PointId],
    rho: f64,
    order: &[PointId],
    metric: &MetricSpace,
) -> Result<Net> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    if rho.is_nan() || rho <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "net radius {rho} must be positive"
        )));
    }
    let mut a = points.to_vec();
    let mut b = order.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    if a != b {
        return Err(Error::InvalidParams(
            "net order is not a permutation of the point set".into(),
        ));
    }
    Ok(Net {
        centers: greedy_extend(Vec::new(), order, rho, metric),
        rho,
    })
}

/// Greedy net step that starts from already chosen `seed` centers.
pub(crate) fn greedy_extend(
    mut centers: Vec<PointId>,
    order: &[PointId],
    rho: f64,
    metric: &MetricSpace,
) -> Vec<PointId> {
    for &p in order {
        if centers.iter().all(|&c| metric.dist(p, c) > rho) {
            centers.push(p);
        }
    }
    centers
}

/// Largest over smallest nonzero pairwise distance.
pub fn aspect_ratio(points: &[PointId], metric: &MetricSpace) -> Result<f64> {
    let min = metric
        .min_nonzero_distance(points)
        .ok_or(Error::DegenerateSet)?;
    Ok(metric.diameter(points) / min)
}

/// Records where each point was moved so solutions can be re-costed in the
/// original metric.
#[derive(Debug, Clone, PartialEq)]
pub struct BackMap {
    original: MetricSpace,
    /// Point `p` now sits where point `target[p]` sat originally.
    target: Vec<PointId>,
}

impl BackMap {
    fn identity(metric: &MetricSpace) -> BackMap {
        BackMap {
            original: metric.clone(),
            target: metric.points().collect(),
        }
    }

    pub fn original(&self) -> &MetricSpace {
        &self.original
    }

    pub fn target(&self, p: PointId) -> PointId {
        self.target[p]
    }

    /// The instance with its original geometry restored.
    pub fn restore(&self, inst: &FairInstance) -> FairInstance {
        inst.with_metric(self.original.clone())
    }

    pub fn displacement(&self, p: PointId) -> f64 {
        self.original.dist(p, self.target[p])
    }

    pub fn max_displacement(&self) -> f64 {
        self.original
            .points()
            .map(|p| self.displacement(p))
            .fold(0.0, f64::max)
    }

    pub fn is_identity(&self) -> bool {
        self.target.iter().enumerate().all(|(p, &t)| p == t)
    }

    fn apply(&self, inst: &FairInstance) -> FairInstance {
        inst.with_metric(self.original.relocated(&self.target))
    }
}

/// Merge threshold used by [`preprocess_doubling`].
pub fn merge_threshold(inst: &FairInstance, eps: f64, cost_estimate: f64) -> f64 {
    let n = inst.size().max(1) as f64;
    eps * cost_estimate / n.powi(4)
}

/// Colocates points closer than `eps * cost_estimate / n^4` until every two
/// distinct locations are at least that far apart. Ids are kept; only their
/// locations change.
pub fn preprocess_doubling(
    inst: &FairInstance,
    eps: f64,
    cost_estimate: f64,
) -> Result<(FairInstance, BackMap)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParams(format!(
            "epsilon {eps} must lie in (0, 1)"
        )));
    }
    if !cost_estimate.is_finite() || cost_estimate < 0.0 {
        return Err(Error::InvalidParams(format!(
            "cost estimate {cost_estimate} must be a nonnegative real"
        )));
    }
    let threshold = merge_threshold(inst, eps, cost_estimate);
    let metric = &inst.metric;
    let mut back = BackMap::identity(metric);
    let n = metric.len();
    let here = |target: &[PointId], a: PointId, b: PointId| metric.dist(target[a], target[b]);
    loop {
        let mut merge = None;
        'scan: for a in 0..n {
            for b in a + 1..n {
                let d = here(&back.target, a, b);
                if d > 0.0 && d < threshold {
                    merge = Some((a, b));
                    break 'scan;
                }
            }
        }
        let Some((a, b)) = merge else { break };
        let dest = back.target[b];
        let moving: Vec<PointId> = (0..n)
            .filter(|&p| here(&back.target, p, a) == 0.0)
            .collect();
        for p in moving {
            back.target[p] = dest;
        }
    }
    Ok((back.apply(inst), back))
}

/// Moves every point onto its nearest center, breaking ties by smallest id.
pub fn reduce_to_centers(
    inst: &FairInstance,
    centers: &[PointId],
) -> Result<(FairInstance, BackMap)> {
    if centers.is_empty() {
        return Err(Error::EmptyCenters);
    }
    let mut sorted = centers.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let metric = &inst.metric;
    let mut back = BackMap::identity(metric);
    for p in metric.points() {
        let mut best = sorted[0];
        for &c in &sorted[1..] {
            if metric.dist(p, c) < metric.dist(p, best) {
                best = c;
            }
        }
        back.target[p] = best;
    }
    Ok((back.apply(inst), back))
}
