//! Finite metric spaces backed by planar coordinates or an explicit matrix.
//!
//! A [`MetricSpace`] separates point ids from the locations they sit at, so
//! preprocessing can colocate ids without copying the underlying geometry.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type PointId = usize;

/// Equality tolerance for distance comparisons in invariant checks.
pub const DIST_TOL: f64 = 1e-9;

/// Triples are checked exhaustively up to this many locations, sampled above.
const EXHAUSTIVE_TRIANGLE_LIMIT: usize = 50;
const SAMPLED_TRIANGLES: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Space {
    #[serde(rename = "euclidean2d")]
    Euclidean2d { coords: Vec<[f64; 2]> },
    #[serde(rename = "matrix")]
    Matrix { matrix: Vec<Vec<f64>> },
}

impl Space {
    pub fn len(&self) -> usize {
        match self {
            Space::Euclidean2d { coords } => coords.len(),
            Space::Matrix { matrix } => matrix.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn dist(&self, a: usize, b: usize) -> f64 {
        match self {
            Space::Euclidean2d { coords } => {
                let (p, q) = (coords[a], coords[b]);
                (p[0] - q[0]).hypot(p[1] - q[1])
            }
            Space::Matrix { matrix } => matrix[a][b],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpace {
    space: Arc<Space>,
    location: Vec<usize>,
    doubling_dim_hint: Option<u32>,
}

impl MetricSpace {
    /// Wraps `space`, checking the metric axioms.
    pub fn new(space: Space, doubling_dim_hint: Option<u32>) -> Result<Self> {
        let n = space.len();
        let metric = MetricSpace {
            location: (0..n).collect(),
            space: Arc::new(space),
            doubling_dim_hint,
        };
        metric.check_axioms()?;
        Ok(metric)
    }

    pub fn euclidean(coords: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(Space::Euclidean2d { coords }, Some(2))
    }

    pub fn from_matrix(matrix: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(Space::Matrix { matrix }, None)
    }

    /// Points on the real line, embedded in the plane.
    pub fn line(xs: &[f64]) -> Result<Self> {
        Self::new(
            Space::Euclidean2d {
                coords: xs.iter().map(|&x| [x, 0.0]).collect(),
            },
            Some(1),
        )
    }

    pub fn len(&self) -> usize {
        self.location.len()
    }

    pub fn is_empty(&self) -> bool {
        self.location.is_empty()
    }

    pub fn points(&self) -> std::ops::Range<PointId> {
        0..self.len()
    }

    #[inline]
    pub fn dist(&self, a: PointId, b: PointId) -> f64 {
        self.space.dist(self.location[a], self.location[b])
    }

    pub fn doubling_dim_hint(&self) -> Option<u32> {
        self.doubling_dim_hint
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    /// Index of the underlying location point `p` currently sits at.
    pub fn location(&self, p: PointId) -> usize {
        self.location[p]
    }

    /// A copy in which every point `p` sits where point `target[p]` sits now.
    pub fn relocated(&self, target: &[PointId]) -> MetricSpace {
        assert_eq!(target.len(), self.len());
        MetricSpace {
            space: Arc::clone(&self.space),
            location: target.iter().map(|&t| self.location[t]).collect(),
            doubling_dim_hint: self.doubling_dim_hint,
        }
    }

    /// Smallest nonzero distance between any two points, if one exists.
    pub fn min_nonzero_distance(&self, points: &[PointId]) -> Option<f64> {
        let mut best: Option<f64> = None;
        for (i, &a) in points.iter().enumerate() {
            for &b in &points[i + 1..] {
                let d = self.dist(a, b);
                if d > 0.0 && best.is_none_or(|m| d < m) {
                    best = Some(d);
                }
            }
        }
        best
    }

    pub fn diameter(&self, points: &[PointId]) -> f64 {
        let mut best = 0.0f64;
        for (i, &a) in points.iter().enumerate() {
            for &b in &points[i + 1..] {
                best = best.max(self.dist(a, b));
            }
        }
        best
    }

    /// The geometry as seen through point ids, with relocations applied.
    pub fn materialize(&self) -> Space {
        match &*self.space {
            Space::Euclidean2d { coords } => Space::Euclidean2d {
                coords: self.location.iter().map(|&l| coords[l]).collect(),
            },
            Space::Matrix { .. } => Space::Matrix {
                matrix: self
                    .points()
                    .map(|a| self.points().map(|b| self.dist(a, b)).collect())
                    .collect(),
            },
        }
    }

    pub fn check_axioms(&self) -> Result<()> {
        let n = self.space.len();
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        match &*self.space {
            Space::Euclidean2d { coords } => {
                if coords.iter().flatten().any(|c| !c.is_finite()) {
                    return bad("non-finite coordinate".into());
                }
                return Ok(());
            }
            Space::Matrix { matrix } => {
                if matrix.iter().any(|row| row.len() != n) {
                    return bad("distance matrix is not square".into());
                }
            }
        }
        let d = |a: usize, b: usize| self.space.dist(a, b);
        for a in 0..n {
            if d(a, a) != 0.0 {
                return bad(format!("dist({a},{a}) is not zero"));
            }
            for b in 0..n {
                let v = d(a, b);
                if !v.is_finite() || v < 0.0 {
                    return bad(format!("dist({a},{b}) = {v} is not a nonnegative real"));
                }
                if (v - d(b, a)).abs() > DIST_TOL {
                    return bad(format!("dist({a},{b}) != dist({b},{a})"));
                }
            }
        }
        let violated = |a: usize, b: usize, c: usize| d(a, b) + d(b, c) + DIST_TOL < d(a, c);
        if n <= EXHAUSTIVE_TRIANGLE_LIMIT {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        if violated(a, b, c) {
                            return bad(format!("triangle inequality fails on ({a},{b},{c})"));
                        }
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            for _ in 0..SAMPLED_TRIANGLES {
                let (a, b, c) = (
                    rng.gen_range(0..n),
                    rng.gen_range(0..n),
                    rng.gen_range(0..n),
                );
                if violated(a, b, c) {
                    return bad(format!("triangle inequality fails on ({a},{b},{c})"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_distances() {
        let m = MetricSpace::line(&[0.0, 1.0, 5.0]).unwrap();
        assert_eq!(m.dist(0, 2), 5.0);
        assert_eq!(m.dist(2, 1), 4.0);
        assert_eq!(m.diameter(&[0, 1, 2]), 5.0);
        assert_eq!(m.min_nonzero_distance(&[0, 1, 2]), Some(1.0));
    }

    #[test]
    fn rejects_asymmetric_and_non_metric_matrices() {
        let asym = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
        assert!(MetricSpace::from_matrix(asym).is_err());
        let tri = vec![
            vec![0.0, 1.0, 5.0],
            vec![1.0, 0.0, 1.0],
            vec![5.0, 1.0, 0.0],
        ];
        assert!(MetricSpace::from_matrix(tri).is_err());
        let diag = vec![vec![1.0]];
        assert!(MetricSpace::from_matrix(diag).is_err());
    }

    #[test]
    fn relocation_moves_ids_not_geometry() {
        let m = MetricSpace::line(&[0.0, 3.0, 10.0]).unwrap();
        let r = m.relocated(&[0, 0, 2]);
        assert_eq!(r.dist(0, 1), 0.0);
        assert_eq!(r.dist(1, 2), 10.0);
        assert_eq!(m.dist(0, 1), 3.0);
    }
}
