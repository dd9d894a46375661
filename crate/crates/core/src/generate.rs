//! Reproducible random instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::MetricSpace;
use crate::model::{Client, FairInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    /// Uniform points in `[0, 100)^2`.
    Euclidean2d,
    /// Shortest-path closure of random integer edge weights.
    Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorDist {
    Uniform,
    /// Color `t` drawn with weight `2^-t`.
    Skewed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    /// Number of clients.
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub space: SpaceKind,
    pub colors: ColorDist,
    pub seed: u64,
    /// Defaults to `max(k, ceil(n / 2))`.
    pub facilities: Option<usize>,
    /// Ratio bounds are the global color shares widened by this much.
    pub slack: f64,
}

impl GenParams {
    pub fn new(n: usize, k: usize, l: usize, space: SpaceKind, seed: u64) -> GenParams {
        GenParams {
            n,
            k,
            l,
            space,
            colors: ColorDist::Uniform,
            seed,
            facilities: None,
            slack: 0.25,
        }
    }
}

pub fn generate(p: &GenParams) -> Result<FairInstance> {
    if p.k == 0 || p.n < p.k || p.l == 0 {
        return Err(Error::InvalidParams(format!(
            "need n >= k >= 1 and l >= 1, got n={} k={} l={}",
            p.n, p.k, p.l
        )));
    }
    if !(0.0..=1.0).contains(&p.slack) {
        return Err(Error::InvalidParams(format!(
            "slack {} outside [0, 1]",
            p.slack
        )));
    }
    let m = p.facilities.unwrap_or(p.k.max(p.n.div_ceil(2)));
    if m < 1 {
        return Err(Error::InvalidParams("need at least one facility".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let total = p.n + m;
    let metric = match p.space {
        SpaceKind::Euclidean2d => {
            let coords = (0..total)
                .map(|_| [rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)])
                .collect();
            MetricSpace::euclidean(coords)?
        }
        SpaceKind::Matrix => {
            let mut d = vec![vec![0.0; total]; total];
            for i in 0..total {
                for j in i + 1..total {
                    let w = f64::from(rng.gen_range(1..=100u32));
                    d[i][j] = w;
                    d[j][i] = w;
                }
            }
            for via in 0..total {
                for i in 0..total {
                    for j in 0..total {
                        let alt = d[i][via] + d[via][j];
                        if alt < d[i][j] {
                            d[i][j] = alt;
                        }
                    }
                }
            }
            MetricSpace::from_matrix(d)?
        }
    };
    let weights: Vec<f64> = (0..p.l)
        .map(|t| match p.colors {
            ColorDist::Uniform => 1.0,
            ColorDist::Skewed => 0.5f64.powi(t as i32),
        })
        .collect();
    let sum: f64 = weights.iter().sum();
    let clients: Vec<Client> = (0..p.n)
        .map(|j| {
            let mut x = rng.gen_range(0.0..sum);
            let mut color = p.l - 1;
            for (t, w) in weights.iter().enumerate() {
                if x < *w {
                    color = t;
                    break;
                }
                x -= w;
            }
            Client {
                point: m + j,
                color,
            }
        })
        .collect();
    let mut hist = vec![0usize; p.l];
    for c in &clients {
        hist[c.color] += 1;
    }
    let share: Vec<f64> = hist.iter().map(|&h| h as f64 / p.n as f64).collect();
    let alpha = share.iter().map(|s| (s - p.slack).max(0.0)).collect();
    let beta = share.iter().map(|s| (s + p.slack).min(1.0)).collect();
    FairInstance::new(metric, clients, (0..m).collect(), p.k, alpha, beta)
}
