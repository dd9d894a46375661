//! Shared inputs for the benchmarks.

use fairkm::matching::{MatchGraph, Vertex, VertexClass};
use fairkm::{generate, FairInstance, GenParams, SpaceKind};

/// Plane instance with `n` clients, half as many facilities, two colors.
pub fn plane(n: usize, k: usize, seed: u64) -> FairInstance {
    let mut p = GenParams::new(n, k, 2, SpaceKind::Euclidean2d, seed);
    p.facilities = Some((n / 2).max(k));
    generate(&p).expect("generator accepts these parameters")
}

/// Complete `m` by `m` graph with deterministic pseudo-random weights.
pub fn dense_graph(m: usize) -> MatchGraph {
    let side = |class| {
        (0..m)
            .map(|i| Vertex {
                class,
                portal: i,
                child: None,
            })
            .collect::<Vec<_>>()
    };
    let mut state = 0x9e37_79b9_u64;
    let mut edges = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            edges.push((i, j, (state >> 40) as f64 / 1024.0));
        }
    }
    MatchGraph {
        left: side(VertexClass::ChildLeave),
        right: side(VertexClass::ChildEnter),
        edges,
    }
}
