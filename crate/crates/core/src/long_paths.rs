//! Distance matrix covering every shortest path with at least `h` edges, via a
//! random hitting set of centers.

use rand::Rng;

use crate::graph::Snapshot;
use crate::rng::sample_subset;
use crate::sssp::dijkstra_arrays;
use crate::weight::{Weight, INF};

/// Sampling probability `min(1, κ·(a·ln(n³) + 1)/h)`.
pub fn center_probability(n: usize, h: u64, kappa: f64, a: f64) -> f64 {
    let n = n.max(2) as f64;
    (kappa * (a * (n * n * n).ln() + 1.0) / h.max(1) as f64).min(1.0)
}

/// Row-major matrix `A` with `A[s][t] = min_c d(s, c) + d(c, t)` over sampled
/// centers `c`, and `A[s][s] = 0`. Never below the true distance; equal to it
/// whenever some sampled center lies on a shortest path.
pub fn rand_get_shortest_paths<R: Rng>(
    g: &Snapshot,
    blocked: &[bool],
    h: u64,
    kappa: f64,
    rng: &mut R,
) -> (Vec<Weight>, usize) {
    let n = g.n;
    let alive: Vec<usize> = (0..n).filter(|&v| !blocked[v]).collect();
    let p = center_probability(alive.len(), h, kappa, 1.0);
    let picked = sample_subset(alive.len(), p, rng);
    let centers: Vec<usize> = picked.into_iter().map(|i| alive[i]).collect();
    let mut a = vec![INF; n * n];
    for &s in &alive {
        a[s * n + s] = 0;
    }
    for &c in &centers {
        let (from, _) = dijkstra_arrays(g, blocked, c, false);
        let (to, _) = dijkstra_arrays(g, blocked, c, true);
        for &s in &alive {
            let ds = to[s];
            if ds == INF {
                continue;
            }
            let row = &mut a[s * n..(s + 1) * n];
            for &t in &alive {
                if from[t] != INF {
                    let c = ds + from[t];
                    if c < row[t] {
                        row[t] = c;
                    }
                }
            }
        }
    }
    (a, centers.len())
}
