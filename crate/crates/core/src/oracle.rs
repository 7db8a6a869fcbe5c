//! Brute-force ground truth used by tests and the oracle-assisted engine.
//!
//! Everything here reads [`Graph::weight`], i.e. perturbed weights once the
//! graph is perturbed, so path identities line up with the engine.

use crate::error::{Error, Result};
use crate::graph::{Graph, Snapshot};
use crate::sssp::dijkstra_arrays;
use crate::weight::{add, Weight, INF};

/// Row-major `n × n` distance matrix.
pub type Matrix = Vec<Weight>;

fn base_matrix(g: &Graph) -> Matrix {
    let n = g.capacity();
    let mut d = vec![INF; n * n];
    for s in 0..n {
        if g.is_alive(s) {
            d[s * n + s] = 0;
        }
    }
    d
}

/// All-pairs distances via Johnson potentials and one Dijkstra per source.
pub fn exact_apsp(g: &Graph) -> Result<Matrix> {
    let n = g.capacity();
    let pot = g.johnson_reweight()?;
    let snap = Snapshot::build(g, g.alive(), &pot);
    let blocked: Vec<bool> = g.alive().iter().map(|a| !a).collect();
    let mut d = base_matrix(g);
    for s in 0..n {
        if !g.is_alive(s) {
            continue;
        }
        let (dist, _) = dijkstra_arrays(&snap, &blocked, s, false);
        for t in 0..n {
            d[s * n + t] = pot.restore(s, t, dist[t]);
        }
    }
    Ok(d)
}

/// All-pairs distances via Bellman–Ford per source on the unreduced weights.
pub fn exact_apsp_bf(g: &Graph) -> Result<Matrix> {
    let n = g.capacity();
    let mut edges = Vec::new();
    for u in 0..n {
        for (v, w) in g.out_edges(u) {
            if u != v {
                edges.push((u, v, w));
            }
        }
    }
    let mut d = base_matrix(g);
    for s in 0..n {
        if !g.is_alive(s) {
            continue;
        }
        let row = &mut d[s * n..(s + 1) * n];
        for round in 0..=n {
            let mut changed = false;
            for &(u, v, w) in &edges {
                let c = add(row[u], w);
                if c < row[v] {
                    row[v] = c;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
            if round == n {
                return Err(Error::NegativeCycle);
            }
        }
    }
    Ok(d)
}

/// Textbook Floyd–Warshall.
pub fn floyd_warshall(g: &Graph) -> Result<Matrix> {
    let n = g.capacity();
    let mut d = base_matrix(g);
    for u in 0..n {
        for (v, w) in g.out_edges(u) {
            if u != v {
                d[u * n + v] = d[u * n + v].min(w);
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = d[i * n + k];
            if dik == INF {
                continue;
            }
            for j in 0..n {
                let c = add(dik, d[k * n + j]);
                if c < d[i * n + j] {
                    d[i * n + j] = c;
                }
            }
        }
    }
    for v in 0..n {
        if g.is_alive(v) && d[v * n + v] < 0 {
            return Err(Error::NegativeCycle);
        }
    }
    Ok(d)
}

/// `≤ h`-hop shortest walks for every pair, with the number of optimal
/// walks (saturating at 2) and one optimal walk.
#[derive(Clone, Debug)]
pub struct HopTable {
    pub n: usize,
    pub h: usize,
    pub weight: Vec<Weight>,
    pub hop: Vec<usize>,
    pub count: Vec<u8>,
    pred: Vec<Vec<u32>>,
    best_k: Vec<usize>,
}

impl HopTable {
    /// Vertices of the stored optimal `s → t` walk.
    pub fn path(&self, s: usize, t: usize) -> Option<Vec<usize>> {
        let i = s * self.n + t;
        if self.weight[i] == INF {
            return None;
        }
        let mut k = self.best_k[i];
        let mut v = t;
        let mut out = vec![t];
        while k > 0 {
            v = self.pred[s * (self.h + 1) + k][v] as usize;
            out.push(v);
            k -= 1;
        }
        out.reverse();
        Some(out)
    }
}

/// Dynamic program over exact hop counts `0..=h`.
pub fn exact_hop_apsp(g: &Graph, h: usize) -> HopTable {
    let n = g.capacity();
    let mut weight = vec![INF; n * n];
    let mut hop = vec![usize::MAX; n * n];
    let mut count = vec![0u8; n * n];
    let mut best_k = vec![0; n * n];
    let mut pred = vec![Vec::new(); n * (h + 1)];
    let adj: Vec<Vec<(usize, Weight)>> =
        (0..n).map(|v| g.in_edges(v).filter(|&(u, _)| u != v).collect()).collect();
    for s in 0..n {
        if !g.is_alive(s) {
            continue;
        }
        let mut w_prev = vec![INF; n];
        let mut c_prev = vec![0u8; n];
        w_prev[s] = 0;
        c_prev[s] = 1;
        weight[s * n + s] = 0;
        hop[s * n + s] = 0;
        count[s * n + s] = 1;
        for k in 1..=h {
            let mut w_k = vec![INF; n];
            let mut c_k = vec![0u8; n];
            let mut p_k = vec![u32::MAX; n];
            for v in 0..n {
                for &(u, w) in &adj[v] {
                    if w_prev[u] == INF {
                        continue;
                    }
                    let c = w_prev[u] + w;
                    if c < w_k[v] {
                        w_k[v] = c;
                        c_k[v] = c_prev[u];
                        p_k[v] = u as u32;
                    } else if c == w_k[v] {
                        c_k[v] = c_k[v].saturating_add(c_prev[u]).min(2);
                    }
                }
            }
            for t in 0..n {
                let i = s * n + t;
                if w_k[t] < weight[i] {
                    weight[i] = w_k[t];
                    hop[i] = k;
                    count[i] = c_k[t];
                    best_k[i] = k;
                } else if w_k[t] == weight[i] && w_k[t] != INF {
                    count[i] = count[i].saturating_add(c_k[t]).min(2);
                }
            }
            pred[s * (h + 1) + k] = p_k;
            w_prev = w_k;
            c_prev = c_k;
        }
    }
    HopTable { n, h, weight, hop, count, pred, best_k }
}

/// Hop count and length of the shortest path for every pair.
#[derive(Clone, Debug)]
pub struct HopAndLength {
    n: usize,
    pub hop: Vec<usize>,
    pub length: Vec<Weight>,
}

impl HopAndLength {
    /// Shortest-path trees per source, tracking depth. Unreachable pairs
    /// report `(usize::MAX, INF)`.
    pub fn new(g: &Graph) -> Result<Self> {
        let n = g.capacity();
        let pot = g.johnson_reweight()?;
        let snap = Snapshot::build(g, g.alive(), &pot);
        let blocked: Vec<bool> = g.alive().iter().map(|a| !a).collect();
        let mut hop = vec![usize::MAX; n * n];
        let mut length = vec![INF; n * n];
        for s in 0..n {
            if !g.is_alive(s) {
                continue;
            }
            let (dist, parent) = dijkstra_arrays(&snap, &blocked, s, false);
            let mut order: Vec<usize> = (0..n).filter(|&t| dist[t] != INF).collect();
            order.sort_by_key(|&t| dist[t]);
            let mut depth = vec![0usize; n];
            for &t in &order {
                if t != s {
                    depth[t] = depth[parent[t] as usize] + 1;
                }
                hop[s * n + t] = depth[t];
                length[s * n + t] = pot.restore(s, t, dist[t]);
            }
        }
        Ok(HopAndLength { n, hop, length })
    }

    pub fn get(&self, s: usize, t: usize) -> (usize, Weight) {
        let i = s * self.n + t;
        (self.hop[i], self.length[i])
    }
}

/// Shortest-path hop and length of `s → t`.
pub fn hop_and_length(g: &Graph, s: usize, t: usize) -> Result<(usize, Weight)> {
    Ok(HopAndLength::new(g)?.get(s, t))
}

/// Strongly-hop-dominant paths from `s` with `1..=cap` edges: a path `p` is
/// kept iff it is the `4|p|`-hop shortest walk to its endpoint.
pub fn enumerate_dominant(g: &Graph, s: usize, cap: usize) -> Vec<Vec<usize>> {
    if cap == 0 {
        return Vec::new();
    }
    let n = g.capacity();
    let mut out = Vec::new();
    let tables: Vec<HopTable> = (1..=cap).map(|k| exact_hop_apsp(g, 4 * k)).collect();
    for t in 0..n {
        if t == s {
            continue;
        }
        for k in 1..=cap {
            let tab = &tables[k - 1];
            let i = s * n + t;
            if tab.weight[i] != INF && tab.hop[i] == k {
                out.push(tab.path(s, t).unwrap());
            }
        }
    }
    out
}

/// Whether `p` is a `4|p|`-hop shortest walk (weight comparison only).
pub fn is_strongly_dominant(g: &Graph, p: &[usize]) -> bool {
    let k = p.len() - 1;
    if k == 0 {
        return true;
    }
    let w = path_weight(g, p);
    let tab = exact_hop_apsp(g, 4 * k);
    w == tab.weight[p[0] * g.capacity() + p[k]]
}

/// Sum of edge weights along `p`, `INF` if an edge is missing.
pub fn path_weight(g: &Graph, p: &[usize]) -> Weight {
    p.windows(2).fold(0, |acc, e| add(acc, g.weight(e[0], e[1])))
}
