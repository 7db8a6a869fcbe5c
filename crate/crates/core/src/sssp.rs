//! Single-source kernels over a [`Snapshot`]: Dijkstra, hop-bounded
//! Bellman–Ford, Bellman–Ford through centers and hop-dominant paths.
//!
//! Every kernel skips vertices flagged in `blocked` and, when `reversed` is
//! set, walks edges backwards.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::graph::Snapshot;
use crate::path::{PathRef, PathStore, SsspTree, NONE};
use crate::weight::{Weight, INF};

/// Distances and parents from `s`. Unreached vertices keep `INF`.
pub fn dijkstra_arrays(
    g: &Snapshot,
    blocked: &[bool],
    s: usize,
    reversed: bool,
) -> (Vec<Weight>, Vec<u32>) {
    let n = g.n;
    let mut dist = vec![INF; n];
    let mut parent = vec![NONE; n];
    let mut done = vec![false; n];
    if blocked[s] {
        return (dist, parent);
    }
    dist[s] = 0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((0 as Weight, s as u32)));
    while let Some(Reverse((d, u))) = heap.pop() {
        let u = u as usize;
        if done[u] || d > dist[u] {
            continue;
        }
        done[u] = true;
        for &(v, w) in g.nbrs(u, reversed) {
            let v = v as usize;
            if blocked[v] || done[v] {
                continue;
            }
            debug_assert!(w >= 0, "negative weight reached dijkstra");
            let c = d + w;
            if c < dist[v] {
                dist[v] = c;
                parent[v] = u as u32;
                heap.push(Reverse((c, v as u32)));
            }
        }
    }
    (dist, parent)
}

/// Exact shortest-path tree from `s`.
pub fn dijkstra(g: &Snapshot, blocked: &[bool], s: usize, reversed: bool) -> SsspTree {
    let (dist, parent) = dijkstra_arrays(g, blocked, s, reversed);
    SsspTree::from_vertex_parents(s, &parent, &dist)
}

/// Output of a hop-layered kernel: a tree whose nodes are (round, state)
/// copies and, per target vertex, the node ending its best path.
#[derive(Clone, Debug)]
pub struct LayeredPaths {
    pub tree: SsspTree,
    pub best: Vec<u32>,
}

impl LayeredPaths {
    /// Weight of the best path to `t`, `INF` if none.
    pub fn weight(&self, t: usize) -> Weight {
        match self.best[t] {
            NONE => INF,
            x => self.tree.dist[x as usize],
        }
    }

    /// Register the tree in `store` and hand out one handle per target.
    pub fn into_paths(self, store: &mut PathStore, reversed: bool) -> Vec<PathRef> {
        let best = self.best;
        let id = store.add_tree(self.tree);
        best.iter()
            .map(|&x| if x == NONE { PathRef::BOTTOM } else { store.segment(id, 0, x, reversed) })
            .collect()
    }

    /// Vertices of the best path to `t` in walking order from the source.
    pub fn path_vertices(&self, t: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut x = self.best[t];
        while x != NONE {
            out.push(self.tree.vertex[x as usize] as usize);
            x = self.tree.parent[x as usize];
        }
        out.reverse();
        out
    }
}

struct Layered {
    vertex: Vec<u32>,
    parent: Vec<u32>,
    dist: Vec<Weight>,
}

impl Layered {
    fn push(&mut self, v: usize, p: u32, d: Weight) -> u32 {
        self.vertex.push(v as u32);
        self.parent.push(p);
        self.dist.push(d);
        (self.vertex.len() - 1) as u32
    }
}

/// Minimum-weight paths from `s` with at most `h` edges.
pub fn bellman_ford(g: &Snapshot, blocked: &[bool], s: usize, h: usize, reversed: bool) -> LayeredPaths {
    let n = g.n;
    let all = vec![true; n];
    through_centers_impl(g, blocked, s, &all, h, reversed, false)
}

/// Minimum-weight `≤ h`-edge paths from `s` visiting at least one vertex of
/// `centers`. Runs Bellman–Ford on the doubled graph `(v, 0) / (v, 1)` where
/// the flag records whether a center has been seen.
pub fn bellman_ford_through_centers(
    g: &Snapshot,
    blocked: &[bool],
    s: usize,
    centers: &[bool],
    h: usize,
    reversed: bool,
) -> LayeredPaths {
    through_centers_impl(g, blocked, s, centers, h, reversed, true)
}

fn through_centers_impl(
    g: &Snapshot,
    blocked: &[bool],
    s: usize,
    centers: &[bool],
    h: usize,
    reversed: bool,
    doubled: bool,
) -> LayeredPaths {
    let n = g.n;
    let states = 2 * n;
    let mut lay = Layered { vertex: vec![s as u32], parent: vec![NONE], dist: vec![0] };
    let mut best = vec![NONE; n];
    if blocked[s] {
        let tree = SsspTree::new(n, lay.vertex, lay.parent, lay.dist);
        return LayeredPaths { tree, best };
    }
    // state index: v * 2 + flag
    let mut d = vec![INF; states];
    let mut node = vec![NONE; states];
    let f0 = (!doubled || centers[s]) as usize;
    d[2 * s + f0] = 0;
    node[2 * s + f0] = 0;
    let mut frontier = vec![2 * s + f0];
    let mut nd = d.clone();
    let mut cand_par = vec![NONE; states];
    let mut touched = Vec::new();
    let mut mark = vec![false; states];
    for _ in 0..h {
        if frontier.is_empty() {
            break;
        }
        touched.clear();
        for &x in &frontier {
            let (u, f) = (x / 2, x % 2);
            for &(v, w) in g.nbrs(u, reversed) {
                let v = v as usize;
                if blocked[v] {
                    continue;
                }
                let nf = if f == 1 || centers[v] { 1 } else { 0 };
                let y = 2 * v + nf;
                let c = d[x] + w;
                if c < nd[y] {
                    nd[y] = c;
                    cand_par[y] = node[x];
                    if !mark[y] {
                        mark[y] = true;
                        touched.push(y);
                    }
                }
            }
        }
        for &y in &touched {
            mark[y] = false;
            node[y] = lay.push(y / 2, cand_par[y], nd[y]);
            d[y] = nd[y];
        }
        std::mem::swap(&mut frontier, &mut touched);
    }
    for t in 0..n {
        best[t] = node[2 * t + 1];
    }
    // the diagonal is the zero-edge path, never a through-center detour
    best[s] = if doubled { NONE } else { 0 };
    let tree = SsspTree::new(n, lay.vertex, lay.parent, lay.dist);
    LayeredPaths { tree, best }
}

/// One pass of the hop-capped Dijkstra: an extracted vertex is extended only
/// while its label has fewer than `h` edges; equal weights prefer fewer hops.
pub fn sshdp(g: &Snapshot, blocked: &[bool], s: usize, h: usize, reversed: bool) -> SsspTree {
    let n = g.n;
    let mut dist = vec![INF; n];
    let mut hop = vec![u32::MAX; n];
    let mut parent = vec![NONE; n];
    let mut done = vec![false; n];
    if !blocked[s] {
        dist[s] = 0;
        hop[s] = 0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((0 as Weight, 0u32, s as u32)));
        while let Some(Reverse((d, k, u))) = heap.pop() {
            let u = u as usize;
            if done[u] || d != dist[u] || k != hop[u] {
                continue;
            }
            done[u] = true;
            if (k as usize) >= h {
                continue;
            }
            for &(v, w) in g.nbrs(u, reversed) {
                let v = v as usize;
                if blocked[v] || done[v] {
                    continue;
                }
                debug_assert!(w >= 0, "negative weight reached sshdp");
                let c = d + w;
                if c < dist[v] || (c == dist[v] && k + 1 < hop[v]) {
                    dist[v] = c;
                    hop[v] = k + 1;
                    parent[v] = u as u32;
                    heap.push(Reverse((c, k + 1, v as u32)));
                }
            }
        }
    }
    SsspTree::from_vertex_parents(s, &parent, &dist)
}

/// Hop caps `1, 2, 4, …, 2^⌈log₂ H⌉` used by [`ssshdp`].
pub fn doubling_caps(cap: u64) -> Vec<usize> {
    let mut out = vec![1usize];
    while (*out.last().unwrap() as u64) < cap {
        let x = out.last().unwrap() * 2;
        out.push(x);
    }
    out
}

/// Union of [`sshdp`] outputs over the doubling caps, deduplicated by
/// `(target, weight, hop)`. Contains every strongly-hop-dominant path from
/// `s` with at most `cap` edges. Paths from the reversed graph are returned in
/// original orientation (ending at `s`).
pub fn ssshdp(
    g: &Snapshot,
    blocked: &[bool],
    s: usize,
    cap: u64,
    reversed: bool,
    store: &mut PathStore,
) -> Vec<PathRef> {
    let mut seen: Vec<Vec<(Weight, u32)>> = vec![Vec::new(); g.n];
    let mut out = Vec::new();
    for h in doubling_caps(cap) {
        let tree = sshdp(g, blocked, s, h, reversed);
        let fresh: Vec<usize> = (0..tree.len())
            .filter(|&x| {
                let key = (tree.dist[x], tree.depth[x]);
                let list = &mut seen[tree.vertex[x] as usize];
                if list.contains(&key) {
                    false
                } else {
                    list.push(key);
                    true
                }
            })
            .collect();
        if fresh.is_empty() {
            continue;
        }
        let tid = store.add_tree(tree);
        out.extend(fresh.into_iter().map(|x| store.segment(tid, 0, x as u32, reversed)));
    }
    out
}
