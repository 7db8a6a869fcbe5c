//! Mutable weighted digraph with vertex updates, weight perturbation and
//! Johnson potentials.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::weight::{Weight, INF};

/// Scale factors of the perturbation `w·N^10 + N^9 + λ`, `λ ∈ [0, N^8)`.
#[derive(Clone, Debug)]
pub struct Perturbation {
    /// The `N` in the exponents, fixed until the next re-perturbation.
    pub base: u64,
    pub n10: Weight,
    pub n9: Weight,
    pub n8: Weight,
    pub seed: u64,
    rng: ChaCha8Rng,
}

impl Perturbation {
    /// Scale factors for base `n` (clamped to at least 2).
    pub fn new(n: u64, seed: u64) -> Result<Self> {
        let b = n.max(2) as Weight;
        let pow = |e: u32| b.checked_pow(e);
        let n10 = pow(10).ok_or_else(|| Error::Config(format!("n^10 overflows for n = {n}")))?;
        Ok(Perturbation {
            base: n.max(2),
            n10,
            n9: pow(9).unwrap(),
            n8: pow(8).unwrap(),
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Perturbed weight for raw weight `w` and tie-breaker `lambda`.
    pub fn apply(&self, w: Weight, lambda: Weight) -> Weight {
        w * self.n10 + self.n9 + lambda
    }

    /// Fresh `λ` from the seeded stream.
    pub fn draw(&mut self) -> Weight {
        let hi = self.n8 as u128;
        (self.rng.gen::<u128>() % hi) as Weight
    }

    /// Raw-scale value of a perturbed distance (floor division by `N^10`).
    pub fn raw_of(&self, d: Weight) -> Weight {
        if d == INF {
            INF
        } else {
            d.div_euclid(self.n10)
        }
    }

    /// Edge count of a perturbed path weight: `⌊(d mod N^10) / N^9⌋`.
    /// Exact while the hop count stays below `N - 1`.
    pub fn hops_of(&self, d: Weight) -> u64 {
        (d.rem_euclid(self.n10) / self.n9) as u64
    }

    /// Largest raw magnitude for which paths of up to `base` hops, potentials
    /// included, stay exactly representable.
    pub fn max_raw(&self) -> Weight {
        // 4·N·(|w|+1)·N^10 must fit with room to spare
        let per = (self.base as Weight).checked_mul(self.n10).and_then(|x| x.checked_mul(8));
        match per {
            Some(p) => (Weight::MAX / 4) / p - 1,
            None => -1,
        }
    }
}

/// Vertex potentials `p` with `w(u,v) + p(u) − p(v) ≥ 0` on every edge.
#[derive(Clone, Debug, Default)]
pub struct Potentials {
    pub p: Vec<Weight>,
}

impl Potentials {
    /// Bellman–Ford from a virtual source with zero-weight edges to every
    /// vertex in `alive`. `weight(u, v)` returns `INF` for non-edges.
    pub fn compute<F>(n: usize, alive: &[bool], weight: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> Weight,
    {
        let verts: Vec<usize> = (0..n).filter(|&v| alive[v]).collect();
        let mut edges = Vec::new();
        for &u in &verts {
            for &v in &verts {
                if u != v {
                    let w = weight(u, v);
                    if w != INF {
                        edges.push((u, v, w));
                    }
                }
            }
        }
        let mut p = vec![0 as Weight; n];
        let mut rounds = 0;
        loop {
            let mut changed = false;
            for &(u, v, w) in &edges {
                let cand = p[u] + w;
                if cand < p[v] {
                    p[v] = cand;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
            rounds += 1;
            if rounds >= verts.len().max(1) {
                return Err(Error::NegativeCycle);
            }
        }
        Ok(Potentials { p })
    }

    /// Reduced weight `w + p(u) − p(v)`.
    #[inline]
    pub fn reduce(&self, u: usize, v: usize, w: Weight) -> Weight {
        if w == INF {
            INF
        } else {
            w + self.p[u] - self.p[v]
        }
    }

    /// Undo the reduction of an `s → t` distance.
    #[inline]
    pub fn restore(&self, s: usize, t: usize, d: Weight) -> Weight {
        if d == INF {
            INF
        } else {
            d - self.p[s] + self.p[t]
        }
    }
}

/// Weighted digraph over stable vertex slots.
///
/// Raw weights are stored as given; once perturbed, every edge also carries a
/// tie-breaker `λ` and [`Graph::weight`] returns the perturbed value.
#[derive(Clone, Debug)]
pub struct Graph {
    cap: usize,
    alive: Vec<bool>,
    raw: Vec<Weight>,
    lambda: Vec<Weight>,
    pert: Option<Perturbation>,
    n_alive: usize,
}

impl Graph {
    /// `n` alive vertices, no edges.
    pub fn new(n: usize) -> Self {
        Graph {
            cap: n,
            alive: vec![true; n],
            raw: vec![INF; n * n],
            lambda: vec![0; n * n],
            pert: None,
            n_alive: n,
        }
    }

    /// Build from an edge list of raw weights. Self-loops are ignored.
    pub fn from_edges(n: usize, edges: &[(usize, usize, Weight)]) -> Self {
        let mut g = Graph::new(n);
        for &(u, v, w) in edges {
            g.set_edge(u, v, w);
        }
        g
    }

    pub fn capacity(&self) -> usize {
        self.cap
    }

    pub fn n_alive(&self) -> usize {
        self.n_alive
    }

    pub fn is_alive(&self, v: usize) -> bool {
        v < self.cap && self.alive[v]
    }

    pub fn alive(&self) -> &[bool] {
        &self.alive
    }

    pub fn perturbation(&self) -> Option<&Perturbation> {
        self.pert.as_ref()
    }

    /// Set a raw edge weight between two alive vertices, drawing a fresh `λ`
    /// when perturbed. Self-loops are ignored.
    pub fn set_edge(&mut self, u: usize, v: usize, w: Weight) {
        assert!(self.is_alive(u) && self.is_alive(v), "edge endpoint not alive");
        if u == v {
            return;
        }
        let k = u * self.cap + v;
        self.raw[k] = w;
        self.lambda[k] = match self.pert.as_mut() {
            Some(p) => p.draw(),
            None => 0,
        };
    }

    /// Raw weight, `INF` when there is no edge.
    pub fn raw_weight(&self, u: usize, v: usize) -> Weight {
        self.raw[u * self.cap + v]
    }

    /// Perturbed weight if perturbed, raw otherwise; `INF` when absent.
    #[inline]
    pub fn weight(&self, u: usize, v: usize) -> Weight {
        let k = u * self.cap + v;
        let w = self.raw[k];
        match (&self.pert, w) {
            (_, INF) => INF,
            (Some(p), w) => p.apply(w, self.lambda[k]),
            (None, w) => w,
        }
    }

    /// Tie-breaker of an edge.
    pub fn lambda(&self, u: usize, v: usize) -> Weight {
        self.lambda[u * self.cap + v]
    }

    /// Out-edges `(v, weight)` of `u` under [`Graph::weight`].
    pub fn out_edges(&self, u: usize) -> impl Iterator<Item = (usize, Weight)> + '_ {
        (0..self.cap).filter_map(move |v| {
            let w = self.weight(u, v);
            (w != INF).then_some((v, w))
        })
    }

    /// In-edges `(u, weight)` of `v` under [`Graph::weight`].
    pub fn in_edges(&self, v: usize) -> impl Iterator<Item = (usize, Weight)> + '_ {
        (0..self.cap).filter_map(move |u| {
            let w = self.weight(u, v);
            (w != INF).then_some((u, w))
        })
    }

    /// Number of finite edges.
    pub fn edge_count(&self) -> usize {
        self.raw.iter().filter(|&&w| w != INF).count()
    }

    /// Largest raw weight magnitude.
    pub fn max_abs_raw(&self) -> Weight {
        self.raw.iter().filter(|&&w| w != INF).map(|w| w.abs()).max().unwrap_or(0)
    }

    /// Replace every edge weight by `w·N^10 + N^9 + λ` with `N = capacity`.
    pub fn perturb_all(&mut self, seed: u64) -> Result<()> {
        self.perturb_all_with_base(seed, self.cap as u64)
    }

    /// As [`Graph::perturb_all`] with an explicit base `N ≥ capacity`.
    pub fn perturb_all_with_base(&mut self, seed: u64, base: u64) -> Result<()> {
        let mut p = Perturbation::new(base.max(self.cap as u64), seed)?;
        let bound = p.max_raw();
        if self.max_abs_raw() > bound {
            return Err(Error::Config(format!(
                "raw weight magnitude {} exceeds the exact bound {} for n = {}",
                self.max_abs_raw(),
                bound,
                p.base
            )));
        }
        for k in 0..self.raw.len() {
            self.lambda[k] = if self.raw[k] == INF { 0 } else { p.draw() };
        }
        self.pert = Some(p);
        Ok(())
    }

    /// Lowest dead slot, or the next fresh one.
    pub fn free_slot(&self) -> usize {
        (0..self.cap).find(|&v| !self.alive[v]).unwrap_or(self.cap)
    }

    fn grow(&mut self, new_cap: usize) {
        let old = self.cap;
        let mut raw = vec![INF; new_cap * new_cap];
        let mut lambda = vec![0; new_cap * new_cap];
        for u in 0..old {
            raw[u * new_cap..u * new_cap + old].copy_from_slice(&self.raw[u * old..(u + 1) * old]);
            lambda[u * new_cap..u * new_cap + old]
                .copy_from_slice(&self.lambda[u * old..(u + 1) * old]);
        }
        self.raw = raw;
        self.lambda = lambda;
        self.alive.resize(new_cap, false);
        self.cap = new_cap;
    }

    /// Remove `v` with all incident edges.
    pub fn delete_vertex(&mut self, v: usize) -> Result<()> {
        if !self.is_alive(v) {
            return Err(Error::Usage(format!("delete of non-alive vertex {v}")));
        }
        let n = self.cap;
        for u in 0..n {
            self.raw[u * n + v] = INF;
            self.raw[v * n + u] = INF;
        }
        self.alive[v] = false;
        self.n_alive -= 1;
        Ok(())
    }

    /// Insert `v` (a dead slot or the next fresh one) with in-edges
    /// `(u, w) = u → v` and out-edges `(u, w) = v → u`.
    pub fn insert_vertex(
        &mut self,
        v: usize,
        in_edges: &[(usize, Weight)],
        out_edges: &[(usize, Weight)],
    ) -> Result<()> {
        if self.is_alive(v) {
            return Err(Error::Usage(format!("insert of alive vertex {v}")));
        }
        if v > self.cap {
            return Err(Error::Usage(format!("insert skips slots: {v} > {}", self.cap)));
        }
        for &(u, _) in in_edges.iter().chain(out_edges) {
            if u != v && !self.is_alive(u) {
                return Err(Error::Usage(format!("edge from {v} to non-alive vertex {u}")));
            }
        }
        if v == self.cap {
            self.grow(self.cap + 1);
        }
        self.alive[v] = true;
        self.n_alive += 1;
        for &(u, w) in in_edges {
            self.set_edge(u, v, w);
        }
        for &(u, w) in out_edges {
            self.set_edge(v, u, w);
        }
        Ok(())
    }

    /// Potentials for the current weights over alive vertices.
    pub fn johnson_reweight(&self) -> Result<Potentials> {
        Potentials::compute(self.cap, &self.alive, |u, v| self.weight(u, v))
    }
}

/// Frozen adjacency lists with non-negative reduced weights, used by the
/// single-source kernels. Vertices outside the snapshot have no edges.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub n: usize,
    pub out: Vec<Vec<(u32, Weight)>>,
    pub inn: Vec<Vec<(u32, Weight)>>,
}

impl Snapshot {
    /// Snapshot of `g` restricted to `member`, weights reduced by `pot`. The
    /// snapshot spans `member.len()` slots.
    pub fn build(g: &Graph, member: &[bool], pot: &Potentials) -> Self {
        let n = member.len();
        let mut out = vec![Vec::new(); n];
        let mut inn = vec![Vec::new(); n];
        for u in 0..n {
            if !member[u] {
                continue;
            }
            for v in 0..n {
                if u == v || !member[v] {
                    continue;
                }
                let w = g.weight(u, v);
                if w != INF {
                    let r = pot.reduce(u, v, w);
                    assert!(r >= 0, "negative reduced weight on edge {u}->{v}");
                    out[u].push((v as u32, r));
                    inn[v].push((u as u32, r));
                }
            }
        }
        Snapshot { n, out, inn }
    }

    /// Snapshot from explicit non-negative adjacency (tests, oracles).
    pub fn from_graph_unreduced(g: &Graph) -> Self {
        let pot = Potentials { p: vec![0; g.capacity()] };
        Snapshot::build(g, g.alive(), &pot)
    }

    /// Weight of edge `u → v` or `INF`.
    pub fn edge(&self, u: usize, v: usize) -> Weight {
        self.out[u]
            .iter()
            .find(|&&(x, _)| x as usize == v)
            .map(|&(_, w)| w)
            .unwrap_or(INF)
    }

    /// Neighbors in the given direction.
    #[inline]
    pub fn nbrs(&self, u: usize, reversed: bool) -> &[(u32, Weight)] {
        if reversed {
            &self.inn[u]
        } else {
            &self.out[u]
        }
    }
}
