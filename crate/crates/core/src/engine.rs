//! The layered dynamic engine: rebuild cadence, deletion buffers, pending
//! insertions and the public query API.

use crate::error::{Error, Result};
use crate::graph::{Graph, Potentials, Snapshot};
use crate::hop::HopLevels;
use crate::layer::{self, Layer, LayerKind, RebuildCtx, Table};
use crate::long_paths::rand_get_shortest_paths;
use crate::path::PathStore;
use crate::rng::{HitVarOracle, Site, Streams};
use crate::sssp::{dijkstra, dijkstra_arrays};
use crate::update::{self, UpdateCtx, UpdateStats};
use crate::weight::{Weight, INF};

/// Which table family and update procedure the engine runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Concatenation tables and the queue-driven update.
    Final,
    /// Leveled Bellman–Ford tables and level-by-level recovery.
    Basic,
    /// Hop-dominant tables with recovery steered by an exact oracle. Test
    /// harness only: every update runs a full APSP.
    OracleTest,
}

/// Source of the long-path matrix `A`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LongPaths {
    /// Random hitting set of centers.
    Sampled,
    /// Exact distance only for pairs whose shortest path has at least `H`
    /// edges, `∞` elsewhere. Test harness only.
    Minimal,
}

#[derive(Clone, Debug)]
pub struct Config {
    pub seed: u64,
    /// Multiplier on every sampling probability.
    pub kappa: f64,
    /// Multiplier in the congestion threshold `τ_i = c_τ·n^2.5/2^i`.
    pub c_tau: f64,
    /// Layer count `L = max(1, ⌈log₂(c_L·√n)⌉)`.
    pub c_l: f64,
    /// Bound constant for `|Ō_i|`.
    pub c_o: f64,
    /// Final rebuild attempts are `max(1, ⌈c_retry·log₂ n⌉)`.
    pub c_retry: f64,
    pub mode: Mode,
    pub long_paths: LongPaths,
    /// Compute the exact matrix every update to count enqueues of primary
    /// pairs. Expensive.
    pub instrument: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 0,
            kappa: 1.0,
            c_tau: 1.0,
            c_l: 2.0,
            c_o: 8.0,
            c_retry: 2.0,
            mode: Mode::Final,
            long_paths: LongPaths::Sampled,
            instrument: false,
        }
    }
}

/// A vertex update.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Update {
    Delete(usize),
    /// `v` with in-edges `u → v` and out-edges `v → u`, raw weights.
    Insert { v: usize, in_edges: Vec<(usize, Weight)>, out_edges: Vec<(usize, Weight)> },
}

/// Query answer on the raw weight scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Distance {
    Finite(Weight),
    Unreachable,
    /// One endpoint is not in the graph.
    NotPresent,
}

impl Distance {
    /// `INF` for anything but a finite distance.
    pub fn weight(self) -> Weight {
        match self {
            Distance::Finite(w) => w,
            _ => INF,
        }
    }
}

/// Cumulative counters.
#[derive(Clone, Debug, Default)]
pub struct EngineStats {
    pub updates: u64,
    pub major_rebuilds: u64,
    pub layer_rebuilds: Vec<u64>,
    pub rebuild_attempts: u64,
    pub recoveries: Vec<u64>,
    pub recovery_cost: f64,
    pub extractions: u64,
    pub extensions: u64,
    pub duplicate_extensions: u64,
    pub order_violations: u64,
    pub primary_enqueues: u64,
    /// Table entries whose hop exceeds their level bound (`h_j` for `Π`,
    /// `3h_j` for `Π̄`).
    pub hop_violations: u64,
    /// Rebuilt layers whose congestion exceeded `2τ_i` or whose congested
    /// sets exceeded `c_O·n³·log n/τ_i`.
    pub congestion_violations: u64,
    /// Largest `max(congestion, congestion_bar)/τ_i` seen at any rebuild.
    pub peak_congestion_ratio: f64,
    pub last: UpdateStats,
    pub long_path_centers: usize,
    pub bottom_centers: usize,
    pub path_nodes: usize,
}

/// Fully dynamic APSP structure.
pub struct Engine {
    cfg: Config,
    graph: Graph,
    /// Slots covered by layer tables: alive at the last major rebuild and
    /// not deleted since.
    base: Vec<bool>,
    /// Insertions since the last major rebuild, in order.
    pending: Vec<usize>,
    pot: Potentials,
    levels: HopLevels,
    n0: usize,
    top: usize,
    layers: Vec<Layer>,
    store: PathStore,
    streams: Streams,
    counter: u64,
    epoch: u64,
    /// Perturbed distances over all slots.
    pmat: Vec<Weight>,
    stats: EngineStats,
}

/// `max(1, ⌈log₂(c_L·√n)⌉)`.
pub fn layer_count(n: usize, c_l: f64) -> usize {
    let x = c_l * (n.max(1) as f64).sqrt();
    (x.log2().ceil().max(1.0)) as usize
}

/// Extend `a`, exact on `present`, by each vertex of `new` in order through
/// one-intermediate relaxation. `a` is row-major over `present.len()` slots;
/// `weight(u, v)` is `INF` for non-edges.
pub fn floyd_insert<F>(a: &mut [Weight], present: &mut [bool], new: &[usize], weight: F)
where
    F: Fn(usize, usize) -> Weight,
{
    let n = present.len();
    for &c in new {
        let verts: Vec<usize> = (0..n).filter(|&v| present[v]).collect();
        for &s in &verts {
            let mut best = INF;
            for &u in &verts {
                let (d, w) = (a[s * n + u], weight(u, c));
                if d != INF && w != INF {
                    best = best.min(d + w);
                }
            }
            a[s * n + c] = best;
        }
        for &t in &verts {
            let mut best = INF;
            for &v in &verts {
                let (w, d) = (weight(c, v), a[v * n + t]);
                if d != INF && w != INF {
                    best = best.min(w + d);
                }
            }
            a[c * n + t] = best;
        }
        a[c * n + c] = 0;
        present[c] = true;
        for &s in &verts {
            let sc = a[s * n + c];
            if sc == INF {
                continue;
            }
            for &t in &verts {
                let ct = a[c * n + t];
                if ct != INF && sc + ct < a[s * n + t] {
                    a[s * n + t] = sc + ct;
                }
            }
        }
    }
}

impl Engine {
    /// Perturb, reweight and build every layer.
    pub fn build(graph: Graph, cfg: Config) -> Result<Self> {
        if !(cfg.kappa > 0.0 && cfg.c_tau > 0.0 && cfg.c_l > 0.0) {
            return Err(Error::Config("kappa, c_tau and c_l must be positive".into()));
        }
        let streams = Streams::new(cfg.seed);
        let mut e = Engine {
            cfg,
            graph,
            base: Vec::new(),
            pending: Vec::new(),
            pot: Potentials::default(),
            levels: HopLevels::new(1),
            n0: 0,
            top: 1,
            layers: Vec::new(),
            store: PathStore::new(),
            streams,
            counter: 0,
            epoch: 0,
            pmat: Vec::new(),
            stats: EngineStats::default(),
        };
        e.major_rebuild()?;
        e.answer()?;
        Ok(e)
    }

    pub fn config(&self) -> &Config {
        &self.cfg
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn levels(&self) -> &HopLevels {
        &self.levels
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Index of the top layer.
    pub fn top_layer(&self) -> usize {
        self.top
    }

    pub fn update_count(&self) -> u64 {
        self.counter
    }

    pub fn stats(&self) -> &EngineStats {
        &self.stats
    }

    pub fn pending(&self) -> &[usize] {
        &self.pending
    }

    fn major_rebuild(&mut self) -> Result<()> {
        let cap = self.graph.capacity();
        self.n0 = cap;
        self.top = layer_count(cap, self.cfg.c_l);
        let headroom = 1u64 << self.top;
        let seed = self.streams.derive(Site::Perturb, self.epoch);
        self.epoch += 1;
        self.graph.perturb_all_with_base(seed, cap as u64 + headroom)?;
        self.pot = self.graph.johnson_reweight()?;
        self.base = self.graph.alive().to_vec();
        self.pending.clear();
        self.levels = HopLevels::new(cap);
        self.store.clear();
        self.layers = (0..=self.top)
            .map(|i| Layer::empty(i, cap, LayerKind::Terminal, Vec::new(), 0.0))
            .collect();
        if self.stats.layer_rebuilds.len() < self.top + 1 {
            self.stats.layer_rebuilds.resize(self.top + 1, 0);
        }
        self.stats.major_rebuilds += 1;
        for i in (0..=self.top).rev() {
            self.rebuild_layer(i)?;
        }
        Ok(())
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot::build(&self.graph, &self.base, &self.pot)
    }

    fn blocked(&self) -> Vec<bool> {
        self.base.iter().map(|b| !b).collect()
    }

    fn rebuild_layer(&mut self, i: usize) -> Result<()> {
        let n = self.n0;
        let centers: Vec<usize> = if i == self.top {
            (0..n).filter(|&v| self.base[v]).collect()
        } else {
            self.layers[i + 1].next_centers().into_iter().filter(|&v| self.base[v]).collect()
        };
        self.stats.layer_rebuilds[i] += 1;
        let tau = layer::tau(n, i, self.cfg.c_tau);
        if i == 0 {
            let mut l = Layer::empty(0, n, LayerKind::Terminal, centers, tau);
            l.rebuilt_at = self.counter;
            self.layers[0] = l;
            return Ok(());
        }
        let snap = self.snapshot();
        let blocked = self.blocked();
        let retries = (self.cfg.c_retry * (n.max(2) as f64).log2()).ceil().max(1.0) as usize;
        let ctx = RebuildCtx {
            snap: &snap,
            blocked: &blocked,
            levels: &self.levels,
            n,
            streams: &self.streams,
            c_tau: self.cfg.c_tau,
            retries,
            c_o: self.cfg.c_o,
            tick: self.counter,
        };
        let layer = match self.cfg.mode {
            Mode::Basic => layer::basic_rebuild(&ctx, i, &centers, &mut self.store),
            Mode::OracleTest => layer::rebuild_new(&ctx, i, &centers, &mut self.store),
            Mode::Final => {
                let lower: Vec<&Table> = self.layers[..i].iter().map(|l| &l.pi).collect();
                layer::final_rebuild(&ctx, i, &centers, &lower, &mut self.store)?
            }
        };
        self.stats.rebuild_attempts += layer.attempts.max(1) as u64;
        self.stats.hop_violations += self.hop_violations(&layer);
        let (c, cbar) = layer.congestion_max();
        let bound = layer::congested_bound(n, tau, self.cfg.c_o);
        if c > 2.0 * tau || cbar > 2.0 * tau || layer.o_size() as f64 > bound || layer.o_bar_size() as f64 > bound {
            self.stats.congestion_violations += 1;
        }
        self.stats.peak_congestion_ratio = self.stats.peak_congestion_ratio.max(c.max(cbar) / tau);
        self.layers[i] = layer;
        Ok(())
    }

    fn hop_violations(&self, l: &Layer) -> u64 {
        let strict = l.kind != LayerKind::Basic;
        let mut bad = 0;
        for (_, _, j, p) in l.pi.iter() {
            let hop = self.store.hop(p) as u64;
            if hop > self.levels.h(j) || (strict && hop == 0) {
                bad += 1;
            }
        }
        for (_, _, j, p) in l.pi_bar.iter() {
            if self.store.hop(p) as u64 > 3 * self.levels.h(j) {
                bad += 1;
            }
        }
        bad
    }

    /// Apply one vertex update and refresh the distance matrix.
    pub fn apply_update(&mut self, op: &Update) -> Result<()> {
        match op {
            Update::Delete(v) => {
                let v = *v;
                self.graph.delete_vertex(v)?;
                if v < self.n0 && self.base[v] {
                    self.base[v] = false;
                    for l in &mut self.layers {
                        l.mark_deleted(v);
                    }
                }
                self.pending.retain(|&x| x != v);
            }
            Update::Insert { v, in_edges, out_edges } => {
                let v = *v;
                let slot = self.graph.free_slot();
                if v != slot {
                    return Err(Error::Usage(format!("insert must use the lowest free slot {slot}, got {v}")));
                }
                self.check_insert(v, in_edges, out_edges)?;
                self.graph.insert_vertex(v, in_edges, out_edges)?;
                self.pending.push(v);
            }
        }
        self.counter += 1;
        self.stats.updates += 1;
        let k = self.counter;
        if k % (1u64 << self.top) == 0 {
            self.major_rebuild()?;
        } else {
            for i in (0..self.top).rev() {
                if k % (1u64 << i) == 0 {
                    self.rebuild_layer(i)?;
                    self.layers[i].deleted.iter_mut().for_each(|d| *d = false);
                    self.layers[i].deleted_list.clear();
                }
            }
        }
        self.answer()
    }

    /// Reject an insertion that closes a negative cycle.
    fn check_insert(&self, v: usize, in_edges: &[(usize, Weight)], out_edges: &[(usize, Weight)]) -> Result<()> {
        let n = self.graph.capacity();
        for &(u, _) in in_edges.iter().chain(out_edges) {
            if u == v || u >= n || !self.graph.is_alive(u) {
                return Err(Error::Usage(format!("edge between {v} and non-alive vertex {u}")));
            }
        }
        let pert = self.graph.perturbation().expect("engine graphs are perturbed");
        // the sign of a cycle's raw weight decides the sign of its perturbed one
        for &(x, wo) in out_edges {
            for &(y, wi) in in_edges {
                let d = self.pmat[x * n + y];
                if d != INF && wo + wi + pert.raw_of(d) < 0 {
                    return Err(Error::NegativeCycle);
                }
            }
        }
        Ok(())
    }

    /// Recompute the full matrix for the current graph.
    fn answer(&mut self) -> Result<()> {
        let n = self.n0;
        let snap = self.snapshot();
        let blocked = self.blocked();
        let h_top = self.levels.h(self.levels.i_h());
        let tick = self.counter;
        let need_exact = self.cfg.mode == Mode::OracleTest
            || self.cfg.long_paths == LongPaths::Minimal
            || self.cfg.instrument;
        let exact = need_exact.then(|| exact_reduced(&snap, &blocked));

        let mut a = match self.cfg.long_paths {
            LongPaths::Sampled => {
                let mut rng = self.streams.stream(Site::LongPaths, 0, 0, 0, tick);
                let (a, c) = rand_get_shortest_paths(&snap, &blocked, h_top, self.cfg.kappa, &mut rng);
                self.stats.long_path_centers = c;
                a
            }
            LongPaths::Minimal => {
                let (d, hop) = exact.as_ref().unwrap();
                let mut a = vec![INF; n * n];
                for s in 0..n {
                    if blocked[s] {
                        continue;
                    }
                    for t in 0..n {
                        if s == t {
                            a[s * n + t] = 0;
                        } else if hop[s * n + t] as u64 >= h_top {
                            a[s * n + t] = d[s * n + t];
                        }
                    }
                }
                self.stats.long_path_centers = 0;
                a
            }
        };
        // bottom layer: exact distances through its centers
        let bottom: Vec<usize> = self.layers[0].centers.iter().copied().filter(|&c| !blocked[c]).collect();
        self.stats.bottom_centers = bottom.len();
        for &c in &bottom {
            let (from, _) = dijkstra_arrays(&snap, &blocked, c, false);
            let (to, _) = dijkstra_arrays(&snap, &blocked, c, true);
            for s in 0..n {
                if to[s] == INF {
                    continue;
                }
                for t in 0..n {
                    if from[t] != INF && to[s] + from[t] < a[s * n + t] {
                        a[s * n + t] = to[s] + from[t];
                    }
                }
            }
        }

        let mark = self.store.mark();
        let hv_streams = Streams::new(self.streams.derive(Site::HitType1, tick));
        let mut hv = HitVarOracle::new(hv_streams, n, &self.levels, self.cfg.kappa);
        let mut us = UpdateStats::new(self.levels.levels());
        let ctx = UpdateCtx { layers: &self.layers, levels: &self.levels, blocked: &blocked };
        let reduced = match self.cfg.mode {
            Mode::Final => {
                let ex = exact.as_ref().map(|(d, _)| d.as_slice());
                update::final_update(&ctx, &mut self.store, &mut hv, &a, ex, &mut us)?
            }
            Mode::Basic => {
                let po = update::basic_update(&ctx, &mut self.store, &mut hv, &mut us)?;
                po.iter().zip(&a).map(|(x, y)| *x.min(y)).collect()
            }
            Mode::OracleTest => {
                let (d, hop) = exact.as_ref().unwrap();
                let oracle = |s: usize, t: usize| (hop[s * n + t], d[s * n + t]);
                let po = update::update_with_oracle(&ctx, &mut self.store, &mut hv, oracle, &mut us)?;
                po.iter().zip(&a).map(|(x, y)| *x.min(y)).collect()
            }
        };
        self.stats.path_nodes = self.store.node_count();
        self.store.release(mark);
        self.absorb(us);

        // restore, embed, re-apply pending insertions
        let cap = self.graph.capacity();
        let mut p = vec![INF; cap * cap];
        for s in 0..n {
            if blocked[s] {
                continue;
            }
            for t in 0..n {
                p[s * cap + t] = self.pot.restore(s, t, reduced[s * n + t]);
            }
        }
        let mut present = vec![false; cap];
        present[..n].copy_from_slice(&self.base);
        let g = &self.graph;
        floyd_insert(&mut p, &mut present, &self.pending, |u, v| g.weight(u, v));
        self.pmat = p;
        Ok(())
    }

    fn absorb(&mut self, us: UpdateStats) {
        let s = &mut self.stats;
        if s.recoveries.len() < us.recoveries.len() {
            s.recoveries.resize(us.recoveries.len(), 0);
        }
        for (a, b) in s.recoveries.iter_mut().zip(&us.recoveries) {
            *a += b;
        }
        s.recovery_cost += us.recovery_cost;
        s.extractions += us.extractions;
        s.extensions += us.extensions;
        s.duplicate_extensions += us.duplicate_extensions;
        s.order_violations += us.order_violations;
        s.primary_enqueues += us.primary_enqueues;
        s.last = us;
    }

    /// Raw-scale distance from `s` to `t`.
    pub fn distance(&self, s: usize, t: usize) -> Distance {
        let cap = self.graph.capacity();
        if s >= cap || t >= cap || !self.graph.is_alive(s) || !self.graph.is_alive(t) {
            return Distance::NotPresent;
        }
        match self.pmat[s * cap + t] {
            INF => Distance::Unreachable,
            d => Distance::Finite(self.graph.perturbation().unwrap().raw_of(d)),
        }
    }

    /// Raw-scale matrix over all slots, `INF` for unreachable or absent.
    pub fn distance_matrix(&self) -> Vec<Weight> {
        let pert = self.graph.perturbation().unwrap();
        self.pmat.iter().map(|&d| pert.raw_of(d)).collect()
    }

    /// Perturbed-scale matrix over all slots.
    pub fn perturbed_matrix(&self) -> &[Weight] {
        &self.pmat
    }
}

/// Exact reduced distances and shortest-path hop counts over a snapshot.
fn exact_reduced(snap: &Snapshot, blocked: &[bool]) -> (Vec<Weight>, Vec<usize>) {
    let n = snap.n;
    let mut d = vec![INF; n * n];
    let mut hop = vec![0usize; n * n];
    for s in 0..n {
        if blocked[s] {
            continue;
        }
        let tree = dijkstra(snap, blocked, s, false);
        for t in 0..n {
            if let Some(x) = tree.node_of(t) {
                d[s * n + t] = tree.dist[x as usize];
                hop[s * n + t] = tree.depth[x as usize] as usize;
            }
        }
    }
    (d, hop)
}
