//! Per-layer rebuilds: congestion sampling, hop-dominant path tables and the
//! concatenation tables built over a random center order.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::graph::Snapshot;
use crate::hop::HopLevels;
use crate::path::{PathRef, PathStore, NONE};
use crate::rng::{sample_subset, Site, Streams};
use crate::sssp::{bellman_ford_through_centers, ssshdp};
use crate::weight::{Weight, INF};

/// Dense `n × n × levels` table of path handles.
#[derive(Clone, Debug, Default)]
pub struct Table {
    n: usize,
    levels: usize,
    cells: Vec<PathRef>,
}

impl Table {
    pub fn new(n: usize, levels: usize) -> Self {
        Table { n, levels, cells: vec![PathRef::BOTTOM; n * n * levels] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    #[inline]
    pub fn get(&self, s: usize, t: usize, j: usize) -> PathRef {
        self.cells[(s * self.n + t) * self.levels + j]
    }

    #[inline]
    pub fn set(&mut self, s: usize, t: usize, j: usize, p: PathRef) {
        self.cells[(s * self.n + t) * self.levels + j] = p;
    }

    /// Non-`⊥` cells as `(s, t, j, path)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, usize, PathRef)> + '_ {
        self.cells.iter().enumerate().filter(|(_, p)| !p.is_bottom()).map(move |(k, &p)| {
            let j = k % self.levels;
            let st = k / self.levels;
            (st / self.n, st % self.n, j, p)
        })
    }
}

/// Shared inputs of a layer rebuild.
pub struct RebuildCtx<'a> {
    /// Base graph with non-negative reduced weights.
    pub snap: &'a Snapshot,
    /// Vertices outside the current base graph.
    pub blocked: &'a [bool],
    pub levels: &'a HopLevels,
    /// The `n` used by thresholds and probabilities.
    pub n: usize,
    pub streams: &'a Streams,
    pub c_tau: f64,
    /// Bound on final-rebuild attempts.
    pub retries: usize,
    /// Constant in `|Ō_i| ≤ c_O·n³·log n/τ_i`.
    pub c_o: f64,
    /// Update counter, part of every stream key.
    pub tick: u64,
}

/// `τ_i = c_τ·n^2.5 / 2^i`.
pub fn tau(n: usize, i: usize, c_tau: f64) -> f64 {
    c_tau * (n as f64).powf(2.5) / 2f64.powi(i as i32)
}

/// Upper bound on a congested-set size: `c_O·n³·log₂ n / τ_i`.
pub fn congested_bound(n: usize, tau_i: f64, c_o: f64) -> f64 {
    let nf = n.max(2) as f64;
    c_o * nf * nf * nf * nf.log2() / tau_i
}

/// Which rebuild produced a layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerKind {
    /// Leveled `π_i[s, t, j]` from Bellman–Ford through centers.
    Basic,
    /// Hop-dominant concatenations `Π_i`.
    Dominant,
    /// `Π_i` plus the concatenation table `Π̄_i`.
    Final,
    /// Bottom layer: no tables, answered by Dijkstra at update time.
    Terminal,
}

/// State of one layer.
#[derive(Clone, Debug)]
pub struct Layer {
    pub i: usize,
    pub kind: LayerKind,
    pub centers: Vec<usize>,
    pub o: Vec<bool>,
    pub o_bar: Vec<bool>,
    pub tau: f64,
    pub pi: Table,
    pub pi_bar: Table,
    /// `Congestion_i[j][v]` from the sampling pass.
    pub congestion: Vec<Vec<f64>>,
    /// `Congestion̄_i[v]` from the concatenation pass.
    pub congestion_bar: Vec<f64>,
    /// `D_i` as a mask plus insertion order.
    pub deleted: Vec<bool>,
    pub deleted_list: Vec<usize>,
    pub rebuilt_at: u64,
    pub attempts: usize,
}

impl Layer {
    /// A layer with no tables.
    pub fn empty(i: usize, n: usize, kind: LayerKind, centers: Vec<usize>, tau: f64) -> Self {
        Layer {
            i,
            kind,
            centers,
            o: vec![false; n],
            o_bar: vec![false; n],
            tau,
            pi: Table::default(),
            pi_bar: Table::default(),
            congestion: Vec::new(),
            congestion_bar: vec![0.0; n],
            deleted: vec![false; n],
            deleted_list: Vec::new(),
            rebuilt_at: 0,
            attempts: 0,
        }
    }

    /// Centers handed to the next layer down: `O_i ∪ Ō_i`.
    pub fn next_centers(&self) -> Vec<usize> {
        (0..self.o.len()).filter(|&v| self.o[v] || self.o_bar[v]).collect()
    }

    /// Record a deletion since the last rebuild.
    pub fn mark_deleted(&mut self, v: usize) {
        if v >= self.deleted.len() {
            self.deleted.resize(v + 1, false);
        }
        if !self.deleted[v] {
            self.deleted[v] = true;
            self.deleted_list.push(v);
        }
    }

    /// Largest per-level congestion and largest concatenation congestion.
    pub fn congestion_max(&self) -> (f64, f64) {
        let a = self.congestion.iter().flatten().cloned().fold(0.0, f64::max);
        let b = self.congestion_bar.iter().cloned().fold(0.0, f64::max);
        (a, b)
    }

    pub fn o_size(&self) -> usize {
        self.o.iter().filter(|&&x| x).count()
    }

    pub fn o_bar_size(&self) -> usize {
        self.o_bar.iter().filter(|&&x| x).count()
    }
}

fn mask(n: usize, vs: &[usize]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &v in vs {
        m[v] = true;
    }
    m
}

/// One congestion pass over all levels. Sources are visited in slot order and
/// kept with probability `p(j)`; every returned path adds `(n/h_j)/p_j` to the
/// congestion of its vertices, and vertices above `τ` leave the working graph
/// for later sources. With `keep`, paths are stored as `π[s, t, j]`.
fn congestion_pass<P: Fn(usize) -> f64>(
    ctx: &RebuildCtx,
    i: usize,
    centers: &[usize],
    prob: P,
    mut keep: Option<(&mut PathStore, &mut Table)>,
) -> (Vec<bool>, Vec<Vec<f64>>) {
    let n = ctx.snap.n;
    let tau_i = tau(ctx.n, i, ctx.c_tau);
    let cmask = mask(n, centers);
    let mut o = vec![false; n];
    let mut cong = vec![vec![0.0; n]; ctx.levels.levels()];
    let mut work: Vec<bool> = ctx.blocked.to_vec();
    let nf = ctx.n as f64;
    for j in 0..ctx.levels.levels() {
        let hj = ctx.levels.h(j);
        let p = prob(j);
        let mut rng = ctx.streams.stream(Site::Congestion, i as u64, j as u64, 0, ctx.tick);
        let picked = sample_subset(n, p, &mut rng);
        let add = (nf / hj as f64) / p;
        for s in picked {
            if work[s] {
                continue;
            }
            let res = bellman_ford_through_centers(ctx.snap, &work, s, &cmask, hj as usize, false);
            // The threshold is checked after every path; a later path of the
            // same source through a vertex that just crossed it is dropped,
            // as it would have been had that vertex left the graph earlier.
            let mut kept = vec![false; n];
            for t in 0..n {
                let top = res.best[t];
                if top == NONE {
                    continue;
                }
                let mut x = top;
                let mut hits_o = false;
                while x != NONE {
                    hits_o |= o[res.tree.vertex[x as usize] as usize];
                    x = res.tree.parent[x as usize];
                }
                if hits_o {
                    continue;
                }
                kept[t] = true;
                let mut x = top;
                while x != NONE {
                    let v = res.tree.vertex[x as usize] as usize;
                    cong[j][v] += add;
                    if cong[j][v] > tau_i && !o[v] {
                        o[v] = true;
                        work[v] = true;
                    }
                    x = res.tree.parent[x as usize];
                }
            }
            if let Some((store, table)) = keep.as_mut() {
                let paths = res.into_paths(store, false);
                for (t, p) in paths.into_iter().enumerate() {
                    if kept[t] && !p.is_bottom() {
                        table.set(s, t, j, p);
                    }
                }
            }
        }
    }
    (o, cong)
}

/// Congested set `O_i` by sampled Bellman–Ford-through-centers passes with
/// `p_j = min(1, n²·log₂ n / (τ_i·h_j))`.
pub fn sample_congested(ctx: &RebuildCtx, i: usize, centers: &[usize]) -> (Vec<bool>, Vec<Vec<f64>>) {
    let tau_i = tau(ctx.n, i, ctx.c_tau);
    let nf = ctx.n.max(2) as f64;
    let prob = |j: usize| (nf * nf * nf.log2() / (tau_i * ctx.levels.h(j) as f64)).min(1.0);
    congestion_pass(ctx, i, centers, prob, None)
}

/// Reference rebuild: every source, every level, paths kept as `π_i[s, t, j]`.
pub fn basic_rebuild(ctx: &RebuildCtx, i: usize, centers: &[usize], store: &mut PathStore) -> Layer {
    let n = ctx.snap.n;
    let mut table = Table::new(n, ctx.levels.levels());
    let (o, cong) = congestion_pass(ctx, i, centers, |_| 1.0, Some((store, &mut table)));
    let mut layer = Layer::empty(i, n, LayerKind::Basic, centers.to_vec(), tau(ctx.n, i, ctx.c_tau));
    layer.o = o;
    layer.congestion = cong;
    layer.pi = table;
    layer.rebuilt_at = ctx.tick;
    layer
}

/// `O_i` by sampling, then `Π_i[s, t, h⁻¹(|p|)]` = lightest concatenation
/// `p_to ∘ p_from` of hop-dominant paths into and out of each center.
pub fn rebuild_new(ctx: &RebuildCtx, i: usize, centers: &[usize], store: &mut PathStore) -> Layer {
    let n = ctx.snap.n;
    let (o, cong) = sample_congested(ctx, i, centers);
    let levels = ctx.levels.levels();
    let cap = ctx.levels.cap();
    let mut work: Vec<bool> = ctx.blocked.to_vec();
    for v in 0..n {
        work[v] |= o[v];
    }
    // best (weight, to, from) per cell, materialized at the end
    let mut best: Vec<(Weight, PathRef, PathRef)> =
        vec![(INF, PathRef::BOTTOM, PathRef::BOTTOM); n * n * levels];
    for &c in centers {
        if work[c] {
            continue;
        }
        let from = ssshdp(ctx.snap, &work, c, cap, false, store);
        let to = ssshdp(ctx.snap, &work, c, cap, true, store);
        let from_k: Vec<(usize, Weight, u32)> =
            from.iter().map(|&p| (store.end(p), store.weight(p), store.hop(p))).collect();
        for &pt in &to {
            let (s, wt, ht) = (store.start(pt), store.weight(pt), store.hop(pt));
            for (k, &(t, wf, hf)) in from_k.iter().enumerate() {
                let hop = ht + hf;
                if hop == 0 || s == t {
                    continue;
                }
                let j = ctx.levels.level_of(hop as u64);
                if j >= levels {
                    continue;
                }
                let w = wt + wf;
                let cell = &mut best[(s * n + t) * levels + j];
                if w < cell.0 {
                    *cell = (w, pt, from[k]);
                }
            }
        }
    }
    let mut table = Table::new(n, levels);
    for s in 0..n {
        for t in 0..n {
            for j in 0..levels {
                let (w, a, b) = best[(s * n + t) * levels + j];
                if w != INF {
                    let p = store.concat(a, b).expect("dominant halves share the center");
                    table.set(s, t, j, p);
                }
            }
        }
    }
    let mut layer = Layer::empty(i, n, LayerKind::Dominant, centers.to_vec(), tau(ctx.n, i, ctx.c_tau));
    layer.o = o;
    layer.congestion = cong;
    layer.pi = table;
    layer.rebuilt_at = ctx.tick;
    layer
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    path: PathRef,
    s: u32,
    t: u32,
    level: u32,
    w: Weight,
    valid: bool,
}

/// Which concatenation realizes a cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Head,
    Tail,
}

/// Marker id for the zero-edge path `⟨v⟩` inside `M`.
const ZERO: u32 = NONE - 1;

/// Index over a path family `P` split by level, supporting the two
/// concatenation tables of a center `c`:
///
/// * `π[s][t]  ≤ w(p₀ ∘ p₁)` over `p₀, p₁ ∈ P` with `c ∈ p₀`,
/// * `π̄[s][t] ≤ w(p₀ ∘ p₁)` over `p₀, p₁ ∈ P` with `c ∈ p₁`,
///
/// where level `j` draws on the paths of level `≤ j`. The zero-edge path
/// `⟨v⟩` belongs to every level, so a single path through `c` also counts as
/// a concatenation.
pub struct ConcatIndex {
    n: usize,
    levels: usize,
    /// Sorted by `(s, t, level)`.
    entries: Vec<Entry>,
    /// Entries of pair `(s, t)`: `pair_start[s·n + t] ..` the next start.
    pair_start: Vec<u32>,
    /// Entries visiting `v`, ordered by level: `vx_ids[vx_start[v]..vx_start[v + 1]]`.
    vx_start: Vec<u32>,
    vx_ids: Vec<u32>,
    /// `M[j][u][t]`: weight and id of the lightest valid entry `u → t` of
    /// level `≤ j`; [`BIG`] and `NONE` when there is none.
    mw: Vec<Weight>,
    mid: Vec<u32>,
}

/// Finite stand-in for `⊥` in the per-center arrays: sums of up to four
/// such values stay representable, and any sum involving one stays `≥ BIG`.
const BIG: Weight = Weight::MAX / 8;

/// Per-center arrays for one level; weights are [`BIG`] where `⊥`.
#[derive(Clone, Debug)]
struct CenterLevel {
    /// Lightest prefix `s → c` by start, and its entry.
    from_w: Vec<Weight>,
    from_id: Vec<u32>,
    /// Lightest suffix `c → u` by end, and its entry.
    to_w: Vec<Weight>,
    to_id: Vec<u32>,
    /// `min_u to[u] ∘ M[u][t]` by `t`, and the minimizing `u`.
    pc_w: Vec<Weight>,
    pc_u: Vec<u32>,
    /// `min_u M[s][u] ∘ from[u]` by `s`, and the minimizing `u`.
    ps_w: Vec<Weight>,
    ps_u: Vec<u32>,
}

/// Concatenation tables of one center over all levels, evaluated lazily.
pub struct CenterTables {
    c: usize,
    per_level: Vec<CenterLevel>,
}

fn fin(w: Weight) -> Weight {
    if w >= BIG {
        INF
    } else {
        w
    }
}

impl CenterTables {
    /// `w(π[s][t])` at level `j`, `INF` if `⊥`.
    pub fn head(&self, s: usize, t: usize, j: usize) -> Weight {
        let l = &self.per_level[j];
        fin(l.from_w[s] + l.pc_w[t])
    }

    /// `w(π̄[s][t])` at level `j`, `INF` if `⊥`.
    pub fn tail(&self, s: usize, t: usize, j: usize) -> Weight {
        let l = &self.per_level[j];
        fin(l.ps_w[s] + l.to_w[t])
    }

    pub fn center(&self) -> usize {
        self.c
    }
}

impl ConcatIndex {
    /// Index `family` entries `(s, t, level, path)`; entries hitting `blocked`
    /// are dropped.
    pub fn new(
        store: &PathStore,
        n: usize,
        levels: usize,
        family: impl IntoIterator<Item = (usize, usize, usize, PathRef)>,
        blocked: &[bool],
    ) -> Self {
        let mut entries = Vec::new();
        for (s, t, j, p) in family {
            if p.is_bottom() || j >= levels || store.intersects(p, blocked) {
                continue;
            }
            entries.push(Entry {
                path: p,
                s: s as u32,
                t: t as u32,
                level: j as u32,
                w: store.weight(p),
                valid: true,
            });
        }
        entries.sort_unstable_by_key(|e| (e.s, e.t, e.level));
        let mut pair_start = vec![0u32; n * n + 1];
        for e in &entries {
            pair_start[e.s as usize * n + e.t as usize + 1] += 1;
        }
        for k in 0..n * n {
            pair_start[k + 1] += pair_start[k];
        }
        // two passes over the vertices: count, then fill
        let mut seen = vec![u32::MAX; n];
        let mut count = vec![0u32; n + 1];
        for (id, e) in entries.iter().enumerate() {
            store.for_each_vertex(e.path, |v| {
                if seen[v] != id as u32 {
                    seen[v] = id as u32;
                    count[v + 1] += 1;
                }
                true
            });
        }
        for v in 0..n {
            count[v + 1] += count[v];
        }
        let vx_start = count.clone();
        let mut fill = count;
        let mut vx_ids = vec![0u32; vx_start[n] as usize];
        seen.iter_mut().for_each(|x| *x = u32::MAX);
        // filling in level order leaves every vertex list sorted by level
        let mut by_level: Vec<u32> = (0..entries.len() as u32).collect();
        by_level.sort_by_key(|&id| entries[id as usize].level);
        for &id in &by_level {
            let e = &entries[id as usize];
            store.for_each_vertex(e.path, |v| {
                if seen[v] != id {
                    seen[v] = id;
                    vx_ids[fill[v] as usize] = id;
                    fill[v] += 1;
                }
                true
            });
        }
        let mut ix = ConcatIndex { n, levels, entries, pair_start, vx_start, vx_ids, mw: Vec::new(), mid: Vec::new() };
        ix.rebuild_m();
        ix
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn by_vertex(&self, v: usize) -> &[u32] {
        &self.vx_ids[self.vx_start[v] as usize..self.vx_start[v + 1] as usize]
    }

    fn rebuild_m(&mut self) {
        let (n, lv) = (self.n, self.levels);
        self.mw = vec![BIG; lv * n * n];
        self.mid = vec![NONE; lv * n * n];
        for s in 0..n {
            for t in 0..n {
                self.rebuild_pair(s, t);
            }
        }
    }

    /// Recompute `M[·][s][t]` from the valid entries of the pair.
    fn rebuild_pair(&mut self, s: usize, t: usize) {
        let (n, nn) = (self.n, self.n * self.n);
        let k = s * n + t;
        if s == t {
            for j in 0..self.levels {
                self.mw[j * nn + k] = 0;
                self.mid[j * nn + k] = ZERO;
            }
            return;
        }
        let (a, b) = (self.pair_start[k] as usize, self.pair_start[k + 1] as usize);
        let (mut bw, mut bid) = (BIG, NONE);
        let mut e = a;
        for j in 0..self.levels {
            while e < b && self.entries[e].level as usize <= j {
                let x = &self.entries[e];
                if x.valid && x.w < bw {
                    bw = x.w;
                    bid = e as u32;
                }
                e += 1;
            }
            self.mw[j * nn + k] = bw;
            self.mid[j * nn + k] = bid;
        }
    }

    /// Drop every entry that visits a vertex of `vs`.
    pub fn invalidate(&mut self, vs: &[usize]) {
        let mut pairs = Vec::new();
        for &v in vs {
            for k in self.vx_start[v] as usize..self.vx_start[v + 1] as usize {
                let id = self.vx_ids[k] as usize;
                let e = &mut self.entries[id];
                if e.valid {
                    e.valid = false;
                    pairs.push((e.s as usize, e.t as usize));
                }
            }
        }
        // entries of one pair are contiguous, so repeats are mostly adjacent
        pairs.dedup();
        for (s, t) in pairs {
            self.rebuild_pair(s, t);
        }
    }

    /// Concatenation tables of center `c` for every level.
    pub fn center(&self, store: &PathStore, c: usize) -> Result<CenterTables> {
        let per_level = (0..self.levels).map(|j| self.center_at(store, c, j)).collect::<Result<_>>()?;
        Ok(CenterTables { c, per_level })
    }

    /// Arrays of center `c` at level `j` alone.
    fn center_at(&self, store: &PathStore, c: usize, j: usize) -> Result<CenterLevel> {
        let (n, nn) = (self.n, self.n * self.n);
        let mut from_w = vec![BIG; n];
        let mut from_id = vec![NONE; n];
        let mut to_w = vec![BIG; n];
        let mut to_id = vec![NONE; n];
        for &id in self.by_vertex(c) {
            let e = self.entries[id as usize];
            if e.level as usize > j {
                break;
            }
            if !e.valid {
                continue;
            }
            let (pw, _) = store
                .locate(e.path, c)?
                .ok_or_else(|| Error::Usage("index lists a path missing its vertex".into()))?;
            let (s, t) = (e.s as usize, e.t as usize);
            if pw < from_w[s] {
                from_w[s] = pw;
                from_id[s] = id;
            }
            if e.w - pw < to_w[t] {
                to_w[t] = e.w - pw;
                to_id[t] = id;
            }
        }
        let mw = &self.mw[j * nn..(j + 1) * nn];
        let mut pc_w = vec![BIG; n];
        let mut pc_u = vec![NONE; n];
        for u in 0..n {
            let a = to_w[u];
            if a >= BIG {
                continue;
            }
            let row = &mw[u * n..(u + 1) * n];
            for t in 0..n {
                let x = a + row[t];
                if x < pc_w[t] {
                    pc_w[t] = x;
                    pc_u[t] = u as u32;
                }
            }
        }
        let mut ps_w = vec![BIG; n];
        let mut ps_u = vec![NONE; n];
        let sources: Vec<usize> = (0..n).filter(|&u| from_w[u] < BIG).collect();
        if !sources.is_empty() {
            for s in 0..n {
                let row = &mw[s * n..(s + 1) * n];
                let (mut bw, mut bu) = (BIG, NONE);
                for &u in &sources {
                    let x = row[u] + from_w[u];
                    if x < bw {
                        bw = x;
                        bu = u as u32;
                    }
                }
                ps_w[s] = bw;
                ps_u[s] = bu;
            }
        }
        Ok(CenterLevel { from_w, from_id, to_w, to_id, pc_w, pc_u, ps_w, ps_u })
    }

    fn entry_path(&self, store: &mut PathStore, id: u32, v: usize) -> PathRef {
        if id == ZERO {
            store.vertex(v)
        } else {
            self.entries[id as usize].path
        }
    }

    fn prefix(&self, store: &mut PathStore, id: u32, c: usize) -> Result<PathRef> {
        if id == ZERO {
            return Ok(store.vertex(c));
        }
        let (_, a, _) = store.split_at(self.entries[id as usize].path, c)?;
        Ok(a)
    }

    fn suffix(&self, store: &mut PathStore, id: u32, c: usize) -> Result<PathRef> {
        if id == ZERO {
            return Ok(store.vertex(c));
        }
        let (_, _, b) = store.split_at(self.entries[id as usize].path, c)?;
        Ok(b)
    }

    /// Materialize `π[s][t]` at level `j`.
    pub fn materialize_head(&self, store: &mut PathStore, ct: &CenterTables, s: usize, t: usize, j: usize) -> Result<PathRef> {
        self.head_at(store, &ct.per_level[j], ct.c, s, t, j)
    }

    fn head_at(&self, store: &mut PathStore, l: &CenterLevel, c: usize, s: usize, t: usize, j: usize) -> Result<PathRef> {
        if l.from_w[s] >= BIG || l.pc_w[t] >= BIG {
            return Ok(PathRef::BOTTOM);
        }
        let u = l.pc_u[t] as usize;
        let a = self.prefix(store, l.from_id[s], c)?;
        let b = self.suffix(store, l.to_id[u], c)?;
        let mid = self.mid[j * self.n * self.n + u * self.n + t];
        let d = self.entry_path(store, mid, t);
        let ab = store.concat(a, b)?;
        store.concat(ab, d)
    }

    /// Materialize `π̄[s][t]` at level `j`.
    pub fn materialize_tail(&self, store: &mut PathStore, ct: &CenterTables, s: usize, t: usize, j: usize) -> Result<PathRef> {
        self.tail_at(store, &ct.per_level[j], ct.c, s, t, j)
    }

    fn tail_at(&self, store: &mut PathStore, l: &CenterLevel, c: usize, s: usize, t: usize, j: usize) -> Result<PathRef> {
        if l.ps_w[s] >= BIG || l.to_w[t] >= BIG {
            return Ok(PathRef::BOTTOM);
        }
        let u = l.ps_u[s] as usize;
        let mid = self.mid[j * self.n * self.n + s * self.n + u];
        let d = self.entry_path(store, mid, s);
        let a = self.prefix(store, l.from_id[u], c)?;
        let b = self.suffix(store, l.to_id[t], c)?;
        let ab = store.concat(a, b)?;
        store.concat(d, ab)
    }

    fn materialize(&self, store: &mut PathStore, l: &CenterLevel, c: usize, s: usize, t: usize, j: usize, side: Side) -> Result<PathRef> {
        match side {
            Side::Head => self.head_at(store, l, c, s, t, j),
            Side::Tail => self.tail_at(store, l, c, s, t, j),
        }
    }
}

/// Both concatenation tables of `c` over one path family `P`: returns
/// `(π, π̄)` as dense `n × n` handle vectors.
pub fn concat_tables(store: &mut PathStore, n: usize, family: &[PathRef], c: usize) -> Result<(Vec<PathRef>, Vec<PathRef>)> {
    let fam: Vec<_> = family.iter().map(|&p| (store.start(p), store.end(p), 0, p)).collect();
    let ix = ConcatIndex::new(store, n, 1, fam, &vec![false; n]);
    let ct = ix.center(store, c)?;
    let mut pi = vec![PathRef::BOTTOM; n * n];
    let mut pi_bar = vec![PathRef::BOTTOM; n * n];
    for s in 0..n {
        for t in 0..n {
            if s == t {
                continue;
            }
            pi[s * n + t] = ix.materialize_head(store, &ct, s, t, 0)?;
            pi_bar[s * n + t] = ix.materialize_tail(store, &ct, s, t, 0)?;
        }
    }
    Ok((pi, pi_bar))
}

/// Full rebuild of a layer: `O_i` and `Π_i` as in [`rebuild_new`], then the
/// concatenation table `Π̄_i` over a random center order with the congested
/// set `Ō_i` grown as concatenations pile up on a vertex. `lower` holds the
/// `Π` tables of the layers below, as currently stored.
pub fn final_rebuild(
    ctx: &RebuildCtx,
    i: usize,
    centers: &[usize],
    lower: &[&Table],
    store: &mut PathStore,
) -> Result<Layer> {
    let n = ctx.snap.n;
    let levels = ctx.levels.levels();
    let mut layer = rebuild_new(ctx, i, centers, store);
    layer.kind = LayerKind::Final;
    let tau_i = layer.tau;
    let bound = congested_bound(ctx.n, tau_i, ctx.c_o);
    let nf = ctx.n as f64;
    let attempts = ctx.retries.max(1);
    let mark = store.mark();
    for attempt in 0..attempts {
        let family = std::iter::once(&layer.pi).chain(lower.iter().copied()).flat_map(|t| t.iter());
        let mut ix = ConcatIndex::new(store, n, levels, family, ctx.blocked);
        let mut o_bar = vec![false; n];
        let mut cbar = vec![0.0f64; n];
        let mut table = Table::new(n, levels);
        let mut order: Vec<usize> = centers.iter().copied().filter(|&c| !ctx.blocked[c]).collect();
        let mut rng = ctx.streams.stream(Site::CenterOrder, i as u64, attempt as u64, 0, ctx.tick);
        order.shuffle(&mut rng);
        let mut tw = vec![INF; n * n * levels];
        let adds: Vec<f64> = (0..levels).map(|j| nf / ctx.levels.h(j) as f64).collect();
        let mut fresh = Vec::new();
        // After Ō_i grows, φ is recomputed in place; a second pass over the
        // same center could only see heavier candidates, so none is made.
        for &c in &order {
            for j in 0..levels {
                let mut l = ix.center_at(store, c, j)?;
                for s in 0..n {
                    let mut t = 0;
                    while t < n {
                        let (fs, ps) = (l.from_w[s], l.ps_w[s]);
                        if fs >= BIG && ps >= BIG {
                            break;
                        }
                        // scan for the next improving cell of this row
                        let row = &tw[(j * n + s) * n..(j * n + s + 1) * n];
                        let mut hit = None;
                        while t < n {
                            let (a, b) = (fs + l.pc_w[t], ps + l.to_w[t]);
                            let w = a.min(b);
                            if w < BIG && w < row[t] && s != t {
                                hit = Some((w, if b < a { Side::Tail } else { Side::Head }));
                                break;
                            }
                            t += 1;
                        }
                        let Some((w, side)) = hit else { break };
                        let p = ix.materialize(store, &l, c, s, t, j, side)?;
                        debug_assert_eq!(store.weight(p), w);
                        debug_assert!(store.hop(p) as u64 <= 3 * ctx.levels.h(j));
                        table.set(s, t, j, p);
                        tw[(j * n + s) * n + t] = w;
                        store.for_each_vertex(p, |v| {
                            cbar[v] += adds[j];
                            if cbar[v] > tau_i && !o_bar[v] {
                                o_bar[v] = true;
                                fresh.push(v);
                            }
                            true
                        });
                        if !fresh.is_empty() {
                            ix.invalidate(&fresh);
                            fresh.clear();
                            l = ix.center_at(store, c, j)?;
                        }
                        t += 1;
                    }
                }
            }
        }
        let size = o_bar.iter().filter(|&&x| x).count() as f64;
        let peak = cbar.iter().cloned().fold(0.0, f64::max);
        layer.attempts = attempt + 1;
        if peak <= 2.0 * tau_i && size <= bound {
            layer.o_bar = o_bar;
            layer.congestion_bar = cbar;
            layer.pi_bar = table;
            return Ok(layer);
        }
        store.release(mark);
    }
    Err(Error::RebuildFailed(format!("layer {i}: concatenation congestion over budget after {attempts} attempts")))
}
