//! Answering a batch of deletions from the layer tables.
//!
//! All weights here are on the reduced scale of the last major rebuild, so
//! every table entry and every `A` entry is non-negative.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::Result;
use crate::hop::HopLevels;
use crate::layer::{Layer, Table};
use crate::path::{PathRef, PathStore};
use crate::rng::HitVarOracle;
use crate::weight::{Weight, INF};

/// Counters of one update.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct UpdateStats {
    /// Recover calls per level.
    pub recoveries: Vec<u64>,
    /// Recover calls weighted by `n / h_j`.
    pub recovery_cost: f64,
    /// Pairs popped from `Q`.
    pub extractions: u64,
    /// Pops that passed the `w(Π_o) < A` guard and were extended.
    pub extensions: u64,
    /// Pairs extended more than once within the update.
    pub duplicate_extensions: u64,
    /// Pops lighter than an earlier pop.
    pub order_violations: u64,
    /// Enqueues of pairs known to be primary (only with an exact matrix).
    pub primary_enqueues: u64,
    /// Table entries hit by a buffered deletion.
    pub invalidated: u64,
}

impl UpdateStats {
    pub fn new(levels: usize) -> Self {
        UpdateStats { recoveries: vec![0; levels], ..Default::default() }
    }

    fn recovered(&mut self, n: usize, levels: &HopLevels, j: usize) {
        if j < self.recoveries.len() {
            self.recoveries[j] += 1;
        }
        self.recovery_cost += n as f64 / levels.h(j) as f64;
    }
}

/// Shared inputs of an update.
pub struct UpdateCtx<'a> {
    pub layers: &'a [Layer],
    pub levels: &'a HopLevels,
    /// Vertices outside the current graph.
    pub blocked: &'a [bool],
}

impl UpdateCtx<'_> {
    fn n(&self) -> usize {
        self.blocked.len()
    }
}

/// Dense `n × n` handle matrix with `⟨v⟩` on the diagonal of live vertices.
pub struct PairTable {
    n: usize,
    cells: Vec<PathRef>,
}

impl PairTable {
    pub fn new(store: &mut PathStore, blocked: &[bool]) -> Self {
        let n = blocked.len();
        let mut cells = vec![PathRef::BOTTOM; n * n];
        for v in 0..n {
            if !blocked[v] {
                cells[v * n + v] = store.vertex(v);
            }
        }
        PairTable { n, cells }
    }

    #[inline]
    pub fn get(&self, s: usize, t: usize) -> PathRef {
        self.cells[s * self.n + t]
    }

    #[inline]
    pub fn set(&mut self, s: usize, t: usize, p: PathRef) {
        self.cells[s * self.n + t] = p;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Weights, `INF` for `⊥`.
    pub fn weights(&self, store: &PathStore) -> Vec<Weight> {
        self.cells.iter().map(|&p| store.weight(p)).collect()
    }
}

/// `Π′[s][t]`: lightest surviving entry of `Π_i[s, t, ·]` over all layers and
/// levels. Entries touching `D_i` are dropped.
pub fn primary_survivors(ctx: &UpdateCtx, store: &mut PathStore, stats: &mut UpdateStats) -> PairTable {
    let mut out = PairTable::new(store, ctx.blocked);
    for layer in ctx.layers {
        let any_dead = !layer.deleted_list.is_empty();
        for (s, t, _, p) in layer.pi.iter() {
            if any_dead && store.intersects(p, &layer.deleted) {
                stats.invalidated += 1;
                continue;
            }
            if store.weight(p) < store.weight(out.get(s, t)) {
                out.set(s, t, p);
            }
        }
    }
    out
}

/// Survivors of the leveled tables with the recovery flags they leave:
/// `(π′, needs)` indexed like a [`Table`].
fn leveled_survivors(
    ctx: &UpdateCtx,
    store: &PathStore,
    pick: impl Fn(&Layer) -> &Table,
    stats: &mut UpdateStats,
) -> (Table, Vec<bool>) {
    let n = ctx.n();
    let lv = ctx.levels.levels();
    let mut best = Table::new(n, lv);
    let mut needs = vec![false; n * n * lv];
    for layer in ctx.layers {
        let any_dead = !layer.deleted_list.is_empty();
        for (s, t, j, p) in pick(layer).iter() {
            if any_dead && store.intersects(p, &layer.deleted) {
                stats.invalidated += 1;
                needs[(s * n + t) * lv + j] = true;
                continue;
            }
            if store.weight(p) < store.weight(best.get(s, t, j)) {
                best.set(s, t, j, p);
            }
        }
    }
    (best, needs)
}

/// Lightest `left(s, x) ∘ right(x, t)` over `x ∈ cands`; `⊥` if none.
fn argmin_concat<L, R>(store: &mut PathStore, cands: impl IntoIterator<Item = usize>, left: L, right: R) -> Result<PathRef>
where
    L: Fn(usize) -> PathRef,
    R: Fn(usize) -> PathRef,
{
    let mut best = (INF, PathRef::BOTTOM, PathRef::BOTTOM);
    for x in cands {
        let (a, b) = (left(x), right(x));
        if a.is_bottom() || b.is_bottom() {
            continue;
        }
        let w = store.weight(a) + store.weight(b);
        if w < best.0 {
            best = (w, a, b);
        }
    }
    if best.0 == INF {
        return Ok(PathRef::BOTTOM);
    }
    store.concat(best.1, best.2)
}

/// `Recover` on a leveled table: lightest `π_o[s, x, j−1] ∘ π_o[x, t, j−1]`
/// over `x ∈ {v : X[s, v, t, j] = 1} ∪ {s, t}`. Level 0 has nothing below
/// it and returns `⊥`. Diagonal entries are zero-edge paths.
pub fn recover(
    store: &mut PathStore,
    table: &Table,
    zero: &[PathRef],
    hv: &mut HitVarOracle,
    s: usize,
    t: usize,
    j: usize,
) -> Result<PathRef> {
    if j == 0 {
        return Ok(PathRef::BOTTOM);
    }
    let mut eta = hv.hits_type1(s, t, j);
    eta.push(s);
    eta.push(t);
    let get = |a: usize, b: usize| if a == b { zero[a] } else { table.get(a, b, j - 1) };
    argmin_concat(store, eta, |x| get(s, x), |x| get(x, t))
}

fn zero_paths(store: &mut PathStore, blocked: &[bool]) -> Vec<PathRef> {
    (0..blocked.len()).map(|v| if blocked[v] { PathRef::BOTTOM } else { store.vertex(v) }).collect()
}

/// Reference update over leveled `π_i` tables: survivors, then recovery of
/// flagged triples in increasing level. Returns `w(π_o[s, t, i_h])`; the
/// caller merges it with the long-path matrix.
pub fn basic_update(
    ctx: &UpdateCtx,
    store: &mut PathStore,
    hv: &mut HitVarOracle,
    stats: &mut UpdateStats,
) -> Result<Vec<Weight>> {
    let n = ctx.n();
    let lv = ctx.levels.levels();
    let (mut po, needs) = leveled_survivors(ctx, store, |l| &l.pi, stats);
    let zero = zero_paths(store, ctx.blocked);
    for j in 0..lv {
        for s in 0..n {
            for t in 0..n {
                if needs[(s * n + t) * lv + j] {
                    let p = recover(store, &po, &zero, hv, s, t, j)?;
                    stats.recovered(n, ctx.levels, j);
                    po.set(s, t, j, p);
                }
            }
        }
    }
    let top = ctx.levels.i_h();
    let mut out = vec![INF; n * n];
    for s in 0..n {
        if ctx.blocked[s] {
            continue;
        }
        out[s * n + s] = 0;
        for t in 0..n {
            if s != t {
                out[s * n + t] = store.weight(po.get(s, t, top));
            }
        }
    }
    Ok(out)
}

/// Update driven by an exact `(hop, length)` oracle of the current graph:
/// at level `j`, recover exactly the pairs whose shortest path sits at level
/// `j` and whose current candidate is too heavy. Returns `w(Π_o)`.
pub fn update_with_oracle<F>(
    ctx: &UpdateCtx,
    store: &mut PathStore,
    hv: &mut HitVarOracle,
    oracle: F,
    stats: &mut UpdateStats,
) -> Result<Vec<Weight>>
where
    F: Fn(usize, usize) -> (usize, Weight),
{
    let n = ctx.n();
    let mut po = primary_survivors(ctx, store, stats);
    for j in 0..=ctx.levels.i_h() {
        for s in 0..n {
            if ctx.blocked[s] {
                continue;
            }
            for t in 0..n {
                if s == t || ctx.blocked[t] {
                    continue;
                }
                let (x, y) = oracle(s, t);
                if y == INF || x == 0 || ctx.levels.level_of(x as u64) != j || store.weight(po.get(s, t)) <= y {
                    continue;
                }
                let eta = hv.hits_type1(s, t, j);
                let p = argmin_concat(store, eta, |v| po.get(s, v), |v| po.get(v, t))?;
                stats.recovered(n, ctx.levels, j);
                po.set(s, t, p);
            }
        }
    }
    Ok(po.weights(store))
}

/// `Π̄′[s, t, j]`: surviving concatenations, with flagged triples recovered
/// as `Π′[s, x] ∘ Π′[x, t]` over `x ∈ {v : X[s, v, t, j] = 1} ∪ {s, t}`.
pub fn update_for_concatenations(
    ctx: &UpdateCtx,
    store: &mut PathStore,
    hv: &mut HitVarOracle,
    primary: &PairTable,
    stats: &mut UpdateStats,
) -> Result<Table> {
    let n = ctx.n();
    let lv = ctx.levels.levels();
    let (mut bar, needs) = leveled_survivors(ctx, store, |l| &l.pi_bar, stats);
    for j in 0..lv {
        for s in 0..n {
            for t in 0..n {
                if needs[(s * n + t) * lv + j] {
                    let mut eta = hv.hits_type1(s, t, j);
                    eta.push(s);
                    eta.push(t);
                    let p = argmin_concat(store, eta, |x| primary.get(s, x), |x| primary.get(x, t))?;
                    stats.recovered(n, ctx.levels, j);
                    bar.set(s, t, j, p);
                }
            }
        }
    }
    Ok(bar)
}

/// Final update: seed `Π_o` from the better of `Π′` and `Π̄′[·, ·, i_h]`,
/// then extend improved pairs in increasing weight through fresh type-II
/// hitting sets, skipping pairs the long-path matrix `a` already answers.
/// Returns `min(a, w(Π_o))`.
///
/// `exact`, when given, is the true distance matrix on the same scale and is
/// only used to count enqueues of primary pairs.
pub fn final_update(
    ctx: &UpdateCtx,
    store: &mut PathStore,
    hv: &mut HitVarOracle,
    a: &[Weight],
    exact: Option<&[Weight]>,
    stats: &mut UpdateStats,
) -> Result<Vec<Weight>> {
    let n = ctx.n();
    let top = ctx.levels.i_h();
    let primary = primary_survivors(ctx, store, stats);
    let bar = update_for_concatenations(ctx, store, hv, &primary, stats)?;
    let primary_mask: Vec<bool> = match exact {
        Some(d) => (0..n * n).map(|k| d[k] != INF && store.weight(primary.cells[k]) == d[k]).collect(),
        None => vec![false; n * n],
    };
    let is_primary = |s: usize, t: usize| primary_mask[s * n + t];
    let mut po = primary;
    let mut in_q = vec![false; n * n];
    let mut extended = vec![false; n * n];
    let mut heap: BinaryHeap<Reverse<(Weight, u32, u32)>> = BinaryHeap::new();
    for s in 0..n {
        for t in 0..n {
            if s == t {
                continue;
            }
            let pb = bar.get(s, t, top);
            if store.weight(pb) < store.weight(po.get(s, t)) {
                if is_primary(s, t) {
                    stats.primary_enqueues += 1;
                }
                po.set(s, t, pb);
                in_q[s * n + t] = true;
                heap.push(Reverse((store.weight(pb), s as u32, t as u32)));
            }
        }
    }
    let mut last = 0;
    while let Some(Reverse((w, s, t))) = heap.pop() {
        let (s, t) = (s as usize, t as usize);
        let k = s * n + t;
        if !in_q[k] || w != store.weight(po.get(s, t)) {
            continue;
        }
        in_q[k] = false;
        stats.extractions += 1;
        if w < last {
            stats.order_violations += 1;
        }
        last = w;
        if w >= a[k] {
            continue;
        }
        if extended[k] {
            stats.duplicate_extensions += 1;
        }
        extended[k] = true;
        stats.extensions += 1;
        let pst = po.get(s, t);
        let j = ctx.levels.level_of(store.hop(pst) as u64);
        if j > top {
            continue;
        }
        for x in hv.hits_type2(s, t, j) {
            if ctx.blocked[x] || x == t {
                continue;
            }
            let pxs = po.get(x, s);
            if pxs.is_bottom() {
                continue;
            }
            let nw = store.weight(pxs) + w;
            if nw < store.weight(po.get(x, t)) {
                if is_primary(x, t) {
                    stats.primary_enqueues += 1;
                }
                let p = store.concat(pxs, pst)?;
                po.set(x, t, p);
                in_q[x * n + t] = true;
                heap.push(Reverse((nw, x as u32, t as u32)));
            }
        }
        for y in hv.hits_type2(s, t, j) {
            if ctx.blocked[y] || y == s {
                continue;
            }
            let pty = po.get(t, y);
            if pty.is_bottom() {
                continue;
            }
            let nw = w + store.weight(pty);
            if nw < store.weight(po.get(s, y)) {
                if is_primary(s, y) {
                    stats.primary_enqueues += 1;
                }
                let p = store.concat(pst, pty)?;
                po.set(s, y, p);
                in_q[s * n + y] = true;
                heap.push(Reverse((nw, s as u32, y as u32)));
            }
        }
    }
    let mut out = po.weights(store);
    for k in 0..n * n {
        out[k] = out[k].min(a[k]);
    }
    Ok(out)
}
