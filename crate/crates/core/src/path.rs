//! Immutable path handles backed by an arena of shortest-path trees and
//! concatenation nodes.

use crate::error::{Error, Result};
use crate::weight::{Weight, INF};

pub(crate) const NONE: u32 = u32::MAX;

/// A rooted tree produced by a single-source kernel.
///
/// Nodes carry a vertex label. Dijkstra-style trees have one node per reached
/// vertex; hop-layered kernels may repeat a vertex across nodes, in which case
/// `unique` is false and vertex lookups are unavailable.
#[derive(Clone, Debug)]
pub struct SsspTree {
    pub vertex: Vec<u32>,
    pub parent: Vec<u32>,
    pub depth: Vec<u32>,
    pub dist: Vec<Weight>,
    pub dfs_in: Vec<u32>,
    pub dfs_out: Vec<u32>,
    node_of: Vec<u32>,
    unique: bool,
}

impl SsspTree {
    /// Build from per-node `(vertex, parent, dist)`; node 0 must be the root.
    pub fn new(n_vertices: usize, vertex: Vec<u32>, parent: Vec<u32>, dist: Vec<Weight>) -> Self {
        let m = vertex.len();
        assert!(m > 0 && parent[0] == NONE, "node 0 must be the root");
        let mut head = vec![NONE; m];
        let mut next = vec![NONE; m];
        for v in (1..m).rev() {
            let p = parent[v] as usize;
            next[v] = head[p];
            head[p] = v as u32;
        }
        let mut depth = vec![0u32; m];
        let mut dfs_in = vec![0u32; m];
        let mut dfs_out = vec![0u32; m];
        let mut clock = 0u32;
        let mut stack: Vec<(u32, bool)> = vec![(0, false)];
        while let Some((x, done)) = stack.pop() {
            let xi = x as usize;
            if done {
                dfs_out[xi] = clock - 1;
                continue;
            }
            dfs_in[xi] = clock;
            clock += 1;
            stack.push((x, true));
            let mut c = head[xi];
            while c != NONE {
                depth[c as usize] = depth[xi] + 1;
                stack.push((c, false));
                c = next[c as usize];
            }
        }
        assert_eq!(clock as usize, m, "parent pointers do not form a tree");
        let mut node_of = vec![NONE; n_vertices];
        let mut unique = true;
        for (x, &v) in vertex.iter().enumerate() {
            if node_of[v as usize] != NONE {
                unique = false;
            }
            node_of[v as usize] = x as u32;
        }
        if !unique {
            node_of.clear();
        }
        SsspTree { vertex, parent, depth, dist, dfs_in, dfs_out, node_of, unique }
    }

    /// Build a vertex tree from per-vertex parent and distance arrays
    /// (`dist = INF` marks unreached vertices).
    pub fn from_vertex_parents(root: usize, parent: &[u32], dist: &[Weight]) -> Self {
        let n = parent.len();
        let mut idx = vec![NONE; n];
        let mut order = vec![root as u32];
        idx[root] = 0;
        for v in 0..n {
            if v != root && dist[v] != INF {
                idx[v] = order.len() as u32;
                order.push(v as u32);
            }
        }
        let vertex = order.clone();
        let par: Vec<u32> = order
            .iter()
            .map(|&v| if v as usize == root { NONE } else { idx[parent[v as usize] as usize] })
            .collect();
        let d: Vec<Weight> = order.iter().map(|&v| dist[v as usize]).collect();
        SsspTree::new(n, vertex, par, d)
    }

    pub fn len(&self) -> usize {
        self.vertex.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertex.is_empty()
    }

    pub fn is_unique(&self) -> bool {
        self.unique
    }

    /// Node holding vertex `v` in a unique tree.
    pub fn node_of(&self, v: usize) -> Option<u32> {
        if !self.unique {
            return None;
        }
        match self.node_of.get(v) {
            Some(&x) if x != NONE => Some(x),
            _ => None,
        }
    }

    /// Whether node `a` is an ancestor of (or equal to) node `b`.
    #[inline]
    pub fn is_ancestor(&self, a: u32, b: u32) -> bool {
        let (a, b) = (a as usize, b as usize);
        self.dfs_in[a] <= self.dfs_in[b] && self.dfs_in[b] <= self.dfs_out[a]
    }
}

/// Handle to a path in a [`PathStore`], or `⊥`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PathRef(u32);

impl PathRef {
    /// The empty path `⊥`: weight `INF`, absorbs concatenation.
    pub const BOTTOM: PathRef = PathRef(NONE);

    pub fn is_bottom(self) -> bool {
        self.0 == NONE
    }
}

#[derive(Clone, Copy, Debug)]
enum Kind {
    /// Tree path between nodes `top` (ancestor) and `bot`. Forward segments
    /// run top → bot; reversed ones bot → top.
    Seg { tree: u32, top: u32, bot: u32, rev: bool },
    Cat { l: u32, r: u32 },
    Edge,
    Vertex,
}

#[derive(Clone, Copy, Debug)]
struct Node {
    kind: Kind,
    w: Weight,
    hop: u32,
    start: u32,
    end: u32,
}

/// Arena of path nodes and the trees they point into.
///
/// Nodes are never freed individually: [`PathStore::mark`] and
/// [`PathStore::release`] drop everything allocated after a watermark, and
/// [`PathStore::clear`] starts a new epoch.
#[derive(Clone, Debug, Default)]
pub struct PathStore {
    nodes: Vec<Node>,
    trees: Vec<SsspTree>,
}

/// Watermark returned by [`PathStore::mark`].
#[derive(Clone, Copy, Debug)]
pub struct Mark {
    nodes: usize,
    trees: usize,
}

impl PathStore {
    pub fn new() -> Self {
        PathStore::default()
    }

    /// Drop every node and tree.
    pub fn clear(&mut self) {
        self.nodes.clear();
        self.trees.clear();
    }

    pub fn mark(&self) -> Mark {
        Mark { nodes: self.nodes.len(), trees: self.trees.len() }
    }

    /// Free everything allocated after `m`. Handles created after `m` become
    /// invalid.
    pub fn release(&mut self, m: Mark) {
        self.nodes.truncate(m.nodes);
        self.trees.truncate(m.trees);
    }

    /// Number of live handles.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    pub fn add_tree(&mut self, t: SsspTree) -> u32 {
        self.trees.push(t);
        (self.trees.len() - 1) as u32
    }

    pub fn tree(&self, id: u32) -> &SsspTree {
        &self.trees[id as usize]
    }

    fn push(&mut self, n: Node) -> PathRef {
        let id = self.nodes.len();
        assert!(id < NONE as usize, "path arena exhausted");
        self.nodes.push(n);
        PathRef(id as u32)
    }

    #[inline]
    fn node(&self, p: PathRef) -> &Node {
        &self.nodes[p.0 as usize]
    }

    /// Zero-edge path `⟨v⟩`.
    pub fn vertex(&mut self, v: usize) -> PathRef {
        self.push(Node { kind: Kind::Vertex, w: 0, hop: 0, start: v as u32, end: v as u32 })
    }

    /// Single-edge path `u → v`.
    pub fn edge(&mut self, u: usize, v: usize, w: Weight) -> PathRef {
        assert!(w != INF);
        self.push(Node { kind: Kind::Edge, w, hop: 1, start: u as u32, end: v as u32 })
    }

    /// Tree path from the root to node `bot`, read forward (root first) or
    /// reversed (`bot` first).
    pub fn segment(&mut self, tree: u32, top: u32, bot: u32, rev: bool) -> PathRef {
        let t = &self.trees[tree as usize];
        debug_assert!(t.is_ancestor(top, bot), "segment top is not an ancestor");
        let w = t.dist[bot as usize] - t.dist[top as usize];
        let hop = t.depth[bot as usize] - t.depth[top as usize];
        let (a, b) = (t.vertex[top as usize], t.vertex[bot as usize]);
        let (start, end) = if rev { (b, a) } else { (a, b) };
        self.push(Node { kind: Kind::Seg { tree, top, bot, rev }, w, hop, start, end })
    }

    /// `a ∘ b`. `⊥` absorbs; a zero-edge operand collapses to the other.
    pub fn concat(&mut self, a: PathRef, b: PathRef) -> Result<PathRef> {
        if a.is_bottom() || b.is_bottom() {
            return Ok(PathRef::BOTTOM);
        }
        let (na, nb) = (*self.node(a), *self.node(b));
        if na.end != nb.start {
            return Err(Error::Usage(format!(
                "concat endpoint mismatch: {} vs {}",
                na.end, nb.start
            )));
        }
        if na.hop == 0 {
            return Ok(b);
        }
        if nb.hop == 0 {
            return Ok(a);
        }
        Ok(self.push(Node {
            kind: Kind::Cat { l: a.0, r: b.0 },
            w: na.w + nb.w,
            hop: na.hop + nb.hop,
            start: na.start,
            end: nb.end,
        }))
    }

    /// Weight, `INF` for `⊥`.
    #[inline]
    pub fn weight(&self, p: PathRef) -> Weight {
        if p.is_bottom() {
            INF
        } else {
            self.node(p).w
        }
    }

    /// Edge count; `⊥` reports `u32::MAX` so it orders last.
    #[inline]
    pub fn hop(&self, p: PathRef) -> u32 {
        if p.is_bottom() {
            u32::MAX
        } else {
            self.node(p).hop
        }
    }

    #[inline]
    pub fn start(&self, p: PathRef) -> usize {
        self.node(p).start as usize
    }

    #[inline]
    pub fn end(&self, p: PathRef) -> usize {
        self.node(p).end as usize
    }

    /// Visit every vertex of `p` once per occurrence, in no particular
    /// order; stop early when `f` returns false. Returns false iff stopped
    /// early. Junction vertices are visited once.
    pub fn for_each_vertex<F: FnMut(usize) -> bool>(&self, p: PathRef, mut f: F) -> bool {
        assert!(!p.is_bottom());
        f(self.start(p)) && self.visit_tail(p.0, &mut f)
    }

    // every vertex of the node except its first
    fn visit_tail<F: FnMut(usize) -> bool>(&self, x: u32, f: &mut F) -> bool {
        let n = self.nodes[x as usize];
        match n.kind {
            Kind::Vertex => true,
            Kind::Edge => f(n.end as usize),
            Kind::Cat { l, r } => self.visit_tail(l, f) && self.visit_tail(r, f),
            Kind::Seg { tree, top, bot, rev } => {
                let t = &self.trees[tree as usize];
                if top == bot {
                    return true;
                }
                if rev {
                    let mut y = t.parent[bot as usize];
                    loop {
                        if !f(t.vertex[y as usize] as usize) {
                            return false;
                        }
                        if y == top {
                            return true;
                        }
                        y = t.parent[y as usize];
                    }
                } else {
                    let mut y = bot;
                    while y != top {
                        if !f(t.vertex[y as usize] as usize) {
                            return false;
                        }
                        y = t.parent[y as usize];
                    }
                    true
                }
            }
        }
    }

    /// Visit the vertices of `p` in walking order; stop early when `f`
    /// returns false. Returns false iff stopped early.
    pub fn for_each_vertex_ordered<F: FnMut(usize) -> bool>(&self, p: PathRef, mut f: F) -> bool {
        assert!(!p.is_bottom());
        if !f(self.start(p)) {
            return false;
        }
        // visit every vertex except the first of each piece
        let mut stack = vec![p.0];
        let mut buf = Vec::new();
        while let Some(x) = stack.pop() {
            let n = self.nodes[x as usize];
            match n.kind {
                Kind::Vertex => {}
                Kind::Edge => {
                    if !f(n.end as usize) {
                        return false;
                    }
                }
                Kind::Cat { l, r } => {
                    stack.push(r);
                    stack.push(l);
                }
                Kind::Seg { tree, top, bot, rev } => {
                    let t = &self.trees[tree as usize];
                    buf.clear();
                    let mut y = bot;
                    while y != top {
                        buf.push(y);
                        y = t.parent[y as usize];
                    }
                    if rev {
                        // bot .. top: skip bot itself, then parents up to top
                        for k in 1..buf.len() {
                            if !f(t.vertex[buf[k] as usize] as usize) {
                                return false;
                            }
                        }
                        if !buf.is_empty() && !f(t.vertex[top as usize] as usize) {
                            return false;
                        }
                    } else {
                        for &y in buf.iter().rev() {
                            if !f(t.vertex[y as usize] as usize) {
                                return false;
                            }
                        }
                    }
                }
            }
        }
        true
    }

    /// Ordered vertex list `p[0..=|p|]`.
    pub fn vertices(&self, p: PathRef) -> Result<Vec<usize>> {
        if p.is_bottom() {
            return Err(Error::Usage("vertices of ⊥".into()));
        }
        let mut out = Vec::with_capacity(self.hop(p) as usize + 1);
        self.for_each_vertex_ordered(p, |v| {
            out.push(v);
            true
        });
        Ok(out)
    }

    /// Whether any vertex of `p` is flagged in `dead`.
    pub fn intersects(&self, p: PathRef, dead: &[bool]) -> bool {
        !self.for_each_vertex(p, |v| !dead[v])
    }

    /// Prefix weight and hop of `p` up to the first occurrence of `c`, or
    /// `None` when `c ∉ p`. Supported shapes: a segment, an edge, a vertex,
    /// or a concatenation of two such pieces.
    pub fn locate(&self, p: PathRef, c: usize) -> Result<Option<(Weight, u32)>> {
        assert!(!p.is_bottom());
        let n = *self.node(p);
        match n.kind {
            Kind::Cat { l, r } => {
                let (l, r) = (PathRef(l), PathRef(r));
                if let Some(x) = self.locate_piece(l, c)? {
                    return Ok(Some(x));
                }
                match self.locate_piece(r, c)? {
                    Some((w, h)) => {
                        let nl = self.node(l);
                        Ok(Some((nl.w + w, nl.hop + h)))
                    }
                    None => Ok(None),
                }
            }
            _ => self.locate_piece(p, c),
        }
    }

    fn locate_piece(&self, p: PathRef, c: usize) -> Result<Option<(Weight, u32)>> {
        let n = *self.node(p);
        match n.kind {
            Kind::Vertex => Ok((n.start as usize == c).then_some((0, 0))),
            Kind::Edge => Ok(if n.start as usize == c {
                Some((0, 0))
            } else if n.end as usize == c {
                Some((n.w, 1))
            } else {
                None
            }),
            Kind::Seg { tree, top, bot, rev } => {
                let t = &self.trees[tree as usize];
                let x = match t.node_of(c) {
                    Some(x) => x,
                    None if t.is_unique() => return Ok(None),
                    None => return Err(Error::UnsupportedShape("segment of a layered tree".into())),
                };
                if !(t.is_ancestor(top, x) && t.is_ancestor(x, bot)) {
                    return Ok(None);
                }
                let (xi, ti, bi) = (x as usize, top as usize, bot as usize);
                Ok(Some(if rev {
                    (t.dist[bi] - t.dist[xi], t.depth[bi] - t.depth[xi])
                } else {
                    (t.dist[xi] - t.dist[ti], t.depth[xi] - t.depth[ti])
                }))
            }
            Kind::Cat { .. } => Err(Error::UnsupportedShape("nested concatenation".into())),
        }
    }

    /// Split `p` at the first occurrence of `c`: `(true, p[..c], p[c..])`, or
    /// `(false, ⊥, ⊥)` when `c ∉ p`. Both parts share the vertex `c`.
    pub fn split_at(&mut self, p: PathRef, c: usize) -> Result<(bool, PathRef, PathRef)> {
        if p.is_bottom() {
            return Err(Error::Usage("split of ⊥".into()));
        }
        let n = *self.node(p);
        match n.kind {
            Kind::Cat { l, r } => {
                let (l, r) = (PathRef(l), PathRef(r));
                if self.locate_piece(l, c)?.is_some() {
                    let (_, a, b) = self.split_piece(l, c)?;
                    let b = self.concat(b, r)?;
                    return Ok((true, a, b));
                }
                if self.locate_piece(r, c)?.is_some() {
                    let (_, a, b) = self.split_piece(r, c)?;
                    let a = self.concat(l, a)?;
                    return Ok((true, a, b));
                }
                Ok((false, PathRef::BOTTOM, PathRef::BOTTOM))
            }
            _ => self.split_piece(p, c),
        }
    }

    fn split_piece(&mut self, p: PathRef, c: usize) -> Result<(bool, PathRef, PathRef)> {
        if self.locate_piece(p, c)?.is_none() {
            return Ok((false, PathRef::BOTTOM, PathRef::BOTTOM));
        }
        let n = *self.node(p);
        match n.kind {
            Kind::Vertex => Ok((true, p, p)),
            Kind::Edge => {
                let v = self.vertex(c);
                Ok(if n.start as usize == c { (true, v, p) } else { (true, p, v) })
            }
            Kind::Seg { tree, top, bot, rev } => {
                let x = self.trees[tree as usize].node_of(c).unwrap();
                Ok(if rev {
                    (true, self.segment(tree, x, bot, true), self.segment(tree, top, x, true))
                } else {
                    (true, self.segment(tree, top, x, false), self.segment(tree, x, bot, false))
                })
            }
            Kind::Cat { .. } => unreachable!(),
        }
    }

    /// Recompute weight from `edge` along the materialized vertices.
    pub fn recompute_weight<F: Fn(usize, usize) -> Weight>(&self, p: PathRef, edge: F) -> Weight {
        let vs = self.vertices(p).unwrap();
        vs.windows(2).fold(0, |acc, e| crate::weight::add(acc, edge(e[0], e[1])))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // path tree 0 - 1 - 2 - 3 with a branch 1 - 4
    fn sample_tree() -> SsspTree {
        let parent = vec![NONE, 0, 1, 2, 1];
        let dist = vec![0, 2, 5, 6, 10];
        SsspTree::from_vertex_parents(0, &parent, &dist)
    }

    #[test]
    fn bottom_absorbs() {
        let mut st = PathStore::new();
        let e = st.edge(0, 1, 3);
        assert!(st.concat(PathRef::BOTTOM, e).unwrap().is_bottom());
        assert!(st.concat(e, PathRef::BOTTOM).unwrap().is_bottom());
    }

    #[test]
    fn two_edges() {
        let mut st = PathStore::new();
        let a = st.edge(0, 1, 3);
        let b = st.edge(1, 2, 4);
        let p = st.concat(a, b).unwrap();
        assert_eq!(st.weight(p), 7);
        assert_eq!(st.hop(p), 2);
        assert_eq!(st.vertices(p).unwrap(), vec![0, 1, 2]);
        assert!(st.concat(b, a).is_err());
    }

    #[test]
    fn segments_forward_and_reversed() {
        let mut st = PathStore::new();
        let t = st.add_tree(sample_tree());
        let tr = st.tree(t).clone();
        let n3 = tr.node_of(3).unwrap();
        let n1 = tr.node_of(1).unwrap();
        let root = tr.node_of(0).unwrap();
        let f = st.segment(t, root, n3, false);
        assert_eq!(st.vertices(f).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!((st.weight(f), st.hop(f)), (6, 3));
        let r = st.segment(t, n1, n3, true);
        assert_eq!(st.vertices(r).unwrap(), vec![3, 2, 1]);
        assert_eq!((st.weight(r), st.hop(r)), (4, 2));
        let single = st.segment(t, n3, n3, false);
        assert_eq!(st.vertices(single).unwrap(), vec![3]);
    }

    #[test]
    fn split_segment_and_concat() {
        let mut st = PathStore::new();
        let t = st.add_tree(sample_tree());
        let tr = st.tree(t).clone();
        let (root, n3, n4) = (tr.node_of(0).unwrap(), tr.node_of(3).unwrap(), tr.node_of(4).unwrap());
        let p = st.segment(t, root, n3, false);
        let (hit, a, b) = st.split_at(p, 2).unwrap();
        assert!(hit);
        assert_eq!(st.vertices(a).unwrap(), vec![0, 1, 2]);
        assert_eq!(st.vertices(b).unwrap(), vec![2, 3]);
        assert_eq!(st.weight(a) + st.weight(b), st.weight(p));
        let (hit, a, b) = st.split_at(p, 4).unwrap();
        assert!(!hit && a.is_bottom() && b.is_bottom());
        let (hit, a, _) = st.split_at(p, 0).unwrap();
        assert!(hit);
        assert_eq!(st.hop(a), 0);

        // reversed 4 -> 1 -> 0 followed by forward 0 -> 1 -> 2 -> 3
        let back = st.segment(t, root, n4, true);
        let q = st.concat(back, p).unwrap();
        assert_eq!(st.vertices(q).unwrap(), vec![4, 1, 0, 1, 2, 3]);
        let (hit, a, b) = st.split_at(q, 0).unwrap();
        assert!(hit);
        assert_eq!(st.vertices(a).unwrap(), vec![4, 1, 0]);
        assert_eq!(st.vertices(b).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(st.locate(q, 2).unwrap(), Some((10 + 5, 4)));
        let tail = st.edge(3, 7, 1);
        let nested = st.concat(q, tail).unwrap();
        assert!(matches!(st.split_at(nested, 3), Err(Error::UnsupportedShape(_))));
    }

    #[test]
    fn intersects_matches_scan() {
        let mut st = PathStore::new();
        let t = st.add_tree(sample_tree());
        let tr = st.tree(t).clone();
        let p = st.segment(t, tr.node_of(0).unwrap(), tr.node_of(3).unwrap(), false);
        let mut dead = vec![false; 8];
        assert!(!st.intersects(p, &dead));
        dead[0] = true;
        assert!(st.intersects(p, &dead));
        dead[0] = false;
        dead[4] = true;
        assert!(!st.intersects(p, &dead));
    }

    #[test]
    fn release_drops_scratch() {
        let mut st = PathStore::new();
        let a = st.edge(0, 1, 1);
        let m = st.mark();
        let b = st.edge(1, 2, 1);
        st.concat(a, b).unwrap();
        st.release(m);
        assert_eq!(st.node_count(), 1);
    }
}
