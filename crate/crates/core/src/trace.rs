//! Update workloads: random generation and the line-oriented text format.
//!
//! ```text
//! n density w_max seed
//! D v
//! I v k u1 w1 ... uk wk m x1 y1 ... xm ym
//! ```
//!
//! The header fixes the initial graph: `n` vertices, each ordered pair an
//! edge with probability `density`, weights uniform in `[1, w_max]`, drawn
//! from `seed`. An insert lists `k` out-edges `v → u` and then `m` in-edges
//! `x → v`; the in-edge block may be omitted, meaning `m = 0`.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::Update;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::weight::Weight;

#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub n: usize,
    pub density: f64,
    pub w_max: Weight,
    pub seed: u64,
    pub ops: Vec<Update>,
}

/// Random digraph: every ordered pair is an edge with probability `density`.
pub fn random_graph(n: usize, density: f64, w_max: Weight, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Graph::new(n);
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.gen_bool(density) {
                g.set_edge(u, v, rng.gen_range(1..=w_max.max(1)));
            }
        }
    }
    g
}

impl Trace {
    /// Deterministic workload of `ops` updates; deletions and insertions are
    /// equally likely, and inserted vertices get random edges to the alive
    /// vertices at `density` in each direction.
    pub fn generate(n: usize, density: f64, w_max: Weight, ops: usize, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&density) {
            return Err(Error::Usage(format!("density {density} outside [0, 1]")));
        }
        if w_max < 1 {
            return Err(Error::Usage("w_max must be at least 1".into()));
        }
        let mut alive = vec![true; n];
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7472_6163_6521);
        let mut out = Vec::with_capacity(ops);
        for _ in 0..ops {
            let live: Vec<usize> = (0..alive.len()).filter(|&v| alive[v]).collect();
            if !live.is_empty() && rng.gen_bool(0.5) {
                let v = live[rng.gen_range(0..live.len())];
                alive[v] = false;
                out.push(Update::Delete(v));
            } else {
                let v = alive.iter().position(|a| !a).unwrap_or(alive.len());
                let mut out_edges = Vec::new();
                let mut in_edges = Vec::new();
                for &u in &live {
                    if rng.gen_bool(density) {
                        out_edges.push((u, rng.gen_range(1..=w_max)));
                    }
                    if rng.gen_bool(density) {
                        in_edges.push((u, rng.gen_range(1..=w_max)));
                    }
                }
                if v == alive.len() {
                    alive.push(true);
                } else {
                    alive[v] = true;
                }
                out.push(Update::Insert { v, in_edges, out_edges });
            }
        }
        Ok(Trace { n, density, w_max, seed, ops: out })
    }

    pub fn initial_graph(&self) -> Graph {
        random_graph(self.n, self.density, self.w_max, self.seed)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {} {} {}\n", self.n, self.density, self.w_max, self.seed);
        for op in &self.ops {
            match op {
                Update::Delete(v) => writeln!(s, "D {v}").unwrap(),
                Update::Insert { v, in_edges, out_edges } => {
                    write!(s, "I {v} {}", out_edges.len()).unwrap();
                    for (u, w) in out_edges {
                        write!(s, " {u} {w}").unwrap();
                    }
                    write!(s, " {}", in_edges.len()).unwrap();
                    for (u, w) in in_edges {
                        write!(s, " {u} {w}").unwrap();
                    }
                    s.push('\n');
                }
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::Usage(format!("trace line {}: {msg}", line + 1));
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        let (hl, header) = lines.next().ok_or_else(|| Error::Usage("empty trace".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 4 {
            return Err(bad(hl, "header needs `n density w_max seed`"));
        }
        let n = h[0].parse().map_err(|_| bad(hl, "bad n"))?;
        let density = h[1].parse().map_err(|_| bad(hl, "bad density"))?;
        let w_max = h[2].parse().map_err(|_| bad(hl, "bad w_max"))?;
        let seed = h[3].parse().map_err(|_| bad(hl, "bad seed"))?;
        let mut ops = Vec::new();
        for (ln, line) in lines {
            let tok: Vec<&str> = line.split_whitespace().collect();
            let num = |k: usize| -> Result<i128> {
                tok.get(k).ok_or_else(|| bad(ln, "truncated"))?.parse().map_err(|_| bad(ln, "bad number"))
            };
            let vertex = |x: i128| -> Result<usize> { usize::try_from(x).map_err(|_| bad(ln, "bad vertex")) };
            match tok[0] {
                "D" if tok.len() == 2 => ops.push(Update::Delete(vertex(num(1)?)?)),
                "I" => {
                    let v = vertex(num(1)?)?;
                    let mut pos = 2;
                    let mut lists = [Vec::new(), Vec::new()];
                    for (b, list) in lists.iter_mut().enumerate() {
                        if b == 1 && pos == tok.len() {
                            break;
                        }
                        let k = vertex(num(pos)?)?;
                        pos += 1;
                        for _ in 0..k {
                            list.push((vertex(num(pos)?)?, num(pos + 1)?));
                            pos += 2;
                        }
                    }
                    if pos != tok.len() {
                        return Err(bad(ln, "trailing tokens"));
                    }
                    let [out_edges, in_edges] = lists;
                    ops.push(Update::Insert { v, in_edges, out_edges });
                }
                _ => return Err(bad(ln, "expected `D v` or `I v k ...`")),
            }
        }
        Ok(Trace { n, density, w_max, seed, ops })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let t = Trace::generate(8, 0.4, 9, 20, 3).unwrap();
        let back = Trace::parse(&t.to_text()).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn zero_ops_is_header_only() {
        let t = Trace::generate(5, 0.5, 3, 0, 1).unwrap();
        assert_eq!(t.to_text().lines().count(), 1);
    }

    #[test]
    fn full_density_is_complete() {
        let g = random_graph(6, 1.0, 4, 2);
        assert_eq!(g.edge_count(), 30);
    }

    #[test]
    fn in_edge_block_optional() {
        let t = Trace::parse("3 0.5 4 1\nI 3 1 0 2\n").unwrap();
        assert_eq!(t.ops, vec![Update::Insert { v: 3, in_edges: vec![], out_edges: vec![(0, 2)] }]);
    }
}
