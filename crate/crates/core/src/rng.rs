//! Seeded randomness: keyed substreams, subset sampling and the hitting
//! variables `X[s, v, t, j]`, which are redrawn on every query.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hop::HopLevels;

/// Call sites that draw randomness, used as part of the stream key.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u32)]
pub enum Site {
    Perturb = 1,
    LongPaths = 2,
    Congestion = 3,
    CenterOrder = 4,
    HitType1 = 5,
    HitType2 = 6,
    Workload = 7,
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Splittable seed source: every key yields an independent ChaCha stream.
#[derive(Clone, Debug)]
pub struct Streams {
    master: u64,
}

impl Streams {
    pub fn new(master: u64) -> Self {
        Streams { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Stream for `(site, a, b, c, counter)`.
    pub fn stream(&self, site: Site, a: u64, b: u64, c: u64, counter: u64) -> ChaCha8Rng {
        let mut h = mix(self.master);
        for x in [site as u64, a, b, c, counter] {
            h = mix(h ^ x);
        }
        ChaCha8Rng::seed_from_u64(h)
    }

    /// Seed for a derived component.
    pub fn derive(&self, site: Site, counter: u64) -> u64 {
        self.stream(site, 0, 0, 0, counter).gen()
    }
}

/// Each of `0..n` independently with probability `p`, by geometric skipping.
pub fn sample_subset<R: Rng>(n: usize, p: f64, rng: &mut R) -> Vec<usize> {
    if p <= 0.0 || n == 0 {
        return Vec::new();
    }
    if p >= 1.0 {
        return (0..n).collect();
    }
    let mut out = Vec::new();
    let ln_q = (1.0 - p).ln();
    let mut i: usize = 0;
    loop {
        let u: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
        let skip = (u.ln() / ln_q).floor();
        if !skip.is_finite() || skip >= (n - i) as f64 {
            break;
        }
        i += skip as usize;
        out.push(i);
        i += 1;
        if i >= n {
            break;
        }
    }
    out
}

/// The hitting variables `X[s, v, t, j] ~ Bernoulli(q[j])` with
/// `q[j] = min(1, κ·100·log₂ n / h[j])`.
#[derive(Clone, Debug)]
pub struct HitVarOracle {
    streams: Streams,
    n: usize,
    q: Vec<f64>,
    q_tail: Vec<f64>,
    counter: u64,
}

impl HitVarOracle {
    pub fn new(streams: Streams, n: usize, levels: &HopLevels, kappa: f64) -> Self {
        let lg = (n.max(2) as f64).log2();
        let q: Vec<f64> = (0..levels.levels())
            .map(|j| (kappa * 100.0 * lg / levels.h(j) as f64).min(1.0))
            .collect();
        let mut q_tail = vec![0.0; q.len()];
        let mut miss = 1.0;
        for j in (0..q.len()).rev() {
            miss *= 1.0 - q[j];
            q_tail[j] = 1.0 - miss;
        }
        HitVarOracle { streams, n, q, q_tail, counter: 0 }
    }

    /// `Pr[X[·, ·, ·, j] = 1]`.
    pub fn q(&self, j: usize) -> f64 {
        self.q[j.min(self.q.len() - 1)]
    }

    /// `Pr[Σ_{j' ≥ j} X[·, ·, ·, j'] ≥ 1]`; zero above the top level.
    pub fn q_tail(&self, j: usize) -> f64 {
        self.q_tail.get(j).copied().unwrap_or(0.0)
    }

    /// Universe size.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Fresh draw of `{v : X[s, v, t, j] = 1}`.
    pub fn hits_type1(&mut self, s: usize, t: usize, j: usize) -> Vec<usize> {
        let p = self.q(j);
        self.draw(Site::HitType1, s, t, j, p)
    }

    /// Fresh draw of `{v : Σ_{j' ≥ j} X[·, ·, ·, j'] ≥ 1}` for the fixed pair
    /// `(a, b)`; the caller decides which slots the pair occupies.
    pub fn hits_type2(&mut self, a: usize, b: usize, j: usize) -> Vec<usize> {
        let p = self.q_tail(j);
        self.draw(Site::HitType2, a, b, j, p)
    }

    fn draw(&mut self, site: Site, a: usize, b: usize, j: usize, p: f64) -> Vec<usize> {
        if p >= 1.0 {
            return (0..self.n).collect();
        }
        self.counter += 1;
        let mut rng = self.streams.stream(site, a as u64, b as u64, j as u64, self.counter);
        sample_subset(self.n, p, &mut rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_extremes() {
        let mut r = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_subset(10, 0.0, &mut r).is_empty());
        assert_eq!(sample_subset(10, 1.0, &mut r), (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn subset_sorted_in_range() {
        let mut r = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let s = sample_subset(50, 0.2, &mut r);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            assert!(s.iter().all(|&v| v < 50));
        }
    }

    #[test]
    fn streams_are_keyed() {
        let st = Streams::new(7);
        let a: u64 = st.stream(Site::HitType1, 1, 2, 3, 0).gen();
        let b: u64 = st.stream(Site::HitType1, 1, 2, 3, 0).gen();
        let c: u64 = st.stream(Site::HitType1, 1, 2, 3, 1).gen();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn q_levels() {
        let lv = HopLevels::new(10_000);
        let o = HitVarOracle::new(Streams::new(0), 10_000, &lv, 0.01);
        assert_eq!(o.q(0), 1.0);
        for j in 1..lv.levels() {
            assert!(o.q(j) <= o.q(j - 1));
        }
        let top = lv.i_h();
        assert!((o.q_tail(top) - o.q(top)).abs() < 1e-12);
        assert_eq!(o.q_tail(top + 1), 0.0);
    }
}
