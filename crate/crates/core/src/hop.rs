//! The geometric hop grid `h[j] ≈ 1.5^j` and its inverse.

use crate::error::{Error, Result};

/// Hop bounds per level.
///
/// Rounding rule: `h[j] = max(⌈1.5^j⌉, h[j-1] + 1, 4·h[j-4] + 1)`. Plain
/// ceiling gives `h[1] = 2, h[5] = 8`, which breaks `h[j+4] > 4·h[j]`; the
/// extra terms only bite for `j ∈ {5, 6}`.
#[derive(Clone, Debug)]
pub struct HopLevels {
    h: Vec<u64>,
    i_h: usize,
    /// `level_of(x)` for `x ≤ last grid point`.
    lookup: Vec<u8>,
}

fn next_level(h: &[u64]) -> u64 {
    let j = h.len();
    if j == 0 {
        return 1;
    }
    // exact ceil(3^j / 2^j) while it fits, float beyond
    let geo = if j <= 40 {
        let num = 3u128.pow(j as u32);
        let den = 1u128 << j;
        num.div_ceil(den) as u64
    } else {
        1.5f64.powi(j as i32).ceil() as u64
    };
    let mut v = geo.max(h[j - 1] + 1);
    if j >= 4 {
        v = v.max(4 * h[j - 4] + 1);
    }
    v
}

impl HopLevels {
    /// Grid for `n` vertices; `H = h[i_h]` is the first grid point `≥ √n`.
    /// Levels are materialized up to `h_inverse(4H)` plus slack.
    pub fn new(n: usize) -> Self {
        let n = n.max(1) as u64;
        let mut h = vec![1u64];
        while h[h.len() - 1] * h[h.len() - 1] < n {
            let v = next_level(&h);
            h.push(v);
        }
        let i_h = h.len() - 1;
        let cap = 4 * h[i_h];
        while h[h.len() - 1] < cap {
            let v = next_level(&h);
            h.push(v);
        }
        let last = *h.last().unwrap() as usize;
        let lookup = (0..=last as u64).map(|x| h.partition_point(|&v| v < x) as u8).collect();
        HopLevels { h, i_h, lookup }
    }

    /// Top table level.
    pub fn i_h(&self) -> usize {
        self.i_h
    }

    /// Number of table levels, `i_h + 1`.
    pub fn levels(&self) -> usize {
        self.i_h + 1
    }

    /// The cap `H = h[i_h]`.
    pub fn cap(&self) -> u64 {
        self.h[self.i_h]
    }

    /// `h[j]`; levels past the materialized grid are computed on the fly.
    pub fn h(&self, j: usize) -> u64 {
        if j < self.h.len() {
            return self.h[j];
        }
        let mut ext = self.h.clone();
        while ext.len() <= j {
            let v = next_level(&ext);
            ext.push(v);
        }
        ext[j]
    }

    /// Materialized grid (table levels plus the indexing extension).
    pub fn grid(&self) -> &[u64] {
        &self.h
    }

    /// Smallest `y` with `x ≤ h[y]`.
    pub fn h_inverse(&self, x: u64) -> Result<usize> {
        if x == 0 {
            return Err(Error::Usage("h_inverse of a zero hop count".into()));
        }
        Ok(self.level_of(x))
    }

    /// Infallible variant for `x ≥ 1`; `x = 0` maps to level 0.
    pub fn level_of(&self, x: u64) -> usize {
        if let Some(&j) = self.lookup.get(x as usize) {
            j as usize
        } else {
            let mut ext = self.h.clone();
            while *ext.last().unwrap() < x {
                let v = next_level(&ext);
                ext.push(v);
            }
            ext.len() - 1
        }
    }
}
