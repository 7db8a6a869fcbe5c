//! Extended integer weights.
//!
//! All internal weights are exact `i128`. [`INF`] stands for "no path" and is
//! ordered above every finite value.

/// Exact integer weight.
pub type Weight = i128;

/// The `+∞` sentinel. `INF + x = INF`.
pub const INF: Weight = Weight::MAX;

/// Extended addition: `INF` absorbs, finite sums must not overflow.
#[inline]
pub fn add(a: Weight, b: Weight) -> Weight {
    if a == INF || b == INF {
        INF
    } else {
        let s = a.checked_add(b).expect("weight overflow");
        debug_assert!(s != INF);
        s
    }
}

#[inline]
pub fn is_finite(w: Weight) -> bool {
    w != INF
}
