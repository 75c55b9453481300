//! Seeded index selection shared by the resampling operations.
//!
//! The generator is ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `SeedableRng::seed_from_u64`, and every bounded draw goes through
//! `Rng::gen_range` on `u64` so results do not depend on pointer width.
//! One 64-bit seed therefore fixes every choice on every platform.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn below(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> usize {
    rng.gen_range(lo as u64..hi as u64) as usize
}

/// `k` distinct indices out of `0..n`, returned ascending.
///
/// Partial Fisher-Yates: position `i` is swapped with a uniform pick from
/// `i..n` for the first `k` positions.
pub(crate) fn choose_without_replacement(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    assert!(k <= n, "cannot choose {k} of {n}");
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = below(rng, i, n);
        idx.swap(i, j);
    }
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

/// `k` uniform draws from `0..n` with replacement, in draw order.
pub(crate) fn draw_with_replacement(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    assert!(n > 0 || k == 0);
    (0..k).map(|_| below(rng, 0, n)).collect()
}
