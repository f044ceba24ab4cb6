//! Seeded sampling. ChaCha8 keeps streams stable across platforms.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform sample of `n` distinct indices from `0..len`, returned in
/// ascending order. `n >= len` returns every index.
pub fn sample_indices(len: usize, n: usize, seed: u64) -> Vec<usize> {
    if n >= len {
        return (0..len).collect();
    }
    let mut picked = index::sample(&mut rng(seed), len, n).into_vec();
    picked.sort_unstable();
    picked
}

/// Keeps the elements of `items` at sampled positions, in original order.
pub fn sample<T>(items: Vec<T>, n: usize, seed: u64) -> Vec<T> {
    let keep = sample_indices(items.len(), n, seed);
    if keep.len() == items.len() {
        return items;
    }
    let mut keep = keep.into_iter().peekable();
    items
        .into_iter()
        .enumerate()
        .filter_map(|(i, x)| {
            if keep.peek() == Some(&i) {
                keep.next();
                Some(x)
            } else {
                None
            }
        })
        .collect()
}
