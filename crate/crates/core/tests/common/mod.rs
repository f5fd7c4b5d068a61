//! Reference implementations used by the integration tests. Each one is
//! written from the definitions, without calling the code under test.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Key = u64;

/// Smallest `i` with `data[i] >= key`, by a plain halving loop.
pub fn oracle_lower_bound(data: &[Key], key: Key) -> usize {
    let (mut lo, mut hi) = (0usize, data.len());
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if data[mid] < key {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `ceil(log2(n))`, with 0 for `n <= 1`.
pub fn oracle_ceil_log2(n: u64) -> u64 {
    let mut bits = 0;
    while n > 1 && (1u128 << bits) < n as u128 {
        bits += 1;
    }
    bits
}

/// Top `p` bits of a `width`-bit key.
pub fn oracle_prefix(key: Key, p: u32, width: u32) -> u64 {
    if p == 0 {
        0
    } else {
        ((key as u128) >> (width - p)) as u64
    }
}

/// Sizes of the groups of `keys` that share a `p`-bit prefix.
pub fn prefix_groups(keys: &[Key], p: u32, width: u32) -> Vec<usize> {
    let mut groups: Vec<usize> = Vec::new();
    let mut last = None;
    for &k in keys {
        let q = oracle_prefix(k, p, width);
        if last == Some(q) {
            *groups.last_mut().unwrap() += 1;
        } else {
            groups.push(1);
            last = Some(q);
        }
    }
    groups
}

/// Cost-model entry for one `(r, delta)`, recomputed from scratch: at every
/// bit depth `p` that is a positive multiple of `r`, a group of `m >= 2`
/// keys sharing the `p`-bit prefix spans an lcp interval of `m - 1`
/// positions. The interval is charged its length when that length minus one
/// reaches `delta`, and counts as a node when its length reaches `delta`.
/// Returns `(depth_sum, node_count)` with the root included in the count.
pub fn naive_cost_entry(keys: &[Key], width: u32, r: u32, delta: u32) -> (u64, u64) {
    let mut depth = 0u64;
    let mut nodes = 1u64;
    let mut p = r;
    while p < width {
        for m in prefix_groups(keys, p, width) {
            if m < 2 {
                continue;
            }
            let interval = (m - 1) as u64;
            if interval > delta as u64 {
                depth += interval;
            }
            if interval >= delta as u64 {
                nodes += 1;
            }
        }
        p += r;
    }
    (depth, nodes)
}

pub fn naive_lambda(keys: &[Key], width: u32, r: u32, delta: u32) -> f64 {
    let (depth, _) = naive_cost_entry(keys, width, r, delta);
    oracle_ceil_log2(delta as u64) as f64 + depth as f64 / keys.len() as f64
}

/// Offline radix-table cost: sum over data keys (with multiplicity) of
/// `ceil(log2(number of spline keys sharing the key's r-bit prefix))`.
pub fn offline_radix_cost(data: &[Key], spline_keys: &[Key], r: u32, width: u32) -> u64 {
    let mut per_bucket: HashMap<u64, u64> = HashMap::new();
    for &k in spline_keys {
        *per_bucket.entry(oracle_prefix(k, r, width)).or_default() += 1;
    }
    data.iter()
        .map(|&k| {
            oracle_ceil_log2(
                per_bucket
                    .get(&oracle_prefix(k, r, width))
                    .copied()
                    .unwrap_or(0),
            )
        })
        .sum()
}

/// Distinct sorted keys of `width` bits with a mix of shared prefixes: some
/// uniform keys and some tight clusters around random centers.
pub fn random_key_set(rng: &mut ChaCha8Rng, max_len: usize, width: u32) -> Vec<Key> {
    let max_key = if width == 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    };
    let target = rng.random_range(1..=max_len);
    let mut keys = Vec::with_capacity(target);
    while keys.len() < target {
        if rng.random_bool(0.3) {
            keys.push(rng.random_range(0..=max_key));
        } else {
            let center = rng.random_range(0..=max_key);
            let spread_bits = rng.random_range(0..=width.min(24));
            let spread = if spread_bits == 64 {
                u64::MAX
            } else {
                (1u64 << spread_bits) - 1
            };
            let size = rng.random_range(1..=32);
            for _ in 0..size {
                keys.push(
                    center
                        .saturating_add(rng.random_range(0..=spread))
                        .min(max_key),
                );
            }
        }
    }
    keys.sort_unstable();
    keys.dedup();
    keys.truncate(max_len);
    keys
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Position of the first occurrence of every distinct key.
pub fn first_occurrences(data: &[Key]) -> impl Iterator<Item = (Key, usize)> + '_ {
    data.iter()
        .enumerate()
        .filter(|&(i, &k)| i == 0 || data[i - 1] != k)
        .map(|(i, &k)| (k, i))
}
