//! Key, position and bit-manipulation primitives shared by every index
//! component.
//!
//! Keys are unsigned 64-bit integers. A [`KeyWidth`] narrows the number of
//! significant bits so that small worked examples (4-bit keys) and full
//! 64-bit datasets go through the same code path: bit 0 of a prefix is
//! always bit `width - 1` of the key.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Key = u64;

/// Number of significant bits of every key in a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KeyWidth(u32);

impl KeyWidth {
    pub const FULL: KeyWidth = KeyWidth(64);

    pub fn new(bits: u32) -> Result<Self> {
        if !(1..=64).contains(&bits) {
            return Err(Error::InvalidParameter(format!(
                "key width must be in [1, 64], got {bits}"
            )));
        }
        Ok(KeyWidth(bits))
    }

    #[inline]
    pub fn bits(self) -> u32 {
        self.0
    }

    /// Largest key representable in this width.
    #[inline]
    pub fn max_key(self) -> Key {
        if self.0 == 64 {
            u64::MAX
        } else {
            (1u64 << self.0) - 1
        }
    }

    #[inline]
    pub fn fits(self, key: Key) -> bool {
        key <= self.max_key()
    }

    pub fn check(self, key: Key) -> Result<()> {
        if self.fits(key) {
            Ok(())
        } else {
            Err(Error::KeyTooWide { key, bits: self.0 })
        }
    }
}

impl Default for KeyWidth {
    fn default() -> Self {
        KeyWidth::FULL
    }
}

/// A point of the empirical CDF: a distinct key and the position of its
/// first occurrence in the sorted data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub key: Key,
    pub position: u64,
}

/// Number of identical leading bits of `a` and `b` within `width`.
#[inline]
pub fn lcp(a: Key, b: Key, width: KeyWidth) -> u32 {
    let diff = a ^ b;
    if diff == 0 {
        width.bits()
    } else {
        diff.leading_zeros() - (64 - width.bits())
    }
}

/// Top `r` bits of `key`, right-aligned.
#[inline]
pub fn prefix(key: Key, r: u32, width: KeyWidth) -> u64 {
    debug_assert!(r <= width.bits());
    if r == 0 {
        0
    } else {
        key >> (width.bits() - r)
    }
}

/// `ceil(log2(n))`, with 0 for `n <= 1`.
#[inline]
pub fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

/// Collapses sorted data into CDF points, one per distinct key, at the
/// position of its first occurrence. Also reports how many data keys each
/// point stands for.
pub fn cdf_points(data: &[Key]) -> impl Iterator<Item = (CdfPoint, u64)> + '_ {
    let mut pos = 0usize;
    std::iter::from_fn(move || {
        if pos >= data.len() {
            return None;
        }
        let key = data[pos];
        let start = pos;
        pos += 1;
        while pos < data.len() && data[pos] == key {
            pos += 1;
        }
        Some((
            CdfPoint {
                key,
                position: start as u64,
            },
            (pos - start) as u64,
        ))
    })
}

/// First position whose key is `>= key`; the reference lower bound.
#[inline]
pub fn lower_bound(data: &[Key], key: Key) -> usize {
    data.partition_point(|&k| k < key)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(bits: u32) -> KeyWidth {
        KeyWidth::new(bits).unwrap()
    }

    fn bit_string(k: Key, width: KeyWidth) -> Vec<bool> {
        (0..width.bits()).rev().map(|i| (k >> i) & 1 == 1).collect()
    }

    #[test]
    fn lcp_examples() {
        assert_eq!(lcp(0b0101, 0b0110, w(4)), 2);
        assert_eq!(lcp(0b0111, 0b1000, w(4)), 0);
        assert_eq!(lcp(12345, 12345, KeyWidth::FULL), 64);
        assert_eq!(lcp(0, 1, KeyWidth::FULL), 63);
    }

    #[test]
    fn prefix_examples() {
        assert_eq!(prefix(0b1010, 1, w(4)), 1);
        assert_eq!(prefix(0b0110, 2, w(4)), 0b01);
        assert_eq!(prefix(u64::MAX, 0, KeyWidth::FULL), 0);
        assert_eq!(prefix(u64::MAX, 64, KeyWidth::FULL), u64::MAX);
    }

    #[test]
    fn width_bounds() {
        assert!(KeyWidth::new(0).is_err());
        assert!(KeyWidth::new(65).is_err());
        assert_eq!(w(4).max_key(), 15);
        assert!(w(4).check(16).is_err());
    }

    #[test]
    fn ceil_log2_values() {
        let expect = [
            (0, 0),
            (1, 0),
            (2, 1),
            (3, 2),
            (4, 2),
            (5, 3),
            (8, 3),
            (9, 4),
        ];
        for (n, l) in expect {
            assert_eq!(ceil_log2(n), l, "n = {n}");
        }
        assert_eq!(ceil_log2(u64::MAX), 64);
    }

    #[test]
    fn cdf_collapses_duplicates() {
        let data = [1, 3, 3, 3, 9];
        let pts: Vec<_> = cdf_points(&data).collect();
        assert_eq!(
            pts,
            vec![
                (
                    CdfPoint {
                        key: 1,
                        position: 0
                    },
                    1
                ),
                (
                    CdfPoint {
                        key: 3,
                        position: 1
                    },
                    3
                ),
                (
                    CdfPoint {
                        key: 9,
                        position: 4
                    },
                    1
                ),
            ]
        );
    }

    fn width_and_pair() -> impl Strategy<Value = (KeyWidth, Key, Key)> {
        (1u32..=64).prop_flat_map(|bits| {
            let max = KeyWidth(bits).max_key();
            (Just(KeyWidth(bits)), 0..=max, 0..=max)
        })
    }

    proptest! {
        #[test]
        fn prefix_matches_bit_string((width, a, _b) in width_and_pair(), r in 0u32..=64) {
            let r = r.min(width.bits());
            let bits = bit_string(a, width);
            let expected = bits[..r as usize].iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
            prop_assert_eq!(prefix(a, r, width), expected);
        }

        #[test]
        fn lcp_matches_bit_string((width, a, b) in width_and_pair()) {
            let (x, y) = (bit_string(a, width), bit_string(b, width));
            let expected = x.iter().zip(&y).take_while(|(p, q)| p == q).count() as u32;
            prop_assert_eq!(lcp(a, b, width), expected);
        }

        #[test]
        fn prefix_equality_iff_lcp((width, a, b) in width_and_pair(), r in 0u32..=64) {
            let r = r.min(width.bits());
            prop_assert_eq!(prefix(a, r, width) == prefix(b, r, width), lcp(a, b, width) >= r);
        }

        #[test]
        fn lcp_of_sorted_triple(mut v in proptest::collection::vec(any::<u64>(), 3)) {
            v.sort_unstable();
            v.dedup();
            prop_assume!(v.len() == 3);
            let (a, b, c) = (v[0], v[1], v[2]);
            let full = KeyWidth::FULL;
            prop_assert_eq!(lcp(a, c, full), lcp(a, b, full).min(lcp(b, c, full)));
        }
    }
}
