//! Compact Hist-Tree: a read-only radix tree with fanout `2^r` stored as
//! one flat array of 32-bit cells.
//!
//! Node `i` occupies cells `[i << r, (i + 1) << r)`. A cell either points
//! to a child node (top bit clear) or is a leaf carrying the index of the
//! first spline key of its bin (top bit set). A bin holding at most `delta`
//! keys is a leaf, so a lookup returns `q` such that the key's position lies
//! in `q..q + delta`.
//!
//! The tree is built directly from the sorted keys, one level at a time:
//! each level is a single pass over the key ranges of the nodes it contains.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::key::{Key, KeyWidth};

pub const CELL_BYTES: usize = 4;
const LEAF_FLAG: u32 = 1 << 31;
const PAYLOAD_MASK: u32 = LEAF_FLAG - 1;

/// Widest node that will be materialized.
pub const MAX_NODE_BITS: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChtConfig {
    pub r: u32,
    pub delta: u32,
    pub width: KeyWidth,
}

impl ChtConfig {
    pub fn new(r: u32, delta: u32, width: KeyWidth) -> Result<Self> {
        if r == 0 || r > width.bits() || r > MAX_NODE_BITS {
            return Err(Error::InvalidParameter(format!(
                "radix bits must be in [1, min({}, {MAX_NODE_BITS})], got {r}",
                width.bits()
            )));
        }
        if delta == 0 {
            return Err(Error::InvalidParameter("delta must be >= 1".into()));
        }
        Ok(ChtConfig { r, delta, width })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompactHistTree {
    config: ChtConfig,
    num_keys: u32,
    cells: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChtStats {
    pub node_count: usize,
    pub memory_bytes: usize,
    /// Mean number of child hops below the root's cell over all indexed keys.
    pub exact_avg_depth: f64,
    /// Same mean, but also charging the hop out of the root.
    pub avg_hops: f64,
}

/// Bits of `key` in `[offset, offset + bits)`, counted from the most
/// significant bit of the key width.
#[inline]
fn bin_of(key: Key, offset: u32, bits: u32, width: KeyWidth) -> usize {
    let shift = width.bits() - offset - bits;
    ((key >> shift) & ((1u64 << bits) - 1)) as usize
}

pub fn build_cht(keys: &[Key], config: ChtConfig) -> Result<CompactHistTree> {
    CompactHistTree::build(keys, config)
}

impl CompactHistTree {
    pub fn build(keys: &[Key], config: ChtConfig) -> Result<Self> {
        let ChtConfig { r, delta, width } = ChtConfig::new(config.r, config.delta, config.width)?;
        if keys.len() >= LEAF_FLAG as usize {
            return Err(Error::OffsetOverflow(keys.len()));
        }
        for (i, &k) in keys.iter().enumerate() {
            width.check(k)?;
            if i > 0 {
                let prev = keys[i - 1];
                if k == prev {
                    return Err(Error::DuplicateKey {
                        key: k,
                        position: i,
                    });
                }
                if k < prev {
                    return Err(Error::Unsorted { position: i });
                }
            }
        }

        let fanout = 1usize << r;
        let delta = delta as usize;
        let mut cells = vec![0u32; fanout];
        // (node index, key range start, key range end) at the current bit offset.
        let mut level = vec![(0usize, 0usize, keys.len())];
        let mut offset = 0u32;
        let mut node_count = 1usize;

        while !level.is_empty() {
            let bits = r.min(width.bits() - offset);
            let last_level = offset + bits == width.bits();
            let mut next_level = Vec::new();
            for &(node, lo, hi) in &level {
                let base = node << r;
                let mut i = lo;
                for bin in 0..1usize << bits {
                    let start = i;
                    while i < hi && bin_of(keys[i], offset, bits, width) == bin {
                        i += 1;
                    }
                    let count = i - start;
                    cells[base + bin] = if count > delta && !last_level {
                        let child = node_count;
                        node_count += 1;
                        if child > PAYLOAD_MASK as usize {
                            return Err(Error::OffsetOverflow(child));
                        }
                        cells.resize(node_count << r, 0);
                        next_level.push((child, start, i));
                        child as u32
                    } else {
                        LEAF_FLAG | start as u32
                    };
                }
                // Cells past the consumed bits are never addressed.
                for cell in &mut cells[base + (1usize << bits)..base + fanout] {
                    *cell = LEAF_FLAG | hi as u32;
                }
            }
            level = next_level;
            offset += bits;
        }

        Ok(CompactHistTree {
            config: ChtConfig {
                r,
                delta: delta as u32,
                width,
            },
            num_keys: keys.len() as u32,
            cells,
        })
    }

    pub(crate) fn from_parts(config: ChtConfig, num_keys: u32, cells: Vec<u32>) -> Result<Self> {
        let config = ChtConfig::new(config.r, config.delta, config.width)
            .map_err(|e| Error::Corrupt(e.to_string()))?;
        let fanout = 1usize << config.r;
        if cells.is_empty() || !cells.len().is_multiple_of(fanout) {
            return Err(Error::Corrupt(
                "cell count is not a multiple of the fanout".into(),
            ));
        }
        let nodes = cells.len() / fanout;
        for &c in &cells {
            let payload = (c & PAYLOAD_MASK) as usize;
            let bad = if c & LEAF_FLAG != 0 {
                payload > num_keys as usize
            } else {
                payload == 0 || payload >= nodes
            };
            if bad {
                return Err(Error::Corrupt(format!("cell {c:#x} out of range")));
            }
        }
        Ok(CompactHistTree {
            config,
            num_keys,
            cells,
        })
    }

    #[inline]
    pub fn config(&self) -> ChtConfig {
        self.config
    }

    #[inline]
    pub fn cells(&self) -> &[u32] {
        &self.cells
    }

    #[inline]
    pub fn num_keys(&self) -> usize {
        self.num_keys as usize
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.cells.len() >> self.config.r
    }

    pub fn size_bytes(&self) -> usize {
        self.cells.len() * CELL_BYTES
    }

    /// Estimated position `q` of `key` among the indexed keys.
    #[inline]
    pub fn lookup(&self, key: Key) -> usize {
        self.lookup_counted(key).0
    }

    /// Lookup that also reports the number of child hops taken.
    #[inline]
    pub fn lookup_counted(&self, key: Key) -> (usize, u32) {
        let ChtConfig { r, width, .. } = self.config;
        let key = key.min(width.max_key());
        let mut node = 0usize;
        let mut offset = 0u32;
        let mut hops = 0;
        loop {
            let bits = r.min(width.bits() - offset);
            let cell = self.cells[(node << r) + bin_of(key, offset, bits, width)];
            if cell & LEAF_FLAG != 0 {
                return ((cell & PAYLOAD_MASK) as usize, hops);
            }
            node = cell as usize;
            offset += bits;
            hops += 1;
        }
    }

    /// Exact node count, memory and average lookup depth over `keys`, which
    /// must be the keys the tree was built from.
    pub fn stats(&self, keys: &[Key]) -> ChtStats {
        let total_hops: u64 = keys.iter().map(|&k| self.lookup_counted(k).1 as u64).sum();
        let below_root: u64 = keys
            .iter()
            .map(|&k| self.lookup_counted(k).1.saturating_sub(1) as u64)
            .sum();
        let n = keys.len().max(1) as f64;
        ChtStats {
            node_count: self.node_count(),
            memory_bytes: self.size_bytes(),
            exact_avg_depth: below_root as f64 / n,
            avg_hops: total_hops as f64 / n,
        }
    }
}

pub fn cht_stats(tree: &CompactHistTree, keys: &[Key]) -> ChtStats {
    tree.stats(keys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const SMALL: [Key; 8] = [0, 5, 6, 7, 8, 10, 11, 15];

    fn w4() -> KeyWidth {
        KeyWidth::new(4).unwrap()
    }

    fn cfg(r: u32, delta: u32, width: KeyWidth) -> ChtConfig {
        ChtConfig::new(r, delta, width).unwrap()
    }

    fn leaf(p: u32) -> u32 {
        LEAF_FLAG | p
    }

    #[test]
    fn small_r1_d2_layout() {
        let t = build_cht(&SMALL, cfg(1, 2, w4())).unwrap();
        assert_eq!(t.node_count(), 5);
        // Level order: root, [0,3], [4,7], [1,3], [4,6].
        assert_eq!(
            t.cells(),
            &[
                1,
                2,
                leaf(0),
                3,
                4,
                leaf(7),
                leaf(1),
                leaf(2),
                leaf(4),
                leaf(5)
            ]
        );
        let s = t.stats(&SMALL);
        assert_eq!(s.memory_bytes, 5 * 2 * 4);
        assert_eq!(s.exact_avg_depth * 8.0, 6.0);
        assert_eq!(s.avg_hops * 8.0, 14.0);
    }

    #[test]
    fn small_r2_d2_layout() {
        let t = build_cht(&SMALL, cfg(2, 2, w4())).unwrap();
        assert_eq!(t.node_count(), 3);
        assert_eq!(&t.cells()[..4], &[leaf(0), 1, 2, leaf(7)],);
        // Empty bins point at the insertion position.
        assert_eq!(
            &t.cells()[4..],
            &[
                leaf(1),
                leaf(1),
                leaf(2),
                leaf(3),
                leaf(4),
                leaf(5),
                leaf(5),
                leaf(6)
            ]
        );
    }

    #[test]
    fn small_lookup_trace() {
        let t = build_cht(&SMALL, cfg(1, 2, w4())).unwrap();
        assert_eq!(t.lookup_counted(6), (2, 2));
        assert_eq!(t.lookup(0), 0);
    }

    #[test]
    fn large_delta_is_single_node() {
        for r in 1..=4 {
            let t = build_cht(&SMALL, cfg(r, 8, w4())).unwrap();
            assert_eq!(t.node_count(), 1);
            assert_eq!(t.stats(&SMALL).exact_avg_depth, 0.0);
            assert!(t.cells().iter().all(|c| c & LEAF_FLAG != 0));
        }
    }

    #[test]
    fn rejects_duplicates_and_unsorted() {
        assert!(matches!(
            build_cht(&[1, 2, 2], cfg(1, 1, w4())),
            Err(Error::DuplicateKey {
                key: 2,
                position: 2
            })
        ));
        assert!(matches!(
            build_cht(&[3, 2], cfg(1, 1, w4())),
            Err(Error::Unsorted { position: 1 })
        ));
        assert!(ChtConfig::new(0, 1, w4()).is_err());
        assert!(ChtConfig::new(1, 0, w4()).is_err());
        assert!(ChtConfig::new(5, 1, w4()).is_err());
    }

    #[test]
    fn uneven_last_level() {
        // 4-bit keys with 3-bit nodes: the second level consumes one bit.
        let t = build_cht(&SMALL, cfg(3, 1, w4())).unwrap();
        for (i, &k) in SMALL.iter().enumerate() {
            assert_eq!(t.lookup(k), i);
        }
    }

    #[test]
    fn delta_bound_on_random_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..300 {
            let bits = [8u32, 12, 20, 64][rng.random_range(0..4)];
            let width = KeyWidth::new(bits).unwrap();
            let n = rng.random_range(1..400usize).min(width.max_key() as usize);
            let mut keys: Vec<Key> = (0..n)
                .map(|_| rng.random_range(0..=width.max_key()))
                .collect();
            keys.sort_unstable();
            keys.dedup();
            let r = rng.random_range(1..=bits.min(8));
            let delta = rng.random_range(1..40);
            let t = build_cht(&keys, cfg(r, delta, width)).unwrap();
            for (pos, &k) in keys.iter().enumerate() {
                let q = t.lookup(k);
                assert!(q <= pos && pos < q + delta as usize, "r={r} delta={delta}");
            }
            // Absent keys land at or after their predecessor's bin.
            for _ in 0..50 {
                let k = rng.random_range(0..=width.max_key());
                let q = t.lookup(k);
                let lb = keys.partition_point(|&s| s < k);
                assert!(q <= keys.len());
                assert!(q <= lb && lb <= q + delta as usize);
            }
        }
    }

    #[test]
    fn single_node_matches_radix_table() {
        use crate::key::prefix;
        use crate::radix_table::RadixTableIndex;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut keys: Vec<Key> = (0..500).map(|_| rng.random()).collect();
        keys.sort_unstable();
        for r in [1, 4, 8] {
            let t = build_cht(&keys, cfg(r, u32::MAX, KeyWidth::FULL)).unwrap();
            let table = RadixTableIndex::build(&keys, r, KeyWidth::FULL).unwrap();
            assert_eq!(t.node_count(), 1);
            for _ in 0..1000 {
                let k: Key = rng.random();
                let p = prefix(k, r, KeyWidth::FULL) as usize;
                let q = t.lookup(k);
                assert_eq!(q, table.offsets()[p] as usize);
                let end = table.offsets()[p + 1] as usize;
                let widened = if q > 0 {
                    (q - 1, end - q + 1)
                } else {
                    (0, end)
                };
                assert_eq!(table.lookup(k), widened);
            }
        }
    }
}
