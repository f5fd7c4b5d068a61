//! Single-level radix table over spline keys, and the streaming cost model
//! that predicts its average search cost for every radix width at once.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::key::{ceil_log2, lcp, prefix, Key, KeyWidth};
use crate::spline::SplineModel;

pub const OFFSET_BYTES: usize = 4;

/// Widest table that will be materialized (2^30 entries, 4 GiB).
pub const MAX_TABLE_BITS: u32 = 30;

/// `offsets[p]` is the index of the first spline point whose `r`-bit prefix
/// is `>= p`; `offsets[2^r] == |S|`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RadixTableIndex {
    r: u32,
    width: KeyWidth,
    offsets: Vec<u32>,
}

/// Table size in bytes for a given radix width.
pub fn radix_table_bytes(r: u32) -> usize {
    ((1usize << r) + 1) * OFFSET_BYTES
}

pub fn build_radix_table(spline: &SplineModel, r: u32) -> Result<RadixTableIndex> {
    RadixTableIndex::build(&spline.keys(), r, spline.width())
}

impl RadixTableIndex {
    pub fn build(keys: &[Key], r: u32, width: KeyWidth) -> Result<Self> {
        if r == 0 || r > width.bits() || r > MAX_TABLE_BITS {
            return Err(Error::InvalidParameter(format!(
                "radix bits must be in [1, min({}, {MAX_TABLE_BITS})], got {r}",
                width.bits()
            )));
        }
        if keys.len() >= 1 << 31 {
            return Err(Error::OffsetOverflow(keys.len()));
        }
        let buckets = 1usize << r;
        let mut offsets = vec![0u32; buckets + 1];
        let mut next = 0usize;
        for (i, &k) in keys.iter().enumerate() {
            width.check(k)?;
            let p = prefix(k, r, width) as usize;
            if p + 1 < next {
                return Err(Error::Unsorted { position: i });
            }
            // Every bucket up to and including p starts at or after i.
            while next <= p {
                offsets[next] = i as u32;
                next += 1;
            }
        }
        for slot in &mut offsets[next..] {
            *slot = keys.len() as u32;
        }
        Ok(RadixTableIndex { r, width, offsets })
    }

    pub(crate) fn from_parts(r: u32, width: KeyWidth, offsets: Vec<u32>) -> Result<Self> {
        if r == 0 || r > width.bits() || r > MAX_TABLE_BITS || offsets.len() != (1 << r) + 1 {
            return Err(Error::Corrupt("radix table shape".into()));
        }
        if offsets[0] != 0 || offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Corrupt("radix offsets not monotone".into()));
        }
        Ok(RadixTableIndex { r, width, offsets })
    }

    #[inline]
    pub fn r(&self) -> u32 {
        self.r
    }

    #[inline]
    pub fn offsets(&self) -> &[u32] {
        &self.offsets
    }

    pub fn size_bytes(&self) -> usize {
        self.offsets.len() * OFFSET_BYTES
    }

    /// Bucket `(start, len)` of `key`'s prefix. The knot starting `key`'s
    /// segment is either inside it or at `start - 1`.
    #[inline]
    pub fn bucket(&self, key: Key) -> (usize, usize) {
        let key = key.min(self.width.max_key());
        let p = prefix(key, self.r, self.width) as usize;
        let start = self.offsets[p] as usize;
        (start, self.offsets[p + 1] as usize - start)
    }

    /// Search range `(start, len)` of spline indices for `key`: the bucket of
    /// its prefix, widened one slot to the left so the knot that starts the
    /// key's segment is inside.
    #[inline]
    pub fn lookup(&self, key: Key) -> (usize, usize) {
        let (start, len) = self.bucket(key);
        if start > 0 {
            (start - 1, len + 1)
        } else {
            (0, len)
        }
    }
}

/// Event fed to a [`RadixCostTracker`], in non-decreasing key order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostEvent {
    /// `count` data keys equal to `key`.
    DataKey { key: Key, count: u64 },
    /// A spline point was emitted at `key`.
    SplinePoint { key: Key },
}

/// Per-width bucket bookkeeping: counters at the moment the currently open
/// bucket was opened.
#[derive(Debug, Clone, Copy, Default)]
struct OpenBucket {
    data_at_open: u64,
    spline_at_open: u64,
}

/// Streams data keys and spline points and accumulates, for every
/// `r in 0..=r_max`, the data-weighted binary-search cost of a radix table
/// with `r` bits, without building any table.
#[derive(Debug, Clone)]
pub struct RadixCostTracker {
    r_max: u32,
    width: KeyWidth,
    last_key: Option<Key>,
    data: u64,
    spline: u64,
    open: Vec<OpenBucket>,
    cost: Vec<u64>,
}

/// Final output of a [`RadixCostTracker`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadixCosts {
    /// `sum over data keys of ceil(log2(|bucket|))`, per `r`.
    pub cost_sums: Vec<u64>,
    pub num_keys: u64,
    pub num_spline_points: u64,
    pub width: KeyWidth,
}

impl RadixCostTracker {
    pub fn new(r_max: u32, width: KeyWidth) -> Self {
        let r_max = r_max.min(width.bits());
        let slots = r_max as usize + 1;
        RadixCostTracker {
            r_max,
            width,
            last_key: None,
            data: 0,
            spline: 0,
            open: vec![OpenBucket::default(); slots],
            cost: vec![0; slots],
        }
    }

    #[inline]
    fn close(&mut self, r: usize) {
        let b = self.open[r];
        let keys = self.data - b.data_at_open;
        self.cost[r] += keys * ceil_log2(self.spline - b.spline_at_open) as u64;
        self.open[r] = OpenBucket {
            data_at_open: self.data,
            spline_at_open: self.spline,
        };
    }

    #[inline]
    fn advance(&mut self, key: Key) -> Result<()> {
        match self.last_key {
            Some(prev) if key < prev => {
                return Err(Error::OutOfOrder {
                    key,
                    previous: prev,
                })
            }
            Some(prev) if key != prev => {
                // Buckets of width r > lcp change prefix here.
                let shared = lcp(prev, key, self.width);
                for r in shared as usize + 1..=self.r_max as usize {
                    self.close(r);
                }
            }
            _ => {}
        }
        self.last_key = Some(key);
        Ok(())
    }

    #[inline]
    pub fn data_key(&mut self, key: Key, count: u64) -> Result<()> {
        self.advance(key)?;
        self.data += count;
        Ok(())
    }

    #[inline]
    pub fn spline_point(&mut self, key: Key) -> Result<()> {
        self.advance(key)?;
        self.spline += 1;
        Ok(())
    }

    pub fn track(&mut self, event: CostEvent) -> Result<()> {
        match event {
            CostEvent::DataKey { key, count } => self.data_key(key, count),
            CostEvent::SplinePoint { key } => self.spline_point(key),
        }
    }

    pub fn finish(mut self) -> RadixCosts {
        for r in 0..=self.r_max as usize {
            self.close(r);
        }
        RadixCosts {
            cost_sums: self.cost,
            num_keys: self.data,
            num_spline_points: self.spline,
            width: self.width,
        }
    }
}

impl RadixCosts {
    pub fn r_max(&self) -> u32 {
        self.cost_sums.len() as u32 - 1
    }

    /// Predicted average number of search steps with `r` radix bits.
    pub fn lambda(&self, r: u32) -> f64 {
        if self.num_keys == 0 {
            return 0.0;
        }
        self.cost_sums[r as usize] as f64 / self.num_keys as f64
    }

    pub fn lambdas(&self) -> Vec<f64> {
        (0..=self.r_max()).map(|r| self.lambda(r)).collect()
    }
}
