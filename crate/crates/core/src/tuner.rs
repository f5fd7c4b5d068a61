//! Auto-tuning of the spline subindex.
//!
//! Radix-table costs come from the streaming [`RadixCostTracker`]; CHT costs
//! for every `(r, delta)` pair come from one sweep over the lcp-histogram of
//! adjacent spline keys. At lcp-length `p`, maximal runs of positions whose
//! lcp is `>= p` are exactly the key groups that share a `p`-bit prefix, i.e.
//! the bins at bit depth `p`. A CHT with `r` radix bits only has bins at
//! depths that are multiples of `r`, and a bin becomes an inner node when it
//! holds more than `delta` keys. No candidate tree is ever built.
//!
//! [`RadixCostTracker`]: crate::radix_table::RadixCostTracker

use serde::{Deserialize, Serialize};

use crate::cht::{CELL_BYTES, MAX_NODE_BITS};
use crate::error::{Error, Result};
use crate::key::{ceil_log2, lcp, Key, KeyWidth};
use crate::radix_table::{radix_table_bytes, RadixCosts, MAX_TABLE_BITS};

pub const DEFAULT_R_MAX: u32 = 20;
pub const DEFAULT_DELTA_MAX: u32 = 1 << 10;

/// `values[i - 1] = lcp(keys[i], keys[i - 1])` for every adjacent pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LcpHistogram {
    pub values: Vec<u32>,
    pub num_keys: usize,
    pub width: KeyWidth,
}

pub fn build_lcp_histogram(keys: &[Key], width: KeyWidth) -> Result<LcpHistogram> {
    let mut values = Vec::with_capacity(keys.len().saturating_sub(1));
    for (i, w) in keys.windows(2).enumerate() {
        if w[1] == w[0] {
            return Err(Error::DuplicateKey {
                key: w[1],
                position: i + 1,
            });
        }
        if w[1] < w[0] {
            return Err(Error::Unsorted { position: i + 1 });
        }
        width.check(w[1])?;
        values.push(lcp(w[0], w[1], width));
    }
    if let Some(&k) = keys.first() {
        width.check(k)?;
    }
    Ok(LcpHistogram {
        values,
        num_keys: keys.len(),
        width,
    })
}

impl LcpHistogram {
    pub fn max_lcp(&self) -> u32 {
        self.values.iter().copied().max().unwrap_or(0)
    }

    /// Maximal runs `[start, end)` inside `within` whose values are all `>= p`.
    fn runs(&self, within: (usize, usize), p: u32, mut f: impl FnMut(usize, usize)) {
        let (lo, hi) = within;
        let mut i = lo;
        while i < hi {
            if self.values[i] < p {
                i += 1;
                continue;
            }
            let start = i;
            while i < hi && self.values[i] >= p {
                i += 1;
            }
            f(start, i);
        }
    }
}

/// Predicted lookup cost, node count and memory of every CHT configuration
/// with `1 <= r <= r_max` and `1 <= delta <= delta_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSurface {
    r_max: u32,
    delta_max: u32,
    num_keys: usize,
    /// `depth[r - 1][delta]`: sum of lookup depths over all spline keys.
    depth: Vec<Vec<u64>>,
    /// `nodes[r - 1][delta]`: number of inner nodes below the root.
    nodes: Vec<Vec<u64>>,
}

pub fn compute_cost_surface(hist: &LcpHistogram, r_max: u32, delta_max: u32) -> CostSurface {
    assert!(
        r_max >= 1 && delta_max >= 1,
        "r_max and delta_max must be >= 1"
    );
    let dmax = delta_max as usize;
    let mut depth = vec![vec![0u64; dmax + 1]; r_max as usize];
    let mut nodes = vec![vec![0u64; dmax + 1]; r_max as usize];

    let mut intervals = Vec::new();
    if !hist.values.is_empty() {
        intervals.push((0usize, hist.values.len()));
    }
    let mut p = 1u32;
    let mut next = Vec::new();
    while !intervals.is_empty() {
        next.clear();
        for &interval in &intervals {
            hist.runs(interval, p, |start, end| next.push((start, end)));
        }
        for &(start, end) in &next {
            let len = end - start;
            for r in (1..=r_max).filter(|&r| p.is_multiple_of(r)) {
                let r = r as usize - 1;
                depth[r][(len - 1).min(dmax)] += len as u64;
                // The bin spans len + 1 keys and is an inner node for delta <= len.
                nodes[r][len.min(dmax)] += 1;
            }
        }
        std::mem::swap(&mut intervals, &mut next);
        p += 1;
    }

    for r in 0..r_max as usize {
        for d in (1..dmax).rev() {
            depth[r][d] += depth[r][d + 1];
            nodes[r][d] += nodes[r][d + 1];
        }
    }

    CostSurface {
        r_max,
        delta_max,
        num_keys: hist.num_keys,
        depth,
        nodes,
    }
}

impl CostSurface {
    pub fn r_max(&self) -> u32 {
        self.r_max
    }

    pub fn delta_max(&self) -> u32 {
        self.delta_max
    }

    pub fn num_keys(&self) -> usize {
        self.num_keys
    }

    fn check(&self, r: u32, delta: u32) {
        assert!(
            (1..=self.r_max).contains(&r) && (1..=self.delta_max).contains(&delta),
            "(r, delta) = ({r}, {delta}) outside the surface"
        );
    }

    /// Sum of estimated lookup depths over all spline keys.
    pub fn depth_sum(&self, r: u32, delta: u32) -> u64 {
        self.check(r, delta);
        self.depth[r as usize - 1][delta as usize]
    }

    /// Predicted average number of search steps.
    pub fn lambda(&self, r: u32, delta: u32) -> f64 {
        let avg = if self.num_keys == 0 {
            0.0
        } else {
            self.depth_sum(r, delta) as f64 / self.num_keys as f64
        };
        ceil_log2(delta as u64) as f64 + avg
    }

    /// Estimated node count, root included.
    pub fn node_count(&self, r: u32, delta: u32) -> u64 {
        self.check(r, delta);
        1 + self.nodes[r as usize - 1][delta as usize]
    }

    pub fn memory_bytes(&self, r: u32, delta: u32) -> u64 {
        self.node_count(r, delta) * ((1u64 << r) * CELL_BYTES as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChtMemoryEstimate {
    pub node_count: u64,
    pub bytes: u64,
}

/// Node count and size of CHT(`r`, `delta`), counted directly from the
/// histogram for a single configuration.
pub fn estimate_cht_memory(
    hist: &LcpHistogram,
    r: u32,
    delta: u32,
    cell_bytes: u64,
) -> ChtMemoryEstimate {
    assert!(r >= 1, "r must be >= 1");
    let mut node_count = 1u64;
    let all = (0, hist.values.len());
    let mut p = r;
    while p <= hist.max_lcp() {
        hist.runs(all, p, |start, end| {
            if end - start + 1 > delta as usize {
                node_count += 1;
            }
        });
        p += r;
    }
    ChtMemoryEstimate {
        node_count,
        bytes: node_count * (1u64 << r) * cell_bytes,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubindexKind {
    BinarySearchOnly,
    RadixTable { r: u32 },
    Cht { r: u32, delta: u32 },
}

impl SubindexKind {
    pub fn name(&self) -> &'static str {
        match self {
            SubindexKind::BinarySearchOnly => "binary_search",
            SubindexKind::RadixTable { .. } => "radix_table",
            SubindexKind::Cht { .. } => "cht",
        }
    }

    pub fn r(&self) -> Option<u32> {
        match *self {
            SubindexKind::BinarySearchOnly => None,
            SubindexKind::RadixTable { r } | SubindexKind::Cht { r, .. } => Some(r),
        }
    }

    pub fn delta(&self) -> Option<u32> {
        match *self {
            SubindexKind::Cht { delta, .. } => Some(delta),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunerChoice {
    pub kind: SubindexKind,
    pub predicted_lambda: f64,
    pub predicted_bytes: u64,
}

/// Which candidates [`select_subindex`] may pick from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CandidateSet {
    #[default]
    All,
    RadixOnly,
    ChtOnly,
}

/// Smallest CHT error the tuner considers. With `delta = 1` the estimator
/// never charges bins holding exactly two keys, so its cost is close to
/// zero on almost any input.
pub const MIN_TUNED_DELTA: u32 = 2;

/// All tuner candidates: radix tables for `r >= 1` and CHTs for
/// `delta >= MIN_TUNED_DELTA`.
pub fn candidates(
    surface: &CostSurface,
    radix: &RadixCosts,
    set: CandidateSet,
) -> Vec<TunerChoice> {
    let mut out = Vec::new();
    if set != CandidateSet::ChtOnly {
        for r in 1..=radix.r_max().min(MAX_TABLE_BITS) {
            out.push(TunerChoice {
                kind: SubindexKind::RadixTable { r },
                predicted_lambda: radix.lambda(r),
                predicted_bytes: radix_table_bytes(r) as u64,
            });
        }
    }
    if set != CandidateSet::RadixOnly {
        for r in 1..=surface.r_max().min(MAX_NODE_BITS) {
            for delta in MIN_TUNED_DELTA..=surface.delta_max() {
                out.push(TunerChoice {
                    kind: SubindexKind::Cht { r, delta },
                    predicted_lambda: surface.lambda(r, delta),
                    predicted_bytes: surface.memory_bytes(r, delta),
                });
            }
        }
    }
    out
}

fn rank(c: &TunerChoice) -> (u32, u8, u32) {
    match c.kind {
        SubindexKind::BinarySearchOnly => (0, 0, 0),
        SubindexKind::RadixTable { r } => (r, 0, 0),
        SubindexKind::Cht { r, delta } => (r, 1, delta),
    }
}

/// Cheapest predicted candidate whose memory fits in `budget_bytes`. Ties
/// go to the smaller structure, then to fewer radix bits, then to the radix
/// table. Falls back to a plain binary search over the spline.
pub fn select_subindex(
    surface: &CostSurface,
    radix: &RadixCosts,
    budget_bytes: u64,
    set: CandidateSet,
) -> TunerChoice {
    candidates(surface, radix, set)
        .into_iter()
        .filter(|c| c.predicted_bytes <= budget_bytes)
        .min_by(|a, b| {
            a.predicted_lambda
                .total_cmp(&b.predicted_lambda)
                .then(a.predicted_bytes.cmp(&b.predicted_bytes))
                .then(rank(a).cmp(&rank(b)))
        })
        .unwrap_or(TunerChoice {
            kind: SubindexKind::BinarySearchOnly,
            predicted_lambda: radix.lambda(0),
            predicted_bytes: 0,
        })
}
