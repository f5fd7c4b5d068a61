//! The composed index: an epsilon-bounded spline whose knots are located
//! through an auto-tuned subindex.
//!
//! Build runs bottom-up in one pass over the data (spline + radix cost
//! tracking), one pass over the knots (lcp-histogram + cost surface), and
//! the construction of the selected subindex. Lookup narrows the knot range
//! with the subindex, finds the segment, interpolates, and finishes with a
//! binary search in the `[p - epsilon, p + epsilon]` window of the data.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cht::{ChtConfig, CompactHistTree, CELL_BYTES};
use crate::error::{Error, Result};
use crate::key::{cdf_points, Key, KeyWidth};
use crate::radix_table::{radix_table_bytes, RadixCostTracker, RadixCosts, RadixTableIndex};
use crate::spline::{GreedySplineBuilder, SplineModel, SplinePoint};
use crate::tuner::{
    build_lcp_histogram, compute_cost_surface, select_subindex, CandidateSet, CostSurface,
    SubindexKind, TunerChoice, DEFAULT_DELTA_MAX, DEFAULT_R_MAX,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Subindex {
    BinarySearchOnly,
    RadixTable(RadixTableIndex),
    Cht(CompactHistTree),
}

impl Subindex {
    pub fn size_bytes(&self) -> usize {
        match self {
            Subindex::BinarySearchOnly => 0,
            Subindex::RadixTable(t) => t.size_bytes(),
            Subindex::Cht(t) => t.size_bytes(),
        }
    }

    pub fn kind(&self) -> SubindexKind {
        match self {
            Subindex::BinarySearchOnly => SubindexKind::BinarySearchOnly,
            Subindex::RadixTable(t) => SubindexKind::RadixTable { r: t.r() },
            Subindex::Cht(t) => SubindexKind::Cht {
                r: t.config().r,
                delta: t.config().delta,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildStats {
    pub spline_build_ns: u64,
    pub tune_ns: u64,
    pub subindex_build_ns: u64,
    pub total_bytes: usize,
}

impl BuildStats {
    pub fn total_ns(&self) -> u64 {
        self.spline_build_ns + self.tune_ns + self.subindex_build_ns
    }
}

/// How the subindex is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SubindexPolicy {
    /// Cost-model selection among radix tables and CHTs.
    #[default]
    Auto,
    /// Best predicted radix table (the plain RadixSpline configuration).
    RadixOnly,
    /// Best predicted CHT.
    ChtOnly,
    /// A fixed configuration, no selection.
    Fixed(SubindexKind),
}

/// Everything the tuner computed during a build.
#[derive(Debug, Clone)]
pub struct TuningReport {
    pub radix: RadixCosts,
    pub surface: CostSurface,
    pub choice: TunerChoice,
}

#[derive(Debug, Clone)]
pub struct PlexBuilder {
    epsilon: u64,
    width: KeyWidth,
    r_max: u32,
    delta_max: u32,
    policy: SubindexPolicy,
}

impl PlexBuilder {
    pub fn new(epsilon: u64) -> Self {
        PlexBuilder {
            epsilon,
            width: KeyWidth::FULL,
            r_max: DEFAULT_R_MAX,
            delta_max: DEFAULT_DELTA_MAX,
            policy: SubindexPolicy::Auto,
        }
    }

    pub fn width(mut self, width: KeyWidth) -> Self {
        self.width = width;
        self
    }

    pub fn r_max(mut self, r_max: u32) -> Self {
        self.r_max = r_max;
        self
    }

    pub fn delta_max(mut self, delta_max: u32) -> Self {
        self.delta_max = delta_max;
        self
    }

    pub fn policy(mut self, policy: SubindexPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn build(&self, data: &[Key]) -> Result<PlexIndex> {
        self.build_with_report(data).map(|(index, _)| index)
    }

    pub fn build_with_report(&self, data: &[Key]) -> Result<(PlexIndex, TuningReport)> {
        if self.epsilon == 0 {
            return Err(Error::InvalidParameter("epsilon must be >= 1".into()));
        }
        if self.r_max == 0 || self.delta_max == 0 {
            return Err(Error::InvalidParameter(
                "r_max and delta_max must be >= 1".into(),
            ));
        }
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some(i) = data.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::Unsorted { position: i + 1 });
        }
        self.width.check(*data.last().unwrap())?;

        let t0 = Instant::now();
        let mut builder = GreedySplineBuilder::new(self.epsilon);
        let mut tracker = RadixCostTracker::new(self.r_max, self.width);
        let mut points: Vec<SplinePoint> = Vec::new();
        for (pt, count) in cdf_points(data) {
            if let Some(knot) = builder.push(pt) {
                tracker.spline_point(knot.key)?;
                points.push(knot);
            }
            tracker.data_key(pt.key, count)?;
        }
        if let Some(knot) = builder.finish() {
            tracker.spline_point(knot.key)?;
            points.push(knot);
        }
        let radix = tracker.finish();
        let spline = SplineModel::from_points(points, self.epsilon, data.len() as u64, self.width)?;
        let t1 = Instant::now();

        let keys = spline.keys();
        let hist = build_lcp_histogram(&keys, self.width)?;
        let surface = compute_cost_surface(&hist, self.r_max, self.delta_max);
        let budget = spline.size_bytes() as u64;
        let choice = match self.policy {
            SubindexPolicy::Auto => select_subindex(&surface, &radix, budget, CandidateSet::All),
            SubindexPolicy::RadixOnly => {
                select_subindex(&surface, &radix, budget, CandidateSet::RadixOnly)
            }
            SubindexPolicy::ChtOnly => {
                select_subindex(&surface, &radix, budget, CandidateSet::ChtOnly)
            }
            SubindexPolicy::Fixed(kind) => predicted(kind, &surface, &radix),
        };
        let t2 = Instant::now();

        let subindex = match choice.kind {
            SubindexKind::BinarySearchOnly => Subindex::BinarySearchOnly,
            SubindexKind::RadixTable { r } => {
                Subindex::RadixTable(RadixTableIndex::build(&keys, r, self.width)?)
            }
            SubindexKind::Cht { r, delta } => Subindex::Cht(CompactHistTree::build(
                &keys,
                ChtConfig::new(r, delta, self.width)?,
            )?),
        };
        let t3 = Instant::now();

        let stats = BuildStats {
            spline_build_ns: (t1 - t0).as_nanos() as u64,
            tune_ns: (t2 - t1).as_nanos() as u64,
            subindex_build_ns: (t3 - t2).as_nanos() as u64,
            total_bytes: spline.size_bytes() + subindex.size_bytes(),
        };
        let index = PlexIndex {
            spline,
            subindex,
            choice,
            stats,
        };
        Ok((
            index,
            TuningReport {
                radix,
                surface,
                choice,
            },
        ))
    }
}

/// Cost-model prediction for an externally fixed configuration. Outside the
/// tuned range the cost is reported as NaN.
fn predicted(kind: SubindexKind, surface: &CostSurface, radix: &RadixCosts) -> TunerChoice {
    let (predicted_lambda, predicted_bytes) = match kind {
        SubindexKind::BinarySearchOnly => (radix.lambda(0), 0),
        SubindexKind::RadixTable { r } => {
            let lambda = if r <= radix.r_max() {
                radix.lambda(r)
            } else {
                f64::NAN
            };
            (lambda, radix_table_bytes(r) as u64)
        }
        SubindexKind::Cht { r, delta } => {
            if r <= surface.r_max() && delta <= surface.delta_max() {
                (surface.lambda(r, delta), surface.memory_bytes(r, delta))
            } else {
                (f64::NAN, 0)
            }
        }
    };
    TunerChoice {
        kind,
        predicted_lambda,
        predicted_bytes,
    }
}

/// Work done by the subindex part of one lookup.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SubindexSteps {
    /// Child nodes visited after the root (CHT only), one cell read each.
    pub hops: u32,
    /// Binary-search halving steps over the spline knots.
    pub search_steps: u32,
}

impl SubindexSteps {
    pub fn total(&self) -> u32 {
        self.hops + self.search_steps
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlexIndex {
    spline: SplineModel,
    subindex: Subindex,
    choice: TunerChoice,
    stats: BuildStats,
}

/// Builds with automatic tuning, the single hyperparameter being `epsilon`.
pub fn build(data: &[Key], epsilon: u64, width: KeyWidth) -> Result<PlexIndex> {
    PlexBuilder::new(epsilon).width(width).build(data)
}

impl PlexIndex {
    pub fn spline(&self) -> &SplineModel {
        &self.spline
    }

    pub fn subindex(&self) -> &Subindex {
        &self.subindex
    }

    pub fn choice(&self) -> &TunerChoice {
        &self.choice
    }

    pub fn build_stats(&self) -> &BuildStats {
        &self.stats
    }

    pub fn epsilon(&self) -> u64 {
        self.spline.epsilon()
    }

    pub fn num_keys(&self) -> u64 {
        self.spline.num_keys()
    }

    pub fn size_bytes(&self) -> usize {
        self.spline.size_bytes() + self.subindex.size_bytes()
    }

    /// Same spline, different subindex. Used to compare configurations
    /// without rebuilding the spline.
    pub fn with_subindex(&self, kind: SubindexKind) -> Result<PlexIndex> {
        let t0 = Instant::now();
        let width = self.spline.width();
        let subindex = match kind {
            SubindexKind::BinarySearchOnly => Subindex::BinarySearchOnly,
            SubindexKind::RadixTable { r } => {
                Subindex::RadixTable(RadixTableIndex::build(&self.spline.keys(), r, width)?)
            }
            SubindexKind::Cht { r, delta } => Subindex::Cht(CompactHistTree::build(
                &self.spline.keys(),
                ChtConfig::new(r, delta, width)?,
            )?),
        };
        let stats = BuildStats {
            subindex_build_ns: t0.elapsed().as_nanos() as u64,
            total_bytes: self.spline.size_bytes() + subindex.size_bytes(),
            ..self.stats
        };
        Ok(PlexIndex {
            spline: self.spline.clone(),
            choice: TunerChoice {
                kind,
                predicted_lambda: f64::NAN,
                predicted_bytes: subindex.size_bytes() as u64,
            },
            subindex,
            stats,
        })
    }

    /// Knot range `(start, len)` handed to the segment search; the knot
    /// starting `key`'s segment is inside it or at `start - 1`.
    #[inline]
    fn knot_range(&self, key: Key) -> (usize, usize) {
        match &self.subindex {
            Subindex::BinarySearchOnly => (0, self.spline.len()),
            Subindex::RadixTable(t) => t.bucket(key),
            Subindex::Cht(t) => (t.lookup(key), t.config().delta as usize),
        }
    }

    /// Segment of the spline that `key` falls into.
    #[inline]
    pub fn segment(&self, key: Key) -> usize {
        let (start, len) = self.knot_range(key);
        self.spline.segment_search(start, len, key)
    }

    /// Spline estimate of the position of `key`.
    #[inline]
    pub fn predict(&self, key: Key) -> u64 {
        self.spline.interpolate_unchecked(self.segment(key), key)
    }

    /// Data window `[lo, hi]` searched for `key`; at most `2 * epsilon + 1`
    /// positions.
    #[inline]
    pub fn search_window(&self, key: Key) -> (usize, usize) {
        let p = self.predict(key);
        let eps = self.spline.epsilon();
        let last = self.spline.num_keys().saturating_sub(1);
        (
            p.saturating_sub(eps) as usize,
            p.saturating_add(eps).min(last) as usize,
        )
    }

    /// Position of the first key `>= key` in `data`, which must be the
    /// sorted array the index was built on. Present keys resolve to their
    /// first occurrence.
    #[inline]
    pub fn lookup(&self, data: &[Key], key: Key) -> usize {
        debug_assert_eq!(data.len() as u64, self.spline.num_keys());
        let (lo, hi) = self.search_window(key);
        let pos = lo + data[lo..=hi].partition_point(|&k| k < key);
        if pos > hi {
            // Absent key past the window (only possible after a long run of
            // duplicates or beyond the last key).
            if pos < data.len() && data[pos] < key {
                return gallop_right(data, pos, key);
            }
            return pos;
        }
        if pos == lo && lo > 0 && data[lo - 1] >= key {
            return gallop_left(data, lo, key);
        }
        pos
    }

    /// Instrumented subindex traversal, for measuring real search cost.
    pub fn subindex_steps(&self, key: Key) -> SubindexSteps {
        let (start, len, hops) = match &self.subindex {
            Subindex::BinarySearchOnly => (0, self.spline.len(), 0),
            Subindex::RadixTable(t) => {
                let (s, l) = t.bucket(key);
                (s, l, 0)
            }
            Subindex::Cht(t) => {
                let (q, hops) = t.lookup_counted(key);
                (q, t.config().delta as usize, hops)
            }
        };
        let (_, search_steps) = self.spline.segment_search_counted(start, len, key);
        SubindexSteps { hops, search_steps }
    }
}

/// Lower bound of `key` in `data[from..]`, given `data[from] < key`.
fn gallop_right(data: &[Key], from: usize, key: Key) -> usize {
    let mut step = 1;
    let mut lo = from;
    loop {
        let probe = lo + step;
        if probe >= data.len() || data[probe] >= key {
            let hi = probe.min(data.len());
            return lo + 1 + data[lo + 1..hi].partition_point(|&k| k < key);
        }
        lo = probe;
        step *= 2;
    }
}

/// Lower bound of `key` in `data[..=from]`, given `data[from] >= key`.
fn gallop_left(data: &[Key], from: usize, key: Key) -> usize {
    let mut step = 1;
    let mut hi = from;
    loop {
        if step > hi || data[hi - step] < key {
            let lo = hi.saturating_sub(step);
            let lo = if step > hi { 0 } else { lo + 1 };
            return lo + data[lo..hi].partition_point(|&k| k < key);
        }
        hi -= step;
        step *= 2;
    }
}

const MAGIC: &[u8; 4] = b"PLEX";
pub const FORMAT_VERSION: u32 = 1;

const TAG_BINARY: u8 = 0;
const TAG_RADIX: u8 = 1;
const TAG_CHT: u8 = 2;

impl PlexIndex {
    /// Little-endian binary encoding. The header holds the magic `PLEX`,
    /// the format version, epsilon, key width, knot count, data size and
    /// subindex tag; the knots and the subindex payload follow.
    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.size_bytes() + 64);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.spline.epsilon().to_le_bytes());
        out.extend_from_slice(&self.spline.width().bits().to_le_bytes());
        out.extend_from_slice(&(self.spline.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.spline.num_keys().to_le_bytes());
        out.push(match self.subindex {
            Subindex::BinarySearchOnly => TAG_BINARY,
            Subindex::RadixTable(_) => TAG_RADIX,
            Subindex::Cht(_) => TAG_CHT,
        });
        for p in self.spline.points() {
            out.extend_from_slice(&p.key.to_le_bytes());
            out.extend_from_slice(&p.position.to_le_bytes());
        }
        out.extend_from_slice(&self.choice.predicted_lambda.to_bits().to_le_bytes());
        out.extend_from_slice(&self.choice.predicted_bytes.to_le_bytes());
        match &self.subindex {
            Subindex::BinarySearchOnly => {}
            Subindex::RadixTable(t) => {
                out.extend_from_slice(&t.r().to_le_bytes());
                out.extend_from_slice(&(t.offsets().len() as u64).to_le_bytes());
                for o in t.offsets() {
                    out.extend_from_slice(&o.to_le_bytes());
                }
            }
            Subindex::Cht(t) => {
                let cfg = t.config();
                out.extend_from_slice(&cfg.r.to_le_bytes());
                out.extend_from_slice(&cfg.delta.to_le_bytes());
                out.extend_from_slice(&(t.cells().len() as u64).to_le_bytes());
                for c in t.cells() {
                    out.extend_from_slice(&c.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self> {
        let mut rd = Reader { bytes, pos: 0 };
        if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
            return Err(Error::BadMagic);
        }
        rd.pos = MAGIC.len();
        let version = rd.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let epsilon = rd.u64()?;
        let width = KeyWidth::new(rd.u32()?).map_err(|e| Error::Corrupt(e.to_string()))?;
        let num_points = rd.u64()? as usize;
        let num_keys = rd.u64()?;
        let tag = rd.u8()?;
        rd.need(num_points.saturating_mul(16))?;
        let mut points = Vec::with_capacity(num_points);
        for _ in 0..num_points {
            let key = rd.u64()?;
            let position = rd.u64()?;
            points.push(SplinePoint { key, position });
        }
        let spline = SplineModel::from_points(points, epsilon, num_keys, width)
            .map_err(|e| Error::Corrupt(e.to_string()))?;
        let predicted_lambda = f64::from_bits(rd.u64()?);
        let predicted_bytes = rd.u64()?;
        let subindex = match tag {
            TAG_BINARY => Subindex::BinarySearchOnly,
            TAG_RADIX => {
                let r = rd.u32()?;
                let n = rd.u64()? as usize;
                let offsets = rd.u32_vec(n)?;
                if offsets.last().is_some_and(|&o| o as usize != spline.len()) {
                    return Err(Error::Corrupt(
                        "radix table does not cover the spline".into(),
                    ));
                }
                Subindex::RadixTable(RadixTableIndex::from_parts(r, width, offsets)?)
            }
            TAG_CHT => {
                let r = rd.u32()?;
                let delta = rd.u32()?;
                let n = rd.u64()? as usize;
                let cells = rd.u32_vec(n)?;
                let config = ChtConfig { r, delta, width };
                Subindex::Cht(CompactHistTree::from_parts(
                    config,
                    spline.len() as u32,
                    cells,
                )?)
            }
            other => return Err(Error::Corrupt(format!("unknown subindex tag {other}"))),
        };
        if rd.pos != bytes.len() {
            return Err(Error::Corrupt(format!(
                "{} trailing bytes",
                bytes.len() - rd.pos
            )));
        }
        let choice = TunerChoice {
            kind: subindex.kind(),
            predicted_lambda,
            predicted_bytes,
        };
        let stats = BuildStats {
            total_bytes: spline.size_bytes() + subindex.size_bytes(),
            ..BuildStats::default()
        };
        Ok(PlexIndex {
            spline,
            subindex,
            choice,
            stats,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn need(&self, n: usize) -> Result<()> {
        let left = self.bytes.len() - self.pos;
        if left < n {
            return Err(Error::Truncated {
                offset: self.pos,
                needed: n - left,
            });
        }
        Ok(())
    }

    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        self.need(N)?;
        let mut buf = [0u8; N];
        buf.copy_from_slice(&self.bytes[self.pos..self.pos + N]);
        self.pos += N;
        Ok(buf)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take::<1>()?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        self.take().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Result<u64> {
        self.take().map(u64::from_le_bytes)
    }

    fn u32_vec(&mut self, n: usize) -> Result<Vec<u32>> {
        self.need(n.saturating_mul(CELL_BYTES))?;
        (0..n).map(|_| self.u32()).collect()
    }
}
