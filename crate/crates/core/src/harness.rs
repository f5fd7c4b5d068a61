//! Measurement helpers behind the benchmark CLI: correctness gate, lookup
//! timing, and the exhaustive configuration grid used to check the tuner.

use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::index::{PlexBuilder, PlexIndex};
use crate::key::{lower_bound, Key};
use crate::tuner::{SubindexKind, TunerChoice};

/// First probe whose answer disagrees with the lower-bound oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mismatch {
    pub key: Key,
    pub expected: usize,
    pub actual: usize,
}

pub fn verify_lookups(
    data: &[Key],
    probes: &[Key],
    lookup: impl Fn(Key) -> usize,
) -> std::result::Result<(), Mismatch> {
    for &key in probes {
        let expected = lower_bound(data, key);
        let actual = lookup(key);
        if actual != expected {
            return Err(Mismatch {
                key,
                expected,
                actual,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    /// Median over repeats of the mean time per lookup.
    pub median_ns: f64,
    /// 99th percentile of per-chunk mean lookup time over all repeats.
    pub p99_ns: f64,
}

const CHUNK: usize = 256;

/// Times `lookup` over `probes`, `repeats` times.
pub fn time_lookups(
    probes: &[Key],
    repeats: usize,
    lookup: impl Fn(Key) -> usize,
) -> LatencySummary {
    assert!(!probes.is_empty() && repeats > 0);
    let mut per_repeat = Vec::with_capacity(repeats);
    let mut per_chunk = Vec::new();
    for _ in 0..repeats {
        let mut total = 0.0;
        for chunk in probes.chunks(CHUNK) {
            let t = Instant::now();
            let mut acc = 0usize;
            for &k in chunk {
                acc = acc.wrapping_add(lookup(black_box(k)));
            }
            black_box(acc);
            let ns = t.elapsed().as_nanos() as f64;
            total += ns;
            per_chunk.push(ns / chunk.len() as f64);
        }
        per_repeat.push(total / probes.len() as f64);
    }
    LatencySummary {
        median_ns: percentile(&mut per_repeat, 0.5),
        p99_ns: percentile(&mut per_chunk, 0.99),
    }
}

pub fn percentile(values: &mut [f64], q: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let idx = ((values.len() - 1) as f64 * q).round() as usize;
    values[idx]
}

/// Mean measured subindex search steps (child hops plus knot binary-search
/// steps) over `probes`.
pub fn measured_steps(index: &PlexIndex, probes: &[Key]) -> f64 {
    let total: u64 = probes
        .iter()
        .map(|&k| index.subindex_steps(k).total() as u64)
        .sum();
    total as f64 / probes.len().max(1) as f64
}

/// Configuration grid: every epsilon, and for each every radix table and
/// CHT over the given `r` and `delta` values.
#[derive(Debug, Clone)]
pub struct Grid {
    pub epsilons: Vec<u64>,
    pub radix_bits: Vec<u32>,
    pub deltas: Vec<u32>,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            epsilons: (1..=10).map(|i| 1u64 << i).collect(),
            radix_bits: (1..=10).collect(),
            deltas: (1..=10).map(|i| 1u32 << i).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridRow {
    pub epsilon: u64,
    pub kind: SubindexKind,
    pub spline_points: usize,
    pub predicted_lambda: f64,
    pub bytes: usize,
    /// Subindex fits in the spline-size budget.
    pub feasible: bool,
    pub measured_steps: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridEpsilon {
    pub epsilon: u64,
    pub choice: TunerChoice,
    pub chosen_measured_steps: f64,
    pub rows: Vec<GridRow>,
}

impl GridEpsilon {
    /// Feasible grid configuration with the fewest measured steps.
    pub fn best_feasible(&self) -> Option<&GridRow> {
        self.rows
            .iter()
            .filter(|r| r.feasible)
            .min_by(|a, b| a.measured_steps.total_cmp(&b.measured_steps))
    }
}

/// Builds every grid configuration and measures its subindex cost on
/// `probes`, next to the auto-tuned choice for the same epsilon.
pub fn grid_search(data: &[Key], probes: &[Key], grid: &Grid) -> Result<Vec<GridEpsilon>> {
    let mut out = Vec::with_capacity(grid.epsilons.len());
    for &epsilon in &grid.epsilons {
        let (tuned, report) = PlexBuilder::new(epsilon).build_with_report(data)?;
        let budget = tuned.spline().size_bytes();
        let mut kinds = Vec::new();
        for &r in &grid.radix_bits {
            kinds.push(SubindexKind::RadixTable { r });
            for &delta in &grid.deltas {
                kinds.push(SubindexKind::Cht { r, delta });
            }
        }
        let mut rows = Vec::with_capacity(kinds.len());
        for kind in kinds {
            let predicted_lambda = match kind {
                SubindexKind::RadixTable { r } if r <= report.radix.r_max() => {
                    report.radix.lambda(r)
                }
                SubindexKind::Cht { r, delta }
                    if r <= report.surface.r_max() && delta <= report.surface.delta_max() =>
                {
                    report.surface.lambda(r, delta)
                }
                _ => f64::NAN,
            };
            let candidate = tuned.with_subindex(kind)?;
            let bytes = candidate.subindex().size_bytes();
            rows.push(GridRow {
                epsilon,
                kind,
                spline_points: tuned.spline().len(),
                predicted_lambda,
                bytes,
                feasible: bytes <= budget,
                measured_steps: measured_steps(&candidate, probes),
            });
        }
        out.push(GridEpsilon {
            epsilon,
            choice: *tuned.choice(),
            chosen_measured_steps: measured_steps(&tuned, probes),
            rows,
        });
    }
    Ok(out)
}
