//! Dataset files, synthetic datasets and probe workloads.
//!
//! Files use the SOSD layout: a little-endian `u64` count followed by that
//! many little-endian `u64` keys.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, Pareto};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::key::Key;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub keys: Vec<Key>,
    /// Whether the keys were already in non-decreasing order on disk.
    pub was_sorted: bool,
}

pub fn decode_dataset(bytes: &[u8]) -> Result<Dataset> {
    if bytes.len() < 8 {
        return Err(Error::Truncated {
            offset: 0,
            needed: 8 - bytes.len(),
        });
    }
    let count = u64::from_le_bytes(bytes[..8].try_into().unwrap());
    let body = &bytes[8..];
    if !body.len().is_multiple_of(8) || body.len() as u64 / 8 != count {
        return Err(Error::SizeMismatch {
            expected: count,
            actual: body.len() as u64 / 8,
        });
    }
    let mut keys: Vec<Key> = body
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let was_sorted = keys.windows(2).all(|w| w[0] <= w[1]);
    if !was_sorted {
        keys.sort_unstable();
    }
    Ok(Dataset { keys, was_sorted })
}

pub fn encode_dataset(keys: &[Key]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + keys.len() * 8);
    out.extend_from_slice(&(keys.len() as u64).to_le_bytes());
    for k in keys {
        out.extend_from_slice(&k.to_le_bytes());
    }
    out
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_dataset(&bytes)
}

pub fn write_dataset(path: impl AsRef<Path>, keys: &[Key]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_dataset(keys)).map_err(|e| Error::io(path, e))
}

/// Desk-scale stand-ins for the usual sorted-data benchmark distributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SyntheticKind {
    /// Uniform over the full 64-bit range.
    Uniform,
    /// Log-normal samples stretched over the 64-bit range.
    Lognormal,
    /// Smooth multi-modal distribution, like popularity counts.
    BooksLike,
    /// Almost every key below 2^44, plus a handful of huge outliers: a
    /// single radix level cannot split the bulk of the keys.
    FaceLike { outlier_fraction: f64 },
    /// Many dense clusters scattered over the key space.
    OsmLike,
}

pub const DEFAULT_OUTLIER_FRACTION: f64 = 1e-5;
const FACE_BODY_BITS: u32 = 44;
const FACE_MIN_OUTLIERS: usize = 4;
const FACE_GAP_SHAPE: f64 = 1.2;
const LOGNORMAL_SIGMA: f64 = 0.5;

impl SyntheticKind {
    pub fn name(&self) -> &'static str {
        match self {
            SyntheticKind::Uniform => "uniform",
            SyntheticKind::Lognormal => "lognormal",
            SyntheticKind::BooksLike => "books_like",
            SyntheticKind::FaceLike { .. } => "face_like",
            SyntheticKind::OsmLike => "osm_like",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "uniform" => SyntheticKind::Uniform,
            "lognormal" => SyntheticKind::Lognormal,
            "books_like" => SyntheticKind::BooksLike,
            "face_like" => SyntheticKind::FaceLike {
                outlier_fraction: DEFAULT_OUTLIER_FRACTION,
            },
            "osm_like" => SyntheticKind::OsmLike,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub n: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(kind: SyntheticKind, n: usize, seed: u64) -> Self {
        SyntheticSpec { kind, n, seed }
    }
}

/// Scales values in `[0, max]` onto the full key range.
fn stretch(values: &[f64]) -> Vec<Key> {
    let max = values.iter().copied().fold(0.0f64, f64::max);
    if max <= 0.0 {
        return vec![0; values.len()];
    }
    // 2^64 - 2048 is the largest f64 below 2^64.
    let top = 18_446_744_073_709_549_568.0f64;
    values.iter().map(|&v| (v / max * top) as Key).collect()
}

/// Deterministic sorted keys for `spec`.
pub fn generate(spec: &SyntheticSpec) -> Result<Vec<Key>> {
    if spec.n == 0 {
        return Err(Error::InvalidParameter("dataset size must be >= 1".into()));
    }
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut keys: Vec<Key> = match spec.kind {
        SyntheticKind::Uniform => (0..n).map(|_| rng.random()).collect(),
        SyntheticKind::Lognormal => {
            let dist = LogNormal::new(0.0, LOGNORMAL_SIGMA).unwrap();
            let v: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
            stretch(&v)
        }
        SyntheticKind::BooksLike => {
            let modes: [(f64, f64, f64); 3] =
                [(0.15, 0.05, 0.3), (0.45, 0.12, 0.5), (0.8, 0.06, 0.2)];
            let v: Vec<f64> = (0..n)
                .map(|_| {
                    let pick: f64 = rng.random();
                    let mut acc = 0.0;
                    let &(mean, sd, _) = modes
                        .iter()
                        .find(|m| {
                            acc += m.2;
                            pick < acc
                        })
                        .unwrap_or(&modes[2]);
                    Normal::new(mean, sd)
                        .unwrap()
                        .sample(&mut rng)
                        .clamp(0.0, 1.0)
                })
                .collect();
            stretch(&v)
        }
        SyntheticKind::FaceLike { outlier_fraction } => {
            if !(0.0..=0.01).contains(&outlier_fraction) {
                return Err(Error::InvalidParameter(format!(
                    "outlier fraction must be in [0, 0.01], got {outlier_fraction}"
                )));
            }
            let outliers = ((n as f64 * outlier_fraction).ceil() as usize)
                .max(FACE_MIN_OUTLIERS)
                .min(n / 100);
            let body = n - outliers;
            // Heavy-tailed gaps keep the body's CDF ragged at every scale.
            let gaps = Pareto::new(1.0, FACE_GAP_SHAPE).unwrap();
            let mut acc = 0.0f64;
            let cumulative: Vec<f64> = (0..body)
                .map(|_| {
                    acc += gaps.sample(&mut rng);
                    acc
                })
                .collect();
            let scale = ((1u64 << FACE_BODY_BITS) - 1) as f64 / acc.max(1.0);
            let mut keys: Vec<Key> = cumulative.iter().map(|&c| (c * scale) as Key).collect();
            keys.extend((0..outliers).map(|_| rng.random_range(1u64 << 63..=u64::MAX)));
            keys
        }
        SyntheticKind::OsmLike => {
            let clusters = (n / 2000).max(1);
            let centers: Vec<(Key, u32)> = (0..clusters)
                .map(|_| (rng.random(), rng.random_range(20..36)))
                .collect();
            (0..n)
                .map(|_| {
                    let (center, spread_bits) = centers[rng.random_range(0..clusters)];
                    let u: f64 = rng.random();
                    let offset = (u * u * (1u64 << spread_bits) as f64) as Key;
                    center.saturating_add(offset)
                })
                .collect()
        }
    };
    keys.sort_unstable();
    Ok(keys)
}

/// Probe keys: a `positive_fraction` share drawn uniformly from `data`, the
/// rest drawn from the gaps between (and around) the data keys.
pub fn make_workload(data: &[Key], n_probes: usize, seed: u64, positive_fraction: f64) -> Vec<Key> {
    assert!(!data.is_empty(), "workload needs a nonempty dataset");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positive_fraction = positive_fraction.clamp(0.0, 1.0);
    (0..n_probes)
        .map(|_| {
            if rng.random_bool(positive_fraction) {
                data[rng.random_range(0..data.len())]
            } else {
                negative_probe(data, &mut rng)
            }
        })
        .collect()
}

/// Gap `(lo, hi)` of absent keys in front of `data[i]`, inclusive bounds.
fn gap_before(data: &[Key], i: usize) -> Option<(Key, Key)> {
    let (lo, hi) = match i {
        0 => (0, data[0].checked_sub(1)?),
        i if i == data.len() => (data[i - 1].checked_add(1)?, u64::MAX),
        i => (data[i - 1].checked_add(1)?, data[i].checked_sub(1)?),
    };
    (lo <= hi).then_some((lo, hi))
}

fn negative_probe(data: &[Key], rng: &mut ChaCha8Rng) -> Key {
    for _ in 0..64 {
        if let Some((lo, hi)) = gap_before(data, rng.random_range(0..=data.len())) {
            return rng.random_range(lo..=hi);
        }
    }
    // Dense data: take the first gap at or after a random position.
    let start = rng.random_range(0..=data.len());
    let (lo, hi) = (start..=data.len())
        .chain(0..start)
        .find_map(|i| gap_before(data, i))
        .expect("data cannot cover the whole key space");
    rng.random_range(lo..=hi)
}
