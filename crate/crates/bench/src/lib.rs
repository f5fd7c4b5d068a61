//! Shared fixtures for the criterion benchmarks.

use plex::data_io::{generate, make_workload, SyntheticKind, SyntheticSpec};
use plex::Key;

pub const BENCH_KEYS: usize = 1_000_000;
pub const BENCH_PROBES: usize = 4096;
pub const DATASETS: [&str; 3] = ["uniform", "lognormal", "face_like"];

/// Sorted keys of a synthetic dataset plus a mixed hit/miss probe batch.
pub fn fixture(name: &str, n: usize) -> (Vec<Key>, Vec<Key>) {
    let kind = SyntheticKind::from_name(name).unwrap_or_else(|| panic!("unknown dataset {name}"));
    let keys = generate(&SyntheticSpec::new(kind, n, 42)).expect("n > 0");
    let probes = make_workload(&keys, BENCH_PROBES, 7, 0.5);
    (keys, probes)
}
