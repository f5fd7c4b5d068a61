use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use plex::{Key, PlexBuilder, SubindexPolicy};
use plex_bench::{fixture, BENCH_KEYS, DATASETS};

fn run_batch(probes: &[Key], lookup: impl Fn(Key) -> usize) -> usize {
    probes
        .iter()
        .fold(0usize, |acc, &k| acc.wrapping_add(lookup(black_box(k))))
}

fn lookups(c: &mut Criterion) {
    for name in DATASETS {
        let (keys, probes) = fixture(name, BENCH_KEYS);
        let mut group = c.benchmark_group(format!("lookup/{name}"));
        group.throughput(Throughput::Elements(probes.len() as u64));
        group.bench_function("binary_search", |b| {
            b.iter(|| run_batch(&probes, |k| keys.partition_point(|&x| x < k)))
        });
        for eps in [8u64, 32, 128] {
            for (label, policy) in [
                ("plex", SubindexPolicy::Auto),
                ("rs", SubindexPolicy::RadixOnly),
            ] {
                let index = PlexBuilder::new(eps).policy(policy).build(&keys).unwrap();
                group.bench_with_input(BenchmarkId::new(label, eps), &index, |b, index| {
                    b.iter(|| run_batch(&probes, |k| index.lookup(&keys, k)))
                });
            }
        }
        group.finish();
    }
}

criterion_group!(benches, lookups);
criterion_main!(benches);
