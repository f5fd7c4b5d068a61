use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use plex::key::cdf_points;
use plex::{build_spline, KeyWidth, PlexBuilder, SubindexPolicy};
use plex_bench::{fixture, BENCH_KEYS, DATASETS};

fn builds(c: &mut Criterion) {
    for name in DATASETS {
        let (keys, _) = fixture(name, BENCH_KEYS);
        let mut group = c.benchmark_group(format!("build/{name}"));
        group.sample_size(10);
        group.throughput(Throughput::Elements(keys.len() as u64));
        for eps in [8u64, 32, 128] {
            group.bench_with_input(BenchmarkId::new("spline_only", eps), &eps, |b, &eps| {
                b.iter(|| {
                    build_spline(
                        cdf_points(&keys).map(|(p, _)| p),
                        eps,
                        keys.len() as u64,
                        KeyWidth::FULL,
                    )
                    .unwrap()
                })
            });
            group.bench_with_input(BenchmarkId::new("plex", eps), &eps, |b, &eps| {
                b.iter(|| PlexBuilder::new(eps).build(&keys).unwrap())
            });
            group.bench_with_input(BenchmarkId::new("rs", eps), &eps, |b, &eps| {
                b.iter(|| {
                    PlexBuilder::new(eps)
                        .policy(SubindexPolicy::RadixOnly)
                        .build(&keys)
                        .unwrap()
                })
            });
        }
        group.finish();
    }
}

criterion_group!(benches, builds);
criterion_main!(benches);
