use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use plex::data_io::{
    generate, load_dataset, make_workload, write_dataset, SyntheticKind, SyntheticSpec,
};
use plex::harness::{grid_search, time_lookups, verify_lookups, Grid, LatencySummary};
use plex::tuner::MIN_TUNED_DELTA;
use plex::{Key, PlexBuilder, PlexIndex, SubindexKind, SubindexPolicy};

use crate::report::{BuildReport, CsvRow, CSV_HEADER};
use crate::{BuildArgs, GenArgs, IndexType, ProbeArgs, TuneArgs, WorkloadArgs};

fn load_keys(path: &Path) -> Result<Vec<Key>> {
    let dataset = load_dataset(path)?;
    if !dataset.was_sorted {
        eprintln!(
            "warning: {} is not sorted; sorting in memory",
            path.display()
        );
    }
    if dataset.keys.is_empty() {
        bail!("{} holds no keys", path.display());
    }
    Ok(dataset.keys)
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn gen(args: &GenArgs) -> Result<()> {
    let mut kind = SyntheticKind::from_name(&args.kind).with_context(|| {
        format!(
            "unknown dataset kind {:?} (expected uniform, lognormal, books_like, face_like or osm_like)",
            args.kind
        )
    })?;
    if let Some(f) = args.outlier_fraction {
        match &mut kind {
            SyntheticKind::FaceLike { outlier_fraction } => *outlier_fraction = f,
            _ => bail!("--outlier-fraction only applies to face_like"),
        }
    }
    let n = usize::try_from(args.n).context("dataset too large for this platform")?;
    let keys = generate(&SyntheticSpec::new(kind, n, args.seed))?;
    write_dataset(&args.out, &keys)?;
    println!(
        "wrote {} {} keys to {}",
        keys.len(),
        kind.name(),
        args.out.display()
    );
    Ok(())
}

pub fn build(args: &BuildArgs) -> Result<()> {
    let keys = load_keys(&args.data)?;
    let dataset = file_stem(&args.data);
    let report = match args.index {
        IndexType::Binary => {
            fs::write(&args.out, []).with_context(|| format!("writing {}", args.out.display()))?;
            BuildReport {
                index: args.index.name().into(),
                dataset,
                epsilon: None,
                num_keys: keys.len() as u64,
                spline_points: None,
                choice: SubindexKind::BinarySearchOnly.name().into(),
                r: None,
                delta: None,
                predicted_lambda: None,
                bytes: 0,
                build_ns: 0,
            }
        }
        IndexType::Plex | IndexType::Rs => {
            let policy = if args.index == IndexType::Rs {
                SubindexPolicy::RadixOnly
            } else {
                SubindexPolicy::Auto
            };
            let t = Instant::now();
            let index = PlexBuilder::new(args.epsilon).policy(policy).build(&keys)?;
            let build_ns = t.elapsed().as_nanos() as u64;
            fs::write(&args.out, index.serialize())
                .with_context(|| format!("writing {}", args.out.display()))?;
            let choice = index.choice();
            BuildReport {
                index: args.index.name().into(),
                dataset,
                epsilon: Some(args.epsilon),
                num_keys: keys.len() as u64,
                spline_points: Some(index.spline().len()),
                choice: choice.kind.name().into(),
                r: choice.kind.r(),
                delta: choice.kind.delta(),
                predicted_lambda: Some(choice.predicted_lambda).filter(|l| l.is_finite()),
                bytes: index.size_bytes(),
                build_ns,
            }
        }
    };
    report.write_sidecar(&args.out)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

fn workload(keys: &[Key], w: &WorkloadArgs) -> Result<Vec<Key>> {
    if w.probes == 0 {
        bail!("--probes must be at least 1");
    }
    if !(0.0..=1.0).contains(&w.positive_fraction) {
        bail!("--positive-fraction must be in [0, 1]");
    }
    Ok(make_workload(
        keys,
        w.probes,
        w.workload_seed,
        w.positive_fraction,
    ))
}

fn check_then_time(
    keys: &[Key],
    probes: &[Key],
    repeats: usize,
    lookup: impl Fn(Key) -> usize,
) -> Result<LatencySummary> {
    if let Err(m) = verify_lookups(keys, probes, &lookup) {
        bail!(
            "lookup mismatch for key {}: expected position {}, got {}",
            m.key,
            m.expected,
            m.actual
        );
    }
    Ok(time_lookups(probes, repeats, lookup))
}

pub fn probe(args: &ProbeArgs) -> Result<()> {
    if args.repeats == 0 {
        bail!("--repeats must be at least 1");
    }
    let keys = load_keys(&args.data)?;
    let bytes =
        fs::read(&args.index).with_context(|| format!("reading {}", args.index.display()))?;
    let stats = BuildReport::read_sidecar(&args.index)?;
    let probes = workload(&keys, &args.workload)?;

    let mut row = CsvRow {
        dataset: args
            .dataset
            .clone()
            .or_else(|| stats.as_ref().map(|s| s.dataset.clone()))
            .unwrap_or_else(|| file_stem(&args.data)),
        index: String::new(),
        epsilon: None,
        r: None,
        delta: None,
        bytes: 0,
        build_ns: stats.as_ref().map(|s| s.build_ns),
        median_lookup_ns: 0.0,
        p99_lookup_ns: 0.0,
    };
    let latency = if bytes.is_empty() {
        row.index = IndexType::Binary.name().into();
        check_then_time(&keys, &probes, args.repeats, |k| {
            keys.partition_point(|&x| x < k)
        })?
    } else {
        let index = PlexIndex::deserialize(&bytes)
            .with_context(|| format!("decoding {}", args.index.display()))?;
        let knots = index.spline().points();
        let ends_match = knots.first().map(|p| p.key) == keys.first().copied()
            && knots.last().map(|p| p.key) == keys.last().copied();
        if index.num_keys() != keys.len() as u64 || !ends_match {
            bail!(
                "{} was not built over {} (key count or key range differs)",
                args.index.display(),
                args.data.display()
            );
        }
        let kind = index.choice().kind;
        row.index = IndexType::Plex.name().into();
        row.epsilon = Some(index.epsilon());
        row.r = kind.r();
        row.delta = kind.delta();
        row.bytes = index.size_bytes();
        check_then_time(&keys, &probes, args.repeats, |k| index.lookup(&keys, k))?
    };
    if let Some(s) = &stats {
        row.index = s.index.clone();
    }
    row.median_lookup_ns = latency.median_ns;
    row.p99_lookup_ns = latency.p99_ns;

    match &args.csv {
        Some(path) => {
            row.append_to(path)?;
            println!("{}", row.to_line());
        }
        None => {
            println!("{CSV_HEADER}");
            println!("{}", row.to_line());
        }
    }
    Ok(())
}

fn describe(kind: SubindexKind) -> String {
    match kind {
        SubindexKind::BinarySearchOnly => "binary search over knots".into(),
        SubindexKind::RadixTable { r } => format!("radix table r={r}"),
        SubindexKind::Cht { r, delta } => format!("cht r={r} delta={delta}"),
    }
}

pub fn tune(args: &TuneArgs) -> Result<()> {
    if args.r_max == 0 || args.delta_max < MIN_TUNED_DELTA {
        bail!("--r-max must be >= 1 and --delta-max >= {MIN_TUNED_DELTA}");
    }
    let keys = load_keys(&args.data)?;
    let (index, report) = PlexBuilder::new(args.epsilon)
        .r_max(args.r_max)
        .delta_max(args.delta_max)
        .build_with_report(&keys)?;
    let budget = index.spline().size_bytes() as u64;
    println!(
        "keys {}  epsilon {}  spline points {}  budget {} bytes",
        keys.len(),
        args.epsilon,
        index.spline().len(),
        budget
    );

    println!("\nradix table");
    println!("{:>4} {:>10} {:>12} {:>5}", "r", "lambda", "bytes", "fits");
    for r in 0..=report.radix.r_max() {
        let bytes = if r == 0 {
            0
        } else {
            plex::radix_table::radix_table_bytes(r) as u64
        };
        println!(
            "{r:>4} {:>10.4} {bytes:>12} {:>5}",
            report.radix.lambda(r),
            if bytes <= budget { "yes" } else { "no" }
        );
    }

    let surface = &report.surface;
    let mut deltas: Vec<u32> = (1..)
        .map(|i| 1u32 << i)
        .take_while(|&d| d <= surface.delta_max())
        .collect();
    if deltas.last() != Some(&surface.delta_max()) {
        deltas.push(surface.delta_max());
    }
    println!("\ncht");
    println!(
        "{:>4} {:>6} {:>10} {:>8} {:>12} {:>5}",
        "r", "delta", "lambda", "nodes", "bytes", "fits"
    );
    for r in 1..=surface.r_max() {
        for &delta in &deltas {
            let bytes = surface.memory_bytes(r, delta);
            println!(
                "{r:>4} {delta:>6} {:>10.4} {:>8} {bytes:>12} {:>5}",
                surface.lambda(r, delta),
                surface.node_count(r, delta),
                if bytes <= budget { "yes" } else { "no" }
            );
        }
    }

    let choice = index.choice();
    println!(
        "\nchoice: {}  predicted lambda {:.4}  bytes {}",
        describe(choice.kind),
        choice.predicted_lambda,
        choice.predicted_bytes
    );

    if args.grid {
        let probes = workload(&keys, &args.workload)?;
        println!(
            "\ngrid search over {} probes (measured = child hops + knot search steps)",
            probes.len()
        );
        for row in grid_search(&keys, &probes, &Grid::default())? {
            println!(
                "\nepsilon {}: tuned {} predicted {:.4} measured {:.4}",
                row.epsilon,
                describe(row.choice.kind),
                row.choice.predicted_lambda,
                row.chosen_measured_steps
            );
            if let Some(best) = row.best_feasible() {
                println!(
                    "  best feasible: {} measured {:.4}",
                    describe(best.kind),
                    best.measured_steps
                );
            }
            println!(
                "  {:<24} {:>10} {:>10} {:>12} {:>5}",
                "config", "predicted", "measured", "bytes", "fits"
            );
            for r in row.rows.iter().filter(|r| args.all || r.feasible) {
                println!(
                    "  {:<24} {:>10.4} {:>10.4} {:>12} {:>5}",
                    describe(r.kind),
                    r.predicted_lambda,
                    r.measured_steps,
                    r.bytes,
                    if r.feasible { "yes" } else { "no" }
                );
            }
        }
    }
    Ok(())
}
