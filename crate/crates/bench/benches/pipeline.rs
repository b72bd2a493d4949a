use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use ukcs::dce::Selector;
use ukcs::inca::{decode, encode};
use ukcs::{
    default_czech_table, line_seed, noise_line, run_pipeline, train_langid, train_vocab,
    FilterConfig, LanguageDetector, NoiseConfig, PairFilter, RuleSet, ScoredPair,
};
use ukcs_bench::{sentences, training};

fn romanize(c: &mut Criterion) {
    let table = default_czech_table();
    let uk = sentences("uk");
    let romanized: Vec<String> = uk.iter().map(|s| table.romanize(s)).collect();
    let mut g = c.benchmark_group("romanize");
    g.throughput(Throughput::Elements(uk.len() as u64));
    g.bench_function("forward", |b| {
        b.iter(|| {
            uk.iter()
                .map(|s| table.romanize(black_box(s)).len())
                .sum::<usize>()
        })
    });
    g.bench_function("inverse", |b| {
        b.iter(|| {
            romanized
                .iter()
                .map(|s| table.deromanize(black_box(s)).unwrap().len())
                .sum::<usize>()
        })
    });
    g.finish();
}

fn inca(c: &mut Criterion) {
    let cs = sentences("cs");
    let vocab = train_vocab(training("cs"), 2);
    let encoded: Vec<String> = cs.iter().map(|s| encode(s, &vocab)).collect();
    let mut g = c.benchmark_group("inca");
    g.throughput(Throughput::Elements(cs.len() as u64));
    g.bench_function("encode", |b| {
        b.iter(|| {
            cs.iter()
                .map(|s| encode(black_box(s), &vocab).len())
                .sum::<usize>()
        })
    });
    g.bench_function("decode", |b| {
        b.iter(|| {
            encoded
                .iter()
                .map(|s| decode(black_box(s), &vocab).unwrap().len())
                .sum::<usize>()
        })
    });
    g.finish();
}

fn noise(c: &mut Criterion) {
    let cs = sentences("cs");
    let cfg = NoiseConfig::default();
    let mut g = c.benchmark_group("noise");
    g.throughput(Throughput::Elements(cs.len() as u64));
    g.bench_function("default-rates", |b| {
        b.iter(|| {
            cs.iter()
                .enumerate()
                .map(|(i, s)| noise_line(s, &cfg, line_seed(cfg.seed, i as u64)).len())
                .sum::<usize>()
        })
    });
    g.finish();
}

fn langid_and_filter(c: &mut Criterion) {
    let model = Arc::new(
        train_langid(
            ["cs", "ru", "uk"].map(|l| (l.to_string(), training(l))),
            ukcs::langid::DEFAULT_PROFILE_SIZE,
        )
        .unwrap(),
    );
    let cs = sentences("cs");
    let uk = sentences("uk");
    let mut g = c.benchmark_group("langid");
    g.throughput(Throughput::Elements(uk.len() as u64));
    g.bench_function("detect-uk", |b| {
        b.iter(|| {
            uk.iter()
                .filter(|s| model.detect(black_box(s)).is_ok())
                .count()
        })
    });
    g.finish();

    let bitext: Vec<Vec<u8>> = cs
        .iter()
        .zip(&uk)
        .map(|(a, b)| format!("{a}\t{b}").into_bytes())
        .collect();
    let filter = PairFilter::new(
        FilterConfig::default(),
        Some(model as Arc<dyn LanguageDetector>),
        RuleSet::default_rules(),
    );
    let mut g = c.benchmark_group("filter-parallel");
    g.throughput(Throughput::Elements(bitext.len() as u64));
    for workers in [1, 4] {
        g.bench_function(format!("workers-{workers}"), |b| {
            b.iter(|| {
                run_pipeline(
                    bitext.iter().map(|l| Ok(l.clone())),
                    "",
                    &filter,
                    workers,
                    |_| Ok(()),
                )
                .unwrap()
                .kept
            })
        });
    }
    g.finish();
}

fn dce(c: &mut Criterion) {
    let records: Vec<ScoredPair> = (0..100_000u64)
        .map(|i| {
            let x = ukcs::noise::splitmix64(i);
            ScoredPair {
                id: i.to_string(),
                fwd_xent: (x & 0xffff) as f64 / 1000.0,
                bwd_xent: (x >> 48) as f64 / 1000.0,
            }
        })
        .collect();
    let mut g = c.benchmark_group("dce-select");
    g.throughput(Throughput::Elements(records.len() as u64));
    g.bench_function("top-10000-of-100000", |b| {
        b.iter_batched(
            || records.clone(),
            |recs| {
                let mut sel = Selector::new(10_000);
                for r in recs {
                    sel.push(r);
                }
                sel.finish().kept.len()
            },
            BatchSize::LargeInput,
        )
    });
    g.finish();
}

criterion_group!(benches, romanize, inca, noise, langid_and_filter, dce);
criterion_main!(benches);
