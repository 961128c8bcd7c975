use std::path::Path;

use chrono::NaiveTime;
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use cfmon_core::engine::{run_inference_batch, run_inference_batch_sequential, InferenceConfig};
use cfmon_core::events::{window_evidence, window_evidence_sequential, EventWindow};
use cfmon_core::monitor::{simulate, ScenarioConfig};
use cfmon_core::{KnowledgeBase, MappingThresholds};

fn scenario() -> ScenarioConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenario/eib_training.toml");
    ScenarioConfig::load(path).expect("scenario config")
}

/// A synthetic window of `n` samples at the default 5 s interval.
fn window(n: usize, seed: u64) -> EventWindow {
    let mut cfg = scenario();
    cfg.seed = seed;
    cfg.start_time = NaiveTime::MIN;
    cfg.duration_minutes = n as f64 * cfg.sample_interval_seconds as f64 / 60.0;
    cfg.activity.retain(|a| a.offset_minutes <= cfg.duration_minutes);
    EventWindow::from_records(simulate(&cfg).expect("simulate"))
}

fn evidence(c: &mut Criterion) {
    let th = MappingThresholds::default();
    let mut group = c.benchmark_group("window_evidence");
    for n in [1_000, 10_000, 100_000] {
        let w = window(n.min(17_000), 1);
        // days longer than 24 h of 5 s samples are built by concatenation
        let w = if n > w.len() {
            let mut records = Vec::with_capacity(n);
            while records.len() < n {
                records.extend(w.records.iter().cloned());
            }
            records.truncate(n);
            EventWindow::from_records(records)
        } else {
            w
        };
        group.bench_with_input(BenchmarkId::new("parallel", n), &w, |b, w| {
            b.iter(|| window_evidence(black_box(w), &th))
        });
        group.bench_with_input(BenchmarkId::new("sequential", n), &w, |b, w| {
            b.iter(|| window_evidence_sequential(black_box(w), &th))
        });
    }
    group.finish();
}

fn batch(c: &mut Criterion) {
    let kb = KnowledgeBase::builtin();
    let config = InferenceConfig {
        rules: cfmon_core::engine::default_rules(),
        ..Default::default()
    };
    let windows: Vec<EventWindow> = (0..32).map(|s| window(2_000, s)).collect();
    let mut group = c.benchmark_group("inference_batch_32x2000");
    group.bench_function("parallel", |b| {
        b.iter(|| run_inference_batch(&kb, black_box(&windows), &config))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| run_inference_batch_sequential(&kb, black_box(&windows), &config))
    });
    group.finish();
}

criterion_group!(benches, evidence, batch);
criterion_main!(benches);
