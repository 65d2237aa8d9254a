use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trustmap::batch::{
    quantify_batch, quantify_batch_sequential, run_batch, run_batch_sequential,
};
use trustmap::trust::{SurveyResponse, TrustPipeline, CONCEPT_IDS};
use trustmap::{Activation, Concept, FcmModel, InferenceConfig, LinguisticScale, StateVector};

fn random_jobs(count: usize, n: usize, seed: u64) -> Vec<(FcmModel, StateVector)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut w: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            for i in 0..n {
                w[i * n + i] = 0.0;
            }
            let concepts = (0..n).map(|i| Concept::new(format!("c{i}"), "")).collect();
            let m = FcmModel::new(concepts, w, Activation::HyperbolicTangent).unwrap();
            let s = StateVector::initial((0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect());
            (m, s)
        })
        .collect()
}

fn random_surveys(count: usize, seed: u64) -> Vec<SurveyResponse> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rating = LinguisticScale::rating();
    let influence = LinguisticScale::influence();
    (0..count)
        .map(|k| {
            let mut s = SurveyResponse::new(format!("E{k}"));
            for c in &CONCEPT_IDS[..7] {
                let t = &rating.terms()[rng.gen_range(0..5)];
                s = s.rate(c, &t.label);
            }
            for src in CONCEPT_IDS {
                for tgt in CONCEPT_IDS {
                    if src != tgt && rng.gen_bool(0.4) {
                        let t = &influence.terms()[rng.gen_range(0..5)];
                        s = s.influence(src, tgt, &t.label);
                    }
                }
            }
            s
        })
        .collect()
}

fn bench_inference(c: &mut Criterion) {
    let cfg = InferenceConfig::default();
    let mut group = c.benchmark_group("run_batch");
    for &count in &[64usize, 1024] {
        let jobs = random_jobs(count, 8, 7);
        group.bench_with_input(BenchmarkId::new("sequential", count), &jobs, |b, j| {
            b.iter(|| run_batch_sequential(black_box(j), &cfg))
        });
        group.bench_with_input(BenchmarkId::new("batch", count), &jobs, |b, j| {
            b.iter(|| run_batch(black_box(j), &cfg))
        });
    }
    group.finish();
}

fn bench_surveys(c: &mut Criterion) {
    let cfg = InferenceConfig::default();
    let pipeline = TrustPipeline::default();
    let surveys = random_surveys(512, 11);
    let mut group = c.benchmark_group("quantify_batch");
    group.bench_function("sequential", |b| {
        b.iter(|| quantify_batch_sequential(&pipeline, black_box(&surveys), &cfg))
    });
    group.bench_function("batch", |b| {
        b.iter(|| quantify_batch(&pipeline, black_box(&surveys), &cfg))
    });
    group.finish();
}

criterion_group!(benches, bench_inference, bench_surveys);
criterion_main!(benches);
