//! Batch evaluation over independent inputs.
//!
//! With the `parallel` feature (on by default) the work is spread over the
//! rayon thread pool; without it everything runs on the calling thread. The
//! `*_sequential` variants are always available, and both paths return
//! results in input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::fcm::{run_inference, FcmError, FcmModel, InferenceConfig, InferenceOutcome, StateVector};
use crate::rules::{classify, PatientRecord, Prediction, RuleError, RuleSet};
use crate::trust::{SurveyResponse, TrustError, TrustPipeline, TrustReport};

fn map_ordered<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

pub fn quantify_batch(
    pipeline: &TrustPipeline,
    surveys: &[SurveyResponse],
    config: &InferenceConfig,
) -> Vec<Result<TrustReport, TrustError>> {
    map_ordered(surveys, |s| pipeline.quantify(s, config))
}

pub fn quantify_batch_sequential(
    pipeline: &TrustPipeline,
    surveys: &[SurveyResponse],
    config: &InferenceConfig,
) -> Vec<Result<TrustReport, TrustError>> {
    surveys.iter().map(|s| pipeline.quantify(s, config)).collect()
}

pub fn run_batch(
    jobs: &[(FcmModel, StateVector)],
    config: &InferenceConfig,
) -> Vec<Result<InferenceOutcome, FcmError>> {
    map_ordered(jobs, |(m, s)| run_inference(m, s, config))
}

pub fn run_batch_sequential(
    jobs: &[(FcmModel, StateVector)],
    config: &InferenceConfig,
) -> Vec<Result<InferenceOutcome, FcmError>> {
    jobs.iter().map(|(m, s)| run_inference(m, s, config)).collect()
}

pub fn classify_batch(rules: &RuleSet, records: &[PatientRecord]) -> Vec<Result<Prediction, RuleError>> {
    map_ordered(records, |r| classify(rules, r))
}

pub fn classify_batch_sequential(
    rules: &RuleSet,
    records: &[PatientRecord],
) -> Vec<Result<Prediction, RuleError>> {
    records.iter().map(|r| classify(rules, r)).collect()
}

/// Whether batch calls fan out over threads in this build.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fcm::{Activation, Concept};

    fn jobs(count: usize) -> Vec<(FcmModel, StateVector)> {
        // deterministic pseudo-random weights
        let mut x: u64 = 0x9E37_79B9_7F4A_7C15;
        let mut next = move || {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        (0..count)
            .map(|k| {
                let n = 1 + k % 6;
                let mut w: Vec<f64> = (0..n * n).map(|_| next()).collect();
                for i in 0..n {
                    w[i * n + i] = 0.0;
                }
                let concepts = (0..n).map(|i| Concept::new(format!("x{i}"), "")).collect();
                let m = FcmModel::new(concepts, w, Activation::HyperbolicTangent).unwrap();
                let s = StateVector::initial((0..n).map(|_| next()).collect());
                (m, s)
            })
            .collect()
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let j = jobs(200);
        let cfg = InferenceConfig::default();
        assert_eq!(run_batch(&j, &cfg), run_batch_sequential(&j, &cfg));
    }
}
