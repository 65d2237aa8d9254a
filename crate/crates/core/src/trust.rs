//! Survey-to-trust pipeline.
//!
//! One expert's survey gives linguistic ratings for the seven explanation
//! satisfaction attributes and linguistic influence strengths between the
//! attributes and the trust concept. The ratings become initial activations,
//! the influences become the weight matrix, and the terminal activation of
//! the trust concept is placed on the `[-1, 1]` trust continuum.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fcm::{
    run_inference, Activation, Concept, FcmError, FcmModel, InferenceConfig, InferenceOutcome,
    OutcomeKind, StateVector,
};
use crate::fuzzy::{FuzzyError, LabelMatch, LinguisticScale};

pub const TRUST_ID: &str = "TRUST";

/// Concept ids in matrix order. The trust concept is always last.
pub const CONCEPT_IDS: [&str; 8] = ["C1", "C2", "C3", "C4", "C5", "C6", "C7", TRUST_ID];

pub const CONCEPT_LABELS: [&str; 8] = [
    "Understandability",
    "Sufficiency of details",
    "Completeness",
    "Feeling of satisfaction",
    "Accuracy",
    "Usability",
    "Functionality",
    "Trust",
];

pub const ATTRIBUTE_COUNT: usize = 7;
pub const TRUST_INDEX: usize = 7;

pub const DEFAULT_IGNORANCE_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrustError {
    #[error("{field}: {source}")]
    Label {
        field: String,
        #[source]
        source: FuzzyError,
    },
    #[error("malformed survey: {field}: {reason}")]
    MalformedSurvey { field: String, reason: String },
    #[error("trust value {0} is outside [-1, 1]")]
    OutOfRange(f64),
    #[error(transparent)]
    Fcm(#[from] FcmError),
}

impl TrustError {
    fn malformed(field: impl Into<String>, reason: impl Into<String>) -> Self {
        TrustError::MalformedSurvey {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfluenceEntry {
    pub source: String,
    pub target: String,
    pub label: String,
}

/// Raw answers of one expert.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyResponse {
    pub expert_id: String,
    /// Attribute id (`C1`..`C7`) to rating-scale label.
    pub ratings: BTreeMap<String, String>,
    /// Sparse; an absent pair means "No influence".
    #[serde(default)]
    pub influences: Vec<InfluenceEntry>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
    /// Opaque editor state (canvas layout and the like), carried through
    /// unchanged and never interpreted here.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub studio: Option<serde_json::Value>,
}

impl SurveyResponse {
    pub fn new(expert_id: impl Into<String>) -> Self {
        Self {
            expert_id: expert_id.into(),
            ratings: BTreeMap::new(),
            influences: Vec::new(),
            metadata: BTreeMap::new(),
            studio: None,
        }
    }

    pub fn rate(mut self, concept: &str, label: &str) -> Self {
        self.ratings.insert(concept.to_string(), label.to_string());
        self
    }

    pub fn influence(mut self, source: &str, target: &str, label: &str) -> Self {
        self.influences.push(InfluenceEntry {
            source: source.to_string(),
            target: target.to_string(),
            label: label.to_string(),
        });
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandKind {
    Distrust,
    LeaningDistrust,
    Ignorance,
    LeaningTrust,
    Trust,
}

impl fmt::Display for BandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BandKind::Distrust => "distrust",
            BandKind::LeaningDistrust => "leaning-distrust",
            BandKind::Ignorance => "ignorance",
            BandKind::LeaningTrust => "leaning-trust",
            BandKind::Trust => "trust",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustBand {
    pub kind: BandKind,
    pub value: f64,
}

/// Place `value` on the trust continuum with the default ignorance tolerance.
pub fn classify_band(value: f64) -> Result<TrustBand, TrustError> {
    classify_band_with(value, DEFAULT_IGNORANCE_EPSILON)
}

/// Thresholds at `±0.5` are strict: exactly `0.5` is leaning trust, not trust.
pub fn classify_band_with(value: f64, ignorance_epsilon: f64) -> Result<TrustBand, TrustError> {
    if !(-1.0..=1.0).contains(&value) {
        return Err(TrustError::OutOfRange(value));
    }
    let kind = if value > 0.5 {
        BandKind::Trust
    } else if value < -0.5 {
        BandKind::Distrust
    } else if value.abs() <= ignorance_epsilon {
        BandKind::Ignorance
    } else if value > 0.0 {
        BandKind::LeaningTrust
    } else {
        BandKind::LeaningDistrust
    };
    Ok(TrustBand { kind, value })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrustReport {
    pub expert_id: String,
    pub trust_value: f64,
    pub band: TrustBand,
    pub outcome: InferenceOutcome,
    pub model: FcmModel,
    pub initial_state: StateVector,
}

impl TrustReport {
    pub fn converged(&self) -> bool {
        self.outcome.kind != OutcomeKind::NonConvergent
    }
}

/// Scales and knobs used to turn surveys into maps.
#[derive(Debug, Clone)]
pub struct TrustPipeline {
    pub rating_scale: LinguisticScale,
    pub influence_scale: LinguisticScale,
    pub label_match: LabelMatch,
    pub activation: Activation,
    /// Activation of the trust concept before the first step.
    pub initial_trust: f64,
    pub ignorance_epsilon: f64,
}

impl Default for TrustPipeline {
    fn default() -> Self {
        Self {
            rating_scale: LinguisticScale::rating(),
            influence_scale: LinguisticScale::influence(),
            label_match: LabelMatch::Normalized,
            activation: Activation::HyperbolicTangent,
            initial_trust: 0.0,
            ignorance_epsilon: DEFAULT_IGNORANCE_EPSILON,
        }
    }
}

fn concept_index(id: &str) -> Option<usize> {
    CONCEPT_IDS.iter().position(|c| *c == id)
}

impl TrustPipeline {
    /// Every problem with the survey, in document order. Empty means valid.
    pub fn validate(&self, survey: &SurveyResponse) -> Vec<TrustError> {
        let mut errs = Vec::new();
        if survey.expert_id.trim().is_empty() {
            errs.push(TrustError::malformed("expert_id", "must not be empty"));
        }
        for id in &CONCEPT_IDS[..ATTRIBUTE_COUNT] {
            if !survey.ratings.contains_key(*id) {
                errs.push(TrustError::malformed(format!("ratings.{id}"), "missing rating"));
            }
        }
        for (id, label) in &survey.ratings {
            match concept_index(id) {
                Some(i) if i < ATTRIBUTE_COUNT => {
                    if let Err(source) = self.rating_scale.lookup(label, self.label_match) {
                        errs.push(TrustError::Label {
                            field: format!("ratings.{id}"),
                            source,
                        });
                    }
                }
                Some(_) => errs.push(TrustError::malformed(
                    format!("ratings.{id}"),
                    "the trust concept is not rated",
                )),
                None => errs.push(TrustError::malformed(
                    format!("ratings.{id}"),
                    "unknown concept (expected C1..C7)",
                )),
            }
        }
        let mut seen = BTreeMap::new();
        for (n, e) in survey.influences.iter().enumerate() {
            let field = format!("influences[{n}]");
            let src = concept_index(&e.source);
            let tgt = concept_index(&e.target);
            if src.is_none() {
                errs.push(TrustError::malformed(
                    format!("{field}.source"),
                    format!("unknown concept {:?}", e.source),
                ));
            }
            if tgt.is_none() {
                errs.push(TrustError::malformed(
                    format!("{field}.target"),
                    format!("unknown concept {:?}", e.target),
                ));
            }
            if let (Some(s), Some(t)) = (src, tgt) {
                if s == t {
                    errs.push(TrustError::malformed(
                        field.clone(),
                        format!("self-influence {} -> {} is not allowed", e.source, e.target),
                    ));
                } else if let Some(prev) = seen.insert((s, t), n) {
                    errs.push(TrustError::malformed(
                        field.clone(),
                        format!(
                            "duplicate influence {} -> {} (first given at influences[{prev}])",
                            e.source, e.target
                        ),
                    ));
                }
            }
            if let Err(source) = self.influence_scale.lookup(&e.label, self.label_match) {
                errs.push(TrustError::Label {
                    field: format!("{field}.label"),
                    source,
                });
            }
        }
        errs
    }

    /// Eight-concept map (C1..C7, TRUST) and its initial state.
    pub fn build_fcm(&self, survey: &SurveyResponse) -> Result<(FcmModel, StateVector), TrustError> {
        if let Some(first) = self.validate(survey).into_iter().next() {
            return Err(first);
        }
        let n = CONCEPT_IDS.len();
        let mut initial = vec![0.0; n];
        for (i, id) in CONCEPT_IDS[..ATTRIBUTE_COUNT].iter().enumerate() {
            let label = &survey.ratings[*id];
            initial[i] = self
                .rating_scale
                .lookup(label, self.label_match)
                .expect("validated")
                .defuzzified;
        }
        initial[TRUST_INDEX] = self.initial_trust;

        let concepts = CONCEPT_IDS
            .iter()
            .zip(CONCEPT_LABELS)
            .map(|(id, label)| Concept::new(*id, label))
            .collect();
        let mut model = FcmModel::new(concepts, vec![0.0; n * n], self.activation)?;
        for e in &survey.influences {
            let s = concept_index(&e.source).expect("validated");
            let t = concept_index(&e.target).expect("validated");
            let w = self
                .influence_scale
                .lookup(&e.label, self.label_match)
                .expect("validated")
                .defuzzified;
            model.set_weight(s, t, w);
        }
        let violations = crate::fcm::validate_model(&model);
        if !violations.is_empty() {
            // Only reachable with a custom influence scale whose peaks leave [-1, 1].
            return Err(FcmError::InvalidModel(violations).into());
        }
        Ok((model, StateVector::initial(initial)))
    }

    pub fn quantify(
        &self,
        survey: &SurveyResponse,
        config: &InferenceConfig,
    ) -> Result<TrustReport, TrustError> {
        let (model, initial_state) = self.build_fcm(survey)?;
        let outcome = run_inference(&model, &initial_state, config)?;
        let trust_value = outcome.final_state().values[TRUST_INDEX];
        let band = classify_band_with(trust_value, self.ignorance_epsilon)?;
        Ok(TrustReport {
            expert_id: survey.expert_id.clone(),
            trust_value,
            band,
            outcome,
            model,
            initial_state,
        })
    }
}

/// [`TrustPipeline::build_fcm`] with the built-in scales.
pub fn build_fcm_from_survey(survey: &SurveyResponse) -> Result<(FcmModel, StateVector), TrustError> {
    TrustPipeline::default().build_fcm(survey)
}

/// [`TrustPipeline::quantify`] with the built-in scales.
pub fn quantify_trust(survey: &SurveyResponse, config: &InferenceConfig) -> Result<TrustReport, TrustError> {
    TrustPipeline::default().quantify(survey, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    const RATINGS: [&str; 5] = [
        "I disagree strongly",
        "I disagree somewhat",
        "I'm neutral about it",
        "I agree somewhat",
        "I agree strongly",
    ];

    fn all_rated(label: &str) -> SurveyResponse {
        CONCEPT_IDS[..7]
            .iter()
            .fold(SurveyResponse::new("t"), |s, c| s.rate(c, label))
    }

    // ME3 column of the satisfaction-ratings table.
    fn me3() -> SurveyResponse {
        SurveyResponse::new("ME3")
            .rate("C1", "I agree strongly")
            .rate("C2", "I agree somewhat")
            .rate("C3", "I agree somewhat")
            .rate("C4", "I agree strongly")
            .rate("C5", "I agree somewhat")
            .rate("C6", "I agree somewhat")
            .rate("C7", "I agree strongly")
    }

    #[test]
    fn ratings_become_initial_activations() {
        let (model, init) = build_fcm_from_survey(&me3()).unwrap();
        assert_eq!(init.values[0], 1.0);
        assert_eq!(init.values, vec![1.0, 0.75, 0.75, 1.0, 0.75, 0.75, 1.0, 0.0]);
        assert_eq!(model.len(), 8);
        assert_eq!(model.activation(), Activation::HyperbolicTangent);
        assert!(model.weights().iter().all(|w| *w == 0.0));

        let me1_c5 = all_rated("I agree somewhat").rate("C5", "I disagree strongly");
        let (_, init) = build_fcm_from_survey(&me1_c5).unwrap();
        assert_eq!(init.values[4], 0.0);
    }

    #[test]
    fn influences_fill_source_major_cells() {
        let s = me3()
            .influence("C2", "C1", "Directly high")
            .influence("C5", "TRUST", "Inversely low");
        let (m, _) = build_fcm_from_survey(&s).unwrap();
        assert_eq!(m.weight(1, 0), 1.0);
        assert_eq!(m.weight(0, 1), 0.0);
        assert_eq!(m.weight(4, TRUST_INDEX), -0.5);
    }

    #[test]
    fn malformed_surveys_are_rejected_with_field_names() {
        let mut missing = me3();
        missing.ratings.remove("C4");
        let err = build_fcm_from_survey(&missing).unwrap_err();
        assert_eq!(err.to_string(), "malformed survey: ratings.C4: missing rating");

        let selfie = me3().influence("C4", "C4", "Directly low");
        assert!(matches!(
            build_fcm_from_survey(&selfie),
            Err(TrustError::MalformedSurvey { field, .. }) if field == "influences[0]"
        ));
        let trust_self = me3().influence("TRUST", "TRUST", "Directly low");
        assert!(build_fcm_from_survey(&trust_self).is_err());

        let bad_label = me3().rate("C2", "Agree a lot");
        let err = build_fcm_from_survey(&bad_label).unwrap_err();
        assert!(err.to_string().contains("ratings.C2"), "{err}");
        assert!(err.to_string().contains("Agree a lot"), "{err}");

        let dup = me3()
            .influence("C1", "C2", "Directly low")
            .influence("C1", "C2", "Directly high");
        assert!(build_fcm_from_survey(&dup).is_err());

        let unknown = me3().influence("C9", "C2", "Directly low");
        let errs = TrustPipeline::default().validate(&unknown);
        assert_eq!(errs.len(), 1);
        assert!(errs[0].to_string().contains("influences[0].source"));

        let rated_trust = me3().rate("TRUST", "I agree strongly");
        assert!(build_fcm_from_survey(&rated_trust).is_err());
    }

    #[test]
    fn strict_mode_rejects_apostrophe_variant() {
        let s = all_rated("I\u{2019}m neutral about it");
        assert!(build_fcm_from_survey(&s).is_ok());
        let strict = TrustPipeline {
            label_match: LabelMatch::Strict,
            ..Default::default()
        };
        assert!(strict.build_fcm(&s).is_err());
    }

    #[test]
    fn band_examples() {
        assert_eq!(classify_band(0.8079).unwrap().kind, BandKind::Trust);
        assert_eq!(classify_band(-0.7645).unwrap().kind, BandKind::Distrust);
        assert_eq!(classify_band(0.9992).unwrap().kind, BandKind::Trust);
        assert_eq!(classify_band(0.0).unwrap().kind, BandKind::Ignorance);
        assert_eq!(classify_band(0.3).unwrap().kind, BandKind::LeaningTrust);
        assert_eq!(classify_band(0.5).unwrap().kind, BandKind::LeaningTrust);
        assert_eq!(classify_band(-0.5).unwrap().kind, BandKind::LeaningDistrust);
        assert_eq!(classify_band(1e-6).unwrap().kind, BandKind::Ignorance);
        assert_eq!(classify_band(-2e-6).unwrap().kind, BandKind::LeaningDistrust);
        assert_eq!(classify_band(1.0).unwrap().kind, BandKind::Trust);
        assert_eq!(classify_band(-1.0).unwrap().kind, BandKind::Distrust);
        assert!(matches!(classify_band(1.01), Err(TrustError::OutOfRange(_))));
        assert!(classify_band(f64::NAN).is_err());
    }

    #[test]
    fn band_partition_is_symmetric() {
        let mirror = |k: BandKind| match k {
            BandKind::Trust => BandKind::Distrust,
            BandKind::Distrust => BandKind::Trust,
            BandKind::LeaningTrust => BandKind::LeaningDistrust,
            BandKind::LeaningDistrust => BandKind::LeaningTrust,
            BandKind::Ignorance => BandKind::Ignorance,
        };
        for i in 0..=2000 {
            let v = -1.0 + i as f64 / 1000.0;
            let a = classify_band(v).unwrap().kind;
            let b = classify_band(-v).unwrap().kind;
            assert_eq!(b, mirror(a), "v = {v}");
        }
    }

    #[test]
    fn no_coupling_means_zero_trust() {
        let cfg = InferenceConfig::default();
        let r = quantify_trust(&all_rated("I agree strongly"), &cfg).unwrap();
        assert_eq!(r.trust_value, 0.0);
        assert_eq!(r.band.kind, BandKind::Ignorance);
        assert_eq!(r.outcome.kind, OutcomeKind::FixedPoint);
        assert_eq!(r.trust_value, r.outcome.final_state().values[TRUST_INDEX]);
    }

    // Independent evaluation for the single C1 -> TRUST path: TRUST picks up
    // tanh(A_C1) after one step, then C1 has decayed to tanh(0) = 0, so the
    // trust concept follows it to zero on the next step.
    #[test]
    fn single_direct_path_oracle() {
        let s = all_rated("I'm neutral about it")
            .rate("C1", "I agree strongly")
            .influence("C1", "TRUST", "Directly high");
        let r = quantify_trust(&s, &InferenceConfig::default()).unwrap();
        let t = &r.outcome.trace;
        assert!((t[1].values[TRUST_INDEX] - 0.761_594_155_955_764_9).abs() < 1e-15);
        assert_eq!(t[1].values[0], 0.0);
        assert_eq!(t[2].values[TRUST_INDEX], 0.0);
        assert_eq!(r.outcome.kind, OutcomeKind::FixedPoint);
        assert_eq!(r.outcome.iterations(), 3);
        assert_eq!(r.trust_value, 0.0);
    }

    #[test]
    fn raising_source_rating_never_lowers_trust() {
        let mut last = f64::NEG_INFINITY;
        for label in RATINGS {
            let s = all_rated("I'm neutral about it")
                .rate("C1", label)
                .influence("C1", "TRUST", "Directly high");
            let r = quantify_trust(&s, &InferenceConfig::default()).unwrap();
            assert!(r.trust_value >= last);
            last = r.trust_value;
        }
    }

    #[test]
    fn custom_initial_trust_is_used() {
        let p = TrustPipeline {
            initial_trust: 0.4,
            ..Default::default()
        };
        let (_, init) = p.build_fcm(&me3()).unwrap();
        assert_eq!(init.values[TRUST_INDEX], 0.4);
    }
}
