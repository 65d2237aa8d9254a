//! Fuzzy cognitive maps for quantifying perceived trust in an explainable
//! classifier, plus the threshold-rule classifier whose explanations are
//! being rated.
//!
//! * [`fuzzy`]: triangular fuzzy numbers, linguistic scales, Mean-of-Maxima.
//! * [`fcm`]: map model, synchronous update, fixed-point / limit-cycle
//!   detection.
//! * [`trust`]: survey responses to trust values on the `[-1, 1]` continuum.
//! * [`rules`]: rule DSL, first-match classification and explanations.
//! * [`document`]: JSON documents and tabular exports shared by all front ends.
//! * [`batch`]: many independent evaluations at once.

pub mod batch;
pub mod document;
pub mod fcm;
pub mod fuzzy;
pub mod rules;
pub mod trust;

pub use fcm::{
    activate, run_inference, step, validate_model, Activation, Concept, FcmError, FcmModel,
    InferenceConfig, InferenceOutcome, OutcomeKind, StateVector, Violation,
};
pub use fuzzy::{
    defuzzify_mom, lookup_term, membership, FuzzyError, LabelMatch, LinguisticScale,
    TriangularFuzzyNumber,
};
pub use rules::{classify, explain, parse_rules, PatientRecord, Prediction, RuleError, RuleSet};
pub use trust::{
    build_fcm_from_survey, classify_band, quantify_trust, BandKind, SurveyResponse, TrustBand,
    TrustError, TrustPipeline, TrustReport,
};
