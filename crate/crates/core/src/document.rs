//! On-disk and on-the-wire documents.
//!
//! Every structured document is JSON with two header fields, `format_version`
//! and `kind`, followed by the kind-specific body. Floats are written with
//! the shortest representation that parses back to the same bits.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fcm::{Activation, Concept, FcmModel, InferenceOutcome, OutcomeKind, StateVector};
use crate::fuzzy::{FuzzyError, LabelMatch, LinguisticScale, TriangularFuzzyNumber};
use crate::rules::{Prediction, RuleExplanation};
use crate::trust::{BandKind, SurveyResponse, TrustReport};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format_version {found} (expected {FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("document kind is {found:?}, expected {expected:?}")]
    Kind { found: String, expected: &'static str },
    #[error("{field}: {reason}")]
    Content { field: String, reason: String },
    #[error("{field}: {source}")]
    Label {
        field: String,
        #[source]
        source: FuzzyError,
    },
}

impl DocumentError {
    fn content(field: impl Into<String>, reason: impl Into<String>) -> Self {
        DocumentError::Content {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

/// A body type with a fixed `kind` tag.
pub trait Document: Serialize + DeserializeOwned {
    const KIND: &'static str;
}

#[derive(Serialize)]
struct EnvelopeOut<'a, T> {
    format_version: u32,
    kind: &'static str,
    #[serde(flatten)]
    body: &'a T,
}

#[derive(Deserialize)]
struct Header {
    format_version: u32,
    kind: String,
}

#[derive(Deserialize)]
struct EnvelopeIn<T> {
    #[allow(dead_code)]
    format_version: u32,
    #[allow(dead_code)]
    kind: String,
    #[serde(flatten)]
    body: T,
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_document_string<T: Document>(body: &T) -> String {
    let env = EnvelopeOut {
        format_version: FORMAT_VERSION,
        kind: T::KIND,
        body,
    };
    let mut s = serde_json::to_string_pretty(&env).expect("documents always serialize");
    s.push('\n');
    s
}

pub fn from_document_str<T: Document>(text: &str) -> Result<T, DocumentError> {
    let header: Header = serde_json::from_str(text)?;
    if header.format_version != FORMAT_VERSION {
        return Err(DocumentError::Version {
            found: header.format_version,
        });
    }
    if header.kind != T::KIND {
        return Err(DocumentError::Kind {
            found: header.kind,
            expected: T::KIND,
        });
    }
    let env: EnvelopeIn<T> = serde_json::from_str(text)?;
    Ok(env.body)
}

/// Read only the `kind` tag.
pub fn document_kind(text: &str) -> Result<String, DocumentError> {
    let header: Header = serde_json::from_str(text)?;
    Ok(header.kind)
}

impl Document for SurveyResponse {
    const KIND: &'static str = "survey";
}

// ---- scales ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleTermDocument {
    pub label: String,
    pub tfn: [f64; 3],
    /// Written for readers; ignored when loading.
    #[serde(default, skip_deserializing, skip_serializing_if = "Option::is_none")]
    pub defuzzified: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleDocument {
    pub name: String,
    pub terms: Vec<ScaleTermDocument>,
}

impl Document for ScaleDocument {
    const KIND: &'static str = "scale";
}

impl ScaleDocument {
    pub fn from_scale(scale: &LinguisticScale) -> Self {
        Self {
            name: scale.name().to_string(),
            terms: scale
                .terms()
                .iter()
                .map(|t| ScaleTermDocument {
                    label: t.label.clone(),
                    tfn: t.tfn.into(),
                    defuzzified: Some(t.defuzzified),
                })
                .collect(),
        }
    }

    pub fn to_scale(&self) -> Result<LinguisticScale, FuzzyError> {
        let terms = self
            .terms
            .iter()
            .map(|t| Ok((t.label.clone(), TriangularFuzzyNumber::try_from(t.tfn)?)))
            .collect::<Result<Vec<_>, FuzzyError>>()?;
        LinguisticScale::new(self.name.clone(), terms)
    }
}

// ---- FCM models and states ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightValue {
    Number(f64),
    Label(String),
}

/// One directed edge: `source` influences `target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightEntry {
    pub source: String,
    pub target: String,
    pub weight: WeightValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    #[serde(default)]
    pub activation: Activation,
    pub concepts: Vec<Concept>,
    /// Sparse edge list; absent pairs are zero.
    #[serde(default)]
    pub weights: Vec<WeightEntry>,
}

impl Document for ModelDocument {
    const KIND: &'static str = "fcm-model";
}

impl ModelDocument {
    pub fn from_model(model: &FcmModel) -> Self {
        let n = model.len();
        let mut weights = Vec::new();
        for s in 0..n {
            for t in 0..n {
                let w = model.weight(s, t);
                if w != 0.0 {
                    weights.push(WeightEntry {
                        source: model.concepts()[s].id.clone(),
                        target: model.concepts()[t].id.clone(),
                        weight: WeightValue::Number(w),
                    });
                }
            }
        }
        Self {
            activation: model.activation(),
            concepts: model.concepts().to_vec(),
            weights,
        }
    }

    /// Resolve ids and labels into a matrix. The result is *not* checked
    /// against the model invariants; run [`crate::fcm::validate_model`] on it.
    pub fn to_model(
        &self,
        influence_scale: &LinguisticScale,
        mode: LabelMatch,
    ) -> Result<FcmModel, DocumentError> {
        let n = self.concepts.len();
        let index = |id: &str, field: String| {
            self.concepts
                .iter()
                .position(|c| c.id == id)
                .ok_or_else(|| DocumentError::content(field, format!("unknown concept {id:?}")))
        };
        let mut model =
            FcmModel::from_parts_unchecked(self.concepts.clone(), vec![0.0; n * n], self.activation);
        let mut seen = BTreeMap::new();
        for (k, e) in self.weights.iter().enumerate() {
            let s = index(&e.source, format!("weights[{k}].source"))?;
            let t = index(&e.target, format!("weights[{k}].target"))?;
            if let Some(prev) = seen.insert((s, t), k) {
                return Err(DocumentError::content(
                    format!("weights[{k}]"),
                    format!("duplicate edge {} -> {} (also weights[{prev}])", e.source, e.target),
                ));
            }
            let w = match &e.weight {
                WeightValue::Number(w) => *w,
                WeightValue::Label(l) => {
                    influence_scale
                        .lookup(l, mode)
                        .map_err(|source| DocumentError::Label {
                            field: format!("weights[{k}].weight"),
                            source,
                        })?
                        .defuzzified
                }
            };
            model.set_weight(s, t, w);
        }
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDocument {
    /// Concept id to activation.
    pub values: BTreeMap<String, f64>,
}

impl Document for StateDocument {
    const KIND: &'static str = "fcm-state";
}

impl StateDocument {
    pub fn from_state(model: &FcmModel, state: &StateVector) -> Self {
        Self {
            values: model
                .concepts()
                .iter()
                .map(|c| c.id.clone())
                .zip(state.values.iter().copied())
                .collect(),
        }
    }

    pub fn to_state(&self, model: &FcmModel) -> Result<StateVector, DocumentError> {
        for id in self.values.keys() {
            if model.index_of(id).is_none() {
                return Err(DocumentError::content(
                    format!("values.{id}"),
                    "not a concept of the model",
                ));
            }
        }
        let values = model
            .concepts()
            .iter()
            .map(|c| {
                self.values
                    .get(&c.id)
                    .copied()
                    .ok_or_else(|| DocumentError::content(format!("values.{}", c.id), "missing"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(StateVector::initial(values))
    }
}

// ---- outcomes and reports ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDocument {
    pub outcome: OutcomeKind,
    pub iterations: usize,
    pub activation: Activation,
    pub concepts: Vec<String>,
    pub final_state: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<Vec<Vec<f64>>>,
    /// One row per iteration, starting with the initial state.
    pub trace: Vec<Vec<f64>>,
}

impl Document for OutcomeDocument {
    const KIND: &'static str = "fcm-outcome";
}

impl OutcomeDocument {
    pub fn new(model: &FcmModel, outcome: &InferenceOutcome) -> Self {
        Self {
            outcome: outcome.kind,
            iterations: outcome.iterations(),
            activation: model.activation(),
            concepts: model.concepts().iter().map(|c| c.id.clone()).collect(),
            final_state: outcome.final_state().values.clone(),
            cycle: outcome
                .cycle()
                .map(|c| c.iter().map(|s| s.values.clone()).collect()),
            trace: outcome.trace.iter().map(|s| s.values.clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub expert_id: String,
    pub trust_value: f64,
    pub band: BandKind,
    pub converged: bool,
    pub outcome: OutcomeKind,
    pub iterations: usize,
    pub activation: Activation,
    pub concepts: Vec<String>,
    /// `weights[source][target]`.
    pub weights: Vec<Vec<f64>>,
    pub initial_state: Vec<f64>,
    pub final_state: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<Vec<Vec<f64>>>,
    pub trace: Vec<Vec<f64>>,
}

impl Document for ReportDocument {
    const KIND: &'static str = "trust-report";
}

impl ReportDocument {
    pub fn new(report: &TrustReport) -> Self {
        let n = report.model.len();
        let outcome = OutcomeDocument::new(&report.model, &report.outcome);
        Self {
            expert_id: report.expert_id.clone(),
            trust_value: report.trust_value,
            band: report.band.kind,
            converged: report.converged(),
            outcome: outcome.outcome,
            iterations: outcome.iterations,
            activation: outcome.activation,
            concepts: outcome.concepts,
            weights: (0..n)
                .map(|s| (0..n).map(|t| report.model.weight(s, t)).collect())
                .collect(),
            initial_state: report.initial_state.values.clone(),
            final_state: outcome.final_state,
            cycle: outcome.cycle,
            trace: outcome.trace,
        }
    }
}

/// Serialized trust report; the single path used by every front end.
pub fn report_to_string(report: &TrustReport) -> String {
    to_document_string(&ReportDocument::new(report))
}

pub const SUMMARY_HEADER: &str = "expert_id\ttrust_value\tband\toutcome\titerations";

/// One tab-separated row for cross-expert comparison tables.
pub fn summary_row(report: &TrustReport) -> String {
    format!(
        "{}\t{:.4}\t{}\t{}\t{}",
        report.expert_id,
        report.trust_value,
        report.band.kind,
        report.outcome.kind,
        report.outcome.iterations()
    )
}

pub fn summary_table<'a>(reports: impl IntoIterator<Item = &'a TrustReport>) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&summary_row(r));
        out.push('\n');
    }
    out
}

/// Trace as CSV: column `k` then one column per concept, full precision.
pub fn trace_to_csv(model: &FcmModel, trace: &[StateVector]) -> String {
    let mut out = String::from("k");
    for c in model.concepts() {
        out.push(',');
        out.push_str(&csv_field(&c.id));
    }
    out.push('\n');
    for s in trace {
        write!(out, "{}", s.iteration).expect("string write");
        for v in &s.values {
            write!(out, ",{v}").expect("string write");
        }
        out.push('\n');
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

// ---- rules ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordExplanation {
    pub record_id: String,
    pub rules: Vec<RuleExplanation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionsDocument {
    pub predictions: Vec<Prediction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanations: Option<Vec<RecordExplanation>>,
}

impl Document for PredictionsDocument {
    const KIND: &'static str = "predictions";
}

pub fn predictions_table(predictions: &[Prediction]) -> String {
    let mut out = String::from("record_id\tprediction\tfired_rule\n");
    for p in predictions {
        writeln!(
            out,
            "{}\t{}\t{}",
            p.record_id,
            p.class,
            p.fired_rule.as_deref().unwrap_or("-")
        )
        .expect("string write");
    }
    out
}

// ---- errors ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDocument {
    pub error: ErrorBody,
}

impl Document for ErrorDocument {
    const KIND: &'static str = "error";
}
