//! Command implementations. Each returns its results as values; writing
//! files and printing is left to thin wrappers so the service can reuse the
//! same code paths.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use trustmap::batch::{classify_batch, quantify_batch};
use trustmap::document::{
    from_document_str, report_to_string, summary_table, to_document_string, trace_to_csv,
    Document, ModelDocument, OutcomeDocument, PredictionsDocument, RecordExplanation,
    ScaleDocument, StateDocument,
};
use trustmap::rules::parse_records;
use trustmap::{
    explain, parse_rules, run_inference, validate_model, Activation, FcmError, FcmModel,
    InferenceConfig, InferenceOutcome, LabelMatch, LinguisticScale, PatientRecord, RuleSet,
    StateVector, SurveyResponse, TrustPipeline, TrustReport,
};

use crate::error::{survey_errors, CliError};

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Read and decode a document, naming the file in any error.
pub fn load_document<T: Document>(path: &Path) -> Result<T, CliError> {
    let text = read_text(path)?;
    from_document_str(&text).map_err(|e| CliError::from(e).context(path.display()))
}

pub fn load_scale(path: &Path) -> Result<LinguisticScale, CliError> {
    let doc: ScaleDocument = load_document(path)?;
    doc.to_scale()
        .map_err(|e| CliError::from(e).context(path.display()))
}

/// Optional knobs shared by the command line flags and the service's query string.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overrides {
    pub epsilon: Option<f64>,
    pub max_iter: Option<usize>,
    pub cycle_window: Option<usize>,
    pub activation: Option<Activation>,
    pub strict_labels: Option<bool>,
}

impl Overrides {
    pub fn config(&self, mut base: InferenceConfig) -> Result<InferenceConfig, CliError> {
        if let Some(e) = self.epsilon {
            base.epsilon = e;
        }
        if let Some(m) = self.max_iter {
            base.max_iterations = m;
            // keep the default window usable with short runs
            if self.cycle_window.is_none() {
                base.cycle_window = base.cycle_window.min(m);
            }
        }
        if let Some(w) = self.cycle_window {
            base.cycle_window = w;
        }
        base.validate()?;
        Ok(base)
    }

    pub fn label_match(&self) -> LabelMatch {
        if self.strict_labels.unwrap_or(false) {
            LabelMatch::Strict
        } else {
            LabelMatch::Normalized
        }
    }

    pub fn pipeline(&self, mut base: TrustPipeline) -> TrustPipeline {
        if let Some(a) = self.activation {
            base.activation = a;
        }
        base.label_match = self.label_match();
        base
    }
}

// ---- trust quantification ----

/// Inputs for a trust quantification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub inputs: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rules: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patients: Option<PathBuf>,
    #[serde(default)]
    pub config: InferenceConfig,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub strict_labels: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Document for RunManifest {
    const KIND: &'static str = "run-manifest";
}

impl RunManifest {
    pub fn new(inputs: Vec<PathBuf>) -> Self {
        Self {
            inputs,
            rules: None,
            patients: None,
            config: InferenceConfig::default(),
            activation: Activation::default(),
            strict_labels: false,
            output: None,
        }
    }

    /// Load a manifest file; relative paths inside it are taken relative
    /// to the manifest's own directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let mut m: RunManifest = load_document(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        m.inputs.iter_mut().for_each(fix);
        m.rules.iter_mut().for_each(fix);
        m.patients.iter_mut().for_each(fix);
        m.output.iter_mut().for_each(fix);
        m.config
            .validate()
            .map_err(|e| CliError::from(e).context(path.display()))?;
        if m.rules.is_some() != m.patients.is_some() {
            return Err(CliError::input(
                "invalid-manifest",
                format!("{}: rules and patients must be given together", path.display()),
            ));
        }
        Ok(m)
    }

    pub fn pipeline(&self, base: TrustPipeline) -> TrustPipeline {
        TrustPipeline {
            activation: self.activation,
            label_match: if self.strict_labels {
                LabelMatch::Strict
            } else {
                LabelMatch::Normalized
            },
            ..base
        }
    }
}

pub fn load_survey(path: &Path, pipeline: &TrustPipeline) -> Result<SurveyResponse, CliError> {
    let survey: SurveyResponse = load_document(path)?;
    match survey_errors(pipeline.validate(&survey)) {
        Some(e) => Err(e.context(path.display())),
        None => Ok(survey),
    }
}

#[derive(Debug)]
pub struct QuantifyOutput {
    pub reports: Vec<(PathBuf, TrustReport)>,
    pub summary: String,
}

/// Quantify every survey in the manifest. All inputs are checked before any
/// computation; the first failing file is reported, with problems in the
/// other files appended as details.
pub fn cmd_trust_quantify(
    manifest: &RunManifest,
    pipeline: &TrustPipeline,
) -> Result<QuantifyOutput, CliError> {
    if manifest.inputs.is_empty() {
        return Err(CliError::input("no-input", "no surveys given"));
    }
    manifest.config.validate()?;

    let mut surveys = Vec::new();
    let mut failures: Vec<CliError> = Vec::new();
    for path in &manifest.inputs {
        match load_survey(path, pipeline) {
            Ok(s) => surveys.push(s),
            Err(e @ CliError::Io { .. }) => return Err(e),
            Err(e) => failures.push(e),
        }
    }
    if let Some(first) = failures.first() {
        let mut details: Vec<String> = first.details().to_vec();
        details.extend(failures[1..].iter().map(ToString::to_string));
        return Err(CliError::input(first.code(), first.to_string()).with_details(details));
    }

    let reports = quantify_batch(pipeline, &surveys, &manifest.config)
        .into_iter()
        .zip(&manifest.inputs)
        .map(|(r, p)| r.map(|r| (p.clone(), r)).map_err(|e| CliError::from(e).context(p.display())))
        .collect::<Result<Vec<_>, _>>()?;
    let summary = summary_table(reports.iter().map(|(_, r)| r));
    Ok(QuantifyOutput { reports, summary })
}

/// `<stem>.report.json` per survey plus `summary.tsv`.
pub fn write_quantify_output(out: &QuantifyOutput, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut names = BTreeSet::new();
    let mut targets = Vec::new();
    for (src, _) in &out.reports {
        let stem = src
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "survey".into());
        if !names.insert(stem.clone()) {
            return Err(CliError::input(
                "duplicate-output",
                format!("two inputs would both write {stem}.report.json; rename one of them"),
            ));
        }
        targets.push(dir.join(format!("{stem}.report.json")));
    }
    ensure_dir(dir)?;
    for (path, (_, report)) in targets.iter().zip(&out.reports) {
        write_text(path, &report_to_string(report))?;
    }
    let summary = dir.join("summary.tsv");
    write_text(&summary, &out.summary)?;
    targets.push(summary);
    Ok(targets)
}

// ---- FCM inference ----

/// Resolve a model document and refuse it if it breaks any invariant.
pub fn model_from_document(
    doc: &ModelDocument,
    influence_scale: &LinguisticScale,
    mode: LabelMatch,
) -> Result<FcmModel, CliError> {
    let model = doc.to_model(influence_scale, mode)?;
    let violations = validate_model(&model);
    if violations.is_empty() {
        Ok(model)
    } else {
        Err(FcmError::InvalidModel(violations).into())
    }
}

pub fn cmd_fcm_run(
    model_path: &Path,
    state_path: &Path,
    overrides: &Overrides,
    influence_scale: &LinguisticScale,
) -> Result<(FcmModel, InferenceOutcome), CliError> {
    let config = overrides.config(InferenceConfig::default())?;
    let doc: ModelDocument = load_document(model_path)?;
    let mut model = model_from_document(&doc, influence_scale, overrides.label_match())
        .map_err(|e| e.context(model_path.display()))?;
    if let Some(a) = overrides.activation {
        model = model.with_activation(a);
    }
    let state: StateDocument = load_document(state_path)?;
    let initial = state
        .to_state(&model)
        .map_err(|e| CliError::from(e).context(state_path.display()))?;
    let outcome = run_inference(&model, &initial, &config)
        .map_err(|e| CliError::from(e).context(state_path.display()))?;
    Ok((model, outcome))
}

/// Outcome line, iteration count and the terminal state at full precision.
pub fn fcm_summary(model: &FcmModel, outcome: &InferenceOutcome) -> String {
    let mut s = format!(
        "outcome\t{}\niterations\t{}\n",
        outcome.kind,
        outcome.iterations()
    );
    for (c, v) in model.concepts().iter().zip(&outcome.final_state().values) {
        writeln!(s, "{}\t{v}", c.id).expect("string write");
    }
    s
}

/// `trace.csv` and `outcome.json`.
pub fn write_fcm_output(
    model: &FcmModel,
    outcome: &InferenceOutcome,
    dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    ensure_dir(dir)?;
    let trace = dir.join("trace.csv");
    write_text(&trace, &trace_to_csv(model, &outcome.trace))?;
    let doc = dir.join("outcome.json");
    write_text(&doc, &to_document_string(&OutcomeDocument::new(model, outcome)))?;
    Ok(vec![trace, doc])
}

pub fn step_state(model: &FcmModel, state: &StateVector) -> Result<StateVector, CliError> {
    Ok(trustmap::step(model, state)?)
}

// ---- rules ----

pub fn classify_records(
    rules: &RuleSet,
    records: &[PatientRecord],
    with_explanations: bool,
) -> Result<PredictionsDocument, CliError> {
    let predictions = classify_batch(rules, records)
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let explanations = if with_explanations {
        Some(
            records
                .iter()
                .map(|r| {
                    Ok(RecordExplanation {
                        record_id: r.record_id.clone(),
                        rules: explain(rules, r)?,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?,
        )
    } else {
        None
    };
    Ok(PredictionsDocument {
        predictions,
        explanations,
    })
}

pub fn cmd_rules_classify(
    rules_path: &Path,
    patients_path: &Path,
    with_explanations: bool,
) -> Result<PredictionsDocument, CliError> {
    let rules = parse_rules(&read_text(rules_path)?)
        .map_err(|e| CliError::from(e).context(rules_path.display()))?;
    let records = parse_records(read_text(patients_path)?.as_bytes())
        .map_err(|e| CliError::from(e).context(patients_path.display()))?;
    classify_records(&rules, &records, with_explanations)
}

/// Human-readable per-condition report.
pub fn explanation_text(doc: &PredictionsDocument) -> String {
    let mut out = String::new();
    let Some(expl) = &doc.explanations else {
        return out;
    };
    for (rec, pred) in expl.iter().zip(&doc.predictions) {
        writeln!(out, "{}: {}", rec.record_id, pred.class).expect("string write");
        for rule in &rec.rules {
            let verdict = if rule.fired { "fired" } else { "not satisfied" };
            writeln!(out, "  rule {} -> {}: {verdict}", rule.rule_id, rule.class).expect("string write");
            for c in &rule.conditions {
                writeln!(
                    out,
                    "    [{}] {} = {} {} {}",
                    if c.holds { "x" } else { " " },
                    c.feature,
                    c.actual,
                    c.comparator.symbol(),
                    c.threshold
                )
                .expect("string write");
            }
        }
        if pred.fired_rule.is_none() {
            writeln!(out, "  no rule fired; default class applies").expect("string write");
        }
    }
    out
}

pub fn write_predictions(doc: &PredictionsDocument, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    ensure_dir(dir)?;
    let json = dir.join("predictions.json");
    write_text(&json, &to_document_string(doc))?;
    let tsv = dir.join("predictions.tsv");
    write_text(&tsv, &trustmap::document::predictions_table(&doc.predictions))?;
    Ok(vec![json, tsv])
}
