//! Fuzzy cognitive map model and the synchronous reasoning iteration.
//!
//! Every concept is recomputed each step from the weighted activations of
//! all *other* concepts:
//!
//! ```text
//! next[i] = f( sum_{j != i} state[j] * w[j][i] )
//! ```
//!
//! There is no self-memory term and no clamping of input concepts. Weights
//! are stored row-major with the *source* concept as the row.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FcmError {
    #[error("dimension mismatch: model has {expected} concepts, state has {actual} values")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid inference config: {0}")]
    InvalidConfig(String),
    #[error("invalid model: {}", join_violations(.0))]
    InvalidModel(Vec<Violation>),
    #[error("initial activation of concept {concept:?} is {value}, outside [-1, 1]")]
    InitialOutOfRange { concept: String, value: f64 },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Activation {
    #[default]
    #[serde(rename = "tanh", alias = "hyperbolic-tangent")]
    HyperbolicTangent,
    #[serde(rename = "sigmoid")]
    Sigmoid,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::HyperbolicTangent => x.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::HyperbolicTangent => "tanh",
            Activation::Sigmoid => "sigmoid",
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tanh" | "hyperbolic-tangent" => Ok(Activation::HyperbolicTangent),
            "sigmoid" => Ok(Activation::Sigmoid),
            other => Err(format!("unknown activation {other:?} (expected tanh or sigmoid)")),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn activate(f: Activation, x: f64) -> f64 {
    f.apply(x)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub id: String,
    #[serde(default)]
    pub label: String,
}

impl Concept {
    pub fn new(id: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
        }
    }
}

/// A single broken model invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "violation", rename_all = "kebab-case")]
pub enum Violation {
    Empty,
    WrongMatrixSize { expected: usize, actual: usize },
    DuplicateConceptId { id: String },
    EmptyConceptId { index: usize },
    NonzeroDiagonal { index: usize, id: String, weight: f64 },
    WeightOutOfRange { source: String, target: String, weight: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => f.write_str("model has no concepts"),
            Violation::WrongMatrixSize { expected, actual } => {
                write!(f, "weight matrix has {actual} cells, expected {expected}")
            }
            Violation::DuplicateConceptId { id } => write!(f, "duplicate concept id {id:?}"),
            Violation::EmptyConceptId { index } => write!(f, "empty concept id at concept {index}"),
            Violation::NonzeroDiagonal { index, id, weight } => {
                write!(f, "nonzero diagonal at concept {index} ({id}): {weight}")
            }
            Violation::WeightOutOfRange {
                source,
                target,
                weight,
            } => write!(f, "weight out of [-1,1] at {source} -> {target}: {weight}"),
        }
    }
}

/// Concepts, an `N x N` source-major weight matrix and an activation function.
///
/// Construction through [`FcmModel::new`] enforces the invariants;
/// [`FcmModel::from_parts_unchecked`] exists so that files can be loaded and
/// then reported on by [`validate_model`].
#[derive(Debug, Clone, PartialEq)]
pub struct FcmModel {
    concepts: Vec<Concept>,
    weights: Vec<f64>,
    activation: Activation,
}

impl FcmModel {
    pub fn new(
        concepts: Vec<Concept>,
        weights: Vec<f64>,
        activation: Activation,
    ) -> Result<Self, FcmError> {
        let model = Self::from_parts_unchecked(concepts, weights, activation);
        let violations = validate_model(&model);
        if violations.is_empty() {
            Ok(model)
        } else {
            Err(FcmError::InvalidModel(violations))
        }
    }

    pub fn from_parts_unchecked(
        concepts: Vec<Concept>,
        weights: Vec<f64>,
        activation: Activation,
    ) -> Self {
        Self {
            concepts,
            weights,
            activation,
        }
    }

    /// Model with `n` concepts named `c0..c{n-1}` and an all-zero matrix.
    pub fn zeros(n: usize, activation: Activation) -> Self {
        let concepts = (0..n).map(|i| Concept::new(format!("c{i}"), "")).collect();
        Self::from_parts_unchecked(concepts, vec![0.0; n * n], activation)
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.concepts.iter().position(|c| c.id == id)
    }

    /// Influence of `source` on `target`.
    pub fn weight(&self, source: usize, target: usize) -> f64 {
        self.weights[source * self.len() + target]
    }

    pub fn set_weight(&mut self, source: usize, target: usize, w: f64) {
        let n = self.len();
        self.weights[source * n + target] = w;
    }

    /// Row-major weights, `weights()[source * n + target]`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weighted input to `target` from every other concept, summed in
    /// ascending source order.
    fn net_input(&self, values: &[f64], target: usize) -> f64 {
        let n = self.len();
        let mut sum = 0.0;
        for (source, &a) in values.iter().enumerate() {
            if source != target {
                sum += a * self.weights[source * n + target];
            }
        }
        sum
    }
}

/// List every broken invariant; empty means the model is valid.
pub fn validate_model(model: &FcmModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = model.concepts.len();
    if n == 0 {
        out.push(Violation::Empty);
    }
    for (i, c) in model.concepts.iter().enumerate() {
        if c.id.trim().is_empty() {
            out.push(Violation::EmptyConceptId { index: i });
        }
        if model.concepts[..i].iter().any(|p| p.id == c.id) {
            out.push(Violation::DuplicateConceptId { id: c.id.clone() });
        }
    }
    if model.weights.len() != n * n {
        out.push(Violation::WrongMatrixSize {
            expected: n * n,
            actual: model.weights.len(),
        });
        return out;
    }
    for s in 0..n {
        for t in 0..n {
            let w = model.weights[s * n + t];
            if s == t {
                if w != 0.0 {
                    out.push(Violation::NonzeroDiagonal {
                        index: s,
                        id: model.concepts[s].id.clone(),
                        weight: w,
                    });
                }
            } else if !(-1.0..=1.0).contains(&w) {
                out.push(Violation::WeightOutOfRange {
                    source: model.concepts[s].id.clone(),
                    target: model.concepts[t].id.clone(),
                    weight: w,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub values: Vec<f64>,
    pub iteration: usize,
}

impl StateVector {
    pub fn initial(values: Vec<f64>) -> Self {
        Self {
            values,
            iteration: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InferenceConfig {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub cycle_window: usize,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-5,
            max_iterations: 100,
            cycle_window: 50,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<(), FcmError> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(FcmError::InvalidConfig(format!(
                "epsilon must be in (0, 1), got {}",
                self.epsilon
            )));
        }
        if self.max_iterations == 0 {
            return Err(FcmError::InvalidConfig("max_iterations must be positive".into()));
        }
        if self.cycle_window == 0 || self.cycle_window > self.max_iterations {
            return Err(FcmError::InvalidConfig(format!(
                "cycle_window must be in 1..={}, got {}",
                self.max_iterations, self.cycle_window
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OutcomeKind {
    FixedPoint,
    LimitCycle { period: usize },
    NonConvergent,
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutcomeKind::FixedPoint => f.write_str("fixed-point"),
            OutcomeKind::LimitCycle { period } => write!(f, "limit-cycle(period={period})"),
            OutcomeKind::NonConvergent => f.write_str("non-convergent"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceOutcome {
    pub kind: OutcomeKind,
    /// Every state from the initial vector (`k = 0`) to termination.
    pub trace: Vec<StateVector>,
}

impl InferenceOutcome {
    pub fn final_state(&self) -> &StateVector {
        self.trace.last().expect("trace always holds the initial state")
    }

    /// Number of steps taken.
    pub fn iterations(&self) -> usize {
        self.final_state().iteration
    }

    /// Steps that moved the state; the confirming step of a fixed point is
    /// not counted.
    pub fn productive_iterations(&self) -> usize {
        match self.kind {
            OutcomeKind::FixedPoint => self.iterations().saturating_sub(1),
            _ => self.iterations(),
        }
    }

    /// The repeating states of a limit cycle, oldest first.
    pub fn cycle(&self) -> Option<&[StateVector]> {
        match self.kind {
            OutcomeKind::LimitCycle { period } => Some(&self.trace[self.trace.len() - period..]),
            _ => None,
        }
    }
}

/// One synchronous update. `state` is left untouched.
pub fn step(model: &FcmModel, state: &StateVector) -> Result<StateVector, FcmError> {
    if state.len() != model.len() {
        return Err(FcmError::DimensionMismatch {
            expected: model.len(),
            actual: state.len(),
        });
    }
    Ok(step_unchecked(model, state))
}

fn step_unchecked(model: &FcmModel, state: &StateVector) -> StateVector {
    let f = model.activation;
    let values = (0..model.len())
        .map(|i| f.apply(model.net_input(&state.values, i)))
        .collect();
    StateVector {
        values,
        iteration: state.iteration + 1,
    }
}

fn within(a: &StateVector, b: &StateVector, epsilon: f64) -> bool {
    a.values
        .iter()
        .zip(&b.values)
        .all(|(x, y)| (x - y).abs() < epsilon)
}

/// Smallest period `p` in `2..=window` such that the last `p` states repeat
/// the `p` states before them, componentwise within `epsilon`.
fn detect_cycle(trace: &[StateVector], window: usize, epsilon: f64) -> Option<usize> {
    let len = trace.len();
    (2..=window)
        .take_while(|p| 2 * p <= len)
        .find(|&p| (0..p).all(|q| within(&trace[len - 1 - q], &trace[len - 1 - q - p], epsilon)))
}

/// Iterate [`step`] from `initial` until a fixed point, a limit cycle, or
/// `max_iterations` steps.
pub fn run_inference(
    model: &FcmModel,
    initial: &StateVector,
    config: &InferenceConfig,
) -> Result<InferenceOutcome, FcmError> {
    config.validate()?;
    let violations = validate_model(model);
    if !violations.is_empty() {
        return Err(FcmError::InvalidModel(violations));
    }
    if initial.len() != model.len() {
        return Err(FcmError::DimensionMismatch {
            expected: model.len(),
            actual: initial.len(),
        });
    }
    if let Some((i, &v)) = initial
        .values
        .iter()
        .enumerate()
        .find(|(_, v)| !(-1.0..=1.0).contains(*v))
    {
        return Err(FcmError::InitialOutOfRange {
            concept: model.concepts[i].id.clone(),
            value: v,
        });
    }

    let mut trace = Vec::with_capacity(config.max_iterations + 1);
    trace.push(StateVector::initial(initial.values.clone()));
    for _ in 0..config.max_iterations {
        let prev = trace.last().expect("non-empty");
        let next = step_unchecked(model, prev);
        let settled = next.max_abs_diff(prev) < config.epsilon;
        trace.push(next);
        if settled {
            return Ok(InferenceOutcome {
                kind: OutcomeKind::FixedPoint,
                trace,
            });
        }
        if let Some(period) = detect_cycle(&trace, config.cycle_window, config.epsilon) {
            return Ok(InferenceOutcome {
                kind: OutcomeKind::LimitCycle { period },
                trace,
            });
        }
    }
    Ok(InferenceOutcome {
        kind: OutcomeKind::NonConvergent,
        trace,
    })
}
