//! Triangular fuzzy numbers and the linguistic scales used to elicit ratings
//! and influence strengths.
//!
//! A [`LinguisticScale`] is plain data: the two built-in scales are provided
//! as constructors, and any other scale can be loaded from a scale document
//! (see [`crate::document::ScaleDocument`]). Defuzzified values are always
//! recomputed from the membership triple, never trusted from input.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuzzyError {
    #[error("invalid triangular fuzzy number ({a}, {b}, {c}): bounds must be finite with a <= b <= c")]
    InvalidTriangle { a: f64, b: f64, c: f64 },
    #[error("duplicate label {label:?} in scale {scale:?}")]
    DuplicateLabel { label: String, scale: String },
    #[error("scale {0:?} has no terms")]
    EmptyScale(String),
    #[error("unknown label {label:?} for scale {scale:?}{}", suggest(.candidates))]
    UnknownLabel {
        label: String,
        scale: String,
        candidates: Vec<String>,
    },
}

fn suggest(candidates: &[String]) -> String {
    if candidates.is_empty() {
        String::new()
    } else {
        let quoted: Vec<String> = candidates.iter().map(|c| format!("{c:?}")).collect();
        format!(" (did you mean {}?)", quoted.join(", "))
    }
}

/// Triangular fuzzy number `(a, b, c)` with support `[a, c]` and peak at `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct TriangularFuzzyNumber {
    a: f64,
    b: f64,
    c: f64,
}

impl TriangularFuzzyNumber {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self, FuzzyError> {
        if a.is_finite() && b.is_finite() && c.is_finite() && a <= b && b <= c {
            Ok(Self { a, b, c })
        } else {
            Err(FuzzyError::InvalidTriangle { a, b, c })
        }
    }

    pub fn left(&self) -> f64 {
        self.a
    }

    pub fn peak(&self) -> f64 {
        self.b
    }

    pub fn right(&self) -> f64 {
        self.c
    }

    /// Degree of membership of `x`, in `[0, 1]`.
    ///
    /// Piecewise linear: zero outside `[a, c]`, rising on `[a, b]`, falling on
    /// `[b, c]`. A degenerate edge (`a == b` or `b == c`) evaluates to 1 at
    /// the shared point. NaN has membership 0.
    pub fn membership(&self, x: f64) -> f64 {
        let Self { a, b, c } = *self;
        if x.is_nan() || x < a || x > c {
            0.0
        } else if x == b {
            1.0
        } else if x < b {
            (x - a) / (b - a)
        } else {
            (c - x) / (c - b)
        }
    }

    /// Mean of Maxima. The maximising set of a triangle is the single point
    /// `b`, so this is exact and needs no discretisation.
    pub fn defuzzify_mom(&self) -> f64 {
        self.b
    }
}

impl TryFrom<[f64; 3]> for TriangularFuzzyNumber {
    type Error = FuzzyError;

    fn try_from([a, b, c]: [f64; 3]) -> Result<Self, Self::Error> {
        Self::new(a, b, c)
    }
}

impl From<TriangularFuzzyNumber> for [f64; 3] {
    fn from(t: TriangularFuzzyNumber) -> Self {
        [t.a, t.b, t.c]
    }
}

impl fmt::Display for TriangularFuzzyNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.b, self.c)
    }
}

/// Free-function form of [`TriangularFuzzyNumber::membership`].
pub fn membership(tfn: &TriangularFuzzyNumber, x: f64) -> f64 {
    tfn.membership(x)
}

/// Free-function form of [`TriangularFuzzyNumber::defuzzify_mom`].
pub fn defuzzify_mom(tfn: &TriangularFuzzyNumber) -> f64 {
    tfn.defuzzify_mom()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinguisticTerm {
    pub label: String,
    pub tfn: TriangularFuzzyNumber,
    pub defuzzified: f64,
}

/// How labels are compared in [`LinguisticScale::lookup`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelMatch {
    /// Case-insensitive, whitespace-collapsed, apostrophe variants unified.
    #[default]
    Normalized,
    /// Byte-exact.
    Strict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinguisticScale {
    name: String,
    terms: Vec<LinguisticTerm>,
}

pub const RATING_SCALE_NAME: &str = "explanation-satisfaction-rating";
pub const INFLUENCE_SCALE_NAME: &str = "influence-strength";

impl LinguisticScale {
    pub fn new<I, S>(name: impl Into<String>, terms: I) -> Result<Self, FuzzyError>
    where
        I: IntoIterator<Item = (S, TriangularFuzzyNumber)>,
        S: Into<String>,
    {
        let name = name.into();
        let mut out: Vec<LinguisticTerm> = Vec::new();
        for (label, tfn) in terms {
            let label = label.into();
            let key = normalize_label(&label);
            if out.iter().any(|t| normalize_label(&t.label) == key) {
                return Err(FuzzyError::DuplicateLabel { label, scale: name });
            }
            out.push(LinguisticTerm {
                label,
                defuzzified: tfn.defuzzify_mom(),
                tfn,
            });
        }
        if out.is_empty() {
            return Err(FuzzyError::EmptyScale(name));
        }
        Ok(Self { name, terms: out })
    }

    /// Five-term scale for rating explanation satisfaction attributes.
    pub fn rating() -> Self {
        builtin(
            RATING_SCALE_NAME,
            [
                ("I disagree strongly", [0.0, 0.0, 0.25]),
                ("I disagree somewhat", [0.0, 0.25, 0.5]),
                ("I'm neutral about it", [0.25, 0.5, 0.75]),
                ("I agree somewhat", [0.5, 0.75, 1.0]),
                ("I agree strongly", [0.75, 1.0, 1.0]),
            ],
        )
    }

    /// Five-term scale for the signed strength of influence between concepts.
    pub fn influence() -> Self {
        builtin(
            INFLUENCE_SCALE_NAME,
            [
                ("Inversely high", [-1.0, -1.0, -0.5]),
                ("Inversely low", [-1.0, -0.5, 0.0]),
                ("No influence", [-0.5, 0.0, 0.5]),
                ("Directly low", [0.0, 0.5, 1.0]),
                ("Directly high", [0.5, 1.0, 1.0]),
            ],
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn terms(&self) -> &[LinguisticTerm] {
        &self.terms
    }

    /// Ordinal position of a label (0-based), using the given matching mode.
    pub fn position(&self, label: &str, mode: LabelMatch) -> Option<usize> {
        match mode {
            LabelMatch::Strict => self.terms.iter().position(|t| t.label == label),
            LabelMatch::Normalized => {
                let key = normalize_label(label);
                self.terms
                    .iter()
                    .position(|t| normalize_label(&t.label) == key)
            }
        }
    }

    pub fn lookup(&self, label: &str, mode: LabelMatch) -> Result<&LinguisticTerm, FuzzyError> {
        match self.position(label, mode) {
            Some(i) => Ok(&self.terms[i]),
            None => Err(FuzzyError::UnknownLabel {
                label: label.to_string(),
                scale: self.name.clone(),
                candidates: self.nearest(label, 3),
            }),
        }
    }

    fn nearest(&self, label: &str, k: usize) -> Vec<String> {
        let key = normalize_label(label);
        let mut scored: Vec<(f64, &str)> = self
            .terms
            .iter()
            .map(|t| {
                let d = strsim::normalized_levenshtein(&key, &normalize_label(&t.label));
                (d, t.label.as_str())
            })
            .collect();
        scored.sort_by(|x, y| y.0.total_cmp(&x.0));
        scored
            .into_iter()
            .take(k)
            .map(|(_, l)| l.to_string())
            .collect()
    }
}

fn builtin<const N: usize>(name: &str, rows: [(&str, [f64; 3]); N]) -> LinguisticScale {
    LinguisticScale::new(
        name,
        rows.into_iter().map(|(label, [a, b, c])| {
            (label, TriangularFuzzyNumber::new(a, b, c).expect("built-in triple"))
        }),
    )
    .expect("built-in scale")
}

/// Look up `label` in `scale` and return its triple and crisp value.
pub fn lookup_term(
    scale: &LinguisticScale,
    label: &str,
    mode: LabelMatch,
) -> Result<(TriangularFuzzyNumber, f64), FuzzyError> {
    scale.lookup(label, mode).map(|t| (t.tfn, t.defuzzified))
}

/// Canonical form used for label comparison: lowercase, single spaces, and
/// every apostrophe-like character folded to `'`.
pub fn normalize_label(label: &str) -> String {
    let folded: String = label
        .chars()
        .map(|ch| match ch {
            '\u{2018}' | '\u{2019}' | '\u{201B}' | '\u{02BC}' | '\u{0060}' | '\u{00B4}' => '\'',
            other => other,
        })
        .collect();
    folded
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}
