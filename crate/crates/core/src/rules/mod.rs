//! Ordered conjunctive threshold rules with a default class.
//!
//! ```text
//! RULE r1: IF Albumin <= 37.9 AND "Lactate dehydrogenase" >= 302 THEN Positive
//! DEFAULT Negative
//! ```
//!
//! Rules are tried in order and the first rule whose conditions all hold
//! assigns its class. When none fires the default class applies.

mod parser;
mod records;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy::normalize_label;

pub use parser::parse_rules;
pub use records::{parse_records, PatientRecord};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuleError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate rule id {id:?} at line {line}")]
    DuplicateRuleId { id: String, line: usize },
    #[error("rule set has no DEFAULT class")]
    MissingDefault,
    #[error("rule {id:?} concludes the default class {class:?}")]
    RuleClassIsDefault { id: String, class: String },
    #[error("invalid condition in rule {rule_id:?}: {reason}")]
    InvalidCondition { rule_id: String, reason: String },
    #[error("record {record_id:?} has no value for feature {feature:?} required by rule {rule_id:?}")]
    MissingFeature {
        feature: String,
        rule_id: String,
        record_id: String,
    },
    #[error("record {record_id:?} lists feature {feature:?} more than once")]
    DuplicateFeature { record_id: String, feature: String },
    #[error("records, line {line}: {message}")]
    Records { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparator {
    LessOrEqual,
    GreaterOrEqual,
}

impl Comparator {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Comparator::LessOrEqual => value <= threshold,
            Comparator::GreaterOrEqual => value >= threshold,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::LessOrEqual => "<=",
            Comparator::GreaterOrEqual => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub feature: String,
    pub comparator: Comparator,
    pub threshold: f64,
}

impl Condition {
    pub fn new(feature: impl Into<String>, comparator: Comparator, threshold: f64) -> Self {
        Self {
            feature: feature.into(),
            comparator,
            threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub id: String,
    pub conditions: Vec<Condition>,
    pub class: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleSet {
    rules: Vec<Rule>,
    default_class: String,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>, default_class: impl Into<String>) -> Result<Self, RuleError> {
        let default_class = default_class.into();
        for (i, r) in rules.iter().enumerate() {
            if rules[..i].iter().any(|p| p.id == r.id) {
                return Err(RuleError::DuplicateRuleId {
                    id: r.id.clone(),
                    line: i + 1,
                });
            }
            if r.class == default_class {
                return Err(RuleError::RuleClassIsDefault {
                    id: r.id.clone(),
                    class: r.class.clone(),
                });
            }
            if r.conditions.is_empty() {
                return Err(RuleError::InvalidCondition {
                    rule_id: r.id.clone(),
                    reason: "a rule needs at least one condition".into(),
                });
            }
            for c in &r.conditions {
                if c.feature.trim().is_empty() {
                    return Err(RuleError::InvalidCondition {
                        rule_id: r.id.clone(),
                        reason: "empty feature name".into(),
                    });
                }
                if !c.threshold.is_finite() {
                    return Err(RuleError::InvalidCondition {
                        rule_id: r.id.clone(),
                        reason: format!("threshold for {:?} is not finite", c.feature),
                    });
                }
            }
        }
        Ok(Self {
            rules,
            default_class,
        })
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn default_class(&self) -> &str {
        &self.default_class
    }

    /// Same rules in a different order.
    pub fn reordered(&self, order: &[usize]) -> Self {
        Self {
            rules: order.iter().map(|&i| self.rules[i].clone()).collect(),
            default_class: self.default_class.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub record_id: String,
    pub class: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fired_rule: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub feature: String,
    pub comparator: Comparator,
    pub threshold: f64,
    pub actual: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleExplanation {
    pub rule_id: String,
    pub class: String,
    pub fired: bool,
    pub conditions: Vec<ConditionCheck>,
}

impl RuleExplanation {
    /// The first condition that does not hold, if any.
    pub fn first_failure(&self) -> Option<&ConditionCheck> {
        self.conditions.iter().find(|c| !c.holds)
    }
}

fn check_rule(rule: &Rule, record: &PatientRecord) -> Result<Vec<ConditionCheck>, RuleError> {
    rule.conditions
        .iter()
        .map(|c| {
            let actual = record.get(&c.feature).ok_or_else(|| RuleError::MissingFeature {
                feature: c.feature.clone(),
                rule_id: rule.id.clone(),
                record_id: record.record_id.clone(),
            })?;
            Ok(ConditionCheck {
                feature: c.feature.clone(),
                comparator: c.comparator,
                threshold: c.threshold,
                actual,
                holds: c.comparator.holds(actual, c.threshold),
            })
        })
        .collect()
}

/// First-match classification. Every condition of each rule that is tried
/// must have a value in the record.
pub fn classify(rules: &RuleSet, record: &PatientRecord) -> Result<Prediction, RuleError> {
    for rule in &rules.rules {
        if check_rule(rule, record)?.iter().all(|c| c.holds) {
            return Ok(Prediction {
                record_id: record.record_id.clone(),
                class: rule.class.clone(),
                fired_rule: Some(rule.id.clone()),
            });
        }
    }
    Ok(Prediction {
        record_id: record.record_id.clone(),
        class: rules.default_class.clone(),
        fired_rule: None,
    })
}

/// Evaluate every condition of every rule against `record`.
pub fn explain(rules: &RuleSet, record: &PatientRecord) -> Result<Vec<RuleExplanation>, RuleError> {
    rules
        .rules
        .iter()
        .map(|rule| {
            let conditions = check_rule(rule, record)?;
            Ok(RuleExplanation {
                rule_id: rule.id.clone(),
                class: rule.class.clone(),
                fired: conditions.iter().all(|c| c.holds),
                conditions,
            })
        })
        .collect()
}

const KEYWORDS: [&str; 5] = ["RULE", "IF", "AND", "THEN", "DEFAULT"];

fn is_bare_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(s))
}

fn is_bare_id(s: &str) -> bool {
    !s.is_empty()
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(s))
}

struct Name<'a>(&'a str, fn(&str) -> bool);

impl fmt::Display for Name<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if (self.1)(self.0) {
            f.write_str(self.0)
        } else {
            f.write_str("\"")?;
            for ch in self.0.chars() {
                if ch == '"' || ch == '\\' {
                    f.write_str("\\")?;
                }
                write!(f, "{ch}")?;
            }
            f.write_str("\"")
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RULE {}: IF ", Name(&self.id, is_bare_id))?;
        for (i, c) in self.conditions.iter().enumerate() {
            if i > 0 {
                f.write_str(" AND ")?;
            }
            // f64 Display is the shortest string that parses back exactly
            write!(
                f,
                "{} {} {}",
                Name(&c.feature, is_bare_name),
                c.comparator.symbol(),
                c.threshold
            )?;
        }
        write!(f, " THEN {}", Name(&self.class, is_bare_name))
    }
}

/// Canonical DSL text; parsing it yields an equal rule set.
impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        writeln!(f, "DEFAULT {}", Name(&self.default_class, is_bare_name))
    }
}

pub(crate) fn feature_key(name: &str) -> String {
    normalize_label(name)
}
