//! Grounding, deduplication and length control for plans.
//!
//! Grounding drops question-answer pairs whose answer cannot be found in the
//! input documents. All transforms preserve the relative order of the pairs
//! they keep and are idempotent.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plan::{Blueprint, PlanMode};
pub use crate::text::normalize;
use crate::text::terms;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("answer is empty")]
    EmptyAnswer,
    #[error("grounding needs a qa plan, got {0}")]
    ModeMismatch(PlanMode),
    #[error("overlap threshold {0} is outside (0, 1]")]
    InvalidThreshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundingMethod {
    #[default]
    NormalizedSubstring,
    TokenOverlap,
}

pub const DEFAULT_OVERLAP_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPolicy")]
pub struct GroundingPolicy {
    method: GroundingMethod,
    overlap_threshold: f64,
}

#[derive(Deserialize)]
struct RawPolicy {
    #[serde(default)]
    method: GroundingMethod,
    #[serde(default = "default_threshold")]
    overlap_threshold: f64,
}

fn default_threshold() -> f64 {
    DEFAULT_OVERLAP_THRESHOLD
}

impl TryFrom<RawPolicy> for GroundingPolicy {
    type Error = FilterError;

    fn try_from(raw: RawPolicy) -> Result<Self, Self::Error> {
        GroundingPolicy::new(raw.method, raw.overlap_threshold)
    }
}

impl Default for GroundingPolicy {
    fn default() -> Self {
        GroundingPolicy {
            method: GroundingMethod::NormalizedSubstring,
            overlap_threshold: DEFAULT_OVERLAP_THRESHOLD,
        }
    }
}

impl GroundingPolicy {
    pub fn new(method: GroundingMethod, overlap_threshold: f64) -> Result<Self, FilterError> {
        if !(overlap_threshold > 0.0 && overlap_threshold <= 1.0) {
            return Err(FilterError::InvalidThreshold(overlap_threshold));
        }
        Ok(GroundingPolicy {
            method,
            overlap_threshold,
        })
    }

    pub fn substring() -> Self {
        Self::default()
    }

    pub fn method(&self) -> GroundingMethod {
        self.method
    }

    pub fn overlap_threshold(&self) -> f64 {
        self.overlap_threshold
    }
}

/// Whether `answer` can be found in `input_text` under `policy`.
pub fn is_answer_grounded(
    answer: &str,
    input_text: &str,
    policy: &GroundingPolicy,
) -> Result<bool, FilterError> {
    let normalized = normalize(answer);
    if normalized.is_empty() {
        return Err(FilterError::EmptyAnswer);
    }
    let grounded = match policy.method {
        GroundingMethod::NormalizedSubstring => normalize(input_text).contains(&normalized),
        GroundingMethod::TokenOverlap => {
            let answer_terms: BTreeSet<String> = terms(answer).into_iter().collect();
            let input_terms: HashSet<String> = terms(input_text).into_iter().collect();
            let shared = answer_terms
                .iter()
                .filter(|t| input_terms.contains(*t))
                .count();
            shared as f64 / answer_terms.len() as f64 >= policy.overlap_threshold
        }
    };
    Ok(grounded)
}

/// Removes (not merely excludes) every pair whose answer is not grounded.
pub fn filter_blueprint(
    bp: &Blueprint,
    input_text: &str,
    policy: &GroundingPolicy,
) -> Result<Blueprint, FilterError> {
    if bp.mode() != PlanMode::Qa {
        return Err(FilterError::ModeMismatch(bp.mode()));
    }
    // Normalize the input once; per-pair checks then only normalize answers.
    let normalized_input = normalize(input_text);
    let input_terms: HashSet<&str> = normalized_input.split(' ').collect();

    let mut kept = Vec::with_capacity(bp.len());
    for pair in bp.pairs() {
        let answer = pair
            .answer()
            .ok_or(FilterError::ModeMismatch(PlanMode::QuestionOnly))?;
        let normalized = normalize(answer);
        if normalized.is_empty() {
            continue;
        }
        let grounded = match policy.method {
            GroundingMethod::NormalizedSubstring => normalized_input.contains(&normalized),
            GroundingMethod::TokenOverlap => {
                let answer_terms: BTreeSet<&str> = normalized.split(' ').collect();
                let shared = answer_terms
                    .iter()
                    .filter(|t| input_terms.contains(*t))
                    .count();
                shared as f64 / answer_terms.len() as f64 >= policy.overlap_threshold
            }
        };
        if grounded {
            kept.push(pair.clone());
        }
    }
    Ok(Blueprint::from_parts_unchecked(bp.mode(), kept))
}

/// Drops pairs whose normalized question repeats an earlier one.
pub fn dedup_blueprint(bp: &Blueprint) -> Blueprint {
    let mut seen = HashSet::new();
    let pairs = bp
        .pairs()
        .iter()
        .filter(|p| seen.insert(normalize(p.question())))
        .cloned()
        .collect();
    Blueprint::from_parts_unchecked(bp.mode(), pairs)
}

/// Keeps the first `num_pairs` pairs.
pub fn select_length(bp: &Blueprint, num_pairs: usize) -> Blueprint {
    let pairs = bp.pairs().iter().take(num_pairs).cloned().collect();
    Blueprint::from_parts_unchecked(bp.mode(), pairs)
}

/// Filter settings exposed through the service and the CLI.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterPolicy {
    #[serde(flatten)]
    pub grounding: GroundingPolicy,
    #[serde(default)]
    pub dedup: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_pairs: Option<usize>,
    /// Check grounding against the truncated model input instead of the full
    /// documents.
    #[serde(default)]
    pub strict: bool,
}

/// Grounding, then optional dedup, then optional length cap.
pub fn apply_policy(
    bp: &Blueprint,
    input_text: &str,
    policy: &FilterPolicy,
) -> Result<Blueprint, FilterError> {
    let mut out = filter_blueprint(bp, input_text, &policy.grounding)?;
    if policy.dedup {
        out = dedup_blueprint(&out);
    }
    if let Some(n) = policy.num_pairs {
        out = select_length(&out, n);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::QAPair;

    fn qa(answers: &[&str]) -> Blueprint {
        Blueprint::new(
            PlanMode::Qa,
            answers
                .iter()
                .enumerate()
                .map(|(i, a)| QAPair::qa(format!("Question {i}?"), *a).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn substring_grounding() {
        let p = GroundingPolicy::default();
        let input = "The ship hit an iceberg at night.";
        assert!(is_answer_grounded("iceberg", input, &p).unwrap());
        assert!(!is_answer_grounded("unicorn", input, &p).unwrap());
        assert_eq!(
            is_answer_grounded("  ", input, &p),
            Err(FilterError::EmptyAnswer)
        );
    }

    #[test]
    fn dollar_amounts_ground() {
        let doc = "A violation of the Act can result in a fine of up to $100,000 \
                   ($200,000 for organizations), imprisonment for one year, or both.";
        assert!(
            is_answer_grounded("fine of up to $100,000", doc, &GroundingPolicy::default()).unwrap()
        );
    }

    #[test]
    fn token_overlap_grounding() {
        let p = GroundingPolicy::new(GroundingMethod::TokenOverlap, 0.5).unwrap();
        assert!(is_answer_grounded("giant iceberg", "an iceberg", &p).unwrap());
        let p = GroundingPolicy::new(GroundingMethod::TokenOverlap, 0.8).unwrap();
        assert!(!is_answer_grounded("giant iceberg", "an iceberg", &p).unwrap());
        assert!(GroundingPolicy::new(GroundingMethod::TokenOverlap, 0.0).is_err());
        assert!(GroundingPolicy::new(GroundingMethod::TokenOverlap, 1.5).is_err());
    }

    #[test]
    fn filter_keeps_grounded_in_order() {
        let bp = qa(&["iceberg", "1912", "unicorn"]);
        let input = "In 1912 the Titanic struck an iceberg.";
        let out = filter_blueprint(&bp, input, &GroundingPolicy::default()).unwrap();
        assert_eq!(out.pairs(), &bp.pairs()[..2]);

        let all = qa(&["iceberg", "1912"]);
        assert_eq!(
            filter_blueprint(&all, input, &GroundingPolicy::default()).unwrap(),
            all
        );
        let empty = Blueprint::empty(PlanMode::Qa);
        assert_eq!(
            filter_blueprint(&empty, input, &GroundingPolicy::default()).unwrap(),
            empty
        );
    }

    #[test]
    fn filter_rejects_question_only() {
        let bp = Blueprint::from_questions(["Why?"]).unwrap();
        assert_eq!(
            filter_blueprint(&bp, "x", &GroundingPolicy::default()),
            Err(FilterError::ModeMismatch(PlanMode::QuestionOnly))
        );
    }

    #[test]
    fn dedup_by_normalized_question() {
        let q = "What is the average salary for a software engineer?";
        let bp = Blueprint::from_questions([q, q, "What degree should you get?"]).unwrap();
        assert_eq!(dedup_blueprint(&bp).len(), 2);
        let bp = Blueprint::from_questions(["Who?", "WHO", "who ?"]).unwrap();
        assert_eq!(dedup_blueprint(&bp).len(), 1);
        let distinct = Blueprint::from_questions(["A?", "B?"]).unwrap();
        assert_eq!(dedup_blueprint(&distinct), distinct);
    }

    #[test]
    fn length_selection() {
        let bp = qa(&["a", "b", "c", "d", "e", "f", "g"]);
        assert_eq!(select_length(&bp, 3).pairs(), &bp.pairs()[..3]);
        assert!(select_length(&bp, 0).is_empty());
        let two = qa(&["a", "b"]);
        assert_eq!(select_length(&two, 5), two);
    }

    #[test]
    fn policy_wire_format() {
        let p: FilterPolicy =
            serde_json::from_str(r#"{"method":"token_overlap","dedup":true}"#).unwrap();
        assert_eq!(p.grounding.method(), GroundingMethod::TokenOverlap);
        assert_eq!(p.grounding.overlap_threshold(), 0.8);
        assert!(p.dedup);
        assert!(serde_json::from_str::<FilterPolicy>(r#"{"overlap_threshold":2}"#).is_err());
    }
}
