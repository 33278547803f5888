//! Blueprint plans: ordered question(-answer) pairs, the summaries they
//! produce, and the flat text grammar a decoder reads and writes.

mod align;
mod codec;
mod edit;

pub use align::{align_blueprint_to_summary, Alignment};
pub use codec::{
    parse_blueprint, parse_model_output, serialize_blueprint, serialize_output, ANSWER_MARKER,
    QUESTION_MARKER, SUMMARY_MARKER,
};
pub use edit::{apply_edit, PlanEdit};

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

use crate::text::segment_sentences;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("question is empty")]
    EmptyQuestion,
    #[error("question-answer pair has no answer")]
    MissingAnswer,
    #[error("question-only pair carries an answer")]
    UnexpectedAnswer,
    #[error("{field} contains a reserved codec marker: {text:?}")]
    MarkerCollision { field: &'static str, text: String },
    #[error("decoder output has no \"[SUMMARY]\" marker")]
    MissingSummaryMarker,
    #[error("plan segment lacks an answer marker: {segment:?}")]
    MalformedPair { segment: String },
    #[error("pair index {index} out of range for plan of {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("operation requires a {expected} plan, got {found}")]
    ModeMismatch { expected: PlanMode, found: PlanMode },
    #[error("permutation is not a bijection over 0..{len}")]
    InvalidPermutation { len: usize },
    #[error("invalid summary: {0}")]
    InvalidSummary(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanMode {
    Qa,
    QuestionOnly,
}

impl fmt::Display for PlanMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlanMode::Qa => "qa",
            PlanMode::QuestionOnly => "question_only",
        })
    }
}

fn check_field(field: &'static str, text: &str) -> Result<(), PlanError> {
    // Padding catches markers formed together with the separators around the
    // field, e.g. an answer ending in " Q:".
    let padded = format!(" {text} ");
    let collides = text.contains(QUESTION_MARKER)
        || [
            QUESTION_MARKER.trim_end(),
            ANSWER_MARKER.trim(),
            SUMMARY_MARKER.trim(),
        ]
        .iter()
        .any(|m| padded.contains(&format!(" {m} ")));
    if collides {
        return Err(PlanError::MarkerCollision {
            field,
            text: text.to_string(),
        });
    }
    Ok(())
}

/// One element of a plan. Text fields are stored trimmed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPair")]
pub struct QAPair {
    question: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    answer: Option<String>,
    included: bool,
}

#[derive(Deserialize)]
struct RawPair {
    question: String,
    #[serde(default)]
    answer: Option<String>,
    #[serde(default = "default_included")]
    included: bool,
}

fn default_included() -> bool {
    true
}

impl TryFrom<RawPair> for QAPair {
    type Error = PlanError;

    fn try_from(raw: RawPair) -> Result<Self, Self::Error> {
        let mut pair = QAPair::new(raw.question, raw.answer)?;
        pair.included = raw.included;
        Ok(pair)
    }
}

impl QAPair {
    /// Builds an included pair. `answer: None` makes a question-only pair;
    /// `Some` must be non-empty.
    pub fn new(question: impl Into<String>, answer: Option<String>) -> Result<Self, PlanError> {
        let question = question.into().trim().to_string();
        if question.is_empty() {
            return Err(PlanError::EmptyQuestion);
        }
        check_field("question", &question)?;
        let answer = match answer {
            None => None,
            Some(a) => {
                let a = a.trim().to_string();
                if a.is_empty() {
                    return Err(PlanError::MissingAnswer);
                }
                check_field("answer", &a)?;
                Some(a)
            }
        };
        Ok(QAPair {
            question,
            answer,
            included: true,
        })
    }

    pub fn qa(question: impl Into<String>, answer: impl Into<String>) -> Result<Self, PlanError> {
        Self::new(question, Some(answer.into()))
    }

    pub fn question_only(question: impl Into<String>) -> Result<Self, PlanError> {
        Self::new(question, None)
    }

    pub fn question(&self) -> &str {
        &self.question
    }

    pub fn answer(&self) -> Option<&str> {
        self.answer.as_deref()
    }

    pub fn included(&self) -> bool {
        self.included
    }

    pub fn with_included(mut self, included: bool) -> Self {
        self.included = included;
        self
    }

    pub fn mode(&self) -> PlanMode {
        if self.answer.is_some() {
            PlanMode::Qa
        } else {
            PlanMode::QuestionOnly
        }
    }
}

/// An ordered plan. Excluded pairs stay in place with `included == false`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawBlueprint")]
pub struct Blueprint {
    mode: PlanMode,
    pairs: Vec<QAPair>,
}

#[derive(Deserialize)]
struct RawBlueprint {
    mode: PlanMode,
    #[serde(default)]
    pairs: Vec<QAPair>,
}

impl TryFrom<RawBlueprint> for Blueprint {
    type Error = PlanError;

    fn try_from(raw: RawBlueprint) -> Result<Self, Self::Error> {
        Blueprint::new(raw.mode, raw.pairs)
    }
}

impl Blueprint {
    pub fn new(mode: PlanMode, pairs: Vec<QAPair>) -> Result<Self, PlanError> {
        for pair in &pairs {
            match (mode, pair.answer.is_some()) {
                (PlanMode::Qa, false) => return Err(PlanError::MissingAnswer),
                (PlanMode::QuestionOnly, true) => return Err(PlanError::UnexpectedAnswer),
                _ => {}
            }
        }
        Ok(Blueprint { mode, pairs })
    }

    pub fn empty(mode: PlanMode) -> Self {
        Blueprint {
            mode,
            pairs: Vec::new(),
        }
    }

    /// Question-only plan from raw question strings.
    pub fn from_questions<I, S>(questions: I) -> Result<Self, PlanError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let pairs = questions
            .into_iter()
            .map(QAPair::question_only)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Blueprint {
            mode: PlanMode::QuestionOnly,
            pairs,
        })
    }

    pub fn mode(&self) -> PlanMode {
        self.mode
    }

    pub fn pairs(&self) -> &[QAPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn included(&self) -> impl Iterator<Item = (usize, &QAPair)> {
        self.pairs.iter().enumerate().filter(|(_, p)| p.included)
    }

    pub fn included_count(&self) -> usize {
        self.pairs.iter().filter(|p| p.included).count()
    }

    pub fn questions(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(QAPair::question)
    }

    /// Copy of the plan with every pair marked included.
    pub fn all_included(&self) -> Self {
        Blueprint {
            mode: self.mode,
            pairs: self
                .pairs
                .iter()
                .cloned()
                .map(|p| p.with_included(true))
                .collect(),
        }
    }

    /// Copy of the plan holding only the included pairs.
    pub fn only_included(&self) -> Self {
        Blueprint {
            mode: self.mode,
            pairs: self.pairs.iter().filter(|p| p.included).cloned().collect(),
        }
    }

    /// Concatenates plans of the same mode, e.g. per-sentence plans.
    pub fn concat<'a>(
        mode: PlanMode,
        parts: impl IntoIterator<Item = &'a Blueprint>,
    ) -> Result<Self, PlanError> {
        let mut pairs = Vec::new();
        for part in parts {
            if part.mode != mode {
                return Err(PlanError::ModeMismatch {
                    expected: mode,
                    found: part.mode,
                });
            }
            pairs.extend(part.pairs.iter().cloned());
        }
        Ok(Blueprint { mode, pairs })
    }

    pub(crate) fn from_parts_unchecked(mode: PlanMode, pairs: Vec<QAPair>) -> Self {
        Blueprint { mode, pairs }
    }
}

/// Generated output as an ordered sentence list.
///
/// Joining the sentences with single spaces and segmenting the result gives
/// back the same list; construction rejects anything else.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawSummary")]
pub struct Summary {
    sentences: Vec<String>,
}

#[derive(Deserialize)]
struct RawSummary {
    sentences: Vec<String>,
}

impl TryFrom<RawSummary> for Summary {
    type Error = PlanError;

    fn try_from(raw: RawSummary) -> Result<Self, Self::Error> {
        Summary::new(raw.sentences)
    }
}

impl Summary {
    pub fn new(sentences: Vec<String>) -> Result<Self, PlanError> {
        if let Some(bad) = sentences
            .iter()
            .find(|s| s.trim().is_empty() || s.trim() != s.as_str())
        {
            return Err(PlanError::InvalidSummary(format!("bad sentence {bad:?}")));
        }
        let summary = Summary { sentences };
        if segment_sentences(&summary.render()) != summary.sentences {
            return Err(PlanError::InvalidSummary(
                "sentences do not survive re-segmentation".into(),
            ));
        }
        Ok(summary)
    }

    /// Segments free text into a summary. Always valid by construction.
    pub fn from_text(text: &str) -> Self {
        Summary {
            sentences: segment_sentences(text),
        }
    }

    pub fn sentences(&self) -> &[String] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn render(&self) -> String {
        self.sentences.join(" ")
    }

    pub(crate) fn from_sentences_unchecked(sentences: Vec<String>) -> Self {
        Summary { sentences }
    }
}
