//! Deterministic extractive stand-in for a trained decoder.
//!
//! Behavior, in full:
//!
//! * The source is split at `" [DOC] "`; the first part is the query, every
//!   other part a document. Documents are sentence-segmented.
//! * A sentence scores the number of distinct non-stop-word terms it shares
//!   with the query. Ties go to the earlier document, then earlier position.
//! * A generated plan takes the best `max_pairs` positive-scoring sentences
//!   and puts them back in document order. Each yields one pair whose answer
//!   is the sentence's non-stop-word term with the highest TF-IDF
//!   (`tf` = count in its document, `idf = ln((1 + N) / (1 + df)) + 1` over
//!   the `N` documents; ties go to the earlier term) and whose question is
//!   `What does the source say about <answer>?`.
//! * Under a question-answer plan, each pair yields the earliest sentence
//!   containing its normalized answer, or `No supporting sentence found for:
//!   <answer>.`.
//! * Under a question-only plan, each question yields the sentence with the
//!   largest term overlap with it, or the same fallback naming the question.
//! * The iterative variant emits one pair and its sentence per call, taking
//!   the best positive-scoring sentence not already in the forced prefix, and
//!   emits `" [DONE] "` once none is left.
//!
//! Emitted sentences start with a capital letter and end with a terminator so
//! that they segment back exactly as emitted.

use std::collections::{BTreeSet, HashMap};

use super::backend::{BackendError, FinishReason, Generation, GeneratorBackend};
use super::{ModelKind, DOC_SEPARATOR, STOP_MARKER};
use crate::plan::{
    parse_blueprint, serialize_blueprint, Blueprint, PlanMode, QAPair, ANSWER_MARKER,
    SUMMARY_MARKER,
};
use crate::text::{content_terms, is_stop_word, normalize, segment_sentences, terms};

pub const FALLBACK_PREFIX: &str = "No supporting sentence found for: ";

const DEFAULT_MAX_PAIRS: usize = 8;

#[derive(Debug, Clone)]
pub struct StubBackend {
    kind: ModelKind,
    max_pairs: usize,
}

impl StubBackend {
    pub fn new(kind: ModelKind) -> Self {
        StubBackend {
            kind,
            max_pairs: DEFAULT_MAX_PAIRS,
        }
    }

    /// Caps the number of pairs in plans the stub writes on its own.
    pub fn with_max_pairs(mut self, max_pairs: usize) -> Self {
        self.max_pairs = max_pairs;
        self
    }

    fn emit(&self, source: &str, forced_prefix: &str) -> Result<String, BackendError> {
        let src = Source::parse(source);
        if self.kind == ModelKind::Iterative {
            return Ok(src.next_step(forced_prefix));
        }
        if forced_prefix.trim().is_empty() {
            let mode = match self.kind {
                ModelKind::Interactive => PlanMode::QuestionOnly,
                _ => PlanMode::Qa,
            };
            let plan = src.plan(self.max_pairs, mode);
            let summary = src.realize(&plan);
            return Ok(format!(
                "{}{SUMMARY_MARKER}{}",
                serialize_blueprint(&plan),
                summary.join(" ")
            ));
        }

        let plan_text = forced_prefix
            .trim_end()
            .strip_suffix(SUMMARY_MARKER.trim())
            .ok_or_else(|| BackendError::InvalidPrompt("prefix must end with [SUMMARY]".into()))?;
        let mode = if plan_text.contains(ANSWER_MARKER) {
            PlanMode::Qa
        } else {
            PlanMode::QuestionOnly
        };
        let plan = parse_blueprint(plan_text, mode)
            .map_err(|e| BackendError::InvalidPrompt(e.to_string()))?;
        Ok(src.realize(&plan).join(" "))
    }
}

impl GeneratorBackend for StubBackend {
    fn id(&self) -> &str {
        "stub"
    }

    fn generate(
        &self,
        source: &str,
        forced_prefix: &str,
        max_new_tokens: usize,
    ) -> Result<Generation, BackendError> {
        let text = self.emit(source, forced_prefix)?;
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.len() > max_new_tokens {
            return Ok(Generation {
                text: tokens[..max_new_tokens].join(" "),
                finish_reason: FinishReason::TokenLimit,
            });
        }
        Ok(Generation {
            text,
            finish_reason: FinishReason::StopMarker,
        })
    }
}

struct Sentence {
    doc: usize,
    display: String,
    normalized: String,
    terms: Vec<String>,
    content: BTreeSet<String>,
    score: usize,
}

struct Source {
    sentences: Vec<Sentence>,
    term_counts: Vec<HashMap<String, usize>>,
    doc_freq: HashMap<String, usize>,
}

/// Capitalized, terminated form of an input sentence.
fn display_form(sentence: &str) -> String {
    let mut chars = sentence.trim().chars();
    let mut out: String = match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    };
    if !out.ends_with(['.', '!', '?']) {
        out.push('.');
    }
    out
}

fn fallback(subject: &str) -> String {
    format!(
        "{FALLBACK_PREFIX}{}.",
        subject.trim().trim_end_matches(['.', '!', '?'])
    )
}

fn template_question(answer: &str) -> String {
    format!("What does the source say about {answer}?")
}

impl Source {
    fn parse(source: &str) -> Self {
        let mut parts = source.split(DOC_SEPARATOR);
        let query_terms = content_terms(parts.next().unwrap_or_default());

        let mut sentences = Vec::new();
        let mut term_counts = Vec::new();
        let mut doc_freq: HashMap<String, usize> = HashMap::new();
        for (doc, text) in parts.enumerate() {
            let mut counts: HashMap<String, usize> = HashMap::new();
            for term in terms(text) {
                *counts.entry(term).or_default() += 1;
            }
            for term in counts.keys() {
                *doc_freq.entry(term.clone()).or_default() += 1;
            }
            term_counts.push(counts);

            for raw in segment_sentences(text) {
                let content = content_terms(&raw);
                let score = content.intersection(&query_terms).count();
                sentences.push(Sentence {
                    doc,
                    display: display_form(&raw),
                    normalized: normalize(&raw),
                    terms: terms(&raw),
                    content,
                    score,
                });
            }
        }
        Source {
            sentences,
            term_counts,
            doc_freq,
        }
    }

    fn tf_idf(&self, doc: usize, term: &str) -> f64 {
        let n = self.term_counts.len() as f64;
        let tf = self.term_counts[doc].get(term).copied().unwrap_or(0) as f64;
        let df = self.doc_freq.get(term).copied().unwrap_or(0) as f64;
        tf * (((1.0 + n) / (1.0 + df)).ln() + 1.0)
    }

    fn answer_for(&self, sentence: &Sentence) -> Option<String> {
        let mut best: Option<(&str, f64)> = None;
        for term in sentence.terms.iter().filter(|t| !is_stop_word(t)) {
            let weight = self.tf_idf(sentence.doc, term);
            if best.is_none_or(|(_, w)| weight > w) {
                best = Some((term, weight));
            }
        }
        best.map(|(t, _)| t.to_string())
    }

    /// Positive-scoring sentence indices, best first. The stable sort keeps
    /// document order among equal scores.
    fn ranked(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.sentences.len())
            .filter(|&i| self.sentences[i].score > 0)
            .collect();
        idx.sort_by(|&a, &b| self.sentences[b].score.cmp(&self.sentences[a].score));
        idx
    }

    fn pair_for(&self, sentence: &Sentence, mode: PlanMode) -> Option<QAPair> {
        let answer = self.answer_for(sentence)?;
        let question = template_question(&answer);
        match mode {
            PlanMode::Qa => QAPair::qa(question, answer).ok(),
            PlanMode::QuestionOnly => QAPair::question_only(question).ok(),
        }
    }

    fn plan(&self, max_pairs: usize, mode: PlanMode) -> Blueprint {
        let mut chosen: Vec<usize> = self.ranked().into_iter().take(max_pairs).collect();
        chosen.sort_unstable();
        let pairs = chosen
            .iter()
            .filter_map(|&i| self.pair_for(&self.sentences[i], mode))
            .collect();
        Blueprint::from_parts_unchecked(mode, pairs)
    }

    /// One sentence per included pair, in plan order.
    fn realize(&self, plan: &Blueprint) -> Vec<String> {
        plan.included()
            .map(|(_, pair)| match pair.answer() {
                Some(answer) => {
                    let needle = normalize(answer);
                    self.sentences
                        .iter()
                        .find(|s| !needle.is_empty() && s.normalized.contains(&needle))
                        .map(|s| s.display.clone())
                        .unwrap_or_else(|| fallback(answer))
                }
                None => {
                    let wanted = content_terms(pair.question());
                    let mut best: Option<(&Sentence, usize)> = None;
                    for s in &self.sentences {
                        let overlap = s.content.intersection(&wanted).count();
                        if overlap > 0 && best.is_none_or(|(_, o)| overlap > o) {
                            best = Some((s, overlap));
                        }
                    }
                    best.map(|(s, _)| s.display.clone())
                        .unwrap_or_else(|| fallback(pair.question()))
                }
            })
            .collect()
    }

    fn next_step(&self, forced_prefix: &str) -> String {
        let next = self
            .ranked()
            .into_iter()
            .map(|i| &self.sentences[i])
            .filter(|s| !forced_prefix.contains(s.display.as_str()))
            .find_map(|s| self.pair_for(s, PlanMode::Qa).map(|p| (p, s)));
        match next {
            Some((pair, sentence)) => {
                let plan = Blueprint::from_parts_unchecked(PlanMode::Qa, vec![pair]);
                format!(
                    "{}{SUMMARY_MARKER}{}",
                    serialize_blueprint(&plan),
                    sentence.display
                )
            }
            None => STOP_MARKER.to_string(),
        }
    }
}
