use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::backend::{BackendCounter, BackendError, Generation, GeneratorBackend};
use super::input::{InputError, ModelInput};
use super::{ModelKind, STOP_MARKER};
use crate::filter::select_length;
use crate::plan::{
    align_blueprint_to_summary, parse_model_output, serialize_blueprint, Alignment, Blueprint,
    PlanError, PlanMode, Summary, SUMMARY_MARKER,
};
use crate::text::TokenCounter;

/// Decoder output limit, in tokens.
pub const MAX_OUTPUT_TOKENS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationParams {
    pub max_output_tokens: usize,
    pub max_pairs: usize,
    /// Iterative flow only.
    pub max_sentences: usize,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            max_output_tokens: MAX_OUTPUT_TOKENS,
            max_pairs: 8,
            max_sentences: 8,
        }
    }
}

impl GenerationParams {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.max_output_tokens == 0 || self.max_pairs == 0 || self.max_sentences == 0 {
            return Err(EngineError::InvalidParams(
                "all limits must be positive".into(),
            ));
        }
        if self.max_output_tokens > MAX_OUTPUT_TOKENS {
            return Err(EngineError::InvalidParams(format!(
                "max_output_tokens {} exceeds the decoder limit of {MAX_OUTPUT_TOKENS}",
                self.max_output_tokens
            )));
        }
        Ok(())
    }
}

/// One round of the iterative flow: the plan for one sentence, and the
/// sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationStep {
    pub step_index: usize,
    pub plan: Blueprint,
    pub sentence: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub model: ModelKind,
    pub blueprint: Blueprint,
    pub summary: Summary,
    pub alignment: Alignment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<IterationStep>>,
    pub backend_id: String,
    pub raw_output: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error("invalid generation parameters: {0}")]
    InvalidParams(String),
    #[error("model input has {tokens} tokens, over the {budget}-token budget")]
    InputOverBudget { tokens: usize, budget: usize },
    #[error("plan has no included pairs")]
    EmptyPlan,
    #[error("question is empty")]
    EmptyQuestion,
    #[error("invalid question: {0}")]
    InvalidQuestion(PlanError),
    #[error("operation requires a {expected} plan, got {found}")]
    ModeMismatch { expected: PlanMode, found: PlanMode },
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("could not parse decoder output: {source}")]
    Parse {
        source: PlanError,
        raw_output: String,
        /// Iterative steps completed before the failure.
        steps: Vec<IterationStep>,
    },
}

impl EngineError {
    pub fn raw_output(&self) -> Option<&str> {
        match self {
            EngineError::Parse { raw_output, .. } => Some(raw_output),
            _ => None,
        }
    }
}

fn parse_failure(source: PlanError, raw_output: &str) -> EngineError {
    EngineError::Parse {
        source,
        raw_output: raw_output.to_string(),
        steps: Vec::new(),
    }
}

fn check_input(input: &ModelInput, backend: &dyn GeneratorBackend) -> Result<(), EngineError> {
    let tokens = BackendCounter(backend).count_tokens(&input.formatted_text);
    if tokens > input.token_budget {
        return Err(EngineError::InputOverBudget {
            tokens,
            budget: input.token_budget,
        });
    }
    Ok(())
}

fn alignment_for(bp: &Blueprint, summary: &Summary) -> Alignment {
    align_blueprint_to_summary(bp, summary).unwrap_or_default()
}

/// Generates plan and summary in one pass. Plans longer than
/// `params.max_pairs` are cut and the summary regenerated from the shorter
/// plan.
pub fn run_end_to_end(
    input: &ModelInput,
    backend: &dyn GeneratorBackend,
    params: &GenerationParams,
) -> Result<GenerationResult, EngineError> {
    one_shot(input, backend, params, ModelKind::EndToEnd, PlanMode::Qa)
}

fn one_shot(
    input: &ModelInput,
    backend: &dyn GeneratorBackend,
    params: &GenerationParams,
    model: ModelKind,
    mode: PlanMode,
) -> Result<GenerationResult, EngineError> {
    params.validate()?;
    check_input(input, backend)?;
    let Generation { text, .. } =
        backend.generate(&input.formatted_text, "", params.max_output_tokens)?;
    let (blueprint, summary) =
        parse_model_output(&text, mode).map_err(|e| parse_failure(e, &text))?;

    if blueprint.len() > params.max_pairs {
        let mut result = regenerate_with_plan(
            input,
            &select_length(&blueprint, params.max_pairs),
            backend,
            params,
        )?;
        result.model = model;
        return Ok(result);
    }

    let alignment = alignment_for(&blueprint, &summary);
    Ok(GenerationResult {
        model,
        blueprint,
        summary,
        alignment,
        steps: None,
        backend_id: backend.id().to_string(),
        raw_output: text,
    })
}

/// Forces `edited` as the decoder prefix and lets the backend write the
/// summary. The returned plan is `edited` itself.
pub fn regenerate_with_plan(
    input: &ModelInput,
    edited: &Blueprint,
    backend: &dyn GeneratorBackend,
    params: &GenerationParams,
) -> Result<GenerationResult, EngineError> {
    params.validate()?;
    if edited.included_count() == 0 {
        return Err(EngineError::EmptyPlan);
    }
    check_input(input, backend)?;

    let prefix = format!("{}{SUMMARY_MARKER}", serialize_blueprint(edited));
    let Generation { text, .. } =
        backend.generate(&input.formatted_text, &prefix, params.max_output_tokens)?;
    let summary = Summary::from_text(&text);
    let (model, alignment) = match edited.mode() {
        PlanMode::Qa => (ModelKind::EndToEnd, alignment_for(edited, &summary)),
        PlanMode::QuestionOnly => (ModelKind::Interactive, Alignment::new()),
    };
    Ok(GenerationResult {
        model,
        blueprint: edited.clone(),
        summary,
        alignment,
        steps: None,
        backend_id: backend.id().to_string(),
        raw_output: format!("{prefix}{text}"),
    })
}

/// Question-only generation. Without `user_questions` the backend writes its
/// own question plan; with them, the questions are forced as the plan.
pub fn run_interactive(
    input: &ModelInput,
    user_questions: Option<&[String]>,
    backend: &dyn GeneratorBackend,
    params: &GenerationParams,
) -> Result<GenerationResult, EngineError> {
    let Some(questions) = user_questions else {
        return one_shot(
            input,
            backend,
            params,
            ModelKind::Interactive,
            PlanMode::QuestionOnly,
        );
    };
    if questions.iter().any(|q| q.trim().is_empty()) {
        return Err(EngineError::EmptyQuestion);
    }
    let plan = Blueprint::from_questions(questions.iter().map(String::as_str))
        .map_err(EngineError::InvalidQuestion)?;
    regenerate_with_plan(input, &plan, backend, params)
}

/// Splits off the stop marker. Returns the payload before it and whether it
/// was present.
fn split_stop_marker(text: &str) -> (&str, bool) {
    match text.find(STOP_MARKER.trim()) {
        Some(at) => (text[..at].trim(), true),
        None => (text.trim(), false),
    }
}

/// Writes one sentence at a time, forcing the sentences so far as the decoder
/// prefix and reading back a per-sentence plan plus the next sentence.
///
/// Stops on the stop marker, an empty emission, or `params.max_sentences`.
pub fn run_iterative(
    input: &ModelInput,
    backend: &dyn GeneratorBackend,
    params: &GenerationParams,
) -> Result<GenerationResult, EngineError> {
    params.validate()?;
    check_input(input, backend)?;

    let mut steps: Vec<IterationStep> = Vec::new();
    let mut raw = Vec::new();
    while steps.len() < params.max_sentences {
        let prefix = steps
            .iter()
            .map(|s| s.sentence.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        let Generation { text, .. } =
            backend.generate(&input.formatted_text, &prefix, params.max_output_tokens)?;
        raw.push(text.clone());

        let (payload, stopped) = split_stop_marker(&text);
        if payload.is_empty() {
            break;
        }
        let fail = |source: PlanError, steps: &[IterationStep]| EngineError::Parse {
            source,
            raw_output: text.clone(),
            steps: steps.to_vec(),
        };
        let (plan, summary) =
            parse_model_output(payload, PlanMode::Qa).map_err(|e| fail(e, &steps))?;
        if summary.is_empty() {
            break;
        }
        if plan.is_empty() {
            return Err(fail(
                PlanError::MalformedPair {
                    segment: payload.to_string(),
                },
                &steps,
            ));
        }
        if summary.len() != 1 {
            return Err(fail(
                PlanError::InvalidSummary(format!(
                    "iterative step produced {} sentences",
                    summary.len()
                )),
                &steps,
            ));
        }
        steps.push(IterationStep {
            step_index: steps.len(),
            plan,
            sentence: summary.render(),
        });
        if stopped {
            break;
        }
    }

    let blueprint = Blueprint::concat(PlanMode::Qa, steps.iter().map(|s| &s.plan))
        .expect("iterative step plans are parsed in qa mode");
    let summary =
        Summary::from_sentences_unchecked(steps.iter().map(|s| s.sentence.clone()).collect());
    let alignment = alignment_for(&blueprint, &summary);
    Ok(GenerationResult {
        model: ModelKind::Iterative,
        blueprint,
        summary,
        alignment,
        steps: Some(steps),
        backend_id: backend.id().to_string(),
        raw_output: raw.join("\n"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::backend::FinishReason;
    use crate::engine::{build_model_input, SourceDocument};
    use crate::text::WhitespaceCounter;

    struct Scripted(Vec<&'static str>, std::sync::Mutex<usize>);

    impl GeneratorBackend for Scripted {
        fn id(&self) -> &str {
            "scripted"
        }
        fn generate(&self, _: &str, _: &str, _: usize) -> Result<Generation, BackendError> {
            let mut n = self.1.lock().unwrap();
            let text = self.0.get(*n).copied().unwrap_or("").to_string();
            *n += 1;
            Ok(Generation {
                text,
                finish_reason: FinishReason::StopMarker,
            })
        }
    }

    fn scripted(lines: Vec<&'static str>) -> Scripted {
        Scripted(lines, std::sync::Mutex::new(0))
    }

    fn input() -> ModelInput {
        let doc = SourceDocument {
            url: "u".into(),
            title: "t".into(),
            body: "Body.".into(),
        };
        build_model_input("q", &[doc], 100, &WhitespaceCounter).unwrap()
    }

    #[test]
    fn missing_marker_is_a_parse_failure_with_raw_output() {
        let err = run_end_to_end(
            &input(),
            &scripted(vec!["Q: a A: b"]),
            &GenerationParams::default(),
        )
        .unwrap_err();
        assert_eq!(err.raw_output(), Some("Q: a A: b"));
        assert!(matches!(
            err,
            EngineError::Parse {
                source: PlanError::MissingSummaryMarker,
                ..
            }
        ));
    }

    #[test]
    fn iterative_parse_failure_keeps_completed_steps() {
        let backend = scripted(vec!["Q: a? A: b [SUMMARY] One b.", "garbage"]);
        let err = run_iterative(&input(), &backend, &GenerationParams::default()).unwrap_err();
        match err {
            EngineError::Parse {
                steps, raw_output, ..
            } => {
                assert_eq!(steps.len(), 1);
                assert_eq!(raw_output, "garbage");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn iterative_marker_after_sentence_stops() {
        let backend = scripted(vec![
            "Q: a? A: b [SUMMARY] One b. [DONE] ",
            "Q: x? A: y [SUMMARY] Two.",
        ]);
        let result = run_iterative(&input(), &backend, &GenerationParams::default()).unwrap();
        assert_eq!(result.summary.sentences(), ["One b."]);
    }

    #[test]
    fn iterative_rejects_multi_sentence_steps() {
        let backend = scripted(vec!["Q: a? A: b [SUMMARY] One. Two."]);
        assert!(matches!(
            run_iterative(&input(), &backend, &GenerationParams::default()),
            Err(EngineError::Parse { .. })
        ));
    }

    #[test]
    fn params_are_validated() {
        let backend = scripted(vec![]);
        for bad in [
            GenerationParams {
                max_pairs: 0,
                ..Default::default()
            },
            GenerationParams {
                max_output_tokens: 513,
                ..Default::default()
            },
        ] {
            assert!(matches!(
                run_end_to_end(&input(), &backend, &bad),
                Err(EngineError::InvalidParams(_))
            ));
        }
    }

    #[test]
    fn over_budget_input_never_reaches_the_backend() {
        let mut oversized = input();
        oversized.token_budget = 2;
        let backend = scripted(vec!["Q: a? A: b [SUMMARY] B."]);
        assert!(matches!(
            run_end_to_end(&oversized, &backend, &GenerationParams::default()),
            Err(EngineError::InputOverBudget { .. })
        ));
        assert_eq!(*backend.1.lock().unwrap(), 0);
    }

    #[test]
    fn interactive_question_validation() {
        let backend = scripted(vec![]);
        let p = GenerationParams::default();
        assert_eq!(
            run_interactive(&input(), Some(&["".to_string()]), &backend, &p),
            Err(EngineError::EmptyQuestion)
        );
        assert_eq!(
            run_interactive(&input(), Some(&[]), &backend, &p),
            Err(EngineError::EmptyPlan)
        );
    }
}
