use super::{Blueprint, PlanError, PlanMode, QAPair, Summary};

pub const QUESTION_MARKER: &str = "Q: ";
pub const ANSWER_MARKER: &str = " A: ";
pub const SUMMARY_MARKER: &str = " [SUMMARY] ";

/// Flattens the included pairs: `Q: q1 A: a1 Q: q2 A: a2`, or `Q: q1 Q: q2`
/// for question-only plans. An empty plan yields an empty string.
pub fn serialize_blueprint(bp: &Blueprint) -> String {
    let mut out = String::new();
    for (_, pair) in bp.included() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(QUESTION_MARKER);
        out.push_str(pair.question());
        if let Some(answer) = pair.answer() {
            out.push_str(ANSWER_MARKER);
            out.push_str(answer);
        }
    }
    out
}

/// `serialize_blueprint(bp) + " [SUMMARY] " + sentences`.
pub fn serialize_output(bp: &Blueprint, summary: &Summary) -> String {
    let mut out = serialize_blueprint(bp);
    out.push_str(SUMMARY_MARKER);
    out.push_str(&summary.render());
    out
}

/// Parses plan text (everything left of the summary marker).
pub fn parse_blueprint(text: &str, mode: PlanMode) -> Result<Blueprint, PlanError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Blueprint::empty(mode));
    }
    let body = text
        .strip_prefix(QUESTION_MARKER)
        .or_else(|| text.strip_prefix("Q:"));
    let Some(body) = body else {
        return Err(PlanError::MalformedPair {
            segment: text.to_string(),
        });
    };
    let separator = format!(" {QUESTION_MARKER}");

    let mut pairs = Vec::new();
    for segment in body.split(separator.as_str()) {
        let pair = match mode {
            PlanMode::Qa => {
                let (question, answer) =
                    segment
                        .split_once(ANSWER_MARKER)
                        .ok_or_else(|| PlanError::MalformedPair {
                            segment: segment.to_string(),
                        })?;
                QAPair::qa(question, answer)
            }
            PlanMode::QuestionOnly => QAPair::question_only(segment),
        };
        pairs.push(pair.map_err(|e| match e {
            PlanError::MarkerCollision { .. } | PlanError::MissingAnswer => {
                PlanError::MalformedPair {
                    segment: segment.to_string(),
                }
            }
            other => other,
        })?);
    }
    Ok(Blueprint::from_parts_unchecked(mode, pairs))
}

/// Splits a decoder emission `b [SUMMARY] s` into its plan and summary.
/// Every parsed pair is included.
pub fn parse_model_output(text: &str, mode: PlanMode) -> Result<(Blueprint, Summary), PlanError> {
    let (plan_text, summary_text) = match text.split_once(SUMMARY_MARKER) {
        Some(parts) => parts,
        // An empty plan may surface with the marker at the very start.
        None => match text.trim_start().strip_prefix(SUMMARY_MARKER.trim_start()) {
            Some(rest) => ("", rest),
            None => return Err(PlanError::MissingSummaryMarker),
        },
    };
    let blueprint = parse_blueprint(plan_text, mode)?;
    Ok((blueprint, Summary::from_text(summary_text)))
}
