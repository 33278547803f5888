use serde::{Deserialize, Serialize};

use super::{Blueprint, PlanError, PlanMode, QAPair};

/// A single user edit to a plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlanEdit {
    ToggleInclude { target_index: usize },
    AddQuestion { question_text: String },
    RemovePair { target_index: usize },
    Reorder { permutation: Vec<usize> },
}

/// Applies `edit` to a copy of `bp`. `Reorder` places old pair
/// `permutation[i]` at position `i`.
pub fn apply_edit(bp: &Blueprint, edit: &PlanEdit) -> Result<Blueprint, PlanError> {
    let len = bp.len();
    let check = |index: usize| {
        if index < len {
            Ok(index)
        } else {
            Err(PlanError::IndexOutOfRange { index, len })
        }
    };
    let mut pairs = bp.pairs().to_vec();

    match edit {
        PlanEdit::ToggleInclude { target_index } => {
            let i = check(*target_index)?;
            let flipped = !pairs[i].included();
            pairs[i] = pairs[i].clone().with_included(flipped);
        }
        PlanEdit::RemovePair { target_index } => {
            let i = check(*target_index)?;
            pairs.remove(i);
        }
        PlanEdit::AddQuestion { question_text } => {
            if bp.mode() != PlanMode::QuestionOnly {
                return Err(PlanError::ModeMismatch {
                    expected: PlanMode::QuestionOnly,
                    found: bp.mode(),
                });
            }
            pairs.push(QAPair::question_only(question_text.as_str())?);
        }
        PlanEdit::Reorder { permutation } => {
            let mut seen = vec![false; len];
            if permutation.len() != len {
                return Err(PlanError::InvalidPermutation { len });
            }
            for &p in permutation {
                if p >= len || seen[p] {
                    return Err(PlanError::InvalidPermutation { len });
                }
                seen[p] = true;
            }
            pairs = permutation.iter().map(|&p| bp.pairs()[p].clone()).collect();
        }
    }
    Ok(Blueprint::from_parts_unchecked(bp.mode(), pairs))
}
