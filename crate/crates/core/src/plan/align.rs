use std::collections::BTreeMap;

use super::{Blueprint, PlanError, PlanMode, Summary};
use crate::text::normalize;

/// Summary sentence index to the indices of the plan pairs it realizes.
/// Sentences with no matching pair are absent.
pub type Alignment = BTreeMap<usize, Vec<usize>>;

/// Links included pair `j` to sentence `i` when the normalized answer of `j`
/// occurs in the normalized sentence `i`. Pair indices refer to positions in
/// the full plan, excluded pairs included.
pub fn align_blueprint_to_summary(
    bp: &Blueprint,
    summary: &Summary,
) -> Result<Alignment, PlanError> {
    if bp.mode() != PlanMode::Qa {
        return Err(PlanError::ModeMismatch {
            expected: PlanMode::Qa,
            found: bp.mode(),
        });
    }
    let answers: Vec<(usize, String)> = bp
        .included()
        .filter_map(|(j, p)| p.answer().map(|a| (j, normalize(a))))
        .filter(|(_, a)| !a.is_empty())
        .collect();

    let mut alignment = Alignment::new();
    for (i, sentence) in summary.sentences().iter().enumerate() {
        let sentence = normalize(sentence);
        let matched: Vec<usize> = answers
            .iter()
            .filter(|(_, a)| sentence.contains(a.as_str()))
            .map(|(j, _)| *j)
            .collect();
        if !matched.is_empty() {
            alignment.insert(i, matched);
        }
    }
    Ok(alignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::QAPair;

    #[test]
    fn substring_alignment() {
        let bp = Blueprint::new(PlanMode::Qa, vec![QAPair::qa("Q?", "iceberg").unwrap()]).unwrap();
        let s = Summary::new(vec!["It hit an ICEBERG.".into()]).unwrap();
        assert_eq!(
            align_blueprint_to_summary(&bp, &s).unwrap(),
            Alignment::from([(0, vec![0])])
        );
    }

    #[test]
    fn unmatched_pair_maps_nowhere() {
        let bp = Blueprint::new(PlanMode::Qa, vec![QAPair::qa("Q?", "unicorn").unwrap()]).unwrap();
        let s = Summary::new(vec!["It hit an iceberg.".into()]).unwrap();
        assert!(align_blueprint_to_summary(&bp, &s).unwrap().is_empty());
    }

    #[test]
    fn excluded_pairs_do_not_align() {
        let bp = Blueprint::new(
            PlanMode::Qa,
            vec![
                QAPair::qa("A?", "iceberg").unwrap().with_included(false),
                QAPair::qa("B?", "night").unwrap(),
            ],
        )
        .unwrap();
        let s = Summary::new(vec!["It hit an iceberg at night.".into()]).unwrap();
        assert_eq!(
            align_blueprint_to_summary(&bp, &s).unwrap(),
            Alignment::from([(0, vec![1])])
        );
    }

    #[test]
    fn question_only_is_rejected() {
        let bp = Blueprint::from_questions(["Why?"]).unwrap();
        assert!(matches!(
            align_blueprint_to_summary(&bp, &Summary::default()),
            Err(PlanError::ModeMismatch { .. })
        ));
    }
}
