mod common;

use blueprint::filter::{
    apply_policy, dedup_blueprint, filter_blueprint, is_answer_grounded, select_length,
    FilterPolicy, GroundingMethod, GroundingPolicy,
};
use blueprint::plan::{
    apply_edit, parse_model_output, serialize_blueprint, serialize_output, Blueprint, PlanEdit,
    PlanMode, QAPair, Summary,
};
use blueprint::text::{normalize, segment_sentences};
use proptest::prelude::*;

fn word() -> impl Strategy<Value = String> {
    "[a-z0-9$%,'-]{1,8}"
}

fn capitalized_words(max: usize) -> impl Strategy<Value = String> {
    ("[A-Z][a-z]{0,6}", prop::collection::vec(word(), 0..max)).prop_map(|(first, rest)| {
        std::iter::once(first)
            .chain(rest)
            .collect::<Vec<_>>()
            .join(" ")
    })
}

fn question() -> impl Strategy<Value = String> {
    capitalized_words(6).prop_map(|q| format!("{q}?"))
}

fn answer() -> impl Strategy<Value = String> {
    prop::collection::vec("[A-Za-z0-9$%-]{1,8}", 1..4).prop_map(|w| w.join(" "))
}

fn sentence() -> impl Strategy<Value = String> {
    (
        capitalized_words(10),
        prop::sample::select(vec!['.', '!', '?']),
    )
        .prop_map(|(s, t)| format!("{s}{t}"))
}

fn summary() -> impl Strategy<Value = Summary> {
    prop::collection::vec(sentence(), 0..6)
        .prop_map(|s| Summary::new(s).expect("generated sentences segment"))
}

fn qa_plan(max: usize) -> impl Strategy<Value = Blueprint> {
    prop::collection::vec((question(), answer()), 0..max).prop_map(|pairs| {
        Blueprint::new(
            PlanMode::Qa,
            pairs
                .into_iter()
                .map(|(q, a)| QAPair::qa(q, a).unwrap())
                .collect(),
        )
        .unwrap()
    })
}

fn question_plan(max: usize) -> impl Strategy<Value = Blueprint> {
    prop::collection::vec(question(), 0..max).prop_map(|qs| Blueprint::from_questions(qs).unwrap())
}

fn with_exclusions(plan: impl Strategy<Value = Blueprint>) -> impl Strategy<Value = Blueprint> {
    plan.prop_flat_map(|bp| {
        let n = bp.len();
        (Just(bp), prop::collection::vec(any::<bool>(), n))
    })
    .prop_map(|(bp, flags)| {
        let mut out = bp;
        for (i, off) in flags.into_iter().enumerate() {
            if off {
                out = apply_edit(&out, &PlanEdit::ToggleInclude { target_index: i }).unwrap();
            }
        }
        out
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn qa_output_round_trips(bp in qa_plan(8), s in summary()) {
        let text = serialize_output(&bp, &s);
        prop_assert_eq!(parse_model_output(&text, PlanMode::Qa).unwrap(), (bp, s));
    }

    #[test]
    fn question_only_output_round_trips(bp in question_plan(8), s in summary()) {
        let text = serialize_output(&bp, &s);
        prop_assert_eq!(parse_model_output(&text, PlanMode::QuestionOnly).unwrap(), (bp, s));
    }

    #[test]
    fn serialization_covers_included_pairs_in_order(bp in with_exclusions(qa_plan(8))) {
        prop_assert_eq!(serialize_blueprint(&bp), serialize_blueprint(&bp.only_included()));
        let reparsed = blueprint::plan::parse_blueprint(&serialize_blueprint(&bp), PlanMode::Qa).unwrap();
        prop_assert_eq!(reparsed, bp.only_included());
    }

    #[test]
    fn excluding_a_pair_leaves_the_others_untouched(bp in qa_plan(8), pick in any::<prop::sample::Index>()) {
        prop_assume!(!bp.is_empty());
        let j = pick.index(bp.len());
        let off = apply_edit(&bp, &PlanEdit::ToggleInclude { target_index: j }).unwrap();
        let removed = apply_edit(&bp, &PlanEdit::RemovePair { target_index: j }).unwrap();
        prop_assert_eq!(serialize_blueprint(&off), serialize_blueprint(&removed));
    }

    #[test]
    fn edits_are_pure(bp in with_exclusions(qa_plan(8)), pick in any::<prop::sample::Index>(), seed in any::<u64>()) {
        prop_assume!(!bp.is_empty());
        let before = bp.clone();
        let j = pick.index(bp.len());
        let once = apply_edit(&bp, &PlanEdit::ToggleInclude { target_index: j }).unwrap();
        let twice = apply_edit(&once, &PlanEdit::ToggleInclude { target_index: j }).unwrap();
        prop_assert_eq!(&twice, &bp);
        let identity = PlanEdit::Reorder { permutation: (0..bp.len()).collect() };
        prop_assert_eq!(&apply_edit(&bp, &identity).unwrap(), &bp);

        let mut perm: Vec<usize> = (0..bp.len()).collect();
        let mut r = common::rng(seed);
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut r);
        let reordered = apply_edit(&bp, &PlanEdit::Reorder { permutation: perm.clone() }).unwrap();
        for (i, &p) in perm.iter().enumerate() {
            prop_assert_eq!(&reordered.pairs()[i], &bp.pairs()[p]);
        }
        prop_assert_eq!(bp, before);
    }

    #[test]
    fn segmentation_is_idempotent(text in "[A-Za-z0-9 .!?,\n]{0,200}") {
        let first = segment_sentences(&text);
        prop_assert_eq!(segment_sentences(&text), first.clone());
        prop_assert_eq!(segment_sentences(&first.join(" ")), first.clone());
        for s in &first {
            prop_assert_eq!(segment_sentences(s), vec![s.clone()]);
        }
    }

    #[test]
    fn normalize_is_idempotent(text in "\\PC{0,80}") {
        let once = normalize(&text);
        prop_assert_eq!(normalize(&once), once);
    }

    #[test]
    fn filter_is_sound_and_complete(
        bp in with_exclusions(qa_plan(10)),
        input in prop::collection::vec(sentence(), 0..8),
        overlap in any::<bool>(),
        threshold in 0.05f64..=1.0,
    ) {
        let input = input.join(" ");
        let policy = if overlap {
            GroundingPolicy::new(GroundingMethod::TokenOverlap, threshold).unwrap()
        } else {
            GroundingPolicy::default()
        };
        let kept = filter_blueprint(&bp, &input, &policy).unwrap();
        let expected: Vec<QAPair> = bp
            .pairs()
            .iter()
            .filter(|p| matches!(is_answer_grounded(p.answer().unwrap(), &input, &policy), Ok(true)))
            .cloned()
            .collect();
        prop_assert_eq!(kept.pairs(), expected.as_slice());
        if !overlap {
            let answers: Vec<String> = bp.pairs().iter().map(|p| p.answer().unwrap().to_string()).collect();
            let oracle: Vec<QAPair> = common::containment_oracle(&answers, &input)
                .into_iter()
                .map(|i| bp.pairs()[i].clone())
                .collect();
            prop_assert_eq!(kept.pairs(), oracle.as_slice());
        }
        prop_assert_eq!(filter_blueprint(&kept, &input, &policy).unwrap(), kept);
    }

    #[test]
    fn transforms_are_idempotent_and_order_preserving(
        bp in with_exclusions(qa_plan(10)),
        input in prop::collection::vec(sentence(), 0..8),
        n in 0usize..12,
        dedup in any::<bool>(),
    ) {
        let input = input.join(" ");
        let is_subsequence = |small: &Blueprint, big: &Blueprint| {
            let mut it = big.pairs().iter();
            small.pairs().iter().all(|p| it.any(|q| q == p))
        };
        let filtered = filter_blueprint(&bp, &input, &GroundingPolicy::default()).unwrap();
        let deduped = dedup_blueprint(&bp);
        let cut = select_length(&bp, n);
        for out in [&filtered, &deduped, &cut] {
            prop_assert!(is_subsequence(out, &bp));
        }
        prop_assert_eq!(dedup_blueprint(&deduped), deduped.clone());
        prop_assert_eq!(select_length(&cut, n), cut.clone());
        prop_assert_eq!(cut.len(), n.min(bp.len()));
        let questions: Vec<String> = deduped.pairs().iter().map(|p| normalize(p.question())).collect();
        let mut unique = questions.clone();
        unique.sort();
        unique.dedup();
        prop_assert_eq!(unique.len(), questions.len());

        let policy = FilterPolicy { dedup, num_pairs: Some(n), ..FilterPolicy::default() };
        let combined = apply_policy(&bp, &input, &policy).unwrap();
        prop_assert!(is_subsequence(&combined, &filtered));
        prop_assert!(combined.len() <= n);
    }

    #[test]
    fn blueprint_json_round_trips(bp in with_exclusions(qa_plan(6)), q in with_exclusions(question_plan(6)), s in summary()) {
        for plan in [bp, q] {
            let json = serde_json::to_string(&plan).unwrap();
            prop_assert_eq!(serde_json::from_str::<Blueprint>(&json).unwrap(), plan);
        }
        let json = serde_json::to_string(&s).unwrap();
        prop_assert_eq!(serde_json::from_str::<Summary>(&json).unwrap(), s);
    }
}

#[test]
fn filter_rejects_question_only_plans() {
    let bp = Blueprint::from_questions(["Who?"]).unwrap();
    assert!(filter_blueprint(&bp, "text", &GroundingPolicy::default()).is_err());
}

#[test]
fn interchange_encoding_uses_documented_field_names() {
    let bp = Blueprint::new(PlanMode::Qa, vec![QAPair::qa("Who?", "Bob").unwrap()]).unwrap();
    let value = serde_json::to_value(&bp).unwrap();
    assert_eq!(
        value,
        serde_json::json!({"mode": "qa", "pairs": [{"question": "Who?", "answer": "Bob", "included": true}]})
    );
    let s = Summary::new(vec!["Bob did it.".into()]).unwrap();
    assert_eq!(
        serde_json::to_value(&s).unwrap(),
        serde_json::json!({"sentences": ["Bob did it."]})
    );
}
