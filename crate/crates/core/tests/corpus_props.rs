use std::collections::BTreeSet;

use proptest::prelude::*;
use relcrowd_core::corpus::synthetic::{generate, SyntheticSpec};
use relcrowd_core::corpus::{parse_corpus, sample_units, write_corpus};
use relcrowd_core::quality::{grade_quiz, PassThreshold, TestQuestion};
use relcrowd_core::{RelationType, Worker};

fn spec() -> impl Strategy<Value = SyntheticSpec> {
    (0usize..15, 0usize..15, 0usize..5, 0usize..5).prop_map(|(unanimous, majority, majority_unpublished, singleton)| {
        SyntheticSpec { unanimous, majority, majority_unpublished, singleton }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn write_then_parse_is_identity(spec in spec(), seed in any::<u64>()) {
        let corpus = generate(&spec, seed);
        let mut buf = Vec::new();
        write_corpus(&corpus, &mut buf).unwrap();
        let back = parse_corpus(&buf[..]).unwrap();
        prop_assert_eq!(back.units(), corpus.units());
        prop_assert_eq!(back.gold(), corpus.gold());
    }

    #[test]
    fn samples_are_distinct_prefix_stable_and_seeded(seed in any::<u64>(), n in 0usize..40) {
        let corpus = generate(&SyntheticSpec { unanimous: 20, majority: 20, ..SyntheticSpec::default() }, 5);
        let s = sample_units(&corpus, n, seed).unwrap();
        let ids: BTreeSet<_> = s.iter().map(|u| u.unit_id.clone()).collect();
        prop_assert_eq!(ids.len(), n);
        prop_assert!(ids.iter().all(|id| corpus.unit(id).is_some()));
        let longer = sample_units(&corpus, n + 1, seed).unwrap();
        prop_assert_eq!(&longer[..n], &s[..]);
        prop_assert_eq!(sample_units(&corpus, n, seed).unwrap(), s);
    }

    #[test]
    fn quiz_grade_ignores_response_order(answers in prop::collection::vec(0usize..4, 10), perm_seed in any::<u64>()) {
        let corpus = generate(&SyntheticSpec { unanimous: 10, ..SyntheticSpec::default() }, 8);
        let pool: Vec<TestQuestion> = corpus
            .units()
            .iter()
            .enumerate()
            .map(|(i, u)| TestQuestion {
                question_id: format!("q{:02}", i + 1),
                unit: u.clone(),
                gold_relation: corpus.gold_for(&u.unit_id).unwrap().published.unwrap(),
            })
            .collect();
        let responses: Vec<(String, RelationType)> =
            pool.iter().zip(&answers).map(|(q, &a)| (q.question_id.clone(), RelationType::ALL[a])).collect();
        let mut shuffled = responses.clone();
        relcrowd_core::rng::shuffle(&mut shuffled, &mut relcrowd_core::rng::seeded(perm_seed));
        let (mut w1, mut w2) = (Worker::new("a"), Worker::new("a"));
        let o1 = grade_quiz(&mut w1, &responses, &pool, PassThreshold::default()).unwrap();
        let o2 = grade_quiz(&mut w2, &shuffled, &pool, PassThreshold::default()).unwrap();
        prop_assert_eq!(o1, o2);
        prop_assert_eq!(w1, w2);
        let expected = pool.iter().zip(&answers).filter(|(q, &a)| q.gold_relation == RelationType::ALL[a]).count();
        prop_assert_eq!(o1.correct as usize, expected);
        prop_assert_eq!(o1.passed, expected >= 7);
    }
}

#[test]
fn sample_range_rule() {
    let corpus = generate(&SyntheticSpec::two_level_244(), 1);
    assert_eq!(sample_units(&corpus, 244, 3).unwrap().len(), 244);
    assert!(sample_units(&corpus, 245, 3).is_err());
    assert!(sample_units(&corpus, 0, 3).unwrap().is_empty());
}
