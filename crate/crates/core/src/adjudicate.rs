//! Confidence-weighted vote aggregation.
//!
//! Each choice's confidence is the sum of the accuracies of the workers who
//! voted for it. The answer is the choice with the largest confidence, and
//! the crowd agreement score is that confidence over the total. With equal
//! accuracies this is plain percent agreement.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::corpus::{RelationType, SemanticQualifier};
use crate::rational::{format_exact, to_decimal, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AdjudicateError {
    #[error("judgment from unknown or rejected worker {0:?}")]
    UnknownVoter(String),
    #[error("judgments span several units: {0:?} and {1:?}")]
    MixedUnits(String, String),
    #[error("tally has no votes")]
    EmptyTally,
    #[error("total confidence is zero")]
    ZeroConfidence,
    #[error("{relation} {detail}")]
    Qualifier { relation: RelationType, detail: &'static str },
}

/// One worker's answer for one unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub worker_id: String,
    pub unit_id: String,
    pub relation: RelationType,
    pub qualifier: Option<SemanticQualifier>,
    pub submitted_at: String,
}

/// Qualifier is required for positive/speculative and forbidden otherwise.
pub fn check_qualifier(relation: RelationType, qualifier: Option<SemanticQualifier>) -> Result<(), AdjudicateError> {
    match (relation.takes_qualifier(), qualifier.is_some()) {
        (true, false) => Err(AdjudicateError::Qualifier { relation, detail: "requires a qualifier" }),
        (false, true) => Err(AdjudicateError::Qualifier { relation, detail: "does not take a qualifier" }),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceScore {
    pub confidence: Rational,
    pub votes: u32,
}

impl Default for ChoiceScore {
    fn default() -> Self {
        ChoiceScore { confidence: Rational::zero(), votes: 0 }
    }
}

/// Confidence and vote count for each of the four relation choices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChoiceTally {
    scores: [ChoiceScore; 4],
}

impl ChoiceTally {
    pub fn add_vote(&mut self, relation: RelationType, accuracy: &Rational) {
        let score = &mut self.scores[relation.index()];
        score.confidence += accuracy;
        score.votes += 1;
    }

    pub fn score(&self, relation: RelationType) -> &ChoiceScore {
        &self.scores[relation.index()]
    }

    pub fn confidence(&self, relation: RelationType) -> &Rational {
        &self.scores[relation.index()].confidence
    }

    pub fn votes(&self, relation: RelationType) -> u32 {
        self.scores[relation.index()].votes
    }

    pub fn total_confidence(&self) -> Rational {
        self.scores.iter().map(|s| &s.confidence).sum()
    }

    pub fn total_votes(&self) -> u32 {
        self.scores.iter().map(|s| s.votes).sum()
    }

    /// Highest-confidence choice, earliest in relation order on a tie, and
    /// whether a tie occurred.
    fn leader(&self) -> (RelationType, bool) {
        let mut best = RelationType::Positive;
        for r in RelationType::ALL {
            if self.confidence(r) > self.confidence(best) {
                best = r;
            }
        }
        let top = self.confidence(best);
        let tied = RelationType::ALL.iter().filter(|&&r| self.confidence(r) == top).count() > 1;
        (best, tied)
    }
}

impl Serialize for ChoiceTally {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Entry {
            confidence: String,
            votes: u32,
        }
        let mut map = serializer.serialize_map(Some(4))?;
        for r in RelationType::ALL {
            let s = self.score(r);
            map.serialize_entry(r.as_str(), &Entry { confidence: format_exact(&s.confidence), votes: s.votes })?;
        }
        map.end()
    }
}

/// Sums voter accuracies per choice. `accuracies` must hold exactly the
/// workers whose votes count; anyone missing is reported as unknown.
pub fn confidence_tally(
    judgments: &[Judgment],
    accuracies: &BTreeMap<String, Rational>,
) -> Result<ChoiceTally, AdjudicateError> {
    let mut tally = ChoiceTally::default();
    let mut unit: Option<&str> = None;
    for j in judgments {
        match unit {
            Some(u) if u != j.unit_id => return Err(AdjudicateError::MixedUnits(u.to_string(), j.unit_id.clone())),
            _ => unit = Some(&j.unit_id),
        }
        let accuracy =
            accuracies.get(&j.worker_id).ok_or_else(|| AdjudicateError::UnknownVoter(j.worker_id.clone()))?;
        tally.add_vote(j.relation, accuracy);
    }
    Ok(tally)
}

/// Crowd answer for a unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregatedAnswer {
    pub unit_id: String,
    pub chosen: RelationType,
    pub agreement: Rational,
    pub tie: bool,
    pub tally: ChoiceTally,
}

impl Serialize for AggregatedAnswer {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(6))?;
        map.serialize_entry("unit_id", &self.unit_id)?;
        map.serialize_entry("chosen", &self.chosen)?;
        map.serialize_entry("agreement", &to_decimal(&self.agreement, 4))?;
        map.serialize_entry("agreement_exact", &format_exact(&self.agreement))?;
        map.serialize_entry("tie", &self.tie)?;
        map.serialize_entry("tally", &self.tally)?;
        map.end()
    }
}

pub fn aggregate_unit(unit_id: &str, tally: &ChoiceTally) -> Result<AggregatedAnswer, AdjudicateError> {
    if tally.total_votes() == 0 {
        return Err(AdjudicateError::EmptyTally);
    }
    let (chosen, tie) = tally.leader();
    Ok(AggregatedAnswer {
        unit_id: unit_id.to_string(),
        chosen,
        agreement: crowd_agreement(tally)?,
        tie,
        tally: tally.clone(),
    })
}

/// Winning confidence divided by total confidence.
pub fn crowd_agreement(tally: &ChoiceTally) -> Result<Rational, AdjudicateError> {
    let total = tally.total_confidence();
    if total.is_zero() {
        return Err(AdjudicateError::ZeroConfidence);
    }
    let (chosen, _) = tally.leader();
    Ok(tally.confidence(chosen) / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use RelationType::*;

    fn judgments(votes: &[(&str, RelationType)]) -> Vec<Judgment> {
        votes
            .iter()
            .map(|(w, r)| Judgment {
                worker_id: w.to_string(),
                unit_id: "u1".into(),
                relation: *r,
                qualifier: r.takes_qualifier().then_some(SemanticQualifier::Causes),
                submitted_at: String::new(),
            })
            .collect()
    }

    fn equal_accuracy(n: usize, acc: Rational) -> BTreeMap<String, Rational> {
        (0..n).map(|i| (format!("w{i}"), acc.clone())).collect()
    }

    #[test]
    fn unanimous_tally() {
        let votes: Vec<(String, RelationType)> = (0..10).map(|i| (format!("w{i}"), Positive)).collect();
        let votes: Vec<(&str, RelationType)> = votes.iter().map(|(w, r)| (w.as_str(), *r)).collect();
        let tally = confidence_tally(&judgments(&votes), &equal_accuracy(10, ratio(4, 5))).unwrap();
        assert_eq!(tally.confidence(Positive), &ratio(8, 1));
        assert!(tally.confidence(Negative).is_zero());
        assert_eq!(crowd_agreement(&tally).unwrap(), ratio(1, 1));
    }

    #[test]
    fn mixed_accuracies() {
        let acc: BTreeMap<String, Rational> = [
            ("a".to_string(), ratio(9, 10)),
            ("b".to_string(), ratio(8, 10)),
            ("c".to_string(), ratio(7, 10)),
            ("d".to_string(), ratio(75, 100)),
        ]
        .into();
        let tally = confidence_tally(
            &judgments(&[("a", Positive), ("b", Positive), ("c", FalseCooccurrence), ("d", FalseCooccurrence)]),
            &acc,
        )
        .unwrap();
        assert_eq!(tally.confidence(Positive), &ratio(17, 10));
        assert_eq!(tally.confidence(FalseCooccurrence), &ratio(29, 20));
        assert_eq!(tally.total_confidence(), ratio(63, 20));
        let answer = aggregate_unit("u1", &tally).unwrap();
        assert_eq!((answer.chosen, answer.tie), (Positive, false));
        assert_eq!(answer.agreement, ratio(34, 63));
        assert_eq!(to_decimal(&answer.agreement, 4), "0.5397");
    }

    #[test]
    fn six_four_split_is_percent_agreement() {
        let names: Vec<String> = (0..10).map(|i| format!("w{i}")).collect();
        let votes: Vec<(&str, RelationType)> = names
            .iter()
            .enumerate()
            .map(|(i, w)| (w.as_str(), if i < 6 { Positive } else { FalseCooccurrence }))
            .collect();
        let tally = confidence_tally(&judgments(&votes), &equal_accuracy(10, ratio(17, 20))).unwrap();
        assert_eq!(tally.confidence(Positive) / tally.confidence(FalseCooccurrence), ratio(6, 4));
        assert_eq!(crowd_agreement(&tally).unwrap(), ratio(3, 5));
    }

    #[test]
    fn exact_tie_uses_relation_order() {
        let names: Vec<String> = (0..10).map(|i| format!("w{i}")).collect();
        let votes: Vec<(&str, RelationType)> = names
            .iter()
            .enumerate()
            .map(|(i, w)| (w.as_str(), if i % 2 == 0 { FalseCooccurrence } else { Positive }))
            .collect();
        let tally = confidence_tally(&judgments(&votes), &equal_accuracy(10, ratio(4, 5))).unwrap();
        let answer = aggregate_unit("u1", &tally).unwrap();
        assert_eq!((answer.chosen, answer.tie), (Positive, true));
        assert_eq!(answer.agreement, ratio(1, 2));
    }

    #[test]
    fn single_vote() {
        let tally = confidence_tally(&judgments(&[("w0", Speculative)]), &equal_accuracy(1, ratio(7, 10))).unwrap();
        let answer = aggregate_unit("u1", &tally).unwrap();
        assert_eq!((answer.chosen, answer.agreement.clone(), answer.tie), (Speculative, ratio(1, 1), false));
    }

    #[test]
    fn errors() {
        assert_eq!(
            confidence_tally(&judgments(&[("ghost", Positive)]), &BTreeMap::new()),
            Err(AdjudicateError::UnknownVoter("ghost".into()))
        );
        let mut js = judgments(&[("w0", Positive), ("w1", Positive)]);
        js[1].unit_id = "u2".into();
        assert!(matches!(confidence_tally(&js, &equal_accuracy(2, ratio(1, 1))), Err(AdjudicateError::MixedUnits(..))));
        assert_eq!(aggregate_unit("u1", &ChoiceTally::default()), Err(AdjudicateError::EmptyTally));
        assert_eq!(crowd_agreement(&ChoiceTally::default()), Err(AdjudicateError::ZeroConfidence));
    }

    #[test]
    fn qualifier_rule() {
        assert!(check_qualifier(Positive, Some(SemanticQualifier::Treats)).is_ok());
        assert!(check_qualifier(Negative, Some(SemanticQualifier::Causes)).is_err());
        assert!(check_qualifier(Speculative, None).is_err());
        assert!(check_qualifier(FalseCooccurrence, None).is_ok());
    }

    #[test]
    fn serialized_shape() {
        let tally = confidence_tally(&judgments(&[("w0", Positive)]), &equal_accuracy(1, ratio(4, 5))).unwrap();
        let json = serde_json::to_value(aggregate_unit("u1", &tally).unwrap()).unwrap();
        assert_eq!(json["agreement"], "1.0000");
        assert_eq!(json["agreement_exact"], "1/1");
        assert_eq!(json["tally"]["positive"]["confidence"], "4/5");
        assert_eq!(json["tally"]["false"]["votes"], 0);
    }
}
