//! Comparisons between crowd answers and expert gold.

pub mod special;
pub mod stats;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::adjudicate::AggregatedAnswer;
use crate::corpus::{GoldRecord, RelationType};
use crate::rational::{format_exact, ratio, to_decimal, to_f64, Rational};

pub use special::t_sf;
pub use stats::{describe, format_p_value, t_test_unpaired, DescriptiveStats, TTestResult};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalyticsError {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("no gold record for unit {0:?}")]
    MissingGold(String),
    #[error("unit {0:?} has no published gold relation")]
    Unpublished(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("degrees of freedom must be at least 1, got {0}")]
    InvalidDegreesOfFreedom(u64),
    #[error("need at least {needed} observations per group, got {got}")]
    InsufficientSample { needed: usize, got: usize },
}

pub type Answers = BTreeMap<String, AggregatedAnswer>;
pub type GoldMap = BTreeMap<String, GoldRecord>;

fn published_for<'a>(gold: &'a GoldMap, unit_id: &str) -> Result<(&'a GoldRecord, RelationType), AnalyticsError> {
    let record = gold.get(unit_id).ok_or_else(|| AnalyticsError::MissingGold(unit_id.to_string()))?;
    let published = record.published.ok_or_else(|| AnalyticsError::Unpublished(unit_id.to_string()))?;
    Ok((record, published))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatchRecord {
    pub unit_id: String,
    pub crowd: RelationType,
    pub gold: RelationType,
    pub matched: bool,
    pub tie: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgreementSummary {
    pub matches: usize,
    pub total: usize,
    pub fraction: Rational,
    pub units: Vec<MatchRecord>,
}

impl Serialize for AgreementSummary {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(6))?;
        map.serialize_entry("matches", &self.matches)?;
        map.serialize_entry("total", &self.total)?;
        map.serialize_entry("fraction", &to_decimal(&self.fraction, 4))?;
        map.serialize_entry("exact", &format_exact(&self.fraction))?;
        map.serialize_entry("ties", &self.units.iter().filter(|m| m.tie).count())?;
        map.serialize_entry("units", &self.units)?;
        map.end()
    }
}

fn agreement_with(
    answers: &Answers,
    gold: &GoldMap,
    project: fn(RelationType) -> RelationType,
) -> Result<AgreementSummary, AnalyticsError> {
    if answers.is_empty() {
        return Err(AnalyticsError::EmptyInput("no aggregated answers"));
    }
    let mut units = Vec::with_capacity(answers.len());
    for (unit_id, answer) in answers {
        let (_, published) = published_for(gold, unit_id)?;
        units.push(MatchRecord {
            unit_id: unit_id.clone(),
            crowd: answer.chosen,
            gold: published,
            matched: project(answer.chosen) == project(published),
            tie: answer.tie,
        });
    }
    let matches = units.iter().filter(|m| m.matched).count();
    Ok(AgreementSummary { matches, total: units.len(), fraction: ratio(matches as u64, units.len() as u64), units })
}

/// Share of units whose crowd answer equals the published relation exactly.
/// Tied answers count with their chosen relation; the tie is recorded.
pub fn strict_agreement(answers: &Answers, gold: &GoldMap) -> Result<AgreementSummary, AnalyticsError> {
    agreement_with(answers, gold, |r| r)
}

/// As [`strict_agreement`] after mapping speculative onto positive on both sides.
pub fn relaxed_agreement(answers: &Answers, gold: &GoldMap) -> Result<AgreementSummary, AnalyticsError> {
    agreement_with(answers, gold, RelationType::merged)
}

/// Crowd agreement scores grouped by expert consensus level, in unit-id order.
pub fn stratify_by_consensus(answers: &Answers, gold: &GoldMap) -> Result<BTreeMap<u8, Vec<f64>>, AnalyticsError> {
    let mut groups: BTreeMap<u8, Vec<f64>> = BTreeMap::new();
    for (unit_id, answer) in answers {
        let record = gold.get(unit_id).ok_or_else(|| AnalyticsError::MissingGold(unit_id.clone()))?;
        groups.entry(record.consensus_level).or_default().push(to_f64(&answer.agreement));
    }
    Ok(groups)
}

/// Expert support counts per consensus level, and how many records with two or
/// more supporting experts were left unpublished.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SupportHistogram {
    /// Indexed by level − 1.
    pub counts: [u64; 3],
    pub published: [u64; 3],
    pub excluded: [u64; 3],
    pub total: u64,
    pub published_count: u64,
    pub excluded_count: u64,
}

impl SupportHistogram {
    pub fn count(&self, level: u8) -> u64 {
        self.counts[level as usize - 1]
    }
}

impl Serialize for SupportHistogram {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let by_level = |a: &[u64; 3]| -> BTreeMap<String, u64> {
            a.iter().enumerate().map(|(i, c)| ((i + 1).to_string(), *c)).collect()
        };
        let rate = exclusion_rate(self).ok();
        let mut map = serializer.serialize_map(Some(6))?;
        map.serialize_entry("counts", &by_level(&self.counts))?;
        map.serialize_entry("total", &self.total)?;
        map.serialize_entry("published_count", &self.published_count)?;
        map.serialize_entry("excluded_count", &self.excluded_count)?;
        map.serialize_entry("exclusion_rate", &rate.as_ref().map(|r| to_decimal(r, 4)))?;
        map.serialize_entry("exclusion_rate_exact", &rate.as_ref().map(format_exact))?;
        map.end()
    }
}

pub fn support_histogram<'a>(raw: impl IntoIterator<Item = &'a GoldRecord>) -> SupportHistogram {
    let mut h = SupportHistogram::default();
    for record in raw {
        let i = record.consensus_level as usize - 1;
        h.counts[i] += 1;
        h.total += 1;
        if record.published.is_some() {
            h.published[i] += 1;
            h.published_count += 1;
        } else if record.consensus_level >= 2 {
            h.excluded[i] += 1;
            h.excluded_count += 1;
        }
    }
    h
}

/// Unpublished share among records with two or more supporting experts.
pub fn exclusion_rate(h: &SupportHistogram) -> Result<Rational, AnalyticsError> {
    let denom = h.counts[1] + h.counts[2];
    if denom == 0 {
        return Err(AnalyticsError::EmptyInput("no records with two or more supporting experts"));
    }
    Ok(ratio(h.excluded_count, denom))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisagreementRecord {
    pub unit_id: String,
    pub gold: RelationType,
    pub crowd: RelationType,
    pub agreement: Rational,
    pub tie: bool,
    /// Human-assigned cause; never computed.
    pub cause_label: Option<String>,
}

impl Serialize for DisagreementRecord {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(7))?;
        map.serialize_entry("unit_id", &self.unit_id)?;
        map.serialize_entry("gold", &self.gold)?;
        map.serialize_entry("crowd", &self.crowd)?;
        map.serialize_entry("agreement", &to_decimal(&self.agreement, 4))?;
        map.serialize_entry("agreement_exact", &format_exact(&self.agreement))?;
        map.serialize_entry("tie", &self.tie)?;
        map.serialize_entry("cause_label", &self.cause_label)?;
        map.end()
    }
}

/// Strict mismatches, least-confident first (ties by unit id).
pub fn disagreement_report(answers: &Answers, gold: &GoldMap) -> Result<Vec<DisagreementRecord>, AnalyticsError> {
    let mut out = Vec::new();
    for (unit_id, answer) in answers {
        let (_, published) = published_for(gold, unit_id)?;
        if answer.chosen != published {
            out.push(DisagreementRecord {
                unit_id: unit_id.clone(),
                gold: published,
                crowd: answer.chosen,
                agreement: answer.agreement.clone(),
                tie: answer.tie,
                cause_label: None,
            });
        }
    }
    out.sort_by(|a, b| a.agreement.cmp(&b.agreement).then_with(|| a.unit_id.cmp(&b.unit_id)));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TTestBlock {
    /// Consensus levels compared, first group minus second.
    pub groups: [String; 2],
    pub t: f64,
    pub df: u64,
    pub p: f64,
    pub p_display: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conventions {
    pub sd: &'static str,
    pub quartiles: &'static str,
    pub t_test: &'static str,
    pub agreement_digits: u32,
}

const CONVENTIONS: Conventions = Conventions {
    sd: "sample (n-1)",
    quartiles: "linear interpolation between order statistics (type 7)",
    t_test: "Student, pooled variance, two-sided; groups [low consensus, high consensus]",
    agreement_digits: 4,
};

/// Full analytics for one set of crowd answers against gold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub status: &'static str,
    pub units: usize,
    pub strict: Option<AgreementSummary>,
    pub relaxed: Option<AgreementSummary>,
    pub strata: BTreeMap<String, DescriptiveStats>,
    pub t_test: Option<TTestBlock>,
    pub t_test_skipped: Option<String>,
    pub histogram: SupportHistogram,
    pub disagreements: Vec<DisagreementRecord>,
    pub answers: Vec<AggregatedAnswer>,
    pub conventions: Conventions,
}

impl Report {
    /// `gold` must cover every answered unit; the support histogram runs over
    /// every record in it.
    pub fn build(answers: &Answers, gold: &GoldMap) -> Result<Report, AnalyticsError> {
        let histogram = support_histogram(gold.values());
        if answers.is_empty() {
            return Ok(Report {
                status: "no units",
                units: 0,
                strict: None,
                relaxed: None,
                strata: BTreeMap::new(),
                t_test: None,
                t_test_skipped: Some("no units".into()),
                histogram,
                disagreements: Vec::new(),
                answers: Vec::new(),
                conventions: CONVENTIONS,
            });
        }
        let strict = strict_agreement(answers, gold)?;
        let relaxed = relaxed_agreement(answers, gold)?;
        let groups = stratify_by_consensus(answers, gold)?;
        let mut strata = BTreeMap::new();
        for (level, scores) in &groups {
            strata.insert(level.to_string(), describe(scores)?);
        }
        let (t_test, t_test_skipped) = match (groups.get(&2), groups.get(&3)) {
            (Some(low), Some(high)) => match t_test_unpaired(low, high) {
                Ok(r) => (
                    Some(TTestBlock {
                        groups: ["2".into(), "3".into()],
                        t: r.t,
                        df: r.df,
                        p: r.p,
                        p_display: format_p_value(r.p),
                    }),
                    None,
                ),
                Err(e) => (None, Some(e.to_string())),
            },
            _ => (None, Some("needs both consensus level 2 and level 3 units".into())),
        };
        Ok(Report {
            status: "ok",
            units: answers.len(),
            strict: Some(strict),
            relaxed: Some(relaxed),
            strata,
            t_test,
            t_test_skipped,
            histogram,
            disagreements: disagreement_report(answers, gold)?,
            answers: answers.values().cloned().collect(),
            conventions: CONVENTIONS,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Box-plot data per consensus level.
    pub fn boxplot_csv(&self) -> String {
        let mut out = String::from("level,q1,median,q3,whisker_low,whisker_high\n");
        for (level, d) in &self.strata {
            let _ = writeln!(
                out,
                "{level},{:.6},{:.6},{:.6},{:.6},{:.6}",
                d.q1, d.median, d.q3, d.whisker_low, d.whisker_high
            );
        }
        out
    }

    /// Expert support counts per level.
    pub fn histogram_csv(&self) -> String {
        let h = &self.histogram;
        let mut out = String::from("level,count,published,excluded\n");
        for i in 0..3 {
            let _ = writeln!(out, "{},{},{},{}", i + 1, h.counts[i], h.published[i], h.excluded[i]);
        }
        out
    }

    pub fn disagreements_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.disagreements).expect("disagreements serialize");
        s.push('\n');
        s
    }
}
