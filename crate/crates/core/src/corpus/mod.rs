//! Sentences, entity spans, relation vocabulary and expert gold records.
//!
//! Corpora are stored as JSON Lines, one unit per line with its gold record
//! embedded:
//!
//! ```json
//! {"unit_id":"u0001","pmid":"1234","sentence":"aspirin prevents stroke",
//!  "drug":{"start":0,"end":7,"surface":"aspirin"},
//!  "disease":{"start":17,"end":23,"surface":"stroke"},
//!  "gold":{"expert_votes":["positive","positive","positive"],"published":"positive"}}
//! ```
//!
//! Span offsets count Unicode scalar values, not bytes.

pub mod synthetic;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::rng;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: malformed JSON at byte offset {byte_offset}: {message}")]
    Parse { line: usize, byte_offset: usize, message: String },
    #[error("line {line}: unit {unit_id:?}: {message}")]
    Validation { line: usize, unit_id: String, message: String },
    #[error("line {line}: duplicate unit_id {unit_id:?}")]
    DuplicateUnit { line: usize, unit_id: String },
    #[error("line {line}: not valid UTF-8")]
    Encoding { line: usize },
    #[error("requested {requested} units but the corpus has {available}")]
    SampleRange { requested: usize, available: usize },
    #[error("invalid unit {unit_id:?}: {message}")]
    InvalidUnit { unit_id: String, message: String },
    #[error("invalid gold record for {unit_id:?}: {message}")]
    InvalidGold { unit_id: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Relation between the highlighted drug and disease.
///
/// Declaration order is the tie-breaking order used everywhere:
/// positive < speculative < negative < false co-occurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelationType {
    #[serde(rename = "positive")]
    Positive,
    #[serde(rename = "speculative")]
    Speculative,
    #[serde(rename = "negative")]
    Negative,
    #[serde(rename = "false")]
    FalseCooccurrence,
}

impl RelationType {
    pub const ALL: [RelationType; 4] =
        [RelationType::Positive, RelationType::Speculative, RelationType::Negative, RelationType::FalseCooccurrence];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RelationType::Positive => "positive",
            RelationType::Speculative => "speculative",
            RelationType::Negative => "negative",
            RelationType::FalseCooccurrence => "false",
        }
    }

    /// Collapses speculative into positive; everything else is unchanged.
    pub fn merged(self) -> RelationType {
        match self {
            RelationType::Speculative => RelationType::Positive,
            other => other,
        }
    }

    /// Positive and speculative judgments carry a semantic qualifier.
    pub fn takes_qualifier(self) -> bool {
        matches!(self, RelationType::Positive | RelationType::Speculative)
    }
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RelationType::ALL.into_iter().find(|r| r.as_str() == s).ok_or_else(|| format!("unknown relation {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemanticQualifier {
    Causes,
    Treats,
    NoMoreInfo,
    OtherRelation,
}

impl SemanticQualifier {
    pub const ALL: [SemanticQualifier; 4] = [
        SemanticQualifier::Causes,
        SemanticQualifier::Treats,
        SemanticQualifier::NoMoreInfo,
        SemanticQualifier::OtherRelation,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntityKind {
    Drug,
    Disease,
}

/// A highlighted mention. `start..end` are char offsets into the sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub surface: String,
    #[serde(skip)]
    pub kind: EntityKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpanWire {
    start: usize,
    end: usize,
    surface: String,
}

/// One sentence with a highlighted drug and disease; the atom of annotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "UnitWire")]
pub struct Unit {
    pub unit_id: String,
    pub pmid: String,
    pub sentence: String,
    pub drug: EntitySpan,
    pub disease: EntitySpan,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct UnitWire {
    unit_id: String,
    pmid: String,
    sentence: String,
    drug: SpanWire,
    disease: SpanWire,
}

impl TryFrom<UnitWire> for Unit {
    type Error = CorpusError;
    fn try_from(w: UnitWire) -> Result<Self, Self::Error> {
        let span = |s: SpanWire, kind| EntitySpan { start: s.start, end: s.end, surface: s.surface, kind };
        Unit::new(w.unit_id, w.pmid, w.sentence, span(w.drug, EntityKind::Drug), span(w.disease, EntityKind::Disease))
    }
}

impl Unit {
    pub fn new(
        unit_id: String,
        pmid: String,
        sentence: String,
        drug: EntitySpan,
        disease: EntitySpan,
    ) -> Result<Unit, CorpusError> {
        let unit = Unit { unit_id, pmid, sentence, drug, disease };
        unit.validate().map_err(|message| CorpusError::InvalidUnit { unit_id: unit.unit_id.clone(), message })?;
        Ok(unit)
    }

    fn validate(&self) -> Result<(), String> {
        if self.unit_id.is_empty() {
            return Err("empty unit_id".into());
        }
        if self.drug.kind != EntityKind::Drug || self.disease.kind != EntityKind::Disease {
            return Err("span kinds must be drug and disease".into());
        }
        let chars: Vec<char> = self.sentence.chars().collect();
        for (name, span) in [("drug", &self.drug), ("disease", &self.disease)] {
            if span.start >= span.end || span.end > chars.len() {
                return Err(format!(
                    "{name} span [{}, {}) outside sentence of length {}",
                    span.start,
                    span.end,
                    chars.len()
                ));
            }
            let slice: String = chars[span.start..span.end].iter().collect();
            if slice != span.surface {
                return Err(format!("{name} surface {:?} does not match sentence slice {slice:?}", span.surface));
            }
        }
        if self.drug.start < self.disease.end && self.disease.start < self.drug.end {
            return Err("drug and disease spans overlap".into());
        }
        Ok(())
    }
}

/// Raw expert annotation for one unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GoldWire")]
pub struct GoldRecord {
    pub unit_id: String,
    pub expert_votes: Vec<RelationType>,
    pub published: Option<RelationType>,
    #[serde(skip_serializing)]
    pub consensus_level: u8,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct GoldWire {
    unit_id: String,
    expert_votes: Vec<RelationType>,
    published: Option<RelationType>,
}

impl TryFrom<GoldWire> for GoldRecord {
    type Error = CorpusError;
    fn try_from(w: GoldWire) -> Result<Self, Self::Error> {
        GoldRecord::new(w.unit_id, w.expert_votes, w.published)
    }
}

impl GoldRecord {
    pub fn new(
        unit_id: String,
        expert_votes: Vec<RelationType>,
        published: Option<RelationType>,
    ) -> Result<GoldRecord, CorpusError> {
        let invalid = |message: String| CorpusError::InvalidGold { unit_id: unit_id.clone(), message };
        if expert_votes.is_empty() || expert_votes.len() > 3 {
            return Err(invalid(format!("expected 1 to 3 expert votes, got {}", expert_votes.len())));
        }
        if let Some(p) = published {
            let support = expert_votes.iter().filter(|&&v| v == p).count();
            if support < 2 {
                return Err(invalid(format!("published relation {p} is supported by {support} expert(s); need 2")));
            }
        }
        let consensus_level = modal(&expert_votes).1;
        Ok(GoldRecord { unit_id, expert_votes, published, consensus_level })
    }

    /// The most frequent vote, earliest in relation order on a tie.
    pub fn modal_vote(&self) -> RelationType {
        modal(&self.expert_votes).0
    }

    /// Published relation when present, otherwise the modal expert vote.
    pub fn reference_relation(&self) -> RelationType {
        self.published.unwrap_or_else(|| self.modal_vote())
    }
}

fn modal(votes: &[RelationType]) -> (RelationType, u8) {
    let mut counts = [0u8; 4];
    for v in votes {
        counts[v.index()] += 1;
    }
    let mut best = RelationType::Positive;
    for r in RelationType::ALL {
        if counts[r.index()] > counts[best.index()] {
            best = r;
        }
    }
    (best, counts[best.index()])
}

/// Number of expert votes equal to the modal vote: 3 unanimous, 2 majority,
/// 1 when no two experts agree.
pub fn consensus_level(record: &GoldRecord) -> u8 {
    record.consensus_level
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusLine {
    unit_id: String,
    pmid: String,
    sentence: String,
    drug: SpanWire,
    disease: SpanWire,
    #[serde(default)]
    gold: Option<GoldLine>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GoldLine {
    expert_votes: Vec<RelationType>,
    published: Option<RelationType>,
}

/// Validated units plus their gold records.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    units: Vec<Unit>,
    gold: BTreeMap<String, GoldRecord>,
    index: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(units: Vec<Unit>, gold: Vec<GoldRecord>) -> Result<Corpus, CorpusError> {
        let mut index = HashMap::with_capacity(units.len());
        for (i, unit) in units.iter().enumerate() {
            if index.insert(unit.unit_id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateUnit { line: i + 1, unit_id: unit.unit_id.clone() });
            }
        }
        let mut by_id = BTreeMap::new();
        for record in gold {
            if !index.contains_key(&record.unit_id) {
                return Err(CorpusError::InvalidGold {
                    unit_id: record.unit_id.clone(),
                    message: "gold record for a unit that does not exist".into(),
                });
            }
            if by_id.contains_key(&record.unit_id) {
                return Err(CorpusError::InvalidGold {
                    unit_id: record.unit_id.clone(),
                    message: "duplicate gold record".into(),
                });
            }
            by_id.insert(record.unit_id.clone(), record);
        }
        Ok(Corpus { units, gold: by_id, index })
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn gold(&self) -> &BTreeMap<String, GoldRecord> {
        &self.gold
    }

    pub fn unit(&self, unit_id: &str) -> Option<&Unit> {
        self.index.get(unit_id).map(|&i| &self.units[i])
    }

    pub fn gold_for(&self, unit_id: &str) -> Option<&GoldRecord> {
        self.gold.get(unit_id)
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }
}

/// Reads and validates a JSON Lines corpus. Blank lines are skipped.
pub fn parse_corpus<R: BufRead>(mut reader: R) -> Result<Corpus, CorpusError> {
    let mut units = Vec::new();
    let mut gold = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut offset = 0usize;
    let mut buf = Vec::new();
    let mut line_no = 0usize;
    loop {
        buf.clear();
        let read = reader.read_until(b'\n', &mut buf)?;
        if read == 0 {
            break;
        }
        line_no += 1;
        let line_start = offset;
        offset += read;
        let text = std::str::from_utf8(&buf).map_err(|_| CorpusError::Encoding { line: line_no })?;
        if text.trim().is_empty() {
            continue;
        }
        let record: CorpusLine = serde_json::from_str(text).map_err(|e| CorpusError::Parse {
            line: line_no,
            byte_offset: line_start + e.column().saturating_sub(1),
            message: e.to_string(),
        })?;
        let unit_id = record.unit_id.clone();
        if seen.insert(unit_id.clone(), line_no).is_some() {
            return Err(CorpusError::DuplicateUnit { line: line_no, unit_id });
        }
        let at_line = |e: CorpusError| match e {
            CorpusError::InvalidUnit { unit_id, message } | CorpusError::InvalidGold { unit_id, message } => {
                CorpusError::Validation { line: line_no, unit_id, message }
            }
            other => other,
        };
        let unit = Unit::try_from(UnitWire {
            unit_id: record.unit_id,
            pmid: record.pmid,
            sentence: record.sentence,
            drug: record.drug,
            disease: record.disease,
        })
        .map_err(at_line)?;
        if let Some(g) = record.gold {
            gold.push(GoldRecord::new(unit_id, g.expert_votes, g.published).map_err(at_line)?);
        }
        units.push(unit);
    }
    Corpus::new(units, gold)
}

/// Writes `corpus` in the same JSON Lines schema [`parse_corpus`] reads.
pub fn write_corpus<W: Write>(corpus: &Corpus, mut writer: W) -> Result<(), CorpusError> {
    for unit in &corpus.units {
        let wire = |s: &EntitySpan| SpanWire { start: s.start, end: s.end, surface: s.surface.clone() };
        let line = CorpusLine {
            unit_id: unit.unit_id.clone(),
            pmid: unit.pmid.clone(),
            sentence: unit.sentence.clone(),
            drug: wire(&unit.drug),
            disease: wire(&unit.disease),
            gold: corpus
                .gold
                .get(&unit.unit_id)
                .map(|g| GoldLine { expert_votes: g.expert_votes.clone(), published: g.published }),
        };
        serde_json::to_writer(&mut writer, &line).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// All unit ids sorted lexicographically, then Fisher–Yates shuffled with a
/// ChaCha8 stream seeded from `seed`.
pub fn shuffled_ids(corpus: &Corpus, seed: u64) -> Vec<String> {
    let mut ids: Vec<String> = corpus.units.iter().map(|u| u.unit_id.clone()).collect();
    ids.sort();
    rng::shuffle(&mut ids, &mut rng::seeded(seed));
    ids
}

/// Uniform sample of `n` units without replacement: the first `n` entries of
/// [`shuffled_ids`].
pub fn sample_units(corpus: &Corpus, n: usize, seed: u64) -> Result<Vec<Unit>, CorpusError> {
    if n > corpus.len() {
        return Err(CorpusError::SampleRange { requested: n, available: corpus.len() });
    }
    Ok(shuffled_ids(corpus, seed)
        .into_iter()
        .take(n)
        .map(|id| corpus.unit(&id).expect("shuffled id resolves").clone())
        .collect())
}
