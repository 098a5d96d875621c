//! Template-built corpora with controlled expert-consensus structure.
//!
//! Used for fixtures, simulation and benchmarks. Sentences are synthetic but
//! well formed: every span is a real slice of its sentence, and some names
//! carry non-ASCII characters so char-offset handling is exercised.

use super::{Corpus, EntityKind, EntitySpan, GoldRecord, RelationType, Unit};
use crate::rng::{self, StreamRng};

const DRUGS: &[&str] = &[
    "aspirin",
    "warfarin",
    "heparin",
    "ibuprofen",
    "naproxen",
    "celecoxib",
    "rofecoxib",
    "metformin",
    "lisinopril",
    "amiodarone",
    "β-blockers",
    "cisplatin",
    "tamoxifen",
    "isotretinoin",
    "valproate",
    "lithium",
    "clozapine",
    "haloperidol",
    "methotrexate",
    "cyclosporine",
    "tacrolimus",
    "rifampicin",
    "isoniazid",
    "ketoconazole",
    "digoxin",
    "propranolol",
    "atorvastatin",
    "simvastatin",
    "clopidogrel",
    "levodopa",
    "benzodiazepines",
    "fluoxetine",
];

const DISEASES: &[&str] = &[
    "stroke",
    "thromboembolism",
    "myocardial infarction",
    "gastric ulcer",
    "hepatotoxicity",
    "nephrotoxicity",
    "agranulocytosis",
    "rhabdomyolysis",
    "pulmonary fibrosis",
    "Stevens–Johnson syndrome",
    "Sjögren's syndrome",
    "Ménière's disease",
    "orofacial clefts",
    "neural tube defects",
    "hypothyroidism",
    "QT prolongation",
    "lactic acidosis",
    "hyperkalemia",
    "tardive dyskinesia",
    "osteoporosis",
    "breast cancer",
    "atrial fibrillation",
    "epilepsy",
    "psoriasis",
    "tuberculosis",
];

/// `{D}` marks the drug, `{X}` the disease.
fn templates(relation: RelationType) -> &'static [&'static str] {
    match relation {
        RelationType::Positive => &[
            "Treatment with {D} was associated with {X} in a cohort of elderly patients.",
            "{D} induced {X} in three of the reported cases.",
            "{X} is a well-documented adverse effect of {D}.",
            "Patients receiving {D} showed marked improvement of {X} after six weeks.",
        ],
        RelationType::Speculative => &[
            "{D} may contribute to the development of {X} in susceptible individuals.",
            "It has been suggested that {D} could increase the risk of {X}.",
            "A possible link between {D} and {X} warrants further investigation.",
        ],
        RelationType::Negative => &[
            "No association between {D} and {X} was observed in this trial.",
            "{D} did not increase the incidence of {X} compared with placebo.",
            "We found no evidence that {X} is caused by {D}.",
        ],
        RelationType::FalseCooccurrence => &[
            "Patients with {X} were enrolled, and {D} dosing was recorded at baseline.",
            "The study population included subjects with {X}; concomitant {D} use was common.",
            "{D} levels were measured in all participants, including those with {X}.",
        ],
    }
}

/// How many records of each consensus shape to produce.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SyntheticSpec {
    /// Three of three experts agree; published.
    pub unanimous: usize,
    /// Two of three agree; published.
    pub majority: usize,
    /// Two of three agree but left out of the published set.
    pub majority_unpublished: usize,
    /// No two experts agree; never published.
    pub singleton: usize,
}

impl SyntheticSpec {
    /// 244 published drug–disease sentences, roughly one third unanimous.
    pub fn two_level_244() -> SyntheticSpec {
        SyntheticSpec { unanimous: 81, majority: 163, majority_unpublished: 0, singleton: 0 }
    }

    pub fn total(&self) -> usize {
        self.unanimous + self.majority + self.majority_unpublished + self.singleton
    }
}

fn pick<'a, T>(rng: &mut StreamRng, items: &'a [T]) -> &'a T {
    &items[rng::uniform_below(rng, items.len() as u64) as usize]
}

fn draw_relation(rng: &mut StreamRng) -> RelationType {
    // Positive-heavy, as in drug–disease literature.
    match rng::uniform_below(rng, 10) {
        0..=4 => RelationType::Positive,
        5..=6 => RelationType::Speculative,
        7 => RelationType::Negative,
        _ => RelationType::FalseCooccurrence,
    }
}

fn other_than(rng: &mut StreamRng, relation: RelationType) -> RelationType {
    let others: Vec<RelationType> = RelationType::ALL.into_iter().filter(|&r| r != relation).collect();
    *pick(rng, &others)
}

fn build_unit(unit_id: String, pmid: String, template: &str, drug: &str, disease: &str) -> Unit {
    let mut sentence = String::new();
    let mut drug_span = None;
    let mut disease_span = None;
    let mut rest = template;
    while let Some(pos) = rest.find('{') {
        sentence.push_str(&rest[..pos]);
        let (marker, tail) = rest[pos..].split_at(3);
        let start = sentence.chars().count();
        let (text, kind) = match marker {
            "{D}" => (drug, EntityKind::Drug),
            "{X}" => (disease, EntityKind::Disease),
            _ => unreachable!("unknown template marker {marker}"),
        };
        // Sentence-initial mentions are capitalized in running text.
        let text = if start == 0 { capitalize(text) } else { text.to_string() };
        sentence.push_str(&text);
        let span = EntitySpan { start, end: start + text.chars().count(), surface: text, kind };
        match kind {
            EntityKind::Drug => drug_span = Some(span),
            EntityKind::Disease => disease_span = Some(span),
        }
        rest = tail;
    }
    sentence.push_str(rest);
    Unit::new(unit_id, pmid, sentence, drug_span.unwrap(), disease_span.unwrap()).expect("template unit is valid")
}

fn capitalize(text: &str) -> String {
    let mut chars = text.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Deterministic corpus for `spec`. Unit ids are `u0001`, `u0002`, ... and
/// record shapes are interleaved in a seeded order.
pub fn generate(spec: &SyntheticSpec, seed: u64) -> Corpus {
    let mut rng = rng::derived(seed, "synthetic-corpus");
    let mut shapes: Vec<u8> = std::iter::repeat_n(3u8, spec.unanimous)
        .chain(std::iter::repeat_n(2u8, spec.majority))
        .chain(std::iter::repeat_n(20u8, spec.majority_unpublished))
        .chain(std::iter::repeat_n(1u8, spec.singleton))
        .collect();
    rng::shuffle(&mut shapes, &mut rng);

    let width = spec.total().to_string().len().max(4);
    let mut units = Vec::with_capacity(shapes.len());
    let mut gold = Vec::with_capacity(shapes.len());
    for (i, shape) in shapes.into_iter().enumerate() {
        let unit_id = format!("u{:0width$}", i + 1);
        let pmid = (10_000_000 + rng::uniform_below(&mut rng, 20_000_000)).to_string();
        let truth = draw_relation(&mut rng);
        let (votes, published) = match shape {
            3 => (vec![truth; 3], Some(truth)),
            2 | 20 => {
                let mut votes = vec![truth, truth, other_than(&mut rng, truth)];
                rng::shuffle(&mut votes, &mut rng);
                (votes, (shape == 2).then_some(truth))
            }
            _ => {
                let mut all = RelationType::ALL.to_vec();
                rng::shuffle(&mut all, &mut rng);
                (all[..3].to_vec(), None)
            }
        };
        // Singleton sentences are written from the first expert's reading.
        let wording = if shape == 1 { votes[0] } else { truth };
        let template = *pick(&mut rng, templates(wording));
        let drug = *pick(&mut rng, DRUGS);
        let disease = *pick(&mut rng, DISEASES);
        units.push(build_unit(unit_id.clone(), pmid, template, drug, disease));
        gold.push(GoldRecord::new(unit_id, votes, published).expect("synthetic gold is valid"));
    }
    Corpus::new(units, gold).expect("synthetic corpus is valid")
}
