//! Synthetic workers driving a campaign through the service engine, so a
//! full run needs no human input and is reproducible from a seed.

use std::collections::BTreeMap;

use rand_distr::{Distribution, Normal};

use crate::analytics::{AnalyticsError, Answers, Report};
use crate::corpus::{consensus_level, Corpus, RelationType, SemanticQualifier};
use crate::quality::WorkerStatus;
use crate::rng::{self, StreamRng};
use crate::service::{CampaignEngine, CampaignState, EventRecord, JobConfig, LogicalClock, QuizResponse, ServiceError};

const ACCURACY_FLOOR: f64 = 0.25;
const MAX_DRAWS: usize = 100_000;

#[derive(Debug, thiserror::Error)]
pub enum SimulateError {
    #[error("invalid simulation parameter: {0}")]
    InvalidParameter(String),
    #[error(
        "campaign stalled: {completed_units} of {total_units} units complete, {qualified_workers} qualified workers left"
    )]
    Stalled { completed_units: usize, total_units: usize, qualified_workers: usize },
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error("aggregation failed: {0}")]
    Aggregate(String),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
}

/// Latent-accuracy distribution of the workforce.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
}

impl Default for Population {
    fn default() -> Self {
        Population { count: 32, mean: 0.8554, sd: 0.0777 }
    }
}

#[derive(Debug, Clone)]
pub struct WorkerProfile {
    pub profile_id: String,
    pub latent_accuracy: f64,
    rng: StreamRng,
}

impl WorkerProfile {
    /// A profile whose stream is derived from `(seed, profile_id)`.
    pub fn new(profile_id: impl Into<String>, latent_accuracy: f64, seed: u64) -> WorkerProfile {
        let profile_id = profile_id.into();
        let rng = rng::derived(seed, &profile_id);
        WorkerProfile { profile_id, latent_accuracy, rng }
    }
}

/// Probability that a unit's gold signal is perceivable, by consensus level.
#[derive(Debug, Clone, PartialEq)]
pub struct DifficultyModel {
    pub clarity: BTreeMap<u8, f64>,
}

impl Default for DifficultyModel {
    fn default() -> Self {
        DifficultyModel { clarity: BTreeMap::from([(3, 1.0), (2, 0.6), (1, 0.4)]) }
    }
}

impl DifficultyModel {
    /// Every level perceivable with the same probability.
    pub fn uniform(clarity: f64) -> DifficultyModel {
        DifficultyModel { clarity: (1..=3).map(|l| (l, clarity)).collect() }
    }

    pub fn clarity(&self, level: u8) -> f64 {
        self.clarity.get(&level).copied().unwrap_or(1.0)
    }

    pub fn validate(&self) -> Result<(), SimulateError> {
        match self.clarity.iter().find(|(_, c)| !(0.0..=1.0).contains(*c)) {
            Some((level, c)) => Err(SimulateError::InvalidParameter(format!("clarity {c} for level {level}"))),
            None => Ok(()),
        }
    }
}

/// Profiles `w01`, `w02`, ... with latent accuracies drawn from a normal
/// distribution truncated to [0.25, 1] by rejection.
pub fn spawn_workers(count: usize, mean: f64, sd: f64, seed: u64) -> Result<Vec<WorkerProfile>, SimulateError> {
    if count < 1 {
        return Err(SimulateError::InvalidParameter("worker count must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&mean) {
        return Err(SimulateError::InvalidParameter(format!("population mean {mean} outside [0, 1]")));
    }
    if !(sd >= 0.0 && sd.is_finite()) {
        return Err(SimulateError::InvalidParameter(format!("population sd {sd} must be finite and non-negative")));
    }
    let normal = Normal::new(mean, sd).map_err(|e| SimulateError::InvalidParameter(e.to_string()))?;
    let mut draws = rng::derived(seed, "population");
    let mut profiles = Vec::with_capacity(count);
    for i in 0..count {
        let accuracy =
            (0..MAX_DRAWS).map(|_| normal.sample(&mut draws)).find(|a| (ACCURACY_FLOOR..=1.0).contains(a)).ok_or_else(
                || SimulateError::InvalidParameter(format!("N({mean}, {sd}) has no usable mass in [0.25, 1]")),
            )?;
        profiles.push(WorkerProfile::new(format!("w{:02}", i + 1), accuracy, seed));
    }
    Ok(profiles)
}

/// Gold with probability `latent_accuracy × clarity`, otherwise one of the
/// other three relations uniformly.
pub fn simulate_judgment(profile: &mut WorkerProfile, gold: RelationType, clarity: f64) -> RelationType {
    if rng::unit_f64(&mut profile.rng) < profile.latent_accuracy * clarity {
        return gold;
    }
    let others: Vec<RelationType> = RelationType::ALL.into_iter().filter(|&r| r != gold).collect();
    others[rng::uniform_below(&mut profile.rng, others.len() as u64) as usize]
}

/// Uniform qualifier for relations that take one.
pub fn simulate_qualifier(profile: &mut WorkerProfile, relation: RelationType) -> Option<SemanticQualifier> {
    relation.takes_qualifier().then(|| {
        SemanticQualifier::ALL[rng::uniform_below(&mut profile.rng, SemanticQualifier::ALL.len() as u64) as usize]
    })
}

/// Everything a simulated run produced.
#[derive(Debug, Clone)]
pub struct CampaignTranscript {
    pub events: Vec<EventRecord>,
    pub state: CampaignState,
    pub answers: Answers,
    /// Built against the full corpus gold, so the support histogram covers
    /// every record and not just the sample.
    pub report: Report,
}

impl CampaignTranscript {
    /// The event log as JSON Lines.
    pub fn event_log(&self) -> String {
        self.events.iter().map(EventRecord::to_line).collect()
    }
}

fn truth(corpus: &Corpus, model: &DifficultyModel, unit_id: &str) -> (RelationType, f64) {
    let gold = corpus.gold_for(unit_id).expect("campaign units carry gold");
    (gold.reference_relation(), model.clarity(consensus_level(gold)))
}

/// Runs a whole campaign: every profile registers and takes the quiz, then
/// qualified workers take turns in id order until each sampled unit holds
/// `judgments_per_unit` accepted judgments.
pub fn run_campaign(
    corpus: &Corpus,
    config: &JobConfig,
    model: &DifficultyModel,
    population: &Population,
    seed: u64,
) -> Result<CampaignTranscript, SimulateError> {
    model.validate()?;
    let mut profiles = spawn_workers(population.count, population.mean, population.sd, seed)?;
    let mut engine =
        CampaignEngine::create(&format!("sim-{seed}"), corpus, config.clone(), Vec::new(), LogicalClock::default())?;

    for p in &mut profiles {
        engine.register_worker(&p.profile_id, &format!("token-{}", p.profile_id))?;
        let responses = engine
            .state()
            .quiz()
            .to_vec()
            .into_iter()
            .map(|q| {
                let (_, clarity) = truth(corpus, model, &q.unit.unit_id);
                QuizResponse { question_id: q.question_id, relation: simulate_judgment(p, q.gold_relation, clarity) }
            })
            .collect();
        engine.submit_quiz(&p.profile_id, responses)?;
    }

    while !engine.state().is_closed() {
        let mut progressed = false;
        for p in &mut profiles {
            if engine.state().worker(&p.profile_id).map(|w| w.status) != Some(WorkerStatus::Qualified) {
                continue;
            }
            let Some(assignment) = engine.next_assignment(&p.profile_id)? else {
                continue;
            };
            let (gold, clarity) = truth(corpus, model, &assignment.unit.unit_id);
            let relation = simulate_judgment(p, gold, clarity);
            let qualifier = simulate_qualifier(p, relation);
            engine.submit_judgment(&p.profile_id, &assignment.assignment_id, relation, qualifier)?;
            progressed = true;
            if engine.state().is_closed() {
                break;
            }
        }
        if !progressed {
            let state = engine.state();
            return Err(SimulateError::Stalled {
                completed_units: state.pool().completed_units(),
                total_units: state.pool().len(),
                qualified_workers: state.workers().filter(|w| w.status == WorkerStatus::Qualified).count(),
            });
        }
    }

    let (state, events) = engine.into_parts();
    let answers = state.answers().map_err(|e| SimulateError::Aggregate(e.to_string()))?;
    let report = Report::build(&answers, corpus.gold())?;
    Ok(CampaignTranscript { events, state, answers, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::synthetic::{generate, SyntheticSpec};

    #[test]
    fn spawn_is_deterministic_and_bounded() {
        let a = spawn_workers(32, 0.8554, 0.0777, 1).unwrap();
        let b = spawn_workers(32, 0.8554, 0.0777, 1).unwrap();
        assert_eq!(a.len(), 32);
        let accs: Vec<f64> = a.iter().map(|p| p.latent_accuracy).collect();
        assert_eq!(accs, b.iter().map(|p| p.latent_accuracy).collect::<Vec<_>>());
        assert!(accs.iter().all(|x| (0.25..=1.0).contains(x)));
        let mean = accs.iter().sum::<f64>() / 32.0;
        assert!((mean - 0.8554).abs() < 0.03, "mean {mean}");
        assert_eq!(a[0].profile_id, "w01");
    }

    #[test]
    fn spawn_edge_cases() {
        let one = spawn_workers(1, 1.0, 0.0, 9).unwrap();
        assert_eq!(one[0].latent_accuracy, 1.0);
        assert!(spawn_workers(0, 0.8, 0.1, 1).is_err());
        assert!(spawn_workers(3, 1.5, 0.1, 1).is_err());
        assert!(spawn_workers(3, 0.8, -0.1, 1).is_err());
        assert!(spawn_workers(3, 0.1, 0.0, 1).is_err());
    }

    #[test]
    fn judgment_frequencies() {
        let n = 10_000;
        let mut p = WorkerProfile::new("w01", 0.8, 5);
        let hits =
            (0..n).filter(|_| simulate_judgment(&mut p, RelationType::Negative, 1.0) == RelationType::Negative).count();
        let sigma = (0.8f64 * 0.2 / n as f64).sqrt();
        assert!(((hits as f64 / n as f64) - 0.8).abs() < 3.0 * sigma);

        let mut blind = WorkerProfile::new("w02", 0.9, 5);
        assert!((0..1000).all(|_| simulate_judgment(&mut blind, RelationType::Positive, 0.0) != RelationType::Positive));

        let mut perfect = WorkerProfile::new("w03", 1.0, 5);
        assert!((0..1000).all(|_| simulate_judgment(&mut perfect, RelationType::FalseCooccurrence, 1.0)
            == RelationType::FalseCooccurrence));
    }

    #[test]
    fn streams_are_independent_of_roster() {
        let few = spawn_workers(2, 0.8, 0.1, 4).unwrap();
        let many = spawn_workers(5, 0.8, 0.1, 4).unwrap();
        let (mut a, mut b) = (few[1].clone(), many[1].clone());
        assert_eq!(a.latent_accuracy, b.latent_accuracy);
        for _ in 0..50 {
            assert_eq!(
                simulate_judgment(&mut a, RelationType::Positive, 0.5),
                simulate_judgment(&mut b, RelationType::Positive, 0.5)
            );
        }
    }

    #[test]
    fn qualifiers_follow_the_rule() {
        let mut p = WorkerProfile::new("w01", 0.8, 1);
        for r in RelationType::ALL {
            assert_eq!(simulate_qualifier(&mut p, r).is_some(), r.takes_qualifier());
        }
    }

    #[test]
    fn perfect_workers_agree_with_gold() {
        let corpus = generate(&SyntheticSpec { unanimous: 20, majority: 20, ..SyntheticSpec::default() }, 2);
        let config = JobConfig { sample_size: 12, judgments_per_unit: 3, ..JobConfig::default() };
        let pop = Population { count: 5, mean: 1.0, sd: 0.0 };
        let t = run_campaign(&corpus, &config, &DifficultyModel::uniform(1.0), &pop, 3).unwrap();
        let strict = t.report.strict.as_ref().unwrap();
        assert_eq!((strict.matches, strict.total), (12, 12));
        for unit in t.state.units() {
            assert_eq!(t.state.judgments_for(&unit.unit_id).len(), 3);
        }
    }

    #[test]
    fn too_few_workers_stall() {
        let corpus = generate(&SyntheticSpec { unanimous: 20, majority: 20, ..SyntheticSpec::default() }, 2);
        let config = JobConfig { sample_size: 4, judgments_per_unit: 3, ..JobConfig::default() };
        let pop = Population { count: 2, mean: 1.0, sd: 0.0 };
        match run_campaign(&corpus, &config, &DifficultyModel::uniform(1.0), &pop, 3) {
            Err(SimulateError::Stalled { completed_units, total_units, qualified_workers }) => {
                assert_eq!((completed_units, total_units, qualified_workers), (0, 4, 2));
            }
            other => panic!("expected stall, got {other:?}"),
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let corpus = generate(&SyntheticSpec::two_level_244(), 1);
        let config = JobConfig { sample_seed: 7, ..JobConfig::default() };
        let run = || run_campaign(&corpus, &config, &DifficultyModel::default(), &Population::default(), 7).unwrap();
        let (a, b) = (run(), run());
        assert_eq!(a.event_log(), b.event_log());
        assert_eq!(a.report.to_json(), b.report.to_json());
        for unit in a.state.units() {
            assert_eq!(a.state.judgments_for(&unit.unit_id).len(), 10);
        }
    }
}
