//! Event-sourced campaigns: a command engine that appends events to a sink
//! and folds them into [`CampaignState`].

mod config;
mod event;
mod state;
pub mod store;

use chrono::{DateTime, Duration, SecondsFormat, TimeZone, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub use config::JobConfig;
pub use event::{Event, EventRecord, QuizResponse};
pub use state::{CampaignState, IssuedAssignment, ReportError, WorkerEntry};
pub use store::{replay, JsonlFileSink};

use crate::adjudicate::{check_qualifier, AggregatedAnswer};
use crate::corpus::{consensus_level, sample_units, shuffled_ids, Corpus, RelationType, SemanticQualifier};
use crate::quality::{self, grade_quiz, Assignment, Planned, QuizOutcome, TestQuestion, WorkerStatus};
use crate::rational::{to_decimal, Rational};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("not found: {0}")]
    NotFound(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("unauthorized")]
    Unauthorized,
    #[error("forbidden: {0}")]
    Forbidden(String),
    #[error("replay failed at seq {seq}: {message}")]
    Replay { seq: u64, message: String },
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Destination for appended records. An append must be durable before it
/// returns; the engine applies the event only afterwards.
pub trait EventSink {
    fn append(&mut self, record: &EventRecord) -> std::io::Result<()>;
}

impl EventSink for Vec<EventRecord> {
    fn append(&mut self, record: &EventRecord) -> std::io::Result<()> {
        self.push(record.clone());
        Ok(())
    }
}

pub trait Clock {
    fn timestamp(&mut self, seq: u64) -> String;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn timestamp(&mut self, _seq: u64) -> String {
        Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
    }
}

/// Deterministic timestamps: a fixed epoch plus one second per sequence number.
#[derive(Debug, Clone, Copy)]
pub struct LogicalClock {
    epoch: DateTime<Utc>,
}

impl Default for LogicalClock {
    fn default() -> Self {
        LogicalClock { epoch: Utc.with_ymd_and_hms(2015, 1, 1, 0, 0, 0).unwrap() }
    }
}

impl Clock for LogicalClock {
    fn timestamp(&mut self, seq: u64) -> String {
        (self.epoch + Duration::seconds(seq as i64)).to_rfc3339_opts(SecondsFormat::Secs, true)
    }
}

pub fn token_digest(token: &str) -> String {
    hex::encode(&Sha256::digest(token.as_bytes())[..])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuizResult {
    pub passed: bool,
    pub correct: u64,
    pub seen: u64,
    /// Quiz accuracy to four decimals.
    pub accuracy: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Acknowledgment {
    pub assignment_id: String,
    pub status: &'static str,
}

/// Picks the quiz pool from units with published gold: units outside the
/// sample before sampled ones, unanimous before majority, each group in
/// sampling-permutation order.
pub fn select_quiz(corpus: &Corpus, config: &JobConfig) -> Result<Vec<TestQuestion>, ServiceError> {
    let order = shuffled_ids(corpus, config.sample_seed);
    let (inside, outside) = order.split_at(config.sample_size.min(order.len()));
    let mut picked = Vec::new();
    for group in [outside, inside] {
        for level in [3u8, 2] {
            for id in group {
                if picked.len() == config.quiz_size {
                    break;
                }
                if let Some(g) = corpus.gold_for(id) {
                    if let (Some(p), true) = (g.published, consensus_level(g) == level) {
                        picked.push((id.clone(), p));
                    }
                }
            }
        }
    }
    if picked.len() < config.quiz_size {
        return Err(ServiceError::Validation(format!(
            "quiz needs {} units with published gold; corpus has {}",
            config.quiz_size,
            picked.len()
        )));
    }
    Ok(picked
        .into_iter()
        .enumerate()
        .map(|(i, (id, gold_relation))| TestQuestion {
            question_id: format!("q{:02}", i + 1),
            unit: corpus.unit(&id).expect("picked id resolves").clone(),
            gold_relation,
        })
        .collect())
}

/// Serializes all mutations of one campaign. Every command validates first,
/// then appends its events and folds them into the state.
pub struct CampaignEngine<S, C> {
    state: CampaignState,
    sink: S,
    clock: C,
}

impl<S: EventSink, C: Clock> CampaignEngine<S, C> {
    pub fn create(
        campaign_id: &str,
        corpus: &Corpus,
        config: JobConfig,
        sink: S,
        clock: C,
    ) -> Result<Self, ServiceError> {
        config.validate().map_err(ServiceError::Validation)?;
        let units = sample_units(corpus, config.sample_size, config.sample_seed)
            .map_err(|e| ServiceError::Validation(e.to_string()))?;
        for unit in &units {
            match corpus.gold_for(&unit.unit_id) {
                Some(g) if g.published.is_some() => {}
                _ => {
                    return Err(ServiceError::Validation(format!(
                        "sampled unit {} has no published gold",
                        unit.unit_id
                    )))
                }
            }
        }
        let quiz = select_quiz(corpus, &config)?;
        let gold = units.iter().filter_map(|u| corpus.gold_for(&u.unit_id).cloned()).collect();
        let empty = units.is_empty();
        let mut engine = CampaignEngine { state: CampaignState::default(), sink, clock };
        let mut events =
            vec![Event::CampaignCreated { campaign_id: campaign_id.to_string(), config, units, gold, quiz }];
        if empty {
            events.push(Event::CampaignClosed {});
        }
        engine.emit(events)?;
        Ok(engine)
    }

    /// Continues a campaign from replayed state; new events go to `sink`.
    pub fn resume(state: CampaignState, sink: S, clock: C) -> Self {
        CampaignEngine { state, sink, clock }
    }

    pub fn state(&self) -> &CampaignState {
        &self.state
    }

    pub fn sink(&self) -> &S {
        &self.sink
    }

    pub fn into_parts(self) -> (CampaignState, S) {
        (self.state, self.sink)
    }

    fn emit(&mut self, events: Vec<Event>) -> Result<(), ServiceError> {
        for event in events {
            let seq = self.state.last_seq() + 1;
            let record = EventRecord { seq, ts: self.clock.timestamp(seq), event };
            self.sink.append(&record)?;
            self.state.apply(&record).map_err(|message| ServiceError::Internal(format!("seq {seq}: {message}")))?;
        }
        Ok(())
    }

    /// Next free worker id of the form `w0001`.
    pub fn next_worker_id(&self) -> String {
        let mut n = self.state.worker_count() + 1;
        loop {
            let id = format!("w{n:04}");
            if self.state.worker(&id).is_none() {
                return id;
            }
            n += 1;
        }
    }

    pub fn register_worker(&mut self, worker_id: &str, token: &str) -> Result<(), ServiceError> {
        if worker_id.is_empty() {
            return Err(ServiceError::Validation("worker id must not be empty".into()));
        }
        if self.state.worker(worker_id).is_some() {
            return Err(ServiceError::Conflict(format!("worker {worker_id} already registered")));
        }
        self.emit(vec![Event::WorkerRegistered { worker_id: worker_id.to_string(), token_sha256: token_digest(token) }])
    }

    pub fn authenticate(&self, worker_id: &str, token: &str) -> Result<(), ServiceError> {
        authenticate(&self.state, worker_id, token)
    }

    pub fn submit_quiz(&mut self, worker_id: &str, responses: Vec<QuizResponse>) -> Result<QuizResult, ServiceError> {
        let mut worker = self
            .state
            .worker(worker_id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("worker {worker_id}")))?;
        if worker.status != WorkerStatus::Pending {
            return Err(ServiceError::Conflict(format!("worker {worker_id} already took the quiz")));
        }
        let answers: Vec<_> = responses.iter().map(|r| (r.question_id.clone(), r.relation)).collect();
        let QuizOutcome { correct, seen, passed } =
            grade_quiz(&mut worker, &answers, self.state.quiz(), self.state.config().pass_threshold)
                .map_err(|e| ServiceError::Validation(e.to_string()))?;
        self.emit(vec![Event::QuizGraded { worker_id: worker_id.to_string(), responses, correct, seen, passed }])?;
        let accuracy = to_decimal(&Rational::new(correct.into(), seen.into()), 4);
        Ok(QuizResult { passed, correct, seen, accuracy })
    }

    /// The worker's outstanding assignment if any, else a newly issued one.
    /// `None` once no work remains for this worker.
    pub fn next_assignment(&mut self, worker_id: &str) -> Result<Option<Assignment>, ServiceError> {
        let entry =
            self.state.worker_entry(worker_id).ok_or_else(|| ServiceError::NotFound(format!("worker {worker_id}")))?;
        if entry.worker.status != WorkerStatus::Qualified {
            return Err(ServiceError::Forbidden(format!("worker {worker_id} is {}", entry.worker.status)));
        }
        if self.state.is_closed() {
            return Ok(None);
        }
        if let Some(a) = self.state.outstanding_for(worker_id) {
            return Ok(Some(a.clone()));
        }
        let planned = quality::next_assignment(
            self.state.pool(),
            &entry.worker,
            &entry.progress,
            self.state.quiz().len(),
            self.state.config().test_interleave_period,
        )
        .map_err(|e| ServiceError::Forbidden(e.to_string()))?;
        let Some(planned) = planned else {
            return Ok(None);
        };
        let assignment_id = format!("a{:06}", self.state.assignment_count() + 1);
        let event = match planned {
            Planned::Work(unit_id) => Event::AssignmentIssued {
                assignment_id: assignment_id.clone(),
                worker_id: worker_id.to_string(),
                unit_id,
                is_test: false,
                question_id: None,
            },
            Planned::Test(i) => {
                let q = &self.state.quiz()[i];
                Event::AssignmentIssued {
                    assignment_id: assignment_id.clone(),
                    worker_id: worker_id.to_string(),
                    unit_id: q.unit.unit_id.clone(),
                    is_test: true,
                    question_id: Some(q.question_id.clone()),
                }
            }
        };
        self.emit(vec![event])?;
        Ok(self.state.assignment(&assignment_id).map(|a| a.assignment.clone()))
    }

    pub fn submit_judgment(
        &mut self,
        worker_id: &str,
        assignment_id: &str,
        relation: RelationType,
        qualifier: Option<SemanticQualifier>,
    ) -> Result<Acknowledgment, ServiceError> {
        let issued = match self.state.assignment(assignment_id) {
            Some(a) if a.assignment.worker_id == worker_id => a.clone(),
            _ => return Err(ServiceError::NotFound(format!("assignment {assignment_id} for worker {worker_id}"))),
        };
        let worker = self.state.worker(worker_id).cloned().expect("assignment owner is registered");
        if worker.status != WorkerStatus::Qualified {
            return Err(ServiceError::Forbidden(format!("worker {worker_id} is {}", worker.status)));
        }
        if issued.submitted {
            return Err(ServiceError::Conflict(format!("assignment {assignment_id} already answered")));
        }
        check_qualifier(relation, qualifier).map_err(|e| ServiceError::Validation(e.to_string()))?;
        if self.state.is_closed() {
            return Err(ServiceError::Conflict("campaign is closed".into()));
        }
        let a = &issued.assignment;
        let mut events = Vec::new();
        if a.is_test {
            let mut probe = worker;
            let outcome = quality::route_test_response(
                &mut probe,
                a,
                self.state.quiz(),
                relation,
                self.state.config().pass_threshold,
            )
            .map_err(|e| ServiceError::Internal(e.to_string()))?;
            events.push(Event::TestGraded {
                assignment_id: assignment_id.to_string(),
                worker_id: worker_id.to_string(),
                question_id: a.question_id.clone().unwrap_or_default(),
                answer: relation,
                qualifier,
                correct: outcome.correct,
            });
            if outcome.rejected {
                events.push(Event::WorkerRejected {
                    worker_id: worker_id.to_string(),
                    correct: probe.correct(),
                    seen: probe.seen(),
                });
            }
        } else {
            let unit_id = a.unit.unit_id.clone();
            let pool = self.state.pool();
            let completes = pool.accepted(&unit_id) + 1 == pool.judgments_per_unit();
            let closes = completes && pool.completed_units() + 1 == pool.len();
            events.push(Event::JudgmentSubmitted {
                assignment_id: assignment_id.to_string(),
                worker_id: worker_id.to_string(),
                unit_id: unit_id.clone(),
                relation,
                qualifier,
            });
            if completes {
                events.push(Event::UnitCompleted { unit_id });
            }
            if closes {
                events.push(Event::CampaignClosed {});
            }
        }
        self.emit(events)?;
        Ok(Acknowledgment { assignment_id: assignment_id.to_string(), status: "accepted" })
    }

    pub fn aggregate(&self, unit_id: &str) -> Result<AggregatedAnswer, ServiceError> {
        aggregate(&self.state, unit_id)
    }
}

pub fn authenticate(state: &CampaignState, worker_id: &str, token: &str) -> Result<(), ServiceError> {
    match state.worker_entry(worker_id) {
        Some(e) if e.token_sha256 == token_digest(token) => Ok(()),
        _ => Err(ServiceError::Unauthorized),
    }
}

/// Current aggregate of one sampled unit.
pub fn aggregate(state: &CampaignState, unit_id: &str) -> Result<AggregatedAnswer, ServiceError> {
    if state.unit(unit_id).is_none() {
        return Err(ServiceError::NotFound(format!("unit {unit_id}")));
    }
    let answers = state.answers().map_err(|e| ServiceError::Internal(e.to_string()))?;
    answers
        .get(unit_id)
        .cloned()
        .ok_or_else(|| ServiceError::NotFound(format!("no accepted judgments for unit {unit_id}")))
}
