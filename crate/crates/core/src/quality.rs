//! Worker gating: qualification quiz, hidden test questions, running accuracy
//! and the assignment schedule.
//!
//! Accuracy is `(quiz_correct + work_test_correct) / (quiz_seen + work_test_seen)`.
//! Threshold checks cross-multiply integers so `7/10` against a `7/10` bar
//! passes on every platform.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{RelationType, Unit};
use crate::rational::{ratio, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QualityError {
    #[error("quiz response for unknown question {0:?}")]
    UnknownQuestion(String),
    #[error("question {0:?} answered more than once")]
    DuplicateResponse(String),
    #[error("quiz incomplete: {0} question(s) unanswered")]
    IncompleteQuiz(usize),
    #[error("worker {worker_id:?} is {status}, expected {expected}")]
    WrongStatus { worker_id: String, status: WorkerStatus, expected: WorkerStatus },
    #[error("worker {0:?} is not authorized to receive work")]
    NotAuthorized(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

/// Minimum accuracy as an exact fraction, written `"7/10"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PassThreshold {
    numer: u64,
    denom: u64,
}

impl PassThreshold {
    pub fn new(numer: u64, denom: u64) -> Result<PassThreshold, String> {
        if denom == 0 || numer == 0 || numer > denom {
            return Err(format!("pass threshold {numer}/{denom} must satisfy 0 < p/q <= 1"));
        }
        Ok(PassThreshold { numer, denom })
    }

    /// `correct / seen >= numer / denom`, decided on integers.
    pub fn admits(&self, correct: u64, seen: u64) -> bool {
        seen > 0 && (correct as u128) * (self.denom as u128) >= (self.numer as u128) * (seen as u128)
    }

    pub fn as_rational(&self) -> Rational {
        ratio(self.numer, self.denom)
    }
}

impl Default for PassThreshold {
    fn default() -> Self {
        PassThreshold { numer: 7, denom: 10 }
    }
}

impl fmt::Display for PassThreshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer, self.denom)
    }
}

impl FromStr for PassThreshold {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (n, d) = s.split_once('/').ok_or_else(|| format!("expected P/Q, got {s:?}"))?;
        let n = n.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
        let d = d.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
        PassThreshold::new(n, d)
    }
}

impl Serialize for PassThreshold {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PassThreshold {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?.parse().map_err(serde::de::Error::custom)
    }
}

/// A unit with a known answer, used in the quiz and hidden among work.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestQuestion {
    pub question_id: String,
    pub unit: Unit,
    pub gold_relation: RelationType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkerStatus {
    Pending,
    Qualified,
    Rejected,
}

impl fmt::Display for WorkerStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WorkerStatus::Pending => "pending",
            WorkerStatus::Qualified => "qualified",
            WorkerStatus::Rejected => "rejected",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Worker {
    pub worker_id: String,
    pub quiz_correct: u64,
    pub quiz_seen: u64,
    pub work_test_correct: u64,
    pub work_test_seen: u64,
    pub status: WorkerStatus,
}

impl Worker {
    pub fn new(worker_id: impl Into<String>) -> Worker {
        Worker {
            worker_id: worker_id.into(),
            quiz_correct: 0,
            quiz_seen: 0,
            work_test_correct: 0,
            work_test_seen: 0,
            status: WorkerStatus::Pending,
        }
    }

    pub fn correct(&self) -> u64 {
        self.quiz_correct + self.work_test_correct
    }

    pub fn seen(&self) -> u64 {
        self.quiz_seen + self.work_test_seen
    }

    /// `None` until at least one graded answer exists.
    pub fn accuracy(&self) -> Option<Rational> {
        (self.seen() > 0).then(|| ratio(self.correct(), self.seen()))
    }

    fn expect_status(&self, expected: WorkerStatus) -> Result<(), QualityError> {
        if self.status == expected {
            Ok(())
        } else {
            Err(QualityError::WrongStatus { worker_id: self.worker_id.clone(), status: self.status, expected })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuizOutcome {
    pub correct: u64,
    pub seen: u64,
    pub passed: bool,
}

/// Grades a pending worker's quiz. Responses must cover every question in
/// `pool` exactly once; otherwise the worker is left untouched.
pub fn grade_quiz(
    worker: &mut Worker,
    responses: &[(String, RelationType)],
    pool: &[TestQuestion],
    threshold: PassThreshold,
) -> Result<QuizOutcome, QualityError> {
    worker.expect_status(WorkerStatus::Pending)?;
    let answers: BTreeMap<&str, RelationType> = {
        let mut map = BTreeMap::new();
        for (qid, answer) in responses {
            if !pool.iter().any(|q| &q.question_id == qid) {
                return Err(QualityError::UnknownQuestion(qid.clone()));
            }
            if map.insert(qid.as_str(), *answer).is_some() {
                return Err(QualityError::DuplicateResponse(qid.clone()));
            }
        }
        map
    };
    if answers.len() < pool.len() {
        return Err(QualityError::IncompleteQuiz(pool.len() - answers.len()));
    }
    let correct = pool.iter().filter(|q| answers[q.question_id.as_str()] == q.gold_relation).count() as u64;
    let seen = pool.len() as u64;
    worker.quiz_correct = correct;
    worker.quiz_seen = seen;
    let passed = threshold.admits(correct, seen);
    worker.status = if passed { WorkerStatus::Qualified } else { WorkerStatus::Rejected };
    Ok(QuizOutcome { correct, seen, passed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TestOutcome {
    pub correct: bool,
    /// The worker fell below the threshold on this answer.
    pub rejected: bool,
}

/// Grades one hidden test answer for a qualified worker. A drop below the
/// threshold rejects the worker permanently.
pub fn record_test_response(
    worker: &mut Worker,
    question: &TestQuestion,
    answer: RelationType,
    threshold: PassThreshold,
) -> Result<TestOutcome, QualityError> {
    worker.expect_status(WorkerStatus::Qualified)?;
    let correct = answer == question.gold_relation;
    worker.work_test_seen += 1;
    if correct {
        worker.work_test_correct += 1;
    }
    let rejected = !threshold.admits(worker.correct(), worker.seen());
    if rejected {
        worker.status = WorkerStatus::Rejected;
    }
    Ok(TestOutcome { correct, rejected })
}

/// What a worker is shown. `is_test` and `question_id` stay server-side: the
/// serialized form is identical for work and test payloads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Assignment {
    pub assignment_id: String,
    #[serde(skip)]
    pub worker_id: String,
    pub unit: Unit,
    #[serde(skip)]
    pub is_test: bool,
    #[serde(skip)]
    pub question_id: Option<String>,
}

/// Routes an answer on `assignment` to [`record_test_response`]; work
/// assignments must never arrive here.
pub fn route_test_response(
    worker: &mut Worker,
    assignment: &Assignment,
    pool: &[TestQuestion],
    answer: RelationType,
    threshold: PassThreshold,
) -> Result<TestOutcome, QualityError> {
    if !assignment.is_test {
        return Err(QualityError::Invariant(format!(
            "assignment {} is a work assignment, not a test",
            assignment.assignment_id
        )));
    }
    let qid = assignment.question_id.as_deref().unwrap_or_default();
    let question = pool
        .iter()
        .find(|q| q.question_id == qid)
        .ok_or_else(|| QualityError::Invariant(format!("test assignment references unknown question {qid:?}")))?;
    record_test_response(worker, question, answer, threshold)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct UnitSlots {
    accepted: BTreeSet<String>,
    reserved: BTreeSet<String>,
}

impl UnitSlots {
    fn filled(&self) -> usize {
        self.accepted.len() + self.reserved.len()
    }
}

/// Per-unit fill state for the open work pool. Outstanding work assignments
/// hold a reservation so a unit is never over-assigned.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WorkPool {
    judgments_per_unit: usize,
    units: BTreeMap<String, UnitSlots>,
}

impl WorkPool {
    pub fn new<'a>(unit_ids: impl IntoIterator<Item = &'a str>, judgments_per_unit: usize) -> WorkPool {
        WorkPool {
            judgments_per_unit,
            units: unit_ids.into_iter().map(|id| (id.to_string(), UnitSlots::default())).collect(),
        }
    }

    pub fn judgments_per_unit(&self) -> usize {
        self.judgments_per_unit
    }

    pub fn contains(&self, unit_id: &str) -> bool {
        self.units.contains_key(unit_id)
    }

    pub fn accepted(&self, unit_id: &str) -> usize {
        self.units.get(unit_id).map_or(0, |s| s.accepted.len())
    }

    pub fn is_unit_complete(&self, unit_id: &str) -> bool {
        self.accepted(unit_id) >= self.judgments_per_unit
    }

    pub fn is_complete(&self) -> bool {
        self.units.values().all(|s| s.accepted.len() >= self.judgments_per_unit)
    }

    pub fn completed_units(&self) -> usize {
        self.units.values().filter(|s| s.accepted.len() >= self.judgments_per_unit).count()
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// Least-filled open unit the worker has not been served, ties by unit id.
    pub fn next_open_for(&self, served: &BTreeSet<String>) -> Option<&str> {
        self.units
            .iter()
            .filter(|(id, slots)| slots.filled() < self.judgments_per_unit && !served.contains(*id))
            .min_by_key(|(id, slots)| (slots.filled(), *id))
            .map(|(id, _)| id.as_str())
    }

    pub fn reserve(&mut self, unit_id: &str, worker_id: &str) -> Result<(), QualityError> {
        let cap = self.judgments_per_unit;
        let slots = self
            .units
            .get_mut(unit_id)
            .ok_or_else(|| QualityError::Invariant(format!("unit {unit_id:?} is not in the work pool")))?;
        if slots.filled() >= cap {
            return Err(QualityError::Invariant(format!("unit {unit_id:?} is already full")));
        }
        if slots.accepted.contains(worker_id) || !slots.reserved.insert(worker_id.to_string()) {
            return Err(QualityError::Invariant(format!("unit {unit_id:?} already assigned to {worker_id:?}")));
        }
        Ok(())
    }

    pub fn accept(&mut self, unit_id: &str, worker_id: &str) -> Result<(), QualityError> {
        let slots = self
            .units
            .get_mut(unit_id)
            .ok_or_else(|| QualityError::Invariant(format!("unit {unit_id:?} is not in the work pool")))?;
        if !slots.reserved.remove(worker_id) {
            return Err(QualityError::Invariant(format!("no reservation on {unit_id:?} for {worker_id:?}")));
        }
        slots.accepted.insert(worker_id.to_string());
        Ok(())
    }

    /// Drops every reservation and accepted slot held by `worker_id`, returning
    /// the units that re-open as a result.
    pub fn purge_worker(&mut self, worker_id: &str) -> Vec<String> {
        let cap = self.judgments_per_unit;
        let mut reopened = Vec::new();
        for (id, slots) in &mut self.units {
            let was_complete = slots.accepted.len() >= cap;
            slots.reserved.remove(worker_id);
            slots.accepted.remove(worker_id);
            if was_complete && slots.accepted.len() < cap {
                reopened.push(id.clone());
            }
        }
        reopened
    }
}

/// Scheduling history kept per worker.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WorkerProgress {
    pub issued: u64,
    pub served_units: BTreeSet<String>,
    pub tests_issued: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Planned {
    Work(String),
    /// Index into the quiz pool.
    Test(usize),
}

/// Decides the next payload for a qualified worker.
///
/// Every `interleave`-th assignment is a hidden test drawn round-robin from
/// the quiz pool; the rest are open work units. Returns `None` when no work
/// unit remains for this worker, so tests are only served alongside real work.
pub fn next_assignment(
    pool: &WorkPool,
    worker: &Worker,
    progress: &WorkerProgress,
    quiz_len: usize,
    interleave: u32,
) -> Result<Option<Planned>, QualityError> {
    if worker.status != WorkerStatus::Qualified {
        return Err(QualityError::NotAuthorized(worker.worker_id.clone()));
    }
    let Some(unit_id) = pool.next_open_for(&progress.served_units) else {
        return Ok(None);
    };
    let ordinal = progress.issued + 1;
    if quiz_len > 0 && interleave > 0 && ordinal.is_multiple_of(u64::from(interleave)) {
        return Ok(Some(Planned::Test((progress.tests_issued % quiz_len as u64) as usize)));
    }
    Ok(Some(Planned::Work(unit_id.to_string())))
}

/// Checks that quiz question ids are unique.
pub fn validate_pool(pool: &[TestQuestion]) -> Result<(), QualityError> {
    let mut ids = HashSet::new();
    for q in pool {
        if !ids.insert(q.question_id.as_str()) {
            return Err(QualityError::DuplicateResponse(q.question_id.clone()));
        }
    }
    Ok(())
}
