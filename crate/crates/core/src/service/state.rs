//! Campaign state as a pure fold over the event log.

use std::collections::BTreeMap;

use super::event::{Event, EventRecord};
use super::JobConfig;
use crate::adjudicate::{aggregate_unit, check_qualifier, confidence_tally, AdjudicateError, Judgment};
use crate::analytics::{AnalyticsError, Answers, GoldMap, Report};
use crate::corpus::{GoldRecord, Unit};
use crate::quality::{
    grade_quiz, route_test_response, validate_pool, Assignment, TestQuestion, WorkPool, Worker, WorkerProgress,
    WorkerStatus,
};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkerEntry {
    pub worker: Worker,
    pub token_sha256: String,
    pub progress: WorkerProgress,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IssuedAssignment {
    pub assignment: Assignment,
    pub submitted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CampaignState {
    campaign_id: String,
    config: JobConfig,
    units: BTreeMap<String, Unit>,
    unit_order: Vec<String>,
    gold: GoldMap,
    quiz: Vec<TestQuestion>,
    workers: BTreeMap<String, WorkerEntry>,
    pool: WorkPool,
    assignments: BTreeMap<String, IssuedAssignment>,
    /// Accepted work judgments per unit, in submission order.
    judgments: BTreeMap<String, Vec<Judgment>>,
    created: bool,
    closed: bool,
    last_seq: u64,
}

fn fail<T>(message: impl Into<String>) -> Result<T, String> {
    Err(message.into())
}

impl CampaignState {
    /// Folds one record into the state. Records must arrive with dense,
    /// increasing sequence numbers starting at 1.
    pub fn apply(&mut self, record: &EventRecord) -> Result<(), String> {
        if record.seq != self.last_seq + 1 {
            return fail(format!("expected seq {}, found {}", self.last_seq + 1, record.seq));
        }
        match (&record.event, self.created) {
            (Event::CampaignCreated { .. }, true) => return fail("campaign created twice"),
            (Event::CampaignCreated { .. }, false) => {}
            (_, false) => return fail("first event must be CampaignCreated"),
            _ => {}
        }
        self.apply_event(&record.event, &record.ts)?;
        self.last_seq = record.seq;
        Ok(())
    }

    fn apply_event(&mut self, event: &Event, ts: &str) -> Result<(), String> {
        match event {
            Event::CampaignCreated { campaign_id, config, units, gold, quiz } => {
                config.validate()?;
                validate_pool(quiz).map_err(|e| e.to_string())?;
                self.campaign_id = campaign_id.clone();
                self.config = config.clone();
                for unit in units {
                    if self.units.insert(unit.unit_id.clone(), unit.clone()).is_some() {
                        return fail(format!("duplicate unit {}", unit.unit_id));
                    }
                    self.unit_order.push(unit.unit_id.clone());
                }
                for record in gold {
                    if !self.units.contains_key(&record.unit_id) {
                        return fail(format!("gold for unknown unit {}", record.unit_id));
                    }
                    self.gold.insert(record.unit_id.clone(), record.clone());
                }
                self.quiz = quiz.clone();
                self.pool = WorkPool::new(self.unit_order.iter().map(String::as_str), config.judgments_per_unit);
                self.created = true;
            }
            Event::WorkerRegistered { worker_id, token_sha256 } => {
                if self.workers.contains_key(worker_id) {
                    return fail(format!("worker {worker_id} registered twice"));
                }
                self.workers.insert(
                    worker_id.clone(),
                    WorkerEntry {
                        worker: Worker::new(worker_id.clone()),
                        token_sha256: token_sha256.clone(),
                        progress: WorkerProgress::default(),
                    },
                );
            }
            Event::QuizGraded { worker_id, responses, correct, seen, passed } => {
                let threshold = self.config.pass_threshold;
                let entry = self.workers.get_mut(worker_id).ok_or_else(|| format!("unknown worker {worker_id}"))?;
                let answers: Vec<_> = responses.iter().map(|r| (r.question_id.clone(), r.relation)).collect();
                let quiz = &self.quiz;
                let outcome = grade_quiz(&mut entry.worker, &answers, quiz, threshold).map_err(|e| e.to_string())?;
                if (outcome.correct, outcome.seen, outcome.passed) != (*correct, *seen, *passed) {
                    return fail(format!("recorded quiz grade for {worker_id} disagrees with regrading"));
                }
            }
            Event::AssignmentIssued { assignment_id, worker_id, unit_id, is_test, question_id } => {
                if self.closed {
                    return fail("assignment issued after close");
                }
                if self.assignments.contains_key(assignment_id) {
                    return fail(format!("assignment {assignment_id} issued twice"));
                }
                let unit = if *is_test {
                    let q = self
                        .quiz
                        .iter()
                        .find(|q| Some(&q.question_id) == question_id.as_ref())
                        .ok_or_else(|| format!("unknown test question {question_id:?}"))?;
                    if &q.unit.unit_id != unit_id {
                        return fail(format!("test {assignment_id} unit does not match its question"));
                    }
                    q.unit.clone()
                } else {
                    self.units.get(unit_id).cloned().ok_or_else(|| format!("unknown unit {unit_id}"))?
                };
                let entry = self.workers.get_mut(worker_id).ok_or_else(|| format!("unknown worker {worker_id}"))?;
                if entry.worker.status != WorkerStatus::Qualified {
                    return fail(format!("assignment to {} worker {worker_id}", entry.worker.status));
                }
                if *is_test {
                    entry.progress.tests_issued += 1;
                } else {
                    self.pool.reserve(unit_id, worker_id).map_err(|e| e.to_string())?;
                    entry.progress.served_units.insert(unit_id.clone());
                }
                entry.progress.issued += 1;
                self.assignments.insert(
                    assignment_id.clone(),
                    IssuedAssignment {
                        assignment: Assignment {
                            assignment_id: assignment_id.clone(),
                            worker_id: worker_id.clone(),
                            unit,
                            is_test: *is_test,
                            question_id: question_id.clone(),
                        },
                        submitted: false,
                    },
                );
            }
            Event::JudgmentSubmitted { assignment_id, worker_id, unit_id, relation, qualifier } => {
                let issued = self.open_assignment(assignment_id, worker_id)?;
                if issued.assignment.is_test || &issued.assignment.unit.unit_id != unit_id {
                    return fail(format!("judgment does not match work assignment {assignment_id}"));
                }
                check_qualifier(*relation, *qualifier).map_err(|e| e.to_string())?;
                if self.worker(worker_id).map(|w| w.status) != Some(WorkerStatus::Qualified) {
                    return fail(format!("judgment from unqualified worker {worker_id}"));
                }
                self.pool.accept(unit_id, worker_id).map_err(|e| e.to_string())?;
                self.assignments.get_mut(assignment_id).unwrap().submitted = true;
                self.judgments.entry(unit_id.clone()).or_default().push(Judgment {
                    worker_id: worker_id.clone(),
                    unit_id: unit_id.clone(),
                    relation: *relation,
                    qualifier: *qualifier,
                    submitted_at: ts.to_string(),
                });
            }
            Event::TestGraded { assignment_id, worker_id, question_id, answer, qualifier, correct } => {
                let issued = self.open_assignment(assignment_id, worker_id)?.clone();
                if issued.assignment.question_id.as_ref() != Some(question_id) {
                    return fail(format!("test grade does not match assignment {assignment_id}"));
                }
                check_qualifier(*answer, *qualifier).map_err(|e| e.to_string())?;
                let threshold = self.config.pass_threshold;
                let quiz = &self.quiz;
                let entry = self.workers.get_mut(worker_id).ok_or_else(|| format!("unknown worker {worker_id}"))?;
                let outcome = route_test_response(&mut entry.worker, &issued.assignment, quiz, *answer, threshold)
                    .map_err(|e| e.to_string())?;
                if outcome.correct != *correct {
                    return fail(format!("recorded test grade for {assignment_id} disagrees with regrading"));
                }
                self.assignments.get_mut(assignment_id).unwrap().submitted = true;
                if outcome.rejected {
                    self.purge_worker(worker_id);
                }
            }
            Event::WorkerRejected { worker_id, correct, seen } => {
                let w = self.worker(worker_id).ok_or_else(|| format!("unknown worker {worker_id}"))?;
                if w.status != WorkerStatus::Rejected || (w.correct(), w.seen()) != (*correct, *seen) {
                    return fail(format!("rejection record for {worker_id} does not match its test history"));
                }
            }
            Event::UnitCompleted { unit_id } => {
                if !self.pool.is_unit_complete(unit_id) {
                    return fail(format!("unit {unit_id} marked complete below quota"));
                }
            }
            Event::CampaignClosed {} => {
                if !self.pool.is_complete() {
                    return fail("campaign closed with open units");
                }
                self.closed = true;
            }
        }
        Ok(())
    }

    fn open_assignment(&self, assignment_id: &str, worker_id: &str) -> Result<&IssuedAssignment, String> {
        let issued =
            self.assignments.get(assignment_id).ok_or_else(|| format!("unknown assignment {assignment_id}"))?;
        if issued.assignment.worker_id != worker_id {
            return fail(format!("assignment {assignment_id} belongs to another worker"));
        }
        if issued.submitted {
            return fail(format!("assignment {assignment_id} already answered"));
        }
        Ok(issued)
    }

    /// Removes every work judgment of a rejected worker; affected units re-open.
    fn purge_worker(&mut self, worker_id: &str) {
        for list in self.judgments.values_mut() {
            list.retain(|j| j.worker_id != worker_id);
        }
        self.judgments.retain(|_, list| !list.is_empty());
        self.pool.purge_worker(worker_id);
    }

    pub fn campaign_id(&self) -> &str {
        &self.campaign_id
    }

    pub fn config(&self) -> &JobConfig {
        &self.config
    }

    pub fn last_seq(&self) -> u64 {
        self.last_seq
    }

    pub fn is_created(&self) -> bool {
        self.created
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn unit(&self, unit_id: &str) -> Option<&Unit> {
        self.units.get(unit_id)
    }

    /// Sampled units in sample order.
    pub fn units(&self) -> impl Iterator<Item = &Unit> {
        self.unit_order.iter().map(|id| &self.units[id])
    }

    pub fn gold(&self) -> &GoldMap {
        &self.gold
    }

    pub fn gold_for(&self, unit_id: &str) -> Option<&GoldRecord> {
        self.gold.get(unit_id)
    }

    pub fn quiz(&self) -> &[TestQuestion] {
        &self.quiz
    }

    pub fn pool(&self) -> &WorkPool {
        &self.pool
    }

    pub fn worker(&self, worker_id: &str) -> Option<&Worker> {
        self.workers.get(worker_id).map(|e| &e.worker)
    }

    pub fn worker_entry(&self, worker_id: &str) -> Option<&WorkerEntry> {
        self.workers.get(worker_id)
    }

    pub fn workers(&self) -> impl Iterator<Item = &Worker> {
        self.workers.values().map(|e| &e.worker)
    }

    pub fn worker_count(&self) -> usize {
        self.workers.len()
    }

    pub fn assignment(&self, assignment_id: &str) -> Option<&IssuedAssignment> {
        self.assignments.get(assignment_id)
    }

    pub fn assignment_count(&self) -> usize {
        self.assignments.len()
    }

    /// The worker's issued but unanswered assignment, if any.
    pub fn outstanding_for(&self, worker_id: &str) -> Option<&Assignment> {
        self.assignments.values().find(|a| !a.submitted && a.assignment.worker_id == worker_id).map(|a| &a.assignment)
    }

    /// Accepted judgments for a unit (never includes rejected workers).
    pub fn judgments_for(&self, unit_id: &str) -> &[Judgment] {
        self.judgments.get(unit_id).map_or(&[], Vec::as_slice)
    }

    pub fn judgments(&self) -> impl Iterator<Item = &Judgment> {
        self.unit_order.iter().flat_map(|id| self.judgments_for(id))
    }

    /// Current accuracy of every qualified worker.
    pub fn accuracies(&self) -> BTreeMap<String, Rational> {
        self.workers
            .values()
            .filter(|e| e.worker.status == WorkerStatus::Qualified)
            .filter_map(|e| e.worker.accuracy().map(|a| (e.worker.worker_id.clone(), a)))
            .collect()
    }

    /// Aggregated answers for every unit with at least one accepted judgment,
    /// weighted by current accuracies.
    pub fn answers(&self) -> Result<Answers, AdjudicateError> {
        let accuracies = self.accuracies();
        let mut out = Answers::new();
        for unit_id in &self.unit_order {
            let judgments = self.judgments_for(unit_id);
            if judgments.is_empty() {
                continue;
            }
            let tally = confidence_tally(judgments, &accuracies)?;
            out.insert(unit_id.clone(), aggregate_unit(unit_id, &tally)?);
        }
        Ok(out)
    }

    /// Analytics over the current answers against the campaign's gold.
    pub fn report(&self) -> Result<Report, ReportError> {
        Ok(Report::build(&self.answers()?, &self.gold)?)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Adjudicate(#[from] AdjudicateError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
}
