//! Event log records: one JSON object per line,
//! `{"seq": int, "ts": RFC-3339, "kind": str, "payload": {...}}`.

use serde::{Deserialize, Serialize};

use super::JobConfig;
use crate::corpus::{GoldRecord, RelationType, SemanticQualifier, Unit};
use crate::quality::TestQuestion;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuizResponse {
    pub question_id: String,
    pub relation: RelationType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum Event {
    /// Carries everything the campaign needs so the log replays without the
    /// source corpus.
    CampaignCreated {
        campaign_id: String,
        config: JobConfig,
        units: Vec<Unit>,
        gold: Vec<GoldRecord>,
        quiz: Vec<TestQuestion>,
    },
    WorkerRegistered {
        worker_id: String,
        token_sha256: String,
    },
    QuizGraded {
        worker_id: String,
        responses: Vec<QuizResponse>,
        correct: u64,
        seen: u64,
        passed: bool,
    },
    AssignmentIssued {
        assignment_id: String,
        worker_id: String,
        unit_id: String,
        is_test: bool,
        question_id: Option<String>,
    },
    JudgmentSubmitted {
        assignment_id: String,
        worker_id: String,
        unit_id: String,
        relation: RelationType,
        qualifier: Option<SemanticQualifier>,
    },
    TestGraded {
        assignment_id: String,
        worker_id: String,
        question_id: String,
        answer: RelationType,
        qualifier: Option<SemanticQualifier>,
        correct: bool,
    },
    WorkerRejected {
        worker_id: String,
        correct: u64,
        seen: u64,
    },
    UnitCompleted {
        unit_id: String,
    },
    CampaignClosed {},
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::CampaignCreated { .. } => "CampaignCreated",
            Event::WorkerRegistered { .. } => "WorkerRegistered",
            Event::QuizGraded { .. } => "QuizGraded",
            Event::AssignmentIssued { .. } => "AssignmentIssued",
            Event::JudgmentSubmitted { .. } => "JudgmentSubmitted",
            Event::TestGraded { .. } => "TestGraded",
            Event::WorkerRejected { .. } => "WorkerRejected",
            Event::UnitCompleted { .. } => "UnitCompleted",
            Event::CampaignClosed {} => "CampaignClosed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    pub ts: String,
    #[serde(flatten)]
    pub event: Event,
}

impl EventRecord {
    pub fn to_line(&self) -> String {
        let mut line = serde_json::to_string(self).expect("event serializes");
        line.push('\n');
        line
    }
}
