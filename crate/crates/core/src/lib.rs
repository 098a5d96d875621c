//! Quality-controlled crowd annotation of drug–disease relations.
//!
//! The crate is organized around the lifecycle of a crowd campaign:
//!
//! - [`corpus`]: sentences with highlighted drug/disease spans, the relation
//!   vocabulary, expert gold records, JSON Lines ingestion and seeded sampling.
//! - [`quality`]: qualification quiz, hidden in-work test questions, running
//!   accuracy and threshold rejection, assignment scheduling.
//! - [`adjudicate`]: confidence-weighted vote aggregation with exact rational
//!   arithmetic.
//! - [`analytics`]: agreement with gold, consensus stratification, descriptive
//!   statistics, Student's t-test, support histograms and disagreement reports.
//! - [`simulate`]: deterministic synthetic workers that drive a campaign end to
//!   end without humans.
//! - [`service`]: the event-sourced campaign engine, its JSON Lines log and
//!   replay.

pub mod adjudicate;
pub mod analytics;
pub mod corpus;
pub mod quality;
pub mod rational;
pub mod rng;
pub mod service;
pub mod simulate;

pub use adjudicate::{aggregate_unit, confidence_tally, crowd_agreement, AggregatedAnswer, ChoiceTally, Judgment};
pub use analytics::{Report, SupportHistogram};
pub use corpus::{Corpus, EntityKind, EntitySpan, GoldRecord, RelationType, SemanticQualifier, Unit};
pub use quality::{Assignment, PassThreshold, TestQuestion, Worker, WorkerStatus};
pub use rational::Rational;
pub use service::{CampaignEngine, CampaignState, Event, EventRecord, JobConfig};
pub use simulate::{CampaignTranscript, DifficultyModel, Population, WorkerProfile};
