//! `run` and `analyze`: ingest, simulate, aggregate, report.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use relcrowd_core::adjudicate::{aggregate_unit, check_qualifier, confidence_tally};
use relcrowd_core::analytics::Answers;
use relcrowd_core::corpus::parse_corpus;
use relcrowd_core::rational::{format_exact, parse_exact};
use relcrowd_core::service::{replay, CampaignState, ServiceError};
use relcrowd_core::simulate::{run_campaign, SimulateError};
use relcrowd_core::{
    Corpus, DifficultyModel, JobConfig, Judgment, PassThreshold, Population, Rational, RelationType, Report,
    SemanticQualifier,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub corpus: PathBuf,
    pub sample: usize,
    pub seed: u64,
    pub workers: usize,
    pub judgments_per_unit: usize,
    pub pass_threshold: PassThreshold,
    pub interleave: u32,
    pub out: PathBuf,
    pub formats: Vec<Format>,
}

impl RunSpec {
    /// Defaults for everything but the corpus, seed and output directory.
    pub fn new(corpus: impl Into<PathBuf>, seed: u64, out: impl Into<PathBuf>) -> RunSpec {
        let config = JobConfig::default();
        RunSpec {
            corpus: corpus.into(),
            sample: config.sample_size,
            seed,
            workers: Population::default().count,
            judgments_per_unit: config.judgments_per_unit,
            pass_threshold: config.pass_threshold,
            interleave: config.test_interleave_period,
            out: out.into(),
            formats: vec![Format::Json, Format::Csv],
        }
    }

    pub fn config(&self) -> JobConfig {
        JobConfig {
            judgments_per_unit: self.judgments_per_unit,
            pass_threshold: self.pass_threshold,
            test_interleave_period: self.interleave,
            sample_size: self.sample,
            sample_seed: self.seed,
            ..JobConfig::default()
        }
    }
}

pub fn load_corpus(path: &Path) -> Result<Corpus, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::validation("ingest", format!("{}: {e}", path.display())))?;
    parse_corpus(BufReader::new(file)).map_err(|e| CliError::validation("ingest", format!("{}: {e}", path.display())))
}

/// One accepted judgment with the weight it carried at close.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JudgmentLine {
    pub worker_id: String,
    pub unit_id: String,
    pub relation: RelationType,
    pub qualifier: Option<SemanticQualifier>,
    pub submitted_at: String,
    /// Exact accuracy as `p/q`.
    pub worker_accuracy: String,
}

/// Accepted judgments of a campaign as JSON Lines, in unit order.
pub fn judgments_jsonl(state: &CampaignState) -> String {
    let accuracies = state.accuracies();
    let mut out = String::new();
    for j in state.judgments() {
        let line = JudgmentLine {
            worker_id: j.worker_id.clone(),
            unit_id: j.unit_id.clone(),
            relation: j.relation,
            qualifier: j.qualifier,
            submitted_at: j.submitted_at.clone(),
            worker_accuracy: format_exact(&accuracies[&j.worker_id]),
        };
        out.push_str(&serde_json::to_string(&line).expect("judgment serializes"));
        out.push('\n');
    }
    out
}

/// Aggregates recorded judgments. Every unit must exist in `corpus` and
/// every worker must carry one accuracy throughout.
pub fn answers_from_judgments<R: BufRead>(reader: R, corpus: &Corpus) -> Result<Answers, CliError> {
    let mut by_unit: BTreeMap<String, Vec<Judgment>> = BTreeMap::new();
    let mut accuracies: BTreeMap<String, Rational> = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let record = i + 1;
        let line = line.map_err(|e| CliError::runtime("analyze", format!("record {record}: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: String| CliError::validation("analyze", format!("record {record}: {msg}"));
        let j: JudgmentLine = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        if corpus.unit(&j.unit_id).is_none() {
            return Err(bad(format!("unknown unit_id {}", j.unit_id)));
        }
        check_qualifier(j.relation, j.qualifier).map_err(|e| bad(e.to_string()))?;
        let accuracy = parse_exact(&j.worker_accuracy).map_err(|e| bad(e.to_string()))?;
        match accuracies.get(&j.worker_id) {
            Some(a) if *a != accuracy => {
                return Err(bad(format!("worker {} has conflicting accuracies", j.worker_id)));
            }
            Some(_) => {}
            None => {
                accuracies.insert(j.worker_id.clone(), accuracy);
            }
        }
        by_unit.entry(j.unit_id.clone()).or_default().push(Judgment {
            worker_id: j.worker_id,
            unit_id: j.unit_id,
            relation: j.relation,
            qualifier: j.qualifier,
            submitted_at: j.submitted_at,
        });
    }
    let mut answers = Answers::new();
    for (unit_id, judgments) in by_unit {
        let tally = confidence_tally(&judgments, &accuracies).map_err(|e| CliError::validation("analyze", e))?;
        let answer = aggregate_unit(&unit_id, &tally).map_err(|e| CliError::validation("analyze", e))?;
        answers.insert(unit_id, answer);
    }
    Ok(answers)
}

pub fn answers_from_events<R: BufRead>(reader: R) -> Result<Answers, CliError> {
    let state = replay(reader).map_err(|e| match e {
        ServiceError::Io(e) => CliError::runtime("replay", e),
        other => CliError::validation("replay", other),
    })?;
    state.answers().map_err(|e| CliError::validation("replay", e))
}

pub fn build_report(answers: &Answers, corpus: &Corpus) -> Result<Report, CliError> {
    Report::build(answers, corpus.gold()).map_err(|e| CliError::validation("analyze", e))
}

fn write(path: &Path, contents: &str) -> Result<PathBuf, CliError> {
    fs::write(path, contents).map_err(|e| CliError::runtime("write", format!("{}: {e}", path.display())))?;
    Ok(path.to_path_buf())
}

/// Report artifacts for the requested formats.
pub fn write_report(report: &Report, out: &Path, formats: &[Format]) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::runtime("write", format!("{}: {e}", out.display())))?;
    let mut written = Vec::new();
    if formats.contains(&Format::Json) {
        written.push(write(&out.join("report.json"), &report.to_json())?);
        written.push(write(&out.join("disagreements.json"), &report.disagreements_json())?);
    }
    if formats.contains(&Format::Csv) {
        written.push(write(&out.join("boxplot.csv"), &report.boxplot_csv())?);
        written.push(write(&out.join("histogram.csv"), &report.histogram_csv())?);
    }
    Ok(written)
}

#[derive(Debug)]
pub struct RunOutput {
    pub report: Report,
    pub written: Vec<PathBuf>,
}

#[derive(Serialize)]
struct RunMeta {
    started_unix_ms: u128,
    elapsed_ms: u128,
    version: &'static str,
    seed: u64,
}

/// ingest → sample → simulated campaign → aggregate → analytics → artifacts.
/// Everything but `run-meta.json` is a pure function of the spec.
pub fn run(spec: &RunSpec) -> Result<RunOutput, CliError> {
    let started = Instant::now();
    let started_unix_ms = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis());
    let corpus = load_corpus(&spec.corpus)?;
    let config = spec.config();
    config.validate().map_err(|e| CliError::validation("config", e))?;
    if spec.sample > corpus.len() {
        return Err(CliError::validation(
            "sample",
            format!("sample size {} exceeds corpus size {}", spec.sample, corpus.len()),
        ));
    }
    let population = Population { count: spec.workers, ..Population::default() };
    let transcript =
        run_campaign(&corpus, &config, &DifficultyModel::default(), &population, spec.seed).map_err(|e| match e {
            SimulateError::InvalidParameter(_) | SimulateError::Service(ServiceError::Validation(_)) => {
                CliError::validation("simulate", e)
            }
            other => CliError::runtime("simulate", other),
        })?;

    let mut written = write_report(&transcript.report, &spec.out, &spec.formats)?;
    written.push(write(&spec.out.join("judgments.jsonl"), &judgments_jsonl(&transcript.state))?);
    written.push(write(&spec.out.join("events.jsonl"), &transcript.event_log())?);
    let meta = RunMeta {
        started_unix_ms,
        elapsed_ms: started.elapsed().as_millis(),
        version: env!("CARGO_PKG_VERSION"),
        seed: spec.seed,
    };
    let mut meta_json = serde_json::to_string_pretty(&meta).expect("meta serializes");
    meta_json.push('\n');
    written.push(write(&spec.out.join("run-meta.json"), &meta_json)?);
    Ok(RunOutput { report: transcript.report, written })
}

#[derive(Debug, Clone)]
pub enum RecordedInput {
    Judgments(PathBuf),
    Events(PathBuf),
}

#[derive(Debug, Clone)]
pub struct AnalyzeSpec {
    pub input: RecordedInput,
    pub gold: PathBuf,
    pub out: PathBuf,
    pub formats: Vec<Format>,
}

/// Analytics over recorded judgments or an event log, without a campaign.
pub fn analyze(spec: &AnalyzeSpec) -> Result<RunOutput, CliError> {
    let corpus = load_corpus(&spec.gold)?;
    let open = |path: &Path| {
        fs::File::open(path)
            .map(BufReader::new)
            .map_err(|e| CliError::validation("analyze", format!("{}: {e}", path.display())))
    };
    let answers = match &spec.input {
        RecordedInput::Judgments(path) => answers_from_judgments(open(path)?, &corpus)?,
        RecordedInput::Events(path) => answers_from_events(open(path)?)?,
    };
    let report = build_report(&answers, &corpus)?;
    let written = write_report(&report, &spec.out, &spec.formats)?;
    Ok(RunOutput { report, written })
}
