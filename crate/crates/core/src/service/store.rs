//! Append-only JSON Lines persistence and replay.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::Path;

use super::{CampaignState, EventRecord, EventSink, ServiceError};

/// One campaign log file. Each append is written, flushed and synced before
/// returning.
pub struct JsonlFileSink {
    file: File,
}

impl JsonlFileSink {
    /// Opens `path` for appending, creating it if needed.
    pub fn open(path: &Path) -> io::Result<JsonlFileSink> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(JsonlFileSink { file })
    }
}

impl EventSink for JsonlFileSink {
    fn append(&mut self, record: &EventRecord) -> io::Result<()> {
        self.file.write_all(record.to_line().as_bytes())?;
        self.file.flush()?;
        self.file.sync_data()
    }
}

/// Folds a log into state. Sequence numbers must be dense from 1; the first
/// bad record aborts replay with its sequence number.
pub fn replay<R: BufRead>(reader: R) -> Result<CampaignState, ServiceError> {
    let mut state = CampaignState::default();
    for line in reader.lines() {
        let seq = state.last_seq() + 1;
        let line = line.map_err(|e| ServiceError::Replay { seq, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: EventRecord = serde_json::from_str(&line)
            .map_err(|e| ServiceError::Replay { seq, message: format!("corrupt record: {e}") })?;
        state.apply(&record).map_err(|message| ServiceError::Replay { seq, message })?;
    }
    if !state.is_created() {
        return Err(ServiceError::Replay { seq: 1, message: "log holds no CampaignCreated event".into() });
    }
    Ok(state)
}

/// Replays a log file for resumption. A final line without its newline is a
/// torn write: it is cut from the file before replay. Returns the state and
/// whether a tail was cut.
pub fn load_log(path: &Path) -> Result<(CampaignState, bool), ServiceError> {
    let mut file = OpenOptions::new().read(true).write(true).open(path)?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)?;
    let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let torn = keep < bytes.len();
    if torn {
        file.set_len(keep as u64)?;
        file.seek(SeekFrom::End(0))?;
        file.sync_data()?;
    }
    let state = replay(BufReader::new(&bytes[..keep]))?;
    Ok((state, torn))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::synthetic::{generate, SyntheticSpec};
    use crate::service::{CampaignEngine, JobConfig, LogicalClock};

    fn small_config() -> JobConfig {
        JobConfig { sample_size: 4, judgments_per_unit: 2, quiz_size: 3, ..JobConfig::default() }
    }

    #[test]
    fn file_log_round_trip_and_torn_tail() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c1.jsonl");
        let corpus = generate(&SyntheticSpec { unanimous: 6, majority: 6, ..SyntheticSpec::default() }, 3);
        let sink = JsonlFileSink::open(&path).unwrap();
        let mut engine = CampaignEngine::create("c1", &corpus, small_config(), sink, LogicalClock::default()).unwrap();
        engine.register_worker("w1", "secret").unwrap();
        let live = engine.state().clone();
        drop(engine);

        let (replayed, torn) = load_log(&path).unwrap();
        assert!(!torn);
        assert_eq!(replayed, live);

        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"seq\":3,\"ts\":\"x\",\"ki").unwrap();
        drop(f);
        let (replayed, torn) = load_log(&path).unwrap();
        assert!(torn);
        assert_eq!(replayed, live);
        assert!(std::fs::read_to_string(&path).unwrap().ends_with("}\n"));
    }

    #[test]
    fn gaps_and_garbage_name_the_sequence() {
        let corpus = generate(&SyntheticSpec { unanimous: 6, majority: 6, ..SyntheticSpec::default() }, 3);
        let mut engine =
            CampaignEngine::create("c1", &corpus, small_config(), Vec::new(), LogicalClock::default()).unwrap();
        engine.register_worker("w1", "t1").unwrap();
        engine.register_worker("w2", "t2").unwrap();
        let lines: Vec<String> = engine.sink().iter().map(EventRecord::to_line).collect();

        let gap = format!("{}{}", lines[0], lines[2]);
        match replay(gap.as_bytes()) {
            Err(ServiceError::Replay { seq, .. }) => assert_eq!(seq, 2),
            other => panic!("expected replay error, got {other:?}"),
        }
        let garbage = format!("{}not json\n", lines[0]);
        match replay(garbage.as_bytes()) {
            Err(ServiceError::Replay { seq, .. }) => assert_eq!(seq, 2),
            other => panic!("expected replay error, got {other:?}"),
        }
        assert!(matches!(replay(&b""[..]), Err(ServiceError::Replay { seq: 1, .. })));
    }
}
