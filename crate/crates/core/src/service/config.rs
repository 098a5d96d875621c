use serde::{Deserialize, Serialize};

use crate::quality::PassThreshold;

/// Campaign parameters. Missing fields take their defaults when
/// deserializing; unknown fields are rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JobConfig {
    pub judgments_per_unit: usize,
    pub quiz_size: usize,
    pub pass_threshold: PassThreshold,
    /// Every k-th assignment is a hidden test question.
    pub test_interleave_period: u32,
    pub payment_display: String,
    pub sample_size: usize,
    pub sample_seed: u64,
}

impl Default for JobConfig {
    fn default() -> Self {
        JobConfig {
            judgments_per_unit: 10,
            quiz_size: 10,
            pass_threshold: PassThreshold::default(),
            test_interleave_period: 5,
            payment_display: "10 cents per sentence".into(),
            sample_size: 60,
            sample_seed: 0,
        }
    }
}

impl JobConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.judgments_per_unit < 1 {
            return Err("judgments_per_unit must be at least 1".into());
        }
        if self.quiz_size < 1 {
            return Err("quiz_size must be at least 1".into());
        }
        if self.test_interleave_period < 2 {
            return Err("test_interleave_period must be at least 2".into());
        }
        Ok(())
    }
}
