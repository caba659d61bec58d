//! Storyboards: the shot list driving segmented long-video generation.

use serde::{Deserialize, Serialize};

use crate::providers::mock::MOCK_GRID_MS;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shot {
    /// 1-based.
    pub index: u64,
    pub prompt: String,
    pub duration_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Storyboard {
    pub shots: Vec<Shot>,
}

impl Storyboard {
    pub fn total_duration_ms(&self) -> u64 {
        self.shots.iter().map(|s| s.duration_ms).sum()
    }

    /// At least one shot, every duration positive and on the frame grid.
    pub fn check(&self) -> Result<(), String> {
        if self.shots.is_empty() {
            return Err("storyboard has no shots".into());
        }
        for shot in &self.shots {
            if shot.duration_ms == 0 || shot.duration_ms % MOCK_GRID_MS != 0 {
                return Err(format!(
                    "shot {} duration {} is not a positive multiple of {MOCK_GRID_MS} ms",
                    shot.index, shot.duration_ms
                ));
            }
        }
        Ok(())
    }
}
