//! Recorded episodes and their replay.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::engine::Game;
use crate::error::{Result, WorldError};
use crate::label::StateLabel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordedStep {
    pub command: String,
    pub response: String,
    pub reward: f64,
    pub label: StateLabel,
}

/// Plays `commands` from a fresh reset and records every step.
pub fn record(game: &mut Game, commands: &[String]) -> Result<Vec<RecordedStep>> {
    game.reset();
    let mut out = Vec::with_capacity(commands.len());
    for c in commands {
        let r = game.step(c)?;
        out.push(RecordedStep {
            command: c.clone(),
            response: r.response,
            reward: r.reward,
            label: r.label,
        });
        if r.status != crate::engine::Status::Running {
            break;
        }
    }
    Ok(out)
}

/// Replays a recording and returns the index of the first step whose
/// response, reward or label differs, if any.
pub fn first_divergence(game: &mut Game, steps: &[RecordedStep]) -> Result<Option<usize>> {
    let commands: Vec<String> = steps.iter().map(|s| s.command.clone()).collect();
    let replayed = record(game, &commands)?;
    for (i, s) in steps.iter().enumerate() {
        match replayed.get(i) {
            Some(r) if r.response == s.response && r.reward.to_bits() == s.reward.to_bits() && r.label == s.label => {}
            _ => return Ok(Some(i)),
        }
    }
    Ok(None)
}

/// One JSON object per line.
pub fn write_jsonl<W: Write>(mut w: W, steps: &[RecordedStep]) -> std::io::Result<()> {
    for s in steps {
        serde_json::to_writer(&mut w, s)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<RecordedStep>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line.map_err(|e| WorldError::Record(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| WorldError::Record(e.to_string()))?);
    }
    Ok(out)
}
