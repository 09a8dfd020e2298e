use serde::{Deserialize, Serialize};

use super::{EvalError, GoldStep, Result};
use crate::orchestrator::{TerminalStatus, Transcript};

/// A transcript aligned against its gold trajectory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    /// One entry per executed device action, recovery `Back`s included.
    pub correct: Vec<bool>,
    /// Gold steps consumed.
    pub depth: usize,
    pub gold_len: usize,
    pub success: bool,
    pub status: TerminalStatus,
}

impl MatchResult {
    pub fn decisions(&self) -> usize {
        self.correct.len()
    }

    pub fn correct_decisions(&self) -> usize {
        self.correct.iter().filter(|c| **c).count()
    }

    /// Device actions taken; `Done` is not one.
    pub fn steps(&self) -> usize {
        self.correct.len()
    }

    pub fn completion(&self) -> f64 {
        self.depth as f64 / self.gold_len as f64
    }
}

/// Greedy alignment: an executed action is correct when the current gold
/// step accepts it, which moves to the next gold step. Success needs every
/// gold step consumed, a `done` ending, and no action after the last gold
/// step.
pub fn match_trajectory(transcript: &Transcript, gold: &[GoldStep]) -> MatchResult {
    let mut correct = Vec::new();
    let mut depth = 0;
    let mut extraneous = false;
    for action in transcript.executed_actions() {
        if depth == gold.len() {
            extraneous = true;
            correct.push(false);
            continue;
        }
        let hit = gold[depth].accepts(action);
        if hit {
            depth += 1;
        }
        correct.push(hit);
    }
    let status = transcript.status();
    MatchResult {
        correct,
        depth,
        gold_len: gold.len(),
        success: depth == gold.len() && status == TerminalStatus::Done && !extraneous,
        status,
    }
}

/// Suite-level success rate, completion rate, decision accuracy and mean
/// step count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub sr: f64,
    pub cr: f64,
    /// Judged on executed actions; 0 when no action was executed at all.
    pub da: f64,
    pub step: f64,
    pub tasks: usize,
}

pub fn compute_metrics(results: &[MatchResult]) -> Result<Metrics> {
    if results.is_empty() {
        return Err(EvalError::EmptySuite);
    }
    let n = results.len() as f64;
    let successes = results.iter().filter(|r| r.success).count() as f64;
    let cr = results.iter().map(MatchResult::completion).sum::<f64>() / n;
    let decisions: usize = results.iter().map(MatchResult::decisions).sum();
    let correct: usize = results.iter().map(MatchResult::correct_decisions).sum();
    let da = if decisions == 0 { 0.0 } else { correct as f64 / decisions as f64 };
    let step = results.iter().map(MatchResult::steps).sum::<usize>() as f64 / n;
    Ok(Metrics { sr: successes / n, cr, da, step, tasks: results.len() })
}
