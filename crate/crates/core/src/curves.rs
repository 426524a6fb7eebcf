//! Simultaneous affordance-completion curves.
//!
//! For a pair (or group) of task-sets, every tick where all of them are
//! afforded opens one window per task-set. The window runs until that
//! task-set is afforded again, and every completion inside it is recorded at
//! its offset from the opening tick. Pooling those offsets over all opening
//! ticks and dividing by the number of opening ticks gives
//! `P(completion at t + x | simultaneous affordance at t)`.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tasksets::{MaskSeries, TaskSetError};

pub const DEFAULT_HORIZON: usize = 150;

#[derive(Debug, Error, PartialEq)]
pub enum CurveError {
    #[error(transparent)]
    TaskSet(#[from] TaskSetError),
    #[error("no simultaneous affordances for {0:?}")]
    NoAffordances(Vec<String>),
    #[error("horizon must be at least 1")]
    InvalidHorizon,
}

/// How per-(game, player) counts are combined into one curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// Sum raw counts and denominators, divide once.
    #[default]
    Events,
    /// Average the per-game probabilities of games with at least one affordance.
    GameMean,
}

impl std::str::FromStr for Pooling {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "events" => Ok(Pooling::Events),
            "game_mean" => Ok(Pooling::GameMean),
            other => Err(format!("unknown pooling {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub taskset_id: String,
    pub horizon: usize,
    /// `completions[x]` for `x` in `0..=horizon`.
    pub completions: Vec<u64>,
    /// Simultaneous-affordance ticks pooled into this curve.
    pub denominator: u64,
    pub probabilities: Vec<f64>,
}

/// Opening tick of a window and the completion offsets recorded inside it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffordanceWindow {
    pub taskset_id: String,
    pub start: usize,
    /// Exclusive: the next tick where the task-set is afforded, or the trajectory end.
    pub end: usize,
    pub completion_offsets: Vec<usize>,
}

/// Ticks at which every listed task-set is afforded.
pub fn simultaneous_afford_ticks(
    masks: &MaskSeries,
    taskset_ids: &[&str],
) -> Result<Vec<usize>, CurveError> {
    let bits = group_bits(masks, taskset_ids)?;
    if bits == 0 {
        return Ok(Vec::new());
    }
    Ok(masks
        .afforded
        .iter()
        .enumerate()
        .filter(|(_, &w)| w & bits == bits)
        .map(|(t, _)| t)
        .collect())
}

fn group_bits(masks: &MaskSeries, taskset_ids: &[&str]) -> Result<u64, CurveError> {
    taskset_ids.iter().try_fold(0u64, |acc, id| {
        Ok(acc | 1 << masks.index_of(id)?)
    })
}

/// `next[t]` is the first tick after `t` where task-set `idx` is afforded,
/// or `masks.len()`.
fn next_affordance(masks: &MaskSeries, idx: usize) -> Vec<usize> {
    let n = masks.len();
    let mut next = vec![n; n];
    let mut upcoming = n;
    for t in (0..n).rev() {
        next[t] = upcoming;
        if masks.is_afforded(t, idx) {
            upcoming = t;
        }
    }
    next
}

/// One window per affordance tick in `afford_ticks`.
pub fn completion_windows(
    masks: &MaskSeries,
    taskset_id: &str,
    afford_ticks: &[usize],
) -> Result<Vec<AffordanceWindow>, CurveError> {
    let idx = masks.index_of(taskset_id)?;
    let next = next_affordance(masks, idx);
    Ok(afford_ticks
        .iter()
        .map(|&start| {
            let end = next[start];
            AffordanceWindow {
                taskset_id: taskset_id.to_string(),
                start,
                end,
                completion_offsets: (start..end)
                    .filter(|&t| masks.is_completed(t, idx))
                    .map(|t| t - start)
                    .collect(),
            }
        })
        .collect())
}

/// Raw, mergeable counts behind a curve. Merging is plain integer addition,
/// so the result is independent of merge order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurveCounts {
    pub completions: Vec<u64>,
    pub denominator: u64,
}

impl CurveCounts {
    pub fn zeros(horizon: usize) -> Self {
        CurveCounts {
            completions: vec![0; horizon + 1],
            denominator: 0,
        }
    }

    pub fn merge(&mut self, other: &CurveCounts) {
        debug_assert_eq!(self.completions.len(), other.completions.len());
        for (a, b) in self.completions.iter_mut().zip(&other.completions) {
            *a += b;
        }
        self.denominator += other.denominator;
    }

    fn probabilities(&self) -> Vec<f64> {
        self.completions
            .iter()
            .map(|&c| c as f64 / self.denominator as f64)
            .collect()
    }
}

/// Counts for each task-set of a group from one mask series, in
/// `group_ids` order.
pub fn curve_counts(
    masks: &MaskSeries,
    group_ids: &[&str],
    horizon: usize,
) -> Result<Vec<CurveCounts>, CurveError> {
    if horizon < 1 {
        return Err(CurveError::InvalidHorizon);
    }
    let opening = simultaneous_afford_ticks(masks, group_ids)?;
    group_ids
        .iter()
        .map(|id| {
            let idx = masks.index_of(id)?;
            let next = next_affordance(masks, idx);
            let mut counts = CurveCounts::zeros(horizon);
            counts.denominator = opening.len() as u64;
            for &t in &opening {
                let stop = next[t].min(t + horizon + 1);
                for tick in t..stop {
                    if masks.is_completed(tick, idx) {
                        counts.completions[tick - t] += 1;
                    }
                }
            }
            Ok(counts)
        })
        .collect()
}

/// Curves for each task-set of a group, pooled over a collection of mask
/// series (typically one player's games).
pub fn completion_curve<'a, I>(
    collection: I,
    group_ids: &[&str],
    horizon: usize,
) -> Result<Vec<Curve>, CurveError>
where
    I: IntoIterator<Item = &'a MaskSeries>,
{
    completion_curve_with(collection, group_ids, horizon, Pooling::Events)
}

pub fn completion_curve_with<'a, I>(
    collection: I,
    group_ids: &[&str],
    horizon: usize,
    pooling: Pooling,
) -> Result<Vec<Curve>, CurveError>
where
    I: IntoIterator<Item = &'a MaskSeries>,
{
    if horizon < 1 {
        return Err(CurveError::InvalidHorizon);
    }
    let per_game = collection
        .into_iter()
        .map(|m| curve_counts(m, group_ids, horizon))
        .collect::<Result<Vec<_>, _>>()?;
    curves_from_counts(&per_game, group_ids, horizon, pooling)
}

/// Pools per-game counts (one `Vec` per game, in `group_ids` order) into
/// curves. Games are combined in the order given.
pub fn curves_from_counts(
    per_game: &[Vec<CurveCounts>],
    group_ids: &[&str],
    horizon: usize,
    pooling: Pooling,
) -> Result<Vec<Curve>, CurveError> {
    if horizon < 1 {
        return Err(CurveError::InvalidHorizon);
    }
    let mut pooled: Vec<CurveCounts> = vec![CurveCounts::zeros(horizon); group_ids.len()];
    let mut prob_sums: Vec<Vec<f64>> = vec![vec![0.0; horizon + 1]; group_ids.len()];
    let mut games_with_affordance = 0usize;
    for counts in per_game {
        if counts.len() != group_ids.len() || counts.iter().any(|c| c.completions.len() != horizon + 1) {
            return Err(CurveError::InvalidHorizon);
        }
        let has_affordance = counts.first().is_some_and(|c| c.denominator > 0);
        if has_affordance {
            games_with_affordance += 1;
        }
        for (k, c) in counts.iter().enumerate() {
            pooled[k].merge(c);
            if has_affordance {
                for (s, p) in prob_sums[k].iter_mut().zip(c.probabilities()) {
                    *s += p;
                }
            }
        }
    }
    if pooled.first().is_none_or(|c| c.denominator == 0) {
        return Err(CurveError::NoAffordances(
            group_ids.iter().map(|s| s.to_string()).collect(),
        ));
    }
    Ok(group_ids
        .iter()
        .zip(pooled)
        .zip(prob_sums)
        .map(|((id, counts), sums)| {
            let probabilities = match pooling {
                Pooling::Events => counts.probabilities(),
                Pooling::GameMean => sums
                    .into_iter()
                    .map(|s| s / games_with_affordance as f64)
                    .collect(),
            };
            Curve {
                taskset_id: id.to_string(),
                horizon,
                completions: counts.completions,
                denominator: counts.denominator,
                probabilities,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveStats {
    /// Rectangle-rule area with unit tick width.
    pub auc: f64,
    pub max: f64,
    /// Smallest offset attaining `max`.
    pub argmax: usize,
}

pub fn curve_stats(curve: &Curve) -> CurveStats {
    let mut auc = 0.0;
    let mut max = 0.0;
    let mut argmax = 0;
    for (x, &p) in curve.probabilities.iter().enumerate() {
        auc += p;
        if p > max {
            max = p;
            argmax = x;
        }
    }
    CurveStats { auc, max, argmax }
}

/// CSV with columns `taskset_id,offset,count,denominator,probability`.
pub fn write_curves_csv<W: Write>(curves: &[Curve], mut w: W) -> io::Result<()> {
    writeln!(w, "taskset_id,offset,count,denominator,probability")?;
    for c in curves {
        for (x, (&count, &p)) in c.completions.iter().zip(&c.probabilities).enumerate() {
            writeln!(w, "{},{x},{count},{},{p}", c.taskset_id, c.denominator)?;
        }
    }
    Ok(())
}
