//! Overlap matrices between task-sets and solo/diad/multi occupancy.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tasksets::{ids, MaskSeries, Registry, Role, TaskSetError};
use crate::telemetry::CharacterClass;

#[derive(Debug, Error, PartialEq)]
pub enum OverlapError {
    #[error("empty mask collection")]
    EmptyCollection,
    #[error("matrices have different task-set orderings")]
    ShapeMismatch,
    #[error("mask series disagree on task-set ordering")]
    MixedRegistries,
    #[error(transparent)]
    TaskSet(#[from] TaskSetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapKind {
    Affordance,
    Completion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapMeasure {
    /// `|i and j| / |i or j|`, symmetric.
    #[default]
    Jaccard,
    /// `|i and j| / |i|`, row-conditional.
    Conditional,
}

impl std::str::FromStr for OverlapMeasure {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jaccard" => Ok(OverlapMeasure::Jaccard),
            "conditional" => Ok(OverlapMeasure::Conditional),
            other => Err(format!("unknown overlap measure {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapMatrix {
    pub taskset_ids: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub kind: OverlapKind,
    pub measure: OverlapMeasure,
    pub population: String,
    pub games: usize,
}

fn check_layout<'a>(collection: &[&'a MaskSeries]) -> Result<&'a [String], OverlapError> {
    let first = collection.first().ok_or(OverlapError::EmptyCollection)?;
    if collection.iter().any(|m| m.taskset_ids != first.taskset_ids) {
        return Err(OverlapError::MixedRegistries);
    }
    Ok(&first.taskset_ids)
}

/// Jaccard overlap of every task-set pair, pooled over the collection.
pub fn overlap_matrix(
    collection: &[&MaskSeries],
    kind: OverlapKind,
) -> Result<OverlapMatrix, OverlapError> {
    overlap_matrix_with(collection, kind, OverlapMeasure::Jaccard, "")
}

pub fn overlap_matrix_with(
    collection: &[&MaskSeries],
    kind: OverlapKind,
    measure: OverlapMeasure,
    population: &str,
) -> Result<OverlapMatrix, OverlapError> {
    let ids = check_layout(collection)?;
    let mut counts = CooccurrenceCounts::new(ids.to_vec(), kind);
    for m in collection {
        counts.add(m)?;
    }
    Ok(counts.matrix(measure, population))
}

/// Per-task-set occurrence ticks and pairwise co-occurrence ticks, summed over
/// games. Merging is order-independent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CooccurrenceCounts {
    pub taskset_ids: Vec<String>,
    pub kind: OverlapKind,
    pub games: usize,
    single: Vec<u64>,
    /// Upper triangle, `both[i][j]` for `i < j`.
    both: Vec<Vec<u64>>,
}

impl CooccurrenceCounts {
    pub fn new(taskset_ids: Vec<String>, kind: OverlapKind) -> Self {
        let n = taskset_ids.len();
        CooccurrenceCounts {
            taskset_ids,
            kind,
            games: 0,
            single: vec![0; n],
            both: vec![vec![0; n]; n],
        }
    }

    pub fn add(&mut self, m: &MaskSeries) -> Result<(), OverlapError> {
        if m.taskset_ids != self.taskset_ids {
            return Err(OverlapError::MixedRegistries);
        }
        let words = match self.kind {
            OverlapKind::Affordance => &m.afforded,
            OverlapKind::Completion => &m.completed,
        };
        for &w in words {
            let mut rest = w;
            while rest != 0 {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                self.single[i] += 1;
                let mut others = rest;
                while others != 0 {
                    let j = others.trailing_zeros() as usize;
                    others &= others - 1;
                    self.both[i][j] += 1;
                }
            }
        }
        self.games += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &CooccurrenceCounts) -> Result<(), OverlapError> {
        if other.taskset_ids != self.taskset_ids || other.kind != self.kind {
            return Err(OverlapError::MixedRegistries);
        }
        for (a, b) in self.single.iter_mut().zip(&other.single) {
            *a += b;
        }
        for (ra, rb) in self.both.iter_mut().zip(&other.both) {
            for (a, b) in ra.iter_mut().zip(rb) {
                *a += b;
            }
        }
        self.games += other.games;
        Ok(())
    }

    pub fn matrix(&self, measure: OverlapMeasure, population: &str) -> OverlapMatrix {
        let n = self.taskset_ids.len();
        let single = &self.single;
        let values = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let inter = if i == j {
                            single[i]
                        } else {
                            self.both[i.min(j)][i.max(j)]
                        };
                        let den = match measure {
                            OverlapMeasure::Jaccard => single[i] + single[j] - inter,
                            OverlapMeasure::Conditional => single[i],
                        };
                        if den == 0 {
                            0.0
                        } else {
                            inter as f64 / den as f64
                        }
                    })
                    .collect()
            })
            .collect();
        OverlapMatrix {
            taskset_ids: self.taskset_ids.clone(),
            values,
            kind: self.kind,
            measure,
            population: population.to_string(),
            games: self.games,
        }
    }
}

/// Elementwise difference of two matrices over the same task-set ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDifference {
    pub taskset_ids: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

pub fn matrix_difference(
    m1: &OverlapMatrix,
    m2: &OverlapMatrix,
) -> Result<MatrixDifference, OverlapError> {
    if m1.taskset_ids != m2.taskset_ids {
        return Err(OverlapError::ShapeMismatch);
    }
    Ok(MatrixDifference {
        taskset_ids: m1.taskset_ids.clone(),
        values: m1
            .values
            .iter()
            .zip(&m2.values)
            .map(|(r1, r2)| r1.iter().zip(r2).map(|(a, b)| a - b).collect())
            .collect(),
    })
}

/// CSV with a header row and a header column of task-set ids.
pub fn write_matrix_csv<W: Write>(ids: &[String], values: &[Vec<f64>], mut w: W) -> io::Result<()> {
    write!(w, "taskset_id")?;
    for id in ids {
        write!(w, ",{id}")?;
    }
    writeln!(w)?;
    for (id, row) in ids.iter().zip(values) {
        write!(w, "{id}")?;
        for v in row {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Raw solo-multi tallies; rows for pooled games are the sums of per-game
/// tallies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OccupancyTally {
    pub ticks: u64,
    pub alive_ticks: u64,
    pub afforded_ticks: u64,
    /// Alive ticks where exactly one of solo/diad/multi completed.
    pub classified_ticks: u64,
    pub solo_completions: u64,
    pub diad_completions: u64,
    pub multi_completions: u64,
    /// Alive ticks with no teammate within the regroup radius.
    pub solo_time_ticks: u64,
    /// Alive ticks with at least one teammate within the regroup radius.
    pub multi_time_ticks: u64,
}

impl OccupancyTally {
    pub fn merge(&mut self, o: &OccupancyTally) {
        self.ticks += o.ticks;
        self.alive_ticks += o.alive_ticks;
        self.afforded_ticks += o.afforded_ticks;
        self.classified_ticks += o.classified_ticks;
        self.solo_completions += o.solo_completions;
        self.diad_completions += o.diad_completions;
        self.multi_completions += o.multi_completions;
        self.solo_time_ticks += o.solo_time_ticks;
        self.multi_time_ticks += o.multi_time_ticks;
    }

    pub fn of(masks: &MaskSeries) -> Result<Self, OverlapError> {
        let solo = masks.index_of(ids::CONTINUE_SOLO)?;
        let regroup = masks.index_of(ids::REGROUP_WITH_ALLIES)?;
        let diad = masks.index_of(ids::REGROUP_SINGLE_ALLY)?;
        let multi = masks.index_of(ids::REGROUP_MULTIPLE_ALLIES)?;
        let mut t = OccupancyTally {
            ticks: masks.len() as u64,
            ..Default::default()
        };
        for tick in 0..masks.len() {
            if masks.is_afforded(tick, solo) {
                t.afforded_ticks += 1;
            }
            if !masks.alive[tick] {
                continue;
            }
            t.alive_ticks += 1;
            let (s, d, m) = (
                masks.is_completed(tick, solo),
                masks.is_completed(tick, diad),
                masks.is_completed(tick, multi),
            );
            if s as u8 + d as u8 + m as u8 == 1 {
                t.classified_ticks += 1;
                t.solo_completions += s as u64;
                t.diad_completions += d as u64;
                t.multi_completions += m as u64;
            }
            if s {
                t.solo_time_ticks += 1;
            }
            if masks.is_completed(tick, regroup) {
                t.multi_time_ticks += 1;
            }
        }
        Ok(t)
    }

    pub fn row(&self, label: &str) -> OccupancyRow {
        let pct = |n: u64, of: u64| if of == 0 { 0.0 } else { 100.0 * n as f64 / of as f64 };
        OccupancyRow {
            label: label.to_string(),
            afford_pct: pct(self.afforded_ticks, self.ticks),
            solo_pct: pct(self.solo_completions, self.classified_ticks),
            diad_pct: pct(self.diad_completions, self.classified_ticks),
            multi_pct: pct(self.multi_completions, self.classified_ticks),
            solo_time_pct: pct(self.solo_time_ticks, self.alive_ticks),
            multi_time_pct: pct(self.multi_time_ticks, self.alive_ticks),
            tally: *self,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyRow {
    pub label: String,
    pub afford_pct: f64,
    /// Completion split over classified ticks; sums to 100.
    pub solo_pct: f64,
    pub diad_pct: f64,
    pub multi_pct: f64,
    pub solo_time_pct: f64,
    pub multi_time_pct: f64,
    pub tally: OccupancyTally,
}

pub fn solo_multi_occupancy(collection: &[&MaskSeries], label: &str) -> Result<OccupancyRow, OverlapError> {
    if collection.is_empty() {
        return Err(OverlapError::EmptyCollection);
    }
    let mut total = OccupancyTally::default();
    for m in collection {
        total.merge(&OccupancyTally::of(m)?);
    }
    Ok(total.row(label))
}

/// `character,solo_pct,multi_pct` first, then the completion split.
pub fn write_occupancy_csv<W: Write>(rows: &[OccupancyRow], mut w: W) -> io::Result<()> {
    writeln!(
        w,
        "character,solo_pct,multi_pct,afford_pct,solo_completion_pct,diad_completion_pct,multi_completion_pct,alive_ticks"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            crate::csv_field(&r.label),
            r.solo_time_pct,
            r.multi_time_pct,
            r.afford_pct,
            r.solo_pct,
            r.diad_pct,
            r.multi_pct,
            r.tally.alive_ticks
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassFightOverlap {
    pub class: CharacterClass,
    /// Jaccard overlap of each solo-multi completion with any fight completion.
    pub overlaps: Vec<(String, f64)>,
}

/// For each class, overlap of every solo-multi completion flag with the
/// union of fight completions.
pub fn fight_overlap_by_class(
    per_class: &BTreeMap<CharacterClass, Vec<&MaskSeries>>,
    registry: &Registry,
) -> Result<Vec<ClassFightOverlap>, OverlapError> {
    let mut counts = FightOverlapCounts::new(registry);
    for (&class, collection) in per_class {
        check_layout(collection)?;
        for m in collection {
            counts.add_as(class, m)?;
        }
    }
    Ok(counts.overlaps())
}

/// Mergeable tallies behind [`fight_overlap_by_class`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FightOverlapCounts {
    solo_multi: Vec<String>,
    fights: Vec<String>,
    /// Per class: intersection and union tick counts per solo-multi id.
    per_class: BTreeMap<CharacterClass, (Vec<u64>, Vec<u64>)>,
}

impl FightOverlapCounts {
    pub fn new(registry: &Registry) -> Self {
        let ids_where = |keep: fn(Role) -> bool| {
            registry
                .defs()
                .iter()
                .filter(|d| keep(d.role))
                .map(|d| d.id.clone())
                .collect::<Vec<_>>()
        };
        FightOverlapCounts {
            solo_multi: ids_where(|r| matches!(r, Role::Solo | Role::Regroup | Role::Diad | Role::Multi)),
            fights: ids_where(|r| r == Role::Fight),
            per_class: BTreeMap::new(),
        }
    }

    /// Adds a mask series under its own character class.
    pub fn add(&mut self, m: &MaskSeries) -> Result<(), OverlapError> {
        self.add_as(m.character_class, m)
    }

    pub fn add_as(&mut self, class: CharacterClass, m: &MaskSeries) -> Result<(), OverlapError> {
        let fight_bits = self
            .fights
            .iter()
            .try_fold(0u64, |acc, id| m.index_of(id).map(|i| acc | 1 << i))?;
        let sm_idx: Vec<usize> = self
            .solo_multi
            .iter()
            .map(|id| m.index_of(id))
            .collect::<Result<_, _>>()?;
        let k = sm_idx.len();
        let (inter, union) = self
            .per_class
            .entry(class)
            .or_insert_with(|| (vec![0; k], vec![0; k]));
        for &w in &m.completed {
            let fight = w & fight_bits != 0;
            for (k, &i) in sm_idx.iter().enumerate() {
                let sm = w >> i & 1 == 1;
                inter[k] += (sm && fight) as u64;
                union[k] += (sm || fight) as u64;
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &FightOverlapCounts) -> Result<(), OverlapError> {
        if other.solo_multi != self.solo_multi || other.fights != self.fights {
            return Err(OverlapError::MixedRegistries);
        }
        for (class, (oi, ou)) in &other.per_class {
            let (inter, union) = self
                .per_class
                .entry(*class)
                .or_insert_with(|| (vec![0; oi.len()], vec![0; ou.len()]));
            for (a, b) in inter.iter_mut().zip(oi) {
                *a += b;
            }
            for (a, b) in union.iter_mut().zip(ou) {
                *a += b;
            }
        }
        Ok(())
    }

    pub fn overlaps(&self) -> Vec<ClassFightOverlap> {
        self.per_class
            .iter()
            .map(|(&class, (inter, union))| ClassFightOverlap {
                class,
                overlaps: self
                    .solo_multi
                    .iter()
                    .enumerate()
                    .map(|(k, id)| {
                        let v = if union[k] == 0 {
                            0.0
                        } else {
                            inter[k] as f64 / union[k] as f64
                        };
                        (id.clone(), v)
                    })
                    .collect(),
            })
            .collect()
    }
}
