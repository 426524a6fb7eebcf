use std::collections::BTreeMap;
use std::io::Write;

use tasksets_core::analysis::{mask_game, CharacterFilter};
use tasksets_core::overlap::{write_occupancy_csv, ClassFightOverlap, FightOverlapCounts, OccupancyTally};
use tasksets_core::tasksets::Registry;
use tasksets_core::telemetry::Trajectory;

use super::{out_dir, Ctx};
use crate::args::OccupancyArgs;
use crate::error::{Classify, Failure, Outcome};
use crate::io::telemetry_files;
use crate::pipeline::fold_files;

/// Solo-multi tallies per character plus fight overlap per class.
#[derive(Debug, Clone)]
pub struct OccupancyCounts {
    pub per_character: BTreeMap<String, OccupancyTally>,
    pub fights: FightOverlapCounts,
}

impl OccupancyCounts {
    pub fn new(registry: &Registry) -> Self {
        OccupancyCounts {
            per_character: BTreeMap::new(),
            fights: FightOverlapCounts::new(registry),
        }
    }

    pub fn add_game(&mut self, t: &Trajectory, registry: &Registry, filter: Option<&CharacterFilter>) -> anyhow::Result<()> {
        for m in mask_game(t, registry, filter)? {
            self.per_character
                .entry(m.character_name.clone())
                .or_default()
                .merge(&OccupancyTally::of(&m)?);
            self.fights.add(&m)?;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &OccupancyCounts) -> anyhow::Result<()> {
        for (c, t) in &other.per_character {
            self.per_character.entry(c.clone()).or_default().merge(t);
        }
        self.fights.merge(&other.fights)?;
        Ok(())
    }

    pub fn total(&self) -> OccupancyTally {
        let mut all = OccupancyTally::default();
        for t in self.per_character.values() {
            all.merge(t);
        }
        all
    }
}

pub fn write_fight_overlap<W: Write>(rows: &[ClassFightOverlap], mut w: W) -> std::io::Result<()> {
    writeln!(w, "class,taskset_id,jaccard")?;
    for r in rows {
        for (id, v) in &r.overlaps {
            writeln!(w, "{},{id},{v}", r.class)?;
        }
    }
    Ok(())
}

pub fn run(ctx: &Ctx, args: &OccupancyArgs) -> Outcome<()> {
    let files = telemetry_files(&args.input).or_data()?;
    let filter = Ctx::filter(&args.character);
    let registry = &ctx.registry;
    let (counts, inputs) = fold_files(
        &files,
        ctx.global.jobs,
        || OccupancyCounts::new(registry),
        |c, t| c.add_game(t, registry, filter.as_ref()),
        |a, b| a.merge(&b),
    )?;
    if counts.per_character.is_empty() {
        return Err(Failure::data(format!(
            "no player in {} matches the character filter",
            args.input.display()
        )));
    }
    let mut rows: Vec<_> = counts.per_character.iter().map(|(c, t)| t.row(c)).collect();
    rows.push(counts.total().row("all"));
    let out = out_dir(&args.out)?;
    out.write_with("occupancy.csv", |w| write_occupancy_csv(&rows, w)).or_data()?;
    out.write_with("fight_overlap.csv", |w| write_fight_overlap(&counts.fights.overlaps(), w))
        .or_data()?;
    ctx.finish(&out, "occupancy", args, None, inputs, Vec::new(), None)
}
