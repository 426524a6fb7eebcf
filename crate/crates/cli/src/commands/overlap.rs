use std::path::Path;

use tasksets_core::analysis::{mask_game, CharacterFilter};
use tasksets_core::overlap::{matrix_difference, write_matrix_csv, CooccurrenceCounts, OverlapKind, OverlapMatrix};
use tasksets_core::tasksets::Registry;

use super::{out_dir, Ctx};
use crate::args::OverlapArgs;
use crate::error::{Classify, Failure, Outcome};
use crate::io::{telemetry_files, FileDigest};
use crate::pipeline::fold_files;

/// Affordance and completion co-occurrence over every filtered player-game.
#[derive(Debug, Clone)]
pub struct OverlapCounts {
    pub affordance: CooccurrenceCounts,
    pub completion: CooccurrenceCounts,
}

impl OverlapCounts {
    pub fn new(registry: &Registry) -> Self {
        let ids: Vec<String> = registry.defs().iter().map(|d| d.id.clone()).collect();
        OverlapCounts {
            affordance: CooccurrenceCounts::new(ids.clone(), OverlapKind::Affordance),
            completion: CooccurrenceCounts::new(ids, OverlapKind::Completion),
        }
    }

    pub fn add_game(
        &mut self,
        t: &tasksets_core::telemetry::Trajectory,
        registry: &Registry,
        filter: Option<&CharacterFilter>,
    ) -> anyhow::Result<()> {
        for m in mask_game(t, registry, filter)? {
            self.affordance.add(&m)?;
            self.completion.add(&m)?;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &OverlapCounts) -> anyhow::Result<()> {
        self.affordance.merge(&other.affordance)?;
        self.completion.merge(&other.completion)?;
        Ok(())
    }
}

pub fn count_dir(
    ctx: &Ctx,
    dir: &Path,
    filter: Option<&CharacterFilter>,
) -> Outcome<(OverlapCounts, Vec<FileDigest>)> {
    let files = telemetry_files(dir).or_data()?;
    let registry = &ctx.registry;
    let (counts, digests) = fold_files(
        &files,
        ctx.global.jobs,
        || OverlapCounts::new(registry),
        |c, t| c.add_game(t, registry, filter),
        |a, b| a.merge(&b),
    )?;
    if counts.affordance.games == 0 {
        return Err(Failure::data(format!("no player in {} matches the character filter", dir.display())));
    }
    Ok((counts, digests))
}

fn write_matrix(out: &crate::io::OutDir, name: &str, m: &OverlapMatrix) -> Outcome<()> {
    out.write_with(name, |w| write_matrix_csv(&m.taskset_ids, &m.values, w)).or_data()?;
    Ok(())
}

pub fn run(ctx: &Ctx, args: &OverlapArgs) -> Outcome<()> {
    let filter = Ctx::filter(&args.character);
    let (counts, mut inputs) = count_dir(ctx, &args.input, filter.as_ref())?;
    let label = args.input.display().to_string();
    let aff = counts.affordance.matrix(args.measure, &label);
    let comp = counts.completion.matrix(args.measure, &label);
    let baseline = match &args.baseline {
        Some(dir) => {
            let (base, digests) = count_dir(ctx, dir, filter.as_ref())?;
            inputs.extend(digests);
            let label = dir.display().to_string();
            Some((base.affordance.matrix(args.measure, &label), base.completion.matrix(args.measure, &label)))
        }
        None => None,
    };
    let out = out_dir(&args.out)?;
    write_matrix(&out, "affordance_overlap.csv", &aff)?;
    write_matrix(&out, "completion_overlap.csv", &comp)?;
    if let Some((base_aff, base_comp)) = &baseline {
        write_matrix(&out, "baseline_affordance_overlap.csv", base_aff)?;
        write_matrix(&out, "baseline_completion_overlap.csv", base_comp)?;
        for (name, m, b) in [
            ("affordance_difference.csv", &aff, base_aff),
            ("completion_difference.csv", &comp, base_comp),
        ] {
            let d = matrix_difference(m, b).or_data()?;
            out.write_with(name, |w| write_matrix_csv(&d.taskset_ids, &d.values, w)).or_data()?;
        }
    }
    ctx.finish(&out, "overlap", args, None, inputs, Vec::new(), None)
}
