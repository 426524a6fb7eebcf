use std::io::Write;

use tasksets_core::analysis::{build_features, PopulationAccumulator};
use tasksets_core::csv_field;
use tasksets_core::curves::Pooling;
use tasksets_core::manifold::{classify_strategy, mean_auc_ratio, switch_analysis, PlayerFeatureVector, SwitchReport};
use tasksets_core::tasksets::{evaluate, Registry, Theme};
use tasksets_core::telemetry::Trajectory;

use super::{out_dir, Ctx};
use crate::args::SwitchArgs;
use crate::error::{Classify, Failure, Outcome};
use crate::io::telemetry_files;
use crate::pipeline::fold_files;

/// Adds the players of one game whose character is one of `characters`.
pub fn add_game(
    acc: &mut PopulationAccumulator,
    t: &Trajectory,
    registry: &Registry,
    characters: [&str; 2],
) -> anyhow::Result<()> {
    for (id, entry) in &t.meta.character_roster {
        if characters.contains(&entry.character_name.as_str()) {
            acc.add(&evaluate(t, id, registry)?)?;
        }
    }
    Ok(())
}

/// Per-player strategy on each character, classified within that
/// character's population.
pub fn write_strategies<W: Write>(vectors: &[PlayerFeatureVector], characters: [&str; 2], mut w: W) -> std::io::Result<()> {
    writeln!(w, "player_id,character,mean_auc_ratio,strategy")?;
    for c in characters {
        let pop: Vec<PlayerFeatureVector> = vectors.iter().filter(|v| v.character_name == c).cloned().collect();
        for v in &pop {
            writeln!(
                w,
                "{},{},{},{:?}",
                csv_field(v.player_id.as_str()),
                csv_field(c),
                mean_auc_ratio(v),
                classify_strategy(v, &pop)
            )?;
        }
    }
    Ok(())
}

pub fn run(ctx: &Ctx, args: &SwitchArgs) -> Outcome<()> {
    if args.from == args.to {
        return Err(Failure::config("--from and --to must name different characters"));
    }
    let files = telemetry_files(&args.input).or_data()?;
    let registry = &ctx.registry;
    let characters = [args.from.as_str(), args.to.as_str()];
    let (acc, inputs) = fold_files(
        &files,
        ctx.global.jobs,
        || PopulationAccumulator::new(registry, Theme::FightFlight, ctx.global.horizon).expect("horizon checked"),
        |acc, t| add_game(acc, t, registry, characters),
        |a, b| Ok(a.merge(b)?),
    )?;
    let summaries = acc.summaries(Pooling::Events).or_data()?;
    let (vectors, skips) = build_features(&summaries, ctx.global.min_games).or_data()?;
    log::info!("{} vectors, {} skipped", vectors.len(), skips.len());
    let report: SwitchReport = switch_analysis(&vectors, &args.from, &args.to);
    if report.players == 0 {
        return Err(Failure::data(format!(
            "no player has at least {} games on both {} and {}",
            ctx.global.min_games, args.from, args.to
        )));
    }
    let out = out_dir(&args.out)?;
    let mut json = serde_json::to_string_pretty(&report).or_data()?;
    json.push('\n');
    out.write("switch.json", json.as_bytes()).or_data()?;
    out.write_with("strategies.csv", |w| write_strategies(&vectors, characters, w)).or_data()?;
    out.write_with("skips.csv", |w| super::analyze::write_skips(&skips, w)).or_data()?;
    ctx.finish(&out, "switch", args, None, inputs, Vec::new(), None)
}
