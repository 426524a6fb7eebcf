use std::io::Write;

use rayon::prelude::*;
use tasksets_core::csv_field;
use tasksets_core::simulator::{make_population, simulate, PopulationSpec};

use super::{out_dir, Ctx};
use crate::args::SimulateArgs;
use crate::error::{Classify, Failure, Outcome};
use crate::io::{encode_trajectory, file_stem, sha256_hex, FileDigest};
use crate::pipeline::pool;

/// Ground truth: one row per synthetic player.
pub fn write_archetypes_csv<W: Write>(spec: &PopulationSpec, mut w: W) -> std::io::Result<()> {
    writeln!(w, "player_id,character,aggression,exploration,sociality,games")?;
    for p in spec.all_players() {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            csv_field(p.player_id.as_str()),
            csv_field(&p.character),
            p.archetype.aggression,
            p.archetype.exploration,
            p.archetype.sociality,
            spec.games_per_player
        )?;
    }
    Ok(())
}

pub fn run(ctx: &Ctx, args: &SimulateArgs) -> Outcome<()> {
    let Some((spec, config_digest)) = ctx.population()? else {
        return Err(Failure::config("simulate needs --config <population file>"));
    };
    let games = make_population(&spec).or_config()?;
    log::info!("simulating {} games on {} threads", games.len(), ctx.global.jobs);
    let out = out_dir(&args.out)?;
    let ext = if args.plain { "jsonl" } else { "jsonl.gz" };
    let outputs: Vec<FileDigest> = pool(ctx.global.jobs)?.install(|| {
        games
            .par_iter()
            .map(|cfg| -> Outcome<FileDigest> {
                let t = simulate(cfg).or_config()?;
                let bytes = encode_trajectory(&t, !args.plain).or_data()?;
                let name = format!("{}.{ext}", file_stem(&cfg.game_id));
                out.write(&name, &bytes).or_data()?;
                log::debug!("wrote {name}");
                Ok(FileDigest {
                    sha256: sha256_hex(&bytes),
                    path: name,
                })
            })
            .collect::<Outcome<Vec<_>>>()
    })?;
    out.write_with("archetypes.csv", |w| write_archetypes_csv(&spec, w)).or_data()?;
    let snapshot = serde_json::to_value(&spec).or_data()?;
    ctx.finish(&out, "simulate", args, Some(snapshot), vec![config_digest], outputs, Some(spec.master_seed))
}
