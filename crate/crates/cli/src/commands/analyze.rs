use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use tasksets_core::analysis::{
    build_features, mask_game, CharacterFilter, PlayerKey, PlayerSummary, PopulationAccumulator, Skip,
};
use tasksets_core::csv_field;
use tasksets_core::curves::Pooling;
use tasksets_core::manifold::{feature_names, mean_auc_ratio, write_features_csv, PlayerFeatureVector};
use tasksets_core::tasksets::{Registry, Theme};
use tasksets_core::telemetry::Trajectory;

use super::{out_dir, Ctx};
use crate::args::AnalyzeArgs;
use crate::error::{Classify, Failure, Outcome};
use crate::io::{telemetry_files, OutDir};
use crate::pipeline::fold_files;

/// Reduced output of one analyze run.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub theme: Theme,
    pub summaries: Vec<PlayerSummary>,
    /// Feature names and vectors; `None` for solo-multi.
    pub features: Option<(Vec<String>, Vec<PlayerFeatureVector>)>,
    pub skips: Vec<Skip>,
}

/// Adds every filtered roster player of one game.
pub fn add_game(
    acc: &mut PopulationAccumulator,
    t: &Trajectory,
    registry: &Registry,
    filter: Option<&CharacterFilter>,
) -> anyhow::Result<()> {
    for m in mask_game(t, registry, filter)? {
        acc.add(&m)?;
    }
    Ok(())
}

pub fn finish(
    acc: &PopulationAccumulator,
    registry: &Registry,
    pooling: Pooling,
    min_games: usize,
) -> anyhow::Result<Analysis> {
    let summaries = acc.summaries(pooling)?;
    let theme = acc.theme();
    let (features, skips) = if theme == Theme::SoloMulti {
        let skips = summaries
            .iter()
            .filter(|s| s.games_used < min_games)
            .map(|s| Skip {
                player_id: s.key.player_id.clone(),
                character_name: s.key.character_name.clone(),
                reason: format!("player {} has {} games, {min_games} required", s.key.player_id, s.games_used),
            })
            .collect();
        (None, skips)
    } else {
        let (vectors, skips) = build_features(&summaries, min_games)?;
        (Some((feature_names(registry, theme)?, vectors)), skips)
    };
    Ok(Analysis {
        theme,
        summaries,
        features,
        skips,
    })
}

pub fn write_curves<W: Write>(summaries: &[PlayerSummary], mut w: W) -> std::io::Result<()> {
    writeln!(w, "player_id,character,group,taskset_id,offset,count,denominator,probability")?;
    for s in summaries {
        let (id, ch) = (csv_field(s.key.player_id.as_str()), csv_field(&s.key.character_name));
        for g in &s.groups {
            for c in g.curves.iter().flatten() {
                for (x, (&count, &p)) in c.completions.iter().zip(&c.probabilities).enumerate() {
                    writeln!(w, "{id},{ch},{},{},{x},{count},{},{p}", g.group, c.taskset_id, c.denominator)?;
                }
            }
        }
    }
    Ok(())
}

pub fn write_skips<W: Write>(skips: &[Skip], mut w: W) -> std::io::Result<()> {
    writeln!(w, "player_id,character,reason")?;
    for s in skips {
        writeln!(
            w,
            "{},{},{}",
            csv_field(s.player_id.as_str()),
            csv_field(&s.character_name),
            csv_field(&s.reason)
        )?;
    }
    Ok(())
}

/// One row per retained player: score, mean AUC ratio (pairwise themes) and
/// solo-multi occupancy.
pub fn write_players<W: Write>(a: &Analysis, mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "player_id,character,games_used,mean_score,mean_auc_ratio,solo_time_pct,multi_time_pct,solo_completion_pct,diad_completion_pct,multi_completion_pct,alive_ticks"
    )?;
    let skipped: BTreeSet<(&str, &str)> =
        a.skips.iter().map(|s| (s.player_id.as_str(), s.character_name.as_str())).collect();
    let ratios: BTreeMap<PlayerKey, f64> = a
        .features
        .iter()
        .flat_map(|(_, v)| v)
        .map(|v| {
            let key = PlayerKey {
                player_id: v.player_id.clone(),
                character_name: v.character_name.clone(),
            };
            (key, mean_auc_ratio(v))
        })
        .collect();
    for s in &a.summaries {
        if skipped.contains(&(s.key.player_id.as_str(), s.key.character_name.as_str())) {
            continue;
        }
        let ratio = ratios.get(&s.key).map(|r| r.to_string()).unwrap_or_default();
        let row = s.occupancy.row("");
        writeln!(
            w,
            "{},{},{},{},{ratio},{},{},{},{},{},{}",
            csv_field(s.key.player_id.as_str()),
            csv_field(&s.key.character_name),
            s.games_used,
            s.mean_score,
            row.solo_time_pct,
            row.multi_time_pct,
            row.solo_pct,
            row.diad_pct,
            row.multi_pct,
            row.tally.alive_ticks
        )?;
    }
    Ok(())
}

pub fn write_analysis(out: &OutDir, a: &Analysis) -> anyhow::Result<()> {
    out.write_with("curves.csv", |w| write_curves(&a.summaries, w))?;
    if let Some((names, vectors)) = &a.features {
        out.write_with("features.csv", |w| write_features_csv(names, vectors, None, w))?;
    }
    out.write_with("skips.csv", |w| write_skips(&a.skips, w))?;
    out.write_with("players.csv", |w| write_players(a, w))?;
    Ok(())
}

pub fn run(ctx: &Ctx, args: &AnalyzeArgs) -> Outcome<()> {
    let files = telemetry_files(&args.input).or_data()?;
    let filter = Ctx::filter(&args.character);
    let registry = &ctx.registry;
    let init = || PopulationAccumulator::new(registry, args.theme, ctx.global.horizon).expect("horizon checked");
    let (acc, inputs) = fold_files(
        &files,
        ctx.global.jobs,
        init,
        |acc, t| add_game(acc, t, registry, filter.as_ref()),
        |a, b| Ok(a.merge(b)?),
    )?;
    if acc.is_empty() {
        let what = args.character.as_deref().unwrap_or("any character");
        return Err(Failure::data(format!("no player in {} matches {what}", args.input.display())));
    }
    let analysis = finish(&acc, registry, args.pooling, ctx.global.min_games).or_data()?;
    if let Some((_, v)) = &analysis.features {
        if v.is_empty() {
            log::warn!("every player was skipped; see skips.csv");
        }
    }
    log::info!("{} players, {} skipped", acc.len(), analysis.skips.len());
    let out = out_dir(&args.out)?;
    write_analysis(&out, &analysis).or_data()?;
    ctx.finish(&out, "analyze", args, None, inputs, Vec::new(), None)
}
