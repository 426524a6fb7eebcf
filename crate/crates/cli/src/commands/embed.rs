use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context};
use serde::Serialize;
use tasksets_core::manifold::{
    compare_populations_with, feature_names, manifold_points, spread_stats, write_features_csv, AlignmentReport,
    PlayerFeatureVector, SIGNIFICANCE,
};
use tasksets_core::tasksets::{Registry, Theme};
use tasksets_core::telemetry::PlayerId;

use super::{out_dir, Ctx};
use crate::args::{CompareArgs, EmbedArgs};
use crate::error::{Classify, Outcome};
use crate::io::{read_input, FileDigest};

const FIXED: [&str; 6] = ["player_id", "character", "theme", "games_used", "mean_score", "valid_pairs"];
const POINT_COLUMNS: [&str; 4] = ["x", "y", "color_reward", "color_ratio"];

/// A features file as written by analyze (or embed, whose extra point
/// columns are ignored).
#[derive(Debug, Clone)]
pub struct FeatureTable {
    pub theme: Theme,
    pub names: Vec<String>,
    pub vectors: Vec<PlayerFeatureVector>,
}

pub fn parse_features(bytes: &[u8], registry: &Registry) -> anyhow::Result<FeatureTable> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(bytes);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.len() < FIXED.len() || header[..FIXED.len()] != FIXED {
        bail!("header must start with {}", FIXED.join(","));
    }
    let mut end = header.len();
    if header.ends_with(&POINT_COLUMNS.map(String::from)) {
        end -= POINT_COLUMNS.len();
    }
    let names = header[FIXED.len()..end].to_vec();
    let mut theme = None;
    let mut vectors = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let field = |k: usize| rec.get(k).with_context(|| format!("line {line}: missing column {k}"));
        let t: Theme = field(2)?.parse().map_err(anyhow::Error::msg).with_context(|| format!("line {line}"))?;
        match theme {
            None => {
                let expected = feature_names(registry, t)?;
                if expected != names {
                    bail!("feature columns do not match the {t} layout of the registry");
                }
                theme = Some(t);
            }
            Some(prev) if prev != t => bail!("line {line}: theme {t} differs from {prev}"),
            _ => {}
        }
        let values = (FIXED.len()..end)
            .map(|k| {
                field(k)?
                    .parse::<f64>()
                    .with_context(|| format!("line {line}: column {} is not a number", header[k]))
            })
            .collect::<anyhow::Result<Vec<f64>>>()?;
        let pair_valid = field(5)?
            .chars()
            .map(|c| match c {
                '1' => Ok(true),
                '0' => Ok(false),
                _ => bail!("line {line}: valid_pairs must be 0/1 digits"),
            })
            .collect::<anyhow::Result<Vec<bool>>>()?;
        vectors.push(PlayerFeatureVector {
            player_id: PlayerId::new(field(0)?),
            character_name: field(1)?.to_string(),
            games_used: field(3)?.parse().with_context(|| format!("line {line}: games_used"))?,
            theme: t,
            mean_score: field(4)?.parse().with_context(|| format!("line {line}: mean_score"))?,
            values,
            pair_valid,
        });
    }
    let Some(theme) = theme else {
        bail!("no feature rows");
    };
    Ok(FeatureTable { theme, names, vectors })
}

pub fn load_features(path: &Path, registry: &Registry) -> anyhow::Result<(FeatureTable, FileDigest)> {
    let (bytes, digest) = read_input(path)?;
    let table = parse_features(&bytes, registry).with_context(|| format!("reading features {}", path.display()))?;
    Ok((table, digest))
}

pub fn run_embed(ctx: &Ctx, args: &EmbedArgs) -> Outcome<()> {
    let (table, digest) = load_features(&args.features, &ctx.registry).or_data()?;
    let seed = ctx.global.seed.unwrap_or(0);
    let (points, embedding) = manifold_points(&table.vectors, args.method, seed).or_data()?;
    let coords: Vec<Vec<f64>> = points.iter().map(|p| p.xy.to_vec()).collect();
    let spread = spread_stats(&coords).or_data()?;
    let out = out_dir(&args.out)?;
    out.write_with("embedding.csv", |w| write_features_csv(&table.names, &table.vectors, Some(&points), w))
        .or_data()?;
    out.write_with("axes.csv", |w| {
        writeln!(w, "axis,variance,std,iqr")?;
        for k in 0..2 {
            writeln!(w, "{k},{},{},{}", embedding.axis_variance[k], spread[k].std, spread[k].iqr)?;
        }
        Ok(())
    })
    .or_data()?;
    out.write_with("loadings.csv", |w| {
        writeln!(w, "feature,axis_0,axis_1")?;
        for (i, &col) in embedding.kept_columns.iter().enumerate() {
            let l0 = embedding.loadings[0].get(i).copied().unwrap_or(0.0);
            let l1 = embedding.loadings[1].get(i).copied().unwrap_or(0.0);
            writeln!(w, "{},{l0},{l1}", table.names[col])?;
        }
        Ok(())
    })
    .or_data()?;
    ctx.finish(&out, "embed", args, None, vec![digest], Vec::new(), Some(seed))
}

#[derive(Serialize)]
struct AlignmentFile<'a> {
    theme: Theme,
    feature_names: &'a [String],
    significance: f64,
    report: &'a AlignmentReport,
}

pub fn write_comparison<W: Write>(names: &[String], r: &AlignmentReport, mut w: W) -> std::io::Result<()> {
    writeln!(w, "feature,ks_statistic,p_value,different,std_a,std_b,iqr_a,iqr_b,std_ratio")?;
    for f in &r.features {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            names[f.feature],
            f.ks.statistic,
            f.ks.p_value,
            u8::from(f.ks.p_value < SIGNIFICANCE),
            f.spread_a.std,
            f.spread_b.std,
            f.spread_a.iqr,
            f.spread_b.iqr,
            f.std_ratio
        )?;
    }
    Ok(())
}

pub fn write_axes<W: Write>(r: &AlignmentReport, mut w: W) -> std::io::Result<()> {
    writeln!(w, "axis,std_a,std_b,iqr_a,iqr_b,std_ratio,behavior_rho,behavior_axis")?;
    for k in 0..2 {
        writeln!(
            w,
            "{k},{},{},{},{},{},{},{}",
            r.axis_spread_a[k].std,
            r.axis_spread_b[k].std,
            r.axis_spread_a[k].iqr,
            r.axis_spread_b[k].iqr,
            r.axis_std_ratio[k],
            r.behavior_axis_rho[k],
            u8::from(r.behavior_axis == k)
        )?;
    }
    Ok(())
}

pub fn run_compare(ctx: &Ctx, args: &CompareArgs) -> Outcome<()> {
    let (a, da) = load_features(&args.a, &ctx.registry).or_data()?;
    let (b, db) = load_features(&args.b, &ctx.registry).or_data()?;
    if a.theme != b.theme {
        return Err(crate::error::Failure::data(format!(
            "{} holds {} features but {} holds {}",
            args.a.display(),
            a.theme,
            args.b.display(),
            b.theme
        )));
    }
    let seed = ctx.global.seed.unwrap_or(0);
    let report = compare_populations_with(&a.vectors, &b.vectors, args.method, seed).or_data()?;
    let out = out_dir(&args.out)?;
    let file = AlignmentFile {
        theme: a.theme,
        feature_names: &a.names,
        significance: SIGNIFICANCE,
        report: &report,
    };
    let mut json = serde_json::to_string_pretty(&file).or_data()?;
    json.push('\n');
    out.write("alignment.json", json.as_bytes()).or_data()?;
    out.write_with("comparison.csv", |w| write_comparison(&a.names, &report, w)).or_data()?;
    out.write_with("axes.csv", |w| write_axes(&report, w)).or_data()?;
    ctx.finish(&out, "compare", args, None, vec![da, db], Vec::new(), Some(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tasksets_core::tasksets::builtin_registry;

    fn table(rows: usize) -> (Vec<String>, Vec<PlayerFeatureVector>) {
        let r = builtin_registry();
        let names = feature_names(&r, Theme::ExploreExploit).unwrap();
        let vectors = (0..rows)
            .map(|i| PlayerFeatureVector {
                player_id: PlayerId::new(format!("p,{i}")),
                character_name: "Daemon".into(),
                games_used: 3,
                theme: Theme::ExploreExploit,
                mean_score: i as f64 * 0.1,
                values: (0..names.len()).map(|j| ((i * 7 + j * 3) % 11) as f64 / 3.0).collect(),
                pair_valid: vec![true, false, true],
            })
            .collect();
        (names, vectors)
    }

    #[test]
    fn features_csv_round_trips() {
        let r = builtin_registry();
        let (names, vectors) = table(5);
        let mut buf = Vec::new();
        write_features_csv(&names, &vectors, None, &mut buf).unwrap();
        let back = parse_features(&buf, &r).unwrap();
        assert_eq!(back.theme, Theme::ExploreExploit);
        assert_eq!(back.names, names);
        assert_eq!(back.vectors, vectors);
    }

    #[test]
    fn embedding_csv_parses_as_features() {
        let r = builtin_registry();
        let (names, vectors) = table(6);
        let (points, _) = manifold_points(&vectors, Default::default(), 0).unwrap();
        let mut buf = Vec::new();
        write_features_csv(&names, &vectors, Some(&points), &mut buf).unwrap();
        assert_eq!(parse_features(&buf, &r).unwrap().vectors, vectors);
    }

    #[test]
    fn wrong_layout_is_rejected() {
        let r = builtin_registry();
        let (mut names, vectors) = table(3);
        names[0] = "other".into();
        let mut buf = Vec::new();
        write_features_csv(&names, &vectors, None, &mut buf).unwrap();
        assert!(parse_features(&buf, &r).is_err());
        assert!(parse_features(b"player_id,character\n", &r).is_err());
    }
}
