//! Per-player behavioral feature vectors and the 2D behavioral manifold.
//!
//! Each fight-flight (explore-exploit) pair contributes nine features: AUC,
//! max and argmax of the fight (exploit) curve, the same for the flight
//! (explore) curve, and the three fight/flight ratios.

mod compare;
pub mod embed;
pub mod stats;
mod strategy;

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use compare::{compare_populations, compare_populations_with, AlignmentReport, AxisSpread, FeatureComparison, SIGNIFICANCE};
pub use embed::{embed_2d, EmbedMethod, Embedding};
pub use strategy::{
    classify_strategy, mean_auc_ratio, switch_analysis, Strategy, SwitchReport,
};

use crate::curves::{curve_stats, Curve, CurveError};
use crate::tasksets::{Registry, Role, Theme};
use crate::telemetry::PlayerId;

/// Games a player needs with a character before their features are used.
pub const DEFAULT_MIN_GAMES: usize = 3;

/// Additive smoothing on both sides of every ratio feature.
pub const RATIO_EPSILON: f64 = 1e-6;

/// Features per pair.
pub const FEATURES_PER_PAIR: usize = 9;

/// Offset of `auc_ratio` inside a pair block.
const AUC_RATIO_OFFSET: usize = 6;

#[derive(Debug, Error, PartialEq)]
pub enum ManifoldError {
    #[error("player {player} has {have} games, {need} required")]
    InsufficientGames {
        player: PlayerId,
        have: usize,
        need: usize,
    },
    #[error("{have} players, at least {need} required")]
    TooFewPlayers { have: usize, need: usize },
    #[error("every feature column has zero variance")]
    ZeroVarianceAllColumns,
    #[error("feature rows have different lengths")]
    RaggedMatrix,
    #[error("theme {0} has no pairwise features")]
    UnsupportedTheme(Theme),
    #[error("populations mix themes or feature layouts")]
    LayoutMismatch,
    #[error("empty population")]
    EmptyPopulation,
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// Pooled curves of one pair: `[fight, flight]` or `[exploit, explore]`.
/// `None` when the pair was never simultaneously afforded.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCurves {
    pub group: String,
    pub curves: Option<[Curve; 2]>,
}

/// Everything needed to build one player's feature vector for one
/// character and theme.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerCurves {
    pub player_id: PlayerId,
    pub character_name: String,
    pub games_used: usize,
    pub theme: Theme,
    /// Mean final score over the pooled games.
    pub mean_score: f64,
    pub pairs: Vec<PairCurves>,
}

/// The groups of a theme with the positive role (fight, exploit) first.
pub fn theme_pairs(registry: &Registry, theme: Theme) -> Result<Vec<(String, [String; 2])>, ManifoldError> {
    let (first, second) = match theme {
        Theme::FightFlight => (Role::Fight, Role::Flight),
        Theme::ExploreExploit => (Role::Exploit, Role::Explore),
        Theme::SoloMulti => return Err(ManifoldError::UnsupportedTheme(theme)),
    };
    let mut out = Vec::new();
    for (group, members) in registry.groups(theme) {
        let find = |role| {
            members
                .iter()
                .find(|id| registry.get(id).is_some_and(|d| d.role == role))
                .cloned()
        };
        if let (Some(a), Some(b)) = (find(first), find(second)) {
            out.push((group, [a, b]));
        }
    }
    Ok(out)
}

/// Column names of a theme's feature vector.
pub fn feature_names(registry: &Registry, theme: Theme) -> Result<Vec<String>, ManifoldError> {
    let (pos, neg) = match theme {
        Theme::FightFlight => ("fight", "flight"),
        _ => ("exploit", "explore"),
    };
    let stats = ["auc", "max", "argmax"];
    let mut names = Vec::new();
    for (group, _) in theme_pairs(registry, theme)? {
        for side in [pos, neg] {
            for s in stats {
                names.push(format!("{group}.{side}_{s}"));
            }
        }
        for s in stats {
            names.push(format!("{group}.{s}_ratio"));
        }
    }
    Ok(names)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerFeatureVector {
    pub player_id: PlayerId,
    pub character_name: String,
    pub games_used: usize,
    pub theme: Theme,
    pub mean_score: f64,
    pub values: Vec<f64>,
    /// Whether each pair had at least one simultaneous affordance.
    pub pair_valid: Vec<bool>,
}

impl PlayerFeatureVector {
    pub fn pair_block(&self, pair: usize) -> &[f64] {
        &self.values[pair * FEATURES_PER_PAIR..(pair + 1) * FEATURES_PER_PAIR]
    }
}

pub fn smoothed_ratio(num: f64, den: f64) -> f64 {
    (num + RATIO_EPSILON) / (den + RATIO_EPSILON)
}

/// Assembles the feature vector in fixed pair order. Pairs without
/// affordances contribute zeros and neutral (1.0) ratios.
pub fn player_features(
    curves: &PlayerCurves,
    min_games: usize,
) -> Result<PlayerFeatureVector, ManifoldError> {
    if curves.theme == Theme::SoloMulti {
        return Err(ManifoldError::UnsupportedTheme(curves.theme));
    }
    if curves.games_used < min_games {
        return Err(ManifoldError::InsufficientGames {
            player: curves.player_id.clone(),
            have: curves.games_used,
            need: min_games,
        });
    }
    let mut values = Vec::with_capacity(curves.pairs.len() * FEATURES_PER_PAIR);
    let mut pair_valid = Vec::with_capacity(curves.pairs.len());
    for pair in &curves.pairs {
        match &pair.curves {
            Some([pos, neg]) => {
                let a = curve_stats(pos);
                let b = curve_stats(neg);
                values.extend([
                    a.auc,
                    a.max,
                    a.argmax as f64,
                    b.auc,
                    b.max,
                    b.argmax as f64,
                    smoothed_ratio(a.auc, b.auc),
                    smoothed_ratio(a.max, b.max),
                    smoothed_ratio(a.argmax as f64, b.argmax as f64),
                ]);
                pair_valid.push(true);
            }
            None => {
                values.extend([0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
                pair_valid.push(false);
            }
        }
    }
    Ok(PlayerFeatureVector {
        player_id: curves.player_id.clone(),
        character_name: curves.character_name.clone(),
        games_used: curves.games_used,
        theme: curves.theme,
        mean_score: curves.mean_score,
        values,
        pair_valid,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldPoint {
    pub player_id: PlayerId,
    pub xy: [f64; 2],
    pub color_reward: f64,
    pub color_ratio: f64,
}

/// Embeds a population and attaches the reward and AUC-ratio colorings.
pub fn manifold_points(
    vectors: &[PlayerFeatureVector],
    method: EmbedMethod,
    seed: u64,
) -> Result<(Vec<ManifoldPoint>, Embedding), ManifoldError> {
    let rows: Vec<Vec<f64>> = vectors.iter().map(|v| v.values.clone()).collect();
    let embedding = embed_2d(&rows, method, seed)?;
    let points = vectors
        .iter()
        .zip(&embedding.coords)
        .map(|(v, &xy)| ManifoldPoint {
            player_id: v.player_id.clone(),
            xy,
            color_reward: v.mean_score,
            color_ratio: mean_auc_ratio(v),
        })
        .collect();
    Ok((points, embedding))
}

/// Unbiased std and IQR of every column of `rows`.
pub fn spread_stats(rows: &[Vec<f64>]) -> Result<Vec<AxisSpread>, ManifoldError> {
    if rows.len() < 2 {
        return Err(ManifoldError::TooFewPlayers {
            have: rows.len(),
            need: 2,
        });
    }
    let width = rows[0].len();
    if rows.iter().any(|r| r.len() != width) {
        return Err(ManifoldError::RaggedMatrix);
    }
    Ok((0..width)
        .map(|j| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            AxisSpread {
                std: stats::sample_std(&col),
                iqr: stats::iqr(&col),
            }
        })
        .collect())
}

/// CSV: `player_id,character,theme,games_used,mean_score,valid_pairs,<features...>`
/// and, with points, `x,y,color_reward,color_ratio`. `valid_pairs` holds one
/// `0`/`1` digit per pair.
pub fn write_features_csv<W: Write>(
    names: &[String],
    vectors: &[PlayerFeatureVector],
    points: Option<&[ManifoldPoint]>,
    mut w: W,
) -> io::Result<()> {
    write!(w, "player_id,character,theme,games_used,mean_score,valid_pairs")?;
    for n in names {
        write!(w, ",{n}")?;
    }
    if points.is_some() {
        write!(w, ",x,y,color_reward,color_ratio")?;
    }
    writeln!(w)?;
    for (i, v) in vectors.iter().enumerate() {
        let valid: String = v.pair_valid.iter().map(|&ok| if ok { '1' } else { '0' }).collect();
        write!(
            w,
            "{},{},{},{},{},{valid}",
            crate::csv_field(v.player_id.as_str()),
            crate::csv_field(&v.character_name),
            v.theme,
            v.games_used,
            v.mean_score
        )?;
        for x in &v.values {
            write!(w, ",{x}")?;
        }
        if let Some(p) = points.and_then(|p| p.get(i)) {
            write!(w, ",{},{},{},{}", p.xy[0], p.xy[1], p.color_reward, p.color_ratio)?;
        }
        writeln!(w)?;
    }
    Ok(())
}
