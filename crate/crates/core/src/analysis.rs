//! Composes masks, curves, features and occupancy over a collection of
//! games, keyed by (player, character).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::{curve_counts, curves_from_counts, Curve, CurveCounts, CurveError, Pooling};
use crate::manifold::{
    player_features, theme_pairs, ManifoldError, PairCurves, PlayerCurves, PlayerFeatureVector,
};
use crate::overlap::{OccupancyTally, OverlapError};
use crate::tasksets::{evaluate, MaskSeries, Registry, TaskSetError, Theme};
use crate::telemetry::{PlayerId, RosterEntry, Trajectory};

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    TaskSet(#[from] TaskSetError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
    #[error(transparent)]
    Overlap(#[from] OverlapError),
    #[error("game {0} was added twice for the same player")]
    DuplicateGame(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PlayerKey {
    pub player_id: PlayerId,
    pub character_name: String,
}

impl PlayerKey {
    pub fn of(masks: &MaskSeries) -> Self {
        PlayerKey {
            player_id: masks.player_id.clone(),
            character_name: masks.character_name.clone(),
        }
    }
}

/// Selects players by character name, or by class name (case-insensitive)
/// when the value names a class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharacterFilter(pub String);

impl CharacterFilter {
    pub fn matches(&self, entry: &RosterEntry) -> bool {
        entry.character_name == self.0 || entry.character_class.name().eq_ignore_ascii_case(&self.0)
    }
}

/// Masks of every roster player passing the filter, in roster order.
pub fn mask_game(
    trajectory: &Trajectory,
    registry: &Registry,
    filter: Option<&CharacterFilter>,
) -> Result<Vec<MaskSeries>, TaskSetError> {
    trajectory
        .meta
        .character_roster
        .iter()
        .filter(|(_, entry)| filter.is_none_or(|f| f.matches(entry)))
        .map(|(id, _)| evaluate(trajectory, id, registry))
        .collect()
}

/// One game's reduced contribution for one (player, character).
#[derive(Debug, Clone, PartialEq)]
pub struct GameContribution {
    pub final_score: f64,
    /// Curve counts per group, members in group order.
    pub groups: Vec<Vec<CurveCounts>>,
    pub occupancy: OccupancyTally,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupCurves {
    pub group: String,
    /// `None` when the group was never simultaneously afforded.
    pub curves: Option<Vec<Curve>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayerSummary {
    pub key: PlayerKey,
    pub theme: Theme,
    pub games_used: usize,
    pub mean_score: f64,
    pub groups: Vec<GroupCurves>,
    pub occupancy: OccupancyTally,
}

impl PlayerSummary {
    /// Pair view for the feature builder; fails for the solo-multi theme.
    pub fn player_curves(&self) -> Result<PlayerCurves, ManifoldError> {
        if self.theme == Theme::SoloMulti {
            return Err(ManifoldError::UnsupportedTheme(self.theme));
        }
        Ok(PlayerCurves {
            player_id: self.key.player_id.clone(),
            character_name: self.key.character_name.clone(),
            games_used: self.games_used,
            theme: self.theme,
            mean_score: self.mean_score,
            pairs: self
                .groups
                .iter()
                .map(|g| PairCurves {
                    group: g.group.clone(),
                    curves: g.curves.as_ref().map(|c| [c[0].clone(), c[1].clone()]),
                })
                .collect(),
        })
    }
}

/// Mergeable per-player state. Contributions are kept per game id and
/// combined in game-id order, so the result does not depend on the order in
/// which games were added or accumulators merged.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationAccumulator {
    theme: Theme,
    horizon: usize,
    groups: Vec<(String, Vec<String>)>,
    players: BTreeMap<PlayerKey, BTreeMap<String, GameContribution>>,
}

impl PopulationAccumulator {
    pub fn new(registry: &Registry, theme: Theme, horizon: usize) -> Result<Self, AnalysisError> {
        if horizon < 1 {
            return Err(CurveError::InvalidHorizon.into());
        }
        let groups = match theme {
            Theme::SoloMulti => registry.groups(theme),
            _ => theme_pairs(registry, theme)?
                .into_iter()
                .map(|(g, ids)| (g, ids.to_vec()))
                .collect(),
        };
        Ok(PopulationAccumulator {
            theme,
            horizon,
            groups,
            players: BTreeMap::new(),
        })
    }

    pub fn theme(&self) -> Theme {
        self.theme
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn groups(&self) -> &[(String, Vec<String>)] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.players.len()
    }

    pub fn is_empty(&self) -> bool {
        self.players.is_empty()
    }

    pub fn add(&mut self, masks: &MaskSeries) -> Result<(), AnalysisError> {
        let groups = self
            .groups
            .iter()
            .map(|(_, ids)| {
                let ids: Vec<&str> = ids.iter().map(String::as_str).collect();
                curve_counts(masks, &ids, self.horizon)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let contribution = GameContribution {
            final_score: masks.final_score,
            groups,
            occupancy: OccupancyTally::of(masks)?,
        };
        let games = self.players.entry(PlayerKey::of(masks)).or_default();
        if games.insert(masks.game_id.clone(), contribution).is_some() {
            return Err(AnalysisError::DuplicateGame(masks.game_id.clone()));
        }
        Ok(())
    }

    pub fn merge(&mut self, other: PopulationAccumulator) -> Result<(), AnalysisError> {
        for (key, games) in other.players {
            let mine = self.players.entry(key).or_default();
            for (game, c) in games {
                if mine.contains_key(&game) {
                    return Err(AnalysisError::DuplicateGame(game));
                }
                mine.insert(game, c);
            }
        }
        Ok(())
    }

    /// Pooled curves and occupancy per (player, character), in key order.
    pub fn summaries(&self, pooling: Pooling) -> Result<Vec<PlayerSummary>, AnalysisError> {
        let mut out = Vec::with_capacity(self.players.len());
        for (key, games) in &self.players {
            let mut groups = Vec::with_capacity(self.groups.len());
            for (g, (name, ids)) in self.groups.iter().enumerate() {
                let ids: Vec<&str> = ids.iter().map(String::as_str).collect();
                let per_game: Vec<Vec<CurveCounts>> = games.values().map(|c| c.groups[g].clone()).collect();
                let curves = match curves_from_counts(&per_game, &ids, self.horizon, pooling) {
                    Ok(c) => Some(c),
                    Err(CurveError::NoAffordances(_)) => None,
                    Err(e) => return Err(e.into()),
                };
                groups.push(GroupCurves {
                    group: name.clone(),
                    curves,
                });
            }
            let mut occupancy = OccupancyTally::default();
            for c in games.values() {
                occupancy.merge(&c.occupancy);
            }
            let total: f64 = games.values().map(|c| c.final_score).sum();
            out.push(PlayerSummary {
                key: key.clone(),
                theme: self.theme,
                games_used: games.len(),
                mean_score: total / games.len() as f64,
                groups,
                occupancy,
            });
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skip {
    pub player_id: PlayerId,
    pub character_name: String,
    pub reason: String,
}

/// Feature vectors for every summary that passes the game filter and has at
/// least one afforded pair; the rest are reported as skipped.
pub fn build_features(
    summaries: &[PlayerSummary],
    min_games: usize,
) -> Result<(Vec<PlayerFeatureVector>, Vec<Skip>), AnalysisError> {
    let mut vectors = Vec::new();
    let mut skipped = Vec::new();
    for s in summaries {
        let skip = |reason: String| Skip {
            player_id: s.key.player_id.clone(),
            character_name: s.key.character_name.clone(),
            reason,
        };
        if s.groups.iter().all(|g| g.curves.is_none()) {
            skipped.push(skip("no affordances".into()));
            continue;
        }
        match player_features(&s.player_curves()?, min_games) {
            Ok(v) => vectors.push(v),
            Err(e @ ManifoldError::InsufficientGames { .. }) => skipped.push(skip(e.to_string())),
            Err(e) => return Err(e.into()),
        }
    }
    Ok((vectors, skipped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::completion_curve;
    use crate::tasksets::builtin_registry;
    use crate::telemetry::{fixtures, CharacterClass, Team};

    fn entry(name: &str, class: CharacterClass) -> RosterEntry {
        RosterEntry {
            character_name: name.into(),
            character_class: class,
            team: Team::A,
        }
    }

    #[test]
    fn filter_by_name_or_class() {
        let f = CharacterFilter("Daemon".into());
        assert!(f.matches(&entry("Daemon", CharacterClass::Damage)));
        assert!(!f.matches(&entry("Medic", CharacterClass::Support)));
        let f = CharacterFilter("support".into());
        assert!(f.matches(&entry("Medic", CharacterClass::Support)));
        assert!(!f.matches(&entry("Daemon", CharacterClass::Damage)));
    }

    fn game(id: &str, ticks: u64, shift: f64) -> Trajectory {
        let mut t = fixtures::trajectory(ticks);
        t.meta.game_id = id.into();
        for (k, f) in t.frames.iter_mut().enumerate() {
            // p0 walks toward p4, which sits within the near radius
            f.players[0].position = crate::telemetry::Vec2::new(k as f64 * 10.0 + shift, 0.0);
            f.players[0].velocity = crate::telemetry::Vec2::new(10.0, 0.0);
            f.players[4].position = crate::telemetry::Vec2::new(1500.0, 0.0);
            f.players[0].events.dealt_damage = k % 3 == 0;
        }
        t
    }

    #[test]
    fn accumulator_matches_direct_pooling() {
        let r = builtin_registry();
        let games = [game("g1", 40, 0.0), game("g2", 30, 100.0), game("g3", 20, 50.0)];
        let masks: Vec<MaskSeries> = games
            .iter()
            .map(|t| evaluate(t, &PlayerId::new("p0"), &r).unwrap())
            .collect();
        let mut acc = PopulationAccumulator::new(&r, Theme::FightFlight, 20).unwrap();
        for m in masks.iter().rev() {
            acc.add(m).unwrap();
        }
        let s = &acc.summaries(Pooling::Events).unwrap()[0];
        assert_eq!(s.games_used, 3);
        let (group, ids) = &acc.groups()[0];
        let ids: Vec<&str> = ids.iter().map(String::as_str).collect();
        let direct = completion_curve(&masks, &ids, 20).unwrap();
        assert_eq!(s.groups[0].group, *group);
        assert_eq!(s.groups[0].curves.as_ref().unwrap(), &direct);
        assert!(s.groups[2].curves.is_none(), "never attacked");
    }

    #[test]
    fn merge_is_order_independent() {
        let r = builtin_registry();
        let games = [game("g1", 40, 0.0), game("g2", 30, 100.0), game("g3", 20, 50.0)];
        let masks: Vec<Vec<MaskSeries>> = games.iter().map(|t| mask_game(t, &r, None).unwrap()).collect();
        let build = |order: &[usize]| {
            let mut total = PopulationAccumulator::new(&r, Theme::ExploreExploit, 15).unwrap();
            for &g in order {
                let mut part = PopulationAccumulator::new(&r, Theme::ExploreExploit, 15).unwrap();
                for m in &masks[g] {
                    part.add(m).unwrap();
                }
                total.merge(part).unwrap();
            }
            total.summaries(Pooling::GameMean).unwrap()
        };
        assert_eq!(build(&[0, 1, 2]), build(&[2, 0, 1]));
    }

    #[test]
    fn duplicate_games_rejected() {
        let r = builtin_registry();
        let m = evaluate(&game("g1", 10, 0.0), &PlayerId::new("p0"), &r).unwrap();
        let mut acc = PopulationAccumulator::new(&r, Theme::FightFlight, 10).unwrap();
        acc.add(&m).unwrap();
        assert_eq!(acc.add(&m).unwrap_err(), AnalysisError::DuplicateGame("g1".into()));
    }

    #[test]
    fn features_and_skips() {
        let r = builtin_registry();
        let games = [game("g1", 40, 0.0), game("g2", 30, 100.0), game("g3", 20, 50.0)];
        let mut acc = PopulationAccumulator::new(&r, Theme::FightFlight, 20).unwrap();
        for t in &games {
            for m in mask_game(t, &r, None).unwrap() {
                acc.add(&m).unwrap();
            }
        }
        let summaries = acc.summaries(Pooling::Events).unwrap();
        let (vectors, skipped) = build_features(&summaries, 3).unwrap();
        assert_eq!(vectors.len(), 1);
        assert_eq!(vectors[0].player_id, PlayerId::new("p0"));
        assert_eq!(vectors[0].values.len(), 36);
        assert_eq!(skipped.len(), 7);
        assert!(skipped.iter().all(|s| s.reason == "no affordances"));

        let (vectors, skipped) = build_features(&summaries, 4).unwrap();
        assert!(vectors.is_empty());
        assert!(skipped.iter().any(|s| s.reason.contains("games")));
    }

    #[test]
    fn solo_multi_summaries_have_four_curves() {
        let r = builtin_registry();
        let mut acc = PopulationAccumulator::new(&r, Theme::SoloMulti, 10).unwrap();
        for m in mask_game(&game("g1", 30, 0.0), &r, None).unwrap() {
            acc.add(&m).unwrap();
        }
        let s = acc.summaries(Pooling::Events).unwrap();
        assert_eq!(acc.groups().len(), 1);
        assert_eq!(s[0].groups[0].curves.as_ref().unwrap().len(), 4);
        assert!(s[0].player_curves().is_err());
        assert_eq!(s[0].occupancy.ticks, 30);
    }
}
