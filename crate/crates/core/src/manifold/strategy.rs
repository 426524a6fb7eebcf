use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::stats::median;
use super::{PlayerFeatureVector, AUC_RATIO_OFFSET, FEATURES_PER_PAIR};
use crate::tasksets::Theme;
use crate::telemetry::PlayerId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    Fight,
    Flight,
    Exploit,
    Explore,
}

impl Strategy {
    fn split(theme: Theme, above_median: bool) -> Strategy {
        match (theme, above_median) {
            (Theme::ExploreExploit, true) => Strategy::Exploit,
            (Theme::ExploreExploit, false) => Strategy::Explore,
            (_, true) => Strategy::Fight,
            (_, false) => Strategy::Flight,
        }
    }

    /// Fight or Exploit.
    pub fn is_dominant(self) -> bool {
        matches!(self, Strategy::Fight | Strategy::Exploit)
    }
}

/// Mean AUC ratio over the pairs that had affordances; 1.0 when none did.
pub fn mean_auc_ratio(v: &PlayerFeatureVector) -> f64 {
    let ratios: Vec<f64> = v
        .pair_valid
        .iter()
        .enumerate()
        .filter(|(_, &ok)| ok)
        .map(|(k, _)| v.values[k * FEATURES_PER_PAIR + AUC_RATIO_OFFSET])
        .collect();
    if ratios.is_empty() {
        1.0
    } else {
        ratios.iter().sum::<f64>() / ratios.len() as f64
    }
}

/// Fight (Exploit) iff the player's mean AUC ratio is strictly above the
/// population median; ties fall to Flight (Explore).
pub fn classify_strategy(player: &PlayerFeatureVector, population: &[PlayerFeatureVector]) -> Strategy {
    let ratios: Vec<f64> = population.iter().map(mean_auc_ratio).collect();
    let above = !ratios.is_empty() && mean_auc_ratio(player) > median(&ratios);
    Strategy::split(player.theme, above)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchReport {
    pub character_a: String,
    pub character_b: String,
    /// Players with retained vectors on both characters.
    pub players: usize,
    /// Players with a vector on only one of the two characters.
    pub excluded: usize,
    pub switched_to_fight: usize,
    pub switched_to_flight: usize,
    pub stayed_fight: usize,
    pub stayed_flight: usize,
    pub pct_switched_to_fight: f64,
    pub pct_switched_to_flight: f64,
    pub pct_stayed_fight: f64,
    pub pct_stayed_flight: f64,
}

fn pct(n: usize, of: usize) -> f64 {
    if of == 0 {
        0.0
    } else {
        100.0 * n as f64 / of as f64
    }
}

/// Tabulates strategy transitions from character A to character B. Each
/// player is classified within the population of the character played.
/// `vectors` holds every retained (player, character) feature vector.
pub fn switch_analysis(vectors: &[PlayerFeatureVector], character_a: &str, character_b: &str) -> SwitchReport {
    let pop_a: Vec<PlayerFeatureVector> = vectors
        .iter()
        .filter(|v| v.character_name == character_a)
        .cloned()
        .collect();
    let pop_b: Vec<PlayerFeatureVector> = vectors
        .iter()
        .filter(|v| v.character_name == character_b)
        .cloned()
        .collect();
    let by_player = |pop: &[PlayerFeatureVector]| -> BTreeMap<PlayerId, Strategy> {
        pop.iter()
            .map(|v| (v.player_id.clone(), classify_strategy(v, pop)))
            .collect()
    };
    let class_a = by_player(&pop_a);
    let class_b = by_player(&pop_b);

    let mut report = SwitchReport {
        character_a: character_a.to_string(),
        character_b: character_b.to_string(),
        players: 0,
        excluded: 0,
        switched_to_fight: 0,
        switched_to_flight: 0,
        stayed_fight: 0,
        stayed_flight: 0,
        pct_switched_to_fight: 0.0,
        pct_switched_to_flight: 0.0,
        pct_stayed_fight: 0.0,
        pct_stayed_flight: 0.0,
    };
    for (player, &before) in &class_a {
        let Some(&after) = class_b.get(player) else {
            report.excluded += 1;
            continue;
        };
        report.players += 1;
        match (before.is_dominant(), after.is_dominant()) {
            (false, true) => report.switched_to_fight += 1,
            (true, false) => report.switched_to_flight += 1,
            (true, true) => report.stayed_fight += 1,
            (false, false) => report.stayed_flight += 1,
        }
    }
    report.excluded += class_b.keys().filter(|p| !class_a.contains_key(*p)).count();

    let switched = report.switched_to_fight + report.switched_to_flight;
    let stayed = report.stayed_fight + report.stayed_flight;
    report.pct_switched_to_fight = pct(report.switched_to_fight, switched);
    report.pct_switched_to_flight = pct(report.switched_to_flight, switched);
    report.pct_stayed_fight = pct(report.stayed_fight, stayed);
    report.pct_stayed_flight = pct(report.stayed_flight, stayed);
    report
}
