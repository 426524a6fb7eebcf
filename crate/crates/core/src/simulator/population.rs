use std::collections::BTreeSet;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{invalid, ArchetypeParams, CharacterSpec, PlayerConfig, SimConfig, SimError, WorldConfig};
use crate::manifold::DEFAULT_MIN_GAMES;
use crate::telemetry::{PlayerId, Team, PLAYERS_PER_GAME, PLAYERS_PER_TEAM};

/// One synthetic player on one character. The same `player_id` may appear
/// on several characters with different archetypes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticPlayer {
    pub player_id: PlayerId,
    pub character: String,
    pub archetype: ArchetypeParams,
}

fn default_games() -> u32 {
    DEFAULT_MIN_GAMES as u32
}

/// A population of games: every synthetic player is the focal player of
/// `games_per_player` games, filled with seven one-off players.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSpec {
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_games")]
    pub games_per_player: u32,
    #[serde(default)]
    pub world: WorldConfig,
    #[serde(default = "CharacterSpec::presets")]
    pub characters: Vec<CharacterSpec>,
    #[serde(default)]
    pub filler_archetype: ArchetypeParams,
    /// Characters cycled through by filler players; empty means all.
    #[serde(default)]
    pub filler_characters: Vec<String>,
    #[serde(default)]
    pub players: Vec<SyntheticPlayer>,
    /// Sweeps expanded after `players`.
    #[serde(default)]
    pub grids: Vec<ArchetypeGrid>,
}

fn default_prefix() -> String {
    "p".into()
}

/// `per_level` players at each level of one knob; ids are `id_prefix`
/// followed by a three-digit index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchetypeGrid {
    pub knob: Knob,
    pub levels: Vec<f64>,
    pub per_level: usize,
    #[serde(default)]
    pub base: ArchetypeParams,
    pub character: String,
    #[serde(default = "default_prefix")]
    pub id_prefix: String,
}

impl ArchetypeGrid {
    pub fn players(&self) -> Vec<SyntheticPlayer> {
        let mut out = archetype_grid(self.knob, &self.levels, self.per_level, self.base, &self.character);
        for (i, p) in out.iter_mut().enumerate() {
            p.player_id = PlayerId::new(format!("{}{i:03}", self.id_prefix));
        }
        out
    }
}

impl PopulationSpec {
    pub fn new(players: Vec<SyntheticPlayer>) -> Self {
        PopulationSpec {
            master_seed: 0,
            games_per_player: default_games(),
            world: WorldConfig::default(),
            characters: CharacterSpec::presets(),
            filler_archetype: ArchetypeParams::default(),
            filler_characters: Vec::new(),
            players,
            grids: Vec::new(),
        }
    }

    /// Explicit players followed by every grid's players.
    pub fn all_players(&self) -> Vec<SyntheticPlayer> {
        let mut out = self.players.clone();
        for g in &self.grids {
            out.extend(g.players());
        }
        out
    }

    pub fn game_count(&self) -> usize {
        (self.players.len() + self.grids.iter().map(|g| g.levels.len() * g.per_level).sum::<usize>())
            * self.games_per_player as usize
    }
}

/// Seed of game `index`: the SplitMix64 output for counter `index + 1`
/// starting from `master`.
pub fn game_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Expands the population into one config per game. Game `g` belongs to
/// synthetic player `g / games_per_player`, who always takes the first team A
/// slot.
pub fn make_population(spec: &PopulationSpec) -> Result<Vec<SimConfig>, SimError> {
    let synthetic = spec.all_players();
    if synthetic.is_empty() {
        return Err(invalid("players", "population has no players"));
    }
    if spec.games_per_player < 1 {
        return Err(invalid("games_per_player", "must be at least 1"));
    }
    spec.world.validate()?;
    let find = |name: &str, field: String| {
        spec.characters
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| invalid(field, format!("unknown character {name}")))
    };
    let fillers: Vec<&CharacterSpec> = if spec.filler_characters.is_empty() {
        spec.characters.iter().collect()
    } else {
        spec.filler_characters
            .iter()
            .enumerate()
            .map(|(i, name)| find(name, format!("filler_characters[{i}]")))
            .collect::<Result<_, _>>()?
    };
    if fillers.is_empty() {
        return Err(invalid("characters", "no characters defined"));
    }

    let mut seen = BTreeSet::new();
    let mut games = Vec::with_capacity(spec.game_count());
    for (e, synth) in synthetic.iter().enumerate() {
        let character = find(&synth.character, format!("players[{e}].character"))?;
        if !seen.insert((&synth.player_id, &synth.character)) {
            return Err(invalid(
                format!("players[{e}]"),
                format!("{} already plays {}", synth.player_id, synth.character),
            ));
        }
        for k in 0..spec.games_per_player as usize {
            let g = e * spec.games_per_player as usize + k;
            let game_id = format!("game_{g:05}");
            let mut players = Vec::with_capacity(PLAYERS_PER_GAME);
            players.push(PlayerConfig {
                player_id: synth.player_id.clone(),
                team: Team::A,
                character: character.clone(),
                archetype: synth.archetype,
                spawn: None,
            });
            for slot in 1..PLAYERS_PER_GAME {
                players.push(PlayerConfig {
                    player_id: PlayerId::new(format!("{game_id}_f{slot}")),
                    team: if slot < PLAYERS_PER_TEAM { Team::A } else { Team::B },
                    character: fillers[(g + slot) % fillers.len()].clone(),
                    archetype: spec.filler_archetype,
                    spawn: None,
                });
            }
            let config = SimConfig {
                game_id,
                rng_seed: game_seed(spec.master_seed, g as u64),
                world: spec.world.clone(),
                players,
            };
            config.validate()?;
            games.push(config);
        }
    }
    Ok(games)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Knob {
    Aggression,
    Exploration,
    Sociality,
}

impl Knob {
    pub fn get(self, a: &ArchetypeParams) -> f64 {
        match self {
            Knob::Aggression => a.aggression,
            Knob::Exploration => a.exploration,
            Knob::Sociality => a.sociality,
        }
    }

    pub fn set(self, a: &mut ArchetypeParams, v: f64) {
        match self {
            Knob::Aggression => a.aggression = v,
            Knob::Exploration => a.exploration = v,
            Knob::Sociality => a.sociality = v,
        }
    }
}

impl FromStr for Knob {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "aggression" => Ok(Knob::Aggression),
            "exploration" => Ok(Knob::Exploration),
            "sociality" => Ok(Knob::Sociality),
            other => Err(format!("unknown knob {other}")),
        }
    }
}

/// `per_level` players at each level of one knob, all else fixed at `base`.
/// Ids are `p000`, `p001`, ... in level-major order.
pub fn archetype_grid(
    knob: Knob,
    levels: &[f64],
    per_level: usize,
    base: ArchetypeParams,
    character: &str,
) -> Vec<SyntheticPlayer> {
    let mut out = Vec::with_capacity(levels.len() * per_level);
    for &level in levels {
        for _ in 0..per_level {
            let mut archetype = base;
            knob.set(&mut archetype, level);
            out.push(SyntheticPlayer {
                player_id: PlayerId::new(format!("p{:03}", out.len())),
                character: character.to_string(),
                archetype,
            });
        }
    }
    out
}
