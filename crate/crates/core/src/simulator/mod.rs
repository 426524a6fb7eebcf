//! Seeded 4v4 seed-collection arena. Every player runs the same archetype
//! policy, so behavior planted through [`ArchetypeParams`] is the ground
//! truth the analysis should recover.

mod policy;
mod population;

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use policy::{
    policy_step, AgentState, Branch, Command, Contact, Intent, WorldView, COHESION_RADIUS, DECISION_HOLD,
    WAYPOINT_REACHED,
};
pub use population::{archetype_grid, game_seed, make_population, ArchetypeGrid, Knob, PopulationSpec, SyntheticPlayer};

use crate::tasksets::FLEE_RADIUS;
use crate::telemetry::{
    CharacterClass, Events, GameFrame, GameMeta, Phase, Platform, PlayerId, PlayerState, RosterEntry,
    SeedCluster, Team, Trajectory, Vec2, FORMAT_VERSION, PLAYERS_PER_GAME, PLAYERS_PER_TEAM,
};

pub const DEFAULT_MAP_HALF_EXTENT: f64 = 8000.0;
pub const DEFAULT_TICKS: u64 = 6000;
pub const DEFAULT_TICK_RATE: u32 = 10;
pub const DEFAULT_ENGAGE_RADIUS: f64 = 400.0;
pub const DEFAULT_RESPAWN_DELAY: u64 = 60;
pub const DEFAULT_CARRY_CAP: u32 = 5;
/// Teams spawn on opposite sides at `x = -SPAWN_X` (A) and `x = +SPAWN_X` (B).
pub const SPAWN_X: f64 = 6000.0;
const SPAWN_SPACING: f64 = 300.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid config at {field}: {reason}")]
    InvalidConfig { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> SimError {
    SimError::InvalidConfig {
        field: field.into(),
        reason: reason.into(),
    }
}

/// Behavioral knobs, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchetypeParams {
    /// Probability of approaching rather than fleeing a nearby enemy.
    pub aggression: f64,
    /// Probability of heading to the waypoint instead of the nearest objective.
    pub exploration: f64,
    /// Blend weight of the allied-centroid direction.
    pub sociality: f64,
}

impl Default for ArchetypeParams {
    fn default() -> Self {
        ArchetypeParams {
            aggression: 0.5,
            exploration: 0.5,
            sociality: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacterSpec {
    pub name: String,
    pub class: CharacterClass,
    pub max_hp: f64,
    /// Damage per tick against an enemy in range.
    pub attack_power: f64,
    pub heal_power: f64,
    /// Units per tick.
    pub move_speed: f64,
    pub carry_cap: u32,
}

impl CharacterSpec {
    /// Class presets: Tank is the most durable, Damage hits hardest, Support
    /// heals best.
    pub fn preset(class: CharacterClass) -> Self {
        let (name, max_hp, attack_power, heal_power, move_speed) = match class {
            CharacterClass::Damage => ("Daemon", 100.0, 4.0, 0.0, 40.0),
            CharacterClass::Support => ("Medic", 100.0, 2.0, 3.0, 40.0),
            CharacterClass::Tank => ("Bulwark", 200.0, 2.0, 0.0, 35.0),
        };
        CharacterSpec {
            name: name.to_string(),
            class,
            max_hp,
            attack_power,
            heal_power,
            move_speed,
            carry_cap: DEFAULT_CARRY_CAP,
        }
    }

    pub fn presets() -> Vec<CharacterSpec> {
        CharacterClass::ALL.iter().map(|&c| Self::preset(c)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerConfig {
    pub player_id: PlayerId,
    pub team: Team,
    pub character: CharacterSpec,
    pub archetype: ArchetypeParams,
    /// Overrides the team spawn slot.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spawn: Option<Vec2>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSpawn {
    pub position: Vec2,
    pub seeds: u32,
}

/// Collection and deposit phases alternate. During deposit one platform at a
/// time is active, advancing every `platform_cycle_ticks`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSchedule {
    pub collection_ticks: u64,
    pub deposit_ticks: u64,
    pub platform_cycle_ticks: u64,
}

impl Default for PhaseSchedule {
    fn default() -> Self {
        PhaseSchedule {
            collection_ticks: 900,
            deposit_ticks: 300,
            platform_cycle_ticks: 100,
        }
    }
}

impl PhaseSchedule {
    pub fn phase(&self, tick: u64) -> Phase {
        if tick % (self.collection_ticks + self.deposit_ticks) < self.collection_ticks {
            Phase::Collection
        } else {
            Phase::Deposit
        }
    }

    /// Index of the active platform, if any.
    pub fn active_platform(&self, tick: u64, platforms: usize) -> Option<usize> {
        if platforms == 0 || self.phase(tick) != Phase::Deposit {
            return None;
        }
        let into = tick % (self.collection_ticks + self.deposit_ticks) - self.collection_ticks;
        Some((into / self.platform_cycle_ticks) as usize % platforms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRules {
    pub per_seed_deposited: f64,
    pub per_kill: f64,
}

impl Default for ScoreRules {
    fn default() -> Self {
        ScoreRules {
            per_seed_deposited: 1.0,
            per_kill: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum RewardMode {
    /// Score follows [`ScoreRules`].
    #[default]
    Rules,
    /// Score ignores the rules: every player gains a uniform draw in
    /// `[0, max_per_tick)` each tick from a separate RNG stream. Behavior is
    /// identical to `Rules` for the same seed; only the score changes.
    Random { max_per_tick: f64 },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Rollout {
    /// Every player runs the policy every tick.
    #[default]
    SelfPlay,
    /// From `from_tick` on, every player except the first in the config
    /// repeats their latest command.
    FreezeOthers { from_tick: u64 },
}

/// Everything about a game except who plays it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub map_half_extent: f64,
    pub ticks: u64,
    pub tick_rate: u32,
    pub engage_radius: f64,
    /// Pickup and deposit range.
    pub interact_radius: f64,
    pub respawn_delay: u64,
    /// Ticks a depleted cluster stays empty before refilling.
    pub cluster_respawn_delay: u64,
    pub clusters: Vec<ClusterSpawn>,
    pub platforms: Vec<Vec2>,
    pub schedule: PhaseSchedule,
    pub score: ScoreRules,
    pub reward: RewardMode,
    pub rollout: Rollout,
}

impl Default for WorldConfig {
    fn default() -> Self {
        let cluster = |x, y| ClusterSpawn {
            position: Vec2::new(x, y),
            seeds: 8,
        };
        WorldConfig {
            map_half_extent: DEFAULT_MAP_HALF_EXTENT,
            ticks: DEFAULT_TICKS,
            tick_rate: DEFAULT_TICK_RATE,
            engage_radius: DEFAULT_ENGAGE_RADIUS,
            interact_radius: 300.0,
            respawn_delay: DEFAULT_RESPAWN_DELAY,
            cluster_respawn_delay: 300,
            // six clusters on a ring around a tight triangle of platforms
            clusters: (0..6)
                .map(|k| {
                    let a = std::f64::consts::FRAC_PI_3 * k as f64 + std::f64::consts::FRAC_PI_6;
                    cluster(3000.0 * a.cos(), 3000.0 * a.sin())
                })
                .collect(),
            platforms: (0..3)
                .map(|k| {
                    let a = 2.0 * std::f64::consts::FRAC_PI_3 * k as f64 + std::f64::consts::FRAC_PI_2;
                    Vec2::new(600.0 * a.cos(), 600.0 * a.sin())
                })
                .collect(),
            schedule: PhaseSchedule::default(),
            score: ScoreRules::default(),
            reward: RewardMode::default(),
            rollout: Rollout::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub game_id: String,
    pub rng_seed: u64,
    pub world: WorldConfig,
    pub players: Vec<PlayerConfig>,
}

fn check_unit(v: f64, field: String) -> Result<(), SimError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid(field, format!("{v} is outside [0, 1]")))
    }
}

fn check_nonneg(v: f64, field: String) -> Result<(), SimError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("{v} must be finite and non-negative")))
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let half = self.map_half_extent;
        if !(half.is_finite() && half > FLEE_RADIUS) {
            return Err(invalid("world.map_half_extent", format!("must exceed {FLEE_RADIUS}")));
        }
        if self.ticks < 1 {
            return Err(invalid("world.ticks", "must be at least 1"));
        }
        if self.tick_rate < 1 {
            return Err(invalid("world.tick_rate", "must be positive"));
        }
        if !(self.engage_radius.is_finite() && self.engage_radius > 0.0) {
            return Err(invalid("world.engage_radius", "must be positive"));
        }
        check_nonneg(self.interact_radius, "world.interact_radius".into())?;
        if self.respawn_delay < 1 {
            return Err(invalid("world.respawn_delay", "must be at least 1"));
        }
        let inside = |p: Vec2| p.is_finite() && p.x.abs() <= half && p.y.abs() <= half;
        for (i, c) in self.clusters.iter().enumerate() {
            if !inside(c.position) {
                return Err(invalid(format!("world.clusters[{i}].position"), "outside the map"));
            }
            if c.seeds == 0 {
                return Err(invalid(format!("world.clusters[{i}].seeds"), "must be positive"));
            }
        }
        for (i, &p) in self.platforms.iter().enumerate() {
            if !inside(p) {
                return Err(invalid(format!("world.platforms[{i}]"), "outside the map"));
            }
        }
        let s = &self.schedule;
        if s.collection_ticks + s.deposit_ticks == 0 {
            return Err(invalid("world.schedule", "phases cannot both be empty"));
        }
        if s.platform_cycle_ticks == 0 {
            return Err(invalid("world.schedule.platform_cycle_ticks", "must be positive"));
        }
        check_nonneg(self.score.per_seed_deposited, "world.score.per_seed_deposited".into())?;
        check_nonneg(self.score.per_kill, "world.score.per_kill".into())?;
        if let RewardMode::Random { max_per_tick } = self.reward {
            check_nonneg(max_per_tick, "world.reward.max_per_tick".into())?;
        }
        Ok(())
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.game_id.is_empty() {
            return Err(invalid("game_id", "must not be empty"));
        }
        self.world.validate()?;
        if self.players.len() != PLAYERS_PER_GAME {
            return Err(invalid(
                "players",
                format!("expected {PLAYERS_PER_GAME} players, got {}", self.players.len()),
            ));
        }
        let on_a = self.players.iter().filter(|p| p.team == Team::A).count();
        if on_a != PLAYERS_PER_TEAM {
            return Err(invalid("players", format!("expected {PLAYERS_PER_TEAM} players per team")));
        }
        let mut seen = BTreeSet::new();
        let half = self.world.map_half_extent;
        for (i, p) in self.players.iter().enumerate() {
            let at = |f: &str| format!("players[{i}].{f}");
            if !seen.insert(&p.player_id) {
                return Err(invalid(at("player_id"), format!("duplicate id {}", p.player_id)));
            }
            let a = &p.archetype;
            check_unit(a.aggression, at("archetype.aggression"))?;
            check_unit(a.exploration, at("archetype.exploration"))?;
            check_unit(a.sociality, at("archetype.sociality"))?;
            let c = &p.character;
            if c.name.is_empty() {
                return Err(invalid(at("character.name"), "must not be empty"));
            }
            if !(c.max_hp.is_finite() && c.max_hp > 0.0) {
                return Err(invalid(at("character.max_hp"), "must be positive"));
            }
            check_nonneg(c.attack_power, at("character.attack_power"))?;
            check_nonneg(c.heal_power, at("character.heal_power"))?;
            check_nonneg(c.move_speed, at("character.move_speed"))?;
            if let Some(s) = p.spawn {
                if !(s.is_finite() && s.x.abs() <= half && s.y.abs() <= half) {
                    return Err(invalid(at("spawn"), "outside the map"));
                }
            }
        }
        Ok(())
    }

    pub fn spawn_point(&self, index: usize) -> Vec2 {
        let p = &self.players[index];
        if let Some(s) = p.spawn {
            return s;
        }
        let slot = self.players[..index].iter().filter(|q| q.team == p.team).count();
        let x = match p.team {
            Team::A => -SPAWN_X,
            Team::B => SPAWN_X,
        };
        Vec2::new(x, (slot as f64 - 1.5) * SPAWN_SPACING)
    }
}

/// Seed bookkeeping for the conservation check, one entry per tick, taken
/// after that tick's pickups and deposits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SeedLedger {
    pub deposited_total: u64,
    /// Seeds added by cluster refills so far, including the initial fill.
    pub spawned_total: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub trajectory: Trajectory,
    pub ledger: Vec<SeedLedger>,
    /// Number of deaths per player slot.
    pub deaths: Vec<u64>,
}

struct Slot {
    agent: AgentState,
    hp: f64,
    alive: bool,
    respawn_at: u64,
    score: f64,
    last: Command,
}

pub fn simulate(config: &SimConfig) -> Result<Trajectory, SimError> {
    simulate_with_ledger(config).map(|o| o.trajectory)
}

/// Runs one game. Frame `t` holds positions before the tick-`t` move, the
/// velocity applied from `t` to `t + 1`, and health, seeds, score and events
/// after tick-`t` combat and pickups.
pub fn simulate_with_ledger(config: &SimConfig) -> Result<SimOutput, SimError> {
    config.validate()?;
    let world = &config.world;
    let half = world.map_half_extent;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut reward_rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    reward_rng.set_stream(1);
    let rules = if world.reward == RewardMode::Rules { 1.0 } else { 0.0 };

    let players = &config.players;
    let n = players.len();
    let mut slots: Vec<Slot> = (0..n)
        .map(|i| {
            let spec = &players[i].character;
            let position = config.spawn_point(i);
            Slot {
                agent: AgentState::new(position, spec.move_speed, spec.heal_power > 0.0),
                hp: spec.max_hp,
                alive: true,
                respawn_at: 0,
                score: 0.0,
                last: Command {
                    velocity: Vec2::ZERO,
                    intent: Intent::None,
                    branch: Branch::Wander,
                },
            }
        })
        .collect();

    let mut clusters: Vec<SeedCluster> = world
        .clusters
        .iter()
        .enumerate()
        .map(|(i, c)| SeedCluster {
            cluster_id: i as u32,
            position: c.position,
            seeds_remaining: c.seeds,
            visible: true,
        })
        .collect();
    let mut refill_at: Vec<Option<u64>> = vec![None; clusters.len()];
    let mut ledger_now = SeedLedger {
        deposited_total: 0,
        spawned_total: world.clusters.iter().map(|c| c.seeds as u64).sum(),
    };

    let roster = players
        .iter()
        .map(|p| {
            (
                p.player_id.clone(),
                RosterEntry {
                    character_name: p.character.name.clone(),
                    character_class: p.character.class,
                    team: p.team,
                },
            )
        })
        .collect();
    let meta = GameMeta {
        format_version: FORMAT_VERSION.to_string(),
        game_id: config.game_id.clone(),
        map_units_note: "synthetic arena units".to_string(),
        tick_rate: world.tick_rate,
        carry_cap: players.iter().map(|p| p.character.carry_cap).max().unwrap_or(0),
        character_roster: roster,
    };

    let mut frames = Vec::with_capacity(world.ticks as usize);
    let mut ledger = Vec::with_capacity(world.ticks as usize);
    let mut deaths = vec![0u64; n];
    let mut enemies: Vec<Contact> = Vec::with_capacity(n);
    let mut allies: Vec<Contact> = Vec::with_capacity(n);
    let mut visible: Vec<Vec2> = Vec::with_capacity(clusters.len());

    for tick in 0..world.ticks {
        for (i, s) in slots.iter_mut().enumerate() {
            if !s.alive && s.respawn_at == tick {
                s.alive = true;
                s.hp = players[i].character.max_hp;
                s.agent.position = config.spawn_point(i);
            }
        }
        for (k, c) in clusters.iter_mut().enumerate() {
            if refill_at[k] == Some(tick) {
                c.seeds_remaining = world.clusters[k].seeds;
                c.visible = true;
                refill_at[k] = None;
                ledger_now.spawned_total += c.seeds_remaining as u64;
            }
        }
        let phase = world.schedule.phase(tick);
        let active = world.schedule.active_platform(tick, world.platforms.len());
        let relevant: Vec<Vec2> = active.map(|k| world.platforms[k]).into_iter().collect();
        visible.clear();
        visible.extend(clusters.iter().filter(|c| c.seeds_remaining > 0).map(|c| c.position));

        let frozen = matches!(world.rollout, Rollout::FreezeOthers { from_tick } if tick >= from_tick);
        let mut commands: Vec<Option<Command>> = vec![None; n];
        for i in 0..n {
            if !slots[i].alive {
                continue;
            }
            if frozen && i > 0 {
                commands[i] = Some(slots[i].last);
                continue;
            }
            enemies.clear();
            allies.clear();
            for (j, o) in slots.iter().enumerate() {
                if j == i || !o.alive {
                    continue;
                }
                let contact = Contact {
                    index: j,
                    position: o.agent.position,
                    health_fraction: o.hp / players[j].character.max_hp,
                };
                if players[j].team == players[i].team {
                    allies.push(contact);
                } else {
                    enemies.push(contact);
                }
            }
            let view = WorldView {
                enemies: &enemies,
                allies: &allies,
                clusters: &visible,
                platforms: &relevant,
                engage_radius: world.engage_radius,
                map_half_extent: half,
            };
            let cmd = policy_step(&mut slots[i].agent, &view, &players[i].archetype, &mut rng);
            slots[i].last = cmd;
            commands[i] = Some(cmd);
        }

        // intents resolve in player order against targets alive at tick start
        let mut events = vec![Events::default(); n];
        for i in 0..n {
            let Some(cmd) = commands[i] else { continue };
            match cmd.intent {
                Intent::None => {}
                Intent::Attack(j) => {
                    let reach = slots[i].agent.position.distance(slots[j].agent.position);
                    if !slots[j].alive || reach > world.engage_radius || players[j].team == players[i].team {
                        continue;
                    }
                    slots[j].hp -= players[i].character.attack_power;
                    events[i].dealt_damage = true;
                    events[j].took_damage = true;
                    if slots[j].hp <= 0.0 {
                        slots[j].hp = 0.0;
                        slots[j].alive = false;
                        slots[j].respawn_at = tick + world.respawn_delay;
                        deaths[j] += 1;
                        events[i].kill_credit = true;
                        slots[i].score += rules * world.score.per_kill;
                    }
                }
                Intent::Heal(j) => {
                    let reach = slots[i].agent.position.distance(slots[j].agent.position);
                    if !slots[j].alive || reach > world.engage_radius || players[j].team != players[i].team {
                        continue;
                    }
                    let max = players[j].character.max_hp;
                    slots[j].hp = (slots[j].hp + players[i].character.heal_power).min(max);
                    events[i].healed_ally = true;
                }
            }
        }

        for i in 0..n {
            if !slots[i].alive {
                continue;
            }
            let pos = slots[i].agent.position;
            let cap = players[i].character.carry_cap;
            if let Some(k) = active {
                if slots[i].agent.seeds_carried > 0 && pos.distance(world.platforms[k]) <= world.interact_radius {
                    let n_seeds = slots[i].agent.seeds_carried;
                    slots[i].agent.seeds_carried = 0;
                    slots[i].score += rules * world.score.per_seed_deposited * n_seeds as f64;
                    ledger_now.deposited_total += n_seeds as u64;
                }
            }
            if slots[i].agent.seeds_carried < cap {
                let hit = clusters
                    .iter_mut()
                    .enumerate()
                    .find(|(_, c)| c.seeds_remaining > 0 && pos.distance(c.position) <= world.interact_radius);
                if let Some((k, c)) = hit {
                    c.seeds_remaining -= 1;
                    slots[i].agent.seeds_carried += 1;
                    if c.seeds_remaining == 0 {
                        c.visible = false;
                        refill_at[k] = Some(tick + world.cluster_respawn_delay.max(1));
                    }
                }
            }
        }
        if let RewardMode::Random { max_per_tick } = world.reward {
            for s in slots.iter_mut() {
                s.score += reward_rng.random::<f64>() * max_per_tick;
            }
        }

        let mut states = Vec::with_capacity(n);
        for i in 0..n {
            let s = &mut slots[i];
            let pos = s.agent.position;
            let velocity = match commands[i] {
                Some(cmd) if s.alive => {
                    let target = pos + cmd.velocity;
                    if target.x.abs() <= half && target.y.abs() <= half {
                        cmd.velocity
                    } else {
                        Vec2::new(target.x.clamp(-half, half), target.y.clamp(-half, half)) - pos
                    }
                }
                _ => Vec2::ZERO,
            };
            states.push(PlayerState {
                player_id: players[i].player_id.clone(),
                position: pos,
                velocity,
                health_fraction: (s.hp / players[i].character.max_hp).clamp(0.0, 1.0),
                seeds_carried: s.agent.seeds_carried,
                score: s.score,
                events: events[i],
                alive: s.alive,
            });
            s.agent.position = pos + velocity;
        }
        frames.push(GameFrame {
            tick,
            phase,
            players: states,
            seed_clusters: clusters.clone(),
            platforms: world
                .platforms
                .iter()
                .enumerate()
                .map(|(k, &position)| Platform {
                    platform_id: k as u32,
                    position,
                    active: active == Some(k),
                })
                .collect(),
        });
        ledger.push(ledger_now);
    }

    Ok(SimOutput {
        trajectory: Trajectory { meta, frames },
        ledger,
        deaths,
    })
}
