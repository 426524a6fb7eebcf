use crate::telemetry::{CharacterClass, PlayerId, Team, Trajectory};

use super::ego::{features_at, frame_teams};
use super::{
    Affordance, Completion, EgoFeatures, EnemyCondition, EvalOptions, Registry, TaskSetError,
};

/// Per-tick afforded/completed flags of every registered task-set for one
/// (game, player). Bit `i` of a tick's word refers to `taskset_ids[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskSeries {
    pub game_id: String,
    pub player_id: PlayerId,
    pub character_name: String,
    pub character_class: CharacterClass,
    pub final_score: f64,
    pub taskset_ids: Vec<String>,
    pub afforded: Vec<u64>,
    pub completed: Vec<u64>,
    pub alive: Vec<bool>,
}

impl MaskSeries {
    pub fn len(&self) -> usize {
        self.afforded.len()
    }

    pub fn is_empty(&self) -> bool {
        self.afforded.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Result<usize, TaskSetError> {
        self.taskset_ids
            .iter()
            .position(|t| t == id)
            .ok_or_else(|| TaskSetError::UnknownTaskSet(id.to_string()))
    }

    #[inline]
    pub fn is_afforded(&self, tick: usize, idx: usize) -> bool {
        self.afforded[tick] >> idx & 1 == 1
    }

    #[inline]
    pub fn is_completed(&self, tick: usize, idx: usize) -> bool {
        self.completed[tick] >> idx & 1 == 1
    }
}

fn afforded(a: &Affordance, f: &EgoFeatures<'_>) -> bool {
    match *a {
        Affordance::EnemyNear {
            near_radius,
            condition,
        } => f.nearest_enemy.is_some_and(|e| {
            e.distance < near_radius
                && match condition {
                    EnemyCondition::HealthyApproached { health_split } => {
                        e.health_fraction > health_split && e.moving_toward
                    }
                    EnemyCondition::Weakened { health_split } => e.health_fraction < health_split,
                    EnemyCondition::AttackedByStronger => {
                        f.events.took_damage && e.health_fraction > f.health_fraction
                    }
                    EnemyCondition::AttackedByWeaker => {
                        f.events.took_damage && e.health_fraction < f.health_fraction
                    }
                }
        }),
        Affordance::SeedClustersFar { near_radius } => f
            .nearest_seed_cluster
            .is_some_and(|c| c.distance > near_radius),
        Affordance::CarryingFarFromPlatforms {
            near_radius,
            active,
        } => {
            let platform = if active {
                f.nearest_active_platform
            } else {
                f.nearest_inactive_platform
            };
            // vacuously far when no platform of that state exists
            f.seeds_carried > 0 && platform.is_none_or(|p| p.distance > near_radius)
        }
        Affordance::NoTeammateWithin { team_radius } => f.teammates_within(team_radius) == 0,
    }
}

fn completed(c: &Completion, f: &EgoFeatures<'_>, opts: &EvalOptions) -> bool {
    let platform = |active: bool| {
        if active {
            f.nearest_active_platform
        } else {
            f.nearest_inactive_platform
        }
    };
    match *c {
        Completion::DamageDealt => {
            f.events.dealt_damage || (opts.fight_includes_kill && f.events.kill_credit)
        }
        Completion::FleeNearestEnemy { flee_radius } => f
            .nearest_enemy
            .is_some_and(|e| e.moving_away && e.distance < flee_radius),
        Completion::TowardNearestCluster => f.nearest_seed_cluster.is_some_and(|c| c.moving_toward),
        Completion::AwayFromNearestCluster => f.nearest_seed_cluster.is_some_and(|c| c.moving_away),
        Completion::TowardNearestPlatform { active } => {
            f.seeds_carried > 0 && platform(active).is_some_and(|p| p.moving_toward)
        }
        Completion::AwayFromNearestPlatform { active } => {
            platform(active).is_some_and(|p| p.moving_away)
        }
        Completion::NoTeammateWithin { regroup_radius } => f
            .nearest_teammate
            .is_none_or(|m| m.distance > regroup_radius),
        Completion::TeammateWithin { regroup_radius } => f
            .nearest_teammate
            .is_some_and(|m| m.distance < regroup_radius),
        Completion::ExactlyOneTeammateWithin { regroup_radius } => {
            f.teammates_within(regroup_radius) == 1
        }
        Completion::SeveralTeammatesWithin { regroup_radius } => {
            f.teammates_within(regroup_radius) > 1
        }
    }
}

/// Affordance and completion words for one tick. A dead ego affords nothing;
/// completions are evaluated regardless of liveness.
pub fn evaluate_frame(features: &EgoFeatures<'_>, registry: &Registry) -> (u64, u64) {
    let opts = registry.options();
    let mut afford_bits = 0u64;
    let mut complete_bits = 0u64;
    for (i, def) in registry.defs().iter().enumerate() {
        if features.alive && afforded(&def.affordance, features) {
            afford_bits |= 1 << i;
        }
        if completed(&def.completion, features, &opts) {
            complete_bits |= 1 << i;
        }
    }
    (afford_bits, complete_bits)
}

/// Evaluates every registered task-set at every tick for one player.
pub fn evaluate(
    trajectory: &Trajectory,
    player_id: &PlayerId,
    registry: &Registry,
) -> Result<MaskSeries, TaskSetError> {
    let entry = trajectory
        .meta
        .character_roster
        .get(player_id)
        .ok_or_else(|| TaskSetError::UnknownPlayer(player_id.clone()))?;
    let n = trajectory.frames.len();
    let mut series = MaskSeries {
        game_id: trajectory.meta.game_id.clone(),
        player_id: player_id.clone(),
        character_name: entry.character_name.clone(),
        character_class: entry.character_class,
        final_score: trajectory.final_score(player_id).unwrap_or(0.0),
        taskset_ids: registry.defs().iter().map(|d| d.id.clone()).collect(),
        afforded: Vec::with_capacity(n),
        completed: Vec::with_capacity(n),
        alive: Vec::with_capacity(n),
    };

    let epsilon = registry.options().motion_epsilon;
    let mut teams: Vec<Option<Team>> = Vec::with_capacity(8);
    let mut prev: Option<&crate::telemetry::GameFrame> = None;
    for frame in &trajectory.frames {
        // player order is usually stable, so the team lookup is reused
        let same_order = prev.is_some_and(|p| {
            p.players.len() == frame.players.len()
                && p.players
                    .iter()
                    .zip(&frame.players)
                    .all(|(a, b)| a.player_id == b.player_id)
        });
        if !same_order {
            frame_teams(trajectory, frame, &mut teams);
        }
        prev = Some(frame);
        let ego = frame
            .players
            .iter()
            .position(|p| &p.player_id == player_id)
            .ok_or_else(|| TaskSetError::UnknownPlayer(player_id.clone()))?;
        let features = features_at(frame, ego, &teams, epsilon);
        let (a, c) = evaluate_frame(&features, registry);
        series.afforded.push(a);
        series.completed.push(c);
        series.alive.push(features.alive);
    }
    Ok(series)
}
