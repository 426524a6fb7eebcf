//! Task-set registry: affordance and completion predicates over ego features.
//!
//! A task-set pairs an affordance condition (the behavior is available) with
//! a completion condition (the behavior was performed). Task-sets that share
//! a `group` share the same affordance predicate and are analyzed together.

mod ego;
mod eval;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ego::{compute_ego_features, EgoFeatures, NearestObject, NearestPlayer};
pub use eval::{evaluate, evaluate_frame, MaskSeries};

use crate::telemetry::{PlayerId, Trajectory};

/// Distance below which an enemy or objective counts as near.
pub const NEAR_RADIUS: f64 = 2100.0;
/// Distance within which fleeing from an enemy still counts as flight.
pub const FLEE_RADIUS: f64 = 3500.0;
/// Health fraction separating good from poor health.
pub const HEALTH_SPLIT: f64 = 0.5;
/// No teammate within this distance affords the solo-multi group.
pub const TEAM_RADIUS: f64 = 3500.0;
/// Teammates closer than this count as grouped.
pub const REGROUP_RADIUS: f64 = 2100.0;
/// Radial-speed dead band for "moving toward/away", in units/tick.
pub const MOTION_EPSILON: f64 = 1.0;

/// Hard cap on registry size: masks are stored as one `u64` per tick.
pub const MAX_TASKSETS: usize = 64;

/// Names of the built-in task-sets.
pub mod ids {
    pub const ATTACK_ENEMY_HEALTH_GOOD: &str = "Attack_Approach_Damage_Enemy_Health_Good";
    pub const RUN_ENEMY_HEALTH_GOOD: &str = "Run_From_Enemy_In_Good_Health";
    pub const ATTACK_ENEMY_HEALTH_POOR: &str = "Attack_Approach_Damage_Enemy_Health_Poor";
    pub const RUN_ENEMY_HEALTH_POOR: &str = "Run_From_Enemy_In_Poor_Health";
    pub const FIGHT_ATTACKED_ENEMY_GREATER: &str =
        "Fight_Damage_Enemy_When_Attacked_Enemy_Health_Greater";
    pub const RUN_ATTACKED_ENEMY_GREATER: &str = "Run_When_Attacked_Enemy_Health_Greater";
    pub const FIGHT_ATTACKED_ENEMY_POORER: &str =
        "Fight_Damage_Enemy_When_Attacked_Enemy_Health_Poorer";
    pub const RUN_ATTACKED_ENEMY_POORER: &str = "Run_When_Attacked_Enemy_Health_Poorer";

    pub const PICKUP_NEAREST_CLUSTER: &str = "Attempt_Direct_Pickup_Nearest_Seed_Cluster";
    pub const EXPLORE_AWAY_FROM_CLUSTER: &str = "Explore_Away_From_Nearest_Seed_Cluster";
    pub const DEPOSIT_ACTIVE_PLATFORM: &str = "Attempt_Direct_Deposit_Nearest_Active_Platform";
    pub const EXPLORE_AWAY_FROM_ACTIVE_PLATFORM: &str =
        "Explore_Away_From_Nearest_Active_Platform_with_Seeds";
    pub const DEPOSIT_INACTIVE_PLATFORM: &str = "Attempt_Direct_Deposit_Nearest_Inactive_Platform";
    pub const EXPLORE_AWAY_FROM_INACTIVE_PLATFORM: &str =
        "Explore_Away_From_Nearest_Inactive_Platform_with_Seeds";

    pub const CONTINUE_SOLO: &str = "Continue_To_Play_Solo";
    pub const REGROUP_WITH_ALLIES: &str = "Regroup_With_Allies";
    pub const REGROUP_SINGLE_ALLY: &str = "Regroup_With_Single_Ally";
    pub const REGROUP_MULTIPLE_ALLIES: &str = "Regroup_With_Multiple_Allies";
}

#[derive(Debug, Error, PartialEq)]
pub enum TaskSetError {
    #[error("unknown player {0}")]
    UnknownPlayer(PlayerId),
    #[error("tick {tick} out of range (trajectory has {len} frames)")]
    TickOutOfRange { tick: u64, len: usize },
    #[error("unknown task-set {0}")]
    UnknownTaskSet(String),
    #[error("invalid registry: {0}")]
    InvalidRegistry(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theme {
    FightFlight,
    ExploreExploit,
    SoloMulti,
}

impl Theme {
    pub fn name(self) -> &'static str {
        match self {
            Theme::FightFlight => "fight_flight",
            Theme::ExploreExploit => "explore_exploit",
            Theme::SoloMulti => "solo_multi",
        }
    }
}

impl fmt::Display for Theme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Theme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fight_flight" => Ok(Theme::FightFlight),
            "explore_exploit" => Ok(Theme::ExploreExploit),
            "solo_multi" => Ok(Theme::SoloMulti),
            other => Err(format!("unknown theme {other:?}")),
        }
    }
}

/// What a task-set stands for inside its group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Fight,
    Flight,
    Exploit,
    Explore,
    Solo,
    Regroup,
    Diad,
    Multi,
}

/// Which health comparison gates a fight-flight affordance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EnemyCondition {
    /// Enemy health above the split and ego moving toward the enemy.
    HealthyApproached { health_split: f64 },
    /// Enemy health below the split.
    Weakened { health_split: f64 },
    /// Ego took damage and the enemy has more health than the ego.
    AttackedByStronger,
    /// Ego took damage and the enemy has less health than the ego.
    AttackedByWeaker,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Affordance {
    EnemyNear {
        near_radius: f64,
        condition: EnemyCondition,
    },
    /// At least one visible seed cluster, all of them beyond the radius.
    SeedClustersFar { near_radius: f64 },
    /// Carrying seeds and beyond the radius from every platform of the given state.
    CarryingFarFromPlatforms { near_radius: f64, active: bool },
    NoTeammateWithin { team_radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Completion {
    /// Dealt damage this tick (or got a kill, when the registry allows it).
    DamageDealt,
    FleeNearestEnemy { flee_radius: f64 },
    TowardNearestCluster,
    AwayFromNearestCluster,
    TowardNearestPlatform { active: bool },
    AwayFromNearestPlatform { active: bool },
    NoTeammateWithin { regroup_radius: f64 },
    TeammateWithin { regroup_radius: f64 },
    ExactlyOneTeammateWithin { regroup_radius: f64 },
    SeveralTeammatesWithin { regroup_radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSetDef {
    pub id: String,
    pub theme: Theme,
    /// Affordance context shared with the other members of the pair or group.
    pub group: String,
    pub role: Role,
    pub affordance: Affordance,
    pub completion: Completion,
}

impl TaskSetDef {
    /// Named thresholds used by this task-set's predicates.
    pub fn params(&self) -> BTreeMap<&'static str, f64> {
        let mut p = BTreeMap::new();
        match self.affordance {
            Affordance::EnemyNear {
                near_radius,
                condition,
            } => {
                p.insert("near_radius", near_radius);
                match condition {
                    EnemyCondition::HealthyApproached { health_split }
                    | EnemyCondition::Weakened { health_split } => {
                        p.insert("health_split", health_split);
                    }
                    EnemyCondition::AttackedByStronger | EnemyCondition::AttackedByWeaker => {}
                }
            }
            Affordance::SeedClustersFar { near_radius }
            | Affordance::CarryingFarFromPlatforms { near_radius, .. } => {
                p.insert("near_radius", near_radius);
            }
            Affordance::NoTeammateWithin { team_radius } => {
                p.insert("team_radius", team_radius);
            }
        }
        match self.completion {
            Completion::FleeNearestEnemy { flee_radius } => {
                p.insert("flee_radius", flee_radius);
            }
            Completion::NoTeammateWithin { regroup_radius }
            | Completion::TeammateWithin { regroup_radius }
            | Completion::ExactlyOneTeammateWithin { regroup_radius }
            | Completion::SeveralTeammatesWithin { regroup_radius } => {
                p.insert("regroup_radius", regroup_radius);
            }
            _ => {}
        }
        p
    }
}

/// Evaluation switches that apply to the whole registry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Count kill credit as a fight completion alongside dealt damage.
    pub fight_includes_kill: bool,
    pub motion_epsilon: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            fight_includes_kill: true,
            motion_epsilon: MOTION_EPSILON,
        }
    }
}

/// An immutable, validated list of task-sets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Registry {
    defs: Vec<TaskSetDef>,
    options: EvalOptions,
}

impl Registry {
    pub fn new(defs: Vec<TaskSetDef>, options: EvalOptions) -> Result<Self, TaskSetError> {
        if defs.len() > MAX_TASKSETS {
            return Err(TaskSetError::InvalidRegistry(format!(
                "{} task-sets exceeds the limit of {MAX_TASKSETS}",
                defs.len()
            )));
        }
        if !(options.motion_epsilon >= 0.0 && options.motion_epsilon.is_finite()) {
            return Err(TaskSetError::InvalidRegistry("motion_epsilon must be >= 0".into()));
        }
        let mut seen = BTreeSet::new();
        let mut group_affordance: BTreeMap<&str, &Affordance> = BTreeMap::new();
        for def in &defs {
            if !seen.insert(def.id.as_str()) {
                return Err(TaskSetError::InvalidRegistry(format!("duplicate id {}", def.id)));
            }
            for (name, value) in def.params() {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(TaskSetError::InvalidRegistry(format!(
                        "{}: {name} must be strictly positive",
                        def.id
                    )));
                }
            }
            match group_affordance.get(def.group.as_str()) {
                Some(a) if **a != def.affordance => {
                    return Err(TaskSetError::InvalidRegistry(format!(
                        "{}: affordance differs from the rest of group {}",
                        def.id, def.group
                    )));
                }
                Some(_) => {}
                None => {
                    group_affordance.insert(&def.group, &def.affordance);
                }
            }
        }
        Ok(Registry { defs, options })
    }

    pub fn defs(&self) -> &[TaskSetDef] {
        &self.defs
    }

    pub fn options(&self) -> EvalOptions {
        self.options
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Result<usize, TaskSetError> {
        self.defs
            .iter()
            .position(|d| d.id == id)
            .ok_or_else(|| TaskSetError::UnknownTaskSet(id.to_string()))
    }

    pub fn get(&self, id: &str) -> Option<&TaskSetDef> {
        self.defs.iter().find(|d| d.id == id)
    }

    /// Group names of a theme in registry order, each with its member ids.
    pub fn groups(&self, theme: Theme) -> Vec<(String, Vec<String>)> {
        let mut out: Vec<(String, Vec<String>)> = Vec::new();
        for def in self.defs.iter().filter(|d| d.theme == theme) {
            match out.iter_mut().find(|(g, _)| *g == def.group) {
                Some((_, members)) => members.push(def.id.clone()),
                None => out.push((def.group.clone(), vec![def.id.clone()])),
            }
        }
        out
    }

    /// Structured-text dump (JSON) recording ids, themes, and thresholds.
    pub fn dump(&self) -> String {
        #[derive(Serialize)]
        struct Entry<'a> {
            id: &'a str,
            theme: Theme,
            group: &'a str,
            role: Role,
            params: BTreeMap<&'static str, f64>,
        }
        #[derive(Serialize)]
        struct Dump<'a> {
            options: EvalOptions,
            tasksets: Vec<Entry<'a>>,
        }
        let dump = Dump {
            options: self.options,
            tasksets: self
                .defs
                .iter()
                .map(|d| Entry {
                    id: &d.id,
                    theme: d.theme,
                    group: &d.group,
                    role: d.role,
                    params: d.params(),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&dump).expect("registry dump serializes");
        s.push('\n');
        s
    }
}

impl Default for Registry {
    fn default() -> Self {
        builtin_registry()
    }
}

fn def(
    id: &str,
    theme: Theme,
    group: &str,
    role: Role,
    affordance: Affordance,
    completion: Completion,
) -> TaskSetDef {
    TaskSetDef {
        id: id.to_string(),
        theme,
        group: group.to_string(),
        role,
        affordance,
        completion,
    }
}

/// The 18 built-in task-sets: four fight-flight pairs, three explore-exploit
/// pairs, and the four-member solo-multi group.
pub fn builtin_registry() -> Registry {
    builtin_registry_with(EvalOptions::default())
}

pub fn builtin_registry_with(options: EvalOptions) -> Registry {
    use ids::*;
    use Theme::*;

    let ff = |condition| Affordance::EnemyNear {
        near_radius: NEAR_RADIUS,
        condition,
    };
    let flee = Completion::FleeNearestEnemy {
        flee_radius: FLEE_RADIUS,
    };
    let ff_pairs = [
        (
            "ff_enemy_health_good",
            EnemyCondition::HealthyApproached {
                health_split: HEALTH_SPLIT,
            },
            ATTACK_ENEMY_HEALTH_GOOD,
            RUN_ENEMY_HEALTH_GOOD,
        ),
        (
            "ff_enemy_health_poor",
            EnemyCondition::Weakened {
                health_split: HEALTH_SPLIT,
            },
            ATTACK_ENEMY_HEALTH_POOR,
            RUN_ENEMY_HEALTH_POOR,
        ),
        (
            "ff_attacked_enemy_health_greater",
            EnemyCondition::AttackedByStronger,
            FIGHT_ATTACKED_ENEMY_GREATER,
            RUN_ATTACKED_ENEMY_GREATER,
        ),
        (
            "ff_attacked_enemy_health_poorer",
            EnemyCondition::AttackedByWeaker,
            FIGHT_ATTACKED_ENEMY_POORER,
            RUN_ATTACKED_ENEMY_POORER,
        ),
    ];

    let mut defs = Vec::with_capacity(18);
    for (group, condition, fight, flight) in ff_pairs {
        defs.push(def(fight, FightFlight, group, Role::Fight, ff(condition), Completion::DamageDealt));
        defs.push(def(flight, FightFlight, group, Role::Flight, ff(condition), flee));
    }

    let clusters = Affordance::SeedClustersFar {
        near_radius: NEAR_RADIUS,
    };
    defs.push(def(
        PICKUP_NEAREST_CLUSTER,
        ExploreExploit,
        "ee_seed_collection",
        Role::Exploit,
        clusters,
        Completion::TowardNearestCluster,
    ));
    defs.push(def(
        EXPLORE_AWAY_FROM_CLUSTER,
        ExploreExploit,
        "ee_seed_collection",
        Role::Explore,
        clusters,
        Completion::AwayFromNearestCluster,
    ));
    for (group, active, exploit, explore) in [
        (
            "ee_deposit_active",
            true,
            DEPOSIT_ACTIVE_PLATFORM,
            EXPLORE_AWAY_FROM_ACTIVE_PLATFORM,
        ),
        (
            "ee_deposit_inactive",
            false,
            DEPOSIT_INACTIVE_PLATFORM,
            EXPLORE_AWAY_FROM_INACTIVE_PLATFORM,
        ),
    ] {
        let afford = Affordance::CarryingFarFromPlatforms {
            near_radius: NEAR_RADIUS,
            active,
        };
        defs.push(def(
            exploit,
            ExploreExploit,
            group,
            Role::Exploit,
            afford,
            Completion::TowardNearestPlatform { active },
        ));
        defs.push(def(
            explore,
            ExploreExploit,
            group,
            Role::Explore,
            afford,
            Completion::AwayFromNearestPlatform { active },
        ));
    }

    let alone = Affordance::NoTeammateWithin {
        team_radius: TEAM_RADIUS,
    };
    let r = REGROUP_RADIUS;
    for (id, role, completion) in [
        (CONTINUE_SOLO, Role::Solo, Completion::NoTeammateWithin { regroup_radius: r }),
        (REGROUP_WITH_ALLIES, Role::Regroup, Completion::TeammateWithin { regroup_radius: r }),
        (
            REGROUP_SINGLE_ALLY,
            Role::Diad,
            Completion::ExactlyOneTeammateWithin { regroup_radius: r },
        ),
        (
            REGROUP_MULTIPLE_ALLIES,
            Role::Multi,
            Completion::SeveralTeammatesWithin { regroup_radius: r },
        ),
    ] {
        defs.push(def(id, SoloMulti, "sm_no_teammate_nearby", role, alone, completion));
    }

    Registry::new(defs, options).expect("built-in registry is valid")
}

/// Evaluates masks for several players of the same game.
pub fn evaluate_players(
    trajectory: &Trajectory,
    players: &[PlayerId],
    registry: &Registry,
) -> Result<Vec<MaskSeries>, TaskSetError> {
    players
        .iter()
        .map(|p| evaluate(trajectory, p, registry))
        .collect()
}
