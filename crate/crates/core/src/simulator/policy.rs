use rand::Rng;

use super::ArchetypeParams;
use crate::tasksets::HEALTH_SPLIT;
use crate::telemetry::Vec2;

/// A waypoint counts as reached within this distance and is then redrawn.
pub const WAYPOINT_REACHED: f64 = 150.0;
/// Ticks a coin-flip decision is kept before it is redrawn.
pub const DECISION_HOLD: u32 = 30;
/// Within this distance of the allied centroid the social pull fades
/// linearly to zero, so a group can still close on an objective.
pub const COHESION_RADIUS: f64 = 1000.0;
/// Enemies closer than this preempt the objective.
pub const THREAT_RADIUS: f64 = 1200.0;

/// Mutable per-agent memory carried between ticks.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub position: Vec2,
    pub move_speed: f64,
    pub seeds_carried: u32,
    pub can_heal: bool,
    pub waypoint: Vec2,
    /// Current approach (true) or flee decision and ticks left to hold it.
    /// Cleared when no enemy is near.
    pub engage: Option<(bool, u32)>,
    /// Current direct-to-objective (true) or waypoint decision.
    pub direct: Option<(bool, u32)>,
}

impl AgentState {
    pub fn new(position: Vec2, move_speed: f64, can_heal: bool) -> Self {
        AgentState {
            position,
            move_speed,
            seeds_carried: 0,
            can_heal,
            waypoint: position,
            engage: None,
            direct: None,
        }
    }
}

/// Bernoulli(p) decision that is redrawn every [`DECISION_HOLD`] calls.
fn held<R: Rng>(slot: &mut Option<(bool, u32)>, p: f64, rng: &mut R) -> bool {
    match slot {
        Some((choice, left)) if *left > 0 => {
            *left -= 1;
            *choice
        }
        _ => {
            let choice = rng.random_bool(p);
            *slot = Some((choice, DECISION_HOLD - 1));
            choice
        }
    }
}

/// Another living player as seen by the agent. `index` is the player's slot
/// in the game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    pub index: usize,
    pub position: Vec2,
    pub health_fraction: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct WorldView<'a> {
    pub enemies: &'a [Contact],
    /// Living teammates, excluding the agent.
    pub allies: &'a [Contact],
    /// Clusters that still hold seeds.
    pub clusters: &'a [Vec2],
    /// Platforms that accept deposits in the current phase.
    pub platforms: &'a [Vec2],
    pub engage_radius: f64,
    pub map_half_extent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Intent {
    None,
    Attack(usize),
    Heal(usize),
}

/// Which priority branch produced the base direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Approach,
    Flee,
    Deposit,
    Collect,
    Wander,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Command {
    pub velocity: Vec2,
    pub intent: Intent,
    pub branch: Branch,
}

fn nearest(from: Vec2, points: impl Iterator<Item = Vec2>) -> Option<(Vec2, f64)> {
    points
        .map(|p| (p, from.distance(p)))
        .fold(None, |best, cur| match best {
            Some((_, d)) if d <= cur.1 => best,
            _ => Some(cur),
        })
}

fn random_point<R: Rng>(half: f64, rng: &mut R) -> Vec2 {
    Vec2::new(rng.random_range(-half..=half), rng.random_range(-half..=half))
}

fn toward(from: Vec2, to: Vec2) -> Vec2 {
    (to - from).normalized().unwrap_or(Vec2::ZERO)
}

/// One decision for a living agent.
///
/// Priority order: a nearby enemy (approach with probability `aggression`,
/// otherwise flee), then depositing carried seeds, then collecting, then the
/// waypoint. Both coin flips are held for [`DECISION_HOLD`] ticks. The base
/// direction is blended with the direction to the allied centroid by
/// `sociality` (faded inside [`COHESION_RADIUS`]) and rescaled to
/// `move_speed`.
pub fn policy_step<R: Rng>(
    agent: &mut AgentState,
    world: &WorldView<'_>,
    params: &ArchetypeParams,
    rng: &mut R,
) -> Command {
    if agent.position.distance(agent.waypoint) < WAYPOINT_REACHED {
        agent.waypoint = random_point(world.map_half_extent, rng);
    }
    let pos = agent.position;

    let enemy = world
        .enemies
        .iter()
        .map(|e| (e, pos.distance(e.position)))
        .fold(None::<(&Contact, f64)>, |best, cur| match best {
            Some((_, d)) if d <= cur.1 => best,
            _ => Some(cur),
        });

    let (dir, branch) = match enemy {
        Some((e, d)) if d < THREAT_RADIUS => {
            if held(&mut agent.engage, params.aggression, rng) {
                // close enough to strike: hold ground instead of overrunning
                let dir = if d > world.engage_radius * 0.5 {
                    toward(pos, e.position)
                } else {
                    Vec2::ZERO
                };
                (dir, Branch::Approach)
            } else {
                (toward(e.position, pos), Branch::Flee)
            }
        }
        _ => {
            agent.engage = None;
            let platform = if agent.seeds_carried > 0 {
                nearest(pos, world.platforms.iter().copied())
            } else {
                None
            };
            let cluster = nearest(pos, world.clusters.iter().copied());
            let wander = toward(pos, agent.waypoint);
            if let Some((p, _)) = platform {
                let direct = held(&mut agent.direct, 1.0 - params.exploration, rng);
                (if direct { toward(pos, p) } else { wander }, Branch::Deposit)
            } else if let Some((c, _)) = cluster {
                let direct = held(&mut agent.direct, 1.0 - params.exploration, rng);
                (if direct { toward(pos, c) } else { wander }, Branch::Collect)
            } else {
                (wander, Branch::Wander)
            }
        }
    };

    let mut heading = dir;
    if !world.allies.is_empty() {
        let sum = world
            .allies
            .iter()
            .fold(Vec2::ZERO, |acc, a| acc + a.position);
        let centroid = sum * (1.0 / world.allies.len() as f64);
        let fade = (pos.distance(centroid) / COHESION_RADIUS).min(1.0);
        heading = dir * (1.0 - params.sociality) + toward(pos, centroid) * (params.sociality * fade);
    }
    let velocity = heading
        .normalized()
        .map_or(Vec2::ZERO, |u| u * agent.move_speed);

    let wounded_ally = if agent.can_heal {
        world
            .allies
            .iter()
            .filter(|a| a.health_fraction < HEALTH_SPLIT && pos.distance(a.position) <= world.engage_radius)
            .min_by(|a, b| pos.distance(a.position).total_cmp(&pos.distance(b.position)))
    } else {
        None
    };
    let intent = match (wounded_ally, enemy) {
        (Some(a), _) => Intent::Heal(a.index),
        (None, Some((e, d))) if branch == Branch::Approach && d <= world.engage_radius => {
            Intent::Attack(e.index)
        }
        _ => Intent::None,
    };

    Command {
        velocity,
        intent,
        branch,
    }
}
