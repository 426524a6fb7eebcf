use crate::telemetry::{Events, GameFrame, PlayerId, Team, Trajectory, Vec2, PLAYERS_PER_GAME};

use super::{TaskSetError, MOTION_EPSILON};

/// Nearest live player of a side, seen from the ego.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearestPlayer<'a> {
    pub player_id: &'a PlayerId,
    pub distance: f64,
    pub health_fraction: f64,
    pub moving_toward: bool,
    pub moving_away: bool,
}

/// Nearest world object (seed cluster or platform), seen from the ego.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearestObject {
    pub id: u32,
    pub distance: f64,
    pub moving_toward: bool,
    pub moving_away: bool,
}

/// Per-tick quantities the predicates read.
#[derive(Debug, Clone, PartialEq)]
pub struct EgoFeatures<'a> {
    pub player_id: &'a PlayerId,
    pub alive: bool,
    pub health_fraction: f64,
    pub seeds_carried: u32,
    pub events: Events,
    pub nearest_enemy: Option<NearestPlayer<'a>>,
    pub nearest_teammate: Option<NearestPlayer<'a>>,
    pub nearest_seed_cluster: Option<NearestObject>,
    pub nearest_active_platform: Option<NearestObject>,
    pub nearest_inactive_platform: Option<NearestObject>,
    // ascending distances to live teammates
    teammate_distances: [f64; PLAYERS_PER_GAME],
    teammate_count: usize,
}

impl EgoFeatures<'_> {
    /// Number of live teammates strictly closer than `radius`.
    pub fn teammates_within(&self, radius: f64) -> usize {
        self.teammate_distances[..self.teammate_count]
            .iter()
            .take_while(|&&d| d < radius)
            .count()
    }

    pub fn moving_toward_nearest_enemy(&self) -> bool {
        self.nearest_enemy.is_some_and(|e| e.moving_toward)
    }

    pub fn moving_away_from_nearest_enemy(&self) -> bool {
        self.nearest_enemy.is_some_and(|e| e.moving_away)
    }
}

/// Sign of the rate of change of ego-target distance, with a dead band.
/// Returns `(toward, away)`; a coincident target yields neither.
pub(crate) fn radial_motion(ego: Vec2, velocity: Vec2, target: Vec2, epsilon: f64) -> (bool, bool) {
    let offset = target - ego;
    let dist = offset.norm();
    if dist <= 0.0 {
        return (false, false);
    }
    let radial_speed = -velocity.dot(offset) / dist;
    (radial_speed < -epsilon, radial_speed > epsilon)
}

#[inline]
fn closer(d: f64, id: &PlayerId, best: Option<(f64, &PlayerId)>) -> bool {
    match best {
        None => true,
        Some((bd, bid)) => d < bd || (d == bd && id < bid),
    }
}

fn nearest_object<I>(ego: Vec2, velocity: Vec2, epsilon: f64, objects: I) -> Option<NearestObject>
where
    I: Iterator<Item = (u32, Vec2)>,
{
    let mut best: Option<(f64, u32, Vec2)> = None;
    for (id, pos) in objects {
        let d = ego.distance(pos);
        let better = match best {
            None => true,
            Some((bd, bid, _)) => d < bd || (d == bd && id < bid),
        };
        if better {
            best = Some((d, id, pos));
        }
    }
    best.map(|(distance, id, pos)| {
        let (moving_toward, moving_away) = radial_motion(ego, velocity, pos, epsilon);
        NearestObject {
            id,
            distance,
            moving_toward,
            moving_away,
        }
    })
}

/// Ego features for `frame.players[ego]`, with `teams[i]` the team of
/// `frame.players[i]` (`None` for players outside the roster).
pub(crate) fn features_at<'a>(
    frame: &'a GameFrame,
    ego: usize,
    teams: &[Option<Team>],
    epsilon: f64,
) -> EgoFeatures<'a> {
    let me = &frame.players[ego];
    let my_team = teams[ego];
    let pos = me.position;
    let vel = me.velocity;

    let mut enemy: Option<(f64, &PlayerId)> = None;
    let mut enemy_idx = 0;
    let mut mate: Option<(f64, &PlayerId)> = None;
    let mut mate_idx = 0;
    let mut mate_dists = [f64::INFINITY; PLAYERS_PER_GAME];
    let mut mate_count = 0;

    for (i, other) in frame.players.iter().enumerate() {
        if i == ego || !other.alive {
            continue;
        }
        let Some(team) = teams[i] else { continue };
        let d = pos.distance(other.position);
        if Some(team) == my_team {
            if closer(d, &other.player_id, mate) {
                mate = Some((d, &other.player_id));
                mate_idx = i;
            }
            // insertion into the ascending, capacity-bounded list
            let mut j = mate_count.min(PLAYERS_PER_GAME - 1);
            if mate_count < PLAYERS_PER_GAME || d < mate_dists[j] {
                while j > 0 && mate_dists[j - 1] > d {
                    mate_dists[j] = mate_dists[j - 1];
                    j -= 1;
                }
                mate_dists[j] = d;
                mate_count = (mate_count + 1).min(PLAYERS_PER_GAME);
            }
        } else if closer(d, &other.player_id, enemy) {
            enemy = Some((d, &other.player_id));
            enemy_idx = i;
        }
    }

    let to_nearest = |found: Option<(f64, &'a PlayerId)>, idx: usize| {
        found.map(|(distance, player_id)| {
            let target = &frame.players[idx];
            let (moving_toward, moving_away) = radial_motion(pos, vel, target.position, epsilon);
            NearestPlayer {
                player_id,
                distance,
                health_fraction: target.health_fraction,
                moving_toward,
                moving_away,
            }
        })
    };

    EgoFeatures {
        player_id: &me.player_id,
        alive: me.alive,
        health_fraction: me.health_fraction,
        seeds_carried: me.seeds_carried,
        events: me.events,
        nearest_enemy: to_nearest(enemy, enemy_idx),
        nearest_teammate: to_nearest(mate, mate_idx),
        nearest_seed_cluster: nearest_object(
            pos,
            vel,
            epsilon,
            frame
                .seed_clusters
                .iter()
                .filter(|c| c.visible)
                .map(|c| (c.cluster_id, c.position)),
        ),
        nearest_active_platform: nearest_object(
            pos,
            vel,
            epsilon,
            frame
                .platforms
                .iter()
                .filter(|p| p.active)
                .map(|p| (p.platform_id, p.position)),
        ),
        nearest_inactive_platform: nearest_object(
            pos,
            vel,
            epsilon,
            frame
                .platforms
                .iter()
                .filter(|p| !p.active)
                .map(|p| (p.platform_id, p.position)),
        ),
        teammate_distances: mate_dists,
        teammate_count: mate_count,
    }
}

pub(crate) fn frame_teams(trajectory: &Trajectory, frame: &GameFrame, out: &mut Vec<Option<Team>>) {
    out.clear();
    out.extend(frame.players.iter().map(|p| trajectory.team_of(&p.player_id)));
}

/// Ego features of `player_id` at `tick`, using the default motion dead band.
pub fn compute_ego_features<'a>(
    trajectory: &'a Trajectory,
    player_id: &PlayerId,
    tick: u64,
) -> Result<EgoFeatures<'a>, TaskSetError> {
    if !trajectory.meta.character_roster.contains_key(player_id) {
        return Err(TaskSetError::UnknownPlayer(player_id.clone()));
    }
    let frame = usize::try_from(tick)
        .ok()
        .and_then(|t| trajectory.frames.get(t))
        .ok_or(TaskSetError::TickOutOfRange {
            tick,
            len: trajectory.frames.len(),
        })?;
    let ego = frame
        .players
        .iter()
        .position(|p| &p.player_id == player_id)
        .ok_or_else(|| TaskSetError::UnknownPlayer(player_id.clone()))?;
    let mut teams = Vec::with_capacity(frame.players.len());
    frame_teams(trajectory, frame, &mut teams);
    Ok(features_at(frame, ego, &teams, MOTION_EPSILON))
}
