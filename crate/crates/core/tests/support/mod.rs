//! Random inputs and brute-force reference implementations shared by the
//! integration tests. Nothing here calls into the engine's predicate or curve
//! code.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use tasksets_core::tasksets::MaskSeries;
use tasksets_core::telemetry::*;

pub const CARRY_CAP: u32 = 5;

fn pick<R: Rng>(rng: &mut R, p: f64) -> bool {
    rng.random::<f64>() < p
}

/// A coordinate that is sometimes an integer, so exact threshold distances
/// such as 2100 (1260, 1680) or 3500 (2100, 2800) come up.
fn coord<R: Rng>(rng: &mut R, span: f64) -> f64 {
    if pick(rng, 0.3) {
        (rng.random_range(-span..span) / 70.0).round() * 70.0
    } else {
        rng.random_range(-span..span)
    }
}

fn velocity<R: Rng>(rng: &mut R) -> Vec2 {
    match rng.random_range(0..10) {
        0 => Vec2::ZERO,
        1 => Vec2::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)),
        2 => Vec2::new(rng.random_range(-3i32..=3) as f64, 0.0),
        _ => Vec2::new(rng.random_range(-60.0..60.0), rng.random_range(-60.0..60.0)),
    }
}

fn health<R: Rng>(rng: &mut R) -> f64 {
    match rng.random_range(0..6) {
        0 => 0.5,
        1 => 1.0,
        2 => 0.25,
        _ => rng.random_range(0.01..1.0),
    }
}

/// A valid 8-player trajectory of `ticks` frames with players packed into a
/// few thousand units so every threshold is exercised.
pub fn random_trajectory<R: Rng>(rng: &mut R, ticks: usize) -> Trajectory {
    let classes = [CharacterClass::Damage, CharacterClass::Support, CharacterClass::Tank];
    let mut ids: Vec<PlayerId> = (0..8).map(|i| PlayerId::new(format!("u{i}"))).collect();
    ids.shuffle(rng);
    let roster: BTreeMap<PlayerId, RosterEntry> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let class = classes[rng.random_range(0..3)];
            (
                id.clone(),
                RosterEntry {
                    character_name: class.name().to_string(),
                    character_class: class,
                    team: if i < 4 { Team::A } else { Team::B },
                },
            )
        })
        .collect();
    let span = rng.random_range(1500.0..6000.0);
    let n_clusters = rng.random_range(0..4);
    let n_platforms = rng.random_range(0..4);
    let cluster_pos: Vec<Vec2> = (0..n_clusters).map(|_| Vec2::new(coord(rng, span), coord(rng, span))).collect();
    let platform_pos: Vec<Vec2> = (0..n_platforms).map(|_| Vec2::new(coord(rng, span), coord(rng, span))).collect();

    let frames = (0..ticks as u64)
        .map(|tick| {
            let mut players: Vec<PlayerState> = ids
                .iter()
                .map(|id| {
                    let alive = pick(rng, 0.85);
                    PlayerState {
                        player_id: id.clone(),
                        position: Vec2::new(coord(rng, span), coord(rng, span)),
                        velocity: if alive { velocity(rng) } else { Vec2::ZERO },
                        health_fraction: if alive { health(rng) } else { 0.0 },
                        seeds_carried: rng.random_range(0..=CARRY_CAP),
                        score: rng.random_range(0.0..100.0),
                        events: Events {
                            dealt_damage: pick(rng, 0.3),
                            took_damage: pick(rng, 0.4),
                            kill_credit: pick(rng, 0.1),
                            healed_ally: pick(rng, 0.1),
                        },
                        alive,
                    }
                })
                .collect();
            // pin some players exactly on a threshold distance from another
            const OFFSETS: [(f64, f64); 5] =
                [(1260.0, 1680.0), (2100.0, 0.0), (0.0, -3500.0), (2100.0, 2800.0), (-1680.0, 1260.0)];
            for i in 1..players.len() {
                if pick(rng, 0.08) {
                    let j = rng.random_range(0..i);
                    let (dx, dy) = OFFSETS[rng.random_range(0..OFFSETS.len())];
                    // integer coordinates keep the offset exact
                    let base = Vec2::new(players[j].position.x.round(), players[j].position.y.round());
                    players[j].position = base;
                    players[i].position = Vec2::new(base.x + dx, base.y + dy);
                }
            }
            if pick(rng, 0.2) {
                players.shuffle(rng);
            }
            let seed_clusters = cluster_pos
                .iter()
                .enumerate()
                .map(|(k, &position)| {
                    let seeds_remaining = rng.random_range(0..3);
                    SeedCluster {
                        cluster_id: k as u32,
                        position,
                        seeds_remaining,
                        visible: seeds_remaining > 0,
                    }
                })
                .collect();
            let platforms = platform_pos
                .iter()
                .enumerate()
                .map(|(k, &position)| Platform {
                    platform_id: k as u32,
                    position,
                    active: pick(rng, 0.4),
                })
                .collect();
            GameFrame {
                tick,
                phase: if pick(rng, 0.5) { Phase::Collection } else { Phase::Deposit },
                players,
                seed_clusters,
                platforms,
            }
        })
        .collect();

    Trajectory {
        meta: GameMeta {
            format_version: FORMAT_VERSION.to_string(),
            game_id: format!("rand_{}", rng.random::<u32>()),
            map_units_note: "units".into(),
            tick_rate: 10,
            carry_cap: CARRY_CAP,
            character_roster: roster,
        },
        frames,
    }
}

/// Reference predicate evaluation, written straight from the predicate table.
pub mod oracle {
    use super::*;

    pub const TASKSETS: [&str; 18] = [
        "Attack_Approach_Damage_Enemy_Health_Good",
        "Run_From_Enemy_In_Good_Health",
        "Attack_Approach_Damage_Enemy_Health_Poor",
        "Run_From_Enemy_In_Poor_Health",
        "Fight_Damage_Enemy_When_Attacked_Enemy_Health_Greater",
        "Run_When_Attacked_Enemy_Health_Greater",
        "Fight_Damage_Enemy_When_Attacked_Enemy_Health_Poorer",
        "Run_When_Attacked_Enemy_Health_Poorer",
        "Attempt_Direct_Pickup_Nearest_Seed_Cluster",
        "Explore_Away_From_Nearest_Seed_Cluster",
        "Attempt_Direct_Deposit_Nearest_Active_Platform",
        "Explore_Away_From_Nearest_Active_Platform_with_Seeds",
        "Attempt_Direct_Deposit_Nearest_Inactive_Platform",
        "Explore_Away_From_Nearest_Inactive_Platform_with_Seeds",
        "Continue_To_Play_Solo",
        "Regroup_With_Allies",
        "Regroup_With_Single_Ally",
        "Regroup_With_Multiple_Allies",
    ];

    fn dist(a: Vec2, b: Vec2) -> f64 {
        let dx = b.x - a.x;
        let dy = b.y - a.y;
        (dx * dx + dy * dy).sqrt()
    }

    /// Rate at which the ego closes on `target` (positive = approaching).
    fn closing(ego: &PlayerState, target: Vec2) -> Option<f64> {
        let d = dist(ego.position, target);
        if d == 0.0 {
            return None;
        }
        Some((ego.velocity.x * (target.x - ego.position.x) + ego.velocity.y * (target.y - ego.position.y)) / d)
    }

    fn toward(ego: &PlayerState, target: Vec2) -> bool {
        closing(ego, target).is_some_and(|c| c > 1.0)
    }

    fn away(ego: &PlayerState, target: Vec2) -> bool {
        closing(ego, target).is_some_and(|c| c < -1.0)
    }

    /// Sorts candidates by distance, then by key.
    fn nearest<K: Ord + Clone>(ego: Vec2, mut c: Vec<(K, Vec2)>) -> Option<(K, Vec2, f64)> {
        c.sort_by(|a, b| dist(ego, a.1).total_cmp(&dist(ego, b.1)).then(a.0.cmp(&b.0)));
        c.first().map(|(k, p)| (k.clone(), *p, dist(ego, *p)))
    }

    /// `(afforded, completed)` for every task-set in [`TASKSETS`] order at
    /// every tick, with kill credit counting as a fight completion.
    pub fn evaluate(t: &Trajectory, ego_id: &PlayerId) -> Vec<([bool; 18], [bool; 18])> {
        let my_team = t.meta.character_roster[ego_id].team;
        let mut out = Vec::new();
        for frame in &t.frames {
            let ego = frame.players.iter().find(|p| &p.player_id == ego_id).unwrap();
            let others: Vec<&PlayerState> = frame
                .players
                .iter()
                .filter(|p| &p.player_id != ego_id && p.alive)
                .collect();
            let enemies: Vec<(PlayerId, Vec2)> = others
                .iter()
                .filter(|p| t.meta.character_roster[&p.player_id].team != my_team)
                .map(|p| (p.player_id.clone(), p.position))
                .collect();
            let mates: Vec<(PlayerId, Vec2)> = others
                .iter()
                .filter(|p| t.meta.character_roster[&p.player_id].team == my_team)
                .map(|p| (p.player_id.clone(), p.position))
                .collect();
            let enemy = nearest(ego.position, enemies).map(|(id, pos, d)| {
                let h = frame.players.iter().find(|p| p.player_id == id).unwrap().health_fraction;
                (pos, d, h)
            });
            let mate = nearest(ego.position, mates.clone());
            let mates_within = |r: f64| mates.iter().filter(|(_, p)| dist(ego.position, *p) < r).count();
            let visible: Vec<(u32, Vec2)> = frame
                .seed_clusters
                .iter()
                .filter(|c| c.visible)
                .map(|c| (c.cluster_id, c.position))
                .collect();
            let platforms = |active: bool| -> Vec<(u32, Vec2)> {
                frame
                    .platforms
                    .iter()
                    .filter(|p| p.active == active)
                    .map(|p| (p.platform_id, p.position))
                    .collect()
            };

            let mut a = [false; 18];
            let mut c = [false; 18];

            let fight = ego.events.dealt_damage || ego.events.kill_credit;
            let flight = enemy.is_some_and(|(pos, d, _)| away(ego, pos) && d < 3500.0);
            let ff_afford = [
                enemy.is_some_and(|(pos, d, h)| d < 2100.0 && h > 0.5 && toward(ego, pos)),
                enemy.is_some_and(|(_, d, h)| d < 2100.0 && h < 0.5),
                enemy.is_some_and(|(_, d, h)| d < 2100.0 && h > ego.health_fraction && ego.events.took_damage),
                enemy.is_some_and(|(_, d, h)| d < 2100.0 && h < ego.health_fraction && ego.events.took_damage),
            ];
            for k in 0..4 {
                a[2 * k] = ff_afford[k];
                a[2 * k + 1] = ff_afford[k];
                c[2 * k] = fight;
                c[2 * k + 1] = flight;
            }

            a[8] = !visible.is_empty() && visible.iter().all(|(_, p)| dist(ego.position, *p) > 2100.0);
            a[9] = a[8];
            let cluster = nearest(ego.position, visible);
            c[8] = cluster.is_some_and(|(_, p, _)| toward(ego, p));
            c[9] = cluster.is_some_and(|(_, p, _)| away(ego, p));

            for (slot, active) in [(10, true), (12, false)] {
                let list = platforms(active);
                let far = list.iter().all(|(_, p)| dist(ego.position, *p) > 2100.0);
                a[slot] = ego.seeds_carried > 0 && far;
                a[slot + 1] = a[slot];
                let near = nearest(ego.position, list);
                c[slot] = ego.seeds_carried > 0 && near.is_some_and(|(_, p, _)| toward(ego, p));
                c[slot + 1] = near.is_some_and(|(_, p, _)| away(ego, p));
            }

            let alone = mates_within(3500.0) == 0;
            for k in 14..18 {
                a[k] = alone;
            }
            c[14] = mate.as_ref().is_none_or(|(_, _, d)| *d > 2100.0);
            c[15] = mate.as_ref().is_some_and(|(_, _, d)| *d < 2100.0);
            c[16] = mates_within(2100.0) == 1;
            c[17] = mates_within(2100.0) > 1;

            if !ego.alive {
                a = [false; 18];
            }
            out.push((a, c));
        }
        out
    }

    /// Distance from the ego to its nearest live teammate, if any.
    pub fn nearest_teammate_distance(t: &Trajectory, tick: usize, ego_id: &PlayerId) -> Option<f64> {
        let frame = &t.frames[tick];
        let team = t.meta.character_roster[ego_id].team;
        let ego = frame.players.iter().find(|p| &p.player_id == ego_id)?;
        frame
            .players
            .iter()
            .filter(|p| &p.player_id != ego_id && p.alive && t.meta.character_roster[&p.player_id].team == team)
            .map(|p| dist(ego.position, p.position))
            .min_by(f64::total_cmp)
    }
}

/// A mask series over `ids` with independent random bits.
pub fn random_masks<R: Rng>(rng: &mut R, ids: &[&str], len: usize) -> MaskSeries {
    let p_afford: f64 = rng.random_range(0.05..0.6);
    let p_complete: f64 = rng.random_range(0.05..0.6);
    let mut afforded = vec![0u64; len];
    let mut completed = vec![0u64; len];
    for t in 0..len {
        // a shared coin makes simultaneous affordances common
        let shared = pick(rng, p_afford);
        for i in 0..ids.len() {
            if shared || pick(rng, p_afford * 0.5) {
                afforded[t] |= 1 << i;
            }
            if pick(rng, p_complete) {
                completed[t] |= 1 << i;
            }
        }
    }
    MaskSeries {
        game_id: format!("m{}", rng.random::<u32>()),
        player_id: PlayerId::new("p"),
        character_name: "Daemon".into(),
        character_class: CharacterClass::Damage,
        final_score: 0.0,
        taskset_ids: ids.iter().map(|s| s.to_string()).collect(),
        afforded,
        completed,
        alive: vec![true; len],
    }
}

/// Reference curve counts by direct enumeration: for every tick where all of
/// `group` is afforded and every offset `x <= horizon`, count a completion of
/// task-set `i` at `t + x` when `i` is not afforded anywhere in `t+1..=t+x`.
pub fn brute_force_counts(m: &MaskSeries, group: &[&str], horizon: usize) -> (u64, Vec<Vec<u64>>) {
    let idx: Vec<usize> = group
        .iter()
        .map(|g| m.taskset_ids.iter().position(|id| id == g).unwrap())
        .collect();
    let bit = |word: u64, i: usize| (word >> i) & 1 == 1;
    let mut denominator = 0;
    let mut counts = vec![vec![0u64; horizon + 1]; group.len()];
    for t in 0..m.afforded.len() {
        if !idx.iter().all(|&i| bit(m.afforded[t], i)) {
            continue;
        }
        denominator += 1;
        for (g, &i) in idx.iter().enumerate() {
            for x in 0..=horizon {
                let s = t + x;
                if s >= m.afforded.len() {
                    break;
                }
                let reafforded = (t + 1..=s).any(|u| bit(m.afforded[u], i));
                if !reafforded && bit(m.completed[s], i) {
                    counts[g][x] += 1;
                }
            }
        }
    }
    (denominator, counts)
}
