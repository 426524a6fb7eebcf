//! Trajectory data model, the line-delimited record format, and validation.
//!
//! A telemetry file holds one game: a meta record on the first line and one
//! frame record per following line. Every record is a single JSON object.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mandatory `format_version` value of the meta record.
pub const FORMAT_VERSION: &str = "tasksets/1";

/// Players per game.
pub const PLAYERS_PER_GAME: usize = 8;

/// Players per team.
pub const PLAYERS_PER_TEAM: usize = 4;

#[derive(Debug, Error)]
pub enum TelemetryError {
    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn malformed(line: usize, reason: impl Into<String>) -> TelemetryError {
    TelemetryError::MalformedRecord {
        line,
        reason: reason.into(),
    }
}

/// Planar position or velocity in game distance units, encoded as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (other - self).norm()
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Vec2 { x, y }
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

/// Opaque player identifier. Identity is stable across games, so a player's
/// games can be pooled by id. Ordering is lexicographic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlayerId(pub String);

impl PlayerId {
    pub fn new(id: impl Into<String>) -> Self {
        PlayerId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CharacterClass {
    Damage,
    Support,
    Tank,
}

impl CharacterClass {
    pub const ALL: [CharacterClass; 3] = [
        CharacterClass::Damage,
        CharacterClass::Support,
        CharacterClass::Tank,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CharacterClass::Damage => "Damage",
            CharacterClass::Support => "Support",
            CharacterClass::Tank => "Tank",
        }
    }
}

impl fmt::Display for CharacterClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Team {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub character_name: String,
    pub character_class: CharacterClass,
    pub team: Team,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameMeta {
    pub format_version: String,
    pub game_id: String,
    pub map_units_note: String,
    pub tick_rate: u32,
    /// Upper bound on `seeds_carried` for every player in this game.
    pub carry_cap: u32,
    pub character_roster: BTreeMap<PlayerId, RosterEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Events {
    pub dealt_damage: bool,
    pub took_damage: bool,
    pub kill_credit: bool,
    pub healed_ally: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerState {
    pub player_id: PlayerId,
    pub position: Vec2,
    /// Displacement applied between this tick and the next, in units/tick.
    pub velocity: Vec2,
    pub health_fraction: f64,
    pub seeds_carried: u32,
    pub score: f64,
    pub events: Events,
    pub alive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedCluster {
    pub cluster_id: u32,
    pub position: Vec2,
    pub seeds_remaining: u32,
    pub visible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Platform {
    pub platform_id: u32,
    pub position: Vec2,
    pub active: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Collection,
    Deposit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameFrame {
    pub tick: u64,
    pub phase: Phase,
    pub players: Vec<PlayerState>,
    pub seed_clusters: Vec<SeedCluster>,
    pub platforms: Vec<Platform>,
}

impl GameFrame {
    pub fn player(&self, id: &PlayerId) -> Option<&PlayerState> {
        self.players.iter().find(|p| &p.player_id == id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub meta: GameMeta,
    pub frames: Vec<GameFrame>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn team_of(&self, id: &PlayerId) -> Option<Team> {
        self.meta.character_roster.get(id).map(|r| r.team)
    }

    /// Final cumulative score of a player, if present.
    pub fn final_score(&self, id: &PlayerId) -> Option<f64> {
        self.frames.last()?.player(id).map(|p| p.score)
    }
}

/// One broken invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// `None` for trajectory- or meta-level violations.
    pub tick: Option<u64>,
    pub player_id: Option<PlayerId>,
    pub field: String,
    pub rule: String,
}

impl Violation {
    fn new(tick: Option<u64>, player: Option<&PlayerId>, field: &str, rule: &str) -> Self {
        Violation {
            tick,
            player_id: player.cloned(),
            field: field.to_string(),
            rule: rule.to_string(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tick {
            Some(t) => write!(f, "tick {t}: ")?,
            None => write!(f, "meta: ")?,
        }
        if let Some(p) = &self.player_id {
            write!(f, "player {p}: ")?;
        }
        write!(f, "{} violates {}", self.field, self.rule)
    }
}

/// Checks every trajectory invariant and returns all violations found.
pub fn validate_trajectory(t: &Trajectory) -> Vec<Violation> {
    let mut out = validate_meta(&t.meta);
    if t.frames.is_empty() {
        out.push(Violation::new(None, None, "frames", "non_empty"));
    }
    let roster: BTreeSet<&PlayerId> = t.meta.character_roster.keys().collect();
    for (i, frame) in t.frames.iter().enumerate() {
        if frame.tick != i as u64 {
            out.push(Violation::new(Some(frame.tick), None, "tick", "sequence"));
        }
        validate_frame(frame, &roster, t.meta.carry_cap, &mut out);
    }
    out
}

fn validate_meta(meta: &GameMeta) -> Vec<Violation> {
    let mut out = Vec::new();
    if meta.format_version != FORMAT_VERSION {
        out.push(Violation::new(None, None, "format_version", "version"));
    }
    if meta.game_id.is_empty() {
        out.push(Violation::new(None, None, "game_id", "non_empty"));
    }
    if meta.tick_rate < 1 {
        out.push(Violation::new(None, None, "tick_rate", "positive"));
    }
    if meta.character_roster.len() != PLAYERS_PER_GAME {
        out.push(Violation::new(None, None, "character_roster", "player_count"));
    }
    let team_a = meta
        .character_roster
        .values()
        .filter(|r| r.team == Team::A)
        .count();
    let team_b = meta.character_roster.len() - team_a;
    if team_a != PLAYERS_PER_TEAM || team_b != PLAYERS_PER_TEAM {
        out.push(Violation::new(None, None, "character_roster", "team_size"));
    }
    out
}

fn validate_frame(
    frame: &GameFrame,
    roster: &BTreeSet<&PlayerId>,
    carry_cap: u32,
    out: &mut Vec<Violation>,
) {
    let tick = Some(frame.tick);
    let mut seen = BTreeSet::new();
    for p in &frame.players {
        let pid = Some(&p.player_id);
        if !roster.contains(&p.player_id) {
            out.push(Violation::new(tick, pid, "player_id", "roster"));
        }
        if !seen.insert(&p.player_id) {
            out.push(Violation::new(tick, pid, "player_id", "unique"));
        }
        if !p.position.is_finite() {
            out.push(Violation::new(tick, pid, "position", "finite"));
        }
        if !p.velocity.is_finite() {
            out.push(Violation::new(tick, pid, "velocity", "finite"));
        }
        if !(0.0..=1.0).contains(&p.health_fraction) {
            out.push(Violation::new(tick, pid, "health_fraction", "range"));
        }
        if p.seeds_carried > carry_cap {
            out.push(Violation::new(tick, pid, "seeds_carried", "carry_cap"));
        }
        if !(p.score.is_finite() && p.score >= 0.0) {
            out.push(Violation::new(tick, pid, "score", "range"));
        }
        if !p.alive && p.velocity != Vec2::ZERO {
            out.push(Violation::new(tick, pid, "velocity", "dead_at_rest"));
        }
    }
    if seen.len() != roster.len() || roster.iter().any(|id| !seen.contains(id)) {
        out.push(Violation::new(tick, None, "players", "roster_complete"));
    }
    for c in &frame.seed_clusters {
        if !c.position.is_finite() {
            out.push(Violation::new(tick, None, "seed_clusters.position", "finite"));
        }
        if c.visible != (c.seeds_remaining > 0) {
            out.push(Violation::new(tick, None, "seed_clusters.visible", "visible_iff_seeds"));
        }
    }
    for p in &frame.platforms {
        if !p.position.is_finite() {
            out.push(Violation::new(tick, None, "platforms.position", "finite"));
        }
    }
}

/// Writes a trajectory in the line-delimited format.
pub fn serialize_trajectory<W: Write>(t: &Trajectory, mut w: W) -> io::Result<()> {
    serde_json::to_writer(&mut w, &t.meta)?;
    w.write_all(b"\n")?;
    for frame in &t.frames {
        serde_json::to_writer(&mut w, frame)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn to_bytes(t: &Trajectory) -> Vec<u8> {
    let mut buf = Vec::new();
    serialize_trajectory(t, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

/// Parses the line-delimited format. Any schema or invariant violation aborts
/// the parse with the offending line number.
pub fn parse_trajectory<R: BufRead>(reader: R) -> Result<Trajectory, TelemetryError> {
    let mut lines = reader.lines().enumerate();
    let meta: GameMeta = loop {
        match lines.next() {
            None => return Err(malformed(1, "missing meta record")),
            Some((_, line)) => {
                let line = line?;
                if line.trim().is_empty() {
                    return Err(malformed(1, "missing meta record"));
                }
                break serde_json::from_str(&line).map_err(|e| malformed(1, format!("meta: {e}")))?;
            }
        }
    };
    if meta.format_version != FORMAT_VERSION {
        return Err(malformed(
            1,
            format!("unsupported format_version {:?}", meta.format_version),
        ));
    }
    if let Some(v) = validate_meta(&meta).first() {
        return Err(malformed(1, v.to_string()));
    }

    let roster: BTreeSet<&PlayerId> = meta.character_roster.keys().collect();
    let mut frames = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let frame: GameFrame =
            serde_json::from_str(&line).map_err(|e| malformed(line_no, format!("frame: {e}")))?;
        let expected = frames.len() as u64;
        if frame.tick != expected {
            let reason = if frame.tick > expected {
                "tick gap"
            } else {
                "tick not increasing"
            };
            return Err(malformed(line_no, reason));
        }
        let mut violations = Vec::new();
        validate_frame(&frame, &roster, meta.carry_cap, &mut violations);
        if let Some(v) = violations.first() {
            return Err(malformed(line_no, v.to_string()));
        }
        frames.push(frame);
    }
    if frames.is_empty() {
        return Err(malformed(1, "empty trajectory: no frame records"));
    }
    Ok(Trajectory { meta, frames })
}

pub fn from_bytes(bytes: &[u8]) -> Result<Trajectory, TelemetryError> {
    parse_trajectory(bytes)
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    fn err_line(r: Result<Trajectory, TelemetryError>) -> (usize, String) {
        match r {
            Err(TelemetryError::MalformedRecord { line, reason }) => (line, reason),
            other => panic!("expected MalformedRecord, got {other:?}"),
        }
    }

    #[test]
    fn meta_only_stream_is_rejected_as_empty() {
        let mut bytes = serde_json::to_vec(&meta()).unwrap();
        bytes.push(b'\n');
        let (_, reason) = err_line(from_bytes(&bytes));
        assert!(reason.contains("empty"), "{reason}");
    }

    #[test]
    fn hand_written_two_tick_file_parses_field_by_field() {
        let mut text = serde_json::to_string(&meta()).unwrap();
        text.push('\n');
        for tick in 0..2 {
            let players: Vec<String> = (0..8)
                .map(|i| {
                    format!(
                        r#"{{"player_id":"p{i}","position":[{x},-12.5],"velocity":[{vx},0],"health_fraction":0.75,"seeds_carried":{i},"score":{s},"events":{{"dealt_damage":{dd},"took_damage":false,"kill_credit":false,"healed_ally":false}},"alive":true}}"#,
                        x = i * 1000 + tick,
                        vx = if i == 3 { 2.5 } else { 0.0 },
                        s = tick * 10,
                        dd = i == 1 && tick == 1,
                    )
                })
                .collect();
            text.push_str(&format!(
                r#"{{"tick":{tick},"phase":"deposit","players":[{}],"seed_clusters":[{{"cluster_id":7,"position":[1,2],"seeds_remaining":0,"visible":false}}],"platforms":[{{"platform_id":2,"position":[3,4],"active":true}}]}}"#,
                players.join(",")
            ));
            text.push('\n');
        }
        let mut meta = meta();
        meta.carry_cap = 8;
        let text = text.replace(r#""carry_cap":5"#, r#""carry_cap":8"#);
        let t = from_bytes(text.as_bytes()).unwrap();
        assert_eq!(t.meta, meta);
        assert_eq!(t.frames.len(), 2);
        let f1 = &t.frames[1];
        assert_eq!(f1.tick, 1);
        assert_eq!(f1.phase, Phase::Deposit);
        let p3 = f1.player(&PlayerId::new("p3")).unwrap();
        assert_eq!(p3.position, Vec2::new(3001.0, -12.5));
        assert_eq!(p3.velocity, Vec2::new(2.5, 0.0));
        assert_eq!(p3.health_fraction, 0.75);
        assert_eq!(p3.seeds_carried, 3);
        assert_eq!(p3.score, 10.0);
        assert!(f1.player(&PlayerId::new("p1")).unwrap().events.dealt_damage);
        assert!(!t.frames[0].player(&PlayerId::new("p1")).unwrap().events.dealt_damage);
        assert_eq!(f1.seed_clusters[0].cluster_id, 7);
        assert!(!f1.seed_clusters[0].visible);
        assert_eq!(f1.platforms[0].position, Vec2::new(3.0, 4.0));
        assert!(f1.platforms[0].active);
    }

    #[test]
    fn tick_gap_is_rejected() {
        let mut t = trajectory(2);
        t.frames[1].tick = 2;
        let (line, reason) = err_line(from_bytes(&to_bytes(&t)));
        assert_eq!(line, 3);
        assert_eq!(reason, "tick gap");
    }

    #[test]
    fn wrong_version_is_rejected() {
        let mut t = trajectory(1);
        t.meta.format_version = "tasksets/0".into();
        let (line, _) = err_line(from_bytes(&to_bytes(&t)));
        assert_eq!(line, 1);
    }

    #[test]
    fn out_of_range_value_aborts_parse() {
        let mut t = trajectory(3);
        t.frames[2].players[4].health_fraction = 1.5;
        let (line, reason) = err_line(from_bytes(&to_bytes(&t)));
        assert_eq!(line, 4);
        assert!(reason.contains("health_fraction"));
    }

    #[test]
    fn garbage_line_is_malformed() {
        let mut bytes = to_bytes(&trajectory(1));
        bytes.extend_from_slice(b"{not json\n");
        let (line, _) = err_line(from_bytes(&bytes));
        assert_eq!(line, 3);
    }

    #[test]
    fn minimal_trajectory_round_trips() {
        let t = trajectory(1);
        assert_eq!(from_bytes(&to_bytes(&t)).unwrap(), t);
    }

    #[test]
    fn half_health_survives_round_trip() {
        let mut t = trajectory(1);
        t.frames[0].players[0].health_fraction = 0.5;
        t.frames[0].players[1].health_fraction = 0.1 + 0.2;
        let back = from_bytes(&to_bytes(&t)).unwrap();
        assert_eq!(back.frames[0].players[0].health_fraction, 0.5);
        assert_eq!(back.frames[0].players[1].health_fraction, 0.1 + 0.2);
    }

    #[test]
    fn valid_fixture_has_no_violations() {
        assert!(validate_trajectory(&trajectory(4)).is_empty());
    }

    #[test]
    fn health_above_one_is_a_range_violation() {
        let mut t = trajectory(2);
        t.frames[1].players[2].health_fraction = 1.2;
        let v = validate_trajectory(&t);
        assert_eq!(
            v,
            vec![Violation::new(Some(1), Some(&PlayerId::new("p2")), "health_fraction", "range")]
        );
    }

    #[test]
    fn dead_player_moving_is_one_violation() {
        let mut t = trajectory(1);
        t.frames[0].players[0].alive = false;
        t.frames[0].players[0].velocity = Vec2::new(1.0, 0.0);
        let v = validate_trajectory(&t);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "velocity");
    }

    #[test]
    fn meta_violations() {
        let mut t = trajectory(1);
        t.meta.game_id.clear();
        t.meta.tick_rate = 0;
        let fields: Vec<_> = validate_trajectory(&t).into_iter().map(|v| v.field).collect();
        assert_eq!(fields, ["game_id", "tick_rate"]);

        let mut t = trajectory(1);
        let key = PlayerId::new("p7");
        t.meta.character_roster.get_mut(&key).unwrap().team = Team::A;
        let rules: Vec<_> = validate_trajectory(&t).into_iter().map(|v| v.rule).collect();
        assert_eq!(rules, ["team_size"]);
    }

    #[test]
    fn missing_and_duplicate_players() {
        let mut t = trajectory(1);
        t.frames[0].players.pop();
        assert_eq!(validate_trajectory(&t)[0].rule, "roster_complete");

        let mut t = trajectory(1);
        let dup = t.frames[0].players[0].clone();
        t.frames[0].players[7] = dup;
        let rules: Vec<_> = validate_trajectory(&t).into_iter().map(|v| v.rule).collect();
        assert!(rules.contains(&"unique".to_string()));
    }

    #[test]
    fn cluster_visibility_must_track_seeds() {
        let mut t = trajectory(1);
        t.frames[0].seed_clusters[0].seeds_remaining = 0;
        assert_eq!(validate_trajectory(&t)[0].rule, "visible_iff_seeds");
    }
}
