use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tasksets_cli::manifest::{RunManifest, MANIFEST_FILE};

fn tasksets(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tasksets"))
        .args(args)
        .env("TASKSETS_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = tasksets(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_slice(&fs::read(dir.join(MANIFEST_FILE)).unwrap()).unwrap()
}

/// Every file except the manifest, by name.
fn outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != MANIFEST_FILE)
        .map(|p| (p.file_name().unwrap().to_str().unwrap().to_string(), fs::read(&p).unwrap()))
        .collect()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

const SMALL: &str = r#"
master_seed = 11
games_per_player = 3

[world]
ticks = 600

[[players]]
player_id = "solo"
character = "Daemon"
archetype = { aggression = 0.8, exploration = 0.3, sociality = 0.2 }

[[players]]
player_id = "solo"
character = "Bulwark"
archetype = { aggression = 0.4, exploration = 0.3, sociality = 0.2 }

[[grids]]
knob = "aggression"
levels = [0.2, 0.5, 0.8]
per_level = 2
character = "Daemon"
"#;

fn simulate_small(root: &Path) -> PathBuf {
    let cfg = write_config(root, "small.toml", SMALL);
    let sim = root.join("sim");
    ok(&["simulate", "--config", s(&cfg), "--out", s(&sim)]);
    sim
}

#[test]
fn ninety_players_three_games_make_270_files() {
    let root = tempfile::tempdir().unwrap();
    let cfg = write_config(
        root.path(),
        "grid.toml",
        r#"
games_per_player = 3
[world]
ticks = 20
[[grids]]
knob = "aggression"
levels = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
per_level = 10
character = "Daemon"
"#,
    );
    let sim = root.path().join("sim");
    ok(&["simulate", "--config", s(&cfg), "--out", s(&sim), "--plain"]);
    let games = fs::read_dir(&sim)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().to_str().unwrap().ends_with(".jsonl"))
        .count();
    assert_eq!(games, 270);
    let m = manifest(&sim);
    assert_eq!(m.outputs.len(), 270);
    assert_eq!(m.command, "simulate");
    let truth = fs::read_to_string(sim.join("archetypes.csv")).unwrap();
    assert_eq!(truth.lines().count(), 91);
}

#[test]
fn same_seed_reproduces_digests_and_seed_flag_overrides() {
    let root = tempfile::tempdir().unwrap();
    let cfg = write_config(root.path(), "small.toml", SMALL);
    let run = |name: &str, extra: &[&str]| {
        let out = root.path().join(name);
        let mut args = vec!["simulate", "--config", s(&cfg), "--out", s(&out)];
        args.extend_from_slice(extra);
        ok(&args);
        manifest(&out)
    };
    let a = run("a", &["--jobs", "1"]);
    let b = run("b", &["--jobs", "3"]);
    assert_eq!(a.outputs, b.outputs);
    assert_eq!(a.master_seed, Some(11));
    let c = run("c", &["--seed", "12"]);
    assert_eq!(c.master_seed, Some(12));
    assert_ne!(a.outputs, c.outputs);
}

#[test]
fn missing_config_is_a_config_error_naming_the_path() {
    let root = tempfile::tempdir().unwrap();
    let missing = root.path().join("absent.toml");
    let out = tasksets(&["simulate", "--config", s(&missing), "--out", s(&root.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.toml"));
}

#[test]
fn usage_and_data_errors_have_stable_codes() {
    let root = tempfile::tempdir().unwrap();
    let o = s(root.path());
    assert_eq!(tasksets(&["analyze", "--in", o, "--theme", "nope", "--out", o]).status.code(), Some(1));
    assert_eq!(tasksets(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(tasksets(&["--horizon", "0", "analyze", "--in", o, "--theme", "fight_flight", "--out", o]).status.code(), Some(1));
    let empty = root.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let out = tasksets(&["analyze", "--in", s(&empty), "--theme", "fight_flight", "--out", o]);
    assert_eq!(out.status.code(), Some(2));
    fs::write(empty.join("broken.jsonl"), "{}\n").unwrap();
    let out = tasksets(&["--jobs", "1", "analyze", "--in", s(&empty), "--theme", "fight_flight", "--out", o]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("broken.jsonl"));
    assert_eq!(tasksets(&["--help"]).status.code(), Some(0));
}

fn feature_columns(dir: &Path) -> usize {
    let text = fs::read_to_string(dir.join("features.csv")).unwrap();
    let header = text.lines().next().unwrap();
    header.split(',').count() - 6
}

#[test]
fn analyze_writes_theme_layouts() {
    let root = tempfile::tempdir().unwrap();
    let sim = simulate_small(root.path());
    let run = |theme: &str| {
        let out = root.path().join(theme);
        ok(&["analyze", "--in", s(&sim), "--theme", theme, "--character", "Daemon", "--out", s(&out)]);
        out
    };
    let ff = run("fight_flight");
    assert_eq!(feature_columns(&ff), 36);
    let ee = run("explore_exploit");
    assert_eq!(feature_columns(&ee), 27);
    let sm = run("solo_multi");
    assert!(!sm.join("features.csv").exists());
    for dir in [&ff, &ee, &sm] {
        for f in ["curves.csv", "skips.csv", "players.csv", MANIFEST_FILE] {
            assert!(dir.join(f).exists(), "{f} missing in {}", dir.display());
        }
    }
    // every one of the 7 focal Daemon players is either retained or skipped
    // for lack of affordances; one-off fillers are always skipped
    let features = fs::read_to_string(ff.join("features.csv")).unwrap();
    let skips = fs::read_to_string(ff.join("skips.csv")).unwrap();
    let retained = features.lines().skip(1).filter(|l| !l.starts_with("game_")).count();
    let focal_skips: Vec<&str> = skips.lines().skip(1).filter(|l| !l.starts_with("game_")).collect();
    assert!(retained >= 4, "{features}");
    assert_eq!(retained + focal_skips.len(), 7);
    assert!(focal_skips.iter().all(|l| l.ends_with("no affordances")));
    assert!(!features.contains("\ngame_"));
    let m = manifest(&ff);
    assert_eq!(m.inputs.len(), 24);
    assert_eq!(m.registry_hash.len(), 64);
}

#[test]
fn class_filter_selects_by_class() {
    let root = tempfile::tempdir().unwrap();
    let sim = simulate_small(root.path());
    let out = root.path().join("tank");
    ok(&["analyze", "--in", s(&sim), "--theme", "fight_flight", "--character", "tank", "--out", s(&out)]);
    let text = fs::read_to_string(out.join("players.csv")).unwrap();
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(1) == Some("Bulwark")));
    assert!(text.lines().any(|l| l.starts_with("solo,Bulwark")));
}

#[test]
fn compare_of_a_population_with_itself_is_null() {
    let root = tempfile::tempdir().unwrap();
    let sim = simulate_small(root.path());
    let an = root.path().join("an");
    ok(&["analyze", "--in", s(&sim), "--theme", "fight_flight", "--out", s(&an)]);
    let f = an.join("features.csv");
    let cmp = root.path().join("cmp");
    ok(&["compare", "--a", s(&f), "--b", s(&f), "--out", s(&cmp)]);
    let v: serde_json::Value = serde_json::from_slice(&fs::read(cmp.join("alignment.json")).unwrap()).unwrap();
    let r = &v["report"];
    assert_eq!(r["fraction_features_different"], 0.0);
    assert_eq!(r["axis_std_ratio"][0], 1.0);
    assert_eq!(r["axis_std_ratio"][1], 1.0);
    assert_eq!(manifest(&cmp).inputs.len(), 2);
}

#[test]
fn embed_accepts_its_own_output() {
    let root = tempfile::tempdir().unwrap();
    let sim = simulate_small(root.path());
    let an = root.path().join("an");
    ok(&["analyze", "--in", s(&sim), "--theme", "explore_exploit", "--out", s(&an)]);
    let emb = root.path().join("emb");
    ok(&["embed", "--features", s(&an.join("features.csv")), "--out", s(&emb)]);
    let again = root.path().join("emb2");
    ok(&["embed", "--features", s(&emb.join("embedding.csv")), "--out", s(&again)]);
    assert_eq!(outputs(&emb), outputs(&again));
    let header = fs::read_to_string(emb.join("embedding.csv")).unwrap();
    assert!(header.lines().next().unwrap().ends_with(",x,y,color_reward,color_ratio"));
}

#[test]
fn overlap_with_itself_as_baseline_differs_by_zero() {
    let root = tempfile::tempdir().unwrap();
    let sim = simulate_small(root.path());
    let ov = root.path().join("ov");
    ok(&["overlap", "--in", s(&sim), "--baseline", s(&sim), "--out", s(&ov)]);
    let diff = fs::read_to_string(ov.join("completion_difference.csv")).unwrap();
    let lines: Vec<&str> = diff.lines().collect();
    assert_eq!(lines.len(), 19);
    for l in &lines[1..] {
        assert!(l.split(',').skip(1).all(|v| v == "0"), "{l}");
    }
    let aff = fs::read_to_string(ov.join("affordance_overlap.csv")).unwrap();
    // diagonal of a Jaccard matrix is 1 for afforded task-sets, 0 otherwise
    for (i, l) in aff.lines().skip(1).enumerate() {
        let d = l.split(',').nth(i + 1).unwrap();
        assert!(d == "1" || d == "0", "{l}");
    }
}

#[test]
fn high_sociality_population_spends_more_time_together() {
    let root = tempfile::tempdir().unwrap();
    let cfg = write_config(
        root.path(),
        "social.toml",
        r#"
master_seed = 5
games_per_player = 3
filler_archetype = { aggression = 0.5, exploration = 0.5, sociality = 0.9 }
[world]
ticks = 2400
[[grids]]
knob = "sociality"
levels = [0.9]
per_level = 4
character = "Daemon"
"#,
    );
    let sim = root.path().join("sim");
    ok(&["simulate", "--config", s(&cfg), "--out", s(&sim)]);
    let occ = root.path().join("occ");
    ok(&["occupancy", "--in", s(&sim), "--out", s(&occ)]);
    let text = fs::read_to_string(occ.join("occupancy.csv")).unwrap();
    let all = text.lines().find(|l| l.starts_with("all,")).unwrap();
    let cols: Vec<f64> = all.split(',').skip(1).map(|v| v.parse().unwrap()).collect();
    assert!(cols[1] > cols[0], "multi {} vs solo {}", cols[1], cols[0]);
    let fights = fs::read_to_string(occ.join("fight_overlap.csv")).unwrap();
    assert!(fights.starts_with("class,taskset_id,jaccard\n"));
}

#[test]
fn switch_reports_transitions() {
    let root = tempfile::tempdir().unwrap();
    let sim = simulate_small(root.path());
    let sw = root.path().join("sw");
    ok(&["switch", "--in", s(&sim), "--from", "Daemon", "--to", "Bulwark", "--out", s(&sw)]);
    let v: serde_json::Value = serde_json::from_slice(&fs::read(sw.join("switch.json")).unwrap()).unwrap();
    let text = fs::read_to_string(sw.join("strategies.csv")).unwrap();
    let daemon = text.lines().filter(|l| l.contains(",Daemon,")).count();
    let bulwark = text.lines().filter(|l| l.contains(",Bulwark,")).count();
    assert_eq!(v["players"], 1);
    assert_eq!(v["excluded"].as_u64().unwrap() as usize, daemon + bulwark - 2);
    let out = tasksets(&["switch", "--in", s(&sim), "--from", "Daemon", "--to", "Daemon", "--out", s(&sw)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn registry_dump_hash_matches_manifests() {
    let root = tempfile::tempdir().unwrap();
    let reg = root.path().join("reg");
    ok(&["registry-dump", "--out", s(&reg)]);
    let text = fs::read(reg.join("registry.json")).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&text).unwrap();
    assert_eq!(v["tasksets"].as_array().unwrap().len(), 18);
    assert_eq!(manifest(&reg).registry_hash, tasksets_cli::io::sha256_hex(&text));
}

#[test]
fn bench_reports_rates() {
    let root = tempfile::tempdir().unwrap();
    let cfg = write_config(root.path(), "small.toml", SMALL);
    let out_dir = root.path().join("bench");
    let out = ok(&[
        "bench", "--config", s(&cfg), "--games", "4", "--batch", "2", "--parallel-jobs", "2", "--out", s(&out_dir),
    ]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("single-thread rate"));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(out_dir.join("bench.json")).unwrap()).unwrap();
    assert_eq!(v["games"], 4);
    assert_eq!(v["frame_player_evaluations"], 4 * 600 * 8);
}

#[test]
fn every_command_is_idempotent() {
    let root = tempfile::tempdir().unwrap();
    let sim = simulate_small(root.path());
    let an = root.path().join("an");
    ok(&["analyze", "--in", s(&sim), "--theme", "fight_flight", "--out", s(&an)]);
    let f = an.join("features.csv");
    let cfg = root.path().join("small.toml");
    let commands: Vec<Vec<&str>> = vec![
        vec!["simulate", "--config", s(&cfg)],
        vec!["analyze", "--in", s(&sim), "--theme", "fight_flight"],
        vec!["analyze", "--in", s(&sim), "--theme", "solo_multi", "--pooling", "game_mean"],
        vec!["embed", "--features", s(&f)],
        vec!["compare", "--a", s(&f), "--b", s(&f)],
        vec!["overlap", "--in", s(&sim), "--measure", "conditional"],
        vec!["occupancy", "--in", s(&sim)],
        vec!["switch", "--in", s(&sim), "--from", "Daemon", "--to", "Bulwark"],
        vec!["registry-dump"],
    ];
    for (k, cmd) in commands.iter().enumerate() {
        let runs: Vec<_> = ["1", "3"]
            .iter()
            .map(|jobs| {
                let out = root.path().join(format!("run{k}_{jobs}"));
                let mut args = vec!["--jobs", jobs];
                args.extend(cmd.iter().copied());
                args.extend(["--out", s(&out)]);
                ok(&args);
                assert!(out.join(MANIFEST_FILE).exists());
                outputs(&out)
            })
            .collect();
        assert!(!runs[0].is_empty());
        assert_eq!(runs[0], runs[1], "{cmd:?} differs between runs");
    }
}
