use std::hint::black_box;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use tasksets_core::simulator::{make_population, simulate, ArchetypeGrid, Knob, PopulationSpec, SimConfig};
use tasksets_core::tasksets::{evaluate, Registry};
use tasksets_core::telemetry::Trajectory;

use super::{out_dir, Ctx};
use crate::args::BenchArgs;
use crate::error::{Classify, Failure, Outcome};
use crate::pipeline::pool;

/// 9 aggression levels x 10 players x 3 games on one character: 270 games.
pub fn default_population() -> PopulationSpec {
    let mut spec = PopulationSpec::new(Vec::new());
    spec.grids.push(ArchetypeGrid {
        knob: Knob::Aggression,
        levels: (1..=9).map(|k| k as f64 / 10.0).collect(),
        per_level: 10,
        base: Default::default(),
        character: "Daemon".into(),
        id_prefix: "p".into(),
    });
    spec
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub games: usize,
    /// Frames times evaluated players, summed over games.
    pub frame_player_evaluations: u64,
    pub single_thread_seconds: f64,
    pub single_thread_rate: f64,
    pub parallel_jobs: usize,
    pub parallel_seconds: f64,
    pub parallel_rate: f64,
    pub speedup: f64,
    /// Hardware threads reported by the OS.
    pub available_parallelism: usize,
}

fn evaluate_game(t: &Trajectory, registry: &Registry) -> u64 {
    let mut evals = 0;
    for id in t.meta.character_roster.keys() {
        let m = evaluate(t, id, registry).expect("simulated roster evaluates");
        black_box(&m);
        evals += m.len() as u64;
    }
    evals
}

/// Times mask production for every roster player, first on the calling
/// thread, then spread over `pool` one (game, player) per task. Games are
/// simulated `batch` at a time so memory stays bounded; simulation is not
/// timed.
pub fn measure(
    games: &[SimConfig],
    registry: &Registry,
    batch: usize,
    sim_pool: &rayon::ThreadPool,
    bench_pool: &rayon::ThreadPool,
) -> anyhow::Result<BenchReport> {
    let mut evals = 0u64;
    let (mut single, mut parallel) = (0.0, 0.0);
    for chunk in games.chunks(batch.max(1)) {
        let trajectories: Vec<Trajectory> =
            sim_pool.install(|| chunk.par_iter().map(simulate).collect::<Result<_, _>>())?;
        let start = Instant::now();
        let n: u64 = trajectories.iter().map(|t| evaluate_game(t, registry)).sum();
        single += start.elapsed().as_secs_f64();

        let tasks: Vec<_> = trajectories
            .iter()
            .flat_map(|t| t.meta.character_roster.keys().map(move |id| (t, id)))
            .collect();
        let start = Instant::now();
        let m: u64 = bench_pool.install(|| {
            tasks
                .par_iter()
                .map(|(t, id)| {
                    let m = evaluate(t, id, registry).expect("simulated roster evaluates");
                    black_box(&m);
                    m.len() as u64
                })
                .sum()
        });
        parallel += start.elapsed().as_secs_f64();
        assert_eq!(n, m);
        evals += n;
        log::debug!("{} games timed", chunk.len());
    }
    let rate = |secs: f64| if secs > 0.0 { evals as f64 / secs } else { 0.0 };
    Ok(BenchReport {
        games: games.len(),
        frame_player_evaluations: evals,
        single_thread_seconds: single,
        single_thread_rate: rate(single),
        parallel_jobs: bench_pool.current_num_threads(),
        parallel_seconds: parallel,
        parallel_rate: rate(parallel),
        speedup: if parallel > 0.0 { single / parallel } else { 0.0 },
        available_parallelism: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    })
}

pub fn run(ctx: &Ctx, args: &BenchArgs) -> Outcome<()> {
    let (mut spec, inputs) = match ctx.population()? {
        Some((spec, digest)) => (spec, vec![digest]),
        None => (default_population(), Vec::new()),
    };
    if ctx.global.config.is_none() {
        if let Some(seed) = ctx.global.seed {
            spec.master_seed = seed;
        }
    }
    let mut games = make_population(&spec).or_config()?;
    if let Some(n) = args.games {
        games.truncate(n);
    }
    if games.is_empty() || args.batch == 0 {
        return Err(Failure::config("bench needs at least one game and --batch >= 1"));
    }
    let report = measure(
        &games,
        &ctx.registry,
        args.batch,
        &pool(ctx.global.jobs)?,
        &pool(args.parallel_jobs)?,
    )
    .or_data()?;
    println!("games                     {}", report.games);
    println!("frame-player evaluations  {}", report.frame_player_evaluations);
    println!("single-thread rate        {:.0}/s", report.single_thread_rate);
    println!("parallel rate ({} jobs)    {:.0}/s", report.parallel_jobs, report.parallel_rate);
    println!("speedup                   {:.2}x", report.speedup);
    println!("available parallelism     {}", report.available_parallelism);
    if let Some(dir) = &args.out {
        let out = out_dir(dir)?;
        let mut json = serde_json::to_string_pretty(&report).or_data()?;
        json.push('\n');
        out.write("bench.json", json.as_bytes()).or_data()?;
        let snapshot = serde_json::to_value(&spec).or_data()?;
        ctx.finish(&out, "bench", args, Some(snapshot), inputs, Vec::new(), Some(spec.master_seed))?;
    }
    Ok(())
}
