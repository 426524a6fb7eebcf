use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use tasksets_core::analysis::CharacterFilter;
use tasksets_core::simulator::PopulationSpec;
use tasksets_core::tasksets::{builtin_registry, Registry};

use crate::args::{Cli, Command, Globals};
use crate::error::{Classify, Failure, Outcome};
use crate::io::{read_to_string, FileDigest, OutDir};
use crate::manifest::RunManifest;

pub mod analyze;
pub mod bench;
pub mod embed;
pub mod occupancy;
pub mod overlap;
pub mod simulate;
pub mod switch;

/// Shared state for one invocation.
pub struct Ctx {
    pub global: Globals,
    pub registry: Registry,
}

impl Ctx {
    pub fn new(global: Globals) -> Self {
        Ctx {
            global,
            registry: builtin_registry(),
        }
    }

    pub fn filter(character: &Option<String>) -> Option<CharacterFilter> {
        character.as_ref().map(|c| CharacterFilter(c.clone()))
    }

    /// Writes the manifest for a finished command.
    pub fn finish<A: Serialize>(
        &self,
        out: &OutDir,
        command: &str,
        args: &A,
        extra: Option<serde_json::Value>,
        inputs: Vec<FileDigest>,
        outputs: Vec<FileDigest>,
        master_seed: Option<u64>,
    ) -> Outcome<()> {
        let mut config = serde_json::json!({ "global": self.global, "args": args });
        if let Some(extra) = extra {
            config["population"] = extra;
        }
        RunManifest::new(command, &self.registry, config, inputs, master_seed)
            .with_outputs(outputs)
            .write(out)
            .or_data()
    }

    /// The population config named by `--config`, with `--seed` applied.
    pub fn population(&self) -> Outcome<Option<(PopulationSpec, FileDigest)>> {
        let Some(path) = &self.global.config else {
            return Ok(None);
        };
        let (mut spec, digest) = load_population(path)?;
        if let Some(seed) = self.global.seed {
            spec.master_seed = seed;
        }
        Ok(Some((spec, digest)))
    }
}

pub fn load_population(path: &Path) -> Outcome<(PopulationSpec, FileDigest)> {
    let (text, digest) = read_to_string(path)
        .with_context(|| format!("invalid config {}", path.display()))
        .or_config()?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let spec: PopulationSpec = if is_json {
        serde_json::from_str(&text).map_err(anyhow::Error::from)
    } else {
        toml::from_str(&text).map_err(anyhow::Error::from)
    }
    .with_context(|| format!("invalid config {}", path.display()))
    .or_config()?;
    Ok((spec, digest))
}

pub fn out_dir(path: &Path) -> Outcome<OutDir> {
    OutDir::create(path).or_data()
}

pub fn run(cli: Cli) -> Outcome<()> {
    let ctx = Ctx::new(cli.global);
    if ctx.global.horizon < 1 {
        return Err(Failure::config("--horizon must be at least 1"));
    }
    if ctx.global.min_games < 1 {
        return Err(Failure::config("--min-games must be at least 1"));
    }
    match cli.command {
        Command::Simulate(a) => simulate::run(&ctx, &a),
        Command::Analyze(a) => analyze::run(&ctx, &a),
        Command::Embed(a) => embed::run_embed(&ctx, &a),
        Command::Compare(a) => embed::run_compare(&ctx, &a),
        Command::Overlap(a) => overlap::run(&ctx, &a),
        Command::Occupancy(a) => occupancy::run(&ctx, &a),
        Command::Switch(a) => switch::run(&ctx, &a),
        Command::RegistryDump(a) => {
            let out = out_dir(&a.out)?;
            out.write("registry.json", ctx.registry.dump().as_bytes()).or_data()?;
            ctx.finish(&out, "registry-dump", &a, None, Vec::new(), Vec::new(), None)
        }
        Command::Bench(a) => bench::run(&ctx, &a),
    }
}
