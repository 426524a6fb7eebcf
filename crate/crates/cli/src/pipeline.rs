use std::path::PathBuf;

use anyhow::Context;
use rayon::prelude::*;
use tasksets_core::simulator::{simulate, SimConfig};
use tasksets_core::telemetry::Trajectory;

use crate::error::{Classify, Failure, Outcome};
use crate::io::{load_trajectory, FileDigest};

pub fn pool(jobs: usize) -> Outcome<rayon::ThreadPool> {
    if jobs == 0 {
        return Err(Failure::config("--jobs must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("starting worker threads")
        .or_config()
}

/// Loads every file on up to `jobs` threads and folds it into `T`. `merge`
/// must be associative and insensitive to order; digests come back sorted
/// by path.
pub fn fold_files<T, I, F, M>(
    files: &[PathBuf],
    jobs: usize,
    init: I,
    fold: F,
    merge: M,
) -> Outcome<(T, Vec<FileDigest>)>
where
    T: Send,
    I: Fn() -> T + Sync + Send,
    F: Fn(&mut T, &Trajectory) -> anyhow::Result<()> + Sync + Send,
    M: Fn(&mut T, T) -> anyhow::Result<()> + Sync + Send,
{
    let pool = pool(jobs)?;
    let (acc, mut digests) = pool
        .install(|| {
            files
                .par_iter()
                .try_fold(
                    || (init(), Vec::new()),
                    |(mut acc, mut digests), path| -> anyhow::Result<_> {
                        let (t, digest) = load_trajectory(path)?;
                        fold(&mut acc, &t).with_context(|| format!("analyzing {}", path.display()))?;
                        log::debug!("folded {}", path.display());
                        digests.push(digest);
                        Ok((acc, digests))
                    },
                )
                .try_reduce(
                    || (init(), Vec::new()),
                    |(mut a, mut da), (b, db)| {
                        merge(&mut a, b)?;
                        da.extend(db);
                        Ok((a, da))
                    },
                )
        })
        .or_data()?;
    digests.sort();
    Ok((acc, digests))
}

/// Like [`fold_files`], but each game is simulated in memory instead of
/// read from disk.
pub fn fold_simulated<T, I, F, M>(games: &[SimConfig], jobs: usize, init: I, fold: F, merge: M) -> Outcome<T>
where
    T: Send,
    I: Fn() -> T + Sync + Send,
    F: Fn(&mut T, &Trajectory) -> anyhow::Result<()> + Sync + Send,
    M: Fn(&mut T, T) -> anyhow::Result<()> + Sync + Send,
{
    pool(jobs)?
        .install(|| {
            games
                .par_iter()
                .try_fold(&init, |mut acc, cfg| -> anyhow::Result<T> {
                    let t = simulate(cfg).with_context(|| format!("simulating {}", cfg.game_id))?;
                    fold(&mut acc, &t).with_context(|| format!("analyzing {}", cfg.game_id))?;
                    Ok(acc)
                })
                .try_reduce(&init, |mut a, b| {
                    merge(&mut a, b)?;
                    Ok(a)
                })
        })
        .or_data()
}
