//! Two-dimensional embeddings of standardized feature matrices.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ManifoldError;

pub const MIN_EMBED_ROWS: usize = 3;

/// Eigenvalues below this fraction of the leading one are treated as zero.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedMethod {
    /// Top two principal components of the z-scored matrix.
    #[default]
    Linear,
    /// Seeded neighbor-graph layout initialized from the linear embedding.
    Neighbor,
}

impl std::str::FromStr for EmbedMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(EmbedMethod::Linear),
            "neighbor" => Ok(EmbedMethod::Neighbor),
            other => Err(format!("unknown embedding method {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    /// One point per input row, in input order.
    pub coords: Vec<[f64; 2]>,
    /// Input columns that survived the zero-variance filter.
    pub kept_columns: Vec<usize>,
    /// Principal-axis loadings over `kept_columns` (linear part).
    pub loadings: [Vec<f64>; 2],
    /// Variance of the z-scored data along each principal axis.
    pub axis_variance: [f64; 2],
}

/// Column-wise z-scores with constant columns dropped.
pub fn standardize(rows: &[Vec<f64>]) -> Result<(DMatrix<f64>, Vec<usize>), ManifoldError> {
    let n = rows.len();
    let width = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != width) {
        return Err(ManifoldError::RaggedMatrix);
    }
    let mut kept = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for j in 0..width {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let sd = super::stats::sample_std(&col);
        if sd == 0.0 || !sd.is_finite() {
            continue;
        }
        let m = super::stats::mean(&col);
        columns.push(col.iter().map(|x| (x - m) / sd).collect());
        kept.push(j);
    }
    if kept.is_empty() {
        return Err(ManifoldError::ZeroVarianceAllColumns);
    }
    let z = DMatrix::from_fn(n, kept.len(), |i, j| columns[j][i]);
    Ok((z, kept))
}

/// Top-two principal axes of a centered matrix, each sign-fixed so its
/// largest-magnitude loading is positive.
fn principal_axes(z: &DMatrix<f64>) -> ([Vec<f64>; 2], [f64; 2]) {
    let n = z.nrows();
    let d = z.ncols();
    let cov = (z.transpose() * z) / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let lead = eig.eigenvalues[order[0]].max(0.0);
    let mut axes: [Vec<f64>; 2] = [vec![0.0; d], vec![0.0; d]];
    let mut variance = [0.0; 2];
    for (k, slot) in axes.iter_mut().enumerate() {
        let Some(&col) = order.get(k) else { break };
        let lambda = eig.eigenvalues[col];
        if lambda <= RANK_TOLERANCE * lead || lambda <= 0.0 {
            continue;
        }
        let mut v: Vec<f64> = eig.eigenvectors.column(col).iter().copied().collect();
        let pivot = v
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(bi, bv), (i, &x)| {
                if x.abs() > bv.abs() {
                    (i, x)
                } else {
                    (bi, bv)
                }
            })
            .0;
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        *slot = v;
        variance[k] = lambda;
    }
    (axes, variance)
}

fn project(z: &DMatrix<f64>, axes: &[Vec<f64>; 2]) -> Vec<[f64; 2]> {
    (0..z.nrows())
        .map(|i| {
            let row = z.row(i);
            let mut p = [0.0; 2];
            for (k, axis) in axes.iter().enumerate() {
                p[k] = row.iter().zip(axis).map(|(a, b)| a * b).sum();
            }
            p
        })
        .collect()
}

/// Embeds each row of `rows` in 2D. The linear method ignores `seed`.
pub fn embed_2d(
    rows: &[Vec<f64>],
    method: EmbedMethod,
    seed: u64,
) -> Result<Embedding, ManifoldError> {
    if rows.len() < MIN_EMBED_ROWS {
        return Err(ManifoldError::TooFewPlayers {
            have: rows.len(),
            need: MIN_EMBED_ROWS,
        });
    }
    let (z, kept) = standardize(rows)?;
    let (loadings, axis_variance) = principal_axes(&z);
    let linear = project(&z, &loadings);
    let coords = match method {
        EmbedMethod::Linear => linear,
        EmbedMethod::Neighbor => neighbor_layout(&z, &linear, seed),
    };
    Ok(Embedding {
        coords,
        kept_columns: kept,
        loadings,
        axis_variance,
    })
}

const NEIGHBORS: usize = 10;
const EPOCHS: usize = 200;
const NEGATIVE_SAMPLES: usize = 5;

/// Attraction along a symmetric k-nearest-neighbor graph and repulsion from
/// sampled non-neighbors, with a Cauchy similarity kernel in the output.
fn neighbor_layout(z: &DMatrix<f64>, init: &[[f64; 2]], seed: u64) -> Vec<[f64; 2]> {
    let n = z.nrows();
    let k = NEIGHBORS.min(n - 1);
    let dist = |i: usize, j: usize| (z.row(i) - z.row(j)).norm();

    let mut edges = Vec::new();
    for i in 0..n {
        let mut others: Vec<(f64, usize)> = (0..n).filter(|&j| j != i).map(|j| (dist(i, j), j)).collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in &others[..k] {
            edges.push((i.min(j), i.max(j)));
        }
    }
    edges.sort_unstable();
    edges.dedup();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // rescale the linear start to unit spread and break exact ties
    let spread = init
        .iter()
        .flat_map(|p| p.iter().map(|v| v.abs()))
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let mut y: Vec<[f64; 2]> = init
        .iter()
        .map(|p| {
            [
                5.0 * p[0] / spread + rng.random_range(-1e-3..1e-3),
                5.0 * p[1] / spread + rng.random_range(-1e-3..1e-3),
            ]
        })
        .collect();

    let clip = |g: f64| g.clamp(-4.0, 4.0);
    for epoch in 0..EPOCHS {
        let lr = 1.0 - epoch as f64 / EPOCHS as f64;
        for &(i, j) in &edges {
            let d = [y[i][0] - y[j][0], y[i][1] - y[j][1]];
            let d2 = d[0] * d[0] + d[1] * d[1];
            let coeff = -2.0 / (1.0 + d2);
            for c in 0..2 {
                let g = clip(coeff * d[c]) * lr;
                y[i][c] += g;
                y[j][c] -= g;
            }
            for _ in 0..NEGATIVE_SAMPLES {
                let m = rng.random_range(0..n);
                if m == i || m == j {
                    continue;
                }
                let d = [y[i][0] - y[m][0], y[i][1] - y[m][1]];
                let d2 = d[0] * d[0] + d[1] * d[1];
                let coeff = 2.0 / ((1e-3 + d2) * (1.0 + d2));
                for c in 0..2 {
                    y[i][c] += clip(coeff * d[c]) * lr;
                }
            }
        }
    }
    y
}
