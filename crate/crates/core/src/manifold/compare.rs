use serde::{Deserialize, Serialize};

use super::embed::{embed_2d, EmbedMethod};
use super::stats::{iqr, ks_two_sample, mean, sample_std, spearman, KsResult};
use super::strategy::mean_auc_ratio;
use super::{ManifoldError, PlayerFeatureVector, RATIO_EPSILON};

/// Features whose KS p-value falls below this count as different.
pub const SIGNIFICANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisSpread {
    pub std: f64,
    pub iqr: f64,
}

impl AxisSpread {
    fn of(xs: &[f64]) -> Self {
        AxisSpread {
            std: sample_std(xs),
            iqr: iqr(xs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureComparison {
    pub feature: usize,
    pub ks: KsResult,
    pub spread_a: AxisSpread,
    pub spread_b: AxisSpread,
    pub std_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub size_a: usize,
    pub size_b: usize,
    pub method: EmbedMethod,
    pub features: Vec<FeatureComparison>,
    /// Spread of each population along the two joint embedding axes.
    pub axis_spread_a: [AxisSpread; 2],
    pub axis_spread_b: [AxisSpread; 2],
    /// `std_a / std_b` per joint axis (smoothed).
    pub axis_std_ratio: [f64; 2],
    pub mean_axis_std_ratio: f64,
    /// Joint axis whose coordinates have the larger |Spearman rho| with the
    /// players' mean AUC ratios (axis 0 on ties).
    pub behavior_axis: usize,
    pub behavior_axis_rho: [f64; 2],
    pub fraction_features_different: f64,
}

impl AlignmentReport {
    pub fn behavior_axis_std_ratio(&self) -> f64 {
        self.axis_std_ratio[self.behavior_axis]
    }
}

fn ratio(a: f64, b: f64) -> f64 {
    (a + RATIO_EPSILON) / (b + RATIO_EPSILON)
}

/// Compares two populations on a joint linear embedding.
pub fn compare_populations(
    a: &[PlayerFeatureVector],
    b: &[PlayerFeatureVector],
    seed: u64,
) -> Result<AlignmentReport, ManifoldError> {
    compare_populations_with(a, b, EmbedMethod::Linear, seed)
}

/// Compares two populations. One embedding is fit on the union so both
/// populations are measured along the same axes.
pub fn compare_populations_with(
    a: &[PlayerFeatureVector],
    b: &[PlayerFeatureVector],
    method: EmbedMethod,
    seed: u64,
) -> Result<AlignmentReport, ManifoldError> {
    if a.is_empty() || b.is_empty() {
        return Err(ManifoldError::EmptyPopulation);
    }
    let theme = a[0].theme;
    let width = a[0].values.len();
    if a.iter().chain(b).any(|v| v.theme != theme || v.values.len() != width) {
        return Err(ManifoldError::LayoutMismatch);
    }

    let rows: Vec<Vec<f64>> = a.iter().chain(b).map(|v| v.values.clone()).collect();
    let embedding = embed_2d(&rows, method, seed)?;
    let (coords_a, coords_b) = embedding.coords.split_at(a.len());
    let axis = |coords: &[[f64; 2]], k: usize| coords.iter().map(|p| p[k]).collect::<Vec<_>>();
    let axis_spread_a = [AxisSpread::of(&axis(coords_a, 0)), AxisSpread::of(&axis(coords_a, 1))];
    let axis_spread_b = [AxisSpread::of(&axis(coords_b, 0)), AxisSpread::of(&axis(coords_b, 1))];
    let axis_std_ratio = [
        ratio(axis_spread_a[0].std, axis_spread_b[0].std),
        ratio(axis_spread_a[1].std, axis_spread_b[1].std),
    ];

    let ratios: Vec<f64> = a.iter().chain(b).map(mean_auc_ratio).collect();
    let behavior_axis_rho = [0, 1].map(|k| {
        let rho = spearman(&axis(&embedding.coords, k), &ratios);
        if rho.is_finite() { rho } else { 0.0 }
    });
    let behavior_axis = usize::from(behavior_axis_rho[1].abs() > behavior_axis_rho[0].abs());

    let features: Vec<FeatureComparison> = (0..width)
        .map(|j| {
            let col_a: Vec<f64> = a.iter().map(|v| v.values[j]).collect();
            let col_b: Vec<f64> = b.iter().map(|v| v.values[j]).collect();
            let spread_a = AxisSpread::of(&col_a);
            let spread_b = AxisSpread::of(&col_b);
            FeatureComparison {
                feature: j,
                ks: ks_two_sample(&col_a, &col_b),
                spread_a,
                spread_b,
                std_ratio: ratio(spread_a.std, spread_b.std),
            }
        })
        .collect();
    let different = features
        .iter()
        .filter(|f| f.ks.p_value < SIGNIFICANCE)
        .count();

    Ok(AlignmentReport {
        size_a: a.len(),
        size_b: b.len(),
        method,
        fraction_features_different: different as f64 / width.max(1) as f64,
        features,
        axis_spread_a,
        axis_spread_b,
        mean_axis_std_ratio: mean(&axis_std_ratio),
        axis_std_ratio,
        behavior_axis,
        behavior_axis_rho,
    })
}
