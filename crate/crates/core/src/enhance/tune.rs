use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::histogram::{compute_histogram, histogram_distance, Histogram, HistogramMetric};
use super::{enhance, EnhanceParams, SharpenMode};
use crate::error::{Error, Result};
use crate::image::Image;

/// Cartesian grid of enhancement parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneGrid {
    pub gammas: Vec<f64>,
    pub weights: Vec<f64>,
    pub kernel_sizes: Vec<usize>,
    pub sharpen_mode: SharpenMode,
}

impl Default for TuneGrid {
    /// γ ∈ {0.6, 0.7, …, 1.4}, w ∈ {0, 0.25, 0.5}, k ∈ {1, 3, 5, 7, 9}.
    fn default() -> Self {
        TuneGrid {
            gammas: (6..=14).map(|i| i as f64 / 10.0).collect(),
            weights: vec![0.0, 0.25, 0.5],
            kernel_sizes: vec![1, 3, 5, 7, 9],
            sharpen_mode: SharpenMode::Standard,
        }
    }
}

impl TuneGrid {
    pub fn points(&self) -> Vec<EnhanceParams> {
        let mut out = Vec::with_capacity(self.len());
        for &gamma in &self.gammas {
            for &weight in &self.weights {
                for &kernel_size in &self.kernel_sizes {
                    out.push(EnhanceParams {
                        gamma,
                        weight,
                        kernel_size,
                        sharpen_mode: self.sharpen_mode,
                    });
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.gammas.len() * self.weights.len() * self.kernel_sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub params: EnhanceParams,
    pub distance: f64,
}

/// Lexicographic order on (distance, |γ − 1|, w, k).
fn rank(a: &TuneResult, b: &TuneResult) -> Ordering {
    a.distance
        .total_cmp(&b.distance)
        .then((a.params.gamma - 1.0).abs().total_cmp(&(b.params.gamma - 1.0).abs()))
        .then(a.params.weight.total_cmp(&b.params.weight))
        .then(a.params.kernel_size.cmp(&b.params.kernel_size))
}

/// Exhaustive search for the parameters whose enhanced output histogram is
/// closest to `reference`. Ties go to the point nearest the identity.
pub fn auto_tune(image: &Image, reference: &Histogram, grid: &TuneGrid, metric: HistogramMetric) -> Result<TuneResult> {
    if grid.is_empty() {
        return Err(Error::invalid("enhancement grid is empty"));
    }
    if reference.channel_count() != image.channels() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} histogram channels", image.channels()),
            found: format!("{} histogram channels", reference.channel_count()),
        });
    }
    let evaluated = grid
        .points()
        .into_par_iter()
        .map(|params| {
            let out = enhance(image, &params)?;
            let distance = histogram_distance(&compute_histogram(&out), reference, metric)?;
            Ok(TuneResult { params, distance })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(evaluated.into_iter().min_by(rank).expect("grid is non-empty"))
}
