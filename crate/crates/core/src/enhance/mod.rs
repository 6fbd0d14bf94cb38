//! Contrast and sharpness adjustment of a pseudo ground truth.
//!
//! Gamma correction works on the unit range directly: `v ↦ v^γ` is the
//! 8-bit rule `(I/255)^γ · 255` with the scaling removed. Sharpening is an
//! unsharp mask against a Gaussian blur whose σ follows the kernel size
//! (`σ = k/6`, so the kernel spans ±3σ).

mod histogram;
mod tune;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

pub use histogram::{compute_histogram, histogram_distance, Histogram, HistogramMetric, HISTOGRAM_BINS};
pub use tune::{auto_tune, TuneGrid, TuneResult};

/// How the blurred copy is combined with the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SharpenMode {
    /// `I − w·G(I)`, which also darkens by a factor `1 − w` on flat regions.
    Literal,
    /// `(1 + w)·I − w·G(I)`.
    #[default]
    Standard,
}

impl std::str::FromStr for SharpenMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(SharpenMode::Literal),
            "standard" => Ok(SharpenMode::Standard),
            other => Err(Error::invalid(format!("unknown sharpen mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnhanceParams {
    pub gamma: f64,
    pub weight: f64,
    pub kernel_size: usize,
    pub sharpen_mode: SharpenMode,
}

impl Default for EnhanceParams {
    fn default() -> Self {
        EnhanceParams::identity()
    }
}

impl EnhanceParams {
    /// `γ = 1, w = 0, k = 1`: leaves every image unchanged.
    pub fn identity() -> Self {
        EnhanceParams {
            gamma: 1.0,
            weight: 0.0,
            kernel_size: 1,
            sharpen_mode: SharpenMode::Standard,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_gamma(self.gamma)?;
        if !(0.0..=1.0).contains(&self.weight) {
            return Err(Error::invalid(format!("sharpen weight must lie in [0, 1], got {}", self.weight)));
        }
        check_kernel(self.kernel_size)
    }

    /// Blur σ implied by the kernel size.
    pub fn sigma(&self) -> f64 {
        self.kernel_size as f64 / 6.0
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("gamma must be positive, got {gamma}")))
    }
}

fn check_kernel(k: usize) -> Result<()> {
    if k % 2 == 1 {
        Ok(())
    } else {
        Err(Error::invalid(format!("kernel size must be odd and positive, got {k}")))
    }
}

/// Power-law contrast adjustment `v ↦ v^γ`.
pub fn gamma_correct(image: &Image, gamma: f64) -> Result<Image> {
    check_gamma(gamma)?;
    if gamma == 1.0 {
        return Ok(image.clone());
    }
    Ok(image.map(|v| v.powf(gamma)))
}

/// Normalized 1-D Gaussian sampled at `size` integer offsets around 0.
pub fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    let r = (size / 2) as f64;
    let taps: Vec<f64> = (0..size)
        .map(|i| {
            let x = i as f64 - r;
            (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// Symmetric reflection (`… 2 1 0 | 0 1 2 …`), folded for arbitrarily
/// distant indices.
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut j = i.rem_euclid(period);
    if j >= n {
        j = period - 1 - j;
    }
    j as usize
}

fn convolve_rows(plane: &[f64], h: usize, w: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let mut out = vec![0.0; plane.len()];
    for y in 0..h {
        let row = &plane[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (t, &k) in kernel.iter().enumerate() {
                acc += k * row[reflect(x as isize + t as isize - r, w)];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

fn convolve_cols(plane: &[f64], h: usize, w: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let mut out = vec![0.0; plane.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (t, &k) in kernel.iter().enumerate() {
                acc += k * plane[reflect(y as isize + t as isize - r, h) * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Separable Gaussian blur with reflected borders.
pub fn gaussian_blur(image: &Image, kernel_size: usize, sigma: f64) -> Result<Image> {
    check_kernel(kernel_size)?;
    if !(sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    if kernel_size == 1 {
        return Ok(image.clone());
    }
    let kernel = gaussian_kernel(kernel_size, sigma);
    let (h, w) = (image.height(), image.width());
    let mut data = Vec::with_capacity(image.data().len());
    for c in 0..image.channels() {
        let rows = convolve_rows(image.plane(c), h, w, &kernel);
        data.extend(convolve_cols(&rows, h, w, &kernel).into_iter().map(|v| v.clamp(0.0, 1.0)));
    }
    Ok(image.with_data(data))
}

/// Unsharp mask; output clamped to `[0, 1]`.
pub fn unsharp_mask(image: &Image, params: &EnhanceParams) -> Result<Image> {
    params.validate()?;
    let w = params.weight;
    if w == 0.0 && params.sharpen_mode == SharpenMode::Standard {
        return Ok(image.clone());
    }
    let blurred = gaussian_blur(image, params.kernel_size, params.sigma())?;
    let data = image
        .data()
        .iter()
        .zip(blurred.data())
        .map(|(&v, &g)| {
            let out = match params.sharpen_mode {
                SharpenMode::Literal => v - w * g,
                SharpenMode::Standard => (1.0 + w) * v - w * g,
            };
            out.clamp(0.0, 1.0)
        })
        .collect();
    Ok(image.with_data(data))
}

/// Gamma correction followed by sharpening.
pub fn enhance(image: &Image, params: &EnhanceParams) -> Result<Image> {
    params.validate()?;
    let contrasted = gamma_correct(image, params.gamma)?;
    unsharp_mask(&contrasted, params)
}
