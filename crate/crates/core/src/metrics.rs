//! Full-reference quality metrics: PSNR and single-scale SSIM.

use serde::{Deserialize, Serialize};

use crate::enhance::{compute_histogram, gaussian_kernel, histogram_distance, HistogramMetric};
use crate::error::{Error, Result};
use crate::image::Image;

/// PSNR reported for identical images.
pub const PSNR_CAP_DB: f64 = 99.0;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        PSNR_CAP_DB
    } else {
        (10.0 * (1.0 / mse).log10()).min(PSNR_CAP_DB)
    }
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

/// Peak signal-to-noise ratio in dB with peak 1, over all samples.
pub fn psnr(x: &Image, y: &Image) -> Result<f64> {
    x.ensure_same_shape(y)?;
    Ok(psnr_from_mse(mse(x.data(), y.data())))
}

/// Valid-region separable filtering of one plane.
fn filter_valid(plane: &[f64], h: usize, w: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let (oh, ow) = (h - n + 1, w - n + 1);
    let mut rows = vec![0.0; h * ow];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = (0..n).map(|t| k[t] * plane[y * w + x + t]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..n).map(|t| k[t] * rows[(y + t) * ow + x]).sum();
        }
    }
    out
}

fn ssim_plane(a: &[f64], b: &[f64], h: usize, w: usize, kernel: &[f64]) -> f64 {
    let sq = |p: &[f64]| p.iter().map(|v| v * v).collect::<Vec<_>>();
    let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let mu_a = filter_valid(a, h, w, kernel);
    let mu_b = filter_valid(b, h, w, kernel);
    let e_aa = filter_valid(&sq(a), h, w, kernel);
    let e_bb = filter_valid(&sq(b), h, w, kernel);
    let e_ab = filter_valid(&prod, h, w, kernel);
    let total: f64 = (0..mu_a.len())
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let var_a = e_aa[i] - ma * ma;
            let var_b = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            ((2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2))
                / ((ma * ma + mb * mb + SSIM_C1) * (var_a + var_b + SSIM_C2))
        })
        .sum();
    total / mu_a.len() as f64
}

fn check_ssim_size(x: &Image) -> Result<()> {
    if x.height().min(x.width()) < SSIM_WINDOW {
        return Err(Error::invalid(format!(
            "SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {}x{}",
            x.height(),
            x.width()
        )));
    }
    Ok(())
}

fn ssim_per_channel(x: &Image, y: &Image) -> Result<Vec<f64>> {
    x.ensure_same_shape(y)?;
    check_ssim_size(x)?;
    let kernel = gaussian_kernel(SSIM_WINDOW, SSIM_SIGMA);
    Ok((0..x.channels())
        .map(|c| ssim_plane(x.plane(c), y.plane(c), x.height(), x.width(), &kernel))
        .collect())
}

/// Mean SSIM (11×11 Gaussian window, σ = 1.5, K1 = 0.01, K2 = 0.03),
/// averaged over channels.
pub fn ssim(x: &Image, y: &Image) -> Result<f64> {
    let per = ssim_per_channel(x, y)?;
    Ok(per.iter().sum::<f64>() / per.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelQuality {
    pub psnr_db: f64,
    pub ssim: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub psnr_db: f64,
    pub ssim: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_channel: Option<Vec<ChannelQuality>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram_distance: Option<f64>,
}

impl QualityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is always serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Report(e.to_string()))
    }

    /// Attaches the histogram distance between prediction and ground truth.
    pub fn with_histogram_distance(mut self, pred: &Image, gt: &Image, metric: HistogramMetric) -> Result<Self> {
        let d = histogram_distance(&compute_histogram(pred), &compute_histogram(gt), metric)?;
        self.histogram_distance = Some(d);
        Ok(self)
    }
}

/// PSNR and SSIM of `pred` against `gt`, with a per-channel breakdown for
/// colour images.
pub fn quality_report(pred: &Image, gt: &Image) -> Result<QualityReport> {
    let ssim_channels = ssim_per_channel(pred, gt)?;
    let per_channel = (pred.channels() > 1).then(|| {
        ssim_channels
            .iter()
            .enumerate()
            .map(|(c, &s)| ChannelQuality {
                psnr_db: psnr_from_mse(mse(pred.plane(c), gt.plane(c))),
                ssim: s,
            })
            .collect()
    });
    Ok(QualityReport {
        psnr_db: psnr(pred, gt)?,
        ssim: ssim_channels.iter().sum::<f64>() / ssim_channels.len() as f64,
        per_channel,
        histogram_distance: None,
    })
}
