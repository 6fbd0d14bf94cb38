use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::sequence::quantize;

pub const HISTOGRAM_BINS: usize = 256;

const CHI2_EPS: f64 = 1e-12;

/// Normalized 256-bin byte histogram, one row per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    bins: Vec<[f64; HISTOGRAM_BINS]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HistogramMetric {
    L1,
    Chi2,
    /// Earth mover's distance along the byte axis, in byte levels.
    #[default]
    Wasserstein1,
}

impl std::str::FromStr for HistogramMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(HistogramMetric::L1),
            "chi2" => Ok(HistogramMetric::Chi2),
            "wasserstein1" | "w1" | "emd" => Ok(HistogramMetric::Wasserstein1),
            other => Err(Error::invalid(format!("unknown histogram metric {other:?}"))),
        }
    }
}

impl Histogram {
    /// Builds a histogram from per-channel bin masses, checking that each
    /// channel is a probability distribution.
    pub fn from_channels(bins: Vec<[f64; HISTOGRAM_BINS]>) -> Result<Self> {
        if bins.len() != 1 && bins.len() != 3 {
            return Err(Error::invalid(format!("histograms have 1 or 3 channels, got {}", bins.len())));
        }
        for (c, ch) in bins.iter().enumerate() {
            if ch.iter().any(|&b| !(b >= 0.0) || !b.is_finite()) {
                return Err(Error::invalid(format!("channel {c} has a negative or non-finite bin")));
            }
            let sum: f64 = ch.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("channel {c} sums to {sum}, expected 1")));
            }
        }
        Ok(Histogram { bins })
    }

    pub fn channel_count(&self) -> usize {
        self.bins.len()
    }

    pub fn channel(&self, c: usize) -> &[f64; HISTOGRAM_BINS] {
        &self.bins[c]
    }

    /// One line per channel, 256 whitespace-separated values.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for ch in &self.bins {
            let line: Vec<String> = ch.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut bins = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let values = line
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::invalid(format!("histogram line {}: {e}", i + 1)))?;
            let arr: [f64; HISTOGRAM_BINS] = values.try_into().map_err(|v: Vec<f64>| {
                Error::invalid(format!("histogram line {}: expected {HISTOGRAM_BINS} values, got {}", i + 1, v.len()))
            })?;
            bins.push(arr);
        }
        Histogram::from_channels(bins)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Histogram::from_text(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// Per-channel histogram of quantized bytes, normalized by pixel count.
pub fn compute_histogram(image: &Image) -> Histogram {
    let n = image.plane_len() as f64;
    let bins = (0..image.channels())
        .map(|c| {
            let mut counts = [0usize; HISTOGRAM_BINS];
            for &v in image.plane(c) {
                counts[quantize(v) as usize] += 1;
            }
            counts.map(|k| k as f64 / n)
        })
        .collect();
    Histogram { bins }
}

/// Channel-averaged distance between two histograms.
pub fn histogram_distance(a: &Histogram, b: &Histogram, metric: HistogramMetric) -> Result<f64> {
    if a.channel_count() != b.channel_count() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} histogram channels", a.channel_count()),
            found: format!("{} histogram channels", b.channel_count()),
        });
    }
    let total: f64 = a
        .bins
        .iter()
        .zip(&b.bins)
        .map(|(x, y)| channel_distance(x, y, metric))
        .sum();
    Ok(total / a.channel_count() as f64)
}

fn channel_distance(a: &[f64; HISTOGRAM_BINS], b: &[f64; HISTOGRAM_BINS], metric: HistogramMetric) -> f64 {
    match metric {
        HistogramMetric::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        HistogramMetric::Chi2 => a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y) / (x + y + CHI2_EPS))
            .sum(),
        HistogramMetric::Wasserstein1 => {
            let (mut cdf_a, mut cdf_b, mut acc) = (0.0, 0.0, 0.0);
            for (x, y) in a.iter().zip(b) {
                cdf_a += x;
                cdf_b += y;
                acc += (cdf_a - cdf_b).abs();
            }
            acc
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const METRICS: [HistogramMetric; 3] = [HistogramMetric::L1, HistogramMetric::Chi2, HistogramMetric::Wasserstein1];

    fn delta(bin: usize) -> Histogram {
        let mut ch = [0.0; HISTOGRAM_BINS];
        ch[bin] = 1.0;
        Histogram::from_channels(vec![ch]).unwrap()
    }

    fn random_hist(rng: &mut ChaCha8Rng, channels: usize) -> Histogram {
        let bins = (0..channels)
            .map(|_| {
                let mut ch = [0.0; HISTOGRAM_BINS];
                ch.iter_mut().for_each(|b| *b = rng.random::<f64>());
                let s: f64 = ch.iter().sum();
                ch.map(|b| b / s)
            })
            .collect();
        Histogram::from_channels(bins).unwrap()
    }

    #[test]
    fn constant_image_single_bin() {
        let img = Image::filled(4, 4, 3, 7.0 / 255.0).unwrap();
        let h = compute_histogram(&img);
        for c in 0..3 {
            assert_eq!(h.channel(c)[7], 1.0);
            assert_eq!(h.channel(c).iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn two_tone_image() {
        let img = Image::from_fn(4, 4, 1, |_, y, _| if y < 2 { 0.0 } else { 1.0 }).unwrap();
        let h = compute_histogram(&img);
        assert_eq!(h.channel(0)[0], 0.5);
        assert_eq!(h.channel(0)[255], 0.5);
    }

    #[test]
    fn matches_counting_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let img = Image::from_fn(23, 19, 3, |_, _, _| rng.random::<f64>()).unwrap();
        let h = compute_histogram(&img);
        for c in 0..3 {
            let mut counts = vec![0u32; 256];
            for y in 0..23 {
                for x in 0..19 {
                    let b = (img.get(c, y, x) * 255.0).round() as usize;
                    counts[b] += 1;
                }
            }
            for (bin, &k) in counts.iter().enumerate() {
                assert_eq!(h.channel(c)[bin], k as f64 / (23.0 * 19.0));
            }
        }
    }

    #[test]
    fn extreme_deltas() {
        let (a, b) = (delta(0), delta(255));
        assert_eq!(histogram_distance(&a, &b, HistogramMetric::Wasserstein1).unwrap(), 255.0);
        assert_eq!(histogram_distance(&a, &b, HistogramMetric::L1).unwrap(), 2.0);
    }

    #[test]
    fn wasserstein_matches_cumsum_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let (a, b) = (random_hist(&mut rng, 3), random_hist(&mut rng, 3));
            let mut oracle = 0.0;
            for c in 0..3 {
                let ca: Vec<f64> = a.channel(c).iter().scan(0.0, |s, &v| { *s += v; Some(*s) }).collect();
                let cb: Vec<f64> = b.channel(c).iter().scan(0.0, |s, &v| { *s += v; Some(*s) }).collect();
                oracle += ca.iter().zip(&cb).map(|(x, y)| (x - y).abs()).sum::<f64>();
            }
            oracle /= 3.0;
            let got = histogram_distance(&a, &b, HistogramMetric::Wasserstein1).unwrap();
            assert!((got - oracle).abs() < 1e-10);
        }
    }

    #[test]
    fn channel_mismatch_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (a, b) = (random_hist(&mut rng, 1), random_hist(&mut rng, 3));
        assert!(histogram_distance(&a, &b, HistogramMetric::L1).is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = random_hist(&mut rng, 3);
        let text = h.to_text();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().all(|l| l.split_whitespace().count() == 256));
        assert_eq!(Histogram::from_text(&text).unwrap(), h);
        assert!(Histogram::from_text("1 2 3\n").is_err());
    }

    #[test]
    fn rejects_unnormalized() {
        assert!(Histogram::from_channels(vec![[0.0; HISTOGRAM_BINS]]).is_err());
    }

    proptest! {
        #[test]
        fn metric_axioms(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (a, b) = (random_hist(&mut rng, 3), random_hist(&mut rng, 3));
            for m in METRICS {
                let ab = histogram_distance(&a, &b, m).unwrap();
                let ba = histogram_distance(&b, &a, m).unwrap();
                prop_assert!((ab - ba).abs() < 1e-12);
                prop_assert!(ab >= 0.0);
                prop_assert_eq!(histogram_distance(&a, &a, m).unwrap(), 0.0);
            }
            prop_assert!(histogram_distance(&a, &b, HistogramMetric::L1).unwrap() <= 2.0 + 1e-12);
        }
    }
}
