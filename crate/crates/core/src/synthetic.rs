//! Procedural scenes and rain streaks for experiments with known ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::sequence::FrameSequence;

/// Streak rendering parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RainParams {
    /// Brightness added on a streak pixel (result clamped to 1).
    pub intensity: f64,
    /// Upper bound on the fraction of pixels covered per frame.
    pub max_coverage: f64,
    /// Streak length range in pixels.
    pub length: (f64, f64),
    /// Maximum deviation from vertical, radians.
    pub max_tilt: f64,
}

impl Default for RainParams {
    fn default() -> Self {
        RainParams {
            intensity: 0.4,
            max_coverage: 0.08,
            length: (4.0, 14.0),
            max_tilt: 0.35,
        }
    }
}

/// A deterministic photo-like test scene: sky gradient, block "buildings"
/// with window texture, and a band of fine foliage-like texture.
pub fn clean_scene(height: usize, width: usize, channels: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon = rng.random_range(0.35..0.55) * height as f64;
    let tint: [f64; 3] = [rng.random_range(0.85..1.0), rng.random_range(0.85..1.0), rng.random_range(0.85..1.0)];

    struct Block {
        x0: f64,
        x1: f64,
        top: f64,
        tone: f64,
        window: usize,
    }
    let blocks: Vec<Block> = (0..rng.random_range(3..6))
        .map(|_| {
            let x0 = rng.random_range(0.0..0.8) * width as f64;
            Block {
                x0,
                x1: x0 + rng.random_range(0.15..0.4) * width as f64,
                top: rng.random_range(0.15..0.6) * height as f64,
                tone: rng.random_range(0.25..0.7),
                window: rng.random_range(3..6),
            }
        })
        .collect();
    let freq = (rng.random_range(0.6..1.2), rng.random_range(0.4..0.9));
    let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);

    Image::from_fn(height, width, channels, |c, y, x| {
        let (yf, xf) = (y as f64, x as f64);
        let mut v = 0.75 - 0.25 * yf / height as f64;
        for b in &blocks {
            if xf >= b.x0 && xf < b.x1 && yf >= b.top {
                v = b.tone;
                if (y / b.window) % 2 == 0 && (x / b.window) % 2 == 0 {
                    v += 0.12;
                }
            }
        }
        if yf > horizon + 0.3 * height as f64 {
            let t = (freq.0 * xf + phase).sin() * (freq.1 * yf).cos();
            v = 0.35 + 0.12 * t + 0.05 * ((xf + yf) * 0.3).sin();
        }
        let tone = if channels == 3 { tint[c] } else { 1.0 };
        (0.05 + 0.85 * v * tone).clamp(0.0, 1.0)
    })
    .expect("dimensions checked by caller")
}

/// Adds bright random line segments covering at most
/// `params.max_coverage` of the pixels.
pub fn add_rain_streaks(clean: &Image, params: &RainParams, rng: &mut impl Rng) -> Image {
    let (h, w) = (clean.height(), clean.width());
    let budget = ((params.max_coverage * (h * w) as f64).floor() as usize)
        .min(h * w);
    let target = (budget as f64 * rng.random_range(0.6..=1.0)).floor() as usize;
    let mut mask = vec![false; h * w];
    let mut covered = 0;
    let mut attempts = 0;
    while covered < target && attempts < 10_000 {
        attempts += 1;
        let len = rng.random_range(params.length.0..=params.length.1);
        let tilt = rng.random_range(-params.max_tilt..=params.max_tilt);
        let (dx, dy) = (tilt.sin(), tilt.cos());
        let x0 = rng.random_range(0.0..w as f64);
        let y0 = rng.random_range(-len..h as f64);
        let steps = len.ceil() as usize;
        for s in 0..=steps {
            let t = s as f64;
            let (x, y) = ((x0 + t * dx).floor(), (y0 + t * dy).floor());
            if x < 0.0 || y < 0.0 || x >= w as f64 || y >= h as f64 {
                continue;
            }
            let idx = y as usize * w + x as usize;
            if !mask[idx] {
                mask[idx] = true;
                covered += 1;
                if covered >= target {
                    break;
                }
            }
        }
    }
    let n = h * w;
    let data = clean
        .data()
        .iter()
        .enumerate()
        .map(|(i, &v)| if mask[i % n] { (v + params.intensity).min(1.0) } else { v })
        .collect();
    clean.with_data(data)
}

/// `frames` copies of `clean`, each with independent streaks.
pub fn rainy_sequence(clean: &Image, frames: usize, params: &RainParams, seed: u64) -> Result<FrameSequence> {
    if !(0.0..=1.0).contains(&params.max_coverage) {
        return Err(Error::invalid("rain coverage must lie in [0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frames = (0..frames).map(|_| add_rain_streaks(clean, params, &mut rng)).collect();
    FrameSequence::new(format!("synthetic_{seed}"), frames)
}
