//! Per-pixel temporal statistics over a static-background sequence.

use crate::image::Image;
use crate::sequence::FrameSequence;

/// Per-sample arithmetic mean across frames.
///
/// Summation runs over a sorted copy of each pixel's samples so the result
/// is bitwise independent of frame order. Deviations are accumulated
/// relative to the smallest sample, which makes the mean of identical
/// samples exact.
pub fn temporal_mean(seq: &FrameSequence) -> Image {
    collapse(seq, |samples| {
        samples.sort_by(f64::total_cmp);
        let base = samples[0];
        base + samples.iter().map(|s| s - base).sum::<f64>() / samples.len() as f64
    })
}

/// Per-sample median across frames; for an even count, the mean of the two
/// central order statistics.
pub fn temporal_median(seq: &FrameSequence) -> Image {
    collapse(seq, |samples| {
        samples.sort_by(f64::total_cmp);
        median_of_sorted(samples)
    })
}

pub(crate) fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn collapse(seq: &FrameSequence, mut reduce: impl FnMut(&mut [f64]) -> f64) -> Image {
    let frames = seq.frames();
    let first = &frames[0];
    let mut samples = vec![0.0; frames.len()];
    let data = (0..first.data().len())
        .map(|i| {
            for (s, f) in samples.iter_mut().zip(frames) {
                *s = f.data()[i];
            }
            // min ≤ mean/median ≤ max keeps the result inside [0, 1]
            reduce(&mut samples).clamp(0.0, 1.0)
        })
        .collect();
    first.with_data(data)
}
