// Restores contrast and detail of a washed-out image by searching gamma
// and unsharp-mask settings against a reference histogram.
//
// cargo run --release --example enhance_autotune

use std::error::Error;

use rainkit::enhance::{auto_tune, compute_histogram, enhance, gamma_correct, gaussian_blur, TuneResult};
use rainkit::synthetic::clean_scene;
use rainkit::{psnr, HistogramMetric, TuneGrid};

/// Returns the chosen parameters and `(PSNR before, PSNR after)`.
pub fn run_example() -> Result<(TuneResult, f64, f64), Box<dyn Error>> {
    let clean = clean_scene(64, 64, 3, 5);
    // A veiled version: brightened midtones and softened edges.
    let veiled = gaussian_blur(&gamma_correct(&clean, 0.75)?, 5, 5.0 / 6.0)?;
    let reference = compute_histogram(&clean);

    for metric in [HistogramMetric::L1, HistogramMetric::Chi2, HistogramMetric::Wasserstein1] {
        let best = auto_tune(&veiled, &reference, &TuneGrid::default(), metric)?;
        println!(
            "{metric:?}: gamma {:.1}, weight {}, kernel {} (distance {:.4})",
            best.params.gamma, best.params.weight, best.params.kernel_size, best.distance
        );
    }

    let best = auto_tune(&veiled, &reference, &TuneGrid::default(), HistogramMetric::default())?;
    let before = psnr(&veiled, &clean)?;
    let after = psnr(&enhance(&veiled, &best.params)?, &clean)?;
    println!("PSNR {before:.2} dB -> {after:.2} dB");
    Ok((best, before, after))
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example().map(|_| ())
}
