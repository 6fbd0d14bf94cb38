// PSNR, SSIM and histogram distances for progressively noisier copies of
// an image.
//
// cargo run --example quality_metrics

use std::error::Error;

use rainkit::enhance::{compute_histogram, histogram_distance};
use rainkit::synthetic::clean_scene;
use rainkit::{quality_report, HistogramMetric, Image, QualityReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<Vec<QualityReport>, Box<dyn Error>> {
    let clean = clean_scene(48, 48, 3, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut reports = Vec::new();

    println!("{:>6}  {:>8}  {:>7}  {:>8}", "noise", "PSNR", "SSIM", "W1");
    for noise in [0.0, 0.01, 0.03, 0.1] {
        let data = clean.data().iter().map(|v| v + noise * rng.random_range(-1.0..=1.0)).collect();
        let noisy = Image::from_clamped(48, 48, 3, data)?;
        let report = quality_report(&noisy, &clean)?;
        let w1 = histogram_distance(&compute_histogram(&noisy), &compute_histogram(&clean), HistogramMetric::Wasserstein1)?;
        println!("{noise:>6}  {:>8.2}  {:>7.4}  {w1:>8.4}", report.psnr_db, report.ssim);
        reports.push(report);
    }
    println!("{}", reports.last().expect("four reports").to_json());
    Ok(reports)
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example().map(|_| ())
}
