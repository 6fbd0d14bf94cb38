// Temporal mean vs temporal median on a rainy synthetic sequence.
//
// cargo run --release --example temporal_baselines

use std::error::Error;

use rainkit::synthetic::{clean_scene, rainy_sequence, RainParams};
use rainkit::{psnr, ssim, temporal_mean, temporal_median};

/// Returns `(mean PSNR, median PSNR)` against the clean scene.
pub fn run_example() -> Result<(f64, f64), Box<dyn Error>> {
    let clean = clean_scene(64, 64, 3, 1);
    let seq = rainy_sequence(&clean, 20, &RainParams::default(), 1)?;

    let single = psnr(&seq.frames()[0], &clean)?;
    let mean = temporal_mean(&seq);
    let median = temporal_median(&seq);
    let (mean_db, median_db) = (psnr(&mean, &clean)?, psnr(&median, &clean)?);

    println!("single rainy frame  {single:6.2} dB");
    println!("temporal mean       {mean_db:6.2} dB  SSIM {:.4}", ssim(&mean, &clean)?);
    println!("temporal median     {median_db:6.2} dB  SSIM {:.4}", ssim(&median, &clean)?);
    Ok((mean_db, median_db))
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example().map(|_| ())
}
