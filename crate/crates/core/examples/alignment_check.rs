// Flags a frame that does not line up with the rest of its sequence.
//
// cargo run --example alignment_check

use std::error::Error;

use rainkit::sequence::DEFAULT_ALIGNMENT_THRESHOLD;
use rainkit::synthetic::{clean_scene, rainy_sequence, RainParams};
use rainkit::{validate_alignment, AlignmentReport, FrameSequence};

pub fn run_example() -> Result<AlignmentReport, Box<dyn Error>> {
    let clean = clean_scene(48, 64, 3, 7);
    let drizzle = RainParams {
        intensity: 0.2,
        max_coverage: 0.03,
        ..RainParams::default()
    };
    let mut frames = rainy_sequence(&clean, 10, &drizzle, 7)?.into_frames();
    // Simulate a camera bump: one frame is mirrored.
    frames[6] = frames[6].flip_horizontal();
    let seq = FrameSequence::new("bumped", frames)?;

    let report = validate_alignment(&seq, DEFAULT_ALIGNMENT_THRESHOLD)?;
    for (i, r) in report.per_frame_correlation.iter().enumerate() {
        let mark = if report.flagged_frames.contains(&i) { "  <- flagged" } else { "" };
        println!("frame {i:2}: correlation {r:.4}{mark}");
    }
    println!("aligned: {}", report.is_aligned());
    Ok(report)
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example().map(|_| ())
}
