// End-to-end batch run: writes three rainy sequences to disk, builds a
// config file and produces pseudo ground truth, the pair manifest and the
// run report.
//
// cargo run --release --example stage1_pipeline [workdir]

use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};

use rainkit::pipeline::{run_stage1, PipelineConfig, Stage1Outcome};
use rainkit::synthetic::{clean_scene, rainy_sequence, RainParams};
use rainkit::{save_sequence, FrameSequence};

pub fn run_example(workdir: &Path) -> Result<Stage1Outcome, Box<dyn Error>> {
    let mut config = String::from("method = lowrank\nseed = 1\nworkers = 2\nout = out\n");
    let drizzle = RainParams {
        intensity: 0.2,
        max_coverage: 0.03,
        ..RainParams::default()
    };
    for (i, name) in ["street", "plaza", "bridge"].iter().enumerate() {
        let clean = clean_scene(48, 64, 3, i as u64);
        let rainy = rainy_sequence(&clean, 16, &drizzle, 10 + i as u64)?;
        let seq = FrameSequence::new(*name, rainy.into_frames())?;
        let manifest = save_sequence(&seq, workdir.join(name))?;
        config.push_str(&format!("manifest = {}\n", manifest.strip_prefix(workdir)?.display()));
    }
    config.push_str("enhance = fixed\nenhance.gamma = 1.0\nenhance.weight = 0.25\nenhance.kernel_size = 3\n");
    let config_path = workdir.join("stage1.cfg");
    fs::write(&config_path, &config)?;

    let outcome = run_stage1(&PipelineConfig::from_file(&config_path)?)?;
    for s in &outcome.report.sequences {
        println!("{:8} {:?}, {} frames, {} warning(s)", s.scene_id, s.status, s.frames, s.warnings.len());
    }
    println!("{} training pairs", outcome.pairs.rows.len());
    for row in outcome.pairs.rows.iter().take(3) {
        println!("  {}  ->  {}", row.rainy_path.display(), row.pseudo_gt_path.display());
    }
    Ok(outcome)
}

fn main() -> Result<(), Box<dyn Error>> {
    let workdir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("rainkit-stage1"));
    fs::create_dir_all(&workdir)?;
    run_example(&workdir).map(|_| ())
}
