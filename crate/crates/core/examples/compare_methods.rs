// Scores temporal mean, temporal median, low-rank and enhanced pseudo-GT
// against the known clean scenes.
//
// cargo run --release --example compare_methods [workdir]

use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};

use rainkit::enhance::compute_histogram;
use rainkit::pipeline::{compare_methods, ComparisonTable, PipelineConfig};
use rainkit::synthetic::{clean_scene, rainy_sequence, RainParams};
use rainkit::{save_image, save_sequence, FrameSequence};

pub fn run_example(workdir: &Path) -> Result<ComparisonTable, Box<dyn Error>> {
    let mut config = String::from("out = out\nseed = 3\nworkers = 2\n");
    for i in 0..3u64 {
        let name = format!("scene{i}");
        let clean = clean_scene(48, 48, 3, 20 + i);
        let rainy = rainy_sequence(&clean, 20, &RainParams::default(), 30 + i)?;
        let manifest = save_sequence(&FrameSequence::new(&*name, rainy.into_frames())?, workdir.join(&name))?;
        save_image(&clean, workdir.join(format!("{name}_clean.png")))?;
        config.push_str(&format!(
            "manifest = {}\ngt.{name} = {name}_clean.png\n",
            manifest.strip_prefix(workdir)?.display()
        ));
        if i == 0 {
            compute_histogram(&clean).save(workdir.join("reference.hist"))?;
        }
    }
    config.push_str("enhance = auto\nenhance.reference = reference.hist\n");
    let config_path = workdir.join("compare.cfg");
    fs::write(&config_path, config)?;

    let table = compare_methods(&PipelineConfig::from_file(&config_path)?)?;
    print!("{}", table.to_text());
    Ok(table)
}

fn main() -> Result<(), Box<dyn Error>> {
    let workdir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("rainkit-compare"));
    fs::create_dir_all(&workdir)?;
    run_example(&workdir).map(|_| ())
}
