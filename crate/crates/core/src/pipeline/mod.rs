//! Batch stage-I runs: sequence → collapse → enhancement → pseudo-GT,
//! plus method comparison against known ground truth.

mod config;
mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;

use crate::enhance::{auto_tune, enhance, Histogram};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::metrics::quality_report;
use crate::rpca::{derain_sequence, DerainOutput, RpcaConfig};
use crate::sequence::{load_image, load_manifest_with_paths, save_image, validate_alignment, FrameSequence};
use crate::temporal::{temporal_mean, temporal_median};

pub use config::{load_params_file, EnhanceSetting, Method, PipelineConfig};
pub use report::{
    ComparisonRow, ComparisonTable, EnhanceRecord, PairManifest, PairRow, RunReport, SequenceComparison,
    SequenceRecord, SequenceStatus, SolveRecord,
};

pub const PAIR_MANIFEST_FILE: &str = "pairs.tsv";
pub const RUN_REPORT_FILE: &str = "run_report.json";
pub const COMPARISON_JSON_FILE: &str = "comparison.json";
pub const COMPARISON_TEXT_FILE: &str = "comparison.txt";

/// A collapsed sequence, with RPCA diagnostics when the low-rank method ran.
#[derive(Debug, Clone)]
pub struct Collapsed {
    pub image: Image,
    pub derain: Option<DerainOutput>,
}

/// Collapses a sequence with the chosen method.
pub fn collapse(seq: &FrameSequence, method: Method, rpca: &RpcaConfig) -> Result<Collapsed> {
    Ok(match method {
        Method::Average => Collapsed {
            image: temporal_mean(seq),
            derain: None,
        },
        Method::Median => Collapsed {
            image: temporal_median(seq),
            derain: None,
        },
        Method::Lowrank => {
            let out = derain_sequence(seq, rpca)?;
            Collapsed {
                image: out.pseudo_gt.image.clone(),
                derain: Some(out),
            }
        }
    })
}

/// Resolved enhancement inputs shared by every sequence of a run.
enum Enhancer {
    Fixed(crate::enhance::EnhanceParams),
    Auto {
        reference: Histogram,
        grid: crate::enhance::TuneGrid,
        metric: crate::enhance::HistogramMetric,
    },
    PerSequence(BTreeMap<String, crate::enhance::EnhanceParams>),
}

impl Enhancer {
    fn resolve(setting: &EnhanceSetting) -> Result<Self> {
        Ok(match setting {
            EnhanceSetting::Fixed { params } => Enhancer::Fixed(*params),
            EnhanceSetting::Auto {
                reference,
                grid,
                metric,
            } => Enhancer::Auto {
                reference: Histogram::load(reference)?,
                grid: grid.clone(),
                metric: *metric,
            },
            EnhanceSetting::PerSequence { params_file } => Enhancer::PerSequence(load_params_file(params_file)?),
        })
    }

    fn apply(&self, scene_id: &str, image: &Image) -> Result<(Image, EnhanceRecord)> {
        let (params, distance) = match self {
            Enhancer::Fixed(p) => (*p, None),
            Enhancer::Auto {
                reference,
                grid,
                metric,
            } => {
                let best = auto_tune(image, reference, grid, *metric)?;
                (best.params, Some(best.distance))
            }
            Enhancer::PerSequence(map) => (
                *map.get(scene_id)
                    .ok_or_else(|| Error::invalid(format!("no enhancement parameters for scene {scene_id:?}")))?,
                None,
            ),
        };
        Ok((enhance(image, &params)?, EnhanceRecord { params, distance }))
    }
}

/// Everything produced by [`run_stage1`].
#[derive(Debug, Clone)]
pub struct Stage1Outcome {
    /// Pseudo-GT per successful sequence, keyed by scene id.
    pub pseudo_gt: BTreeMap<String, Image>,
    pub pairs: PairManifest,
    pub report: RunReport,
}

struct SequenceSuccess {
    image: Image,
    frame_paths: Vec<PathBuf>,
    record: SequenceRecord,
}

fn scene_id_of(manifest: &Path) -> String {
    manifest
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn pseudo_gt_path(out_dir: &Path, scene_id: &str) -> PathBuf {
    out_dir.join("pseudo_gt").join(format!("{scene_id}.png"))
}

fn empty_record(config: &PipelineConfig, manifest: &Path) -> SequenceRecord {
    SequenceRecord {
        scene_id: scene_id_of(manifest),
        manifest: manifest.to_path_buf(),
        status: SequenceStatus::Failed,
        error: None,
        method: config.method,
        frames: 0,
        pseudo_gt_path: None,
        alignment: None,
        rpca: Vec::new(),
        enhancement: None,
        warnings: Vec::new(),
    }
}

fn process_sequence(config: &PipelineConfig, enhancer: &Enhancer, manifest: &Path) -> Result<SequenceSuccess> {
    let loaded = load_manifest_with_paths(manifest)?;
    let seq = &loaded.sequence;
    let mut record = empty_record(config, manifest);
    record.frames = seq.len();

    let alignment = validate_alignment(seq, config.alignment_threshold)?;
    if !alignment.is_aligned() {
        record.warnings.push(format!(
            "frames {:?} correlate below {} with the temporal median",
            alignment.flagged_frames, alignment.threshold
        ));
    }
    record.alignment = Some(alignment);

    let rpca = RpcaConfig {
        seed: config.seed,
        ..config.rpca.clone()
    };
    let collapsed = collapse(seq, config.method, &rpca)?;
    if let Some(derain) = &collapsed.derain {
        for s in &derain.solves {
            record.rpca.push(SolveRecord {
                channel: s.label.clone(),
                iterations: s.output.iterations,
                final_residual: s.output.final_residual,
                rank_estimate: s.output.rank_estimate,
                converged: s.output.converged,
            });
            if !s.output.converged {
                record.warnings.push(format!(
                    "RPCA on channel {} did not converge: residual {:e} after {} iterations (tol {:e})",
                    s.label, s.output.final_residual, s.output.iterations, rpca.tol
                ));
            }
        }
        if config.dump_debug {
            derain.dump_debug(config.out_dir.join("debug").join(seq.scene_id()))?;
        }
    }

    let (image, enhancement) = enhancer.apply(seq.scene_id(), &collapsed.image)?;
    record.enhancement = Some(enhancement);

    let out_path = pseudo_gt_path(&config.out_dir, seq.scene_id());
    save_image(&image, &out_path)?;
    record.pseudo_gt_path = Some(out_path);
    record.status = SequenceStatus::Ok;
    for w in &record.warnings {
        warn!("{}: {w}", record.scene_id);
    }
    Ok(SequenceSuccess {
        image,
        frame_paths: loaded.frame_paths,
        record,
    })
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))
}

fn check_scene_ids(manifests: &[PathBuf]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for m in manifests {
        let id = scene_id_of(m);
        if !seen.insert(id.clone()) {
            return Err(Error::invalid(format!("duplicate scene id {id:?} (from {})", m.display())));
        }
    }
    Ok(())
}

/// Runs stage I over every manifest in `config`.
///
/// A failing sequence is recorded in the report and skipped; the rest still
/// run. Writes `pseudo_gt/<scene>.png`, [`PAIR_MANIFEST_FILE`] and
/// [`RUN_REPORT_FILE`] under the output directory. Outputs are ordered by
/// scene id and do not depend on the worker count.
pub fn run_stage1(config: &PipelineConfig) -> Result<Stage1Outcome> {
    config.validate()?;
    check_scene_ids(&config.manifests)?;
    let out = &config.out_dir;
    fs::create_dir_all(out.join("pseudo_gt")).map_err(|e| Error::io(out, e))?;
    let enhancer = Enhancer::resolve(&config.enhance)?;

    let mut manifests = config.manifests.clone();
    manifests.sort_by_key(|m| scene_id_of(m));

    let pool = thread_pool(config.workers)?;
    let results: Vec<(PathBuf, Result<SequenceSuccess>)> = pool.install(|| {
        manifests
            .par_iter()
            .map(|m| (m.clone(), process_sequence(config, &enhancer, m)))
            .collect()
    });

    let mut pseudo_gt = BTreeMap::new();
    let mut pairs = PairManifest::default();
    let mut sequences = Vec::with_capacity(results.len());
    for (manifest, result) in results {
        match result {
            Ok(success) => {
                let gt_path = success.record.pseudo_gt_path.clone().expect("set on success");
                for frame in &success.frame_paths {
                    pairs.rows.push(PairRow {
                        rainy_path: frame.clone(),
                        pseudo_gt_path: gt_path.clone(),
                        sequence_id: success.record.scene_id.clone(),
                    });
                }
                info!("{}: pseudo-GT written to {}", success.record.scene_id, gt_path.display());
                pseudo_gt.insert(success.record.scene_id.clone(), success.image);
                sequences.push(success.record);
            }
            Err(e) => {
                warn!("{}: failed: {e}", manifest.display());
                let mut record = empty_record(config, &manifest);
                record.error = Some(e.to_string());
                sequences.push(record);
            }
        }
    }

    let failed = sequences.iter().filter(|s| s.status == SequenceStatus::Failed).count();
    let report = RunReport {
        config: config.clone(),
        succeeded: sequences.len() - failed,
        failed,
        sequences,
    };
    pairs.save(out.join(PAIR_MANIFEST_FILE))?;
    let report_path = out.join(RUN_REPORT_FILE);
    fs::write(&report_path, report.to_json()).map_err(|e| Error::io(&report_path, e))?;

    Ok(Stage1Outcome {
        pseudo_gt,
        pairs,
        report,
    })
}

/// Row labels of [`compare_methods`], in table order.
pub const COMPARISON_METHODS: [&str; 4] = ["Average", "Median", "Low-rank", "Pseudo GT"];

fn compare_sequence(config: &PipelineConfig, enhancer: &Enhancer, manifest: &Path) -> Result<SequenceComparison> {
    let seq = load_manifest_with_paths(manifest)?.sequence;
    let gt_path = config
        .ground_truth
        .get(seq.scene_id())
        .ok_or_else(|| Error::invalid(format!("missing ground truth for scene {:?}", seq.scene_id())))?;
    let gt = load_image(gt_path)?;
    let rpca = RpcaConfig {
        seed: config.seed,
        ..config.rpca.clone()
    };
    let lowrank = collapse(&seq, Method::Lowrank, &rpca)?.image;
    let (pseudo, _) = enhancer.apply(seq.scene_id(), &lowrank)?;
    let candidates = [temporal_mean(&seq), temporal_median(&seq), lowrank, pseudo];
    let rows = COMPARISON_METHODS
        .iter()
        .zip(&candidates)
        .map(|(name, img)| {
            let q = quality_report(img, &gt)?;
            Ok(ComparisonRow {
                method: name.to_string(),
                psnr_db: q.psnr_db,
                ssim: q.ssim,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SequenceComparison {
        scene_id: seq.scene_id().to_string(),
        rows,
    })
}

/// Scores Average / Median / Low-rank / Pseudo GT against ground truth for
/// every manifest and writes [`COMPARISON_JSON_FILE`] and
/// [`COMPARISON_TEXT_FILE`] to the output directory.
pub fn compare_methods(config: &PipelineConfig) -> Result<ComparisonTable> {
    config.validate()?;
    check_scene_ids(&config.manifests)?;
    if config.manifests.is_empty() {
        return Err(Error::invalid("no manifests to compare"));
    }
    let enhancer = Enhancer::resolve(&config.enhance)?;
    let mut manifests = config.manifests.clone();
    manifests.sort_by_key(|m| scene_id_of(m));

    let pool = thread_pool(config.workers)?;
    let per_sequence = pool.install(|| {
        manifests
            .par_iter()
            .map(|m| compare_sequence(config, &enhancer, m))
            .collect::<Result<Vec<_>>>()
    })?;

    let n = per_sequence.len() as f64;
    let rows = COMPARISON_METHODS
        .iter()
        .enumerate()
        .map(|(i, name)| ComparisonRow {
            method: name.to_string(),
            psnr_db: per_sequence.iter().map(|s| s.rows[i].psnr_db).sum::<f64>() / n,
            ssim: per_sequence.iter().map(|s| s.rows[i].ssim).sum::<f64>() / n,
        })
        .collect();
    let table = ComparisonTable { rows, per_sequence };

    let out = &config.out_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let json_path = out.join(COMPARISON_JSON_FILE);
    fs::write(&json_path, table.to_json()).map_err(|e| Error::io(&json_path, e))?;
    let text_path = out.join(COMPARISON_TEXT_FILE);
    fs::write(&text_path, table.to_text()).map_err(|e| Error::io(&text_path, e))?;
    Ok(table)
}
