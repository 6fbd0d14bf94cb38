//! Plain-text `key = value` pipeline configuration.
//!
//! ```text
//! # one manifest per line; paths are relative to this file
//! manifest = seq/a.txt
//! manifest = seq/b.txt
//! method = lowrank
//! out = out
//! seed = 7
//! rpca.max_iter = 100
//! rpca.frame_stride = auto
//! enhance = auto
//! enhance.reference = reference.hist
//! gt.a = clean/a.png
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::enhance::{EnhanceParams, HistogramMetric, SharpenMode, TuneGrid};
use crate::error::{Error, Result};
use crate::rpca::{ChannelMode, RpcaConfig};
use crate::sequence::DEFAULT_ALIGNMENT_THRESHOLD;

/// How a sequence is collapsed to one image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Average,
    Median,
    #[default]
    Lowrank,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "average" | "mean" => Ok(Method::Average),
            "median" => Ok(Method::Median),
            "lowrank" | "low-rank" | "rpca" => Ok(Method::Lowrank),
            other => Err(Error::invalid(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum EnhanceSetting {
    /// Same parameters for every sequence.
    Fixed { params: EnhanceParams },
    /// Grid search against a reference histogram.
    Auto {
        reference: PathBuf,
        grid: TuneGrid,
        metric: HistogramMetric,
    },
    /// Explicit parameters per scene id, read from a params file.
    PerSequence { params_file: PathBuf },
}

impl Default for EnhanceSetting {
    fn default() -> Self {
        EnhanceSetting::Fixed {
            params: EnhanceParams::identity(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub manifests: Vec<PathBuf>,
    pub method: Method,
    pub rpca: RpcaConfig,
    pub enhance: EnhanceSetting,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Not echoed into reports: results do not depend on it.
    #[serde(skip, default = "default_workers")]
    pub workers: usize,
    pub alignment_threshold: f64,
    /// Ground-truth images by scene id, for `compare`.
    pub ground_truth: BTreeMap<String, PathBuf>,
    pub dump_debug: bool,
}

fn default_workers() -> usize {
    1
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            manifests: Vec::new(),
            method: Method::Lowrank,
            rpca: RpcaConfig::default(),
            enhance: EnhanceSetting::default(),
            out_dir: PathBuf::from("out"),
            seed: 0,
            workers: default_workers(),
            alignment_threshold: DEFAULT_ALIGNMENT_THRESHOLD,
            ground_truth: BTreeMap::new(),
            dump_debug: false,
        }
    }
}

fn parse_list<T: FromStr>(v: &str) -> std::result::Result<Vec<T>, T::Err> {
    v.split(',').map(|s| s.trim().parse()).collect()
}

fn parse_auto<T: FromStr>(v: &str) -> std::result::Result<Option<T>, T::Err> {
    if v == "auto" {
        Ok(None)
    } else {
        v.parse().map(Some)
    }
}

impl PipelineConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        PipelineConfig::parse(&text, base, path)
    }

    /// Parses config text; relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path, origin: &Path) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        let mut enhance_mode = String::from("identity");
        let mut params = EnhanceParams::identity();
        let mut reference = None;
        let mut params_file = None;
        let mut grid = TuneGrid::default();
        let mut metric = HistogramMetric::default();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |message: String| Error::Config {
                path: origin.to_path_buf(),
                line: line_no,
                message,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(format!("expected `key = value`, got {line:?}")))?;
            let bad = |e: &dyn std::fmt::Display| err(format!("{key}: {e}"));
            let path = || base.join(value);

            match key {
                "manifest" => cfg.manifests.push(path()),
                "method" => cfg.method = value.parse().map_err(|e| bad(&e))?,
                "out" => cfg.out_dir = path(),
                "seed" => cfg.seed = value.parse().map_err(|e| bad(&e))?,
                "workers" => cfg.workers = value.parse().map_err(|e| bad(&e))?,
                "alignment_threshold" => cfg.alignment_threshold = value.parse().map_err(|e| bad(&e))?,
                "dump_debug" => cfg.dump_debug = value.parse().map_err(|e| bad(&e))?,
                "rpca.lambda" => cfg.rpca.lambda = parse_auto(value).map_err(|e| bad(&e))?,
                "rpca.mu0" => cfg.rpca.mu0 = parse_auto(value).map_err(|e| bad(&e))?,
                "rpca.rho" => cfg.rpca.rho = value.parse().map_err(|e| bad(&e))?,
                "rpca.mu_max_ratio" => cfg.rpca.mu_max_ratio = value.parse().map_err(|e| bad(&e))?,
                "rpca.tol" => cfg.rpca.tol = value.parse().map_err(|e| bad(&e))?,
                "rpca.max_iter" => cfg.rpca.max_iter = value.parse().map_err(|e| bad(&e))?,
                "rpca.frame_stride" => cfg.rpca.frame_stride = parse_auto(value).map_err(|e| bad(&e))?,
                "rpca.nonneg_rain" => cfg.rpca.nonneg_rain = value.parse().map_err(|e| bad(&e))?,
                "rpca.exact_svd_max_cols" => cfg.rpca.exact_svd_max_cols = value.parse().map_err(|e| bad(&e))?,
                "rpca.channel_mode" => {
                    cfg.rpca.channel_mode = match value {
                        "per_channel" => ChannelMode::PerChannel,
                        "luminance" => ChannelMode::Luminance,
                        other => return Err(bad(&format!("unknown channel mode {other:?}"))),
                    }
                }
                "enhance" => enhance_mode = value.to_string(),
                "enhance.gamma" => params.gamma = value.parse().map_err(|e| bad(&e))?,
                "enhance.weight" => params.weight = value.parse().map_err(|e| bad(&e))?,
                "enhance.kernel_size" => params.kernel_size = value.parse().map_err(|e| bad(&e))?,
                "enhance.mode" => {
                    let mode: SharpenMode = value.parse().map_err(|e| bad(&e))?;
                    params.sharpen_mode = mode;
                    grid.sharpen_mode = mode;
                }
                "enhance.reference" => reference = Some(path()),
                "enhance.params_file" => params_file = Some(path()),
                "enhance.metric" => metric = value.parse().map_err(|e| bad(&e))?,
                "enhance.grid.gammas" => grid.gammas = parse_list(value).map_err(|e| bad(&e))?,
                "enhance.grid.weights" => grid.weights = parse_list(value).map_err(|e| bad(&e))?,
                "enhance.grid.kernel_sizes" => grid.kernel_sizes = parse_list(value).map_err(|e| bad(&e))?,
                k if k.starts_with("gt.") => {
                    cfg.ground_truth.insert(k["gt.".len()..].to_string(), path());
                }
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }

        let config_err = |message: String| Error::Config {
            path: origin.to_path_buf(),
            line: 0,
            message,
        };
        cfg.enhance = match enhance_mode.as_str() {
            "identity" | "none" => EnhanceSetting::default(),
            "fixed" => EnhanceSetting::Fixed { params },
            "auto" => EnhanceSetting::Auto {
                reference: reference.ok_or_else(|| config_err("enhance = auto requires enhance.reference".into()))?,
                grid,
                metric,
            },
            "per_sequence" => EnhanceSetting::PerSequence {
                params_file: params_file
                    .ok_or_else(|| config_err("enhance = per_sequence requires enhance.params_file".into()))?,
            },
            other => return Err(config_err(format!("unknown enhance mode {other:?}"))),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.rpca.validate()?;
        if !(self.alignment_threshold > 0.0 && self.alignment_threshold <= 1.0) {
            return Err(Error::invalid("alignment_threshold must lie in (0, 1]"));
        }
        match &self.enhance {
            EnhanceSetting::Fixed { params } => params.validate()?,
            EnhanceSetting::Auto { grid, .. } => {
                if grid.is_empty() {
                    return Err(Error::invalid("enhancement grid is empty"));
                }
                for p in grid.points() {
                    p.validate()?;
                }
            }
            EnhanceSetting::PerSequence { .. } => {}
        }
        Ok(())
    }
}

/// Reads a per-sequence params file: `scene_id gamma weight kernel_size [mode]`
/// per line, `#` comments allowed.
pub fn load_params_file(path: impl AsRef<Path>) -> Result<BTreeMap<String, EnhanceParams>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Config {
            path: path.to_path_buf(),
            line: idx + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 && fields.len() != 5 {
            return Err(err(format!("expected `scene gamma weight kernel_size [mode]`, got {line:?}")));
        }
        let parse_f = |s: &str| s.parse::<f64>().map_err(|e| err(e.to_string()));
        let params = EnhanceParams {
            gamma: parse_f(fields[1])?,
            weight: parse_f(fields[2])?,
            kernel_size: fields[3].parse().map_err(|e: std::num::ParseIntError| err(e.to_string()))?,
            sharpen_mode: match fields.get(4) {
                Some(m) => m.parse().map_err(|e: Error| err(e.to_string()))?,
                None => SharpenMode::Standard,
            },
        };
        params.validate().map_err(|e| err(e.to_string()))?;
        out.insert(fields[0].to_string(), params);
    }
    Ok(out)
}
