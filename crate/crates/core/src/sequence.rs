//! Frame sequences, manifest loading, 8-bit raster I/O and the
//! static-background alignment check.

use std::fs;
use std::path::{Path, PathBuf};

use image::{ColorType, DynamicImage, GrayImage, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{shape_string, Image};
use crate::temporal::temporal_median;

/// Default correlation threshold for [`validate_alignment`].
pub const DEFAULT_ALIGNMENT_THRESHOLD: f64 = 0.9;

/// Ordered frames of one static scene.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    frames: Vec<Image>,
    scene_id: String,
}

impl FrameSequence {
    pub fn new(scene_id: impl Into<String>, frames: Vec<Image>) -> Result<Self> {
        if frames.len() < 2 {
            return Err(Error::SequenceTooShort(frames.len()));
        }
        let shape = frames[0].shape();
        if let Some(bad) = frames.iter().find(|f| f.shape() != shape) {
            return Err(Error::ShapeMismatch {
                expected: shape_string(shape),
                found: shape_string(bad.shape()),
            });
        }
        Ok(FrameSequence {
            frames,
            scene_id: scene_id.into(),
        })
    }

    pub fn frames(&self) -> &[Image] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Image> {
        self.frames
    }

    pub fn scene_id(&self) -> &str {
        &self.scene_id
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// `(height, width, channels)` shared by every frame.
    pub fn shape(&self) -> (usize, usize, usize) {
        self.frames[0].shape()
    }

    /// Every `stride`-th frame starting from the first.
    pub fn subsample(&self, stride: usize) -> Result<FrameSequence> {
        if stride == 0 {
            return Err(Error::invalid("frame stride must be positive"));
        }
        let frames: Vec<Image> = self.frames.iter().step_by(stride).cloned().collect();
        FrameSequence::new(self.scene_id.clone(), frames)
    }
}

/// A manifest together with the resolved frame paths, in manifest order.
#[derive(Debug, Clone)]
pub struct LoadedManifest {
    pub sequence: FrameSequence,
    pub frame_paths: Vec<PathBuf>,
}

/// Loads a frame sequence from a manifest file.
///
/// Each non-empty line not starting with `#` is a frame path relative to
/// the manifest's directory. The scene id is the manifest's file stem.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<FrameSequence> {
    load_manifest_with_paths(path).map(|m| m.sequence)
}

pub fn load_manifest_with_paths(path: impl AsRef<Path>) -> Result<LoadedManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let scene_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();

    let line_err = |line: usize, message: String| Error::Manifest {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut frames: Vec<Image> = Vec::new();
    let mut frame_paths = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let entry = raw.trim();
        if entry.is_empty() || entry.starts_with('#') {
            continue;
        }
        let frame_path = base.join(entry);
        if !frame_path.is_file() {
            return Err(line_err(line_no, format!("missing file {}", frame_path.display())));
        }
        let frame = load_image(&frame_path).map_err(|e| line_err(line_no, e.to_string()))?;
        if let Some(first) = frames.first() {
            if !first.same_shape(&frame) {
                return Err(line_err(
                    line_no,
                    format!(
                        "shape mismatch: expected {}, found {}",
                        shape_string(first.shape()),
                        shape_string(frame.shape())
                    ),
                ));
            }
        }
        frames.push(frame);
        frame_paths.push(frame_path);
    }

    let sequence = FrameSequence::new(scene_id, frames)?;
    Ok(LoadedManifest {
        sequence,
        frame_paths,
    })
}

/// Writes every frame as `frame_NNN.png` into `dir` plus a manifest named
/// after the scene id, and returns the manifest path.
pub fn save_sequence(seq: &FrameSequence, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = String::new();
    for (i, frame) in seq.frames().iter().enumerate() {
        let name = format!("frame_{i:03}.png");
        save_image(frame, dir.join(&name))?;
        manifest.push_str(&name);
        manifest.push('\n');
    }
    let path = dir.join(format!("{}.txt", seq.scene_id()));
    fs::write(&path, manifest).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Decodes an 8-bit grayscale or RGB raster; byte `v` maps to `v / 255`.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let decoded = image::open(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let to_unit = |b: u8| f64::from(b) / 255.0;
    match decoded.color() {
        ColorType::L8 => {
            let data = decoded.into_luma8().into_raw().into_iter().map(to_unit).collect();
            Image::new(h, w, 1, data)
        }
        ColorType::Rgb8 => {
            let raw = decoded.into_rgb8().into_raw();
            let n = h * w;
            let mut data = vec![0.0; 3 * n];
            for (i, px) in raw.chunks_exact(3).enumerate() {
                for c in 0..3 {
                    data[c * n + i] = to_unit(px[c]);
                }
            }
            Image::new(h, w, 3, data)
        }
        other => Err(Error::Decode {
            path: path.to_path_buf(),
            message: format!("unsupported pixel format {other:?}; expected 8-bit gray or RGB"),
        }),
    }
}

/// Quantizes a unit-range sample to a byte: `round(v * 255)` clamped to `[0, 255]`.
pub fn quantize(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Encodes an image as interleaved 8-bit samples.
pub fn to_bytes(image: &Image) -> Vec<u8> {
    let n = image.plane_len();
    let c = image.channels();
    let mut out = vec![0u8; n * c];
    for ch in 0..c {
        for (i, &v) in image.plane(ch).iter().enumerate() {
            out[i * c + ch] = quantize(v);
        }
    }
    out
}

/// Writes an 8-bit PNG.
pub fn save_image(image: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (h, w) = (image.height() as u32, image.width() as u32);
    let bytes = to_bytes(image);
    let dynamic = if image.channels() == 1 {
        DynamicImage::ImageLuma8(GrayImage::from_raw(w, h, bytes).expect("buffer sized from image"))
    } else {
        DynamicImage::ImageRgb8(RgbImage::from_raw(w, h, bytes).expect("buffer sized from image"))
    };
    dynamic
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::Encode {
                path: path.to_path_buf(),
                message: other.to_string(),
            },
        })
}

/// Per-frame correlation against the temporal median.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub per_frame_correlation: Vec<f64>,
    pub flagged_frames: Vec<usize>,
    pub threshold: f64,
}

impl AlignmentReport {
    pub fn is_aligned(&self) -> bool {
        self.flagged_frames.is_empty()
    }
}

/// Pearson correlation of each frame's luminance with the luminance of the
/// temporal median frame. Frames below `threshold` are flagged.
///
/// A constant frame correlates 1 with a median that is the same constant and
/// 0 with anything else; a constant median correlates 0 with a varying frame.
pub fn validate_alignment(seq: &FrameSequence, threshold: f64) -> Result<AlignmentReport> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::invalid(format!("alignment threshold must lie in (0, 1], got {threshold}")));
    }
    let median = temporal_median(seq).luminance();
    let per_frame_correlation: Vec<f64> = seq
        .frames()
        .iter()
        .map(|f| pearson(&f.luminance(), &median))
        .collect();
    let flagged_frames = per_frame_correlation
        .iter()
        .enumerate()
        .filter(|(_, &r)| r < threshold)
        .map(|(i, _)| i)
        .collect();
    Ok(AlignmentReport {
        per_frame_correlation,
        flagged_frames,
        threshold,
    })
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let (mut cov, mut var_a, mut var_b) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - mean_a, y - mean_b);
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    let constant_a = var_a <= f64::EPSILON * n;
    let constant_b = var_b <= f64::EPSILON * n;
    match (constant_a, constant_b) {
        (true, true) if a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12) => 1.0,
        (true, _) | (_, true) => 0.0,
        _ => (cov / (var_a.sqrt() * var_b.sqrt())).clamp(-1.0, 1.0),
    }
}
