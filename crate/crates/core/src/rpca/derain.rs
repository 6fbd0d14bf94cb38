use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{rpca_decompose, ChannelMode, RpcaConfig, RpcaOutput};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::sequence::{save_image, FrameSequence};
use crate::temporal::median_of_sorted;

/// One decomposition inside [`derain_sequence`].
#[derive(Debug, Clone)]
pub struct ChannelSolve {
    /// `"0"`, `"1"`, `"2"` for per-channel solves, `"luma"` otherwise.
    pub label: String,
    pub output: RpcaOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoGtProvenance {
    pub scene_id: String,
    pub config: RpcaConfig,
    pub frame_stride: usize,
    pub frames_used: usize,
}

#[derive(Debug, Clone)]
pub struct PseudoGt {
    pub image: Image,
    pub provenance: PseudoGtProvenance,
}

#[derive(Debug, Clone)]
pub struct DerainOutput {
    /// Background component per used frame, clamped to `[0, 1]`.
    pub backgrounds: FrameSequence,
    /// Rain component per used frame, clamped to `[0, 1]`.
    pub rains: FrameSequence,
    pub pseudo_gt: PseudoGt,
    pub solves: Vec<ChannelSolve>,
}

impl DerainOutput {
    pub fn all_converged(&self) -> bool {
        self.solves.iter().all(|s| s.output.converged)
    }

    /// Writes `background_NNN.png` and `rain_NNN.png` into `dir`; rain is
    /// shown as `clamp(R + 0.5)`.
    pub fn dump_debug(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let (h, w, _) = self.backgrounds.shape();
        let rain_channels = self.solves.len();
        for (j, bg) in self.backgrounds.frames().iter().enumerate() {
            save_image(bg, dir.join(format!("background_{j:03}.png")))?;
            let data: Vec<f64> = self
                .solves
                .iter()
                .flat_map(|s| s.output.rain.column(j).iter().map(|r| r + 0.5).collect::<Vec<_>>())
                .collect();
            let vis = Image::from_clamped(h, w, rain_channels, data)?;
            save_image(&vis, dir.join(format!("rain_{j:03}.png")))?;
        }
        Ok(())
    }
}

fn plane_matrix(frames: &[Image], plane: impl Fn(&Image) -> Vec<f64>) -> DMatrix<f64> {
    let m = frames[0].plane_len();
    let mut data = Vec::with_capacity(m * frames.len());
    for f in frames {
        data.extend(plane(f));
    }
    DMatrix::from_vec(m, frames.len(), data)
}

/// Removes rain from a static-scene sequence.
///
/// After temporal subsampling, each channel (or the luminance, see
/// [`ChannelMode`]) is stacked into a `pixels × frames` matrix and
/// decomposed. The pseudo ground truth is the per-pixel temporal median of
/// the background frames.
pub fn derain_sequence(seq: &FrameSequence, config: &RpcaConfig) -> Result<DerainOutput> {
    config.validate()?;
    let stride = config.stride_for(seq.len());
    let used = seq.subsample(stride)?;
    let frames = used.frames();
    let (h, w, channels) = used.shape();
    let n = frames.len();
    let m = h * w;

    // background[c] is an m×n matrix of raw (unclamped) background values
    let (solves, backgrounds): (Vec<ChannelSolve>, Vec<DMatrix<f64>>) = match config.channel_mode {
        ChannelMode::PerChannel => {
            let solved: Vec<Result<ChannelSolve>> = (0..channels)
                .into_par_iter()
                .map(|c| {
                    let d = plane_matrix(frames, |f| f.plane(c).to_vec());
                    let cfg = RpcaConfig {
                        seed: config.seed.wrapping_add(c as u64),
                        ..config.clone()
                    };
                    rpca_decompose(&d, &cfg).map(|output| ChannelSolve {
                        label: c.to_string(),
                        output,
                    })
                })
                .collect();
            let solves = solved.into_iter().collect::<Result<Vec<_>>>()?;
            let backgrounds = solves.iter().map(|s| s.output.background.clone()).collect();
            (solves, backgrounds)
        }
        ChannelMode::Luminance => {
            let d = plane_matrix(frames, Image::luminance);
            let output = rpca_decompose(&d, config)?;
            let backgrounds = (0..channels)
                .map(|c| plane_matrix(frames, |f| f.plane(c).to_vec()) - &output.rain)
                .collect();
            let solve = ChannelSolve {
                label: "luma".to_string(),
                output,
            };
            (vec![solve], backgrounds)
        }
    };

    let frame_from = |mats: &[DMatrix<f64>], j: usize| -> Result<Image> {
        let mut data = Vec::with_capacity(m * mats.len());
        for mat in mats {
            data.extend(mat.column(j).iter());
        }
        Image::from_clamped(h, w, mats.len(), data)
    };
    let rain_mats: Vec<DMatrix<f64>> = solves.iter().map(|s| s.output.rain.clone()).collect();
    let bg_frames = (0..n).map(|j| frame_from(&backgrounds, j)).collect::<Result<Vec<_>>>()?;
    let rain_frames = (0..n).map(|j| frame_from(&rain_mats, j)).collect::<Result<Vec<_>>>()?;

    let mut gt = Vec::with_capacity(m * channels);
    let mut row = vec![0.0; n];
    for bg in &backgrounds {
        for i in 0..m {
            for (j, r) in row.iter_mut().enumerate() {
                *r = bg[(i, j)];
            }
            row.sort_by(f64::total_cmp);
            gt.push(median_of_sorted(&row));
        }
    }
    let image = Image::from_clamped(h, w, channels, gt)?;

    Ok(DerainOutput {
        backgrounds: FrameSequence::new(seq.scene_id(), bg_frames)?,
        rains: FrameSequence::new(seq.scene_id(), rain_frames)?,
        pseudo_gt: PseudoGt {
            image,
            provenance: PseudoGtProvenance {
                scene_id: seq.scene_id().to_string(),
                config: config.clone(),
                frame_stride: stride,
                frames_used: n,
            },
        },
        solves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::psnr;
    use crate::synthetic::{clean_scene, rainy_sequence, RainParams};
    use crate::temporal::temporal_mean;

    #[test]
    fn identical_frames_reproduce_the_frame() {
        let clean = clean_scene(24, 20, 3, 1);
        let seq = FrameSequence::new("s", vec![clean.clone(); 10]).unwrap();
        let out = derain_sequence(&seq, &RpcaConfig::default()).unwrap();
        let max_err = out
            .pseudo_gt
            .image
            .data()
            .iter()
            .zip(clean.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max_err < 1e-6, "max error {max_err}");
        assert!(out.all_converged());
        assert_eq!(out.solves.len(), 3);
    }

    #[test]
    fn beats_temporal_mean_on_synthetic_rain() {
        let clean = clean_scene(48, 48, 3, 7);
        let seq = rainy_sequence(&clean, 20, &RainParams::default(), 7).unwrap();
        let out = derain_sequence(&seq, &RpcaConfig::default()).unwrap();
        let lowrank = psnr(&out.pseudo_gt.image, &clean).unwrap();
        let mean = psnr(&temporal_mean(&seq), &clean).unwrap();
        assert!(lowrank > mean, "lowrank {lowrank} vs mean {mean}");
    }

    #[test]
    fn two_frame_sequence_runs() {
        let clean = clean_scene(16, 16, 1, 2);
        let seq = rainy_sequence(&clean, 2, &RainParams::default(), 2).unwrap();
        let out = derain_sequence(&seq, &RpcaConfig::default()).unwrap();
        assert!(out.pseudo_gt.image.data().iter().all(|v| v.is_finite()));
        assert_eq!(out.backgrounds.len(), 2);
    }

    #[test]
    fn stride_leaving_one_frame_is_an_error() {
        let clean = clean_scene(8, 8, 1, 2);
        let seq = FrameSequence::new("s", vec![clean; 4]).unwrap();
        let cfg = RpcaConfig {
            frame_stride: Some(4),
            ..RpcaConfig::default()
        };
        assert!(matches!(derain_sequence(&seq, &cfg), Err(Error::SequenceTooShort(1))));
    }

    #[test]
    fn luminance_mode_single_solve() {
        let clean = clean_scene(24, 24, 3, 3);
        let seq = rainy_sequence(&clean, 12, &RainParams::default(), 3).unwrap();
        let cfg = RpcaConfig {
            channel_mode: ChannelMode::Luminance,
            ..RpcaConfig::default()
        };
        let out = derain_sequence(&seq, &cfg).unwrap();
        assert_eq!(out.solves.len(), 1);
        assert_eq!(out.rains.shape().2, 1);
        assert_eq!(out.pseudo_gt.image.shape(), clean.shape());
        let lowrank = psnr(&out.pseudo_gt.image, &clean).unwrap();
        let mean = psnr(&temporal_mean(&seq), &clean).unwrap();
        assert!(lowrank > mean);
    }

    #[test]
    fn debug_dump_writes_pairs() {
        let clean = clean_scene(12, 12, 3, 4);
        let seq = rainy_sequence(&clean, 3, &RainParams::default(), 4).unwrap();
        let out = derain_sequence(&seq, &RpcaConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        out.dump_debug(dir.path()).unwrap();
        for j in 0..3 {
            assert!(dir.path().join(format!("background_{j:03}.png")).is_file());
            assert!(dir.path().join(format!("rain_{j:03}.png")).is_file());
        }
    }
}
