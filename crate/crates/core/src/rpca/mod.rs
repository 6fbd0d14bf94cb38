//! Low-rank + sparse decomposition of a stacked frame sequence.
//!
//! Frames of a static scene are vectorized into the columns of a data
//! matrix `D`. The background is (nearly) identical in every column, so it
//! is low-rank; rain streaks move between frames and are sparse. The split
//! `D = B + R` is found by minimizing `‖B‖_* + λ‖R‖₁` with an inexact
//! augmented Lagrangian scheme:
//!
//! ```text
//! B ← svt(D − R + Y/μ, 1/μ)
//! R ← shrink(D − B + Y/μ, λ/μ)
//! Y ← Y + μ(D − B − R)
//! μ ← min(ρμ, μ_max)
//! ```

mod derain;
pub mod svd;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use derain::{derain_sequence, ChannelSolve, DerainOutput, PseudoGt, PseudoGtProvenance};
pub use svd::{svt, thin_svd, SvtEngine, ThinSvd};

/// Frames kept per sequence when the stride is chosen automatically.
pub const AUTO_STRIDE_TARGET_FRAMES: usize = 50;

/// How colour channels enter the decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ChannelMode {
    /// One independent solve per channel.
    #[default]
    PerChannel,
    /// A single solve on Rec.601 luminance; its rain component is removed
    /// from every channel.
    Luminance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpcaConfig {
    /// Sparsity weight. `None` means `1/√max(m, n)`.
    pub lambda: Option<f64>,
    /// Initial penalty. `None` means `1.25/σ₁(D)`.
    pub mu0: Option<f64>,
    pub rho: f64,
    /// `μ_max = mu_max_ratio · μ₀`.
    pub mu_max_ratio: f64,
    /// Relative feasibility tolerance on `‖D − B − R‖_F / ‖D‖_F`.
    pub tol: f64,
    pub max_iter: usize,
    /// Temporal subsampling. `None` keeps about
    /// [`AUTO_STRIDE_TARGET_FRAMES`] frames (`⌈n/50⌉`).
    pub frame_stride: Option<usize>,
    pub nonneg_rain: bool,
    pub channel_mode: ChannelMode,
    /// Widest matrix decomposed with an exact SVD; wider ones go randomized.
    pub exact_svd_max_cols: usize,
    pub seed: u64,
}

impl Default for RpcaConfig {
    fn default() -> Self {
        RpcaConfig {
            lambda: None,
            mu0: None,
            rho: 1.5,
            mu_max_ratio: 1e7,
            tol: 1e-7,
            max_iter: 100,
            frame_stride: None,
            nonneg_rain: false,
            channel_mode: ChannelMode::PerChannel,
            exact_svd_max_cols: 64,
            seed: 0,
        }
    }
}

impl RpcaConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(Error::invalid(format!("{name} must be positive, got {x}"))),
            _ => Ok(()),
        };
        positive("lambda", self.lambda)?;
        positive("mu0", self.mu0)?;
        if !(self.rho > 1.0) {
            return Err(Error::invalid(format!("rho must exceed 1, got {}", self.rho)));
        }
        if !(self.mu_max_ratio >= 1.0) {
            return Err(Error::invalid("mu_max_ratio must be at least 1"));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::invalid(format!("tol must lie in (0, 1), got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        if self.frame_stride == Some(0) {
            return Err(Error::invalid("frame_stride must be positive"));
        }
        Ok(())
    }

    /// Stride actually applied to a sequence of `frames` frames.
    pub fn stride_for(&self, frames: usize) -> usize {
        self.frame_stride
            .unwrap_or_else(|| frames.div_ceil(AUTO_STRIDE_TARGET_FRAMES).max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RpcaOutput {
    pub background: DMatrix<f64>,
    pub rain: DMatrix<f64>,
    pub iterations: usize,
    /// `‖D − B − R‖_F / ‖D‖_F` at return.
    pub final_residual: f64,
    pub rank_estimate: usize,
    /// `false` when `max_iter` was reached before the tolerance.
    pub converged: bool,
}

/// Soft thresholding: `sign(x) · max(|x| − tau, 0)`.
#[inline]
pub fn soft_threshold(x: f64, tau: f64) -> f64 {
    debug_assert!(tau >= 0.0);
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

/// Splits `d` into low-rank background and sparse rain.
///
/// Non-convergence is reported through [`RpcaOutput::converged`], not as an
/// error. Output is a pure function of `d` and `config` (including its seed).
pub fn rpca_decompose(d: &DMatrix<f64>, config: &RpcaConfig) -> Result<RpcaOutput> {
    config.validate()?;
    let (m, n) = d.shape();
    if m < 1 || n < 2 {
        return Err(Error::invalid(format!("data matrix must be at least 1x2, got {m}x{n}")));
    }
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("data matrix"));
    }

    let norm_d = d.norm();
    if norm_d == 0.0 {
        return Ok(RpcaOutput {
            background: DMatrix::zeros(m, n),
            rain: DMatrix::zeros(m, n),
            iterations: 1,
            final_residual: 0.0,
            rank_estimate: 0,
            converged: true,
        });
    }

    let lambda = config.lambda.unwrap_or(1.0 / (m.max(n) as f64).sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let sigma1 = svd::spectral_norm(d, &mut rng);
    let mut mu = config.mu0.unwrap_or(1.25 / sigma1);
    let mu_max = config.mu_max_ratio * mu;

    // Dual start Y₀ = D / max(‖D‖₂, ‖D‖_∞/λ).
    let inf_norm = d.amax();
    let mut y = d / sigma1.max(inf_norm / lambda);
    let mut rain = DMatrix::<f64>::zeros(m, n);
    let mut background = DMatrix::<f64>::zeros(m, n);
    let mut engine = SvtEngine::new(config.exact_svd_max_cols, rng);

    let mut rank = 0;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iter {
        iterations += 1;
        let inv_mu = 1.0 / mu;

        let target = d - &rain + &y * inv_mu;
        let (b, r) = engine.apply(&target, inv_mu)?;
        background = b;
        rank = r;

        let shrink = lambda * inv_mu;
        for ((r, (&dv, &bv)), &yv) in rain
            .iter_mut()
            .zip(d.iter().zip(background.iter()))
            .zip(y.iter())
        {
            let v = soft_threshold(dv - bv + yv * inv_mu, shrink);
            *r = if config.nonneg_rain { v.max(0.0) } else { v };
        }

        let z = d - &background - &rain;
        y += &z * mu;
        mu = (mu * config.rho).min(mu_max);
        residual = z.norm() / norm_d;
        if residual <= config.tol {
            converged = true;
            break;
        }
    }

    Ok(RpcaOutput {
        background,
        rain,
        iterations,
        final_residual: residual,
        rank_estimate: rank,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        for x in [-2.5, -1e-9, 0.0, 0.3, 7.0] {
            assert_eq!(soft_threshold(x, 0.0), x);
        }
    }

    #[test]
    fn soft_threshold_matches_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let x: f64 = rng.random_range(-5.0..5.0);
            let tau: f64 = rng.random_range(0.0..3.0);
            let expected = x.signum() * (x.abs() - tau).max(0.0);
            assert_eq!(soft_threshold(x, tau), expected);
        }
    }

    #[test]
    fn zero_input_converges_immediately() {
        let out = rpca_decompose(&DMatrix::zeros(10, 4), &RpcaConfig::default()).unwrap();
        assert_eq!(out.iterations, 1);
        assert!(out.converged);
        assert_eq!(out.background.norm(), 0.0);
        assert_eq!(out.rain.norm(), 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        let cfg = RpcaConfig::default();
        assert!(rpca_decompose(&DMatrix::zeros(10, 1), &cfg).is_err());
        let mut d = DMatrix::from_element(4, 3, 0.5);
        d[(1, 1)] = f64::NAN;
        assert!(matches!(rpca_decompose(&d, &cfg), Err(Error::NonFinite(_))));
        let bad = RpcaConfig { rho: 1.0, ..RpcaConfig::default() };
        assert!(rpca_decompose(&DMatrix::from_element(4, 3, 0.5), &bad).is_err());
        let bad = RpcaConfig { tol: 1.0, ..RpcaConfig::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn auto_stride() {
        let cfg = RpcaConfig::default();
        assert_eq!(cfg.stride_for(300), 6);
        assert_eq!(cfg.stride_for(30), 1);
        assert_eq!(cfg.stride_for(51), 2);
        let fixed = RpcaConfig { frame_stride: Some(3), ..cfg };
        assert_eq!(fixed.stride_for(300), 3);
    }

    #[test]
    fn sparse_only_input_goes_to_rain() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (m, n) = (64, 20);
        let d = DMatrix::from_fn(m, n, |_, _| {
            if rng.random::<f64>() < 0.05 {
                rng.random_range(0.3..1.0)
            } else {
                0.0
            }
        });
        let cfg = RpcaConfig {
            lambda: Some(0.05),
            ..RpcaConfig::default()
        };
        let out = rpca_decompose(&d, &cfg).unwrap();
        assert!(out.background.norm() < 0.05 * d.norm(), "{}", out.background.norm() / d.norm());
        assert!((&out.rain - &d).norm() < 0.05 * d.norm());
    }

    #[test]
    fn nonneg_rain_is_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let d = DMatrix::from_fn(30, 8, |i, _| (i as f64 / 30.0) + if rng.random::<f64>() < 0.1 { 0.4 } else { 0.0 });
        let cfg = RpcaConfig {
            nonneg_rain: true,
            ..RpcaConfig::default()
        };
        let out = rpca_decompose(&d, &cfg).unwrap();
        assert!(out.rain.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = DMatrix::from_fn(200, 90, |_, _| rng.random::<f64>());
        let cfg = RpcaConfig {
            max_iter: 15,
            seed: 42,
            ..RpcaConfig::default()
        };
        let a = rpca_decompose(&d, &cfg).unwrap();
        let b = rpca_decompose(&d, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_convergence_is_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = DMatrix::from_fn(40, 10, |_, _| rng.random::<f64>());
        let cfg = RpcaConfig {
            max_iter: 2,
            ..RpcaConfig::default()
        };
        let out = rpca_decompose(&d, &cfg).unwrap();
        assert_eq!(out.iterations, 2);
        assert!(!out.converged);
        assert!(out.final_residual > cfg.tol);
    }
}
