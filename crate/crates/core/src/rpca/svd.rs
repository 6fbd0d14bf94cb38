//! Thin and randomized SVD, singular value thresholding, spectral norm.

use nalgebra::{DMatrix, DVector, SVD};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// `u · diag(singular_values) · v_t`, singular values descending.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v_t: DMatrix<f64>,
}

const SVD_MAX_SWEEPS: usize = 10_000;

/// Thin SVD. Tall inputs are reduced by a QR factorization first so the
/// iterative part only sees a `cols × cols` matrix.
pub fn thin_svd(m: &DMatrix<f64>) -> Result<ThinSvd> {
    let (rows, cols) = m.shape();
    let fail = || Error::Solver { rows, cols };
    if rows >= 2 * cols {
        let qr = m.clone().qr();
        let (q, r) = (qr.q(), qr.r());
        let small = SVD::try_new(r, true, true, f64::EPSILON, SVD_MAX_SWEEPS).ok_or_else(fail)?;
        let u = q * small.u.ok_or_else(fail)?;
        Ok(ThinSvd {
            u,
            singular_values: small.singular_values,
            v_t: small.v_t.ok_or_else(fail)?,
        })
    } else {
        let svd = SVD::try_new(m.clone(), true, true, f64::EPSILON, SVD_MAX_SWEEPS).ok_or_else(fail)?;
        Ok(ThinSvd {
            u: svd.u.ok_or_else(fail)?,
            singular_values: svd.singular_values,
            v_t: svd.v_t.ok_or_else(fail)?,
        })
    }
}

/// Rebuilds `U · diag(max(σ − tau, 0)) · Vᵀ`, returning it with the number
/// of singular values that survived.
fn shrink(svd: &ThinSvd, tau: f64, rows: usize, cols: usize) -> (DMatrix<f64>, usize) {
    let kept: Vec<(usize, f64)> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > tau)
        .map(|(i, &s)| (i, s - tau))
        .collect();
    let mut out = DMatrix::zeros(rows, cols);
    for &(i, s) in &kept {
        // out += s * u_i * v_iᵀ
        out.ger(s, &svd.u.column(i), &svd.v_t.row(i).transpose(), 1.0);
    }
    (out, kept.len())
}

/// Singular value thresholding: the proximal operator of `tau·‖·‖_*`.
pub fn svt(m: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    if tau < 0.0 {
        return Err(Error::invalid(format!("threshold must be non-negative, got {tau}")));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("svt input"));
    }
    let svd = thin_svd(m)?;
    Ok(shrink(&svd, tau, m.nrows(), m.ncols()).0)
}

/// Stateful thresholding used inside the RPCA loop.
///
/// Up to `exact_max_cols` columns an exact thin SVD is used. Wider inputs
/// use a randomized range finder with `oversample` extra columns, doubling
/// the target rank until the smallest kept singular value drops below the
/// threshold. The previous call's rank seeds the next one.
#[derive(Debug, Clone)]
pub struct SvtEngine {
    pub exact_max_cols: usize,
    pub oversample: usize,
    pub power_iters: usize,
    rank_hint: usize,
    rng: ChaCha8Rng,
}

impl SvtEngine {
    pub fn new(exact_max_cols: usize, rng: ChaCha8Rng) -> Self {
        SvtEngine {
            exact_max_cols,
            oversample: 10,
            power_iters: 2,
            rank_hint: 1,
            rng,
        }
    }

    pub fn apply(&mut self, m: &DMatrix<f64>, tau: f64) -> Result<(DMatrix<f64>, usize)> {
        let (rows, cols) = m.shape();
        if cols <= self.exact_max_cols {
            let svd = thin_svd(m)?;
            return Ok(shrink(&svd, tau, rows, cols));
        }
        let full = rows.min(cols);
        let mut target = self.rank_hint.max(1);
        loop {
            let width = target + self.oversample;
            if width >= full {
                let svd = thin_svd(m)?;
                let (out, rank) = shrink(&svd, tau, rows, cols);
                self.rank_hint = rank + 1;
                return Ok((out, rank));
            }
            let svd = randomized_svd(m, width, self.power_iters, &mut self.rng)?;
            if svd.singular_values[target - 1] < tau {
                let (out, rank) = shrink(&svd, tau, rows, cols);
                self.rank_hint = rank + 1;
                return Ok((out, rank));
            }
            target *= 2;
        }
    }
}

/// Rank-`width` randomized SVD (Gaussian sketch + subspace iteration).
pub fn randomized_svd(
    m: &DMatrix<f64>,
    width: usize,
    power_iters: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ThinSvd> {
    let (rows, cols) = m.shape();
    let omega = DMatrix::from_fn(cols, width, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut q = (m * omega).qr().q();
    for _ in 0..power_iters {
        let z = (m.transpose() * &q).qr().q();
        q = (m * z).qr().q();
    }
    let small = q.transpose() * m;
    let svd = thin_svd(&small).map_err(|_| Error::Solver { rows, cols })?;
    Ok(ThinSvd {
        u: q * svd.u,
        singular_values: svd.singular_values,
        v_t: svd.v_t,
    })
}

/// Largest singular value by power iteration on `MᵀM` from a random start.
pub fn spectral_norm(m: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> f64 {
    let cols = m.ncols();
    let mut v = DVector::from_fn(cols, |_, _| rng.sample::<f64, _>(StandardNormal));
    let norm = v.norm();
    if norm == 0.0 {
        return 0.0;
    }
    v /= norm;
    let mut sigma = 0.0;
    for _ in 0..1000 {
        let mv = m * &v;
        let next_sigma = mv.norm();
        let mut w = m.transpose() * mv;
        let wn = w.norm();
        if wn == 0.0 {
            return 0.0;
        }
        w /= wn;
        v = w;
        if (next_sigma - sigma).abs() <= 1e-12 * next_sigma {
            return next_sigma;
        }
        sigma = next_sigma;
    }
    sigma
}
