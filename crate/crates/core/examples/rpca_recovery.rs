// Splits a synthetic low-rank + sparse matrix and reports how well the
// low-rank part is recovered.
//
// cargo run --release --example rpca_recovery

use std::error::Error;

use nalgebra::DMatrix;
use rainkit::{rpca_decompose, RpcaConfig};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<f64, Box<dyn Error>> {
    let (m, n) = (120, 30);
    let mut rng = ChaCha8Rng::seed_from_u64(42);

    // Rank-2 "background" plus bright spikes on 5% of the entries.
    let u = DMatrix::from_fn(m, 2, |_, _| rng.random::<f64>());
    let v = DMatrix::from_fn(n, 2, |_, _| rng.random::<f64>());
    let low_rank = u * v.transpose() / 2.0;
    let mut sparse = DMatrix::zeros(m, n);
    for idx in sample(&mut rng, m * n, m * n / 20).into_iter() {
        sparse[idx] = rng.random_range(0.3..1.0);
    }
    let d = &low_rank + &sparse;

    let out = rpca_decompose(&d, &RpcaConfig::default())?;
    let err = (&out.background - &low_rank).norm() / low_rank.norm();
    let support_hits = out
        .rain
        .iter()
        .zip(sparse.iter())
        .filter(|(r, s)| (r.abs() > 1e-3) == (**s != 0.0))
        .count();

    println!("{m}x{n} matrix, {} spikes", m * n / 20);
    println!(
        "iterations {}, residual {:.2e}, rank {}, converged {}",
        out.iterations, out.final_residual, out.rank_estimate, out.converged
    );
    println!("relative background error {err:.2e}");
    println!("sparse support agreement {:.1}%", 100.0 * support_hits as f64 / (m * n) as f64);
    Ok(err)
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example().map(|_| ())
}
