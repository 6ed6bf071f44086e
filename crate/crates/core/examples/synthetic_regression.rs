//! Writes a synthetic regression data set with known coefficients.
//!
//! Usage: `cargo run -p pcd-core --example synthetic_regression [path]`

use std::fmt::Write as _;

use pcd_core::numkernel::Matrix;
use pcd_core::regression::simulate_pcd_response;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const SEED: u64 = 20_240_601;
const N: usize = 2000;
const BETA: [f64; 3] = [0.5, -0.3, 0.8];
const PHI: f64 = 1.0;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "data/synthetic_regression.csv".to_string());
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut rows = Vec::with_capacity(N);
    for _ in 0..N {
        let x1: f64 = rng.sample(StandardNormal);
        let x2: f64 = rng.random();
        rows.push(vec![1.0, x1, x2]);
    }
    let design = Matrix::from_rows(&rows)?;
    let y = simulate_pcd_response(&design, &BETA, PHI, &mut rng)?;
    let mut text = String::from("y,x1,x2\n");
    for (row, y) in rows.iter().zip(&y) {
        writeln!(text, "{y},{:.6},{:.6}", row[1], row[2])?;
    }
    std::fs::write(&path, text)?;
    eprintln!("wrote {N} rows to {path}");
    Ok(())
}
