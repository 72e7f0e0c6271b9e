//! Writes the bundled synthetic survival dataset: 1342 rows, event times
//! `5000·Beta(1, 2)` censored by `5000·Beta(1, 4/3)`.
//!
//! `cargo run -p cextreme --example synthetic_dataset -- crates/core/data/synthetic_1342.csv`

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use cextreme::{CensoredSample, Distribution};

fn main() -> cextreme::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "synthetic_1342.csv".into());
    let f = Distribution::beta(1.0, 2.0)?;
    let g = Distribution::beta(1.0, 4.0 / 3.0)?;
    let mut rng = ChaCha20Rng::seed_from_u64(cextreme::DEFAULT_SEED);
    let sample = CensoredSample::generate(&f, &g, 1342, &mut rng)?.scaled(5000.0);
    sample.write_csv(&path)?;
    let censored = sample.delta().iter().filter(|d| !**d).count();
    eprintln!("wrote {path}: {} rows, {censored} censored", sample.len());
    Ok(())
}
