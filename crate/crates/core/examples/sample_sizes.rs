//! Rejection sampling from a stable size distribution, checked with the
//! Kolmogorov–Smirnov distance.
//!
//! ```text
//! cargo run --example sample_sizes [-- <n> <seed>]
//! ```

use divrate::eigensolve::{solve_eigenpair, SolveOptions};
use divrate::models::{ModelSpec, Rate};
use divrate::sampling::{envelope_constant, ks_distance, rejection_sample};

fn main() -> divrate::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(100_000);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(42);

    let model = ModelSpec::new(Rate::Linear, Rate::Square, 1.0, 4.0)?;
    let pair = solve_eigenpair(&model, 2001, &SolveOptions::default())?;
    let sample = rejection_sample(&pair.density, n, seed)?;

    let mean_n = pair.density.map(|x, v| x * v)?.integrate();
    let ks = ks_distance(&sample, &pair.density)?;
    println!("n = {n}, seed = {seed}");
    println!("sample mean       {:.5}  (density mean {mean_n:.5})", sample.mean());
    println!(
        "proposals/accept  {:.4}  (envelope constant {:.4})",
        sample.proposals() as f64 / n as f64,
        envelope_constant(&pair.density)
    );
    println!("KS distance       {ks:.5}  (99.9% gate {:.5})", 1.95 / (n as f64).sqrt());
    Ok(())
}
