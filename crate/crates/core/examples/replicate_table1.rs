//! Fifty replications of the constant-rate model `g = B = 1` at `n = 1000`.
//!
//! ```text
//! cargo run --example replicate_table1 [-- <output dir>]
//! ```

use divrate::harness::{emit_report, run_experiment, ExperimentConfig};
use divrate::models::Rate;

fn main() -> divrate::Result<()> {
    let cfg = ExperimentConfig::new(Rate::Constant(1.0), Rate::Constant(1.0));
    let start = std::time::Instant::now();
    let report = run_experiment(&cfg)?;
    print!("{}", report.summary());
    println!("({:.1} s)", start.elapsed().as_secs_f64());
    if let Some(dir) = std::env::args().nth(1) {
        emit_report(&report, dir.as_ref())?;
        println!("wrote {dir}");
    }
    Ok(())
}
