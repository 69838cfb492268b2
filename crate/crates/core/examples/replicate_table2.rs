//! Linear growth `g(x) = x` with `B(x) = x²` across sample sizes, compared with
//! the `n^{-1/5}` trend.
//!
//! ```text
//! cargo run --example replicate_table2 [-- <replications> [<output dir>]]
//! ```

use divrate::harness::{emit_report, run_experiment, ExperimentConfig};
use divrate::models::Rate;

fn main() -> divrate::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut cfg = ExperimentConfig::new(Rate::Linear, Rate::Square);
    cfg.n_values = vec![1000, 5000, 10_000, 50_000];
    cfg.replications = args.next().and_then(|a| a.parse().ok()).unwrap_or(10);

    let start = std::time::Instant::now();
    let report = run_experiment(&cfg)?;
    print!("{}", report.summary());
    for a in &report.aggregates {
        println!("n = {:>6}: err_H / n^-1/5 = {:.2}", a.n, a.mean[2] / a.n_pow());
    }
    println!("({:.1} s)", start.elapsed().as_secs_f64());
    if let Some(dir) = args.next() {
        emit_report(&report, dir.as_ref())?;
        println!("wrote {dir}");
    }
    Ok(())
}
