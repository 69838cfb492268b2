//! Kernel estimates of `N` and `(gN)'` at a few fixed bandwidths, and the fast
//! Gauss transform timed against the direct double loop.
//!
//! ```text
//! cargo run --example kernel_estimates
//! ```

use std::time::Instant;

use divrate::eigensolve::{solve_eigenpair, SolveOptions};
use divrate::kernels::{naive_sum, Estimators, KernelSum, SumKind};
use divrate::models::{ModelSpec, Rate};
use divrate::numgrid::GridFunction;
use divrate::pipeline::relative_error;
use divrate::sampling::rejection_sample;

fn main() -> divrate::Result<()> {
    let model = ModelSpec::new(Rate::Linear, Rate::Square, 1.0, 4.0)?;
    let pair = solve_eigenpair(&model, 2001, &SolveOptions::default())?;
    let n = 10_000;
    let sample = rejection_sample(&pair.density, n, 1)?;
    let template = GridFunction::zeros(0.0, 4.0, 1001)?;
    let truth = pair.density.resample(&template)?;
    let flux = truth.map(|x, v| x * v)?.derivative()?;
    let est = Estimators::new(&sample, &model.g)?;

    println!("{:>6} {:>10} {:>10}", "h", "err N", "err (gN)'");
    for h in [0.5, 0.2, 0.1, 0.05, 0.02] {
        let e_n = relative_error(&est.density(h, &template)?, &truth, template.domain())?;
        let e_d = relative_error(&est.derivative(h, &template)?, &flux, template.domain())?;
        println!("{h:>6} {e_n:>10.4} {e_d:>10.4}");
    }

    let weights = vec![1.0 / n as f64; n];
    let nodes: Vec<f64> = template.nodes().collect();
    let sum = KernelSum::new(sample.values(), &weights)?;
    for sigma in [0.3, 0.01] {
        let t = Instant::now();
        let fast = sum.eval(sigma, SumKind::Value, &nodes)?;
        let t_fast = t.elapsed();
        let t = Instant::now();
        let slow = naive_sum(sample.values(), &weights, sigma, SumKind::Value, &nodes);
        let t_slow = t.elapsed();
        let gap = fast.iter().zip(&slow).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!("sigma = {sigma}: fast {t_fast:?}, direct {t_slow:?}, max gap {gap:.1e}");
    }
    Ok(())
}
