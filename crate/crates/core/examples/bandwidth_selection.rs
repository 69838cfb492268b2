//! Goldenschluger–Lepski selection on one sample, next to the true error of
//! every candidate bandwidth.
//!
//! ```text
//! cargo run --example bandwidth_selection [-- <n> <seed>]
//! ```

use divrate::bandwidth::{build_bandwidth_grid, gl_criterion_density, gl_criterion_derivative, GLConfig, GridKind};
use divrate::eigensolve::{solve_eigenpair, SolveOptions};
use divrate::kernels::Estimators;
use divrate::models::{ModelSpec, Rate};
use divrate::numgrid::GridFunction;
use divrate::pipeline::relative_error;
use divrate::sampling::rejection_sample;

fn main() -> divrate::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(1000);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(3);

    let model = ModelSpec::new(Rate::Constant(1.0), Rate::Constant(1.0), 1.0, 4.0)?;
    let pair = solve_eigenpair(&model, 2001, &SolveOptions::default())?;
    let sample = rejection_sample(&pair.density, n, seed)?;
    let template = GridFunction::zeros(0.0, 4.0, 1001)?;
    let truth = pair.density.resample(&template)?;
    let flux = truth.map(|x, v| model.g.eval(x) * v)?.derivative()?;
    let window = template.domain();

    let est = Estimators::new(&sample, &model.g)?;
    let cfg = GLConfig::default();

    let grid = build_bandwidth_grid(n, GridKind::Density)?;
    let sel = gl_criterion_density(&est, &grid, &cfg, &template)?;
    println!("density: h, A(h), penalty, criterion, true relative error");
    for (i, &h) in grid.values().iter().enumerate() {
        let err = relative_error(&est.density(h, &template)?, &truth, window)?;
        let mark = if i == sel.index { "  <- selected" } else { "" };
        println!("{h:8.5} {:9.5} {:9.5} {:9.5} {err:8.4}{mark}", sel.a[i], sel.penalty[i], sel.criterion(i));
    }

    let grid = build_bandwidth_grid(n, GridKind::Derivative)?;
    let sel = gl_criterion_derivative(&est, &grid, &cfg, 1.0, &template)?;
    println!("\nderivative: h, A(h), penalty, criterion, true relative error");
    for (i, &h) in grid.values().iter().enumerate() {
        let err = relative_error(&est.derivative(h, &template)?, &flux, window)?;
        let mark = if i == sel.index { "  <- selected" } else { "" };
        println!("{h:8.5} {:9.5} {:9.5} {:9.5} {err:8.4}{mark}", sel.a[i], sel.penalty[i], sel.criterion(i));
    }
    Ok(())
}
