//! Stable size distributions of the built-in models and the two integral
//! identities every eigenpair must satisfy.
//!
//! ```text
//! cargo run --example solve_eigenpair [-- <nodes>]
//! ```

use divrate::eigensolve::{eigen_residual, solve_eigenpair, SolveOptions};
use divrate::models::{ModelSpec, Rate};

fn main() -> divrate::Result<()> {
    let nodes: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(2001);
    let cases = [
        (Rate::Constant(1.0), Rate::Constant(1.0), 1.0),
        (Rate::Linear, Rate::Square, 1.0),
        (Rate::Constant(1.0), Rate::Steep, 1.0),
        (Rate::Constant(1.0), Rate::Bump, 1.0),
        (Rate::Linear, Rate::Square, 0.5),
        (Rate::Constant(2.0), Rate::Bump, 0.5),
    ];
    println!(
        "{:>6} {:>6} {:>5} {:>12} {:>7} {:>10} {:>10} {:>10}",
        "g", "B", "kappa", "lambda", "X_M", "residual", "BN gap", "moment gap"
    );
    for (g, b, kappa) in cases {
        let model = ModelSpec::new(g.clone(), b.clone(), kappa, 4.0)?;
        let pair = solve_eigenpair(&model, nodes, &SolveOptions::default())?;
        let n = &pair.density;
        let bn = n.map(|x, v| b.eval(x) * v)?.integrate();
        let xn = n.map(|x, v| x * v)?.integrate();
        let gn = n.map(|x, v| g.eval(x) * v)?.integrate();
        let residual = eigen_residual(&pair, &model)?;
        println!(
            "{:>6} {:>6} {:>5} {:>12.9} {:>7.2} {:>10.2e} {:>10.2e} {:>10.2e}",
            g.to_string(),
            b.to_string(),
            kappa,
            pair.lambda,
            n.x_max(),
            residual,
            (pair.lambda - bn).abs() / pair.lambda,
            (pair.lambda * xn - kappa * gn).abs() / (kappa * gn),
        );
    }
    Ok(())
}
