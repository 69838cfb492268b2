//! Inverting `Lψ(x) = 4ψ(2x) - ψ(x)` on `[0, T]` for a smooth bump: the
//! approximate inverse `L_k⁻¹` against the exact series, for growing `k`.
//!
//! ```text
//! cargo run --example dilation_inverse
//! ```

use divrate::dilation::{apply_l, cell_averages, inverse_l_series, invert_lk};
use divrate::numgrid::GridFunction;

fn bump(x: f64) -> f64 {
    let u = (x - 1.0) / 0.8;
    if u.abs() < 1.0 {
        (-1.0 / (1.0 - u * u)).exp()
    } else {
        0.0
    }
}

fn main() -> divrate::Result<()> {
    let t = 4.0;
    let psi = GridFunction::from_fn(0.0, t, 1 << 16 | 1, bump)?;
    let phi = apply_l(&psi)?;
    let series = inverse_l_series(&phi, 60)?;
    let roundtrip = series
        .values()
        .iter()
        .zip(psi.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("series inverse vs bump: sup gap {roundtrip:.2e}");

    let mut previous = f64::NAN;
    println!("{:>6} {:>12} {:>8}", "k", "L2 error", "ratio");
    for k in [16, 64, 256, 1024, 4096] {
        let step = invert_lk(&cell_averages(&phi, t, k)?)?;
        let err = step.sample_on(&psi)?.l2_distance(&psi, psi.domain())?;
        println!("{k:>6} {err:>12.3e} {:>8.2}", previous / err);
        previous = err;
    }
    Ok(())
}
