//! The dilation operator `L ψ(x) = 4ψ(2x) - ψ(x)`, its series inverse and the
//! piecewise-constant approximate inverse `L_k⁻¹` on `[0, T]`.

use crate::error::{Error, Result};
use crate::numgrid::{GridFunction, Interval};

/// Piecewise-constant function on the `k` uniform cells of `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    t: f64,
    heights: Vec<f64>,
}

impl StepFunction {
    pub fn new(t: f64, heights: Vec<f64>) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::invalid(format!("T must be positive, got {t}")));
        }
        if heights.is_empty() {
            return Err(Error::invalid("step function needs at least one cell"));
        }
        if heights.iter().any(|h| !h.is_finite()) {
            return Err(Error::invalid("step heights must be finite"));
        }
        Ok(StepFunction { t, heights })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn k(&self) -> usize {
        self.heights.len()
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn width(&self) -> f64 {
        self.t / self.k() as f64
    }

    pub fn cell(&self, i: usize) -> (f64, f64) {
        let w = self.width();
        (i as f64 * w, (i + 1) as f64 * w)
    }

    pub fn midpoints(&self) -> impl Iterator<Item = f64> + '_ {
        let w = self.width();
        (0..self.k()).map(move |i| (i as f64 + 0.5) * w)
    }

    /// Height of the cell containing `x`; the right end `T` belongs to the last
    /// cell and points outside `[0, T]` evaluate to zero.
    pub fn eval(&self, x: f64) -> f64 {
        if !(0.0..=self.t).contains(&x) {
            return 0.0;
        }
        let i = ((x / self.width()).floor() as usize).min(self.k() - 1);
        self.heights[i]
    }

    /// Exact `L²[0, T]` norm.
    pub fn l2_norm(&self) -> f64 {
        (self.width() * self.heights.iter().map(|h| h * h).sum::<f64>()).sqrt()
    }

    /// Evaluates the step function at the nodes of `template`.
    pub fn sample_on(&self, template: &GridFunction) -> Result<GridFunction> {
        template.map(|x, _| self.eval(x))
    }
}

/// Averages `φ_{i,k} = (k/T) ∫ φ` over the cells of `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellAverages {
    pub t: f64,
    pub phi_bar: Vec<f64>,
}

impl CellAverages {
    pub fn k(&self) -> usize {
        self.phi_bar.len()
    }
}

/// `4ψ(2x) - ψ(x)` at every node, with `ψ(2x) = 0` beyond the grid.
pub fn apply_l(psi: &GridFunction) -> Result<GridFunction> {
    psi.map(|x, v| 4.0 * psi.interp_eval(2.0 * x) - v)
}

/// Truncated series `Σ_{n=1}^{terms} 4^{-n} φ(2^{-n} x)`.
pub fn inverse_l_series(phi: &GridFunction, terms: usize) -> Result<GridFunction> {
    if terms == 0 {
        return Err(Error::invalid("series needs at least one term"));
    }
    phi.map(|x, _| {
        let mut total = 0.0;
        let mut weight = 1.0;
        let mut point = x;
        for _ in 0..terms {
            weight *= 0.25;
            point *= 0.5;
            total += weight * phi.interp_eval(point);
        }
        total
    })
}

/// Cell averages of the linear interpolant of `phi` on `k` cells of `[0, T]`.
/// The interpolant is integrated exactly, which coincides with the trapezoid
/// rule on any point set containing the grid nodes inside each cell.
pub fn cell_averages(phi: &GridFunction, t: f64, k: usize) -> Result<CellAverages> {
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    let tol = 1e-12 * phi.x_max().abs().max(1.0);
    if !(t > phi.x_min() && t <= phi.x_max() + tol) || phi.x_min() > 0.0 {
        return Err(Error::invalid(format!(
            "[0, {t}] is not covered by the grid [{}, {}]",
            phi.x_min(),
            phi.x_max()
        )));
    }
    let w = t / k as f64;
    let phi_bar = (0..k)
        .map(|i| {
            let cell = Interval::new(i as f64 * w, (i + 1) as f64 * w)?;
            Ok(phi.integrate_over(cell) / w)
        })
        .collect::<Result<_>>()?;
    Ok(CellAverages { t, phi_bar })
}

/// `L_k⁻¹`: heights from `H_i = ¼(H_{i/2} + φ_{i/2})`, where a half index is
/// the mean of its two neighbours for odd `i`.
pub fn invert_lk(cells: &CellAverages) -> Result<StepFunction> {
    let phi = &cells.phi_bar;
    let k = phi.len();
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    let mut h = vec![0.0; k];
    h[0] = phi[0] / 3.0;
    if k > 1 {
        h[1] = 4.0 / 21.0 * phi[0] + phi[1] / 7.0;
    }
    for i in 2..k {
        h[i] = if i % 2 == 0 {
            0.25 * (h[i / 2] + phi[i / 2])
        } else {
            let (l, r) = ((i - 1) / 2, (i + 1) / 2);
            0.125 * (h[l] + h[r] + phi[l] + phi[r])
        };
    }
    StepFunction::new(cells.t, h)
}
