//! Functions tabulated on a uniform grid.
//!
//! Every curve in the crate (densities, rates, estimates) is a [`GridFunction`]:
//! nodal values on `x_j = x_min + j * (x_max - x_min) / (m - 1)`, read as the
//! piecewise-linear interpolant of those values and extended by zero outside
//! `[x_min, x_max]`. Quadrature is the trapezoid rule throughout, which is the
//! exact integral of that interpolant.

use crate::error::{Error, Result};

/// Relative slack used when deciding whether a query point lies on the grid.
const EDGE_SLACK: f64 = 1e-12;

/// A closed interval `[a, b]` with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    a: f64,
    b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::invalid(format!("interval requires finite a < b, got [{a}, {b}]")));
        }
        Ok(Interval { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.a && x <= self.b
    }
}

/// A real function tabulated on a uniform grid over `[x_min, x_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    x_min: f64,
    x_max: f64,
    values: Vec<f64>,
}

impl GridFunction {
    /// Builds a grid function from nodal values; requires `m >= 2`, `x_max > x_min`
    /// and finite values.
    pub fn new(x_min: f64, x_max: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid(format!("grid needs at least 2 nodes, got {}", values.len())));
        }
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::invalid(format!("grid requires x_min < x_max, got [{x_min}, {x_max}]")));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value {} at node {j}", values[j])));
        }
        Ok(GridFunction { x_min, x_max, values })
    }

    /// Tabulates `f` on `m` uniform nodes over `[x_min, x_max]`.
    pub fn from_fn(x_min: f64, x_max: f64, m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::invalid(format!("grid needs at least 2 nodes, got {m}")));
        }
        let dx = (x_max - x_min) / (m - 1) as f64;
        let values = (0..m).map(|j| f(x_min + j as f64 * dx)).collect();
        GridFunction::new(x_min, x_max, values)
    }

    pub fn zeros(x_min: f64, x_max: f64, m: usize) -> Result<Self> {
        GridFunction::from_fn(x_min, x_max, m, |_| 0.0)
    }

    /// A function with the same grid and the given values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.m() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                self.m(),
                values.len()
            )));
        }
        GridFunction::new(self.x_min, self.x_max, values)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.m() - 1) as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let dx = self.spacing();
        (0..self.m()).map(move |j| self.x_min + j as f64 * dx)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn domain(&self) -> Interval {
        Interval {
            a: self.x_min,
            b: self.x_max,
        }
    }

    /// Nodewise map, keeping the grid.
    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = self.nodes().zip(&self.values).map(|(x, &v)| f(x, v)).collect();
        GridFunction::new(self.x_min, self.x_max, values)
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        self.map(|_, v| c * v)
    }

    /// Nodewise combination `a * self + b * other` on a shared grid.
    pub fn combine(&self, a: f64, other: &GridFunction, b: f64) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| a * u + b * v)
            .collect();
        GridFunction::new(self.x_min, self.x_max, values)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        let tol = EDGE_SLACK * (self.x_max - self.x_min).abs().max(1.0);
        self.m() == other.m()
            && (self.x_min - other.x_min).abs() <= tol
            && (self.x_max - other.x_max).abs() <= tol
    }

    pub fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "[{}, {}] x {} vs [{}, {}] x {}",
                self.x_min,
                self.x_max,
                self.m(),
                other.x_min,
                other.x_max,
                other.m()
            )))
        }
    }

    /// Trapezoid-rule integral over `[x_min, x_max]`.
    pub fn integrate(&self) -> f64 {
        let v = &self.values;
        let inner: f64 = v[1..v.len() - 1].iter().sum();
        self.spacing() * (inner + 0.5 * (v[0] + v[v.len() - 1]))
    }

    /// Trapezoid-rule integral restricted to `window`, i.e. the exact integral of
    /// the piecewise-linear interpolant over `window ∩ [x_min, x_max]`.
    pub fn integrate_over(&self, window: Interval) -> f64 {
        integrate_linear(self.x_min, self.spacing(), &self.values, window)
    }

    /// Piecewise-linear interpolation; zero outside `[x_min, x_max]`.
    pub fn interp_eval(&self, x: f64) -> f64 {
        let dx = self.spacing();
        let s = (x - self.x_min) / dx;
        let last = (self.m() - 1) as f64;
        let slack = EDGE_SLACK * last.max(1.0);
        if !(s >= -slack && s <= last + slack) {
            return 0.0;
        }
        let s = s.clamp(0.0, last);
        let j = (s.floor() as usize).min(self.m() - 2);
        let t = s - j as f64;
        (1.0 - t) * self.values[j] + t * self.values[j + 1]
    }

    /// Samples this function (by interpolation) onto the nodes of `template`.
    pub fn resample(&self, template: &GridFunction) -> Result<GridFunction> {
        template.map(|x, _| self.interp_eval(x))
    }

    /// `L²` norm over `window` by the trapezoid rule on `self²`.
    pub fn l2_norm(&self, window: Interval) -> Result<f64> {
        self.check_window(window)?;
        let sq: Vec<f64> = self.values.iter().map(|v| v * v).collect();
        Ok(integrate_linear(self.x_min, self.spacing(), &sq, window).max(0.0).sqrt())
    }

    /// `L²` distance over `window`: square root of the trapezoid integral of `(f - g)²`.
    pub fn l2_distance(&self, other: &GridFunction, window: Interval) -> Result<f64> {
        self.check_same_grid(other)?;
        self.check_window(window)?;
        let sq: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| (u - v) * (u - v))
            .collect();
        Ok(integrate_linear(self.x_min, self.spacing(), &sq, window).max(0.0).sqrt())
    }

    /// Central finite differences, one-sided at both ends.
    pub fn derivative(&self) -> Result<GridFunction> {
        let v = &self.values;
        let m = v.len();
        let dx = self.spacing();
        let mut d = vec![0.0; m];
        d[0] = (v[1] - v[0]) / dx;
        d[m - 1] = (v[m - 1] - v[m - 2]) / dx;
        for j in 1..m - 1 {
            d[j] = (v[j + 1] - v[j - 1]) / (2.0 * dx);
        }
        GridFunction::new(self.x_min, self.x_max, d)
    }

    fn check_window(&self, window: Interval) -> Result<()> {
        let tol = EDGE_SLACK * (self.x_max - self.x_min).max(1.0);
        if window.a < self.x_min - tol || window.b > self.x_max + tol {
            return Err(Error::invalid(format!(
                "window [{}, {}] exceeds grid [{}, {}]",
                window.a, window.b, self.x_min, self.x_max
            )));
        }
        Ok(())
    }
}

/// Exact integral over `window` of the linear interpolant of `values`.
fn integrate_linear(x_min: f64, dx: f64, values: &[f64], window: Interval) -> f64 {
    let m = values.len();
    let last = (m - 1) as f64;
    let lo = ((window.a - x_min) / dx).clamp(0.0, last);
    let hi = ((window.b - x_min) / dx).clamp(0.0, last);
    if hi <= lo {
        return 0.0;
    }
    let at = |s: f64| {
        let j = (s.floor() as usize).min(m - 2);
        let t = s - j as f64;
        (1.0 - t) * values[j] + t * values[j + 1]
    };
    let j_lo = lo.ceil() as usize;
    let j_hi = hi.floor() as usize;
    if j_lo > j_hi {
        // Window inside a single cell.
        return 0.5 * (at(lo) + at(hi)) * (hi - lo) * dx;
    }
    let mut total = 0.5 * (at(lo) + values[j_lo]) * (j_lo as f64 - lo);
    for j in j_lo..j_hi {
        total += 0.5 * (values[j] + values[j + 1]);
    }
    total += 0.5 * (values[j_hi] + at(hi)) * (hi - j_hi as f64);
    total * dx
}
