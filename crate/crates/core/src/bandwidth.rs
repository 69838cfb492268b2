//! Goldenschluger–Lepski bandwidth selection on a finite logarithmic grid.

use crate::error::{Error, Result};
use crate::kernels::{Estimators, SumKind};
use crate::numgrid::GridFunction;

/// Candidate bandwidths, strictly decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthGrid {
    values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    /// Denominators up to `n`.
    Density,
    /// Denominators up to `floor(√n)`.
    Derivative,
}

impl BandwidthGrid {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("bandwidth grid is empty"));
        }
        if values.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::invalid("bandwidths must be positive"));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        values.dedup();
        Ok(BandwidthGrid { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values[0]
    }

    pub fn min(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

/// `{1/d}` for `d = 1, …, 9, 10, 20, …, 90, 100, 200, …` up to `D_max`, with
/// `D_max` itself always included.
pub fn build_bandwidth_grid(n: usize, kind: GridKind) -> Result<BandwidthGrid> {
    if n == 0 {
        return Err(Error::invalid("sample size must be positive"));
    }
    let d_max = match kind {
        GridKind::Density => n as u64,
        GridKind::Derivative => ((n as f64).sqrt().floor() as u64).max(1),
    };
    let mut denominators = Vec::new();
    let mut decade = 1u64;
    'outer: loop {
        for d in 1..=9 {
            let v = d * decade;
            if v > d_max {
                break 'outer;
            }
            denominators.push(v);
        }
        decade *= 10;
    }
    if denominators.last() != Some(&d_max) {
        denominators.push(d_max);
    }
    BandwidthGrid::new(denominators.into_iter().map(|d| 1.0 / d as f64).collect())
}

/// Tuning constants of the selection rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GLConfig {
    /// `ε` in `χ = (1 + ε)(1 + ‖K‖₁)`.
    pub epsilon: f64,
    /// `ε̃` in `χ̃ = (1 + ε̃)(1 + ‖K‖₁)`.
    pub epsilon_tilde: f64,
    /// `‖g‖∞` used in the derivative penalty; `None` takes the maximum of `g`
    /// over the estimation grid.
    pub g_sup: Option<f64>,
    /// Regularizer added to the denominator of `ρ̂`.
    pub c: f64,
}

impl Default for GLConfig {
    fn default() -> Self {
        GLConfig {
            epsilon: 0.1,
            epsilon_tilde: 0.1,
            g_sup: None,
            c: 0.0,
        }
    }
}

impl GLConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon_tilde > 0.0) {
            return Err(Error::invalid("epsilon and epsilon_tilde must be positive"));
        }
        if let Some(s) = self.g_sup {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::invalid(format!("g_sup must be positive, got {s}")));
            }
        }
        if !(self.c.is_finite() && self.c >= 0.0) {
            return Err(Error::invalid(format!("c must be nonnegative, got {}", self.c)));
        }
        Ok(())
    }
}

/// Outcome of one selection: the bias proxy `A(h)`, the penalty and the winner.
#[derive(Debug, Clone)]
pub struct Selection {
    pub grid: BandwidthGrid,
    pub a: Vec<f64>,
    pub penalty: Vec<f64>,
    pub index: usize,
    /// The estimator at the selected bandwidth.
    pub estimate: GridFunction,
}

impl Selection {
    pub fn selected(&self) -> f64 {
        self.grid.values()[self.index]
    }

    pub fn criterion(&self, i: usize) -> f64 {
        self.a[i] + self.penalty[i]
    }

    /// True when the winner is the largest or smallest candidate.
    pub fn is_extremal(&self) -> bool {
        self.index == 0 || self.index + 1 == self.grid.len()
    }
}

/// Selects `ĥ` for the density estimator. `template` fixes the grid on which
/// the `L²` norms are computed.
pub fn gl_criterion_density(
    est: &Estimators,
    grid: &BandwidthGrid,
    cfg: &GLConfig,
    template: &GridFunction,
) -> Result<Selection> {
    cfg.validate()?;
    let k = est.kernel();
    let chi = (1.0 + cfg.epsilon) * (1.0 + k.norm_1);
    let n = est.n() as f64;
    let penalty = |h: f64| chi * k.norm_2 / (n * h).sqrt();
    select(est, grid, SumKind::Value, penalty, template)
}

/// Selects `h̃` for the derivative estimator.
pub fn gl_criterion_derivative(
    est: &Estimators,
    grid: &BandwidthGrid,
    cfg: &GLConfig,
    g_sup: f64,
    template: &GridFunction,
) -> Result<Selection> {
    cfg.validate()?;
    if !(g_sup.is_finite() && g_sup > 0.0) {
        return Err(Error::invalid(format!("sup of g must be positive, got {g_sup}")));
    }
    let k = est.kernel();
    let chi = (1.0 + cfg.epsilon_tilde) * (1.0 + k.norm_1);
    let n = est.n() as f64;
    let penalty = |h: f64| chi * g_sup * k.dnorm_2 / (n * h * h * h).sqrt();
    select(est, grid, SumKind::Derivative, penalty, template)
}

fn select(
    est: &Estimators,
    grid: &BandwidthGrid,
    kind: SumKind,
    penalty: impl Fn(f64) -> f64,
    template: &GridFunction,
) -> Result<Selection> {
    if grid.is_empty() {
        return Err(Error::invalid("bandwidth grid is empty"));
    }
    let hs = grid.values();
    let m = hs.len();
    let plain: Vec<Vec<f64>> = hs
        .iter()
        .map(|&h| est.values(h, kind, template))
        .collect::<Result<_>>()?;
    let pen: Vec<f64> = hs.iter().map(|&h| penalty(h)).collect();
    let dx = template.spacing();

    // The pair estimator is symmetric in (h, h'), so each convolved bandwidth is
    // evaluated once and its distance to both plain estimators is recorded.
    let mut a = vec![0.0f64; m];
    for i in 0..m {
        for j in i..m {
            let sigma = est.kernel().convolved_bandwidth(hs[i], hs[j]);
            let pair = est.values(sigma, kind, template)?;
            // A(h_i) compares against N̂_{h_j}; A(h_j) against N̂_{h_i}.
            let d_ij = l2_dist(dx, &pair, &plain[j]);
            a[i] = a[i].max(d_ij - pen[j]);
            if j != i {
                let d_ji = l2_dist(dx, &pair, &plain[i]);
                a[j] = a[j].max(d_ji - pen[i]);
            }
        }
    }
    // Ties go to the larger bandwidth, i.e. the earlier index.
    let mut index = 0;
    for i in 1..m {
        if a[i] + pen[i] < a[index] + pen[index] {
            index = i;
        }
    }
    let estimate = template.with_values(plain.into_iter().nth(index).expect("index in range"))?;
    Ok(Selection {
        grid: grid.clone(),
        a,
        penalty: pen,
        index,
        estimate,
    })
}

/// Trapezoid `L²` distance of two node vectors with spacing `dx`.
fn l2_dist(dx: f64, u: &[f64], v: &[f64]) -> f64 {
    let last = u.len() - 1;
    let mut s = 0.0;
    for (j, (a, b)) in u.iter().zip(v).enumerate() {
        let d = (a - b) * (a - b);
        s += if j == 0 || j == last { 0.5 * d } else { d };
    }
    (s * dx).sqrt()
}
