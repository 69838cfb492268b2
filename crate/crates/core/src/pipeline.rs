//! From a size sample to estimates of `N`, `(gN)'`, `H = BN` and `B`.

use std::collections::BTreeMap;

use crate::bandwidth::{
    build_bandwidth_grid, gl_criterion_density, gl_criterion_derivative, GLConfig, GridKind,
    Selection,
};
use crate::dilation::{cell_averages, invert_lk, StepFunction};
use crate::error::{Error, Result};
use crate::kernels::Estimators;
use crate::models::Rate;
use crate::numgrid::{GridFunction, Interval};
use crate::sampling::SizeSample;

/// Number of cells used by the approximate inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellCount {
    /// One cell per observation.
    SampleSize,
    Fixed(usize),
}

impl CellCount {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            CellCount::SampleSize => n,
            CellCount::Fixed(k) => k,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub gl: GLConfig,
    pub k: CellCount,
    /// Right end of the inversion interval `[0, T]`.
    pub t: f64,
    /// Right end of the evaluation grid.
    pub x_max: f64,
    /// Nodes of the evaluation grid.
    pub nodes: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            gl: GLConfig::default(),
            k: CellCount::SampleSize,
            t: 4.0,
            x_max: 4.0,
            nodes: 1001,
        }
    }
}

impl PipelineConfig {
    pub fn template(&self) -> Result<GridFunction> {
        GridFunction::zeros(0.0, self.x_max, self.nodes)
    }
}

#[derive(Debug, Clone)]
pub struct EstimationResult {
    pub h_hat: f64,
    pub h_tilde: f64,
    pub rho_hat: f64,
    pub kappa_hat: f64,
    pub lambda_used: f64,
    pub n_hat: GridFunction,
    pub d_hat: GridFunction,
    pub h_step: StepFunction,
    pub b_tilde: GridFunction,
    pub density_selection: Selection,
    pub derivative_selection: Selection,
    pub diagnostics: BTreeMap<String, f64>,
}

/// `ρ̂ = ΣX_i / (Σg(X_i) + c)`.
pub fn estimate_rho(sample: &SizeSample, g: &Rate, c: f64) -> Result<f64> {
    let xs = sample.values();
    let num: f64 = xs.iter().sum();
    let den: f64 = xs.iter().map(|&x| g.eval(x)).sum::<f64>() + c;
    if !(den > 0.0) {
        return Err(Error::DegenerateDenominator(format!(
            "sum of g over the sample plus c is {den}"
        )));
    }
    Ok(num / den)
}

/// `κ̂ = λ̂ ρ̂`.
pub fn estimate_kappa(lambda_hat: f64, rho_hat: f64) -> f64 {
    lambda_hat * rho_hat
}

/// Runs both bandwidth selections, forms `φ = κ̂ D̂ + λ N̂` on the evaluation
/// grid and inverts the dilation operator on `[0, T]`.
pub fn estimate(
    sample: &SizeSample,
    g: &Rate,
    lambda: f64,
    cfg: &PipelineConfig,
) -> Result<EstimationResult> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::invalid(format!("lambda must be positive, got {lambda}")));
    }
    let template = cfg.template()?;
    if cfg.t > cfg.x_max * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "T = {} exceeds the evaluation grid end {}",
            cfg.t, cfg.x_max
        )));
    }
    let n = sample.n();
    let g_sup = match cfg.gl.g_sup {
        Some(s) => s,
        None => template.nodes().map(|x| g.eval(x)).fold(0.0, f64::max),
    };

    let est = Estimators::new(sample, g)?;
    let density_grid = build_bandwidth_grid(n, GridKind::Density)?;
    let derivative_grid = build_bandwidth_grid(n, GridKind::Derivative)?;
    let density_selection = gl_criterion_density(&est, &density_grid, &cfg.gl, &template)?;
    let derivative_selection =
        gl_criterion_derivative(&est, &derivative_grid, &cfg.gl, g_sup, &template)?;

    let rho_hat = estimate_rho(sample, g, cfg.gl.c)?;
    let kappa_hat = estimate_kappa(lambda, rho_hat);
    let n_hat = density_selection.estimate.clone();
    let d_hat = derivative_selection.estimate.clone();
    let phi = d_hat.combine(kappa_hat, &n_hat, lambda)?;

    let k = cfg.k.resolve(n);
    let cells = cell_averages(&phi, cfg.t, k)?;
    let h_step = invert_lk(&cells)?;
    let b_tilde = estimate_b(&h_step, &n_hat, n)?;

    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("g_sup".into(), g_sup);
    diagnostics.insert("k".into(), k as f64);
    diagnostics.insert(
        "density_extremal".into(),
        density_selection.is_extremal() as u8 as f64,
    );
    diagnostics.insert(
        "derivative_extremal".into(),
        derivative_selection.is_extremal() as u8 as f64,
    );
    let negative = cells.phi_bar.iter().filter(|v| **v < 0.0).count();
    diagnostics.insert("negative_phi_cells".into(), negative as f64);

    Ok(EstimationResult {
        h_hat: density_selection.selected(),
        h_tilde: derivative_selection.selected(),
        rho_hat,
        kappa_hat,
        lambda_used: lambda,
        n_hat,
        d_hat,
        h_step,
        b_tilde,
        density_selection,
        derivative_selection,
        diagnostics,
    })
}

/// `B̃ = clip(Ĥ / N̂, ±√n)` at the nodes of `n_hat`, with `0/0 = 0`.
pub fn estimate_b(h_step: &StepFunction, n_hat: &GridFunction, n: usize) -> Result<GridFunction> {
    let cap = (n as f64).sqrt();
    n_hat.map(|x, den| {
        let num = h_step.eval(x);
        if num == 0.0 {
            0.0
        } else if den == 0.0 {
            cap.copysign(num)
        } else {
            (num / den).clamp(-cap, cap)
        }
    })
}

/// `‖est - truth‖₂ / ‖truth‖₂` over `window`.
pub fn relative_error(est: &GridFunction, truth: &GridFunction, window: Interval) -> Result<f64> {
    let norm = truth.l2_norm(window)?;
    if !(norm > 0.0) {
        return Err(Error::invalid("truth vanishes on the error window"));
    }
    Ok(est.l2_distance(truth, window)? / norm)
}

/// Relative error of a step function, sampled at the nodes of `truth`.
pub fn relative_error_step(
    est: &StepFunction,
    truth: &GridFunction,
    window: Interval,
) -> Result<f64> {
    relative_error(&est.sample_on(truth)?, truth, window)
}
