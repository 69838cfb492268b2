//! Gaussian kernel estimators of a density and of the derivative `(gN)'`.
//!
//! Kernel sums are evaluated with a fast Gauss transform: sources are binned
//! with width `σ`, each bin is summarized by a truncated Taylor expansion about
//! its centre, and every target only visits bins within `CUTOFF` bandwidths.
//! [`naive_sum`] is the reference double loop.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::models::Rate;
use crate::numgrid::GridFunction;
use crate::sampling::SizeSample;

/// Number of Taylor terms per bin.
const TERMS: usize = 24;
/// Sources farther than this many bandwidths from a target are ignored
/// (relative weight below `e^{-50}`).
const CUTOFF: f64 = 10.0;

/// Kernel family. Only the Gaussian is provided.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    Gaussian,
}

/// A kernel together with the norms that enter the bandwidth penalties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub family: KernelFamily,
    /// `‖K‖₁`
    pub norm_1: f64,
    /// `‖K‖₂`
    pub norm_2: f64,
    /// `‖K'‖₁`
    pub dnorm_1: f64,
    /// `‖K'‖₂`
    pub dnorm_2: f64,
}

impl KernelSpec {
    pub fn gaussian() -> Self {
        let sqrt_pi = PI.sqrt();
        KernelSpec {
            family: KernelFamily::Gaussian,
            norm_1: 1.0,
            norm_2: (2.0 * sqrt_pi).recip().sqrt(),
            dnorm_1: (2.0 / PI).sqrt(),
            dnorm_2: (4.0 * sqrt_pi).recip().sqrt(),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => (-0.5 * t * t).exp() / (2.0 * PI).sqrt(),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => -t * self.eval(t),
        }
    }

    /// Bandwidth of `K_h ⋆ K_h'`, which is again a Gaussian kernel.
    pub fn convolved_bandwidth(&self, h: f64, h_prime: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => h.hypot(h_prime),
        }
    }
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::gaussian()
    }
}

/// What a kernel sum returns at each target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumKind {
    /// `Σ w_i K_σ(x - X_i)`
    Value,
    /// `Σ w_i K_σ'(x - X_i)`
    Derivative,
}

/// Weighted sources sorted by position, reusable across bandwidths.
#[derive(Debug, Clone)]
pub struct KernelSum {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl KernelSum {
    pub fn new(points: &[f64], weights: &[f64]) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::invalid("points and weights differ in length"));
        }
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&i, &j| points[i].total_cmp(&points[j]));
        Ok(KernelSum {
            points: order.iter().map(|&i| points[i]).collect(),
            weights: order.iter().map(|&i| weights[i]).collect(),
        })
    }

    /// Evaluates the weighted Gaussian sum of bandwidth `sigma` at `targets`
    /// (which need not be sorted).
    pub fn eval(&self, sigma: f64, kind: SumKind, targets: &[f64]) -> Result<Vec<f64>> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::invalid(format!("bandwidth must be positive, got {sigma}")));
        }
        let bins = self.expand(sigma);
        let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
        let reach = CUTOFF + 0.5;
        Ok(targets
            .iter()
            .map(|&x| {
                let lo = bins.partition_point(|b| b.centre < x - reach * sigma);
                let mut total = 0.0;
                for bin in bins[lo..].iter().take_while(|b| b.centre <= x + reach * sigma) {
                    let t = (x - bin.centre) / sigma;
                    let gauss = (-0.5 * t * t).exp();
                    let c = &bin.coeffs;
                    match kind {
                        SumKind::Value => {
                            let mut q = 0.0;
                            for p in (0..TERMS).rev() {
                                q = q * t + c[p];
                            }
                            total += gauss * q;
                        }
                        SumKind::Derivative => {
                            let mut q = 0.0;
                            let mut dq = 0.0;
                            for p in (0..TERMS).rev() {
                                dq = dq * t + q;
                                q = q * t + c[p];
                            }
                            total += gauss * (dq - t * q) / sigma;
                        }
                    }
                }
                total * norm
            })
            .collect())
    }

    /// Taylor coefficients `A_p = Σ w e^{-δ²/2} δ^p / p!` per occupied bin, with
    /// `δ = (X - centre) / σ`.
    fn expand(&self, sigma: f64) -> Vec<Bin> {
        let mut bins: Vec<Bin> = Vec::new();
        let mut current = i64::MIN;
        for (&x, &w) in self.points.iter().zip(&self.weights) {
            let index = (x / sigma).floor() as i64;
            if index != current {
                current = index;
                bins.push(Bin {
                    centre: (index as f64 + 0.5) * sigma,
                    coeffs: [0.0; TERMS],
                });
            }
            let bin = bins.last_mut().expect("bin was just pushed");
            let delta = (x - bin.centre) / sigma;
            let mut term = w * (-0.5 * delta * delta).exp();
            for (p, c) in bin.coeffs.iter_mut().enumerate() {
                *c += term;
                term *= delta / (p + 1) as f64;
            }
        }
        bins
    }
}

#[derive(Debug, Clone)]
struct Bin {
    centre: f64,
    coeffs: [f64; TERMS],
}

/// Reference `O(n·m)` evaluation of the same sums as [`KernelSum::eval`].
pub fn naive_sum(
    points: &[f64],
    weights: &[f64],
    sigma: f64,
    kind: SumKind,
    targets: &[f64],
) -> Vec<f64> {
    let k = KernelSpec::gaussian();
    targets
        .iter()
        .map(|&x| {
            points
                .iter()
                .zip(weights)
                .map(|(&p, &w)| {
                    let t = (x - p) / sigma;
                    match kind {
                        SumKind::Value => w * k.eval(t) / sigma,
                        SumKind::Derivative => w * k.derivative(t) / (sigma * sigma),
                    }
                })
                .sum()
        })
        .collect()
}

/// Kernel estimators built on one sample; sources are sorted once and shared
/// by every bandwidth.
#[derive(Debug, Clone)]
pub struct Estimators {
    n: usize,
    density: KernelSum,
    flux: KernelSum,
    kernel: KernelSpec,
}

impl Estimators {
    /// `g` weights the derivative estimator; it is evaluated at each sample point.
    pub fn new(sample: &SizeSample, g: &Rate) -> Result<Self> {
        let xs = sample.values();
        let n = xs.len();
        let unit = vec![1.0 / n as f64; n];
        let weighted: Vec<f64> = xs.iter().map(|&x| g.eval(x) / n as f64).collect();
        Ok(Estimators {
            n,
            density: KernelSum::new(xs, &unit)?,
            flux: KernelSum::new(xs, &weighted)?,
            kernel: KernelSpec::gaussian(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// `N̂_h`
    pub fn density(&self, h: f64, template: &GridFunction) -> Result<GridFunction> {
        self.tabulate(&self.density, h, SumKind::Value, template)
    }

    /// `N̂_{h,h'}`, the estimator with kernel `K_h ⋆ K_h'`.
    pub fn density_pair(&self, h: f64, h_prime: f64, template: &GridFunction) -> Result<GridFunction> {
        check_bandwidth(h_prime)?;
        let sigma = self.kernel.convolved_bandwidth(h, h_prime);
        self.tabulate(&self.density, sigma, SumKind::Value, template)
    }

    /// `D̂_h`, the estimator of `(gN)'`.
    pub fn derivative(&self, h: f64, template: &GridFunction) -> Result<GridFunction> {
        self.tabulate(&self.flux, h, SumKind::Derivative, template)
    }

    /// `D̂_{h,h'}`
    pub fn derivative_pair(
        &self,
        h: f64,
        h_prime: f64,
        template: &GridFunction,
    ) -> Result<GridFunction> {
        check_bandwidth(h_prime)?;
        let sigma = self.kernel.convolved_bandwidth(h, h_prime);
        self.tabulate(&self.flux, sigma, SumKind::Derivative, template)
    }

    /// Raw node values of the `Value` or `Derivative` sum at bandwidth `sigma`.
    pub(crate) fn values(&self, sigma: f64, kind: SumKind, template: &GridFunction) -> Result<Vec<f64>> {
        let sum = match kind {
            SumKind::Value => &self.density,
            SumKind::Derivative => &self.flux,
        };
        let nodes: Vec<f64> = template.nodes().collect();
        sum.eval(sigma, kind, &nodes)
    }

    fn tabulate(
        &self,
        sum: &KernelSum,
        sigma: f64,
        kind: SumKind,
        template: &GridFunction,
    ) -> Result<GridFunction> {
        check_bandwidth(sigma)?;
        let nodes: Vec<f64> = template.nodes().collect();
        template.with_values(sum.eval(sigma, kind, &nodes)?)
    }
}

fn check_bandwidth(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("bandwidth must be positive, got {h}")))
    }
}

pub fn estimate_density(sample: &SizeSample, h: f64, template: &GridFunction) -> Result<GridFunction> {
    Estimators::new(sample, &Rate::Constant(1.0))?.density(h, template)
}

pub fn estimate_density_pair(
    sample: &SizeSample,
    h: f64,
    h_prime: f64,
    template: &GridFunction,
) -> Result<GridFunction> {
    check_bandwidth(h)?;
    Estimators::new(sample, &Rate::Constant(1.0))?.density_pair(h, h_prime, template)
}

pub fn estimate_derivative(
    sample: &SizeSample,
    g: &Rate,
    h: f64,
    template: &GridFunction,
) -> Result<GridFunction> {
    Estimators::new(sample, g)?.derivative(h, template)
}

pub fn estimate_derivative_pair(
    sample: &SizeSample,
    g: &Rate,
    h: f64,
    h_prime: f64,
    template: &GridFunction,
) -> Result<GridFunction> {
    check_bandwidth(h)?;
    Estimators::new(sample, g)?.derivative_pair(h, h_prime, template)
}
