//! Rejection sampling of cell sizes from a tabulated density.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numgrid::GridFunction;

/// Safety factor applied to the nodal maximum when building the envelope.
const ENVELOPE_MARGIN: f64 = 1.0001;

/// An i.i.d. sample of sizes and the seed it was drawn with.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeSample {
    values: Vec<f64>,
    seed: u64,
    proposals: u64,
}

impl SizeSample {
    /// Wraps externally supplied sizes. All values must be finite and nonnegative.
    pub fn new(values: Vec<f64>, seed: u64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("sample is empty"));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::invalid(format!("sizes must be finite and nonnegative, got {v}")));
        }
        let proposals = values.len() as u64;
        Ok(SizeSample {
            values,
            seed,
            proposals,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Total number of uniform proposals consumed by the rejection sampler.
    pub fn proposals(&self) -> u64 {
        self.proposals
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.n() as f64
    }
}

/// Envelope constant: expected number of proposals per accepted draw.
pub fn envelope_constant(density: &GridFunction) -> f64 {
    ENVELOPE_MARGIN * density.max_value() * (density.x_max() - density.x_min())
        / density.integrate()
}

/// Draws `n` sizes from the density proportional to the linear interpolant of
/// `density`, proposing uniformly on its domain. Draw `i` uses its own ChaCha
/// stream, so the result does not depend on how draws are scheduled.
pub fn rejection_sample(density: &GridFunction, n: usize, seed: u64) -> Result<SizeSample> {
    if n == 0 {
        return Err(Error::invalid("sample size must be positive"));
    }
    if density.values().iter().any(|v| *v < 0.0) {
        return Err(Error::DegenerateDensity("density has negative values".into()));
    }
    let top = ENVELOPE_MARGIN * density.max_value();
    if !(top > 0.0) {
        return Err(Error::DegenerateDensity("density is identically zero".into()));
    }
    let (a, b) = (density.x_min(), density.x_max());
    let draws: Vec<(f64, u64)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let mut tries = 0;
            loop {
                tries += 1;
                let x = a + (b - a) * rng.random::<f64>();
                let u = top * rng.random::<f64>();
                if u < density.interp_eval(x) {
                    return (x, tries);
                }
            }
        })
        .collect();
    let proposals = draws.iter().map(|d| d.1).sum();
    Ok(SizeSample {
        values: draws.into_iter().map(|d| d.0).collect(),
        seed,
        proposals,
    })
}

/// Distribution function of the normalized linear interpolant of a density.
#[derive(Debug, Clone)]
pub struct Cdf {
    density: GridFunction,
    /// Normalized cumulative mass at each node.
    cumulative: Vec<f64>,
}

impl Cdf {
    pub fn new(density: &GridFunction) -> Result<Self> {
        let v = density.values();
        let dx = density.spacing();
        let mut cumulative = Vec::with_capacity(v.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in v.windows(2) {
            acc += 0.5 * (w[0] + w[1]) * dx;
            cumulative.push(acc);
        }
        if !(acc > 0.0) || v.iter().any(|x| *x < 0.0) {
            return Err(Error::DegenerateDensity(
                "density must be nonnegative with positive mass".into(),
            ));
        }
        let scale = 1.0 / acc;
        let density = density.scale(scale)?;
        cumulative.iter_mut().for_each(|c| *c *= scale);
        Ok(Cdf {
            density,
            cumulative,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let d = &self.density;
        if x <= d.x_min() {
            return 0.0;
        }
        if x >= d.x_max() {
            return 1.0;
        }
        let dx = d.spacing();
        let s = (x - d.x_min()) / dx;
        let j = (s.floor() as usize).min(d.m() - 2);
        let t = s - j as f64;
        let (f0, f1) = (d.values()[j], d.values()[j + 1]);
        (self.cumulative[j] + dx * t * (f0 + 0.5 * t * (f1 - f0))).min(1.0)
    }

    /// Smallest `x` with `F(x) = p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let d = &self.density;
        let p = p.clamp(0.0, 1.0);
        let j = self.cumulative.partition_point(|c| *c < p).clamp(1, d.m() - 1) - 1;
        let dx = d.spacing();
        let (f0, f1) = (d.values()[j], d.values()[j + 1]);
        // Solve dx (f0 t + (f1 - f0) t² / 2) = p - C_j for t in [0, 1].
        let r = (p - self.cumulative[j]) / dx;
        let slope = f1 - f0;
        let t = if slope.abs() <= 1e-14 * (f0 + f1).max(f64::MIN_POSITIVE) {
            if f0 > 0.0 { r / f0 } else { 0.0 }
        } else {
            let disc = (f0 * f0 + 2.0 * slope * r).max(0.0);
            // Stable root of slope/2 t² + f0 t - r = 0.
            2.0 * r / (f0 + disc.sqrt())
        };
        d.x_min() + dx * (j as f64 + t.clamp(0.0, 1.0))
    }
}

/// Two-sided Kolmogorov–Smirnov distance between the empirical distribution of
/// `sample` and the normalized interpolant of `density`.
pub fn ks_distance(sample: &SizeSample, density: &GridFunction) -> Result<f64> {
    let cdf = Cdf::new(density)?;
    let mut xs = sample.values().to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    Ok(xs
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let f = cdf.eval(*x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolve::{solve_eigenpair, SolveOptions};
    use crate::models::{ModelSpec, Rate};

    fn uniform() -> GridFunction {
        GridFunction::from_fn(0.0, 1.0, 11, |_| 1.0).unwrap()
    }

    #[test]
    fn uniform_mean_within_clt_band() {
        let n = 1_000_000;
        let s = rejection_sample(&uniform(), n, 7).unwrap();
        let band = 3.0 / 12f64.sqrt() / (n as f64).sqrt();
        assert!((s.mean() - 0.5).abs() <= band);
        assert!(s.values().iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn argument_and_density_errors() {
        assert!(matches!(rejection_sample(&uniform(), 0, 1), Err(Error::InvalidArgument(_))));
        let zero = GridFunction::zeros(0.0, 1.0, 11).unwrap();
        assert!(matches!(rejection_sample(&zero, 5, 1), Err(Error::DegenerateDensity(_))));
    }

    #[test]
    fn eigen_density_mean_matches_first_moment() {
        let model = ModelSpec::new(Rate::Constant(1.0), Rate::Constant(1.0), 1.0, 4.0).unwrap();
        let pair = solve_eigenpair(&model, 801, &SolveOptions::default()).unwrap();
        let n = 100_000;
        let s = rejection_sample(&pair.density, n, 11).unwrap();
        let moment = pair.density.map(|x, v| x * v).unwrap().integrate();
        assert!((moment - 1.0 / pair.lambda).abs() < 1e-3);
        let mean = s.mean();
        let var = s.values().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - moment).abs() <= 5.0 * var.sqrt() / (n as f64).sqrt());
    }

    #[test]
    fn reproducible_and_acceptance_rate() {
        let d = GridFunction::from_fn(0.0, 4.0, 401, |x| x * (-x).exp() * x).unwrap();
        let a = rejection_sample(&d, 20_000, 99).unwrap();
        let b = rejection_sample(&d, 20_000, 99).unwrap();
        assert_eq!(a, b);
        let expected = envelope_constant(&d);
        let observed = a.proposals() as f64 / a.n() as f64;
        assert!((observed / expected - 1.0).abs() < 0.1, "{observed} vs {expected}");
    }

    #[test]
    fn ks_examples() {
        let degenerate = SizeSample::new(vec![0.0; 50], 0).unwrap();
        assert!((ks_distance(&degenerate, &uniform()).unwrap() - 1.0).abs() < 1e-12);

        let d = GridFunction::from_fn(0.0, 4.0, 201, |x| x * x * (-2.0 * x).exp()).unwrap();
        let cdf = Cdf::new(&d).unwrap();
        let n = 1000;
        let stratified: Vec<f64> = (1..=n).map(|i| cdf.quantile((i as f64 - 0.5) / n as f64)).collect();
        let s = SizeSample::new(stratified, 0).unwrap();
        assert!(ks_distance(&s, &d).unwrap() <= 1.0 / n as f64 + 1e-12);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let d = GridFunction::from_fn(0.0, 2.0, 41, |x| 1.0 + (3.0 * x).sin()).unwrap();
        let cdf = Cdf::new(&d).unwrap();
        for i in 1..100 {
            let p = i as f64 / 100.0;
            assert!((cdf.eval(cdf.quantile(p)) - p).abs() < 1e-12);
        }
    }
}
