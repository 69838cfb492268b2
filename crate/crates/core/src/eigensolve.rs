//! Direct problem: the first eigenpair `(λ, N)` of the growth/equal-mitosis operator
//!
//! ```text
//! κ (g N)'(x) + λ N(x) = 4 B(2x) N(2x) - B(x) N(x),   N(0) = 0,  ∫N = 1,  N ≥ 0.
//! ```
//!
//! Discretization on the nodes `x_j = j dx` of `[0, X_M]`:
//!
//! * transport is first-order upwind in conservative form, with flux
//!   `F_j = κ g_j N_j` and no outflow through `X_M` (cells stop growing there);
//! * the loss term is `B_j N_j`;
//! * the gain term deposits the two daughters of node `i` at `x_i / 2`: on node
//!   `i / 2` when `i` is even, split evenly between the two neighbours when `i`
//!   is odd. This is the transpose of linear interpolation of `N(2x)` and
//!   conserves both the mass and the first moment of the division term, so the
//!   identities `λ = ∫BN` and `λ ∫xN = κ ∫gN` hold for the discrete eigenpair.
//!
//! The eigenpair is found by power iteration on the generation operator
//! `(λ - transport - loss)⁻¹ · gain`, which is positive and costs one forward
//! sweep per application, combined with a bracketed secant search for the `λ`
//! at which its Perron root equals one. Iterating generations instead of time
//! steps avoids the CFL restriction and the slowly damped oscillations of the
//! linear-growth case `g(x) = x`.

use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::numgrid::{GridFunction, Interval};

/// Fraction of the grid checked by the tail-mass test.
const TAIL_FRACTION: f64 = 0.05;
/// Maximum mass allowed in the last `TAIL_FRACTION` of the grid.
const TAIL_MASS_LIMIT: f64 = 1e-4;
/// Maximum mass piled up on the last node (the no-outflow boundary).
const BOUNDARY_MASS_LIMIT: f64 = 1e-10;
/// Relative first-moment imbalance beyond which the solution is a collapse artifact.
const COLLAPSE_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Convergence tolerance on the relative change of `λ` and on
    /// `residual / ‖N‖₂`.
    pub tol: f64,
    /// Budget of operator applications, summed over all domain extensions.
    pub max_iter: usize,
    /// How many times `X_M` may be multiplied by 1.5 when the tail of `N` is
    /// too heavy.
    pub max_extensions: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-7,
            max_iter: 200_000,
            max_extensions: 6,
        }
    }
}

/// Malthus exponent and stable size distribution.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: f64,
    pub density: GridFunction,
}

/// Tabulated model coefficients on the solver grid.
struct Operator {
    dx: f64,
    kappa: f64,
    g: Vec<f64>,
    b: Vec<f64>,
}

impl Operator {
    fn new(model: &ModelSpec, x_max: f64, m: usize) -> Result<Self> {
        let g = model.g.tabulate(0.0, x_max, m)?.into_values();
        let b = model.b.tabulate(0.0, x_max, m)?.into_values();
        if let Some(j) = g.iter().chain(&b).position(|v| *v < 0.0) {
            return Err(Error::invalid(format!("rates must be nonnegative (entry {j})")));
        }
        if b.iter().all(|v| *v == 0.0) {
            return Err(Error::DegenerateModel("division rate is identically zero".into()));
        }
        Ok(Operator {
            dx: x_max / (m - 1) as f64,
            kappa: model.kappa,
            g,
            b,
        })
    }

    fn m(&self) -> usize {
        self.g.len()
    }

    /// Daughter deposit of `B N`, indexed by node. Node 0 is pinned to zero, so
    /// the share that node 1 would send to node 0 is kept on node 1.
    fn gain(&self, n: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let last = self.m() - 1;
        for i in 1..=last {
            let f = self.b[i] * n[i];
            if f == 0.0 {
                continue;
            }
            if i % 2 == 0 {
                out[i / 2] += 2.0 * f;
            } else if i == 1 {
                out[1] += 2.0 * f;
            } else {
                out[(i - 1) / 2] += f;
                out[(i + 1) / 2] += f;
            }
        }
        out[0] = 0.0;
    }

    /// Outgoing flux through the right face of node `j`.
    fn flux(&self, n: &[f64], j: usize) -> f64 {
        if j + 1 == self.m() {
            0.0
        } else {
            self.kappa * self.g[j] * n[j]
        }
    }

    /// Solves `(λ + B - transport) out = source` by a forward sweep.
    fn resolvent(&self, lambda: f64, source: &[f64], out: &mut [f64]) {
        let last = self.m() - 1;
        out[0] = 0.0;
        for j in 1..=last {
            let outflow = if j == last { 0.0 } else { self.kappa * self.g[j] / self.dx };
            let inflow = self.flux(out, j - 1) / self.dx;
            out[j] = (source[j] + inflow) / (lambda + self.b[j] + outflow);
        }
    }

    /// Residual `κ (gN)' + λN - gain + BN`, zero at the pinned node.
    fn residual(&self, lambda: f64, n: &[f64]) -> Vec<f64> {
        let mut gain = vec![0.0; self.m()];
        self.gain(n, &mut gain);
        let mut r = vec![0.0; self.m()];
        for j in 1..self.m() {
            let transport = (self.flux(n, j) - self.flux(n, j - 1)) / self.dx;
            r[j] = transport + lambda * n[j] - gain[j] + self.b[j] * n[j];
        }
        r
    }

    fn max_b(&self) -> f64 {
        self.b.iter().copied().fold(0.0, f64::max)
    }
}

/// Perron root and eigenvector of the generation operator at a fixed `λ`.
struct PerronState {
    vector: Vec<f64>,
    gain: Vec<f64>,
    next: Vec<f64>,
}

impl PerronState {
    fn new(initial: Vec<f64>) -> Self {
        let m = initial.len();
        PerronState {
            vector: initial,
            gain: vec![0.0; m],
            next: vec![0.0; m],
        }
    }

    /// Runs power iteration until the normalized vector stops moving. Returns the
    /// Perron root; `budget` is decremented per application.
    fn converge(&mut self, op: &Operator, lambda: f64, budget: &mut usize) -> Result<f64> {
        let mut root;
        let mut change = f64::INFINITY;
        let mut stalls = 0;
        loop {
            if *budget == 0 {
                return Err(Error::IterationLimit {
                    iterations: 0,
                    residual: change,
                });
            }
            *budget -= 1;
            op.gain(&self.vector, &mut self.gain);
            op.resolvent(lambda, &self.gain, &mut self.next);
            let before: f64 = self.vector.iter().sum();
            let after: f64 = self.next.iter().sum();
            if !(after > 0.0) {
                return Err(Error::DegenerateModel(
                    "generation operator annihilates the iterate".into(),
                ));
            }
            root = after / before;
            let scale = before / after;
            let mut diff = 0.0;
            let mut peak = 0.0f64;
            for (v, w) in self.vector.iter_mut().zip(&self.next) {
                let w = w * scale;
                diff += (w - *v).abs();
                peak += w.abs();
                *v = w;
            }
            let rel = diff / peak;
            // Stop once the change is at round-off level or has stopped shrinking there.
            if rel < 1e-15 {
                break;
            }
            if rel < 1e-12 && rel >= change {
                stalls += 1;
                if stalls > 3 {
                    break;
                }
            }
            change = rel;
        }
        Ok(root)
    }
}

/// Solves the eigenproblem on `m` nodes over `[0, model.x_max]`, growing the
/// domain by a factor 1.5 (at fixed spacing) while the tail of `N` is not
/// negligible.
pub fn solve_eigenpair(model: &ModelSpec, m: usize, opts: &SolveOptions) -> Result<EigenPair> {
    if m < 3 {
        return Err(Error::invalid(format!("need at least 3 nodes, got {m}")));
    }
    let mut budget = opts.max_iter;
    let mut cells = m - 1;
    let dx = model.x_max / cells as f64;
    let mut guess: Option<GridFunction> = None;
    let mut extensions = 0;
    loop {
        let x_max = dx * cells as f64;
        let op = Operator::new(model, x_max, cells + 1)?;
        let initial: Vec<f64> = match &guess {
            Some(prev) => (0..=cells).map(|j| prev.interp_eval(j as f64 * dx).max(0.0)).collect(),
            None => (0..=cells)
                .map(|j| {
                    let x = j as f64 * dx / model.x_max;
                    x * (-4.0 * x).exp()
                })
                .collect(),
        };
        let (lambda, values) = solve_on_grid(&op, initial, opts.tol, &mut budget)?;
        let density = GridFunction::new(0.0, x_max, values)?;

        let tail = Interval::new((1.0 - TAIL_FRACTION) * x_max, x_max)?;
        let tail_mass = density.integrate_over(tail);
        let boundary_mass = dx * density.values()[cells];
        if (tail_mass <= TAIL_MASS_LIMIT && boundary_mass <= BOUNDARY_MASS_LIMIT)
            || extensions == opts.max_extensions
        {
            if tail_mass > TAIL_MASS_LIMIT {
                return Err(Error::DegenerateModel(format!(
                    "density still carries mass {tail_mass:.2e} near X_M = {x_max} after {extensions} extensions"
                )));
            }
            check_not_collapsed(&op, lambda, density.values())?;
            return Ok(EigenPair { lambda, density });
        }
        extensions += 1;
        cells = (cells as f64 * 1.5).ceil() as usize;
        guess = Some(density);
    }
}

/// One solve at fixed grid: returns `λ` and `N` normalized to unit trapezoid mass.
fn solve_on_grid(
    op: &Operator,
    initial: Vec<f64>,
    tol: f64,
    budget: &mut usize,
) -> Result<(f64, Vec<f64>)> {
    let start = *budget;
    let mut state = PerronState::new(initial);
    let hi_bound = op.max_b() * (1.0 + 1e-9) + f64::MIN_POSITIVE;

    // Bracket [lo, hi] on λ with Perron root > 1 at lo and ≤ 1 at hi; the root is
    // decreasing in λ and the eigenvalue lies in (0, max B].
    let mut lo = 0.0;
    let mut hi = hi_bound;
    let mut f_lo = f64::NAN;
    let mut f_hi = f64::NAN;

    let mass: f64 = state.vector.iter().sum();
    let weighted: f64 = state.vector.iter().zip(&op.b).map(|(v, b)| v * b).sum();
    let mut lambda = (weighted / mass).clamp(1e-3 * hi_bound, hi_bound);
    let mut previous = f64::NAN;

    let exhausted = |budget: &usize, residual: f64| Error::IterationLimit {
        iterations: start - *budget,
        residual,
    };

    for _ in 0..200 {
        let root = state
            .converge(op, lambda, budget)
            .map_err(|e| match e {
                Error::IterationLimit { residual, .. } => exhausted(budget, residual),
                other => other,
            })?;
        let f = root.ln();
        if f > 0.0 {
            lo = lambda;
            f_lo = f;
        } else {
            hi = lambda;
            f_hi = f;
        }

        let settled = f.abs() < 1e-14
            || (previous.is_finite() && (lambda - previous).abs() <= 1e-15 * lambda.abs());
        if settled {
            let n = normalize(op, &state.vector);
            let r = op.residual(lambda, &n);
            let res = grid_l2(op.dx, &r);
            let norm = grid_l2(op.dx, &n);
            let dl = if previous.is_finite() {
                (lambda - previous).abs() / lambda
            } else {
                f64::INFINITY
            };
            if res <= tol * norm && (dl <= tol || f.abs() < 1e-14) {
                return Ok((lambda, n));
            }
        }

        previous = lambda;
        // Secant step on ln(root) inside the bracket, bisection otherwise.
        let candidate = if f_lo.is_finite() && f_hi.is_finite() {
            lo - f_lo * (hi - lo) / (f_hi - f_lo)
        } else if f > 0.0 {
            // Root too large: λ must grow; use ρ(λ) ≈ 2⟨B,N⟩ / (λ + ⟨B,N⟩).
            rayleigh_update(op, &state.vector).max(lambda * 1.01)
        } else {
            rayleigh_update(op, &state.vector).min(lambda * 0.99)
        };
        let inside = candidate > lo && candidate < hi;
        lambda = if inside { candidate } else { 0.5 * (lo + hi) };
    }
    let n = normalize(op, &state.vector);
    let res = grid_l2(op.dx, &op.residual(lambda, &n));
    Err(exhausted(budget, res))
}

/// When `B/g` is not integrable at 0 the population piles up at the smallest
/// sizes and no stable distribution exists; the discrete solution then sits on
/// the first node, where the first-moment balance `λ∫xN = κ∫gN` breaks.
fn check_not_collapsed(op: &Operator, lambda: f64, n: &[f64]) -> Result<()> {
    let x_moment: f64 = n.iter().enumerate().map(|(j, v)| j as f64 * op.dx * v).sum();
    let g_moment: f64 = n.iter().zip(&op.g).map(|(v, g)| g * v).sum();
    let gap = (lambda * x_moment - op.kappa * g_moment).abs();
    if gap > COLLAPSE_TOL * lambda * x_moment {
        return Err(Error::DegenerateModel(format!(
            "mass collapses towards size 0 (moment balance off by {:.1e}); B/g must be integrable at 0",
            gap / (lambda * x_moment)
        )));
    }
    Ok(())
}

/// `⟨B, N⟩ / ⟨1, N⟩`, the value `λ` must take at an exact eigenvector.
fn rayleigh_update(op: &Operator, n: &[f64]) -> f64 {
    let mass: f64 = n.iter().sum();
    let weighted: f64 = n.iter().zip(&op.b).map(|(v, b)| v * b).sum();
    weighted / mass
}

fn normalize(op: &Operator, v: &[f64]) -> Vec<f64> {
    let last = v.len() - 1;
    let inner: f64 = v[1..last].iter().sum();
    let mass = op.dx * (inner + 0.5 * (v[0] + v[last]));
    v.iter().map(|x| x / mass).collect()
}

fn grid_l2(dx: f64, v: &[f64]) -> f64 {
    let last = v.len() - 1;
    let inner: f64 = v[1..last].iter().map(|x| x * x).sum();
    (dx * (inner + 0.5 * (v[0] * v[0] + v[last] * v[last]))).sqrt()
}

/// `L²` norm of the discrete residual of the eigenproblem, using the same
/// discretization as [`solve_eigenpair`].
pub fn eigen_residual(pair: &EigenPair, model: &ModelSpec) -> Result<f64> {
    let n = &pair.density;
    if n.x_min() != 0.0 {
        return Err(Error::GridMismatch(format!(
            "eigen grid must start at 0, got {}",
            n.x_min()
        )));
    }
    let op = Operator::new(model, n.x_max(), n.m())?;
    let r = op.residual(pair.lambda, n.values());
    Ok(grid_l2(op.dx, &r))
}
