//! Growth and division rates.

use std::fmt;

use crate::error::{Error, Result};
use crate::numgrid::GridFunction;

/// A nonnegative rate function of size: either one of the built-in closed forms
/// or a tabulated curve.
#[derive(Debug, Clone, PartialEq)]
pub enum Rate {
    /// `r(x) = c`; named `one` when `c = 1`.
    Constant(f64),
    /// `r(x) = x`.
    Linear,
    /// `r(x) = x²`.
    Square,
    /// 1 up to 1.5, affine up to 5 at 1.7, then 5.
    Steep,
    /// `exp(-8 (x - 2)²) + 1`.
    Bump,
    /// Tabulated values, held constant beyond the last node.
    Tabulated(GridFunction),
}

impl Rate {
    /// Parses a built-in model name (`one`, `linear`, `square`, `b2`, `b3`) or a
    /// numeric constant.
    pub fn from_name(name: &str) -> Option<Rate> {
        match name {
            "one" => Some(Rate::Constant(1.0)),
            "linear" => Some(Rate::Linear),
            "square" => Some(Rate::Square),
            "b2" => Some(Rate::Steep),
            "b3" => Some(Rate::Bump),
            other => other
                .parse::<f64>()
                .ok()
                .filter(|c| c.is_finite() && *c >= 0.0)
                .map(Rate::Constant),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Rate::Constant(c) => *c,
            Rate::Linear => x,
            Rate::Square => x * x,
            Rate::Steep => {
                if x <= 1.5 {
                    1.0
                } else if x < 1.7 {
                    1.0 + 4.0 * (x - 1.5) / 0.2
                } else {
                    5.0
                }
            }
            Rate::Bump => (-8.0 * (x - 2.0) * (x - 2.0)).exp() + 1.0,
            Rate::Tabulated(f) => {
                let x = x.clamp(f.x_min(), f.x_max());
                f.interp_eval(x)
            }
        }
    }

    /// Tabulates the rate on the grid of `template`.
    pub fn tabulate_like(&self, template: &GridFunction) -> Result<GridFunction> {
        template.map(|x, _| self.eval(x))
    }

    pub fn tabulate(&self, x_min: f64, x_max: f64, m: usize) -> Result<GridFunction> {
        GridFunction::from_fn(x_min, x_max, m, |x| self.eval(x))
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rate::Constant(c) if *c == 1.0 => write!(f, "one"),
            Rate::Constant(c) => write!(f, "{c}"),
            Rate::Linear => write!(f, "linear"),
            Rate::Square => write!(f, "square"),
            Rate::Steep => write!(f, "b2"),
            Rate::Bump => write!(f, "b3"),
            Rate::Tabulated(_) => write!(f, "tabulated"),
        }
    }
}

/// Growth rate `g`, division rate `B`, growth constant `κ` and the right end of
/// the simulation domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub g: Rate,
    pub b: Rate,
    pub kappa: f64,
    pub x_max: f64,
}

impl ModelSpec {
    pub fn new(g: Rate, b: Rate, kappa: f64, x_max: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::invalid(format!("kappa must be positive, got {kappa}")));
        }
        if !(x_max.is_finite() && x_max > 0.0) {
            return Err(Error::invalid(format!("x_max must be positive, got {x_max}")));
        }
        Ok(ModelSpec { g, b, kappa, x_max })
    }
}
