//! Monte Carlo replication of the estimation pipeline against a synthetic truth.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::bandwidth::GLConfig;
use crate::eigensolve::{solve_eigenpair, EigenPair, SolveOptions};
use crate::error::{Error, Result};
use crate::io;
use crate::models::{ModelSpec, Rate};
use crate::numgrid::{GridFunction, Interval};
use crate::pipeline::{estimate, relative_error, CellCount, EstimationResult, PipelineConfig};
use crate::sampling::rejection_sample;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "DIVRATE_THREADS";

/// Largest failure fraction tolerated by [`run_experiment`].
pub const MAX_FAILURE_FRACTION: f64 = 0.1;

pub const ROWS_HEADER: &str = "n,rep,seed,err_N,err_D,err_H,err_B,h_hat,h_tilde,kappa_hat";

/// Metric columns, in `rows.csv` order.
pub const METRICS: [&str; 7] = ["err_N", "err_D", "err_H", "err_B", "h_hat", "h_tilde", "kappa_hat"];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    /// Nodes of the eigenproblem grid on `[0, model.x_max]`.
    pub eigen_nodes: usize,
    pub n_values: Vec<usize>,
    pub replications: usize,
    pub master_seed: u64,
    pub pipeline: PipelineConfig,
    pub error_window: Interval,
    /// Overrides the exact eigenvalue passed to the pipeline.
    pub lambda: Option<f64>,
    pub output_dir: Option<PathBuf>,
    /// Worker threads; `None` uses [`THREADS_ENV`] or rayon's default.
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    /// Defaults for the model `g`, `B`: `κ = 1`, `X_M = T = 4`, 2001 eigen nodes,
    /// `n = 1000`, 50 replications, `k = n`.
    pub fn new(g: Rate, b: Rate) -> Self {
        ExperimentConfig {
            model: ModelSpec {
                g,
                b,
                kappa: 1.0,
                x_max: 4.0,
            },
            eigen_nodes: 2001,
            n_values: vec![1000],
            replications: 50,
            master_seed: 1,
            pipeline: PipelineConfig::default(),
            error_window: Interval::new(0.5, 2.5).expect("valid window"),
            lambda: None,
            output_dir: None,
            threads: None,
        }
    }

    /// Builds a config from `key = value` pairs. Recognized keys: `g`, `B`,
    /// `kappa`, `x_max`, `eigen_nodes`, `n` (comma list), `replications`,
    /// `seed`, `epsilon`, `epsilon_tilde`, `g_sup`, `c`, `k` (integer or `n`),
    /// `T`, `nodes`, `window` (`a,b`), `lambda`, `output_dir`, `threads`.
    pub fn from_key_values(map: &BTreeMap<String, String>, source: &str) -> Result<Self> {
        let bad = |key: &str, v: &str| Error::parse(source, format!("bad value `{v}` for `{key}`"));
        let num = |key: &str, v: &str| v.parse::<f64>().map_err(|_| bad(key, v));
        let int = |key: &str, v: &str| v.parse::<usize>().map_err(|_| bad(key, v));
        let rate = |key: &str, v: &str| Rate::from_name(v).ok_or_else(|| bad(key, v));

        let mut cfg = ExperimentConfig::new(Rate::Constant(1.0), Rate::Constant(1.0));
        let mut gl = GLConfig::default();
        let mut t_set = false;
        for (key, v) in map {
            let v = v.as_str();
            match key.as_str() {
                "g" => cfg.model.g = rate(key, v)?,
                "B" => cfg.model.b = rate(key, v)?,
                "kappa" => cfg.model.kappa = num(key, v)?,
                "x_max" => cfg.model.x_max = num(key, v)?,
                "eigen_nodes" => cfg.eigen_nodes = int(key, v)?,
                "n" => {
                    cfg.n_values = v
                        .split(',')
                        .map(|s| int(key, s.trim()))
                        .collect::<Result<_>>()?
                }
                "replications" => cfg.replications = int(key, v)?,
                "seed" => cfg.master_seed = v.parse().map_err(|_| bad(key, v))?,
                "epsilon" => gl.epsilon = num(key, v)?,
                "epsilon_tilde" => gl.epsilon_tilde = num(key, v)?,
                "g_sup" => gl.g_sup = Some(num(key, v)?),
                "c" => gl.c = num(key, v)?,
                "k" => {
                    cfg.pipeline.k = if v == "n" {
                        CellCount::SampleSize
                    } else {
                        CellCount::Fixed(int(key, v)?)
                    }
                }
                "T" => {
                    cfg.pipeline.t = num(key, v)?;
                    t_set = true;
                }
                "nodes" => cfg.pipeline.nodes = int(key, v)?,
                "window" => {
                    let (a, b) = v.split_once(',').ok_or_else(|| bad(key, v))?;
                    cfg.error_window = Interval::new(num(key, a.trim())?, num(key, b.trim())?)?;
                }
                "lambda" => cfg.lambda = Some(num(key, v)?),
                "output_dir" => cfg.output_dir = Some(PathBuf::from(v)),
                "threads" => cfg.threads = Some(int(key, v)?),
                other => return Err(Error::parse(source, format!("unknown key `{other}`"))),
            }
        }
        cfg.pipeline.gl = gl;
        cfg.pipeline.x_max = cfg.model.x_max;
        if !t_set {
            cfg.pipeline.t = cfg.model.x_max;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let map = io::read_key_values(path)?;
        Self::from_key_values(&map, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        ModelSpec::new(self.model.g.clone(), self.model.b.clone(), self.model.kappa, self.model.x_max)?;
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(Error::invalid("n_values must be a nonempty list of positive sizes"));
        }
        if self.replications == 0 {
            return Err(Error::invalid("replications must be at least 1"));
        }
        if self.pipeline.t > self.pipeline.x_max || self.pipeline.t <= 0.0 {
            return Err(Error::invalid("T must lie in (0, x_max]"));
        }
        if self.error_window.b() > self.pipeline.x_max || self.error_window.a() < 0.0 {
            return Err(Error::invalid("error window must lie inside [0, x_max]"));
        }
        if self.pipeline.nodes < 2 || self.eigen_nodes < 3 {
            return Err(Error::invalid("grids need more nodes"));
        }
        self.pipeline.gl.validate()
    }
}

/// Worker count requested through [`THREADS_ENV`], if set and valid.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|t| *t > 0)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replication `rep` at sample size `n`.
pub fn replication_seed(master: u64, n: usize, rep: usize) -> u64 {
    splitmix(splitmix(splitmix(master) ^ n as u64) ^ rep as u64)
}

/// Errors and selected parameters of one replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub err_n: f64,
    pub err_d: f64,
    pub err_h: f64,
    pub err_b: f64,
    pub h_hat: f64,
    pub h_tilde: f64,
    pub kappa_hat: f64,
}

impl Metrics {
    pub fn column(&self, i: usize) -> f64 {
        [
            self.err_n,
            self.err_d,
            self.err_h,
            self.err_b,
            self.h_hat,
            self.h_tilde,
            self.kappa_hat,
        ][i]
    }
}

#[derive(Debug, Clone)]
pub struct Row {
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    /// `Err` holds the failure message.
    pub outcome: std::result::Result<Metrics, String>,
}

/// Mean and unbiased variance of each metric at one sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub n: usize,
    pub ok: usize,
    pub failed: usize,
    pub mean: [f64; 7],
    pub variance: [f64; 7],
}

impl Aggregate {
    pub fn n_pow(&self) -> f64 {
        (self.n as f64).powf(-0.2)
    }

    pub fn mean_of(&self, metric: &str) -> Option<f64> {
        METRICS.iter().position(|m| *m == metric).map(|i| self.mean[i])
    }
}

/// Truth and estimate of one curve for one sample size, on the evaluation grid.
#[derive(Debug, Clone)]
pub struct Curve {
    pub n: usize,
    pub name: &'static str,
    pub truth: GridFunction,
    pub estimate: GridFunction,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub lambda: f64,
    pub rows: Vec<Row>,
    pub aggregates: Vec<Aggregate>,
    /// Curves of the first replication at each sample size.
    pub curves: Vec<Curve>,
}

impl ExperimentReport {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_err()).count()
    }

    /// Errors out when more than [`MAX_FAILURE_FRACTION`] of the rows failed.
    pub fn check_failures(&self) -> Result<()> {
        let failed = self.failures();
        let total = self.rows.len();
        if failed as f64 > MAX_FAILURE_FRACTION * total as f64 {
            return Err(Error::TooManyFailures { failed, total });
        }
        Ok(())
    }

    pub fn aggregate(&self, n: usize) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.n == n)
    }

    pub fn rows_csv(&self) -> String {
        let mut out = format!("{ROWS_HEADER}\n");
        for r in &self.rows {
            let _ = write!(out, "{},{},{}", r.n, r.rep, r.seed);
            for i in 0..METRICS.len() {
                let v = r.outcome.as_ref().map_or(f64::NAN, |m| m.column(i));
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn aggregates_csv(&self) -> String {
        let mut out = String::from("n,n_pow,ok,failed");
        for m in METRICS {
            let _ = write!(out, ",mean_{m},var_{m}");
        }
        out.push('\n');
        for a in &self.aggregates {
            let _ = write!(out, "{},{},{},{}", a.n, a.n_pow(), a.ok, a.failed);
            for i in 0..METRICS.len() {
                let _ = write!(out, ",{},{}", a.mean[i], a.variance[i]);
            }
            out.push('\n');
        }
        out
    }

    /// Human-readable table of means (variances in parentheses).
    pub fn summary(&self) -> String {
        let mut out = format!("lambda = {}\n", self.lambda);
        let _ = writeln!(
            out,
            "{:>7} {:>6} {:>18} {:>18} {:>18} {:>18} {:>8} {:>8}",
            "n", "n^-1/5", "err_N", "err_D", "err_H", "err_B", "h_hat", "h_tilde"
        );
        for a in &self.aggregates {
            let cell = |i: usize| format!("{:.3} ({:.4})", a.mean[i], a.variance[i]);
            let _ = writeln!(
                out,
                "{:>7} {:>6.3} {:>18} {:>18} {:>18} {:>18} {:>8.3} {:>8.3}",
                a.n,
                a.n_pow(),
                cell(0),
                cell(1),
                cell(2),
                cell(3),
                a.mean[4],
                a.mean[5]
            );
            if a.failed > 0 {
                let _ = writeln!(out, "        {} of {} replications failed", a.failed, a.failed + a.ok);
            }
        }
        out
    }
}

/// Reference curves on the evaluation grid.
struct Truth {
    n: GridFunction,
    d: GridFunction,
    h: GridFunction,
    b: GridFunction,
}

impl Truth {
    fn new(pair: &EigenPair, model: &ModelSpec, template: &GridFunction) -> Result<Self> {
        let n = pair.density.resample(template)?;
        let b = model.b.tabulate_like(template)?;
        let gn = n.map(|x, v| model.g.eval(x) * v)?;
        let d = gn.derivative()?;
        let h = n.map(|x, v| model.b.eval(x) * v)?;
        Ok(Truth { n, d, h, b })
    }
}

/// Runs every replication and aggregates, without judging the failure count.
pub fn run_replications(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let pair = solve_eigenpair(&cfg.model, cfg.eigen_nodes, &SolveOptions::default())?;
    let lambda = cfg.lambda.unwrap_or(pair.lambda);
    let template = cfg.pipeline.template()?;
    let truth = Truth::new(&pair, &cfg.model, &template)?;
    let domain = Interval::new(0.0, cfg.pipeline.t)?;

    let tasks: Vec<(usize, usize)> = cfg
        .n_values
        .iter()
        .flat_map(|&n| (0..cfg.replications).map(move |r| (n, r)))
        .collect();

    let run_one = |&(n, rep): &(usize, usize)| -> (Row, Option<EstimationResult>) {
        let seed = replication_seed(cfg.master_seed, n, rep);
        let outcome = rejection_sample(&pair.density, n, seed)
            .and_then(|sample| estimate(&sample, &cfg.model.g, lambda, &cfg.pipeline))
            .and_then(|res| {
                let m = Metrics {
                    err_n: relative_error(&res.n_hat, &truth.n, domain)?,
                    err_d: relative_error(&res.d_hat, &truth.d, domain)?,
                    err_h: relative_error(&res.h_step.sample_on(&template)?, &truth.h, domain)?,
                    err_b: relative_error(&res.b_tilde, &truth.b, cfg.error_window)?,
                    h_hat: res.h_hat,
                    h_tilde: res.h_tilde,
                    kappa_hat: res.kappa_hat,
                };
                Ok((m, res))
            });
        match outcome {
            Ok((m, res)) => {
                let keep = (rep == 0).then_some(res);
                (Row { n, rep, seed, outcome: Ok(m) }, keep)
            }
            Err(e) => (Row { n, rep, seed, outcome: Err(e.to_string()) }, None),
        }
    };

    let threads = cfg.threads.or_else(threads_from_env).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let results: Vec<(Row, Option<EstimationResult>)> =
        pool.install(|| tasks.par_iter().map(run_one).collect());

    let mut rows = Vec::with_capacity(results.len());
    let mut curves = Vec::new();
    for (row, kept) in results {
        if let Some(res) = kept {
            let n = row.n;
            curves.push(Curve { n, name: "N", truth: truth.n.clone(), estimate: res.n_hat });
            curves.push(Curve { n, name: "D", truth: truth.d.clone(), estimate: res.d_hat });
            curves.push(Curve {
                n,
                name: "H",
                truth: truth.h.clone(),
                estimate: res.h_step.sample_on(&template)?,
            });
            curves.push(Curve { n, name: "B", truth: truth.b.clone(), estimate: res.b_tilde });
        }
        rows.push(row);
    }
    rows.sort_by_key(|r| (r.n, r.rep));

    let aggregates = cfg.n_values.iter().map(|&n| aggregate(n, &rows)).collect();
    Ok(ExperimentReport {
        lambda,
        rows,
        aggregates,
        curves,
    })
}

/// [`run_replications`] followed by the failure-fraction check.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let report = run_replications(cfg)?;
    report.check_failures()?;
    Ok(report)
}

/// Mean and unbiased variance (zero for a single value) over successful rows.
pub fn aggregate(n: usize, rows: &[Row]) -> Aggregate {
    let ok: Vec<&Metrics> = rows
        .iter()
        .filter(|r| r.n == n)
        .filter_map(|r| r.outcome.as_ref().ok())
        .collect();
    let failed = rows.iter().filter(|r| r.n == n && r.outcome.is_err()).count();
    let count = ok.len() as f64;
    let mut mean = [f64::NAN; 7];
    let mut variance = [f64::NAN; 7];
    if !ok.is_empty() {
        for i in 0..METRICS.len() {
            let m = ok.iter().map(|r| r.column(i)).sum::<f64>() / count;
            mean[i] = m;
            variance[i] = if ok.len() == 1 {
                0.0
            } else {
                ok.iter().map(|r| (r.column(i) - m).powi(2)).sum::<f64>() / (count - 1.0)
            };
        }
    }
    Aggregate {
        n,
        ok: ok.len(),
        failed,
        mean,
        variance,
    }
}

/// Writes `rows.csv`, `aggregates.csv` and `plots/<curve>_n<n>.csv` into `dir`.
pub fn emit_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let rows = dir.join("rows.csv");
    std::fs::write(&rows, report.rows_csv()).map_err(|e| Error::io(&rows, e))?;
    let agg = dir.join("aggregates.csv");
    std::fs::write(&agg, report.aggregates_csv()).map_err(|e| Error::io(&agg, e))?;
    for c in &report.curves {
        let path = dir.join("plots").join(format!("{}_n{}.csv", c.name, c.n));
        io::write_curves_csv(&path, &c.truth, &c.estimate)?;
    }
    Ok(())
}
