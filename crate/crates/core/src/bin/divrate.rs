use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use divrate::bandwidth::GLConfig;
use divrate::eigensolve::{solve_eigenpair, SolveOptions};
use divrate::harness::{emit_report, run_replications, ExperimentConfig};
use divrate::io;
use divrate::models::{ModelSpec, Rate};
use divrate::numgrid::Interval;
use divrate::pipeline::{estimate, relative_error, CellCount, EstimationResult, PipelineConfig};
use divrate::sampling::{rejection_sample, SizeSample};
use divrate::{Error, Result};

#[derive(Parser)]
#[command(name = "divrate", version, about = "Division rate estimation from cell size samples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the eigenproblem for (lambda, N).
    Solve {
        /// Growth rate: one, linear, square, b2, b3, a constant, or an `x,value` CSV.
        #[arg(long)]
        g: String,
        /// Division rate, same forms as --g.
        #[arg(long = "B")]
        b: String,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        #[arg(long, default_value_t = 4.0)]
        xmax: f64,
        #[arg(long, default_value_t = 2001)]
        nodes: usize,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        /// N as `x,value` CSV; lambda goes to the `.lambda` sidecar.
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw a sample from a solved density.
    Sample {
        #[arg(long)]
        pair: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate N, (gN)', H = BN and B from a sample.
    Estimate {
        #[arg(long)]
        sample: PathBuf,
        #[arg(long)]
        g: String,
        /// Defaults to the sidecar of --pair.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long = "T", default_value_t = 4.0)]
        t: f64,
        /// Number of cells; defaults to the sample size.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 4.0)]
        xmax: f64,
        #[arg(long, default_value_t = 1001)]
        nodes: usize,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.1)]
        epsilon_tilde: f64,
        #[arg(long, default_value_t = 0.0)]
        c: f64,
        /// True eigenpair, for error reporting.
        #[arg(long)]
        pair: Option<PathBuf>,
        /// True division rate, for the error on B.
        #[arg(long = "B")]
        b: Option<String>,
        /// Window of the error on B, as `a,b`.
        #[arg(long, default_value = "0.5,2.5")]
        window: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a replication experiment described by a `key = value` file.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn rate(spec: &str) -> Result<Rate> {
    if let Some(r) = Rate::from_name(spec) {
        return Ok(r);
    }
    let path = Path::new(spec);
    if path.exists() {
        return Ok(Rate::Tabulated(io::read_grid_csv(path)?));
    }
    Err(Error::InvalidArgument(format!("unknown rate `{spec}`")))
}

fn read_lambda(pair: &Path) -> Result<f64> {
    let side = io::sidecar_path(pair);
    let map = io::read_key_values(&side)?;
    let source = side.display().to_string();
    map.get("lambda")
        .ok_or_else(|| Error::Parse {
            source_name: source.clone(),
            message: "missing `lambda`".into(),
        })?
        .parse()
        .map_err(|_| Error::Parse {
            source_name: source,
            message: "bad `lambda`".into(),
        })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve { g, b, kappa, xmax, nodes, tol, out } => {
            let model = ModelSpec::new(rate(&g)?, rate(&b)?, kappa, xmax)?;
            let opts = SolveOptions { tol, ..SolveOptions::default() };
            let pair = solve_eigenpair(&model, nodes, &opts)?;
            io::write_grid_csv(&out, &pair.density)?;
            io::write_key_values(&io::sidecar_path(&out), [("lambda", pair.lambda.to_string())])?;
            println!("lambda = {}", pair.lambda);
            println!("grid   = [0, {}] with {} nodes", pair.density.x_max(), pair.density.m());
        }
        Command::Sample { pair, n, seed, out } => {
            let density = io::read_grid_csv(&pair)?;
            let sample = rejection_sample(&density, n, seed)?;
            io::write_sample_csv(&out, sample.values())?;
            println!("{n} draws, {} proposals", sample.proposals());
        }
        Command::Estimate {
            sample,
            g,
            lambda,
            t,
            k,
            xmax,
            nodes,
            epsilon,
            epsilon_tilde,
            c,
            pair,
            b,
            window,
            out,
        } => {
            let g = rate(&g)?;
            let sample = SizeSample::new(io::read_sample_csv(&sample)?, 0)?;
            let lambda = match (lambda, &pair) {
                (Some(l), _) => l,
                (None, Some(p)) => read_lambda(p)?,
                (None, None) => {
                    return Err(Error::InvalidArgument("--lambda or --pair is required".into()))
                }
            };
            let cfg = PipelineConfig {
                gl: GLConfig { epsilon, epsilon_tilde, g_sup: None, c },
                k: k.map_or(CellCount::SampleSize, CellCount::Fixed),
                t,
                x_max: xmax,
                nodes,
            };
            let res = estimate(&sample, &g, lambda, &cfg)?;
            io::write_grid_csv(&out.join("N_hat.csv"), &res.n_hat)?;
            io::write_grid_csv(&out.join("D_hat.csv"), &res.d_hat)?;
            io::write_step_csv(&out.join("H_hat.csv"), &res.h_step)?;
            io::write_grid_csv(&out.join("B_tilde.csv"), &res.b_tilde)?;
            io::write_selection_csv(&out.join("gl_density.csv"), &res.density_selection)?;
            io::write_selection_csv(&out.join("gl_derivative.csv"), &res.derivative_selection)?;

            let mut summary = vec![
                ("n", sample.n().to_string()),
                ("lambda", lambda.to_string()),
                ("h_hat", res.h_hat.to_string()),
                ("h_tilde", res.h_tilde.to_string()),
                ("rho_hat", res.rho_hat.to_string()),
                ("kappa_hat", res.kappa_hat.to_string()),
            ];
            for (key, v) in &res.diagnostics {
                summary.push((key.as_str(), v.to_string()));
            }
            if let Some(p) = &pair {
                let errors = truth_errors(p, &g, b.as_deref(), &window, &res, t)?;
                summary.extend(errors);
            }
            for (key, v) in &summary {
                println!("{key} = {v}");
            }
            io::write_key_values(&out.join("summary.txt"), summary.iter().map(|(k, v)| (*k, v.clone())))?;
        }
        Command::Bench { config, out } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let dir = out
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("bench-out"));
            let report = run_replications(&cfg)?;
            emit_report(&report, &dir)?;
            print!("{}", report.summary());
            println!("wrote {}", dir.display());
            report.check_failures()?;
        }
    }
    Ok(())
}

fn truth_errors(
    pair: &Path,
    g: &Rate,
    b: Option<&str>,
    window: &str,
    res: &EstimationResult,
    t: f64,
) -> Result<Vec<(&'static str, String)>> {
    let (n_hat, d_hat, h_step, b_tilde) = (&res.n_hat, &res.d_hat, &res.h_step, &res.b_tilde);
    let density = io::read_grid_csv(pair)?;
    let truth_n = density.resample(n_hat)?;
    let truth_d = truth_n.map(|x, v| g.eval(x) * v)?.derivative()?;
    let domain = Interval::new(0.0, t)?;
    let mut out = vec![
        ("err_N", relative_error(n_hat, &truth_n, domain)?.to_string()),
        ("err_D", relative_error(d_hat, &truth_d, domain)?.to_string()),
    ];
    if let Some(b) = b {
        let b = rate(b)?;
        let truth_h = truth_n.map(|x, v| b.eval(x) * v)?;
        out.push(("err_H", relative_error(&h_step.sample_on(n_hat)?, &truth_h, domain)?.to_string()));
        let (lo, hi) = window
            .split_once(',')
            .ok_or_else(|| Error::InvalidArgument(format!("bad window `{window}`")))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad window `{window}`")))
        };
        let w = Interval::new(parse(lo)?, parse(hi)?)?;
        let truth_b = b.tabulate_like(n_hat)?;
        out.push(("err_B", relative_error(b_tilde, &truth_b, w)?.to_string()));
    }
    Ok(out)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::TooManyFailures { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
