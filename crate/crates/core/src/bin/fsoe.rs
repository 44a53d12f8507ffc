use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fsoe::bifurcation::{sweep_beta, CycleOptions, SweepOptions};
use fsoe::config::RunConfig;
use fsoe::fsoe::{equilibria, simulate_fsoe, FsoeState};
use fsoe::graph::Graph;
use fsoe::io as csv;
use fsoe::network::{simulate_network, NetworkState};
use fsoe::ode::SolverOptions;
use fsoe::verify::run_verification;

const EXIT_VERIFY: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(
    name = "fsoe",
    version,
    about = "Opinion-environment dynamics: simulation and bifurcation analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Adaptive,
    Rk4,
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the synchronized planar system and write `t,p,e`.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        p0: f64,
        #[arg(long, default_value_t = 0.0)]
        e0: f64,
        #[arg(long, default_value_t = 500.0)]
        t_end: f64,
        #[arg(long, value_enum, default_value = "adaptive")]
        method: MethodArg,
        /// Absolute and relative tolerance of the adaptive method.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Step of the fixed-step method.
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List equilibria with their linear stability.
    Equilibria {
        config: PathBuf,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep beta; writes `<out>_diagram.csv` and `<out>_points.csv`.
    Diagram {
        config: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        beta_min: f64,
        #[arg(long, default_value_t = 1.0)]
        beta_max: f64,
        #[arg(long, default_value_t = 500)]
        steps: usize,
        #[arg(long, value_enum, default_value = "on")]
        cycles: Toggle,
        /// Worker threads; 0 uses the available parallelism.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Trajectories from a grid of initial conditions over [-1, 1] x [e_lo, e_hi].
    Portrait {
        config: PathBuf,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 5)]
        grid: usize,
        #[arg(long, default_value_t = 100.0)]
        t_end: f64,
        #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
        e_lo: f64,
        #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
        e_hi: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Confront closed-form predictions with numerics; exit 1 on any failure.
    Verify { config: PathBuf },
    /// Simulate the full network model.
    Network {
        config: PathBuf,
        /// Graph file; overrides the configuration's `graph` entry.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        beta: Option<f64>,
        /// `consensus:<p>` or `random:<seed>`.
        #[arg(long, default_value = "random:42")]
        x0: String,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        e0: f64,
        #[arg(long, default_value_t = 100.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Append a `sync_error` column.
        #[arg(long)]
        sync_error: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl ToString) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: message.to_string(),
        }
    }

    fn numeric(message: impl ToString) -> Self {
        Failure {
            code: EXIT_NUMERIC,
            message: message.to_string(),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn load(path: &Path) -> Result<RunConfig, Failure> {
    let rc = RunConfig::load(path).map_err(Failure::config)?;
    for w in rc.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(rc)
}

fn open_out(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    match out {
        Some(p) => File::create(p)
            .map(|f| Box::new(BufWriter::new(f)) as Box<dyn Write>)
            .map_err(|e| Failure::config(format!("cannot create {}: {e}", p.display()))),
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn emit<F>(out: &Option<PathBuf>, write: F) -> Result<(), Failure>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let mut w = open_out(out)?;
    write(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Failure::config(format!("write failed: {e}")))
}

fn parse_x0(spec: &str, n: usize) -> Result<Vec<f64>, Failure> {
    let bad = || {
        Failure::config(format!(
            "--x0 must be consensus:<p> or random:<seed>, got {spec:?}"
        ))
    };
    let (kind, value) = spec.split_once(':').ok_or_else(bad)?;
    match kind {
        "consensus" => {
            let p: f64 = value.parse().map_err(|_| bad())?;
            Ok(vec![p; n])
        }
        "random" => {
            let seed: u64 = value.parse().map_err(|_| bad())?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..n).map(|_| rng.random_range(-1.0..=1.0)).collect())
        }
        _ => Err(bad()),
    }
}

fn lattice(grid: usize, lo: f64, hi: f64) -> Vec<f64> {
    if grid == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..grid)
        .map(|i| lo + (hi - lo) * i as f64 / (grid - 1) as f64)
        .collect()
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Simulate {
            config,
            beta,
            p0,
            e0,
            t_end,
            method,
            tol,
            step,
            out,
        } => {
            let cfg = load(&config)?.model(beta).map_err(Failure::config)?;
            let opts = match method {
                MethodArg::Adaptive => SolverOptions::adaptive(tol, tol),
                MethodArg::Rk4 => SolverOptions::rk4(step),
            };
            let traj = simulate_fsoe(&cfg, FsoeState::new(p0, e0), t_end, &opts)
                .map_err(Failure::numeric)?;
            emit(&out, |w| csv::write_fsoe_trajectory(w, &traj))?;
            Ok(0)
        }
        Command::Equilibria { config, beta, out } => {
            let cfg = load(&config)?.model(beta).map_err(Failure::config)?;
            let eqs = equilibria(&cfg).map_err(Failure::numeric)?;
            emit(&out, |w| csv::write_equilibria(w, cfg.beta, &eqs))?;
            Ok(0)
        }
        Command::Diagram {
            config,
            beta_min,
            beta_max,
            steps,
            cycles,
            jobs,
            out,
        } => {
            let cfg = load(&config)?.model(None).map_err(Failure::config)?;
            if steps < 2 {
                return Err(Failure::config(format!(
                    "--steps must be at least 2, got {steps}"
                )));
            }
            let opts = SweepOptions {
                cycles: matches!(cycles, Toggle::On).then(CycleOptions::default),
                jobs,
                ..SweepOptions::default()
            };
            let d = sweep_beta(&cfg, beta_min, beta_max, steps, &opts).map_err(|e| match e {
                fsoe::bifurcation::BifurcationError::InvalidSweep(_) => Failure::config(e),
                other => Failure::numeric(other),
            })?;
            for (beta, why) in &d.gaps {
                eprintln!("warning: no result at beta = {beta}: {why}");
            }
            let stem = out.to_string_lossy().into_owned();
            emit(&Some(PathBuf::from(format!("{stem}_diagram.csv"))), |w| {
                csv::write_diagram(w, &d)
            })?;
            emit(&Some(PathBuf::from(format!("{stem}_points.csv"))), |w| {
                csv::write_points(w, &d.bifurcation_points)
            })?;
            Ok(0)
        }
        Command::Portrait {
            config,
            beta,
            grid,
            t_end,
            e_lo,
            e_hi,
            out,
        } => {
            let cfg = load(&config)?.model(beta).map_err(Failure::config)?;
            if grid == 0 || !(e_lo <= e_hi) {
                return Err(Failure::config("need --grid >= 1 and --e-lo <= --e-hi"));
            }
            let opts = SolverOptions::adaptive(1e-9, 1e-9);
            let mut runs = Vec::with_capacity(grid * grid);
            for &p in &lattice(grid, -1.0, 1.0) {
                for &e in &lattice(grid, e_lo, e_hi) {
                    runs.push(
                        simulate_fsoe(&cfg, FsoeState::new(p, e), t_end, &opts)
                            .map_err(Failure::numeric)?,
                    );
                }
            }
            emit(&out, |w| csv::write_portrait(w, &runs))?;
            Ok(0)
        }
        Command::Verify { config } => {
            let cfg = load(&config)?.model(None).map_err(Failure::config)?;
            let report = run_verification(&cfg);
            print!("{}", report.render());
            Ok(if report.all_passed() { 0 } else { EXIT_VERIFY })
        }
        Command::Network {
            config,
            graph,
            beta,
            x0,
            e0,
            t_end,
            tol,
            sync_error,
            out,
        } => {
            let rc = load(&config)?;
            let cfg = rc.model(beta).map_err(Failure::config)?;
            let graph_path = graph.or(rc.graph.clone()).ok_or_else(|| {
                Failure::config("no graph: pass --graph or set \"graph\" in the configuration")
            })?;
            let text = std::fs::read_to_string(&graph_path).map_err(|e| {
                Failure::config(format!("cannot read {}: {e}", graph_path.display()))
            })?;
            let g = Graph::from_json(&text).map_err(Failure::config)?;
            let st0 = NetworkState {
                x: parse_x0(&x0, g.n())?,
                e: e0,
            };
            let traj = simulate_network(&cfg, &g, &st0, t_end, &SolverOptions::adaptive(tol, tol))
                .map_err(Failure::numeric)?;
            emit(&out, |w| {
                csv::write_network_trajectory(w, &traj, sync_error)
            })?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
