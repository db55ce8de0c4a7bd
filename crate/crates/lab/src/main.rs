//! `conelab` — run, iterate, and cross-validate the projection-repaired
//! CSA-ES on the conically constrained problem.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use conelab::batch::{averaged_batch, iterate_experimental};
use conelab::config::{load_config, ResolvedConfig};
use conelab::csv::{emit_mean_series, emit_series};
use conelab::presets;
use conelab::report::build_report;
use conelab_core::cone::ConeSpec;
use conelab_core::mean_value::{iterate, CsaParams, MeanState, StepMode};
use conelab_core::steady::{steady_state_for, SsRegime};
use conelab_core::theory::{progress_coefficient, TheoryParams};

#[derive(Parser)]
#[command(
    name = "conelab",
    version,
    about = "CSA-ES with repair by projection on a second-order cone: simulator, mean-value iteration, and steady-state theory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded ES batches and emit the averaged dynamics as CSV.
    Simulate(RunArgs),
    /// Iterate the mean-value system and emit the trajectory as CSV.
    Iterate {
        #[command(flatten)]
        run: RunArgs,
        /// Progress-measure source for each step.
        #[arg(long, value_enum, default_value_t = IterMode::Closed)]
        mode: IterMode,
    },
    /// Print steady-state values per regime over a xi grid.
    SteadyState(SteadyArgs),
    /// Build the empirical / closed-form / experimental-iteration
    /// comparison report; exits 1 on tolerance failure.
    Compare(RunArgs),
    /// Print the progress coefficient c_{mu/mu,lambda}.
    Coeff {
        #[arg(long)]
        mu: u32,
        #[arg(long)]
        lambda: u32,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum IterMode {
    Closed,
    Experimental,
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (JSON).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in figure preset (fig3, fig4-N400, ..., fig5-N10000).
    #[arg(long)]
    preset: Option<String>,
    /// Output path; stdout when omitted (and no config output is set).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of repeats.
    #[arg(long)]
    repeats: Option<u32>,
    /// Suppress the creation timestamp so output is byte-reproducible.
    #[arg(long)]
    reproducible: bool,
}

#[derive(Args)]
struct SteadyArgs {
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// Problem dimension when no config is given.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Cone opening parameter when no config is given.
    #[arg(long, default_value_t = 10.0)]
    xi: f64,
    #[arg(long, default_value_t = 3)]
    mu: u32,
    #[arg(long, default_value_t = 10)]
    lambda: u32,
    /// Cumulation parameter; defaults to 1/sqrt(N).
    #[arg(long)]
    c: Option<f64>,
    /// Damping; defaults to 1/c.
    #[arg(long)]
    d: Option<f64>,
    /// Regimes to evaluate (comma separated); all by default.
    #[arg(long, value_delimiter = ',')]
    regime: Vec<String>,
    /// Grid of xi values (comma separated); the configured xi by default.
    #[arg(long, value_delimiter = ',')]
    xi_grid: Vec<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Error carrying the mandated process exit code.
struct AppError {
    code: u8,
    message: String,
}

impl AppError {
    fn config(message: impl ToString) -> Self {
        Self {
            code: 2,
            message: message.to_string(),
        }
    }

    fn io(message: impl ToString) -> Self {
        Self {
            code: 3,
            message: message.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("conelab: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, AppError> {
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Iterate { run, mode } => iterate_cmd(run, mode),
        Command::SteadyState(args) => steady_state(args),
        Command::Compare(args) => compare(args),
        Command::Coeff { mu, lambda } => {
            let c = progress_coefficient(mu, lambda).map_err(AppError::config)?;
            println!("c_{{{mu}/{mu},{lambda}}} = {c:.10}");
            Ok(0)
        }
    }
}

fn resolve(args: &RunArgs) -> Result<ResolvedConfig, AppError> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => load_config(path).map_err(AppError::config)?,
        (None, Some(name)) => presets::load_preset(name)
            .ok_or_else(|| AppError::config(format!("unknown preset `{name}`")))?
            .map_err(AppError::config)?,
        (None, None) => return Err(AppError::config("either --config or --preset is required")),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
        cfg.es.seed = seed;
    }
    if let Some(repeats) = args.repeats {
        if repeats < 1 {
            return Err(AppError::config("--repeats must be at least 1"));
        }
        cfg.repeats = repeats;
    }
    if let Some(path) = &args.output {
        cfg.output = Some(path.clone());
    }
    Ok(cfg)
}

fn timestamp(reproducible: bool) -> Option<u64> {
    if reproducible {
        None
    } else {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs())
    }
}

fn with_output<F>(output: Option<&PathBuf>, write: F) -> Result<(), AppError>
where
    F: FnOnce(&mut dyn Write) -> Result<(), AppError>,
{
    match output {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| AppError::io(format!("cannot create {}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            write(&mut w)?;
            w.flush().map_err(AppError::io)
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write(&mut w)
        }
    }
}

fn simulate(args: RunArgs) -> Result<u8, AppError> {
    let cfg = resolve(&args)?;
    let series = averaged_batch(&cfg.cone, &cfg.es, cfg.repeats)
        .map_err(|e| AppError::config(format!("run failed: {e}")))?;
    let created = timestamp(args.reproducible);
    with_output(cfg.output.as_ref(), |w| {
        emit_series(w, &series, created).map_err(|e| AppError::io(format!("write failed: {e}")))
    })?;
    Ok(0)
}

fn iterate_cmd(args: RunArgs, mode: IterMode) -> Result<u8, AppError> {
    let cfg = resolve(&args)?;
    let params =
        TheoryParams::new(&cfg.cone, cfg.es.mu, cfg.es.lambda).map_err(AppError::config)?;
    let csa = CsaParams {
        c: cfg.es.c,
        d: cfg.es.d,
    };
    let init = MeanState::initial(cfg.es.x0, cfg.es.r0, cfg.es.sigma0, cfg.cone.n())
        .map_err(AppError::config)?;
    let traj = match mode {
        IterMode::Closed => iterate(
            &init,
            cfg.es.max_gen,
            &cfg.cone,
            &params,
            csa,
            StepMode::ClosedForm,
        )
        .map_err(AppError::config)?,
        IterMode::Experimental => iterate_experimental(
            &init,
            cfg.es.max_gen,
            &cfg.cone,
            &params,
            csa,
            cfg.trials,
            cfg.seed,
        )
        .map_err(AppError::config)?,
    };
    let created = timestamp(args.reproducible);
    with_output(cfg.output.as_ref(), |w| {
        emit_mean_series(w, &traj, &cfg.cone, &params, &cfg.es, &[cfg.seed], created)
            .map_err(|e| AppError::io(format!("write failed: {e}")))
    })?;
    Ok(0)
}

fn steady_state(args: SteadyArgs) -> Result<u8, AppError> {
    // parameters from config/preset when given, from flags otherwise
    let (n, base_xi, mu, lambda, c, d) = if args.config.is_some() || args.preset.is_some() {
        let run_args = RunArgs {
            config: args.config.clone(),
            preset: args.preset.clone(),
            output: None,
            seed: None,
            repeats: None,
            reproducible: false,
        };
        let cfg = resolve(&run_args)?;
        (
            cfg.cone.n(),
            cfg.cone.xi(),
            cfg.es.mu,
            cfg.es.lambda,
            cfg.es.c,
            cfg.es.d,
        )
    } else {
        let c = args.c.unwrap_or(1.0 / (args.n as f64).sqrt());
        (
            args.n,
            args.xi,
            args.mu,
            args.lambda,
            c,
            args.d.unwrap_or(1.0 / c),
        )
    };
    let csa = CsaParams { c, d };
    let regimes: Vec<SsRegime> = if args.regime.is_empty() {
        SsRegime::ALL.to_vec()
    } else {
        args.regime
            .iter()
            .map(|name| {
                name.parse()
                    .map_err(|_| AppError::config(format!("unknown regime `{name}`")))
            })
            .collect::<Result<_, _>>()?
    };
    let grid = if args.xi_grid.is_empty() {
        vec![base_xi]
    } else {
        args.xi_grid.clone()
    };

    let mut table = String::new();
    table.push_str(&format!(
        "{:<10} {:<26} {:>12} {:>12} {:>10} {:>12} {:>12} {:>12}\n",
        "xi", "regime", "sigma_ss*", "phi_ss*", "ratio", "s1", "s_odot", "||s||^2"
    ));
    for &xi in &grid {
        let cone = ConeSpec::new(n, xi).map_err(AppError::config)?;
        let params = TheoryParams::new(&cone, mu, lambda).map_err(AppError::config)?;
        for &regime in &regimes {
            match steady_state_for(&params, csa, regime) {
                Ok(ss) => table.push_str(&format!(
                    "{:<10} {:<26} {:>12.5} {:>12.5} {:>10.5} {:>12.4} {:>12.4} {:>12.2}\n",
                    xi,
                    regime.name(),
                    ss.sigma_ss_star,
                    ss.phi_ss_star,
                    ss.ratio_ss,
                    ss.s1_ss,
                    ss.s_odot_ss,
                    ss.s_norm_sq_ss,
                )),
                Err(e) => table.push_str(&format!(
                    "{:<10} {:<26} unavailable: {e}\n",
                    xi,
                    regime.name()
                )),
            }
        }
    }
    with_output(args.output.as_ref(), |w| {
        w.write_all(table.as_bytes())
            .map_err(|e| AppError::io(format!("write failed: {e}")))
    })?;
    Ok(0)
}

fn compare(args: RunArgs) -> Result<u8, AppError> {
    let cfg = resolve(&args)?;
    let report =
        build_report(&cfg).map_err(|e| AppError::config(format!("comparison failed: {e}")))?;
    if let Some(path) = cfg.output.as_ref() {
        let mut csv_path = path.clone();
        if csv_path.extension().is_none() {
            csv_path.set_extension("csv");
        }
        with_output(Some(&csv_path), |w| {
            report
                .emit_csv(w)
                .map_err(|e| AppError::io(format!("write failed: {e}")))
        })?;
    }
    print!("{}", report.render());
    Ok(report.exit_code())
}
