use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use contagion::scenarios::{
    self, DiversificationSpec, EbaSweepSpec, MonteCarloSpec, ProblemSpec, ScenarioResult, ScenarioSpec,
    ShockSweepSpec, Summary,
};
use contagion::{solve_fda, Error, SolverConfig};

/// Clearing equilibria for interbank networks with fire sales and
/// endogenous market liquidity.
#[derive(Debug, Parser)]
#[command(name = "contagion", version)]
struct Cli {
    /// Problem file for `solve`, scenario spec (JSON or TOML) otherwise.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed of `sweep` and `montecarlo`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for result files; results go to stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    #[arg(long = "max-iter", global = true)]
    max_iter: Option<usize>,
    /// Emit the per-round trace of the fictitious default algorithm and debug logs.
    #[arg(long, global = true)]
    trace: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a single clearing problem.
    Solve {
        /// Overrides the method given in the problem file.
        #[arg(long, value_enum)]
        method: Option<Method>,
    },
    /// Greatest and least solutions of the two-bank example with two equilibria.
    Counterexample,
    /// Sweep the cash level of one random network.
    Sweep,
    /// Ensemble of random networks at a fixed cash level.
    Montecarlo,
    /// Two-bank portfolio-overlap study across correlations.
    Diversify,
    /// Liquid-fraction sweep on bank-level balance-sheet data.
    Eba,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Greatest,
    Least,
    Fda,
    Enumerate,
    Compare,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::MaxIterationsExceeded { .. }
            | Error::InsolvencySetShrank { .. }
            | Error::EnumerationCapExceeded { .. }
            | Error::EnumerationUnsupported(_)
            | Error::NoJumpFound { .. } => 1,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn solver_config(cli: &Cli) -> Result<SolverConfig, Failure> {
    let mut cfg = SolverConfig::default();
    if let Some(t) = cli.tolerance {
        cfg.tolerance = t;
    }
    if let Some(k) = cli.max_iter {
        cfg.max_iterations = k;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_spec(cli: &Cli, command: &Command) -> Result<ScenarioSpec, Failure> {
    let mut spec = match &cli.config {
        Some(path) => ScenarioSpec::load(path)?,
        None => match command {
            Command::Counterexample => ScenarioSpec::Counterexample,
            Command::Sweep => ScenarioSpec::ShockSweep(ShockSweepSpec::default()),
            Command::Montecarlo => ScenarioSpec::MonteCarlo(MonteCarloSpec::default()),
            Command::Diversify => ScenarioSpec::Diversification(DiversificationSpec::default()),
            Command::Eba => ScenarioSpec::EbaSweep(EbaSweepSpec::default()),
            Command::Solve { .. } => unreachable!("solve reads a problem file"),
        },
    };
    let expected = match command {
        Command::Counterexample => "counterexample",
        Command::Sweep => "shock_sweep",
        Command::Montecarlo => "monte_carlo",
        Command::Diversify => "diversification",
        Command::Eba => "eba_sweep",
        Command::Solve { .. } => unreachable!(),
    };
    if spec.name() != expected {
        return Err(input_error(format!(
            "config describes a '{}' scenario, this subcommand runs '{expected}'",
            spec.name()
        )));
    }
    if let Some(seed) = cli.seed {
        match &mut spec {
            ScenarioSpec::ShockSweep(s) => s.seed = seed,
            ScenarioSpec::MonteCarlo(s) => s.seed = seed,
            _ => log::warn!("--seed has no effect on the {expected} scenario"),
        }
    }
    spec.validate()?;
    Ok(spec)
}

fn write_json(out: Option<&Path>, name: &str, value: &serde_json::Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)? + "\n";
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn solve(cli: &Cli, method: Option<Method>, cfg: &SolverConfig) -> Result<bool, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| input_error("solve needs --config <problem file>"))?;
    let problem = ProblemSpec::load(path)?;
    let c = problem.clearing()?;
    let method = method.unwrap_or(match problem.method {
        scenarios::SolveMethod::Greatest => Method::Greatest,
        scenarios::SolveMethod::Least => Method::Least,
        scenarios::SolveMethod::Fda => Method::Fda,
    });
    let out = cli.out.as_deref();
    let converged = match method {
        Method::Greatest | Method::Least => {
            let r = if method == Method::Greatest {
                c.solve_greatest(cfg)?
            } else {
                c.solve_least(cfg)?
            };
            write_json(out, "solve.json", &serde_json::to_value(&r).map_err(Error::from)?)?;
            r.converged
        }
        Method::Fda => {
            let (r, trace) = solve_fda(&c, cfg)?;
            write_json(out, "solve.json", &serde_json::to_value(&r).map_err(Error::from)?)?;
            if cli.trace {
                write_json(out, "trace.json", &serde_json::to_value(&trace).map_err(Error::from)?)?;
            }
            r.converged
        }
        Method::Enumerate => {
            let all = c.enumerate_solutions(cfg)?;
            write_json(out, "solve.json", &serde_json::to_value(&all).map_err(Error::from)?)?;
            true
        }
        Method::Compare => {
            let cmp = c.compare_fixed_vs_endogenous(cfg)?;
            write_json(out, "solve.json", &serde_json::to_value(&cmp).map_err(Error::from)?)?;
            cmp.endogenous.converged && cmp.benchmark.converged
        }
    };
    Ok(converged)
}

fn summarize(spec: &ScenarioSpec, res: &ScenarioResult) {
    match &res.summary {
        Summary::MonteCarlo(s) => eprintln!(
            "{} trials: mean price endogenous {:.4}, fixed {:.4}; share below {} = {:.3}",
            s.trials, s.mean_q_endo, s.mean_q_fixed, s.threshold, s.frac_below_threshold
        ),
        Summary::Diversification(d) => {
            for j in &d.jumps {
                match &j.jump {
                    Some(jump) => eprintln!(
                        "rho {}: makers {} -> {} at lambda {:.4}",
                        j.rho, jump.makers_left, jump.makers_right, jump.location
                    ),
                    None => eprintln!("rho {}: no change in market makers", j.rho),
                }
            }
        }
        Summary::Counterexample(r) => eprint!("{}", r.table()),
        Summary::None => eprintln!("{}: {} rows", spec.name(), res.rows.len()),
    }
    let bad = res.rows.iter().filter(|r| !r.converged).count();
    if bad > 0 {
        eprintln!("{bad} rows did not converge");
    }
}

fn run_scenario(cli: &Cli, cfg: &SolverConfig) -> Result<bool, Failure> {
    let spec = load_spec(cli, &cli.command)?;
    let res = scenarios::run(&spec, cfg)?;
    summarize(&spec, &res);
    match &cli.out {
        Some(dir) => {
            let (csv, json) = res.save(dir, spec.name(), &spec, cfg)?;
            eprintln!("wrote {} and {}", csv.display(), json.display());
        }
        None => print!("{}", res.to_csv_string()?),
    }
    Ok(res.all_converged())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.trace { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = solver_config(&cli).and_then(|cfg| match &cli.command {
        Command::Solve { method } => solve(&cli, *method, &cfg),
        _ => run_scenario(&cli, &cfg),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: solver did not converge");
            ExitCode::from(1)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
