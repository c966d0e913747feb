//! Stress-test experiments: shock sweeps, Monte Carlo ensembles, the
//! two-bank diversification study, balance-sheet ingestion from a bank-level
//! CSV, and the two-solution counterexample.
//!
//! Every experiment is described by a [`ScenarioSpec`] and produces a
//! [`ScenarioResult`]: one [`ResultRow`] per grid point or trial plus an
//! experiment-specific [`Summary`]. Rows solve the endogenous-liquidity model
//! next to the frozen-liquidity benchmark on the same balance sheets.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clearing::{Clearing, MakerRule, SolveReport, SolverConfig};
use crate::fda::solve_fda;
use crate::inverse_demand::InverseDemandModel;
use crate::liquidation::LiquidationRule;
use crate::network::{FinancialSystem, RandomSystemParams};
use crate::{Error, Result};

mod counterexample;
mod diversification;
mod eba;
pub mod fixtures;
mod output;
mod problem;
mod sweep;

pub use counterexample::{run_counterexample, CounterexampleReport};
pub use diversification::{locate_jump, run_diversification, DiversificationSummary, Jump, RhoJump};
pub use eba::{build_eba_system, eba_idf, ingest_eba, parse_eba, run_eba_sweep, EbaBank, BUNDLED_EBA_CSV};
pub use problem::ProblemSpec;
pub use sweep::{run_monte_carlo, run_shock_sweep, trial_seeds, Histogram, MonteCarloSummary};

/// Which clearing solution a scenario reports.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    #[default]
    Greatest,
    Least,
    Fda,
}

impl std::str::FromStr for SolveMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greatest" => Ok(SolveMethod::Greatest),
            "least" => Ok(SolveMethod::Least),
            "fda" => Ok(SolveMethod::Fda),
            other => Err(Error::InvalidSpec(format!("unknown solve method '{other}'"))),
        }
    }
}

pub fn solve_with(c: &Clearing, method: SolveMethod, cfg: &SolverConfig) -> Result<SolveReport> {
    match method {
        SolveMethod::Greatest => c.solve_greatest(cfg),
        SolveMethod::Least => c.solve_least(cfg),
        SolveMethod::Fda => solve_fda(c, cfg).map(|(r, _)| r),
    }
}

fn default_distress_template() -> RandomSystemParams {
    RandomSystemParams::distress_study(3.0)
}

fn default_distress_idf() -> InverseDemandModel {
    fixtures::uniform_linear_idf(50, 0.1)
}

/// `5.0, 4.95, ..., 2.0`.
pub fn default_shock_grid() -> Vec<f64> {
    (0..=60).map(|k| (500 - 5 * k) as f64 / 100.0).collect()
}

/// `0, 0.01, ..., 1`.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..=100).map(|k| k as f64 / 100.0).collect()
}

fn default_rhos() -> Vec<f64> {
    vec![0.0, 0.1, 0.3, 0.5]
}

/// `0.90, 0.91, ..., 1.00`.
pub fn default_fraction_grid() -> Vec<f64> {
    (90..=100).map(|k| k as f64 / 100.0).collect()
}

fn default_trials() -> usize {
    1000
}

fn default_shock() -> f64 {
    3.0
}

fn default_bins() -> usize {
    20
}

fn default_threshold() -> f64 {
    0.8
}

fn default_jump_tol() -> f64 {
    1e-4
}

fn default_eba_alpha() -> f64 {
    5e-7
}

fn default_nonnegative() -> MakerRule {
    MakerRule::NonNegativeNet
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShockSweepSpec {
    /// Random network; its `liquid` entry is replaced by each shock level.
    #[serde(default = "default_distress_template")]
    pub template: RandomSystemParams,
    #[serde(default = "default_distress_idf")]
    pub idf: InverseDemandModel,
    /// Cash per bank at each grid point.
    #[serde(default = "default_shock_grid")]
    pub shocks: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub method: SolveMethod,
    #[serde(default)]
    pub maker_rule: MakerRule,
}

impl Default for ShockSweepSpec {
    fn default() -> Self {
        ShockSweepSpec {
            template: default_distress_template(),
            idf: default_distress_idf(),
            shocks: default_shock_grid(),
            seed: 0,
            method: SolveMethod::Greatest,
            maker_rule: MakerRule::PositiveLiquidity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSpec {
    #[serde(default = "default_distress_template")]
    pub template: RandomSystemParams,
    #[serde(default = "default_distress_idf")]
    pub idf: InverseDemandModel,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Master seed; per-trial seeds are drawn from it in order.
    #[serde(default)]
    pub seed: u64,
    /// Cash held by every bank.
    #[serde(default = "default_shock")]
    pub shock: f64,
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Summary reports the share of trials with endogenous price below this.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub method: SolveMethod,
    #[serde(default)]
    pub maker_rule: MakerRule,
}

impl Default for MonteCarloSpec {
    fn default() -> Self {
        MonteCarloSpec {
            template: default_distress_template(),
            idf: default_distress_idf(),
            trials: default_trials(),
            seed: 0,
            shock: default_shock(),
            bins: default_bins(),
            threshold: default_threshold(),
            method: SolveMethod::Greatest,
            maker_rule: MakerRule::PositiveLiquidity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiversificationSpec {
    #[serde(default = "default_lambda_grid")]
    pub lambdas: Vec<f64>,
    #[serde(default = "default_rhos")]
    pub rhos: Vec<f64>,
    /// Bisection stops once the bracket is this narrow.
    #[serde(default = "default_jump_tol")]
    pub jump_tolerance: f64,
    #[serde(default)]
    pub method: SolveMethod,
    #[serde(default = "default_nonnegative")]
    pub maker_rule: MakerRule,
}

impl Default for DiversificationSpec {
    fn default() -> Self {
        DiversificationSpec {
            lambdas: default_lambda_grid(),
            rhos: default_rhos(),
            jump_tolerance: default_jump_tol(),
            method: SolveMethod::Greatest,
            maker_rule: MakerRule::NonNegativeNet,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EbaSweepSpec {
    /// Bank-level CSV; the bundled synthetic 87-bank file when absent.
    #[serde(default)]
    pub data: Option<PathBuf>,
    /// Share of external assets held as cash at each grid point.
    #[serde(default = "default_fraction_grid")]
    pub fractions: Vec<f64>,
    #[serde(default = "default_eba_alpha")]
    pub alpha0: f64,
    #[serde(default = "default_eba_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub method: SolveMethod,
    #[serde(default)]
    pub maker_rule: MakerRule,
}

impl Default for EbaSweepSpec {
    fn default() -> Self {
        EbaSweepSpec {
            data: None,
            fractions: default_fraction_grid(),
            alpha0: default_eba_alpha(),
            alpha: default_eba_alpha(),
            method: SolveMethod::Greatest,
            maker_rule: MakerRule::PositiveLiquidity,
        }
    }
}

/// A declarative experiment, loadable from JSON or TOML with a `scenario` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "snake_case")]
pub enum ScenarioSpec {
    ShockSweep(ShockSweepSpec),
    MonteCarlo(MonteCarloSpec),
    Diversification(DiversificationSpec),
    EbaSweep(EbaSweepSpec),
    Counterexample,
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidSpec(format!("{name} grid is empty")));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidSpec(format!("{name} grid has non-finite values")));
    }
    let up = grid.windows(2).all(|w| w[0] < w[1]);
    let down = grid.windows(2).all(|w| w[0] > w[1]);
    if !(up || down) {
        return Err(Error::InvalidSpec(format!("{name} grid must be strictly sorted")));
    }
    Ok(())
}

impl ScenarioSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioSpec::ShockSweep(_) => "shock_sweep",
            ScenarioSpec::MonteCarlo(_) => "monte_carlo",
            ScenarioSpec::Diversification(_) => "diversification",
            ScenarioSpec::EbaSweep(_) => "eba_sweep",
            ScenarioSpec::Counterexample => "counterexample",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ScenarioSpec::ShockSweep(s) => {
                check_grid("shock", &s.shocks)?;
                s.template.interbank.validate()?;
                if s.shocks.iter().any(|&x| x < 0.0) {
                    return Err(Error::InvalidSpec("shock levels must be >= 0".into()));
                }
            }
            ScenarioSpec::MonteCarlo(s) => {
                if s.trials == 0 {
                    return Err(Error::InvalidSpec("trial count must be >= 1".into()));
                }
                if s.bins == 0 {
                    return Err(Error::InvalidSpec("histogram needs at least one bin".into()));
                }
                if !(s.shock >= 0.0) {
                    return Err(Error::InvalidSpec(format!("shock level {} must be >= 0", s.shock)));
                }
                s.template.interbank.validate()?;
            }
            ScenarioSpec::Diversification(s) => {
                check_grid("lambda", &s.lambdas)?;
                if s.lambdas.iter().any(|&l| !(0.0..=1.0).contains(&l)) {
                    return Err(Error::InvalidSpec("lambda grid must lie in [0, 1]".into()));
                }
                check_grid("rho", &s.rhos)?;
                if s.rhos.iter().any(|&r| !(r > -1.0 && r <= 1.0)) {
                    return Err(Error::InvalidSpec("rho must lie in (-1, 1]".into()));
                }
                if !(s.jump_tolerance > 0.0) {
                    return Err(Error::InvalidSpec("jump tolerance must be > 0".into()));
                }
            }
            ScenarioSpec::EbaSweep(s) => {
                check_grid("liquid fraction", &s.fractions)?;
                if s.fractions.iter().any(|&f| !(0.0..=1.0).contains(&f)) {
                    return Err(Error::InvalidSpec("liquid fractions must lie in [0, 1]".into()));
                }
                if !(s.alpha0 > 0.0 && s.alpha > 0.0) {
                    return Err(Error::InvalidSpec("risk aversions must be > 0".into()));
                }
            }
            ScenarioSpec::Counterexample => {}
        }
        Ok(())
    }

    /// Parses JSON, or TOML when `toml` is set.
    pub fn parse(text: &str, toml: bool) -> Result<Self> {
        let spec: ScenarioSpec = if toml {
            ::toml::from_str(text)?
        } else {
            serde_json::from_str(text)?
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Loads a spec; files ending in `.toml` are read as TOML, anything else as JSON.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        Self::parse(&text, is_toml)
    }
}

/// One grid point or trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub grid_value: f64,
    pub rho: Option<f64>,
    pub seed: Option<u64>,
    /// Endogenous-liquidity prices.
    pub q: Vec<f64>,
    /// Frozen-liquidity benchmark prices.
    pub q_fixed: Vec<f64>,
    pub defaults_endo: usize,
    pub defaults_fixed: usize,
    /// Σ_k (total units of k) · q_k at the endogenous prices.
    pub mktcap: f64,
    pub mm_count: usize,
    /// Both solves converged.
    pub converged: bool,
}

/// Experiment-specific aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Summary {
    None,
    MonteCarlo(MonteCarloSummary),
    Diversification(DiversificationSummary),
    Counterexample(Box<CounterexampleReport>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub rows: Vec<ResultRow>,
    pub summary: Summary,
}

impl ScenarioResult {
    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }

    /// Rows where the endogenous price exceeds the benchmark or the
    /// endogenous default count is below it.
    pub fn ordering_violations(&self, slack: f64) -> Vec<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| {
                r.q.iter().zip(&r.q_fixed).any(|(e, f)| e > &(f + slack))
                    || r.defaults_endo < r.defaults_fixed
            })
            .map(|(i, _)| i)
            .collect()
    }
}

/// Runs any scenario.
pub fn run(spec: &ScenarioSpec, cfg: &SolverConfig) -> Result<ScenarioResult> {
    spec.validate()?;
    cfg.validate()?;
    match spec {
        ScenarioSpec::ShockSweep(s) => run_shock_sweep(s, cfg),
        ScenarioSpec::MonteCarlo(s) => run_monte_carlo(s, cfg),
        ScenarioSpec::Diversification(s) => run_diversification(s, cfg),
        ScenarioSpec::EbaSweep(s) => run_eba_sweep(s, cfg),
        ScenarioSpec::Counterexample => {
            let report = run_counterexample(cfg)?;
            Ok(ScenarioResult {
                rows: report.rows_with(cfg),
                summary: Summary::Counterexample(Box::new(report)),
            })
        }
    }
}

pub(crate) struct PairConfig<'a> {
    pub scenario: &'a str,
    pub method: SolveMethod,
    pub maker_rule: MakerRule,
    pub cfg: &'a SolverConfig,
}

/// Endogenous and benchmark solves on the same balance sheets.
pub(crate) fn solve_pair(
    system: FinancialSystem,
    idf: InverseDemandModel,
    pc: &PairConfig<'_>,
) -> Result<(SolveReport, SolveReport, Clearing)> {
    let c = Clearing::new(system, idf)?
        .with_rule(LiquidationRule::Proportional)
        .with_maker_rule(pc.maker_rule);
    let endo = solve_with(&c, pc.method, pc.cfg)?;
    let fixed = solve_with(&c.fixed_benchmark(), pc.method, pc.cfg)?;
    Ok((endo, fixed, c))
}

pub(crate) fn pair_row(
    system: FinancialSystem,
    idf: InverseDemandModel,
    pc: &PairConfig<'_>,
    grid_value: f64,
    rho: Option<f64>,
    seed: Option<u64>,
) -> ResultRow {
    let m = system.m;
    match solve_pair(system, idf, pc) {
        Ok((endo, fixed, c)) => {
            if !(endo.converged && fixed.converged) {
                log::warn!("{} at {grid_value}: solver did not converge", pc.scenario);
            }
            ResultRow {
                scenario: pc.scenario.to_string(),
                grid_value,
                rho,
                seed,
                mktcap: c.market_cap(&endo.state.q),
                mm_count: endo.market_makers.len(),
                defaults_endo: endo.defaults.len(),
                defaults_fixed: fixed.defaults.len(),
                converged: endo.converged && fixed.converged,
                q: endo.state.q,
                q_fixed: fixed.state.q,
            }
        }
        Err(e) => {
            log::warn!("{} at {grid_value}: {e}", pc.scenario);
            ResultRow {
                scenario: pc.scenario.to_string(),
                grid_value,
                rho,
                seed,
                q: vec![f64::NAN; m],
                q_fixed: vec![f64::NAN; m],
                defaults_endo: 0,
                defaults_fixed: 0,
                mktcap: f64::NAN,
                mm_count: 0,
                converged: false,
            }
        }
    }
}

/// Maps `f` over `items` in parallel, keeping input order.
pub(crate) fn par_rows<T: Sync, F>(items: &[T], f: F) -> Vec<ResultRow>
where
    F: Fn(&T) -> ResultRow + Sync + Send,
{
    items.par_iter().map(f).collect()
}
