//! Random-network experiments: a shock sweep over one liability draw and a
//! Monte Carlo ensemble at a fixed shock.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    pair_row, par_rows, MonteCarloSpec, PairConfig, ResultRow, ScenarioResult, ShockSweepSpec, Summary,
};
use crate::clearing::SolverConfig;
use crate::network::generate_random_system;
use crate::Result;

/// Solves one liability draw at every shock level.
pub fn run_shock_sweep(spec: &ShockSweepSpec, cfg: &SolverConfig) -> Result<ScenarioResult> {
    let base = generate_random_system(&spec.template, spec.seed)?;
    let pc = PairConfig {
        scenario: "shock_sweep",
        method: spec.method,
        maker_rule: spec.maker_rule,
        cfg,
    };
    let rows = par_rows(&spec.shocks, |&x| {
        let mut system = base.clone();
        system.liquid = vec![x; system.n];
        pair_row(system, spec.idf.clone(), &pc, x, None, Some(spec.seed))
    });
    Ok(ScenarioResult {
        rows,
        summary: Summary::None,
    })
}

/// Per-trial seeds, drawn in order from a ChaCha8 stream seeded with `master`.
pub fn trial_seeds(master: u64, trials: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..trials).map(|_| rng.gen()).collect()
}

/// Counts of first-asset prices in equal-width bins over `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub endogenous: Vec<usize>,
    pub fixed: Vec<usize>,
}

impl Histogram {
    fn new(bins: usize) -> Self {
        Histogram {
            edges: (0..=bins).map(|k| k as f64 / bins as f64).collect(),
            endogenous: vec![0; bins],
            fixed: vec![0; bins],
        }
    }

    fn bin(&self, q: f64) -> usize {
        let bins = self.endogenous.len();
        ((q * bins as f64).floor().max(0.0) as usize).min(bins - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub trials: usize,
    pub converged: usize,
    pub mean_q_endo: f64,
    pub mean_q_fixed: f64,
    pub mean_defaults_endo: f64,
    pub mean_defaults_fixed: f64,
    pub threshold: f64,
    /// Share of trials whose endogenous price is below `threshold`.
    pub frac_below_threshold: f64,
    /// Trials with endogenous price above the benchmark or fewer endogenous defaults.
    pub ordering_violations: usize,
    pub histogram: Histogram,
}

impl MonteCarloSummary {
    fn from_rows(rows: &[ResultRow], bins: usize, threshold: f64) -> Self {
        let mut hist = Histogram::new(bins);
        let valid: Vec<&ResultRow> = rows
            .iter()
            .filter(|r| r.q.first().is_some_and(|q| q.is_finite()))
            .collect();
        let k = valid.len().max(1) as f64;
        let mut below = 0;
        for r in &valid {
            let (qe, qf) = (r.q[0], r.q_fixed[0]);
            let b = hist.bin(qe);
            hist.endogenous[b] += 1;
            let b = hist.bin(qf);
            hist.fixed[b] += 1;
            if qe < threshold {
                below += 1;
            }
        }
        let result = ScenarioResult {
            rows: rows.to_vec(),
            summary: Summary::None,
        };
        MonteCarloSummary {
            trials: rows.len(),
            converged: rows.iter().filter(|r| r.converged).count(),
            mean_q_endo: valid.iter().map(|r| r.q[0]).sum::<f64>() / k,
            mean_q_fixed: valid.iter().map(|r| r.q_fixed[0]).sum::<f64>() / k,
            mean_defaults_endo: valid.iter().map(|r| r.defaults_endo as f64).sum::<f64>() / k,
            mean_defaults_fixed: valid.iter().map(|r| r.defaults_fixed as f64).sum::<f64>() / k,
            threshold,
            frac_below_threshold: below as f64 / k,
            ordering_violations: result.ordering_violations(1e-9).len(),
            histogram: hist,
        }
    }
}

/// Solves `trials` independent liability draws. Trials run in parallel but
/// each uses a pre-assigned seed, so results do not depend on thread count.
pub fn run_monte_carlo(spec: &MonteCarloSpec, cfg: &SolverConfig) -> Result<ScenarioResult> {
    let mut template = spec.template.clone();
    template.liquid = vec![spec.shock; template.n];
    let pc = PairConfig {
        scenario: "monte_carlo",
        method: spec.method,
        maker_rule: spec.maker_rule,
        cfg,
    };
    let seeds = trial_seeds(spec.seed, spec.trials);
    let rows = seeds
        .par_iter()
        .map(|&seed| {
            let system = generate_random_system(&template, seed)?;
            Ok(pair_row(system, spec.idf.clone(), &pc, spec.shock, None, Some(seed)))
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = MonteCarloSummary::from_rows(&rows, spec.bins, spec.threshold);
    Ok(ScenarioResult {
        rows,
        summary: Summary::MonteCarlo(summary),
    })
}
