//! Two-bank portfolio-overlap study and localisation of price jumps.

use serde::{Deserialize, Serialize};

use super::{fixtures, pair_row, par_rows, solve_with, DiversificationSpec, PairConfig, ScenarioResult, Summary};
use crate::clearing::{Clearing, SolverConfig};
use crate::{Error, Result};

/// A change in the market-maker count bracketed by bisection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    /// Midpoint of the final bracket.
    pub location: f64,
    pub bracket: (f64, f64),
    pub makers_left: usize,
    pub makers_right: usize,
    /// Metric at the left end of the final bracket.
    pub left: Vec<f64>,
    /// Metric at the right end of the final bracket.
    pub right: Vec<f64>,
}

/// Bisects `[lo, hi]` on the market-maker count returned by `eval` until the
/// bracket is at most `tol` wide. Assumes the count changes once.
pub fn locate_jump<F>(mut eval: F, lo: f64, hi: f64, tol: f64) -> Result<Jump>
where
    F: FnMut(f64) -> Result<(usize, Vec<f64>)>,
{
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "jump search needs lo < hi and tol > 0, got [{lo}, {hi}], tol {tol}"
        )));
    }
    let (mut a, mut b) = (lo, hi);
    let (count_a, mut left) = eval(a)?;
    let (count_b, mut right) = eval(b)?;
    if count_a == count_b {
        return Err(Error::NoJumpFound { lo, hi });
    }
    while b - a > tol {
        let mid = 0.5 * (a + b);
        let (count, value) = eval(mid)?;
        if count == count_a {
            a = mid;
            left = value;
        } else {
            b = mid;
            right = value;
        }
    }
    Ok(Jump {
        location: 0.5 * (a + b),
        bracket: (a, b),
        makers_left: count_a,
        makers_right: count_b,
        left,
        right,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoJump {
    pub rho: f64,
    /// `None` when the market-maker count is the same at both ends of the grid.
    pub jump: Option<Jump>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversificationSummary {
    pub jumps: Vec<RhoJump>,
}

/// Sweeps λ for every ρ, then locates the price jump per ρ.
pub fn run_diversification(spec: &DiversificationSpec, cfg: &SolverConfig) -> Result<ScenarioResult> {
    let pc = PairConfig {
        scenario: "diversification",
        method: spec.method,
        maker_rule: spec.maker_rule,
        cfg,
    };
    let points: Vec<(f64, f64)> = spec
        .rhos
        .iter()
        .flat_map(|&rho| spec.lambdas.iter().map(move |&l| (rho, l)))
        .collect();
    let rows = par_rows(&points, |&(rho, lambda)| {
        pair_row(
            fixtures::diversification(lambda),
            fixtures::diversification_idf(rho),
            &pc,
            lambda,
            Some(rho),
            None,
        )
    });

    let lo = spec.lambdas.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = spec.lambdas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut jumps = Vec::with_capacity(spec.rhos.len());
    for &rho in &spec.rhos {
        let jump = if lo < hi {
            let eval = |lambda: f64| {
                let c = Clearing::new(fixtures::diversification(lambda), fixtures::diversification_idf(rho))?
                    .with_maker_rule(spec.maker_rule);
                let r = solve_with(&c, spec.method, cfg)?;
                Ok((r.market_makers.len(), r.state.q))
            };
            match locate_jump(eval, lo, hi, spec.jump_tolerance) {
                Ok(j) => Some(j),
                Err(Error::NoJumpFound { .. }) => None,
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        jumps.push(RhoJump { rho, jump });
    }

    Ok(ScenarioResult {
        rows,
        summary: Summary::Diversification(DiversificationSummary { jumps }),
    })
}
