//! Fictitious default algorithm.
//!
//! Starting from the lattice top, each round fixes the set of banks that are
//! insolvent at the previous iterate, solves the clearing problem in which
//! those banks pay out everything they have and liquidate all holdings while
//! the rest pay in full, and stops once the insolvent set repeats. Insolvent
//! sets only grow, so the algorithm takes at most `n + 1` rounds.

use serde::{Deserialize, Serialize};

use crate::clearing::{Clearing, ClearingState, Direction, SolveReport, SolverConfig};
use crate::network::{FinancialSystem, RelativeLiabilities};
use crate::vecops::{dot, positive_part};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdaRound {
    /// Insolvent set this round was solved with.
    pub insolvent: Vec<usize>,
    pub state: ClearingState,
    pub inner_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FdaTrace {
    pub rounds: Vec<FdaRound>,
    /// Round counter at termination; a system with no insolvent banks stops at 2.
    pub outer_iterations: usize,
}

/// Banks with `x_i + s_i·q + (Aᵀp)_i − p̄_i < −eps`.
pub fn insolvency_set(
    system: &FinancialSystem,
    rel: &RelativeLiabilities,
    state: &ClearingState,
    eps: f64,
) -> Vec<usize> {
    let inflow = rel.inflow(&state.p);
    (0..system.n)
        .filter(|&i| {
            system.liquid[i] + dot(&system.holdings[i], &state.q) + inflow[i] - rel.pbar[i] < -eps
        })
        .collect()
}

fn inner_step(c: &Clearing, insolvent: &[bool], s: &ClearingState, out: &mut ClearingState) {
    let sys = c.system();
    let rel = c.rel();
    let inflow = rel.inflow(&s.p);
    let mut theta = vec![0.0; sys.m];
    let mut sales = vec![0.0; sys.m];
    for i in 0..sys.n {
        let pbar = rel.pbar[i];
        if insolvent[i] {
            let assets = sys.liquid[i] + dot(&sys.holdings[i], &s.q) + inflow[i];
            out.p[i] = assets.clamp(0.0, pbar);
            for (t, h) in theta.iter_mut().zip(&sys.holdings[i]) {
                *t += h;
            }
        } else {
            out.p[i] = pbar;
            let short = positive_part(pbar - sys.liquid[i] - inflow[i]);
            if short > 0.0 {
                c.rule().bank_sales(&sys.holdings[i], &s.q, short, &mut sales);
                for (t, g) in theta.iter_mut().zip(&sales) {
                    *t += g;
                }
            }
        }
        out.m[i] = positive_part(sys.liquid[i] + inflow[i] - pbar).min(c.top().m[i]);
    }
    let makers = c.makers_of(s);
    c.idf().price_into(&theta, &s.m, &makers, &mut out.q);
    for (q, cap) in out.q.iter_mut().zip(&c.top().q) {
        *q = q.min(*cap);
    }
}

/// Greatest solution of the clearing problem with the insolvent set held
/// fixed, by Picard iteration from the top.
pub fn inner_fixed_point(
    c: &Clearing,
    insolvent: &[usize],
    cfg: &SolverConfig,
) -> Result<(ClearingState, usize)> {
    let mut mask = vec![false; c.system().n];
    for &i in insolvent {
        mask[i] = true;
    }
    let mut cur = c.top().clone();
    let mut next = cur.clone();
    let mut step = f64::INFINITY;
    for it in 1..=cfg.max_iterations {
        inner_step(c, &mask, &cur, &mut next);
        step = next.distance(&cur);
        std::mem::swap(&mut cur, &mut next);
        if step <= cfg.tolerance {
            inner_step(c, &mask, &cur, &mut next);
            if next.distance(&cur) <= 10.0 * cfg.tolerance {
                return Ok((cur, it));
            }
        }
    }
    Err(Error::MaxIterationsExceeded {
        iterations: cfg.max_iterations,
        step,
    })
}

/// Runs the fictitious default algorithm and returns the greatest clearing
/// solution with a per-round trace. `report.iterations` counts inner
/// iterations over all rounds.
pub fn solve_fda(c: &Clearing, cfg: &SolverConfig) -> Result<(SolveReport, FdaTrace)> {
    cfg.validate()?;
    let n = c.system().n;
    let mut trace = FdaTrace::default();
    let mut state = c.top().clone();
    let mut previous: Option<Vec<usize>> = None;
    let mut total_inner = 0;

    for k in 1.. {
        let current = insolvency_set(c.system(), c.rel(), &state, cfg.default_eps);
        if let Some(prev) = &previous {
            if let Some(&bank) = prev.iter().find(|b| !current.contains(b)) {
                return Err(Error::InsolvencySetShrank { iteration: k, bank });
            }
            if *prev == current {
                trace.outer_iterations = k;
                break;
            }
        }
        if k > n + 2 {
            return Err(Error::MaxIterationsExceeded {
                iterations: k,
                step: f64::NAN,
            });
        }
        let (next, inner) = inner_fixed_point(c, &current, cfg)?;
        total_inner += inner;
        trace.rounds.push(FdaRound {
            insolvent: current.clone(),
            state: next.clone(),
            inner_iterations: inner,
        });
        state = next;
        previous = Some(current);
    }

    let residual = c.residual(&state);
    let converged = residual <= 10.0 * cfg.tolerance.max(cfg.default_eps);
    let report = c.report(state, total_inner, converged, Direction::Fda, 0.0, cfg);
    Ok((report, trace))
}
