use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{fixtures, pair_row, PairConfig, ResultRow, SolveMethod};
use crate::clearing::{ClassOutcome, Clearing, MakerRule, SolveReport, SolverConfig};
use crate::Result;

/// Greatest and least solutions of the two-bank fixture, plus the
/// self-consistent solutions found for each assumed market-maker count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub greatest: SolveReport,
    pub least: SolveReport,
    pub classes: Vec<ClassOutcome>,
}

pub fn run_counterexample(cfg: &SolverConfig) -> Result<CounterexampleReport> {
    let c = Clearing::new(fixtures::counterexample(), fixtures::counterexample_idf())?;
    Ok(CounterexampleReport {
        greatest: c.solve_greatest(cfg)?,
        least: c.solve_least(cfg)?,
        classes: c.enumerate_classes(cfg)?,
    })
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("({})", parts.join(", "))
}

impl CounterexampleReport {
    /// Human-readable summary, one line per solution and per maker count.
    pub fn table(&self) -> String {
        let mut out = String::new();
        for (name, r) in [("greatest", &self.greatest), ("least", &self.least)] {
            let _ = writeln!(
                out,
                "{name:<9} p={} q={} M={} makers={:?} residual={:.1e}",
                fmt_vec(&r.state.p),
                fmt_vec(&r.state.q),
                fmt_vec(&r.state.m),
                r.market_makers.as_slice(),
                r.residual
            );
        }
        for class in &self.classes {
            if class.solutions.is_empty() {
                let _ = writeln!(out, "|M| = {}: no self-consistent solution", class.maker_count);
            }
            for s in &class.solutions {
                let _ = writeln!(
                    out,
                    "|M| = {}: p={} q={} M={}",
                    class.maker_count,
                    fmt_vec(&s.state.p),
                    fmt_vec(&s.state.q),
                    fmt_vec(&s.state.m)
                );
            }
        }
        out
    }

    /// Result rows for the greatest and least solutions, each next to the
    /// matching frozen-liquidity benchmark.
    pub fn rows_with(&self, cfg: &SolverConfig) -> Vec<ResultRow> {
        [
            ("counterexample_greatest", SolveMethod::Greatest),
            ("counterexample_least", SolveMethod::Least),
        ]
        .into_iter()
        .map(|(scenario, method)| {
            let pc = PairConfig {
                scenario,
                method,
                maker_rule: MakerRule::PositiveLiquidity,
                cfg,
            };
            pair_row(
                fixtures::counterexample(),
                fixtures::counterexample_idf(),
                &pc,
                0.0,
                None,
                None,
            )
        })
        .collect()
    }

    pub fn rows(&self) -> Vec<ResultRow> {
        self.rows_with(&SolverConfig::default())
    }
}
