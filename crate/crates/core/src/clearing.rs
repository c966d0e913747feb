//! The joint clearing map Φ on (payments, prices, liquidity) and solvers for
//! its extreme fixed points.
//!
//! ```text
//! Φ_p = p̄ ∧ (x + S q + Aᵀp)
//! Φ_q = F(Σ_i γ_i(p, q), M)
//! Φ_M = (x + Aᵀp − p̄)⁺
//! ```
//!
//! All three components are evaluated from the same input state. With a
//! monotone inverse demand function Φ is monotone on the lattice
//! `[0, p̄] × [0, F(0, M̄)] × [0, M̄]`, so Picard iteration from the top
//! decreases to the greatest fixed point and from the bottom increases to the
//! least. Because `F` jumps when the market-maker set changes, stalling is not
//! taken as convergence on its own: the residual `‖Φ(s) − s‖∞` is rechecked.

use serde::{Deserialize, Serialize};

use crate::inverse_demand::{market_makers, InverseDemandModel, MakerClasses, MarketMakerSet, MAKER_EPS};
use crate::liquidation::{check_payments, check_prices, LiquidationRule};
use crate::network::{FinancialSystem, RelativeLiabilities};
use crate::vecops::{dot, max_excess, positive_part, sup_dist};
use crate::{Error, Result};

/// A point `(p, q, M)` of the clearing lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClearingState {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub m: Vec<f64>,
}

impl ClearingState {
    pub fn zeros(n: usize, m: usize) -> Self {
        ClearingState {
            p: vec![0.0; n],
            q: vec![0.0; m],
            m: vec![0.0; n],
        }
    }

    /// Sup-norm distance over all three components.
    pub fn distance(&self, other: &ClearingState) -> f64 {
        sup_dist(&self.p, &other.p)
            .max(sup_dist(&self.q, &other.q))
            .max(sup_dist(&self.m, &other.m))
    }

    /// Largest amount by which `self` exceeds `other` in any coordinate.
    pub fn excess_over(&self, other: &ClearingState) -> f64 {
        max_excess(&self.p, &other.p)
            .max(max_excess(&self.q, &other.q))
            .max(max_excess(&self.m, &other.m))
    }

    /// Componentwise `self >= other - slack`.
    pub fn dominates(&self, other: &ClearingState, slack: f64) -> bool {
        other.excess_over(self) <= slack
    }

    fn total(&self) -> f64 {
        self.p.iter().chain(&self.q).chain(&self.m).sum()
    }
}

/// Which banks count as market makers when prices are formed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MakerRule {
    /// `M_i > MAKER_EPS`: strictly positive excess liquidity.
    #[default]
    PositiveLiquidity,
    /// `x_i + (Aᵀp)_i − p̄_i >= −MAKER_EPS`: every bank that does not need to
    /// sell, including those left with exactly zero spare cash.
    NonNegativeNet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// A bank defaults when `p̄_i − p_i` exceeds this.
    pub default_eps: f64,
    /// Largest `n` for which all `2^n` market-maker sets are enumerated.
    pub enumeration_cap: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-10,
            max_iterations: 10_000,
            default_eps: 1e-8,
            enumeration_cap: 20,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || self.max_iterations == 0 || !(self.default_eps >= 0.0) {
            return Err(Error::InvalidSpec(format!(
                "solver needs tolerance > 0 and max_iterations >= 1, got {} / {}",
                self.tolerance, self.max_iterations
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    FromTop,
    FromBottom,
    Enumeration,
    Fda,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub state: ClearingState,
    pub iterations: usize,
    /// `‖Φ(state) − state‖∞`.
    pub residual: f64,
    pub converged: bool,
    pub defaults: Vec<usize>,
    pub market_makers: MarketMakerSet,
    pub direction: Direction,
    /// Worst step against the expected direction of a monotone sweep
    /// (upward moves from the top, downward moves from the bottom).
    pub monotone_violation: f64,
    /// The least solution came from the enumeration oracle.
    #[serde(default)]
    pub fallback_used: bool,
}

/// Endogenous solve next to the frozen-liquidity benchmark on the same system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedVsEndogenous {
    pub endogenous: SolveReport,
    pub benchmark: SolveReport,
    /// `q_benchmark − q_endogenous` per asset.
    pub price_gap: Vec<f64>,
    /// Endogenous minus benchmark default count.
    pub default_gap: i64,
}

/// Self-consistent solutions found for one assumed market-maker class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassOutcome {
    /// Assumed number of market makers.
    pub maker_count: usize,
    /// Assumed set, when the model distinguishes sets rather than counts.
    pub maker_set: Option<MarketMakerSet>,
    pub solutions: Vec<SolveReport>,
}

/// A clearing problem: balance sheets, price model, liquidation and
/// market-maker conventions.
///
/// Solvers assume the inverse demand function is monotone (non-increasing in
/// liquidations, non-decreasing in liquidity); that is not checked here, see
/// [`InverseDemandModel::validate`].
#[derive(Debug, Clone)]
pub struct Clearing {
    system: FinancialSystem,
    rel: RelativeLiabilities,
    idf: InverseDemandModel,
    rule: LiquidationRule,
    maker_rule: MakerRule,
    top: ClearingState,
}

impl Clearing {
    pub fn new(system: FinancialSystem, idf: InverseDemandModel) -> Result<Self> {
        system.validate().map_err(Error::InvalidSystem)?;
        idf.check_dims(system.n, system.m)?;
        let rel = system.relative_liabilities();
        let mut c = Clearing {
            top: ClearingState::zeros(system.n, system.m),
            system,
            rel,
            idf,
            rule: LiquidationRule::Proportional,
            maker_rule: MakerRule::PositiveLiquidity,
        };
        c.top = c.compute_top();
        Ok(c)
    }

    pub fn with_rule(mut self, rule: LiquidationRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn with_maker_rule(mut self, maker_rule: MakerRule) -> Self {
        self.maker_rule = maker_rule;
        self.top = self.compute_top();
        self
    }

    pub fn system(&self) -> &FinancialSystem {
        &self.system
    }

    pub fn rel(&self) -> &RelativeLiabilities {
        &self.rel
    }

    pub fn idf(&self) -> &InverseDemandModel {
        &self.idf
    }

    pub fn rule(&self) -> LiquidationRule {
        self.rule
    }

    pub fn maker_rule(&self) -> MakerRule {
        self.maker_rule
    }

    /// `(p̄, F(0, M̄), M̄)`.
    pub fn top(&self) -> &ClearingState {
        &self.top
    }

    pub fn bottom(&self) -> ClearingState {
        ClearingState::zeros(self.system.n, self.system.m)
    }

    /// Same problem priced as if every bank kept providing liquidity
    /// (`F` frozen at `M = 1`).
    pub fn fixed_benchmark(&self) -> Clearing {
        let idf = InverseDemandModel::fixed(self.idf.clone(), vec![1.0; self.system.n]);
        let mut c = self.clone();
        c.idf = idf;
        c.top = c.compute_top();
        c
    }

    fn compute_top(&self) -> ClearingState {
        let pbar = self.rel.pbar.clone();
        let m_top: Vec<f64> = self
            .rel
            .net_liquidity(&self.system.liquid, &pbar)
            .into_iter()
            .map(positive_part)
            .collect();
        let makers = self.makers_at(&pbar, &m_top);
        let q_top = self.idf.price_given(&vec![0.0; self.system.m], &m_top, &makers);
        ClearingState {
            p: pbar,
            q: q_top,
            m: m_top,
        }
    }

    fn makers_at(&self, p: &[f64], m: &[f64]) -> MarketMakerSet {
        match self.maker_rule {
            MakerRule::PositiveLiquidity => market_makers(m),
            MakerRule::NonNegativeNet => {
                let net = self.rel.net_liquidity(&self.system.liquid, p);
                MarketMakerSet::from_indices(
                    net.iter()
                        .enumerate()
                        .filter(|(_, &v)| v >= -MAKER_EPS)
                        .map(|(i, _)| i)
                        .collect(),
                )
            }
        }
    }

    /// Market makers of a state under this problem's convention.
    pub fn makers_of(&self, state: &ClearingState) -> MarketMakerSet {
        self.makers_at(&state.p, &state.m)
    }

    /// Banks with `p̄_i − p_i > eps`.
    pub fn defaults_of(&self, state: &ClearingState, eps: f64) -> Vec<usize> {
        state
            .p
            .iter()
            .zip(&self.rel.pbar)
            .enumerate()
            .filter(|(_, (p, pb))| *pb - *p > eps)
            .map(|(i, _)| i)
            .collect()
    }

    /// Σ_k (total units of k) · q_k.
    pub fn market_cap(&self, q: &[f64]) -> f64 {
        dot(&self.system.total_units(), q)
    }

    pub(crate) fn check_state(&self, s: &ClearingState) -> Result<()> {
        let (n, m) = (self.system.n, self.system.m);
        if s.p.len() != n || s.q.len() != m || s.m.len() != n {
            return Err(Error::StateOutOfLattice(format!(
                "state dimensions ({}, {}, {}) do not match n={n}, m={m}",
                s.p.len(),
                s.q.len(),
                s.m.len()
            )));
        }
        check_payments(&self.rel, &s.p).map_err(|e| Error::StateOutOfLattice(e.to_string()))?;
        check_prices(&s.q).map_err(|e| Error::StateOutOfLattice(e.to_string()))?;
        let slack = |b: f64| b * (1.0 + 1e-9) + 1e-9;
        for (k, (&v, &b)) in s.q.iter().zip(&self.top.q).enumerate() {
            if v > slack(b) {
                return Err(Error::StateOutOfLattice(format!("q[{k}] = {v} above F(0, M̄) = {b}")));
            }
        }
        for (i, (&v, &b)) in s.m.iter().zip(&self.top.m).enumerate() {
            if !(v >= 0.0) || v > slack(b) {
                return Err(Error::StateOutOfLattice(format!("M[{i}] = {v} outside [0, {b}]")));
            }
        }
        Ok(())
    }

    /// One simultaneous application of Φ. `frozen` overrides the market-maker
    /// set seen by the price model; frozen maps are not capped at `F(0, M̄)`.
    pub(crate) fn phi_into(
        &self,
        s: &ClearingState,
        frozen: Option<&MarketMakerSet>,
        out: &mut ClearingState,
    ) {
        let sys = &self.system;
        let pbar = &self.rel.pbar;
        let inflow = self.rel.inflow(&s.p);

        let mut theta = vec![0.0; sys.m];
        let mut sales = vec![0.0; sys.m];
        for i in 0..sys.n {
            let assets = sys.liquid[i] + dot(&sys.holdings[i], &s.q) + inflow[i];
            out.p[i] = assets.min(pbar[i]).max(0.0);

            let short = positive_part(pbar[i] - sys.liquid[i] - inflow[i]);
            if short > 0.0 {
                self.rule.bank_sales(&sys.holdings[i], &s.q, short, &mut sales);
                for (t, g) in theta.iter_mut().zip(&sales) {
                    *t += g;
                }
            }

            let net = sys.liquid[i] + inflow[i] - pbar[i];
            out.m[i] = positive_part(net).min(self.top.m[i]);
        }

        match frozen {
            Some(makers) => self.idf.price_into(&theta, &s.m, makers, &mut out.q),
            None => {
                let makers = self.makers_at(&s.p, &s.m);
                self.idf.price_into(&theta, &s.m, &makers, &mut out.q);
                for (q, cap) in out.q.iter_mut().zip(&self.top.q) {
                    *q = q.min(*cap);
                }
            }
        }
    }

    /// `Φ(state)`; errors if `state` is outside the lattice.
    pub fn apply_phi(&self, state: &ClearingState) -> Result<ClearingState> {
        self.check_state(state)?;
        let mut out = state.clone();
        self.phi_into(state, None, &mut out);
        Ok(out)
    }

    /// `‖Φ(state) − state‖∞`.
    pub fn residual(&self, state: &ClearingState) -> f64 {
        self.residual_with(state, None)
    }

    fn residual_with(&self, state: &ClearingState, frozen: Option<&MarketMakerSet>) -> f64 {
        let mut out = state.clone();
        self.phi_into(state, frozen, &mut out);
        out.distance(state)
    }

    pub(crate) fn report(
        &self,
        state: ClearingState,
        iterations: usize,
        converged: bool,
        direction: Direction,
        monotone_violation: f64,
        cfg: &SolverConfig,
    ) -> SolveReport {
        SolveReport {
            residual: self.residual(&state),
            defaults: self.defaults_of(&state, cfg.default_eps),
            market_makers: self.makers_of(&state),
            state,
            iterations,
            converged,
            direction,
            monotone_violation,
            fallback_used: false,
        }
    }

    /// Picard iteration. Stops once a step is within tolerance and the new
    /// point's residual is within ten times tolerance.
    fn iterate(
        &self,
        start: ClearingState,
        direction: Direction,
        frozen: Option<&MarketMakerSet>,
        cfg: &SolverConfig,
    ) -> SolveReport {
        let tol = cfg.tolerance;
        let mut cur = start;
        let mut next = cur.clone();
        let mut violation: f64 = 0.0;
        let mut converged = false;
        let mut iterations = cfg.max_iterations;

        for it in 1..=cfg.max_iterations {
            self.phi_into(&cur, frozen, &mut next);
            violation = violation.max(match direction {
                Direction::FromBottom => cur.excess_over(&next),
                _ => next.excess_over(&cur),
            });
            let step = next.distance(&cur);
            std::mem::swap(&mut cur, &mut next);
            if step <= tol && self.residual_with(&cur, frozen) <= 10.0 * tol {
                converged = true;
                iterations = it;
                break;
            }
        }
        self.report(cur, iterations, converged, direction, violation, cfg)
    }

    /// Greatest clearing solution by monotone iteration from the lattice top.
    /// A run that hits `max_iterations` comes back with `converged = false`
    /// and the last iterate.
    pub fn solve_greatest(&self, cfg: &SolverConfig) -> Result<SolveReport> {
        cfg.validate()?;
        Ok(self.iterate(self.top.clone(), Direction::FromTop, None, cfg))
    }

    /// Least clearing solution by monotone iteration from zero. If that does
    /// not reach a verified fixed point, the least self-consistent solution
    /// from [`enumerate_solutions`](Self::enumerate_solutions) is returned
    /// when the model admits enumeration.
    pub fn solve_least(&self, cfg: &SolverConfig) -> Result<SolveReport> {
        cfg.validate()?;
        let report = self.iterate(self.bottom(), Direction::FromBottom, None, cfg);
        if report.converged {
            return Ok(report);
        }
        match self.enumerate_solutions(cfg) {
            Ok(mut all) if !all.is_empty() => {
                let mut least = all.pop().expect("non-empty");
                least.fallback_used = true;
                Ok(least)
            }
            Ok(_) => Ok(report),
            Err(Error::EnumerationCapExceeded { .. }) | Err(Error::EnumerationUnsupported(_)) => {
                log::warn!("least solution did not converge and cannot be enumerated");
                Ok(report)
            }
            Err(e) => Err(e),
        }
    }

    /// Every self-consistent solution, grouped by the assumed market-maker
    /// class. For each class the price model is frozen, the resulting system
    /// is solved from both ends of the lattice, and a solution is kept when
    /// its realized market makers match the assumption and it is a fixed
    /// point of the full map.
    pub fn enumerate_classes(&self, cfg: &SolverConfig) -> Result<Vec<ClassOutcome>> {
        cfg.validate()?;
        let n = self.system.n;
        let classes: Vec<(usize, Option<MarketMakerSet>, Option<MarketMakerSet>)> =
            match self.idf.maker_classes(n)? {
                MakerClasses::Count(n) => (0..=n)
                    .map(|k| (k, None, Some(MarketMakerSet::first(k))))
                    .collect(),
                MakerClasses::Subsets(n) => {
                    if n > cfg.enumeration_cap {
                        return Err(Error::EnumerationCapExceeded {
                            n,
                            cap: cfg.enumeration_cap,
                        });
                    }
                    (0u64..1 << n)
                        .map(|mask| {
                            let set = MarketMakerSet::from_indices(
                                (0..n).filter(|i| mask >> i & 1 == 1).collect(),
                            );
                            (set.len(), Some(set.clone()), Some(set))
                        })
                        .collect()
                }
                MakerClasses::Independent => vec![(0, None, None)],
            };
        let independent = classes.len() == 1 && classes[0].2.is_none();

        let mut out = Vec::with_capacity(classes.len());
        for (count, exact, frozen) in classes {
            let mut top = self.top.clone();
            if let Some(f) = &frozen {
                top.q = self.idf.price_given(&vec![0.0; self.system.m], &top.m, f);
            }
            let mut solutions: Vec<SolveReport> = Vec::new();
            for (start, dir) in [(top, Direction::FromTop), (self.bottom(), Direction::FromBottom)] {
                let mut r = self.iterate(start, dir, frozen.as_ref(), cfg);
                if !r.converged {
                    continue;
                }
                let consistent = independent
                    || match &exact {
                        Some(set) => r.market_makers == *set,
                        None => r.market_makers.len() == count,
                    };
                if !consistent || r.residual > 10.0 * cfg.tolerance {
                    continue;
                }
                if solutions.iter().any(|s| s.state.distance(&r.state) <= 1e-8) {
                    continue;
                }
                r.direction = Direction::Enumeration;
                solutions.push(r);
            }
            out.push(ClassOutcome {
                maker_count: count,
                maker_set: exact,
                solutions,
            });
        }
        Ok(out)
    }

    /// All self-consistent solutions, largest first.
    pub fn enumerate_solutions(&self, cfg: &SolverConfig) -> Result<Vec<SolveReport>> {
        let mut all: Vec<SolveReport> = Vec::new();
        for class in self.enumerate_classes(cfg)? {
            for s in class.solutions {
                if !all.iter().any(|a| a.state.distance(&s.state) <= 1e-8) {
                    all.push(s);
                }
            }
        }
        all.sort_by(|a, b| b.state.total().total_cmp(&a.state.total()));
        Ok(all)
    }

    /// Greatest solutions with endogenous liquidity and with liquidity frozen
    /// at `M = 1`.
    pub fn compare_fixed_vs_endogenous(&self, cfg: &SolverConfig) -> Result<FixedVsEndogenous> {
        let endogenous = self.solve_greatest(cfg)?;
        let benchmark = self.fixed_benchmark().solve_greatest(cfg)?;
        let price_gap = benchmark
            .state
            .q
            .iter()
            .zip(&endogenous.state.q)
            .map(|(b, e)| b - e)
            .collect();
        let default_gap = endogenous.defaults.len() as i64 - benchmark.defaults.len() as i64;
        Ok(FixedVsEndogenous {
            endogenous,
            benchmark,
            price_gap,
            default_gap,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::fixtures;

    fn counterexample() -> Clearing {
        Clearing::new(fixtures::counterexample(), fixtures::counterexample_idf()).unwrap()
    }

    fn solvent() -> Clearing {
        let s = FinancialSystem::new(
            vec![vec![1.0, 0.0, 0.5], vec![1.0, 0.2, 0.0]],
            vec![3.0, 3.0],
            vec![vec![1.0], vec![2.0]],
        )
        .unwrap();
        let idf = InverseDemandModel::linear(vec![1.0], vec![vec![1.0]], 0.1, vec![0.1, 0.1]).unwrap();
        Clearing::new(s, idf).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn counterexample_states_are_near_fixed_points() {
        let c = counterexample();
        let hi = ClearingState {
            p: vec![2.0, 1.0],
            q: vec![0.854],
            m: vec![0.0, 0.001],
        };
        let out = c.apply_phi(&hi).unwrap();
        assert!(out.distance(&hi) < 1e-3);

        let lo = ClearingState {
            p: vec![1.98, 1.0],
            q: vec![0.843],
            m: vec![0.0, 0.0],
        };
        let out = c.apply_phi(&lo).unwrap();
        assert!(out.distance(&lo) < 1e-2);
    }

    #[test]
    fn solvent_top_is_fixed() {
        let c = solvent();
        let top = c.top().clone();
        assert_eq!(c.apply_phi(&top).unwrap(), top);
    }

    #[test]
    fn apply_phi_rejects_states_outside_lattice() {
        let c = counterexample();
        let mut s = c.top().clone();
        s.q[0] = 1.5;
        assert!(matches!(c.apply_phi(&s), Err(Error::StateOutOfLattice(_))));
        let mut s = c.top().clone();
        s.p[0] = 3.0;
        assert!(matches!(c.apply_phi(&s), Err(Error::StateOutOfLattice(_))));
        let mut s = c.top().clone();
        s.m.push(0.0);
        assert!(c.apply_phi(&s).is_err());
    }

    #[test]
    fn counterexample_greatest() {
        let r = counterexample().solve_greatest(&SolverConfig::default()).unwrap();
        assert!(r.converged);
        assert!(close(&r.state.p, &[2.0, 1.0], 1e-3));
        assert!((r.state.q[0] - 0.854).abs() < 1e-3);
        assert!(close(&r.state.m, &[0.0, 0.001], 1e-3));
        assert_eq!(r.market_makers.as_slice(), &[1]);
        // q solves q = 1 − 2/(16q): q = (1 + √½)/2.
        assert!((r.state.q[0] - (1.0 + 0.5f64.sqrt()) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn counterexample_least() {
        let r = counterexample().solve_least(&SolverConfig::default()).unwrap();
        assert!(r.converged);
        assert!(close(&r.state.p, &[1.98, 1.0], 1e-2));
        assert!((r.state.q[0] - 0.843).abs() < 1e-2);
        assert!(close(&r.state.m, &[0.0, 0.0], 1e-12));
        assert_eq!(r.defaults, vec![0]);
        assert!(r.market_makers.is_empty());
    }

    #[test]
    fn solvent_system_is_unique_and_fast() {
        let c = solvent();
        let cfg = SolverConfig::default();
        let hi = c.solve_greatest(&cfg).unwrap();
        let lo = c.solve_least(&cfg).unwrap();
        assert!(hi.iterations <= 2);
        assert_eq!(hi.state, *c.top());
        assert!(hi.state.distance(&lo.state) < 1e-9);
        assert_eq!(c.enumerate_solutions(&cfg).unwrap().len(), 1);
        let cmp = c.compare_fixed_vs_endogenous(&cfg).unwrap();
        assert_eq!(cmp.default_gap, 0);
        assert!(cmp.price_gap.iter().all(|g| g.abs() < 1e-12));
    }

    #[test]
    fn counterexample_enumeration() {
        let c = counterexample();
        let cfg = SolverConfig::default();
        let classes = c.enumerate_classes(&cfg).unwrap();
        assert_eq!(classes.len(), 3);
        assert_eq!(classes[0].solutions.len(), 1);
        assert_eq!(classes[1].solutions.len(), 1);
        assert!(classes[2].solutions.is_empty());

        let all = c.enumerate_solutions(&cfg).unwrap();
        assert_eq!(all.len(), 2);
        assert!(all[0].state.dominates(&all[1].state, 1e-12));
        let hi = c.solve_greatest(&cfg).unwrap();
        let lo = c.solve_least(&cfg).unwrap();
        assert!(all[0].state.distance(&hi.state) < 1e-8);
        assert!(all[1].state.distance(&lo.state) < 1e-8);
    }

    #[test]
    fn enumeration_of_unequal_aversions_uses_subsets() {
        let idf = InverseDemandModel::linear(vec![1.0], vec![vec![1.0]], 1.0 / 15.0, vec![1.0, 0.5]).unwrap();
        let c = Clearing::new(fixtures::counterexample(), idf).unwrap();
        let classes = c.enumerate_classes(&SolverConfig::default()).unwrap();
        assert_eq!(classes.len(), 4);
        let cfg = SolverConfig {
            enumeration_cap: 1,
            ..SolverConfig::default()
        };
        assert!(matches!(
            c.enumerate_classes(&cfg),
            Err(Error::EnumerationCapExceeded { n: 2, cap: 1 })
        ));
    }

    #[test]
    fn exponential_cannot_be_enumerated() {
        let c = Clearing::new(fixtures::counterexample(), InverseDemandModel::Exponential).unwrap();
        assert!(matches!(
            c.enumerate_solutions(&SolverConfig::default()),
            Err(Error::EnumerationUnsupported(_))
        ));
    }

    #[test]
    fn iteration_budget_is_reported() {
        let cfg = SolverConfig {
            max_iterations: 2,
            ..SolverConfig::default()
        };
        let r = counterexample().solve_greatest(&cfg).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 2);
        assert!(r.residual > cfg.tolerance);
    }

    #[test]
    fn bad_config_is_rejected() {
        let cfg = SolverConfig {
            tolerance: 0.0,
            ..SolverConfig::default()
        };
        assert!(counterexample().solve_greatest(&cfg).is_err());
    }

    #[test]
    fn diversified_prices_need_zero_net_makers() {
        let cfg = SolverConfig::default();
        for rho in [0.0, 0.1, 0.3, 0.5] {
            let strict = Clearing::new(fixtures::diversification(1.0), fixtures::diversification_idf(rho)).unwrap();
            let r = strict.solve_greatest(&cfg).unwrap();
            // Nobody has strictly positive spare cash and bank 0 sells out.
            assert!((r.state.q[0] - 0.899).abs() < 1e-3, "{:?}", r);
            assert!(r.market_makers.is_empty());
            assert_eq!(r.defaults, vec![0]);

            let r = strict
                .with_maker_rule(MakerRule::NonNegativeNet)
                .solve_greatest(&cfg)
                .unwrap();
            assert!(close(&r.state.q, &[0.95, 0.95], 5e-3), "rho {rho}: {:?}", r.state.q);
            assert_eq!(r.market_makers.as_slice(), &[1]);
        }
    }

    #[test]
    fn report_serializes() {
        let r = counterexample().solve_greatest(&SolverConfig::default()).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["direction"], "from_top");
        assert_eq!(json["market_makers"], serde_json::json!([1]));
        let back: SolveReport = serde_json::from_value(json).unwrap();
        assert_eq!(back, r);
    }
}
