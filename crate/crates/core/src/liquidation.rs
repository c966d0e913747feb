//! Liquidation strategies: how many units of each asset a bank sells to cover
//! what cash and interbank receipts leave unpaid.

use serde::{Deserialize, Serialize};

use crate::network::{FinancialSystem, RelativeLiabilities};
use crate::vecops::{dot, positive_part};
use crate::{Error, Result};

/// Tolerance for the minimal-liquidation identity on O(1) balance sheets.
pub const MINIMAL_LIQUIDATION_TOL: f64 = 1e-10;

/// Anything that maps (payments, prices) to an `n × m` matrix of unit sales.
pub trait LiquidationStrategy {
    fn liquidate(
        &self,
        system: &FinancialSystem,
        rel: &RelativeLiabilities,
        p: &[f64],
        q: &[f64],
    ) -> Result<Vec<Vec<f64>>>;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LiquidationRule {
    /// Sell a slice of the whole portfolio, keeping its composition.
    #[default]
    Proportional,
}

impl std::str::FromStr for LiquidationRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proportional" => Ok(LiquidationRule::Proportional),
            other => Err(Error::InvalidSpec(format!("unknown liquidation rule `{other}`"))),
        }
    }
}

impl LiquidationStrategy for LiquidationRule {
    fn liquidate(
        &self,
        system: &FinancialSystem,
        rel: &RelativeLiabilities,
        p: &[f64],
        q: &[f64],
    ) -> Result<Vec<Vec<f64>>> {
        match self {
            LiquidationRule::Proportional => liquidate_proportional(system, rel, p, q),
        }
    }
}

impl LiquidationRule {
    /// Units sold by bank `i` given its cash shortfall, written into `out`.
    pub(crate) fn bank_sales(&self, holdings: &[f64], q: &[f64], shortfall: f64, out: &mut [f64]) {
        match self {
            LiquidationRule::Proportional => proportional_sales(holdings, q, shortfall, out),
        }
    }
}

fn proportional_sales(holdings: &[f64], q: &[f64], shortfall: f64, out: &mut [f64]) {
    if shortfall <= 0.0 {
        out.iter_mut().for_each(|o| *o = 0.0);
        return;
    }
    let value = dot(holdings, q);
    if value <= 0.0 {
        // Nothing can be raised; dump everything (monotone limit as q ↓ 0).
        out.copy_from_slice(holdings);
        return;
    }
    let fraction = (shortfall / value).min(1.0);
    for (o, s) in out.iter_mut().zip(holdings) {
        *o = s * fraction;
    }
}

pub(crate) fn check_payments(rel: &RelativeLiabilities, p: &[f64]) -> Result<()> {
    if p.len() != rel.n {
        return Err(Error::StateOutOfLattice(format!(
            "payment vector has {} entries for {} banks",
            p.len(),
            rel.n
        )));
    }
    for (bank, (&v, &bound)) in p.iter().zip(&rel.pbar).enumerate() {
        if !(v >= 0.0 && v <= bound * (1.0 + 1e-12) + 1e-12) {
            return Err(Error::PaymentOutOfLattice { bank, value: v, bound });
        }
    }
    Ok(())
}

pub(crate) fn check_prices(q: &[f64]) -> Result<()> {
    match q.iter().enumerate().find(|(_, &v)| !(v >= 0.0)) {
        Some((asset, &value)) => Err(Error::PriceNegative { asset, value }),
        None => Ok(()),
    }
}

/// Shortfalls from receipts already computed as `Aᵀp`.
pub(crate) fn shortfall_from_inflow(liquid: &[f64], pbar: &[f64], inflow: &[f64]) -> Vec<f64> {
    pbar.iter()
        .zip(liquid)
        .zip(inflow)
        .map(|((pb, x), r)| positive_part(pb - x - r))
        .collect()
}

/// Cash each bank still needs after liquid assets and interbank receipts:
/// `(p̄_i − x_i − Σ_j a_ji p_j)⁺`.
pub fn shortfall(system: &FinancialSystem, rel: &RelativeLiabilities, p: &[f64]) -> Result<Vec<f64>> {
    check_payments(rel, p)?;
    Ok(shortfall_from_inflow(&system.liquid, &rel.pbar, &rel.inflow(p)))
}

/// `γ_ik = s_ik / (qᵀs_i) · min(qᵀs_i, shortfall_i)`. A bank with a shortfall
/// whose portfolio is worth nothing sells everything.
pub fn liquidate_proportional(
    system: &FinancialSystem,
    rel: &RelativeLiabilities,
    p: &[f64],
    q: &[f64],
) -> Result<Vec<Vec<f64>>> {
    check_prices(q)?;
    let short = shortfall(system, rel, p)?;
    Ok(system
        .holdings
        .iter()
        .zip(&short)
        .map(|(s, &sh)| {
            let mut row = vec![0.0; system.m];
            proportional_sales(s, q, sh, &mut row);
            row
        })
        .collect())
}

/// Whether `qᵀγ_i = (qᵀs_i) ∧ shortfall_i` holds for every bank.
pub fn check_minimal_liquidation<R: LiquidationStrategy + ?Sized>(
    rule: &R,
    system: &FinancialSystem,
    rel: &RelativeLiabilities,
    p: &[f64],
    q: &[f64],
) -> bool {
    let (Ok(gamma), Ok(short)) = (rule.liquidate(system, rel, p, q), shortfall(system, rel, p)) else {
        return false;
    };
    gamma.iter().enumerate().all(|(i, g)| {
        let raised = dot(q, g);
        let target = system.portfolio_value(i, q).min(short[i]);
        (raised - target).abs() <= MINIMAL_LIQUIDATION_TOL
    })
}
