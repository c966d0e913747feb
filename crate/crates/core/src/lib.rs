//! Joint clearing of interbank payments, illiquid-asset prices and endogenous
//! market liquidity.
//!
//! A [`FinancialSystem`] describes balance sheets (liabilities, liquid cash,
//! illiquid holdings). Banks that cannot meet their obligations from cash and
//! interbank receipts fire-sell assets according to a [`LiquidationRule`];
//! prices respond through an [`InverseDemandModel`] whose price impact depends
//! on which banks still have spare liquidity (the market makers). A clearing
//! solution is a fixed point of the joint map on (payments, prices,
//! liquidity), and [`Clearing`] computes the greatest and least such points.
//!
//! The [`scenarios`] module hosts the stress-test experiments built on top.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clearing;
mod error;
pub mod fda;
pub mod inverse_demand;
pub mod liquidation;
pub mod network;
pub mod scenarios;
mod vecops;

pub use clearing::{
    ClassOutcome, Clearing, ClearingState, Direction, FixedVsEndogenous, MakerRule, SolveReport,
    SolverConfig,
};
pub use error::{Error, Result};
pub use fda::{solve_fda, FdaRound, FdaTrace};
pub use inverse_demand::{market_makers, InverseDemandModel, MarketMakerSet, MAKER_EPS};
pub use liquidation::LiquidationRule;
pub use network::{
    FinancialSystem, InterbankDist, LatticeBounds, RandomSystemParams, RelativeLiabilities,
    SystemViolation,
};
