//! Balance sheets from bank-level aggregates.
//!
//! The input lists, per bank, total assets, interbank assets, interbank
//! liabilities and external liabilities. Bilateral exposures are not
//! observed, so the interbank matrix is reconstructed with the proportional
//! allocation `L_ij = IBliab_i · IBasset_j / Σ_k IBasset_k`; the diagonal is
//! then zeroed and each row rescaled so bank i still owes `IBliab_i` in total.
//! External assets `total − interbank` are split into cash and a single
//! illiquid asset (unit initial price) by the liquid fraction. Liabilities do
//! not depend on the fraction.

use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use super::{pair_row, EbaSweepSpec, PairConfig, ScenarioResult, Summary};
use crate::clearing::SolverConfig;
use crate::inverse_demand::InverseDemandModel;
use crate::network::FinancialSystem;
use crate::{Error, Result};

/// Synthetic 87-bank dataset shipped with the crate.
pub const BUNDLED_EBA_CSV: &str = include_str!("../../data/eba_synthetic.csv");

const HEADER: [&str; 5] = [
    "bank_id",
    "total_assets",
    "interbank_assets",
    "interbank_liabilities",
    "external_liabilities",
];

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct EbaBank {
    pub bank_id: String,
    pub total_assets: f64,
    pub interbank_assets: f64,
    pub interbank_liabilities: f64,
    pub external_liabilities: f64,
}

pub fn parse_eba<R: Read>(reader: R) -> Result<Vec<EbaBank>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::MalformedCsv(e.to_string()))?;
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(Error::MalformedCsv(format!(
            "expected header {}, found {}",
            HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut banks: Vec<EbaBank> = Vec::new();
    for (k, rec) in rdr.deserialize().enumerate() {
        let line = k + 2;
        let bank: EbaBank = rec.map_err(|e| Error::MalformedCsv(format!("line {line}: {e}")))?;
        let values = [
            bank.total_assets,
            bank.interbank_assets,
            bank.interbank_liabilities,
            bank.external_liabilities,
        ];
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::MalformedCsv(format!(
                "line {line}: amounts must be finite and non-negative"
            )));
        }
        if bank.interbank_assets > bank.total_assets {
            return Err(Error::MalformedCsv(format!(
                "line {line}: bank {} has interbank assets above total assets",
                bank.bank_id
            )));
        }
        if banks.iter().any(|b| b.bank_id == bank.bank_id) {
            return Err(Error::MalformedCsv(format!("line {line}: duplicate bank id {}", bank.bank_id)));
        }
        banks.push(bank);
    }
    if banks.len() < 2 {
        return Err(Error::MalformedCsv(format!("need at least two banks, found {}", banks.len())));
    }
    Ok(banks)
}

pub fn build_eba_system(banks: &[EbaBank], liquid_fraction: f64) -> Result<FinancialSystem> {
    if !(0.0..=1.0).contains(&liquid_fraction) {
        return Err(Error::InvalidSpec(format!(
            "liquid fraction {liquid_fraction} outside [0, 1]"
        )));
    }
    let n = banks.len();
    let total_liab: f64 = banks.iter().map(|b| b.interbank_liabilities).sum();
    let total_asset: f64 = banks.iter().map(|b| b.interbank_assets).sum();
    if (total_liab > 0.0) != (total_asset > 0.0) {
        return Err(Error::InconsistentTotals(format!(
            "interbank assets sum to {total_asset} but liabilities to {total_liab}"
        )));
    }
    let mut ib_assets: Vec<f64> = banks.iter().map(|b| b.interbank_assets).collect();
    if total_asset > 0.0 {
        let scale = total_liab / total_asset;
        if (scale - 1.0).abs() > 0.01 {
            log::warn!(
                "interbank assets ({total_asset}) and liabilities ({total_liab}) differ by more than 1%; rescaling assets by {scale:.4}"
            );
            for a in &mut ib_assets {
                *a *= scale;
            }
        }
    }
    let share_total: f64 = ib_assets.iter().sum();

    let mut liabilities = vec![vec![0.0; n + 1]; n];
    for (i, bank) in banks.iter().enumerate() {
        let row = &mut liabilities[i];
        row[0] = bank.external_liabilities;
        let owed = bank.interbank_liabilities;
        if owed == 0.0 {
            continue;
        }
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| ib_assets[j]).sum();
        if off <= 0.0 {
            return Err(Error::InconsistentTotals(format!(
                "bank {} owes {owed} interbank but no other bank holds interbank assets",
                bank.bank_id
            )));
        }
        for j in (0..n).filter(|&j| j != i) {
            let raw = owed * ib_assets[j] / share_total;
            row[j + 1] = raw * (share_total / off);
        }
    }

    let mut liquid = Vec::with_capacity(n);
    let mut holdings = Vec::with_capacity(n);
    for (bank, ib) in banks.iter().zip(&ib_assets) {
        let external = (bank.total_assets - ib).max(0.0);
        liquid.push(liquid_fraction * external);
        holdings.push(vec![(1.0 - liquid_fraction) * external]);
    }
    FinancialSystem::new(liabilities, liquid, holdings)
}

/// Reads a bank-level CSV and builds the system at the given liquid fraction.
pub fn ingest_eba(path: impl AsRef<Path>, liquid_fraction: f64) -> Result<FinancialSystem> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    build_eba_system(&parse_eba(file)?, liquid_fraction)
}

/// Single-asset linear model with `μ = 1`, `C = 1`.
pub fn eba_idf(n: usize, alpha0: f64, alpha: f64) -> Result<InverseDemandModel> {
    InverseDemandModel::linear(vec![1.0], vec![vec![1.0]], alpha0, vec![alpha; n])
}

/// Solves the ingested system at every liquid fraction.
pub fn run_eba_sweep(spec: &EbaSweepSpec, cfg: &SolverConfig) -> Result<ScenarioResult> {
    let banks = match &spec.data {
        Some(path) => {
            let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
            parse_eba(file)?
        }
        None => parse_eba(BUNDLED_EBA_CSV.as_bytes())?,
    };
    let idf = eba_idf(banks.len(), spec.alpha0, spec.alpha)?;
    let systems = spec
        .fractions
        .iter()
        .map(|&f| build_eba_system(&banks, f).map(|s| (f, s)))
        .collect::<Result<Vec<_>>>()?;
    let pc = PairConfig {
        scenario: "eba_sweep",
        method: spec.method,
        maker_rule: spec.maker_rule,
        cfg,
    };
    let rows = super::par_rows(&systems, |(f, s)| pair_row(s.clone(), idf.clone(), &pc, *f, None, None));
    Ok(ScenarioResult {
        rows,
        summary: Summary::None,
    })
}
