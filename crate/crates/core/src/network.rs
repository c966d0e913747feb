//! Balance-sheet data for a banking system and the quantities derived from it.
//!
//! Liabilities are stored as an `n × (n+1)` matrix whose column 0 holds the
//! obligations to the external economy. The external node absorbs payments
//! pro rata but never pays anything back, so it is not part of the clearing
//! vector.

use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::inverse_demand::InverseDemandModel;
use crate::vecops::positive_part;
use crate::{Error, Result};

/// Static balance sheets: who owes what to whom, cash, and asset holdings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinancialSystem {
    pub n: usize,
    pub m: usize,
    /// Row `i` is `[L_i0, L_i1, ..., L_in]`; `L_i0` is owed outside the network.
    pub liabilities: Vec<Vec<f64>>,
    pub liquid: Vec<f64>,
    /// Physical units of each illiquid asset, one row per bank.
    pub holdings: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SystemViolation {
    NegativeEntry { field: &'static str, index: Vec<usize>, value: f64 },
    NonzeroDiagonal { bank: usize, value: f64 },
    DimensionMismatch { field: &'static str, expected: usize, found: usize },
    NonFiniteEntry { field: &'static str, index: Vec<usize> },
}

impl fmt::Display for SystemViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemViolation::NegativeEntry { field, index, value } => {
                write!(f, "{field}{index:?} = {value} is negative")
            }
            SystemViolation::NonzeroDiagonal { bank, value } => {
                write!(f, "bank {bank} owes {value} to itself")
            }
            SystemViolation::DimensionMismatch {
                field,
                expected,
                found,
            } => write!(f, "{field} has length {found}, expected {expected}"),
            SystemViolation::NonFiniteEntry { field, index } => {
                write!(f, "{field}{index:?} is not finite")
            }
        }
    }
}

impl FinancialSystem {
    pub fn new(liabilities: Vec<Vec<f64>>, liquid: Vec<f64>, holdings: Vec<Vec<f64>>) -> Result<Self> {
        let n = liquid.len();
        let m = holdings.first().map_or(0, Vec::len);
        let system = FinancialSystem {
            n,
            m,
            liabilities,
            liquid,
            holdings,
        };
        system.validate().map_err(Error::InvalidSystem)?;
        Ok(system)
    }

    /// Collects every invariant violation rather than stopping at the first.
    pub fn validate(&self) -> std::result::Result<(), Vec<SystemViolation>> {
        let mut out = Vec::new();
        let (n, m) = (self.n, self.m);

        let mut dim = |field, expected, found| {
            if expected != found {
                out.push(SystemViolation::DimensionMismatch {
                    field,
                    expected,
                    found,
                });
            }
        };
        dim("liabilities", n, self.liabilities.len());
        dim("liquid", n, self.liquid.len());
        dim("holdings", n, self.holdings.len());
        for row in &self.liabilities {
            dim("liabilities row", n + 1, row.len());
        }
        for row in &self.holdings {
            dim("holdings row", m, row.len());
        }

        let mut entry = |field: &'static str, index: Vec<usize>, v: f64| {
            if !v.is_finite() {
                out.push(SystemViolation::NonFiniteEntry { field, index });
            } else if v < 0.0 {
                out.push(SystemViolation::NegativeEntry {
                    field,
                    index,
                    value: v,
                });
            }
        };
        for (i, row) in self.liabilities.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                entry("liabilities", vec![i, j], v);
            }
        }
        for (i, &v) in self.liquid.iter().enumerate() {
            entry("liquid", vec![i], v);
        }
        for (i, row) in self.holdings.iter().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                entry("holdings", vec![i, k], v);
            }
        }

        for (i, row) in self.liabilities.iter().enumerate() {
            if let Some(&v) = row.get(i + 1) {
                if v != 0.0 {
                    out.push(SystemViolation::NonzeroDiagonal { bank: i, value: v });
                }
            }
        }

        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let system: FinancialSystem = serde_json::from_str(s)?;
        system.validate().map_err(Error::InvalidSystem)?;
        Ok(system)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    /// Total obligations `p̄ = L·1`.
    pub fn total_obligations(&self) -> Vec<f64> {
        self.liabilities.iter().map(|r| r.iter().sum()).collect()
    }

    /// Units of each asset held across all banks.
    pub fn total_units(&self) -> Vec<f64> {
        let mut tot = vec![0.0; self.m];
        for row in &self.holdings {
            for (t, s) in tot.iter_mut().zip(row) {
                *t += s;
            }
        }
        tot
    }

    pub fn relative_liabilities(&self) -> RelativeLiabilities {
        RelativeLiabilities::from_system(self)
    }

    pub fn lattice_bounds(&self, idf: &InverseDemandModel) -> Result<LatticeBounds> {
        lattice_bounds(self, idf)
    }

    /// Mark-to-market value of bank `i`'s illiquid portfolio.
    pub fn portfolio_value(&self, i: usize, q: &[f64]) -> f64 {
        crate::vecops::dot(&self.holdings[i], q)
    }
}

/// Pro-rata repayment weights.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeLiabilities {
    pub n: usize,
    /// Row-major `n × n`; entry `(i, j)` is the share of bank i's payment owed to bank j.
    pub a: Vec<f64>,
    /// Share of each bank's payment owed to the external node.
    pub a0: Vec<f64>,
    pub pbar: Vec<f64>,
}

impl RelativeLiabilities {
    pub fn from_system(system: &FinancialSystem) -> Self {
        let n = system.n;
        let pbar = system.total_obligations();
        let mut a = vec![0.0; n * n];
        let mut a0 = vec![0.0; n];
        for i in 0..n {
            if pbar[i] > 0.0 {
                let row = &system.liabilities[i];
                a0[i] = row[0] / pbar[i];
                for j in 0..n {
                    a[i * n + j] = row[j + 1] / pbar[i];
                }
            }
        }
        RelativeLiabilities { n, a, a0, pbar }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    /// Interbank receipts `Aᵀp`: entry `j` is what bank j receives under payments `p`.
    pub fn inflow(&self, p: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        for (i, &pi) in p.iter().enumerate() {
            if pi == 0.0 {
                continue;
            }
            let row = &self.a[i * n..(i + 1) * n];
            for (o, &aij) in out.iter_mut().zip(row) {
                *o += aij * pi;
            }
        }
        out
    }

    /// Net liquidity `x + Aᵀp − p̄` before taking the positive part.
    pub fn net_liquidity(&self, liquid: &[f64], p: &[f64]) -> Vec<f64> {
        self.inflow(p)
            .iter()
            .zip(liquid)
            .zip(&self.pbar)
            .map(|((r, x), pb)| x + r - pb)
            .collect()
    }
}

/// Corners of the lattice that contains every clearing solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeBounds {
    pub p_top: Vec<f64>,
    pub q_top: Vec<f64>,
    pub m_top: Vec<f64>,
    pub p_bot: Vec<f64>,
    pub q_bot: Vec<f64>,
    pub m_bot: Vec<f64>,
}

/// Top is `(p̄, F(0, M̄), M̄)` with `M̄ = (x + Aᵀp̄ − p̄)⁺`; bottom is zero.
pub fn lattice_bounds(system: &FinancialSystem, idf: &InverseDemandModel) -> Result<LatticeBounds> {
    idf.check_dims(system.n, system.m)?;
    let rel = system.relative_liabilities();
    let m_top: Vec<f64> = rel
        .net_liquidity(&system.liquid, &rel.pbar)
        .into_iter()
        .map(positive_part)
        .collect();
    let q_top = idf.price(&vec![0.0; system.m], &m_top)?;
    Ok(LatticeBounds {
        p_top: rel.pbar.clone(),
        q_top,
        m_top,
        p_bot: vec![0.0; system.n],
        q_bot: vec![0.0; system.m],
        m_bot: vec![0.0; system.n],
    })
}

/// Distribution of off-diagonal interbank liabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InterbankDist {
    Uniform { low: f64, high: f64 },
}

impl InterbankDist {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InterbankDist::Uniform { low, high } => {
                if !(low.is_finite() && high.is_finite()) || low < 0.0 || high < low {
                    return Err(Error::InvalidDistribution(format!(
                        "uniform bounds must satisfy 0 <= low <= high, got [{low}, {high}]"
                    )));
                }
            }
        }
        Ok(())
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            InterbankDist::Uniform { low, high } if low == high => low,
            InterbankDist::Uniform { low, high } => rng.gen_range(low..high),
        }
    }
}

/// Inputs to [`generate_random_system`]. Each bank holds `illiquid_units[i]`
/// units of every asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomSystemParams {
    pub n: usize,
    pub m: usize,
    pub liquid: Vec<f64>,
    pub illiquid_units: Vec<f64>,
    pub external_liab: Vec<f64>,
    pub interbank: InterbankDist,
}

impl RandomSystemParams {
    /// The 50-bank, single-asset network used for the market-maker distress study.
    pub fn distress_study(liquid: f64) -> Self {
        let n = 50;
        RandomSystemParams {
            n,
            m: 1,
            liquid: vec![liquid; n],
            illiquid_units: vec![4.0; n],
            external_liab: vec![3.0; n],
            interbank: InterbankDist::Uniform {
                low: 0.0,
                high: 1.0,
            },
        }
    }
}

/// Draws `L_ij` i.i.d. for `i != j` in row-major order from a ChaCha8 stream
/// seeded with `seed`. Identical inputs give bit-identical systems.
pub fn generate_random_system(params: &RandomSystemParams, seed: u64) -> Result<FinancialSystem> {
    let RandomSystemParams { n, m, .. } = *params;
    if n == 0 || m == 0 {
        return Err(Error::InvalidDistribution(format!(
            "need at least one bank and one asset, got n={n}, m={m}"
        )));
    }
    params.interbank.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut liabilities = vec![vec![0.0; n + 1]; n];
    for (i, row) in liabilities.iter_mut().enumerate() {
        row[0] = params.external_liab[i];
        for j in 0..n {
            if j != i {
                row[j + 1] = params.interbank.sample(&mut rng);
            }
        }
    }
    let holdings = params
        .illiquid_units
        .iter()
        .map(|&u| vec![u; m])
        .collect();
    FinancialSystem::new(liabilities, params.liquid.clone(), holdings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::fixtures;

    #[test]
    fn counterexample_is_valid() {
        assert!(fixtures::counterexample().validate().is_ok());
    }

    #[test]
    fn all_violations_are_reported() {
        let mut s = fixtures::counterexample();
        s.liabilities[0][1] = 0.5;
        s.liquid[0] = -1.0;
        s.holdings[1] = vec![];
        let errs = s.validate().unwrap_err();
        assert!(errs
            .iter()
            .any(|e| matches!(e, SystemViolation::NonzeroDiagonal { bank: 0, .. })));
        assert!(errs
            .iter()
            .any(|e| matches!(e, SystemViolation::NegativeEntry { field: "liquid", .. })));
        assert!(errs
            .iter()
            .any(|e| matches!(e, SystemViolation::DimensionMismatch { .. })));
    }

    #[test]
    fn non_finite_is_flagged() {
        let mut s = fixtures::counterexample();
        s.holdings[0][0] = f64::INFINITY;
        let errs = s.validate().unwrap_err();
        assert!(matches!(errs[0], SystemViolation::NonFiniteEntry { .. }));
    }

    #[test]
    fn loader_rejects_negative_values() {
        let json = r#"{"n":1,"m":1,"liabilities":[[1.0,0.0]],"liquid":[-0.5],"holdings":[[1.0]]}"#;
        assert!(matches!(
            FinancialSystem::from_json_str(json),
            Err(Error::InvalidSystem(_))
        ));
        let json = r#"{"n":1,"m":1,"liabilities":[[1.0,0.0]],"liquid":[0.5],"holdings":[[1.0]]}"#;
        let s = FinancialSystem::from_json_str(json).unwrap();
        assert_eq!(s.total_obligations(), vec![1.0]);
    }

    #[test]
    fn counterexample_relative_liabilities() {
        let rel = fixtures::counterexample().relative_liabilities();
        assert_eq!(rel.pbar, vec![2.0, 1.0]);
        assert_eq!(rel.get(0, 1), 0.5);
        assert_eq!(rel.get(1, 0), 0.0);
        assert_eq!(rel.a0, vec![0.5, 1.0]);
    }

    #[test]
    fn diversification_relative_liabilities() {
        let rel = fixtures::diversification(1.0).relative_liabilities();
        assert!((rel.pbar[0] - 2.85).abs() < 1e-15);
        assert_eq!(rel.pbar[1], 2.0);
        assert!((rel.get(0, 1) - 1.0 / 2.85).abs() < 1e-15);
        assert_eq!(rel.get(1, 0), 0.5);
    }

    #[test]
    fn empty_network_has_zero_weights() {
        let s = FinancialSystem::new(vec![vec![0.0; 3]; 2], vec![1.0, 1.0], vec![vec![1.0], vec![1.0]])
            .unwrap();
        let rel = s.relative_liabilities();
        assert_eq!(rel.pbar, vec![0.0, 0.0]);
        assert!(rel.a.iter().all(|&v| v == 0.0));
        assert!(rel.a0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn counterexample_lattice_top() {
        let s = fixtures::counterexample();
        let b = s.lattice_bounds(&fixtures::counterexample_idf()).unwrap();
        assert_eq!(b.m_top[0], 0.0);
        assert!((b.m_top[1] - 0.001).abs() < 1e-15);
        assert_eq!(b.q_top, vec![1.0]);
    }

    #[test]
    fn exactly_solvent_top_has_no_liquidity() {
        let s = FinancialSystem::new(
            vec![vec![2.0, 0.0, 0.0], vec![3.0, 0.0, 0.0]],
            vec![2.0, 3.0],
            vec![vec![1.0], vec![1.0]],
        )
        .unwrap();
        let b = s.lattice_bounds(&InverseDemandModel::Exponential).unwrap();
        assert_eq!(b.m_top, vec![0.0, 0.0]);
    }

    #[test]
    fn diversification_lattice_top_is_zero() {
        // M̄_1 = (0 + 0.5·2 − 2.85)⁺ = 0, M̄_2 = (1 + 2.85/2.85 − 2)⁺ = 0.
        let s = fixtures::diversification(1.0);
        let b = s.lattice_bounds(&fixtures::diversification_idf(0.0)).unwrap();
        assert_eq!(b.m_top[0], 0.0);
        assert!(b.m_top[1].abs() < 1e-15);
    }

    #[test]
    fn random_system_matches_distress_layout() {
        let mut p = RandomSystemParams::distress_study(2.0);
        p.liquid = (0..50).map(|i| 2.0 + 3.0 * i as f64 / 49.0).collect();
        let s = generate_random_system(&p, 1).unwrap();
        assert!(s.validate().is_ok());
        for (i, pb) in s.total_obligations().iter().enumerate() {
            assert!(*pb >= 3.0 && *pb <= 3.0 + 49.0);
            assert_eq!(s.liabilities[i][i + 1], 0.0);
            assert_eq!(s.liabilities[i][0], 3.0);
        }
    }

    #[test]
    fn degenerate_distribution_gives_no_interbank() {
        let mut p = RandomSystemParams::distress_study(3.0);
        p.interbank = InterbankDist::Uniform { low: 0.0, high: 0.0 };
        let s = generate_random_system(&p, 9).unwrap();
        assert!(s.liabilities.iter().all(|r| r[1..].iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn generation_is_deterministic() {
        let p = RandomSystemParams::distress_study(3.0);
        assert_eq!(generate_random_system(&p, 42).unwrap(), generate_random_system(&p, 42).unwrap());
        assert_ne!(generate_random_system(&p, 42).unwrap(), generate_random_system(&p, 43).unwrap());
    }

    #[test]
    fn bad_distribution_is_rejected() {
        let mut p = RandomSystemParams::distress_study(3.0);
        p.interbank = InterbankDist::Uniform { low: 1.0, high: 0.5 };
        assert!(matches!(generate_random_system(&p, 1), Err(Error::InvalidDistribution(_))));
        p.interbank = InterbankDist::Uniform { low: -1.0, high: 0.5 };
        assert!(matches!(generate_random_system(&p, 1), Err(Error::InvalidDistribution(_))));
    }
}
