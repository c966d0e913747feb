use std::path::PathBuf;

use crate::network::SystemViolation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid financial system ({} violation(s)): {}", .0.len(), join(.0))]
    InvalidSystem(Vec<SystemViolation>),

    #[error("invalid interbank distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid inverse demand model: {0}")]
    InvalidModel(String),

    #[error("payment of bank {bank} is {value}, outside [0, {bound}]")]
    PaymentOutOfLattice { bank: usize, value: f64, bound: f64 },

    #[error("price of asset {asset} is negative ({value})")]
    PriceNegative { asset: usize, value: f64 },

    #[error("liquidation of asset {asset} is negative ({value})")]
    NegativeLiquidation { asset: usize, value: f64 },

    #[error("state outside the clearing lattice: {0}")]
    StateOutOfLattice(String),

    #[error("no convergence within {iterations} iterations (last step {step:e})")]
    MaxIterationsExceeded { iterations: usize, step: f64 },

    #[error("market-maker enumeration needs 2^{n} candidates, above the cap of 2^{cap}")]
    EnumerationCapExceeded { n: usize, cap: usize },

    #[error("inverse demand model `{0}` has no finite set of liquidity classes to enumerate")]
    EnumerationUnsupported(&'static str),

    #[error("insolvency set shrank at outer iteration {iteration}: bank {bank} left the set")]
    InsolvencySetShrank { iteration: usize, bank: usize },

    #[error("market-maker set is constant on [{lo}, {hi}]")]
    NoJumpFound { lo: f64, hi: f64 },

    #[error("malformed CSV: {0}")]
    MalformedCsv(String),

    #[error("inconsistent interbank totals: {0}")]
    InconsistentTotals(String),

    #[error("invalid scenario spec: {0}")]
    InvalidSpec(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// I/O failure tagged with the path involved.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn join(v: &[SystemViolation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
