use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SolveMethod;
use crate::clearing::{Clearing, MakerRule};
use crate::inverse_demand::InverseDemandModel;
use crate::liquidation::LiquidationRule;
use crate::network::FinancialSystem;
use crate::{Error, Result};

/// A single clearing problem as read from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub system: FinancialSystem,
    pub idf: InverseDemandModel,
    #[serde(default)]
    pub liquidation: LiquidationRule,
    #[serde(default)]
    pub maker_rule: MakerRule,
    #[serde(default)]
    pub method: SolveMethod,
}

impl ProblemSpec {
    pub fn parse(text: &str, toml: bool) -> Result<Self> {
        if toml {
            Ok(::toml::from_str(text)?)
        } else {
            Ok(serde_json::from_str(text)?)
        }
    }

    /// Files ending in `.toml` are read as TOML, anything else as JSON.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        Self::parse(&text, is_toml)
    }

    pub fn clearing(&self) -> Result<Clearing> {
        Ok(Clearing::new(self.system.clone(), self.idf.clone())?
            .with_rule(self.liquidation)
            .with_maker_rule(self.maker_rule))
    }
}
