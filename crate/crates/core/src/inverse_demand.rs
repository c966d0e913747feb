//! Inverse demand functions `F(θ, M)`: aggregate liquidations and market
//! liquidity in, asset prices out.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Liquidity at or below this level does not make a bank a market maker.
/// Keeps iteration noise from flipping membership of a discontinuous map.
pub const MAKER_EPS: f64 = 1e-12;

/// Banks currently providing liquidity, as sorted 0-based indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MarketMakerSet(Vec<usize>);

impl MarketMakerSet {
    pub fn from_indices(mut idx: Vec<usize>) -> Self {
        idx.sort_unstable();
        idx.dedup();
        MarketMakerSet(idx)
    }

    /// The first `k` banks; stands in for any set of size `k` when only the
    /// cardinality matters.
    pub fn first(k: usize) -> Self {
        MarketMakerSet((0..k).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// `{i : M_i > MAKER_EPS}`.
pub fn market_makers(liquidity: &[f64]) -> MarketMakerSet {
    MarketMakerSet(
        liquidity
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > MAKER_EPS)
            .map(|(i, _)| i)
            .collect(),
    )
}

/// Parameters of the liquidity-adjusted linear model
/// `F(θ, M) = μ − (1/α₀ + Σ_{i∈𝓜} 1/α_i)⁻¹ C θ`, floored at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearIdf {
    pub mu: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    /// Risk aversion of the external market.
    pub alpha0: f64,
    /// Risk aversion of each bank when it acts as a market maker.
    pub alpha: Vec<f64>,
}

impl LinearIdf {
    fn price_into(&self, theta: &[f64], makers: &MarketMakerSet, out: &mut [f64]) {
        let tolerance: f64 =
            1.0 / self.alpha0 + makers.as_slice().iter().map(|&i| 1.0 / self.alpha[i]).sum::<f64>();
        for (k, o) in out.iter_mut().enumerate() {
            let impact: f64 = self.cov[k].iter().zip(theta).map(|(c, t)| c * t).sum();
            *o = (self.mu[k] - impact / tolerance).max(0.0);
        }
    }

    fn uniform_aversion(&self) -> bool {
        self.alpha.windows(2).all(|w| w[0] == w[1])
    }
}

/// The family of inverse demand functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum InverseDemandModel {
    /// Price impact scaled by the risk tolerance of the market makers.
    Linear(LinearIdf),
    /// `exp(−θ_k / Σ_i M_i)`, continuous in both arguments.
    Exponential,
    /// Wraps a model and evaluates it at a frozen liquidity vector.
    Fixed {
        inner: Box<InverseDemandModel>,
        m_fixed: Vec<f64>,
    },
}

/// How an enumeration oracle can partition liquidity vectors into classes on
/// which `F(·, M)` is constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum MakerClasses {
    /// Price depends on M only through `|𝓜|`.
    Count(usize),
    /// Price depends on the exact set `𝓜`.
    Subsets(usize),
    /// Price ignores M.
    Independent,
}

impl InverseDemandModel {
    pub fn linear(mu: Vec<f64>, cov: Vec<Vec<f64>>, alpha0: f64, alpha: Vec<f64>) -> Result<Self> {
        let model = InverseDemandModel::Linear(LinearIdf {
            mu,
            cov,
            alpha0,
            alpha,
        });
        model.check_structure()?;
        Ok(model)
    }

    /// Wrap `inner` so it is always evaluated at `m_fixed`.
    pub fn fixed(inner: InverseDemandModel, m_fixed: Vec<f64>) -> Self {
        InverseDemandModel::Fixed {
            inner: Box::new(inner),
            m_fixed,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            InverseDemandModel::Linear(_) => "linear",
            InverseDemandModel::Exponential => "exponential",
            InverseDemandModel::Fixed { .. } => "fixed",
        }
    }

    /// Shape and sign checks that make evaluation well defined. Negative
    /// covariances pass here; see [`validate`](Self::validate).
    pub fn check_structure(&self) -> Result<()> {
        match self {
            InverseDemandModel::Linear(l) => {
                let m = l.mu.len();
                if l.cov.len() != m || l.cov.iter().any(|r| r.len() != m) {
                    return Err(Error::InvalidModel(format!("covariance must be {m}×{m}")));
                }
                let finite = l.mu.iter().chain(l.cov.iter().flatten()).all(|v| v.is_finite());
                if !finite {
                    return Err(Error::InvalidModel("non-finite mean or covariance".into()));
                }
                for k in 0..m {
                    for j in 0..k {
                        if l.cov[k][j] != l.cov[j][k] {
                            return Err(Error::InvalidModel(format!(
                                "covariance is not symmetric at ({k}, {j})"
                            )));
                        }
                    }
                }
                if !(l.alpha0 > 0.0 && l.alpha0.is_finite()) {
                    return Err(Error::InvalidModel(format!("alpha0 = {} must be positive", l.alpha0)));
                }
                if let Some(a) = l.alpha.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
                    return Err(Error::InvalidModel(format!("bank risk aversion {a} must be positive")));
                }
                Ok(())
            }
            InverseDemandModel::Exponential => Ok(()),
            InverseDemandModel::Fixed { inner, m_fixed } => {
                if m_fixed.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::InvalidModel("frozen liquidity must be finite and >= 0".into()));
                }
                inner.check_structure()
            }
        }
    }

    /// Structure plus non-negative correlations, the condition under which
    /// the linear model is monotone.
    pub fn validate(&self) -> Result<()> {
        self.check_structure()?;
        match self {
            InverseDemandModel::Linear(l) => {
                if l.cov.iter().flatten().any(|&c| c < 0.0) {
                    return Err(Error::InvalidModel(
                        "negative covariance entries break monotonicity in the liquidations".into(),
                    ));
                }
                Ok(())
            }
            InverseDemandModel::Exponential => Ok(()),
            InverseDemandModel::Fixed { inner, .. } => inner.validate(),
        }
    }

    pub fn asset_count(&self) -> Option<usize> {
        match self {
            InverseDemandModel::Linear(l) => Some(l.mu.len()),
            InverseDemandModel::Exponential => None,
            InverseDemandModel::Fixed { inner, .. } => inner.asset_count(),
        }
    }

    pub fn bank_count(&self) -> Option<usize> {
        match self {
            InverseDemandModel::Linear(l) => Some(l.alpha.len()),
            InverseDemandModel::Exponential => None,
            InverseDemandModel::Fixed { m_fixed, .. } => Some(m_fixed.len()),
        }
    }

    pub(crate) fn check_dims(&self, n: usize, m: usize) -> Result<()> {
        self.check_structure()?;
        if let Some(k) = self.asset_count() {
            if k != m {
                return Err(Error::InvalidModel(format!("model prices {k} assets, system has {m}")));
            }
        }
        if let InverseDemandModel::Fixed { inner, .. } = self {
            inner.check_dims(n, m)?;
        }
        if let Some(b) = self.bank_count() {
            if b != n {
                return Err(Error::InvalidModel(format!("model expects {b} banks, system has {n}")));
            }
        }
        Ok(())
    }

    /// `F(θ, M)` with the market-maker set read off `M`.
    pub fn price(&self, theta: &[f64], liquidity: &[f64]) -> Result<Vec<f64>> {
        if let Some((asset, &value)) = theta.iter().enumerate().find(|(_, &t)| !(t >= 0.0)) {
            return Err(Error::NegativeLiquidation { asset, value });
        }
        if liquidity.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::StateOutOfLattice("market liquidity must be >= 0".into()));
        }
        if let Some(n) = self.bank_count() {
            if liquidity.len() != n {
                return Err(Error::InvalidModel(format!(
                    "liquidity has {} entries, model expects {n}",
                    liquidity.len()
                )));
            }
        }
        if let Some(m) = self.asset_count() {
            if theta.len() != m {
                return Err(Error::InvalidModel(format!(
                    "liquidation vector has {} entries, model prices {m} assets",
                    theta.len()
                )));
            }
        }
        Ok(self.price_given(theta, liquidity, &market_makers(liquidity)))
    }

    /// `F(θ, M)` with an explicitly supplied market-maker set. Inputs are
    /// assumed in range.
    pub fn price_given(&self, theta: &[f64], liquidity: &[f64], makers: &MarketMakerSet) -> Vec<f64> {
        let mut out = vec![0.0; theta.len()];
        self.price_into(theta, liquidity, makers, &mut out);
        out
    }

    pub(crate) fn price_into(
        &self,
        theta: &[f64],
        liquidity: &[f64],
        makers: &MarketMakerSet,
        out: &mut [f64],
    ) {
        match self {
            InverseDemandModel::Linear(l) => l.price_into(theta, makers, out),
            InverseDemandModel::Exponential => {
                let total: f64 = liquidity.iter().sum();
                for (o, &t) in out.iter_mut().zip(theta) {
                    *o = if total > 0.0 {
                        (-t / total).exp()
                    } else if t == 0.0 {
                        1.0
                    } else {
                        0.0
                    };
                }
            }
            InverseDemandModel::Fixed { inner, m_fixed } => {
                inner.price_into(theta, m_fixed, &market_makers(m_fixed), out)
            }
        }
    }

    pub(crate) fn maker_classes(&self, n: usize) -> Result<MakerClasses> {
        match self {
            InverseDemandModel::Linear(l) if l.uniform_aversion() => Ok(MakerClasses::Count(n)),
            InverseDemandModel::Linear(_) => Ok(MakerClasses::Subsets(n)),
            InverseDemandModel::Exponential => Err(Error::EnumerationUnsupported("exponential")),
            InverseDemandModel::Fixed { .. } => Ok(MakerClasses::Independent),
        }
    }

    /// Liquidation magnitude that moves prices across their whole range.
    fn theta_scale(&self) -> f64 {
        match self {
            InverseDemandModel::Linear(l) => {
                let tol = 1.0 / l.alpha0 + l.alpha.iter().map(|a| 1.0 / a).sum::<f64>();
                let mu = l.mu.iter().cloned().fold(0.0, f64::max).max(1e-12);
                let c = l.cov.iter().flatten().map(|c| c.abs()).fold(0.0, f64::max).max(1e-12);
                mu * tol / c
            }
            InverseDemandModel::Exponential => 3.0,
            InverseDemandModel::Fixed { inner, .. } => inner.theta_scale(),
        }
    }
}

/// Sampling check of monotonicity: non-increasing in liquidations,
/// non-decreasing in liquidity. Each sample draws an ordered pair in each
/// argument, with increments zeroed at random so single-coordinate moves
/// (where cross-impacts show up) are covered.
pub fn check_idf_monotonicity(model: &InverseDemandModel, samples: usize, seed: u64) -> bool {
    let n = model.bank_count().unwrap_or(4);
    let m = model.asset_count().unwrap_or(2);
    let scale = model.theta_scale();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    const SLACK: f64 = 1e-12;

    let draw = |rng: &mut ChaCha8Rng, len: usize, scale: f64, p_zero: f64| -> Vec<f64> {
        (0..len)
            .map(|_| {
                if rng.gen_bool(p_zero) {
                    0.0
                } else {
                    rng.gen_range(0.0..scale)
                }
            })
            .collect()
    };

    for _ in 0..samples {
        let liquidity = draw(&mut rng, n, 1.0, 0.3);
        let theta_lo = draw(&mut rng, m, scale, 0.2);
        let bump = draw(&mut rng, m, scale, 0.5);
        let theta_hi: Vec<f64> = theta_lo.iter().zip(&bump).map(|(a, b)| a + b).collect();

        let lo_makers = market_makers(&liquidity);
        let at_lo = model.price_given(&theta_lo, &liquidity, &lo_makers);
        let at_hi = model.price_given(&theta_hi, &liquidity, &lo_makers);
        if at_hi.iter().zip(&at_lo).any(|(h, l)| *h > l + SLACK) {
            return false;
        }

        let extra = draw(&mut rng, n, 1.0, 0.5);
        let richer: Vec<f64> = liquidity.iter().zip(&extra).map(|(a, b)| a + b).collect();
        let at_rich = model.price_given(&theta_lo, &richer, &market_makers(&richer));
        if at_lo.iter().zip(&at_rich).any(|(poor, rich)| *poor > rich + SLACK) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::fixtures;
    use proptest::prelude::*;

    #[test]
    fn maker_set_examples() {
        let mm = market_makers(&[0.0, 0.001]);
        assert_eq!(mm.as_slice(), &[1]);
        assert!(market_makers(&[0.0, 0.0]).is_empty());
        assert_eq!(market_makers(&[1e-13, 5.0]).as_slice(), &[1]);
    }

    #[test]
    fn counterexample_price_with_one_maker() {
        let idf = fixtures::counterexample_idf();
        let q = idf.price(&[2.342], &[0.0, 0.001]).unwrap();
        assert!((q[0] - (1.0 - 2.342 / 16.0)).abs() < 1e-12);
        assert!((q[0] - 0.854).abs() < 1e-3);
    }

    #[test]
    fn zero_liquidation_gives_base_price() {
        let idf = fixtures::diversification_idf(0.3);
        assert_eq!(idf.price(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), vec![1.0, 1.0]);
        let q = InverseDemandModel::Exponential.price(&[0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(q, vec![1.0]);
    }

    #[test]
    fn diversification_model_two_makers() {
        let idf = fixtures::diversification_idf(0.0);
        let q = idf.price(&[1.0, 1.0], &[1.0, 1.0]).unwrap();
        for v in q {
            assert!((v - (1.0 - 1.0 / 30.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn negative_liquidation_is_rejected() {
        let idf = fixtures::counterexample_idf();
        assert!(matches!(
            idf.price(&[-0.1], &[0.0, 0.0]),
            Err(Error::NegativeLiquidation { asset: 0, .. })
        ));
    }

    #[test]
    fn linear_price_is_floored() {
        let idf = fixtures::counterexample_idf();
        assert_eq!(idf.price(&[100.0], &[0.0, 0.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn exponential_boundary_convention() {
        let e = InverseDemandModel::Exponential;
        assert_eq!(e.price(&[0.5, 0.0], &[0.0, 0.0]).unwrap(), vec![0.0, 1.0]);
        let q = e.price(&[1.0], &[0.5, 1.5]).unwrap();
        assert!((q[0] - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn monotonicity_check_detects_sign_of_correlation() {
        assert!(check_idf_monotonicity(&fixtures::diversification_idf(0.5), 500, 1));
        assert!(check_idf_monotonicity(&fixtures::counterexample_idf(), 500, 2));
        let bad = InverseDemandModel::linear(
            vec![1.0, 1.0],
            vec![vec![1.0, -0.3], vec![-0.3, 1.0]],
            0.1,
            vec![0.1, 0.1],
        )
        .unwrap();
        assert!(!check_idf_monotonicity(&bad, 500, 3));
        assert!(bad.validate().is_err());
        assert!(check_idf_monotonicity(&InverseDemandModel::Exponential, 500, 4));
    }

    #[test]
    fn structure_errors() {
        assert!(InverseDemandModel::linear(vec![1.0], vec![vec![1.0]], 0.0, vec![1.0]).is_err());
        assert!(InverseDemandModel::linear(vec![1.0], vec![vec![1.0]], 1.0, vec![-1.0]).is_err());
        assert!(InverseDemandModel::linear(
            vec![1.0, 1.0],
            vec![vec![1.0, 0.2], vec![0.1, 1.0]],
            1.0,
            vec![1.0]
        )
        .is_err());
        let f = InverseDemandModel::fixed(InverseDemandModel::Exponential, vec![-1.0]);
        assert!(f.check_structure().is_err());
    }

    #[test]
    fn json_config_shapes() {
        let lin: InverseDemandModel = serde_json::from_str(
            r#"{"type":"linear","mu":[1.0],"cov":[[1.0]],"alpha0":0.1,"alpha":[0.1,0.1]}"#,
        )
        .unwrap();
        assert_eq!(lin.tag(), "linear");
        let exp: InverseDemandModel = serde_json::from_str(r#"{"type":"exponential"}"#).unwrap();
        assert_eq!(exp, InverseDemandModel::Exponential);
        let fixed: InverseDemandModel = serde_json::from_str(
            r#"{"type":"fixed","inner":{"type":"exponential"},"m_fixed":[1.0,1.0]}"#,
        )
        .unwrap();
        assert_eq!(fixed.bank_count(), Some(2));
    }

    fn linear_model(n: usize, alpha: f64) -> InverseDemandModel {
        InverseDemandModel::linear(
            vec![1.0, 1.0],
            vec![vec![1.0, 0.4], vec![0.4, 1.0]],
            alpha,
            vec![alpha; n],
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn doubling_tolerance_halves_impact(
            t0 in 0.0..0.5f64, t1 in 0.0..0.5f64,
            mask in prop::collection::vec(any::<bool>(), 4),
        ) {
            let liq: Vec<f64> = mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
            let base = linear_model(4, 1.0);
            let half = linear_model(4, 0.5);
            let q1 = base.price(&[t0, t1], &liq).unwrap();
            let q2 = half.price(&[t0, t1], &liq).unwrap();
            for k in 0..2 {
                prop_assert!(((1.0 - q2[k]) - 0.5 * (1.0 - q1[k])).abs() < 1e-12);
            }
        }

        #[test]
        fn frozen_liquidity_ignores_argument(
            t in 0.0..3.0f64,
            liq in prop::collection::vec(0.0..2.0f64, 3),
        ) {
            let inner = InverseDemandModel::linear(vec![1.0], vec![vec![1.0]], 0.1, vec![0.1; 3]).unwrap();
            let fixed = InverseDemandModel::fixed(inner.clone(), vec![1.0; 3]);
            prop_assert_eq!(fixed.price(&[t], &liq).unwrap(), inner.price(&[t], &[1.0; 3]).unwrap());
        }

        #[test]
        fn fewer_makers_never_raise_price(
            t0 in 0.0..1.0f64, t1 in 0.0..1.0f64,
            mask in prop::collection::vec(any::<bool>(), 5),
        ) {
            let model = linear_model(5, 0.2);
            let liq: Vec<f64> = mask.iter().map(|&b| if b { 0.3 } else { 0.0 }).collect();
            let partial = model.price(&[t0, t1], &liq).unwrap();
            let full = model.price(&[t0, t1], &[0.3; 5]).unwrap();
            for k in 0..2 {
                prop_assert!(partial[k] <= full[k] + 1e-15);
            }
        }

        #[test]
        fn exponential_stays_in_unit_interval(
            t in prop::collection::vec(0.0..10.0f64, 2),
            liq in prop::collection::vec(0.0..2.0f64, 3),
            dt in 0.0..1e-9f64,
        ) {
            let e = InverseDemandModel::Exponential;
            let q = e.price(&t, &liq).unwrap();
            prop_assert!(q.iter().all(|v| (0.0..=1.0).contains(v)));
            if liq.iter().sum::<f64>() > 0.1 {
                let shifted: Vec<f64> = t.iter().map(|v| v + dt).collect();
                let q2 = e.price(&shifted, &liq).unwrap();
                for k in 0..2 {
                    prop_assert!((q[k] - q2[k]).abs() < 1e-8);
                }
            }
        }
    }
}
