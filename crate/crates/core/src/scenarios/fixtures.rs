//! Small built-in systems used by the scenarios and the test suites.

use crate::inverse_demand::InverseDemandModel;
use crate::network::FinancialSystem;

/// Two banks, one asset, with two distinct clearing solutions.
///
/// Bank 0 owes 1 outside and 1 to bank 1; bank 1 owes 1 outside. Bank 0 has
/// no cash and 2.35 units, bank 1 has 0.001 cash and 2 units.
pub fn counterexample() -> FinancialSystem {
    FinancialSystem::new(
        vec![vec![1.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]],
        vec![0.0, 0.001],
        vec![vec![2.35], vec![2.0]],
    )
    .expect("counterexample fixture is valid")
}

/// `F(θ, M) = 1 − θ / (15 + |𝓜|)`.
pub fn counterexample_idf() -> InverseDemandModel {
    InverseDemandModel::linear(vec![1.0], vec![vec![1.0]], 1.0 / 15.0, vec![1.0, 1.0])
        .expect("counterexample price model is valid")
}

/// Two banks, two assets, holdings `[[λ, 2−λ], [2−λ, λ]]`.
///
/// `λ = 1` is the fully diversified case (identical portfolios), `λ = 0` and
/// `λ = 2` the fully specialised ones.
pub fn diversification(lambda: f64) -> FinancialSystem {
    FinancialSystem::new(
        vec![vec![1.85, 0.0, 1.0], vec![1.0, 1.0, 0.0]],
        vec![0.0, 1.0],
        vec![vec![lambda, 2.0 - lambda], vec![2.0 - lambda, lambda]],
    )
    .expect("diversification fixture is valid")
}

/// Correlated two-asset price model with `C = σ²[[1, ρ], [ρ, 1]]` and
/// `(1 + ρ)σ² = 1`, so a symmetric sale has the same impact for every ρ.
pub fn diversification_idf(rho: f64) -> InverseDemandModel {
    let var = 1.0 / (1.0 + rho);
    InverseDemandModel::linear(
        vec![1.0, 1.0],
        vec![vec![var, var * rho], vec![var * rho, var]],
        0.1,
        vec![0.1, 0.1],
    )
    .expect("diversification price model is valid")
}

/// Single-asset linear model with `μ = 1`, `C = 1` and every risk aversion at `alpha`.
pub fn uniform_linear_idf(n: usize, alpha: f64) -> InverseDemandModel {
    InverseDemandModel::linear(vec![1.0], vec![vec![1.0]], alpha, vec![alpha; n])
        .expect("uniform linear model is valid")
}
