//! Random instance generators shared by the integration suites.

#![allow(dead_code)]

use contagion::{Clearing, ClearingState, FinancialSystem, InverseDemandModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sparse random network; some banks start short of cash.
pub fn random_system(rng: &mut ChaCha8Rng, n: usize, m: usize) -> FinancialSystem {
    let mut liabilities = vec![vec![0.0; n + 1]; n];
    for (i, row) in liabilities.iter_mut().enumerate() {
        row[0] = rng.gen_range(0.0..2.0);
        for j in 0..n {
            if j != i && rng.gen_bool(0.7) {
                row[j + 1] = rng.gen_range(0.0..1.0);
            }
        }
    }
    let liquid = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
    let holdings = (0..n)
        .map(|_| (0..m).map(|_| rng.gen_range(0.0..2.0)).collect())
        .collect();
    FinancialSystem::new(liabilities, liquid, holdings).unwrap()
}

/// Linear model with non-negative covariance entries. With probability one
/// half every bank shares the same risk aversion.
pub fn random_linear_idf(rng: &mut ChaCha8Rng, n: usize, m: usize) -> InverseDemandModel {
    let mu = (0..m).map(|_| rng.gen_range(0.5..1.5)).collect();
    let mut cov = vec![vec![0.0f64; m]; m];
    for k in 0..m {
        cov[k][k] = rng.gen_range(0.1..1.0);
        for l in 0..k {
            let c = rng.gen_range(0.0..0.5) * (cov[k][k] * cov[l][l]).sqrt();
            cov[k][l] = c;
            cov[l][k] = c;
        }
    }
    let alpha0 = rng.gen_range(0.05..1.0);
    let alpha = if rng.gen_bool(0.5) {
        vec![rng.gen_range(0.05..1.0); n]
    } else {
        (0..n).map(|_| rng.gen_range(0.05..1.0)).collect()
    };
    InverseDemandModel::linear(mu, cov, alpha0, alpha).unwrap()
}

/// A random clearing problem with `n` banks drawn from `1..=max_n`.
pub fn random_clearing(seed: u64, max_n: usize, m: usize) -> Clearing {
    let mut r = rng(seed);
    let n = r.gen_range(1..=max_n);
    let system = random_system(&mut r, n, m);
    let idf = random_linear_idf(&mut r, n, m);
    Clearing::new(system, idf).unwrap()
}

fn below(rng: &mut ChaCha8Rng, top: &[f64], floor: f64) -> Vec<f64> {
    top.iter()
        .map(|&t| if t > floor { rng.gen_range(floor..=t) } else { t })
        .collect()
}

/// Two lattice states with `hi >= lo` componentwise. Prices stay away from
/// zero, where proportional liquidation switches to a full dump.
pub fn ordered_states(rng: &mut ChaCha8Rng, c: &Clearing) -> (ClearingState, ClearingState) {
    let top = c.top();
    let lo = ClearingState {
        p: below(rng, &top.p, 0.0),
        q: below(rng, &top.q, 1e-3),
        m: below(rng, &top.m, 0.0),
    };
    let hi = ClearingState {
        p: lo.p.iter().zip(&top.p).map(|(&l, &t)| if rng.gen_bool(0.5) { rng.gen_range(l..=t) } else { l }).collect(),
        q: lo.q.iter().zip(&top.q).map(|(&l, &t)| if rng.gen_bool(0.5) { rng.gen_range(l..=t) } else { l }).collect(),
        m: lo.m.iter().zip(&top.m).map(|(&l, &t)| if rng.gen_bool(0.5) { rng.gen_range(l..=t) } else { l }).collect(),
    };
    (hi, lo)
}
