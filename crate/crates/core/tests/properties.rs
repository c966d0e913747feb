//! Randomized structural properties of the clearing map and its inputs.

mod common;

use contagion::inverse_demand::check_idf_monotonicity;
use contagion::liquidation::{check_minimal_liquidation, liquidate_proportional};
use contagion::{Clearing, InverseDemandModel, LiquidationRule, MakerRule, SolverConfig};
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(500)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn phi_is_monotone(seed in any::<u64>(), m in 1usize..=2, strict in any::<bool>()) {
        let mut c = common::random_clearing(seed, 6, m);
        if !strict {
            c = c.with_maker_rule(MakerRule::NonNegativeNet);
        }
        let mut rng = common::rng(seed ^ 0x5eed);
        let (hi, lo) = common::ordered_states(&mut rng, &c);
        let out_hi = c.apply_phi(&hi).unwrap();
        let out_lo = c.apply_phi(&lo).unwrap();
        prop_assert!(out_hi.dominates(&out_lo, 1e-9), "{:?} vs {:?}", out_hi, out_lo);
    }

    #[test]
    fn phi_stays_in_lattice(seed in any::<u64>(), m in 1usize..=2) {
        let c = common::random_clearing(seed, 6, m);
        let mut rng = common::rng(seed.wrapping_add(1));
        let (hi, lo) = common::ordered_states(&mut rng, &c);
        for s in [hi, lo, c.top().clone(), c.bottom()] {
            let out = c.apply_phi(&s).unwrap();
            prop_assert!(c.top().dominates(&out, 1e-12));
            prop_assert!(out.dominates(&c.bottom(), 0.0));
        }
    }

    #[test]
    fn solutions_respect_lattice_and_order(seed in any::<u64>(), m in 1usize..=2) {
        let c = common::random_clearing(seed, 6, m);
        let cfg = SolverConfig::default();
        let bounds = c.system().lattice_bounds(c.idf()).unwrap();
        let hi = c.solve_greatest(&cfg).unwrap();
        let lo = c.solve_least(&cfg).unwrap();
        prop_assert!(hi.converged && lo.converged);
        for r in [&hi, &lo] {
            prop_assert!(r.residual <= 10.0 * cfg.tolerance);
            let s = &r.state;
            for (v, t) in s.p.iter().zip(&bounds.p_top) { prop_assert!(*v >= 0.0 && *v <= *t + 1e-12); }
            for (v, t) in s.q.iter().zip(&bounds.q_top) { prop_assert!(*v >= 0.0 && *v <= *t + 1e-12); }
            for (v, t) in s.m.iter().zip(&bounds.m_top) { prop_assert!(*v >= 0.0 && *v <= *t + 1e-12); }
        }
        prop_assert!(hi.state.dominates(&lo.state, 1e-8));
    }

    #[test]
    fn picard_sequences_are_monotone(seed in any::<u64>(), m in 1usize..=2) {
        let c = common::random_clearing(seed, 6, m);
        let cfg = SolverConfig::default();
        let hi = c.solve_greatest(&cfg).unwrap();
        let lo = c.solve_least(&cfg).unwrap();
        prop_assert!(hi.monotone_violation <= 1e-12, "from top rose by {}", hi.monotone_violation);
        if !lo.fallback_used {
            prop_assert!(lo.monotone_violation <= 1e-12, "from bottom fell by {}", lo.monotone_violation);
        }
    }

    #[test]
    fn proportional_sales_are_minimal(seed in any::<u64>(), m in 1usize..=3) {
        let c = common::random_clearing(seed, 6, m);
        let mut rng = common::rng(!seed);
        let (s, _) = common::ordered_states(&mut rng, &c);
        prop_assert!(check_minimal_liquidation(&LiquidationRule::Proportional, c.system(), c.rel(), &s.p, &s.q));
    }

    #[test]
    fn sales_fall_as_payments_and_prices_rise(seed in any::<u64>(), m in 1usize..=3) {
        let c = common::random_clearing(seed, 6, m);
        let mut rng = common::rng(seed.rotate_left(7));
        let (hi, lo) = common::ordered_states(&mut rng, &c);
        let g_hi = liquidate_proportional(c.system(), c.rel(), &hi.p, &hi.q).unwrap();
        let g_lo = liquidate_proportional(c.system(), c.rel(), &lo.p, &lo.q).unwrap();
        for (a, b) in g_hi.iter().flatten().zip(g_lo.iter().flatten()) {
            prop_assert!(*a <= *b + 1e-9, "{} > {}", a, b);
        }
    }

    #[test]
    fn price_model_monotone_iff_covariance_nonnegative(
        seed in any::<u64>(),
        c11 in 0.1f64..1.0,
        c22 in 0.1f64..1.0,
        off in -0.3f64..0.3,
    ) {
        let model = InverseDemandModel::linear(
            vec![1.0, 1.0],
            vec![vec![c11, off], vec![off, c22]],
            0.2,
            vec![0.5, 0.5, 0.5],
        ).unwrap();
        let monotone = check_idf_monotonicity(&model, 400, seed);
        prop_assert_eq!(monotone, off >= 0.0, "off-diagonal {}", off);
    }
}

#[test]
fn fixed_benchmark_is_monotone_too() {
    for seed in 0..200 {
        let c = common::random_clearing(seed, 6, 1).fixed_benchmark();
        let mut rng = common::rng(seed);
        let (hi, lo) = common::ordered_states(&mut rng, &c);
        assert!(c.apply_phi(&hi).unwrap().dominates(&c.apply_phi(&lo).unwrap(), 1e-9));
    }
}

#[test]
fn default_rule_choice_keeps_counterexample() {
    let cfg = SolverConfig::default();
    for rule in [MakerRule::PositiveLiquidity, MakerRule::NonNegativeNet] {
        let c = Clearing::new(
            contagion::scenarios::fixtures::counterexample(),
            contagion::scenarios::fixtures::counterexample_idf(),
        )
        .unwrap()
        .with_maker_rule(rule);
        let hi = c.solve_greatest(&cfg).unwrap();
        let lo = c.solve_least(&cfg).unwrap();
        assert!((hi.state.q[0] - 0.8536).abs() < 1e-3);
        assert!((lo.state.q[0] - 0.843).abs() < 1e-2);
    }
}
