mod common;

use proptest::prelude::*;
use txfee::chain::{best_tips, MinerId, MinerView};
use txfee::strategies::{ForkFunction, Strategy};

use common::mixed_outcome;

fn all_policies() -> Vec<Strategy> {
    vec![
        Strategy::Honest,
        Strategy::PettyCompliant,
        Strategy::LazyFork,
        Strategy::FunctionFork {
            f: ForkFunction::Linear { k: 0.5 },
        },
        Strategy::FunctionFork {
            f: ForkFunction::Equilibrium { gamma: 0.15 },
        },
        Strategy::FeeSnipe { chi: 0.3 },
        Strategy::Selfish { beta: None },
        Strategy::Selfish { beta: Some(1.5) },
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn policies_are_pure(seed in 0u64..1_000) {
        let out = mixed_outcome(seed, 0.5, 80);
        let copy = out.tree.clone();
        let end = out.report.end_time;
        for m in 0..6u32 {
            for j in 0..=10 {
                let t = end * j as f64 / 10.0;
                let v1 = MinerView::new(&out.tree, MinerId(m), t);
                let v2 = MinerView::new(&copy, MinerId(m), t);
                for s in all_policies() {
                    let a = s.decide(&v1, &out.pool).unwrap();
                    prop_assert_eq!(&a, &s.decide(&v1, &out.pool).unwrap());
                    prop_assert_eq!(&a, &s.decide(&v2, &out.pool).unwrap());
                }
            }
        }
    }

    /// Views of miners without withheld blocks: petty-compliant mines the
    /// richest tip, and the forking policies stay within one level of the top.
    #[test]
    fn targets_respect_policy_bounds(seed in 0u64..1_000) {
        let out = mixed_outcome(seed, 0.5, 80);
        let end = out.report.end_time;
        for m in 1..6u32 {
            for j in 0..=20 {
                let view = MinerView::new(&out.tree, MinerId(m), end * j as f64 / 20.0);
                if !view.own_unpublished().is_empty() {
                    continue;
                }
                let top = view.max_height();
                let petty = Strategy::PettyCompliant.decide(&view, &out.pool).unwrap();
                let best = best_tips(&view)
                    .into_iter()
                    .map(|b| view.remaining(&out.pool, b).unwrap())
                    .fold(f64::NEG_INFINITY, f64::max);
                prop_assert_eq!(view.remaining(&out.pool, petty.mine_target).unwrap(), best);
                for s in [
                    Strategy::LazyFork,
                    Strategy::FunctionFork { f: ForkFunction::Identity },
                    Strategy::FunctionFork { f: ForkFunction::Linear { k: 0.3 } },
                ] {
                    let a = s.decide(&view, &out.pool).unwrap();
                    let h = out.tree.get(a.mine_target).unwrap().height;
                    prop_assert!(h + 1 >= top, "{s:?} mines at {h} below top {top}");
                }
            }
        }
    }

    /// A fee threshold above the total fee supply never triggers.
    #[test]
    fn unreachable_threshold_is_plain_selfish(seed in 0u64..1_000) {
        let out = mixed_outcome(seed, 0.5, 80);
        let supply = out.pool.total_value();
        let end = out.report.end_time;
        for j in 0..=40 {
            let view = MinerView::new(&out.tree, MinerId(0), end * j as f64 / 40.0);
            let plain = Strategy::Selfish { beta: None }.decide(&view, &out.pool).unwrap();
            let high = Strategy::Selfish { beta: Some(supply + 1.0) }.decide(&view, &out.pool).unwrap();
            prop_assert_eq!(plain, high);
        }
    }
}
