use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use txfee::tfm::{bids_from_amounts, bsp_confirm_count, eval_second_price, myerson_payment, MechanismSpec};

fn mechanism() -> impl Strategy<Value = MechanismSpec> {
    (1usize..=5, 0.0f64..20.0, 0.0f64..3.0, 0.05f64..=1.0, 1usize..=3, 1usize..=5).prop_filter_map(
        "valid parameters",
        |(b, p, sigma, gamma, c, which)| {
            let k = b.saturating_sub(1).max(1);
            let m = match which % 7 {
                0 => MechanismSpec::FirstPrice { block_size: b },
                1 => MechanismSpec::SecondPrice { block_size: b, k: k.min(b) },
                2 => MechanismSpec::Monopolistic { block_size: b },
                3 => MechanismSpec::PostedPrice { block_size: b, price: p },
                4 => MechanismSpec::Eip1559 { block_size: b, base_fee: p },
                5 => MechanismSpec::TiplessEip1559 {
                    block_size: b,
                    base_fee: p,
                    sigma,
                },
                _ => MechanismSpec::BurningSecondPrice {
                    block_size: b,
                    k,
                    gamma,
                    c,
                },
            };
            m.validate().ok().map(|_| m)
        },
    )
}

fn all_mechanisms() -> impl Strategy<Value = MechanismSpec> {
    prop_oneof![
        mechanism(),
        (2usize..=6, 1usize..=5, 0.05f64..=1.0, 1usize..=3).prop_filter_map("valid bsp", |(b, k, gamma, c)| {
            let m = MechanismSpec::BurningSecondPrice { block_size: b, k, gamma, c };
            m.validate().ok().map(|_| m)
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn outcome_invariants(mech in all_mechanisms(), amounts in prop::collection::vec(0.0f64..30.0, 0..9)) {
        let bids = bids_from_amounts(&amounts);
        let out = mech.run(&bids).unwrap();
        prop_assert!(out.check_invariants(mech.block_size()).is_ok(), "{:?}", out.check_invariants(mech.block_size()));
        prop_assert!(out.burned >= -1e-12);
        prop_assert!((out.burned + out.miner_revenue - out.total_payments()).abs() <= 1e-9);
        for i in 0..bids.len() {
            prop_assert!(out.confirmed[i] <= 1.0 && out.confirmed[i] >= 0.0);
            if !out.included[i] {
                prop_assert_eq!(out.confirmed[i], 0.0);
            }
            if out.confirmed[i] == 0.0 {
                prop_assert_eq!(out.payments[i], 0.0);
            }
            // Truthful bidders never pay more than their expected value.
            prop_assert!(out.payments[i] <= out.confirmed[i] * bids[i].amount + 1e-9);
        }
    }

    #[test]
    fn arbitrary_inclusion_keeps_invariants(
        mech in all_mechanisms(),
        amounts in prop::collection::vec(0.0f64..30.0, 1..9),
        pick in prop::collection::vec(any::<bool>(), 9),
    ) {
        let bids = bids_from_amounts(&amounts);
        let included: Vec<usize> = (0..bids.len()).filter(|&i| pick[i]).take(mech.block_size()).collect();
        let out = mech.execute(&bids, &included).unwrap();
        prop_assert!(out.check_invariants(mech.block_size()).is_ok());
        for i in 0..bids.len() {
            prop_assert_eq!(out.included[i], included.contains(&i));
        }
    }
}

/// The threshold bid derived from the allocation rule alone reproduces the
/// mechanism's own payments whenever the price-setting bid is in the block
/// (`k < B`).
#[test]
fn myerson_reproduces_second_price_payments() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0;
    for _ in 0..1_000 {
        let n = rng.random_range(1..=7);
        let b = rng.random_range(2..=5);
        let k = rng.random_range(1..b);
        let amounts: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..100.0)).collect();
        let out = eval_second_price(&bids_from_amounts(&amounts), b, k).unwrap();
        for i in 0..n {
            let alloc = |z: f64| {
                let mut a = amounts.clone();
                a[i] = z;
                eval_second_price(&bids_from_amounts(&a), b, k).unwrap().confirmed[i]
            };
            let p = myerson_payment(alloc, amounts[i], false).unwrap();
            assert!((p - out.payments[i]).abs() <= 1e-8, "{amounts:?} b={b} k={k} i={i}: {p} vs {}", out.payments[i]);
            checked += 1;
        }
    }
    assert!(checked > 1_000);
}

/// With `k = B` the runner-up never makes it into the block, so confirmed
/// bids pay nothing even though the allocation has a positive threshold.
#[test]
fn second_price_with_full_confirmation_pays_zero() {
    let amounts = [70.0, 57.0, 46.0, 67.0];
    let out = eval_second_price(&bids_from_amounts(&amounts), 3, 3).unwrap();
    assert_eq!(out.payments, vec![0.0, 0.0, 0.0, 0.0]);
    assert_eq!(out.confirmed, vec![1.0, 1.0, 0.0, 1.0]);
    let alloc = |z: f64| {
        let mut a = amounts;
        a[0] = z;
        eval_second_price(&bids_from_amounts(&a), 3, 3).unwrap().confirmed[0]
    };
    assert!((myerson_payment(alloc, 70.0, false).unwrap() - 46.0).abs() < 1e-8);
}

#[test]
fn bsp_expected_matches_sampled_mean() {
    let cases = [
        (vec![10.0, 9.0, 8.0, 3.0, 2.0], 5, 4, 0.5, 1),
        (vec![7.0, 7.0, 6.0, 1.0], 4, 3, 1.0, 2),
        (vec![12.0, 9.0, 8.0, 7.0, 5.0, 4.0], 6, 5, 0.4, 1),
    ];
    for (amounts, b, k, gamma, c) in cases {
        let mech = MechanismSpec::BurningSecondPrice {
            block_size: b,
            k,
            gamma,
            c,
        };
        assert!(bsp_confirm_count(k, gamma, c) < k, "case should randomize");
        let bids = bids_from_amounts(&amounts);
        let expected = mech.run(&bids).unwrap();
        let n = 10_000;
        let mut rev = Vec::with_capacity(n);
        let mut conf = vec![0.0; bids.len()];
        let mut pay = vec![0.0; bids.len()];
        for seed in 0..n as u64 {
            let s = mech.run_sampled(&bids, seed).unwrap();
            rev.push(s.miner_revenue);
            for i in 0..bids.len() {
                conf[i] += s.confirmed[i];
                pay[i] += s.payments[i];
            }
        }
        let mean = rev.iter().sum::<f64>() / n as f64;
        let sd = (rev.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        let se = sd / (n as f64).sqrt();
        // Revenue does not depend on which slots are drawn.
        assert!((mean - expected.miner_revenue).abs() <= 3.0 * se + 1e-9, "{mean} vs {}", expected.miner_revenue);
        for i in 0..bids.len() {
            let x = expected.confirmed[i];
            let se_x = (x * (1.0 - x) / n as f64).sqrt();
            assert!((conf[i] / n as f64 - x).abs() <= 3.0 * se_x + 1e-12, "bid {i}");
            let price = if x > 0.0 { expected.payments[i] / x } else { 0.0 };
            assert!((pay[i] / n as f64 - expected.payments[i]).abs() <= 3.0 * se_x * price + 1e-12, "payment {i}");
        }
    }
}
