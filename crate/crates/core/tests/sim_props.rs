mod common;

use proptest::prelude::*;
use txfee::sim::{estimate_selfish_reward, run_sim, selfish_config, FeeValue, Horizon, MinerConfig, SimConfig};
use txfee::strategies::Strategy;

use common::mixed_config;

fn two_honest(blocks: u64, seed: u64) -> SimConfig {
    SimConfig {
        miners: [0.7, 0.3]
            .into_iter()
            .map(|hash_share| MinerConfig {
                strategy: Strategy::Honest,
                hash_share,
            })
            .collect(),
        fee_rate: 10.0,
        fee_value: FeeValue::Exponential { mean: 0.1 },
        block_rate: 1.0,
        gamma: 0.0,
        mining_cost_rate: 0.0,
        horizon: Horizon::MainChainBlocks { blocks },
        seed,
        fee_cap: None,
        trace: false,
    }
}

/// Each block goes to a miner independently with its hash share, so block
/// counts are binomial. A block's fees are a compound Poisson sum over an
/// Exp(1) interval with λ arrivals per unit time and exponential values,
/// whose second moment over its squared mean is 2 + 2/λ; the fee share's
/// variance is inflated by that factor.
#[test]
fn honest_shares_match_hash_power() {
    let n = 100_000;
    let c = two_honest(n, 11);
    let r = run_sim(&c).unwrap();
    assert_eq!(r.main_chain_length, n);
    assert_eq!(r.orphans, 0);
    let p = 0.7;
    let blocks = r.miners[0].blocks_on_main as f64 / n as f64;
    let sd_blocks = (p * (1.0 - p) / n as f64).sqrt();
    assert!((blocks - p).abs() <= 3.0 * sd_blocks, "block share {blocks}");
    let inflation = 2.0 + 2.0 / c.fee_rate;
    let sd_fees = (p * (1.0 - p) * inflation / n as f64).sqrt();
    assert!((r.miners[0].share - p).abs() <= 3.0 * sd_fees, "fee share {}", r.miners[0].share);
}

/// Common random numbers across γ: the same seeds for every γ.
#[test]
fn selfish_reward_nondecreasing_in_gamma() {
    let seeds: Vec<u64> = (100..120).collect();
    let mean = |g: f64| {
        seeds
            .iter()
            .map(|&s| estimate_selfish_reward(0.3, g, None, 10_000, s).unwrap())
            .sum::<f64>()
            / seeds.len() as f64
    };
    let rewards: Vec<f64> = [0.0, 0.25, 0.5, 0.75, 1.0].into_iter().map(mean).collect();
    for w in rewards.windows(2) {
        assert!(w[1] >= w[0], "{rewards:?}");
    }
}

#[test]
fn unreachable_threshold_reproduces_plain_selfish_run() {
    let plain = run_sim(&selfish_config(0.35, 0.5, None, 20_000, 4)).unwrap();
    let high = run_sim(&selfish_config(0.35, 0.5, Some(1e6), 20_000, 4)).unwrap();
    assert_eq!(plain, high);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rewards_sum_to_main_chain_fees(seed in 0u64..10_000, gamma in 0.0f64..=1.0) {
        let r = run_sim(&mixed_config(seed, gamma, 200)).unwrap();
        let total: f64 = r.miners.iter().map(|m| m.reward).sum();
        prop_assert!((total - r.main_chain_fees).abs() <= 1e-9 * r.main_chain_fees.max(1.0));
        prop_assert!(r.main_chain_fees <= r.total_fees_arrived + 1e-9);
        let on_main: u64 = r.miners.iter().map(|m| m.blocks_on_main).sum();
        prop_assert_eq!(on_main, r.main_chain_length);
    }

    #[test]
    fn same_seed_same_report(seed in 0u64..10_000) {
        let c = mixed_config(seed, 0.4, 100);
        prop_assert_eq!(run_sim(&c).unwrap(), run_sim(&c).unwrap());
    }
}
