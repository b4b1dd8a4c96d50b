//! Shared fixtures: small simulated block trees with every policy active.

#![allow(dead_code)]

use txfee::sim::{simulate, FeeValue, Horizon, MinerConfig, SimConfig, SimOutcome};
use txfee::strategies::{ForkFunction, Strategy};

pub fn mixed_config(seed: u64, gamma: f64, blocks: u64) -> SimConfig {
    let miners = vec![
        (Strategy::Selfish { beta: Some(2.0) }, 0.25),
        (Strategy::LazyFork, 0.15),
        (
            Strategy::FunctionFork {
                f: ForkFunction::Linear { k: 0.5 },
            },
            0.15,
        ),
        (Strategy::FeeSnipe { chi: 0.3 }, 0.1),
        (Strategy::PettyCompliant, 0.15),
        (Strategy::Honest, 0.2),
    ];
    SimConfig {
        miners: miners
            .into_iter()
            .map(|(strategy, hash_share)| MinerConfig { strategy, hash_share })
            .collect(),
        fee_rate: 4.0,
        fee_value: FeeValue::Exponential { mean: 0.25 },
        block_rate: 1.0,
        gamma,
        mining_cost_rate: 0.0,
        horizon: Horizon::MainChainBlocks { blocks },
        seed,
        fee_cap: None,
        trace: false,
    }
}

pub fn mixed_outcome(seed: u64, gamma: f64, blocks: u64) -> SimOutcome {
    simulate(&mixed_config(seed, gamma, blocks)).expect("valid fixture")
}
