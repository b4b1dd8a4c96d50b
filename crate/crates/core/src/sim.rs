//! Seeded discrete-event simulation of fee-driven mining.
//!
//! Block discoveries form a Poisson process of rate `block_rate`, attributed
//! to miners in proportion to hash share; fees arrive as an independent
//! Poisson process. Announcements propagate instantly. When an honest miner
//! sees two tied tips it mines on the later-heard one with probability
//! `gamma`, which is how a withholding miner's races are split.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{whale_delta_threshold, AnalyticsError, WhaleParams, WhaleVariant};
use crate::chain::{best_tips, BlockId, BlockTree, ChainError, FeePool, MinerId, MinerView};
use crate::strategies::{Strategy, StrategyError};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("the simulation needs at least one miner")]
    NoMiners,
    #[error("block_rate must be positive, got {0}")]
    ZeroBlockRate(f64),
    #[error("hash shares sum to {0}, not 1")]
    Shares(f64),
    #[error("invalid parameter {name} = {value}: {reason}")]
    Param {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("at least one bin is required")]
    ZeroBins,
    #[error("miner {miner}: {source}")]
    Strategy {
        miner: usize,
        #[source]
        source: StrategyError,
    },
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
}

fn param(name: &'static str, value: f64, reason: &'static str, ok: bool) -> Result<(), SimError> {
    if ok && !value.is_nan() {
        Ok(())
    } else {
        Err(SimError::Param { name, value, reason })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinerConfig {
    pub strategy: Strategy,
    pub hash_share: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeeValue {
    Fixed { value: f64 },
    Exponential { mean: f64 },
}

impl FeeValue {
    pub fn mean(&self) -> f64 {
        match *self {
            FeeValue::Fixed { value } => value,
            FeeValue::Exponential { mean } => mean,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Horizon {
    /// Stop once the public chain reaches this height.
    MainChainBlocks { blocks: u64 },
    /// Stop at this simulation time.
    Time { time: f64 },
}

impl Default for Horizon {
    fn default() -> Self {
        Horizon::MainChainBlocks { blocks: 10_000 }
    }
}

fn default_block_rate() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub miners: Vec<MinerConfig>,
    /// Fee arrivals per unit time.
    pub fee_rate: f64,
    pub fee_value: FeeValue,
    #[serde(default = "default_block_rate")]
    pub block_rate: f64,
    #[serde(default)]
    pub gamma: f64,
    /// Cost per unit time per unit hash share.
    #[serde(default)]
    pub mining_cost_rate: f64,
    #[serde(default)]
    pub horizon: Horizon,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub fee_cap: Option<f64>,
    #[serde(default)]
    pub trace: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.miners.is_empty() {
            return Err(SimError::NoMiners);
        }
        if !(self.block_rate > 0.0 && self.block_rate.is_finite()) {
            return Err(SimError::ZeroBlockRate(self.block_rate));
        }
        let mut total = 0.0;
        for (i, m) in self.miners.iter().enumerate() {
            param("hash_share", m.hash_share, "must be in [0, 1]", (0.0..=1.0).contains(&m.hash_share))?;
            m.strategy
                .validate()
                .map_err(|source| SimError::Strategy { miner: i, source })?;
            total += m.hash_share;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(SimError::Shares(total));
        }
        param("fee_rate", self.fee_rate, "must be finite and >= 0", self.fee_rate >= 0.0 && self.fee_rate.is_finite())?;
        match self.fee_value {
            FeeValue::Fixed { value } => param("fee_value.value", value, "must be >= 0", value >= 0.0 && value.is_finite())?,
            FeeValue::Exponential { mean } => param("fee_value.mean", mean, "must be > 0", mean > 0.0 && mean.is_finite())?,
        }
        param("gamma", self.gamma, "must be in [0, 1]", (0.0..=1.0).contains(&self.gamma))?;
        param(
            "mining_cost_rate",
            self.mining_cost_rate,
            "must be finite and >= 0",
            self.mining_cost_rate >= 0.0 && self.mining_cost_rate.is_finite(),
        )?;
        match self.horizon {
            Horizon::MainChainBlocks { blocks } => param("horizon.blocks", blocks as f64, "must be >= 1", blocks >= 1)?,
            Horizon::Time { time } => param("horizon.time", time, "must be > 0", time > 0.0 && time.is_finite())?,
        }
        if let Some(cap) = self.fee_cap {
            param("fee_cap", cap, "must be >= 0", cap >= 0.0)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinerReport {
    pub miner: u32,
    pub hash_share: f64,
    /// Fees claimed by this miner's blocks on the main chain.
    pub reward: f64,
    /// `reward` over the total main-chain fees (0 if there are none).
    pub share: f64,
    pub blocks_found: u64,
    pub blocks_on_main: u64,
    pub mining_cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    Found,
    Published,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub time: f64,
    pub kind: TraceKind,
    pub block: usize,
    pub miner: u32,
    pub height: u64,
    pub claimed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub miners: Vec<MinerReport>,
    /// Found blocks that are not on the main chain, announced or not.
    pub orphans: u64,
    /// Blocks with more than one child.
    pub forks: u64,
    pub main_chain_length: u64,
    pub end_time: f64,
    pub total_fees_arrived: f64,
    pub main_chain_fees: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceEvent>>,
}

/// Everything a run produced, for analyses that need the tree itself.
#[derive(Clone, Debug)]
pub struct SimOutcome {
    pub tree: BlockTree,
    pub pool: FeePool,
    pub main_chain: Vec<BlockId>,
    pub report: SimReport,
}

struct FeeSource {
    next: f64,
    gap: Option<Exp<f64>>,
    value: FeeValue,
    value_dist: Option<Exp<f64>>,
}

impl FeeSource {
    fn new(config: &SimConfig, rng: &mut ChaCha8Rng) -> Self {
        let gap = (config.fee_rate > 0.0).then(|| Exp::new(config.fee_rate).expect("positive rate"));
        let value_dist = match config.fee_value {
            FeeValue::Exponential { mean } => Some(Exp::new(1.0 / mean).expect("positive mean")),
            FeeValue::Fixed { .. } => None,
        };
        let next = gap.map(|g| g.sample(rng)).unwrap_or(f64::INFINITY);
        Self {
            next,
            gap,
            value: config.fee_value,
            value_dist,
        }
    }

    fn fill_until(&mut self, t: f64, pool: &mut FeePool, rng: &mut ChaCha8Rng) -> Result<(), ChainError> {
        while self.next <= t {
            let v = match (self.value, &self.value_dist) {
                (FeeValue::Fixed { value }, _) => value,
                (_, Some(d)) => d.sample(rng),
                (_, None) => unreachable!("exponential fees always carry a distribution"),
            };
            pool.push(self.next, v)?;
            self.next += self.gap.map(|g| g.sample(rng)).unwrap_or(f64::INFINITY);
        }
        Ok(())
    }
}

fn strat_err(miner: usize) -> impl Fn(StrategyError) -> SimError {
    move |source| SimError::Strategy { miner, source }
}

/// Runs one simulation and returns the tree and pool along with the report.
pub fn simulate(config: &SimConfig) -> Result<SimOutcome, SimError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let block_gap = Exp::new(config.block_rate).expect("validated block rate");
    let mut fees = FeeSource::new(config, &mut rng);
    let mut pool = FeePool::new();
    let mut tree = BlockTree::new().with_fee_cap(config.fee_cap);
    let mut trace = config.trace.then(Vec::new);

    let cumulative: Vec<f64> = config
        .miners
        .iter()
        .scan(0.0, |acc, m| {
            *acc += m.hash_share;
            Some(*acc)
        })
        .collect();
    let pick = |u: f64| {
        cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(config.miners.len() - 1)
    };
    let mut found = vec![0u64; config.miners.len()];

    let mut t = 0.0;
    let end_time = loop {
        t += block_gap.sample(&mut rng);
        if let Horizon::Time { time } = config.horizon {
            if t > time {
                fees.fill_until(time, &mut pool, &mut rng)?;
                break time;
            }
        }
        fees.fill_until(t, &mut pool, &mut rng)?;

        let i = pick(rng.random::<f64>());
        let me = MinerId(i as u32);
        let strategy = &config.miners[i].strategy;
        let view = MinerView::new(&tree, me, t);
        let action = strategy.decide(&view, &pool).map_err(strat_err(i))?;
        let mut target = action.mine_target;
        if strategy.is_honest() && config.gamma > 0.0 {
            let tips = best_tips(&view);
            if tips.len() >= 2 && rng.random::<f64>() < config.gamma {
                target = tips[tips.len() - 1];
            }
        }
        let claims = tree.claims_for(&pool, target, t, action.claim)?;
        let id = tree.add_block(&pool, target, me, claims, t)?;
        found[i] += 1;
        if let Some(tr) = trace.as_mut() {
            let b = tree.get(id)?;
            tr.push(TraceEvent {
                time: t,
                kind: TraceKind::Found,
                block: id.0,
                miner: me.0,
                height: b.height,
                claimed: b.claimed_value,
            });
        }

        publish_fixpoint(config, &mut tree, &pool, t, trace.as_mut())?;

        if let Horizon::MainChainBlocks { blocks } = config.horizon {
            let top = tree.public_tips()[0];
            if tree.get(top)?.height >= blocks {
                break t;
            }
        }
    };

    let main_tip = tree.public_tips()[0];
    let main_chain = tree.chain_to(main_tip)?;
    let mut reward = vec![0.0; config.miners.len()];
    let mut on_main = vec![0u64; config.miners.len()];
    for &id in &main_chain[1..] {
        let b = tree.get(id)?;
        if let Some(m) = b.miner {
            reward[m.0 as usize] += b.claimed_value;
            on_main[m.0 as usize] += 1;
        }
    }
    let main_chain_fees: f64 = reward.iter().sum();
    let miners = config
        .miners
        .iter()
        .enumerate()
        .map(|(i, m)| MinerReport {
            miner: i as u32,
            hash_share: m.hash_share,
            reward: reward[i],
            share: if main_chain_fees > 0.0 {
                reward[i] / main_chain_fees
            } else {
                0.0
            },
            blocks_found: found[i],
            blocks_on_main: on_main[i],
            mining_cost: config.mining_cost_rate * m.hash_share * end_time,
        })
        .collect();
    let main_len = (main_chain.len() - 1) as u64;
    let report = SimReport {
        miners,
        orphans: found.iter().sum::<u64>() - main_len,
        forks: (0..tree.len())
            .filter(|&i| tree.child_count(BlockId(i)) > 1)
            .count() as u64,
        main_chain_length: main_len,
        end_time,
        total_fees_arrived: pool.arrived_value(end_time),
        main_chain_fees,
        trace,
    };
    Ok(SimOutcome {
        tree,
        pool,
        main_chain,
        report,
    })
}

/// Lets every miner announce until nobody wants to announce anything more.
fn publish_fixpoint(
    config: &SimConfig,
    tree: &mut BlockTree,
    pool: &FeePool,
    t: f64,
    mut trace: Option<&mut Vec<TraceEvent>>,
) -> Result<(), SimError> {
    loop {
        let mut changed = false;
        for (j, m) in config.miners.iter().enumerate() {
            let me = MinerId(j as u32);
            if !tree.unpublished().iter().any(|&b| tree.blocks()[b.0].miner == Some(me)) {
                continue;
            }
            let action = m
                .strategy
                .decide(&MinerView::new(tree, me, t), pool)
                .map_err(strat_err(j))?;
            for b in action.publish_now {
                let published = tree.publish(b, t)?;
                changed |= !published.is_empty();
                if let Some(tr) = trace.as_deref_mut() {
                    for id in published {
                        let blk = tree.get(id)?;
                        tr.push(TraceEvent {
                            time: t,
                            kind: TraceKind::Published,
                            block: id.0,
                            miner: me.0,
                            height: blk.height,
                            claimed: blk.claimed_value,
                        });
                    }
                }
            }
        }
        if !changed {
            return Ok(());
        }
    }
}

pub fn run_sim(config: &SimConfig) -> Result<SimReport, SimError> {
    simulate(config).map(|o| o.report)
}

/// Runs `config` once per seed; results come back in seed order.
pub fn run_replications(config: &SimConfig, seeds: &[u64]) -> Result<Vec<SimReport>, SimError> {
    seeds
        .par_iter()
        .map(|&seed| run_sim(&SimConfig { seed, ..config.clone() }))
        .collect()
}

/// Fee process used by [`estimate_selfish_reward`]: ten fees per block
/// interval with exponential values of mean 0.1, so one unit of fees accrues
/// per expected block.
pub const SELFISH_FEE_RATE: f64 = 10.0;
pub const SELFISH_FEE_MEAN: f64 = 0.1;

/// Two-miner configuration: a withholding miner of share `alpha` against an
/// honest remainder.
pub fn selfish_config(alpha: f64, gamma: f64, beta: Option<f64>, n_blocks: u64, seed: u64) -> SimConfig {
    SimConfig {
        miners: vec![
            MinerConfig {
                strategy: Strategy::Selfish { beta },
                hash_share: alpha,
            },
            MinerConfig {
                strategy: Strategy::Honest,
                hash_share: 1.0 - alpha,
            },
        ],
        fee_rate: SELFISH_FEE_RATE,
        fee_value: FeeValue::Exponential {
            mean: SELFISH_FEE_MEAN,
        },
        block_rate: 1.0,
        gamma,
        mining_cost_rate: 0.0,
        horizon: Horizon::MainChainBlocks { blocks: n_blocks },
        seed,
        fee_cap: None,
        trace: false,
    }
}

/// Main-chain fee share of a withholding miner of share `alpha`.
pub fn estimate_selfish_reward(
    alpha: f64,
    gamma: f64,
    beta: Option<f64>,
    n_blocks: u64,
    seed: u64,
) -> Result<f64, SimError> {
    param("alpha", alpha, "must be in (0, 0.5)", alpha > 0.0 && alpha < 0.5)?;
    param("n_blocks", n_blocks as f64, "must be >= 10000", n_blocks >= 10_000)?;
    let report = run_sim(&selfish_config(alpha, gamma, beta, n_blocks, seed))?;
    Ok(report.miners[0].share)
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkEstimate {
    pub frequency: f64,
    pub std_error: f64,
    pub trials: u64,
    /// Trials stopped by the step cap before absorbing.
    pub truncated: u64,
}

/// Walks longer than this are stopped and counted as not overtaking.
pub const WALK_STEP_CAP: u64 = 1_000_000;

/// Fraction of biased random walks, started `z` behind and stepping toward
/// the fork with probability `q`, that reach one ahead.
///
/// When `q < 1/2`, a walk that drifts so far back that its chance of
/// recovering is below 1e−12 is stopped as a failure.
pub fn run_whale_walk(q: f64, z: u32, trials: u64, seed: u64) -> Result<WalkEstimate, SimError> {
    param("q", q, "must be in (0, 1)", q > 0.0 && q < 1.0)?;
    param("trials", trials as f64, "must be >= 1", trials >= 1)?;
    let p = 1.0 - q;
    let barrier = if q < p {
        z as i64 + ((1e-12f64).ln() / (q / p).ln()).ceil() as i64
    } else {
        i64::MAX
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0u64;
    let mut truncated = 0u64;
    for _ in 0..trials {
        let mut pos = z as i64;
        let mut steps = 0u64;
        loop {
            if rng.random::<f64>() < q {
                pos -= 1;
                if pos < 0 {
                    hits += 1;
                    break;
                }
            } else {
                pos += 1;
                if pos > barrier {
                    break;
                }
            }
            steps += 1;
            if steps >= WALK_STEP_CAP {
                truncated += 1;
                break;
            }
        }
    }
    let f = hits as f64 / trials as f64;
    Ok(WalkEstimate {
        frequency: f,
        std_error: (f * (1.0 - f) / trials as f64).sqrt(),
        trials,
        truncated,
    })
}

/// Monte Carlo check of the whale-fee threshold: both overtaking
/// probabilities are estimated by random walks and plugged into the
/// break-even condition, then compared with each closed-form variant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhaleAdjudication {
    pub params: WhaleParams,
    /// Fork (attacker plus defector) overtaking frequency.
    pub fork: WalkEstimate,
    /// Attacker-alone overtaking frequency.
    pub attacker: WalkEstimate,
    pub mc_delta: f64,
    pub statement_delta: f64,
    pub proof_delta: f64,
    /// Variants whose threshold lies within the relative tolerance of the
    /// Monte Carlo one.
    pub consistent: Vec<WhaleVariant>,
}

pub fn adjudicate_whale_variant(
    params: &WhaleParams,
    trials: u64,
    seed: u64,
    rel_tol: f64,
) -> Result<WhaleAdjudication, SimError> {
    params.validate()?;
    param("rel_tol", rel_tol, "must be positive", rel_tol > 0.0)?;
    let q = params.fork_power();
    let fork = run_whale_walk(q, params.z, trials, seed)?;
    let attacker = run_whale_walk(params.chi_a, params.z, trials, seed.wrapping_add(1))?;
    if fork.frequency == 0.0 {
        return Err(SimError::Param {
            name: "trials",
            value: trials as f64,
            reason: "no fork walk overtook; increase trials",
        });
    }
    let mc_delta = (1.0 - attacker.frequency) / params.m_total * q / fork.frequency - 1.0;
    let statement_delta = whale_delta_threshold(params, WhaleVariant::Statement)?;
    let proof_delta = whale_delta_threshold(params, WhaleVariant::Proof)?;
    let consistent = [(WhaleVariant::Statement, statement_delta), (WhaleVariant::Proof, proof_delta)]
        .into_iter()
        .filter(|&(_, d)| (mc_delta - d).abs() <= rel_tol * d.abs())
        .map(|(v, _)| v)
        .collect();
    Ok(WhaleAdjudication {
        params: *params,
        fork,
        attacker,
        mc_delta,
        statement_delta,
        proof_delta,
        consistent,
    })
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapBin {
    /// Time since the last main-chain block, bin start.
    pub t_lo: f64,
    pub t_hi: f64,
    /// Mean fees available on the main-chain tip over the bin.
    pub mean_remaining: f64,
    /// `block_rate · mean_remaining`: expected fee income per unit time per
    /// unit hash share.
    pub reward_rate: f64,
    pub cost_rate: f64,
    pub net_rate: f64,
    /// Total main-chain time observed in the bin.
    pub exposure: f64,
}

/// Profit of mining honestly as a function of time since the last block.
///
/// Runs `config` and, along every gap between consecutive main-chain blocks,
/// integrates the fees available on the older block. Bins cover
/// `[0, 3 / block_rate)`.
pub fn mining_gap_profile(config: &SimConfig, bins: usize) -> Result<Vec<GapBin>, SimError> {
    if bins == 0 {
        return Err(SimError::ZeroBins);
    }
    let out = simulate(config)?;
    let window = 3.0 / config.block_rate;
    let width = window / bins as f64;
    let mut integral = vec![0.0; bins];
    let mut exposure = vec![0.0; bins];

    let pool = &out.pool;
    let times: Vec<f64> = pool.events().map(|e| e.arrival_time).collect();
    let values: Vec<f64> = pool.events().map(|e| e.value).collect();

    for pair in out.main_chain.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let start = out.tree.get(a)?.found_time;
        let end = out.tree.get(b)?.found_time;
        let mut level = crate::chain::remaining_fees(&out.tree, pool, a, start)?;
        let mut k = pool.arrived_count(start);
        let mut s = 0.0;
        let span = (end - start).min(window);
        while s < span {
            let next_fee = if k < times.len() { times[k] - start } else { f64::INFINITY };
            let seg_end = next_fee.min(span);
            // Spread [s, seg_end) over the bins it touches.
            let mut lo = s;
            while lo < seg_end {
                let bin = ((lo / width) as usize).min(bins - 1);
                let hi = ((bin + 1) as f64 * width).min(seg_end);
                let hi = if hi <= lo { seg_end } else { hi };
                integral[bin] += level * (hi - lo);
                exposure[bin] += hi - lo;
                lo = hi;
            }
            s = seg_end;
            if next_fee <= span {
                level += values[k];
                k += 1;
            }
        }
    }

    Ok((0..bins)
        .map(|i| {
            let mean = if exposure[i] > 0.0 {
                integral[i] / exposure[i]
            } else {
                f64::NAN
            };
            let reward_rate = config.block_rate * mean;
            GapBin {
                t_lo: i as f64 * width,
                t_hi: (i + 1) as f64 * width,
                mean_remaining: mean,
                reward_rate,
                cost_rate: config.mining_cost_rate,
                net_rate: reward_rate - config.mining_cost_rate,
                exposure: exposure[i],
            }
        })
        .collect())
}

/// Time after a block at which honest mining breaks even when every block
/// claims all fees: `κ / (block_rate · λ · μ)`.
pub fn mining_gap_crossover(config: &SimConfig) -> f64 {
    config.mining_cost_rate / (config.block_rate * config.fee_rate * config.fee_value.mean())
}
