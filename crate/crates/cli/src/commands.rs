//! Parameter documents for each scenario kind and the reports they produce.
//!
//! The same types back both the subcommands and the `params` field of a
//! scenario file, so a config and its command line produce identical output.

use anyhow::{Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use txfee::analytics::{
    equilibrium_f, fee_selfish_reward, lambert_w0, optimal_beta, selfish_reward_fees, selfish_reward_fixed,
    whale_delta_threshold, whale_overtake_prob, WhaleParams, WhaleVariant,
};
use txfee::audit::{audit_mmic, audit_oca, audit_uic, AuditConfig, Notion};
use txfee::sim::{run_replications, run_sim, SimConfig, SimReport};
use txfee::tfm::{bids_from_amounts, Bid, MechanismSpec, TfmOutcome};

use crate::error::as_invalid;
use crate::output::{num, Report};

/// Simulation parameters: a full [`SimConfig`] plus optional replications.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimParams {
    #[serde(flatten)]
    pub config: SimConfig,
    /// Run once per seed `seed, seed+1, …` instead of a single run.
    #[serde(default)]
    pub replications: Option<u64>,
}

pub fn simulate(params: &SimParams, seed: Option<u64>) -> Result<Vec<Report>> {
    let mut config = params.config.clone();
    if let Some(s) = seed {
        config.seed = s;
    }
    config.validate().map_err(as_invalid)?;
    let echo = serde_json::to_value(params)?;
    let seeds: Vec<u64> = match params.replications {
        None => vec![config.seed],
        Some(0) => return Err(as_invalid("replications must be >= 1")),
        Some(n) => (0..n).map(|i| config.seed.wrapping_add(i)).collect(),
    };
    let reports: Vec<SimReport> = if seeds.len() == 1 {
        vec![run_sim(&config).context("running simulation")?]
    } else {
        run_replications(&config, &seeds).context("running replications")?
    };

    let mut miners = Report::new(
        "simulate",
        Some(config.seed),
        echo.clone(),
        &[
            "seed", "miner", "strategy", "hash_share", "reward", "share", "blocks_found", "blocks_on_main",
            "mining_cost",
        ],
    );
    let mut summary = Report::new(
        "simulate_summary",
        Some(config.seed),
        echo,
        &["seed", "main_chain_length", "orphans", "forks", "end_time", "total_fees_arrived", "main_chain_fees"],
    );
    for (s, r) in seeds.iter().zip(&reports) {
        for m in &r.miners {
            let strategy = serde_json::to_value(&config.miners[m.miner as usize].strategy)?;
            miners.push(vec![
                json!(s),
                json!(m.miner),
                strategy.get("kind").cloned().unwrap_or(Value::Null),
                num(m.hash_share),
                num(m.reward),
                num(m.share),
                json!(m.blocks_found),
                json!(m.blocks_on_main),
                num(m.mining_cost),
            ]);
        }
        summary.push(vec![
            json!(s),
            json!(r.main_chain_length),
            json!(r.orphans),
            json!(r.forks),
            num(r.end_time),
            num(r.total_fees_arrived),
            num(r.main_chain_fees),
        ]);
    }
    Ok(vec![miners, summary])
}

fn default_alphas() -> Vec<f64> {
    (1..=9).map(|i| 0.05 * i as f64).collect()
}

fn default_gammas() -> Vec<f64> {
    vec![0.0, 0.5, 1.0]
}

/// A closed-form evaluation.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AnalyticParams {
    /// Selfish-mining reward under both reward regimes on an (α, γ) grid.
    SelfishGrid {
        #[serde(default = "default_alphas")]
        alphas: Vec<f64>,
        #[serde(default = "default_gammas")]
        gammas: Vec<f64>,
    },
    /// Fee-threshold selfish reward; optimal β when `beta` is absent.
    FeeSelfish {
        alpha: f64,
        gamma: f64,
        #[serde(default)]
        beta: Option<f64>,
    },
    /// Whale-fee thresholds under both denominators.
    Whale { chi_a: f64, chi_x: f64, z: u32 },
    /// Overtaking probability of a fork `z` behind with share `q`.
    Overtake { q: f64, z: u32 },
    /// Undercutting equilibrium schedule on `points` values of x in [0, x_max].
    Equilibrium {
        gamma: f64,
        #[serde(default = "default_points")]
        points: usize,
        #[serde(default = "default_x_max")]
        x_max: f64,
    },
    /// Lambert W₀ at the given arguments.
    Lambert { x: Vec<f64> },
}

fn default_points() -> usize {
    301
}

fn default_x_max() -> f64 {
    1.5
}

pub fn analytic(params: &AnalyticParams) -> Result<Vec<Report>> {
    let echo = serde_json::to_value(params)?;
    let report = match params {
        AnalyticParams::SelfishGrid { alphas, gammas } => {
            let mut r = Report::new("selfish_grid", None, echo, &["alpha", "gamma", "reward_fees", "reward_fixed"]);
            for &a in alphas {
                for &g in gammas {
                    let fees = selfish_reward_fees(a, g).map_err(as_invalid)?;
                    let fixed = selfish_reward_fixed(a, g).map_err(as_invalid)?;
                    r.push(vec![num(a), num(g), num(fees), num(fixed)]);
                }
            }
            r
        }
        AnalyticParams::FeeSelfish { alpha, gamma, beta } => {
            let (beta, reward) = match beta {
                Some(b) => (*b, fee_selfish_reward(*alpha, *gamma, *b).map_err(as_invalid)?),
                None => {
                    let o = optimal_beta(*alpha, *gamma).map_err(as_invalid)?;
                    (o.beta, o.reward)
                }
            };
            let mut r = Report::new("fee_selfish", None, echo, &["alpha", "gamma", "beta", "reward", "relative_gain"]);
            r.push(vec![num(*alpha), num(*gamma), num(beta), num(reward), num(reward / alpha - 1.0)]);
            r
        }
        AnalyticParams::Whale { chi_a, chi_x, z } => {
            let p = WhaleParams::new(*chi_a, *chi_x, *z);
            let mut r = Report::new("whale", None, echo, &["chi_a", "chi_x", "z", "variant", "delta_threshold"]);
            for v in WhaleVariant::ALL {
                let d = whale_delta_threshold(&p, v).map_err(as_invalid)?;
                r.push(vec![num(*chi_a), num(*chi_x), json!(z), json!(v.name()), num(d)]);
            }
            r
        }
        AnalyticParams::Overtake { q, z } => {
            let mut r = Report::new("overtake", None, echo, &["q", "z", "probability"]);
            r.push(vec![num(*q), json!(z), num(whale_overtake_prob(*q, *z).map_err(as_invalid)?)]);
            r
        }
        AnalyticParams::Equilibrium { gamma, points, x_max } => {
            if *points < 2 || !(*x_max > 0.0) {
                return Err(as_invalid("equilibrium needs points >= 2 and x_max > 0"));
            }
            let mut r = Report::new("equilibrium", None, echo, &["gamma", "x", "f"]);
            for i in 0..*points {
                let x = x_max * i as f64 / (*points - 1) as f64;
                r.push(vec![num(*gamma), num(x), num(equilibrium_f(x, *gamma).map_err(as_invalid)?)]);
            }
            r
        }
        AnalyticParams::Lambert { x } => {
            let mut r = Report::new("lambert", None, echo, &["x", "w0"]);
            for &xi in x {
                r.push(vec![num(xi), num(lambert_w0(xi).map_err(as_invalid)?)]);
            }
            r
        }
    };
    Ok(vec![report])
}

/// A bid given either as a bare amount or in full.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BidInput {
    Amount(f64),
    Full(Bid),
}

pub fn to_bids(input: &[BidInput]) -> Vec<Bid> {
    let amounts: Vec<f64> = input
        .iter()
        .map(|b| match b {
            BidInput::Amount(a) => *a,
            BidInput::Full(b) => b.amount,
        })
        .collect();
    let mut bids = bids_from_amounts(&amounts);
    for (b, inp) in bids.iter_mut().zip(input) {
        if let BidInput::Full(full) = inp {
            *b = *full;
        }
    }
    bids
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TfmParams {
    pub mechanism: MechanismSpec,
    pub bids: Vec<BidInput>,
    /// Inclusion set; the mechanism's honest rule when absent.
    #[serde(default)]
    pub included: Option<Vec<usize>>,
    /// Draw the randomized confirmation instead of reporting expectations.
    #[serde(default)]
    pub sampled: bool,
}

pub fn tfm_run(params: &TfmParams, seed: Option<u64>) -> Result<Vec<Report>> {
    let mech = &params.mechanism;
    mech.validate().map_err(as_invalid)?;
    let bids = to_bids(&params.bids);
    let included = match &params.included {
        Some(inc) => inc.clone(),
        None => mech.honest_inclusion(&bids),
    };
    let seed = params.sampled.then(|| seed.unwrap_or(0));
    let out: TfmOutcome = match seed {
        Some(s) => mech.execute_sampled(&bids, &included, &mut ChaCha8Rng::seed_from_u64(s)),
        None => mech.execute(&bids, &included),
    }
    .map_err(as_invalid)?;
    let echo = serde_json::to_value(params)?;
    let mut rows = Report::new(
        "tfm_run",
        seed,
        echo.clone(),
        &["bidder", "amount", "fake", "included", "confirmed", "payment"],
    );
    for (i, b) in bids.iter().enumerate() {
        rows.push(vec![
            json!(b.bidder),
            num(b.amount),
            json!(b.fake),
            json!(out.included[i]),
            num(out.confirmed[i]),
            num(out.payments[i]),
        ]);
    }
    let mut summary = Report::new(
        "tfm_summary",
        seed,
        echo,
        &["mechanism", "included_count", "total_payments", "miner_revenue", "burned"],
    );
    summary.push(vec![
        json!(mech.name()),
        json!(out.included_count()),
        num(out.total_payments()),
        num(out.miner_revenue),
        num(out.burned),
    ]);
    Ok(vec![rows, summary])
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditParams {
    pub mechanism: MechanismSpec,
    /// True values for UIC and OCA; the bid vector for MMIC.
    pub values: Vec<f64>,
    /// Notions to audit; all three when absent.
    #[serde(default)]
    pub notions: Option<Vec<Notion>>,
    #[serde(default)]
    pub config: AuditConfig,
}

pub fn ic_audit(params: &AuditParams) -> Result<Vec<Report>> {
    let mech = &params.mechanism;
    mech.validate().map_err(as_invalid)?;
    params.config.validate().map_err(as_invalid)?;
    let notions = params
        .notions
        .clone()
        .unwrap_or_else(|| vec![Notion::Uic, Notion::Mmic, Notion::Oca]);
    let mut r = Report::new(
        "ic_audit",
        None,
        serde_json::to_value(params)?,
        &[
            "mechanism", "notion", "gamma", "honest_utility", "best_utility", "gain", "tolerance", "violated",
            "evaluated", "witness",
        ],
    );
    for notion in notions {
        let rep = match notion {
            Notion::Uic => audit_uic(mech, &params.values, &params.config),
            Notion::Mmic => audit_mmic(mech, &params.values, &params.config),
            Notion::Oca => audit_oca(mech, &params.values, &params.config),
        }
        .map_err(as_invalid)?;
        r.push(vec![
            json!(mech.name()),
            serde_json::to_value(notion)?,
            rep.gamma.map_or(Value::Null, num),
            num(rep.honest_utility),
            num(rep.best_utility),
            num(rep.gain),
            num(rep.tolerance),
            json!(rep.violated()),
            json!(rep.evaluated),
            Value::String(serde_json::to_string(&rep.witness)?),
        ]);
    }
    Ok(vec![r])
}
