//! Named reproduction runs: the comparison matrix, the counterexamples and
//! the curves behind each headline number.

use anyhow::Result;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use txfee::analytics::{
    equilibrium_f, optimal_beta, selfish_reward_fees, selfish_reward_fixed, whale_delta_threshold, WhaleParams,
    WhaleVariant,
};
use txfee::audit::AuditConfig;
use txfee::sim::{
    adjudicate_whale_variant, estimate_selfish_reward, mining_gap_crossover, mining_gap_profile, FeeValue, Horizon,
    MinerConfig, SimConfig,
};
use txfee::strategies::Strategy;

use crate::counterexamples::counterexamples;
use crate::error::as_invalid;
use crate::output::{num, Report};
use crate::table1::{table1, Table1Options};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ReproName {
    Table1,
    SelfishCurve,
    FeeSelfishCurve,
    WhaleThreshold,
    UndercutEquilibrium,
    MiningGap,
    Counterexamples,
}

impl std::str::FromStr for ReproName {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(json!(s)).map_err(|_| as_invalid(format!("unknown reproduction `{s}`")))
    }
}

/// Absolute agreement required between closed form and simulation.
pub const SELFISH_TOL: f64 = 0.01;
pub const FEE_SELFISH_TOL: f64 = 0.015;
/// Relative agreement for the whale-threshold adjudication.
pub const WHALE_REL_TOL: f64 = 0.05;
/// Parameter points `(χ_A, χ_X, z)` for the whale adjudication.
pub const WHALE_POINTS: [(f64, f64, u32); 3] = [(0.3, 0.1, 2), (0.2, 0.1, 3), (0.2, 0.2, 2)];

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct ReproOptions {
    pub seed: u64,
    /// Main-chain blocks per Monte Carlo cell.
    pub blocks: u64,
    /// Random walks per whale estimate.
    pub trials: u64,
    pub table1: Table1Options,
    pub audit: AuditConfig,
}

impl Default for ReproOptions {
    fn default() -> Self {
        Self {
            seed: 1,
            blocks: 100_000,
            trials: 100_000,
            table1: Table1Options::default(),
            audit: AuditConfig::default(),
        }
    }
}

pub fn reproduce(name: ReproName, opts: &ReproOptions) -> Result<Vec<Report>> {
    match name {
        ReproName::Table1 => {
            let t = Table1Options {
                seed: opts.seed,
                ..opts.table1.clone()
            };
            Ok(vec![table1(&t)?])
        }
        ReproName::SelfishCurve => Ok(vec![selfish_curve(opts)?]),
        ReproName::FeeSelfishCurve => Ok(vec![fee_selfish_curve(opts)?]),
        ReproName::WhaleThreshold => whale_threshold(opts),
        ReproName::UndercutEquilibrium => Ok(vec![undercut_equilibrium()?]),
        ReproName::MiningGap => Ok(vec![mining_gap(opts)?]),
        ReproName::Counterexamples => Ok(vec![counterexamples(&opts.audit)?.1]),
    }
}

pub fn selfish_curve(opts: &ReproOptions) -> Result<Report> {
    let alphas: Vec<f64> = (1..=9).map(|i| 0.05 * i as f64).collect();
    let cells: Vec<(usize, f64, f64)> = alphas
        .iter()
        .flat_map(|&a| [0.0, 0.5, 1.0].map(|g| (a, g)))
        .enumerate()
        .map(|(i, (a, g))| (i, a, g))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(i, a, g)| {
            let analytic = selfish_reward_fees(a, g)?;
            let fixed = selfish_reward_fixed(a, g)?;
            let mc = estimate_selfish_reward(a, g, None, opts.blocks, opts.seed.wrapping_add(i as u64))?;
            Ok((a, g, analytic, fixed, mc))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut r = Report::new(
        "selfish_curve",
        Some(opts.seed),
        json!({"blocks": opts.blocks}),
        &["alpha", "gamma", "analytic", "fixed_regime", "monte_carlo", "abs_error", "tolerance", "within"],
    );
    for (a, g, an, fx, mc) in rows {
        let err = (mc - an).abs();
        r.push(vec![num(a), num(g), num(an), num(fx), num(mc), num(err), num(SELFISH_TOL), json!(err <= SELFISH_TOL)]);
    }
    Ok(r)
}

pub fn fee_selfish_curve(opts: &ReproOptions) -> Result<Report> {
    let alpha = 1.0 / 3.0;
    let gammas: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let rows = gammas
        .par_iter()
        .enumerate()
        .map(|(i, &g)| {
            let o = optimal_beta(alpha, g)?;
            let mc = estimate_selfish_reward(alpha, g, Some(o.beta), opts.blocks, opts.seed.wrapping_add(i as u64))?;
            Ok((g, o.beta, o.reward, mc))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut r = Report::new(
        "fee_selfish_curve",
        Some(opts.seed),
        json!({"alpha": alpha, "blocks": opts.blocks}),
        &["alpha", "gamma", "beta", "analytic", "relative_gain", "monte_carlo", "abs_error", "tolerance", "within"],
    );
    for (g, beta, an, mc) in rows {
        let err = (mc - an).abs();
        r.push(vec![
            num(alpha),
            num(g),
            num(beta),
            num(an),
            num(an / alpha - 1.0),
            num(mc),
            num(err),
            num(FEE_SELFISH_TOL),
            json!(err <= FEE_SELFISH_TOL),
        ]);
    }
    Ok(r)
}

pub fn whale_threshold(opts: &ReproOptions) -> Result<Vec<Report>> {
    let mut grid = Report::new(
        "whale_threshold",
        None,
        json!({}),
        &["chi_a", "chi_x", "z", "statement_delta", "proof_delta"],
    );
    for chi_a in [0.1, 0.2, 0.3] {
        for chi_x in [0.05, 0.1, 0.2] {
            for z in 0..=4u32 {
                let p = WhaleParams::new(chi_a, chi_x, z);
                grid.push(vec![
                    num(chi_a),
                    num(chi_x),
                    json!(z),
                    num(whale_delta_threshold(&p, WhaleVariant::Statement)?),
                    num(whale_delta_threshold(&p, WhaleVariant::Proof)?),
                ]);
            }
        }
    }
    let mut adj = Report::new(
        "whale_adjudication",
        Some(opts.seed),
        json!({"trials": opts.trials, "rel_tol": WHALE_REL_TOL}),
        &[
            "chi_a", "chi_x", "z", "fork_overtake", "attacker_overtake", "mc_delta", "statement_delta", "proof_delta",
            "consistent",
        ],
    );
    for (i, &(a, x, z)) in WHALE_POINTS.iter().enumerate() {
        let w = adjudicate_whale_variant(
            &WhaleParams::new(a, x, z),
            opts.trials,
            opts.seed.wrapping_add(2 * i as u64),
            WHALE_REL_TOL,
        )?;
        let names: Vec<&str> = w.consistent.iter().map(|v| v.name()).collect();
        adj.push(vec![
            num(a),
            num(x),
            json!(z),
            num(w.fork.frequency),
            num(w.attacker.frequency),
            num(w.mc_delta),
            num(w.statement_delta),
            num(w.proof_delta),
            json!(names.join(";")),
        ]);
    }
    Ok(vec![grid, adj])
}

pub const EQUILIBRIUM_GAMMAS: [f64; 3] = [0.1, 0.15, 0.2];

pub fn undercut_equilibrium() -> Result<Report> {
    let mut r = Report::new(
        "undercut_equilibrium",
        None,
        json!({"gammas": EQUILIBRIUM_GAMMAS, "points": 301, "x_max": 1.5}),
        &["gamma", "x", "f"],
    );
    for g in EQUILIBRIUM_GAMMAS {
        for i in 0..=300 {
            let x = 1.5 * i as f64 / 300.0;
            r.push(vec![num(g), num(x), num(equilibrium_f(x, g)?)]);
        }
    }
    Ok(r)
}

/// Two equal honest miners; fees accrue at one unit per unit time and mining
/// costs half that, so breaking even takes half a block interval.
pub fn mining_gap_config(blocks: u64, seed: u64) -> SimConfig {
    SimConfig {
        miners: vec![
            MinerConfig {
                strategy: Strategy::Honest,
                hash_share: 0.5,
            },
            MinerConfig {
                strategy: Strategy::Honest,
                hash_share: 0.5,
            },
        ],
        fee_rate: 5.0,
        fee_value: FeeValue::Exponential { mean: 0.2 },
        block_rate: 1.0,
        gamma: 0.0,
        mining_cost_rate: 0.5,
        horizon: Horizon::MainChainBlocks { blocks },
        seed,
        fee_cap: None,
        trace: false,
    }
}

pub const GAP_BINS: usize = 30;

pub fn mining_gap(opts: &ReproOptions) -> Result<Report> {
    let config = mining_gap_config(opts.blocks, opts.seed);
    let bins = mining_gap_profile(&config, GAP_BINS)?;
    let crossover = mining_gap_crossover(&config);
    let mut r = Report::new(
        "mining_gap",
        Some(opts.seed),
        serde_json::to_value(&config)?,
        &["t_lo", "t_hi", "mean_remaining", "reward_rate", "cost_rate", "net_rate", "exposure", "crossover"],
    );
    for b in bins {
        r.push(vec![
            num(b.t_lo),
            num(b.t_hi),
            num(b.mean_remaining),
            num(b.reward_rate),
            num(b.cost_rate),
            num(b.net_rate),
            num(b.exposure),
            num(crossover),
        ]);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_parse() {
        assert_eq!("table1".parse::<ReproName>().unwrap(), ReproName::Table1);
        assert_eq!("mining-gap".parse::<ReproName>().unwrap(), ReproName::MiningGap);
        assert!("table2".parse::<ReproName>().is_err());
    }

    #[test]
    fn equilibrium_curve_is_monotone() {
        let r = undercut_equilibrium().unwrap();
        let f = r.column("f");
        for w in f.windows(2).filter(|w| w[0].as_f64().is_some()) {
            // Rows of one γ are contiguous; f restarts at each γ.
            let (a, b) = (w[0].as_f64().unwrap(), w[1].as_f64().unwrap());
            assert!(b >= a - 1e-12 || b < 1e-9, "{a} -> {b}");
        }
    }
}
