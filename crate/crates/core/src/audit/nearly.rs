//! Minimal confirming bids, discount ratios and the Monte Carlo estimators
//! of the nearly-incentive-compatible payoffs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::tfm::{bids_from_amounts, Bid, MechanismSpec};

use super::{AuditConfig, AuditError};

const MONOTONE_CHECK_POINTS: usize = 64;

/// Confirmation probability of a bid `z` appended after `others`. The own
/// bid gets the largest bidder id, so it loses every tie.
fn confirm_prob(mech: &MechanismSpec, others: &[f64], z: f64) -> Result<(f64, f64), AuditError> {
    let mut bids = bids_from_amounts(others);
    bids.push(Bid::new(others.len() as u32, z));
    let out = mech.run(&bids)?;
    let n = others.len();
    Ok((out.confirmed[n], out.payments[n]))
}

/// Smallest own bid in `[0, value_cap]` that gets confirmed (with positive
/// probability), to within `tick`. `None` if even `value_cap` is not.
pub fn min_confirming_bid(
    mech: &MechanismSpec,
    others: &[f64],
    value_cap: f64,
    tick: f64,
) -> Result<Option<f64>, AuditError> {
    check_monotone(mech, others, value_cap)?;
    bisect_confirming(mech, others, value_cap, tick)
}

fn check_monotone(mech: &MechanismSpec, others: &[f64], cap: f64) -> Result<(), AuditError> {
    let mut prev = 0.0;
    for j in 0..=MONOTONE_CHECK_POINTS {
        let z = cap * j as f64 / MONOTONE_CHECK_POINTS as f64;
        let x = confirm_prob(mech, others, z)?.0;
        if x + 1e-12 < prev {
            return Err(AuditError::Assumption(format!(
                "confirmation is not monotone in the own bid near {z}"
            )));
        }
        prev = x;
    }
    Ok(())
}

fn bisect_confirming(
    mech: &MechanismSpec,
    others: &[f64],
    cap: f64,
    tick: f64,
) -> Result<Option<f64>, AuditError> {
    if !(tick > 0.0) || !(cap >= 0.0) || !cap.is_finite() {
        return Err(AuditError::Config(format!("need tick > 0 and finite cap >= 0, got {tick}, {cap}")));
    }
    if confirm_prob(mech, others, cap)?.0 <= 0.0 {
        return Ok(None);
    }
    if confirm_prob(mech, others, 0.0)?.0 > 0.0 {
        return Ok(Some(0.0));
    }
    let (mut lo, mut hi) = (0.0, cap);
    while hi - lo > tick {
        let mid = 0.5 * (lo + hi);
        if confirm_prob(mech, others, mid)?.0 > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// `(p^t − p*)/p^t` for a truthful bid `v_i`, where `p^t` is the price paid
/// when confirmed and `p*` the minimal confirming bid; 0 when `v_i < p*`.
/// Clamped to `[0, 1]`: with ties lost, `p*` can sit one tick above `p^t`.
pub fn discount_ratio(mech: &MechanismSpec, v_i: f64, others: &[f64], tick: f64) -> Result<f64, AuditError> {
    check_monotone(mech, others, v_i)?;
    discount_unchecked(mech, v_i, others, tick)
}

fn discount_unchecked(mech: &MechanismSpec, v_i: f64, others: &[f64], tick: f64) -> Result<f64, AuditError> {
    let Some(p_star) = bisect_confirming(mech, others, v_i, tick)? else {
        return Ok(0.0);
    };
    let (x, pay) = confirm_prob(mech, others, v_i)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    let p_t = pay / x;
    if p_t <= 0.0 {
        return Err(AuditError::Assumption(format!(
            "truthful bid {v_i} is confirmed at price 0"
        )));
    }
    Ok(((p_t - p_star) / p_t).clamp(0.0, 1.0))
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValueDist {
    Uniform { lo: f64, hi: f64 },
    Exponential { mean: f64 },
}

impl ValueDist {
    fn validate(&self) -> Result<(), AuditError> {
        match *self {
            ValueDist::Uniform { lo, hi } if lo >= 0.0 && hi > lo && hi.is_finite() => Ok(()),
            ValueDist::Exponential { mean } if mean > 0.0 && mean.is_finite() => Ok(()),
            d => Err(AuditError::Distribution(format!("{d:?}"))),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            ValueDist::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            ValueDist::Exponential { mean } => Exp::new(1.0 / mean).expect("validated").sample(rng),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NearlyMode {
    /// Payoff of user 1.
    Avg,
    /// Worst payoff over all users.
    Max,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NearlyKind {
    Discount,
    Strategic,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Grid size for the strategic estimator's per-user audit.
const STRATEGIC_GRID_TICKS: usize = 16;

/// Monte Carlo estimate of the expected deviation payoff with `n` i.i.d.
/// values per trial. Trial `t` uses its own stream of a ChaCha8 generator
/// seeded with `seed`, so the result does not depend on thread scheduling.
pub fn estimate_nearly_ic(
    mech: &MechanismSpec,
    dist: ValueDist,
    n: usize,
    trials: usize,
    mode: NearlyMode,
    kind: NearlyKind,
    seed: u64,
) -> Result<Estimate, AuditError> {
    dist.validate()?;
    mech.validate()?;
    if n < 2 {
        return Err(AuditError::Config(format!("need n >= 2 users, got {n}")));
    }
    if trials < 100 {
        return Err(AuditError::Config(format!("need at least 100 trials, got {trials}")));
    }
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let values: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
            trial_payoff(mech, &values, mode, kind)
        })
        .collect::<Result<_, _>>()?;
    let mean = samples.iter().sum::<f64>() / trials as f64;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    Ok(Estimate {
        mean,
        std_error: (var / trials as f64).sqrt(),
        trials,
    })
}

fn trial_payoff(mech: &MechanismSpec, values: &[f64], mode: NearlyMode, kind: NearlyKind) -> Result<f64, AuditError> {
    let users = match mode {
        NearlyMode::Avg => 1,
        NearlyMode::Max => values.len(),
    };
    let top = values.iter().copied().fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for j in 0..users {
        let d = match kind {
            NearlyKind::Discount => {
                let others: Vec<f64> = values
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != j)
                    .map(|(_, &v)| v)
                    .collect();
                discount_unchecked(mech, values[j], &others, 1e-6 * top.max(1e-12))?
            }
            NearlyKind::Strategic => strategic_gain(mech, values, j)?,
        };
        worst = worst.max(d);
    }
    Ok(worst)
}

/// Best grid deviation gain of user `j` (no fakes), others truthful.
fn strategic_gain(mech: &MechanismSpec, values: &[f64], j: usize) -> Result<f64, AuditError> {
    // Move user j to the front; the search below deviates user 0.
    let mut order: Vec<f64> = Vec::with_capacity(values.len());
    order.push(values[j]);
    order.extend(values.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &v)| v));
    let cfg = AuditConfig {
        grid_ticks: STRATEGIC_GRID_TICKS,
        fake_budget: 0,
        ..AuditConfig::default()
    };
    user_zero_gain(mech, &order, &cfg)
}

fn user_zero_gain(mech: &MechanismSpec, values: &[f64], cfg: &AuditConfig) -> Result<f64, AuditError> {
    let grid = cfg.grid_for(values, mech);
    let truthful = bids_from_amounts(values);
    let out = mech.run(&truthful)?;
    let honest = values[0] * out.confirmed[0] - out.payments[0];
    let mut best = honest;
    for &z in &grid {
        let mut bids = truthful.clone();
        bids[0].amount = z;
        let out = mech.run(&bids)?;
        best = best.max(values[0] * out.confirmed[0] - out.payments[0]);
    }
    Ok(best - honest)
}
