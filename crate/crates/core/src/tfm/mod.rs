//! Single-block transaction-fee mechanisms.
//!
//! A mechanism is split into the miner's inclusion choice and the rules the
//! protocol applies to whatever was included (confirmation, payment, miner
//! revenue, burn). [`MechanismSpec::execute`] evaluates the latter on an
//! arbitrary inclusion set, so audits can explore dishonest inclusion;
//! [`MechanismSpec::run`] pairs it with the honest inclusion rule.
//!
//! Randomized mechanisms are evaluated in expected-outcome mode by default:
//! `confirmed` holds probabilities and `payments` expected payments.
//! [`MechanismSpec::run_sampled`] draws one realization instead.

mod mechanisms;
mod myerson;

use std::cmp::Ordering;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use mechanisms::{
    eval_burning_second_price, eval_burning_second_price_expected, eval_eip1559, eval_first_price,
    eval_monopolistic, eval_posted_price, eval_second_price, eval_tipless_eip1559,
};
pub use myerson::myerson_payment;

#[derive(Debug, Error, PartialEq)]
pub enum TfmError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    Param {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("bid {index} has invalid amount {amount}")]
    Bid { index: usize, amount: f64 },
    #[error("{included} bids included but the block holds {block_size}")]
    BlockOverflow { included: usize, block_size: usize },
    #[error("inclusion set refers to bid {index}, but only {len} bids exist")]
    UnknownBid { index: usize, len: usize },
    #[error("bid {index} is included twice")]
    DuplicateInclusion { index: usize },
    #[error("allocation is not monotone: x({lo}) = {x_lo} > x({hi}) = {x_hi}")]
    NonMonotone { lo: f64, hi: f64, x_lo: f64, x_hi: f64 },
}

fn param(name: &'static str, value: f64, reason: &'static str) -> TfmError {
    TfmError::Param { name, value, reason }
}

/// One bid. `fake` is bookkeeping for audits and is never read by a
/// mechanism.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bid {
    pub bidder: u32,
    pub amount: f64,
    #[serde(default)]
    pub fake: bool,
}

impl Bid {
    pub fn new(bidder: u32, amount: f64) -> Self {
        Self {
            bidder,
            amount,
            fake: false,
        }
    }

    pub fn fake(bidder: u32, amount: f64) -> Self {
        Self {
            bidder,
            amount,
            fake: true,
        }
    }
}

/// Truthful bids `v_i` for bidders `0..n`.
pub fn bids_from_amounts(amounts: &[f64]) -> Vec<Bid> {
    amounts
        .iter()
        .enumerate()
        .map(|(i, &a)| Bid::new(i as u32, a))
        .collect()
}

/// Orders bids by amount descending, then bidder id ascending.
pub fn rank_cmp(a: &Bid, b: &Bid) -> Ordering {
    b.amount
        .total_cmp(&a.amount)
        .then_with(|| a.bidder.cmp(&b.bidder))
}

/// Indices of `subset` sorted by [`rank_cmp`].
pub fn ranked(bids: &[Bid], subset: &[usize]) -> Vec<usize> {
    let mut idx = subset.to_vec();
    idx.sort_by(|&i, &j| rank_cmp(&bids[i], &bids[j]));
    idx
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TfmOutcome {
    pub included: Vec<bool>,
    /// Confirmation probability per bid (0/1 for deterministic rules).
    pub confirmed: Vec<f64>,
    /// Expected payment per bid.
    pub payments: Vec<f64>,
    pub miner_revenue: f64,
    pub burned: f64,
}

impl TfmOutcome {
    fn empty(n: usize) -> Self {
        Self {
            included: vec![false; n],
            confirmed: vec![0.0; n],
            payments: vec![0.0; n],
            miner_revenue: 0.0,
            burned: 0.0,
        }
    }

    pub fn total_payments(&self) -> f64 {
        self.payments.iter().sum()
    }

    pub fn included_count(&self) -> usize {
        self.included.iter().filter(|&&b| b).count()
    }

    /// Sets `burned` from the payment/revenue balance.
    fn settle(mut self) -> Self {
        self.burned = self.total_payments() - self.miner_revenue;
        self
    }

    /// Structural checks every mechanism must satisfy.
    pub fn check_invariants(&self, block_size: usize) -> Result<(), String> {
        let n = self.included.len();
        if self.confirmed.len() != n || self.payments.len() != n {
            return Err("per-bid vectors differ in length".into());
        }
        if self.included_count() > block_size {
            return Err(format!("{} included > B = {block_size}", self.included_count()));
        }
        let scale = 1.0 + self.total_payments().abs();
        for i in 0..n {
            let x = self.confirmed[i];
            if !(0.0..=1.0).contains(&x) {
                return Err(format!("bid {i}: confirmation {x} outside [0, 1]"));
            }
            if x > 0.0 && !self.included[i] {
                return Err(format!("bid {i} confirmed but not included"));
            }
            if x == 0.0 && self.payments[i] != 0.0 {
                return Err(format!("unconfirmed bid {i} pays {}", self.payments[i]));
            }
            if self.payments[i] < 0.0 {
                return Err(format!("bid {i} pays {} < 0", self.payments[i]));
            }
        }
        if self.burned < -1e-12 * scale {
            return Err(format!("burned {} < 0", self.burned));
        }
        if (self.burned + self.miner_revenue - self.total_payments()).abs() > 1e-12 * scale {
            return Err("burned + revenue != payments".into());
        }
        Ok(())
    }
}

/// A mechanism and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MechanismSpec {
    FirstPrice {
        block_size: usize,
    },
    /// Top `k` of the block confirmed, each paying the `(k+1)`-th bid.
    SecondPrice {
        block_size: usize,
        k: usize,
    },
    Monopolistic {
        block_size: usize,
    },
    PostedPrice {
        block_size: usize,
        price: f64,
    },
    Eip1559 {
        block_size: usize,
        base_fee: f64,
    },
    /// Every confirmed bid pays `base_fee + sigma`; the miner keeps `sigma`.
    TiplessEip1559 {
        block_size: usize,
        base_fee: f64,
        sigma: f64,
    },
    BurningSecondPrice {
        block_size: usize,
        k: usize,
        gamma: f64,
        c: usize,
    },
}

impl MechanismSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MechanismSpec::FirstPrice { .. } => "first-price",
            MechanismSpec::SecondPrice { .. } => "second-price",
            MechanismSpec::Monopolistic { .. } => "monopolistic",
            MechanismSpec::PostedPrice { .. } => "posted-price",
            MechanismSpec::Eip1559 { .. } => "eip1559",
            MechanismSpec::TiplessEip1559 { .. } => "tipless-eip1559",
            MechanismSpec::BurningSecondPrice { .. } => "burning-second-price",
        }
    }

    pub fn block_size(&self) -> usize {
        match *self {
            MechanismSpec::FirstPrice { block_size }
            | MechanismSpec::SecondPrice { block_size, .. }
            | MechanismSpec::Monopolistic { block_size }
            | MechanismSpec::PostedPrice { block_size, .. }
            | MechanismSpec::Eip1559 { block_size, .. }
            | MechanismSpec::TiplessEip1559 { block_size, .. }
            | MechanismSpec::BurningSecondPrice { block_size, .. } => block_size,
        }
    }

    pub fn is_randomized(&self) -> bool {
        matches!(self, MechanismSpec::BurningSecondPrice { .. })
    }

    /// The minimum amount an eligible bid must carry, where the mechanism
    /// has one: `p` for posted-price and EIP-1559, `p + σ` for tipless.
    pub fn posted_floor(&self) -> Option<f64> {
        match *self {
            MechanismSpec::PostedPrice { price, .. } => Some(price),
            MechanismSpec::Eip1559 { base_fee, .. } => Some(base_fee),
            MechanismSpec::TiplessEip1559 { base_fee, sigma, .. } => Some(base_fee + sigma),
            _ => None,
        }
    }

    /// Prices worth adding to audit grids (posted prices and base fees).
    pub fn reference_prices(&self) -> Vec<f64> {
        match *self {
            MechanismSpec::PostedPrice { price, .. } => vec![price],
            MechanismSpec::Eip1559 { base_fee, .. } => vec![base_fee],
            MechanismSpec::TiplessEip1559 { base_fee, sigma, .. } => vec![base_fee, base_fee + sigma],
            _ => Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), TfmError> {
        let b = self.block_size();
        if b == 0 {
            return Err(param("block_size", 0.0, "must be at least 1"));
        }
        let price_ok = |name, p: f64, strict: bool| {
            if !p.is_finite() || p < 0.0 || (strict && p == 0.0) {
                Err(param(name, p, if strict { "must be positive" } else { "must be nonnegative" }))
            } else {
                Ok(())
            }
        };
        match *self {
            MechanismSpec::FirstPrice { .. } | MechanismSpec::Monopolistic { .. } => Ok(()),
            MechanismSpec::SecondPrice { k, block_size } => {
                if k == 0 || k > block_size {
                    Err(param("k", k as f64, "need 1 <= k <= block_size"))
                } else {
                    Ok(())
                }
            }
            MechanismSpec::PostedPrice { price, .. } => price_ok("price", price, true),
            MechanismSpec::Eip1559 { base_fee, .. } => price_ok("base_fee", base_fee, false),
            MechanismSpec::TiplessEip1559 { base_fee, sigma, .. } => {
                price_ok("base_fee", base_fee, false)?;
                price_ok("sigma", sigma, false)
            }
            MechanismSpec::BurningSecondPrice {
                block_size,
                k,
                gamma,
                c,
            } => {
                if k == 0 || k > block_size {
                    return Err(param("k", k as f64, "need 1 <= k <= block_size"));
                }
                if !(gamma > 0.0 && gamma <= 1.0) {
                    return Err(param("gamma", gamma, "must lie in (0, 1]"));
                }
                if c == 0 {
                    return Err(param("c", 0.0, "must be at least 1"));
                }
                let m = bsp_confirm_count(k, gamma, c);
                if m == 0 {
                    return Err(param("k", k as f64, "floor(gamma * k / c) must be at least 1"));
                }
                // Keeps the burn nonnegative: m * b_{k+1} >= gamma * (b_{k+1} + ... + b_B).
                if gamma * (block_size - k) as f64 > m as f64 + 1e-12 {
                    return Err(param(
                        "block_size",
                        block_size as f64,
                        "need gamma * (block_size - k) <= floor(gamma * k / c)",
                    ));
                }
                Ok(())
            }
        }
    }

    /// The honest miner's inclusion set.
    pub fn honest_inclusion(&self, bids: &[Bid]) -> Vec<usize> {
        let all: Vec<usize> = (0..bids.len()).collect();
        let b = self.block_size();
        match *self {
            MechanismSpec::PostedPrice { price, .. } => {
                let mut eligible: Vec<usize> = all.into_iter().filter(|&i| bids[i].amount >= price).collect();
                eligible.sort_by_key(|&i| bids[i].bidder);
                eligible.truncate(b);
                eligible
            }
            MechanismSpec::Eip1559 { base_fee, .. } => {
                let eligible: Vec<usize> = all.into_iter().filter(|&i| bids[i].amount >= base_fee).collect();
                let mut r = ranked(bids, &eligible);
                r.truncate(b);
                r
            }
            // Everyone eligible pays the same, so the bid amount must not
            // decide who gets in: fill by bidder id like posted price.
            MechanismSpec::TiplessEip1559 { base_fee, sigma, .. } => {
                let floor = base_fee + sigma;
                let mut eligible: Vec<usize> = all.into_iter().filter(|&i| bids[i].amount >= floor).collect();
                eligible.sort_by_key(|&i| bids[i].bidder);
                eligible.truncate(b);
                eligible
            }
            _ => {
                let mut r = ranked(bids, &all);
                r.truncate(b);
                r
            }
        }
    }

    /// Applies the confirmation, payment and revenue rules to `included`, in
    /// expected-outcome mode for randomized mechanisms.
    pub fn execute(&self, bids: &[Bid], included: &[usize]) -> Result<TfmOutcome, TfmError> {
        self.validate()?;
        check_inclusion(bids, included, self.block_size())?;
        let out = match *self {
            MechanismSpec::FirstPrice { .. } => mechanisms::first_price(bids, included),
            MechanismSpec::SecondPrice { k, .. } => mechanisms::second_price(bids, included, k),
            MechanismSpec::Monopolistic { .. } => mechanisms::monopolistic(bids, included),
            MechanismSpec::PostedPrice { price, .. } => mechanisms::posted_price(bids, included, price),
            MechanismSpec::Eip1559 { base_fee, .. } => mechanisms::eip1559(bids, included, base_fee),
            MechanismSpec::TiplessEip1559 { base_fee, sigma, .. } => {
                mechanisms::tipless(bids, included, base_fee, sigma)
            }
            MechanismSpec::BurningSecondPrice {
                block_size,
                k,
                gamma,
                c,
            } => mechanisms::bsp(bids, included, block_size, k, gamma, c, None),
        };
        Ok(out)
    }

    /// Like [`execute`](Self::execute) but draws the random confirmation set.
    pub fn execute_sampled(
        &self,
        bids: &[Bid],
        included: &[usize],
        rng: &mut ChaCha8Rng,
    ) -> Result<TfmOutcome, TfmError> {
        match *self {
            MechanismSpec::BurningSecondPrice {
                block_size,
                k,
                gamma,
                c,
            } => {
                self.validate()?;
                check_inclusion(bids, included, block_size)?;
                Ok(mechanisms::bsp(bids, included, block_size, k, gamma, c, Some(rng)))
            }
            _ => self.execute(bids, included),
        }
    }

    /// Honest inclusion followed by [`execute`](Self::execute).
    pub fn run(&self, bids: &[Bid]) -> Result<TfmOutcome, TfmError> {
        check_bids(bids)?;
        self.execute(bids, &self.honest_inclusion(bids))
    }

    /// Honest inclusion with one seeded draw of any randomness.
    pub fn run_sampled(&self, bids: &[Bid], seed: u64) -> Result<TfmOutcome, TfmError> {
        check_bids(bids)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.execute_sampled(bids, &self.honest_inclusion(bids), &mut rng)
    }
}

/// Number of bids the burning second-price auction confirms, `⌊γk/c⌋`.
pub fn bsp_confirm_count(k: usize, gamma: f64, c: usize) -> usize {
    // The small nudge keeps e.g. 0.5 * 4 / 1 from flooring to 1.
    ((gamma * k as f64 / c as f64) + 1e-12).floor() as usize
}

pub(crate) fn check_bids(bids: &[Bid]) -> Result<(), TfmError> {
    for (index, b) in bids.iter().enumerate() {
        if !b.amount.is_finite() || b.amount < 0.0 {
            return Err(TfmError::Bid {
                index,
                amount: b.amount,
            });
        }
    }
    Ok(())
}

fn check_inclusion(bids: &[Bid], included: &[usize], block_size: usize) -> Result<(), TfmError> {
    if included.len() > block_size {
        return Err(TfmError::BlockOverflow {
            included: included.len(),
            block_size,
        });
    }
    let mut seen = vec![false; bids.len()];
    for &index in included {
        if index >= bids.len() {
            return Err(TfmError::UnknownBid { index, len: bids.len() });
        }
        if seen[index] {
            return Err(TfmError::DuplicateInclusion { index });
        }
        seen[index] = true;
        let amount = bids[index].amount;
        if !amount.is_finite() || amount < 0.0 {
            return Err(TfmError::Bid { index, amount });
        }
    }
    Ok(())
}
