//! Confirmation, payment and revenue rules applied to an inclusion set.
//! Callers have already validated parameters and the inclusion set.

use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;

use super::{bsp_confirm_count, ranked, Bid, MechanismSpec, TfmError, TfmOutcome};

fn amount_at(bids: &[Bid], order: &[usize], rank: usize) -> f64 {
    // Empty slots are bids of 0.
    order.get(rank).map_or(0.0, |&i| bids[i].amount)
}

fn mark_included(out: &mut TfmOutcome, included: &[usize]) {
    for &i in included {
        out.included[i] = true;
    }
}

pub(super) fn first_price(bids: &[Bid], included: &[usize]) -> TfmOutcome {
    let mut out = TfmOutcome::empty(bids.len());
    mark_included(&mut out, included);
    for &i in included {
        out.confirmed[i] = 1.0;
        out.payments[i] = bids[i].amount;
    }
    out.miner_revenue = out.total_payments();
    out.settle()
}

pub(super) fn second_price(bids: &[Bid], included: &[usize], k: usize) -> TfmOutcome {
    let mut out = TfmOutcome::empty(bids.len());
    mark_included(&mut out, included);
    let order = ranked(bids, included);
    let price = amount_at(bids, &order, k);
    for &i in order.iter().take(k) {
        out.confirmed[i] = 1.0;
        out.payments[i] = price;
    }
    out.miner_revenue = out.total_payments();
    out.settle()
}

pub(super) fn monopolistic(bids: &[Bid], included: &[usize]) -> TfmOutcome {
    let mut out = TfmOutcome::empty(bids.len());
    mark_included(&mut out, included);
    let order = ranked(bids, included);
    if order.is_empty() {
        return out;
    }
    // k* = argmax k * b_k, smallest k on ties.
    let mut best_k = 1;
    let mut best = bids[order[0]].amount;
    for k in 2..=order.len() {
        let r = k as f64 * bids[order[k - 1]].amount;
        if r > best {
            best = r;
            best_k = k;
        }
    }
    let price = bids[order[best_k - 1]].amount;
    for &i in order.iter().take(best_k) {
        out.confirmed[i] = 1.0;
        out.payments[i] = price;
    }
    out.miner_revenue = out.total_payments();
    out.settle()
}

pub(super) fn posted_price(bids: &[Bid], included: &[usize], price: f64) -> TfmOutcome {
    let mut out = TfmOutcome::empty(bids.len());
    mark_included(&mut out, included);
    for &i in included {
        if bids[i].amount >= price {
            out.confirmed[i] = 1.0;
            out.payments[i] = price;
        }
    }
    out.miner_revenue = out.total_payments();
    out.settle()
}

pub(super) fn eip1559(bids: &[Bid], included: &[usize], base_fee: f64) -> TfmOutcome {
    let mut out = TfmOutcome::empty(bids.len());
    mark_included(&mut out, included);
    let mut revenue = 0.0;
    let mut count = 0usize;
    for &i in included {
        if bids[i].amount >= base_fee {
            out.confirmed[i] = 1.0;
            out.payments[i] = bids[i].amount;
            revenue += bids[i].amount - base_fee;
            count += 1;
        }
    }
    out.miner_revenue = revenue;
    out.burned = base_fee * count as f64;
    out
}

pub(super) fn tipless(bids: &[Bid], included: &[usize], base_fee: f64, sigma: f64) -> TfmOutcome {
    let mut out = TfmOutcome::empty(bids.len());
    mark_included(&mut out, included);
    let floor = base_fee + sigma;
    let mut count = 0usize;
    for &i in included {
        if bids[i].amount >= floor {
            out.confirmed[i] = 1.0;
            out.payments[i] = floor;
            count += 1;
        }
    }
    out.miner_revenue = sigma * count as f64;
    out.burned = base_fee * count as f64;
    out
}

/// Burning second-price. With `rng = None` each of the top-`k` slots is
/// confirmed with probability `m / k`; otherwise `m` slots are drawn.
pub(super) fn bsp(
    bids: &[Bid],
    included: &[usize],
    block_size: usize,
    k: usize,
    gamma: f64,
    c: usize,
    rng: Option<&mut ChaCha8Rng>,
) -> TfmOutcome {
    let mut out = TfmOutcome::empty(bids.len());
    mark_included(&mut out, included);
    let order = ranked(bids, included);
    let m = bsp_confirm_count(k, gamma, c);
    let price = amount_at(bids, &order, k);
    // Slots beyond the included bids are zero-padded and pay nothing.
    match rng {
        None => {
            let x = m as f64 / k as f64;
            for &i in order.iter().take(k) {
                out.confirmed[i] = x;
                out.payments[i] = x * price;
            }
        }
        Some(rng) => {
            for slot in sample(rng, k, m) {
                if let Some(&i) = order.get(slot) {
                    out.confirmed[i] = 1.0;
                    out.payments[i] = price;
                }
            }
        }
    }
    out.miner_revenue = gamma * (k..block_size).map(|r| amount_at(bids, &order, r)).sum::<f64>();
    out.settle()
}

fn run_honest(spec: MechanismSpec, bids: &[Bid]) -> Result<TfmOutcome, TfmError> {
    spec.run(bids)
}

/// Top `B` included and confirmed; each pays its bid.
pub fn eval_first_price(bids: &[Bid], block_size: usize) -> Result<TfmOutcome, TfmError> {
    run_honest(MechanismSpec::FirstPrice { block_size }, bids)
}

/// Top `B` included, top `k` confirmed at the `(k+1)`-th bid.
pub fn eval_second_price(bids: &[Bid], block_size: usize, k: usize) -> Result<TfmOutcome, TfmError> {
    run_honest(MechanismSpec::SecondPrice { block_size, k }, bids)
}

/// The revenue-maximizing uniform price among the top `B` bids.
pub fn eval_monopolistic(bids: &[Bid], block_size: usize) -> Result<TfmOutcome, TfmError> {
    run_honest(MechanismSpec::Monopolistic { block_size }, bids)
}

pub fn eval_posted_price(bids: &[Bid], block_size: usize, price: f64) -> Result<TfmOutcome, TfmError> {
    run_honest(MechanismSpec::PostedPrice { block_size, price }, bids)
}

pub fn eval_eip1559(bids: &[Bid], block_size: usize, base_fee: f64) -> Result<TfmOutcome, TfmError> {
    run_honest(MechanismSpec::Eip1559 { block_size, base_fee }, bids)
}

pub fn eval_tipless_eip1559(
    bids: &[Bid],
    block_size: usize,
    base_fee: f64,
    sigma: f64,
) -> Result<TfmOutcome, TfmError> {
    run_honest(
        MechanismSpec::TiplessEip1559 {
            block_size,
            base_fee,
            sigma,
        },
        bids,
    )
}

/// One seeded draw of the burning second-price auction.
pub fn eval_burning_second_price(
    bids: &[Bid],
    block_size: usize,
    k: usize,
    gamma: f64,
    c: usize,
    seed: u64,
) -> Result<TfmOutcome, TfmError> {
    MechanismSpec::BurningSecondPrice {
        block_size,
        k,
        gamma,
        c,
    }
    .run_sampled(bids, seed)
}

/// Expected outcome of the burning second-price auction.
pub fn eval_burning_second_price_expected(
    bids: &[Bid],
    block_size: usize,
    k: usize,
    gamma: f64,
    c: usize,
) -> Result<TfmOutcome, TfmError> {
    run_honest(
        MechanismSpec::BurningSecondPrice {
            block_size,
            k,
            gamma,
            c,
        },
        bids,
    )
}
