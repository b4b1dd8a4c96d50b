//! Closed-form results: Lambert W₀, the undercutting equilibrium schedule,
//! selfish-mining rewards and the whale-fee threshold.
//!
//! Domains are enforced strictly; evaluating outside them is an error.

mod equilibrium;
mod lambert;
mod selfish;
mod whale;

use thiserror::Error;

pub use equilibrium::{equilibrium_f, equilibrium_middle_branch, equilibrium_upper_break};
pub use lambert::lambert_w0;
pub use selfish::{
    fee_selfish_reward, optimal_beta, selfish_reward_fees, selfish_reward_fixed, selfish_state_probs,
    selfish_state_sum, OptimalBeta, SelfishParams, SelfishStateProbs,
};
pub use whale::{
    whale_delta_threshold, whale_expected_rewards, whale_overtake_prob, WhaleParams, WhaleVariant,
};

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("{name} = {value} is outside {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("equilibrium schedule needs gamma <= 1/2 and 2*gamma - ln(gamma) >= 2, got gamma = {0}")]
    EquilibriumGamma(f64),
    #[error("degenerate shares: {0}")]
    Shares(String),
}

pub(crate) fn check(
    name: &'static str,
    value: f64,
    domain: &'static str,
    ok: bool,
) -> Result<(), AnalyticsError> {
    if ok && !value.is_nan() {
        Ok(())
    } else {
        Err(AnalyticsError::Domain { name, value, domain })
    }
}
