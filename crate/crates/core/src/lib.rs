//! Mining under transaction-fee rewards.
//!
//! * [`chain`]: block tree with per-branch fee accounting.
//! * [`strategies`]: mining policies as pure functions of a miner's view.
//! * [`sim`]: seeded discrete-event simulator, whale random walk and the
//!   post-block profit profile.
//! * [`analytics`]: closed-form rewards, equilibria and thresholds.
//! * [`tfm`]: transaction-fee mechanisms and the Myerson payment rule.
//! * [`audit`]: brute-force incentive-compatibility audits and estimators.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod audit;
pub mod chain;
pub mod strategies;
pub mod sim;
pub mod tfm;
