//! Incentive-compatibility audits.
//!
//! Deviations are searched by brute force over a finite bid grid, so a clean
//! audit certifies the instance relative to that grid only. Every report
//! carries a witness that [`replay`] re-evaluates to the reported utility.
//!
//! Utilities follow the usual conventions: a user gets `v·x − p`, the miner
//! its revenue, fake bids have value 0 and their payments come out of their
//! injector's pocket. In γ-strict mode each included-but-unconfirmed bid owned
//! by the deviator adds `γ·min(u_i, 0)`, where `u_i = v_i − b_i` is what the
//! bid would be worth if it were confirmed later at its own amount.

mod costly;
mod nearly;
mod search;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tfm::{Bid, MechanismSpec, TfmError};

pub use costly::{alpha_costly_margin, CostlyScenario, Injector};
pub use nearly::{
    discount_ratio, estimate_nearly_ic, min_confirming_bid, Estimate, NearlyKind, NearlyMode, ValueDist,
};
pub use search::{audit_mmic, audit_oca, audit_uic, audit_uic_profile, MAX_MMIC_BIDS, MAX_OCA_USERS};

#[derive(Debug, Error, PartialEq)]
pub enum AuditError {
    #[error(transparent)]
    Tfm(#[from] TfmError),
    #[error("gamma = {0} is outside (0, 1]")]
    Gamma(f64),
    #[error("invalid audit config: {0}")]
    Config(String),
    #[error("{what}: {n} exceeds the enumeration limit {max}")]
    TooLarge { what: &'static str, n: usize, max: usize },
    #[error("no scenario confirms a fake bid")]
    NoConfirmedFake,
    #[error("assumption violated: {0}")]
    Assumption(String),
    #[error("unsupported value distribution: {0}")]
    Distribution(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AuditConfig {
    /// Extra candidate bids, on top of the automatic grid.
    pub bid_grid: Vec<f64>,
    /// Number of evenly spaced steps of the base grid over `[0, max]`.
    pub grid_ticks: usize,
    pub fake_budget: usize,
    pub cartel_size: usize,
    /// γ for strict utility; `None` audits plain utility.
    pub gamma: Option<f64>,
    /// Gains at or below this count as zero. Default `1e-9 · max value`.
    pub tolerance: Option<f64>,
    /// Offset added around every value, bid and price. Default `1e-3 · max`.
    pub tick: Option<f64>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            bid_grid: Vec::new(),
            grid_ticks: 10,
            fake_budget: 1,
            cartel_size: 1,
            gamma: None,
            tolerance: None,
            tick: None,
        }
    }
}

impl AuditConfig {
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn validate(&self) -> Result<(), AuditError> {
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g <= 1.0) {
                return Err(AuditError::Gamma(g));
            }
        }
        if self.bid_grid.iter().any(|&b| !b.is_finite() || b < 0.0) {
            return Err(AuditError::Config("bid_grid entries must be finite and nonnegative".into()));
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0 && t.is_finite()) {
                return Err(AuditError::Config(format!("tolerance must be positive, got {t}")));
            }
        }
        if let Some(t) = self.tick {
            if !(t > 0.0 && t.is_finite()) {
                return Err(AuditError::Config(format!("tick must be positive, got {t}")));
            }
        }
        Ok(())
    }

    fn scale(amounts: &[f64], mech: &MechanismSpec) -> f64 {
        amounts
            .iter()
            .copied()
            .chain(mech.reference_prices())
            .fold(0.0, f64::max)
    }

    pub fn tick_for(&self, amounts: &[f64], mech: &MechanismSpec) -> f64 {
        self.tick.unwrap_or_else(|| {
            let s = Self::scale(amounts, mech);
            if s > 0.0 {
                1e-3 * s
            } else {
                1e-3
            }
        })
    }

    pub fn tolerance_for(&self, amounts: &[f64], mech: &MechanismSpec) -> f64 {
        self.tolerance.unwrap_or_else(|| {
            let s = Self::scale(amounts, mech);
            1e-9 * s.max(1.0)
        })
    }

    /// The candidate bids: base grid, configured extras, every amount and
    /// reference price, and each of those one tick either side.
    pub fn grid_for(&self, amounts: &[f64], mech: &MechanismSpec) -> Vec<f64> {
        let tick = self.tick_for(amounts, mech);
        let top = Self::scale(amounts, mech);
        let mut pts = vec![0.0];
        if top > 0.0 && self.grid_ticks > 0 {
            for j in 1..=self.grid_ticks {
                pts.push(top * j as f64 / self.grid_ticks as f64);
            }
        }
        pts.extend(self.bid_grid.iter().copied());
        for a in amounts.iter().copied().chain(mech.reference_prices()) {
            pts.push(a);
            pts.push(a + tick);
            if a - tick >= 0.0 {
                pts.push(a - tick);
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Notion {
    Uic,
    Mmic,
    Oca,
}

/// Who deviates in a witness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Agent {
    User { bidder: u32 },
    Miner,
    Cartel { users: Vec<u32> },
}

/// A complete strategy profile, replayable through [`replay`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub agent: Agent,
    pub bids: Vec<Bid>,
    /// True value behind each bid (0 for fakes).
    pub values: Vec<f64>,
    /// The inclusion set the miner used.
    pub included: Vec<usize>,
    /// Bids whose utility accrues to the agent.
    pub owned: Vec<usize>,
    /// Whether miner revenue accrues to the agent.
    pub with_miner: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub notion: Notion,
    pub gamma: Option<f64>,
    pub honest_utility: f64,
    pub best_utility: f64,
    /// `best − honest`, clamped at 0.
    pub gain: f64,
    pub tolerance: f64,
    /// The best deviation found (the honest profile when nothing beats it).
    pub witness: Witness,
    /// Number of profiles evaluated.
    pub evaluated: u64,
}

impl DeviationReport {
    /// Whether the audit found a deviation gaining more than the tolerance.
    pub fn violated(&self) -> bool {
        self.gain > self.tolerance
    }
}

/// `u + γ·Σ min(u_i, 0)` over the would-be utilities of unconfirmed bids.
pub fn gamma_strict_utility(base_utility: f64, would_be: &[f64], gamma: f64) -> Result<f64, AuditError> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(AuditError::Gamma(gamma));
    }
    Ok(base_utility + gamma * would_be.iter().map(|&u| u.min(0.0)).sum::<f64>())
}

/// Utility of the agent in `witness`, under γ-strict accounting if `gamma`
/// is set.
pub fn replay(mech: &MechanismSpec, witness: &Witness, gamma: Option<f64>) -> Result<f64, AuditError> {
    let mut owned = vec![false; witness.bids.len()];
    for &i in &witness.owned {
        if i >= owned.len() {
            return Err(AuditError::Config(format!("owned bid {i} out of range")));
        }
        owned[i] = true;
    }
    if witness.values.len() != witness.bids.len() {
        return Err(AuditError::Config("values and bids differ in length".into()));
    }
    profile_utility(
        mech,
        &witness.bids,
        &witness.values,
        &witness.included,
        &owned,
        witness.with_miner,
        gamma,
    )
}

/// Shared by the searches and [`replay`], so reported utilities replay
/// bit-exactly.
pub(crate) fn profile_utility(
    mech: &MechanismSpec,
    bids: &[Bid],
    values: &[f64],
    included: &[usize],
    owned: &[bool],
    with_miner: bool,
    gamma: Option<f64>,
) -> Result<f64, AuditError> {
    let out = mech.execute(bids, included)?;
    let mut u = if with_miner { out.miner_revenue } else { 0.0 };
    let mut would_be = Vec::new();
    for i in 0..bids.len() {
        if !owned[i] {
            continue;
        }
        let x = out.confirmed[i];
        u += values[i] * x - out.payments[i];
        if out.included[i] && x < 1.0 {
            would_be.push((1.0 - x) * (values[i] - bids[i].amount));
        }
    }
    match gamma {
        Some(g) => gamma_strict_utility(u, &would_be, g),
        None => Ok(u),
    }
}
