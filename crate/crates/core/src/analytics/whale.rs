use serde::{Deserialize, Serialize};

use super::{check, AnalyticsError};

/// Probability that a fork behind by `z` blocks, mining with share `q`
/// against `1 − q`, ever overtakes: `min{1, q/p}^{z+1}`.
pub fn whale_overtake_prob(q: f64, z: u32) -> Result<f64, AnalyticsError> {
    check("q", q, "(0, 1)", q > 0.0 && q < 1.0)?;
    let ratio = (q / (1.0 - q)).min(1.0);
    Ok(ratio.powi(z as i32 + 1))
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhaleParams {
    /// Attacker's share χ(A).
    pub chi_a: f64,
    /// Candidate defector's share χ(X).
    pub chi_x: f64,
    /// Share of everyone except the attacker, M = 1 − χ(A).
    pub m_total: f64,
    /// Deficit of the fork.
    pub z: u32,
    /// Normalized whale fee.
    #[serde(default)]
    pub delta: f64,
}

impl WhaleParams {
    pub fn new(chi_a: f64, chi_x: f64, z: u32) -> Self {
        Self {
            chi_a,
            chi_x,
            m_total: 1.0 - chi_a,
            z,
            delta: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), AnalyticsError> {
        check("chi_a", self.chi_a, "(0, 1)", self.chi_a > 0.0 && self.chi_a < 1.0)?;
        check("chi_x", self.chi_x, "(0, 1)", self.chi_x > 0.0 && self.chi_x < 1.0)?;
        check("m_total", self.m_total, "(0, 1)", self.m_total > 0.0 && self.m_total < 1.0)?;
        check("delta", self.delta, "[0, inf)", self.delta >= 0.0)?;
        if (self.chi_a + self.m_total - 1.0).abs() > 1e-9 {
            return Err(AnalyticsError::Shares(format!(
                "chi_a + m_total = {} must be 1",
                self.chi_a + self.m_total
            )));
        }
        if self.chi_a + self.chi_x >= 1.0 || self.chi_x > self.m_total {
            return Err(AnalyticsError::Shares(format!(
                "chi_a + chi_x = {} leaves no honest power",
                self.chi_a + self.chi_x
            )));
        }
        Ok(())
    }

    /// Power on the fork once X joins.
    pub fn fork_power(&self) -> f64 {
        self.chi_a + self.chi_x
    }
}

/// Which denominator to use for the fork's opponents once X defects.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WhaleVariant {
    /// `M + χ(X)`, as in the threshold's headline inequality.
    Statement,
    /// `M − χ(X)`, the honest power actually left, as used in the derivation.
    Proof,
}

impl WhaleVariant {
    pub const ALL: [WhaleVariant; 2] = [WhaleVariant::Statement, WhaleVariant::Proof];

    pub fn name(self) -> &'static str {
        match self {
            WhaleVariant::Statement => "statement",
            WhaleVariant::Proof => "proof",
        }
    }
}

fn fork_success(params: &WhaleParams, variant: WhaleVariant) -> f64 {
    let opp = match variant {
        WhaleVariant::Statement => params.m_total + params.chi_x,
        WhaleVariant::Proof => params.m_total - params.chi_x,
    };
    (params.fork_power() / opp).min(1.0).powi(params.z as i32 + 1)
}

fn honest_success(params: &WhaleParams) -> f64 {
    1.0 - (params.chi_a / params.m_total)
        .min(1.0)
        .powi(params.z as i32 + 1)
}

/// `(E[honest], E[whale])` for X at the params' δ.
pub fn whale_expected_rewards(
    params: &WhaleParams,
    variant: WhaleVariant,
) -> Result<(f64, f64), AnalyticsError> {
    params.validate()?;
    let honest = honest_success(params) * params.chi_x / params.m_total;
    let whale = fork_success(params, variant) * params.chi_x / params.fork_power() * (1.0 + params.delta);
    Ok((honest, whale))
}

/// Smallest whale fee δ at which joining the fork pays as much as staying
/// honest (the `delta` field of `params` is ignored). May be negative when
/// joining pays even without a bribe.
pub fn whale_delta_threshold(params: &WhaleParams, variant: WhaleVariant) -> Result<f64, AnalyticsError> {
    let p = WhaleParams { delta: 0.0, ..*params };
    p.validate()?;
    Ok(honest_success(&p) / p.m_total * p.fork_power() / fork_success(&p, variant) - 1.0)
}
