use serde::{Deserialize, Serialize};

use super::{check, AnalyticsError};

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfishParams {
    pub alpha: f64,
    pub gamma: f64,
    #[serde(default)]
    pub beta: Option<f64>,
}

fn check_alpha(alpha: f64) -> Result<(), AnalyticsError> {
    check("alpha", alpha, "(0, 0.5)", alpha > 0.0 && alpha < 0.5)
}

fn check_gamma(gamma: f64) -> Result<(), AnalyticsError> {
    check("gamma", gamma, "[0, 1]", (0.0..=1.0).contains(&gamma))
}

/// Stationary distribution of the withholding miner's lead.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfishStateProbs {
    pub alpha: f64,
    /// No private blocks.
    pub p0: f64,
    /// Two public blocks racing at the top.
    pub p0_prime: f64,
    /// Private lead of one.
    pub p1: f64,
}

impl SelfishStateProbs {
    /// Ratio `p_{j+1} / p_j` for j ≥ 1.
    pub fn ratio(&self) -> f64 {
        self.alpha / (1.0 - self.alpha)
    }

    /// Probability of a private lead of `j ≥ 1`.
    pub fn pj(&self, j: u32) -> f64 {
        if j == 0 {
            return self.p0;
        }
        self.p1 * self.ratio().powi(j as i32 - 1)
    }

    /// p0 + p0' + Σ_{j≥1} p_j with the geometric tail summed in closed form.
    pub fn total(&self) -> f64 {
        self.p0 + self.p0_prime + self.p1 / (1.0 - self.ratio())
    }
}

fn denom(a: f64) -> f64 {
    2.0 * a.powi(3) - 4.0 * a * a + 1.0
}

pub fn selfish_state_probs(alpha: f64) -> Result<SelfishStateProbs, AnalyticsError> {
    check_alpha(alpha)?;
    let a = alpha;
    let d = denom(a);
    Ok(SelfishStateProbs {
        alpha,
        p0: (1.0 - 2.0 * a) / d,
        p0_prime: (1.0 - a) * (a - 2.0 * a * a) / d,
        p1: a * (1.0 - 2.0 * a) / d,
    })
}

/// Expected share of fees won by a withholding miner when every block's
/// reward is the fees accrued since its parent.
pub fn selfish_reward_fees(alpha: f64, gamma: f64) -> Result<f64, AnalyticsError> {
    check_alpha(alpha)?;
    check_gamma(gamma)?;
    let a = alpha;
    let (a2, a3, a4, a5) = (a * a, a.powi(3), a.powi(4), a.powi(5));
    let num = 5.0 * a2 - 12.0 * a3 + 9.0 * a4 - 2.0 * a5
        + gamma * (a - 4.0 * a2 + 6.0 * a3 - 5.0 * a4 + 2.0 * a5);
    Ok(num / denom(a))
}

/// The same share computed as Σ p_s·f_s over the states, truncating the
/// lead at `max_lead`.
pub fn selfish_state_sum(alpha: f64, gamma: f64, max_lead: u32) -> Result<f64, AnalyticsError> {
    check_gamma(gamma)?;
    let probs = selfish_state_probs(alpha)?;
    let a = alpha;
    let f0 = a * a + a * (1.0 - a) * (a + gamma * (1.0 - a));
    let f0p = a;
    let f1 = a + (1.0 - a) * a;
    let mut sum = probs.p0 * f0 + probs.p0_prime * f0p + probs.pj(1) * f1;
    for j in 2..=max_lead {
        let fj = 1.0 - (1.0 - a).powi(j as i32 - 1) * (1.0 - f0);
        sum += probs.pj(j) * fj;
    }
    Ok(sum)
}

/// Relative revenue of a withholding miner when every block pays a fixed
/// reward.
pub fn selfish_reward_fixed(alpha: f64, gamma: f64) -> Result<f64, AnalyticsError> {
    check_alpha(alpha)?;
    check_gamma(gamma)?;
    let a = alpha;
    let num = a * (1.0 - a).powi(2) * (4.0 * a + gamma * (1.0 - 2.0 * a)) - a.powi(3);
    Ok(num / (1.0 - a * (1.0 + (2.0 - a) * a)))
}

/// Expected share of a withholding miner that publishes any block worth more
/// than `beta` right away. `beta = ∞` is allowed.
///
/// Evaluated as
/// `[(1 + β(1−α)²(1−γ))·e^{−β} + K·(1 − e^{−β})] · α(1−2α) / D`, which equals
/// the product form once `(1 − e^{−β})/(e^β − 1) = e^{−β}` is used; this form
/// has no removable pole at β → 0 and no overflow as β → ∞.
pub fn fee_selfish_reward(alpha: f64, gamma: f64, beta: f64) -> Result<f64, AnalyticsError> {
    check_alpha(alpha)?;
    check_gamma(gamma)?;
    check("beta", beta, "(0, inf]", beta > 0.0)?;
    let a = alpha;
    let k = 5.0 * a + (1.0 - a).powi(2) * gamma + 2.0 * a * a / (1.0 - 2.0 * a) - 2.0 * a * a;
    let e = (-beta).exp();
    let em = -(-beta).exp_m1();
    let lead = if e == 0.0 {
        0.0
    } else {
        (1.0 + beta * (1.0 - a).powi(2) * (1.0 - gamma)) * e
    };
    let d = 1.0 - 2.0 * e * a - 3.0 * em * a * a;
    Ok((lead + k * em) * a * (1.0 - 2.0 * a) / d)
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalBeta {
    pub beta: f64,
    pub reward: f64,
}

/// Upper end of the threshold search interval.
pub const BETA_MAX: f64 = 50.0;

/// Threshold in (0, 50] maximizing [`fee_selfish_reward`]: a coarse scan
/// brackets the maximum, golden-section search refines it.
pub fn optimal_beta(alpha: f64, gamma: f64) -> Result<OptimalBeta, AnalyticsError> {
    check_alpha(alpha)?;
    check_gamma(gamma)?;
    let eval = |b: f64| fee_selfish_reward(alpha, gamma, b);
    const N: usize = 2000;
    let h = BETA_MAX / N as f64;
    let mut best = (h, eval(h)?);
    for i in 2..=N {
        let b = i as f64 * h;
        let r = eval(b)?;
        if r > best.1 {
            best = (b, r);
        }
    }
    let (mut lo, mut hi) = ((best.0 - h).max(1e-12), (best.0 + h).min(BETA_MAX));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (eval(x1)?, eval(x2)?);
    while hi - lo > 1e-10 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = eval(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = eval(x1)?;
        }
    }
    let mid = 0.5 * (lo + hi);
    let fm = eval(mid)?;
    let (beta, reward) = [(mid, fm), best]
        .into_iter()
        .fold((mid, fm), |acc, c| if c.1 > acc.1 { c } else { acc });
    Ok(OptimalBeta { beta, reward })
}
