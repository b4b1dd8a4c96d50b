//! α-costliness of fake bids: how much a confirmed fake costs its injector.

use serde::{Deserialize, Serialize};

use crate::tfm::{bids_from_amounts, Bid, MechanismSpec};

use super::AuditError;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Injector {
    Miner,
    User { index: usize },
}

/// Truthful users plus one fake bid injected by `injector`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostlyScenario {
    pub values: Vec<f64>,
    pub fake: f64,
    pub injector: Injector,
}

fn injector_utility(
    mech: &MechanismSpec,
    bids: &[Bid],
    values: &[f64],
    injector: Injector,
) -> Result<(f64, f64), AuditError> {
    let out = mech.run(bids)?;
    let mut u = match injector {
        Injector::Miner => out.miner_revenue,
        Injector::User { index } => values[index] * out.confirmed[index] - out.payments[index],
    };
    // Any bid past the real ones is the injector's fake.
    let n = values.len();
    let mut fake_x = 0.0;
    if bids.len() > n {
        u -= out.payments[n];
        fake_x = out.confirmed[n];
    }
    Ok((u, fake_x))
}

/// Smallest utility loss per confirmed fake bid over the scenarios in which
/// the fake is confirmed (with positive probability).
pub fn alpha_costly_margin(mech: &MechanismSpec, scenarios: &[CostlyScenario]) -> Result<f64, AuditError> {
    let mut margin: Option<f64> = None;
    for s in scenarios {
        if let Injector::User { index } = s.injector {
            if index >= s.values.len() {
                return Err(AuditError::Config(format!("injector index {index} out of range")));
            }
        }
        let honest = bids_from_amounts(&s.values);
        let (u0, _) = injector_utility(mech, &honest, &s.values, s.injector)?;
        let mut with_fake = honest;
        with_fake.push(Bid::fake(s.values.len() as u32, s.fake));
        let (u1, x) = injector_utility(mech, &with_fake, &s.values, s.injector)?;
        if x <= 0.0 {
            continue;
        }
        let loss = (u0 - u1) / x;
        margin = Some(margin.map_or(loss, |m: f64| m.min(loss)));
    }
    margin.ok_or(AuditError::NoConfirmedFake)
}
