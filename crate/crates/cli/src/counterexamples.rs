//! Explicit deviations that break each mechanism's incentive properties.
//!
//! Each entry fixes an instance and a concrete deviation, replays both the
//! honest and the deviating profile, and runs the corresponding audit on the
//! same instance for comparison.

use anyhow::Result;
use serde::Serialize;
use serde_json::json;

use txfee::audit::{audit_mmic, audit_oca, audit_uic, replay, Agent, AuditConfig, Notion, Witness};
use txfee::tfm::{bids_from_amounts, Bid, MechanismSpec};

use crate::output::{num, Report};

pub struct Counterexample {
    pub name: &'static str,
    pub mech: MechanismSpec,
    pub notion: Notion,
    /// Values (UIC, OCA) or bids (MMIC) of the instance.
    pub instance: Vec<f64>,
    pub honest: Witness,
    pub deviant: Witness,
    /// Gain claimed for the deviation; a lower bound where `at_least`.
    pub expected_gain: f64,
    pub at_least: bool,
    /// γ for the strict replay, with its claimed gain where one is stated.
    pub strict: Option<(f64, Option<f64>)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Replayed {
    pub name: String,
    pub mechanism: String,
    pub notion: Notion,
    pub honest: f64,
    pub deviant: f64,
    pub gain: f64,
    pub expected_gain: f64,
    pub at_least: bool,
    pub strict_gamma: Option<f64>,
    pub strict_honest: Option<f64>,
    pub strict_deviant: Option<f64>,
    pub strict_gain: Option<f64>,
    pub expected_strict_gain: Option<f64>,
    /// Largest gain the audit finds on the same instance.
    pub audit_gain: f64,
    pub audit_strict_gain: Option<f64>,
    /// Audit grid tick on this instance.
    pub tick: f64,
}

fn truthful(mech: &MechanismSpec, values: &[f64], agent: Agent, owned: Vec<usize>, with_miner: bool) -> Witness {
    let bids = bids_from_amounts(values);
    Witness {
        agent,
        included: mech.honest_inclusion(&bids),
        bids,
        values: values.to_vec(),
        owned,
        with_miner,
    }
}

/// `base` with bid `i` changed to `amount`, included honestly.
fn rebid(mech: &MechanismSpec, base: &Witness, i: usize, amount: f64) -> Witness {
    let mut w = base.clone();
    w.bids[i].amount = amount;
    w.included = mech.honest_inclusion(&w.bids);
    w
}

pub fn battery() -> Vec<Counterexample> {
    let mut out = Vec::new();

    let fp = MechanismSpec::FirstPrice { block_size: 2 };
    let v = vec![10.0, 2.0, 1.0];
    let honest = truthful(&fp, &v, Agent::User { bidder: 0 }, vec![0], false);
    out.push(Counterexample {
        name: "first-price user underbids",
        deviant: rebid(&fp, &honest, 0, 3.0),
        honest,
        mech: fp,
        notion: Notion::Uic,
        instance: v,
        expected_gain: 7.0,
        at_least: true,
        strict: None,
    });

    let sp = MechanismSpec::SecondPrice { block_size: 4, k: 3 };
    let b = vec![10.0, 9.0, 8.0, 3.0];
    let honest = truthful(&sp, &b, Agent::Miner, vec![], true);
    let mut deviant = honest.clone();
    deviant.bids.push(Bid::fake(4, 7.0));
    deviant.values.push(0.0);
    deviant.included = vec![0, 1, 2, 4];
    deviant.owned = vec![4];
    out.push(Counterexample {
        name: "second-price miner injects a fake bid",
        mech: sp.clone(),
        notion: Notion::Mmic,
        instance: b.clone(),
        honest,
        deviant,
        expected_gain: 12.0,
        at_least: false,
        strict: Some((1.0, Some(5.0))),
    });

    let cartel = Agent::Cartel { users: vec![3] };
    let honest = truthful(&sp, &b, cartel, vec![3], true);
    out.push(Counterexample {
        name: "second-price miner colludes with the lowest bidder",
        deviant: rebid(&sp, &honest, 3, 7.0),
        honest,
        mech: sp,
        notion: Notion::Oca,
        instance: b,
        expected_gain: 12.0,
        at_least: false,
        strict: Some((1.0, None)),
    });

    let mono = MechanismSpec::Monopolistic { block_size: 4 };
    let v = vec![10.0, 9.0, 7.0, 3.0];
    let honest = truthful(&mono, &v, Agent::Cartel { users: vec![2] }, vec![2], true);
    out.push(Counterexample {
        name: "monopolistic miner colludes with the price-setting bidder",
        deviant: rebid(&mono, &honest, 2, 8.0),
        honest,
        mech: mono,
        notion: Notion::Oca,
        instance: v,
        expected_gain: 2.0,
        at_least: false,
        strict: Some((1.0, Some(2.0))),
    });

    let posted = MechanismSpec::PostedPrice {
        block_size: 2,
        price: 10.0,
    };
    let v = vec![5.0, 0.0, 0.0, 0.0];
    let honest = truthful(&posted, &v, Agent::Cartel { users: vec![0] }, vec![0], true);
    out.push(Counterexample {
        name: "posted-price miner refunds a low-value user",
        deviant: rebid(&posted, &honest, 0, 10.0),
        honest,
        mech: posted,
        notion: Notion::Oca,
        instance: v,
        expected_gain: 5.0,
        at_least: false,
        strict: None,
    });

    let eip = MechanismSpec::Eip1559 {
        block_size: 3,
        base_fee: 5.0,
    };
    let v = vec![16.0, 10.0, 10.0, 10.0];
    let honest = truthful(&eip, &v, Agent::User { bidder: 0 }, vec![0], false);
    out.push(Counterexample {
        name: "eip1559 user shades in high demand",
        deviant: rebid(&eip, &honest, 0, 11.0),
        honest,
        mech: eip,
        notion: Notion::Uic,
        instance: v,
        expected_gain: 5.0,
        at_least: true,
        strict: None,
    });
    out
}

pub fn replay_one(c: &Counterexample, cfg: &AuditConfig) -> Result<Replayed> {
    let honest = replay(&c.mech, &c.honest, None)?;
    let deviant = replay(&c.mech, &c.deviant, None)?;
    let audit = |cfg: &AuditConfig| match c.notion {
        Notion::Uic => audit_uic(&c.mech, &c.instance, cfg),
        Notion::Mmic => audit_mmic(&c.mech, &c.instance, cfg),
        Notion::Oca => audit_oca(&c.mech, &c.instance, cfg),
    };
    let audit_gain = audit(cfg)?.gain;
    let (mut sh, mut sd, mut sa) = (None, None, None);
    if let Some((g, _)) = c.strict {
        sh = Some(replay(&c.mech, &c.honest, Some(g))?);
        sd = Some(replay(&c.mech, &c.deviant, Some(g))?);
        sa = Some(audit(&cfg.clone().with_gamma(g))?.gain);
    }
    Ok(Replayed {
        name: c.name.to_string(),
        mechanism: c.mech.name().to_string(),
        notion: c.notion,
        honest,
        deviant,
        gain: deviant - honest,
        expected_gain: c.expected_gain,
        at_least: c.at_least,
        strict_gamma: c.strict.map(|s| s.0),
        strict_honest: sh,
        strict_deviant: sd,
        strict_gain: sd.zip(sh).map(|(d, h)| d - h),
        expected_strict_gain: c.strict.and_then(|s| s.1),
        audit_gain,
        audit_strict_gain: sa,
        tick: cfg.tick_for(&c.instance, &c.mech),
    })
}

pub fn counterexamples(cfg: &AuditConfig) -> Result<(Vec<Replayed>, Report)> {
    let rows = battery().iter().map(|c| replay_one(c, cfg)).collect::<Result<Vec<_>>>()?;
    let mut r = Report::new(
        "counterexamples",
        None,
        serde_json::to_value(cfg)?,
        &[
            "name", "mechanism", "notion", "honest", "deviant", "gain", "expected_gain", "gamma", "strict_honest",
            "strict_deviant", "strict_gain", "audit_gain", "audit_strict_gain",
        ],
    );
    let opt = |x: Option<f64>| x.map_or(serde_json::Value::Null, num);
    for x in &rows {
        r.push(vec![
            json!(x.name),
            json!(x.mechanism),
            serde_json::to_value(x.notion)?,
            num(x.honest),
            num(x.deviant),
            num(x.gain),
            num(x.expected_gain),
            opt(x.strict_gamma),
            opt(x.strict_honest),
            opt(x.strict_deviant),
            opt(x.strict_gain),
            num(x.audit_gain),
            opt(x.audit_strict_gain),
        ]);
    }
    Ok((rows, r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_price_mmic_numbers() {
        let c = &battery()[1];
        let r = replay_one(c, &AuditConfig::default()).unwrap();
        assert_eq!((r.honest, r.deviant), (9.0, 21.0));
        assert_eq!(r.strict_deviant, Some(14.0));
    }
}
