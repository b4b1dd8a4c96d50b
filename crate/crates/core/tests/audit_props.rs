use proptest::prelude::*;
use txfee::audit::{audit_mmic, audit_oca, audit_uic, replay, AuditConfig, DeviationReport, Notion};
use txfee::tfm::MechanismSpec;

fn mechanism() -> impl Strategy<Value = MechanismSpec> {
    (1usize..=3, 0u8..=8, 0.0f64..1.0, 0.1f64..=1.0, 0usize..7).prop_filter_map(
        "valid parameters",
        |(b, p, sigma, gamma, which)| {
            let p = p as f64;
            let m = match which {
                0 => MechanismSpec::FirstPrice { block_size: b },
                1 => MechanismSpec::SecondPrice { block_size: b, k: b.saturating_sub(1).max(1) },
                2 => MechanismSpec::Monopolistic { block_size: b },
                3 => MechanismSpec::PostedPrice { block_size: b, price: p },
                4 => MechanismSpec::Eip1559 { block_size: b, base_fee: p },
                5 => MechanismSpec::TiplessEip1559 { block_size: b, base_fee: p, sigma },
                _ => MechanismSpec::BurningSecondPrice { block_size: b + 1, k: b, gamma, c: 1 },
            };
            m.validate().ok().map(|_| m)
        },
    )
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0u8..=12).prop_map(f64::from), 1..=4)
}

fn cfg() -> AuditConfig {
    AuditConfig {
        grid_ticks: 4,
        ..AuditConfig::default()
    }
}

fn audit(mech: &MechanismSpec, v: &[f64], notion: Notion, cfg: &AuditConfig) -> DeviationReport {
    match notion {
        Notion::Uic => audit_uic(mech, v, cfg),
        Notion::Mmic => audit_mmic(mech, v, cfg),
        Notion::Oca => audit_oca(mech, v, cfg),
    }
    .unwrap()
}

fn notion() -> impl Strategy<Value = Notion> {
    prop_oneof![Just(Notion::Uic), Just(Notion::Mmic), Just(Notion::Oca)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn witnesses_replay_exactly(mech in mechanism(), v in values(), n in notion(), strict in any::<bool>()) {
        let c = if strict { cfg().with_gamma(0.5) } else { cfg() };
        let r = audit(&mech, &v, n, &c);
        let u = replay(&mech, &r.witness, c.gamma).unwrap();
        prop_assert_eq!(u.to_bits(), r.best_utility.to_bits());
        prop_assert!(r.gain >= 0.0);
        prop_assert!((r.best_utility - r.honest_utility - r.gain).abs() <= 1e-12 * r.best_utility.abs().max(1.0)
            || r.gain == 0.0);
    }

    /// Penalties only subtract, and scale linearly with γ.
    #[test]
    fn strict_utility_nonincreasing_in_gamma(mech in mechanism(), v in values(), n in notion()) {
        let r = audit(&mech, &v, n, &cfg());
        let mut prev = replay(&mech, &r.witness, None).unwrap();
        for g in [0.1, 0.25, 0.5, 0.75, 1.0] {
            let u = replay(&mech, &r.witness, Some(g)).unwrap();
            prop_assert!(u <= prev + 1e-12, "γ={g}: {u} > {prev}");
            prev = u;
        }
    }

    #[test]
    fn plain_ic_implies_weak_ic(mech in mechanism(), v in values(), n in notion()) {
        let plain = audit(&mech, &v, n, &cfg());
        if !plain.violated() {
            for g in [0.25, 0.5, 1.0] {
                let strict = audit(&mech, &v, n, &cfg().with_gamma(g));
                prop_assert!(!strict.violated(), "γ={g}: gain {}", strict.gain);
            }
        }
    }
}
