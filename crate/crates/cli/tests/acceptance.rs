//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Tolerances are fixed here, next to each check.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use txfee::analytics::{
    equilibrium_f, equilibrium_middle_branch, equilibrium_upper_break, fee_selfish_reward, lambert_w0,
    optimal_beta, selfish_reward_fees, selfish_reward_fixed, WhaleParams,
};
use txfee::audit::{
    audit_mmic, audit_oca, audit_uic, estimate_nearly_ic, AuditConfig, NearlyKind, NearlyMode, ValueDist,
};
use txfee::sim::{adjudicate_whale_variant, estimate_selfish_reward, run_sim, run_whale_walk, selfish_config};
use txfee::tfm::{bids_from_amounts, MechanismSpec};
use txfee_cli::counterexamples::counterexamples;
use txfee_cli::reproduce::{
    mining_gap, reproduce, ReproName, ReproOptions, GAP_BINS, WHALE_POINTS, WHALE_REL_TOL,
};
use txfee_cli::scenario::{scenario_reports, Scenario};
use txfee_cli::table1::{log_log_slope, monopolistic_decay, table1_rows, Table1Options};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c1_selfish_mc() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    let mut bad = Vec::new();
    for (i, &a) in [0.1, 0.2, 1.0 / 3.0, 0.4].iter().enumerate() {
        for (j, &g) in [0.0, 0.5, 1.0].iter().enumerate() {
            let t = Instant::now();
            let mc = estimate_selfish_reward(a, g, None, 200_000, 1_000 + (3 * i + j) as u64).map_err(|e| e.to_string())?;
            slowest = slowest.max(t.elapsed());
            let exact = selfish_reward_fees(a, g).map_err(|e| e.to_string())?;
            let err = (mc - exact).abs();
            worst = worst.max(err);
            if err > 0.01 {
                bad.push(format!("({a:.3},{g}): mc {mc:.4} vs {exact:.4}"));
            }
        }
    }
    check(
        bad.is_empty() && slowest < Duration::from_secs(60),
        format!("max |mc − closed form| = {worst:.4} (tol 0.01), slowest cell {slowest:.2?} {bad:?}"),
    )
}

fn c2_fee_selfish() -> Outcome {
    let alpha = 1.0 / 3.0;
    let mut qualifying = Vec::new();
    let mut report = Vec::new();
    for i in 0..=10 {
        let g = i as f64 / 10.0;
        let o = optimal_beta(alpha, g).map_err(|e| e.to_string())?;
        let direct = fee_selfish_reward(alpha, g, o.beta).map_err(|e| e.to_string())?;
        let gain = direct / alpha - 1.0;
        report.push(format!("γ={g}: {direct:.4} ({:+.1}%)", 100.0 * gain));
        if (0.36..=0.40).contains(&direct) && gain >= 0.12 {
            qualifying.push((g, o.beta, direct));
        }
    }
    let Some(&(g, beta, r)) = qualifying.first() else {
        return Err(format!("no γ qualifies: {}", report.join(", ")));
    };
    let mc = estimate_selfish_reward(alpha, g, Some(beta), 200_000, 2_024).map_err(|e| e.to_string())?;
    check(
        (mc - r).abs() <= 0.015,
        format!(
            "γ ∈ {:?} qualify; at γ={g}, β={beta:.3}: closed form {r:.4} ({:+.1}%), MC {mc:.4} (tol 0.015)",
            qualifying.iter().map(|q| q.0).collect::<Vec<_>>(),
            100.0 * (r / alpha - 1.0)
        ),
    )
}

fn c3_regimes() -> Outcome {
    let diff = |a: f64, g: f64| -> Result<f64, String> {
        Ok(selfish_reward_fees(a, g).map_err(|e| e.to_string())? - selfish_reward_fixed(a, g).map_err(|e| e.to_string())?)
    };
    let mut points = 0;
    let mut worst = (f64::INFINITY, 0.0, 0.0);
    for i in 1..=9 {
        let a = 0.05 * i as f64;
        for j in 0..=11 {
            let g = 0.05 * j as f64;
            let d = diff(a, g)?;
            if d < worst.0 {
                worst = (d, a, g);
            }
            points += 1;
        }
    }
    // Where the ordering first flips, scanning γ upward in steps of 1e-4.
    let mut flip = (f64::INFINITY, 0.0);
    for i in 1..100 {
        let a = 0.005 * i as f64;
        if let Some(k) = (0..=10_000).find(|&k| diff(a, k as f64 * 1e-4).map(|d| d < 0.0).unwrap_or(false)) {
            if (k as f64 * 1e-4) < flip.0 {
                flip = (k as f64 * 1e-4, a);
            }
        }
    }
    let third = selfish_reward_fixed(1.0 / 3.0, 0.0).map_err(|e| e.to_string())?;
    check(
        worst.0 >= 0.0 && (third - 1.0 / 3.0).abs() <= 1e-12,
        format!(
            "min(fees − fixed) = {:.3e} at (α, γ) = ({:.2}, {:.2}) over {points} points with γ ≤ 0.55; \
             ordering first flips at γ = {:.4} (α = {:.3}); fixed(1/3, 0) − 1/3 = {:.1e}",
            worst.0,
            worst.1,
            worst.2,
            flip.0,
            flip.1,
            third - 1.0 / 3.0
        ),
    )
}

fn c4_whale() -> Outcome {
    let mut worst_z: f64 = 0.0;
    let mut zs = Vec::new();
    let mut bad = Vec::new();
    let mut seed = 4_000;
    for q in [0.2, 0.3, 0.45] {
        for z in [0u32, 1, 2, 4] {
            seed += 1;
            let w = run_whale_walk(q, z, 100_000, seed).map_err(|e| e.to_string())?;
            let exact = (q / (1.0 - q)).min(1.0).powi(z as i32 + 1);
            zs.push((w.frequency - exact) / w.std_error);
            let zscore = (w.frequency - exact).abs() / w.std_error;
            worst_z = worst_z.max(zscore);
            if zscore > 2.0 {
                bad.push(format!("q={q} z={z}: {:.5} vs {exact:.5} ({zscore:.2} SE)", w.frequency));
            }
        }
    }
    let mut picks = Vec::new();
    for (i, &(a, x, z)) in WHALE_POINTS.iter().enumerate() {
        let r = adjudicate_whale_variant(&WhaleParams::new(a, x, z), 100_000, 77 + 2 * i as u64, WHALE_REL_TOL)
            .map_err(|e| e.to_string())?;
        picks.push(r.consistent);
    }
    let unique = picks.iter().all(|p| p.len() == 1) && picks.windows(2).all(|w| w[0] == w[1]);
    check(
        bad.is_empty() && unique,
        format!(
            "walk max deviation {worst_z:.2} SE (tol 2) {bad:?}, Σz² = {:.1} over {} cells; \
             consistent variants per point {:?}",
            zs.iter().map(|z| z * z).sum::<f64>(),
            zs.len(),
            picks.iter().map(|p| p.iter().map(|v| v.name()).collect::<Vec<_>>()).collect::<Vec<_>>()
        ),
    )
}

fn c5_counterexamples() -> Outcome {
    let (rows, _) = counterexamples(&AuditConfig::default()).map_err(|e| e.to_string())?;
    let find = |name: &str| rows.iter().find(|r| r.name.starts_with(name)).ok_or(format!("missing {name}"));
    let mut fails = Vec::new();
    let mut notes = Vec::new();

    let fp = find("first-price")?;
    if !(fp.gain >= 7.0 - fp.tick && fp.audit_gain >= 7.0 - fp.tick) {
        fails.push(format!("first-price gain {} / audit {}", fp.gain, fp.audit_gain));
    }
    notes.push(format!("first-price {}", fp.gain));

    let sp = find("second-price miner injects")?;
    if !(sp.gain == 12.0 && sp.strict_gain == Some(5.0) && sp.audit_gain >= 12.0 && sp.audit_strict_gain >= Some(5.0)) {
        fails.push(format!("second-price {} / {:?}", sp.gain, sp.strict_gain));
    }
    notes.push(format!("second-price {} plain, {} 1-strict", sp.gain, sp.strict_gain.unwrap_or(f64::NAN)));

    let mono = find("monopolistic")?;
    if !(mono.gain == 2.0 && mono.audit_gain >= 2.0) {
        fails.push(format!("monopolistic {}", mono.gain));
    }
    notes.push(format!("monopolistic {}", mono.gain));

    let posted = find("posted-price")?;
    if !(posted.gain == 5.0 && posted.audit_gain >= 5.0) {
        fails.push(format!("posted-price {}", posted.gain));
    }
    notes.push(format!("posted-price {}", posted.gain));

    let eip = find("eip1559")?;
    if !(eip.gain >= 5.0 - eip.tick && eip.audit_gain >= 5.0 - eip.tick) {
        fails.push(format!("eip1559 {}", eip.gain));
    }
    notes.push(format!("eip1559 {}", eip.gain));
    check(fails.is_empty(), format!("replayed gains: {} {fails:?}", notes.join(", ")))
}

fn c6_table1() -> Outcome {
    let t = Instant::now();
    let rows = table1_rows(&Table1Options::default());
    let elapsed = t.elapsed();
    let mismatched: Vec<String> = rows
        .iter()
        .filter(|r| !r.matches())
        .map(|r| format!("{}: {:?}", r.mechanism, r.cells.iter().map(|c| c.status.to_string()).collect::<Vec<_>>()))
        .collect();
    check(
        rows.len() == 9 && mismatched.is_empty() && elapsed < Duration::from_secs(300),
        format!("{}/9 rows match in {elapsed:.2?} {mismatched:?}", rows.len() - mismatched.len()),
    )
}

fn c7_decay() -> Outcome {
    let decay = monopolistic_decay(&[16, 64, 256, 1024], 2_000, 7).map_err(|e| e.to_string())?;
    let pts: Vec<(f64, f64)> = decay.iter().map(|&(n, d)| (n as f64, d)).collect();
    let monotone = pts.windows(2).all(|w| w[1].1 <= w[0].1);
    let slope = log_log_slope(&pts);
    check(
        monotone && slope <= -0.3,
        format!(
            "Δ_n = {} ; slope {slope:.3} (≤ −0.3), monotone {monotone}",
            decay.iter().map(|(n, d)| format!("{n}:{d:.4}")).collect::<Vec<_>>().join(" ")
        ),
    )
}

/// Fixed fixture set: for each parameter set, instances drawn from a seeded
/// generator with 2–6 users and integer values in [0, 10].
fn bsp_fixtures() -> Vec<(MechanismSpec, Vec<f64>)> {
    let params: [(usize, usize, f64, usize, usize); 6] = [
        (3, 2, 1.0, 1, 6),
        (4, 2, 1.0, 1, 6),
        (4, 3, 0.5, 1, 6),
        (5, 4, 0.5, 1, 6),
        (5, 3, 1.0 / 3.0, 1, 6),
        (6, 4, 1.0, 2, 5),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut out = Vec::new();
    for (b, k, gamma, c, max_users) in params {
        let mech = MechanismSpec::BurningSecondPrice {
            block_size: b,
            k,
            gamma,
            c,
        };
        mech.validate().expect("fixture parameters are valid");
        for _ in 0..9 {
            let n = rng.random_range(2..=max_users);
            let values: Vec<f64> = (0..n).map(|_| rng.random_range(0..=10) as f64).collect();
            out.push((mech.clone(), values));
        }
    }
    out
}

fn c8_bsp_weak() -> Outcome {
    let fixtures = bsp_fixtures();
    let mut bad = Vec::new();
    let mut plain_violations = 0;
    for (mech, values) in &fixtures {
        let MechanismSpec::BurningSecondPrice { gamma, c, .. } = *mech else { unreachable!() };
        let cfg = AuditConfig {
            cartel_size: c,
            ..AuditConfig::default()
        }
        .with_gamma(gamma);
        let reports = [
            audit_uic(mech, values, &cfg),
            audit_mmic(mech, values, &cfg),
            audit_oca(mech, values, &cfg),
        ];
        for (name, r) in ["uic", "mmic", "oca"].iter().zip(reports) {
            let r = r.map_err(|e| e.to_string())?;
            if r.violated() {
                bad.push(format!("{name} {values:?} {mech:?}: gain {}", r.gain));
            }
        }
        let plain = AuditConfig {
            cartel_size: c,
            ..AuditConfig::default()
        };
        if audit_oca(mech, values, &plain).map_err(|e| e.to_string())?.violated() {
            plain_violations += 1;
        }
    }
    check(
        fixtures.len() >= 50 && bad.is_empty(),
        format!(
            "{} instances, γ-strict violations {} {bad:?} (plain OCA violated on {plain_violations})",
            fixtures.len(),
            bad.len()
        ),
    )
}

fn c9_numerics() -> Outcome {
    let lo = -1.0 / std::f64::consts::E;
    let mut worst: f64 = 0.0;
    for i in 0..10_000 {
        // Half the points on [−1/e, 1], half log-spaced up to 1e12.
        let x = if i < 5_000 {
            lo + (1.0 - lo) * i as f64 / 4_999.0
        } else {
            10f64.powf(12.0 * (i - 5_000) as f64 / 4_999.0)
        };
        let w = lambert_w0(x).map_err(|e| e.to_string())?;
        worst = worst.max((w * w.exp() - x).abs() / x.abs().max(1.0));
    }
    let mut cont: f64 = 0.0;
    let mut monotone = true;
    for g in [0.1, 0.15, 0.2] {
        let upper = equilibrium_upper_break(g).map_err(|e| e.to_string())?;
        cont = cont.max((equilibrium_middle_branch(g, g).map_err(|e| e.to_string())? - g).abs());
        cont = cont.max((equilibrium_middle_branch(upper, g).map_err(|e| e.to_string())? - 1.0).abs());
        let mut prev = f64::NEG_INFINITY;
        for i in 0..10_000 {
            let x = 1.2 * upper * i as f64 / 9_999.0;
            let f = equilibrium_f(x, g).map_err(|e| e.to_string())?;
            monotone &= f >= prev;
            prev = f;
        }
    }
    check(
        worst <= 1e-12 && cont <= 1e-9 && monotone,
        format!("W₀ worst relative residual {worst:.2e} (≤1e−12); breakpoint gap {cont:.2e} (≤1e−9); monotone {monotone}"),
    )
}

fn c10_mining_gap() -> Outcome {
    let opts = ReproOptions {
        blocks: 20_000,
        seed: 10,
        ..ReproOptions::default()
    };
    let r = mining_gap(&opts).map_err(|e| e.to_string())?;
    let get = |i: usize, c: &str| r.get(i, c).and_then(|v| v.as_f64()).unwrap_or(f64::NAN);
    let crossover = get(0, "crossover");
    let width = get(0, "t_hi") - get(0, "t_lo");
    let first_positive = (0..GAP_BINS).find(|&i| get(i, "net_rate") > 0.0);
    let Some(i) = first_positive else {
        return Err("no positive bin".into());
    };
    let t = get(i, "t_lo");
    check(
        get(0, "net_rate") < 0.0 && i > 0 && (t - crossover).abs() <= width,
        format!(
            "first bin net {:.3}; first positive bin starts at {t:.2}, t* = {crossover:.2}, bin width {width:.2}",
            get(0, "net_rate")
        ),
    )
}

fn c11_determinism() -> Outcome {
    let mut checked = Vec::new();
    let mut diffs = Vec::new();
    let mut twice = |name: &str, f: &dyn Fn() -> String| {
        if f() != f() {
            diffs.push(name.to_string());
        }
        checked.push(name.to_string());
    };
    twice("run_sim", &|| format!("{:?}", run_sim(&selfish_config(0.3, 0.5, Some(2.0), 20_000, 3)).unwrap()));
    twice("estimate_selfish_reward", &|| {
        estimate_selfish_reward(0.25, 1.0, None, 10_000, 5).unwrap().to_bits().to_string()
    });
    twice("run_whale_walk", &|| format!("{:?}", run_whale_walk(0.4, 3, 20_000, 9).unwrap()));
    twice("adjudicate_whale_variant", &|| {
        format!("{:?}", adjudicate_whale_variant(&WhaleParams::new(0.3, 0.1, 2), 20_000, 9, 0.05).unwrap())
    });
    twice("estimate_nearly_ic", &|| {
        let m = MechanismSpec::Monopolistic { block_size: 32 };
        let e = estimate_nearly_ic(&m, ValueDist::Exponential { mean: 1.0 }, 32, 300, NearlyMode::Max, NearlyKind::Discount, 4);
        format!("{:?}", e.unwrap())
    });
    twice("run_sampled", &|| {
        let m = MechanismSpec::BurningSecondPrice {
            block_size: 5,
            k: 4,
            gamma: 0.5,
            c: 1,
        };
        let bids = bids_from_amounts(&[9.0, 8.0, 6.0, 6.0, 2.0]);
        format!("{:?}", (0..200).map(|s| m.run_sampled(&bids, s).unwrap()).collect::<Vec<_>>())
    });
    let small = ReproOptions {
        blocks: 10_000,
        trials: 10_000,
        seed: 12,
        table1: Table1Options {
            decay_trials: 200,
            ..Table1Options::default()
        },
        ..ReproOptions::default()
    };
    for name in [
        ReproName::Table1,
        ReproName::SelfishCurve,
        ReproName::FeeSelfishCurve,
        ReproName::WhaleThreshold,
        ReproName::MiningGap,
        ReproName::Counterexamples,
        ReproName::UndercutEquilibrium,
    ] {
        twice(&format!("reproduce {name:?}"), &|| {
            reproduce(name, &small)
                .unwrap()
                .iter()
                .map(|r| r.to_csv().unwrap())
                .collect::<String>()
        });
    }
    let scenario: Scenario = serde_json::from_str(
        r#"{"name": "s", "kind": "sim", "seed": 21, "params": {
            "miners": [{"strategy": {"kind": "lazy_fork"}, "hash_share": 0.4},
                       {"strategy": {"kind": "honest"}, "hash_share": 0.6}],
            "fee_rate": 3, "fee_value": {"kind": "exponential", "mean": 0.3},
            "horizon": {"kind": "main_chain_blocks", "blocks": 5000}}}"#,
    )
    .unwrap();
    twice("scenario sim", &|| {
        scenario_reports(&scenario, None)
            .unwrap()
            .iter()
            .map(|r| r.to_csv().unwrap())
            .collect::<String>()
    });
    check(diffs.is_empty(), format!("{} seeded entry points bit-identical across two runs {diffs:?}", checked.len()))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("selfish-mining closed form vs Monte Carlo", c1_selfish_mc),
        ("fee-selfish headline", c2_fee_selfish),
        ("regime comparison", c3_regimes),
        ("whale attack", c4_whale),
        ("counterexample battery", c5_counterexamples),
        ("table 1 reproduction", c6_table1),
        ("nearly-UIC decay", c7_decay),
        ("burning second-price weak IC", c8_bsp_weak),
        ("numerics", c9_numerics),
        ("mining gap", c10_mining_gap),
        ("determinism", c11_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (tag, msg) = match f() {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failed += 1;
                ("FAIL", m)
            }
        };
        println!("[{tag}] {:>2}. {name}: {msg} ({:.1?})", i + 1, t.elapsed());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
