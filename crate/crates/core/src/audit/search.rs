//! Brute-force deviation searches for UIC, MMIC and OCA-proofness.

use crate::tfm::{bids_from_amounts, Bid, MechanismSpec};

use super::{profile_utility, Agent, AuditConfig, AuditError, DeviationReport, Notion, Witness};

/// Largest real-bid count `audit_mmic` will enumerate subsets of.
pub const MAX_MMIC_BIDS: usize = 12;
/// Largest user count `audit_oca` accepts.
pub const MAX_OCA_USERS: usize = 8;

fn check_amounts(what: &'static str, amounts: &[f64]) -> Result<(), AuditError> {
    if amounts.iter().any(|&a| !a.is_finite() || a < 0.0) {
        return Err(AuditError::Config(format!("{what} must be finite and nonnegative")));
    }
    Ok(())
}

/// Multisets of at most `budget` grid points, as nondecreasing index lists.
fn fake_sets(grid: &[f64], budget: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..budget {
        let mut next = Vec::new();
        for set in &frontier {
            let start = set.last().copied().unwrap_or(0);
            for j in start..grid.len() {
                let mut s = set.clone();
                s.push(j);
                out.push(s.iter().map(|&k| grid[k]).collect());
                next.push(s);
            }
        }
        frontier = next;
    }
    out
}

fn combinations(n: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, size, &mut Vec::new(), &mut out);
    out
}

/// Subsets of `0..n` with at most `max` elements, as bitmasks.
fn small_subsets(n: usize, max: usize) -> Vec<u32> {
    (0u32..(1u32 << n))
        .filter(|m| m.count_ones() as usize <= max)
        .collect()
}

fn mask_to_indices(mask: u32, extra: std::ops::Range<usize>) -> Vec<usize> {
    let mut v: Vec<usize> = (0..32).filter(|&i| mask & (1 << i) != 0).collect();
    v.extend(extra);
    v
}

fn with_fakes(base: &[Bid], base_values: &[f64], fakes: &[f64]) -> (Vec<Bid>, Vec<f64>) {
    let first_id = base.iter().map(|b| b.bidder).max().map_or(0, |m| m + 1);
    let mut bids = base.to_vec();
    let mut values = base_values.to_vec();
    for (j, &f) in fakes.iter().enumerate() {
        bids.push(Bid::fake(first_id + j as u32, f));
        values.push(0.0);
    }
    (bids, values)
}

/// Tracks the best profile seen for one agent.
struct Best {
    honest: f64,
    utility: f64,
    witness: Witness,
}

impl Best {
    fn offer(&mut self, u: f64, make: impl FnOnce() -> Witness) {
        if u > self.utility {
            self.utility = u;
            self.witness = make();
        }
    }

    fn gain(&self) -> f64 {
        (self.utility - self.honest).max(0.0)
    }
}

fn finish(
    notion: Notion,
    config: &AuditConfig,
    tolerance: f64,
    best: Best,
    evaluated: u64,
) -> DeviationReport {
    DeviationReport {
        notion,
        gamma: config.gamma,
        honest_utility: best.honest,
        best_utility: best.utility,
        gain: best.gain(),
        tolerance,
        witness: best.witness,
        evaluated,
    }
}

/// UIC audit: each user in turn deviates (bid from the grid plus up to
/// `fake_budget` fakes) while everyone else bids truthfully and the miner is
/// honest.
pub fn audit_uic(mech: &MechanismSpec, values: &[f64], config: &AuditConfig) -> Result<DeviationReport, AuditError> {
    audit_uic_profile(mech, values, values, config)
}

/// UIC-style audit around an arbitrary bid profile: is `profile` a Nash
/// equilibrium among users with the given values?
pub fn audit_uic_profile(
    mech: &MechanismSpec,
    values: &[f64],
    profile: &[f64],
    config: &AuditConfig,
) -> Result<DeviationReport, AuditError> {
    config.validate()?;
    mech.validate()?;
    check_amounts("values", values)?;
    check_amounts("profile", profile)?;
    if values.len() != profile.len() {
        return Err(AuditError::Config("values and profile differ in length".into()));
    }
    if values.is_empty() {
        return Err(AuditError::Config("at least one user is required".into()));
    }
    let amounts: Vec<f64> = values.iter().chain(profile).copied().collect();
    let grid = config.grid_for(&amounts, mech);
    let tolerance = config.tolerance_for(&amounts, mech);
    let fakes = fake_sets(&grid, config.fake_budget);
    let base = bids_from_amounts(profile);
    let n = values.len();
    let mut evaluated = 0u64;
    let mut overall: Option<Best> = None;

    for i in 0..n {
        let mut owned = vec![false; n];
        owned[i] = true;
        let included = mech.honest_inclusion(&base);
        let honest = profile_utility(mech, &base, values, &included, &owned, false, config.gamma)?;
        evaluated += 1;
        let mut best = Best {
            honest,
            utility: honest,
            witness: Witness {
                agent: Agent::User { bidder: i as u32 },
                bids: base.clone(),
                values: values.to_vec(),
                included,
                owned: vec![i],
                with_miner: false,
            },
        };
        for &z in &grid {
            let mut dev = base.clone();
            dev[i].amount = z;
            for set in &fakes {
                let (bids, vals) = with_fakes(&dev, values, set);
                let mut own = owned.clone();
                own.resize(bids.len(), true);
                let included = mech.honest_inclusion(&bids);
                let u = profile_utility(mech, &bids, &vals, &included, &own, false, config.gamma)?;
                evaluated += 1;
                best.offer(u, || Witness {
                    agent: Agent::User { bidder: i as u32 },
                    owned: (0..bids.len()).filter(|&j| own[j]).collect(),
                    bids,
                    values: vals,
                    included,
                    with_miner: false,
                });
            }
        }
        if overall.as_ref().is_none_or(|o| best.gain() > o.gain()) {
            overall = Some(best);
        }
    }
    Ok(finish(Notion::Uic, config, tolerance, overall.expect("n >= 1"), evaluated))
}

/// MMIC audit: the miner picks any inclusion set of at most `B` bids and may
/// add up to `fake_budget` fake bids from the grid.
pub fn audit_mmic(mech: &MechanismSpec, bids: &[f64], config: &AuditConfig) -> Result<DeviationReport, AuditError> {
    config.validate()?;
    mech.validate()?;
    check_amounts("bids", bids)?;
    if bids.len() > MAX_MMIC_BIDS {
        return Err(AuditError::TooLarge {
            what: "real bids",
            n: bids.len(),
            max: MAX_MMIC_BIDS,
        });
    }
    let grid = config.grid_for(bids, mech);
    let tolerance = config.tolerance_for(bids, mech);
    let reals = bids_from_amounts(bids);
    // Real values do not enter the miner's utility.
    let zeros = vec![0.0; bids.len()];
    let mut best = honest_joint(mech, &reals, &zeros, &[], Agent::Miner, config.gamma)?;
    let evaluated = search_joint(mech, &reals, &zeros, &[], &grid, config, &mut best, Agent::Miner)?;
    Ok(finish(Notion::Mmic, config, tolerance, best, evaluated + 1))
}

/// OCA audit: the miner plus every coalition of up to `cartel_size` users,
/// jointly choosing the coalition's bids, fakes and the inclusion set.
pub fn audit_oca(mech: &MechanismSpec, values: &[f64], config: &AuditConfig) -> Result<DeviationReport, AuditError> {
    config.validate()?;
    mech.validate()?;
    check_amounts("values", values)?;
    let n = values.len();
    if n > MAX_OCA_USERS {
        return Err(AuditError::TooLarge {
            what: "users",
            n,
            max: MAX_OCA_USERS,
        });
    }
    if config.cartel_size > n {
        return Err(AuditError::Config(format!(
            "cartel_size {} exceeds the {n} users",
            config.cartel_size
        )));
    }
    let grid = config.grid_for(values, mech);
    let tolerance = config.tolerance_for(values, mech);
    let reals = bids_from_amounts(values);
    let mut evaluated = 0u64;
    let mut overall: Option<Best> = None;
    for size in 0..=config.cartel_size {
        for cartel in combinations(n, size) {
            let agent = Agent::Cartel {
                users: cartel.iter().map(|&i| i as u32).collect(),
            };
            let mut best = honest_joint(mech, &reals, values, &cartel, agent.clone(), config.gamma)?;
            evaluated += 1;
            // Odometer over the cartel's bids.
            let mut digits = vec![0usize; size];
            loop {
                let mut dev = reals.clone();
                for (d, &u) in cartel.iter().enumerate() {
                    dev[u].amount = grid[digits[d]];
                }
                evaluated += search_joint(mech, &dev, values, &cartel, &grid, config, &mut best, agent.clone())?;
                let mut pos = 0;
                while pos < size {
                    digits[pos] += 1;
                    if digits[pos] < grid.len() {
                        break;
                    }
                    digits[pos] = 0;
                    pos += 1;
                }
                if pos == size {
                    break;
                }
            }
            if overall.as_ref().is_none_or(|o| best.gain() > o.gain()) {
                overall = Some(best);
            }
        }
    }
    Ok(finish(Notion::Oca, config, tolerance, overall.expect("empty cartel"), evaluated))
}

fn honest_joint(
    mech: &MechanismSpec,
    reals: &[Bid],
    values: &[f64],
    cartel: &[usize],
    agent: Agent,
    gamma: Option<f64>,
) -> Result<Best, AuditError> {
    let mut owned = vec![false; reals.len()];
    for &u in cartel {
        owned[u] = true;
    }
    let included = mech.honest_inclusion(reals);
    let honest = profile_utility(mech, reals, values, &included, &owned, true, gamma)?;
    Ok(Best {
        honest,
        utility: honest,
        witness: Witness {
            agent,
            bids: reals.to_vec(),
            values: values.to_vec(),
            included,
            owned: cartel.to_vec(),
            with_miner: true,
        },
    })
}

/// Fakes × inclusion subsets for a miner-led coalition with fixed real bids.
#[allow(clippy::too_many_arguments)]
fn search_joint(
    mech: &MechanismSpec,
    reals: &[Bid],
    values: &[f64],
    cartel: &[usize],
    grid: &[f64],
    config: &AuditConfig,
    best: &mut Best,
    agent: Agent,
) -> Result<u64, AuditError> {
    let n = reals.len();
    let block = mech.block_size();
    let mut evaluated = 0u64;
    let mut owned = vec![false; n];
    for &u in cartel {
        owned[u] = true;
    }
    for set in fake_sets(grid, config.fake_budget.min(block)) {
        let f = set.len();
        let (bids, vals) = with_fakes(reals, values, &set);
        let mut own = owned.clone();
        own.resize(n + f, true);
        // Fakes left out of the block change nothing, so they are always in.
        for mask in small_subsets(n, block - f) {
            let included = mask_to_indices(mask, n..n + f);
            let u = profile_utility(mech, &bids, &vals, &included, &own, true, config.gamma)?;
            evaluated += 1;
            best.offer(u, || Witness {
                agent: agent.clone(),
                bids: bids.clone(),
                values: vals.clone(),
                included,
                owned: (0..n + f).filter(|&j| own[j]).collect(),
                with_miner: true,
            });
        }
    }
    Ok(evaluated)
}
