//! The mechanism-by-property comparison matrix.
//!
//! Every cell is computed from audits on a fixed instance battery. A cell
//! fails when any instance yields a gain above tolerance. Three refined
//! statuses come from extra evidence rather than from a plain audit:
//!
//! * `nearly`: UIC fails, but the monopolistic discount payoff shrinks with
//!   the number of users (fitted log-log slope at most [`DECAY_SLOPE`]);
//! * `weak`: the γ-strict audit at the mechanism's own γ finds nothing;
//! * `uic-like`: in low demand, bidding `min(base, v)` (base = the posted
//!   floor) is an equilibrium, so users never need to think strategically.

use std::fmt;

use anyhow::Result;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use txfee::audit::{
    audit_mmic, audit_oca, audit_uic, audit_uic_profile, estimate_nearly_ic, AuditConfig, DeviationReport,
    NearlyKind, NearlyMode, Notion, ValueDist,
};
use txfee::tfm::MechanismSpec;

use crate::output::Report;

/// Steepest acceptable fitted log-log slope for a `nearly` cell.
pub const DECAY_SLOPE: f64 = -0.3;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Nearly,
    Weak,
    UicLike,
    Error,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Nearly => "nearly",
            Status::Weak => "weak",
            Status::UicLike => "uic-like",
            Status::Error => "error",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cell {
    pub status: Status,
    pub detail: String,
}

/// How the UIC cell of a row is decided.
#[derive(Copy, Clone, Debug, PartialEq)]
enum UicRule {
    Plain,
    /// Fall back to the decay test when the plain audit fails.
    Nearly,
    /// Equilibrium check of `min(floor, v)` bidding.
    BaseBidding,
}

struct Row {
    label: &'static str,
    mech: MechanismSpec,
    instances: Vec<Vec<f64>>,
    uic: UicRule,
    /// Published pattern, for the `matches` column only.
    expected: [Status; 3],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct Table1Options {
    pub decay_sizes: Vec<usize>,
    pub decay_trials: usize,
    pub seed: u64,
    pub audit: AuditConfig,
}

impl Default for Table1Options {
    fn default() -> Self {
        Self {
            decay_sizes: vec![16, 64, 256],
            decay_trials: 500,
            seed: 1,
            audit: AuditConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Table1Row {
    pub mechanism: String,
    pub cells: [Cell; 3],
    pub expected: [Status; 3],
}

impl Table1Row {
    pub fn matches(&self) -> bool {
        self.cells.iter().zip(&self.expected).all(|(c, e)| c.status == *e)
    }
}

fn battery() -> Vec<Row> {
    use MechanismSpec::*;
    use Status::*;
    let b1 = vec![10.0, 9.0, 8.0, 3.0];
    let c = vec![10.0, 9.0, 7.0, 3.0];
    let h = vec![6.0, 4.0, 2.0, 1.0];
    let g = vec![7.0, 7.0, 3.0];
    let e = vec![16.0, 10.0, 10.0, 10.0];
    let high = vec![12.0, 9.0, 8.0, 7.0, 2.0];
    let low = vec![vec![8.0, 6.0, 2.0], vec![9.0, 3.0, 1.0, 0.0], vec![12.0, 5.0, 4.0]];
    vec![
        Row {
            label: "first-price",
            mech: FirstPrice { block_size: 2 },
            instances: vec![vec![10.0, 2.0, 1.0], b1.clone(), g.clone(), h.clone()],
            uic: UicRule::Plain,
            expected: [Fail, Pass, Pass],
        },
        Row {
            label: "second-price",
            mech: SecondPrice { block_size: 4, k: 3 },
            instances: vec![b1.clone(), c.clone(), h.clone(), g.clone()],
            uic: UicRule::Plain,
            expected: [Pass, Fail, Fail],
        },
        Row {
            label: "monopolistic",
            mech: Monopolistic { block_size: 4 },
            instances: vec![vec![10.0, 3.0], c.clone(), b1.clone(), h],
            uic: UicRule::Nearly,
            expected: [Nearly, Pass, Fail],
        },
        Row {
            label: "posted-price",
            mech: PostedPrice {
                block_size: 2,
                price: 10.0,
            },
            instances: vec![vec![5.0, 0.0, 0.0, 0.0], vec![12.0, 11.0, 3.0], vec![10.0; 3], vec![15.0, 2.0]],
            uic: UicRule::Plain,
            expected: [Pass, Pass, Fail],
        },
        Row {
            label: "eip1559 (low demand)",
            mech: Eip1559 {
                block_size: 3,
                base_fee: 5.0,
            },
            instances: low.clone(),
            uic: UicRule::BaseBidding,
            expected: [UicLike, Pass, Pass],
        },
        Row {
            label: "eip1559 (high demand)",
            mech: Eip1559 {
                block_size: 3,
                base_fee: 5.0,
            },
            instances: vec![e.clone(), high.clone()],
            uic: UicRule::Plain,
            expected: [Fail, Pass, Pass],
        },
        Row {
            label: "tipless-eip1559 (low demand)",
            mech: TiplessEip1559 {
                block_size: 3,
                base_fee: 5.0,
                sigma: 0.5,
            },
            instances: low,
            uic: UicRule::BaseBidding,
            expected: [UicLike, Pass, Pass],
        },
        Row {
            label: "tipless-eip1559 (high demand)",
            mech: TiplessEip1559 {
                block_size: 3,
                base_fee: 5.0,
                sigma: 0.5,
            },
            instances: vec![e, high],
            uic: UicRule::Plain,
            expected: [Pass, Pass, Fail],
        },
        Row {
            label: "burning-second-price",
            mech: BurningSecondPrice {
                block_size: 5,
                k: 4,
                gamma: 0.5,
                c: 1,
            },
            instances: vec![
                b1,
                c,
                vec![12.0, 7.0, 7.0, 4.0, 1.0],
                vec![9.0, 8.0, 6.0, 6.0, 2.0],
                vec![5.0, 5.0, 5.0],
            ],
            uic: UicRule::Plain,
            expected: [Weak, Weak, Weak],
        },
    ]
}

fn fmt_values(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    format!("({})", parts.join(","))
}

/// Largest-gain report over the battery, with the instance it came from.
fn worst(
    mech: &MechanismSpec,
    instances: &[Vec<f64>],
    notion: Notion,
    cfg: &AuditConfig,
) -> Result<(DeviationReport, Vec<f64>)> {
    let mut best: Option<(DeviationReport, Vec<f64>)> = None;
    for inst in instances {
        let rep = match notion {
            Notion::Uic => audit_uic(mech, inst, cfg)?,
            Notion::Mmic => audit_mmic(mech, inst, cfg)?,
            Notion::Oca => audit_oca(mech, inst, cfg)?,
        };
        if best.as_ref().is_none_or(|(b, _)| rep.gain > b.gain) {
            best = Some((rep, inst.clone()));
        }
    }
    best.ok_or_else(|| anyhow::anyhow!("empty battery"))
}

fn describe(rep: &DeviationReport, inst: &[f64]) -> String {
    if rep.violated() {
        format!("gain {} on {}", rep.gain, fmt_values(inst))
    } else {
        "no profitable deviation".to_string()
    }
}

/// Least-squares slope of `ln y` against `ln n`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Monopolistic discount payoff under Uniform[0, 1] for each size, with an
/// unbounded block (block size = number of users).
pub fn monopolistic_decay(sizes: &[usize], trials: usize, seed: u64) -> Result<Vec<(usize, f64)>> {
    sizes
        .iter()
        .map(|&n| {
            let mech = MechanismSpec::Monopolistic { block_size: n };
            let est = estimate_nearly_ic(
                &mech,
                ValueDist::Uniform { lo: 0.0, hi: 1.0 },
                n,
                trials,
                NearlyMode::Avg,
                NearlyKind::Discount,
                seed,
            )?;
            Ok((n, est.mean))
        })
        .collect()
}

fn uic_cell(row: &Row, opts: &Table1Options) -> Result<Cell> {
    let (plain, inst) = worst(&row.mech, &row.instances, Notion::Uic, &opts.audit)?;
    match row.uic {
        UicRule::Plain => Ok(plain_cell(&plain, &inst)),
        UicRule::Nearly => {
            if !plain.violated() {
                return Ok(plain_cell(&plain, &inst));
            }
            let decay = monopolistic_decay(&opts.decay_sizes, opts.decay_trials, opts.seed)?;
            let pts: Vec<(f64, f64)> = decay.iter().map(|&(n, d)| (n as f64, d)).collect();
            let nonincreasing = pts.windows(2).all(|w| w[1].1 <= w[0].1);
            let slope = log_log_slope(&pts);
            let status = if nonincreasing && slope <= DECAY_SLOPE {
                Status::Nearly
            } else {
                Status::Fail
            };
            Ok(Cell {
                status,
                detail: format!("plain {}; discount decay slope {slope:.3}", describe(&plain, &inst)),
            })
        }
        UicRule::BaseBidding => {
            let base = row
                .mech
                .posted_floor()
                .ok_or_else(|| anyhow::anyhow!("{} has no posted floor", row.mech.name()))?;
            let mut ok = true;
            for inst in &row.instances {
                let profile: Vec<f64> = inst.iter().map(|&v| v.min(base)).collect();
                if audit_uic_profile(&row.mech, inst, &profile, &opts.audit)?.violated() {
                    ok = false;
                }
            }
            Ok(Cell {
                status: if ok { Status::UicLike } else { Status::Fail },
                detail: format!("bidding min(v, {base}) is an equilibrium: {ok}; plain {}", describe(&plain, &inst)),
            })
        }
    }
}

fn plain_cell(rep: &DeviationReport, inst: &[f64]) -> Cell {
    Cell {
        status: if rep.violated() { Status::Fail } else { Status::Pass },
        detail: describe(rep, inst),
    }
}

/// γ-strict audit at the mechanism's γ; `weak` if clean.
fn weak_cell(row: &Row, notion: Notion, gamma: f64, opts: &Table1Options) -> Result<Cell> {
    let (plain, pinst) = worst(&row.mech, &row.instances, notion, &opts.audit)?;
    let strict_cfg = opts.audit.clone().with_gamma(gamma);
    let (strict, sinst) = worst(&row.mech, &row.instances, notion, &strict_cfg)?;
    Ok(Cell {
        status: if strict.violated() { Status::Fail } else { Status::Weak },
        detail: format!("{gamma}-strict {}; plain {}", describe(&strict, &sinst), describe(&plain, &pinst)),
    })
}

fn compute_cell(row: &Row, notion: Notion, opts: &Table1Options) -> Result<Cell> {
    if let MechanismSpec::BurningSecondPrice { gamma, .. } = row.mech {
        return weak_cell(row, notion, gamma, opts);
    }
    match notion {
        Notion::Uic => uic_cell(row, opts),
        n => {
            let (rep, inst) = worst(&row.mech, &row.instances, n, &opts.audit)?;
            Ok(plain_cell(&rep, &inst))
        }
    }
}

pub fn table1_rows(opts: &Table1Options) -> Vec<Table1Row> {
    battery()
        .into_iter()
        .map(|row| {
            let cells = [Notion::Uic, Notion::Mmic, Notion::Oca].map(|n| {
                compute_cell(&row, n, opts).unwrap_or_else(|e| Cell {
                    status: Status::Error,
                    detail: format!("{e:#}"),
                })
            });
            Table1Row {
                mechanism: row.label.to_string(),
                cells,
                expected: row.expected,
            }
        })
        .collect()
}

pub fn table1(opts: &Table1Options) -> Result<Report> {
    let rows = table1_rows(opts);
    let mut r = Report::new(
        "table1",
        Some(opts.seed),
        serde_json::to_value(opts)?,
        &[
            "mechanism", "uic", "mmic", "oca", "expected_uic", "expected_mmic", "expected_oca", "matches",
            "uic_detail", "mmic_detail", "oca_detail",
        ],
    );
    for row in &rows {
        let mut v: Vec<Value> = vec![json!(row.mechanism)];
        v.extend(row.cells.iter().map(|c| json!(c.status.to_string())));
        v.extend(row.expected.iter().map(|s| json!(s.to_string())));
        v.push(json!(row.matches()));
        v.extend(row.cells.iter().map(|c| json!(c.detail)));
        r.push(v);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [16.0, 64.0, 256.0].iter().map(|&n: &f64| (n, 3.0 * n.powf(-0.5))).collect();
        assert!((log_log_slope(&pts) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn status_names() {
        assert_eq!(Status::UicLike.to_string(), "uic-like");
        assert_eq!(serde_json::to_value(Status::UicLike).unwrap(), "uic-like");
    }

    #[test]
    fn failing_mechanism_yields_error_cells() {
        let row = Row {
            label: "broken",
            mech: MechanismSpec::SecondPrice { block_size: 2, k: 3 },
            instances: vec![vec![3.0, 1.0]],
            uic: UicRule::Plain,
            expected: [Status::Pass; 3],
        };
        for n in [Notion::Uic, Notion::Mmic, Notion::Oca] {
            assert!(compute_cell(&row, n, &Table1Options::default()).is_err());
        }
    }

    #[test]
    fn low_demand_rows_really_are_low_demand() {
        for row in battery() {
            let Some(p) = row.mech.posted_floor() else { continue };
            let b = row.mech.block_size();
            for inst in &row.instances {
                let above = inst.iter().filter(|&&v| v > p).count();
                if row.label.contains("low") {
                    assert!(above < b, "{} {inst:?}", row.label);
                } else if row.label.contains("high") {
                    assert!(above > b, "{} {inst:?}", row.label);
                }
            }
        }
    }
}
