//! Mining policies.
//!
//! Every policy is a pure function of a miner's view of the tree, the fee
//! pool and its parameters. It names the block to mine on, how much of the
//! available fees to claim on success, and which of the miner's own
//! unannounced blocks to announce right now.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{equilibrium_f, AnalyticsError};
use crate::chain::{best_tips, BlockId, ChainError, ClaimRule, FeePool, MinerView};

#[derive(Debug, Error, PartialEq)]
pub enum StrategyError {
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error("hash share {0} must lie in (0, 1)")]
    InvalidChi(f64),
    #[error("fork function is not monotone nondecreasing: {0}")]
    NonMonotone(String),
    #[error("selfish threshold must be positive, got {0}")]
    InvalidBeta(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyAction {
    pub mine_target: BlockId,
    pub claim: ClaimRule,
    pub publish_now: Vec<BlockId>,
}

/// Quantities an undercutting policy compares when choosing between the top
/// of the chain and the level below it.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForkDecisionInputs {
    /// ℛ of the best block at the top height.
    pub r_top: f64,
    /// ℛ of the best block one level below.
    pub r_below: f64,
    /// `r_below - r_top`.
    pub delta: f64,
    pub owns_top: bool,
}

impl ForkDecisionInputs {
    pub fn new(r_top: f64, r_below: f64, owns_top: bool) -> Self {
        Self {
            r_top,
            r_below,
            delta: r_below - r_top,
            owns_top,
        }
    }
}

/// Monotone map from available fees to the amount a fork-aware miner takes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForkFunction {
    Identity,
    Linear { k: f64 },
    /// The equilibrium family parameterized by `gamma`.
    Equilibrium { gamma: f64 },
    /// Piecewise-linear interpolation through `points`, flat beyond the ends.
    Piecewise { points: Vec<(f64, f64)> },
}

impl ForkFunction {
    /// Checks monotonicity (and the parameter domain for the equilibrium
    /// family).
    pub fn validate(&self) -> Result<(), StrategyError> {
        match self {
            ForkFunction::Identity => Ok(()),
            ForkFunction::Linear { k } => {
                if k.is_finite() && *k >= 0.0 {
                    Ok(())
                } else {
                    Err(StrategyError::NonMonotone(format!("slope {k} is negative")))
                }
            }
            ForkFunction::Equilibrium { gamma } => equilibrium_f(0.0, *gamma).map(|_| ()).map_err(Into::into),
            ForkFunction::Piecewise { points } => {
                if points.is_empty() {
                    return Err(StrategyError::NonMonotone("no points".into()));
                }
                for w in points.windows(2) {
                    let ((x0, y0), (x1, y1)) = (w[0], w[1]);
                    if !(x1 > x0) {
                        return Err(StrategyError::NonMonotone(format!(
                            "abscissae {x0} and {x1} are not increasing"
                        )));
                    }
                    if y1 < y0 {
                        return Err(StrategyError::NonMonotone(format!(
                            "f({x1}) = {y1} < f({x0}) = {y0}"
                        )));
                    }
                }
                if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
                    return Err(StrategyError::NonMonotone("non-finite point".into()));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64, StrategyError> {
        Ok(match self {
            ForkFunction::Identity => x,
            ForkFunction::Linear { k } => k * x,
            ForkFunction::Equilibrium { gamma } => equilibrium_f(x.max(0.0), *gamma)?,
            ForkFunction::Piecewise { points } => {
                let first = points[0];
                let last = points[points.len() - 1];
                if x <= first.0 {
                    first.1
                } else if x >= last.0 {
                    last.1
                } else {
                    let i = points.partition_point(|p| p.0 <= x);
                    let (x0, y0) = points[i - 1];
                    let (x1, y1) = points[i];
                    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
                }
            }
        })
    }
}

/// A mining policy with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Strategy {
    Honest,
    PettyCompliant,
    LazyFork,
    FunctionFork { f: ForkFunction },
    FeeSnipe { chi: f64 },
    /// Withholding miner; `beta = None` never publishes early on fee value.
    Selfish {
        #[serde(default)]
        beta: Option<f64>,
    },
}

impl Strategy {
    pub fn validate(&self) -> Result<(), StrategyError> {
        match self {
            Strategy::FunctionFork { f } => f.validate(),
            Strategy::FeeSnipe { chi } => check_chi(*chi),
            Strategy::Selfish { beta: Some(b) } if !(*b > 0.0) => Err(StrategyError::InvalidBeta(*b)),
            _ => Ok(()),
        }
    }

    pub fn decide(&self, view: &MinerView<'_>, pool: &FeePool) -> Result<StrategyAction, StrategyError> {
        match self {
            Strategy::Honest => decide_honest(view, pool),
            Strategy::PettyCompliant => decide_petty_compliant(view, pool),
            Strategy::LazyFork => decide_lazy_fork(view, pool),
            Strategy::FunctionFork { f } => decide_function_fork(view, pool, f),
            Strategy::FeeSnipe { chi } => decide_fee_snipe(view, pool, *chi),
            Strategy::Selfish { beta } => decide_selfish(view, pool, *beta),
        }
    }

    /// Whether honest-style race splitting applies to this miner.
    pub fn is_honest(&self) -> bool {
        matches!(self, Strategy::Honest)
    }
}

fn check_chi(chi: f64) -> Result<(), StrategyError> {
    if chi > 0.0 && chi < 1.0 {
        Ok(())
    } else {
        Err(StrategyError::InvalidChi(chi))
    }
}

fn publish_all(view: &MinerView<'_>) -> Vec<BlockId> {
    view.own_unpublished()
}

/// Mine on the first-heard tip of the longest chain, take everything,
/// announce at once.
pub fn decide_honest(view: &MinerView<'_>, _pool: &FeePool) -> Result<StrategyAction, StrategyError> {
    let target = best_tips(view)[0];
    Ok(StrategyAction {
        mine_target: target,
        claim: ClaimRule::All,
        publish_now: publish_all(view),
    })
}

/// Block at `height` with the most remaining fees; ties go to the
/// first-heard block.
fn richest_at(view: &MinerView<'_>, pool: &FeePool, height: u64) -> Result<(BlockId, f64), StrategyError> {
    let mut best: Option<(BlockId, f64)> = None;
    for id in view.at_height(height) {
        let r = view.remaining(pool, id)?;
        if best.is_none_or(|(_, b)| r > b) {
            best = Some((id, r));
        }
    }
    // Genesis is always known, and every known height has a known block.
    Ok(best.unwrap_or((view.tree.genesis(), 0.0)))
}

/// Block at `height` that itself claimed the most fees; ties go to the
/// first-heard block.
fn fattest_at(view: &MinerView<'_>, height: u64) -> Result<BlockId, StrategyError> {
    let mut best: Option<(BlockId, f64)> = None;
    for id in view.at_height(height) {
        let t = view.tree.get(id)?.claimed_value;
        if best.is_none_or(|(_, b)| t > b) {
            best = Some((id, t));
        }
    }
    Ok(best.map(|b| b.0).unwrap_or(view.tree.genesis()))
}

/// Like honest, but a tie at the top goes to the block leaving the most fees.
pub fn decide_petty_compliant(view: &MinerView<'_>, pool: &FeePool) -> Result<StrategyAction, StrategyError> {
    let (target, _) = richest_at(view, pool, view.max_height())?;
    Ok(StrategyAction {
        mine_target: target,
        claim: ClaimRule::All,
        publish_now: publish_all(view),
    })
}

/// The two candidate targets and the inputs the undercutting rules compare.
/// `None` when only genesis is known.
pub fn fork_inputs(
    view: &MinerView<'_>,
    pool: &FeePool,
) -> Result<Option<(BlockId, BlockId, ForkDecisionInputs)>, StrategyError> {
    let h = view.max_height();
    if h == 0 {
        return Ok(None);
    }
    let (top, r_top) = richest_at(view, pool, h)?;
    let (below, r_below) = richest_at(view, pool, h - 1)?;
    Ok(Some((top, below, ForkDecisionInputs::new(r_top, r_below, view.owns(top)))))
}

/// Forks one level down when the fees it could take there exceed what the
/// top leaves; claims half of what is available either way.
pub fn decide_lazy_fork(view: &MinerView<'_>, pool: &FeePool) -> Result<StrategyAction, StrategyError> {
    let target = match fork_inputs(view, pool)? {
        None => view.tree.genesis(),
        Some((top, below, inp)) => {
            if lazy_fork_extends(&inp) {
                top
            } else {
                below
            }
        }
    };
    Ok(StrategyAction {
        mine_target: target,
        claim: ClaimRule::Fraction(0.5),
        publish_now: publish_all(view),
    })
}

/// LazyFork's rule: extend if the miner owns the top or ℛ(top) ≥ Δ.
pub fn lazy_fork_extends(inp: &ForkDecisionInputs) -> bool {
    inp.owns_top || inp.r_top >= inp.delta
}

/// Outcome of the FunctionFork rule: whether to extend, and the amount to take.
pub fn function_fork_rule(inp: &ForkDecisionInputs, f: &ForkFunction) -> Result<(bool, f64), StrategyError> {
    let v_cont = f.eval(inp.r_top)?;
    let v_und = f.eval(inp.r_below)?.min(inp.delta);
    if inp.owns_top || v_cont >= v_und {
        Ok((true, v_cont))
    } else {
        Ok((false, v_und))
    }
}

/// Undercutting with a claim schedule `f`: compare f(ℛ(top)) against
/// min{f(ℛ(below)), Δ} and take the winning value.
pub fn decide_function_fork(
    view: &MinerView<'_>,
    pool: &FeePool,
    f: &ForkFunction,
) -> Result<StrategyAction, StrategyError> {
    f.validate()?;
    let (target, amount, available) = match fork_inputs(view, pool)? {
        None => {
            let g = view.tree.genesis();
            let r = view.remaining(pool, g)?;
            (g, f.eval(r)?, r)
        }
        Some((top, below, inp)) => {
            let (extend, amount) = function_fork_rule(&inp, f)?;
            if extend {
                (top, amount, inp.r_top)
            } else {
                (below, amount, inp.r_below)
            }
        }
    };
    Ok(StrategyAction {
        mine_target: target,
        claim: ClaimRule::Amount(amount.clamp(0.0, available.max(0.0))),
        publish_now: publish_all(view),
    })
}

/// BasicFeeSnipe's rule: extend if the miner owns the top or
/// ℛ(top) ≥ χ²·ℛ(below).
pub fn fee_snipe_extends(inp: &ForkDecisionInputs, chi: f64) -> bool {
    inp.owns_top || inp.r_top >= chi * chi * inp.r_below
}

/// Re-mines the previous height when two wins in a row there are worth more
/// in expectation than extending the top.
pub fn decide_fee_snipe(view: &MinerView<'_>, pool: &FeePool, chi: f64) -> Result<StrategyAction, StrategyError> {
    check_chi(chi)?;
    let h = view.max_height();
    let target = if h == 0 {
        view.tree.genesis()
    } else {
        // Candidates are ranked by the fees they hold themselves.
        let top = fattest_at(view, h)?;
        let below = fattest_at(view, h - 1)?;
        let inp = ForkDecisionInputs::new(
            view.remaining(pool, top)?,
            view.remaining(pool, below)?,
            view.owns(top),
        );
        if fee_snipe_extends(&inp, chi) {
            top
        } else {
            below
        }
    };
    Ok(StrategyAction {
        mine_target: target,
        claim: ClaimRule::All,
        publish_now: publish_all(view),
    })
}

/// Withholding miner.
///
/// Mines on its highest known block (its own first on a tie) and claims all
/// fees. Announcements follow the classic withholding schedule, measured
/// against the public height P:
///
/// * an own block at height P is announced at once (a race);
/// * a private lead of one is announced in full once a rival block reaches P;
/// * with a lead of two or more, the own block at P is announced to match
///   each rival block.
///
/// With a finite `beta`, a block found while its parent was already public
/// (nothing withheld) is announced immediately if its fees exceed `beta`.
///
/// One call returns at most one announcement step; the caller re-queries
/// until the action publishes nothing.
pub fn decide_selfish(
    view: &MinerView<'_>,
    _pool: &FeePool,
    beta: Option<f64>,
) -> Result<StrategyAction, StrategyError> {
    if let Some(b) = beta {
        if !(b > 0.0) {
            return Err(StrategyError::InvalidBeta(b));
        }
    }
    let top = view.max_height();
    let tips = view.at_height(top);
    let mine_target = tips
        .iter()
        .copied()
        .find(|&id| view.owns(id))
        .unwrap_or(tips[0]);

    let publish_now = selfish_publication(view, beta)?;
    Ok(StrategyAction {
        mine_target,
        claim: ClaimRule::All,
        publish_now,
    })
}

fn selfish_publication(view: &MinerView<'_>, beta: Option<f64>) -> Result<Vec<BlockId>, StrategyError> {
    let tree = view.tree;
    let private = view.own_unpublished();
    if private.is_empty() {
        return Ok(Vec::new());
    }
    if let Some(b) = beta {
        for &id in &private {
            let blk = tree.get(id)?;
            // Only blocks found with nothing withheld beneath them qualify.
            let parent_public = blk.parent.is_some_and(|p| {
                tree.get(p)
                    .is_ok_and(|pb| pb.is_genesis() || pb.published_time.is_some_and(|t| t <= blk.found_time))
            });
            if parent_public && blk.claimed_value > b {
                return Ok(vec![id]);
            }
        }
    }
    let p = view.public_height();
    let Some(&lead_tip) = private
        .iter()
        .filter(|&&id| tree.get(id).is_ok_and(|b| b.height >= p))
        .max_by(|&&a, &&b| {
            let (x, y) = (&tree.blocks()[a.0], &tree.blocks()[b.0]);
            x.height.cmp(&y.height).then(b.cmp(&a))
        })
    else {
        return Ok(Vec::new());
    };
    let l = tree.get(lead_tip)?.height;
    if l == p {
        return Ok(vec![lead_tip]);
    }
    if l == p + 1 {
        let contested = view
            .public_at_height(p)
            .iter()
            .any(|&id| !tree.is_ancestor(id, lead_tip));
        return Ok(if contested { vec![lead_tip] } else { Vec::new() });
    }
    match tree.ancestor_at(lead_tip, p) {
        Some(a) if !view.is_published(a) => Ok(vec![a]),
        _ => Ok(Vec::new()),
    }
}
