//! Block-tree data model with transaction-fee accounting.
//!
//! Fees are atomic events in a [`FeePool`]. Blocks claim a fraction of each
//! fee event they include, so a chain may leave part of a fee for later
//! blocks. The remaining fees above a block are everything that has arrived
//! minus what the block and its ancestors claimed; claims on sibling branches
//! never count.

use std::cmp::Ordering;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Claimed fractions within this distance of the remaining fraction are
/// treated as equal.
const FRACTION_EPS: f64 = 1e-9;

/// Remaining fractions below this are dropped from the per-block ledger.
const DUST_FRACTION: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ChainError {
    #[error("unknown block {0:?}")]
    UnknownBlock(BlockId),
    #[error("unknown fee {0:?}")]
    UnknownFee(FeeId),
    #[error("fee {fee:?} is already claimed on the path to the parent block")]
    DoubleClaim { fee: FeeId },
    #[error("fee {fee:?} arrives at {arrival} but the block was found at {found}")]
    FeeNotArrived { fee: FeeId, arrival: f64, found: f64 },
    #[error("claim fraction {0} is outside (0, 1]")]
    InvalidFraction(f64),
    #[error("invalid fee event: arrival {arrival}, value {value}")]
    InvalidFee { arrival: f64, value: f64 },
    #[error("fee arrivals must be pushed in time order ({arrival} < {last})")]
    OutOfOrder { arrival: f64, last: f64 },
    #[error("invalid time {time}: {reason}")]
    InvalidTime { time: f64, reason: &'static str },
    #[error("block claims {claimed} but the per-block cap is {cap}")]
    CapExceeded { claimed: f64, cap: f64 },
    #[error("malformed block record on line {line}: {reason}")]
    Record { line: usize, reason: String },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FeeId(pub u64);

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BlockId(pub usize);

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MinerId(pub u32);

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeeEvent {
    pub id: FeeId,
    pub arrival_time: f64,
    pub value: f64,
}

/// Time-ordered fee arrivals with prefix sums for O(log n) value queries.
///
/// Ids are assigned densely in arrival order, so `FeeId(i)` is the i-th
/// arrival.
#[derive(Clone, Debug, Default)]
pub struct FeePool {
    arrival: Vec<f64>,
    value: Vec<f64>,
    // cumulative[i] = value[0] + ... + value[i - 1]
    cumulative: Vec<f64>,
}

impl FeePool {
    pub fn new() -> Self {
        Self {
            arrival: Vec::new(),
            value: Vec::new(),
            cumulative: vec![0.0],
        }
    }

    /// Builds a pool from unordered `(arrival_time, value)` pairs. Ties keep
    /// their input order.
    pub fn from_events<I>(events: I) -> Result<Self, ChainError>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut events: Vec<(f64, f64)> = events.into_iter().collect();
        for &(arrival, value) in &events {
            validate_fee(arrival, value)?;
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut pool = Self::new();
        for (arrival, value) in events {
            pool.push(arrival, value)?;
        }
        Ok(pool)
    }

    pub fn push(&mut self, arrival_time: f64, value: f64) -> Result<FeeId, ChainError> {
        validate_fee(arrival_time, value)?;
        if let Some(&last) = self.arrival.last() {
            if arrival_time < last {
                return Err(ChainError::OutOfOrder {
                    arrival: arrival_time,
                    last,
                });
            }
        }
        let id = FeeId(self.arrival.len() as u64);
        let total = self.cumulative.last().copied().unwrap_or(0.0) + value;
        self.arrival.push(arrival_time);
        self.value.push(value);
        if self.cumulative.is_empty() {
            self.cumulative.push(0.0);
        }
        self.cumulative.push(total);
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.arrival.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrival.is_empty()
    }

    pub fn get(&self, id: FeeId) -> Option<FeeEvent> {
        let i = usize::try_from(id.0).ok()?;
        Some(FeeEvent {
            id,
            arrival_time: *self.arrival.get(i)?,
            value: self.value[i],
        })
    }

    pub fn events(&self) -> impl Iterator<Item = FeeEvent> + '_ {
        self.arrival
            .iter()
            .zip(&self.value)
            .enumerate()
            .map(|(i, (&arrival_time, &value))| FeeEvent {
                id: FeeId(i as u64),
                arrival_time,
                value,
            })
    }

    /// Number of fees with `arrival_time <= now`.
    pub fn arrived_count(&self, now: f64) -> usize {
        self.arrival.partition_point(|&t| t <= now)
    }

    /// Total value of fees with `arrival_time <= now`.
    pub fn arrived_value(&self, now: f64) -> f64 {
        self.cumulative[self.arrived_count(now)]
    }

    pub fn total_value(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    fn value_of(&self, id: FeeId) -> f64 {
        self.value[id.0 as usize]
    }
}

fn validate_fee(arrival: f64, value: f64) -> Result<(), ChainError> {
    if !(arrival.is_finite() && arrival >= 0.0 && value.is_finite() && value >= 0.0) {
        return Err(ChainError::InvalidFee { arrival, value });
    }
    Ok(())
}

/// A claim on `fraction` of the original value of one fee event.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub fee: FeeId,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub id: BlockId,
    /// `None` only for genesis.
    pub parent: Option<BlockId>,
    /// `None` only for genesis.
    pub miner: Option<MinerId>,
    pub height: u64,
    pub claims: Vec<Claim>,
    /// Sum of `fraction * value` over `claims`.
    pub claimed_value: f64,
    pub found_time: f64,
    pub published_time: Option<f64>,
    /// Global publication order, used to break ties between blocks published
    /// at the same instant.
    pub publish_seq: Option<u64>,
}

impl Block {
    pub fn is_genesis(&self) -> bool {
        self.parent.is_none()
    }
}

/// How much a new block takes from the fees available above its parent.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimRule {
    All,
    Fraction(f64),
    Amount(f64),
}

/// Append-only rooted block tree.
#[derive(Clone, Debug)]
pub struct BlockTree {
    blocks: Vec<Block>,
    by_height: Vec<Vec<BlockId>>,
    // Claimed value summed over the path genesis..=block.
    path_claimed: Vec<f64>,
    // Fees arrived by the block's found time that are still partly unclaimed
    // on its path, sorted by fee id. `fraction` is the remaining fraction.
    outstanding: Vec<Vec<Claim>>,
    // Number of fee events (a prefix of the pool) that `outstanding` accounts
    // for; later fees are untouched on the path.
    covered: Vec<usize>,
    children: Vec<u32>,
    unpublished: Vec<BlockId>,
    fee_cap: Option<f64>,
    next_seq: u64,
}

impl Default for BlockTree {
    fn default() -> Self {
        Self::new()
    }
}

impl BlockTree {
    /// A tree holding only genesis, found and published at time 0.
    pub fn new() -> Self {
        let genesis = Block {
            id: BlockId(0),
            parent: None,
            miner: None,
            height: 0,
            claims: Vec::new(),
            claimed_value: 0.0,
            found_time: 0.0,
            published_time: Some(0.0),
            publish_seq: Some(0),
        };
        Self {
            blocks: vec![genesis],
            by_height: vec![vec![BlockId(0)]],
            path_claimed: vec![0.0],
            outstanding: vec![Vec::new()],
            covered: vec![0],
            children: vec![0],
            unpublished: Vec::new(),
            fee_cap: None,
            next_seq: 1,
        }
    }

    /// Caps the fee value any single block may claim.
    pub fn with_fee_cap(mut self, cap: Option<f64>) -> Self {
        self.fee_cap = cap;
        self
    }

    pub fn fee_cap(&self) -> Option<f64> {
        self.fee_cap
    }

    pub fn genesis(&self) -> BlockId {
        BlockId(0)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, id: BlockId) -> Result<&Block, ChainError> {
        self.blocks.get(id.0).ok_or(ChainError::UnknownBlock(id))
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn max_height(&self) -> u64 {
        (self.by_height.len() - 1) as u64
    }

    pub fn at_height(&self, height: u64) -> &[BlockId] {
        self.by_height
            .get(height as usize)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn child_count(&self, id: BlockId) -> usize {
        self.children.get(id.0).copied().unwrap_or(0) as usize
    }

    /// Blocks not yet announced, in creation order.
    pub fn unpublished(&self) -> &[BlockId] {
        &self.unpublished
    }

    /// Value claimed along genesis..=block.
    pub fn path_claimed(&self, id: BlockId) -> Result<f64, ChainError> {
        self.path_claimed
            .get(id.0)
            .copied()
            .ok_or(ChainError::UnknownBlock(id))
    }

    /// Whether `ancestor` lies on the path genesis..=`block`.
    pub fn is_ancestor(&self, ancestor: BlockId, block: BlockId) -> bool {
        let Ok(target) = self.get(ancestor) else {
            return false;
        };
        let mut cur = Some(block);
        while let Some(id) = cur {
            if id == ancestor {
                return true;
            }
            let b = &self.blocks[id.0];
            if b.height <= target.height {
                return false;
            }
            cur = b.parent;
        }
        false
    }

    /// The ancestor of `block` (or `block` itself) at `height`.
    pub fn ancestor_at(&self, block: BlockId, height: u64) -> Option<BlockId> {
        let mut cur = self.blocks.get(block.0)?;
        if cur.height < height {
            return None;
        }
        while cur.height > height {
            cur = &self.blocks[cur.parent?.0];
        }
        Some(cur.id)
    }

    /// Fraction of `fee` not yet claimed on the path genesis..=`block`.
    pub fn remaining_fraction(
        &self,
        pool: &FeePool,
        block: BlockId,
        fee: FeeId,
    ) -> Result<f64, ChainError> {
        self.get(block)?;
        pool.get(fee).ok_or(ChainError::UnknownFee(fee))?;
        if fee.0 as usize >= self.covered[block.0] {
            return Ok(1.0);
        }
        let out = &self.outstanding[block.0];
        Ok(match out.binary_search_by(|c| c.fee.cmp(&fee)) {
            Ok(i) => out[i].fraction,
            Err(_) => 0.0,
        })
    }

    /// Fees available to a block mined on `parent` at time `now`, as
    /// remaining fractions sorted by fee id.
    pub fn available(
        &self,
        pool: &FeePool,
        parent: BlockId,
        now: f64,
    ) -> Result<Vec<Claim>, ChainError> {
        self.get(parent)?;
        let lo = self.covered[parent.0];
        let hi = pool.arrived_count(now).max(lo);
        let mut out = self.outstanding[parent.0].clone();
        out.extend((lo..hi).map(|i| Claim {
            fee: FeeId(i as u64),
            fraction: 1.0,
        }));
        Ok(out)
    }

    /// Builds the claim list for a block on `parent` found at `now`, taking
    /// the amount named by `rule` proportionally from every available fee.
    /// The per-block cap, if any, limits the amount.
    pub fn claims_for(
        &self,
        pool: &FeePool,
        parent: BlockId,
        now: f64,
        rule: ClaimRule,
    ) -> Result<Vec<Claim>, ChainError> {
        let available = self.available(pool, parent, now)?;
        let total: f64 = available
            .iter()
            .map(|c| c.fraction * pool.value_of(c.fee))
            .sum();
        if total <= 0.0 {
            return Ok(Vec::new());
        }
        let mut amount = match rule {
            ClaimRule::All => total,
            ClaimRule::Fraction(f) => f.clamp(0.0, 1.0) * total,
            ClaimRule::Amount(a) => a.clamp(0.0, total),
        };
        if let Some(cap) = self.fee_cap {
            amount = amount.min(cap.max(0.0));
        }
        let share = amount / total;
        if share <= 0.0 {
            return Ok(Vec::new());
        }
        let take_all = share >= 1.0 - 1e-15;
        Ok(available
            .into_iter()
            .filter(|c| pool.value_of(c.fee) > 0.0)
            .map(|c| Claim {
                fee: c.fee,
                fraction: if take_all { c.fraction } else { c.fraction * share },
            })
            .filter(|c| c.fraction > 0.0)
            .collect())
    }

    /// Appends a block. Fails without modifying the tree if the parent is
    /// unknown, a claimed fee has not arrived by `found_time`, or a claim
    /// exceeds what the parent's path leaves unclaimed.
    pub fn add_block(
        &mut self,
        pool: &FeePool,
        parent: BlockId,
        miner: MinerId,
        claims: Vec<Claim>,
        found_time: f64,
    ) -> Result<BlockId, ChainError> {
        let p = self.get(parent)?;
        if !found_time.is_finite() || found_time < p.found_time {
            return Err(ChainError::InvalidTime {
                time: found_time,
                reason: "a block cannot be found before its parent",
            });
        }
        let height = p.height + 1;

        let mut claims = claims;
        claims.sort_by_key(|c| c.fee);
        let mut claimed_value = 0.0;
        for (i, c) in claims.iter().enumerate() {
            if !(c.fraction > 0.0 && c.fraction <= 1.0 + FRACTION_EPS) {
                return Err(ChainError::InvalidFraction(c.fraction));
            }
            if i > 0 && claims[i - 1].fee == c.fee {
                return Err(ChainError::DoubleClaim { fee: c.fee });
            }
            let ev = pool.get(c.fee).ok_or(ChainError::UnknownFee(c.fee))?;
            if ev.arrival_time > found_time {
                return Err(ChainError::FeeNotArrived {
                    fee: c.fee,
                    arrival: ev.arrival_time,
                    found: found_time,
                });
            }
            let remaining = self.remaining_fraction(pool, parent, c.fee)?;
            if c.fraction > remaining + FRACTION_EPS {
                return Err(ChainError::DoubleClaim { fee: c.fee });
            }
            claimed_value += c.fraction.min(remaining) * ev.value;
        }
        if let Some(cap) = self.fee_cap {
            if claimed_value > cap * (1.0 + 1e-12) + 1e-15 {
                return Err(ChainError::CapExceeded {
                    claimed: claimed_value,
                    cap,
                });
            }
        }

        // New outstanding ledger: parent's ledger plus fresh arrivals, minus
        // this block's claims. Both inputs are sorted by fee id.
        let available = self.available(pool, parent, found_time)?;
        let mut outstanding = Vec::with_capacity(available.len());
        let mut ci = 0;
        for a in available {
            while ci < claims.len() && claims[ci].fee < a.fee {
                ci += 1;
            }
            let mut rest = a.fraction;
            if ci < claims.len() && claims[ci].fee == a.fee {
                rest -= claims[ci].fraction;
            }
            if rest > DUST_FRACTION && pool.value_of(a.fee) > 0.0 {
                outstanding.push(Claim {
                    fee: a.fee,
                    fraction: rest,
                });
            }
        }
        let covered = pool.arrived_count(found_time).max(self.covered[parent.0]);

        let id = BlockId(self.blocks.len());
        let path = self.path_claimed[parent.0] + claimed_value;
        for c in &mut claims {
            c.fraction = c.fraction.min(1.0);
        }
        self.blocks.push(Block {
            id,
            parent: Some(parent),
            miner: Some(miner),
            height,
            claims,
            claimed_value,
            found_time,
            published_time: None,
            publish_seq: None,
        });
        self.path_claimed.push(path);
        self.outstanding.push(outstanding);
        self.covered.push(covered);
        self.children.push(0);
        self.children[parent.0] += 1;
        if self.by_height.len() <= height as usize {
            self.by_height.push(Vec::new());
        }
        self.by_height[height as usize].push(id);
        self.unpublished.push(id);
        Ok(id)
    }

    /// Announces `block` and any unannounced ancestors (oldest first) at
    /// `time`. Returns the newly published ids.
    pub fn publish(&mut self, block: BlockId, time: f64) -> Result<Vec<BlockId>, ChainError> {
        self.get(block)?;
        let mut chain = Vec::new();
        let mut cur = Some(block);
        while let Some(id) = cur {
            let b = &self.blocks[id.0];
            if b.published_time.is_some() {
                break;
            }
            chain.push(id);
            cur = b.parent;
        }
        chain.reverse();
        for &id in &chain {
            let b = &mut self.blocks[id.0];
            if time < b.found_time {
                return Err(ChainError::InvalidTime {
                    time,
                    reason: "a block cannot be published before it is found",
                });
            }
            b.published_time = Some(time);
            b.publish_seq = Some(self.next_seq);
            self.next_seq += 1;
        }
        if !chain.is_empty() {
            self.unpublished.retain(|id| !chain.contains(id));
        }
        Ok(chain)
    }

    /// Published blocks at the greatest published height, in the order the
    /// public heard them.
    pub fn public_tips(&self) -> Vec<BlockId> {
        for level in self.by_height.iter().rev() {
            let mut tips: Vec<BlockId> = level
                .iter()
                .copied()
                .filter(|id| self.blocks[id.0].published_time.is_some())
                .collect();
            if !tips.is_empty() {
                tips.sort_by(|a, b| self.public_order(*a, *b));
                return tips;
            }
        }
        vec![self.genesis()]
    }

    fn public_order(&self, a: BlockId, b: BlockId) -> Ordering {
        let (x, y) = (&self.blocks[a.0], &self.blocks[b.0]);
        let key = |b: &Block| {
            (
                b.published_time.unwrap_or(f64::INFINITY),
                b.publish_seq.unwrap_or(u64::MAX),
            )
        };
        let (kx, ky) = (key(x), key(y));
        kx.0.total_cmp(&ky.0)
            .then(kx.1.cmp(&ky.1))
            .then(x.found_time.total_cmp(&y.found_time))
            .then(a.cmp(&b))
    }

    /// Path from genesis to `tip`, genesis first.
    pub fn chain_to(&self, tip: BlockId) -> Result<Vec<BlockId>, ChainError> {
        self.get(tip)?;
        let mut out = Vec::new();
        let mut cur = Some(tip);
        while let Some(id) = cur {
            out.push(id);
            cur = self.blocks[id.0].parent;
        }
        out.reverse();
        Ok(out)
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for b in &self.blocks[1..] {
            let rec = BlockRecord::from(b);
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Rebuilds a tree from [`BlockTree::write_jsonl`] output, replaying
    /// every insertion through [`BlockTree::add_block`].
    pub fn read_jsonl<R: BufRead>(
        r: R,
        pool: &FeePool,
        fee_cap: Option<f64>,
    ) -> Result<Self, ChainError> {
        let mut tree = BlockTree::new().with_fee_cap(fee_cap);
        let mut publications = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let line = line.map_err(|e| ChainError::Record {
                line: n + 1,
                reason: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: BlockRecord = serde_json::from_str(&line).map_err(|e| ChainError::Record {
                line: n + 1,
                reason: e.to_string(),
            })?;
            if rec.id != tree.len() {
                return Err(ChainError::Record {
                    line: n + 1,
                    reason: format!("expected block id {}, found {}", tree.len(), rec.id),
                });
            }
            let claims = rec
                .claims
                .iter()
                .map(|&(fee, fraction)| Claim {
                    fee: FeeId(fee),
                    fraction,
                })
                .collect();
            let id = tree.add_block(
                pool,
                BlockId(rec.parent),
                MinerId(rec.miner),
                claims,
                rec.found_time,
            )?;
            if tree.get(id)?.height != rec.height {
                return Err(ChainError::Record {
                    line: n + 1,
                    reason: format!("height {} does not follow its parent", rec.height),
                });
            }
            if let Some(t) = rec.published_time {
                publications.push((t, rec.publish_seq.unwrap_or(u64::MAX), id));
            }
        }
        publications.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        for (t, _, id) in publications {
            tree.publish(id, t)?;
        }
        Ok(tree)
    }
}

/// One line of the block-tree records file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub id: usize,
    pub parent: usize,
    pub miner: u32,
    pub height: u64,
    /// `(fee id, claimed fraction)` pairs.
    pub claims: Vec<(u64, f64)>,
    pub found_time: f64,
    pub published_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub publish_seq: Option<u64>,
}

impl From<&Block> for BlockRecord {
    fn from(b: &Block) -> Self {
        Self {
            id: b.id.0,
            parent: b.parent.map(|p| p.0).unwrap_or(0),
            miner: b.miner.map(|m| m.0).unwrap_or(0),
            height: b.height,
            claims: b.claims.iter().map(|c| (c.fee.0, c.fraction)).collect(),
            found_time: b.found_time,
            published_time: b.published_time,
            publish_seq: b.publish_seq,
        }
    }
}

/// Fees that have arrived by `now` and are unclaimed on the path
/// genesis..=`block`.
pub fn remaining_fees(
    tree: &BlockTree,
    pool: &FeePool,
    block: BlockId,
    now: f64,
) -> Result<f64, ChainError> {
    let b = tree.get(block)?;
    if now < b.found_time {
        return Err(ChainError::InvalidTime {
            time: now,
            reason: "remaining fees are undefined before the block exists",
        });
    }
    let r = pool.arrived_value(now) - tree.path_claimed[block.0];
    // Summation order differs between the two terms.
    Ok(if r < 1e-12 * pool.arrived_value(now).max(1.0) {
        r.max(0.0)
    } else {
        r
    })
}

/// What one miner can see at time `now`: every block published by then plus
/// its own blocks, published or not.
#[derive(Copy, Clone, Debug)]
pub struct MinerView<'a> {
    pub tree: &'a BlockTree,
    pub miner: MinerId,
    pub now: f64,
}

impl<'a> MinerView<'a> {
    pub fn new(tree: &'a BlockTree, miner: MinerId, now: f64) -> Self {
        Self { tree, miner, now }
    }

    pub fn knows(&self, id: BlockId) -> bool {
        let Ok(b) = self.tree.get(id) else {
            return false;
        };
        b.is_genesis() || self.is_public(b) || (self.owns_block(b) && b.found_time <= self.now)
    }

    fn is_public(&self, b: &Block) -> bool {
        b.published_time.is_some_and(|t| t <= self.now)
    }

    fn owns_block(&self, b: &Block) -> bool {
        b.miner == Some(self.miner)
    }

    pub fn owns(&self, id: BlockId) -> bool {
        self.tree.get(id).is_ok_and(|b| self.owns_block(b))
    }

    pub fn is_published(&self, id: BlockId) -> bool {
        self.tree.get(id).is_ok_and(|b| b.is_genesis() || self.is_public(b))
    }

    /// When this miner learned of the block: found time for its own blocks,
    /// publication time otherwise.
    fn heard_key(&self, b: &Block) -> (f64, u64) {
        if self.owns_block(b) {
            (b.found_time, 0)
        } else {
            (
                b.published_time.unwrap_or(f64::INFINITY),
                b.publish_seq.unwrap_or(u64::MAX),
            )
        }
    }

    fn heard_order(&self, a: BlockId, b: BlockId) -> Ordering {
        let (x, y) = (&self.tree.blocks[a.0], &self.tree.blocks[b.0]);
        let (kx, ky) = (self.heard_key(x), self.heard_key(y));
        kx.0.total_cmp(&ky.0)
            .then(kx.1.cmp(&ky.1))
            .then(x.found_time.total_cmp(&y.found_time))
            .then(a.cmp(&b))
    }

    /// Known blocks at `height`, first-heard first.
    pub fn at_height(&self, height: u64) -> Vec<BlockId> {
        let mut ids: Vec<BlockId> = self
            .tree
            .at_height(height)
            .iter()
            .copied()
            .filter(|&id| self.knows(id))
            .collect();
        ids.sort_by(|a, b| self.heard_order(*a, *b));
        ids
    }

    /// Height of the longest chain this miner knows (ℋ from its point of
    /// view, including private blocks).
    pub fn max_height(&self) -> u64 {
        (0..=self.tree.max_height())
            .rev()
            .find(|&h| self.tree.at_height(h).iter().any(|&id| self.knows(id)))
            .unwrap_or(0)
    }

    /// Height of the highest published block.
    pub fn public_height(&self) -> u64 {
        (0..=self.tree.max_height())
            .rev()
            .find(|&h| self.tree.at_height(h).iter().any(|&id| self.is_published(id)))
            .unwrap_or(0)
    }

    /// Published blocks at `height`, first-heard first.
    pub fn public_at_height(&self, height: u64) -> Vec<BlockId> {
        let mut ids: Vec<BlockId> = self
            .tree
            .at_height(height)
            .iter()
            .copied()
            .filter(|&id| self.is_published(id))
            .collect();
        ids.sort_by(|a, b| self.heard_order(*a, *b));
        ids
    }

    /// This miner's blocks that it has not announced yet.
    pub fn own_unpublished(&self) -> Vec<BlockId> {
        self.tree
            .unpublished()
            .iter()
            .copied()
            .filter(|&id| {
                let b = &self.tree.blocks[id.0];
                self.owns_block(b) && b.found_time <= self.now
            })
            .collect()
    }

    pub fn known_blocks(&self) -> Vec<BlockId> {
        (0..self.tree.len())
            .map(BlockId)
            .filter(|&id| self.knows(id))
            .collect()
    }

    pub fn remaining(&self, pool: &FeePool, id: BlockId) -> Result<f64, ChainError> {
        remaining_fees(self.tree, pool, id, self.now)
    }
}

/// Known blocks at the maximum known height, first-heard first.
pub fn best_tips(view: &MinerView<'_>) -> Vec<BlockId> {
    view.at_height(view.max_height())
}
