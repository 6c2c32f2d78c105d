//! Wavefront dual machine shared by the offline and online solvers.
//!
//! Every demand `d` of item `i` owns a value `b_d` and, per time channel `q`,
//! a pair `z = (general, item)`. The constraints kept feasible are
//!
//! * coverage:  `b_d - z_general - z_item <= H^d_q` for every `q`,
//! * general:   `sum_d z_general[d][q] <= K0` for every `q`,
//! * item:      `sum_{d of item i} z_item[d][q] <= K_i` for every `q`, `i`,
//! * all variables non-negative.
//!
//! Raising `b_d` routes the matching increase into `z_item` first, then into
//! `z_general`, on every channel where `b_d` exceeds the curve.

use std::collections::BTreeSet;
use std::fmt;

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::instance::{DemandId, HoldingDelayCurve, Instance, Money, Time};

pub type Rational = Ratio<i64>;

pub fn rat(v: u64) -> Rational {
    Rational::from_integer(v as i64)
}

fn money(v: Money) -> Option<Rational> {
    v.finite().map(rat)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DemandStatus {
    Active,
    SemiActive,
    Inactive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RaiseMode {
    /// Stop at the exact point where a constraint becomes tight, keeping the
    /// partial increase.
    Offline,
    /// All or nothing: if the target is unreachable nothing changes.
    Online,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ZPair {
    pub general: Rational,
    pub item: Rational,
}

impl ZPair {
    pub fn total(&self) -> Rational {
        self.general + self.item
    }
}

/// Contiguous run of channels `start..start + vals.len()`; channels outside
/// the run are zero.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ZRow {
    pub start: Time,
    pub vals: Vec<ZPair>,
}

impl ZRow {
    pub fn get(&self, q: Time) -> ZPair {
        if q < self.start {
            return ZPair::default();
        }
        self.vals.get(q - self.start).copied().unwrap_or_default()
    }

    pub fn end(&self) -> Time {
        self.start + self.vals.len()
    }

    fn cover(&mut self, l: Time, r: Time) {
        if self.vals.is_empty() {
            self.start = l;
            self.vals = vec![ZPair::default(); r + 1 - l];
            return;
        }
        if l < self.start {
            let pad = self.start - l;
            self.vals.splice(0..0, std::iter::repeat(ZPair::default()).take(pad));
            self.start = l;
        }
        if r >= self.end() {
            let extra = r + 1 - self.end();
            self.vals.extend(std::iter::repeat(ZPair::default()).take(extra));
        }
    }

    fn slot(&mut self, q: Time) -> &mut ZPair {
        &mut self.vals[q - self.start]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FreezeEvent {
    pub demand: DemandId,
    pub wavefront: Rational,
    /// `b_d` at the moment of freezing.
    pub value: Rational,
    /// Latest tight channel responsible, if the freeze came from a raise.
    pub trigger: Option<Time>,
    /// Items whose item constraint is saturated at the trigger channel.
    pub tight_items: BTreeSet<usize>,
    pub was_active: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RaiseOutcome {
    Reached,
    Frozen(FreezeEvent),
}

impl RaiseOutcome {
    pub fn is_frozen(&self) -> bool {
        matches!(self, RaiseOutcome::Frozen(_))
    }
}

/// One raise call: demand index (instance order), working curve, target
/// value, and the wavefront segment `from..to` the raise spans.
#[derive(Clone, Copy, Debug)]
pub struct RaiseRequest<'a> {
    pub demand: usize,
    pub curve: &'a HoldingDelayCurve,
    pub target: Rational,
    pub mode: RaiseMode,
    pub from: Rational,
    pub to: Rational,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DualError {
    #[error("demand {0} is frozen")]
    FrozenDemand(DemandId),
    #[error("target below current value for demand {0}")]
    TargetBelowValue(DemandId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DualViolation {
    Coverage { demand: DemandId, channel: Time, excess: Rational },
    General { channel: Time, sum: Rational },
    Item { item: usize, channel: Time, sum: Rational },
    Negative { demand: DemandId },
    SumMismatch { channel: Time },
}

impl fmt::Display for DualViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DualViolation::Coverage { demand, channel, excess } => {
                write!(f, "coverage constraint of demand {demand} at s={channel} exceeded by {excess}")
            }
            DualViolation::General { channel, sum } => {
                write!(f, "general-order constraint at s={channel} has sum {sum}")
            }
            DualViolation::Item { item, channel, sum } => {
                write!(f, "item {item} constraint at s={channel} has sum {sum}")
            }
            DualViolation::Negative { demand } => write!(f, "negative variable for demand {demand}"),
            DualViolation::SumMismatch { channel } => write!(f, "cached sums disagree with rows at s={channel}"),
        }
    }
}

impl std::error::Error for DualViolation {}

#[derive(Clone, Debug)]
pub struct DualState {
    horizon: usize,
    general_cap: Rational,
    item_caps: Vec<Rational>,
    ids: Vec<DemandId>,
    items: Vec<usize>,
    b: Vec<Rational>,
    z: Vec<ZRow>,
    status: Vec<DemandStatus>,
    general_sum: Vec<Rational>,
    item_sum: Vec<Vec<Rational>>,
    general_tight_at: Vec<Option<Rational>>,
    item_tight_at: Vec<Vec<Option<Rational>>>,
    wavefront: Rational,
    freeze_log: Vec<FreezeEvent>,
}

impl DualState {
    /// Fresh state with channels `1..=inst.horizon`, every demand active.
    pub fn new(inst: &Instance) -> Self {
        let t = inst.horizon;
        let start = Rational::from_integer(1);
        let tight_if_zero = |cap: u64| if cap == 0 { Some(start) } else { None };
        Self {
            horizon: t,
            general_cap: rat(inst.general_cost),
            item_caps: inst.item_costs.iter().map(|&k| rat(k)).collect(),
            ids: inst.demands.iter().map(|d| d.id).collect(),
            items: inst.demands.iter().map(|d| d.item).collect(),
            b: vec![Rational::zero(); inst.demands.len()],
            z: vec![ZRow::default(); inst.demands.len()],
            status: vec![DemandStatus::Active; inst.demands.len()],
            general_sum: vec![Rational::zero(); t + 1],
            item_sum: vec![vec![Rational::zero(); t + 1]; inst.n_items()],
            general_tight_at: vec![tight_if_zero(inst.general_cost); t + 1],
            item_tight_at: inst.item_costs.iter().map(|&k| vec![tight_if_zero(k); t + 1]).collect(),
            wavefront: start,
            freeze_log: Vec::new(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_demands(&self) -> usize {
        self.b.len()
    }

    pub fn id(&self, k: usize) -> DemandId {
        self.ids[k]
    }

    pub fn item(&self, k: usize) -> usize {
        self.items[k]
    }

    pub fn b(&self, k: usize) -> Rational {
        self.b[k]
    }

    pub fn z(&self, k: usize, q: Time) -> ZPair {
        self.z[k].get(q)
    }

    pub fn row(&self, k: usize) -> &ZRow {
        &self.z[k]
    }

    pub fn status(&self, k: usize) -> DemandStatus {
        self.status[k]
    }

    pub fn is_frozen(&self, k: usize) -> bool {
        self.status[k] == DemandStatus::Inactive
    }

    pub fn general_cap(&self) -> Rational {
        self.general_cap
    }

    pub fn item_cap(&self, item: usize) -> Rational {
        self.item_caps[item - 1]
    }

    pub fn general_sum(&self, q: Time) -> Rational {
        self.general_sum[q]
    }

    pub fn item_sum(&self, item: usize, q: Time) -> Rational {
        self.item_sum[item - 1][q]
    }

    pub fn item_tight(&self, item: usize, q: Time) -> bool {
        self.item_sum(item, q) >= self.item_cap(item)
    }

    pub fn general_tight_at(&self, q: Time) -> Option<Rational> {
        self.general_tight_at[q]
    }

    pub fn item_tight_at(&self, item: usize, q: Time) -> Option<Rational> {
        self.item_tight_at[item - 1][q]
    }

    /// Wavefront at which channel `q` first had both its item-1 and general
    /// constraint saturated. Meaningful for single-item instances.
    pub fn channel_tight_at(&self, q: Time) -> Option<Rational> {
        match (self.general_tight_at[q], self.item_tight_at.first().and_then(|v| v[q])) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (Some(a), None) if self.item_caps.is_empty() => Some(a),
            _ => None,
        }
    }

    pub fn wavefront(&self) -> Rational {
        self.wavefront
    }

    pub fn advance_to(&mut self, w: Rational) {
        if w > self.wavefront {
            self.wavefront = w;
        }
    }

    pub fn freeze_log(&self) -> &[FreezeEvent] {
        &self.freeze_log
    }

    /// Σ_d b_d.
    pub fn dual_objective(&self) -> Rational {
        self.b.iter().copied().sum()
    }

    pub fn mark_semi_active(&mut self, k: usize) {
        if self.status[k] == DemandStatus::Active {
            self.status[k] = DemandStatus::SemiActive;
        }
    }

    /// Freezes demand `k` without a raise. No-op if already frozen.
    pub fn freeze(&mut self, k: usize, trigger: Option<Time>) -> Option<FreezeEvent> {
        if self.status[k] == DemandStatus::Inactive {
            return None;
        }
        let tight_items = trigger.map(|q| self.tight_items_at(q)).unwrap_or_default();
        let ev = FreezeEvent {
            demand: self.ids[k],
            wavefront: self.wavefront,
            value: self.b[k],
            trigger,
            tight_items,
            was_active: self.status[k] == DemandStatus::Active,
        };
        self.status[k] = DemandStatus::Inactive;
        self.freeze_log.push(ev.clone());
        Some(ev)
    }

    /// A channel blocking any further rise of demand `k`: one it already
    /// covers whose item and general constraints are both saturated.
    pub fn blocking_channel(&self, k: usize, curve: &HoldingDelayCurve) -> Option<Time> {
        let b = self.b[k];
        let at = |q: Time| money(curve.at(q)).is_some_and(|h| h <= b);
        let due = curve.due.clamp(1, self.horizon);
        let item = self.items[k];
        let full = |q: Time| self.item_sum[item - 1][q] >= self.item_caps[item - 1] && self.general_sum[q] >= self.general_cap;
        let left = (1..=due).rev().take_while(|&q| at(q));
        let right = (due + 1..=self.horizon).take_while(|&q| at(q));
        left.chain(right).find(|&q| full(q))
    }

    fn tight_items_at(&self, q: Time) -> BTreeSet<usize> {
        (1..=self.item_caps.len()).filter(|&i| self.item_tight(i, q)).collect()
    }

    fn interp(req: &RaiseRequest<'_>, b0: Rational, b: Rational) -> Rational {
        if req.target == b0 {
            return req.to;
        }
        req.from + (b - b0) / (req.target - b0) * (req.to - req.from)
    }

    /// Raises `b_d` toward `req.target`, keeping every constraint feasible.
    pub fn raise(&mut self, req: RaiseRequest<'_>) -> Result<RaiseOutcome, DualError> {
        let k = req.demand;
        if self.status[k] == DemandStatus::Inactive {
            return Err(DualError::FrozenDemand(self.ids[k]));
        }
        let b0 = self.b[k];
        if req.target <= b0 {
            self.advance_to(req.to);
            return Ok(RaiseOutcome::Reached);
        }
        let curve = req.curve;
        let below = |q: Time| money(curve.at(q)).is_some_and(|h| h < req.target);
        let due = curve.due.clamp(1, self.horizon);
        let mut l = due;
        while l > 1 && below(l - 1) {
            l -= 1;
        }
        let mut r = due;
        while r < self.horizon && below(r + 1) {
            r += 1;
        }
        if !below(due) {
            self.advance_to(req.to);
            return Ok(RaiseOutcome::Reached);
        }

        let item = self.items[k];
        let item_cap = self.item_caps[item - 1];
        let mut reach = req.target;
        let mut blocked = None;
        for q in l..=r {
            let h = money(curve.at(q)).expect("channel below target is finite");
            let base = b0.max(h);
            let ceiling = base + (item_cap - self.item_sum[item - 1][q]) + (self.general_cap - self.general_sum[q]);
            match req.mode {
                RaiseMode::Online if ceiling < req.target => blocked = Some(q),
                RaiseMode::Offline if ceiling < reach => {
                    reach = ceiling;
                    blocked = Some(q);
                }
                RaiseMode::Offline if ceiling == reach && blocked.is_some() => blocked = Some(q),
                _ => {}
            }
        }

        if req.mode == RaiseMode::Online {
            if let Some(q) = blocked {
                self.advance_to(req.from);
                let ev = self.freeze(k, Some(q)).expect("demand unfrozen");
                return Ok(RaiseOutcome::Frozen(ev));
            }
        }

        self.z[k].cover(l, r);
        for q in l..=r {
            let h = money(curve.at(q)).expect("finite");
            let base = b0.max(h);
            let inc = reach - base;
            if !inc.is_positive() {
                continue;
            }
            let item_slack = item_cap - self.item_sum[item - 1][q];
            let to_item = inc.min(item_slack);
            let to_general = inc - to_item;
            let slot = self.z[k].slot(q);
            slot.item += to_item;
            slot.general += to_general;
            if to_item.is_positive() {
                self.item_sum[item - 1][q] += to_item;
                if self.item_sum[item - 1][q] == item_cap && self.item_tight_at[item - 1][q].is_none() {
                    self.item_tight_at[item - 1][q] = Some(Self::interp(&req, b0, base + item_slack));
                }
            }
            if to_general.is_positive() {
                self.general_sum[q] += to_general;
                if self.general_sum[q] == self.general_cap && self.general_tight_at[q].is_none() {
                    self.general_tight_at[q] = Some(Self::interp(&req, b0, reach));
                }
            }
        }
        self.b[k] = reach;

        if reach < req.target {
            self.advance_to(Self::interp(&req, b0, reach));
            let ev = self.freeze(k, blocked).expect("demand unfrozen");
            return Ok(RaiseOutcome::Frozen(ev));
        }
        self.advance_to(req.to);
        Ok(RaiseOutcome::Reached)
    }

    /// Checks the constraints touched by a raise of demand `k`: its own
    /// coverage row on every channel and the cached sums on its row's channels.
    pub fn check_local(&self, k: usize, curve: &HoldingDelayCurve) -> Result<(), DualViolation> {
        self.check_coverage(k, curve)?;
        let row = &self.z[k];
        let item = self.items[k];
        for q in row.start..row.end() {
            if self.general_sum[q] > self.general_cap {
                return Err(DualViolation::General { channel: q, sum: self.general_sum[q] });
            }
            if self.item_sum[item - 1][q] > self.item_caps[item - 1] {
                return Err(DualViolation::Item { item, channel: q, sum: self.item_sum[item - 1][q] });
            }
        }
        Ok(())
    }

    fn check_coverage(&self, k: usize, curve: &HoldingDelayCurve) -> Result<(), DualViolation> {
        let b = self.b[k];
        if b.is_negative() {
            return Err(DualViolation::Negative { demand: self.ids[k] });
        }
        let row = &self.z[k];
        for zp in &row.vals {
            if zp.general.is_negative() || zp.item.is_negative() {
                return Err(DualViolation::Negative { demand: self.ids[k] });
            }
        }
        for q in 1..=self.horizon {
            if let Some(h) = money(curve.at(q)) {
                let excess = b - row.get(q).total() - h;
                if excess.is_positive() {
                    return Err(DualViolation::Coverage { demand: self.ids[k], channel: q, excess });
                }
            }
        }
        Ok(())
    }

    /// Full check of every constraint against `curves` (instance demand
    /// order), recomputing channel sums from the rows.
    pub fn assert_feasible_curves(&self, curves: &[&HoldingDelayCurve]) -> Result<(), DualViolation> {
        for (k, curve) in curves.iter().enumerate() {
            self.check_coverage(k, curve)?;
        }
        let mut general = vec![Rational::zero(); self.horizon + 1];
        let mut item = vec![vec![Rational::zero(); self.horizon + 1]; self.item_caps.len()];
        for (k, row) in self.z.iter().enumerate() {
            for (off, zp) in row.vals.iter().enumerate() {
                let q = row.start + off;
                general[q] += zp.general;
                item[self.items[k] - 1][q] += zp.item;
            }
        }
        for q in 1..=self.horizon {
            if general[q] > self.general_cap {
                return Err(DualViolation::General { channel: q, sum: general[q] });
            }
            if general[q] != self.general_sum[q] {
                return Err(DualViolation::SumMismatch { channel: q });
            }
            for (i, sums) in item.iter().enumerate() {
                if sums[q] > self.item_caps[i] {
                    return Err(DualViolation::Item { item: i + 1, channel: q, sum: sums[q] });
                }
                if sums[q] != self.item_sum[i][q] {
                    return Err(DualViolation::SumMismatch { channel: q });
                }
            }
        }
        Ok(())
    }

    /// Full check against the instance's own curves.
    pub fn assert_feasible(&self, inst: &Instance) -> Result<(), DualViolation> {
        let curves: Vec<&HoldingDelayCurve> = inst.demands.iter().map(|d| &d.curve).collect();
        self.assert_feasible_curves(&curves)
    }

    /// Overwrites one demand's variables directly, bypassing the raise rules.
    /// Cached sums are updated to match. Intended for building certificates
    /// and adversarial states by hand.
    pub fn overwrite(&mut self, k: usize, b: Rational, row: ZRow) {
        let item = self.items[k];
        let old = std::mem::replace(&mut self.z[k], row);
        for (off, zp) in old.vals.iter().enumerate() {
            self.general_sum[old.start + off] -= zp.general;
            self.item_sum[item - 1][old.start + off] -= zp.item;
        }
        let new = &self.z[k];
        for (off, zp) in new.vals.iter().enumerate() {
            self.general_sum[new.start + off] += zp.general;
            self.item_sum[item - 1][new.start + off] += zp.item;
        }
        self.b[k] = b;
    }
}
