//! Domain types for lot-sizing and joint replenishment instances.
//!
//! Time indices are 1-based throughout (`1..=horizon`). Item types are
//! 1-based as well; `Instance::item_costs[i - 1]` is the ordering cost of
//! item `i`. Curves are stored densely, one value per time index.

mod canonical;
mod io;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use canonical::{canonicalize, is_canonical, Canonical};
pub use io::{read_instance, read_schedule, write_instance, write_schedule, ParseError};

/// A 1-based time index.
pub type Time = usize;

/// Non-negative integer cost, or the absorbing `Infinite` marker.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Money {
    Finite(u64),
    Infinite,
}

impl Money {
    pub const ZERO: Money = Money::Finite(0);

    pub fn is_finite(self) -> bool {
        matches!(self, Money::Finite(_))
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            Money::Finite(v) => Some(v),
            Money::Infinite => None,
        }
    }
}

impl PartialOrd for Money {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Money {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        match (self, other) {
            (Money::Finite(a), Money::Finite(b)) => a.cmp(b),
            (Money::Finite(_), Money::Infinite) => Less,
            (Money::Infinite, Money::Finite(_)) => Greater,
            (Money::Infinite, Money::Infinite) => Equal,
        }
    }
}

impl Add for Money {
    type Output = Money;

    fn add(self, rhs: Money) -> Money {
        match (self, rhs) {
            (Money::Finite(a), Money::Finite(b)) => a.checked_add(b).map_or(Money::Infinite, Money::Finite),
            _ => Money::Infinite,
        }
    }
}

impl From<u64> for Money {
    fn from(v: u64) -> Self {
        Money::Finite(v)
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Money::Finite(v) => write!(f, "{v}"),
            Money::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Money {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Money::Finite(v) => serializer.serialize_u64(*v),
            Money::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Money {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(u64),
            Str(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Int(v) => Ok(Money::Finite(v)),
            Repr::Str(s) if s == "inf" => Ok(Money::Infinite),
            Repr::Str(s) => Err(serde::de::Error::custom(format!(
                "expected a non-negative integer or \"inf\", got {s:?}"
            ))),
        }
    }
}

/// Opaque demand identifier, unique within an instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DemandId(pub u64);

impl fmt::Display for DemandId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Holding-delay cost of serving one demand at each time index.
///
/// `values[s - 1]` is the cost of service at time `s`. Before `arrival` the
/// cost is infinite; it falls to zero at `due` and is non-decreasing after.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HoldingDelayCurve {
    pub arrival: Time,
    pub due: Time,
    pub values: Vec<Money>,
}

impl HoldingDelayCurve {
    pub fn new(arrival: Time, due: Time, values: Vec<Money>) -> Self {
        Self { arrival, due, values }
    }

    /// Cost of serving at `s`; infinite outside `1..=len`.
    pub fn at(&self, s: Time) -> Money {
        if s == 0 {
            return Money::Infinite;
        }
        self.values.get(s - 1).copied().unwrap_or(Money::Infinite)
    }

    pub fn horizon(&self) -> usize {
        self.values.len()
    }

    /// True when the curve is non-increasing up to `due` and
    /// non-decreasing after it.
    pub fn is_unimodal(&self) -> bool {
        let due = self.due;
        (1..due).all(|s| self.at(s) >= self.at(s + 1))
            && (due..self.values.len()).all(|s| self.at(s) <= self.at(s + 1))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Demand {
    pub id: DemandId,
    /// 1-based item type.
    pub item: usize,
    pub curve: HoldingDelayCurve,
}

impl Demand {
    pub fn due(&self) -> Time {
        self.curve.due
    }

    pub fn arrival(&self) -> Time {
        self.curve.arrival
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub horizon: usize,
    /// General ordering cost K₀, paid once per order.
    pub general_cost: u64,
    /// Item ordering costs; `item_costs[i - 1]` is K_i.
    pub item_costs: Vec<u64>,
    pub demands: Vec<Demand>,
}

impl Instance {
    pub fn n_items(&self) -> usize {
        self.item_costs.len()
    }

    pub fn item_cost(&self, item: usize) -> u64 {
        self.item_costs[item - 1]
    }

    /// K₀ + K₁ for single-item instances.
    pub fn single_order_cost(&self) -> u64 {
        self.general_cost + self.item_costs.iter().sum::<u64>()
    }

    pub fn demand_index(&self, id: DemandId) -> Option<usize> {
        self.demands.iter().position(|d| d.id == id)
    }

    /// Demand indices sorted by `(item, id)`, the deterministic tie order.
    pub fn tie_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.demands.len()).collect();
        idx.sort_by_key(|&d| (self.demands[d].item, self.demands[d].id));
        idx
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    EmptyHorizon,
    DuplicateDemandId,
    UnknownItem,
    TimeOutOfRange,
    ArrivalAfterDue,
    CurveLength,
    NonZeroAtDue,
    FiniteBeforeArrival,
    InfiniteAfterArrival,
    NotNonIncreasingBeforeDue,
    NotNonDecreasingAfterDue,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            ViolationKind::EmptyHorizon => "horizon must be at least 1",
            ViolationKind::DuplicateDemandId => "duplicate demand id",
            ViolationKind::UnknownItem => "item index out of range",
            ViolationKind::TimeOutOfRange => "time index out of range",
            ViolationKind::ArrivalAfterDue => "arrival after due",
            ViolationKind::CurveLength => "curve length differs from horizon",
            ViolationKind::NonZeroAtDue => "non-zero value at due",
            ViolationKind::FiniteBeforeArrival => "finite value before arrival",
            ViolationKind::InfiniteAfterArrival => "infinite value at or after arrival",
            ViolationKind::NotNonIncreasingBeforeDue => "not non-increasing before due",
            ViolationKind::NotNonDecreasingAfterDue => "not non-decreasing after due",
        };
        f.write_str(msg)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub demand: Option<DemandId>,
    pub time: Option<Time>,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(d) = self.demand {
            write!(f, "demand {d}: ")?;
        }
        write!(f, "{}", self.kind)?;
        if let Some(s) = self.time {
            write!(f, " at s={s}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every structural and curve invariant. Violations are data.
pub fn validate(inst: &Instance) -> ValidationReport {
    let mut out = Vec::new();
    let mut push = |demand: Option<DemandId>, time: Option<Time>, kind| {
        out.push(Violation { demand, time, kind })
    };
    let t_max = inst.horizon;
    if t_max == 0 {
        push(None, None, ViolationKind::EmptyHorizon);
    }
    let mut seen = HashSet::new();
    for d in &inst.demands {
        let id = Some(d.id);
        if !seen.insert(d.id) {
            push(id, None, ViolationKind::DuplicateDemandId);
        }
        if d.item == 0 || d.item > inst.n_items() {
            push(id, None, ViolationKind::UnknownItem);
        }
        let c = &d.curve;
        if c.values.len() != t_max {
            push(id, None, ViolationKind::CurveLength);
            continue;
        }
        let mut timing_ok = true;
        for s in [c.arrival, c.due] {
            if s == 0 || s > t_max {
                push(id, Some(s), ViolationKind::TimeOutOfRange);
                timing_ok = false;
            }
        }
        if !timing_ok {
            continue;
        }
        if c.arrival > c.due {
            push(id, Some(c.arrival), ViolationKind::ArrivalAfterDue);
            continue;
        }
        if c.at(c.due) != Money::ZERO {
            push(id, Some(c.due), ViolationKind::NonZeroAtDue);
        }
        for s in 1..c.arrival {
            if c.at(s).is_finite() {
                push(id, Some(s), ViolationKind::FiniteBeforeArrival);
            }
        }
        for s in c.arrival..=t_max {
            if !c.at(s).is_finite() {
                push(id, Some(s), ViolationKind::InfiniteAfterArrival);
            }
        }
        for s in c.arrival..c.due {
            if c.at(s) < c.at(s + 1) {
                push(id, Some(s + 1), ViolationKind::NotNonIncreasingBeforeDue);
            }
        }
        for s in c.due..t_max {
            if c.at(s) > c.at(s + 1) {
                push(id, Some(s + 1), ViolationKind::NotNonDecreasingAfterDue);
            }
        }
    }
    ValidationReport { violations: out }
}

/// Replenishment orders plus the demand → service-time assignment.
///
/// At most one order exists per time index; adding a second order at the
/// same time merges the item sets.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Schedule {
    pub orders: BTreeMap<Time, BTreeSet<usize>>,
    pub assignment: BTreeMap<DemandId, Time>,
}

impl Schedule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_order(&mut self, time: Time, items: impl IntoIterator<Item = usize>) {
        self.orders.entry(time).or_default().extend(items);
    }

    pub fn assign(&mut self, demand: DemandId, time: Time) {
        self.assignment.insert(demand, time);
    }

    pub fn n_orders(&self) -> usize {
        self.orders.len()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub general_ordering: u64,
    pub item_ordering: u64,
    pub holding: u64,
    pub delay: u64,
    pub total: u64,
}

impl CostBreakdown {
    pub fn ordering(&self) -> u64 {
        self.general_ordering + self.item_ordering
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CostError {
    #[error("demand {0} has no assignment")]
    UnservedDemand(DemandId),
    #[error("demand {demand} cannot be served at s={time}: {reason}")]
    InfeasibleService { demand: DemandId, time: Time, reason: &'static str },
    #[error("schedule references {0}")]
    InvalidReference(String),
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("instance failed validation: {0}")]
    Invalid(ValidationReport),
}

/// Exact cost of `sched` on `inst`, using the curves as given.
pub fn cost_of(inst: &Instance, sched: &Schedule) -> Result<CostBreakdown, CostError> {
    let mut out = CostBreakdown::default();
    for (&time, items) in &sched.orders {
        if time == 0 || time > inst.horizon {
            return Err(CostError::InvalidReference(format!("order time {time}")));
        }
        out.general_ordering += inst.general_cost;
        for &i in items {
            if i == 0 || i > inst.n_items() {
                return Err(CostError::InvalidReference(format!("item {i}")));
            }
            out.item_ordering += inst.item_cost(i);
        }
    }
    let ids: HashSet<DemandId> = inst.demands.iter().map(|d| d.id).collect();
    if let Some(stray) = sched.assignment.keys().find(|id| !ids.contains(id)) {
        return Err(CostError::InvalidReference(format!("unknown demand {stray}")));
    }
    for d in &inst.demands {
        let &time = sched.assignment.get(&d.id).ok_or(CostError::UnservedDemand(d.id))?;
        let infeasible = |reason| CostError::InfeasibleService { demand: d.id, time, reason };
        let items = sched.orders.get(&time).ok_or_else(|| infeasible("no order at that time"))?;
        if !items.contains(&d.item) {
            return Err(infeasible("order lacks the demand's item"));
        }
        let cost = d.curve.at(time).finite().ok_or_else(|| infeasible("infinite holding-delay cost"))?;
        if time <= d.due() {
            out.holding += cost;
        } else {
            out.delay += cost;
        }
    }
    out.total = out.general_ordering + out.item_ordering + out.holding + out.delay;
    Ok(out)
}
