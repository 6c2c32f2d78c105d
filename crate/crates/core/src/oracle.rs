//! Exact optima at desk scale, schedule verification and ratio measurement.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::instance::{cost_of, write_instance, CostBreakdown, CostError, DemandId, HoldingDelayCurve, Instance, Money, Schedule, Time};
use crate::jrp::{self, JrpError, Variant};
use crate::lotsizing::{self, LotSizingError, Policy};

pub const DEFAULT_MAX_HORIZON: usize = 14;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance has {0} item types; this oracle needs one")]
    MultiItem(usize),
    #[error("horizon {horizon} exceeds the oracle cap {cap}")]
    HorizonTooLarge { horizon: usize, cap: usize },
    #[error("demand {0} has a curve that is not non-increasing then non-decreasing")]
    NonMonotone(DemandId),
    #[error("no feasible schedule exists")]
    Infeasible,
    #[error(transparent)]
    LotSizing(#[from] LotSizingError),
    #[error(transparent)]
    Jrp(#[from] JrpError),
    #[error(transparent)]
    Cost(#[from] CostError),
}

/// Precomputed service sums for one item's demands over all time pairs.
struct ItemTables {
    /// `head[b]`: demands due before `b`, all served at `b`.
    head: Vec<Money>,
    /// `tail[a]`: demands due at or after `a`, all served at `a`.
    tail: Vec<Money>,
    /// `seg[a][b]`: demands with `a <= due < b`, each at the cheaper end.
    seg: Vec<Vec<Money>>,
}

impl ItemTables {
    fn new(horizon: usize, curves: &[&HoldingDelayCurve]) -> Self {
        let t = horizon;
        let mut head = vec![Money::ZERO; t + 1];
        let mut tail = vec![Money::ZERO; t + 1];
        let mut seg = vec![vec![Money::ZERO; t + 1]; t + 1];
        for c in curves {
            for s in 1..=t {
                if c.due < s {
                    head[s] = head[s] + c.at(s);
                } else {
                    tail[s] = tail[s] + c.at(s);
                }
            }
            for a in 1..=c.due.min(t) {
                for b in c.due + 1..=t {
                    seg[a][b] = seg[a][b] + c.at(a).min(c.at(b));
                }
            }
        }
        Self { head, tail, seg }
    }

    /// Cheapest subset of `times` (ascending) with per-order cost `k`.
    /// Returns cost and chosen positions into `times`.
    fn solve(&self, times: &[Time], k: u64, want_choice: bool) -> (Money, Vec<usize>) {
        let m = times.len();
        if m == 0 {
            return (Money::Infinite, Vec::new());
        }
        let mut f = vec![Money::Infinite; m];
        let mut from = vec![usize::MAX; m];
        for j in 0..m {
            let b = times[j];
            let mut best = self.head[b];
            let mut arg = usize::MAX;
            for a in 0..j {
                let v = f[a] + self.seg[times[a]][b];
                if v < best {
                    best = v;
                    arg = a;
                }
            }
            f[j] = best + Money::Finite(k);
            from[j] = arg;
        }
        let mut best = Money::Infinite;
        let mut last = usize::MAX;
        for a in 0..m {
            let v = f[a] + self.tail[times[a]];
            if v < best {
                best = v;
                last = a;
            }
        }
        let mut chosen = Vec::new();
        if want_choice && best.is_finite() {
            let mut j = last;
            while j != usize::MAX {
                chosen.push(j);
                j = from[j];
            }
            chosen.reverse();
        }
        (best, chosen)
    }
}

fn assign_cheapest(sched: &mut Schedule, inst: &Instance) {
    for d in &inst.demands {
        let best = sched
            .orders
            .iter()
            .filter(|(_, items)| items.contains(&d.item))
            .map(|(&s, _)| (d.curve.at(s), s))
            .min();
        if let Some((v, s)) = best {
            if v.is_finite() {
                sched.assign(d.id, s);
            }
        }
    }
}

fn require_monotone(inst: &Instance) -> Result<(), OracleError> {
    match inst.demands.iter().find(|d| !d.curve.is_unimodal()) {
        Some(d) => Err(OracleError::NonMonotone(d.id)),
        None => Ok(()),
    }
}

/// Exact single-item optimum with order cost `K0 + K1`, by dynamic
/// programming over the last order time.
pub fn optimal_single_dp(inst: &Instance) -> Result<(Schedule, Money), OracleError> {
    if inst.n_items() > 1 {
        return Err(OracleError::MultiItem(inst.n_items()));
    }
    require_monotone(inst)?;
    if inst.demands.is_empty() {
        return Ok((Schedule::new(), Money::ZERO));
    }
    let curves: Vec<&HoldingDelayCurve> = inst.demands.iter().map(|d| &d.curve).collect();
    let tables = ItemTables::new(inst.horizon, &curves);
    let times: Vec<Time> = (1..=inst.horizon).collect();
    let (cost, chosen) = tables.solve(&times, inst.single_order_cost(), true);
    if !cost.is_finite() {
        return Err(OracleError::Infeasible);
    }
    let mut sched = Schedule::new();
    for j in chosen {
        sched.add_order(times[j], [1]);
    }
    assign_cheapest(&mut sched, inst);
    Ok((sched, cost))
}

/// Single-item optimum by trying every order set. Works for any curve shape.
pub fn exhaustive_single(inst: &Instance) -> Result<Money, OracleError> {
    if inst.n_items() > 1 {
        return Err(OracleError::MultiItem(inst.n_items()));
    }
    if inst.horizon > 20 {
        return Err(OracleError::HorizonTooLarge { horizon: inst.horizon, cap: 20 });
    }
    let t = inst.horizon;
    let k = inst.single_order_cost();
    let mut best = if inst.demands.is_empty() { Money::ZERO } else { Money::Infinite };
    for mask in 1u32..(1 << t) {
        let mut total = Money::Finite(k * mask.count_ones() as u64);
        for d in &inst.demands {
            let v = (1..=t).filter(|s| mask >> (s - 1) & 1 == 1).map(|s| d.curve.at(s)).min().unwrap_or(Money::Infinite);
            total = total + v;
        }
        best = best.min(total);
    }
    Ok(best)
}

/// Item cost for a fixed general order set when some curve is not unimodal.
fn item_fallback(curves: &[&HoldingDelayCurve], times: &[Time], k: u64) -> (Money, Vec<usize>) {
    if curves.is_empty() {
        return (Money::ZERO, Vec::new());
    }
    let cost_of_subset = |subset: &[usize]| {
        let mut total = Money::Finite(k * subset.len() as u64);
        for c in curves {
            total = total + subset.iter().map(|&j| c.at(times[j])).min().unwrap_or(Money::Infinite);
        }
        total
    };
    if k == 0 {
        let all: Vec<usize> = (0..times.len()).collect();
        return (cost_of_subset(&all), all);
    }
    let mut best = (Money::Infinite, Vec::new());
    for mask in 1u32..(1 << times.len()) {
        let subset: Vec<usize> = (0..times.len()).filter(|j| mask >> j & 1 == 1).collect();
        let v = cost_of_subset(&subset);
        if v < best.0 {
            best = (v, subset);
        }
    }
    best
}

/// Exact joint replenishment optimum: enumerate general order sets, solve
/// each item independently on that set.
pub fn optimal_jrp(inst: &Instance, max_horizon: usize) -> Result<(Schedule, Money), OracleError> {
    if inst.horizon > max_horizon || inst.horizon >= 31 {
        return Err(OracleError::HorizonTooLarge { horizon: inst.horizon, cap: max_horizon });
    }
    if inst.demands.is_empty() {
        return Ok((Schedule::new(), Money::ZERO));
    }
    let t = inst.horizon;
    let n = inst.n_items();
    let per_item: Vec<Vec<&HoldingDelayCurve>> = (1..=n)
        .map(|i| inst.demands.iter().filter(|d| d.item == i).map(|d| &d.curve).collect())
        .collect();
    let monotone: Vec<bool> = per_item.iter().map(|cs| cs.iter().all(|c| c.is_unimodal())).collect();
    let tables: Vec<ItemTables> = per_item.iter().map(|cs| ItemTables::new(t, cs)).collect();

    let solve_item = |i: usize, times: &[Time], want: bool| -> (Money, Vec<usize>) {
        if per_item[i].is_empty() {
            return (Money::ZERO, Vec::new());
        }
        if monotone[i] {
            tables[i].solve(times, inst.item_costs[i], want)
        } else {
            item_fallback(&per_item[i], times, inst.item_costs[i])
        }
    };

    let mut best = (Money::Infinite, 0u32);
    let mut times = Vec::with_capacity(t);
    for mask in 1u32..(1 << t) {
        times.clear();
        times.extend((1..=t).filter(|s| mask >> (s - 1) & 1 == 1));
        let mut total = Money::Finite(inst.general_cost * times.len() as u64);
        for i in 0..n {
            if total >= best.0 {
                break;
            }
            total = total + solve_item(i, &times, false).0;
        }
        if total < best.0 {
            best = (total, mask);
        }
    }
    if !best.0.is_finite() {
        return Err(OracleError::Infeasible);
    }
    let times: Vec<Time> = (1..=t).filter(|s| best.1 >> (s - 1) & 1 == 1).collect();
    let mut sched = Schedule::new();
    for &s in &times {
        sched.add_order(s, std::iter::empty());
    }
    for i in 0..n {
        let (_, chosen) = solve_item(i, &times, true);
        for j in chosen {
            sched.add_order(times[j], [i + 1]);
        }
    }
    assign_cheapest(&mut sched, inst);
    Ok((sched, best.0))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScheduleViolation {
    /// A demand with no service time.
    Unserved(DemandId),
    /// Service at a time with no order.
    NoOrder { demand: DemandId, time: Time },
    /// Service by an order that lacks the demand's item.
    ItemMissing { demand: DemandId, time: Time, item: usize },
    /// Service before arrival or at an infinite cost.
    InfeasibleService { demand: DemandId, time: Time },
    /// Order time, item or demand that the instance does not have.
    BadReference(String),
}

impl fmt::Display for ScheduleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleViolation::Unserved(d) => write!(f, "coverage: demand {d} is not served"),
            ScheduleViolation::NoOrder { demand, time } => {
                write!(f, "order presence: demand {demand} served at s={time} where no order exists")
            }
            ScheduleViolation::ItemMissing { demand, time, item } => {
                write!(f, "item presence: order at s={time} lacks item {item} needed by demand {demand}")
            }
            ScheduleViolation::InfeasibleService { demand, time } => {
                write!(f, "infeasible service: demand {demand} cannot be served at s={time}")
            }
            ScheduleViolation::BadReference(m) => write!(f, "bad reference: {m}"),
        }
    }
}

/// Checks every primal constraint; on success returns the exact costs.
pub fn verify_schedule(inst: &Instance, sched: &Schedule) -> Result<CostBreakdown, Vec<ScheduleViolation>> {
    let mut out = Vec::new();
    for (&s, items) in &sched.orders {
        if s == 0 || s > inst.horizon {
            out.push(ScheduleViolation::BadReference(format!("order time {s}")));
        }
        for &i in items {
            if i == 0 || i > inst.n_items() {
                out.push(ScheduleViolation::BadReference(format!("item {i} in order at s={s}")));
            }
        }
    }
    let ids: BTreeSet<DemandId> = inst.demands.iter().map(|d| d.id).collect();
    for id in sched.assignment.keys().filter(|id| !ids.contains(id)) {
        out.push(ScheduleViolation::BadReference(format!("demand {id}")));
    }
    for d in &inst.demands {
        let Some(&s) = sched.assignment.get(&d.id) else {
            out.push(ScheduleViolation::Unserved(d.id));
            continue;
        };
        match sched.orders.get(&s) {
            None => out.push(ScheduleViolation::NoOrder { demand: d.id, time: s }),
            Some(items) if !items.contains(&d.item) => {
                out.push(ScheduleViolation::ItemMissing { demand: d.id, time: s, item: d.item })
            }
            Some(_) => {}
        }
        if s < d.arrival() || !d.curve.at(s).is_finite() {
            out.push(ScheduleViolation::InfeasibleService { demand: d.id, time: s });
        }
    }
    if !out.is_empty() {
        return Err(out);
    }
    cost_of(inst, sched).map_err(|e| vec![ScheduleViolation::BadReference(e.to_string())])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Algorithm {
    OfflineExact,
    Online3,
    OnlinePhi,
    JrpSimple,
    JrpFinal,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] =
        [Algorithm::OfflineExact, Algorithm::Online3, Algorithm::OnlinePhi, Algorithm::JrpSimple, Algorithm::JrpFinal];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::OfflineExact => "offline-exact",
            Algorithm::Online3 => "online-3",
            Algorithm::OnlinePhi => "online-phi",
            Algorithm::JrpSimple => "jrp-simple",
            Algorithm::JrpFinal => "jrp-final",
        }
    }

    pub fn parse(s: &str) -> Option<Algorithm> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }

    pub fn single_item(self) -> bool {
        matches!(self, Algorithm::OfflineExact | Algorithm::Online3 | Algorithm::OnlinePhi)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Output of any solver, reduced to what reporting needs.
#[derive(Clone, Debug)]
pub struct AlgorithmRun {
    pub schedule: Schedule,
    pub trace: crate::trace::Trace,
    /// First invariant failure, if any.
    pub invariant_failure: Option<String>,
}

/// Runs one algorithm and its invariant checks.
pub fn run_algorithm(inst: &Instance, alg: Algorithm, trace: bool) -> Result<AlgorithmRun, OracleError> {
    Ok(match alg {
        Algorithm::OfflineExact => {
            let (schedule, cert) = lotsizing::solve_offline_exact(inst)?;
            let invariant_failure = cert.check().err().map(|e| e.to_string());
            AlgorithmRun { schedule, trace: crate::trace::Trace::disabled(), invariant_failure }
        }
        Algorithm::Online3 | Algorithm::OnlinePhi => {
            let policy = if alg == Algorithm::Online3 { Policy::FullK } else { Policy::Golden };
            let run = lotsizing::solve_online_single(inst, policy, trace)?;
            let invariant_failure = lotsizing::check_online_single(&run).err().map(|e| e.to_string());
            AlgorithmRun { schedule: run.schedule, trace: run.trace, invariant_failure }
        }
        Algorithm::JrpSimple | Algorithm::JrpFinal => {
            let variant = if alg == Algorithm::JrpSimple { Variant::Simple } else { Variant::Final };
            let run = jrp::solve_online_jrp(inst, variant, trace)?;
            let invariant_failure = jrp::check_invariants(&run).err().map(|e| e.to_string());
            AlgorithmRun { schedule: run.schedule, trace: run.trace, invariant_failure }
        }
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RatioReport {
    pub algorithm: Algorithm,
    pub breakdown: CostBreakdown,
    pub optimum: u64,
    /// Reduced ratio; `ratio_den == 0` marks a positive cost against a zero optimum.
    pub ratio_num: u64,
    pub ratio_den: u64,
    pub digest: String,
    pub invariant_failure: Option<String>,
}

impl RatioReport {
    /// Decimal rendering to six places.
    pub fn ratio_decimal(&self) -> String {
        if self.ratio_den == 0 {
            return "inf".to_string();
        }
        let scaled = (self.ratio_num as u128 * 1_000_000 + self.ratio_den as u128 / 2) / self.ratio_den as u128;
        format!("{}.{:06}", scaled / 1_000_000, scaled % 1_000_000)
    }

    /// `ratio <= bound_num / bound_den`, exactly.
    pub fn within(&self, bound_num: u64, bound_den: u64) -> bool {
        self.ratio_den != 0 && self.ratio_num as u128 * bound_den as u128 <= bound_num as u128 * self.ratio_den as u128
    }

    /// `ratio <= φ + 1 = (3 + √5) / 2`, exactly: `2n/d − 3 <= √5`.
    pub fn within_phi_plus_one(&self) -> bool {
        if self.ratio_den == 0 {
            return false;
        }
        let (n, d) = (self.ratio_num as i128, self.ratio_den as i128);
        let lhs = 2 * n - 3 * d;
        lhs <= 0 || lhs * lhs <= 5 * d * d
    }
}

pub fn instance_digest(inst: &Instance) -> String {
    Sha256::digest(write_instance(inst)).iter().map(|b| format!("{b:02x}")).collect()
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Optimum matching the algorithm's problem: the single-item DP for
/// single-item instances with unimodal curves, otherwise the JRP enumeration.
pub fn optimum(inst: &Instance, max_horizon: usize) -> Result<u64, OracleError> {
    let cost = if inst.n_items() <= 1 && inst.demands.iter().all(|d| d.curve.is_unimodal()) {
        optimal_single_dp(inst)?.1
    } else {
        optimal_jrp(inst, max_horizon)?.1
    };
    cost.finite().ok_or(OracleError::Infeasible)
}

pub fn measure_ratio(inst: &Instance, alg: Algorithm) -> Result<RatioReport, OracleError> {
    measure_ratio_capped(inst, alg, DEFAULT_MAX_HORIZON)
}

pub fn measure_ratio_capped(inst: &Instance, alg: Algorithm, max_horizon: usize) -> Result<RatioReport, OracleError> {
    let run = run_algorithm(inst, alg, false)?;
    let opt = optimum(inst, max_horizon)?;
    ratio_report(inst, alg, &run, opt)
}

pub fn ratio_report(inst: &Instance, alg: Algorithm, run: &AlgorithmRun, opt: u64) -> Result<RatioReport, OracleError> {
    let breakdown = cost_of(inst, &run.schedule)?;
    let (num, den) = if opt == 0 {
        if breakdown.total == 0 {
            (1, 1)
        } else {
            (breakdown.total, 0)
        }
    } else {
        let g = gcd(breakdown.total, opt);
        (breakdown.total / g, opt / g)
    };
    Ok(RatioReport {
        algorithm: alg,
        breakdown,
        optimum: opt,
        ratio_num: num,
        ratio_den: den,
        digest: instance_digest(inst),
        invariant_failure: run.invariant_failure.clone(),
    })
}

/// Smallest number of sets covering `1..=n`, by brute force. `None` when
/// some element is in no set.
pub fn min_set_cover(n: usize, sets: &[BTreeSet<usize>]) -> Option<usize> {
    let full: BTreeSet<usize> = (1..=n).collect();
    let mut best: Option<usize> = None;
    for mask in 0u32..(1 << sets.len()) {
        let size = mask.count_ones() as usize;
        if best.is_some_and(|b| size >= b) {
            continue;
        }
        let covered: BTreeSet<usize> =
            (0..sets.len()).filter(|j| mask >> j & 1 == 1).flat_map(|j| sets[j].iter().copied()).collect();
        if full.is_subset(&covered) {
            best = Some(size);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Demand;

    fn demand(id: u64, item: usize, arrival: Time, due: Time, v: Vec<Money>) -> Demand {
        Demand { id: DemandId(id), item, curve: HoldingDelayCurve::new(arrival, due, v) }
    }

    fn fin(v: &[u64]) -> Vec<Money> {
        v.iter().map(|&x| Money::Finite(x)).collect()
    }

    #[test]
    fn one_demand_one_order() {
        let inst = Instance { horizon: 3, general_cost: 2, item_costs: vec![3], demands: vec![demand(1, 1, 1, 2, fin(&[4, 0, 1]))] };
        let (s, c) = optimal_single_dp(&inst).unwrap();
        assert_eq!(c, Money::Finite(5));
        assert_eq!(verify_schedule(&inst, &s).unwrap().total, 5);
        assert_eq!(exhaustive_single(&inst).unwrap(), Money::Finite(5));
        assert_eq!(optimal_jrp(&inst, 14).unwrap().1, Money::Finite(5));
    }

    #[test]
    fn empty_instance_costs_nothing() {
        let inst = Instance { horizon: 4, general_cost: 2, item_costs: vec![3, 1], demands: vec![] };
        let (s, c) = optimal_jrp(&inst, 14).unwrap();
        assert_eq!((s.n_orders(), c), (0, Money::ZERO));
    }

    #[test]
    fn horizon_cap() {
        let inst = Instance { horizon: 15, general_cost: 2, item_costs: vec![3], demands: vec![] };
        assert!(matches!(optimal_jrp(&inst, 14), Err(OracleError::HorizonTooLarge { .. })));
    }

    #[test]
    fn jrp_shares_general_cost() {
        // Two items due at the same time: one joint order.
        let inst = Instance {
            horizon: 2,
            general_cost: 10,
            item_costs: vec![1, 1],
            demands: vec![demand(1, 1, 1, 2, fin(&[5, 0])), demand(2, 2, 1, 2, fin(&[5, 0]))],
        };
        let (s, c) = optimal_jrp(&inst, 14).unwrap();
        assert_eq!(c, Money::Finite(12));
        assert_eq!(verify_schedule(&inst, &s).unwrap().total, 12);
    }

    #[test]
    fn verify_flags_each_constraint() {
        let inst = Instance {
            horizon: 3,
            general_cost: 1,
            item_costs: vec![1, 1],
            demands: vec![demand(1, 1, 2, 2, vec![Money::Infinite, Money::ZERO, Money::Finite(1)])],
        };
        let mut s = Schedule::new();
        s.add_order(2, [2]);
        s.assign(DemandId(1), 2);
        assert!(matches!(verify_schedule(&inst, &s).unwrap_err()[0], ScheduleViolation::ItemMissing { .. }));
        let mut s = Schedule::new();
        s.add_order(1, [1]);
        s.assign(DemandId(1), 1);
        assert!(matches!(verify_schedule(&inst, &s).unwrap_err()[0], ScheduleViolation::InfeasibleService { .. }));
        assert!(matches!(verify_schedule(&inst, &Schedule::new()).unwrap_err()[0], ScheduleViolation::Unserved(_)));
        let mut s = Schedule::new();
        s.add_order(3, [1]);
        s.assign(DemandId(1), 3);
        assert_eq!(verify_schedule(&inst, &s).unwrap().total, 3);
    }

    #[test]
    fn set_cover_brute_force() {
        let sets: Vec<BTreeSet<usize>> = vec![[1, 2].into(), [2, 3].into(), [1, 3].into()];
        assert_eq!(min_set_cover(3, &sets), Some(2));
        assert_eq!(min_set_cover(4, &sets), None);
    }

    #[test]
    fn phi_bound_is_exact() {
        let r = |n, d| RatioReport {
            algorithm: Algorithm::OnlinePhi,
            breakdown: CostBreakdown::default(),
            optimum: d,
            ratio_num: n,
            ratio_den: d,
            digest: String::new(),
            invariant_failure: None,
        };
        assert!(r(2618, 1000).within_phi_plus_one());
        assert!(!r(2619, 1000).within_phi_plus_one());
        assert!(r(1, 1).within_phi_plus_one());
        assert_eq!(r(7, 3).ratio_decimal(), "2.333333");
    }
}
