//! Single-item lot-sizing: the offline exact primal-dual solver and the
//! online solver with full-K or golden-ratio premature service.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::dualcore::{rat, DualError, DualState, DualViolation, RaiseMode, RaiseOutcome, RaiseRequest, Rational};
use crate::instance::{canonicalize, cost_of, Canonical, CostError, DemandId, Instance, InstanceError, Schedule, Time};
use crate::timeline::{self, Step};
use crate::trace::{fmt_rat, Trace, TraceEvent};

#[derive(Debug, Error)]
pub enum LotSizingError {
    #[error("instance has {0} item types; single-item solver needs exactly one")]
    MultiItem(usize),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Dual(#[from] DualError),
    #[error("dual infeasible: {0}")]
    Infeasible(DualViolation),
    #[error("schedule cost: {0}")]
    Cost(#[from] CostError),
    #[error("certificate check failed: {0}")]
    Certificate(String),
}

impl From<DualViolation> for LotSizingError {
    fn from(v: DualViolation) -> Self {
        LotSizingError::Infeasible(v)
    }
}

fn require_single(inst: &Instance) -> Result<(), LotSizingError> {
    if inst.n_items() > 1 {
        return Err(LotSizingError::MultiItem(inst.n_items()));
    }
    Ok(())
}

/// Result of the offline solver, in canonical coordinates.
#[derive(Clone, Debug)]
pub struct OfflineCertificate {
    pub canonical: Canonical,
    pub dual: DualState,
    /// Tight channel → wavefront at which it first became tight.
    pub tight_times: BTreeMap<Time, Rational>,
    /// Chosen order times.
    pub chosen_orders: Vec<Time>,
    pub primary: BTreeSet<DemandId>,
    /// Canonical service time of each demand.
    pub service: BTreeMap<DemandId, Time>,
    pub canonical_schedule: Schedule,
    pub primal_cost: u64,
}

impl OfflineCertificate {
    /// Interval `(s, s_freeze]` of a tight channel.
    pub fn order_interval(&self, s: Time) -> Option<(Time, Rational)> {
        self.tight_times.get(&s).map(|&f| (s, f))
    }

    /// Times where serving demand `k` costs no more than its final dual value.
    pub fn demand_interval(&self, k: usize) -> Vec<Time> {
        let curve = &self.canonical.instance.demands[k].curve;
        let b = self.dual.b(k);
        (1..=self.canonical.instance.horizon)
            .filter(|&q| curve.at(q).finite().is_some_and(|h| rat(h) <= b))
            .collect()
    }

    /// Re-checks every invariant of the construction.
    pub fn check(&self) -> Result<(), LotSizingError> {
        let fail = |m: String| Err(LotSizingError::Certificate(m));
        let ci = &self.canonical.instance;
        self.dual.assert_feasible(ci)?;
        for (a, &s1) in self.chosen_orders.iter().enumerate() {
            for &s2 in &self.chosen_orders[a + 1..] {
                if !disjoint((s1, self.tight_times[&s1]), (s2, self.tight_times[&s2])) {
                    return fail(format!("intervals of orders {s1} and {s2} overlap"));
                }
            }
        }
        let chosen: BTreeSet<Time> = self.chosen_orders.iter().copied().collect();
        for (k, d) in ci.demands.iter().enumerate() {
            let b = self.dual.b(k);
            if !self.demand_interval(k).iter().any(|q| chosen.contains(q)) {
                return fail(format!("demand {} has no chosen order in its interval", d.id));
            }
            let s = self.service[&d.id];
            let h = rat(d.curve.at(s).finite().expect("finite service"));
            if self.primary.contains(&d.id) {
                let paying = chosen.iter().filter(|&&q| self.dual.z(k, q).total().is_positive()).count();
                if paying != 1 {
                    return fail(format!("primary demand {} pays toward {paying} orders", d.id));
                }
                if h != b - self.dual.z(k, s).total() {
                    return fail(format!("primary demand {} holding-delay differs from its dual share", d.id));
                }
            } else if h > b {
                return fail(format!("demand {} costs more than its dual value", d.id));
            }
        }
        if rat(self.primal_cost) != self.dual.dual_objective() {
            return fail(format!("primal {} differs from dual {}", self.primal_cost, self.dual.dual_objective()));
        }
        Ok(())
    }
}

fn disjoint(a: (Time, Rational), b: (Time, Rational)) -> bool {
    let (a0, a1) = (Rational::from_integer(a.0 as i64), a.1);
    let (b0, b1) = (Rational::from_integer(b.0 as i64), b.1);
    a1 <= a0 || b1 <= b0 || a1 <= b0 || b1 <= a0
}

/// Exact optimum by the primal-dual wavefront. Returns the schedule on the
/// original time indices plus the certificate.
pub fn solve_offline_exact(inst: &Instance) -> Result<(Schedule, OfflineCertificate), LotSizingError> {
    require_single(inst)?;
    let canonical = canonicalize(inst)?;
    let ci = &canonical.instance;
    let mut dual = DualState::new(ci);
    let steps = timeline::steps(ci);

    let mut idx = 0;
    while idx < steps.len() {
        let step = steps[idx];
        let k = step.demand;
        // Consecutive unit steps of one demand form a single linear segment.
        let mut end = idx;
        while end + 1 < steps.len()
            && steps[end + 1].demand == k
            && steps[end + 1].pos == steps[end].pos + 1
            && steps[end + 1].tail_unit.is_some() == step.tail_unit.is_some()
        {
            end += 1;
        }
        idx = end + 1;
        if dual.is_frozen(k) {
            continue;
        }
        let curve = &ci.demands[k].curve;
        let last = steps[end];
        let out = dual.raise(RaiseRequest {
            demand: k,
            curve,
            target: last.target(curve, ci.horizon, None),
            mode: RaiseMode::Offline,
            from: step.from(),
            to: last.to(),
        })?;
        dual.check_local(k, curve)?;
        let _ = out;
    }
    dual.assert_feasible(ci)?;
    if let Some(k) = (0..ci.demands.len()).find(|&k| !dual.is_frozen(k)) {
        return Err(LotSizingError::Certificate(format!("demand {} never froze", ci.demands[k].id)));
    }

    let triggers: BTreeSet<Time> = dual.freeze_log().iter().filter_map(|e| e.trigger).collect();
    let mut tight_times = BTreeMap::new();
    for q in 1..=ci.horizon {
        if let Some(f) = dual.channel_tight_at(q) {
            let used = dual.general_sum(q).is_positive() || ci.n_items() == 1 && dual.item_sum(1, q).is_positive();
            if used || triggers.contains(&q) {
                tight_times.insert(q, f);
            }
        }
    }
    let mut chosen_orders: Vec<Time> = Vec::new();
    for (&s, &f) in tight_times.iter().rev() {
        if chosen_orders.iter().all(|&o| disjoint((s, f), (o, tight_times[&o]))) {
            chosen_orders.push(s);
        }
    }
    chosen_orders.sort_unstable();

    let mut sched = Schedule::new();
    for &s in &chosen_orders {
        sched.add_order(s, [1]);
    }
    let mut primary = BTreeSet::new();
    let mut service = BTreeMap::new();
    for (k, d) in ci.demands.iter().enumerate() {
        let paying = chosen_orders.iter().copied().find(|&q| dual.z(k, q).total().is_positive());
        let s = match paying {
            Some(q) => {
                primary.insert(d.id);
                q
            }
            None => {
                let b = dual.b(k);
                chosen_orders
                    .iter()
                    .copied()
                    .filter_map(|q| d.curve.at(q).finite().filter(|&h| rat(h) <= b).map(|h| (h, q)))
                    .min()
                    .map(|(_, q)| q)
                    .ok_or_else(|| LotSizingError::Certificate(format!("demand {} has no reachable order", d.id)))?
            }
        };
        service.insert(d.id, s);
        sched.assign(d.id, s);
    }
    let primal_cost = cost_of(ci, &sched)?.total;
    let original = canonical.to_original(&sched);
    let cert = OfflineCertificate {
        canonical,
        dual,
        tight_times,
        chosen_orders,
        primary,
        service,
        canonical_schedule: sched,
        primal_cost,
    };
    cert.check()?;
    Ok((original, cert))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Policy {
    /// Premature service up to the full order cost K.
    FullK,
    /// Premature service up to (φ − 1)·K.
    Golden,
}

/// True iff `sum_holding > (φ − 1)·k`, decided in integers.
pub fn golden_exceeds(sum_holding: u64, k: u64) -> bool {
    let lhs = 2 * sum_holding as u128 + k as u128;
    lhs * lhs > 5 * (k as u128) * (k as u128)
}

/// Holding budget test shared by the premature-service steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Threshold {
    /// Admit while the running total stays at or below the bound.
    AtMost(Rational),
    /// Admit while the running total does not exceed (φ − 1)·K.
    Golden(u64),
}

impl Threshold {
    pub fn admits(&self, total: u64) -> bool {
        match *self {
            Threshold::AtMost(bound) => rat(total) <= bound,
            Threshold::Golden(k) => !golden_exceeds(total, k),
        }
    }
}

/// A premature candidate: identifier, ranking time (`None` ranks last),
/// due time, and holding cost if served now. `tail` is how far past the
/// last value the curve must rise to reach the holding cost, used to order
/// candidates without a ranking time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub id: DemandId,
    pub rank: Option<Time>,
    pub due: Time,
    pub holding: u64,
    pub tail: u64,
}

impl Candidate {
    fn key(&self) -> (bool, u64, Time, DemandId) {
        match self.rank {
            Some(r) => (false, r as u64, self.due, self.id),
            None => (true, self.tail, 0, self.id),
        }
    }
}

/// Ranks candidates by `(rank, due, id)`, undefined ranks last by
/// `(tail, id)`, and admits them in order until the first one that would
/// break the threshold.
pub fn admit(candidates: &[Candidate], threshold: Threshold) -> Vec<DemandId> {
    let mut sorted = candidates.to_vec();
    sorted.sort_by_key(Candidate::key);
    let mut total = 0u64;
    let mut out = Vec::new();
    for c in sorted {
        if !threshold.admits(total + c.holding) {
            break;
        }
        total += c.holding;
        out.push(c.id);
    }
    out
}

/// One order of the online single-item run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SingleOrder {
    pub position: usize,
    pub time: Time,
    pub trigger_demand: DemandId,
    pub trigger_channel: Option<Time>,
    /// Σ b at the moment the order is placed.
    pub dual_at_order: Rational,
    pub mature: Vec<DemandId>,
    pub premature: Vec<DemandId>,
    pub premature_holding: u64,
}

#[derive(Clone, Debug)]
pub struct OnlineSingleRun {
    pub policy: Policy,
    pub schedule: Schedule,
    pub canonical: Canonical,
    pub canonical_schedule: Schedule,
    pub trace: Trace,
    pub orders: Vec<SingleOrder>,
    pub dual: DualState,
    /// Dual value of each demand when it was served.
    pub served_value: BTreeMap<DemandId, Rational>,
}

/// Online algorithm: orders when an active demand freezes, then serves
/// mature demands and a ranked batch of premature ones.
pub fn solve_online_single(inst: &Instance, policy: Policy, trace: bool) -> Result<OnlineSingleRun, LotSizingError> {
    require_single(inst)?;
    let canonical = canonicalize(inst)?;
    let ci = &canonical.instance;
    let k_total = ci.single_order_cost();
    let mut tr = if trace { Trace::enabled() } else { Trace::disabled() };
    let mut dual = DualState::new(ci);
    let arrivals = timeline::arrival_order(ci);
    let mut next_arrival = 0;
    let mut arrived = vec![false; ci.demands.len()];
    let mut served: Vec<Option<Time>> = vec![None; ci.demands.len()];
    let mut sched = Schedule::new();
    let mut orders = Vec::new();
    let mut served_value = BTreeMap::new();

    for step in timeline::steps(ci) {
        let time = step.time(ci.horizon);
        while next_arrival < arrivals.len() && ci.demands[arrivals[next_arrival]].arrival() <= time {
            let k = arrivals[next_arrival];
            arrived[k] = true;
            tr.push(|| TraceEvent::Arrival { time, demand: ci.demands[k].id.0 });
            next_arrival += 1;
        }
        let k = step.demand;
        let d = &ci.demands[k];
        if dual.is_frozen(k) || step.pos < d.due() {
            continue;
        }
        let before = dual.b(k);
        let out = raise_online(&mut dual, ci, &step, k)?;
        tr.push(|| raise_event(&step, d.id, before, dual.b(k), out.is_frozen()));
        let RaiseOutcome::Frozen(ev) = out else { continue };
        tr.push(|| freeze_event(&ev));
        if !ev.was_active {
            continue;
        }
        let mut order = SingleOrder {
            position: step.pos,
            time,
            trigger_demand: d.id,
            trigger_channel: ev.trigger,
            dual_at_order: dual.dual_objective(),
            mature: Vec::new(),
            premature: Vec::new(),
            premature_holding: 0,
        };
        sched.add_order(time, [1]);
        tr.push(|| TraceEvent::OrderPlaced {
            time,
            items: vec![1],
            trigger: ev.trigger,
            trigger_items: ev.tight_items.iter().copied().collect(),
            regular_items: Vec::new(),
        });
        let mut serve = |k: usize, served: &mut Vec<Option<Time>>, sched: &mut Schedule, tr: &mut Trace, dual: &DualState| {
            served[k] = Some(time);
            sched.assign(ci.demands[k].id, time);
            served_value.insert(ci.demands[k].id, dual.b(k));
            tr.push(|| TraceEvent::Serve { time, demand: ci.demands[k].id.0, item: 1 });
        };
        for j in 0..ci.demands.len() {
            if arrived[j] && served[j].is_none() && ci.demands[j].due() <= time {
                serve(j, &mut served, &mut sched, &mut tr, &dual);
                order.mature.push(ci.demands[j].id);
            }
        }
        let candidates: Vec<Candidate> = (0..ci.demands.len())
            .filter(|&j| arrived[j] && served[j].is_none() && !dual.is_frozen(j) && ci.demands[j].due() > time)
            .map(|j| candidate(&ci.demands[j], time, ci.horizon))
            .collect();
        let threshold = match policy {
            Policy::FullK => Threshold::AtMost(rat(k_total)),
            Policy::Golden => Threshold::Golden(k_total),
        };
        for id in admit(&candidates, threshold) {
            let j = ci.demand_index(id).expect("candidate exists");
            let h = ci.demands[j].curve.at(time).finite().expect("arrived");
            serve(j, &mut served, &mut sched, &mut tr, &dual);
            dual.mark_semi_active(j);
            order.premature.push(id);
            order.premature_holding += h;
            tr.push(|| TraceEvent::PrematureAdmit { time, item: 1, demand: id.0, holding: h });
        }
        for j in 0..ci.demands.len() {
            if !dual.is_frozen(j) && ci.demands[j].due() <= time && arrived[j] {
                if let Some(ev) = dual.freeze(j, None) {
                    tr.push(|| freeze_event(&ev));
                }
            }
        }
        dual.assert_feasible(ci)?;
        orders.push(order);
    }
    dual.assert_feasible(ci)?;
    if let Some(j) = served.iter().position(Option::is_none) {
        return Err(LotSizingError::Certificate(format!("demand {} left unserved", ci.demands[j].id)));
    }
    let original = canonical.to_original(&sched);
    Ok(OnlineSingleRun {
        policy,
        schedule: original,
        canonical_schedule: sched,
        canonical,
        trace: tr,
        orders,
        dual,
        served_value,
    })
}

fn raise_online(dual: &mut DualState, ci: &Instance, step: &Step, k: usize) -> Result<RaiseOutcome, LotSizingError> {
    let curve = &ci.demands[k].curve;
    let out = dual.raise(RaiseRequest {
        demand: k,
        curve,
        target: step.target(curve, ci.horizon, None),
        mode: RaiseMode::Online,
        from: step.from(),
        to: step.to(),
    })?;
    dual.check_local(k, curve)?;
    Ok(out)
}

/// Ranking candidate for a premature demand at order time `time`: the first
/// time at or after its due where the curve reaches the current holding cost.
pub fn candidate(d: &crate::instance::Demand, time: Time, horizon: usize) -> Candidate {
    candidate_on(d.id, &d.curve, time, horizon)
}

/// Same ranking for an arbitrary curve, such as a clipped copy.
pub fn candidate_on(id: DemandId, curve: &crate::instance::HoldingDelayCurve, time: Time, horizon: usize) -> Candidate {
    let h = curve.at(time).finite().expect("arrived demand");
    let rank = (curve.due..=horizon).find(|&s| curve.at(s) >= crate::instance::Money::Finite(h));
    let last = curve.at(horizon).finite().unwrap_or(0);
    Candidate { id, rank, due: curve.due, holding: h, tail: h.saturating_sub(last) }
}

pub(crate) fn raise_event(step: &Step, id: DemandId, before: Rational, after: Rational, frozen: bool) -> TraceEvent {
    TraceEvent::Raise { position: step.pos, demand: id.0, from: fmt_rat(before), to: fmt_rat(after), frozen }
}

pub(crate) fn freeze_event(ev: &crate::dualcore::FreezeEvent) -> TraceEvent {
    TraceEvent::Freeze {
        wavefront: fmt_rat(ev.wavefront),
        demand: ev.demand.0,
        value: fmt_rat(ev.value),
        trigger: ev.trigger,
        items: ev.tight_items.iter().copied().collect(),
        was_active: ev.was_active,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvariantViolation(pub String);

impl std::fmt::Display for InvariantViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Checks the per-run guarantees of the online single-item solver.
pub fn check_online_single(run: &OnlineSingleRun) -> Result<(), InvariantViolation> {
    let fail = |m: String| Err(InvariantViolation(m));
    let ci = &run.canonical.instance;
    let k = ci.single_order_cost();
    if let Err(v) = run.dual.assert_feasible(ci) {
        return fail(format!("dual infeasible: {v}"));
    }
    let mut prev: Option<&SingleOrder> = None;
    let mut holding = 0u64;
    for (n, o) in run.orders.iter().enumerate() {
        let delta = o.dual_at_order - prev.map_or(Rational::zero(), |p| p.dual_at_order);
        let fresh = match (prev, o.trigger_channel) {
            (Some(p), Some(s)) => s > p.position,
            _ => true,
        };
        if run.policy == Policy::FullK || fresh {
            if delta < rat(k) {
                return fail(format!("dual grew by {delta} < {k} before order {n}"));
            }
        } else if let Some(p) = prev {
            // The trigger was a candidate at the previous order and was not taken.
            let t = &ci.demands[ci.demand_index(o.trigger_demand).expect("known demand")];
            let need = p.premature_holding + t.curve.at(p.time).finite().unwrap_or(0);
            if delta < rat(need) {
                return fail(format!("dual grew by {delta} < {need} before order {n}"));
            }
        }
        prev = Some(o);
        let ok = match run.policy {
            Policy::FullK => o.premature_holding <= k,
            Policy::Golden => !golden_exceeds(o.premature_holding, k),
        };
        if !ok {
            return fail(format!("order {n} premature holding {} over threshold", o.premature_holding));
        }
        for id in o.mature.iter().chain(&o.premature) {
            let d = &ci.demands[ci.demand_index(*id).expect("known demand")];
            let h = d.curve.at(o.time).finite().expect("finite");
            if o.time <= d.due() {
                holding += h;
            } else if rat(h) > run.dual.b(ci.demand_index(*id).expect("known")) {
                return fail(format!("demand {id} delay {h} exceeds its dual value"));
            }
        }
        if holding > k * (n as u64 + 1) {
            return fail(format!("holding {holding} exceeds ordering after order {n}"));
        }
    }
    Ok(())
}

/// Total cost of a run's schedule on the original instance.
pub fn run_cost(inst: &Instance, sched: &Schedule) -> Result<crate::instance::CostBreakdown, CostError> {
    cost_of(inst, sched)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Demand, HoldingDelayCurve, Money};

    fn fin(v: &[u64]) -> Vec<Money> {
        v.iter().map(|&x| Money::Finite(x)).collect()
    }

    fn single(k0: u64, k1: u64, curves: Vec<HoldingDelayCurve>) -> Instance {
        Instance {
            horizon: curves.first().map_or(1, |c| c.values.len()),
            general_cost: k0,
            item_costs: vec![k1],
            demands: curves
                .into_iter()
                .enumerate()
                .map(|(k, curve)| Demand { id: DemandId(k as u64 + 1), item: 1, curve })
                .collect(),
        }
    }

    #[test]
    fn golden_boundary() {
        assert!(!golden_exceeds(618, 1000));
        assert!(golden_exceeds(619, 1000));
        assert!(!golden_exceeds(0, 0));
        assert!(!golden_exceeds(0, 77));
    }

    #[test]
    fn worked_admission_example() {
        let cands = [
            Candidate { id: DemandId(1), rank: Some(6), due: 5, holding: 50, tail: 0 },
            Candidate { id: DemandId(2), rank: Some(4), due: 5, holding: 75, tail: 0 },
            Candidate { id: DemandId(3), rank: Some(9), due: 5, holding: 15, tail: 0 },
        ];
        assert_eq!(admit(&cands, Threshold::AtMost(rat(100))), vec![DemandId(2)]);
        let zero_budget: Vec<Candidate> = cands.iter().map(|c| Candidate { holding: 0, ..*c }).collect();
        assert_eq!(admit(&cands, Threshold::AtMost(rat(0))), Vec::<DemandId>::new());
        assert_eq!(admit(&zero_budget, Threshold::AtMost(rat(0))).len(), 3);
    }

    #[test]
    fn undefined_rank_goes_last() {
        let cands = [
            Candidate { id: DemandId(1), rank: None, due: 2, holding: 1, tail: 0 },
            Candidate { id: DemandId(2), rank: Some(9), due: 3, holding: 1, tail: 0 },
        ];
        assert_eq!(admit(&cands, Threshold::AtMost(rat(1))), vec![DemandId(2)]);
    }

    #[test]
    fn undefined_ranks_follow_tail_distance() {
        let cands = [
            Candidate { id: DemandId(1), rank: None, due: 2, holding: 9, tail: 5 },
            Candidate { id: DemandId(2), rank: None, due: 7, holding: 4, tail: 2 },
        ];
        assert_eq!(admit(&cands, Threshold::AtMost(rat(5))), vec![DemandId(2)]);
    }

    #[test]
    fn offline_single_demand_pays_one_order() {
        let c = HoldingDelayCurve::new(2, 3, vec![Money::Infinite, Money::Finite(1), Money::ZERO, Money::Finite(2), Money::Finite(4), Money::Finite(6)]);
        let inst = single(2, 3, vec![c]);
        let (sched, cert) = solve_offline_exact(&inst).unwrap();
        assert_eq!(cost_of(&inst, &sched).unwrap().total, 5);
        assert_eq!(cert.dual.dual_objective(), rat(5));
        assert_eq!(sched.orders.keys().copied().collect::<Vec<_>>(), vec![3]);
    }

    #[test]
    fn offline_empty_instance() {
        let inst = Instance { horizon: 3, general_cost: 4, item_costs: vec![1], demands: vec![] };
        let (sched, cert) = solve_offline_exact(&inst).unwrap();
        assert_eq!(sched.n_orders(), 0);
        assert_eq!(cert.dual.dual_objective(), rat(0));
    }

    #[test]
    fn offline_two_far_demands() {
        // Two demands due 2 and 9 with holding/delay 10 across and K = 5.
        let mut a = vec![Money::Infinite; 9];
        let mut b = vec![Money::Infinite; 9];
        for s in 1..=9u64 {
            a[s as usize - 1] = Money::Finite(if s < 2 { 3 } else { (s - 2) * 10 / 7 });
            b[s as usize - 1] = Money::Finite(if s < 9 { (9 - s) * 10 / 7 } else { 0 });
        }
        let inst = single(5, 0, vec![HoldingDelayCurve::new(1, 2, a), HoldingDelayCurve::new(1, 9, b)]);
        let (sched, cert) = solve_offline_exact(&inst).unwrap();
        assert_eq!(cost_of(&inst, &sched).unwrap().total, 10);
        assert_eq!(cert.dual.dual_objective(), rat(10));
    }

    #[test]
    fn online_full_k_serves_everything() {
        let inst = single(
            1,
            3,
            vec![
                HoldingDelayCurve::new(1, 2, fin(&[2, 0, 1, 2, 3, 4, 5, 6])),
                HoldingDelayCurve::new(1, 5, fin(&[4, 3, 2, 1, 0, 1, 2, 3])),
            ],
        );
        for policy in [Policy::FullK, Policy::Golden] {
            let run = solve_online_single(&inst, policy, true).unwrap();
            assert!(cost_of(&inst, &run.schedule).is_ok());
            check_online_single(&run).unwrap();
        }
    }

    #[test]
    fn online_no_demands_no_orders() {
        let inst = Instance { horizon: 2, general_cost: 1, item_costs: vec![1], demands: vec![] };
        let run = solve_online_single(&inst, Policy::FullK, false).unwrap();
        assert_eq!(run.schedule.n_orders(), 0);
    }

    #[test]
    fn multi_item_is_refused() {
        let inst = Instance { horizon: 2, general_cost: 1, item_costs: vec![1, 1], demands: vec![] };
        assert!(matches!(solve_offline_exact(&inst), Err(LotSizingError::MultiItem(2))));
        assert!(matches!(solve_online_single(&inst, Policy::Golden, false), Err(LotSizingError::MultiItem(2))));
    }
}
