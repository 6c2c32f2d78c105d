//! Online joint replenishment with forward simulation, premature service and
//! curve clipping, in a simple and a final variant.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::dualcore::{rat, DualError, DualState, DualViolation, FreezeEvent, RaiseMode, RaiseOutcome, RaiseRequest, Rational};
use crate::instance::{canonicalize, Canonical, DemandId, HoldingDelayCurve, Instance, InstanceError, Money, Schedule, Time};
use crate::lotsizing::{admit, candidate_on, freeze_event, raise_event, Threshold};
use crate::timeline::{self, Step};
use crate::trace::{fmt_rat, Trace, TraceEvent};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Variant {
    /// Premature service up to K_i for every ordered item.
    Simple,
    /// Items added by the simulation get K_i minus their simulated increase.
    Final,
}

#[derive(Debug, Error)]
pub enum JrpError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Dual(#[from] DualError),
    #[error("dual infeasible: {0}")]
    Infeasible(DualViolation),
    #[error("demand {0} left unserved")]
    Unserved(DemandId),
}

impl From<DualViolation> for JrpError {
    fn from(v: DualViolation) -> Self {
        JrpError::Infeasible(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SimEnd {
    /// The dual objective grew by exactly K0.
    DualIncreaseK0,
    /// Every visible demand froze.
    AllFrozen,
    /// Steps ran out with unfrozen demands that can no longer grow.
    Horizon,
}

impl fmt::Display for SimEnd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimEnd::DualIncreaseK0 => "dual-increase-k0",
            SimEnd::AllFrozen => "all-frozen",
            SimEnd::Horizon => "horizon",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clip {
    pub demand: DemandId,
    /// Curve values strictly after this time are capped.
    pub after: Time,
    pub value: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimOutcome {
    pub end: SimEnd,
    pub delta: Rational,
    /// Per item, the simulated increase of that item's demands that froze.
    pub alpha: BTreeMap<usize, Rational>,
    pub items: BTreeSet<usize>,
    /// Active demands that froze strictly inside the simulation.
    pub demands: Vec<DemandId>,
    pub clips: Vec<Clip>,
    /// Per item, trigger channel of its first active freeze.
    pub item_trigger: BTreeMap<usize, Time>,
}

impl SimOutcome {
    pub fn alpha(&self, item: usize) -> Rational {
        self.alpha.get(&item).copied().unwrap_or_default()
    }
}

/// Simulated dual trajectory kept for the dominance check.
#[derive(Clone, Debug)]
struct SimWindow {
    start: usize,
    end: usize,
    start_b: Vec<Rational>,
    visible: Vec<bool>,
    changes: Vec<Vec<(usize, Rational)>>,
}

impl SimWindow {
    fn value_at(&self, k: usize, pos: usize) -> Rational {
        let ch = &self.changes[k];
        match ch.partition_point(|&(p, _)| p <= pos) {
            0 => self.start_b[k],
            n => ch[n - 1].1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrematureInfo {
    pub threshold: Rational,
    pub holding: u64,
    pub demands: Vec<DemandId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderRecord {
    pub position: usize,
    pub time: Time,
    pub items: BTreeSet<usize>,
    pub trigger_demand: DemandId,
    pub trigger_channel: Time,
    pub trigger_items: BTreeSet<usize>,
    /// `(s, position]`.
    pub interval: (Time, usize),
    pub item_intervals: BTreeMap<usize, (Time, usize)>,
    pub sim: SimOutcome,
    /// Σ b when the order is placed.
    pub dual_at_order: Rational,
    /// Per item Σ b when the order is placed.
    pub item_dual_at_order: BTreeMap<usize, Rational>,
    pub mature: Vec<DemandId>,
    pub sim_served: Vec<DemandId>,
    pub non_add_on_holding: u64,
    pub premature: BTreeMap<usize, PrematureInfo>,
    pub phase_initiating: bool,
    pub item_phase_initiating: BTreeMap<usize, bool>,
    pub regular_items: BTreeSet<usize>,
}

#[derive(Clone, Debug)]
pub struct JrpRun {
    pub variant: Variant,
    pub schedule: Schedule,
    pub canonical: Canonical,
    pub canonical_schedule: Schedule,
    pub trace: Trace,
    pub records: Vec<OrderRecord>,
    pub dual: DualState,
    /// Working curves after every clip.
    pub working: Vec<HoldingDelayCurve>,
    pub dominance_failures: Vec<String>,
}

/// Step-by-step online run over a canonical instance.
pub struct JrpEngine {
    variant: Variant,
    canonical: Canonical,
    steps: Vec<Step>,
    cursor: usize,
    dual: DualState,
    work: Vec<HoldingDelayCurve>,
    clip: Vec<Option<Rational>>,
    arrivals: Vec<usize>,
    next_arrival: usize,
    arrived: Vec<bool>,
    served: Vec<Option<Time>>,
    sched: Schedule,
    records: Vec<OrderRecord>,
    trace: Trace,
    windows: Vec<SimWindow>,
    dominance_failures: Vec<String>,
}

impl JrpEngine {
    pub fn new(inst: &Instance, variant: Variant, trace: bool) -> Result<Self, JrpError> {
        let canonical = canonicalize(inst)?;
        let ci = &canonical.instance;
        let n = ci.demands.len();
        Ok(Self {
            variant,
            steps: timeline::steps(ci),
            cursor: 0,
            dual: DualState::new(ci),
            work: ci.demands.iter().map(|d| d.curve.clone()).collect(),
            clip: vec![None; n],
            arrivals: timeline::arrival_order(ci),
            next_arrival: 0,
            arrived: vec![false; n],
            served: vec![None; n],
            sched: Schedule::new(),
            records: Vec::new(),
            trace: if trace { Trace::enabled() } else { Trace::disabled() },
            windows: Vec::new(),
            dominance_failures: Vec::new(),
            canonical,
        })
    }

    pub fn canonical(&self) -> &Canonical {
        &self.canonical
    }

    pub fn dual(&self) -> &DualState {
        &self.dual
    }

    pub fn records(&self) -> &[OrderRecord] {
        &self.records
    }

    /// Processes the next step. Returns `false` once the run is over.
    pub fn step(&mut self) -> Result<bool, JrpError> {
        let Some(&step) = self.steps.get(self.cursor) else { return Ok(false) };
        let horizon = self.canonical.instance.horizon;
        let time = step.time(horizon);
        self.reveal(time);
        let k = step.demand;
        let due = self.canonical.instance.demands[k].due();
        if self.arrived[k] && !self.dual.is_frozen(k) && step.pos >= due {
            let before = self.dual.b(k);
            let target = step.target(&self.work[k], horizon, self.clip[k]);
            let out = self.dual.raise(RaiseRequest {
                demand: k,
                curve: &self.work[k],
                target,
                mode: RaiseMode::Online,
                from: step.from(),
                to: step.to(),
            })?;
            self.dual.check_local(k, &self.work[k])?;
            let (dual, id) = (&self.dual, self.canonical.instance.demands[k].id);
            self.trace.push(|| raise_event(&step, id, before, dual.b(k), out.is_frozen()));
            self.check_dominance(k, step.pos);
            if let RaiseOutcome::Frozen(ev) = out {
                self.trace.push(|| freeze_event(&ev));
                if ev.was_active {
                    self.place_order(step, ev)?;
                }
            }
        }
        self.cursor += 1;
        Ok(self.cursor < self.steps.len())
    }

    fn reveal(&mut self, time: Time) {
        let ci = &self.canonical.instance;
        while self.next_arrival < self.arrivals.len() && ci.demands[self.arrivals[self.next_arrival]].arrival() <= time {
            let k = self.arrivals[self.next_arrival];
            self.arrived[k] = true;
            self.trace.push(|| TraceEvent::Arrival { time, demand: ci.demands[k].id.0 });
            self.next_arrival += 1;
        }
    }

    fn check_dominance(&mut self, k: usize, pos: usize) {
        self.windows.retain(|w| w.end >= pos);
        for w in &self.windows {
            if w.start <= pos && w.visible[k] {
                let sim = w.value_at(k, pos);
                if self.dual.b(k) > sim {
                    self.dominance_failures.push(format!(
                        "demand {} at position {pos}: real {} above simulated {sim}",
                        self.canonical.instance.demands[k].id,
                        self.dual.b(k)
                    ));
                }
            }
        }
    }

    fn serve(&mut self, k: usize, time: Time) {
        let d = &self.canonical.instance.demands[k];
        self.served[k] = Some(time);
        self.sched.assign(d.id, time);
        self.trace.push(|| TraceEvent::Serve { time, demand: d.id.0, item: d.item });
    }

    /// Serves every arrived unserved demand of `item` due by `time`, and
    /// freezes all of its demands due by `time`, served or not.
    fn serve_mature(&mut self, item: usize, time: Time) -> Vec<DemandId> {
        let mut out = Vec::new();
        for k in 0..self.work.len() {
            let d = &self.canonical.instance.demands[k];
            if d.item == item && self.arrived[k] && d.due() <= time {
                if self.served[k].is_none() {
                    out.push(d.id);
                    self.serve(k, time);
                }
                if let Some(ev) = self.dual.freeze(k, None) {
                    self.trace.push(|| freeze_event(&ev));
                }
            }
        }
        out
    }

    fn item_duals(&self) -> BTreeMap<usize, Rational> {
        let mut out: BTreeMap<usize, Rational> = (1..=self.canonical.instance.n_items()).map(|i| (i, Rational::zero())).collect();
        for k in 0..self.work.len() {
            *out.entry(self.dual.item(k)).or_default() += self.dual.b(k);
        }
        out
    }

    fn place_order(&mut self, step: Step, ev: FreezeEvent) -> Result<(), JrpError> {
        let ci = self.canonical.instance.clone();
        let time = step.time(ci.horizon);
        let trig = ci.demand_index(ev.demand).expect("known demand");
        let s = ev.trigger.expect("raise freezes carry a trigger");

        let mut trigger_items: BTreeSet<usize> = ev
            .tight_items
            .iter()
            .copied()
            .filter(|&i| {
                (0..ci.demands.len()).any(|k| {
                    ci.demands[k].item == i
                        && self.arrived[k]
                        && (k == trig || self.dual.status(k) == crate::dualcore::DemandStatus::Active)
                        && self.dual.z(k, s).item.is_positive()
                })
            })
            .collect();
        trigger_items.insert(ci.demands[trig].item);

        let dual_at_order = self.dual.dual_objective();
        let item_dual_at_order = self.item_duals();
        self.sched.add_order(time, trigger_items.iter().copied());
        self.serve(trig, time);
        let mut mature = vec![ev.demand];
        for &i in &trigger_items {
            mature.extend(self.serve_mature(i, time));
        }

        let start = self.cursor + 1;
        self.trace.push(|| TraceEvent::SimBegin { time, start: step.pos + 1 });
        let (sim, window) = simulate(&ci, &self.dual, &self.work, &self.clip, &self.arrived, &self.steps, start)?;
        self.windows.push(window);
        self.trace.push(|| TraceEvent::SimEnd {
            end: sim.end.to_string(),
            delta: fmt_rat(sim.delta),
            alpha: sim.alpha.iter().map(|(&i, &a)| (i, fmt_rat(a))).collect(),
            items: sim.items.iter().copied().collect(),
            demands: sim.demands.iter().map(|d| d.0).collect(),
        });
        for c in &sim.clips {
            let k = ci.demand_index(c.demand).expect("known demand");
            apply_clip(&mut self.work[k], c.after, c.value);
            self.clip[k] = Some(self.clip[k].map_or(c.value, |v| v.min(c.value)));
            self.trace.push(|| TraceEvent::Clip { demand: c.demand.0, after: c.after, value: fmt_rat(c.value) });
        }

        let sim_only: BTreeSet<usize> = sim.items.difference(&trigger_items).copied().collect();
        self.sched.add_order(time, sim_only.iter().copied());
        let mut sim_served = Vec::new();
        let mut non_add_on_holding = 0;
        for &id in &sim.demands {
            let k = ci.demand_index(id).expect("known demand");
            if self.served[k].is_none() {
                self.serve(k, time);
                self.dual.mark_semi_active(k);
                sim_served.push(id);
                if time <= ci.demands[k].due() {
                    non_add_on_holding += ci.demands[k].curve.at(time).finite().expect("arrived");
                }
            }
        }
        for &i in &sim_only {
            for k in 0..ci.demands.len() {
                let d = &ci.demands[k];
                if d.item == i && self.arrived[k] && self.served[k].is_none() && d.due() <= time {
                    self.serve(k, time);
                    self.dual.mark_semi_active(k);
                    mature.push(d.id);
                }
            }
        }
        let items: BTreeSet<usize> = trigger_items.union(&sim.items).copied().collect();
        let mut premature = BTreeMap::new();
        for &i in &items {
            let k_i = rat(ci.item_cost(i));
            let threshold = match self.variant {
                Variant::Final if !trigger_items.contains(&i) => k_i - sim.alpha(i),
                _ => k_i,
            };
            let chosen = self.premature_service(time, i, threshold);
            let mut holding = 0;
            for &id in &chosen {
                let k = ci.demand_index(id).expect("known demand");
                let h = ci.demands[k].curve.at(time).finite().expect("arrived");
                holding += h;
                self.serve(k, time);
                self.dual.mark_semi_active(k);
                self.trace.push(|| TraceEvent::PrematureAdmit { time, item: i, demand: id.0, holding: h });
            }
            premature.insert(i, PrematureInfo { threshold, holding, demands: chosen });
        }

        let curves: Vec<&HoldingDelayCurve> = self.work.iter().collect();
        self.dual.assert_feasible_curves(&curves)?;

        let mut item_intervals = BTreeMap::new();
        for &i in &trigger_items {
            item_intervals.insert(i, (s, step.pos));
        }
        for &i in &sim_only {
            item_intervals.insert(i, (sim.item_trigger.get(&i).copied().unwrap_or(s), step.pos));
        }
        self.trace.push(|| TraceEvent::OrderPlaced {
            time,
            items: items.iter().copied().collect(),
            trigger: Some(s),
            trigger_items: trigger_items.iter().copied().collect(),
            regular_items: Vec::new(),
        });
        self.records.push(OrderRecord {
            position: step.pos,
            time,
            items,
            trigger_demand: ev.demand,
            trigger_channel: s,
            trigger_items,
            interval: (s, step.pos),
            item_intervals,
            sim,
            dual_at_order,
            item_dual_at_order,
            mature,
            sim_served,
            non_add_on_holding,
            premature,
            phase_initiating: false,
            item_phase_initiating: BTreeMap::new(),
            regular_items: BTreeSet::new(),
        });
        Ok(())
    }

    /// Ranked premature service of `item` at `time` under `threshold`.
    /// Candidates are arrived, unserved, unfrozen demands due after `time`.
    pub fn premature_service(&self, time: Time, item: usize, threshold: Rational) -> Vec<DemandId> {
        let ci = &self.canonical.instance;
        let candidates: Vec<_> = (0..ci.demands.len())
            .filter(|&k| {
                let d = &ci.demands[k];
                d.item == item && self.arrived[k] && self.served[k].is_none() && !self.dual.is_frozen(k) && d.due() > time
            })
            .map(|k| candidate_on(ci.demands[k].id, &self.work[k], time, ci.horizon))
            .collect();
        admit(&candidates, Threshold::AtMost(threshold))
    }

    /// Forward simulation from the step after the current one, on copies.
    pub fn simulate_from_next(&self) -> Result<SimOutcome, JrpError> {
        simulate(&self.canonical.instance, &self.dual, &self.work, &self.clip, &self.arrived, &self.steps, self.cursor + 1)
            .map(|(s, _)| s)
    }

    pub fn finish(mut self) -> Result<JrpRun, JrpError> {
        while self.step()? {}
        let ci = &self.canonical.instance;
        let curves: Vec<&HoldingDelayCurve> = self.work.iter().collect();
        self.dual.assert_feasible_curves(&curves)?;
        if let Some(k) = self.served.iter().position(Option::is_none) {
            return Err(JrpError::Unserved(ci.demands[k].id));
        }
        classify_orders(&mut self.records);
        let schedule = self.canonical.to_original(&self.sched);
        Ok(JrpRun {
            variant: self.variant,
            schedule,
            canonical_schedule: self.sched,
            canonical: self.canonical,
            trace: self.trace,
            records: self.records,
            dual: self.dual,
            working: self.work,
            dominance_failures: self.dominance_failures,
        })
    }
}

fn apply_clip(curve: &mut HoldingDelayCurve, after: Time, value: Rational) {
    let v = Money::Finite(value.to_integer() as u64);
    for q in after + 1..=curve.values.len() {
        if curve.values[q - 1] > v {
            curve.values[q - 1] = v;
        }
    }
}

/// Forward simulation over deep copies: no arrivals after the order, each
/// raise capped so the total increase never passes K0.
fn simulate(
    ci: &Instance,
    dual: &DualState,
    work: &[HoldingDelayCurve],
    clip: &[Option<Rational>],
    visible: &[bool],
    steps: &[Step],
    start: usize,
) -> Result<(SimOutcome, SimWindow), JrpError> {
    let n = work.len();
    let horizon = ci.horizon;
    let k0 = rat(ci.general_cost);
    let mut d = dual.clone();
    let mut curves = work.to_vec();
    let mut clip = clip.to_vec();
    let mut delta = Rational::zero();
    let mut gained = vec![Rational::zero(); n];
    let mut frozen_here = vec![false; n];
    let mut out = SimOutcome {
        end: SimEnd::Horizon,
        delta: Rational::zero(),
        alpha: BTreeMap::new(),
        items: BTreeSet::new(),
        demands: Vec::new(),
        clips: Vec::new(),
        item_trigger: BTreeMap::new(),
    };
    let start_pos = steps.get(start).map_or(usize::MAX, |s| s.pos);
    let mut window = SimWindow {
        start: start_pos,
        end: start_pos.saturating_sub(1),
        start_b: (0..n).map(|k| dual.b(k)).collect(),
        visible: visible.to_vec(),
        changes: vec![Vec::new(); n],
    };
    let live = |d: &DualState, k: usize| visible[k] && !d.is_frozen(k);
    let pre_blocked: Vec<bool> = (0..n).map(|k| dual.blocking_channel(k, &work[k]).is_some()).collect();
    let mut end = None;
    for step in steps.iter().skip(start) {
        if delta >= k0 {
            end = Some(SimEnd::DualIncreaseK0);
            break;
        }
        if !(0..n).any(|k| live(&d, k)) {
            end = Some(SimEnd::AllFrozen);
            break;
        }
        if !(0..n).any(|k| live(&d, k) && clip[k].is_none_or(|c| d.b(k) < c)) {
            break;
        }
        window.end = step.pos;
        let k = step.demand;
        if !live(&d, k) || step.pos < ci.demands[k].due() {
            continue;
        }
        let before = d.b(k);
        let full = step.target(&curves[k], horizon, clip[k]);
        let target = full.min(before + (k0 - delta));
        if target < full {
            // The simulation ends inside this step.
            window.end = step.pos - 1;
        }
        if target <= before {
            continue;
        }
        let res = d.raise(RaiseRequest {
            demand: k,
            curve: &curves[k],
            target,
            mode: RaiseMode::Online,
            from: step.from(),
            to: step.to(),
        })?;
        d.check_local(k, &curves[k])?;
        let mut froze = Vec::new();
        match res {
            RaiseOutcome::Reached => {
                let inc = d.b(k) - before;
                delta += inc;
                gained[k] += inc;
                window.changes[k].push((step.pos, d.b(k)));
            }
            RaiseOutcome::Frozen(ev) => froze.push((k, ev)),
        }
        if delta < k0 {
            for j in 0..n {
                if pre_blocked[j] || !live(&d, j) || ci.demands[j].due() > step.pos {
                    continue;
                }
                if let Some(q) = d.blocking_channel(j, &curves[j]) {
                    froze.push((j, d.freeze(j, Some(q)).expect("live demand")));
                }
            }
        }
        for (j, ev) in froze {
            frozen_here[j] = true;
            let value = d.b(j);
            apply_clip(&mut curves[j], step.pos, value);
            clip[j] = Some(clip[j].map_or(value, |c| c.min(value)));
            out.clips.push(Clip { demand: ev.demand, after: step.pos, value });
            if ev.was_active {
                let item = ci.demands[j].item;
                out.items.insert(item);
                out.demands.push(ev.demand);
                if let Some(q) = ev.trigger {
                    out.item_trigger.entry(item).or_insert(q);
                }
            }
        }
    }
    out.end = end.unwrap_or(if delta >= k0 {
        SimEnd::DualIncreaseK0
    } else if (0..n).any(|k| live(&d, k)) {
        SimEnd::Horizon
    } else {
        SimEnd::AllFrozen
    });
    let refs: Vec<&HoldingDelayCurve> = curves.iter().collect();
    d.assert_feasible_curves(&refs)?;
    out.delta = delta;
    for k in 0..n {
        if frozen_here[k] {
            *out.alpha.entry(ci.demands[k].item).or_default() += gained[k];
        }
    }
    Ok((out, window))
}

pub fn solve_online_jrp(inst: &Instance, variant: Variant, trace: bool) -> Result<JrpRun, JrpError> {
    JrpEngine::new(inst, variant, trace)?.finish()
}

fn disjoint(a: (Time, usize), b: (Time, usize)) -> bool {
    a.1 <= a.0 || b.1 <= b.0 || a.1 <= b.0 || b.1 <= a.0
}

/// Marks phase-initiating orders, item-phase-initiating item orders and the
/// regular items of each order.
pub fn classify_orders(records: &mut [OrderRecord]) {
    for n in 0..records.len() {
        let (past, rest) = records.split_at_mut(n);
        let r = &mut rest[0];
        r.phase_initiating = past.iter().all(|p| disjoint(p.interval, r.interval));
        r.regular_items = if r.phase_initiating { r.trigger_items.clone() } else { BTreeSet::new() };
        r.item_phase_initiating = r
            .item_intervals
            .iter()
            .map(|(&i, &iv)| (i, past.iter().filter_map(|p| p.item_intervals.get(&i)).all(|&pv| disjoint(pv, iv))))
            .collect();
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvariantFailure(pub String);

impl fmt::Display for InvariantFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Checks the per-run guarantees of the JRP solvers. Returns the first
/// failure found.
pub fn check_invariants(run: &JrpRun) -> Result<(), InvariantFailure> {
    let fail = |m: String| Err(InvariantFailure(m));
    let ci = &run.canonical.instance;
    let curves: Vec<&HoldingDelayCurve> = run.working.iter().collect();
    if let Err(v) = run.dual.assert_feasible_curves(&curves) {
        return fail(format!("dual infeasible: {v}"));
    }
    if let Err(v) = run.dual.assert_feasible(ci) {
        return fail(format!("dual infeasible on original curves: {v}"));
    }
    if let Some(m) = run.dominance_failures.first() {
        return fail(format!("simulation dominance: {m}"));
    }
    let k0 = rat(ci.general_cost);
    let mut prev = Rational::zero();
    let mut last_item: BTreeMap<usize, Rational> = BTreeMap::new();
    for (n, r) in run.records.iter().enumerate() {
        if r.dual_at_order - prev < k0 {
            return fail(format!("order {n}: dual grew by {} < K0", r.dual_at_order - prev));
        }
        prev = r.dual_at_order;
        for &i in &r.items {
            let before = last_item.get(&i).copied().unwrap_or_default();
            let grew = r.item_dual_at_order[&i] - before;
            if grew + r.sim.alpha(i) < rat(ci.item_cost(i)) {
                return fail(format!("order {n}: item {i} grew by {grew} plus {} simulated < K_i", r.sim.alpha(i)));
            }
            last_item.insert(i, r.item_dual_at_order[&i]);
        }
        for (&i, p) in &r.premature {
            if rat(p.holding) > p.threshold.max(Rational::zero()) {
                return fail(format!("order {n}: item {i} premature holding {} over {}", p.holding, p.threshold));
            }
        }
        if rat(r.non_add_on_holding) > k0 {
            return fail(format!("order {n}: non-add-on holding {} over K0", r.non_add_on_holding));
        }
    }
    let mut holding = 0u64;
    let mut ordering = 0u64;
    for (&s, items) in &run.canonical_schedule.orders {
        ordering += ci.general_cost + items.iter().map(|&i| ci.item_cost(i)).sum::<u64>();
        let _ = s;
    }
    for (k, d) in ci.demands.iter().enumerate() {
        let s = run.canonical_schedule.assignment[&d.id];
        let h = d.curve.at(s).finite().expect("served at finite cost");
        if s <= d.due() {
            holding += h;
        } else if rat(h) > run.dual.b(k) {
            return fail(format!("demand {} delay {h} exceeds its dual value {}", d.id, run.dual.b(k)));
        }
        let w = &run.working[k];
        for q in 1..=ci.horizon {
            if w.at(q) > d.curve.at(q) {
                return fail(format!("clipped curve of demand {} above original at s={q}", d.id));
            }
        }
        if !w.is_unimodal() {
            return fail(format!("clipped curve of demand {} lost its shape", d.id));
        }
    }
    if holding > ordering {
        return fail(format!("holding {holding} exceeds ordering {ordering}"));
    }
    if !run.dual.dual_objective().is_negative() && run.records.is_empty() && !ci.demands.is_empty() {
        return fail("demands present but no order placed".to_string());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{cost_of, is_canonical, Demand};

    fn demand(id: u64, item: usize, arrival: Time, due: Time, v: &[u64]) -> Demand {
        let mut values: Vec<Money> = v.iter().map(|&x| Money::Finite(x)).collect();
        for slot in values.iter_mut().take(arrival - 1) {
            *slot = Money::Infinite;
        }
        Demand { id: DemandId(id), item, curve: HoldingDelayCurve::new(arrival, due, values) }
    }

    fn two_item() -> Instance {
        Instance {
            horizon: 8,
            general_cost: 3,
            item_costs: vec![2, 1],
            demands: vec![
                demand(1, 1, 1, 2, &[1, 0, 1, 2, 3, 4, 5, 6]),
                demand(2, 2, 1, 3, &[2, 1, 0, 1, 1, 2, 2, 3]),
                demand(3, 1, 2, 6, &[9, 4, 3, 2, 1, 0, 2, 4]),
            ],
        }
    }

    #[test]
    fn no_demands_no_orders() {
        let inst = Instance { horizon: 3, general_cost: 2, item_costs: vec![1, 1], demands: vec![] };
        for v in [Variant::Simple, Variant::Final] {
            let run = solve_online_jrp(&inst, v, false).unwrap();
            assert_eq!(run.schedule.n_orders(), 0);
            assert!(run.records.is_empty());
        }
    }

    #[test]
    fn small_run_is_feasible_and_checked() {
        let inst = two_item();
        for v in [Variant::Simple, Variant::Final] {
            let run = solve_online_jrp(&inst, v, true).unwrap();
            cost_of(&inst, &run.schedule).unwrap();
            check_invariants(&run).unwrap();
            assert!(run.records[0].phase_initiating);
            assert!(run.records[0].item_phase_initiating.values().all(|&b| b));
        }
    }

    #[test]
    fn simulation_with_everything_frozen_is_empty() {
        let inst = Instance {
            horizon: 2,
            general_cost: 2,
            item_costs: vec![1],
            demands: vec![demand(1, 1, 1, 1, &[0, 1])],
        };
        let mut e = JrpEngine::new(&inst, Variant::Final, false).unwrap();
        e.dual.freeze(0, None);
        let sim = e.simulate_from_next().unwrap();
        assert_eq!(sim.end, SimEnd::AllFrozen);
        assert_eq!(sim.delta, Rational::zero());
        assert!(sim.items.is_empty() && sim.demands.is_empty());
    }

    #[test]
    fn simulation_stops_at_k0_with_growing_demand() {
        // One demand ramping one unit per step; K0 = 3 and a large item cost.
        let inst = Instance {
            horizon: 10,
            general_cost: 3,
            item_costs: vec![50],
            demands: vec![demand(1, 1, 1, 2, &[1, 0, 1, 2, 3, 4, 5, 6, 7, 8])],
        };
        let mut e = JrpEngine::new(&inst, Variant::Final, false).unwrap();
        e.reveal(1);
        let sim = e.simulate_from_next().unwrap();
        assert_eq!(sim.end, SimEnd::DualIncreaseK0);
        assert_eq!(sim.delta, rat(3));
        assert!(sim.demands.is_empty());
    }

    #[test]
    fn zero_threshold_admits_only_free_demands() {
        let inst = Instance {
            horizon: 5,
            general_cost: 1,
            item_costs: vec![4],
            demands: vec![demand(1, 1, 1, 3, &[2, 1, 0, 1, 2]), demand(2, 1, 1, 4, &[0, 0, 0, 0, 0])],
        };
        let mut e = JrpEngine::new(&inst, Variant::Final, false).unwrap();
        assert!(is_canonical(&inst));
        e.reveal(1);
        assert_eq!(e.premature_service(1, 1, Rational::zero()), vec![DemandId(2)]);
        assert_eq!(e.premature_service(1, 1, rat(2)).len(), 2);
        assert_eq!(e.premature_service(1, 1, rat(1)), vec![DemandId(2)]);
    }
}
