use replenish::harness::{gen_nonuniform_linear, random_corpus, CorpusShape, NonUniformParams, Range};
use replenish::instance::{cost_of, validate, Demand, DemandId, HoldingDelayCurve, Instance, Money, Schedule};
use replenish::jrp::{self, Variant};
use replenish::lotsizing::{self, golden_exceeds, Policy};
use replenish::oracle::{measure_ratio, Algorithm};
use replenish::trace::TraceEvent;

fn fin(v: &[u64]) -> Vec<Money> {
    v.iter().map(|&x| Money::Finite(x)).collect()
}

fn serves(events: &[TraceEvent]) -> Vec<(usize, u64)> {
    let mut out: Vec<(usize, u64)> = events
        .iter()
        .filter_map(|e| match e {
            TraceEvent::Serve { time, demand, .. } => Some((*time, *demand)),
            _ => None,
        })
        .collect();
    out.sort();
    out
}

fn order_times(sched: &Schedule) -> Vec<usize> {
    sched.orders.keys().copied().collect()
}

#[test]
fn final_on_one_item_without_general_cost_matches_full_k() {
    let shape = CorpusShape {
        horizon: Range::new(1, 30),
        demands: Range::new(0, 15),
        general_cost: Range::new(0, 0),
        ..CorpusShape::default()
    };
    for (j, inst) in random_corpus(77, 260, &shape).unwrap().iter().enumerate() {
        let single = lotsizing::solve_online_single(inst, Policy::FullK, true).unwrap();
        let run = jrp::solve_online_jrp(inst, Variant::Final, true).unwrap();
        assert!(run.records.iter().all(|r| r.sim.alpha.values().all(|a| *a == 0.into())), "instance {j}");
        assert_eq!(order_times(&run.schedule), order_times(&single.schedule), "instance {j}");
        assert_eq!(run.schedule.assignment, single.schedule.assignment, "instance {j}");
        assert_eq!(serves(run.trace.events()), serves(single.trace.events()), "instance {j}");
    }
}

#[test]
fn minimal_and_unimodal_curves_validate() {
    let one = |horizon, arrival, due, values| Instance {
        horizon,
        general_cost: 1,
        item_costs: vec![0],
        demands: vec![Demand { id: DemandId(1), item: 1, curve: HoldingDelayCurve::new(arrival, due, values) }],
    };
    assert!(validate(&one(2, 2, 2, vec![Money::Infinite, Money::ZERO])).is_ok());
    assert!(validate(&one(3, 1, 2, fin(&[3, 0, 1]))).is_ok());
    assert!(!validate(&one(3, 1, 3, fin(&[1, 2, 0]))).is_ok());
}

#[test]
fn single_service_breakdown() {
    let inst = Instance {
        horizon: 2,
        general_cost: 5,
        item_costs: vec![3],
        demands: vec![Demand { id: DemandId(1), item: 1, curve: HoldingDelayCurve::new(1, 2, fin(&[4, 0])) }],
    };
    let mut s = Schedule::new();
    s.add_order(2, [1]);
    s.assign(DemandId(1), 2);
    let b = cost_of(&inst, &s).unwrap();
    assert_eq!((b.general_ordering, b.item_ordering, b.holding, b.delay, b.total), (5, 3, 0, 0, 8));
    let mut s = Schedule::new();
    s.add_order(1, [1]);
    s.assign(DemandId(1), 1);
    let b = cost_of(&inst, &s).unwrap();
    assert_eq!((b.holding, b.total), (4, 12));
}

#[test]
fn golden_threshold_boundary() {
    assert!(!golden_exceeds(618, 1000));
    assert!(golden_exceeds(619, 1000));
    for k in [0, 1, 7, 1000] {
        assert!(!golden_exceeds(0, k));
    }
}

#[test]
fn nonuniform_slopes_stay_within_five() {
    let two = NonUniformParams { demands: 2, low: Range::new(1, 1), high: Range::new(1000, 1000), ..NonUniformParams::default() };
    assert!(validate(&gen_nonuniform_linear(&two).unwrap()).is_ok());
    for seed in 0..60 {
        let inst = gen_nonuniform_linear(&NonUniformParams { seed, ..NonUniformParams::default() }).unwrap();
        assert_eq!(inst, gen_nonuniform_linear(&NonUniformParams { seed, ..NonUniformParams::default() }).unwrap());
        let r = measure_ratio(&inst, Algorithm::JrpFinal).unwrap();
        assert!(r.within(5, 1), "seed {seed}: {}/{}", r.ratio_num, r.ratio_den);
        assert!(r.invariant_failure.is_none(), "seed {seed}");
    }
}

#[test]
fn no_demands_no_orders_anywhere() {
    let inst = Instance { horizon: 4, general_cost: 3, item_costs: vec![1, 2], demands: Vec::new() };
    for v in [Variant::Simple, Variant::Final] {
        let run = jrp::solve_online_jrp(&inst, v, false).unwrap();
        assert_eq!(run.schedule.n_orders(), 0);
        jrp::check_invariants(&run).unwrap();
    }
}
