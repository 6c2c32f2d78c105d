//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use replenish::dualcore::rat;
use replenish::harness::{
    extract_cover, gen_setcover, random_corpus, random_cover, run_bench, BenchConfig, CorpusShape, Range, Suite, SuiteSource,
};
use replenish::instance::{cost_of, Demand, DemandId, HoldingDelayCurve, Instance, Money};
use replenish::jrp::{self, Variant};
use replenish::lotsizing::{self, admit, candidate, Policy, Threshold};
use replenish::oracle::{self, min_set_cover, Algorithm};

const SINGLE_SEED: u64 = 0x5eed_0001;
const JRP_SEED: u64 = 0x5eed_0002;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn single_corpus() -> Vec<Instance> {
    random_corpus(SINGLE_SEED, 500, &CorpusShape::default()).unwrap()
}

fn jrp_corpus() -> Vec<Instance> {
    let shape = CorpusShape {
        horizon: Range::new(1, 14),
        items: Range::new(1, 3),
        demands: Range::new(0, 12),
        ..CorpusShape::default()
    };
    random_corpus(JRP_SEED, 300, &shape).unwrap()
}

/// Largest of `(num, den)` ratios, compared exactly.
fn max_ratio(rs: impl IntoIterator<Item = (u64, u64)>) -> Option<(u64, u64)> {
    rs.into_iter().max_by(|a, b| (a.0 as u128 * b.1 as u128).cmp(&(b.0 as u128 * a.1 as u128)))
}

fn show(r: Option<(u64, u64)>) -> String {
    match r {
        Some((n, d)) => format!("{n}/{d} = {:.6}", n as f64 / d as f64),
        None => "n/a".into(),
    }
}

/// Tallies for criteria 4 and 5 gathered while running the corpora.
#[derive(Default)]
struct Tally {
    runs: usize,
    dual_violations: Vec<String>,
    invariant_violations: Vec<String>,
}

impl Tally {
    fn merge(&mut self, o: Tally) {
        self.runs += o.runs;
        self.dual_violations.extend(o.dual_violations);
        self.invariant_violations.extend(o.invariant_violations);
    }
}

fn offline_optimality(corpus: &[Instance]) -> (Outcome, Tally) {
    let start = Instant::now();
    let res: Vec<(Option<String>, Tally)> = corpus
        .par_iter()
        .enumerate()
        .map(|(j, inst)| {
            let mut t = Tally { runs: 1, ..Tally::default() };
            let (sched, cert) = match lotsizing::solve_offline_exact(inst) {
                Ok(v) => v,
                Err(e) => return (Some(format!("#{j}: {e}")), t),
            };
            if let Err(v) = cert.dual.assert_feasible(&cert.canonical.instance) {
                t.dual_violations.push(format!("offline #{j}: {v}"));
            }
            let primal = cost_of(inst, &sched).unwrap().total;
            let dp = oracle::optimal_single_dp(inst).unwrap().1;
            let ok = Money::Finite(primal) == dp && rat(primal) == cert.dual.dual_objective() && cert.primal_cost == primal;
            let bad = (!ok).then(|| format!("#{j}: primal {primal}, dual {}, dp {dp}", cert.dual.dual_objective()));
            (bad, t)
        })
        .collect();
    let elapsed = start.elapsed();
    let mut tally = Tally::default();
    let mut bad = Vec::new();
    for (b, t) in res {
        bad.extend(b);
        tally.merge(t);
    }
    let pass = bad.is_empty() && elapsed < Duration::from_secs(60);
    let detail = format!(
        "{} instances, {} mismatches, {:.2}s{}",
        corpus.len(),
        bad.len(),
        elapsed.as_secs_f64(),
        bad.first().map(|b| format!("; first {b}")).unwrap_or_default()
    );
    (outcome(pass, detail), tally)
}

fn online_single_ratios(corpus: &[Instance]) -> (Outcome, Tally) {
    let res: Vec<_> = corpus
        .par_iter()
        .enumerate()
        .map(|(j, inst)| {
            let opt = oracle::optimal_single_dp(inst).unwrap().1.finite().unwrap();
            let mut t = Tally::default();
            let mut out = Vec::new();
            for (alg, policy) in [(Algorithm::Online3, Policy::FullK), (Algorithm::OnlinePhi, Policy::Golden)] {
                t.runs += 1;
                let run = match lotsizing::solve_online_single(inst, policy, false) {
                    Ok(r) => r,
                    Err(e) => {
                        t.dual_violations.push(format!("{alg} #{j}: {e}"));
                        continue;
                    }
                };
                if let Err(v) = run.dual.assert_feasible(&run.canonical.instance) {
                    t.dual_violations.push(format!("{alg} #{j}: {v}"));
                }
                if let Err(v) = lotsizing::check_online_single(&run) {
                    t.invariant_violations.push(format!("{alg} #{j}: {v}"));
                }
                let ar = oracle::AlgorithmRun { schedule: run.schedule, trace: run.trace, invariant_failure: None };
                out.push(oracle::ratio_report(inst, alg, &ar, opt).unwrap());
            }
            (out, t)
        })
        .collect();
    let mut tally = Tally::default();
    let mut full = Vec::new();
    let mut golden = Vec::new();
    let mut bad = Vec::new();
    for (reps, t) in res {
        tally.merge(t);
        for r in reps {
            match r.algorithm {
                Algorithm::Online3 => {
                    if !r.within(3, 1) {
                        bad.push(format!("online-3 {}/{}", r.ratio_num, r.ratio_den));
                    }
                    full.push((r.ratio_num, r.ratio_den));
                }
                _ => {
                    if !r.within_phi_plus_one() {
                        bad.push(format!("online-phi {}/{}", r.ratio_num, r.ratio_den));
                    }
                    golden.push((r.ratio_num, r.ratio_den));
                }
            }
        }
    }
    let detail = format!(
        "max online-3 {}, max online-phi {}, {} over bound{}",
        show(max_ratio(full.iter().copied().filter(|r| r.1 > 0))),
        show(max_ratio(golden.iter().copied().filter(|r| r.1 > 0))),
        bad.len(),
        bad.first().map(|b| format!("; first {b}")).unwrap_or_default()
    );
    (outcome(bad.is_empty() && tally.dual_violations.is_empty(), detail), tally)
}

fn jrp_ratios(corpus: &[Instance]) -> (Outcome, Tally) {
    let start = Instant::now();
    let res: Vec<_> = corpus
        .par_iter()
        .enumerate()
        .map(|(j, inst)| {
            let opt = oracle::optimal_jrp(inst, oracle::DEFAULT_MAX_HORIZON).unwrap().1.finite().unwrap();
            let mut t = Tally::default();
            let mut out = Vec::new();
            for (alg, variant, bound) in [(Algorithm::JrpFinal, Variant::Final, 5), (Algorithm::JrpSimple, Variant::Simple, 7)] {
                t.runs += 1;
                let run = match jrp::solve_online_jrp(inst, variant, false) {
                    Ok(r) => r,
                    Err(e) => {
                        t.dual_violations.push(format!("{alg} #{j}: {e}"));
                        continue;
                    }
                };
                if let Err(v) = run.dual.assert_feasible(&run.canonical.instance) {
                    t.dual_violations.push(format!("{alg} #{j}: {v}"));
                }
                if let Err(v) = jrp::check_invariants(&run) {
                    t.invariant_violations.push(format!("{alg} #{j}: {v}"));
                }
                let ar = oracle::AlgorithmRun { schedule: run.schedule, trace: run.trace, invariant_failure: None };
                let r = oracle::ratio_report(inst, alg, &ar, opt).unwrap();
                out.push((alg, r.within(bound, 1), (r.ratio_num, r.ratio_den), j));
            }
            (out, t)
        })
        .collect();
    let elapsed = start.elapsed();
    let mut tally = Tally::default();
    let mut fin = Vec::new();
    let mut simple = Vec::new();
    let mut bad = Vec::new();
    for (reps, t) in res {
        tally.merge(t);
        for (alg, ok, r, j) in reps {
            if !ok {
                bad.push(format!("{alg} #{j} {}/{}", r.0, r.1));
            }
            if alg == Algorithm::JrpFinal { fin.push(r) } else { simple.push(r) }
        }
    }
    let pass = bad.is_empty() && tally.dual_violations.is_empty() && elapsed < Duration::from_secs(300);
    let detail = format!(
        "{} instances, max jrp-final {}, max jrp-simple {}, {} over bound, {:.2}s{}",
        corpus.len(),
        show(max_ratio(fin.into_iter().filter(|r| r.1 > 0))),
        show(max_ratio(simple.into_iter().filter(|r| r.1 > 0))),
        bad.len(),
        elapsed.as_secs_f64(),
        bad.first().map(|b| format!("; first {b}")).unwrap_or_default()
    );
    (outcome(pass, detail), tally)
}

fn premature_example() -> Outcome {
    let fin = |v: &[u64]| v.iter().map(|&x| Money::Finite(x)).collect::<Vec<_>>();
    let demands = vec![
        Demand { id: DemandId(1), item: 1, curve: HoldingDelayCurve::new(1, 3, fin(&[50, 25, 0, 10, 20, 50, 60, 70, 80, 90])) },
        Demand { id: DemandId(2), item: 1, curve: HoldingDelayCurve::new(1, 2, fin(&[75, 0, 25, 75, 80, 85, 90, 95, 99, 99])) },
        Demand { id: DemandId(3), item: 1, curve: HoldingDelayCurve::new(1, 4, fin(&[15, 10, 5, 0, 1, 2, 5, 10, 15, 20])) },
    ];
    let cands: Vec<_> = demands.iter().map(|d| candidate(d, 1, 10)).collect();
    let ranks: Vec<_> = cands.iter().map(|c| c.rank).collect();
    let got = admit(&cands, Threshold::AtMost(rat(100)));
    let pass = got == vec![DemandId(2)] && ranks == vec![Some(6), Some(4), Some(9)];
    outcome(pass, format!("ranks {ranks:?}, served {got:?}"))
}

fn setcover_equivalence() -> Outcome {
    let mut bad = Vec::new();
    let cases: Vec<_> = (0..50u64).map(|j| random_cover(0xc0_0000 + j, 1 + (j % 8) as usize, 1 + (j * 5 % 8) as usize)).collect();
    let res: Vec<_> = cases
        .par_iter()
        .enumerate()
        .map(|(j, (n, sets))| {
            let inst = gen_setcover(*n, sets).unwrap();
            let (sched, opt) = oracle::optimal_jrp(&inst, inst.horizon).unwrap();
            let best = min_set_cover(*n, sets).unwrap();
            let cover = extract_cover(&inst, sets.len(), &sched);
            let covered: BTreeSet<usize> = cover.iter().flat_map(|&k| sets[k - 1].iter().copied()).collect();
            let valid = cover.iter().all(|&k| k >= 1 && k <= sets.len()) && (1..=*n).all(|i| covered.contains(&i));
            let ok = opt == Money::Finite(best as u64) && valid && cover.len() == best;
            (!ok).then(|| format!("#{j}: optimum {opt}, cover {best}, extracted {cover:?}"))
        })
        .collect();
    bad.extend(res.into_iter().flatten());
    outcome(bad.is_empty(), format!("{} covers, {} mismatches{}", cases.len(), bad.len(), bad.first().map(|b| format!("; first {b}")).unwrap_or_default()))
}

fn determinism(single: &[Instance], multi: &[Instance]) -> Outcome {
    let cfg = BenchConfig {
        suites: vec![
            Suite {
                name: "random".into(),
                seed: 7,
                count: 12,
                source: SuiteSource::Random {
                    shape: CorpusShape { horizon: Range::new(1, 10), items: Range::new(1, 3), demands: Range::new(0, 8), ..CorpusShape::default() },
                },
            },
            Suite { name: "cover".into(), seed: 3, count: 4, source: SuiteSource::Setcover { elements: 4, sets: 4 } },
        ],
        algorithms: Algorithm::ALL.iter().map(|a| a.name().to_string()).collect(),
        max_horizon: 14,
        record_timing: false,
    };
    let a = run_bench(&cfg).unwrap().to_csv().unwrap();
    let b = run_bench(&cfg).unwrap().to_csv().unwrap();
    let traces = |alg: Algorithm, insts: &[Instance]| -> String {
        insts.iter().take(40).map(|i| oracle::run_algorithm(i, alg, true).unwrap().trace.to_jsonl()).collect()
    };
    let mut same = a == b;
    let mut lines = 0;
    for (alg, insts) in [(Algorithm::OnlinePhi, single), (Algorithm::Online3, single), (Algorithm::JrpSimple, multi), (Algorithm::JrpFinal, multi)] {
        let (x, y) = (traces(alg, insts), traces(alg, insts));
        lines += x.lines().count();
        same &= x == y;
    }
    outcome(same, format!("report {} bytes, {lines} trace lines compared", a.len()))
}

fn main() {
    let single = single_corpus();
    let multi = jrp_corpus();
    let mut results = Vec::new();
    let mut tally = Tally::default();

    let (c1, t) = offline_optimality(&single);
    tally.merge(t);
    results.push(("1 offline optimality", c1));
    let (c2, t) = online_single_ratios(&single);
    tally.merge(t);
    results.push(("2 online single-item ratios", c2));
    let (c3, t) = jrp_ratios(&multi);
    tally.merge(t);
    results.push(("3 jrp ratios", c3));
    results.push((
        "4 dual feasibility",
        outcome(
            tally.dual_violations.is_empty(),
            format!("{} runs, {} violations{}", tally.runs, tally.dual_violations.len(), tally.dual_violations.first().map(|b| format!("; first {b}")).unwrap_or_default()),
        ),
    ));
    results.push((
        "5 invariant suite",
        outcome(
            tally.invariant_violations.is_empty(),
            format!("{} runs, {} violations{}", tally.runs, tally.invariant_violations.len(), tally.invariant_violations.first().map(|b| format!("; first {b}")).unwrap_or_default()),
        ),
    ));
    results.push(("6 premature service example", premature_example()));
    results.push(("7 set-cover equivalence", setcover_equivalence()));
    results.push(("8 determinism", determinism(&single, &multi)));

    let mut failed = 0;
    for (name, o) in &results {
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
