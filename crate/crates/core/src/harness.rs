//! Instance generators, set-cover reduction, and the benchmark runner.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Demand, DemandId, HoldingDelayCurve, Instance, Money, Schedule, Time};
use crate::oracle::{self, Algorithm, RatioReport};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("element {0} is in no set")]
    InfeasibleCover(usize),
    #[error("empty range {lo}..={hi} for {what}")]
    EmptyRange { what: &'static str, lo: u64, hi: u64 },
    #[error("bad bench config: {0}")]
    Config(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Inclusive integer range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Range {
    pub lo: u64,
    pub hi: u64,
}

impl Range {
    pub const fn new(lo: u64, hi: u64) -> Self {
        Self { lo, hi }
    }

    fn check(self, what: &'static str) -> Result<(), HarnessError> {
        if self.lo > self.hi {
            return Err(HarnessError::EmptyRange { what, lo: self.lo, hi: self.hi });
        }
        Ok(())
    }

    fn sample(self, rng: &mut ChaCha8Rng) -> u64 {
        rng.gen_range(self.lo..=self.hi)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenConfig {
    pub seed: u64,
    pub horizon: usize,
    pub items: usize,
    pub demands: usize,
    pub general_cost: Range,
    pub item_cost: Range,
    /// Per-step increase after due.
    pub delay_slope: Range,
    /// Per-step increase going back from due.
    pub holding_slope: Range,
    /// Chance that a step keeps the previous value.
    pub plateau: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            horizon: 10,
            items: 1,
            demands: 6,
            general_cost: Range::new(1, 20),
            item_cost: Range::new(0, 20),
            delay_slope: Range::new(0, 6),
            holding_slope: Range::new(0, 6),
            plateau: 0.2,
        }
    }
}

impl GenConfig {
    fn check(&self) -> Result<(), HarnessError> {
        self.general_cost.check("general_cost")?;
        self.item_cost.check("item_cost")?;
        self.delay_slope.check("delay_slope")?;
        self.holding_slope.check("holding_slope")
    }
}

fn step(rng: &mut ChaCha8Rng, slope: Range, plateau: f64) -> u64 {
    if plateau > 0.0 && rng.gen_bool(plateau.min(1.0)) {
        0
    } else {
        slope.sample(rng)
    }
}

/// Random instance, deterministic in `cfg.seed`. Items with no demands are
/// still listed.
pub fn gen_random(cfg: &GenConfig) -> Result<Instance, HarnessError> {
    cfg.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let t = cfg.horizon.max(1);
    let n = cfg.items.max(1);
    let general_cost = cfg.general_cost.sample(&mut rng);
    let item_costs = (0..n).map(|_| cfg.item_cost.sample(&mut rng)).collect();
    let mut demands = Vec::with_capacity(cfg.demands);
    for j in 0..cfg.demands {
        let item = rng.gen_range(1..=n);
        let due = rng.gen_range(1..=t);
        let arrival = rng.gen_range(1..=due);
        let mut values = vec![Money::Infinite; t];
        values[due - 1] = Money::ZERO;
        let mut v = 0;
        for s in (arrival..due).rev() {
            v += step(&mut rng, cfg.holding_slope, cfg.plateau);
            values[s - 1] = Money::Finite(v);
        }
        v = 0;
        for s in due + 1..=t {
            v += step(&mut rng, cfg.delay_slope, cfg.plateau);
            values[s - 1] = Money::Finite(v);
        }
        demands.push(Demand { id: DemandId(j as u64 + 1), item, curve: HoldingDelayCurve::new(arrival, due, values) });
    }
    Ok(Instance { horizon: t, general_cost, item_costs, demands })
}

/// Bounds for a corpus whose instances each draw their own shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusShape {
    pub horizon: Range,
    pub items: Range,
    pub demands: Range,
    pub general_cost: Range,
    pub item_cost: Range,
    pub delay_slope: Range,
    pub holding_slope: Range,
    pub plateau: f64,
}

impl Default for CorpusShape {
    fn default() -> Self {
        Self {
            horizon: Range::new(1, 40),
            items: Range::new(1, 1),
            demands: Range::new(0, 25),
            general_cost: Range::new(0, 50),
            item_cost: Range::new(0, 50),
            delay_slope: Range::new(0, 8),
            holding_slope: Range::new(0, 8),
            plateau: 0.2,
        }
    }
}

/// `count` instances; instance `j` draws its shape and contents from a
/// stream seeded by `seed` and `j`.
pub fn random_corpus(seed: u64, count: usize, shape: &CorpusShape) -> Result<Vec<Instance>, HarnessError> {
    for (r, what) in [(shape.horizon, "horizon"), (shape.items, "items"), (shape.demands, "demands")] {
        r.check(what)?;
    }
    (0..count)
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j as u64);
            let cfg = GenConfig {
                seed: rng.gen(),
                horizon: shape.horizon.sample(&mut rng).max(1) as usize,
                items: shape.items.sample(&mut rng).max(1) as usize,
                demands: shape.demands.sample(&mut rng) as usize,
                general_cost: shape.general_cost,
                item_cost: shape.item_cost,
                delay_slope: shape.delay_slope,
                holding_slope: shape.holding_slope,
                plateau: shape.plateau,
            };
            gen_random(&cfg)
        })
        .collect()
}

/// Lot-sizing instance whose optimum equals the minimum cover of `1..=n`
/// by `sets`. Time `k <= m` stands for set `k`; element `i` is a demand due
/// at `m + i`, free at the sets containing it and at its own due, and
/// infeasible elsewhere. One order costs 1.
pub fn gen_setcover(n: usize, sets: &[BTreeSet<usize>]) -> Result<Instance, HarnessError> {
    let m = sets.len();
    let t = m + n;
    let mut demands = Vec::with_capacity(n);
    for i in 1..=n {
        if !sets.iter().any(|s| s.contains(&i)) {
            return Err(HarnessError::InfeasibleCover(i));
        }
        let values: Vec<Money> = (1..=t)
            .map(|k| if (k <= m && sets[k - 1].contains(&i)) || k == m + i { Money::ZERO } else { Money::Infinite })
            .collect();
        let arrival = values.iter().position(|v| v.is_finite()).expect("due is free") + 1;
        demands.push(Demand { id: DemandId(i as u64), item: 1, curve: HoldingDelayCurve::new(arrival, m + i, values) });
    }
    Ok(Instance { horizon: t.max(1), general_cost: 1, item_costs: vec![0], demands })
}

/// Sets used by a schedule of a set-cover instance with `m` sets. An order
/// after `m` is mapped to the first set containing the element it serves.
pub fn extract_cover(inst: &Instance, m: usize, sched: &Schedule) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for d in &inst.demands {
        let Some(&s) = sched.assignment.get(&d.id) else { continue };
        let k = if s <= m { s } else { (1..=m).find(|&k| d.curve.at(k) == Money::ZERO).unwrap_or(s) };
        out.insert(k);
    }
    out
}

/// Random set system over `1..=n` with `m` sets in which every element is
/// covered.
pub fn random_cover(seed: u64, n: usize, m: usize) -> (usize, Vec<BTreeSet<usize>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = m.max(1);
    let mut sets: Vec<BTreeSet<usize>> = (0..m).map(|_| (1..=n).filter(|_| rng.gen_bool(0.3)).collect()).collect();
    for i in 1..=n {
        if !sets.iter().any(|s| s.contains(&i)) {
            sets[rng.gen_range(0..m)].insert(i);
        }
    }
    (n, sets)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonUniformParams {
    pub seed: u64,
    pub horizon: usize,
    pub demands: usize,
    pub general_cost: u64,
    pub item_cost: u64,
    pub low: Range,
    pub high: Range,
}

impl Default for NonUniformParams {
    fn default() -> Self {
        Self {
            seed: 0,
            horizon: 12,
            demands: 8,
            general_cost: 20,
            item_cost: 10,
            low: Range::new(1, 3),
            high: Range::new(200, 1000),
        }
    }
}

/// Linear holding and delay slopes drawn per demand: one side from `low`,
/// the other from `high`.
pub fn gen_nonuniform_linear(p: &NonUniformParams) -> Result<Instance, HarnessError> {
    p.low.check("low")?;
    p.high.check("high")?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let t = p.horizon.max(1);
    let demands = (0..p.demands)
        .map(|j| {
            let due = rng.gen_range(1..=t);
            let arrival = rng.gen_range(1..=due);
            let (a, b) = (p.low.sample(&mut rng), p.high.sample(&mut rng));
            let (hold, delay) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
            Demand { id: DemandId(j as u64 + 1), item: 1, curve: linear_curve(t, arrival, due, hold, delay) }
        })
        .collect();
    Ok(Instance { horizon: t, general_cost: p.general_cost, item_costs: vec![p.item_cost], demands })
}

pub fn linear_curve(horizon: usize, arrival: Time, due: Time, hold: u64, delay: u64) -> HoldingDelayCurve {
    let values = (1..=horizon)
        .map(|s| match s {
            s if s < arrival => Money::Infinite,
            s if s <= due => Money::Finite(hold * (due - s) as u64),
            s => Money::Finite(delay * (s - due) as u64),
        })
        .collect();
    HoldingDelayCurve::new(arrival, due, values)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SuiteSource {
    Random { shape: CorpusShape },
    Nonuniform { params: NonUniformParams },
    Setcover { elements: usize, sets: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Suite {
    pub name: String,
    pub seed: u64,
    pub count: usize,
    #[serde(flatten)]
    pub source: SuiteSource,
}

impl Suite {
    pub fn instances(&self) -> Result<Vec<Instance>, HarnessError> {
        match &self.source {
            SuiteSource::Random { shape } => random_corpus(self.seed, self.count, shape),
            SuiteSource::Nonuniform { params } => (0..self.count)
                .map(|j| gen_nonuniform_linear(&NonUniformParams { seed: self.seed.wrapping_add(j as u64), ..params.clone() }))
                .collect(),
            SuiteSource::Setcover { elements, sets } => (0..self.count)
                .map(|j| {
                    let (n, s) = random_cover(self.seed.wrapping_add(j as u64), *elements, *sets);
                    gen_setcover(n, &s)
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub suites: Vec<Suite>,
    #[serde(default = "all_algorithms")]
    pub algorithms: Vec<String>,
    #[serde(default = "default_cap")]
    pub max_horizon: usize,
    /// Fill the millis column. Off keeps reports byte-identical.
    #[serde(default)]
    pub record_timing: bool,
}

fn all_algorithms() -> Vec<String> {
    Algorithm::ALL.iter().map(|a| a.name().to_string()).collect()
}

fn default_cap() -> usize {
    oracle::DEFAULT_MAX_HORIZON
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BenchRow {
    pub instance: String,
    pub algorithm: String,
    pub k0: u64,
    pub n_items: usize,
    pub n_demands: usize,
    pub ordering: Option<u64>,
    pub item_ordering: Option<u64>,
    pub holding: Option<u64>,
    pub delay: Option<u64>,
    pub total: Option<u64>,
    pub optimum: Option<u64>,
    pub ratio_num: Option<u64>,
    pub ratio_den: Option<u64>,
    pub invariants_ok: bool,
    pub millis: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AlgorithmSummary {
    pub algorithm: String,
    pub runs: usize,
    pub with_optimum: usize,
    pub max_ratio_num: Option<u64>,
    pub max_ratio_den: Option<u64>,
    /// Mean of ratios, six decimals.
    pub mean_ratio: Option<String>,
    pub failures: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub summary: Vec<AlgorithmSummary>,
    /// One line per failed run or invariant violation.
    pub failures: Vec<String>,
}

impl BenchReport {
    pub fn to_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        if self.rows.is_empty() {
            w.write_record([
                "instance", "algorithm", "k0", "n_items", "n_demands", "ordering", "item_ordering", "holding", "delay",
                "total", "optimum", "ratio_num", "ratio_den", "invariants_ok", "millis",
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    pub fn is_clean(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Every solver needs well-shaped curves; set-cover instances only get an optimum.
fn applicable(alg: Algorithm, inst: &Instance) -> bool {
    crate::instance::validate(inst).is_ok() && (!alg.single_item() || inst.n_items() <= 1)
}

fn optimum_within_caps(inst: &Instance, cap: usize) -> Option<u64> {
    if inst.n_items() > 1 || !inst.demands.iter().all(|d| d.curve.is_unimodal()) {
        if inst.horizon > cap {
            return None;
        }
    }
    oracle::optimum(inst, cap).ok()
}

fn bench_one(name: &str, inst: &Instance, algs: &[Algorithm], cap: usize, timing: bool) -> (Vec<BenchRow>, Vec<String>) {
    let opt = optimum_within_caps(inst, cap);
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &alg in algs.iter().filter(|&&a| applicable(a, inst)) {
        let start = Instant::now();
        let run = oracle::run_algorithm(inst, alg, false);
        let millis = timing.then(|| start.elapsed().as_millis() as u64);
        let mut row = BenchRow {
            instance: name.to_string(),
            algorithm: alg.name().to_string(),
            k0: inst.general_cost,
            n_items: inst.n_items(),
            n_demands: inst.demands.len(),
            ordering: None,
            item_ordering: None,
            holding: None,
            delay: None,
            total: None,
            optimum: opt,
            ratio_num: None,
            ratio_den: None,
            invariants_ok: false,
            millis,
        };
        let report = run.and_then(|r| {
            let b = crate::instance::cost_of(inst, &r.schedule)?;
            match opt {
                Some(o) => oracle::ratio_report(inst, alg, &r, o).map(|rep| (b, Some(rep), r.invariant_failure)),
                None => Ok((b, None, r.invariant_failure)),
            }
        });
        match report {
            Ok((b, rep, failure)) => {
                row.ordering = Some(b.general_ordering);
                row.item_ordering = Some(b.item_ordering);
                row.holding = Some(b.holding);
                row.delay = Some(b.delay);
                row.total = Some(b.total);
                if let Some(RatioReport { ratio_num, ratio_den, .. }) = rep {
                    row.ratio_num = Some(ratio_num);
                    row.ratio_den = Some(ratio_den);
                }
                row.invariants_ok = failure.is_none();
                if let Some(f) = failure {
                    failures.push(format!("{name} {alg}: {f}"));
                }
            }
            Err(e) => failures.push(format!("{name} {alg}: {e}")),
        }
        rows.push(row);
    }
    (rows, failures)
}

/// Runs every algorithm on every suite instance in parallel. Rows come out
/// in suite, instance, algorithm order whatever the completion order.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport, HarnessError> {
    let algs: Vec<Algorithm> = cfg
        .algorithms
        .iter()
        .map(|a| Algorithm::parse(a).ok_or_else(|| HarnessError::Config(format!("unknown algorithm {a:?}"))))
        .collect::<Result<_, _>>()?;
    let mut work = Vec::new();
    for s in &cfg.suites {
        for (j, inst) in s.instances()?.into_iter().enumerate() {
            work.push((format!("{}-{j}", s.name), inst));
        }
    }
    let results: Vec<_> =
        work.par_iter().map(|(name, inst)| bench_one(name, inst, &algs, cfg.max_horizon, cfg.record_timing)).collect();
    let mut report = BenchReport::default();
    for (rows, failures) in results {
        report.rows.extend(rows);
        report.failures.extend(failures);
    }
    report.summary = summarize(&algs, &report.rows);
    Ok(report)
}

fn summarize(algs: &[Algorithm], rows: &[BenchRow]) -> Vec<AlgorithmSummary> {
    let mut by: BTreeMap<&str, Vec<&BenchRow>> = BTreeMap::new();
    for r in rows {
        by.entry(&r.algorithm).or_default().push(r);
    }
    algs.iter()
        .map(|a| {
            let rs = by.get(a.name()).cloned().unwrap_or_default();
            let ratios: Vec<(u64, u64)> =
                rs.iter().filter_map(|r| Some((r.ratio_num?, r.ratio_den?))).filter(|&(_, d)| d > 0).collect();
            let max = ratios.iter().copied().max_by(|a, b| (a.0 as u128 * b.1 as u128).cmp(&(b.0 as u128 * a.1 as u128)));
            let mean = (!ratios.is_empty()).then(|| {
                let sum: u128 = ratios.iter().map(|&(n, d)| n as u128 * 1_000_000 / d as u128).sum();
                let m = sum / ratios.len() as u128;
                format!("{}.{:06}", m / 1_000_000, m % 1_000_000)
            });
            AlgorithmSummary {
                algorithm: a.name().to_string(),
                runs: rs.len(),
                with_optimum: ratios.len(),
                max_ratio_num: max.map(|m| m.0),
                max_ratio_den: max.map(|m| m.1),
                mean_ratio: mean,
                failures: rs.iter().filter(|r| !r.invariants_ok).count(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{validate, write_instance};

    #[test]
    fn same_seed_same_bytes() {
        let cfg = GenConfig { seed: 42, items: 3, ..GenConfig::default() };
        assert_eq!(write_instance(&gen_random(&cfg).unwrap()), write_instance(&gen_random(&cfg).unwrap()));
        let other = GenConfig { seed: 43, ..cfg.clone() };
        assert_ne!(write_instance(&gen_random(&cfg).unwrap()), write_instance(&gen_random(&other).unwrap()));
    }

    #[test]
    fn zero_demands_is_empty() {
        let inst = gen_random(&GenConfig { demands: 0, ..GenConfig::default() }).unwrap();
        assert!(inst.demands.is_empty());
    }

    #[test]
    fn generated_instances_validate() {
        for seed in 0..10_000 {
            let cfg = GenConfig { seed, horizon: 1 + (seed % 17) as usize, items: 1 + (seed % 3) as usize, ..GenConfig::default() };
            let inst = gen_random(&cfg).unwrap();
            assert!(validate(&inst).is_ok(), "seed {seed}: {}", validate(&inst));
        }
    }

    #[test]
    fn setcover_single_element() {
        let inst = gen_setcover(1, &[[1].into()]).unwrap();
        assert_eq!(inst.horizon, 2);
        assert_eq!(inst.demands[0].due(), 2);
        assert_eq!(inst.demands[0].curve.values, vec![Money::ZERO, Money::ZERO]);
        assert_eq!(oracle::optimal_jrp(&inst, 14).unwrap().1, Money::Finite(1));
    }

    #[test]
    fn setcover_uncovered_element() {
        assert!(matches!(gen_setcover(2, &[[1].into()]), Err(HarnessError::InfeasibleCover(2))));
    }

    #[test]
    fn nonuniform_two_demands_validate() {
        let inst = Instance {
            horizon: 6,
            general_cost: 5,
            item_costs: vec![5],
            demands: vec![
                Demand { id: DemandId(1), item: 1, curve: linear_curve(6, 1, 3, 1, 1000) },
                Demand { id: DemandId(2), item: 1, curve: linear_curve(6, 2, 4, 1000, 1) },
            ],
        };
        assert!(validate(&inst).is_ok());
        let p = NonUniformParams { seed: 9, ..NonUniformParams::default() };
        let a = gen_nonuniform_linear(&p).unwrap();
        assert!(validate(&a).is_ok());
        assert_eq!(write_instance(&a), write_instance(&gen_nonuniform_linear(&p).unwrap()));
    }

    #[test]
    fn empty_suite_empty_report() {
        let cfg = BenchConfig { suites: vec![], algorithms: all_algorithms(), max_horizon: 14, record_timing: false };
        let r = run_bench(&cfg).unwrap();
        assert!(r.rows.is_empty() && r.failures.is_empty());
        assert!(r.to_csv().unwrap().starts_with("instance,algorithm,k0"));
    }

    #[test]
    fn unknown_algorithm_is_refused() {
        let cfg = BenchConfig { suites: vec![], algorithms: vec!["nope".into()], max_horizon: 14, record_timing: false };
        assert!(matches!(run_bench(&cfg), Err(HarnessError::Config(_))));
    }
}
