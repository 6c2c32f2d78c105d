use std::collections::BTreeMap;

use super::{validate, Demand, HoldingDelayCurve, Instance, InstanceError, Money, Schedule, Time};

/// An instance rewritten so that between consecutive time indices at most one
/// curve value changes, by one unit when it rises, and at most one demand
/// exists per `(item, due)`. Keeps both directions of the time mapping.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Canonical {
    pub instance: Instance,
    /// `forward[s - 1]`: canonical index standing in for original time `s`.
    pub forward: Vec<Time>,
    /// `backward[c - 1]`: original time whose costs dominate canonical index `c`.
    pub backward: Vec<Time>,
}

impl Canonical {
    /// Maps a schedule on the canonical instance back to original times.
    /// Orders landing on the same original time are merged.
    pub fn to_original(&self, sched: &Schedule) -> Schedule {
        let mut out = Schedule::new();
        for (&c, items) in &sched.orders {
            out.add_order(self.backward[c - 1], items.iter().copied());
        }
        for (&d, &c) in &sched.assignment {
            out.assign(d, self.backward[c - 1]);
        }
        out
    }

    /// Maps a schedule on the original instance onto the canonical one.
    pub fn to_canonical(&self, sched: &Schedule) -> Schedule {
        let mut out = Schedule::new();
        for (&s, items) in &sched.orders {
            out.add_order(self.forward[s - 1], items.iter().copied());
        }
        for (&d, &s) in &sched.assignment {
            out.assign(d, self.forward[s - 1]);
        }
        out
    }
}

/// Splits time indices so that curve changes happen one demand at a time.
///
/// Every time `s` becomes one or more identical copies (one per demand sharing
/// an `(item, due = s)` pair). Between `s` and `s + 1` the rises are applied
/// first, one unit at a time, then the falls, each group in `(item, id)`
/// order. Each intermediate column is pointwise no cheaper than `s` (during
/// the rises) or `s + 1` (during the falls), and maps back there.
pub fn canonicalize(inst: &Instance) -> Result<Canonical, InstanceError> {
    let report = validate(inst);
    if !report.is_ok() {
        return Err(InstanceError::Invalid(report));
    }
    let t_max = inst.horizon;
    let n = inst.demands.len();

    let mut groups: BTreeMap<(usize, Time), Vec<usize>> = BTreeMap::new();
    for (k, d) in inst.demands.iter().enumerate() {
        groups.entry((d.item, d.due())).or_default().push(k);
    }
    let mut copies = vec![1usize; t_max + 1];
    let mut rank = vec![0usize; n];
    for ((_, due), mut members) in groups {
        members.sort_by_key(|&k| inst.demands[k].id);
        copies[due] = copies[due].max(members.len());
        for (j, k) in members.into_iter().enumerate() {
            rank[k] = j;
        }
    }
    let order = inst.tie_order();

    let mut columns: Vec<Vec<Money>> = vec![Vec::new(); n];
    let mut new_due = vec![0usize; n];
    let mut forward = Vec::with_capacity(t_max);
    let mut backward = Vec::new();
    let mut cur: Vec<Money> = inst.demands.iter().map(|d| d.curve.at(1)).collect();

    let push_column = |cur: &[Money], orig: Time, columns: &mut Vec<Vec<Money>>, backward: &mut Vec<Time>| {
        for (col, &v) in columns.iter_mut().zip(cur) {
            col.push(v);
        }
        backward.push(orig);
        backward.len()
    };

    for s in 1..=t_max {
        for j in 0..copies[s] {
            let c = push_column(&cur, s, &mut columns, &mut backward);
            if j == 0 {
                forward.push(c);
            }
            for k in 0..n {
                if inst.demands[k].due() == s && rank[k] == j {
                    new_due[k] = c;
                }
            }
        }
        if s == t_max {
            break;
        }
        let mut rises = Vec::new();
        let mut falls = Vec::new();
        for &k in &order {
            let next = inst.demands[k].curve.at(s + 1);
            match (cur[k], next) {
                (Money::Finite(a), Money::Finite(b)) if b > a => {
                    rises.extend(std::iter::repeat(k).take((b - a) as usize));
                }
                (a, b) if b < a => falls.push((k, b)),
                _ => {}
            }
        }
        let n_rises = rises.len();
        let total = n_rises + falls.len();
        let mut applied = 0;
        for k in rises {
            if let Money::Finite(v) = cur[k] {
                cur[k] = Money::Finite(v + 1);
            }
            applied += 1;
            if applied < total {
                push_column(&cur, s, &mut columns, &mut backward);
            }
        }
        for (k, v) in falls {
            cur[k] = v;
            applied += 1;
            if applied < total {
                let orig = if applied <= n_rises { s } else { s + 1 };
                push_column(&cur, orig, &mut columns, &mut backward);
            }
        }
    }

    let demands = inst
        .demands
        .iter()
        .zip(columns)
        .zip(new_due)
        .map(|((d, values), due)| {
            let arrival = values.iter().position(|v| v.is_finite()).map_or(due, |p| p + 1);
            Demand { id: d.id, item: d.item, curve: HoldingDelayCurve::new(arrival, due, values) }
        })
        .collect();
    let instance = Instance {
        horizon: backward.len(),
        general_cost: inst.general_cost,
        item_costs: inst.item_costs.clone(),
        demands,
    };
    Ok(Canonical { instance, forward, backward })
}

/// True when consecutive columns differ in at most one demand, rises are by
/// one unit, and `(item, due)` pairs are unique.
pub fn is_canonical(inst: &Instance) -> bool {
    let mut seen = std::collections::HashSet::new();
    if !inst.demands.iter().all(|d| seen.insert((d.item, d.due()))) {
        return false;
    }
    (1..inst.horizon).all(|s| {
        let mut changed = 0;
        for d in &inst.demands {
            let (a, b) = (d.curve.at(s), d.curve.at(s + 1));
            if a != b {
                changed += 1;
                if let (Money::Finite(x), Money::Finite(y)) = (a, b) {
                    if y > x + 1 {
                        return false;
                    }
                }
            }
        }
        changed <= 1
    })
}
