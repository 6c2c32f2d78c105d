use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Demand, DemandId, HoldingDelayCurve, Instance, Money, Schedule, Time};

/// Malformed input. `line` and `column` are 1-based; both are 0 for errors
/// found after the JSON itself parsed.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("parse error at {line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn field(message: String) -> Self {
        Self { line: 0, column: 0, message }
    }
}

impl From<serde_json::Error> for ParseError {
    fn from(e: serde_json::Error) -> Self {
        Self { line: e.line(), column: e.column(), message: e.to_string() }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    horizon: usize,
    k0: u64,
    items: Vec<ItemFile>,
    demands: Vec<DemandFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ItemFile {
    id: usize,
    k: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DemandFile {
    id: u64,
    item: usize,
    arrival: Time,
    due: Time,
    curve: CurveFile,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CurveFile {
    Dense(Vec<Money>),
    Breakpoints(Vec<(Time, Money)>),
}

fn expand_curve(curve: CurveFile, horizon: usize, at: usize) -> Result<Vec<Money>, ParseError> {
    match curve {
        CurveFile::Dense(values) => {
            if values.len() != horizon {
                return Err(ParseError::field(format!(
                    "demands[{at}].curve: expected {horizon} values, got {}",
                    values.len()
                )));
            }
            Ok(values)
        }
        CurveFile::Breakpoints(points) => {
            let mut values = vec![Money::Infinite; horizon];
            for (k, &(s, v)) in points.iter().enumerate() {
                if s == 0 || s > horizon {
                    return Err(ParseError::field(format!(
                        "demands[{at}].curve[{k}]: time {s} outside 1..={horizon}"
                    )));
                }
                if k > 0 && s <= points[k - 1].0 {
                    return Err(ParseError::field(format!(
                        "demands[{at}].curve[{k}]: breakpoint times must increase"
                    )));
                }
                let end = points.get(k + 1).map_or(horizon, |p| p.0.saturating_sub(1).min(horizon));
                for slot in &mut values[s - 1..end] {
                    *slot = v;
                }
            }
            Ok(values)
        }
    }
}

/// Parses the JSON instance format. Curve semantics are checked by `validate`,
/// not here.
pub fn read_instance(bytes: &[u8]) -> Result<Instance, ParseError> {
    let file: InstanceFile = serde_json::from_slice(bytes)?;
    let mut item_costs = vec![None; file.items.len()];
    for (k, item) in file.items.iter().enumerate() {
        if item.id == 0 || item.id > item_costs.len() {
            return Err(ParseError::field(format!(
                "items[{k}].id: {} outside 1..={}",
                item.id,
                item_costs.len()
            )));
        }
        if item_costs[item.id - 1].replace(item.k).is_some() {
            return Err(ParseError::field(format!("items[{k}].id: duplicate id {}", item.id)));
        }
    }
    let item_costs = item_costs.into_iter().map(|k| k.unwrap_or(0)).collect();
    let mut demands = Vec::with_capacity(file.demands.len());
    for (k, d) in file.demands.into_iter().enumerate() {
        let values = expand_curve(d.curve, file.horizon, k)?;
        demands.push(Demand {
            id: DemandId(d.id),
            item: d.item,
            curve: HoldingDelayCurve::new(d.arrival, d.due, values),
        });
    }
    Ok(Instance { horizon: file.horizon, general_cost: file.k0, item_costs, demands })
}

/// Writes the instance with dense curves.
pub fn write_instance(inst: &Instance) -> Vec<u8> {
    let file = InstanceFile {
        horizon: inst.horizon,
        k0: inst.general_cost,
        items: inst.item_costs.iter().enumerate().map(|(k, &c)| ItemFile { id: k + 1, k: c }).collect(),
        demands: inst
            .demands
            .iter()
            .map(|d| DemandFile {
                id: d.id.0,
                item: d.item,
                arrival: d.arrival(),
                due: d.due(),
                curve: CurveFile::Dense(d.curve.values.clone()),
            })
            .collect(),
    };
    let mut out = serde_json::to_vec_pretty(&file).expect("instance serializes");
    out.push(b'\n');
    out
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleFile {
    orders: Vec<OrderFile>,
    assignment: Vec<AssignmentFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OrderFile {
    time: Time,
    items: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AssignmentFile {
    demand: u64,
    time: Time,
}

pub fn read_schedule(bytes: &[u8]) -> Result<Schedule, ParseError> {
    let file: ScheduleFile = serde_json::from_slice(bytes)?;
    let mut out = Schedule::new();
    for o in file.orders {
        out.add_order(o.time, o.items);
    }
    for (k, a) in file.assignment.into_iter().enumerate() {
        if out.assignment.insert(DemandId(a.demand), a.time).is_some() {
            return Err(ParseError::field(format!("assignment[{k}]: demand {} assigned twice", a.demand)));
        }
    }
    Ok(out)
}

pub fn write_schedule(sched: &Schedule) -> Vec<u8> {
    let file = ScheduleFile {
        orders: sched
            .orders
            .iter()
            .map(|(&time, items)| OrderFile { time, items: items.iter().copied().collect() })
            .collect(),
        assignment: sched.assignment.iter().map(|(d, &time)| AssignmentFile { demand: d.0, time }).collect(),
    };
    let mut out = serde_json::to_vec_pretty(&file).expect("schedule serializes");
    out.push(b'\n');
    out
}
