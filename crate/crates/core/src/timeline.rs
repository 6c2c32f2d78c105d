//! Step sequence driving the wavefront over a canonical instance.
//!
//! Positions `1..horizon` are the real steps: at position `c` one demand's
//! curve rises from `H_c` to `H_{c+1}`. A flush tail follows in rounds: in
//! round `u` every demand, in `(item, id)` order, rises to `H_T + u`, until
//! each has risen far enough that it must freeze. Tail positions are wavefront time only;
//! orders placed there land on the last time index.

use crate::dualcore::{rat, Rational};
use crate::instance::{HoldingDelayCurve, Instance, Money, Time};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Step {
    pub pos: usize,
    pub demand: usize,
    /// `Some(u)` for the `u`-th tail unit of `demand`.
    pub tail_unit: Option<u64>,
}

impl Step {
    /// Time index an order placed at this step lands on.
    pub fn time(&self, horizon: usize) -> Time {
        self.pos.min(horizon)
    }

    pub fn from(&self) -> Rational {
        Rational::from_integer(self.pos as i64)
    }

    pub fn to(&self) -> Rational {
        Rational::from_integer(self.pos as i64 + 1)
    }

    /// Value the demand's dual tracks after this step, never above `clip`.
    pub fn target(&self, curve: &HoldingDelayCurve, horizon: usize, clip: Option<Rational>) -> Rational {
        let v = match self.tail_unit {
            None => curve.at(self.pos + 1),
            Some(u) => curve.at(horizon) + Money::Finite(u),
        };
        let v = rat(v.finite().expect("rising step on a finite value"));
        clip.map_or(v, |c| v.min(c))
    }
}

/// All rising steps, real then tail, in wavefront order.
pub(crate) fn steps(inst: &Instance) -> Vec<Step> {
    let t = inst.horizon;
    let mut out = Vec::new();
    for c in 1..t {
        if let Some(k) = inst.demands.iter().position(|d| d.curve.at(c + 1) > d.curve.at(c) && d.curve.at(c).is_finite()) {
            out.push(Step { pos: c, demand: k, tail_unit: None });
        }
    }
    let order = inst.tie_order();
    let units: Vec<u64> = order.iter().map(|&k| inst.general_cost + inst.item_cost(inst.demands[k].item) + 1).collect();
    let rounds = units.iter().copied().max().unwrap_or(0);
    let mut pos = t.max(1);
    for u in 1..=rounds {
        for (j, &k) in order.iter().enumerate() {
            if u <= units[j] {
                out.push(Step { pos, demand: k, tail_unit: Some(u) });
                pos += 1;
            }
        }
    }
    out
}

/// Demand indices sorted by arrival, then `(item, id)`.
pub(crate) fn arrival_order(inst: &Instance) -> Vec<usize> {
    let mut idx = inst.tie_order();
    idx.sort_by_key(|&k| inst.demands[k].arrival());
    idx
}
