//! Line-delimited event traces.
//!
//! The first line is a schema header, every following line one event. Time
//! fields are canonical positions. Rationals are written as strings such as
//! `"7/2"`.

use serde::Serialize;

use crate::dualcore::Rational;
use crate::instance::Time;

pub const SCHEMA: &str = "replenish-trace";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum TraceEvent {
    Arrival { time: Time, demand: u64 },
    Raise { position: usize, demand: u64, from: String, to: String, frozen: bool },
    Freeze { wavefront: String, demand: u64, value: String, trigger: Option<Time>, items: Vec<usize>, was_active: bool },
    OrderPlaced { time: Time, items: Vec<usize>, trigger: Option<Time>, trigger_items: Vec<usize>, regular_items: Vec<usize> },
    SimBegin { time: Time, start: usize },
    SimEnd { end: String, delta: String, alpha: Vec<(usize, String)>, items: Vec<usize>, demands: Vec<u64> },
    PrematureAdmit { time: Time, item: usize, demand: u64, holding: u64 },
    Clip { demand: u64, after: Time, value: String },
    Serve { time: Time, demand: u64, item: usize },
}

#[derive(Serialize)]
struct Header {
    schema: &'static str,
    version: u32,
}

/// Event sink. A disabled trace drops events without building them.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    enabled: bool,
    events: Vec<TraceEvent>,
}

impl Trace {
    pub fn enabled() -> Self {
        Self { enabled: true, events: Vec::new() }
    }

    pub fn disabled() -> Self {
        Self::default()
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    pub fn push(&mut self, event: impl FnOnce() -> TraceEvent) {
        if self.enabled {
            self.events.push(event());
        }
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&Header { schema: SCHEMA, version: VERSION }).expect("header");
        out.push('\n');
        for ev in &self.events {
            out.push_str(&serde_json::to_string(ev).expect("event"));
            out.push('\n');
        }
        out
    }
}

pub(crate) fn fmt_rat(r: Rational) -> String {
    r.to_string()
}
