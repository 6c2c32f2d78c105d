//! Solvers for lot-sizing and joint replenishment with holding and delay
//! costs: an exact offline primal-dual for one item, online algorithms for
//! one and many items, brute-force oracles and an experiment harness.

pub mod dualcore;
pub mod harness;
pub mod instance;
pub mod jrp;
pub mod lotsizing;
pub mod oracle;
pub mod trace;

mod timeline;
