//! Window schedule synthesis for 802.1Qbv networks with unscheduled and
//! unsynchronized end systems.
//!
//! The toolkit computes gate control list windows `(offset, length, period)`
//! per ST queue, minimizing window bandwidth while a conservative worst-case
//! delay analysis guarantees per-flow deadlines. It also ships reference
//! schedulers that assume scheduled end systems, a gate-accurate
//! discrete-event simulator for validation, and a synthetic instance
//! generator.

pub mod analysis;
pub mod baselines;
pub mod curve;
pub mod fileio;
pub mod gen;
pub mod model;
pub mod proxy;
pub mod queues;
pub mod sim;
pub mod synth;
pub mod window;

#[cfg(test)]
pub(crate) mod testfix;

pub use analysis::{analyze, Analyzer, DelayReport, FlowDelay, WcdAnalyzer};
pub use model::{
    validate_instance, AnalysisParams, Flow, Instance, Link, Network, NodeKind, PortRef,
    ValidationReport,
};
pub use queues::{queue_flow_sets, QueueMap, QueueRef};
pub use window::{Method, Schedule, WindowConfig};
