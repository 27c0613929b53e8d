//! Network, flow and timing model shared by every other module.
//!
//! Nodes are either end systems (traffic sources/sinks, possibly without any
//! TSN capabilities) or switches (synchronized, gate-scheduled). Links are
//! full-duplex: a physical connection between `a` and `b` appears as the two
//! directed links `[a,b]` and `[b,a]`, each with its own egress port.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Smallest and largest accepted on-wire frame size in bytes.
pub const MIN_FRAME_BYTES: u32 = 64;
pub const MAX_FRAME_BYTES: u32 = 1518;

/// Node identifier (human-readable, stable across file round-trips).
pub type NodeId = String;
/// Flow identifier.
pub type FlowId = String;
/// ST queue index on a port; equals the flow priority mapped to it.
pub type QueueId = u8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    EndSystem,
    Switch,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::EndSystem => write!(f, "endsystem"),
            NodeKind::Switch => write!(f, "switch"),
        }
    }
}

/// Directed link (equivalently: the egress port of `src` facing `dst`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub src: NodeId,
    pub dst: NodeId,
    /// Link speed in Mbps, i.e. bits per microsecond.
    pub speed_mbps: u64,
    /// Scheduling granularity of this link in microseconds.
    pub macrotick_us: u64,
}

impl Link {
    /// Propagation delay; fixed at zero for the whole model.
    pub fn propagation_us(&self) -> u64 {
        0
    }
}

/// Reference to a directed link / egress port.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PortRef {
    pub node: NodeId,
    pub next: NodeId,
}

impl PortRef {
    pub fn new(node: impl Into<NodeId>, next: impl Into<NodeId>) -> Self {
        PortRef { node: node.into(), next: next.into() }
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.node, self.next)
    }
}

/// Unicast scheduled-traffic stream with a static route.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flow {
    pub id: FlowId,
    pub payload_bytes: u32,
    pub period_us: u64,
    /// 802.1Q priority code point, 0..=7; larger values win arbitration.
    pub priority: QueueId,
    /// Upper bound on the tolerated end-to-end delay. May exceed the period.
    pub deadline_us: u64,
    /// Route as a node sequence `ES, SW, ..., SW, ES`.
    pub route: Vec<NodeId>,
}

impl Flow {
    /// The directed links the flow traverses, in order.
    pub fn hops(&self) -> impl Iterator<Item = PortRef> + '_ {
        self.route.windows(2).map(|w| PortRef::new(w[0].clone(), w[1].clone()))
    }

    pub fn source(&self) -> &NodeId {
        &self.route[0]
    }

    pub fn destination(&self) -> &NodeId {
        self.route.last().expect("route is never empty")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Network {
    pub nodes: BTreeMap<NodeId, NodeKind>,
    /// Keyed by (src, dst); directed.
    pub links: BTreeMap<(NodeId, NodeId), Link>,
}

impl Network {
    pub fn link(&self, port: &PortRef) -> Option<&Link> {
        self.links.get(&(port.node.clone(), port.next.clone()))
    }

    pub fn kind(&self, node: &NodeId) -> Option<NodeKind> {
        self.nodes.get(node).copied()
    }

    pub fn is_switch(&self, node: &NodeId) -> bool {
        self.kind(node) == Some(NodeKind::Switch)
    }

    pub fn add_node(&mut self, id: impl Into<NodeId>, kind: NodeKind) {
        self.nodes.insert(id.into(), kind);
    }

    /// Inserts the directed pair `[a,b]`, `[b,a]` with identical parameters.
    pub fn add_duplex(&mut self, a: &str, b: &str, speed_mbps: u64, macrotick_us: u64) {
        self.links.insert(
            (a.to_string(), b.to_string()),
            Link { src: a.to_string(), dst: b.to_string(), speed_mbps, macrotick_us },
        );
        self.links.insert(
            (b.to_string(), a.to_string()),
            Link { src: b.to_string(), dst: a.to_string(), speed_mbps, macrotick_us },
        );
    }
}

/// A complete problem instance: topology plus traffic.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub network: Network,
    pub flows: Vec<Flow>,
    /// Extra on-wire bytes charged per frame on top of the payload.
    #[serde(default)]
    pub overhead_bytes: u32,
}

impl Instance {
    pub fn flow(&self, id: &str) -> Option<&Flow> {
        self.flows.iter().find(|f| f.id == id)
    }

    /// On-wire size of one frame of `flow`, in bytes.
    pub fn wire_bytes(&self, flow: &Flow) -> u64 {
        u64::from(flow.payload_bytes) + u64::from(self.overhead_bytes)
    }

    /// Frame transmission time in microseconds, rounded up.
    pub fn tx_time_us(&self, link: &Link, flow: &Flow) -> u64 {
        tx_time_us(link.speed_mbps, self.wire_bytes(flow))
    }
}

/// Transmission time in microseconds of `bytes` on a `speed_mbps` link,
/// rounded up to a whole microsecond.
pub fn tx_time_us(speed_mbps: u64, bytes: u64) -> u64 {
    (bytes * 8).div_ceil(speed_mbps)
}

/// Same, in nanoseconds (used by the simulator to avoid rounding drift).
pub fn tx_time_ns(speed_mbps: u64, bytes: u64) -> u64 {
    (bytes * 8_000).div_ceil(speed_mbps)
}

/// One structural defect found by [`validate_instance`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationIssue {
    UnknownNode { node: NodeId },
    MissingReverseLink { src: NodeId, dst: NodeId },
    SelfLoop { node: NodeId },
    BadLinkParams { src: NodeId, dst: NodeId, reason: String },
    EmptyRoute { flow: FlowId },
    UnknownRouteLink { flow: FlowId, src: NodeId, dst: NodeId },
    DisconnectedRoute { flow: FlowId },
    RouteEndpointNotEndSystem { flow: FlowId, node: NodeId },
    InteriorNodeNotSwitch { flow: FlowId, node: NodeId },
    FrameSizeOutOfRange { flow: FlowId, payload_bytes: u32 },
    NonPositivePeriod { flow: FlowId },
    NonPositiveDeadline { flow: FlowId },
    BadPriority { flow: FlowId, priority: u8 },
    DuplicateFlowId { flow: FlowId },
    TooManyQueues { port: PortRef, count: usize },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ValidationIssue::*;
        match self {
            UnknownNode { node } => write!(f, "link references unknown node {node}"),
            MissingReverseLink { src, dst } => {
                write!(f, "link [{src},{dst}] has no reverse direction [{dst},{src}]")
            }
            SelfLoop { node } => write!(f, "self-loop on node {node}"),
            BadLinkParams { src, dst, reason } => write!(f, "link [{src},{dst}]: {reason}"),
            EmptyRoute { flow } => write!(f, "flow {flow}: route has fewer than two nodes"),
            UnknownRouteLink { flow, src, dst } => {
                write!(f, "flow {flow}: route uses nonexistent link [{src},{dst}]")
            }
            DisconnectedRoute { flow } => write!(f, "flow {flow}: route is not a connected path"),
            RouteEndpointNotEndSystem { flow, node } => {
                write!(f, "flow {flow}: route endpoint {node} is not an end system")
            }
            InteriorNodeNotSwitch { flow, node } => {
                write!(f, "flow {flow}: interior route node {node} is not a switch")
            }
            FrameSizeOutOfRange { flow, payload_bytes } => {
                write!(f, "flow {flow}: payload {payload_bytes} B outside [{MIN_FRAME_BYTES}, {MAX_FRAME_BYTES}]")
            }
            NonPositivePeriod { flow } => write!(f, "flow {flow}: period must be positive"),
            NonPositiveDeadline { flow } => write!(f, "flow {flow}: deadline must be positive"),
            BadPriority { flow, priority } => {
                write!(f, "flow {flow}: priority {priority} outside 0..=7")
            }
            DuplicateFlowId { flow } => write!(f, "duplicate flow id {flow}"),
            TooManyQueues { port, count } => {
                write!(f, "port {port}: {count} distinct priorities exceed the 8 queues")
            }
        }
    }
}

/// Result of structural validation; empty iff the instance is well formed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return write!(f, "instance ok");
        }
        for issue in &self.issues {
            writeln!(f, "{issue}")?;
        }
        Ok(())
    }
}

/// Checks every structural invariant of the model and reports all violations.
pub fn validate_instance(instance: &Instance) -> ValidationReport {
    let mut issues = Vec::new();
    let net = &instance.network;

    for ((src, dst), link) in &net.links {
        if src == dst {
            issues.push(ValidationIssue::SelfLoop { node: src.clone() });
        }
        for n in [src, dst] {
            if !net.nodes.contains_key(n) {
                issues.push(ValidationIssue::UnknownNode { node: n.clone() });
            }
        }
        if !net.links.contains_key(&(dst.clone(), src.clone())) {
            issues.push(ValidationIssue::MissingReverseLink { src: src.clone(), dst: dst.clone() });
        }
        if link.speed_mbps == 0 {
            issues.push(ValidationIssue::BadLinkParams {
                src: src.clone(),
                dst: dst.clone(),
                reason: "speed must be positive".into(),
            });
        }
        if link.macrotick_us == 0 {
            issues.push(ValidationIssue::BadLinkParams {
                src: src.clone(),
                dst: dst.clone(),
                reason: "macrotick must be at least 1".into(),
            });
        }
    }

    let mut seen = BTreeSet::new();
    for flow in &instance.flows {
        if !seen.insert(flow.id.clone()) {
            issues.push(ValidationIssue::DuplicateFlowId { flow: flow.id.clone() });
        }
        if flow.route.len() < 2 {
            issues.push(ValidationIssue::EmptyRoute { flow: flow.id.clone() });
            continue;
        }
        let mut connected = true;
        for pair in flow.route.windows(2) {
            if !net.links.contains_key(&(pair[0].clone(), pair[1].clone())) {
                issues.push(ValidationIssue::UnknownRouteLink {
                    flow: flow.id.clone(),
                    src: pair[0].clone(),
                    dst: pair[1].clone(),
                });
                connected = false;
            }
        }
        if !connected {
            issues.push(ValidationIssue::DisconnectedRoute { flow: flow.id.clone() });
        }
        for endpoint in [flow.source(), flow.destination()] {
            if net.kind(endpoint) != Some(NodeKind::EndSystem) {
                issues.push(ValidationIssue::RouteEndpointNotEndSystem {
                    flow: flow.id.clone(),
                    node: endpoint.clone(),
                });
            }
        }
        for interior in &flow.route[1..flow.route.len().saturating_sub(1)] {
            if net.kind(interior) != Some(NodeKind::Switch) {
                issues.push(ValidationIssue::InteriorNodeNotSwitch {
                    flow: flow.id.clone(),
                    node: interior.clone(),
                });
            }
        }
        if flow.payload_bytes < MIN_FRAME_BYTES || flow.payload_bytes > MAX_FRAME_BYTES {
            issues.push(ValidationIssue::FrameSizeOutOfRange {
                flow: flow.id.clone(),
                payload_bytes: flow.payload_bytes,
            });
        }
        if flow.period_us == 0 {
            issues.push(ValidationIssue::NonPositivePeriod { flow: flow.id.clone() });
        }
        if flow.deadline_us == 0 {
            issues.push(ValidationIssue::NonPositiveDeadline { flow: flow.id.clone() });
        }
        if flow.priority > 7 {
            issues.push(ValidationIssue::BadPriority {
                flow: flow.id.clone(),
                priority: flow.priority,
            });
        }
    }

    // One ST queue per distinct priority present on a port; at most 8 fit.
    let mut port_prios: BTreeMap<PortRef, BTreeSet<QueueId>> = BTreeMap::new();
    for flow in &instance.flows {
        for port in flow.hops() {
            port_prios.entry(port).or_default().insert(flow.priority);
        }
    }
    for (port, prios) in port_prios {
        if prios.len() > 8 {
            issues.push(ValidationIssue::TooManyQueues { port, count: prios.len() });
        }
    }

    ValidationReport { issues }
}

/// Analysis-wide parameters shared by the delay analysis and the optimizer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisParams {
    /// Network precision: maximum clock deviation between synchronized devices.
    pub delta_precision_us: u64,
    /// Number of delayed frame copies charged per switch-arriving flow in the
    /// pruning demand. Must be at least 1.
    pub backlog: u64,
    /// Constant per-switch forwarding delay.
    pub processing_delay_us: u64,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams { delta_precision_us: 0, backlog: 1, processing_delay_us: 0 }
    }
}
