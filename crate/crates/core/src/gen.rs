//! Synthetic test-case generation: ring, mesh and tree topologies with
//! randomly drawn flows, mirroring typical industrial and automotive setups.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{Flow, Instance, Network, NodeId, NodeKind, MAX_FRAME_BYTES, MIN_FRAME_BYTES};

/// Default period pool in microseconds.
pub const DEFAULT_PERIODS_US: [u64; 6] = [1_500, 2_500, 3_500, 5_000, 7_500, 10_000];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// Small ring & mesh.
    Srm,
    /// Medium ring.
    Mr,
    /// Medium mesh.
    Mm,
    /// Small tree of depth 1.
    St1,
    /// Medium tree of depth 2.
    Mt2,
}

impl Topology {
    pub fn name(&self) -> &'static str {
        match self {
            Topology::Srm => "srm",
            Topology::Mr => "mr",
            Topology::Mm => "mm",
            Topology::St1 => "st1",
            Topology::Mt2 => "mt2",
        }
    }

    fn min_switches(&self) -> usize {
        match self {
            Topology::Srm | Topology::Mr | Topology::Mm => 2,
            Topology::St1 => 2,
            Topology::Mt2 => 3,
        }
    }
}

impl std::str::FromStr for Topology {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "srm" => Ok(Topology::Srm),
            "mr" => Ok(Topology::Mr),
            "mm" => Ok(Topology::Mm),
            "st1" | "st" => Ok(Topology::St1),
            "mt2" | "mt" => Ok(Topology::Mt2),
            other => Err(format!("unknown topology {other}; expected srm|mr|mm|st1|mt2")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GenSpec {
    pub topology: Topology,
    pub switches: usize,
    pub end_systems: usize,
    pub flows: usize,
    pub seed: u64,
    pub link_speed_mbps: u64,
    pub macrotick_us: u64,
    pub periods_us: Vec<u64>,
    /// Distinct priority classes drawn uniformly; class `c` maps to
    /// priority `7 - c`, so class 0 is the highest.
    pub priority_classes: u8,
    /// Deadline as a multiple of the period.
    pub deadline_scale: f64,
}

impl GenSpec {
    pub fn new(topology: Topology, switches: usize, end_systems: usize, flows: usize, seed: u64) -> Self {
        GenSpec {
            topology,
            switches,
            end_systems,
            flows,
            seed,
            link_speed_mbps: 100,
            macrotick_us: 1,
            periods_us: DEFAULT_PERIODS_US.to_vec(),
            priority_classes: 2,
            deadline_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GenError {
    TopologyTooSmall { topology: &'static str, switches: usize, end_systems: usize },
    BadSpec(String),
}

impl fmt::Display for GenError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenError::TopologyTooSmall { topology, switches, end_systems } => write!(
                f,
                "topology {topology} cannot be formed with {switches} switches / {end_systems} end systems"
            ),
            GenError::BadSpec(msg) => write!(f, "bad generator spec: {msg}"),
        }
    }
}

impl std::error::Error for GenError {}

fn sw_name(i: usize) -> String {
    format!("sw{i:02}")
}

fn es_name(i: usize) -> String {
    format!("es{i:02}")
}

/// Switch-to-switch edges of each topology kind, as index pairs.
fn switch_edges(topology: Topology, n: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    match topology {
        Topology::Mr => {
            for i in 0..n {
                let j = (i + 1) % n;
                let (a, b) = if i < j { (i, j) } else { (j, i) };
                if a != b {
                    edges.push((a, b));
                }
            }
        }
        Topology::Srm => {
            // ring plus one cross chord once it fits
            edges = switch_edges(Topology::Mr, n);
            if n >= 4 {
                edges.push((0, n / 2));
            }
        }
        Topology::Mm => {
            // ring plus skip-one chords
            edges = switch_edges(Topology::Mr, n);
            if n >= 5 {
                let mut i = 0;
                while i < n {
                    let j = (i + 2) % n;
                    let (a, b) = if i < j { (i, j) } else { (j, i) };
                    if !edges.contains(&(a, b)) {
                        edges.push((a, b));
                    }
                    i += 2;
                }
            }
        }
        Topology::St1 => {
            for i in 1..n {
                edges.push((0, i));
            }
        }
        Topology::Mt2 => {
            // root, up to two inner switches, rest are leaves under the inner layer
            let inner = (n - 1).min(2);
            for i in 1..=inner {
                edges.push((0, i));
            }
            for (k, i) in (inner + 1..n).enumerate() {
                edges.push((1 + k % inner, i));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    edges
}

/// Deterministic BFS shortest path over the node graph.
fn shortest_path(net: &Network, from: &NodeId, to: &NodeId) -> Option<Vec<NodeId>> {
    let mut adj: BTreeMap<&NodeId, Vec<&NodeId>> = BTreeMap::new();
    for (src, dst) in net.links.keys() {
        adj.entry(src).or_default().push(dst);
    }
    // End systems never forward traffic.
    let mut parent: BTreeMap<&NodeId, &NodeId> = BTreeMap::new();
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(from);
    parent.insert(from, from);
    while let Some(cur) = queue.pop_front() {
        if cur == to {
            let mut path = vec![to.clone()];
            let mut n = cur;
            while parent[n] != n {
                n = parent[n];
                path.push(n.clone());
            }
            path.reverse();
            return Some(path);
        }
        if cur != from && !net.is_switch(cur) {
            continue;
        }
        for next in adj.get(cur).into_iter().flatten() {
            if !parent.contains_key(next) {
                parent.insert(next, cur);
                queue.push_back(next);
            }
        }
    }
    None
}

/// Builds a synthetic instance; deterministic for a given spec.
pub fn generate(spec: &GenSpec) -> Result<Instance, GenError> {
    if spec.switches < spec.topology.min_switches() || spec.end_systems < 2 {
        return Err(GenError::TopologyTooSmall {
            topology: spec.topology.name(),
            switches: spec.switches,
            end_systems: spec.end_systems,
        });
    }
    if spec.flows == 0 {
        return Err(GenError::BadSpec("at least one flow required".into()));
    }
    if spec.periods_us.is_empty() {
        return Err(GenError::BadSpec("period pool is empty".into()));
    }
    if spec.priority_classes == 0 || spec.priority_classes > 8 {
        return Err(GenError::BadSpec("priority classes must be within 1..=8".into()));
    }
    if spec.deadline_scale <= 0.0 {
        return Err(GenError::BadSpec("deadline scale must be positive".into()));
    }

    let mut net = Network::default();
    for i in 0..spec.switches {
        net.add_node(sw_name(i), NodeKind::Switch);
    }
    for (a, b) in switch_edges(spec.topology, spec.switches) {
        net.add_duplex(&sw_name(a), &sw_name(b), spec.link_speed_mbps, spec.macrotick_us);
    }
    // End systems round-robin across switches; trees prefer leaf switches.
    let attach_order: Vec<usize> = match spec.topology {
        Topology::St1 if spec.switches > 1 => (1..spec.switches).collect(),
        Topology::Mt2 if spec.switches > 3 => (3..spec.switches)
            .chain(1..=2.min(spec.switches - 1))
            .collect(),
        _ => (0..spec.switches).collect(),
    };
    for i in 0..spec.end_systems {
        let sw = attach_order[i % attach_order.len()];
        net.add_node(es_name(i), NodeKind::EndSystem);
        net.add_duplex(&es_name(i), &sw_name(sw), spec.link_speed_mbps, spec.macrotick_us);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let width = spec.flows.to_string().len().max(3);
    let mut flows = Vec::with_capacity(spec.flows);
    for i in 0..spec.flows {
        let src = rng.random_range(0..spec.end_systems);
        let mut dst = rng.random_range(0..spec.end_systems);
        while dst == src {
            dst = rng.random_range(0..spec.end_systems);
        }
        let payload = rng.random_range(MIN_FRAME_BYTES..=MAX_FRAME_BYTES);
        let period = spec.periods_us[rng.random_range(0..spec.periods_us.len())];
        let class = rng.random_range(0..spec.priority_classes);
        let route = shortest_path(&net, &es_name(src), &es_name(dst))
            .expect("generated topology is connected");
        let deadline = ((period as f64 * spec.deadline_scale).round() as u64).max(1);
        flows.push(Flow {
            id: format!("f{i:0width$}"),
            payload_bytes: payload,
            period_us: period,
            priority: 7 - class,
            deadline_us: deadline,
            route,
        });
    }

    Ok(Instance { network: net, flows, overhead_bytes: 0 })
}
