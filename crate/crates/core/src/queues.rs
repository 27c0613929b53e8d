//! Per-port and per-queue helper quantities derived from an instance:
//! hyperperiods, guard bands, largest frames and the queue/flow sets the
//! proxy and the analysis are built on.

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;

use crate::model::{FlowId, Instance, PortRef, QueueId};

/// Reference to one ST queue: an egress port plus the priority mapped to it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QueueRef {
    pub port: PortRef,
    pub queue: QueueId,
}

impl fmt::Display for QueueRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.q{}", self.port, self.queue)
    }
}

#[derive(Debug, Clone, Default)]
pub struct QueueFlows {
    /// Every flow assigned to the queue.
    pub all: Vec<FlowId>,
    /// The subset whose previous hop is a switch (they may arrive bursty).
    pub from_switch: Vec<FlowId>,
}

/// Queue/flow assignment of a whole instance.
#[derive(Debug, Clone, Default)]
pub struct QueueMap {
    pub queues: BTreeMap<QueueRef, QueueFlows>,
}

impl QueueMap {
    /// Total number of ST windows the network needs (one per populated queue).
    pub fn window_count(&self) -> usize {
        self.queues.len()
    }

    pub fn flows_of(&self, queue: &QueueRef) -> &[FlowId] {
        self.queues.get(queue).map(|q| q.all.as_slice()).unwrap_or(&[])
    }

    /// Queues living on switch egress ports, i.e. the ones that get windows.
    pub fn scheduled_queues<'a>(
        &'a self,
        instance: &'a Instance,
    ) -> impl Iterator<Item = (&'a QueueRef, &'a QueueFlows)> {
        self.queues.iter().filter(|(q, _)| instance.network.is_switch(&q.port.node))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueueError {
    NoFlowsOnPort { port: PortRef },
}

impl fmt::Display for QueueError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueueError::NoFlowsOnPort { port } => write!(f, "no flows routed through {port}"),
        }
    }
}

impl std::error::Error for QueueError {}

/// Builds the queue → flow assignment for every port the instance touches,
/// including end-system egress ports (those never get windows but still
/// matter for source contention).
pub fn queue_flow_sets(instance: &Instance) -> QueueMap {
    let mut map = QueueMap::default();
    for flow in &instance.flows {
        let mut prev = flow.source().clone();
        for port in flow.hops() {
            let entry = map
                .queues
                .entry(QueueRef { port: port.clone(), queue: flow.priority })
                .or_default();
            entry.all.push(flow.id.clone());
            if instance.network.is_switch(&prev) {
                entry.from_switch.push(flow.id.clone());
            }
            prev = port.node.clone();
        }
    }
    map
}

/// Least common multiple of the periods of all flows routed via `port`.
pub fn port_hyperperiod_us(instance: &Instance, port: &PortRef) -> Result<u64, QueueError> {
    let mut lcm: Option<u64> = None;
    for flow in &instance.flows {
        if flow.hops().any(|p| &p == port) {
            lcm = Some(match lcm {
                None => flow.period_us,
                Some(k) => k.lcm(&flow.period_us),
            });
        }
    }
    lcm.ok_or(QueueError::NoFlowsOnPort { port: port.clone() })
}

/// Largest payload among the flows assigned to `queue`, 0 if none.
pub fn max_frame_bytes(instance: &Instance, queue_flows: &[FlowId]) -> u32 {
    queue_flows
        .iter()
        .filter_map(|id| instance.flow(id))
        .map(|f| f.payload_bytes)
        .max()
        .unwrap_or(0)
}

/// Guard band of a queue: the largest frame transmission time among the
/// flows competing in it, in microseconds (0 for an empty queue).
pub fn guard_band_us(instance: &Instance, port: &PortRef, queue_flows: &[FlowId]) -> u64 {
    let Some(link) = instance.network.link(port) else { return 0 };
    queue_flows
        .iter()
        .filter_map(|id| instance.flow(id))
        .map(|f| instance.tx_time_us(link, f))
        .max()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Flow, Instance, Network, NodeKind};

    fn instance_with_periods(periods: &[u64]) -> Instance {
        let mut net = Network::default();
        net.add_node("sw1", NodeKind::Switch);
        net.add_node("es_dst", NodeKind::EndSystem);
        net.add_duplex("sw1", "es_dst", 100, 1);
        let mut flows = Vec::new();
        for (i, &t) in periods.iter().enumerate() {
            let src = format!("es{i}");
            net.add_node(&src, NodeKind::EndSystem);
            net.add_duplex(&src, "sw1", 100, 1);
            flows.push(Flow {
                id: format!("f{i}"),
                payload_bytes: 100,
                period_us: t,
                priority: 0,
                deadline_us: t,
                route: vec![src, "sw1".into(), "es_dst".into()],
            });
        }
        Instance { network: net, flows, overhead_bytes: 0 }
    }

    #[test]
    fn hyperperiod_is_lcm_of_routed_periods() {
        let inst = instance_with_periods(&[5, 6, 15]);
        let port = PortRef::new("sw1", "es_dst");
        assert_eq!(port_hyperperiod_us(&inst, &port).unwrap(), 30);

        let single = instance_with_periods(&[10]);
        assert_eq!(port_hyperperiod_us(&single, &port).unwrap(), 10);

        let pair = instance_with_periods(&[1500, 2500]);
        assert_eq!(port_hyperperiod_us(&pair, &port).unwrap(), 7500);
    }

    #[test]
    fn hyperperiod_divides_every_period_in() {
        let inst = instance_with_periods(&[4, 6, 10, 14]);
        let port = PortRef::new("sw1", "es_dst");
        let k = port_hyperperiod_us(&inst, &port).unwrap();
        for f in &inst.flows {
            assert_eq!(k % f.period_us, 0);
        }
    }

    #[test]
    fn no_flows_on_port_is_an_error() {
        let inst = instance_with_periods(&[10]);
        let unused = PortRef::new("es_dst", "sw1");
        assert!(matches!(
            port_hyperperiod_us(&inst, &unused),
            Err(QueueError::NoFlowsOnPort { .. })
        ));
    }

    #[test]
    fn guard_band_is_largest_competing_tx_time() {
        let mut inst = instance_with_periods(&[10, 10]);
        inst.flows[0].payload_bytes = 150;
        inst.flows[1].payload_bytes = 100;
        let port = PortRef::new("sw1", "es_dst");
        let ids: Vec<_> = inst.flows.iter().map(|f| f.id.clone()).collect();
        // 150 B at 100 Mbps: 12 us beats 8 us.
        assert_eq!(guard_band_us(&inst, &port, &ids), 12);
        assert_eq!(guard_band_us(&inst, &port, &ids[..1]), 12);
        assert_eq!(guard_band_us(&inst, &port, &[]), 0);
    }

    #[test]
    fn max_frame_size_over_assigned_flows() {
        let mut inst = instance_with_periods(&[10, 10, 10]);
        inst.flows[0].payload_bytes = 150;
        inst.flows[1].payload_bytes = 100;
        inst.flows[2].payload_bytes = 64;
        let ids: Vec<_> = inst.flows.iter().map(|f| f.id.clone()).collect();
        assert_eq!(max_frame_bytes(&inst, &ids), 150);
        assert_eq!(max_frame_bytes(&inst, &[]), 0);
        assert_eq!(max_frame_bytes(&inst, &ids[2..]), 64);
    }

    #[test]
    fn switch_arrivals_need_a_switch_upstream() {
        // A flow is a "switch arrival" at a port when the node it reached the
        // transmitting device from is itself a switch.
        let inst = crate::testfix::two_switch_instance();
        let map = queue_flow_sets(&inst);
        let first = QueueRef { port: PortRef::new("es1", "sw1"), queue: 0 };
        let second = QueueRef { port: PortRef::new("sw1", "sw2"), queue: 0 };
        let third = QueueRef { port: PortRef::new("sw2", "es3"), queue: 0 };
        let q1 = &map.queues[&first];
        assert!(q1.all.contains(&"f1".to_string()));
        assert!(q1.from_switch.is_empty());
        // at sw1 the frame was received from es1, so still not a switch arrival
        let q2 = &map.queues[&second];
        assert!(q2.all.contains(&"f1".to_string()));
        assert!(!q2.from_switch.contains(&"f1".to_string()));
        // at sw2 it was received from sw1
        let q3 = &map.queues[&third];
        assert!(q3.from_switch.contains(&"f1".to_string()));
    }

    #[test]
    fn switch_fed_flows_are_separated_from_es_fed() {
        // Three flows into one egress queue; only the one arriving from a
        // switch shows up in the switch-arrival set.
        let mut net = Network::default();
        for n in ["es1", "es2", "es3", "esd"] {
            net.add_node(n, NodeKind::EndSystem);
        }
        net.add_node("swa", NodeKind::Switch);
        net.add_node("swb", NodeKind::Switch);
        net.add_duplex("es1", "swb", 100, 1);
        net.add_duplex("es2", "swb", 100, 1);
        net.add_duplex("es3", "swa", 100, 1);
        net.add_duplex("swa", "swb", 100, 1);
        net.add_duplex("swb", "esd", 100, 1);
        let mk = |id: &str, src: &str, via_swa: bool| Flow {
            id: id.into(),
            payload_bytes: 100,
            period_us: 15,
            priority: 0,
            deadline_us: 15,
            route: if via_swa {
                vec![src.into(), "swa".into(), "swb".into(), "esd".into()]
            } else {
                vec![src.into(), "swb".into(), "esd".into()]
            },
        };
        let inst = Instance {
            network: net,
            flows: vec![mk("f1", "es1", false), mk("f2", "es2", false), mk("f3", "es3", true)],
            overhead_bytes: 0,
        };
        let map = queue_flow_sets(&inst);
        let q = &map.queues[&QueueRef { port: PortRef::new("swb", "esd"), queue: 0 }];
        assert_eq!(q.all.len(), 3);
        assert_eq!(q.from_switch, vec!["f3".to_string()]);
    }
}
