//! Shared fixtures for unit tests.

use crate::model::{Flow, Instance, Network, NodeKind};

/// Two end systems feeding two switches in a line towards a third ES.
pub(crate) fn two_switch_instance() -> Instance {
    let mut net = Network::default();
    net.add_node("es1", NodeKind::EndSystem);
    net.add_node("es2", NodeKind::EndSystem);
    net.add_node("es3", NodeKind::EndSystem);
    net.add_node("sw1", NodeKind::Switch);
    net.add_node("sw2", NodeKind::Switch);
    net.add_duplex("es1", "sw1", 100, 1);
    net.add_duplex("es2", "sw1", 100, 1);
    net.add_duplex("sw1", "sw2", 100, 1);
    net.add_duplex("sw2", "es3", 100, 1);
    let flows = vec![
        Flow {
            id: "f1".into(),
            payload_bytes: 100,
            period_us: 100,
            priority: 0,
            deadline_us: 100,
            route: vec!["es1".into(), "sw1".into(), "sw2".into(), "es3".into()],
        },
        Flow {
            id: "f2".into(),
            payload_bytes: 200,
            period_us: 200,
            priority: 0,
            deadline_us: 200,
            route: vec!["es2".into(), "sw1".into(), "sw2".into(), "es3".into()],
        },
    ];
    Instance { network: net, flows, overhead_bytes: 0 }
}
