//! Finite integer domains of the window variables, per queue.

use std::collections::BTreeMap;

use crate::model::{Instance, QueueId};
use crate::queues::{self, QueueRef};
use crate::window::WindowConfig;

use super::SynthError;

/// Variable ranges of one queue's window, in macroticks of its link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueueDomain {
    pub queue: QueueRef,
    /// Port hyperperiod in macroticks.
    pub hyperperiod_mt: u64,
    /// Admissible periods: the divisors of the hyperperiod, ascending.
    pub periods_mt: Vec<u64>,
    /// Smallest admissible window length: largest-frame transmission time
    /// plus the guard band.
    pub min_length_mt: u64,
    pub guard_band_us: u64,
    pub macrotick_us: u64,
}

impl QueueDomain {
    /// Offsets range over `[0, hyperperiod]`; lengths over
    /// `[min_length, hyperperiod]`. Validity (offset + length <= period)
    /// further couples the three variables.
    pub fn contains(&self, w: &WindowConfig) -> bool {
        self.periods_mt.contains(&w.period_mt)
            && w.length_mt >= self.min_length_mt
            && w.length_mt <= self.hyperperiod_mt
            && w.offset_mt <= self.hyperperiod_mt
            && w.is_valid()
    }

    /// Periods adjacent to `t` on the divisor lattice (next smaller, next
    /// larger), if any.
    pub fn adjacent_periods(&self, t: u64) -> (Option<u64>, Option<u64>) {
        let down = self.periods_mt.iter().rev().find(|&&d| d < t).copied();
        let up = self.periods_mt.iter().find(|&&d| d > t).copied();
        (down, up)
    }

    /// Number of `(period, length, offset)` triples satisfying validity.
    pub fn size(&self) -> u128 {
        let mut n: u128 = 0;
        for &t in &self.periods_mt {
            if t < self.min_length_mt {
                continue;
            }
            // for each w in [min_length, t]: offsets 0..=t-w
            let k = (t - self.min_length_mt + 1) as u128;
            // sum_{w=wmin..t} (t-w+1) = k*(k+1)/2
            n += k * (k + 1) / 2;
        }
        n
    }
}

fn divisors(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut i = 1;
    while i * i <= n {
        if n % i == 0 {
            out.push(i);
            if i != n / i {
                out.push(n / i);
            }
        }
        i += 1;
    }
    out.sort_unstable();
    out
}

/// Builds the variable domains of every populated switch-egress queue.
pub fn build_domains(instance: &Instance) -> Result<BTreeMap<QueueRef, QueueDomain>, SynthError> {
    let qmap = queues::queue_flow_sets(instance);
    let mut out = BTreeMap::new();
    for (qref, qflows) in qmap.scheduled_queues(instance) {
        let link = instance.network.link(&qref.port).expect("validated instance");
        let mt = link.macrotick_us;
        let k_us = queues::port_hyperperiod_us(instance, &qref.port)
            .expect("populated queue implies flows on port");
        if k_us % mt != 0 {
            return Err(SynthError::EmptyDomain {
                queue: qref.clone(),
                reason: format!("hyperperiod {k_us} us not a multiple of macrotick {mt} us"),
            });
        }
        let k_mt = k_us / mt;
        let max_frame = queues::max_frame_bytes(instance, &qflows.all);
        let tx_us = crate::model::tx_time_us(
            link.speed_mbps,
            u64::from(max_frame) + u64::from(instance.overhead_bytes),
        );
        let gb_us = queues::guard_band_us(instance, &qref.port, &qflows.all);
        let min_length_mt = tx_us.div_ceil(mt) + gb_us.div_ceil(mt);
        if min_length_mt > k_mt {
            return Err(SynthError::EmptyDomain {
                queue: qref.clone(),
                reason: format!(
                    "minimum window length {min_length_mt} mt exceeds hyperperiod {k_mt} mt"
                ),
            });
        }
        out.insert(
            qref.clone(),
            QueueDomain {
                queue: qref.clone(),
                hyperperiod_mt: k_mt,
                periods_mt: divisors(k_mt),
                min_length_mt,
                guard_band_us: gb_us,
                macrotick_us: mt,
            },
        );
    }
    Ok(out)
}

/// Queues of `domains` grouped per port, for port-local constraint checks.
pub fn queues_by_port(
    domains: &BTreeMap<QueueRef, QueueDomain>,
) -> BTreeMap<crate::model::PortRef, Vec<QueueId>> {
    let mut out: BTreeMap<crate::model::PortRef, Vec<QueueId>> = BTreeMap::new();
    for q in domains.keys() {
        out.entry(q.port.clone()).or_default().push(q.queue);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Flow, Instance, Network, NodeKind};

    fn one_queue_instance(payloads: &[u32], periods: &[u64]) -> Instance {
        let mut net = Network::default();
        net.add_node("sw0", NodeKind::Switch);
        net.add_node("esd", NodeKind::EndSystem);
        net.add_duplex("sw0", "esd", 100, 1);
        let mut flows = Vec::new();
        for (i, (&l, &t)) in payloads.iter().zip(periods).enumerate() {
            let src = format!("es{i}");
            net.add_node(&src, NodeKind::EndSystem);
            net.add_duplex(&src, "sw0", 100, 1);
            flows.push(Flow {
                id: format!("f{i}"),
                payload_bytes: l,
                period_us: t,
                priority: 0,
                deadline_us: t,
                route: vec![src, "sw0".into(), "esd".into()],
            });
        }
        Instance { network: net, flows, overhead_bytes: 0 }
    }

    #[test]
    fn periods_are_divisors_of_the_hyperperiod() {
        let inst = one_queue_instance(&[100, 100, 100], &[5, 6, 15]);
        let domains = build_domains(&inst).unwrap();
        let d = domains.values().next().unwrap();
        assert_eq!(d.hyperperiod_mt, 30);
        assert_eq!(d.periods_mt, vec![1, 2, 3, 5, 6, 10, 15, 30]);
    }

    #[test]
    fn min_length_is_largest_tx_plus_guard_band() {
        // 150 B at 100 Mbps: 12 us transmission, 12 us guard band.
        let inst = one_queue_instance(&[150, 100], &[100, 100]);
        let domains = build_domains(&inst).unwrap();
        let d = domains.values().next().unwrap();
        assert_eq!(d.min_length_mt, 24);
    }

    #[test]
    fn min_length_above_hyperperiod_is_empty_domain() {
        let inst = one_queue_instance(&[150], &[15]);
        assert!(matches!(
            build_domains(&inst),
            Err(SynthError::EmptyDomain { .. })
        ));
    }

    #[test]
    fn adjacent_periods_on_the_divisor_lattice() {
        let inst = one_queue_instance(&[64, 64, 64], &[5, 6, 15]);
        let domains = build_domains(&inst).unwrap();
        let d = domains.values().next().unwrap();
        assert_eq!(d.adjacent_periods(10), (Some(6), Some(15)));
        assert_eq!(d.adjacent_periods(1), (None, Some(2)));
        assert_eq!(d.adjacent_periods(30), (Some(15), None));
    }

    #[test]
    fn domain_size_counts_valid_triples() {
        // 125 B at 100 Mbps: 10 us tx + 10 us guard band = minimum 20 mt.
        let inst = one_queue_instance(&[125], &[40]);
        let domains = build_domains(&inst).unwrap();
        let d = domains.values().next().unwrap();
        assert_eq!(d.min_length_mt, 20);
        // T=20: one (w,phi); T=40: lengths 20..=40, sum 21*22/2 = 231.
        assert_eq!(d.size(), 232);
    }
}
