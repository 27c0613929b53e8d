//! Constraint system of the window search: validity, per-port non-overlap,
//! bandwidth, harmonic periods, hyperperiod divisibility, and the capacity
//! pruning constraint.

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;

use crate::model::{Instance, PortRef};
use crate::proxy::{self, ByteMicros, DemandFlow};
use crate::queues::{self, QueueRef};
use crate::window::WindowConfig;

use super::SynthError;

/// A single window per populated switch-egress queue; the search state.
pub type Assignment = BTreeMap<QueueRef, WindowConfig>;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Offset plus length exceeds the period, or the period is zero.
    WindowInvalid { queue: QueueRef },
    /// Two windows of the same port overlap in some period instance.
    Overlap { a: QueueRef, b: QueueRef },
    /// Window utilization below the assigned flows' bandwidth need.
    BandwidthExceeded { queue: QueueRef },
    /// Two queue periods on one port do not divide one another.
    PeriodsNotHarmonic { port: PortRef, t_a: u64, t_b: u64 },
    /// Window period does not divide the port hyperperiod.
    PeriodNotDividingHyperperiod { queue: QueueRef },
    /// Transmission demand exceeds window capacity (pruning constraint).
    CapacityShortfall { queue: QueueRef, margin: ByteMicros },
    /// A populated queue has no window in the assignment.
    MissingWindow { queue: QueueRef },
    /// The capacity/demand evaluation itself failed.
    ProxyFailure { queue: QueueRef, message: String },
}

impl Violation {
    /// The pruning constraint is heuristic; everything else is structural.
    pub fn is_capacity_pruning(&self) -> bool {
        matches!(self, Violation::CapacityShortfall { .. })
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::WindowInvalid { queue } => write!(f, "{queue}: window invalid"),
            Violation::Overlap { a, b } => write!(f, "windows of {a} and {b} overlap"),
            Violation::BandwidthExceeded { queue } => {
                write!(f, "{queue}: window bandwidth below flow demand")
            }
            Violation::PeriodsNotHarmonic { port, t_a, t_b } => {
                write!(f, "{port}: periods {t_a} and {t_b} not harmonic")
            }
            Violation::PeriodNotDividingHyperperiod { queue } => {
                write!(f, "{queue}: period does not divide the port hyperperiod")
            }
            Violation::CapacityShortfall { queue, margin } => {
                write!(f, "{queue}: capacity short of demand by {}", *margin)
            }
            Violation::MissingWindow { queue } => write!(f, "{queue}: no window assigned"),
            Violation::ProxyFailure { queue, message } => write!(f, "{queue}: {message}"),
        }
    }
}

/// True iff the two windows never overlap, checked over every pair of period
/// instances within `max(T_a, T_b)`.
pub fn windows_disjoint(a: &WindowConfig, b: &WindowConfig) -> bool {
    let t_max = a.period_mt.max(b.period_mt);
    let reps_a = t_max.div_ceil(a.period_mt);
    let reps_b = t_max.div_ceil(b.period_mt);
    for i in 0..reps_a {
        let (s_a, e_a) = (a.offset_mt + i * a.period_mt, a.offset_mt + a.length_mt + i * a.period_mt);
        for j in 0..reps_b {
            let (s_b, e_b) =
                (b.offset_mt + j * b.period_mt, b.offset_mt + b.length_mt + j * b.period_mt);
            let disjoint = e_a <= s_b || e_b <= s_a;
            if !disjoint {
                return false;
            }
        }
    }
    true
}

/// Evaluates every constraint over the full assignment. Empty result means
/// the assignment is valid; the analyzer then decides schedulability.
pub fn check_constraints(
    instance: &Instance,
    assignment: &Assignment,
    backlog: u64,
) -> Vec<Violation> {
    let qmap = queues::queue_flow_sets(instance);
    let mut violations = Vec::new();

    // Missing windows first.
    for (qref, _) in qmap.scheduled_queues(instance) {
        if !assignment.contains_key(qref) {
            violations.push(Violation::MissingWindow { queue: qref.clone() });
        }
    }

    // Port-local structure.
    let mut by_port: BTreeMap<&PortRef, Vec<(&QueueRef, &WindowConfig)>> = BTreeMap::new();
    for (qref, w) in assignment {
        by_port.entry(&qref.port).or_default().push((qref, w));
    }

    for (port, entries) in &by_port {
        let hyperperiod_us = queues::port_hyperperiod_us(instance, port).ok();
        let link = instance.network.link(port).expect("validated instance");
        for (i, (qa, wa)) in entries.iter().enumerate() {
            if !wa.is_valid() {
                violations.push(Violation::WindowInvalid { queue: (*qa).clone() });
                continue;
            }
            // window periods harmonic with the port hyperperiod
            if let Some(k_us) = hyperperiod_us {
                let t_us = wa.period_mt * link.macrotick_us;
                if k_us % t_us != 0 {
                    violations
                        .push(Violation::PeriodNotDividingHyperperiod { queue: (*qa).clone() });
                }
            }
            for (qb, wb) in entries.iter().skip(i + 1) {
                // pairwise harmonic periods
                if wa.period_mt % wb.period_mt != 0 && wb.period_mt % wa.period_mt != 0 {
                    violations.push(Violation::PeriodsNotHarmonic {
                        port: (*port).clone(),
                        t_a: wa.period_mt,
                        t_b: wb.period_mt,
                    });
                }
                if wb.is_valid() && !windows_disjoint(wa, wb) {
                    violations.push(Violation::Overlap { a: (*qa).clone(), b: (*qb).clone() });
                }
            }
        }
    }

    // Bandwidth and capacity per queue.
    for (qref, w) in assignment {
        if !w.is_valid() {
            continue; // already reported
        }
        let Some(qflows) = qmap.queues.get(qref) else { continue };
        let link = instance.network.link(&qref.port).expect("validated instance");
        let mt = link.macrotick_us;

        // Bandwidth: window utilization at least the flows' transmission
        // utilization, compared exactly over a common denominator.
        let t_us = w.period_mt * mt;
        let w_us = w.length_mt * mt;
        let mut denom = t_us;
        for id in &qflows.all {
            let f = instance.flow(id).expect("queue map references known flows");
            denom = denom.lcm(&f.period_us);
        }
        let lhs = w_us as u128 * (denom / t_us) as u128;
        let mut rhs: u128 = 0;
        for id in &qflows.all {
            let f = instance.flow(id).expect("known flow");
            let tx = instance.tx_time_us(link, f);
            rhs += tx as u128 * (denom / f.period_us) as u128;
        }
        if lhs < rhs {
            violations.push(Violation::BandwidthExceeded { queue: qref.clone() });
        }

        // Capacity pruning: demand within the hyperperiod must fit the
        // window's fluid capacity.
        let Ok(k_us) = queues::port_hyperperiod_us(instance, &qref.port) else { continue };
        let gb = queues::guard_band_us(instance, &qref.port, &qflows.all);
        let demand_of = |ids: &[String]| -> Vec<DemandFlow> {
            ids.iter()
                .filter_map(|id| instance.flow(id))
                .map(|f| DemandFlow {
                    id: f.id.clone(),
                    wire_bytes: instance.wire_bytes(f),
                    period_us: f.period_us,
                })
                .collect()
        };
        match (
            proxy::window_capacity(*w, link, gb, k_us),
            proxy::transmission_demand(
                &demand_of(&qflows.all),
                &demand_of(&qflows.from_switch),
                backlog,
                k_us,
            ),
        ) {
            (Ok(cap), Ok(dem)) => {
                if dem.total > cap.total {
                    violations.push(Violation::CapacityShortfall {
                        queue: qref.clone(),
                        margin: cap.total - dem.total,
                    });
                }
            }
            (Err(e), _) | (_, Err(e)) => {
                violations.push(Violation::ProxyFailure { queue: qref.clone(), message: e.to_string() })
            }
        }
    }

    violations
}

/// Average window bandwidth usage of an assignment as an exact fraction.
pub fn objective_omega(assignment: &Assignment) -> Result<(u128, u128), SynthError> {
    if assignment.is_empty() {
        return Err(SynthError::NoWindows);
    }
    let mut den: u128 = 1;
    for w in assignment.values() {
        den = den.lcm(&(w.period_mt as u128));
    }
    let mut num: u128 = 0;
    for w in assignment.values() {
        num += w.length_mt as u128 * (den / w.period_mt as u128);
    }
    let n = assignment.len() as u128;
    let g = num.gcd(&(den * n));
    Ok((num / g, den * n / g))
}
