//! Independent schedule validator.
//!
//! Re-checks window validity, non-overlap, bandwidth, harmonicity and
//! hyperperiod divisibility on an emitted schedule with a different method
//! than the search checker: windows are expanded into concrete open
//! intervals over the port's full repetition horizon and scanned on a sorted
//! timeline. Kept deliberately separate so a checker bug cannot hide itself.

use num_integer::Integer;

use crate::model::Instance;
use crate::queues;
use crate::window::Schedule;

/// Human-readable findings; empty means the schedule is valid.
pub fn validate_schedule(instance: &Instance, schedule: &Schedule) -> Vec<String> {
    let mut findings = Vec::new();
    let qmap = queues::queue_flow_sets(instance);

    for (qref, _) in qmap.scheduled_queues(instance) {
        if schedule.queue_windows(&qref.port, qref.queue).is_empty() {
            findings.push(format!("{qref}: populated queue without a window"));
        }
    }

    for (port, queues_windows) in &schedule.windows {
        let Some(link) = instance.network.link(port) else {
            findings.push(format!("{port}: schedule references a nonexistent link"));
            continue;
        };
        // expansion horizon: lcm of all window periods on the port
        let mut horizon = 1u64;
        for w in queues_windows.values().flatten() {
            if w.period_mt == 0 || w.offset_mt + w.length_mt > w.period_mt {
                findings.push(format!(
                    "{port}.q?: invalid window ({}, {}, {})",
                    w.offset_mt, w.length_mt, w.period_mt
                ));
            }
            horizon = horizon.lcm(&w.period_mt.max(1));
        }

        // timeline scan for overlaps across all queues of the port
        let mut timeline: Vec<(u64, u64, u8)> = Vec::new();
        for (&q, ws) in queues_windows {
            for w in ws {
                if w.period_mt == 0 {
                    continue;
                }
                for (s, e) in w.open_intervals(horizon) {
                    timeline.push((s, e, q));
                }
            }
        }
        timeline.sort_unstable();
        for pair in timeline.windows(2) {
            let (s1, e1, q1) = pair[0];
            let (s2, _, q2) = pair[1];
            // identical frame-derived windows of one queue may abut; only a
            // true crossing is an overlap
            if s2 < e1 && !(q1 == q2 && s1 == s2) {
                findings.push(format!(
                    "{port}: q{q1} [{s1},{e1}) overlaps q{q2} starting {s2}"
                ));
            }
        }

        // harmonicity within the port and with the hyperperiod
        let periods: Vec<u64> = queues_windows
            .values()
            .flatten()
            .map(|w| w.period_mt)
            .filter(|&t| t > 0)
            .collect();
        for (i, &a) in periods.iter().enumerate() {
            for &b in &periods[i + 1..] {
                if a % b != 0 && b % a != 0 {
                    findings.push(format!("{port}: periods {a} and {b} not harmonic"));
                }
            }
        }
        if let Ok(k_us) = queues::port_hyperperiod_us(instance, port) {
            for &t in &periods {
                let t_us = t * link.macrotick_us;
                if k_us % t_us != 0 {
                    findings.push(format!(
                        "{port}: window period {t_us} us does not divide hyperperiod {k_us} us"
                    ));
                }
            }
        }

        // bandwidth: summed open fraction per queue vs flow utilization,
        // via floating point with a tolerance (intentionally a different
        // route than the checker's exact fractions)
        for (&q, ws) in queues_windows {
            let qref = queues::QueueRef { port: port.clone(), queue: q };
            let Some(qflows) = qmap.queues.get(&qref) else { continue };
            if qflows.all.is_empty() {
                continue;
            }
            let open_fraction: f64 =
                ws.iter().map(|w| w.length_mt as f64 / w.period_mt.max(1) as f64).sum();
            let needed: f64 = qflows
                .all
                .iter()
                .filter_map(|id| instance.flow(id))
                .map(|f| instance.tx_time_us(link, f) as f64 / f.period_us as f64)
                .sum();
            if open_fraction + 1e-9 < needed {
                findings.push(format!(
                    "{qref}: open fraction {open_fraction:.4} below utilization {needed:.4}"
                ));
            }
        }
    }

    findings
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PortRef;
    use crate::window::WindowConfig;

    #[test]
    fn clean_single_window_schedule_passes() {
        let inst = crate::testfix::two_switch_instance();
        let mut s = Schedule::default();
        for (q, _) in queues::queue_flow_sets(&inst).scheduled_queues(&inst) {
            s.set(
                q.port.clone(),
                q.queue,
                WindowConfig { offset_mt: 0, length_mt: 50, period_mt: 100 },
            );
        }
        let findings = validate_schedule(&inst, &s);
        assert!(findings.is_empty(), "{findings:?}");
    }

    #[test]
    fn overlap_is_found_by_the_timeline_scan() {
        let inst = crate::testfix::two_switch_instance();
        let mut s = Schedule::default();
        for (q, _) in queues::queue_flow_sets(&inst).scheduled_queues(&inst) {
            s.set(
                q.port.clone(),
                q.queue,
                WindowConfig { offset_mt: 0, length_mt: 50, period_mt: 100 },
            );
        }
        // second window on the same port/queue 0..50 of period 50: instances
        // [50,100) collide with nothing, but queue 1 overlapping does
        s.push(
            PortRef::new("sw1", "sw2"),
            1,
            WindowConfig { offset_mt: 25, length_mt: 10, period_mt: 100 },
        );
        let findings = validate_schedule(&inst, &s);
        assert!(findings.iter().any(|f| f.contains("overlaps")), "{findings:?}");
    }

    #[test]
    fn missing_window_is_found() {
        let inst = crate::testfix::two_switch_instance();
        let s = Schedule::default();
        let findings = validate_schedule(&inst, &s);
        assert!(!findings.is_empty());
    }
}
