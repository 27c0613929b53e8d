//! Gate windows and complete network schedules.
//!
//! A window `(offset, length, period)` opens the gate of one ST queue for
//! `length` macroticks starting `offset` into every `period`. CPWO and the
//! aligned heuristic assign exactly one window per populated queue; the
//! frame-based reference schedulers emit one window per frame instance, so a
//! queue generally carries a list.

use std::collections::BTreeMap;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::model::{FlowId, Instance, PortRef, QueueId};

/// GCL window in macroticks of its link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WindowConfig {
    pub offset_mt: u64,
    pub length_mt: u64,
    pub period_mt: u64,
}

impl WindowConfig {
    /// Window validity: nonnegative integers with `offset + length <= period`.
    pub fn is_valid(&self) -> bool {
        self.period_mt > 0 && self.offset_mt + self.length_mt <= self.period_mt
    }

    /// The gate never closes.
    pub fn is_always_open(&self) -> bool {
        self.length_mt == self.period_mt
    }

    /// Gate state at time `t` (same unit as the window fields):
    /// open iff `t mod period` falls in `[offset, offset + length)`.
    pub fn is_open_at(&self, t: u64) -> bool {
        let phase = t % self.period_mt;
        phase >= self.offset_mt && phase < self.offset_mt + self.length_mt
    }

    /// Open intervals `[start, end)` of this window within `[0, horizon)`.
    pub fn open_intervals(&self, horizon: u64) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        if self.length_mt == 0 {
            return out;
        }
        let mut start = self.offset_mt;
        while start < horizon {
            out.push((start, (start + self.length_mt).min(horizon)));
            start += self.period_mt;
        }
        out
    }
}

/// How a schedule was produced; stored in the schedule file for provenance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cpwo,
    #[serde(rename = "0gcl")]
    ZeroGcl,
    Fgcl,
    Wnd,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Cpwo => "cpwo",
            Method::ZeroGcl => "0gcl",
            Method::Fgcl => "fgcl",
            Method::Wnd => "wnd",
        }
    }

    /// Methods that presuppose scheduled & synchronized end systems.
    pub fn requires_scheduled_es(&self) -> bool {
        matches!(self, Method::ZeroGcl | Method::Fgcl)
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cpwo" => Ok(Method::Cpwo),
            "0gcl" => Ok(Method::ZeroGcl),
            "fgcl" => Ok(Method::Fgcl),
            "wnd" => Ok(Method::Wnd),
            other => Err(format!("unknown method {other}; expected cpwo|0gcl|fgcl|wnd")),
        }
    }
}

/// Complete window assignment for a network.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Schedule {
    pub method: Option<Method>,
    /// Windows per egress port per ST queue, in macroticks of that link.
    pub windows: BTreeMap<PortRef, BTreeMap<QueueId, Vec<WindowConfig>>>,
    /// Scheduled release offsets at the source ES, microseconds; only present
    /// for methods that schedule end systems (0GCL/FGCL).
    pub es_offsets_us: BTreeMap<FlowId, u64>,
}

impl Schedule {
    pub fn set(&mut self, port: PortRef, queue: QueueId, window: WindowConfig) {
        self.windows.entry(port).or_default().insert(queue, vec![window]);
    }

    pub fn push(&mut self, port: PortRef, queue: QueueId, window: WindowConfig) {
        self.windows.entry(port).or_default().entry(queue).or_default().push(window);
    }

    pub fn queue_windows(&self, port: &PortRef, queue: QueueId) -> &[WindowConfig] {
        self.windows
            .get(port)
            .and_then(|qs| qs.get(&queue))
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    /// Single window of a queue, if the schedule is window-per-queue shaped.
    pub fn single_window(&self, port: &PortRef, queue: QueueId) -> Option<WindowConfig> {
        match self.queue_windows(port, queue) {
            [w] => Some(*w),
            _ => None,
        }
    }

    pub fn window_count(&self) -> usize {
        self.windows.values().map(|qs| qs.values().map(Vec::len).sum::<usize>()).sum()
    }

    /// Merged open intervals `[start, end)` of one queue over `[0, horizon)`,
    /// abutting openings joined. This is the Gantt export shape and also what
    /// the gate look-ahead measures remaining open time against.
    pub fn open_intervals(&self, port: &PortRef, queue: QueueId, horizon: u64) -> Vec<(u64, u64)> {
        merge_intervals(
            self.queue_windows(port, queue)
                .iter()
                .flat_map(|w| w.open_intervals(horizon))
                .collect(),
        )
    }

    /// Repetition period of a port's whole GCL: lcm of its window periods.
    pub fn port_gcl_period(&self, port: &PortRef) -> Option<u64> {
        let qs = self.windows.get(port)?;
        let mut lcm: Option<u64> = None;
        for w in qs.values().flatten() {
            lcm = Some(match lcm {
                None => w.period_mt,
                Some(k) => k.lcm(&w.period_mt),
            });
        }
        lcm
    }

    /// Expands a port's windows into discrete GCL rows `(time, gate vector)`
    /// over `[0, horizon)`. The vector has one character per queue 0..=7,
    /// `O` for open and `C` for closed, queue 0 first.
    pub fn gcl_entries(&self, port: &PortRef, horizon: u64) -> Vec<(u64, String)> {
        let Some(qs) = self.windows.get(port) else { return Vec::new() };
        let mut edges: Vec<u64> = vec![0];
        for (&q, _) in qs.iter() {
            for (s, e) in self.open_intervals(port, q, horizon) {
                edges.push(s);
                if e < horizon {
                    edges.push(e);
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let mut rows = Vec::new();
        let mut last_state = String::new();
        for t in edges {
            let state: String = (0u8..8)
                .map(|q| {
                    let open = self
                        .queue_windows(port, q)
                        .iter()
                        .any(|w| w.is_open_at(t));
                    if open {
                        'O'
                    } else {
                        'C'
                    }
                })
                .collect();
            if state != last_state {
                last_state = state.clone();
                rows.push((t, state));
            }
        }
        rows
    }

    /// Average window bandwidth usage: mean of `length/period` over all
    /// windows, as an exact fraction (numerator, denominator).
    pub fn omega_exact(&self) -> Option<(u128, u128)> {
        let n = self.window_count() as u128;
        if n == 0 {
            return None;
        }
        // Common denominator: lcm of the window periods.
        let mut den: u128 = 1;
        for w in self.windows.values().flat_map(|qs| qs.values().flatten()) {
            den = den.lcm(&(w.period_mt as u128));
        }
        let mut num: u128 = 0;
        for w in self.windows.values().flat_map(|qs| qs.values().flatten()) {
            num += w.length_mt as u128 * (den / w.period_mt as u128);
        }
        let g = num.gcd(&(den * n));
        Some((num / g, den * n / g))
    }

    pub fn omega(&self) -> Option<f64> {
        self.omega_exact().map(|(n, d)| n as f64 / d as f64)
    }

    /// True when every populated scheduled queue of `instance` has at least
    /// one window.
    pub fn covers(&self, instance: &Instance) -> bool {
        let map = crate::queues::queue_flow_sets(instance);
        let covered = map
            .scheduled_queues(instance)
            .all(|(q, _)| !self.queue_windows(&q.port, q.queue).is_empty());
        covered
    }
}

/// Merges a list of `[start, end)` intervals, joining overlapping or
/// abutting ones.
pub fn merge_intervals(mut intervals: Vec<(u64, u64)>) -> Vec<(u64, u64)> {
    intervals.sort_unstable();
    let mut out: Vec<(u64, u64)> = Vec::with_capacity(intervals.len());
    for (s, e) in intervals {
        if s >= e {
            continue;
        }
        match out.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => out.push((s, e)),
        }
    }
    out
}

/// Compares two omega fractions; `a < b`.
pub fn omega_less(a: (u128, u128), b: (u128, u128)) -> bool {
    a.0 * b.1 < b.0 * a.1
}
