//! Conservative worst-case end-to-end delay bounds for a window schedule.
//!
//! End systems are neither scheduled nor synchronized, so nothing can be
//! assumed about how flow releases relate to gate phases. Each gated queue is
//! therefore abstracted as a rate-latency server under its worst phase, which
//! is valid for any actual alignment. Same-queue flows are aggregated FIFO;
//! per-flow bounds use the aggregate delay, and output burstiness is
//! propagated hop by hop to a fixed point. The result is pessimistic but
//! sound, and the optimizer only needs a sound gate.

use std::collections::BTreeMap;

use crate::curve::{horizontal_deviation, Curve, CurveError};
use crate::model::{
    tx_time_us, AnalysisParams, Flow, FlowId, Instance, Link, PortRef,
};
use crate::queues::{self, QueueRef};
use crate::window::{merge_intervals, Schedule, WindowConfig};

/// Delay values at or beyond this are treated as unbounded.
const DELAY_CAP_US: u64 = 1 << 40;
/// Fixed-point iteration limit; bursts grow monotonically, so failing to
/// stabilize within this many rounds is reported as non-convergence.
const MAX_ROUNDS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum AnalysisError {
    /// Usable window width is not positive.
    WindowTooSmall { queue: QueueRef },
    /// No window assigned to a populated queue.
    MissingWindow { queue: QueueRef },
    /// Aggregate arrival rate exceeds what the windows can serve.
    UnstableQueue { queue: QueueRef },
}

impl std::fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AnalysisError::WindowTooSmall { queue } => {
                write!(f, "queue {queue}: window not larger than its guard band")
            }
            AnalysisError::MissingWindow { queue } => {
                write!(f, "queue {queue}: populated but has no window")
            }
            AnalysisError::UnstableQueue { queue } => {
                write!(f, "queue {queue}: arrival rate exceeds service rate")
            }
        }
    }
}

impl std::error::Error for AnalysisError {}

/// Why a flow could not be bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnboundedReason {
    /// Some queue on the route cannot keep up with its long-run load.
    UnstableQueue,
    /// A frame does not fit into any gate opening of some queue.
    FrameNeverFits,
    /// A populated queue has no window assigned.
    MissingWindow,
    /// The burst fixed point failed to stabilize.
    NoConvergence,
}

/// Per-flow analysis result.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowDelay {
    pub flow: FlowId,
    /// End-to-end worst-case delay bound; `None` when unbounded.
    pub wcd_us: Option<u64>,
    pub deadline_us: u64,
    pub schedulable: bool,
    /// Source injection delay (own transmission plus contention plus the
    /// network precision).
    pub source_delay_us: u64,
    /// Queuing + transmission bound per switch egress hop, without the
    /// constant processing delay.
    pub hop_delays_us: Vec<(PortRef, u64)>,
    pub unbounded: Option<UnboundedReason>,
}

/// Whole-network delay report.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayReport {
    pub entries: Vec<FlowDelay>,
    /// False when the burst fixed point hit its round limit.
    pub converged: bool,
}

impl DelayReport {
    pub fn all_schedulable(&self) -> bool {
        self.converged && self.entries.iter().all(|e| e.schedulable)
    }

    pub fn entry(&self, flow: &str) -> Option<&FlowDelay> {
        self.entries.iter().find(|e| e.flow == flow)
    }

    /// Mean of the per-flow bounds; `None` if any flow is unbounded.
    pub fn mean_wcd_us(&self) -> Option<f64> {
        let mut sum = 0u128;
        for e in &self.entries {
            sum += u128::from(e.wcd_us?);
        }
        if self.entries.is_empty() {
            None
        } else {
            Some(sum as f64 / self.entries.len() as f64)
        }
    }
}

/// Interface the synthesis loop talks to, so a sharper analysis can replace
/// this one without touching the optimizer.
pub trait Analyzer: Sync {
    fn analyze(&self, instance: &Instance, schedule: &Schedule, params: &AnalysisParams)
        -> DelayReport;
}

/// The built-in phase-oblivious analyzer.
#[derive(Debug, Default, Clone, Copy)]
pub struct WcdAnalyzer;

impl Analyzer for WcdAnalyzer {
    fn analyze(
        &self,
        instance: &Instance,
        schedule: &Schedule,
        params: &AnalysisParams,
    ) -> DelayReport {
        analyze(instance, schedule, params)
    }
}

/// Token-bucket upper envelope of a flow at its source: burst of one frame,
/// long-run rate `frame / period`.
pub fn flow_arrival_curve(instance: &Instance, flow: &Flow) -> Curve {
    let bytes = instance.wire_bytes(flow) as f64;
    Curve::token_bucket(bytes, bytes / flow.period_us as f64)
}

/// Rate-latency service curve of a single gate window under its worst phase.
///
/// The queue is guaranteed `length - guard_band` usable microseconds per
/// period at full link speed; the worst alignment waits the rest of the
/// period. An always-open window degenerates to the full link rate with zero
/// latency (the gate never closes, so no guard band applies).
pub fn window_service_curve(
    window: WindowConfig,
    link: &Link,
    guard_band_us: u64,
) -> Result<Curve, CurveError> {
    let rate = link.speed_mbps as f64 / 8.0; // bytes per microsecond
    let period_us = (window.period_mt * link.macrotick_us) as f64;
    let length_us = (window.length_mt * link.macrotick_us) as f64;
    if window.is_always_open() {
        return Ok(Curve::rate_latency(rate, 0.0));
    }
    let usable = length_us - guard_band_us as f64;
    if usable <= 0.0 {
        return Err(CurveError::UnstableQueue { arrival_rate: f64::INFINITY, service_rate: 0.0 });
    }
    Ok(Curve::rate_latency(rate * usable / period_us, period_us - usable))
}

/// Queuing + transmission delay bound of one FIFO hop: horizontal deviation
/// of the aggregate arrival against the service, plus one max-frame
/// transmission time for cross-window boundary effects, rounded up to the
/// link macrotick.
pub fn hop_delay_bound(
    aggregate_arrival: &Curve,
    service: &Curve,
    max_frame_tx_us: f64,
    macrotick_us: u64,
) -> Result<u64, CurveError> {
    let h = horizontal_deviation(aggregate_arrival, service)?;
    let total = h + max_frame_tx_us;
    let mt = macrotick_us.max(1) as f64;
    let ticks = (total / mt).ceil() as u64;
    Ok(ticks * macrotick_us.max(1))
}

/// Arrival envelope of a flow after being served: burst inflated by
/// `rate * latency` of the service, rate preserved (token-bucket
/// deconvolution identity).
pub fn output_arrival_curve(arrival: &Curve, service: &Curve) -> Result<Curve, CurveError> {
    let latency = service_latency(service);
    crate::curve::deconvolve_token_bucket(arrival, service.long_run_rate(), latency)
}

fn service_latency(service: &Curve) -> f64 {
    // first t with positive slope
    service
        .pieces()
        .iter()
        .find(|p| p.slope > 0.0)
        .map(|p| p.start_t)
        .unwrap_or(0.0)
}

/// Affine worst-phase service bound of a queue that opens according to a set
/// of windows. Openings are merged, each merged opening loses the guard band
/// at its tail, and the latency is the largest catch-up shortfall of the
/// periodic usable pattern against its average rate.
pub fn service_from_windows(
    windows: &[WindowConfig],
    link: &Link,
    guard_band_us: u64,
) -> Result<Curve, CurveError> {
    if let [w] = windows {
        return window_service_curve(*w, link, guard_band_us);
    }
    let mt = link.macrotick_us;
    let mut horizon: u64 = 1;
    for w in windows {
        horizon = num_integer::lcm(horizon, w.period_mt * mt);
    }
    let open: Vec<(u64, u64)> = merge_intervals(
        windows
            .iter()
            .flat_map(|w| {
                w.open_intervals(horizon / mt)
                    .into_iter()
                    .map(|(s, e)| (s * mt, e * mt))
            })
            .collect(),
    );
    if open == [(0, horizon)] {
        return Ok(Curve::rate_latency(link.speed_mbps as f64 / 8.0, 0.0));
    }
    // Wrap-around: an opening across the horizon boundary behaves like one
    // contiguous opening; fold the tail onto the head for the usable cut.
    let mut usable: Vec<(f64, f64)> = Vec::new();
    let wraps = open.first().map(|f| f.0 == 0).unwrap_or(false)
        && open.last().map(|l| l.1 == horizon).unwrap_or(false)
        && open.len() > 1;
    for (i, &(s, e)) in open.iter().enumerate() {
        let ends_at_boundary_wrap = wraps && i == open.len() - 1;
        let cut = if ends_at_boundary_wrap {
            // tail continues into the next period's head; the guard band is
            // charged there
            e as f64
        } else {
            (e as f64 - guard_band_us as f64).max(s as f64)
        };
        if cut > s as f64 {
            usable.push((s as f64, cut));
        }
    }
    if wraps {
        // charge the folded guard band at the head opening's end
        if let Some(first) = usable.first_mut() {
            let head_end = (first.1 - guard_band_us as f64).max(first.0);
            first.1 = head_end;
            if first.1 <= first.0 {
                usable.remove(0);
            }
        }
    }
    let total: f64 = usable.iter().map(|(s, e)| e - s).sum();
    if total <= 0.0 {
        return Err(CurveError::UnstableQueue { arrival_rate: f64::INFINITY, service_rate: 0.0 });
    }
    let h = horizon as f64;
    let rate = link.speed_mbps as f64 / 8.0 * total / h;

    // cumulative usable time up to t within one horizon
    let cum = |t: f64| -> f64 {
        let k = (t / h).floor();
        let x = t - k * h;
        let mut c = k * total;
        for &(s, e) in &usable {
            if x >= e {
                c += e - s;
            } else if x > s {
                c += x - s;
            }
        }
        c
    };

    // Latency: worst start is the end of a usable stretch; candidate catch-up
    // corners are the starts of later usable stretches within two horizons.
    let mut latency: f64 = 0.0;
    let link_rate = link.speed_mbps as f64 / 8.0;
    for &(_, gap_start) in &usable {
        for rep in 0..2u64 {
            for &(s, _) in &usable {
                let corner = s + rep as f64 * h;
                if corner < gap_start {
                    continue;
                }
                let t = corner - gap_start;
                let served = (cum(corner) - cum(gap_start)) * link_rate;
                latency = latency.max(t - served / rate);
            }
        }
    }
    Ok(Curve::rate_latency(rate, latency.max(0.0)))
}

/// Longest merged gate opening of a queue, for the frame-fit check. The scan
/// accounts for openings that wrap the GCL horizon.
fn max_open_len_us(windows: &[WindowConfig], link: &Link) -> u64 {
    let mt = link.macrotick_us;
    if windows.iter().any(|w| w.is_always_open()) {
        return u64::MAX;
    }
    let mut horizon: u64 = 1;
    for w in windows {
        horizon = num_integer::lcm(horizon, w.period_mt * mt);
    }
    let open: Vec<(u64, u64)> = merge_intervals(
        windows
            .iter()
            .flat_map(|w| {
                w.open_intervals(horizon / mt)
                    .into_iter()
                    .map(|(s, e)| (s * mt, e * mt))
            })
            .collect(),
    );
    if open == [(0, horizon)] {
        return u64::MAX;
    }
    let mut best = 0;
    for (i, &(s, e)) in open.iter().enumerate() {
        let mut len = e - s;
        // wrap join
        if i == open.len() - 1 && e == horizon {
            if let Some(&(s0, e0)) = open.first() {
                if s0 == 0 {
                    len += e0 - s0;
                }
            }
        }
        best = best.max(len);
    }
    best
}

struct QueueCtx {
    queue: QueueRef,
    link: Link,
    service: Option<Curve>,
    gb_charge_us: f64,
    flows: Vec<usize>,
    error: Option<UnboundedReason>,
}

/// Full-network conservative delay analysis.
pub fn analyze(instance: &Instance, schedule: &Schedule, params: &AnalysisParams) -> DelayReport {
    let qmap = queues::queue_flow_sets(instance);
    let flows = &instance.flows;
    let index_of: BTreeMap<&str, usize> =
        flows.iter().enumerate().map(|(i, f)| (f.id.as_str(), i)).collect();

    // Switch egress hops per flow, in route order.
    let switch_hops: Vec<Vec<PortRef>> = flows
        .iter()
        .map(|f| f.hops().filter(|p| instance.network.is_switch(&p.node)).collect())
        .collect();

    // Static per-queue context: service curve, guard band, membership.
    let mut contexts: Vec<QueueCtx> = Vec::new();
    let mut queue_index: BTreeMap<QueueRef, usize> = BTreeMap::new();
    for (qref, qflows) in qmap.scheduled_queues(instance) {
        let link = instance.network.link(&qref.port).expect("validated instance").clone();
        let gb = queues::guard_band_us(instance, &qref.port, &qflows.all);
        let windows = schedule.queue_windows(&qref.port, qref.queue);
        let members: Vec<usize> =
            qflows.all.iter().filter_map(|id| index_of.get(id.as_str()).copied()).collect();

        let mut error = None;
        let mut service = None;
        let mut gb_charge = gb as f64;
        if windows.is_empty() {
            error = Some(UnboundedReason::MissingWindow);
        } else {
            let always_open = max_open_len_us(windows, &link) == u64::MAX;
            if always_open {
                gb_charge = 0.0;
            }
            match service_from_windows(windows, &link, gb) {
                Ok(curve) => {
                    let max_open = max_open_len_us(windows, &link);
                    let worst_frame = members
                        .iter()
                        .map(|&i| instance.tx_time_us(&link, &flows[i]))
                        .max()
                        .unwrap_or(0);
                    if worst_frame > max_open {
                        error = Some(UnboundedReason::FrameNeverFits);
                    } else {
                        service = Some(curve);
                    }
                }
                Err(CurveError::UnstableQueue { .. }) => {
                    error = Some(UnboundedReason::UnstableQueue)
                }
            }
        }
        queue_index.insert(qref.clone(), contexts.len());
        contexts.push(QueueCtx {
            queue: qref.clone(),
            link,
            service,
            gb_charge_us: gb_charge,
            flows: members,
            error,
        });
    }
    // Source injection delay per flow (constant across rounds).
    let mut source_delay = vec![0u64; flows.len()];
    let mut unbounded: Vec<Option<UnboundedReason>> = vec![None; flows.len()];
    for (i, f) in flows.iter().enumerate() {
        match source_injection_us(instance, f) {
            Some(d) => source_delay[i] = d + params.delta_precision_us,
            None => unbounded[i] = Some(UnboundedReason::UnstableQueue),
        }
    }

    // Minimum transit times: a frame can never move faster than its own
    // transmissions, so only the spread above this floor is jitter that
    // inflates downstream bursts.
    let source_floor: Vec<f64> = flows
        .iter()
        .map(|f| {
            let first = f.hops().next().expect("route has at least one link");
            let link = instance.network.link(&first).expect("validated instance");
            instance.wire_bytes(f) as f64 * 8.0 / link.speed_mbps as f64
        })
        .collect();
    let hop_floor: Vec<Vec<f64>> = flows
        .iter()
        .enumerate()
        .map(|(i, f)| {
            switch_hops[i]
                .iter()
                .map(|p| {
                    let link = instance.network.link(p).expect("validated instance");
                    instance.wire_bytes(f) as f64 * 8.0 / link.speed_mbps as f64
                })
                .collect()
        })
        .collect();

    // Seed per-(flow, switch hop) delays and iterate bursts to a fixed point.
    let mut hop_delay: Vec<Vec<u64>> =
        switch_hops.iter().map(|hops| vec![0u64; hops.len()]).collect();

    // Queues that are statically broken poison their member flows.
    for ctx in &contexts {
        if let Some(reason) = ctx.error {
            for &i in &ctx.flows {
                unbounded[i] = Some(reason);
            }
        }
    }

    let mut converged = false;
    for _round in 0..MAX_ROUNDS {
        let mut next = hop_delay.clone();
        for ctx in &contexts {
            let Some(service) = &ctx.service else { continue };
            // Aggregate arrivals of all member flows at this hop, each with
            // the burst inflated by its cumulative delay bound so far.
            let mut agg: Option<Curve> = None;
            let mut poisoned = false;
            for &i in &ctx.flows {
                if unbounded[i].is_some() {
                    poisoned = true;
                }
                let f = &flows[i];
                let hop_idx = switch_hops[i]
                    .iter()
                    .position(|p| *p == ctx.queue.port)
                    .expect("flow is routed through this queue");
                let bound: f64 = source_delay[i] as f64
                    + hop_delay[i][..hop_idx].iter().map(|&d| d as f64).sum::<f64>();
                let floor: f64 =
                    source_floor[i] + hop_floor[i][..hop_idx].iter().sum::<f64>();
                let jitter = (bound - floor).max(0.0);
                let bytes = instance.wire_bytes(f) as f64;
                let rate = bytes / f.period_us as f64;
                let burst = bytes + rate * jitter;
                let curve = Curve::token_bucket(burst, rate);
                agg = Some(match agg {
                    None => curve,
                    Some(a) => a.sum(&curve),
                });
            }
            let Some(agg) = agg else { continue };
            let bound = if poisoned {
                DELAY_CAP_US
            } else {
                match hop_delay_bound(&agg, service, ctx.gb_charge_us, ctx.link.macrotick_us) {
                    Ok(d) => d.min(DELAY_CAP_US),
                    Err(_) => {
                        for &i in &ctx.flows {
                            unbounded[i].get_or_insert(UnboundedReason::UnstableQueue);
                        }
                        DELAY_CAP_US
                    }
                }
            };
            for &i in &ctx.flows {
                let hop_idx = switch_hops[i]
                    .iter()
                    .position(|p| *p == ctx.queue.port)
                    .expect("flow is routed through this queue");
                next[i][hop_idx] = bound;
            }
        }
        if next == hop_delay {
            converged = true;
            break;
        }
        hop_delay = next;
    }

    let entries = flows
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let hops = &switch_hops[i];
            let per_hop: Vec<(PortRef, u64)> =
                hops.iter().cloned().zip(hop_delay[i].iter().copied()).collect();
            let capped = hop_delay[i].iter().any(|&d| d >= DELAY_CAP_US);
            let mut reason = unbounded[i];
            if capped && reason.is_none() {
                reason = Some(UnboundedReason::UnstableQueue);
            }
            if !converged && reason.is_none() {
                reason = Some(UnboundedReason::NoConvergence);
            }
            let wcd = if reason.is_some() {
                None
            } else {
                let total = source_delay[i]
                    + hop_delay[i].iter().sum::<u64>()
                    + hops.len() as u64 * params.processing_delay_us;
                Some(total)
            };
            FlowDelay {
                flow: f.id.clone(),
                wcd_us: wcd,
                deadline_us: f.deadline_us,
                schedulable: wcd.map(|w| w <= f.deadline_us).unwrap_or(false),
                source_delay_us: source_delay[i],
                hop_delays_us: per_hop,
                unbounded: reason,
            }
        })
        .collect();

    DelayReport { entries, converged }
}

/// Delay bound at the unscheduled source: the frame's own transmission plus
/// strict-priority contention from flows sharing the same ES egress link.
/// Returns `None` when higher-priority load alone saturates the link.
fn source_injection_us(instance: &Instance, flow: &Flow) -> Option<u64> {
    let first_hop = flow.hops().next()?;
    let link = instance.network.link(&first_hop)?;
    let rate = link.speed_mbps as f64 / 8.0;

    let mut higher_rate = 0.0f64;
    let mut higher_burst = 0.0f64;
    let mut same_burst = 0.0f64;
    let mut lower_block = 0.0f64;
    for g in &instance.flows {
        if g.hops().next().as_ref() != Some(&first_hop) {
            continue;
        }
        let bytes = instance.wire_bytes(g) as f64;
        if g.priority > flow.priority {
            higher_rate += bytes / g.period_us as f64;
            higher_burst += bytes;
        } else if g.priority == flow.priority {
            same_burst += bytes;
        } else {
            lower_block = lower_block.max(bytes);
        }
    }
    if higher_rate >= rate {
        return None;
    }
    let delay = (higher_burst + same_burst + lower_block) / (rate - higher_rate);
    Some(delay.ceil() as u64)
}

/// Convenience wrapper: bound one flow (the whole network is analyzed, since
/// bounds couple through shared queues).
pub fn flow_wcd(
    instance: &Instance,
    schedule: &Schedule,
    params: &AnalysisParams,
    flow_id: &str,
) -> Option<FlowDelay> {
    analyze(instance, schedule, params).entries.into_iter().find(|e| e.flow == flow_id)
}

/// Store-and-forward lower bound on any flow's delay: the sum of its frame
/// transmission times along the route. Useful as a sanity floor.
pub fn transmission_floor_us(instance: &Instance, flow: &Flow) -> u64 {
    flow.hops()
        .map(|p| {
            let link = instance.network.link(&p).expect("validated instance");
            tx_time_us(link.speed_mbps, instance.wire_bytes(flow))
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Network, NodeKind};

    fn line_instance(hops: usize, payload: u32, period: u64) -> Instance {
        let mut net = Network::default();
        net.add_node("es_src", NodeKind::EndSystem);
        net.add_node("es_dst", NodeKind::EndSystem);
        let mut route = vec!["es_src".to_string()];
        let mut prev = "es_src".to_string();
        for i in 0..hops {
            let sw = format!("sw{i}");
            net.add_node(&sw, NodeKind::Switch);
            net.add_duplex(&prev, &sw, 100, 1);
            route.push(sw.clone());
            prev = sw;
        }
        net.add_duplex(&prev, "es_dst", 100, 1);
        route.push("es_dst".into());
        let flow = Flow {
            id: "f1".into(),
            payload_bytes: payload,
            period_us: period,
            priority: 0,
            deadline_us: period,
            route,
        };
        Instance { network: net, flows: vec![flow], overhead_bytes: 0 }
    }

    fn always_open_schedule(instance: &Instance, period_mt: u64) -> Schedule {
        let mut s = Schedule::default();
        let qmap = queues::queue_flow_sets(instance);
        for (q, _) in qmap.scheduled_queues(instance) {
            s.set(
                q.port.clone(),
                q.queue,
                WindowConfig { offset_mt: 0, length_mt: period_mt, period_mt },
            );
        }
        s
    }

    #[test]
    fn arrival_curve_has_frame_burst_and_long_run_rate() {
        let inst = line_instance(1, 100, 10);
        let a = flow_arrival_curve(&inst, &inst.flows[0]);
        assert_eq!(a.value_at(0.0), 100.0);
        assert_eq!(a.value_at(10.0), 200.0);
    }

    #[test]
    fn always_open_gate_is_full_rate_zero_latency() {
        let link = Link { src: "a".into(), dst: "b".into(), speed_mbps: 100, macrotick_us: 1 };
        let w = WindowConfig { offset_mt: 0, length_mt: 10, period_mt: 10 };
        let s = window_service_curve(w, &link, 0).unwrap();
        assert_eq!(s.long_run_rate(), 12.5);
        assert_eq!(s.value_at(4.0), 50.0);
    }

    #[test]
    fn gated_window_service_curve_parameters() {
        // T=10, w=4, GB=1 at 100 Mbps: R = 0.3 * 12.5, latency 7.
        let link = Link { src: "a".into(), dst: "b".into(), speed_mbps: 100, macrotick_us: 1 };
        let w = WindowConfig { offset_mt: 0, length_mt: 4, period_mt: 10 };
        let s = window_service_curve(w, &link, 1).unwrap();
        assert!((s.long_run_rate() - 0.3 * 12.5).abs() < 1e-12);
        assert_eq!(s.value_at(7.0), 0.0);
        assert!(s.value_at(7.1) > 0.0);
    }

    #[test]
    fn halving_period_and_length_halves_latency_keeps_rate() {
        let link = Link { src: "a".into(), dst: "b".into(), speed_mbps: 100, macrotick_us: 1 };
        let a = window_service_curve(
            WindowConfig { offset_mt: 0, length_mt: 4, period_mt: 12 },
            &link,
            0,
        )
        .unwrap();
        let b = window_service_curve(
            WindowConfig { offset_mt: 0, length_mt: 2, period_mt: 6 },
            &link,
            0,
        )
        .unwrap();
        assert!((a.long_run_rate() - b.long_run_rate()).abs() < 1e-12);
        // latencies 8 and 4
        assert_eq!(a.value_at(8.0), 0.0);
        assert!(a.value_at(8.1) > 0.0);
        assert_eq!(b.value_at(4.0), 0.0);
        assert!(b.value_at(4.1) > 0.0);
    }

    #[test]
    fn uncontended_two_link_route_is_two_transmissions() {
        // one ES hop + one switch hop, always-open gates, zero processing:
        // 100 B at 100 Mbps is 8 us per hop, 16 us end to end.
        let inst = line_instance(1, 100, 1000);
        let sched = always_open_schedule(&inst, 1000);
        let report = analyze(&inst, &sched, &AnalysisParams::default());
        let e = report.entry("f1").unwrap();
        assert_eq!(e.wcd_us, Some(16));
        assert!(e.schedulable);
    }

    #[test]
    fn three_link_route_is_three_transmissions() {
        let inst = line_instance(2, 100, 1000);
        let sched = always_open_schedule(&inst, 1000);
        let report = analyze(&inst, &sched, &AnalysisParams::default());
        assert_eq!(report.entry("f1").unwrap().wcd_us, Some(24));
    }

    #[test]
    fn frame_that_never_fits_is_unschedulable_not_a_panic() {
        // 150 B needs 12 us but the usable window is 4 us.
        let inst = line_instance(1, 150, 1000);
        let mut sched = Schedule::default();
        let qmap = queues::queue_flow_sets(&inst);
        for (q, _) in qmap.scheduled_queues(&inst) {
            sched.set(
                q.port.clone(),
                q.queue,
                WindowConfig { offset_mt: 0, length_mt: 4, period_mt: 100 },
            );
        }
        let report = analyze(&inst, &sched, &AnalysisParams::default());
        let e = report.entry("f1").unwrap();
        assert!(!e.schedulable);
        assert_eq!(e.wcd_us, None);
        assert!(matches!(
            e.unbounded,
            Some(UnboundedReason::FrameNeverFits) | Some(UnboundedReason::UnstableQueue)
        ));
    }

    #[test]
    fn missing_window_is_reported() {
        let inst = line_instance(1, 100, 1000);
        let sched = Schedule::default();
        let report = analyze(&inst, &sched, &AnalysisParams::default());
        let e = report.entry("f1").unwrap();
        assert_eq!(e.unbounded, Some(UnboundedReason::MissingWindow));
    }

    #[test]
    fn interval_service_matches_single_window_closed_form() {
        let link = Link { src: "a".into(), dst: "b".into(), speed_mbps: 100, macrotick_us: 1 };
        let w = WindowConfig { offset_mt: 3, length_mt: 4, period_mt: 10 };
        let single = window_service_curve(w, &link, 1).unwrap();
        let multi = service_from_windows(
            &[
                WindowConfig { offset_mt: 3, length_mt: 4, period_mt: 20 },
                WindowConfig { offset_mt: 13, length_mt: 4, period_mt: 20 },
            ],
            &link,
            1,
        )
        .unwrap();
        assert!((single.long_run_rate() - multi.long_run_rate()).abs() < 1e-9);
        for t in [0.0, 3.0, 7.0, 9.5, 14.0, 33.0] {
            assert!(
                (single.value_at(t) - multi.value_at(t)).abs() < 1e-6,
                "t={t}: {} vs {}",
                single.value_at(t),
                multi.value_at(t)
            );
        }
    }

    #[test]
    fn enlarging_window_never_worsens_bounds() {
        let inst = line_instance(2, 100, 100);
        let qmap = queues::queue_flow_sets(&inst);
        let mut prev: Option<u64> = None;
        for len in [40u64, 60, 80, 100] {
            let mut sched = Schedule::default();
            for (q, _) in qmap.scheduled_queues(&inst) {
                sched.set(
                    q.port.clone(),
                    q.queue,
                    WindowConfig { offset_mt: 0, length_mt: len, period_mt: 100 },
                );
            }
            let report = analyze(&inst, &sched, &AnalysisParams::default());
            let wcd = report.entry("f1").unwrap().wcd_us.unwrap();
            if let Some(p) = prev {
                assert!(wcd <= p, "len {len}: {wcd} > {p}");
            }
            prev = Some(wcd);
        }
    }

    #[test]
    fn source_contention_counts_same_priority_peers() {
        // two flows leaving the same ES: each waits for the other's frame
        let mut inst = line_instance(1, 100, 1000);
        let mut f2 = inst.flows[0].clone();
        f2.id = "f2".into();
        inst.flows.push(f2);
        let sched = always_open_schedule(&inst, 1000);
        let report = analyze(&inst, &sched, &AnalysisParams::default());
        let e = report.entry("f1").unwrap();
        // 16 us of shared source burst instead of 8
        assert_eq!(e.source_delay_us, 16);
    }
}
