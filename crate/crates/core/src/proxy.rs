//! Search-pruning timing heuristic: per-window transmission capacity and
//! per-queue transmission demand, compared as areas under cumulative-bytes
//! curves over one port hyperperiod.
//!
//! This is deliberately a crude, closed-form feasibility indicator used only
//! to prune the window search space. It is neither a sufficient nor a
//! necessary schedulability test; the delay analysis has the final word.

use std::collections::BTreeMap;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub};

use crate::model::{Instance, Link};
use crate::queues::{self, QueueRef};
use crate::window::WindowConfig;

/// Area quantity in byte·microseconds.
///
/// Stored as sixteenths so that every closed-form term below is exact: with
/// integer microseconds and an integer link speed in bits/us, the fractional
/// parts are always multiples of 1/16.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct ByteMicros(i128);

impl ByteMicros {
    pub const ZERO: ByteMicros = ByteMicros(0);

    /// From a whole number of byte·microseconds.
    pub fn from_whole(v: i128) -> Self {
        ByteMicros(v * 16)
    }

    /// Raw value in sixteenths of a byte·microsecond.
    pub fn raw_sixteenths(self) -> i128 {
        self.0
    }

    pub fn from_raw_sixteenths(v: i128) -> Self {
        ByteMicros(v)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 16.0
    }

    pub fn is_whole(self) -> bool {
        self.0 % 16 == 0
    }

    pub fn max(self, other: Self) -> Self {
        ByteMicros(self.0.max(other.0))
    }
}

impl Add for ByteMicros {
    type Output = ByteMicros;
    fn add(self, rhs: Self) -> Self {
        ByteMicros(self.0 + rhs.0)
    }
}

impl AddAssign for ByteMicros {
    fn add_assign(&mut self, rhs: Self) {
        self.0 += rhs.0;
    }
}

impl Sub for ByteMicros {
    type Output = ByteMicros;
    fn sub(self, rhs: Self) -> Self {
        ByteMicros(self.0 - rhs.0)
    }
}

impl Sum for ByteMicros {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(ByteMicros::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for ByteMicros {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_whole() {
            write!(f, "{}", self.0 / 16)
        } else {
            write!(f, "{}", self.to_f64())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProxyError {
    /// Window length is smaller than the guard band.
    WindowTooSmall { length_us: u64, guard_band_us: u64 },
    /// Window invalid (offset + length exceeds period, or zero period).
    InvalidWindow(WindowConfig),
    /// A period does not divide the hyperperiod.
    NonHarmonicPeriod { period_us: u64, hyperperiod_us: u64 },
    /// Backlog parameter outside its accepted domain.
    BadBacklog { backlog: u64 },
}

impl fmt::Display for ProxyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProxyError::WindowTooSmall { length_us, guard_band_us } => {
                write!(f, "window length {length_us} us below guard band {guard_band_us} us")
            }
            ProxyError::InvalidWindow(w) => write!(
                f,
                "invalid window (offset {} + length {} > period {})",
                w.offset_mt, w.length_mt, w.period_mt
            ),
            ProxyError::NonHarmonicPeriod { period_us, hyperperiod_us } => {
                write!(f, "period {period_us} us does not divide hyperperiod {hyperperiod_us} us")
            }
            ProxyError::BadBacklog { backlog } => {
                write!(f, "backlog {backlog} outside accepted domain (>= 1)")
            }
        }
    }
}

impl std::error::Error for ProxyError {}

/// Capacity of one window over a hyperperiod, split into its three terms:
/// the ramp under each opening, the plateau from the remainder of each
/// period, and the accumulation across period instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CapacityBreakdown {
    pub s1: ByteMicros,
    pub s2: ByteMicros,
    pub s3: ByteMicros,
    pub total: ByteMicros,
    /// Bytes transmittable in one gate opening, in sixteenths of a byte.
    pub bytes_per_window_x16: i128,
    /// Window instances within the hyperperiod.
    pub instances: u64,
}

impl CapacityBreakdown {
    pub fn bytes_per_window(&self) -> f64 {
        self.bytes_per_window_x16 as f64 / 16.0
    }
}

/// Transmission demand of one queue over a hyperperiod: periodic arrivals of
/// every assigned flow plus delayed backlog copies of switch-arriving flows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemandBreakdown {
    /// Per-flow area from strictly periodic arrivals.
    pub periodic_per_flow: BTreeMap<String, ByteMicros>,
    /// Per-flow area from delayed backlog copies (clamped at zero).
    pub backlog_per_flow: BTreeMap<String, ByteMicros>,
    pub total: ByteMicros,
}

/// Fluid transmission capacity of `window` over `hyperperiod_us`.
///
/// The cumulative-bytes curve rises linearly while the gate is open and is
/// flat otherwise; each opening delivers the guard-band-reduced byte budget.
/// Partial-frame capacity counts. The returned terms decompose the area under
/// that curve:
///
/// * `s1`: ramp area within the openings,
/// * `s2`: post-opening plateau within each period,
/// * `s3`: carry-over of completed openings across the remaining instances.
pub fn window_capacity(
    window: WindowConfig,
    link: &Link,
    guard_band_us: u64,
    hyperperiod_us: u64,
) -> Result<CapacityBreakdown, ProxyError> {
    if !window.is_valid() {
        return Err(ProxyError::InvalidWindow(window));
    }
    let mt = link.macrotick_us;
    let period_us = window.period_mt * mt;
    let length_us = window.length_mt * mt;
    let offset_us = window.offset_mt * mt;
    if hyperperiod_us % period_us != 0 {
        return Err(ProxyError::NonHarmonicPeriod { period_us, hyperperiod_us });
    }
    if length_us < guard_band_us {
        return Err(ProxyError::WindowTooSmall { length_us, guard_band_us });
    }

    let instances = hyperperiod_us / period_us;
    let i = instances as i128;
    let usable_us = (length_us - guard_band_us) as i128;
    let speed = link.speed_mbps as i128;
    // J = usable length divided by the per-byte transmission time 8/C,
    // i.e. usable * C / 8 bytes; stored as sixteenths.
    let j_x16 = 2 * usable_us * speed;

    // S terms, each times 16:
    //   S1 = I * w * J / 2
    //   S2 = I * (T - w - phi) * J
    //   S3 = I * (I - 1) / 2 * T * J
    let w = length_us as i128;
    let t = period_us as i128;
    let phi = offset_us as i128;
    let s1 = ByteMicros::from_raw_sixteenths(i * w * j_x16 / 2);
    let s2 = ByteMicros::from_raw_sixteenths(i * (t - w - phi) * j_x16);
    let s3 = ByteMicros::from_raw_sixteenths(i * (i - 1) * t * j_x16 / 2);

    Ok(CapacityBreakdown {
        s1,
        s2,
        s3,
        total: s1 + s2 + s3,
        bytes_per_window_x16: j_x16,
        instances,
    })
}

/// One flow's contribution parameters to the demand of a queue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemandFlow {
    pub id: String,
    pub wire_bytes: u64,
    pub period_us: u64,
}

/// Transmission demand of a queue over `hyperperiod_us`.
///
/// Every assigned flow releases one frame at each period start; each
/// switch-arriving flow additionally contributes `backlog` delayed copies,
/// the first shifted by one period. A copy that would fall outside the
/// hyperperiod subtracts area, so the per-flow backlog term is clamped at
/// zero to keep demands nonnegative.
pub fn transmission_demand(
    queue_flows: &[DemandFlow],
    switch_flows: &[DemandFlow],
    backlog: u64,
    hyperperiod_us: u64,
) -> Result<DemandBreakdown, ProxyError> {
    if backlog == 0 {
        return Err(ProxyError::BadBacklog { backlog });
    }
    let mut periodic = BTreeMap::new();
    let mut backlogged = BTreeMap::new();
    let mut total = ByteMicros::ZERO;

    for f in queue_flows {
        if hyperperiod_us % f.period_us != 0 {
            return Err(ProxyError::NonHarmonicPeriod {
                period_us: f.period_us,
                hyperperiod_us,
            });
        }
        let i = (hyperperiod_us / f.period_us) as i128;
        let a1 = ByteMicros::from_whole(
            i * (i + 1) / 2 * f.period_us as i128 * f.wire_bytes as i128,
        );
        periodic.insert(f.id.clone(), a1);
        total += a1;
    }
    for f in switch_flows {
        if hyperperiod_us % f.period_us != 0 {
            return Err(ProxyError::NonHarmonicPeriod {
                period_us: f.period_us,
                hyperperiod_us,
            });
        }
        let i = (hyperperiod_us / f.period_us) as i128;
        let b = backlog as i128;
        let a2_raw = i * (i + 1 - 2 * b) / 2 * f.period_us as i128 * f.wire_bytes as i128;
        let a2 = ByteMicros::from_whole(a2_raw.max(0));
        backlogged.insert(f.id.clone(), a2);
        total += a2;
    }

    Ok(DemandBreakdown { periodic_per_flow: periodic, backlog_per_flow: backlogged, total })
}

/// Feasibility verdict of one queue under the pruning heuristic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueueFeasibility {
    pub queue: QueueRef,
    pub capacity: CapacityBreakdown,
    pub demand: DemandBreakdown,
    /// `capacity - demand`; negative when infeasible.
    pub margin: ByteMicros,
    pub feasible: bool,
}

/// Checks `demand <= capacity` for every given queue window on `port`.
pub fn timing_feasible(
    instance: &Instance,
    port: &crate::model::PortRef,
    windows: &BTreeMap<crate::model::QueueId, WindowConfig>,
    backlog: u64,
) -> Result<Vec<QueueFeasibility>, ProxyError> {
    let link = instance.network.link(port).expect("port must exist in the network");
    let map = queues::queue_flow_sets(instance);
    let hyperperiod = queues::port_hyperperiod_us(instance, port)
        .expect("timing_feasible needs at least one flow on the port");

    let mut out = Vec::new();
    for (&queue, &window) in windows {
        let qref = QueueRef { port: port.clone(), queue };
        let empty = crate::queues::QueueFlows::default();
        let flows = map.queues.get(&qref).unwrap_or(&empty);
        let gb = queues::guard_band_us(instance, port, &flows.all);
        let capacity = window_capacity(window, link, gb, hyperperiod)?;
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
        let demand =
            transmission_demand(&demand_of(&flows.all), &demand_of(&flows.from_switch), backlog, hyperperiod)?;
        let margin = capacity.total - demand.total;
        out.push(QueueFeasibility {
            queue: qref,
            feasible: demand.total <= capacity.total,
            capacity,
            demand,
            margin,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn link_100mbps() -> Link {
        Link { src: "sw1".into(), dst: "sw2".into(), speed_mbps: 100, macrotick_us: 1 }
    }

    #[test]
    fn capacity_matches_worked_example() {
        // (T=10, w=4, phi=3), guard band 0, 100 Mbps, hyperperiod 30:
        // J = 50 B, S1 = 300, S2 = 450, S3 = 1500, total 2250 byte·us.
        // The figure is only reproducible with a zero guard band.
        let w = WindowConfig { offset_mt: 3, length_mt: 4, period_mt: 10 };
        let cap = window_capacity(w, &link_100mbps(), 0, 30).unwrap();
        assert_eq!(cap.bytes_per_window_x16, 50 * 16);
        assert_eq!(cap.s1, ByteMicros::from_whole(300));
        assert_eq!(cap.s2, ByteMicros::from_whole(450));
        assert_eq!(cap.s3, ByteMicros::from_whole(1500));
        assert_eq!(cap.total, ByteMicros::from_whole(2250));
        assert_eq!(cap.instances, 3);
    }

    #[test]
    fn zero_usable_width_gives_zero_capacity() {
        let w = WindowConfig { offset_mt: 3, length_mt: 4, period_mt: 10 };
        let cap = window_capacity(w, &link_100mbps(), 4, 30).unwrap();
        assert_eq!(cap.total, ByteMicros::ZERO);
    }

    #[test]
    fn zero_offset_enlarges_plateau_term() {
        let w = WindowConfig { offset_mt: 0, length_mt: 4, period_mt: 10 };
        let cap = window_capacity(w, &link_100mbps(), 0, 30).unwrap();
        assert_eq!(cap.s2, ByteMicros::from_whole(900));
        assert_eq!(cap.total, ByteMicros::from_whole(2700));
    }

    #[test]
    fn guard_band_larger_than_window_is_an_error() {
        let w = WindowConfig { offset_mt: 0, length_mt: 4, period_mt: 10 };
        assert!(matches!(
            window_capacity(w, &link_100mbps(), 5, 30),
            Err(ProxyError::WindowTooSmall { .. })
        ));
    }

    #[test]
    fn demand_matches_worked_example() {
        // f1<50,5>, f2<60,6> from ES, f3<100,15> from SW, backlog 1, K=30:
        // A1 = 5250 + 5400 + 4500, A2(f3) = 1500, total 16650 byte·us.
        let f1 = DemandFlow { id: "f1".into(), wire_bytes: 50, period_us: 5 };
        let f2 = DemandFlow { id: "f2".into(), wire_bytes: 60, period_us: 6 };
        let f3 = DemandFlow { id: "f3".into(), wire_bytes: 100, period_us: 15 };
        let all = vec![f1, f2, f3.clone()];
        let demand = transmission_demand(&all, &[f3], 1, 30).unwrap();
        assert_eq!(demand.periodic_per_flow["f1"], ByteMicros::from_whole(5250));
        assert_eq!(demand.periodic_per_flow["f2"], ByteMicros::from_whole(5400));
        assert_eq!(demand.periodic_per_flow["f3"], ByteMicros::from_whole(4500));
        assert_eq!(demand.backlog_per_flow["f3"], ByteMicros::from_whole(1500));
        assert_eq!(demand.total, ByteMicros::from_whole(16650));
    }

    #[test]
    fn empty_queue_has_zero_demand() {
        let demand = transmission_demand(&[], &[], 1, 30).unwrap();
        assert_eq!(demand.total, ByteMicros::ZERO);
    }

    #[test]
    fn single_switch_flow_demand() {
        let f3 = DemandFlow { id: "f3".into(), wire_bytes: 100, period_us: 15 };
        let demand = transmission_demand(&[f3.clone()], &[f3], 1, 30).unwrap();
        assert_eq!(demand.total, ByteMicros::from_whole(6000));
    }

    #[test]
    fn large_backlog_clamps_at_zero() {
        let f = DemandFlow { id: "f".into(), wire_bytes: 100, period_us: 15 };
        let demand = transmission_demand(&[], &[f], 50, 30).unwrap();
        assert_eq!(demand.backlog_per_flow["f"], ByteMicros::ZERO);
    }

    #[test]
    fn zero_backlog_is_rejected() {
        assert!(matches!(
            transmission_demand(&[], &[], 0, 30),
            Err(ProxyError::BadBacklog { .. })
        ));
    }

    #[test]
    fn non_harmonic_period_is_rejected() {
        let f = DemandFlow { id: "f".into(), wire_bytes: 100, period_us: 7 };
        assert!(matches!(
            transmission_demand(&[f], &[], 1, 30),
            Err(ProxyError::NonHarmonicPeriod { .. })
        ));
    }

    #[test]
    fn worked_example_margin_is_negative() {
        // Capacity 2250 against demand 16650 is infeasible by -14400.
        let cap = ByteMicros::from_whole(2250);
        let dem = ByteMicros::from_whole(16650);
        assert_eq!(cap - dem, ByteMicros::from_whole(-14400));
    }
}
