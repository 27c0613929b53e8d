//! Piecewise-linear nondecreasing curves of time and the few min-plus
//! operations the delay analysis needs.
//!
//! Arrival sides are affine token buckets `burst + rate*t`; service sides are
//! rate-latency curves `rate * max(0, t - latency)`. Both are special cases
//! of the generic curve here, which keeps the algebra honest and testable
//! against grid oracles.

use std::fmt;

/// One linear piece starting at `start_t` with value `start_value` and the
/// given slope until the next piece begins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePiece {
    pub start_t: f64,
    pub start_value: f64,
    pub slope: f64,
}

/// Piecewise-linear nondecreasing cumulative curve defined on `t >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pieces: Vec<CurvePiece>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CurveError {
    /// Long-run arrival rate exceeds the service rate; backlog grows without
    /// bound and no finite delay exists.
    UnstableQueue { arrival_rate: f64, service_rate: f64 },
}

impl fmt::Display for CurveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurveError::UnstableQueue { arrival_rate, service_rate } => write!(
                f,
                "unstable queue: arrival rate {arrival_rate} exceeds service rate {service_rate}"
            ),
        }
    }
}

impl std::error::Error for CurveError {}

impl Curve {
    pub fn new(pieces: Vec<CurvePiece>) -> Self {
        debug_assert!(!pieces.is_empty());
        debug_assert!(pieces.windows(2).all(|w| w[0].start_t < w[1].start_t));
        debug_assert!(pieces.iter().all(|p| p.slope >= 0.0));
        Curve { pieces }
    }

    /// Token-bucket upper arrival envelope: `burst + rate * t`.
    pub fn token_bucket(burst: f64, rate: f64) -> Self {
        Curve::new(vec![CurvePiece { start_t: 0.0, start_value: burst, slope: rate }])
    }

    /// Rate-latency lower service curve: `rate * max(0, t - latency)`.
    pub fn rate_latency(rate: f64, latency: f64) -> Self {
        if latency <= 0.0 {
            Curve::new(vec![CurvePiece { start_t: 0.0, start_value: 0.0, slope: rate }])
        } else {
            Curve::new(vec![
                CurvePiece { start_t: 0.0, start_value: 0.0, slope: 0.0 },
                CurvePiece { start_t: latency, start_value: 0.0, slope: rate },
            ])
        }
    }

    pub fn pieces(&self) -> &[CurvePiece] {
        &self.pieces
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let idx = match self.pieces.iter().rposition(|p| p.start_t <= t) {
            Some(i) => i,
            None => return self.pieces[0].start_value,
        };
        let p = self.pieces[idx];
        p.start_value + p.slope * (t - p.start_t)
    }

    /// Slope of the final piece; the long-run growth rate.
    pub fn long_run_rate(&self) -> f64 {
        self.pieces.last().unwrap().slope
    }

    /// Burst at the origin.
    pub fn value_at_origin(&self) -> f64 {
        self.value_at(0.0)
    }

    /// Pointwise sum; used to aggregate arrivals sharing a FIFO queue.
    pub fn sum(&self, other: &Curve) -> Curve {
        let mut cuts: Vec<f64> =
            self.pieces.iter().chain(&other.pieces).map(|p| p.start_t).collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        let pieces = cuts
            .into_iter()
            .map(|t| CurvePiece {
                start_t: t,
                start_value: self.value_at(t) + other.value_at(t),
                slope: self.slope_after(t) + other.slope_after(t),
            })
            .collect();
        Curve::new(pieces)
    }

    fn slope_after(&self, t: f64) -> f64 {
        match self.pieces.iter().rposition(|p| p.start_t <= t) {
            Some(i) => self.pieces[i].slope,
            None => self.pieces[0].slope,
        }
    }

    /// Earliest time at which the curve reaches `level` (inverse image).
    pub fn time_to_reach(&self, level: f64) -> Option<f64> {
        if self.value_at_origin() >= level {
            return Some(0.0);
        }
        for (i, p) in self.pieces.iter().enumerate() {
            let end_t = self.pieces.get(i + 1).map(|n| n.start_t);
            let end_v = match end_t {
                Some(t) => self.value_at(t),
                None => f64::INFINITY,
            };
            if end_v >= level {
                if p.slope <= 0.0 {
                    // flat piece cannot reach a strictly higher level
                    if let Some(t) = end_t {
                        if self.value_at(t) >= level {
                            continue; // the next piece starts at the level
                        }
                    }
                    return None;
                }
                return Some(p.start_t + (level - p.start_value) / p.slope);
            }
        }
        None
    }
}

/// Horizontal deviation `h(arrival, service)`: the largest time shift needed
/// for the service curve to catch up with the arrival curve. This bounds the
/// queuing-plus-transmission delay of a FIFO queue served at least at
/// `service` with arrivals bounded by `arrival`.
pub fn horizontal_deviation(arrival: &Curve, service: &Curve) -> Result<f64, CurveError> {
    let ar = arrival.long_run_rate();
    let sr = service.long_run_rate();
    if ar > sr {
        return Err(CurveError::UnstableQueue { arrival_rate: ar, service_rate: sr });
    }
    // With a concave arrival side and a convex service side the deviation is
    // attained at a breakpoint of either curve; scan them all.
    let mut worst: f64 = 0.0;
    for t in arrival.pieces.iter().map(|p| p.start_t) {
        let level = arrival.value_at(t);
        if let Some(reach) = service.time_to_reach(level) {
            worst = worst.max(reach - t);
        }
    }
    for s in service.pieces.iter().map(|p| p.start_t) {
        // Candidate where the service breakpoint is the catch-up point.
        let level = service.value_at(s);
        if level <= arrival.value_at_origin() {
            worst = worst.max(s);
            continue;
        }
        // find t with arrival(t) == level
        if let Some(t) = arrival.time_to_reach(level) {
            if arrival.value_at(t) <= level + 1e-9 {
                worst = worst.max(s - t);
            }
        }
    }
    Ok(worst.max(0.0))
}

/// Output arrival envelope of a token-bucket flow after a rate-latency
/// server: min-plus deconvolution, which keeps the rate and inflates the
/// burst by `rate * latency`.
pub fn deconvolve_token_bucket(
    arrival: &Curve,
    service_rate: f64,
    service_latency: f64,
) -> Result<Curve, CurveError> {
    let ar = arrival.long_run_rate();
    if ar > service_rate {
        return Err(CurveError::UnstableQueue { arrival_rate: ar, service_rate });
    }
    Ok(Curve::token_bucket(
        arrival.value_at_origin() + ar * service_latency,
        ar,
    ))
}
