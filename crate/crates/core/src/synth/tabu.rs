//! Move set and tabu memory of the local search.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::queues::QueueRef;
use crate::window::WindowConfig;

use super::constraints::Assignment;
use super::domains::QueueDomain;

/// Which window variable a move touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Var {
    Offset,
    Length,
    Period,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MoveKind {
    ShiftOffset(i64),
    GrowLength(u64),
    ShrinkLength(u64),
    /// Step to the adjacent larger divisor.
    PeriodUp,
    /// Step to the adjacent smaller divisor, clamping length and offset.
    PeriodDown,
    /// Divide period and length by an exact common divisor (keeps the
    /// window's utilization, shrinks its latency).
    ScaleDown(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Move {
    pub queue: QueueRef,
    pub kind: MoveKind,
}

/// Applies a move to the queue's current window; `None` when the result
/// leaves the domain or violates window validity.
pub fn apply_move(
    assignment: &Assignment,
    domains: &BTreeMap<QueueRef, QueueDomain>,
    mv: &Move,
) -> Option<WindowConfig> {
    let cur = *assignment.get(&mv.queue)?;
    let dom = domains.get(&mv.queue)?;
    let mut w = cur;
    match mv.kind {
        MoveKind::ShiftOffset(delta) => {
            let max_off = w.period_mt.checked_sub(w.length_mt)?;
            let shifted = w.offset_mt as i64 + delta;
            if shifted < 0 || shifted as u64 > max_off {
                return None;
            }
            w.offset_mt = shifted as u64;
        }
        MoveKind::GrowLength(by) => {
            w.length_mt = w.length_mt.checked_add(by)?;
            if w.offset_mt + w.length_mt > w.period_mt {
                // keep validity by pulling the offset back if possible
                let needed = w.offset_mt + w.length_mt - w.period_mt;
                if needed > w.offset_mt {
                    return None;
                }
                w.offset_mt -= needed;
            }
        }
        MoveKind::ShrinkLength(by) => {
            w.length_mt = w.length_mt.checked_sub(by)?;
            if w.length_mt < dom.min_length_mt {
                return None;
            }
        }
        MoveKind::PeriodUp => {
            let (_, up) = dom.adjacent_periods(w.period_mt);
            w.period_mt = up?;
            w.offset_mt = w.offset_mt.min(w.period_mt - w.length_mt);
        }
        MoveKind::PeriodDown => {
            let (down, _) = dom.adjacent_periods(w.period_mt);
            w.period_mt = down?;
            if w.length_mt > w.period_mt {
                w.length_mt = w.period_mt;
            }
            if w.length_mt < dom.min_length_mt {
                return None;
            }
            w.offset_mt = w.offset_mt.min(w.period_mt - w.length_mt);
        }
        MoveKind::ScaleDown(d) => {
            if d < 2 || w.period_mt % d != 0 || w.length_mt % d != 0 {
                return None;
            }
            let t = w.period_mt / d;
            let l = w.length_mt / d;
            if !dom.periods_mt.contains(&t) || l < dom.min_length_mt {
                return None;
            }
            w.period_mt = t;
            w.length_mt = l;
            w.offset_mt = (w.offset_mt / d).min(t - l);
        }
    }
    if !w.is_valid() || !dom.contains(&w) {
        return None;
    }
    if w == cur {
        return None;
    }
    Some(w)
}

/// Samples candidate moves for the current assignment. Results are already
/// filtered for domain membership and window validity.
pub fn neighborhood(
    assignment: &Assignment,
    domains: &BTreeMap<QueueRef, QueueDomain>,
    rng: &mut ChaCha8Rng,
    size: usize,
) -> Vec<(Move, WindowConfig)> {
    let queues: Vec<&QueueRef> = assignment.keys().collect();
    if queues.is_empty() {
        return Vec::new();
    }
    let mut out: Vec<(Move, WindowConfig)> = Vec::new();
    let mut attempts = 0;
    while out.len() < size && attempts < size * 8 {
        attempts += 1;
        let q = queues[rng.random_range(0..queues.len())].clone();
        let cur = assignment[&q];
        let kind = match rng.random_range(0..8u32) {
            0 => MoveKind::ShiftOffset(pick_step(rng, cur.period_mt) as i64),
            1 => MoveKind::ShiftOffset(-(pick_step(rng, cur.period_mt) as i64)),
            2 => MoveKind::GrowLength(pick_step(rng, cur.length_mt)),
            3 => MoveKind::ShrinkLength(pick_step(rng, cur.length_mt)),
            4 => MoveKind::PeriodUp,
            5 => MoveKind::PeriodDown,
            6 => MoveKind::ScaleDown(2),
            _ => MoveKind::GrowLength(1),
        };
        let mv = Move { queue: q, kind };
        if out.iter().any(|(m, _)| *m == mv) {
            continue;
        }
        if let Some(w) = apply_move(assignment, domains, &mv) {
            out.push((mv, w));
        }
    }
    out.sort();
    out
}

fn pick_step(rng: &mut ChaCha8Rng, scale: u64) -> u64 {
    let choices = [1u64, (scale / 16).max(1), (scale / 4).max(1)];
    choices[rng.random_range(0..choices.len())]
}

/// Tabu memory: forbids restoring a variable to a value it was recently
/// moved away from, unless aspiration applies.
#[derive(Debug, Default)]
pub struct TabuList {
    entries: BTreeMap<(QueueRef, Var, u64), u64>,
}

impl TabuList {
    /// Records that `var` of `queue` moved away from `old_value`.
    pub fn record(&mut self, queue: &QueueRef, var: Var, old_value: u64, expires_iter: u64) {
        self.entries.insert((queue.clone(), var, old_value), expires_iter);
    }

    /// True when moving `queue` so that `var` becomes `new_value` would
    /// restore a tabu value.
    pub fn is_tabu(&self, queue: &QueueRef, var: Var, new_value: u64, iter: u64) -> bool {
        self.entries
            .get(&(queue.clone(), var, new_value))
            .map(|&expiry| iter < expiry)
            .unwrap_or(false)
    }

    pub fn expire(&mut self, iter: u64) {
        self.entries.retain(|_, &mut expiry| iter < expiry);
    }
}

/// Variables changed by transitioning `from -> to`, with the old and
/// new values.
pub fn changed_vars(from: &WindowConfig, to: &WindowConfig) -> Vec<(Var, u64, u64)> {
    let mut out = Vec::new();
    if from.offset_mt != to.offset_mt {
        out.push((Var::Offset, from.offset_mt, to.offset_mt));
    }
    if from.length_mt != to.length_mt {
        out.push((Var::Length, from.length_mt, to.length_mt));
    }
    if from.period_mt != to.period_mt {
        out.push((Var::Period, from.period_mt, to.period_mt));
    }
    out
}
