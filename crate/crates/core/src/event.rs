//! Events and the prioritized event queue.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{OrderId, Time, VehicleId};

/// Processing priority among events with equal time. Lower values pop first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Priority {
    /// Decision enforcement: before everything else at the same time.
    Low = 0,
    Medium = 1,
    /// Decision points: after everything else at the same time.
    High = 2,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    OrderRequest { order: OrderId },
    OrderCancellation { order: OrderId },
    OrderPickup { order: OrderId, vehicle: VehicleId },
    OrderDelivery { order: OrderId, vehicle: VehicleId },
    OrderPostponementExpiration { order: OrderId },
    VehicleArrival { vehicle: VehicleId },
    VehicleDeparture { vehicle: VehicleId },
    ServiceStart { vehicle: VehicleId },
    ServiceFinish { vehicle: VehicleId },
    DeparturePostponementExpiration { vehicle: VehicleId },
    DecisionPoint,
    /// Applies the decision with the given index in the run's decision log.
    DecisionEnforcement { decision: usize },
    /// Wakes the custom process with the given index. Changes nothing but time.
    ProcessWake { process: usize },
}

impl EventKind {
    pub fn priority(&self) -> Priority {
        match self {
            EventKind::DecisionEnforcement { .. } => Priority::Low,
            EventKind::DecisionPoint => Priority::High,
            _ => Priority::Medium,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EventKind::OrderRequest { .. } => "order_request",
            EventKind::OrderCancellation { .. } => "order_cancellation",
            EventKind::OrderPickup { .. } => "order_pickup",
            EventKind::OrderDelivery { .. } => "order_delivery",
            EventKind::OrderPostponementExpiration { .. } => "order_postponement_expiration",
            EventKind::VehicleArrival { .. } => "vehicle_arrival",
            EventKind::VehicleDeparture { .. } => "vehicle_departure",
            EventKind::ServiceStart { .. } => "service_start",
            EventKind::ServiceFinish { .. } => "service_finish",
            EventKind::DeparturePostponementExpiration { .. } => {
                "departure_postponement_expiration"
            }
            EventKind::DecisionPoint => "decision_point",
            EventKind::DecisionEnforcement { .. } => "decision_enforcement",
            EventKind::ProcessWake { .. } => "process_wake",
        }
    }

    pub fn vehicle(&self) -> Option<&VehicleId> {
        match self {
            EventKind::OrderPickup { vehicle, .. }
            | EventKind::OrderDelivery { vehicle, .. }
            | EventKind::VehicleArrival { vehicle }
            | EventKind::VehicleDeparture { vehicle }
            | EventKind::ServiceStart { vehicle }
            | EventKind::ServiceFinish { vehicle }
            | EventKind::DeparturePostponementExpiration { vehicle } => Some(vehicle),
            _ => None,
        }
    }

    pub fn order(&self) -> Option<&OrderId> {
        match self {
            EventKind::OrderRequest { order }
            | EventKind::OrderCancellation { order }
            | EventKind::OrderPickup { order, .. }
            | EventKind::OrderDelivery { order, .. }
            | EventKind::OrderPostponementExpiration { order } => Some(order),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: Time,
    pub priority: Priority,
    /// Insertion counter; breaks ties within equal time and priority.
    pub seq: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

struct Entry(Event);

impl Entry {
    fn key(&self) -> (Time, Priority, u64) {
        (self.0.time, self.0.priority, self.0.seq)
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Reversed: BinaryHeap is a max-heap and we pop the smallest key.
    fn cmp(&self, other: &Self) -> Ordering {
        let (ta, pa, sa) = self.key();
        let (tb, pb, sb) = other.key();
        tb.total_cmp(&ta).then(pb.cmp(&pa)).then(sb.cmp(&sa))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum QueueError {
    #[error("cannot schedule {kind} at {time}, simulation time is already {now}")]
    InThePast {
        kind: &'static str,
        time: Time,
        now: Time,
    },
    #[error("cannot schedule {kind} at non-finite time {time}")]
    NotFinite { kind: &'static str, time: Time },
}

/// Event queue ordered by (time, priority, insertion order).
///
/// Holds at most one decision point per timestamp: scheduling a second one at
/// a time that already has one is a no-op.
#[derive(Default)]
pub struct EventQueue {
    heap: BinaryHeap<Entry>,
    next_seq: u64,
    now: Time,
    decision_times: BTreeSet<u64>,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    /// Time of the most recently popped event.
    pub fn now(&self) -> Time {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Enqueues `kind` at `time`. Returns the assigned sequence number, or
    /// `None` when a decision point at `time` is already queued.
    pub fn schedule(&mut self, time: Time, kind: EventKind) -> Result<Option<u64>, QueueError> {
        if !time.is_finite() {
            return Err(QueueError::NotFinite {
                kind: kind.name(),
                time,
            });
        }
        if time < self.now {
            return Err(QueueError::InThePast {
                kind: kind.name(),
                time,
                now: self.now,
            });
        }
        if kind == EventKind::DecisionPoint && !self.decision_times.insert(time.to_bits()) {
            return Ok(None);
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry(Event {
            time,
            priority: kind.priority(),
            seq,
            kind,
        }));
        Ok(Some(seq))
    }

    pub fn peek(&self) -> Option<&Event> {
        self.heap.peek().map(|e| &e.0)
    }

    pub fn pop(&mut self) -> Option<Event> {
        let Entry(event) = self.heap.pop()?;
        self.now = event.time;
        if event.kind == EventKind::DecisionPoint {
            self.decision_times.remove(&event.time.to_bits());
        }
        Some(event)
    }

    /// Removes every queued event matching `pred`; returns how many.
    pub fn cancel(&mut self, mut pred: impl FnMut(&Event) -> bool) -> usize {
        let before = self.heap.len();
        let decision_times = &mut self.decision_times;
        self.heap.retain(|Entry(e)| {
            let drop = pred(e);
            if drop && e.kind == EventKind::DecisionPoint {
                decision_times.remove(&e.time.to_bits());
            }
            !drop
        });
        before - self.heap.len()
    }

    /// Removes the event with the given sequence number, if still queued.
    pub fn cancel_seq(&mut self, seq: u64) -> bool {
        self.cancel(|e| e.seq == seq) > 0
    }

    pub fn contains_seq(&self, seq: u64) -> bool {
        self.heap.iter().any(|e| e.0.seq == seq)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Event> {
        self.heap.iter().map(|e| &e.0)
    }
}
