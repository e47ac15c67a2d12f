//! Run history and the line-delimited trace format.
//!
//! A trace has one JSON record per line:
//!
//! ```text
//! {"type":"header","format_version":1,"scenario":"...","seed":0}
//! {"type":"event","index":0,"time":0.0,"kind":"order_request","order":"o1","digest":"..."}
//! {"type":"decision","decision":0,"time":0.0,"action":{...}}
//! {"type":"warning","time":5.0,"message":"..."}
//! {"type":"end","time":23.0,"reason":"all_orders_terminal","events":17,"decisions":3}
//! ```
//!
//! `digest` is the first 16 hex digits of the SHA-256 of the state after the
//! event, serialized as compact JSON.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::domain::{Action, LocationId, OrderId, State, Time, VehicleId};
use crate::event::{Event, EventKind};
use crate::policy::protocol::ActionDoc;
use crate::scenario::Scenario;

pub const TRACE_FORMAT_VERSION: u32 = 1;

pub fn state_digest(state: &State) -> String {
    let bytes = serde_json::to_vec(state).expect("states serialize");
    let hash = Sha256::digest(&bytes);
    hex::encode(&hash[..8])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    AllOrdersTerminal,
    QueueEmpty,
    TimeLimit,
    Predicate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventRecord {
    pub index: usize,
    pub time: Time,
    pub kind: EventKind,
    pub digest: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionRecord {
    pub decision: usize,
    pub time: Time,
    pub action: Action,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Warning {
    pub time: Time,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct OrderLifecycle {
    pub request: Option<Time>,
    pub accepted: Option<Time>,
    pub rejected: Option<Time>,
    /// (decision time, postponed until)
    pub postponements: Vec<(Time, Time)>,
    pub pickup: Option<Time>,
    pub delivery: Option<Time>,
    pub canceled: Option<Time>,
    pub vehicle: Option<VehicleId>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VisitRecord {
    pub location: LocationId,
    pub arrival: Time,
    pub service_start: Option<Time>,
    pub service_finish: Option<Time>,
    pub departure: Option<Time>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunHistory {
    pub scenario: String,
    pub seed: u64,
    pub events: Vec<EventRecord>,
    pub decisions: Vec<DecisionRecord>,
    pub warnings: Vec<Warning>,
    pub orders: BTreeMap<OrderId, OrderLifecycle>,
    pub visits: BTreeMap<VehicleId, Vec<VisitRecord>>,
    pub end: Option<(Time, EndReason)>,
    /// Interleaving of events, decisions and warnings, in recording order.
    sequence: Vec<Entry>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Entry {
    Event(usize),
    Decision(usize),
    Warning(usize),
}

impl RunHistory {
    pub fn new(scenario: &Scenario) -> Self {
        Self {
            scenario: scenario.name.clone(),
            seed: scenario.config.seed,
            events: Vec::new(),
            decisions: Vec::new(),
            warnings: Vec::new(),
            orders: scenario
                .orders
                .keys()
                .map(|id| (id.clone(), OrderLifecycle::default()))
                .collect(),
            visits: scenario
                .vehicles
                .values()
                .map(|v| {
                    let start = VisitRecord {
                        location: v.initial_location.clone(),
                        arrival: 0.0,
                        service_start: Some(0.0),
                        service_finish: Some(0.0),
                        departure: None,
                    };
                    (v.id.clone(), vec![start])
                })
                .collect(),
            end: None,
            sequence: Vec::new(),
        }
    }

    /// Records a processed event together with the state it produced.
    pub fn record_event(&mut self, event: &Event, state: &State) {
        let t = event.time;
        let index = self.events.len();
        self.events.push(EventRecord {
            index,
            time: t,
            kind: event.kind.clone(),
            digest: state_digest(state),
        });
        self.sequence.push(Entry::Event(index));
        match &event.kind {
            EventKind::OrderRequest { order } => {
                self.order(order).request = Some(t);
            }
            EventKind::OrderCancellation { order } => {
                if state.orders.canceled.contains(order) {
                    self.order(order).canceled = Some(t);
                }
            }
            EventKind::OrderPickup { order, vehicle } => {
                let o = self.order(order);
                o.pickup = Some(t);
                o.vehicle = Some(vehicle.clone());
            }
            EventKind::OrderDelivery { order, .. } => {
                self.order(order).delivery = Some(t);
            }
            EventKind::VehicleArrival { vehicle } => {
                let location = state.vehicles[vehicle].plan.origin.location.clone();
                self.visits.entry(vehicle.clone()).or_default().push(VisitRecord {
                    location,
                    arrival: t,
                    service_start: None,
                    service_finish: None,
                    departure: None,
                });
            }
            EventKind::ServiceStart { vehicle }
            | EventKind::ServiceFinish { vehicle }
            | EventKind::VehicleDeparture { vehicle } => {
                if let Some(r) = self.visits.get_mut(vehicle).and_then(|l| l.last_mut()) {
                    match event.kind {
                        EventKind::ServiceStart { .. } => r.service_start = Some(t),
                        EventKind::ServiceFinish { .. } => r.service_finish = Some(t),
                        _ => r.departure = Some(t),
                    }
                }
            }
            _ => {}
        }
    }

    pub fn record_decision(&mut self, time: Time, action: &Action) -> usize {
        let decision = self.decisions.len();
        self.decisions.push(DecisionRecord {
            decision,
            time,
            action: action.clone(),
        });
        self.sequence.push(Entry::Decision(decision));
        decision
    }

    /// Updates order lifecycles with an enforced action.
    pub fn record_enforcement(&mut self, time: Time, action: &Action) {
        for id in &action.accepted {
            let o = self.order(id);
            o.accepted.get_or_insert(time);
        }
        for id in &action.rejected {
            self.order(id).rejected = Some(time);
        }
        for (id, &until) in &action.postponed {
            self.order(id).postponements.push((time, until));
        }
    }

    pub fn warn(&mut self, time: Time, message: impl Into<String>) {
        let message = message.into();
        log::warn!("t={time}: {message}");
        self.warnings.push(Warning { time, message });
        self.sequence.push(Entry::Warning(self.warnings.len() - 1));
    }

    pub fn finish(&mut self, time: Time, reason: EndReason) {
        self.end = Some((time, reason));
    }

    fn order(&mut self, id: &OrderId) -> &mut OrderLifecycle {
        self.orders.entry(id.clone()).or_default()
    }

    /// Renders the history as a trace file.
    pub fn to_trace(&self) -> String {
        let mut out = String::new();
        let mut push = |r: &TraceRecord| {
            out.push_str(&serde_json::to_string(r).expect("trace records serialize"));
            out.push('\n');
        };
        push(&TraceRecord::Header {
            format_version: TRACE_FORMAT_VERSION,
            scenario: self.scenario.clone(),
            seed: self.seed,
        });
        for entry in &self.sequence {
            match *entry {
                Entry::Event(i) => {
                    let e = &self.events[i];
                    push(&TraceRecord::Event {
                        index: e.index,
                        time: e.time,
                        event: e.kind.clone(),
                        digest: e.digest.clone(),
                    });
                }
                Entry::Decision(i) => {
                    let d = &self.decisions[i];
                    push(&TraceRecord::Decision {
                        decision: d.decision,
                        time: d.time,
                        action: ActionDoc::from(&d.action),
                    });
                }
                Entry::Warning(i) => {
                    let w = &self.warnings[i];
                    push(&TraceRecord::Warning {
                        time: w.time,
                        message: w.message.clone(),
                    });
                }
            }
        }
        if let Some((time, reason)) = self.end {
            push(&TraceRecord::End {
                time,
                reason,
                events: self.events.len(),
                decisions: self.decisions.len(),
            });
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TraceRecord {
    Header {
        format_version: u32,
        scenario: String,
        seed: u64,
    },
    Event {
        index: usize,
        time: Time,
        #[serde(flatten)]
        event: EventKind,
        digest: String,
    },
    Decision {
        decision: usize,
        time: Time,
        action: ActionDoc,
    },
    Warning {
        time: Time,
        message: String,
    },
    End {
        time: Time,
        reason: EndReason,
        events: usize,
        decisions: usize,
    },
}

#[derive(Debug, Error)]
#[error("trace line {line}: {message}")]
pub struct TraceError {
    pub line: usize,
    pub message: String,
}

/// Parses a trace file into its records.
pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>, TraceError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: TraceRecord = serde_json::from_str(line).map_err(|e| TraceError {
            line: i + 1,
            message: e.to_string(),
        })?;
        if let TraceRecord::Header { format_version, .. } = &record {
            if *format_version != TRACE_FORMAT_VERSION {
                return Err(TraceError {
                    line: i + 1,
                    message: format!("unsupported trace format version {format_version}"),
                });
            }
        }
        out.push(record);
    }
    Ok(out)
}
