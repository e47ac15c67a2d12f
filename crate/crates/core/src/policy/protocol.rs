//! Wire format shared by external policies.
//!
//! Messages are single-line JSON documents:
//!
//! ```text
//! {"type":"state","protocol_version":1,"data":{...}}    engine -> policy
//! {"type":"action","protocol_version":1,"data":{...}}   policy -> engine
//! {"type":"end","protocol_version":1,"data":null}       engine -> policy
//! ```
//!
//! Absent optional values are written as `null`, never omitted. On input,
//! omitted optionals and omitted empty lists are accepted.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::domain::{
    Action, LocationId, OrderId, OrderStatus, OriginUpdate, OriginVisit, RoutePlan, RouteUpdate,
    State, Time, VehicleId, VehicleStatus, Visit,
};
use crate::scenario::Scenario;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum ProtocolError {
    #[error("malformed {what} at `{field}`: {message}; payload: {payload}")]
    Malformed {
        what: &'static str,
        field: String,
        message: String,
        payload: String,
    },
    #[error("protocol version {found} is not supported, expected {PROTOCOL_VERSION}")]
    VersionMismatch { found: u32 },
    #[error("expected a `{expected}` message, got `{found}`")]
    UnexpectedMessage {
        expected: &'static str,
        found: String,
    },
    #[error("`{field}` references unknown {kind} `{id}`")]
    UnknownId {
        field: String,
        kind: &'static str,
        id: String,
    },
    #[error("`{field}` repeats `{id}`")]
    Duplicate { field: String, id: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageType {
    State,
    Action,
    End,
}

impl MessageType {
    fn name(self) -> &'static str {
        match self {
            MessageType::State => "state",
            MessageType::Action => "action",
            MessageType::End => "end",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Message {
    #[serde(rename = "type")]
    pub kind: MessageType,
    pub protocol_version: u32,
    #[serde(default)]
    pub data: Value,
}

impl Message {
    pub fn state(state: &State, scenario: &Scenario) -> Self {
        Self {
            kind: MessageType::State,
            protocol_version: PROTOCOL_VERSION,
            data: serde_json::to_value(encode_state(state, scenario)).expect("state documents serialize"),
        }
    }

    pub fn action(action: &Action) -> Self {
        Self {
            kind: MessageType::Action,
            protocol_version: PROTOCOL_VERSION,
            data: serde_json::to_value(ActionDoc::from(action)).expect("action documents serialize"),
        }
    }

    pub fn end() -> Self {
        Self {
            kind: MessageType::End,
            protocol_version: PROTOCOL_VERSION,
            data: Value::Null,
        }
    }

    /// Single-line rendering, without the trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("messages serialize")
    }

    pub fn parse(line: &str) -> Result<Self, ProtocolError> {
        let msg: Message = parse_doc(line.trim(), "message")?;
        if msg.protocol_version != PROTOCOL_VERSION {
            return Err(ProtocolError::VersionMismatch {
                found: msg.protocol_version,
            });
        }
        Ok(msg)
    }

    pub fn expect(self, kind: MessageType) -> Result<Value, ProtocolError> {
        if self.kind == kind {
            Ok(self.data)
        } else {
            Err(ProtocolError::UnexpectedMessage {
                expected: kind.name(),
                found: self.kind.name().to_owned(),
            })
        }
    }
}

fn truncate(s: &str) -> String {
    const MAX: usize = 2000;
    if s.len() <= MAX {
        s.to_owned()
    } else {
        let mut end = MAX;
        while !s.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}...", &s[..end])
    }
}

fn parse_doc<T: serde::de::DeserializeOwned>(text: &str, what: &'static str) -> Result<T, ProtocolError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| ProtocolError::Malformed {
        what,
        field: e.path().to_string(),
        message: e.inner().to_string(),
        payload: truncate(text),
    })
}

fn from_value<T: serde::de::DeserializeOwned>(value: Value, what: &'static str) -> Result<T, ProtocolError> {
    let payload = value.to_string();
    serde_path_to_error::deserialize(value).map_err(|e| ProtocolError::Malformed {
        what,
        field: e.path().to_string(),
        message: e.inner().to_string(),
        payload: truncate(&payload),
    })
}

// ---------------------------------------------------------------------------
// State documents
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisitDoc {
    pub location: LocationId,
    #[serde(default)]
    pub pickups: Vec<OrderId>,
    #[serde(default)]
    pub deliveries: Vec<OrderId>,
    #[serde(default)]
    pub earliest_start: Option<Time>,
}

impl From<&Visit> for VisitDoc {
    fn from(v: &Visit) -> Self {
        Self {
            location: v.location.clone(),
            pickups: v.pickups.clone(),
            deliveries: v.deliveries.clone(),
            earliest_start: v.earliest_start,
        }
    }
}

impl From<VisitDoc> for Visit {
    fn from(v: VisitDoc) -> Self {
        Self {
            location: v.location,
            pickups: v.pickups,
            deliveries: v.deliveries,
            earliest_start: v.earliest_start,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OriginDoc {
    pub location: LocationId,
    pub pickups: Vec<OrderId>,
    pub deliveries: Vec<OrderId>,
    pub arrival_time: Time,
    pub service_start: Option<Time>,
    pub service_finish: Option<Time>,
    pub departure_time: Option<Time>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleStateDoc {
    pub id: VehicleId,
    pub load: Vec<OrderId>,
    pub origin: OriginDoc,
    pub next: Vec<VisitDoc>,
}

/// Order attributes known to the policy. Future information (such as the
/// cancellation time) is not included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpenOrderDoc {
    pub id: OrderId,
    pub release_time: Time,
    pub pickup_location: LocationId,
    pub delivery_location: LocationId,
    pub quantity: f64,
    pub earliest_pickup_start: Option<Time>,
    pub earliest_delivery_start: Option<Time>,
    pub pickup_duration: f64,
    pub delivery_duration: f64,
    pub due_time: Option<Time>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDoc {
    pub time: Time,
    pub vehicles: Vec<VehicleStateDoc>,
    pub open_orders: Vec<OpenOrderDoc>,
    pub canceled: Vec<OrderId>,
}

pub fn encode_state(state: &State, scenario: &Scenario) -> StateDoc {
    StateDoc {
        time: state.time,
        vehicles: state
            .vehicles
            .iter()
            .map(|(id, v)| {
                let o = &v.plan.origin;
                VehicleStateDoc {
                    id: id.clone(),
                    load: v.load.clone(),
                    origin: OriginDoc {
                        location: o.location.clone(),
                        pickups: o.pickups.clone(),
                        deliveries: o.deliveries.clone(),
                        arrival_time: o.arrival_time,
                        service_start: o.service_start,
                        service_finish: o.service_finish,
                        departure_time: o.departure_time,
                    },
                    next: v.plan.next.iter().map(VisitDoc::from).collect(),
                }
            })
            .collect(),
        open_orders: state
            .orders
            .open
            .iter()
            .map(|id| {
                let o = scenario.order(id).expect("open orders belong to the scenario");
                OpenOrderDoc {
                    id: id.clone(),
                    release_time: o.release_time,
                    pickup_location: o.pickup_location.clone(),
                    delivery_location: o.delivery_location.clone(),
                    quantity: o.quantity,
                    earliest_pickup_start: o.earliest_pickup_start,
                    earliest_delivery_start: o.earliest_delivery_start,
                    pickup_duration: o.pickup_duration,
                    delivery_duration: o.delivery_duration,
                    due_time: o.due_time,
                }
            })
            .collect(),
        canceled: state.orders.canceled.iter().cloned().collect(),
    }
}

pub fn decode_state_doc(doc: StateDoc) -> State {
    State {
        time: doc.time,
        vehicles: doc
            .vehicles
            .into_iter()
            .map(|v| {
                let o = v.origin;
                let status = VehicleStatus {
                    load: v.load,
                    plan: RoutePlan {
                        origin: OriginVisit {
                            location: o.location,
                            pickups: o.pickups,
                            deliveries: o.deliveries,
                            arrival_time: o.arrival_time,
                            service_start: o.service_start,
                            service_finish: o.service_finish,
                            departure_time: o.departure_time,
                        },
                        next: v.next.into_iter().map(Visit::from).collect(),
                    },
                };
                (v.id, status)
            })
            .collect(),
        orders: OrderStatus {
            open: doc.open_orders.into_iter().map(|o| o.id).collect(),
            canceled: doc.canceled.into_iter().collect(),
        },
    }
}

/// Decodes the `data` of a state message.
pub fn decode_state(data: Value) -> Result<State, ProtocolError> {
    Ok(decode_state_doc(from_value(data, "state")?))
}

// ---------------------------------------------------------------------------
// Action documents
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostponedDoc {
    pub order: OrderId,
    pub until: Time,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OriginUpdateDoc {
    pub location: LocationId,
    #[serde(default)]
    pub pickups: Vec<OrderId>,
    #[serde(default)]
    pub deliveries: Vec<OrderId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteDoc {
    pub vehicle: VehicleId,
    /// `null` keeps the origin visit unchanged.
    #[serde(default)]
    pub origin: Option<OriginUpdateDoc>,
    pub next: Vec<VisitDoc>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionDoc {
    #[serde(default)]
    pub accepted: Vec<OrderId>,
    #[serde(default)]
    pub rejected: Vec<OrderId>,
    #[serde(default)]
    pub postponed: Vec<PostponedDoc>,
    #[serde(default)]
    pub routes: Vec<RouteDoc>,
}

impl From<&Action> for ActionDoc {
    fn from(a: &Action) -> Self {
        Self {
            accepted: a.accepted.iter().cloned().collect(),
            rejected: a.rejected.iter().cloned().collect(),
            postponed: a
                .postponed
                .iter()
                .map(|(order, &until)| PostponedDoc {
                    order: order.clone(),
                    until,
                })
                .collect(),
            routes: a
                .routes
                .iter()
                .map(|(vehicle, r)| RouteDoc {
                    vehicle: vehicle.clone(),
                    origin: r.origin.as_ref().map(|o| OriginUpdateDoc {
                        location: o.location.clone(),
                        pickups: o.pickups.clone(),
                        deliveries: o.deliveries.clone(),
                    }),
                    next: r.next.iter().map(VisitDoc::from).collect(),
                })
                .collect(),
        }
    }
}

impl ActionDoc {
    /// Converts into an [`Action`] without checking references.
    pub fn into_action_unchecked(self) -> Result<Action, ProtocolError> {
        fn set(ids: Vec<OrderId>, field: &str) -> Result<BTreeSet<OrderId>, ProtocolError> {
            let mut out = BTreeSet::new();
            for id in ids {
                if !out.insert(id.clone()) {
                    return Err(ProtocolError::Duplicate {
                        field: field.to_owned(),
                        id: id.0,
                    });
                }
            }
            Ok(out)
        }
        let mut postponed = BTreeMap::new();
        for p in self.postponed {
            if postponed.insert(p.order.clone(), p.until).is_some() {
                return Err(ProtocolError::Duplicate {
                    field: "postponed".into(),
                    id: p.order.0,
                });
            }
        }
        let mut routes = BTreeMap::new();
        for r in self.routes {
            let update = RouteUpdate {
                origin: r.origin.map(|o| OriginUpdate {
                    location: o.location,
                    pickups: o.pickups,
                    deliveries: o.deliveries,
                }),
                next: r.next.into_iter().map(Visit::from).collect(),
            };
            if routes.insert(r.vehicle.clone(), update).is_some() {
                return Err(ProtocolError::Duplicate {
                    field: "routes".into(),
                    id: r.vehicle.0,
                });
            }
        }
        Ok(Action {
            accepted: set(self.accepted, "accepted")?,
            rejected: set(self.rejected, "rejected")?,
            postponed,
            routes,
        })
    }

    /// Checks that every id refers to the scenario.
    pub fn check_references(&self, scenario: &Scenario) -> Result<(), ProtocolError> {
        let order = |field: String, id: &OrderId| {
            if scenario.orders.contains_key(id) {
                Ok(())
            } else {
                Err(ProtocolError::UnknownId {
                    field,
                    kind: "order",
                    id: id.to_string(),
                })
            }
        };
        let location = |field: String, id: &LocationId| {
            if scenario.locations.contains_key(id) {
                Ok(())
            } else {
                Err(ProtocolError::UnknownId {
                    field,
                    kind: "location",
                    id: id.to_string(),
                })
            }
        };
        for (name, list) in [("accepted", &self.accepted), ("rejected", &self.rejected)] {
            for (i, id) in list.iter().enumerate() {
                order(format!("{name}[{i}]"), id)?;
            }
        }
        for (i, p) in self.postponed.iter().enumerate() {
            order(format!("postponed[{i}].order"), &p.order)?;
        }
        for (i, r) in self.routes.iter().enumerate() {
            if !scenario.vehicles.contains_key(&r.vehicle) {
                return Err(ProtocolError::UnknownId {
                    field: format!("routes[{i}].vehicle"),
                    kind: "vehicle",
                    id: r.vehicle.to_string(),
                });
            }
            if let Some(o) = &r.origin {
                location(format!("routes[{i}].origin.location"), &o.location)?;
                for (k, id) in o.pickups.iter().enumerate() {
                    order(format!("routes[{i}].origin.pickups[{k}]"), id)?;
                }
                for (k, id) in o.deliveries.iter().enumerate() {
                    order(format!("routes[{i}].origin.deliveries[{k}]"), id)?;
                }
            }
            for (j, v) in r.next.iter().enumerate() {
                location(format!("routes[{i}].next[{j}].location"), &v.location)?;
                for (k, id) in v.pickups.iter().enumerate() {
                    order(format!("routes[{i}].next[{j}].pickups[{k}]"), id)?;
                }
                for (k, id) in v.deliveries.iter().enumerate() {
                    order(format!("routes[{i}].next[{j}].deliveries[{k}]"), id)?;
                }
            }
        }
        Ok(())
    }
}

/// Decodes the `data` of an action message and checks its references.
pub fn decode_action(data: Value, scenario: &Scenario) -> Result<Action, ProtocolError> {
    let doc: ActionDoc = from_value(data, "action")?;
    doc.check_references(scenario)?;
    doc.into_action_unchecked()
}

/// Parses a JSON list of action documents (a policy script).
pub fn parse_action_script(text: &str, scenario: &Scenario) -> Result<Vec<Action>, ProtocolError> {
    let docs: Vec<ActionDoc> = parse_doc(text, "action script")?;
    docs.into_iter()
        .enumerate()
        .map(|(i, d)| {
            d.check_references(scenario).map_err(|e| match e {
                ProtocolError::UnknownId { field, kind, id } => ProtocolError::UnknownId {
                    field: format!("[{i}].{field}"),
                    kind,
                    id,
                },
                e => e,
            })?;
            d.into_action_unchecked()
        })
        .collect()
}
