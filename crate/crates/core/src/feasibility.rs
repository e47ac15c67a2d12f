//! State feasibility.
//!
//! A state is feasible when every vehicle's load and plan only reference open
//! orders, pickups and deliveries happen at the orders' locations, deliveries
//! are made by the vehicle that picked the order up, nothing is picked up or
//! delivered twice, running loads stay within capacity, and LIFO vehicles
//! unload from the top of their stack.
//!
//! The origin visit is special once its service has started: orders already
//! delivered there (no longer loaded) and orders already picked up there (now
//! loaded) are history, and only the remaining part of the service is checked.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::domain::{
    LoadingRule, LocationId, OrderId, State, Time, VehicleId, VehicleStatus,
};
use crate::scenario::Scenario;

/// A violated feasibility constraint. The display form starts with the
/// constraint name.
#[derive(Clone, Debug, PartialEq, Error, Serialize)]
#[serde(tag = "constraint", rename_all = "snake_case")]
pub enum Violation {
    #[error("unknown reference: vehicle `{vehicle}` is not part of the scenario")]
    UnknownVehicle { vehicle: VehicleId },
    #[error("unknown reference: vehicle `{vehicle}` references unknown order `{order}`")]
    UnknownOrder { vehicle: VehicleId, order: OrderId },
    #[error("unknown reference: vehicle `{vehicle}` visits unknown location `{location}`")]
    UnknownLocation {
        vehicle: VehicleId,
        location: LocationId,
    },
    #[error("timestamps: origin visit of `{vehicle}` has inconsistent timestamps")]
    OriginTimestamps { vehicle: VehicleId },
    #[error("assigned orders: vehicle `{vehicle}` carries or plans order `{order}` which is not open")]
    AssignedNotOpen { vehicle: VehicleId, order: OrderId },
    #[error("location matching: vehicle `{vehicle}` picks up `{order}` at `{actual}` (visit {visit}) but its pickup location is `{expected}`")]
    PickupLocation {
        vehicle: VehicleId,
        visit: usize,
        order: OrderId,
        expected: LocationId,
        actual: LocationId,
    },
    #[error("location matching: vehicle `{vehicle}` delivers `{order}` at `{actual}` (visit {visit}) but its delivery location is `{expected}`")]
    DeliveryLocation {
        vehicle: VehicleId,
        visit: usize,
        order: OrderId,
        expected: LocationId,
        actual: LocationId,
    },
    #[error("same vehicle: vehicle `{vehicle}` delivers `{order}` at visit {visit} without carrying it or picking it up earlier")]
    NotCarried {
        vehicle: VehicleId,
        visit: usize,
        order: OrderId,
    },
    #[error("once only: order `{order}` is picked up more than once")]
    PickedUpTwice { order: OrderId },
    #[error("once only: vehicle `{vehicle}` delivers order `{order}` more than once")]
    DeliveredTwice { vehicle: VehicleId, order: OrderId },
    #[error("capacity: vehicle `{vehicle}` would carry {load} > {capacity} after visit {visit}")]
    Capacity {
        vehicle: VehicleId,
        visit: usize,
        load: f64,
        capacity: f64,
    },
    #[error("lifo: vehicle `{vehicle}` unloads `{order}` at visit {visit} while `{top}` is on top")]
    Lifo {
        vehicle: VehicleId,
        visit: usize,
        order: OrderId,
        top: String,
    },
    #[error("order status: order `{order}` is both open and canceled")]
    OpenAndCanceled { order: OrderId },
    // Action-level constraints.
    #[error("decision on orders: open order `{order}` has no decision")]
    MissingDecision { order: OrderId },
    #[error("decision on orders: order `{order}` has more than one decision")]
    ConflictingDecision { order: OrderId },
    #[error("decision on orders: order `{order}` is decided but not open")]
    DecisionOnClosedOrder { order: OrderId },
    #[error("postponement: order `{order}` postponed until {until}, not after {now}")]
    PostponementNotInFuture {
        order: OrderId,
        until: Time,
        now: Time,
    },
    #[error("unknown reference: action updates unknown vehicle `{vehicle}`")]
    UnknownRouteVehicle { vehicle: VehicleId },
    #[error("origin visit: vehicle `{vehicle}` already started its service, the origin visit cannot change")]
    OriginLocked { vehicle: VehicleId },
    #[error("origin visit: vehicle `{vehicle}` is at `{expected}`, origin update names `{actual}`")]
    OriginRelocated {
        vehicle: VehicleId,
        expected: LocationId,
        actual: LocationId,
    },
    #[error("en route diversion: vehicle `{vehicle}` travels to `{expected}`, update sends it to {actual}")]
    Diversion {
        vehicle: VehicleId,
        expected: LocationId,
        actual: String,
    },
    #[error("route fixing: vehicle `{vehicle}` has left the depot, its route cannot change")]
    RouteFixed { vehicle: VehicleId },
    #[error("irrevocable assignment: order `{order}` is assigned to `{from}` and cannot move to {to}")]
    AssignmentChanged {
        order: OrderId,
        from: VehicleId,
        to: String,
    },
}

impl Violation {
    /// Short constraint name, the prefix of the display form.
    pub fn constraint(&self) -> &'static str {
        use Violation::*;
        match self {
            UnknownVehicle { .. }
            | UnknownOrder { .. }
            | UnknownLocation { .. }
            | UnknownRouteVehicle { .. } => "unknown reference",
            OriginTimestamps { .. } => "timestamps",
            AssignedNotOpen { .. } => "assigned orders",
            PickupLocation { .. } | DeliveryLocation { .. } => "location matching",
            NotCarried { .. } => "same vehicle",
            PickedUpTwice { .. } | DeliveredTwice { .. } => "once only",
            Capacity { .. } => "capacity",
            Lifo { .. } => "lifo",
            OpenAndCanceled { .. } => "order status",
            MissingDecision { .. } | ConflictingDecision { .. } | DecisionOnClosedOrder { .. } => {
                "decision on orders"
            }
            PostponementNotInFuture { .. } => "postponement",
            OriginLocked { .. } | OriginRelocated { .. } => "origin visit",
            Diversion { .. } => "en route diversion",
            RouteFixed { .. } => "route fixing",
            AssignmentChanged { .. } => "irrevocable assignment",
        }
    }
}

/// Validates a whole state. Returns every violation found; empty means
/// feasible.
pub fn validate_state(state: &State, scenario: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    for order in state.orders.open.intersection(&state.orders.canceled) {
        out.push(Violation::OpenAndCanceled {
            order: order.clone(),
        });
    }
    let mut picked_by: BTreeMap<&OrderId, &VehicleId> = BTreeMap::new();
    for (vid, status) in &state.vehicles {
        if !scenario.vehicles.contains_key(vid) {
            out.push(Violation::UnknownVehicle {
                vehicle: vid.clone(),
            });
            continue;
        }
        check_vehicle(vid, status, &state.orders.open, scenario, &mut out);
        for order in pending_pickups(status) {
            if let Some(prev) = picked_by.insert(order, vid) {
                if prev != vid {
                    out.push(Violation::PickedUpTwice {
                        order: order.clone(),
                    });
                }
            }
        }
    }
    out
}

/// Orders in the load plus every pickup that is still to be made.
fn pending_pickups(status: &VehicleStatus) -> impl Iterator<Item = &OrderId> {
    let o = &status.plan.origin;
    let started = o.service_start.is_some();
    let at_origin = o
        .pickups
        .iter()
        .filter(move |id| !(started && status.load.contains(id)));
    status
        .load
        .iter()
        .chain(at_origin)
        .chain(status.plan.next.iter().flat_map(|v| v.pickups.iter()))
}

/// One step of a plan as seen by the feasibility checks.
struct Stop<'a> {
    index: usize,
    location: &'a LocationId,
    deliveries: Vec<&'a OrderId>,
    pickups: Vec<&'a OrderId>,
}

fn stops(status: &VehicleStatus) -> Vec<Stop<'_>> {
    let o = &status.plan.origin;
    let started = o.service_start.is_some();
    let mut out = Vec::with_capacity(status.plan.next.len() + 1);
    out.push(Stop {
        index: 0,
        location: &o.location,
        // Once the service started, deliveries no longer loaded are done and
        // pickups already loaded are done.
        deliveries: o
            .deliveries
            .iter()
            .filter(|id| !started || status.load.contains(id))
            .collect(),
        pickups: o
            .pickups
            .iter()
            .filter(|id| !started || !status.load.contains(id))
            .collect(),
    });
    for (j, v) in status.plan.next.iter().enumerate() {
        out.push(Stop {
            index: j + 1,
            location: &v.location,
            deliveries: v.deliveries.iter().collect(),
            pickups: v.pickups.iter().collect(),
        });
    }
    out
}

/// Per-vehicle constraints. `open` is the set of open orders of the state.
pub fn check_vehicle(
    vid: &VehicleId,
    status: &VehicleStatus,
    open: &BTreeSet<OrderId>,
    scenario: &Scenario,
    out: &mut Vec<Violation>,
) {
    let Some(vehicle) = scenario.vehicles.get(vid) else {
        out.push(Violation::UnknownVehicle {
            vehicle: vid.clone(),
        });
        return;
    };
    let o = &status.plan.origin;
    let ordered = |a: Option<Time>, b: Option<Time>| match (a, b) {
        (Some(a), Some(b)) => a <= b,
        (None, Some(_)) => false,
        _ => true,
    };
    if !(o.service_start.is_none_or(|st| o.arrival_time <= st)
        && ordered(o.service_start, o.service_finish)
        && ordered(o.service_finish, o.departure_time))
    {
        out.push(Violation::OriginTimestamps {
            vehicle: vid.clone(),
        });
    }

    let stops = stops(status);
    let before = out.len();
    for stop in &stops {
        if !scenario.locations.contains_key(stop.location) {
            out.push(Violation::UnknownLocation {
                vehicle: vid.clone(),
                location: stop.location.clone(),
            });
        }
    }
    for order in status
        .load
        .iter()
        .chain(stops.iter().flat_map(|s| s.pickups.iter().chain(s.deliveries.iter()).copied()))
    {
        if scenario.order(order).is_none() {
            out.push(Violation::UnknownOrder {
                vehicle: vid.clone(),
                order: order.clone(),
            });
        }
    }
    if out.len() > before {
        return;
    }

    // Assigned orders must be open.
    let mut seen = BTreeSet::new();
    for order in status
        .load
        .iter()
        .chain(stops.iter().flat_map(|s| s.pickups.iter().chain(s.deliveries.iter()).copied()))
    {
        if !open.contains(order) && seen.insert(order) {
            out.push(Violation::AssignedNotOpen {
                vehicle: vid.clone(),
                order: order.clone(),
            });
        }
    }

    // Location matching.
    for stop in &stops {
        for &order in &stop.pickups {
            let expected = &scenario.orders[order].pickup_location;
            if expected != stop.location {
                out.push(Violation::PickupLocation {
                    vehicle: vid.clone(),
                    visit: stop.index,
                    order: order.clone(),
                    expected: expected.clone(),
                    actual: stop.location.clone(),
                });
            }
        }
        for &order in &stop.deliveries {
            let expected = &scenario.orders[order].delivery_location;
            if expected != stop.location {
                out.push(Violation::DeliveryLocation {
                    vehicle: vid.clone(),
                    visit: stop.index,
                    order: order.clone(),
                    expected: expected.clone(),
                    actual: stop.location.clone(),
                });
            }
        }
    }

    // Same vehicle, once only (per vehicle), capacity and LIFO in one pass.
    let mut available: BTreeSet<&OrderId> = status.load.iter().collect();
    let mut picked: BTreeSet<&OrderId> = BTreeSet::new();
    let mut delivered: BTreeSet<&OrderId> = BTreeSet::new();
    for id in &status.load {
        if !picked.insert(id) {
            out.push(Violation::PickedUpTwice { order: id.clone() });
        }
    }
    let quantity = |id: &OrderId| scenario.orders[id].quantity;
    let mut load: f64 = status.load.iter().map(quantity).sum();
    let mut stack: Vec<&OrderId> = status.load.iter().collect();
    let lifo = vehicle.loading_rule == LoadingRule::Lifo;
    if let Some(cap) = vehicle.capacity {
        if load > cap {
            out.push(Violation::Capacity {
                vehicle: vid.clone(),
                visit: 0,
                load,
                capacity: cap,
            });
        }
    }
    for stop in &stops {
        for &order in &stop.deliveries {
            if !delivered.insert(order) {
                out.push(Violation::DeliveredTwice {
                    vehicle: vid.clone(),
                    order: order.clone(),
                });
                continue;
            }
            if !available.remove(order) {
                out.push(Violation::NotCarried {
                    vehicle: vid.clone(),
                    visit: stop.index,
                    order: order.clone(),
                });
                continue;
            }
            load -= quantity(order);
            if lifo {
                match stack.last() {
                    Some(&top) if top == order => {
                        stack.pop();
                    }
                    top => {
                        out.push(Violation::Lifo {
                            vehicle: vid.clone(),
                            visit: stop.index,
                            order: order.clone(),
                            top: top.map_or_else(|| "nothing".to_owned(), |t| t.to_string()),
                        });
                        stack.retain(|o| *o != order);
                    }
                }
            }
        }
        for &order in &stop.pickups {
            if !picked.insert(order) {
                out.push(Violation::PickedUpTwice {
                    order: order.clone(),
                });
                continue;
            }
            available.insert(order);
            load += quantity(order);
            stack.push(order);
        }
        if let Some(cap) = vehicle.capacity {
            // Tolerate rounding from fractional quantities.
            if load > cap + 1e-9 {
                out.push(Violation::Capacity {
                    vehicle: vid.clone(),
                    visit: stop.index,
                    load,
                    capacity: cap,
                });
            }
        }
    }
}
