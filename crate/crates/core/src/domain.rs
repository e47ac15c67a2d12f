//! Domain types of the modeling framework: locations, orders, vehicles, route
//! plans, states and actions.
//!
//! Everything here is plain data. States are immutable snapshots from the
//! point of view of policies; the engine is the only place that mutates them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Simulation time, in the scenario's time unit (minutes by default).
pub type Time = f64;

/// A nonnegative span of simulation time.
pub type Duration = f64;

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

string_id!(
    /// Opaque location identifier.
    LocationId
);
string_id!(
    /// Opaque order identifier.
    OrderId
);
string_id!(
    /// Opaque vehicle identifier.
    VehicleId
);

/// A place where orders are picked up or delivered, or where vehicles start.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub id: LocationId,
    /// Planar coordinates, required by the coordinate-based travel metrics.
    pub coords: Option<(f64, f64)>,
    /// Number of vehicles that can be served simultaneously. `None` means
    /// unlimited.
    pub port_capacity: Option<u32>,
    /// Parking delay between arrival and the earliest possible service start.
    pub parking_time: Duration,
    /// Order-independent delay at the beginning of every service (dock
    /// approaching).
    pub dock_approach_time: Duration,
}

impl Location {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: LocationId::new(id),
            coords: None,
            port_capacity: None,
            parking_time: 0.0,
            dock_approach_time: 0.0,
        }
    }
}

/// A pickup-and-delivery request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Order {
    pub id: OrderId,
    pub release_time: Time,
    pub pickup_location: LocationId,
    pub delivery_location: LocationId,
    pub quantity: f64,
    pub earliest_pickup_start: Option<Time>,
    pub earliest_delivery_start: Option<Time>,
    pub pickup_duration: Duration,
    pub delivery_duration: Duration,
    /// Soft deadline. Only read by metrics and policies, never by the engine.
    pub due_time: Option<Time>,
    /// Time at which the customer cancels the order, if ever.
    pub cancel_time: Option<Time>,
    /// Deterministic ready time at the pickup location (e.g. meal
    /// preparation). Service cannot start before it.
    pub ready_time: Option<Time>,
}

impl Order {
    pub fn new(
        id: impl Into<String>,
        release_time: Time,
        pickup: impl Into<String>,
        delivery: impl Into<String>,
    ) -> Self {
        Self {
            id: OrderId::new(id),
            release_time,
            pickup_location: LocationId::new(pickup),
            delivery_location: LocationId::new(delivery),
            quantity: 0.0,
            earliest_pickup_start: None,
            earliest_delivery_start: None,
            pickup_duration: 0.0,
            delivery_duration: 0.0,
            due_time: None,
            cancel_time: None,
            ready_time: None,
        }
    }
}

/// Loading rule of a vehicle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadingRule {
    #[default]
    None,
    /// Last-in-first-out: a delivery must unload the most recently loaded order.
    Lifo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub id: VehicleId,
    pub initial_location: LocationId,
    /// `None` means uncapacitated.
    pub capacity: Option<f64>,
    pub loading_rule: LoadingRule,
}

impl Vehicle {
    pub fn new(id: impl Into<String>, initial_location: impl Into<String>) -> Self {
        Self {
            id: VehicleId::new(id),
            initial_location: LocationId::new(initial_location),
            capacity: None,
            loading_rule: LoadingRule::None,
        }
    }
}

/// A planned visit: travel to `location`, then deliver and pick up.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    pub location: LocationId,
    pub pickups: Vec<OrderId>,
    pub deliveries: Vec<OrderId>,
    /// Earliest time at which the vehicle may depart toward this visit.
    pub earliest_start: Option<Time>,
}

impl Visit {
    pub fn new(location: impl Into<String>) -> Self {
        Self {
            location: LocationId::new(location),
            pickups: Vec::new(),
            deliveries: Vec::new(),
            earliest_start: None,
        }
    }

    pub fn pickup(mut self, order: impl Into<String>) -> Self {
        self.pickups.push(OrderId::new(order));
        self
    }

    pub fn deliver(mut self, order: impl Into<String>) -> Self {
        self.deliveries.push(OrderId::new(order));
        self
    }

    pub fn not_before(mut self, est: Time) -> Self {
        self.earliest_start = Some(est);
        self
    }
}

/// The current (or, while en route, the previous) visit of a vehicle together
/// with its lifecycle timestamps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OriginVisit {
    pub location: LocationId,
    pub pickups: Vec<OrderId>,
    pub deliveries: Vec<OrderId>,
    pub arrival_time: Time,
    pub service_start: Option<Time>,
    pub service_finish: Option<Time>,
    pub departure_time: Option<Time>,
}

impl OriginVisit {
    /// Origin visit of a vehicle that just arrived at `visit`.
    pub fn arrived(visit: Visit, at: Time) -> Self {
        Self {
            location: visit.location,
            pickups: visit.pickups,
            deliveries: visit.deliveries,
            arrival_time: at,
            service_start: None,
            service_finish: None,
            departure_time: None,
        }
    }
}

/// Route plan of a vehicle: the origin visit and the next visits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoutePlan {
    pub origin: OriginVisit,
    pub next: Vec<Visit>,
}

/// Coarse phase of a vehicle, derived from the origin visit timestamps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VehiclePhase {
    EnRoute,
    WaitingForService,
    UnderService,
    Idle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleStatus {
    /// Orders currently carried, in loading order (last element loaded last).
    pub load: Vec<OrderId>,
    pub plan: RoutePlan,
}

impl VehicleStatus {
    /// Empty, idle vehicle at `location`.
    pub fn idle_at(location: LocationId) -> Self {
        Self {
            load: Vec::new(),
            plan: RoutePlan {
                origin: OriginVisit {
                    location,
                    pickups: Vec::new(),
                    deliveries: Vec::new(),
                    arrival_time: 0.0,
                    service_start: Some(0.0),
                    service_finish: Some(0.0),
                    departure_time: None,
                },
                next: Vec::new(),
            },
        }
    }

    pub fn phase(&self) -> VehiclePhase {
        let o = &self.plan.origin;
        if o.departure_time.is_some() {
            VehiclePhase::EnRoute
        } else if o.service_start.is_none() {
            VehiclePhase::WaitingForService
        } else if o.service_finish.is_none() {
            VehiclePhase::UnderService
        } else {
            VehiclePhase::Idle
        }
    }

    /// Location of the vehicle if it is at a location, `None` while en route.
    pub fn current_location(&self) -> Option<&LocationId> {
        match self.phase() {
            VehiclePhase::EnRoute => None,
            _ => Some(&self.plan.origin.location),
        }
    }

    /// Every order referenced by the load or any visit of the plan.
    pub fn assigned_orders(&self) -> BTreeSet<&OrderId> {
        let o = &self.plan.origin;
        self.load
            .iter()
            .chain(o.pickups.iter())
            .chain(o.deliveries.iter())
            .chain(
                self.plan
                    .next
                    .iter()
                    .flat_map(|v| v.pickups.iter().chain(v.deliveries.iter())),
            )
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OrderStatus {
    /// Released, neither canceled nor rejected, and not yet delivered.
    pub open: BTreeSet<OrderId>,
    /// Canceled since the last decision enforcement.
    pub canceled: BTreeSet<OrderId>,
}

/// A snapshot of the system: simulation time, vehicle statuses, order status.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub time: Time,
    pub vehicles: BTreeMap<VehicleId, VehicleStatus>,
    pub orders: OrderStatus,
}

impl State {
    pub fn vehicle(&self, id: &VehicleId) -> Option<&VehicleStatus> {
        self.vehicles.get(id)
    }

    /// Orders appearing in any vehicle's load or plan.
    pub fn assigned_orders(&self) -> BTreeSet<&OrderId> {
        self.vehicles
            .values()
            .flat_map(|v| v.assigned_orders())
            .collect()
    }
}

/// Initial state: every vehicle empty and idle at its initial location, no
/// open or canceled orders.
pub fn initial_state<'a>(vehicles: impl IntoIterator<Item = &'a Vehicle>) -> State {
    State {
        time: 0.0,
        vehicles: vehicles
            .into_iter()
            .map(|v| (v.id.clone(), VehicleStatus::idle_at(v.initial_location.clone())))
            .collect(),
        orders: OrderStatus::default(),
    }
}

/// Replacement pickup and delivery lists for the origin visit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OriginUpdate {
    pub location: LocationId,
    pub pickups: Vec<OrderId>,
    pub deliveries: Vec<OrderId>,
}

/// Updated route plan of one vehicle. `origin: None` leaves the origin visit
/// unchanged; the next visits are always replaced wholesale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RouteUpdate {
    pub origin: Option<OriginUpdate>,
    pub next: Vec<Visit>,
}

/// A decision returned by a policy.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub accepted: BTreeSet<OrderId>,
    pub rejected: BTreeSet<OrderId>,
    /// Postponed orders with the time until which the decision is deferred.
    pub postponed: BTreeMap<OrderId, Time>,
    /// Vehicles without an entry keep their plan unchanged.
    pub routes: BTreeMap<VehicleId, RouteUpdate>,
}

impl Action {
    pub fn accept(mut self, order: impl Into<String>) -> Self {
        self.accepted.insert(OrderId::new(order));
        self
    }

    pub fn reject(mut self, order: impl Into<String>) -> Self {
        self.rejected.insert(OrderId::new(order));
        self
    }

    pub fn postpone(mut self, order: impl Into<String>, until: Time) -> Self {
        self.postponed.insert(OrderId::new(order), until);
        self
    }

    pub fn route(mut self, vehicle: impl Into<String>, next: Vec<Visit>) -> Self {
        self.routes
            .insert(VehicleId::new(vehicle), RouteUpdate { origin: None, next });
        self
    }
}
