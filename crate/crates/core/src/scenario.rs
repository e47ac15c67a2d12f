//! Scenario model and file format.
//!
//! A scenario file is a single JSON document:
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "name": "demo",
//!   "time_unit": "minutes",
//!   "locations": [{ "id": "depot", "coords": [0, 0], "port_capacity": 1 }],
//!   "travel": { "metric": "manhattan", "speed": 1.0 },
//!   "vehicles": [{ "id": "v1", "initial_location": "depot", "capacity": 10 }],
//!   "orders": [{ "id": "o1", "release_time": 0, "pickup_location": "depot",
//!                "delivery_location": "depot", "quantity": 1 }],
//!   "config": { "triggers": ["on_order_request", { "periodic": 10 }] }
//! }
//! ```
//!
//! Every optional field has a documented default; unknown fields are rejected.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    Duration, LoadingRule, Location, LocationId, Order, OrderId, Time, Vehicle, VehicleId,
};

pub const SCENARIO_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid document at `{field}`: {message}")]
    Parse {
        path: String,
        field: String,
        message: String,
    },
    #[error("invalid field `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("`{from}` references unknown {kind} `{to}`")]
    DanglingReference {
        from: String,
        kind: &'static str,
        to: String,
    },
    #[error("no travel time defined from `{from}` to `{to}`")]
    UndefinedTravel { from: LocationId, to: LocationId },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

/// One entry of an explicit travel matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub time: Duration,
    /// Defaults to `time` when absent.
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TravelMetric {
    Matrix {
        legs: BTreeMap<(LocationId, LocationId), Leg>,
        /// Missing `(a, b)` entries fall back to `(b, a)`.
        symmetric: bool,
    },
    Manhattan {
        speed: f64,
    },
    Euclidean {
        speed: f64,
    },
}

/// Random quantity drawn from the engine's seeded generator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Sampler {
    /// Integer drawn uniformly from `[low, high]`.
    UniformInt { low: i64, high: i64 },
    /// Real drawn uniformly from `[low, high)`.
    Uniform { low: f64, high: f64 },
}

impl Sampler {
    pub fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        match *self {
            Sampler::UniformInt { low, high } => rng.random_range(low..=high) as f64,
            Sampler::Uniform { low, high } if high > low => rng.random_range(low..high),
            Sampler::Uniform { low, .. } => low,
        }
    }

    fn validate(&self, field: &str) -> Result<(), ScenarioError> {
        let ok = match *self {
            Sampler::UniformInt { low, high } => low >= 0 && high >= low,
            Sampler::Uniform { low, high } => low >= 0.0 && high >= low && high.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(field, "sampler bounds must satisfy 0 <= low <= high"))
        }
    }
}

/// What imposes decision points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    OnOrderRequest,
    /// On order request, but only if some vehicle is at the given location
    /// and not en route.
    OnOrderRequestWhenWaitingAt(LocationId),
    OnOrderCancellation,
    OnVehicleArrival,
    OnVehicleArrivalAt(LocationId),
    OnServiceFinish,
    /// Decision points every `Δ` time units while orders remain unprocessed.
    Periodic(Duration),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndCondition {
    /// Stop once every order is delivered, canceled or rejected.
    #[default]
    AllOrdersTerminal,
    /// Stop when the event queue runs dry.
    QueueEmpty,
    /// Stop before the first event later than the given time.
    Time(Time),
}

/// When a docking port held by a vehicle is released.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortRelease {
    #[default]
    ServiceFinish,
    Departure,
}

/// Problem-specific action validation extensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// Once a vehicle leaves the depot its route is fixed until it is back.
    RouteFixing { depot: LocationId },
    /// An order assigned to a vehicle stays with that vehicle.
    IrrevocableAssignment,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub triggers: Vec<Trigger>,
    /// A departure postponement expiration imposes a decision point and the
    /// vehicle waits for the resulting decision before departing.
    pub dpe_imposes_decision_point: bool,
    pub cancellation_imposes_decision_point: bool,
    /// Time between a decision point and its enforcement.
    pub decision_latency: Duration,
    pub seed: u64,
    pub end_condition: EndCondition,
    /// Abort on any infeasible state or action instead of logging it.
    pub strict: bool,
    pub port_release: PortRelease,
    /// Split orders whose quantity exceeds the smallest vehicle capacity at
    /// load time.
    pub split_orders: bool,
    /// Extra random delay added to every travel.
    pub travel_delay: Option<Sampler>,
    /// Random preparation time after release; the order is not ready for
    /// pickup earlier.
    pub ready_delay: Option<Sampler>,
    pub rules: Vec<Rule>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            triggers: vec![Trigger::OnOrderRequest],
            dpe_imposes_decision_point: false,
            cancellation_imposes_decision_point: true,
            decision_latency: 0.0,
            seed: 0,
            end_condition: EndCondition::AllOrdersTerminal,
            strict: true,
            port_release: PortRelease::ServiceFinish,
            split_orders: false,
            travel_delay: None,
            ready_delay: None,
            rules: Vec::new(),
        }
    }
}

impl Config {
    pub fn periodic_interval(&self) -> Option<Duration> {
        self.triggers.iter().find_map(|t| match t {
            Trigger::Periodic(d) => Some(*d),
            _ => None,
        })
    }

    pub fn has_trigger(&self, trigger: &Trigger) -> bool {
        self.triggers.contains(trigger)
    }

    pub fn cancellation_triggers(&self) -> bool {
        self.cancellation_imposes_decision_point
            || self.has_trigger(&Trigger::OnOrderCancellation)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepotWait {
    pub location: LocationId,
    pub duration: Duration,
}

/// Parameters of the built-in greedy policy that a scenario may carry.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineParams {
    /// Hold a vehicle at the depot this long before departing on a new tour.
    pub depot_wait: Option<DepotWait>,
    /// Keep a final empty visit to this location at the end of every plan.
    pub return_to: Option<LocationId>,
}

/// A fully validated scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub time_unit: String,
    pub locations: BTreeMap<LocationId, Location>,
    pub travel: TravelMetric,
    pub vehicles: BTreeMap<VehicleId, Vehicle>,
    pub orders: BTreeMap<OrderId, Order>,
    pub config: Config,
    pub baseline: BaselineParams,
}

impl Scenario {
    pub fn order(&self, id: &OrderId) -> Option<&Order> {
        self.orders.get(id)
    }

    /// Travel time of `vehicle` from `from` to `to` departing at `now`.
    pub fn travel_time(
        &self,
        _vehicle: &VehicleId,
        from: &LocationId,
        to: &LocationId,
        _now: Time,
    ) -> Result<Duration, ScenarioError> {
        if from == to {
            return Ok(0.0);
        }
        match &self.travel {
            TravelMetric::Matrix { .. } => self.matrix_leg(from, to).map(|l| l.time),
            TravelMetric::Manhattan { speed } | TravelMetric::Euclidean { speed } => {
                Ok(self.coordinate_distance(from, to)? / speed)
            }
        }
    }

    /// Distance between two locations in the metric's native unit.
    pub fn distance(&self, from: &LocationId, to: &LocationId) -> Result<f64, ScenarioError> {
        if from == to {
            return Ok(0.0);
        }
        match &self.travel {
            TravelMetric::Matrix { .. } => self.matrix_leg(from, to).map(|l| l.distance),
            _ => self.coordinate_distance(from, to),
        }
    }

    fn matrix_leg(&self, from: &LocationId, to: &LocationId) -> Result<Leg, ScenarioError> {
        let TravelMetric::Matrix { legs, symmetric } = &self.travel else {
            unreachable!("matrix lookup on a coordinate metric");
        };
        legs.get(&(from.clone(), to.clone()))
            .or_else(|| {
                symmetric
                    .then(|| legs.get(&(to.clone(), from.clone())))
                    .flatten()
            })
            .copied()
            .ok_or_else(|| ScenarioError::UndefinedTravel {
                from: from.clone(),
                to: to.clone(),
            })
    }

    fn coordinate_distance(&self, from: &LocationId, to: &LocationId) -> Result<f64, ScenarioError> {
        let coords = |id: &LocationId| {
            self.locations
                .get(id)
                .and_then(|l| l.coords)
                .ok_or_else(|| ScenarioError::UndefinedTravel {
                    from: from.clone(),
                    to: to.clone(),
                })
        };
        let (a, b) = (coords(from)?, coords(to)?);
        let (dx, dy) = ((a.0 - b.0).abs(), (a.1 - b.1).abs());
        Ok(match self.travel {
            TravelMetric::Manhattan { .. } => dx + dy,
            _ => dx.hypot(dy),
        })
    }

    /// Checks every invariant of the scenario model.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        for (id, loc) in &self.locations {
            if loc.port_capacity == Some(0) {
                return Err(invalid(format!("locations.{id}.port_capacity"), "must be >= 1"));
            }
            nonneg(&format!("locations.{id}.parking_time"), loc.parking_time)?;
            nonneg(&format!("locations.{id}.dock_approach_time"), loc.dock_approach_time)?;
        }
        let known_location = |from: String, id: &LocationId| {
            if self.locations.contains_key(id) {
                Ok(())
            } else {
                Err(ScenarioError::DanglingReference {
                    from,
                    kind: "location",
                    to: id.to_string(),
                })
            }
        };
        for (id, v) in &self.vehicles {
            known_location(format!("vehicle {id}"), &v.initial_location)?;
            if let Some(q) = v.capacity {
                nonneg(&format!("vehicles.{id}.capacity"), q)?;
            }
        }
        for (id, o) in &self.orders {
            known_location(format!("order {id}"), &o.pickup_location)?;
            known_location(format!("order {id}"), &o.delivery_location)?;
            let field = |f: &str| format!("orders.{id}.{f}");
            nonneg(&field("release_time"), o.release_time)?;
            nonneg(&field("quantity"), o.quantity)?;
            nonneg(&field("pickup_duration"), o.pickup_duration)?;
            nonneg(&field("delivery_duration"), o.delivery_duration)?;
            if let Some(c) = o.cancel_time {
                if !(c >= o.release_time) {
                    return Err(invalid(field("cancel_time"), "must not precede release_time"));
                }
            }
        }
        match &self.travel {
            TravelMetric::Matrix { legs, .. } => {
                for ((a, b), leg) in legs {
                    known_location(format!("travel leg {a}->{b}"), a)?;
                    known_location(format!("travel leg {a}->{b}"), b)?;
                    nonneg(&format!("travel.legs.{a}->{b}.time"), leg.time)?;
                    nonneg(&format!("travel.legs.{a}->{b}.distance"), leg.distance)?;
                }
            }
            TravelMetric::Manhattan { speed } | TravelMetric::Euclidean { speed } => {
                if !(*speed > 0.0) || !speed.is_finite() {
                    return Err(invalid("travel.speed", "must be positive"));
                }
                if let Some(l) = self.locations.values().find(|l| l.coords.is_none()) {
                    return Err(invalid(
                        format!("locations.{}.coords", l.id),
                        "required by coordinate-based travel metrics",
                    ));
                }
            }
        }
        let c = &self.config;
        nonneg("config.decision_latency", c.decision_latency)?;
        for t in &c.triggers {
            match t {
                Trigger::Periodic(d) if !(*d > 0.0) => {
                    return Err(invalid("config.triggers.periodic", "interval must be positive"))
                }
                Trigger::OnOrderRequestWhenWaitingAt(l) | Trigger::OnVehicleArrivalAt(l) => {
                    known_location("config.triggers".into(), l)?
                }
                _ => {}
            }
        }
        for r in &c.rules {
            if let Rule::RouteFixing { depot } = r {
                known_location("config.rules.route_fixing".into(), depot)?;
            }
        }
        if let Some(s) = &c.travel_delay {
            s.validate("config.travel_delay")?;
        }
        if let Some(s) = &c.ready_delay {
            s.validate("config.ready_delay")?;
        }
        if let Some(w) = &self.baseline.depot_wait {
            known_location("baseline_policy.depot_wait".into(), &w.location)?;
            nonneg("baseline_policy.depot_wait.duration", w.duration)?;
        }
        if let Some(l) = &self.baseline.return_to {
            known_location("baseline_policy.return_to".into(), l)?;
        }
        Ok(())
    }

    /// Smallest capacity over all capacitated vehicles.
    pub fn min_capacity(&self) -> Option<f64> {
        self.vehicles
            .values()
            .filter_map(|v| v.capacity)
            .min_by(f64::total_cmp)
    }

    /// Replaces every order whose quantity exceeds `capacity` with parts of at
    /// most `capacity` each.
    pub fn split_orders(&mut self, capacity: f64) {
        let orders = std::mem::take(&mut self.orders);
        for (_, order) in orders {
            for part in split_order(&order, capacity) {
                self.orders.insert(part.id.clone(), part);
            }
        }
    }
}

fn nonneg(field: &str, value: f64) -> Result<(), ScenarioError> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, "must be a finite nonnegative number"))
    }
}

/// Splits `order` into parts whose quantities are at most `capacity`. Parts are
/// named `<id>#<k>` for k = 1, 2, ...; an order that fits is returned as is.
pub fn split_order(order: &Order, capacity: f64) -> Vec<Order> {
    if !(capacity > 0.0) || order.quantity <= capacity {
        return vec![order.clone()];
    }
    let mut parts = Vec::new();
    let mut left = order.quantity;
    let mut k = 1;
    while left > 0.0 {
        let q = left.min(capacity);
        let mut part = order.clone();
        part.id = OrderId::new(format!("{}#{k}", order.id));
        part.quantity = q;
        parts.push(part);
        left -= q;
        k += 1;
    }
    parts
}

// ---------------------------------------------------------------------------
// File documents
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LocationDoc {
    id: LocationId,
    #[serde(default)]
    coords: Option<(f64, f64)>,
    #[serde(default)]
    port_capacity: Option<u32>,
    #[serde(default)]
    parking_time: Duration,
    #[serde(default)]
    dock_approach_time: Duration,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VehicleDoc {
    id: VehicleId,
    initial_location: LocationId,
    #[serde(default)]
    capacity: Option<f64>,
    #[serde(default)]
    loading_rule: LoadingRule,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OrderDoc {
    id: OrderId,
    release_time: Time,
    pickup_location: LocationId,
    delivery_location: LocationId,
    #[serde(default)]
    quantity: f64,
    #[serde(default)]
    earliest_pickup_start: Option<Time>,
    #[serde(default)]
    earliest_delivery_start: Option<Time>,
    #[serde(default)]
    pickup_duration: Duration,
    #[serde(default)]
    delivery_duration: Duration,
    #[serde(default)]
    due_time: Option<Time>,
    #[serde(default)]
    cancel_time: Option<Time>,
    #[serde(default)]
    ready_time: Option<Time>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LegDoc {
    from: LocationId,
    to: LocationId,
    time: Duration,
    #[serde(default)]
    distance: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "metric", rename_all = "snake_case", deny_unknown_fields)]
enum TravelDoc {
    Matrix {
        #[serde(default = "yes")]
        symmetric: bool,
        legs: Vec<LegDoc>,
    },
    Manhattan {
        #[serde(default = "unit_speed")]
        speed: f64,
    },
    Euclidean {
        #[serde(default = "unit_speed")]
        speed: f64,
    },
}

fn yes() -> bool {
    true
}

fn unit_speed() -> f64 {
    1.0
}

fn minutes() -> String {
    "minutes".to_owned()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    format_version: u32,
    #[serde(default)]
    name: String,
    #[serde(default = "minutes")]
    time_unit: String,
    locations: Vec<LocationDoc>,
    travel: TravelDoc,
    #[serde(default)]
    vehicles: Vec<VehicleDoc>,
    #[serde(default)]
    orders: Vec<OrderDoc>,
    #[serde(default)]
    config: Config,
    #[serde(default)]
    baseline_policy: BaselineParams,
}

fn insert_unique<K: Ord + ToString, V>(
    map: &mut BTreeMap<K, V>,
    kind: &'static str,
    key: K,
    value: V,
) -> Result<(), ScenarioError> {
    if map.contains_key(&key) {
        return Err(ScenarioError::DuplicateId {
            kind,
            id: key.to_string(),
        });
    }
    map.insert(key, value);
    Ok(())
}

impl TryFrom<ScenarioDoc> for Scenario {
    type Error = ScenarioError;

    fn try_from(doc: ScenarioDoc) -> Result<Self, ScenarioError> {
        if doc.format_version != SCENARIO_FORMAT_VERSION {
            return Err(invalid(
                "format_version",
                format!("unsupported version {}, expected {SCENARIO_FORMAT_VERSION}", doc.format_version),
            ));
        }
        let mut locations = BTreeMap::new();
        for l in doc.locations {
            let loc = Location {
                id: l.id.clone(),
                coords: l.coords,
                port_capacity: l.port_capacity,
                parking_time: l.parking_time,
                dock_approach_time: l.dock_approach_time,
            };
            insert_unique(&mut locations, "location", l.id, loc)?;
        }
        let travel = match doc.travel {
            TravelDoc::Matrix { symmetric, legs } => {
                let mut map = BTreeMap::new();
                for leg in legs {
                    let value = Leg {
                        time: leg.time,
                        distance: leg.distance.unwrap_or(leg.time),
                    };
                    map.insert((leg.from, leg.to), value);
                }
                TravelMetric::Matrix {
                    legs: map,
                    symmetric,
                }
            }
            TravelDoc::Manhattan { speed } => TravelMetric::Manhattan { speed },
            TravelDoc::Euclidean { speed } => TravelMetric::Euclidean { speed },
        };
        let mut vehicles = BTreeMap::new();
        for v in doc.vehicles {
            let vehicle = Vehicle {
                id: v.id.clone(),
                initial_location: v.initial_location,
                capacity: v.capacity,
                loading_rule: v.loading_rule,
            };
            insert_unique(&mut vehicles, "vehicle", v.id, vehicle)?;
        }
        let mut orders = BTreeMap::new();
        for o in doc.orders {
            let order = Order {
                id: o.id.clone(),
                release_time: o.release_time,
                pickup_location: o.pickup_location,
                delivery_location: o.delivery_location,
                quantity: o.quantity,
                earliest_pickup_start: o.earliest_pickup_start,
                earliest_delivery_start: o.earliest_delivery_start,
                pickup_duration: o.pickup_duration,
                delivery_duration: o.delivery_duration,
                due_time: o.due_time,
                cancel_time: o.cancel_time,
                ready_time: o.ready_time,
            };
            insert_unique(&mut orders, "order", o.id, order)?;
        }
        let mut scenario = Scenario {
            name: doc.name,
            time_unit: doc.time_unit,
            locations,
            travel,
            vehicles,
            orders,
            config: doc.config,
            baseline: doc.baseline_policy,
        };
        scenario.validate()?;
        if scenario.config.split_orders {
            if let Some(cap) = scenario.min_capacity() {
                scenario.split_orders(cap);
            }
        }
        Ok(scenario)
    }
}

impl From<&Scenario> for ScenarioDoc {
    fn from(s: &Scenario) -> Self {
        let travel = match &s.travel {
            TravelMetric::Matrix { legs, symmetric } => TravelDoc::Matrix {
                symmetric: *symmetric,
                legs: legs
                    .iter()
                    .map(|((from, to), leg)| LegDoc {
                        from: from.clone(),
                        to: to.clone(),
                        time: leg.time,
                        distance: (leg.distance != leg.time).then_some(leg.distance),
                    })
                    .collect(),
            },
            TravelMetric::Manhattan { speed } => TravelDoc::Manhattan { speed: *speed },
            TravelMetric::Euclidean { speed } => TravelDoc::Euclidean { speed: *speed },
        };
        ScenarioDoc {
            format_version: SCENARIO_FORMAT_VERSION,
            name: s.name.clone(),
            time_unit: s.time_unit.clone(),
            locations: s
                .locations
                .values()
                .map(|l| LocationDoc {
                    id: l.id.clone(),
                    coords: l.coords,
                    port_capacity: l.port_capacity,
                    parking_time: l.parking_time,
                    dock_approach_time: l.dock_approach_time,
                })
                .collect(),
            travel,
            vehicles: s
                .vehicles
                .values()
                .map(|v| VehicleDoc {
                    id: v.id.clone(),
                    initial_location: v.initial_location.clone(),
                    capacity: v.capacity,
                    loading_rule: v.loading_rule,
                })
                .collect(),
            orders: s
                .orders
                .values()
                .map(|o| OrderDoc {
                    id: o.id.clone(),
                    release_time: o.release_time,
                    pickup_location: o.pickup_location.clone(),
                    delivery_location: o.delivery_location.clone(),
                    quantity: o.quantity,
                    earliest_pickup_start: o.earliest_pickup_start,
                    earliest_delivery_start: o.earliest_delivery_start,
                    pickup_duration: o.pickup_duration,
                    delivery_duration: o.delivery_duration,
                    due_time: o.due_time,
                    cancel_time: o.cancel_time,
                    ready_time: o.ready_time,
                })
                .collect(),
            config: s.config.clone(),
            baseline_policy: s.baseline.clone(),
        }
    }
}

/// Parses and validates a scenario document. `origin` names the source in
/// error messages.
pub fn parse_scenario(text: &str, origin: &str) -> Result<Scenario, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: ScenarioDoc =
        serde_path_to_error::deserialize(de).map_err(|e| ScenarioError::Parse {
            path: origin.to_owned(),
            field: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    Scenario::try_from(doc)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text, &path.display().to_string())
}

/// Renders a scenario as a pretty-printed scenario document.
pub fn scenario_to_json(scenario: &Scenario) -> String {
    let mut s = serde_json::to_string_pretty(&ScenarioDoc::from(scenario))
        .expect("scenario documents always serialize");
    s.push('\n');
    s
}
