//! Desk-scale case studies.
//!
//! * `icaps`: pickup and delivery between factories and customers with LIFO
//!   loading, single-port factories, a dock approach time and periodic
//!   decision points.
//! * `sddp`: same-day delivery from one depot. Routes are fixed once a vehicle
//!   leaves the depot and vehicles may wait at the depot before a tour.
//! * `rmd`: restaurant meal delivery with random preparation times and
//!   irrevocable assignments.
//!
//! All behavior is expressed through the scenario configuration, so the
//! default hooks run them and the generated documents can be used with the
//! command line tool.

use serde_json::{json, Value};

use crate::scenario::{parse_scenario, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Icaps,
    Sddp,
    Rmd,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Icaps, Variant::Sddp, Variant::Rmd];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Icaps => "icaps",
            Variant::Sddp => "sddp",
            Variant::Rmd => "rmd",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == name)
    }

    pub fn build_default(self) -> Scenario {
        match self {
            Variant::Icaps => build_icaps(&IcapsParams::default()),
            Variant::Sddp => build_sddp(&SddpParams::default()),
            Variant::Rmd => build_rmd(&RmdParams::default()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IcapsParams {
    pub decision_interval: f64,
    pub port_capacity: u32,
    pub dock_approach_time: f64,
    pub vehicle_capacity: f64,
}

impl Default for IcapsParams {
    fn default() -> Self {
        Self {
            decision_interval: 10.0,
            port_capacity: 1,
            dock_approach_time: 2.0,
            vehicle_capacity: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SddpParams {
    /// Time a vehicle waits at the depot before starting a tour.
    pub depot_wait: f64,
    /// Last release time of an order.
    pub cutoff: f64,
    pub vehicles: usize,
}

impl Default for SddpParams {
    fn default() -> Self {
        Self {
            depot_wait: 10.0,
            cutoff: 90.0,
            vehicles: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RmdParams {
    pub seed: u64,
    /// Bounds of the preparation time after an order is placed.
    pub ready_low: i64,
    pub ready_high: i64,
}

impl Default for RmdParams {
    fn default() -> Self {
        Self {
            seed: 7,
            ready_low: 10,
            ready_high: 20,
        }
    }
}

fn build(doc: Value) -> Scenario {
    let name = doc["name"].as_str().unwrap_or("case").to_owned();
    parse_scenario(&doc.to_string(), &name).expect("case study documents are valid")
}

fn order(id: &str, release: f64, from: &str, to: &str, quantity: f64, pick: f64, drop: f64) -> Value {
    json!({
        "id": id, "release_time": release, "pickup_location": from, "delivery_location": to,
        "quantity": quantity, "pickup_duration": pick, "delivery_duration": drop,
    })
}

pub fn build_icaps(p: &IcapsParams) -> Scenario {
    let factory = |id: &str, x: i32, y: i32| {
        json!({"id": id, "coords": [x, y], "port_capacity": p.port_capacity,
               "dock_approach_time": p.dock_approach_time})
    };
    let site = |id: &str, x: i32, y: i32| json!({"id": id, "coords": [x, y]});
    let vehicle = |id: &str, at: &str| {
        json!({"id": id, "initial_location": at, "capacity": p.vehicle_capacity, "loading_rule": "lifo"})
    };
    build(json!({
        "format_version": 1,
        "name": "icaps",
        "locations": [
            site("d1", 0, 0), site("d2", 12, 0),
            factory("f1", 5, 0), factory("f2", 15, 5),
            site("c1", 5, 20), site("c2", -5, 10), site("c3", 25, 15), site("c4", 10, 25),
        ],
        "travel": {"metric": "manhattan", "speed": 1},
        "vehicles": [vehicle("v1", "d1"), vehicle("v2", "d2")],
        "orders": [
            order("o1", 0.0, "f1", "c1", 4.0, 3.0, 2.0),
            order("o2", 0.0, "f1", "c2", 15.0, 4.0, 2.0),
            order("o3", 0.0, "f1", "c4", 3.0, 3.0, 2.0),
            order("o4", 12.0, "f2", "c3", 3.0, 3.0, 2.0),
            order("o5", 25.0, "f1", "c4", 5.0, 3.0, 2.0),
            order("o6", 31.0, "f2", "c1", 6.0, 3.0, 2.0),
        ],
        "config": {
            "triggers": [{"periodic": p.decision_interval}],
            "split_orders": true,
        },
    }))
}

pub fn build_sddp(p: &SddpParams) -> Scenario {
    let customers = [("c1", 4, 6), ("c2", -7, 3), ("c3", 5, -8), ("c4", -3, -9), ("c5", 10, 2), ("c6", -2, 12)];
    let mut locations = vec![json!({"id": "h", "coords": [0, 0]})];
    locations.extend(customers.iter().map(|(id, x, y)| json!({"id": id, "coords": [x, y]})));
    let vehicles: Vec<Value> = (1..=p.vehicles)
        .map(|i| json!({"id": format!("v{i}"), "initial_location": "h", "capacity": 6}))
        .collect();
    let n = 10;
    let orders: Vec<Value> = (0..n)
        .map(|k| {
            let release = (p.cutoff * k as f64 / (n - 1) as f64).round();
            let (to, _, _) = customers[(k * 5 + 1) % customers.len()];
            order(&format!("o{:02}", k + 1), release, "h", to, 1.0, 1.0, 2.0)
        })
        .collect();
    build(json!({
        "format_version": 1,
        "name": "sddp",
        "locations": locations,
        "travel": {"metric": "manhattan", "speed": 1},
        "vehicles": vehicles,
        "orders": orders,
        "config": {
            "triggers": [{"on_vehicle_arrival_at": "h"}, {"on_order_request_when_waiting_at": "h"}],
            "dpe_imposes_decision_point": true,
            "rules": [{"route_fixing": {"depot": "h"}}],
        },
        "baseline_policy": {
            "depot_wait": {"location": "h", "duration": p.depot_wait},
            "return_to": "h",
        },
    }))
}

pub fn build_rmd(p: &RmdParams) -> Scenario {
    let locations = json!([
        {"id": "r1", "coords": [0, 0]}, {"id": "r2", "coords": [8, 6]},
        {"id": "p1", "coords": [1, 2]}, {"id": "p2", "coords": [7, 3]},
        {"id": "k1", "coords": [-4, 3]}, {"id": "k2", "coords": [3, 9]},
        {"id": "k3", "coords": [12, 1]}, {"id": "k4", "coords": [6, -5]},
        {"id": "k5", "coords": [-2, -6]},
    ]);
    let plan = [
        (0.0, "r1", "k1"), (4.0, "r2", "k3"), (9.0, "r1", "k5"), (15.0, "r2", "k2"),
        (22.0, "r1", "k4"), (30.0, "r2", "k1"), (38.0, "r1", "k2"), (47.0, "r2", "k4"),
    ];
    let orders: Vec<Value> = plan
        .iter()
        .enumerate()
        .map(|(k, &(t, r, c))| {
            let mut o = order(&format!("m{}", k + 1), t, r, c, 1.0, 1.0, 1.0);
            o["due_time"] = json!(t + 40.0);
            o
        })
        .collect();
    build(json!({
        "format_version": 1,
        "name": "rmd",
        "locations": locations,
        "travel": {"metric": "euclidean", "speed": 1},
        "vehicles": [
            {"id": "d1", "initial_location": "p1", "capacity": 3},
            {"id": "d2", "initial_location": "p2", "capacity": 3},
        ],
        "orders": orders,
        "config": {
            "triggers": ["on_order_request"],
            "seed": p.seed,
            "ready_delay": {"uniform_int": {"low": p.ready_low, "high": p.ready_high}},
            "rules": ["irrevocable_assignment"],
        },
    }))
}
