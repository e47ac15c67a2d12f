//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use dvrp_engine::domain::{
    Action, LoadingRule, OrderId, OrderStatus, OriginVisit, RoutePlan, State, VehicleId, VehicleStatus, Visit,
};
use dvrp_engine::engine::{Engine, SimulationResult};
use dvrp_engine::event::EventKind;
use dvrp_engine::policy::protocol::parse_action_script;
use dvrp_engine::policy::{GreedyPolicy, Policy, ScriptedPolicy};
use dvrp_engine::scenario::{load_scenario, parse_scenario, Scenario, Trigger};

pub fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

/// Every shipped scenario document (action scripts excluded), by file stem.
pub fn shipped_scenarios() -> Vec<(String, Scenario)> {
    let mut out: Vec<_> = std::fs::read_dir(scenarios_dir())
        .expect("scenarios directory")
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            name.ends_with(".json") && name.matches('.').count() == 1
        })
        .map(|p| {
            let stem = p.file_stem().unwrap().to_string_lossy().into_owned();
            let s = load_scenario(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            (stem, s)
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

pub fn worked_example() -> (Scenario, Vec<Action>) {
    let dir = scenarios_dir();
    let s = load_scenario(dir.join("worked_example.json")).unwrap();
    let text = std::fs::read_to_string(dir.join("worked_example.actions.json")).unwrap();
    let actions = parse_action_script(&text, &s).unwrap();
    (s, actions)
}

pub fn run_scripted(s: &Scenario, actions: Vec<Action>) -> SimulationResult {
    let mut p = ScriptedPolicy::new(actions);
    Engine::new(s, &mut p).record_states(true).run().unwrap()
}

pub fn run_greedy(s: &Scenario) -> SimulationResult {
    let mut p = GreedyPolicy;
    Engine::new(s, &mut p).record_states(true).run().unwrap()
}

/// (time, kind) of every processed event.
pub fn event_kinds(r: &SimulationResult) -> Vec<(f64, &'static str)> {
    r.history.events.iter().map(|e| (e.time, e.kind.name())).collect()
}

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// Worked example: the fourteen listed states, written out by hand.
// ---------------------------------------------------------------------------

fn ids(xs: &[&str]) -> Vec<OrderId> {
    xs.iter().map(|x| OrderId::from(*x)).collect()
}

fn snapshot(time: f64, open: &[&str], origin: OriginVisit, next: Vec<Visit>, load: &[&str]) -> State {
    let mut vehicles = BTreeMap::new();
    vehicles.insert(
        VehicleId::from("v"),
        VehicleStatus {
            load: ids(load),
            plan: RoutePlan { origin, next },
        },
    );
    State {
        time,
        vehicles,
        orders: OrderStatus {
            open: ids(open).into_iter().collect(),
            canceled: BTreeSet::new(),
        },
    }
}

fn origin(loc: &str, pickups: &[&str], at: f64, st: Option<f64>, ft: Option<f64>, dt: Option<f64>) -> OriginVisit {
    OriginVisit {
        location: loc.into(),
        pickups: ids(pickups),
        deliveries: vec![],
        arrival_time: at,
        service_start: st,
        service_finish: ft,
        departure_time: dt,
    }
}

/// s₁ … s₁₄ of the worked example.
pub fn worked_example_states() -> Vec<State> {
    let home = |dt| origin("l1", &[], 0.0, Some(0.0), Some(0.0), dt);
    let x1 = vec![Visit::new("l2").pickup("o1").not_before(10.0), Visit::new("l5").deliver("o1")];
    let x2 = vec![
        Visit::new("l2").pickup("o1").not_before(10.0),
        Visit::new("l3").pickup("o2"),
        Visit::new("l5").deliver("o1").deliver("o2"),
    ];
    let x3 = vec![
        Visit::new("l2").pickup("o1").not_before(10.0),
        Visit::new("l3").pickup("o2"),
        Visit::new("l6").pickup("o3"),
        Visit::new("l5").deliver("o1").deliver("o2"),
        Visit::new("l4").deliver("o3"),
    ];
    let rest = x3[1..].to_vec();
    let all = ["o1", "o2", "o3"];
    vec![
        snapshot(0.0, &["o1"], home(None), vec![], &[]),
        snapshot(0.0, &["o1"], home(None), vec![], &[]),
        snapshot(0.0, &["o1"], home(None), x1.clone(), &[]),
        snapshot(5.0, &["o1", "o2"], home(None), x1.clone(), &[]),
        snapshot(5.0, &["o1", "o2"], home(None), x1, &[]),
        snapshot(5.0, &["o1", "o2"], home(None), x2.clone(), &[]),
        snapshot(10.0, &["o1", "o2"], home(Some(10.0)), x2.clone(), &[]),
        snapshot(12.0, &all, home(Some(10.0)), x2.clone(), &[]),
        snapshot(12.0, &all, home(Some(10.0)), x2, &[]),
        snapshot(12.0, &all, home(Some(10.0)), x3, &[]),
        snapshot(20.0, &all, origin("l2", &["o1"], 20.0, None, None, None), rest.clone(), &[]),
        snapshot(21.0, &all, origin("l2", &["o1"], 20.0, Some(21.0), None, None), rest.clone(), &[]),
        snapshot(23.0, &all, origin("l2", &["o1"], 20.0, Some(21.0), Some(23.0), None), rest.clone(), &["o1"]),
        snapshot(23.0, &all, origin("l2", &["o1"], 20.0, Some(21.0), Some(23.0), Some(23.0)), rest, &["o1"]),
    ]
}

/// Kinds of the events producing s₁ … s₁₄.
pub const WORKED_EXAMPLE_KINDS: [&str; 14] = [
    "order_request",
    "decision_point",
    "decision_enforcement",
    "order_request",
    "decision_point",
    "decision_enforcement",
    "vehicle_departure",
    "order_request",
    "decision_point",
    "decision_enforcement",
    "vehicle_arrival",
    "service_start",
    "service_finish",
    "vehicle_departure",
];

pub fn check_golden_trace() -> Check {
    let (s, actions) = worked_example();
    let r = run_scripted(&s, actions);
    // The departure postponement expiration at 10 and the pickup at 23 sit
    // between listed states and leave the plan unchanged.
    let listed: Vec<usize> = r
        .history
        .events
        .iter()
        .filter(|e| !matches!(e.kind, EventKind::DeparturePostponementExpiration { .. } | EventKind::OrderPickup { .. }))
        .map(|e| e.index)
        .take(14)
        .collect();
    let expected = worked_example_states();
    ensure(listed.len() == 14, || format!("only {} listed events", listed.len()))?;
    for (k, (&i, want)) in listed.iter().zip(&expected).enumerate() {
        let ev = &r.history.events[i];
        ensure(ev.kind.name() == WORKED_EXAMPLE_KINDS[k], || {
            format!("s{}: event {} is {}, expected {}", k + 1, i, ev.kind.name(), WORKED_EXAMPLE_KINDS[k])
        })?;
        let got = &r.states[i + 1];
        ensure(got == want, || format!("s{} differs:\n got {got:?}\nwant {want:?}", k + 1))?;
    }
    let times: Vec<f64> = listed.iter().map(|&i| r.history.events[i].time).collect();
    Ok(format!("14 states exact, times {times:?}"))
}

// ---------------------------------------------------------------------------
// Event ordering oracle.
// ---------------------------------------------------------------------------

/// Expected pop order of events scheduled at one instant: a stable sort by
/// priority class, keeping only the first decision point.
pub fn stable_sort_order(kinds: &[EventKind]) -> Vec<usize> {
    let class = |k: &EventKind| match k {
        EventKind::DecisionEnforcement { .. } => 0,
        EventKind::DecisionPoint => 2,
        _ => 1,
    };
    let mut seen_dp = false;
    let mut idx: Vec<usize> = (0..kinds.len())
        .filter(|&i| {
            if kinds[i] == EventKind::DecisionPoint {
                let first = !seen_dp;
                seen_dp = true;
                first
            } else {
                true
            }
        })
        .collect();
    idx.sort_by_key(|&i| class(&kinds[i]));
    idx
}

pub fn random_kind(rng: &mut impl Rng) -> EventKind {
    let o = format!("o{}", rng.random_range(0..5));
    let v = format!("v{}", rng.random_range(0..3));
    match rng.random_range(0..8) {
        0 => EventKind::DecisionEnforcement { decision: rng.random_range(0..10) },
        1 => EventKind::DecisionPoint,
        2 => EventKind::OrderRequest { order: o.into() },
        3 => EventKind::VehicleArrival { vehicle: v.into() },
        4 => EventKind::ServiceStart { vehicle: v.into() },
        5 => EventKind::OrderPickup { order: o.into(), vehicle: v.into() },
        6 => EventKind::OrderPostponementExpiration { order: o.into() },
        _ => EventKind::ProcessWake { process: rng.random_range(0..3) },
    }
}

/// Schedules `kinds` at one time and returns the indices in pop order.
pub fn queue_order(time: f64, kinds: &[EventKind]) -> Vec<usize> {
    let mut q = dvrp_engine::event::EventQueue::new();
    let mut by_seq = BTreeMap::new();
    for (i, k) in kinds.iter().enumerate() {
        if let Some(seq) = q.schedule(time, k.clone()).unwrap() {
            by_seq.insert(seq, i);
        }
    }
    std::iter::from_fn(|| q.pop()).map(|e| by_seq[&e.seq]).collect()
}

pub fn check_event_ordering(cases: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..cases {
        let n = rng.random_range(1..40);
        let kinds: Vec<EventKind> = (0..n).map(|_| random_kind(&mut rng)).collect();
        let t = rng.random_range(0..100) as f64;
        let got = queue_order(t, &kinds);
        let want = stable_sort_order(&kinds);
        ensure(got == want, || format!("case {case}: popped {got:?}, oracle {want:?}"))?;
    }
    Ok(format!("{cases} same-time event sets match the stable sort"))
}

// ---------------------------------------------------------------------------
// Feasibility suite.
// ---------------------------------------------------------------------------

pub fn check_feasibility_suite() -> Check {
    let mut total_states = 0;
    let mut total_actions = 0;
    for (name, s) in shipped_scenarios() {
        let r = run_greedy(&s);
        ensure(r.states_checked == r.history.events.len(), || {
            format!("{name}: {} of {} states checked", r.states_checked, r.history.events.len())
        })?;
        let enforced = r
            .history
            .events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::DecisionEnforcement { .. }))
            .count();
        ensure(r.actions_checked == enforced, || {
            format!("{name}: {} of {enforced} actions checked", r.actions_checked)
        })?;
        ensure(r.history.warnings.is_empty(), || format!("{name}: warnings {:?}", r.history.warnings))?;
        for st in &r.states {
            let v = dvrp_engine::feasibility::validate_state(st, &s);
            ensure(v.is_empty(), || format!("{name}: state at {} infeasible: {v:?}", st.time))?;
        }
        // Closed orders never come back.
        let mut closed: BTreeSet<OrderId> = BTreeSet::new();
        for (e, st) in r.history.events.iter().zip(&r.states[1..]) {
            for o in &closed {
                let back = st.orders.open.contains(o) || st.assigned_orders().contains(o);
                ensure(!back, || format!("{name}: {o} reappears at {}", e.time))?;
            }
            match &e.kind {
                EventKind::DecisionEnforcement { decision } => {
                    closed.extend(r.history.decisions[*decision].action.rejected.iter().cloned());
                }
                EventKind::OrderCancellation { order } if r.history.orders[order].canceled.is_some() => {
                    closed.insert(order.clone());
                }
                _ => {}
            }
        }
        let unfinished = r.history.orders.values().filter(|o| o.delivery.is_none() && o.rejected.is_none() && o.canceled.is_none()).count();
        ensure(unfinished == 0, || format!("{name}: {unfinished} orders not terminal"))?;
        total_states += r.states_checked;
        total_actions += r.actions_checked;
    }
    Ok(format!("{total_states} states and {total_actions} actions feasible"))
}

// ---------------------------------------------------------------------------
// Postponement.
// ---------------------------------------------------------------------------

/// One vehicle at `a`; o1 from `b` to `c` at 0, optionally o2 at 5 and o3 at 30.
pub fn postponement_scenario(dpe_decides: bool, o2: bool, o3: bool) -> Scenario {
    let mut orders = vec![json!({"id": "o1", "release_time": 0, "pickup_location": "b", "delivery_location": "c", "pickup_duration": 1})];
    if o2 {
        orders.push(json!({"id": "o2", "release_time": 5, "pickup_location": "b", "delivery_location": "c", "pickup_duration": 1}));
    }
    if o3 {
        orders.push(json!({"id": "o3", "release_time": 30, "pickup_location": "b", "delivery_location": "c", "pickup_duration": 1}));
    }
    let doc = json!({
        "format_version": 1,
        "name": "postponement",
        "locations": [{"id": "a", "coords": [0, 0]}, {"id": "b", "coords": [0, 4]}, {"id": "c", "coords": [3, 4]}],
        "travel": {"metric": "manhattan"},
        "vehicles": [{"id": "v", "initial_location": "a"}],
        "orders": orders,
        "config": {"dpe_imposes_decision_point": dpe_decides},
    });
    parse_scenario(&doc.to_string(), "postponement").unwrap()
}

pub fn plan(orders: &[&str], est: Option<f64>) -> Vec<Visit> {
    let mut p = Visit::new("b");
    let mut d = Visit::new("c");
    for o in orders {
        p = p.pickup(*o);
        d = d.deliver(*o);
    }
    p.earliest_start = est;
    vec![p, d]
}

fn events_at(r: &SimulationResult, t: f64) -> Vec<&'static str> {
    r.history.events.iter().filter(|e| e.time == t).map(|e| e.kind.name()).collect()
}

fn count(r: &SimulationResult, kind: &str) -> usize {
    r.history.events.iter().filter(|e| e.kind.name() == kind).count()
}

pub fn check_order_postponement() -> Result<(), String> {
    // Case 1: expiration at 40 imposes a decision point.
    let s = postponement_scenario(false, false, false);
    let r = run_scripted(&s, vec![Action::default().postpone("o1", 40.0), Action::default().accept("o1").route("v", plan(&["o1"], None))]);
    let at40 = events_at(&r, 40.0);
    ensure(at40.starts_with(&["order_postponement_expiration", "decision_point", "decision_enforcement"]), || {
        format!("case 1: events at 40 are {at40:?}")
    })?;
    ensure(r.history.decisions.iter().map(|d| d.time).eq([0.0, 40.0]), || "case 1: decision times".into())?;

    // Case 2: a decision point at 30 cancels the expiration; o1 is open and
    // unassigned again in the state at 30.
    let s = postponement_scenario(false, false, true);
    let r = run_scripted(
        &s,
        vec![Action::default().postpone("o1", 40.0), Action::default().accept("o1").accept("o3").route("v", plan(&["o1", "o3"], None))],
    );
    ensure(count(&r, "order_postponement_expiration") == 0, || "case 2: expiration not canceled".into())?;
    ensure(r.history.decisions.iter().map(|d| d.time).eq([0.0, 30.0]), || "case 2: decision times".into())?;
    let dp30 = r.history.events.iter().find(|e| e.time == 30.0 && e.kind == EventKind::DecisionPoint).unwrap();
    let st = &r.states[dp30.index + 1];
    ensure(st.orders.open.contains(&OrderId::from("o1")) && st.assigned_orders().is_empty(), || {
        "case 2: o1 not pending at 30".into()
    })?;
    Ok(())
}

pub fn check_departure_postponement() -> Result<(), String> {
    let first = || Action::default().accept("o1").route("v", plan(&["o1"], Some(10.0)));
    for flag in [false, true] {
        let s = postponement_scenario(flag, false, false);
        // Case 1.1 (flag) and 1.2 (no flag): the wait ends at 10.
        let script = if flag { vec![first(), Action::default().accept("o1")] } else { vec![first()] };
        let r = run_scripted(&s, script);
        let at10 = events_at(&r, 10.0);
        let want: &[&str] = if flag {
            &["departure_postponement_expiration", "decision_point", "decision_enforcement", "vehicle_departure"]
        } else {
            &["departure_postponement_expiration", "vehicle_departure"]
        };
        ensure(at10 == want, || format!("flag={flag}: events at 10 are {at10:?}"))?;

        // Case 2: a decision point at 5 interrupts the wait. Restating the
        // plan starts a fresh wait until 10.
        let s = postponement_scenario(flag, true, false);
        let both = || Action::default().accept("o1").accept("o2").route("v", plan(&["o1", "o2"], Some(10.0)));
        let script = if flag { vec![first(), both(), Action::default().accept("o1").accept("o2")] } else { vec![first(), both()] };
        let r = run_scripted(&s, script);
        ensure(count(&r, "departure_postponement_expiration") == 1, || format!("flag={flag}: expiration count"))?;
        let at10 = events_at(&r, 10.0);
        ensure(at10 == want, || format!("flag={flag} case 2: events at 10 are {at10:?}"))?;
        let departures: Vec<f64> = r.history.events.iter().filter(|e| e.kind.name() == "vehicle_departure").map(|e| e.time).collect();
        ensure(departures[0] == 10.0, || format!("flag={flag}: first departure {departures:?}"))?;

        // Case 2 with a plan that drops the wait: departure right at 5.
        let go = Action::default().accept("o1").accept("o2").route("v", plan(&["o1", "o2"], None));
        let r = run_scripted(&s, vec![first(), go]);
        ensure(count(&r, "departure_postponement_expiration") == 0, || format!("flag={flag}: stale expiration"))?;
        let dep = r.history.events.iter().find(|e| e.kind.name() == "vehicle_departure").unwrap();
        ensure(dep.time == 5.0, || format!("flag={flag}: departure at {}", dep.time))?;
    }
    Ok(())
}

pub fn check_postponement() -> Check {
    check_order_postponement()?;
    check_departure_postponement()?;
    Ok("order cases 1, 2 and departure cases 1.1, 1.2, 2 under both flags".into())
}

// ---------------------------------------------------------------------------
// Docking.
// ---------------------------------------------------------------------------

/// Service starts at a location with `ports` servers, first come first served,
/// simulated one time unit at a time.
pub fn fifo_queue_oracle(ports: usize, arrivals: &[i64], durations: &[i64]) -> Vec<i64> {
    let mut start = vec![None; arrivals.len()];
    let mut busy_until: Vec<i64> = Vec::new();
    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut order: Vec<usize> = (0..arrivals.len()).collect();
    order.sort_by_key(|&i| (arrivals[i], i));
    let mut t = 0;
    while start.iter().any(Option::is_none) {
        busy_until.retain(|&u| u > t);
        for &i in &order {
            if arrivals[i] == t {
                queue.push_back(i);
            }
        }
        while busy_until.len() < ports {
            let Some(i) = queue.pop_front() else { break };
            start[i] = Some(t);
            busy_until.push(t + durations[i]);
        }
        t += 1;
    }
    start.into_iter().map(Option::unwrap).collect()
}

/// Vehicles `v0..` start `dist[i]` away from a dock with `ports` ports and each
/// picks up one order there taking `dur[i]`.
pub fn docking_scenario(ports: u32, dist: &[i64], dur: &[i64]) -> (Scenario, Action) {
    let mut locations = vec![json!({"id": "dock", "coords": [0, 0], "port_capacity": ports}), json!({"id": "sink", "coords": [0, -5]})];
    let mut vehicles = vec![];
    let mut orders = vec![];
    let mut action = Action::default();
    for (i, (&d, &p)) in dist.iter().zip(dur).enumerate() {
        locations.push(json!({"id": format!("s{i}"), "coords": [d, 0]}));
        vehicles.push(json!({"id": format!("v{i}"), "initial_location": format!("s{i}")}));
        orders.push(json!({"id": format!("o{i}"), "release_time": 0, "pickup_location": "dock", "delivery_location": "sink", "pickup_duration": p}));
        let o = format!("o{i}");
        action = action.accept(o.as_str()).route(format!("v{i}"), vec![Visit::new("dock").pickup(o.as_str()), Visit::new("sink").deliver(o.as_str())]);
    }
    let doc = json!({
        "format_version": 1, "name": "docking",
        "locations": locations, "travel": {"metric": "manhattan"},
        "vehicles": vehicles, "orders": orders,
    });
    (parse_scenario(&doc.to_string(), "docking").unwrap(), action)
}

/// Arrival and service start at the dock of every vehicle.
pub fn dock_times(r: &SimulationResult) -> BTreeMap<VehicleId, (f64, f64)> {
    r.history
        .visits
        .iter()
        .map(|(v, visits)| {
            let at = visits.iter().find(|x| x.location.as_str() == "dock").unwrap();
            (v.clone(), (at.arrival, at.service_start.unwrap()))
        })
        .collect()
}

pub fn check_docking() -> Check {
    // 1 port, arrivals at 3, 5 and 7, services of 4.
    let (dist, dur) = ([3, 5, 7], [4, 4, 4]);
    let (s, a) = docking_scenario(1, &dist, &dur);
    let r = run_scripted(&s, vec![a]);
    let times = dock_times(&r);
    let starts: Vec<f64> = times.values().map(|t| t.1).collect();
    ensure(starts == [3.0, 7.0, 11.0], || format!("starts {starts:?}"))?;
    let finishes: Vec<f64> = r.history.visits.values().map(|v| v[1].service_finish.unwrap()).collect();
    ensure(starts[1] == finishes[0] && starts[2] == finishes[1], || "start != predecessor finish".into())?;
    let oracle = fifo_queue_oracle(1, &dist, &dur);
    ensure(starts.iter().zip(&oracle).all(|(a, &b)| *a == b as f64), || format!("oracle {oracle:?}"))?;

    // Random staggered instances against the oracle.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..40 {
        let n = rng.random_range(2..=4);
        let ports = rng.random_range(1..=2);
        let dist: Vec<i64> = (0..n).map(|_| rng.random_range(1..12)).collect();
        let dur: Vec<i64> = (0..n).map(|_| rng.random_range(1..6)).collect();
        let (s, a) = docking_scenario(ports, &dist, &dur);
        let r = run_scripted(&s, vec![a]);
        let got: Vec<i64> = dock_times(&r).values().map(|t| t.1 as i64).collect();
        let want = fifo_queue_oracle(ports as usize, &dist, &dur);
        ensure(got == want, || format!("case {case}: ports {ports} dist {dist:?} dur {dur:?}: {got:?} vs {want:?}"))?;
    }
    Ok("starts 3, 7, 11 in arrival order; 40 random queues match the oracle".into())
}

// ---------------------------------------------------------------------------
// Fixed-step reference simulator.
// ---------------------------------------------------------------------------

/// A random desk instance: integer coordinates, Manhattan metric, integer
/// durations and release times.
pub fn random_desk_instance(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nl = rng.random_range(3..=6);
    let locations: Vec<_> = (0..nl)
        .map(|i| json!({"id": format!("l{i}"), "coords": [rng.random_range(0..=6), rng.random_range(0..=6)], "parking_time": rng.random_range(0..=2)}))
        .collect();
    let nv = rng.random_range(1..=3);
    let vehicles: Vec<_> = (0..nv)
        .map(|i| {
            let mut v = json!({"id": format!("v{i}"), "initial_location": format!("l{}", rng.random_range(0..nl))});
            if rng.random_bool(0.7) {
                v["capacity"] = json!(rng.random_range(3..=8));
            }
            if rng.random_bool(0.4) {
                v["loading_rule"] = json!("lifo");
            }
            v
        })
        .collect();
    let no = rng.random_range(1..=10);
    let orders: Vec<_> = (0..no)
        .map(|i| {
            let p = rng.random_range(0..nl);
            let d = (p + rng.random_range(1..nl)) % nl;
            json!({
                "id": format!("o{i}"), "release_time": rng.random_range(0..=30),
                "pickup_location": format!("l{p}"), "delivery_location": format!("l{d}"),
                "quantity": rng.random_range(1..=3),
                "pickup_duration": rng.random_range(0..=3), "delivery_duration": rng.random_range(0..=3),
            })
        })
        .collect();
    let mut triggers = vec![json!("on_order_request")];
    if rng.random_bool(0.5) {
        triggers.push(json!("on_vehicle_arrival"));
    }
    if rng.random_bool(0.5) {
        triggers.push(json!("on_service_finish"));
    }
    let doc = json!({
        "format_version": 1, "name": format!("desk-{seed}"),
        "locations": locations, "travel": {"metric": "manhattan"},
        "vehicles": vehicles, "orders": orders,
        "config": {"triggers": triggers},
    });
    parse_scenario(&doc.to_string(), "desk").unwrap()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefEvent {
    pub time: i64,
    pub kind: &'static str,
    pub order: Option<String>,
    pub vehicle: Option<String>,
}

#[derive(Clone, Debug)]
enum Due {
    Request(String),
    Departure(String),
    Arrival(String),
    ServiceStart(String),
    Pickup(String, String),
    Delivery(String, String),
    Finish(String),
}

struct Timer {
    left: i64,
    stamp: u64,
    what: Due,
}

/// Brute-force simulator: time advances in steps of one unit and every
/// activity is a countdown timer. Supports the features of
/// [`random_desk_instance`]: travel, parking, service durations, request,
/// arrival and service-finish triggers, zero decision latency.
pub fn reference_run(s: &Scenario, policy: &mut dyn Policy) -> (Vec<RefEvent>, State) {
    let coords = |l: &dvrp_engine::domain::LocationId| s.locations[l].coords.unwrap();
    let travel = |a: &dvrp_engine::domain::LocationId, b: &dvrp_engine::domain::LocationId| {
        let (p, q) = (coords(a), coords(b));
        ((p.0 - q.0).abs() + (p.1 - q.1).abs()) as i64
    };
    let trig = |t: Trigger| s.config.triggers.contains(&t);

    let mut state = State {
        time: 0.0,
        vehicles: s
            .vehicles
            .values()
            .map(|v| {
                let origin = OriginVisit {
                    location: v.initial_location.clone(),
                    pickups: vec![],
                    deliveries: vec![],
                    arrival_time: 0.0,
                    service_start: Some(0.0),
                    service_finish: Some(0.0),
                    departure_time: None,
                };
                (v.id.clone(), VehicleStatus { load: vec![], plan: RoutePlan { origin, next: vec![] } })
            })
            .collect(),
        orders: OrderStatus::default(),
    };
    let mut timers: Vec<Timer> = Vec::new();
    let mut stamp = 0u64;
    let mut add = |timers: &mut Vec<Timer>, left: i64, what: Due| {
        timers.push(Timer { left, stamp, what });
        stamp += 1;
    };
    let mut releases: Vec<_> = s.orders.values().collect();
    releases.sort_by(|a, b| a.release_time.total_cmp(&b.release_time).then(a.id.cmp(&b.id)));
    for o in releases {
        add(&mut timers, o.release_time as i64, Due::Request(o.id.to_string()));
    }
    let mut steps: BTreeMap<String, VecDeque<Due>> = BTreeMap::new();
    let mut busy: BTreeSet<String> = BTreeSet::new();
    let mut terminal: BTreeSet<String> = BTreeSet::new();
    let mut events = Vec::new();
    let mut last_dp: Option<i64> = None;
    let mut dp_wanted = false;
    let mut t: i64 = 0;
    let emit = |events: &mut Vec<RefEvent>, t: i64, kind: &'static str, order: Option<&str>, vehicle: Option<&str>| {
        events.push(RefEvent { time: t, kind, order: order.map(str::to_owned), vehicle: vehicle.map(str::to_owned) });
    };

    'run: loop {
        loop {
            if terminal.len() == s.orders.len() {
                break 'run;
            }
            let due = timers.iter().enumerate().filter(|(_, x)| x.left == 0).min_by_key(|(_, x)| x.stamp).map(|(i, _)| i);
            let mut want_dp = false;
            if let Some(i) = due {
                let what = timers.remove(i).what;
                state.time = t as f64;
                match what {
                    Due::Request(o) => {
                        state.orders.open.insert(o.as_str().into());
                        emit(&mut events, t, "order_request", Some(&o), None);
                        want_dp = trig(Trigger::OnOrderRequest);
                    }
                    Due::Departure(v) => {
                        let st = state.vehicles.get_mut(&VehicleId::from(v.as_str())).unwrap();
                        st.plan.origin.departure_time = Some(t as f64);
                        emit(&mut events, t, "vehicle_departure", None, Some(&v));
                        let d = travel(&st.plan.origin.location, &st.plan.next[0].location);
                        add(&mut timers, d, Due::Arrival(v));
                    }
                    Due::Arrival(v) => {
                        let st = state.vehicles.get_mut(&VehicleId::from(v.as_str())).unwrap();
                        let visit = st.plan.next.remove(0);
                        let parking = s.locations[&visit.location].parking_time as i64;
                        st.plan.origin = OriginVisit {
                            location: visit.location,
                            pickups: visit.pickups,
                            deliveries: visit.deliveries,
                            arrival_time: t as f64,
                            service_start: None,
                            service_finish: None,
                            departure_time: None,
                        };
                        emit(&mut events, t, "vehicle_arrival", None, Some(&v));
                        add(&mut timers, parking, Due::ServiceStart(v));
                        want_dp = trig(Trigger::OnVehicleArrival);
                    }
                    Due::ServiceStart(v) => {
                        let st = state.vehicles.get_mut(&VehicleId::from(v.as_str())).unwrap();
                        st.plan.origin.service_start = Some(t as f64);
                        let mut q: VecDeque<Due> = st.plan.origin.deliveries.iter().map(|o| Due::Delivery(v.clone(), o.to_string())).collect();
                        q.extend(st.plan.origin.pickups.iter().map(|o| Due::Pickup(v.clone(), o.to_string())));
                        q.push_back(Due::Finish(v.clone()));
                        emit(&mut events, t, "service_start", None, Some(&v));
                        let first = q.pop_front().unwrap();
                        let d = step_duration(s, &first);
                        steps.insert(v, q);
                        add(&mut timers, d, first);
                    }
                    Due::Pickup(v, o) => {
                        let st = state.vehicles.get_mut(&VehicleId::from(v.as_str())).unwrap();
                        st.load.push(o.as_str().into());
                        emit(&mut events, t, "order_pickup", Some(&o), Some(&v));
                        let next = steps.get_mut(&v).unwrap().pop_front().unwrap();
                        add(&mut timers, step_duration(s, &next), next);
                    }
                    Due::Delivery(v, o) => {
                        let st = state.vehicles.get_mut(&VehicleId::from(v.as_str())).unwrap();
                        st.load.retain(|x| x.as_str() != o);
                        state.orders.open.remove(&OrderId::from(o.as_str()));
                        terminal.insert(o.clone());
                        emit(&mut events, t, "order_delivery", Some(&o), Some(&v));
                        let next = steps.get_mut(&v).unwrap().pop_front().unwrap();
                        add(&mut timers, step_duration(s, &next), next);
                    }
                    Due::Finish(v) => {
                        let st = state.vehicles.get_mut(&VehicleId::from(v.as_str())).unwrap();
                        st.plan.origin.service_finish = Some(t as f64);
                        emit(&mut events, t, "service_finish", None, Some(&v));
                        want_dp = trig(Trigger::OnServiceFinish);
                        if st.plan.next.is_empty() {
                            busy.remove(&v);
                        } else {
                            add(&mut timers, 0, Due::Departure(v));
                        }
                    }
                }
            } else if dp_wanted {
                dp_wanted = false;
                last_dp = Some(t);
                state.time = t as f64;
                emit(&mut events, t, "decision_point", None, None);
                let action = policy.decide(&state, s).unwrap();
                if terminal.len() == s.orders.len() {
                    break 'run;
                }
                emit(&mut events, t, "decision_enforcement", None, None);
                for o in &action.rejected {
                    state.orders.open.remove(o);
                    terminal.insert(o.to_string());
                }
                for (v, r) in &action.routes {
                    state.vehicles.get_mut(v).unwrap().plan.next = r.next.clone();
                }
                for (v, st) in &state.vehicles {
                    if !busy.contains(v.as_str()) && !st.plan.next.is_empty() {
                        busy.insert(v.to_string());
                        add(&mut timers, 0, Due::Departure(v.to_string()));
                    }
                }
            } else {
                break;
            }
            if want_dp && last_dp != Some(t) {
                dp_wanted = true;
            }
        }
        if timers.is_empty() {
            break;
        }
        t += 1;
        assert!(t < 100_000, "reference simulation does not terminate");
        for x in &mut timers {
            x.left -= 1;
        }
    }
    (events, state)
}

fn step_duration(s: &Scenario, d: &Due) -> i64 {
    match d {
        Due::Pickup(_, o) => s.orders[&OrderId::from(o.as_str())].pickup_duration as i64,
        Due::Delivery(_, o) => s.orders[&OrderId::from(o.as_str())].delivery_duration as i64,
        _ => 0,
    }
}

pub fn engine_events(r: &SimulationResult) -> Vec<RefEvent> {
    r.history
        .events
        .iter()
        .map(|e| RefEvent {
            time: e.time as i64,
            kind: e.kind.name(),
            order: e.kind.order().map(|o| o.to_string()),
            vehicle: e.kind.vehicle().map(|v| v.to_string()),
        })
        .collect()
}

pub fn check_oracle_equivalence(instances: u64) -> Check {
    let mut events = 0;
    for seed in 0..instances {
        let s = random_desk_instance(seed);
        let r = Engine::new(&s, &mut GreedyPolicy).run().map_err(|e| format!("instance {seed}: {e}"))?;
        let got = engine_events(&r);
        ensure(r.history.events.iter().all(|e| e.time.fract() == 0.0), || format!("instance {seed}: fractional time"))?;
        let (want, final_state) = reference_run(&s, &mut GreedyPolicy);
        if got != want {
            let i = got.iter().zip(&want).position(|(a, b)| a != b).unwrap_or(got.len().min(want.len()));
            return Err(format!(
                "instance {seed}: event {i} differs: engine {:?}, reference {:?}",
                got.get(i),
                want.get(i)
            ));
        }
        ensure(r.final_state == final_state, || format!("instance {seed}: final states differ"))?;
        events += got.len();
    }
    Ok(format!("{instances} instances, {events} events identical"))
}

// ---------------------------------------------------------------------------
// Determinism.
// ---------------------------------------------------------------------------

pub fn trace_of(s: &Scenario) -> String {
    Engine::new(s, &mut GreedyPolicy).run().unwrap().history.to_trace()
}

pub fn check_determinism() -> Check {
    let mut n = 0;
    for (name, s) in shipped_scenarios() {
        for seed in [0, 1, 99] {
            let mut s = s.clone();
            s.config.seed = seed;
            let (a, b) = (trace_of(&s), trace_of(&s));
            ensure(a.as_bytes() == b.as_bytes(), || format!("{name} seed {seed}: traces differ"))?;
            n += 1;
        }
    }
    Ok(format!("{n} scenario/seed pairs byte-identical"))
}

// ---------------------------------------------------------------------------
// Case studies.
// ---------------------------------------------------------------------------

/// Visits where a vehicle queued for a port another vehicle was holding.
pub fn port_waits(s: &Scenario, r: &SimulationResult) -> usize {
    let mut n = 0;
    for (v, visits) in &r.history.visits {
        for x in visits.iter().skip(1) {
            let Some(cap) = s.locations[&x.location].port_capacity else { continue };
            let Some(st) = x.service_start else { continue };
            let gate = x.arrival + s.locations[&x.location].parking_time;
            if st <= gate {
                continue;
            }
            // Some other vehicle held the port from before `st` until `st`.
            let holders = r
                .history
                .visits
                .iter()
                .filter(|(w, _)| *w != v)
                .flat_map(|(_, ys)| ys.iter())
                .filter(|y| y.location == x.location)
                .filter(|y| y.service_start.is_some_and(|a| a < st) && y.service_finish.is_some_and(|b| b >= st))
                .count();
            if holders >= cap as usize {
                n += 1;
            }
        }
    }
    n
}

/// Deliveries made while another order was still loaded on top of the stack
/// order before it, on LIFO vehicles.
pub fn lifo_constrained_services(s: &Scenario, r: &SimulationResult) -> usize {
    let mut n = 0;
    for (e, before) in r.history.events.iter().zip(&r.states) {
        if let EventKind::OrderDelivery { vehicle, .. } = &e.kind {
            if s.vehicles[vehicle].loading_rule == LoadingRule::Lifo && before.vehicles[vehicle].load.len() >= 2 {
                n += 1;
            }
        }
    }
    n
}

/// Departure postponement expirations immediately followed by a decision
/// point at the same time.
pub fn self_imposed_decision_points(r: &SimulationResult) -> usize {
    r.history
        .events
        .windows(2)
        .filter(|w| {
            matches!(w[0].kind, EventKind::DeparturePostponementExpiration { .. })
                && w[1].kind == EventKind::DecisionPoint
                && w[0].time == w[1].time
        })
        .count()
}

/// Pickup visits whose service started later than arrival plus parking
/// because an order was not ready.
pub fn ready_time_waits(s: &Scenario, r: &SimulationResult) -> usize {
    let mut n = 0;
    for visits in r.history.visits.values() {
        for x in visits.iter().skip(1) {
            let gate = x.arrival + s.locations[&x.location].parking_time;
            if x.service_start.is_some_and(|st| st > gate) {
                n += 1;
            }
        }
    }
    n
}

pub fn check_case_studies() -> Check {
    use dvrp_engine::cases::Variant;
    let mut parts = vec![];
    for v in Variant::ALL {
        let s = v.build_default();
        let started = std::time::Instant::now();
        let r = run_greedy(&s);
        let secs = started.elapsed().as_secs_f64();
        ensure(secs < 10.0, || format!("{}: {secs:.2}s", v.name()))?;
        ensure(r.end_reason == dvrp_engine::history::EndReason::AllOrdersTerminal, || format!("{}: ended by {:?}", v.name(), r.end_reason))?;
        let summary = match v {
            Variant::Icaps => {
                let (w, l) = (port_waits(&s, &r), lifo_constrained_services(&s, &r));
                ensure(w >= 1 && l >= 1, || format!("icaps: {w} port waits, {l} lifo services"))?;
                format!("icaps {w} port waits/{l} lifo services")
            }
            Variant::Sddp => {
                let d = self_imposed_decision_points(&r);
                ensure(d >= 1, || "sddp: no self-imposed decision point".into())?;
                format!("sddp {d} self-imposed dps")
            }
            Variant::Rmd => {
                let w = ready_time_waits(&s, &r);
                ensure(w >= 1, || "rmd: no ready-time wait".into())?;
                format!("rmd {w} ready waits")
            }
        };
        parts.push(summary);
    }
    Ok(parts.join(", "))
}
