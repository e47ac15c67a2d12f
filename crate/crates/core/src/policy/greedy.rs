//! Baseline policy: cheapest insertion.
//!
//! Every open order is accepted. Orders that are not yet in any plan are
//! inserted one by one, in id order, as a new pickup visit followed by a new
//! delivery visit at the positions that increase the planned travel distance
//! the least. Candidates are compared by (added distance, vehicle id, pickup
//! position, delivery position). Only feasible plans are considered: the
//! origin visit and the destination of a vehicle en route never change, and
//! capacity and LIFO rules hold. An order without any feasible insertion is
//! rejected.

use std::collections::{BTreeMap, BTreeSet};

use crate::domain::{Action, LocationId, OrderId, RouteUpdate, State, VehiclePhase, VehicleStatus, Visit};
use crate::feasibility::check_vehicle;
use crate::policy::{Policy, PolicyError};
use crate::scenario::{Rule, Scenario};

#[derive(Clone, Copy, Debug, Default)]
pub struct GreedyPolicy;

impl Policy for GreedyPolicy {
    fn decide(&mut self, state: &State, scenario: &Scenario) -> Result<Action, PolicyError> {
        Ok(greedy_action(state, scenario))
    }
}

/// Planned distance from the origin visit through `next`; `None` if some leg
/// is undefined.
pub fn plan_distance(scenario: &Scenario, origin: &LocationId, next: &[Visit]) -> Option<f64> {
    let mut at = origin;
    let mut total = 0.0;
    for v in next {
        total += scenario.distance(at, &v.location).ok()?;
        at = &v.location;
    }
    Some(total)
}

/// Index of the first position where new visits may be inserted.
fn first_free(status: &VehicleStatus) -> usize {
    usize::from(status.phase() == VehiclePhase::EnRoute)
}

fn is_return_visit(v: &Visit, home: &LocationId) -> bool {
    v.location == *home && v.pickups.is_empty() && v.deliveries.is_empty()
}

pub fn greedy_action(state: &State, scenario: &Scenario) -> Action {
    let params = &scenario.baseline;
    let fixed_depot = scenario.config.rules.iter().find_map(|r| match r {
        Rule::RouteFixing { depot } => Some(depot),
        _ => None,
    });
    let assigned: BTreeSet<OrderId> = state.assigned_orders().into_iter().cloned().collect();

    let mut plans: BTreeMap<_, Vec<Visit>> = BTreeMap::new();
    for (vid, status) in &state.vehicles {
        let mut next = status.plan.next.clone();
        if let Some(home) = &params.return_to {
            if next.len() > first_free(status) && next.last().is_some_and(|v| is_return_visit(v, home)) {
                next.pop();
            }
        }
        plans.insert(vid.clone(), next);
    }

    let mut action = Action::default();
    let mut changed = BTreeSet::new();
    for order in state.orders.open.iter().filter(|o| !assigned.contains(*o)) {
        let Some(info) = scenario.order(order) else {
            action.rejected.insert(order.clone());
            continue;
        };
        let mut best: Option<(f64, usize, usize, &crate::domain::VehicleId, Vec<Visit>)> = None;
        for (vid, status) in &state.vehicles {
            if let Some(depot) = fixed_depot {
                let at_depot = status.plan.origin.location == *depot
                    && status.plan.origin.departure_time.is_none();
                if !at_depot {
                    continue;
                }
            }
            let base = &plans[vid];
            let origin = &status.plan.origin.location;
            let Some(base_cost) = plan_distance(scenario, origin, base) else {
                continue;
            };
            for i in first_free(status)..=base.len() {
                for j in i..=base.len() {
                    let mut cand = base.clone();
                    cand.insert(j, Visit::new(info.delivery_location.as_str()).deliver(order.as_str()));
                    cand.insert(i, Visit::new(info.pickup_location.as_str()).pickup(order.as_str()));
                    let Some(cost) = plan_distance(scenario, origin, &cand) else {
                        continue;
                    };
                    let delta = cost - base_cost;
                    if best.as_ref().is_some_and(|b| b.0 <= delta) {
                        continue;
                    }
                    let mut hypo = status.clone();
                    hypo.plan.next = cand.clone();
                    let mut violations = Vec::new();
                    check_vehicle(vid, &hypo, &state.orders.open, scenario, &mut violations);
                    if violations.is_empty() {
                        best = Some((delta, i, j, vid, cand));
                    }
                }
            }
        }
        match best {
            Some((_, _, _, vid, plan)) => {
                log::debug!("greedy: {order} -> {vid}");
                plans.insert(vid.clone(), plan);
                changed.insert(vid.clone());
            }
            None => {
                log::info!("greedy: no feasible insertion for {order}, rejecting");
                action.rejected.insert(order.clone());
            }
        }
    }
    action.accepted = state
        .orders
        .open
        .iter()
        .filter(|o| !action.rejected.contains(*o))
        .cloned()
        .collect();

    for vid in changed {
        let status = &state.vehicles[&vid];
        let mut next = plans.remove(&vid).expect("planned vehicle");
        if let Some(wait) = &params.depot_wait {
            let at_depot = status.phase() != VehiclePhase::EnRoute && status.plan.origin.location == wait.location;
            if at_depot {
                let start = match status.plan.next.first() {
                    Some(v) => v.earliest_start,
                    None => Some(state.time + wait.duration),
                };
                for v in &mut next {
                    v.earliest_start = None;
                }
                if let Some(first) = next.first_mut() {
                    first.earliest_start = start;
                }
            }
        }
        if let Some(home) = &params.return_to {
            if !next.last().is_some_and(|v| is_return_visit(v, home)) {
                next.push(Visit::new(home.as_str()));
            }
        }
        action.routes.insert(vid, RouteUpdate { origin: None, next });
    }
    action
}
