//! Action feasibility and the post-decision transition.

use std::collections::BTreeMap;

use crate::domain::{Action, OrderId, State, VehicleId};
use crate::feasibility::{validate_state, Violation};
use crate::scenario::{Rule, Scenario};

/// Applies the route and order decisions of `action` to `state`.
///
/// Rejected orders leave the open set. A provided origin update replaces the
/// origin lists and resets the service and departure timestamps; next visits
/// are replaced wholesale. The canceled list is left alone (the enclosing
/// decision enforcement clears it).
pub fn apply_action(state: &mut State, action: &Action) {
    for order in &action.rejected {
        state.orders.open.remove(order);
    }
    for (vid, update) in &action.routes {
        let Some(v) = state.vehicles.get_mut(vid) else {
            continue;
        };
        if let Some(origin) = &update.origin {
            let o = &mut v.plan.origin;
            o.pickups = origin.pickups.clone();
            o.deliveries = origin.deliveries.clone();
            o.service_start = None;
            o.service_finish = None;
            o.departure_time = None;
        }
        v.plan.next = update.next.clone();
    }
}

/// Returns the post-decision state of `action` in `state`.
pub fn post_decision_state(state: &State, action: &Action) -> State {
    let mut next = state.clone();
    next.orders.canceled.clear();
    apply_action(&mut next, action);
    next
}

/// Checks `action` against `state`: one decision per open order, future
/// postponement times, immutable started origin visits, no diversion of
/// vehicles en route, the scenario's extra rules, and feasibility of the
/// post-decision state.
pub fn validate_action(state: &State, action: &Action, scenario: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut decided: BTreeMap<&OrderId, usize> = BTreeMap::new();
    for order in action
        .accepted
        .iter()
        .chain(&action.rejected)
        .chain(action.postponed.keys())
    {
        *decided.entry(order).or_default() += 1;
    }
    for (&order, &n) in &decided {
        if !state.orders.open.contains(order) {
            out.push(Violation::DecisionOnClosedOrder {
                order: order.clone(),
            });
        } else if n > 1 {
            out.push(Violation::ConflictingDecision {
                order: order.clone(),
            });
        }
    }
    for order in &state.orders.open {
        if !decided.contains_key(order) {
            out.push(Violation::MissingDecision {
                order: order.clone(),
            });
        }
    }
    for (order, &until) in &action.postponed {
        if !(until > state.time) {
            out.push(Violation::PostponementNotInFuture {
                order: order.clone(),
                until,
                now: state.time,
            });
        }
    }

    for (vid, update) in &action.routes {
        let Some(v) = state.vehicles.get(vid) else {
            out.push(Violation::UnknownRouteVehicle {
                vehicle: vid.clone(),
            });
            continue;
        };
        let o = &v.plan.origin;
        if let Some(origin) = &update.origin {
            if o.service_start.is_some() {
                out.push(Violation::OriginLocked {
                    vehicle: vid.clone(),
                });
            } else if origin.location != o.location {
                out.push(Violation::OriginRelocated {
                    vehicle: vid.clone(),
                    expected: o.location.clone(),
                    actual: origin.location.clone(),
                });
            }
        }
        if o.departure_time.is_some() {
            if let Some(dest) = v.plan.next.first() {
                let actual = update.next.first().map(|n| &n.location);
                if actual != Some(&dest.location) {
                    out.push(Violation::Diversion {
                        vehicle: vid.clone(),
                        expected: dest.location.clone(),
                        actual: actual.map_or("no destination".to_owned(), |l| format!("`{l}`")),
                    });
                }
            }
        }
    }

    let post = post_decision_state(state, action);
    out.extend(check_rules(&scenario.config.rules, state, &post, action));
    out.extend(validate_state(&post, scenario));
    out
}

/// Problem-specific restrictions on route updates.
pub fn check_rules(rules: &[Rule], state: &State, post: &State, action: &Action) -> Vec<Violation> {
    let mut out = Vec::new();
    for rule in rules {
        match rule {
            Rule::RouteFixing { depot } => {
                for (vid, update) in &action.routes {
                    let Some(v) = state.vehicles.get(vid) else {
                        continue;
                    };
                    let away = v.plan.origin.location != *depot
                        || v.plan.origin.departure_time.is_some();
                    let changed = update.origin.is_some() || update.next != v.plan.next;
                    if away && changed {
                        out.push(Violation::RouteFixed {
                            vehicle: vid.clone(),
                        });
                    }
                }
            }
            Rule::IrrevocableAssignment => {
                let owner = |s: &State| -> BTreeMap<OrderId, VehicleId> {
                    let mut m = BTreeMap::new();
                    for (vid, v) in &s.vehicles {
                        for o in v.assigned_orders() {
                            m.entry(o.clone()).or_insert_with(|| vid.clone());
                        }
                    }
                    m
                };
                let before = owner(state);
                for (vid, v) in &post.vehicles {
                    for order in v.assigned_orders() {
                        if let Some(from) = before.get(order) {
                            if from != vid {
                                out.push(Violation::AssignmentChanged {
                                    order: order.clone(),
                                    from: from.clone(),
                                    to: format!("`{vid}`"),
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    out
}
