//! The transition function: how a single event changes the state.
//!
//! Only the fields tied to the event kind change; everything else is copied.
//! Events that cannot apply to the state (a departure while en route, a pickup
//! of an order not in the origin visit, ...) are errors, since they can only
//! come from an induction bug or a tampered trace.

use thiserror::Error;

use crate::domain::{Action, LoadingRule, OriginVisit, State, Time, VehiclePhase, VehicleStatus};
use crate::event::{Event, EventKind};
use crate::routing::apply_action;
use crate::scenario::Scenario;

#[derive(Debug, Error, PartialEq)]
pub enum TransitionError {
    #[error("{event} at {time} is not applicable: {reason}")]
    Inapplicable {
        event: &'static str,
        time: Time,
        reason: String,
    },
    #[error("event at {time} precedes the state time {now}")]
    TimeRegression { time: Time, now: Time },
}

fn inapplicable(event: &Event, reason: impl Into<String>) -> TransitionError {
    TransitionError::Inapplicable {
        event: event.kind.name(),
        time: event.time,
        reason: reason.into(),
    }
}

/// Returns the successor of `state` under `event`.
///
/// `action` must be the decision referenced by a decision enforcement event.
/// With `strict`, a delivery that is not on top of a LIFO vehicle's stack is
/// an error.
pub fn transition(
    state: &State,
    event: &Event,
    scenario: &Scenario,
    action: Option<&Action>,
    strict: bool,
) -> Result<State, TransitionError> {
    let mut next = state.clone();
    apply_event(&mut next, event, scenario, action, strict)?;
    Ok(next)
}

fn vehicle_of<'s>(state: &'s mut State, event: &Event) -> Result<&'s mut VehicleStatus, TransitionError> {
    let id = event.kind.vehicle().expect("vehicle event");
    match state.vehicles.get_mut(id) {
        Some(v) => Ok(v),
        None => Err(inapplicable(event, format!("unknown vehicle `{id}`"))),
    }
}

/// In-place form of [`transition`]. On error the state may be partially
/// updated (only its time).
pub fn apply_event(
    state: &mut State,
    event: &Event,
    scenario: &Scenario,
    action: Option<&Action>,
    strict: bool,
) -> Result<(), TransitionError> {
    if event.time < state.time {
        return Err(TransitionError::TimeRegression {
            time: event.time,
            now: state.time,
        });
    }
    let t = event.time;
    match &event.kind {
        EventKind::OrderRequest { order } => {
            if scenario.order(order).is_none() {
                return Err(inapplicable(event, format!("unknown order `{order}`")));
            }
            if state.orders.open.contains(order) {
                return Err(inapplicable(event, format!("order `{order}` is already open")));
            }
            state.orders.open.insert(order.clone());
        }
        EventKind::OrderCancellation { order } => {
            // Orders already loaded or being loaded can no longer be canceled;
            // neither can closed ones. Such cancellations change nothing.
            let loading = state.vehicles.values().any(|v| {
                v.load.contains(order)
                    || (v.plan.origin.service_start.is_some()
                        && v.plan.origin.pickups.contains(order))
            });
            if state.orders.open.contains(order) && !loading {
                state.orders.open.remove(order);
                state.orders.canceled.insert(order.clone());
                for v in state.vehicles.values_mut() {
                    if v.plan.origin.service_start.is_none() {
                        v.plan.origin.pickups.retain(|o| o != order);
                        v.plan.origin.deliveries.retain(|o| o != order);
                    }
                    for visit in &mut v.plan.next {
                        visit.pickups.retain(|o| o != order);
                        visit.deliveries.retain(|o| o != order);
                    }
                }
            }
        }
        EventKind::OrderPickup { order, .. } => {
            let info = scenario
                .order(order)
                .ok_or_else(|| inapplicable(event, format!("unknown order `{order}`")))?;
            let open = state.orders.open.contains(order);
            let v = vehicle_of(state, event)?;
            if v.phase() != VehiclePhase::UnderService {
                return Err(inapplicable(event, "vehicle is not under service"));
            }
            if v.plan.origin.location != info.pickup_location {
                return Err(inapplicable(
                    event,
                    format!(
                        "location matching: vehicle is at `{}`, pickup location of `{order}` is `{}`",
                        v.plan.origin.location, info.pickup_location
                    ),
                ));
            }
            if !v.plan.origin.pickups.contains(order) {
                return Err(inapplicable(event, format!("`{order}` is not in the pickup list")));
            }
            if !open || v.load.contains(order) {
                return Err(inapplicable(event, format!("`{order}` is closed or already loaded")));
            }
            v.load.push(order.clone());
        }
        EventKind::OrderDelivery { order, vehicle: vid } => {
            let info = scenario
                .order(order)
                .ok_or_else(|| inapplicable(event, format!("unknown order `{order}`")))?;
            let lifo = scenario
                .vehicles
                .get(vid)
                .is_some_and(|v| v.loading_rule == LoadingRule::Lifo);
            let v = vehicle_of(state, event)?;
            if v.phase() != VehiclePhase::UnderService {
                return Err(inapplicable(event, "vehicle is not under service"));
            }
            if v.plan.origin.location != info.delivery_location {
                return Err(inapplicable(
                    event,
                    format!(
                        "location matching: vehicle is at `{}`, delivery location of `{order}` is `{}`",
                        v.plan.origin.location, info.delivery_location
                    ),
                ));
            }
            if !v.plan.origin.deliveries.contains(order) {
                return Err(inapplicable(event, format!("`{order}` is not in the delivery list")));
            }
            let Some(pos) = v.load.iter().position(|o| o == order) else {
                return Err(inapplicable(event, format!("`{order}` is not loaded")));
            };
            if strict && lifo && pos + 1 != v.load.len() {
                return Err(inapplicable(
                    event,
                    format!("lifo: `{order}` is not on top of the load"),
                ));
            }
            v.load.remove(pos);
            state.orders.open.remove(order);
        }
        EventKind::VehicleArrival { .. } => {
            let v = vehicle_of(state, event)?;
            if v.phase() != VehiclePhase::EnRoute || v.plan.next.is_empty() {
                return Err(inapplicable(event, "vehicle is not en route"));
            }
            let visit = v.plan.next.remove(0);
            v.plan.origin = OriginVisit::arrived(visit, t);
        }
        EventKind::ServiceStart { .. } => {
            let v = vehicle_of(state, event)?;
            if v.phase() != VehiclePhase::WaitingForService {
                return Err(inapplicable(event, "vehicle is not waiting for service"));
            }
            v.plan.origin.service_start = Some(t);
        }
        EventKind::ServiceFinish { .. } => {
            let v = vehicle_of(state, event)?;
            if v.phase() != VehiclePhase::UnderService {
                return Err(inapplicable(event, "vehicle is not under service"));
            }
            v.plan.origin.service_finish = Some(t);
        }
        EventKind::VehicleDeparture { .. } => {
            let v = vehicle_of(state, event)?;
            if v.phase() != VehiclePhase::Idle {
                return Err(inapplicable(event, "vehicle is not idle"));
            }
            if v.plan.next.is_empty() {
                return Err(inapplicable(event, "vehicle has no next visit"));
            }
            v.plan.origin.departure_time = Some(t);
        }
        EventKind::DecisionEnforcement { decision } => {
            let action = action.ok_or_else(|| {
                inapplicable(event, format!("decision {decision} is not available"))
            })?;
            state.orders.canceled.clear();
            apply_action(state, action);
        }
        EventKind::OrderPostponementExpiration { .. }
        | EventKind::DeparturePostponementExpiration { .. }
        | EventKind::DecisionPoint
        | EventKind::ProcessWake { .. } => {}
    }
    state.time = t;
    Ok(())
}
