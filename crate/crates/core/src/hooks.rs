//! Customization points of the vehicle lifecycle and of decision points.
//!
//! Every method has a default implementation driven by the scenario
//! configuration, so [`DefaultHooks`] is an empty type. Override single
//! methods to model problem-specific behavior.

use std::collections::BTreeMap;

use rand::RngCore;

use crate::domain::{Action, Duration, LocationId, Order, OrderId, State, Time, VehicleId, VehiclePhase};
use crate::feasibility::Violation;
use crate::scenario::{Scenario, ScenarioError, Trigger};

/// Read-only view handed to hooks.
pub struct HookContext<'a> {
    pub scenario: &'a Scenario,
    pub state: &'a State,
    /// Ready times of released orders, where known.
    pub ready_times: &'a BTreeMap<OrderId, Time>,
}

impl HookContext<'_> {
    pub fn now(&self) -> Time {
        self.state.time
    }

    /// Some vehicle is at `location` and not traveling.
    pub fn vehicle_waiting_at(&self, location: &LocationId) -> bool {
        self.state
            .vehicles
            .values()
            .any(|v| v.phase() != VehiclePhase::EnRoute && v.plan.origin.location == *location)
    }
}

pub trait Hooks {
    /// Duration of the trip that `vehicle` starts now. The default adds the
    /// configured random travel delay to the metric's travel time.
    fn travel_time(
        &mut self,
        ctx: &HookContext,
        rng: &mut dyn RngCore,
        vehicle: &VehicleId,
        from: &LocationId,
        to: &LocationId,
    ) -> Result<Duration, ScenarioError> {
        let base = ctx.scenario.travel_time(vehicle, from, to, ctx.now())?;
        let delay = ctx.scenario.config.travel_delay.map_or(0.0, |s| s.sample(rng));
        Ok(base + delay)
    }

    /// Ready time of an order that is requested now; `None` if it is ready
    /// right away. The default combines the order's own ready time with the
    /// configured random preparation delay.
    fn ready_time(&mut self, ctx: &HookContext, rng: &mut dyn RngCore, order: &Order) -> Option<Time> {
        let drawn = ctx
            .scenario
            .config
            .ready_delay
            .map(|s| order.release_time + s.sample(rng));
        match (order.ready_time, drawn) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    }

    /// Earliest service start of a vehicle that just arrived at its origin
    /// visit: parking time, earliest start times of the orders, and ready
    /// times of the orders to pick up.
    fn service_gate(&self, ctx: &HookContext, vehicle: &VehicleId) -> Time {
        let st = &ctx.state.vehicles[vehicle];
        let o = &st.plan.origin;
        let parking = ctx
            .scenario
            .locations
            .get(&o.location)
            .map_or(0.0, |l| l.parking_time);
        let mut gate = o.arrival_time + parking;
        for id in &o.deliveries {
            if let Some(t) = ctx.scenario.order(id).and_then(|x| x.earliest_delivery_start) {
                gate = gate.max(t);
            }
        }
        for id in &o.pickups {
            if let Some(t) = ctx.scenario.order(id).and_then(|x| x.earliest_pickup_start) {
                gate = gate.max(t);
            }
            if let Some(&t) = ctx.ready_times.get(id) {
                gate = gate.max(t);
            }
        }
        gate.max(ctx.now())
    }

    /// Order-independent delay at the beginning of a service.
    fn dock_approach(&self, ctx: &HookContext, vehicle: &VehicleId) -> Duration {
        let loc = &ctx.state.vehicles[vehicle].plan.origin.location;
        ctx.scenario
            .locations
            .get(loc)
            .map_or(0.0, |l| l.dock_approach_time)
    }

    /// Whether the request of `order` imposes a decision point.
    fn on_order_request(&mut self, ctx: &HookContext, _order: &OrderId) -> bool {
        ctx.scenario.config.triggers.iter().any(|t| match t {
            Trigger::OnOrderRequest => true,
            Trigger::OnOrderRequestWhenWaitingAt(l) => ctx.vehicle_waiting_at(l),
            _ => false,
        })
    }

    fn on_order_cancellation(&mut self, ctx: &HookContext, _order: &OrderId) -> bool {
        ctx.scenario.config.cancellation_triggers()
    }

    fn on_order_postponement_expired(&mut self, _ctx: &HookContext, _order: &OrderId) -> bool {
        true
    }

    fn on_vehicle_arrival(&mut self, ctx: &HookContext, vehicle: &VehicleId) -> bool {
        let here = &ctx.state.vehicles[vehicle].plan.origin.location;
        ctx.scenario.config.triggers.iter().any(|t| match t {
            Trigger::OnVehicleArrival => true,
            Trigger::OnVehicleArrivalAt(l) => l == here,
            _ => false,
        })
    }

    fn on_service_finish(&mut self, ctx: &HookContext, _vehicle: &VehicleId) -> bool {
        ctx.scenario.config.has_trigger(&Trigger::OnServiceFinish)
    }

    /// Whether the end of a departure postponement imposes a decision point;
    /// if so the vehicle waits for the resulting decision before departing.
    fn on_departure_postponement_expired(&mut self, ctx: &HookContext, _vehicle: &VehicleId) -> bool {
        ctx.scenario.config.dpe_imposes_decision_point
    }

    /// Extra action checks on top of the built-in ones.
    fn check_action(&self, _ctx: &HookContext, _action: &Action) -> Vec<Violation> {
        Vec::new()
    }
}

/// Hooks that follow the scenario configuration.
#[derive(Clone, Copy, Debug, Default)]
pub struct DefaultHooks;

impl Hooks for DefaultHooks {}
