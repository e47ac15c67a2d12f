//! The simulation loop.
//!
//! Pop the next event, apply the transition, then induce follow-up events:
//! vehicle lifecycle steps, decision points and decision enforcements. The
//! loop stops when the end condition holds or the queue runs dry.

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::domain::{initial_state, Action, LocationId, OrderId, State, Time, VehicleId};
use crate::event::{Event, EventKind, EventQueue, QueueError};
use crate::execution::{DockResource, Execution, ExecutionPhase, InterruptRefused};
use crate::feasibility::{validate_state, Violation};
use crate::history::{EndReason, RunHistory};
use crate::hooks::{DefaultHooks, HookContext, Hooks};
use crate::policy::{Policy, PolicyError};
use crate::process::{PeriodicDecisions, Process, ProcessContext};
use crate::routing::validate_action;
use crate::scenario::{EndCondition, PortRelease, Scenario, ScenarioError};
use crate::transition::{apply_event, TransitionError};

fn list(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("event {index}: {source}")]
    Transition {
        index: usize,
        #[source]
        source: TransitionError,
    },
    #[error("infeasible state after {event} at {time}: {}", list(.violations))]
    InfeasibleState {
        event: &'static str,
        time: Time,
        violations: Vec<Violation>,
    },
    #[error("infeasible action (decision {decision}) at {time}: {}", list(.violations))]
    InfeasibleAction {
        decision: usize,
        time: Time,
        violations: Vec<Violation>,
    },
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Queue(#[from] QueueError),
    #[error(transparent)]
    Interrupt(#[from] InterruptRefused),
}

impl EngineError {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            EngineError::Policy(_) => 2,
            EngineError::Scenario(_) => 3,
            _ => 1,
        }
    }
}

/// Outcome of a decision point request.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Routing {
    Scheduled,
    /// A decision point at this time is already queued.
    Queued,
    /// A decision point at this time already took place.
    AlreadyHeld,
}

#[derive(Clone, Debug)]
pub struct SimulationResult {
    pub final_state: State,
    pub history: RunHistory,
    pub end_reason: EndReason,
    /// Initial state followed by the state after every event, when recording
    /// was requested.
    pub states: Vec<State>,
    /// Number of state and action feasibility checks that were run.
    pub states_checked: usize,
    pub actions_checked: usize,
}

struct Runtime {
    queue: EventQueue,
    state: State,
    exec: BTreeMap<VehicleId, Execution>,
    docks: BTreeMap<LocationId, DockResource>,
    rng: ChaCha8Rng,
    ready: BTreeMap<OrderId, Time>,
    last_dp: Option<Time>,
    terminal: BTreeSet<OrderId>,
    history: RunHistory,
    states: Vec<State>,
    states_checked: usize,
    actions_checked: usize,
}

pub struct Engine<'a> {
    scenario: &'a Scenario,
    policy: &'a mut dyn Policy,
    hooks: Box<dyn Hooks + 'a>,
    processes: Vec<Box<dyn Process + 'a>>,
    strict: bool,
    record_states: bool,
    end_predicate: Option<Box<dyn FnMut(&State) -> bool + 'a>>,
    rt: Runtime,
}

macro_rules! hook_ctx {
    ($self:ident) => {
        HookContext {
            scenario: $self.scenario,
            state: &$self.rt.state,
            ready_times: &$self.rt.ready,
        }
    };
}

impl<'a> Engine<'a> {
    pub fn new(scenario: &'a Scenario, policy: &'a mut dyn Policy) -> Self {
        let mut processes: Vec<Box<dyn Process + 'a>> = Vec::new();
        if let Some(interval) = scenario.config.periodic_interval() {
            processes.push(Box::new(PeriodicDecisions { interval }));
        }
        Self {
            scenario,
            policy,
            hooks: Box::new(DefaultHooks),
            processes,
            strict: scenario.config.strict,
            record_states: false,
            end_predicate: None,
            rt: Runtime {
                queue: EventQueue::new(),
                state: initial_state(scenario.vehicles.values()),
                exec: scenario
                    .vehicles
                    .keys()
                    .map(|v| (v.clone(), Execution::default()))
                    .collect(),
                docks: scenario
                    .locations
                    .values()
                    .filter_map(|l| l.port_capacity.map(|c| (l.id.clone(), DockResource::new(c))))
                    .collect(),
                rng: ChaCha8Rng::seed_from_u64(scenario.config.seed),
                ready: BTreeMap::new(),
                last_dp: None,
                terminal: BTreeSet::new(),
                history: RunHistory::new(scenario),
                states: Vec::new(),
                states_checked: 0,
                actions_checked: 0,
            },
        }
    }

    pub fn hooks(mut self, hooks: impl Hooks + 'a) -> Self {
        self.hooks = Box::new(hooks);
        self
    }

    /// Adds a custom process, first resumed at time 0.
    pub fn process(mut self, process: impl Process + 'a) -> Self {
        self.processes.push(Box::new(process));
        self
    }

    /// Overrides the scenario's strict flag.
    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    pub fn record_states(mut self, yes: bool) -> Self {
        self.record_states = yes;
        self
    }

    /// Additional end condition, checked before every event.
    pub fn end_when(mut self, predicate: impl FnMut(&State) -> bool + 'a) -> Self {
        self.end_predicate = Some(Box::new(predicate));
        self
    }

    pub fn run(mut self) -> Result<SimulationResult, EngineError> {
        self.init()?;
        let reason = loop {
            if self.rt.terminal.len() == self.scenario.orders.len()
                && self.scenario.config.end_condition == EndCondition::AllOrdersTerminal
            {
                break EndReason::AllOrdersTerminal;
            }
            if let Some(pred) = &mut self.end_predicate {
                if pred(&self.rt.state) {
                    break EndReason::Predicate;
                }
            }
            let Some(next) = self.rt.queue.peek() else {
                break EndReason::QueueEmpty;
            };
            if let EndCondition::Time(limit) = self.scenario.config.end_condition {
                if next.time > limit {
                    break EndReason::TimeLimit;
                }
            }
            let event = self.rt.queue.pop().expect("peeked");
            self.step(event)?;
        };
        self.policy.finish()?;
        let rt = self.rt;
        let mut history = rt.history;
        history.finish(rt.state.time, reason);
        Ok(SimulationResult {
            final_state: rt.state,
            history,
            end_reason: reason,
            states: rt.states,
            states_checked: rt.states_checked,
            actions_checked: rt.actions_checked,
        })
    }

    fn init(&mut self) -> Result<(), EngineError> {
        let mut orders: Vec<_> = self.scenario.orders.values().collect();
        orders.sort_by(|a, b| a.release_time.total_cmp(&b.release_time).then(a.id.cmp(&b.id)));
        for o in &orders {
            self.schedule(o.release_time, EventKind::OrderRequest { order: o.id.clone() })?;
        }
        let mut cancels: Vec<_> = orders.iter().filter_map(|o| o.cancel_time.map(|t| (t, o))).collect();
        cancels.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.id.cmp(&b.1.id)));
        for (t, o) in cancels {
            self.schedule(t, EventKind::OrderCancellation { order: o.id.clone() })?;
        }
        for process in 0..self.processes.len() {
            self.schedule(0.0, EventKind::ProcessWake { process })?;
        }
        if self.record_states {
            self.rt.states.push(self.rt.state.clone());
        }
        Ok(())
    }

    fn now(&self) -> Time {
        self.rt.state.time
    }

    fn schedule(&mut self, time: Time, kind: EventKind) -> Result<Option<u64>, EngineError> {
        Ok(self.rt.queue.schedule(time, kind)?)
    }

    fn step(&mut self, event: Event) -> Result<(), EngineError> {
        let index = self.rt.history.events.len();
        let mut enforced: Option<(Action, bool)> = None;
        if let EventKind::DecisionEnforcement { decision } = event.kind {
            self.rt.state.time = event.time;
            let action = self.rt.history.decisions[decision].action.clone();
            let mut violations = validate_action(&self.rt.state, &action, self.scenario);
            violations.extend(self.hooks.check_action(&hook_ctx!(self), &action));
            self.rt.actions_checked += 1;
            if violations.is_empty() {
                enforced = Some((action, true));
            } else if self.strict {
                return Err(EngineError::InfeasibleAction {
                    decision,
                    time: event.time,
                    violations,
                });
            } else {
                let msg = format!("decision {decision} skipped: {}", list(&violations));
                self.rt.history.warn(event.time, msg);
                enforced = Some((Action::default(), false));
            }
        }

        apply_event(
            &mut self.rt.state,
            &event,
            self.scenario,
            enforced.as_ref().map(|(a, _)| a),
            self.strict,
        )
        .map_err(|source| EngineError::Transition { index, source })?;

        match &event.kind {
            EventKind::OrderDelivery { order, .. } => {
                self.rt.terminal.insert(order.clone());
            }
            EventKind::OrderCancellation { order } if self.rt.state.orders.canceled.contains(order) => {
                self.rt.terminal.insert(order.clone());
            }
            EventKind::DecisionEnforcement { .. } => {
                let (action, _) = enforced.as_ref().expect("enforcement has an action");
                self.rt.terminal.extend(action.rejected.iter().cloned());
            }
            _ => {}
        }
        self.rt.history.record_event(&event, &self.rt.state);

        let violations = validate_state(&self.rt.state, self.scenario);
        self.rt.states_checked += 1;
        if !violations.is_empty() {
            if self.strict {
                return Err(EngineError::InfeasibleState {
                    event: event.kind.name(),
                    time: event.time,
                    violations,
                });
            }
            let msg = format!("infeasible state after {}: {}", event.kind.name(), list(&violations));
            self.rt.history.warn(event.time, msg);
        }

        self.induce(&event, enforced)?;
        if self.record_states {
            self.rt.states.push(self.rt.state.clone());
        }
        Ok(())
    }

    fn induce(&mut self, event: &Event, enforced: Option<(Action, bool)>) -> Result<(), EngineError> {
        let now = event.time;
        match &event.kind {
            EventKind::OrderRequest { order } => {
                let info = &self.scenario.orders[order];
                let ctx = hook_ctx!(self);
                if let Some(t) = self.hooks.ready_time(&ctx, &mut self.rt.rng, info) {
                    self.rt.ready.insert(order.clone(), t);
                }
                if self.hooks.on_order_request(&hook_ctx!(self), order) {
                    self.request_routing()?;
                }
            }
            EventKind::OrderCancellation { order } => {
                if self.rt.state.orders.canceled.contains(order) {
                    let waiting: Vec<VehicleId> = self
                        .rt
                        .exec
                        .iter()
                        .filter(|(_, e)| e.phase == ExecutionPhase::PreService)
                        .map(|(v, _)| v.clone())
                        .collect();
                    for v in waiting {
                        self.refresh_pre_service(&v)?;
                    }
                    if self.hooks.on_order_cancellation(&hook_ctx!(self), order) {
                        self.request_routing()?;
                    }
                }
            }
            EventKind::OrderPickup { vehicle, .. } | EventKind::OrderDelivery { vehicle, .. } => {
                self.next_service_step(vehicle, 0.0)?;
            }
            EventKind::OrderPostponementExpiration { order } => {
                if self.hooks.on_order_postponement_expired(&hook_ctx!(self), order) {
                    self.request_routing()?;
                }
            }
            EventKind::VehicleArrival { vehicle } => {
                self.pre_service(vehicle)?;
                if self.hooks.on_vehicle_arrival(&hook_ctx!(self), vehicle) {
                    self.request_routing()?;
                }
            }
            EventKind::VehicleDeparture { vehicle } => {
                if self.scenario.config.port_release == PortRelease::Departure {
                    let here = self.rt.state.vehicles[vehicle].plan.origin.location.clone();
                    self.release_port(vehicle, &here)?;
                }
                self.travel(vehicle)?;
            }
            EventKind::ServiceStart { vehicle } => {
                self.begin_service(vehicle)?;
            }
            EventKind::ServiceFinish { vehicle } => {
                let exec = self.exec(vehicle);
                exec.phase = ExecutionPhase::Idle;
                exec.pending = None;
                if self.scenario.config.port_release == PortRelease::ServiceFinish {
                    let here = self.rt.state.vehicles[vehicle].plan.origin.location.clone();
                    self.release_port(vehicle, &here)?;
                }
                if self.hooks.on_service_finish(&hook_ctx!(self), vehicle) {
                    self.request_routing()?;
                }
                self.start_execution(vehicle)?;
            }
            EventKind::DeparturePostponementExpiration { vehicle } => {
                self.exec(vehicle).pending = None;
                let decide = self.hooks.on_departure_postponement_expired(&hook_ctx!(self), vehicle);
                // The vehicle waits for the decision unless the decision point
                // of this instant is already over.
                if decide && self.request_routing()? != Routing::AlreadyHeld {
                    self.exec(vehicle).phase = ExecutionPhase::Idle;
                } else {
                    let seq = self.schedule(now, EventKind::VehicleDeparture { vehicle: vehicle.clone() })?;
                    let exec = self.exec(vehicle);
                    exec.phase = ExecutionPhase::PreDeparture;
                    exec.pending = seq;
                }
            }
            EventKind::DecisionPoint => {
                self.routing_start()?;
                self.rt.last_dp = Some(now);
                let action = self.policy.decide(&self.rt.state, self.scenario)?;
                let decision = self.rt.history.record_decision(now, &action);
                let at = now + self.scenario.config.decision_latency;
                self.schedule(at, EventKind::DecisionEnforcement { decision })?;
            }
            EventKind::DecisionEnforcement { .. } => {
                let (action, valid) = enforced.expect("enforcement has an action");
                self.rt.history.record_enforcement(now, &action);
                for (order, &until) in &action.postponed {
                    if until > now {
                        self.schedule(until, EventKind::OrderPostponementExpiration { order: order.clone() })?;
                    }
                }
                let vehicles: Vec<VehicleId> = self.rt.exec.keys().cloned().collect();
                for v in vehicles {
                    let routed = action.routes.get(&v);
                    match self.rt.exec[&v].phase {
                        ExecutionPhase::Idle => self.start_execution(&v)?,
                        ExecutionPhase::PreDeparture if routed.is_some() => {
                            if let Some(seq) = self.exec(&v).interrupt(&v)? {
                                self.rt.queue.cancel_seq(seq);
                            }
                            self.start_execution(&v)?;
                        }
                        ExecutionPhase::PreService if routed.is_some_and(|r| r.origin.is_some()) => {
                            self.refresh_pre_service(&v)?;
                        }
                        _ => {}
                    }
                }
                if !valid {
                    self.request_routing()?;
                }
            }
            EventKind::ProcessWake { process } => {
                let all_terminal = self.rt.terminal.len() == self.scenario.orders.len();
                let mut ctx = ProcessContext {
                    scenario: self.scenario,
                    state: &self.rt.state,
                    all_orders_terminal: all_terminal,
                    routing_requested: false,
                };
                let delay = self.processes[*process].resume(&mut ctx);
                if ctx.routing_requested {
                    self.request_routing()?;
                }
                if let Some(d) = delay {
                    self.schedule(now + d, EventKind::ProcessWake { process: *process })?;
                }
            }
        }
        Ok(())
    }

    fn exec(&mut self, vehicle: &VehicleId) -> &mut Execution {
        self.rt.exec.get_mut(vehicle).expect("known vehicle")
    }

    /// Requests a decision point now. At most one decision point takes place
    /// per instant.
    pub fn request_routing(&mut self) -> Result<Routing, EngineError> {
        let now = self.now();
        if self.rt.last_dp == Some(now) {
            return Ok(Routing::AlreadyHeld);
        }
        Ok(match self.schedule(now, EventKind::DecisionPoint)? {
            Some(_) => Routing::Scheduled,
            None => Routing::Queued,
        })
    }

    /// Default routing-start callback: cancel all postponement expirations
    /// and interrupt vehicles waiting to depart.
    fn routing_start(&mut self) -> Result<(), EngineError> {
        self.rt.queue.cancel(|e| {
            matches!(
                e.kind,
                EventKind::OrderPostponementExpiration { .. }
                    | EventKind::DeparturePostponementExpiration { .. }
            )
        });
        for (v, exec) in &mut self.rt.exec {
            if exec.phase == ExecutionPhase::PreDeparture {
                if let Some(seq) = exec.interrupt(v)? {
                    self.rt.queue.cancel_seq(seq);
                }
            }
        }
        Ok(())
    }

    /// Starts executing the plan of an idle vehicle, if it has one.
    fn start_execution(&mut self, vehicle: &VehicleId) -> Result<(), EngineError> {
        let now = self.now();
        let status = &self.rt.state.vehicles[vehicle];
        let Some(first) = status.plan.next.first() else {
            let exec = self.exec(vehicle);
            exec.phase = ExecutionPhase::Idle;
            exec.pending = None;
            return Ok(());
        };
        let v = vehicle.clone();
        let seq = match first.earliest_start {
            Some(est) if est > now => {
                self.schedule(est, EventKind::DeparturePostponementExpiration { vehicle: v })?
            }
            _ => self.schedule(now, EventKind::VehicleDeparture { vehicle: v })?,
        };
        let exec = self.exec(vehicle);
        exec.phase = ExecutionPhase::PreDeparture;
        exec.pending = seq;
        Ok(())
    }

    fn travel(&mut self, vehicle: &VehicleId) -> Result<(), EngineError> {
        let plan = &self.rt.state.vehicles[vehicle].plan;
        let from = plan.origin.location.clone();
        let to = plan.next[0].location.clone();
        let ctx = hook_ctx!(self);
        let duration = self.hooks.travel_time(&ctx, &mut self.rt.rng, vehicle, &from, &to)?;
        let at = self.now() + duration;
        let seq = self.schedule(at, EventKind::VehicleArrival { vehicle: vehicle.clone() })?;
        let exec = self.exec(vehicle);
        exec.phase = ExecutionPhase::EnRoute;
        exec.pending = seq;
        Ok(())
    }

    fn pre_service(&mut self, vehicle: &VehicleId) -> Result<(), EngineError> {
        let now = self.now();
        let gate = self.hooks.service_gate(&hook_ctx!(self), vehicle);
        let here = self.rt.state.vehicles[vehicle].plan.origin.location.clone();
        let granted = match self.rt.docks.get_mut(&here) {
            Some(dock) => dock.request(vehicle),
            None => true,
        };
        let exec = self.exec(vehicle);
        exec.phase = ExecutionPhase::PreService;
        exec.gate = gate;
        exec.pending = None;
        exec.granted_at = None;
        if granted {
            self.grant(vehicle, now)?;
        }
        Ok(())
    }

    fn grant(&mut self, vehicle: &VehicleId, now: Time) -> Result<(), EngineError> {
        let gate = self.rt.exec[vehicle].gate;
        let seq = self.schedule(gate.max(now), EventKind::ServiceStart { vehicle: vehicle.clone() })?;
        let exec = self.exec(vehicle);
        exec.granted_at = Some(now);
        exec.pending = seq;
        Ok(())
    }

    /// Recomputes the time gate of a vehicle in pre-service after its origin
    /// visit changed.
    fn refresh_pre_service(&mut self, vehicle: &VehicleId) -> Result<(), EngineError> {
        if self.rt.exec[vehicle].phase != ExecutionPhase::PreService {
            return Ok(());
        }
        let now = self.now();
        let gate = self.hooks.service_gate(&hook_ctx!(self), vehicle);
        let exec = self.exec(vehicle);
        if exec.gate == gate {
            return Ok(());
        }
        exec.gate = gate;
        if let Some(seq) = exec.pending.take() {
            self.rt.queue.cancel_seq(seq);
            let seq = self.schedule(gate.max(now), EventKind::ServiceStart { vehicle: vehicle.clone() })?;
            self.exec(vehicle).pending = seq;
        }
        Ok(())
    }

    fn release_port(&mut self, vehicle: &VehicleId, location: &LocationId) -> Result<(), EngineError> {
        let now = self.now();
        let granted = match self.rt.docks.get_mut(location) {
            Some(dock) => dock.release(vehicle),
            None => return Ok(()),
        };
        for v in granted {
            self.grant(&v, now)?;
        }
        Ok(())
    }

    fn begin_service(&mut self, vehicle: &VehicleId) -> Result<(), EngineError> {
        let origin = &self.rt.state.vehicles[vehicle].plan.origin;
        let orders = &self.scenario.orders;
        let mut steps = std::collections::VecDeque::new();
        for id in &origin.deliveries {
            let kind = EventKind::OrderDelivery { order: id.clone(), vehicle: vehicle.clone() };
            steps.push_back((kind, orders[id].delivery_duration));
        }
        for id in &origin.pickups {
            let kind = EventKind::OrderPickup { order: id.clone(), vehicle: vehicle.clone() };
            steps.push_back((kind, orders[id].pickup_duration));
        }
        let approach = self.hooks.dock_approach(&hook_ctx!(self), vehicle);
        let exec = self.exec(vehicle);
        exec.phase = ExecutionPhase::InService;
        exec.steps = steps;
        self.next_service_step(vehicle, approach)
    }

    fn next_service_step(&mut self, vehicle: &VehicleId, extra: f64) -> Result<(), EngineError> {
        let now = self.now();
        let (at, kind) = match self.exec(vehicle).steps.pop_front() {
            Some((kind, duration)) => (now + extra + duration, kind),
            None => (now + extra, EventKind::ServiceFinish { vehicle: vehicle.clone() }),
        };
        let seq = self.schedule(at, kind)?;
        self.exec(vehicle).pending = seq;
        Ok(())
    }
}

/// Runs `scenario` with `policy` and the default hooks.
pub fn run(scenario: &Scenario, policy: &mut dyn Policy) -> Result<SimulationResult, EngineError> {
    Engine::new(scenario, policy).run()
}
