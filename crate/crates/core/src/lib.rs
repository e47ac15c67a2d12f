//! Deterministic discrete-event simulation of dynamic vehicle routing
//! problems.
//!
//! A run alternates between exogenous events (order requests and
//! cancellations), vehicle execution events (arrivals, service, departures)
//! and decision points, at which a [`Policy`](policy::Policy) returns an
//! [`Action`](domain::Action): which open orders to accept, reject or
//! postpone and the new route plan of each vehicle. Actions are validated
//! against the current state before they take effect.

pub mod domain;
pub mod engine;
pub mod event;
pub mod execution;
pub mod feasibility;
pub mod cases;
pub mod history;
pub mod hooks;
pub mod metrics;
pub mod policy;
pub mod process;
pub mod replay;
pub mod routing;
pub mod scenario;
pub mod transition;

pub use domain::{Action, State};
pub use engine::{run, Engine, EngineError, SimulationResult};
pub use scenario::{load_scenario, parse_scenario, Scenario};
