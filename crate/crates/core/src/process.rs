//! Custom processes that run alongside the engine.
//!
//! A process is resumed at time 0 and then after every delay it returns. It
//! can look at the state and request a decision point.

use crate::domain::{Duration, State};
use crate::scenario::Scenario;

pub struct ProcessContext<'a> {
    pub scenario: &'a Scenario,
    pub state: &'a State,
    /// Every order of the scenario is delivered, canceled or rejected.
    pub all_orders_terminal: bool,
    pub(crate) routing_requested: bool,
}

impl ProcessContext<'_> {
    pub fn request_routing(&mut self) {
        self.routing_requested = true;
    }
}

pub trait Process {
    /// Runs one step. Returns the delay until the next resumption, or `None`
    /// to stop.
    fn resume(&mut self, ctx: &mut ProcessContext) -> Option<Duration>;
}

/// Decision points every `interval` time units while some order is still
/// unprocessed.
#[derive(Clone, Copy, Debug)]
pub struct PeriodicDecisions {
    pub interval: Duration,
}

impl Process for PeriodicDecisions {
    fn resume(&mut self, ctx: &mut ProcessContext) -> Option<Duration> {
        if ctx.all_orders_terminal {
            return None;
        }
        ctx.request_routing();
        Some(self.interval)
    }
}
