//! Policies: what the engine calls at every decision point.

use std::collections::VecDeque;

use thiserror::Error;

use crate::domain::{Action, State, Time};
use crate::scenario::Scenario;

pub mod external;
pub mod greedy;
pub mod protocol;

pub use external::{FileExchangePolicy, SubprocessPolicy};
pub use greedy::GreedyPolicy;
pub use protocol::ProtocolError;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("policy did not answer within {0:?}")]
    Timeout(std::time::Duration),
    #[error("policy process failed: {0}")]
    Exited(String),
    #[error("policy i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("scripted policy has no action left for the decision point at {time}")]
    ScriptExhausted { time: Time },
}

pub trait Policy {
    fn decide(&mut self, state: &State, scenario: &Scenario) -> Result<Action, PolicyError>;

    /// Called once when the simulation ends.
    fn finish(&mut self) -> Result<(), PolicyError> {
        Ok(())
    }
}

impl<F> Policy for F
where
    F: FnMut(&State, &Scenario) -> Action,
{
    fn decide(&mut self, state: &State, scenario: &Scenario) -> Result<Action, PolicyError> {
        Ok(self(state, scenario))
    }
}

/// Replays a fixed sequence of actions, one per decision point.
#[derive(Clone, Debug, Default)]
pub struct ScriptedPolicy {
    actions: VecDeque<Action>,
}

impl ScriptedPolicy {
    pub fn new(actions: impl IntoIterator<Item = Action>) -> Self {
        Self {
            actions: actions.into_iter().collect(),
        }
    }

    pub fn remaining(&self) -> usize {
        self.actions.len()
    }
}

impl Policy for ScriptedPolicy {
    fn decide(&mut self, state: &State, _: &Scenario) -> Result<Action, PolicyError> {
        self.actions
            .pop_front()
            .ok_or(PolicyError::ScriptExhausted { time: state.time })
    }
}

/// Rejects every open order that is not yet part of a plan and keeps the
/// rest of the state as is.
#[derive(Clone, Copy, Debug, Default)]
pub struct RejectAll;

impl Policy for RejectAll {
    fn decide(&mut self, state: &State, _: &Scenario) -> Result<Action, PolicyError> {
        let assigned = state.assigned_orders();
        let mut action = Action::default();
        for order in &state.orders.open {
            if assigned.contains(order) {
                action.accepted.insert(order.clone());
            } else {
                action.rejected.insert(order.clone());
            }
        }
        Ok(action)
    }
}

/// How the engine reaches a policy.
#[derive(Clone, Debug, PartialEq)]
pub enum PolicyBinding {
    InProcess,
    Subprocess {
        command: String,
        timeout: std::time::Duration,
    },
    FileExchange {
        command: String,
        dir: std::path::PathBuf,
        timeout: std::time::Duration,
    },
}
