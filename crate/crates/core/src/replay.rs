//! Verification of recorded traces.
//!
//! [`replay`] checks a trace in two passes. The first folds the recorded
//! events over the initial state with the pure transition function and
//! compares every state digest; feasibility is checked along the way. The
//! second re-runs the scenario with the recorded decisions as a scripted
//! policy and requires the rendered trace to match line for line.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::domain::{initial_state, Action};
use crate::engine::{Engine, EngineError};
use crate::event::Event;
use crate::feasibility::validate_state;
use crate::history::{parse_trace, state_digest, TraceError, TraceRecord};
use crate::policy::{ProtocolError, ScriptedPolicy};
use crate::routing::validate_action;
use crate::scenario::Scenario;
use crate::transition::{apply_event, TransitionError};

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("trace has no header")]
    MissingHeader,
    #[error("trace belongs to scenario `{found}`, not `{expected}`")]
    ScenarioMismatch { expected: String, found: String },
    #[error("decision {decision}: {source}")]
    Action {
        decision: usize,
        #[source]
        source: ProtocolError,
    },
    #[error("event {index} enforces unknown decision {decision}")]
    UnknownDecision { index: usize, decision: usize },
    #[error("event {index}: {source}")]
    Transition {
        index: usize,
        #[source]
        source: TransitionError,
    },
    #[error("event {index}: state digest {found} differs from recorded {expected}")]
    Digest {
        index: usize,
        expected: String,
        found: String,
    },
    #[error("event {index}: {message}")]
    Infeasible { index: usize, message: String },
    #[error("re-simulation failed: {0}")]
    Engine(#[from] EngineError),
    #[error("re-simulation diverges at trace line {line}:\n  recorded: {expected}\n  replayed: {found}")]
    Diverged {
        line: usize,
        expected: String,
        found: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReplayReport {
    pub events: usize,
    pub decisions: usize,
}

fn joined(v: &[impl ToString]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Verifies `trace` against `scenario`. `strict` must match the mode the
/// trace was recorded in.
pub fn replay(scenario: &Scenario, trace: &str, strict: bool) -> Result<ReplayReport, ReplayError> {
    let records = parse_trace(trace)?;
    let Some(TraceRecord::Header { scenario: name, seed, .. }) = records.first() else {
        return Err(ReplayError::MissingHeader);
    };
    if *name != scenario.name {
        return Err(ReplayError::ScenarioMismatch {
            expected: scenario.name.clone(),
            found: name.clone(),
        });
    }
    let mut scenario = scenario.clone();
    scenario.config.seed = *seed;

    let mut decisions: BTreeMap<usize, Action> = BTreeMap::new();
    let mut state = initial_state(scenario.vehicles.values());
    let mut events = 0;
    for record in &records {
        match record {
            TraceRecord::Decision { decision, action, .. } => {
                let err = |source| ReplayError::Action {
                    decision: *decision,
                    source,
                };
                action.check_references(&scenario).map_err(err)?;
                let action = action.clone().into_action_unchecked().map_err(err)?;
                decisions.insert(*decision, action);
            }
            TraceRecord::Event {
                index,
                time,
                event,
                digest,
            } => {
                let index = *index;
                let e = Event {
                    time: *time,
                    priority: event.priority(),
                    seq: index as u64,
                    kind: event.clone(),
                };
                let mut action = None;
                if let crate::event::EventKind::DecisionEnforcement { decision } = event {
                    let recorded = decisions
                        .get(decision)
                        .ok_or(ReplayError::UnknownDecision {
                            index,
                            decision: *decision,
                        })?;
                    let mut at = state.clone();
                    at.time = *time;
                    let violations = validate_action(&at, recorded, &scenario);
                    action = Some(if violations.is_empty() {
                        recorded.clone()
                    } else if strict {
                        return Err(ReplayError::Infeasible {
                            index,
                            message: format!("infeasible action: {}", joined(&violations)),
                        });
                    } else {
                        Action::default()
                    });
                }
                apply_event(&mut state, &e, &scenario, action.as_ref(), strict)
                    .map_err(|source| ReplayError::Transition { index, source })?;
                let found = state_digest(&state);
                if found != *digest {
                    return Err(ReplayError::Digest {
                        index,
                        expected: digest.clone(),
                        found,
                    });
                }
                let violations = validate_state(&state, &scenario);
                if strict && !violations.is_empty() {
                    return Err(ReplayError::Infeasible {
                        index,
                        message: format!("infeasible state: {}", joined(&violations)),
                    });
                }
                events += 1;
            }
            _ => {}
        }
    }

    let mut policy = ScriptedPolicy::new(decisions.values().cloned());
    let result = Engine::new(&scenario, &mut policy).strict(strict).run()?;
    let rendered = result.history.to_trace();
    let recorded: Vec<&str> = trace.lines().filter(|l| !l.trim().is_empty()).collect();
    let replayed: Vec<&str> = rendered.lines().collect();
    for i in 0..recorded.len().max(replayed.len()) {
        let (a, b) = (recorded.get(i), replayed.get(i));
        if a != b {
            return Err(ReplayError::Diverged {
                line: i + 1,
                expected: a.map_or("<end of trace>".into(), |s| s.to_string()),
                found: b.map_or("<end of trace>".into(), |s| s.to_string()),
            });
        }
    }
    Ok(ReplayReport {
        events,
        decisions: decisions.len(),
    })
}
