//! Per-vehicle lifecycle bookkeeping and docking ports.
//!
//! The engine drives each vehicle through pre-departure, travel, pre-service
//! and service. A vehicle's [`Execution`] records which phase it is in and
//! which queued event it is waiting for, so that the phase can be resumed or
//! interrupted deterministically.

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use crate::domain::{Time, VehicleId};
use crate::event::EventKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionPhase {
    /// Not executing anything; waits for a plan or an enforcement.
    Idle,
    /// Waiting for the departure (or its postponement expiration).
    PreDeparture,
    EnRoute,
    /// Arrived; waiting for the time gate and the docking port.
    PreService,
    InService,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Execution {
    pub phase: ExecutionPhase,
    /// Sequence number of the queued event the phase is waiting for.
    pub pending: Option<u64>,
    /// Earliest service start, while in pre-service.
    pub gate: Time,
    /// Time the docking port was granted, while in pre-service. `None` while
    /// queued for a port.
    pub granted_at: Option<Time>,
    /// Remaining pickup/delivery events of the running service.
    pub steps: VecDeque<(EventKind, f64)>,
}

impl Default for Execution {
    fn default() -> Self {
        Self {
            phase: ExecutionPhase::Idle,
            pending: None,
            gate: 0.0,
            granted_at: None,
            steps: VecDeque::new(),
        }
    }
}

#[derive(Debug, PartialEq, Eq, thiserror::Error)]
#[error("vehicle `{vehicle}` is {phase:?}, only pre-departure can be interrupted")]
pub struct InterruptRefused {
    pub vehicle: VehicleId,
    pub phase: ExecutionPhase,
}

impl Execution {
    /// Interrupts a pre-departure wait. Returns the canceled event's sequence
    /// number, if any. Idle vehicles are left alone; other phases refuse.
    pub fn interrupt(&mut self, vehicle: &VehicleId) -> Result<Option<u64>, InterruptRefused> {
        match self.phase {
            ExecutionPhase::Idle => Ok(None),
            ExecutionPhase::PreDeparture => {
                self.phase = ExecutionPhase::Idle;
                Ok(self.pending.take())
            }
            phase => Err(InterruptRefused {
                vehicle: vehicle.clone(),
                phase,
            }),
        }
    }
}

/// A counted docking resource granted first come, first served.
#[derive(Clone, Debug, PartialEq)]
pub struct DockResource {
    pub capacity: u32,
    holders: BTreeSet<VehicleId>,
    queue: VecDeque<VehicleId>,
}

impl DockResource {
    pub fn new(capacity: u32) -> Self {
        assert!(capacity > 0, "dock capacity must be positive");
        Self {
            capacity,
            holders: BTreeSet::new(),
            queue: VecDeque::new(),
        }
    }

    /// Requests a port. Returns `true` if granted immediately; otherwise the
    /// vehicle joins the waiting queue.
    pub fn request(&mut self, vehicle: &VehicleId) -> bool {
        if self.holders.contains(vehicle) {
            return true;
        }
        if self.queue.is_empty() && (self.holders.len() as u32) < self.capacity {
            self.holders.insert(vehicle.clone());
            true
        } else {
            if !self.queue.contains(vehicle) {
                self.queue.push_back(vehicle.clone());
            }
            false
        }
    }

    /// Releases the port held by `vehicle`; returns the vehicles granted as a
    /// result, in grant order.
    pub fn release(&mut self, vehicle: &VehicleId) -> Vec<VehicleId> {
        if !self.holders.remove(vehicle) {
            return Vec::new();
        }
        let mut granted = Vec::new();
        while (self.holders.len() as u32) < self.capacity {
            let Some(next) = self.queue.pop_front() else {
                break;
            };
            self.holders.insert(next.clone());
            granted.push(next);
        }
        granted
    }

    pub fn holds(&self, vehicle: &VehicleId) -> bool {
        self.holders.contains(vehicle)
    }

    pub fn in_use(&self) -> usize {
        self.holders.len()
    }

    pub fn waiting(&self) -> impl Iterator<Item = &VehicleId> {
        self.queue.iter()
    }
}
