//! Summary statistics of a finished run.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::domain::{Time, VehicleId};
use crate::history::RunHistory;
use crate::scenario::Scenario;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct VehicleMetrics {
    pub distance: f64,
    pub travel_time: f64,
    /// Time between arrival and service start, summed over visits.
    pub waiting_time: f64,
    pub service_time: f64,
    pub visits: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunMetrics {
    pub end_time: Time,
    pub events: usize,
    pub decisions: usize,
    pub warnings: usize,
    pub delivered: usize,
    pub rejected: usize,
    pub canceled: usize,
    pub unfinished: usize,
    pub total_distance: f64,
    pub total_tardiness: f64,
    pub late_deliveries: usize,
    pub vehicles: BTreeMap<VehicleId, VehicleMetrics>,
}

pub fn compute(scenario: &Scenario, history: &RunHistory) -> RunMetrics {
    let mut m = RunMetrics {
        end_time: history.end.map_or(0.0, |(t, _)| t),
        events: history.events.len(),
        decisions: history.decisions.len(),
        warnings: history.warnings.len(),
        ..RunMetrics::default()
    };
    for (id, life) in &history.orders {
        if let Some(t) = life.delivery {
            m.delivered += 1;
            let due = scenario.order(id).and_then(|o| o.due_time);
            if let Some(due) = due.filter(|&d| t > d) {
                m.total_tardiness += t - due;
                m.late_deliveries += 1;
            }
        } else if life.rejected.is_some() {
            m.rejected += 1;
        } else if life.canceled.is_some() {
            m.canceled += 1;
        } else {
            m.unfinished += 1;
        }
    }
    for (vid, visits) in &history.visits {
        let mut vm = VehicleMetrics::default();
        for pair in visits.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            vm.distance += scenario.distance(&a.location, &b.location).unwrap_or(0.0);
            if let Some(dt) = a.departure {
                vm.travel_time += b.arrival - dt;
            }
        }
        for v in visits.iter().skip(1) {
            vm.visits += 1;
            if let Some(st) = v.service_start {
                vm.waiting_time += st - v.arrival;
                if let Some(ft) = v.service_finish {
                    vm.service_time += ft - st;
                }
            }
        }
        m.total_distance += vm.distance;
        m.vehicles.insert(vid.clone(), vm);
    }
    m
}
