mod common;

use dvrp_engine::domain::{Action, OriginUpdate, RouteUpdate, Visit};
use dvrp_engine::policy::protocol::{decode_action, decode_state, Message, MessageType, ProtocolError};
use dvrp_engine::Scenario;
use proptest::prelude::*;
use serde_json::json;

fn through_line(m: &Message) -> Message {
    let line = m.to_line();
    assert!(!line.contains('\n'));
    Message::parse(&line).unwrap()
}

fn desk(seed: u64) -> (Scenario, Vec<dvrp_engine::State>) {
    let s = common::random_desk_instance(seed);
    let states = common::run_greedy(&s).states;
    (s, states)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn states_survive_the_wire(seed in 0u64..500, pick in any::<prop::sample::Index>()) {
        let (s, states) = desk(seed);
        let st = &states[pick.index(states.len())];
        let data = through_line(&Message::state(st, &s)).expect(MessageType::State).unwrap();
        prop_assert_eq!(&decode_state(data).unwrap(), st);
    }

    #[test]
    fn actions_survive_the_wire(
        seed in 0u64..500,
        decisions in prop::collection::vec((0u8..4, 0.0f64..1e6), 0..12),
        routes in prop::collection::vec((any::<prop::sample::Index>(), prop::collection::vec((any::<prop::sample::Index>(), any::<prop::sample::Index>(), 0u8..4, prop::option::of(0.0f64..1e4)), 0..6), any::<bool>()), 0..3),
    ) {
        let s = common::random_desk_instance(seed);
        let orders: Vec<_> = s.orders.keys().cloned().collect();
        let vehicles: Vec<_> = s.vehicles.keys().cloned().collect();
        let locations: Vec<_> = s.locations.keys().cloned().collect();
        let mut a = Action::default();
        for (order, (kind, until)) in orders.iter().zip(&decisions) {
            match kind {
                0 => { a.accepted.insert(order.clone()); }
                1 => { a.rejected.insert(order.clone()); }
                2 => { a.postponed.insert(order.clone(), *until); }
                _ => {}
            }
        }
        for (v, visits, with_origin) in routes {
            let next = visits
                .into_iter()
                .map(|(l, o, ops, est)| {
                    let mut x = Visit::new(locations[l.index(locations.len())].as_str());
                    let o = orders[o.index(orders.len())].as_str();
                    if ops & 1 != 0 { x = x.pickup(o); }
                    if ops & 2 != 0 { x = x.deliver(o); }
                    x.earliest_start = est;
                    x
                })
                .collect();
            let origin = with_origin.then(|| OriginUpdate {
                location: locations[0].clone(),
                pickups: vec![],
                deliveries: vec![],
            });
            a.routes.insert(vehicles[v.index(vehicles.len())].clone(), RouteUpdate { origin, next });
        }
        let data = through_line(&Message::action(&a)).expect(MessageType::Action).unwrap();
        prop_assert_eq!(decode_action(data, &s).unwrap(), a);
    }
}

fn worked() -> Scenario {
    common::worked_example().0
}

#[test]
fn end_message_has_no_payload() {
    let m = through_line(&Message::end());
    assert_eq!(m.kind, MessageType::End);
    assert!(m.expect(MessageType::State).is_err());
}

#[test]
fn malformed_replies_name_the_field() {
    let s = worked();
    let bad = json!({"accepted": ["o1"], "rejected": [], "postponed": [{"order": "o2", "until": "soon"}], "routes": {}});
    match decode_action(bad, &s).unwrap_err() {
        ProtocolError::Malformed { field, .. } => assert!(field.contains("postponed"), "{field}"),
        other => panic!("{other}"),
    }
    assert!(matches!(Message::parse("{not json"), Err(ProtocolError::Malformed { .. })));
    let wrong_version = json!({"type": "action", "protocol_version": 7, "data": {}}).to_string();
    assert_eq!(Message::parse(&wrong_version), Err(ProtocolError::VersionMismatch { found: 7 }));
}

#[test]
fn unknown_and_repeated_ids_are_refused() {
    let s = worked();
    let unknown = json!({"accepted": ["o9"]});
    assert!(matches!(decode_action(unknown, &s), Err(ProtocolError::UnknownId { kind: "order", .. })));
    let repeated = json!({"accepted": ["o1", "o1"]});
    assert!(matches!(decode_action(repeated, &s), Err(ProtocolError::Duplicate { .. })));
    let vehicle = json!({"routes": [{"vehicle": "w", "next": []}]});
    assert!(matches!(decode_action(vehicle, &s), Err(ProtocolError::UnknownId { kind: "vehicle", .. })));
}
