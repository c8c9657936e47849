use pact_core::item::Inventory;
use pact_core::memory::{ActionEntry, ChatEntry, MemoryError, ObservationRecord, TeamMemory};
use pact_core::position::Position;
use proptest::prelude::*;

const AGENTS: &[&str] = &["Alex", "Steve", "Kai"];

#[derive(Debug, Clone)]
enum Op {
    Observe { agent: usize, tick: u64, health: f64, logs: u32 },
    Chat { agent: usize, tick: u64, text: String },
    Act { agent: usize, tick: u64, skill: String },
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0..AGENTS.len(), 0u64..50, -2.0f64..24.0, 0u32..5)
            .prop_map(|(agent, tick, health, logs)| Op::Observe { agent, tick, health, logs }),
        (0..AGENTS.len(), 0u64..50, "[a-z ]{1,12}").prop_map(|(agent, tick, text)| Op::Chat { agent, tick, text }),
        (0..AGENTS.len(), 0u64..50, prop::sample::select(vec!["idle(bot)", "mineItem(bot, 1, 'oak_log')"]))
            .prop_map(|(agent, tick, s)| Op::Act { agent, tick, skill: s.to_owned() }),
    ]
}

fn obs(agent: &str, tick: u64, health: f64, logs: u32) -> ObservationRecord {
    let inventory: Inventory = if logs > 0 { [("oak_log", logs)].into_iter().collect() } else { Inventory::new() };
    ObservationRecord {
        agent: agent.into(),
        tick,
        time: "day".into(),
        health,
        hunger: 20.0,
        position: Position::new(tick as i32, 64, 0),
        equipment: vec![None; 6],
        inventory,
        nearby_blocks: vec!["stone".into()],
        nearby_entities: vec![],
        nearby_players: vec![],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn memory_contract_holds(ops in prop::collection::vec(op(), 0..60)) {
        let mut m = TeamMemory::new("A");
        let mut latest: std::collections::BTreeMap<&str, ObservationRecord> = Default::default();
        let mut chat_prefix: Vec<ChatEntry> = Vec::new();
        let mut action_prefix: Vec<ActionEntry> = Vec::new();
        for op in ops {
            match op {
                Op::Observe { agent, tick, health, logs } => {
                    let o = obs(AGENTS[agent], tick, health, logs);
                    let stale = latest.get(AGENTS[agent]).is_some_and(|p| tick < p.tick);
                    let bounded = (0.0..=20.0).contains(&health);
                    match m.update_observation(o.clone()) {
                        Ok(()) => {
                            prop_assert!(!stale && bounded);
                            latest.insert(AGENTS[agent], o);
                        }
                        Err(MemoryError::StaleObservation { .. }) => prop_assert!(stale),
                        Err(MemoryError::OutOfBounds { .. }) => prop_assert!(!bounded),
                        Err(e) => prop_assert!(false, "unexpected {e}"),
                    }
                }
                Op::Chat { agent, tick, text } => m.append_chat(ChatEntry::new(tick, AGENTS[agent], text, "A")),
                Op::Act { agent, tick, skill } => {
                    let a = pact_core::runtime::PlannedAction::new(skill.parse().unwrap(), 0, "");
                    m.append_action(ActionEntry { tick, agent: AGENTS[agent].into(), action: a.to_log_string() });
                }
            }
            // Latest-only observations.
            prop_assert_eq!(m.observations().len(), latest.len());
            for (a, o) in &latest {
                prop_assert_eq!(m.observation(a), Some(o));
            }
            // Append-only, prefix-stable logs with non-decreasing ticks.
            prop_assert!(m.chat().starts_with(&chat_prefix));
            prop_assert!(m.actions().starts_with(&action_prefix));
            prop_assert!(m.chat().windows(2).all(|w| w[0].tick <= w[1].tick));
            prop_assert!(m.actions().windows(2).all(|w| w[0].tick <= w[1].tick));
            chat_prefix = m.chat().to_vec();
            action_prefix = m.actions().to_vec();
        }
        // Lossless export.
        let back = TeamMemory::import_json(&m.export_json()).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(back.export_json(), m.export_json());
        for a in latest.keys() {
            prop_assert_eq!(back.snapshot(a, 8, true).unwrap(), m.snapshot(a, 8, true).unwrap());
        }
    }
}
