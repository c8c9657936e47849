use std::collections::BTreeMap;

use pact_core::item::Inventory;
use pact_core::runtime::{run_episode, EpisodeOptions, EpisodeSetup, LatencyModel, Mode, PlannedAction, SequencePlanner};
use pact_core::skills::SkillCall;
use pact_core::world_sim::{Event, EventBody, ScenarioConfig};
use proptest::prelude::*;

const SKILLS: &[&str] = &[
    "obtainItem(bot, 1, 'stone_pickaxe')",
    "mineItem(bot, 3, 'oak_log')",
    "obtainItem(bot, 2, 'torch')",
    "collectItem(bot, 1, 'beef')",
    "idle(bot, 6)",
];

/// Effect-emitting steps each aborted execution took at or after the tick
/// its agent's interrupt was raised.
fn late_effects(log: &[Event]) -> Vec<usize> {
    let mut raised: BTreeMap<&str, u64> = BTreeMap::new();
    let mut out = Vec::new();
    for e in log {
        match &e.body {
            EventBody::InterruptRaised { agent, .. } => {
                raised.insert(agent, e.tick);
            }
            EventBody::SkillFinished { agent, exec, status } if status == "aborted" => {
                if let Some(&at) = raised.get(agent.as_str()) {
                    let ticks: std::collections::BTreeSet<u64> = log
                        .iter()
                        .filter(|x| x.body.is_effect() && x.body.exec() == Some(*exec) && x.tick >= at)
                        .map(|x| x.tick)
                        .collect();
                    out.push(ticks.len());
                }
            }
            _ => {}
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn aborted_skills_stop_within_one_step(
        plans in prop::collection::vec((0usize..SKILLS.len(), 0u8..=3), 1..12),
        latency in 1u64..6,
        seed in any::<u64>(),
    ) {
        let mut cfg = ScenarioConfig::resource_collection(Inventory::new(), 1);
        cfg.tick_limit = 120;
        let actions = plans.iter().map(|&(s, p)| PlannedAction::new(SKILLS[s].parse::<SkillCall>().unwrap(), p, ""));
        let setup = EpisodeSetup::new(cfg, seed, Mode::Parallel)
            .agent("A1", SequencePlanner::new(actions), LatencyModel::constant(latency))
            .options(EpisodeOptions::default());
        let r = run_episode(setup).unwrap();
        let late = late_effects(&r.event_log);
        prop_assert_eq!(late.len() as u64, r.interrupts.min(late.len() as u64));
        prop_assert!(late.iter().all(|&n| n <= 1), "{late:?}");
    }
}
