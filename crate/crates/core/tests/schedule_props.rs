use pact_core::item::Inventory;
use pact_core::metrics::{predict_delta, predict_parallel, predict_serialized, LatencyProfile};
use pact_core::runtime::{
    run_episode, EpisodeOptions, EpisodeSetup, LatencyModel, Mode, PlannedAction, PlanningCadence, SequencePlanner,
};
use pact_core::skills::SkillCall;
use pact_core::world_sim::{FieldSpec, ScenarioConfig};
use proptest::prelude::*;

fn measured(profile: &LatencyProfile, mode: Mode) -> Option<u64> {
    let mut cfg = ScenarioConfig::resource_collection(Inventory::new(), 1);
    cfg.field = FieldSpec::empty();
    cfg.tick_limit = 10_000;
    let plans = profile.t_act.iter().map(|&a| PlannedAction::new(SkillCall::Idle { ticks: a as u32 }, 0, ""));
    let setup = EpisodeSetup::new(cfg, 11, mode)
        .agent("A1", SequencePlanner::new(plans), LatencyModel::Trace { ticks: profile.t_plan.clone() })
        .options(EpisodeOptions { cadence: PlanningCadence::OnDispatch, ..Default::default() });
    run_episode(setup).unwrap().completion_ticks
}

fn profiles() -> impl Strategy<Value = LatencyProfile> {
    (1usize..=100)
        .prop_flat_map(|n| (prop::collection::vec(1u64..=20, n), prop::collection::vec(1u64..=20, n)))
        .prop_map(|(p, a)| LatencyProfile::new(p, a).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn simulated_completion_matches_prediction(p in profiles()) {
        prop_assert_eq!(measured(&p, Mode::Serialized), Some(predict_serialized(&p)));
        prop_assert_eq!(measured(&p, Mode::Parallel), Some(predict_parallel(&p)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn exact_delta_is_the_shifted_overlap(p in profiles()) {
        let shifted: u64 = (1..p.len()).map(|k| p.t_plan[k].min(p.t_act[k - 1])).sum();
        prop_assert_eq!(predict_delta(&p).exact, shifted);
        prop_assert!(predict_parallel(&p) <= predict_serialized(&p));
    }

    #[test]
    fn constant_profiles_save_n_minus_one_overlaps(n in 1usize..=100, plan in 1u64..=20, act in 1u64..=20) {
        let p = LatencyProfile::constant(n, plan, act).unwrap();
        prop_assert_eq!(predict_delta(&p).exact, (n as u64 - 1) * plan.min(act));
        if act >= plan {
            prop_assert_eq!(predict_parallel(&p), plan + n as u64 * act);
        }
    }
}
