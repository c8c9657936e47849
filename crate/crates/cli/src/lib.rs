//! Scenario runner and console behind the `pact` binary.

pub mod console;
mod run;

pub use run::{
    build_setup, load_scenario, run, run_trials, scripted_planner, summarize_run, write_outputs, GroupSummary,
    ModeArg, PairedSummary, PlannerKind, PvpSummary, RunSpec, RunSummary, Trial,
};
