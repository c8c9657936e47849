use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use pact_core::crafting_graph::RecipeGraph;
use pact_core::memory::{AgentId, TeamId};
use pact_core::metrics::{render_table, summarize, EpisodeReport, Outcome, TrialSummary};
use pact_core::runtime::policies::{allocate, BossPolicy, PvpPolicy, ResourcePolicy};
use pact_core::runtime::{
    control_channel, run_paced, AgentSetup, Episode, EpisodeOptions, EpisodeSetup, ExternalPlanner, LatencyModel, Mode,
    Planner,
};
use pact_core::world_sim::{to_jsonl, ScenarioConfig, ScenarioKind};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlannerKind {
    Scripted,
    /// Planner process reachable at `addr` (host:port).
    External { addr: String },
}

impl FromStr for PlannerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "scripted" => Ok(PlannerKind::Scripted),
            Some(("external", addr)) if !addr.is_empty() => Ok(PlannerKind::External { addr: addr.to_owned() }),
            _ => Err(format!("expected `scripted` or `external:<host:port>`, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Parallel,
    Serialized,
    Both,
}

impl FromStr for ModeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "parallel" => Ok(ModeArg::Parallel),
            "serialized" => Ok(ModeArg::Serialized),
            "both" => Ok(ModeArg::Both),
            _ => Err(format!("unknown mode `{s}` (parallel, serialized or both)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub config: ScenarioConfig,
    pub mode: ModeArg,
    pub trials: u64,
    pub seed: u64,
    pub planner: PlannerKind,
    pub latency: LatencyModel,
    pub out: Option<PathBuf>,
    pub options: EpisodeOptions,
    /// Attach the control API at this address and pace ticks in real time.
    pub serve: Option<String>,
    pub tick_duration: Duration,
    pub planner_timeout: Duration,
}

impl RunSpec {
    pub fn new(config: ScenarioConfig) -> Self {
        Self {
            config,
            mode: ModeArg::Parallel,
            trials: 1,
            seed: 0,
            planner: PlannerKind::Scripted,
            latency: LatencyModel::default(),
            out: None,
            options: EpisodeOptions::default(),
            serve: None,
            tick_duration: Duration::from_millis(100),
            planner_timeout: Duration::from_secs(30),
        }
    }
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg = ScenarioConfig::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    if cfg.name.is_empty() {
        cfg.name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    }
    Ok(cfg)
}

fn combat_weapon(config: &ScenarioConfig) -> Option<String> {
    let inv = &config.initial_inventory;
    (inv.count("bow") > 0 && inv.count("arrow") > 0).then(|| "bow".to_owned())
}

/// The bundled scripted planner for every agent of `config`.
pub fn scripted_planner(config: &ScenarioConfig) -> BTreeMap<AgentId, Box<dyn Planner>> {
    let mut out: BTreeMap<AgentId, Box<dyn Planner>> = BTreeMap::new();
    match config.kind {
        ScenarioKind::ResourceCollection => {
            let agents = config.agent_ids();
            for (agent, items) in allocate(&config.requirements, &agents, &RecipeGraph::desk()) {
                out.insert(agent, Box::new(ResourcePolicy::new(items)));
            }
        }
        ScenarioKind::BossCombat => {
            let boss = config.boss.clone().unwrap_or_default();
            for agent in config.agent_ids() {
                let mut p = BossPolicy::new(boss.kind.clone(), boss.crystal_kind.clone());
                p.weapon = combat_weapon(config);
                out.insert(agent, Box::new(p));
            }
        }
        ScenarioKind::Pvp => {
            for team in &config.teams {
                for agent in team.agent_ids() {
                    let mut p = PvpPolicy::new(team.agent_ids());
                    p.weapon = combat_weapon(config);
                    out.insert(agent, Box::new(p));
                }
            }
        }
    }
    out
}

pub fn build_setup(spec: &RunSpec, seed: u64, team_modes: BTreeMap<TeamId, Mode>) -> Result<EpisodeSetup> {
    let planners: BTreeMap<AgentId, Box<dyn Planner>> = match &spec.planner {
        PlannerKind::Scripted => scripted_planner(&spec.config),
        PlannerKind::External { addr } => {
            let mut m: BTreeMap<AgentId, Box<dyn Planner>> = BTreeMap::new();
            for agent in spec.config.agent_ids() {
                let p = ExternalPlanner::new(addr.as_str(), spec.planner_timeout)
                    .map_err(|e| anyhow::anyhow!("planner endpoint {addr}: {e}"))?;
                m.insert(agent, Box::new(p));
            }
            m
        }
    };
    let agents = planners
        .into_iter()
        .map(|(a, planner)| (a, AgentSetup { planner, latency: spec.latency.clone() }))
        .collect();
    Ok(EpisodeSetup { config: spec.config.clone(), seed, team_modes, agents, options: spec.options.clone() })
}

/// One finished episode.
#[derive(Debug, Clone)]
pub struct Trial {
    pub id: String,
    pub report: EpisodeReport,
}

fn matchups(spec: &RunSpec) -> Vec<(String, BTreeMap<TeamId, Mode>)> {
    let teams: Vec<TeamId> = spec.config.teams.iter().map(|t| t.id.clone()).collect();
    let all = |m: Mode| teams.iter().map(|t| (t.clone(), m)).collect::<BTreeMap<_, _>>();
    match (spec.mode, spec.config.kind) {
        (ModeArg::Parallel, _) => vec![("parallel".into(), all(Mode::Parallel))],
        (ModeArg::Serialized, _) => vec![("serialized".into(), all(Mode::Serialized))],
        (ModeArg::Both, ScenarioKind::Pvp) => {
            let first = &teams[0];
            [Mode::Parallel, Mode::Serialized]
                .into_iter()
                .map(|m| {
                    let modes = teams
                        .iter()
                        .map(|t| {
                            let flip = if m == Mode::Parallel { Mode::Serialized } else { Mode::Parallel };
                            (t.clone(), if t == first { m } else { flip })
                        })
                        .collect();
                    (format!("{first}-{}", m.label()), modes)
                })
                .collect()
        }
        (ModeArg::Both, _) => vec![
            ("parallel".into(), all(Mode::Parallel)),
            ("serialized".into(), all(Mode::Serialized)),
        ],
    }
}

fn run_one(spec: &RunSpec, setup: EpisodeSetup) -> Result<EpisodeReport> {
    let episode = Episode::new(setup)?;
    let Some(addr) = &spec.serve else {
        let mut episode = episode;
        episode.run();
        return Ok(episode.finish());
    };
    let (handle, endpoint) = control_channel();
    let server = pact_control::serve(addr, handle).with_context(|| format!("binding {addr}"))?;
    eprintln!("control API listening on http://{}", server.addr());
    let report = run_paced(episode, endpoint, spec.tick_duration, false);
    server.stop();
    Ok(report)
}

/// Runs seeds `seed..seed + trials`, each under every matchup the mode asks
/// for. A trial that cannot be set up aborts the run; a trial that times
/// out or loses is just recorded.
pub fn run_trials(spec: &RunSpec) -> Result<Vec<Trial>> {
    if spec.trials == 0 {
        bail!("trials must be at least 1");
    }
    let mut out = Vec::new();
    for seed in spec.seed..spec.seed + spec.trials {
        for (label, modes) in matchups(spec) {
            let setup = build_setup(spec, seed, modes)?;
            let report = run_one(spec, setup)?;
            out.push(Trial { id: format!("{seed}-{label}"), report });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub episodes: usize,
    pub success_rate: f64,
    pub metrics: Vec<TrialSummary>,
}

/// Head-to-head results when one team plans in parallel and the other
/// serialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvpSummary {
    pub matches: usize,
    pub parallel_wins: usize,
    pub serialized_wins: usize,
    pub draws: usize,
    pub parallel_win_rate: f64,
}

/// Same-seed comparison of completion times across modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSummary {
    pub pairs: usize,
    pub parallel_faster: usize,
    pub ties: usize,
    pub serialized_faster: usize,
    pub mean_ticks_saved: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub kind: ScenarioKind,
    pub mode: ModeArg,
    pub base_seed: u64,
    pub trials: u64,
    pub groups: Vec<GroupSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pvp: Option<PvpSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paired: Option<PairedSummary>,
}

impl RunSummary {
    pub fn table(&self) -> String {
        let rows: Vec<(String, TrialSummary)> = self
            .groups
            .iter()
            .flat_map(|g| g.metrics.iter().map(move |m| (g.group.clone(), m.clone())))
            .collect();
        let mut s = render_table(&rows);
        if let Some(p) = &self.pvp {
            s.push_str(&format!(
                "parallel team won {}/{} matches ({:.1}%), serialized {}, draws {}\n",
                p.parallel_wins, p.matches, p.parallel_win_rate, p.serialized_wins, p.draws
            ));
        }
        if let Some(p) = &self.paired {
            s.push_str(&format!(
                "paired seeds: parallel faster {}/{}, ties {}, serialized faster {}\n",
                p.parallel_faster, p.pairs, p.ties, p.serialized_faster
            ));
        }
        s
    }
}

fn group_label(id: &str) -> &str {
    id.split_once('-').map_or(id, |(_, label)| label)
}

fn metric_names(kind: ScenarioKind) -> &'static [&'static str] {
    match kind {
        ScenarioKind::ResourceCollection => &["time", "planner_calls", "interrupts"],
        ScenarioKind::BossCombat => &["time", "progress", "health_ratio"],
        ScenarioKind::Pvp => &["health_ratio", "interrupts"],
    }
}

pub fn summarize_run(spec: &RunSpec, trials: &[Trial]) -> RunSummary {
    let mut by_group: BTreeMap<&str, Vec<EpisodeReport>> = BTreeMap::new();
    for t in trials {
        by_group.entry(group_label(&t.id)).or_default().push(t.report.clone());
    }
    let groups = by_group
        .into_iter()
        .map(|(group, reports)| GroupSummary {
            group: group.to_owned(),
            episodes: reports.len(),
            success_rate: reports.iter().filter(|r| r.success).count() as f64 / reports.len() as f64 * 100.0,
            metrics: metric_names(spec.config.kind).iter().filter_map(|m| summarize(&reports, m).ok()).collect(),
        })
        .collect();

    let mixed: Vec<&EpisodeReport> = trials.iter().map(|t| &t.report).filter(|r| r.mode.is_none()).collect();
    let pvp = (spec.config.kind == ScenarioKind::Pvp && !mixed.is_empty()).then(|| {
        let mut s = PvpSummary { matches: mixed.len(), parallel_wins: 0, serialized_wins: 0, draws: 0, parallel_win_rate: 0.0 };
        for r in &mixed {
            match &r.outcome {
                Outcome::Victory(team) if r.team_modes.get(team) == Some(&Mode::Parallel) => s.parallel_wins += 1,
                Outcome::Victory(_) => s.serialized_wins += 1,
                _ => s.draws += 1,
            }
        }
        s.parallel_win_rate = s.parallel_wins as f64 / s.matches as f64 * 100.0;
        s
    });

    let paired = (spec.mode == ModeArg::Both && spec.config.kind != ScenarioKind::Pvp).then(|| {
        let mut by_seed: BTreeMap<u64, BTreeMap<Mode, Option<u64>>> = BTreeMap::new();
        for t in trials {
            if let Some(m) = t.report.mode {
                by_seed.entry(t.report.seed).or_default().insert(m, t.report.completion_ticks);
            }
        }
        let mut s = PairedSummary { pairs: 0, parallel_faster: 0, ties: 0, serialized_faster: 0, mean_ticks_saved: None };
        let mut saved = Vec::new();
        for modes in by_seed.values() {
            let (Some(Some(p)), Some(Some(q))) = (modes.get(&Mode::Parallel), modes.get(&Mode::Serialized)) else {
                continue;
            };
            s.pairs += 1;
            match p.cmp(q) {
                std::cmp::Ordering::Less => s.parallel_faster += 1,
                std::cmp::Ordering::Equal => s.ties += 1,
                std::cmp::Ordering::Greater => s.serialized_faster += 1,
            }
            saved.push(*q as f64 - *p as f64);
        }
        if !saved.is_empty() {
            s.mean_ticks_saved = Some(saved.iter().sum::<f64>() / saved.len() as f64);
        }
        s
    });

    RunSummary {
        scenario: spec.config.name.clone(),
        kind: spec.config.kind,
        mode: spec.mode,
        base_seed: spec.seed,
        trials: spec.trials,
        groups,
        pvp,
        paired,
    }
}

/// Writes `trials.jsonl`, `summary.json` and one `events/<trial>.jsonl` per
/// trial under `dir`.
pub fn write_outputs(dir: &Path, trials: &mut [Trial], summary: &RunSummary) -> Result<()> {
    let events = dir.join("events");
    fs::create_dir_all(&events).with_context(|| format!("creating {}", events.display()))?;
    let mut lines = String::new();
    for t in trials.iter_mut() {
        let rel = format!("events/{}.jsonl", t.id);
        fs::write(dir.join(&rel), to_jsonl(&t.report.event_log))?;
        t.report.event_log_path = Some(rel);
        lines.push_str(&serde_json::to_string(&t.report)?);
        lines.push('\n');
    }
    fs::write(dir.join("trials.jsonl"), lines)?;
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(summary)? + "\n")?;
    Ok(())
}

/// Runs every trial, writes outputs when an output directory is set and
/// returns the summary.
pub fn run(spec: &RunSpec) -> Result<RunSummary> {
    let mut trials = run_trials(spec)?;
    let summary = summarize_run(spec, &trials);
    if let Some(dir) = &spec.out {
        write_outputs(dir, &mut trials, &summary)?;
    }
    Ok(summary)
}
