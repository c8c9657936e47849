//! Episode orchestration.
//!
//! Every tick runs four phases in a fixed order:
//!
//! 1. planner results due this tick are delivered to their buffers;
//! 2. each actor either starts a buffered action or steps its running skill;
//! 3. idle planners start new cycles;
//! 4. effects are applied, skills settle, the world advances and fresh
//!    observations are written to memory.
//!
//! In virtual time a planner cycle is a scheduled completion `latency` ticks
//! after it starts. In wall-clock time each agent's planner runs on its own
//! thread and the same buffer, signal and memory handles are shared across
//! threads.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{mpsc, Arc};
use std::thread;
use std::time::{Duration, Instant};

use parking_lot::Mutex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::memory::{ActionEntry, AgentId, ChatEntry, SharedMemory, TeamId, TeamMemory, VitalLimits, SYSTEM_SENDER};
use crate::metrics::{EpisodeReport, Outcome};
use crate::runtime::action::{should_interrupt, ActionBuffer, InterruptSignal, PlannedAction};
use crate::runtime::planner::{LatencyModel, Planner, PlannerContext};
use crate::runtime::{Mode, PlanningCadence};
use crate::skills::{start_skill, SkillExecution, SkillOptions};
use crate::world_sim::{init_scenario, Effect, EffectKind, EventBody, ScenarioConfig, ScenarioKind, World, WorldError, WorldSummary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOptions {
    pub cadence: PlanningCadence,
    pub chat_window: usize,
    pub team_digest: bool,
    pub skills: SkillOptions,
    pub system_prompt: String,
    /// One memory per team when set; otherwise every agent keeps its own.
    pub shared_memory: bool,
}

impl Default for EpisodeOptions {
    fn default() -> Self {
        Self {
            cadence: PlanningCadence::default(),
            chat_window: crate::memory::DEFAULT_CHAT_WINDOW,
            team_digest: true,
            skills: SkillOptions::default(),
            system_prompt: String::new(),
            shared_memory: true,
        }
    }
}

pub struct AgentSetup {
    pub planner: Box<dyn Planner>,
    pub latency: LatencyModel,
}

impl AgentSetup {
    pub fn new(planner: impl Planner + 'static, latency: LatencyModel) -> Self {
        Self { planner: Box::new(planner), latency }
    }
}

pub struct EpisodeSetup {
    pub config: ScenarioConfig,
    pub seed: u64,
    /// Mode per team; teams not listed run in parallel.
    pub team_modes: BTreeMap<TeamId, Mode>,
    pub agents: BTreeMap<AgentId, AgentSetup>,
    pub options: EpisodeOptions,
}

impl EpisodeSetup {
    pub fn new(config: ScenarioConfig, seed: u64, mode: Mode) -> Self {
        let team_modes = config.teams.iter().map(|t| (t.id.clone(), mode)).collect();
        Self { config, seed, team_modes, agents: BTreeMap::new(), options: EpisodeOptions::default() }
    }

    pub fn agent(mut self, id: impl Into<AgentId>, planner: impl Planner + 'static, latency: LatencyModel) -> Self {
        self.agents.insert(id.into(), AgentSetup::new(planner, latency));
        self
    }

    pub fn options(mut self, options: EpisodeOptions) -> Self {
        self.options = options;
        self
    }
}

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("no planner configured for agent {0}")]
    MissingPlanner(AgentId),
    #[error("planner configured for unknown agent {0}")]
    UnknownAgent(AgentId),
}

/// Channels shared between an agent's planning and acting loops.
#[derive(Debug, Clone, Default)]
pub struct AgentChannels {
    pub buffer: ActionBuffer,
    pub interrupt: InterruptSignal,
    /// Action the actor is executing right now.
    pub current: Arc<Mutex<Option<PlannedAction>>>,
}

struct InFlight {
    due: u64,
    action: PlannedAction,
    failure: Option<String>,
}

pub struct AgentRuntime {
    pub id: AgentId,
    pub team: TeamId,
    pub mode: Mode,
    pub channels: AgentChannels,
    pub execution: Option<SkillExecution>,
    planner: Option<Box<dyn Planner>>,
    latency: LatencyModel,
    rng: ChaCha8Rng,
    memory_key: String,
    in_flight: Option<InFlight>,
    /// Whether the planner reported exhaustion after its last call.
    exhausted: bool,
    last_delivery: Option<u64>,
    took_plan: bool,
    reported: bool,
    calls: u64,
}

impl AgentRuntime {
    fn idle(&self) -> bool {
        self.in_flight.is_none()
            && self.channels.buffer.is_empty()
            && self.execution.as_ref().is_none_or(|e| !e.is_running())
    }
}

/// Result of a wall-clock planner call, sent back to the episode thread.
struct Delivery {
    agent: usize,
    action: PlannedAction,
    failure: Option<String>,
    exhausted: bool,
    interrupted: Option<(u8, u8)>,
}

struct PlanJob {
    ctx: PlannerContext,
    latency: Duration,
}

struct WallClock {
    jobs: Vec<mpsc::Sender<PlanJob>>,
    deliveries: mpsc::Receiver<Delivery>,
    tick_duration: Duration,
    clock: Arc<AtomicU64>,
    workers: Vec<thread::JoinHandle<()>>,
}

pub struct Episode {
    world: World,
    memories: BTreeMap<String, SharedMemory>,
    agents: Vec<AgentRuntime>,
    options: EpisodeOptions,
    team_modes: BTreeMap<TeamId, Mode>,
    next_exec: u64,
    outcome: Option<Outcome>,
    completion: Option<u64>,
    crystals: usize,
    paused: bool,
    interrupts: u64,
    wall: Option<WallClock>,
}

impl Episode {
    pub fn new(setup: EpisodeSetup) -> Result<Self, EpisodeError> {
        let EpisodeSetup { config, seed, team_modes, mut agents, options } = setup;
        let world = init_scenario(&config, seed)?;
        let limits = VitalLimits { health_max: config.world.health_max, hunger_max: config.world.hunger_max };
        if let Some(extra) = agents.keys().find(|a| world.agent(a).is_none()) {
            return Err(EpisodeError::UnknownAgent(extra.clone()));
        }
        let mut memories = BTreeMap::new();
        let mut runtimes = Vec::new();
        for (index, (team, agent)) in config.roster().into_iter().enumerate() {
            let setup = agents.remove(&agent).ok_or_else(|| EpisodeError::MissingPlanner(agent.clone()))?;
            let memory_key = if options.shared_memory { team.clone() } else { agent.clone() };
            memories
                .entry(memory_key.clone())
                .or_insert_with(|| SharedMemory::new(TeamMemory::with_limits(team.clone(), limits)));
            let exhausted = setup.planner.is_exhausted();
            runtimes.push(AgentRuntime {
                id: agent,
                mode: team_modes.get(&team).copied().unwrap_or(Mode::Parallel),
                team,
                channels: AgentChannels::default(),
                execution: None,
                planner: Some(setup.planner),
                latency: setup.latency,
                rng: ChaCha8Rng::seed_from_u64(seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index as u64 + 1))),
                memory_key,
                in_flight: None,
                exhausted,
                last_delivery: None,
                took_plan: false,
                reported: true,
                calls: 0,
            });
        }
        runtimes.sort_by(|a, b| a.id.cmp(&b.id));
        let crystals = world.crystals_alive();
        let mut ep = Episode {
            world,
            memories,
            agents: runtimes,
            options,
            team_modes,
            next_exec: 1,
            outcome: None,
            completion: None,
            crystals,
            paused: false,
            interrupts: 0,
            wall: None,
        };
        ep.write_observations();
        Ok(ep)
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn tick(&self) -> u64 {
        self.world.tick()
    }

    pub fn agents(&self) -> &[AgentRuntime] {
        &self.agents
    }

    pub fn memory(&self, key: &str) -> Option<&SharedMemory> {
        self.memories.get(key)
    }

    /// Memory handles keyed by team (or by agent when memory is private).
    pub fn memories(&self) -> &BTreeMap<String, SharedMemory> {
        &self.memories
    }

    pub fn outcome(&self) -> Option<&Outcome> {
        self.outcome.as_ref()
    }

    pub fn is_over(&self) -> bool {
        self.outcome.is_some()
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    pub fn set_paused(&mut self, paused: bool) {
        if paused != self.paused {
            self.paused = paused;
            self.world.record(if paused { EventBody::Paused } else { EventBody::Resumed });
        }
    }

    pub fn summary(&self) -> WorldSummary {
        self.world.summary()
    }

    /// Appends a chat entry from outside the episode to `team`'s memory.
    /// With private memories every member of the team receives it.
    pub fn inject_chat(&mut self, sender: &str, team: &str, text: &str) -> Result<(), String> {
        if text.trim().is_empty() {
            return Err("chat text is empty".into());
        }
        if sender.is_empty() || sender.contains(": ") {
            return Err("invalid sender".into());
        }
        let keys: Vec<String> = self.agents.iter().filter(|a| a.team == team).map(|a| a.memory_key.clone()).collect();
        if keys.is_empty() {
            return Err(format!("unknown team {team}"));
        }
        let tick = self.world.tick();
        for key in dedup(keys) {
            self.memories[&key].write(|m| m.append_chat(ChatEntry::new(tick, sender, text, team)));
        }
        self.world.record(EventBody::ControlChat { sender: sender.into(), team: team.into(), text: text.into() });
        Ok(())
    }

    /// Runs one tick. Does nothing once the episode has ended or while
    /// paused.
    pub fn step_tick(&mut self) {
        if self.is_over() || self.paused {
            return;
        }
        let t = self.world.tick();
        if let Some(wall) = &self.wall {
            wall.clock.store(t, Ordering::SeqCst);
        }
        self.deliver_plans(t);
        self.run_actors(t);
        self.start_planners(t);
        self.close_tick();
        self.check_end();
    }

    fn deliver_plans(&mut self, t: u64) {
        let mut deliveries: Vec<Delivery> = Vec::new();
        if let Some(wall) = &self.wall {
            while let Ok(d) = wall.deliveries.try_recv() {
                deliveries.push(d);
            }
            deliveries.sort_by_key(|d| d.agent);
            for d in &deliveries {
                let rt = &mut self.agents[d.agent];
                rt.in_flight = None;
                rt.last_delivery = Some(t);
                rt.exhausted = d.exhausted;
            }
        } else {
            for (k, rt) in self.agents.iter_mut().enumerate() {
                if rt.in_flight.as_ref().is_some_and(|f| f.due <= t) {
                    let f = rt.in_flight.take().unwrap();
                    rt.last_delivery = Some(t);
                    let interrupted = publish(&rt.channels, &self.memories[&rt.memory_key], rt, &f.action, t);
                    deliveries.push(Delivery {
                        agent: k,
                        action: f.action,
                        failure: f.failure,
                        exhausted: rt.exhausted,
                        interrupted,
                    });
                }
            }
        }
        for d in deliveries {
            let agent = self.agents[d.agent].id.clone();
            if let Some(reason) = d.failure {
                self.world.record(EventBody::PlannerFailed { agent: agent.clone(), reason });
            }
            self.world.record(EventBody::PlanDelivered { agent: agent.clone(), action: d.action.to_log_string() });
            if let Some((current, incoming)) = d.interrupted {
                self.interrupts += 1;
                self.world.record(EventBody::InterruptRaised { agent, current, incoming });
            }
        }
    }

    fn run_actors(&mut self, t: u64) {
        for k in 0..self.agents.len() {
            let downed = self.world.agent(&self.agents[k].id).is_none_or(|a| a.is_downed());
            if downed {
                if self.agents[k].execution.as_ref().is_some_and(SkillExecution::is_running) {
                    self.abort(k, t);
                }
                continue;
            }
            let rt = &self.agents[k];
            let running = rt.execution.as_ref().is_some_and(SkillExecution::is_running);
            let ready = match &rt.execution {
                None => true,
                Some(e) => e.status.is_terminal() && e.finished_at.is_none_or(|f| f <= t),
            };
            if running && rt.channels.interrupt.take() {
                self.abort(k, t);
                self.start_next(k);
            } else if ready {
                self.start_next(k);
            }
            let rt = &mut self.agents[k];
            if let Some(exec) = rt.execution.as_mut() {
                for kind in exec.step(&self.world) {
                    self.world.submit(Effect { agent: rt.id.clone(), exec: exec.id, kind });
                }
            }
        }
    }

    fn abort(&mut self, k: usize, t: u64) {
        let rt = &mut self.agents[k];
        let Some(exec) = rt.execution.as_mut() else { return };
        exec.abort(t);
        rt.reported = true;
        *rt.channels.current.lock() = None;
        let ev = EventBody::SkillFinished { agent: rt.id.clone(), exec: exec.id, status: exec.status.label() };
        self.world.record(ev);
    }

    fn start_next(&mut self, k: usize) {
        let rt = &mut self.agents[k];
        let Some(action) = rt.channels.buffer.take() else { return };
        rt.took_plan = true;
        let id = self.next_exec;
        self.next_exec += 1;
        let exec = start_skill(id, &rt.id, action.skill.clone(), &self.world, self.options.skills);
        *rt.channels.current.lock() = Some(action.clone());
        let skill = action.skill.to_string();
        rt.execution = Some(exec);
        rt.reported = false;
        let agent = rt.id.clone();
        self.world.record(EventBody::SkillStarted { agent, exec: id, skill });
    }

    fn start_planners(&mut self, t: u64) {
        for k in 0..self.agents.len() {
            let rt = &self.agents[k];
            if rt.exhausted || rt.in_flight.is_some() || rt.planner.is_none() && self.wall.is_none() {
                self.agents[k].took_plan = false;
                continue;
            }
            if self.world.agent(&rt.id).is_none_or(|a| a.is_downed()) {
                continue;
            }
            let start = match rt.mode {
                Mode::Parallel => match self.options.cadence {
                    PlanningCadence::Continuous { min_gap } => rt.last_delivery.is_none_or(|d| d + min_gap <= t),
                    PlanningCadence::OnDispatch => rt.calls == 0 || rt.took_plan,
                },
                Mode::Serialized => {
                    rt.channels.buffer.is_empty()
                        && match &rt.execution {
                            None => true,
                            Some(e) => e.status.is_terminal() && e.finished_at.is_none_or(|f| f <= t),
                        }
                }
            };
            self.agents[k].took_plan = false;
            if start {
                self.start_planner(k, t);
            }
        }
    }

    fn context(&self, k: usize, t: u64) -> Result<PlannerContext, String> {
        let rt = &self.agents[k];
        let mut ctx = self.memories[&rt.memory_key]
            .read(|m| m.snapshot(&rt.id, self.options.chat_window, self.options.team_digest))
            .map_err(|e| e.to_string())?;
        ctx.system_prompt = self.options.system_prompt.clone();
        ctx.current_action = rt.channels.current.lock().clone();
        ctx.tick = t;
        Ok(ctx)
    }

    fn start_planner(&mut self, k: usize, t: u64) {
        let ctx = self.context(k, t);
        let rt = &mut self.agents[k];
        let latency = rt.latency.sample(&mut rt.rng, rt.calls);
        rt.calls += 1;
        if let Some(wall) = &self.wall {
            let ctx = match ctx {
                Ok(c) => c,
                Err(_) => return,
            };
            let job = PlanJob { ctx, latency: wall.tick_duration * latency as u32 };
            if wall.jobs[k].send(job).is_ok() {
                rt.in_flight = Some(InFlight { due: u64::MAX, action: PlannedAction::idle(""), failure: None });
            }
            return;
        }
        let planner = rt.planner.as_mut().expect("virtual planners stay with the episode");
        let (mut action, failure) = match ctx.and_then(|c| planner.plan(&c).map_err(|e| e.to_string())) {
            Ok(a) => (a, None),
            Err(reason) => (PlannedAction::idle("planner failure"), Some(reason)),
        };
        action.planned_at = t;
        rt.exhausted = planner.is_exhausted();
        rt.in_flight = Some(InFlight { due: t + latency.max(1), action, failure });
    }

    fn close_tick(&mut self) {
        let results = self.world.apply_pending();
        let mut by_agent: BTreeMap<AgentId, Vec<Result<(), crate::world_sim::Rejection>>> = BTreeMap::new();
        let tick = self.world.tick();
        for (effect, r) in results {
            if let (EffectKind::Chat { text, team }, Ok(())) = (&effect.kind, &r) {
                if let Some(rt) = self.agents.iter().find(|a| a.id == effect.agent) {
                    let entry = ChatEntry::new(tick, effect.agent.clone(), text.clone(), team.clone());
                    self.memories[&rt.memory_key].write(|m| m.append_chat(entry));
                }
            }
            by_agent.entry(effect.agent).or_default().push(r);
        }
        for rt in self.agents.iter_mut() {
            let Some(exec) = rt.execution.as_mut() else { continue };
            if exec.is_running() {
                let rs = by_agent.remove(&rt.id).unwrap_or_default();
                exec.settle(&rs, &self.world);
            }
            if exec.status.is_terminal() && !rt.reported {
                rt.reported = true;
                *rt.channels.current.lock() = None;
                let ev = EventBody::SkillFinished { agent: rt.id.clone(), exec: exec.id, status: exec.status.label() };
                self.world.record(ev);
            }
        }
        self.world.advance_tick();
        self.write_observations();
        self.post_system_info();
    }

    fn write_observations(&mut self) {
        for rt in &self.agents {
            if let Ok(obs) = self.world.observe(&rt.id) {
                let _ = self.memories[&rt.memory_key].write(|m| m.update_observation(obs));
            }
        }
    }

    fn broadcast(&self, text: String) {
        let tick = self.world.tick();
        for m in self.memories.values() {
            m.write(|m| {
                let team = m.team().to_owned();
                m.append_chat(ChatEntry::new(tick, SYSTEM_SENDER, text.clone(), team));
            });
        }
    }

    fn post_system_info(&mut self) {
        let Some(spec) = self.world.config().boss.clone() else { return };
        let crystals = self.world.crystals_alive();
        if crystals != self.crystals {
            self.crystals = crystals;
            self.broadcast(format!("Number of End Crystals Remaining: {crystals}"));
        }
        if spec.report_interval > 0 && self.world.tick().is_multiple_of(spec.report_interval) {
            let h = self.world.boss().map_or(0.0, |b| b.health.max(0.0));
            self.broadcast(format!("Boss Health: {h}"));
        }
    }

    fn requirements_met(&self) -> bool {
        let req = &self.world.config().requirements;
        let mut total = crate::item::Inventory::new();
        for team in &self.world.config().teams {
            total.merge(&self.world.team_inventory(&team.id));
        }
        total.covers(req)
    }

    fn team_health(&self, team: &str) -> f64 {
        self.world.agents().filter(|a| a.team == team).map(|a| a.health.max(0.0)).sum()
    }

    fn pvp_result(&self) -> Outcome {
        let teams: Vec<&str> = self.world.config().teams.iter().map(|t| t.id.as_str()).collect();
        let (a, b) = (teams[0], teams[1]);
        let (ha, hb) = (self.team_health(a), self.team_health(b));
        if ha > hb {
            Outcome::Victory(a.to_owned())
        } else if hb > ha {
            Outcome::Victory(b.to_owned())
        } else {
            Outcome::Draw
        }
    }

    fn check_end(&mut self) {
        let config = self.world.config();
        let tick = self.world.tick();
        let all_downed = self.world.agents().all(|a| a.is_downed());
        let drained = self
                .agents
                .iter()
                .filter(|rt| self.world.agent(&rt.id).is_some_and(|a| !a.is_downed()))
                .all(|rt| rt.exhausted && rt.idle());
        let outcome = match config.kind {
            ScenarioKind::ResourceCollection => {
                if !config.requirements.is_empty() && self.requirements_met() {
                    Some(Outcome::Success)
                } else if all_downed {
                    Some(Outcome::Defeat)
                } else if drained {
                    Some(if self.requirements_met() { Outcome::Success } else { Outcome::Defeat })
                } else {
                    None
                }
            }
            ScenarioKind::BossCombat => {
                if self.world.boss().is_none_or(|b| !b.is_alive()) {
                    Some(Outcome::Success)
                } else if all_downed || drained {
                    Some(Outcome::Defeat)
                } else {
                    None
                }
            }
            ScenarioKind::Pvp => {
                let down: Vec<&TeamId> =
                    config.teams.iter().map(|t| &t.id).filter(|t| self.world.team_defeated(t)).collect();
                match down.as_slice() {
                    [] if drained => Some(self.pvp_result()),
                    [] => None,
                    [loser] => config.teams.iter().find(|t| &&t.id != loser).map(|t| Outcome::Victory(t.id.clone())),
                    _ => Some(Outcome::Draw),
                }
            }
        };
        let outcome = match outcome {
            None if tick >= config.tick_limit => Some(match config.kind {
                ScenarioKind::Pvp => self.pvp_result(),
                _ => Outcome::Timeout,
            }),
            o => o,
        };
        if let Some(o) = outcome {
            if o == Outcome::Success {
                self.completion = Some(tick);
            }
            self.world.record(EventBody::EpisodeEnded { outcome: o.label() });
            self.outcome = Some(o);
        }
    }

    /// Steps until the episode ends.
    pub fn run(&mut self) {
        while !self.is_over() {
            self.step_tick();
        }
    }

    /// Consumes the episode into its report.
    pub fn finish(mut self) -> EpisodeReport {
        self.stop_workers();
        let config = self.world.config();
        let outcome = self.outcome.clone().unwrap_or(Outcome::Timeout);
        let modes: Vec<Mode> = self.team_modes.values().copied().collect();
        let mode = match modes.as_slice() {
            [first, rest @ ..] if rest.iter().all(|m| m == first) => Some(*first),
            _ => None,
        };
        let boss_spec = config.boss.as_ref().filter(|_| config.kind == ScenarioKind::BossCombat);
        EpisodeReport {
            scenario: config.name.clone(),
            kind: config.kind,
            mode,
            team_modes: self.team_modes.clone(),
            seed: self.world.seed(),
            success: outcome == Outcome::Success,
            winner: match &outcome {
                Outcome::Victory(t) => Some(t.clone()),
                _ => None,
            },
            outcome,
            completion_ticks: self.completion,
            ticks: self.world.tick(),
            agent_health: self.world.agents().map(|a| (a.id.clone(), a.health.max(0.0))).collect(),
            health_max: config.world.health_max,
            boss_health: boss_spec.map(|_| self.world.boss().map_or(0.0, |b| b.health.max(0.0))),
            boss_max_health: boss_spec.map(|s| s.max_health),
            planner_calls: self.agents.iter().map(|a| a.calls).sum(),
            interrupts: self.interrupts,
            event_log_path: None,
            event_log: self.world.events().to_vec(),
        }
    }

    /// Moves every planner onto its own thread. Planner latency then
    /// becomes real time: each sampled tick lasts `tick_duration`.
    pub fn into_wall_clock(mut self, tick_duration: Duration) -> Self {
        if self.wall.is_some() {
            return self;
        }
        let (done_tx, done_rx) = mpsc::channel();
        let clock = Arc::new(AtomicU64::new(self.world.tick()));
        let mut jobs = Vec::new();
        let mut workers = Vec::new();
        for (k, rt) in self.agents.iter_mut().enumerate() {
            let (tx, rx) = mpsc::channel::<PlanJob>();
            jobs.push(tx);
            let mut planner = rt.planner.take().expect("planner present");
            let channels = rt.channels.clone();
            let memory = self.memories[&rt.memory_key].clone();
            let mode = rt.mode;
            let agent = rt.id.clone();
            let done = done_tx.clone();
            let clock = clock.clone();
            workers.push(thread::spawn(move || {
                while let Ok(job) = rx.recv() {
                    let began = Instant::now();
                    let (mut action, failure) = match planner.plan(&job.ctx) {
                        Ok(a) => (a, None),
                        Err(e) => (PlannedAction::idle("planner failure"), Some(e.to_string())),
                    };
                    action.planned_at = job.ctx.tick;
                    if let Some(rest) = job.latency.checked_sub(began.elapsed()) {
                        thread::sleep(rest);
                    }
                    let tick = clock.load(Ordering::SeqCst);
                    let interrupted = deliver(&channels, &memory, &agent, mode, &action, tick);
                    let d = Delivery { agent: k, action, failure, exhausted: planner.is_exhausted(), interrupted };
                    if done.send(d).is_err() {
                        break;
                    }
                }
            }));
        }
        self.wall = Some(WallClock { jobs, deliveries: done_rx, tick_duration, clock, workers });
        self
    }

    fn stop_workers(&mut self) {
        if let Some(wall) = self.wall.take() {
            drop(wall.jobs);
            drop(wall.deliveries);
            for w in wall.workers {
                let _ = w.join();
            }
        }
    }
}

impl Drop for Episode {
    fn drop(&mut self) {
        self.stop_workers();
    }
}

fn dedup(mut v: Vec<String>) -> Vec<String> {
    v.sort();
    v.dedup();
    v
}

fn publish(
    channels: &AgentChannels,
    memory: &SharedMemory,
    rt: &AgentRuntime,
    action: &PlannedAction,
    tick: u64,
) -> Option<(u8, u8)> {
    deliver(channels, memory, &rt.id, rt.mode, action, tick)
}

/// Delivers a finished plan: buffer, action log, passive chat and, in
/// parallel mode, the interrupt check against the running action.
fn deliver(
    channels: &AgentChannels,
    memory: &SharedMemory,
    agent: &str,
    mode: Mode,
    action: &PlannedAction,
    tick: u64,
) -> Option<(u8, u8)> {
    channels.buffer.put(action.clone());
    let text = if action.reason.is_empty() { action.skill.to_string() } else { action.reason.clone() };
    memory.write(|m| {
        let team = m.team().to_owned();
        m.append_action(ActionEntry { tick, agent: agent.to_owned(), action: action.to_log_string() });
        m.append_chat(ChatEntry::new(tick, agent, text, team));
    });
    if mode == Mode::Serialized {
        return None;
    }
    let current = channels.current.lock().clone()?;
    if should_interrupt(&current, action) {
        channels.interrupt.raise();
        Some((current.priority, action.priority))
    } else {
        None
    }
}

/// Runs a virtual-time episode to completion.
pub fn run_episode(setup: EpisodeSetup) -> Result<EpisodeReport, EpisodeError> {
    let mut ep = Episode::new(setup)?;
    ep.run();
    Ok(ep.finish())
}

/// Runs an episode with planners on their own threads and world ticks paced
/// at `tick_duration`.
pub fn run_wall_clock(setup: EpisodeSetup, tick_duration: Duration) -> Result<EpisodeReport, EpisodeError> {
    let mut ep = Episode::new(setup)?.into_wall_clock(tick_duration);
    while !ep.is_over() {
        let began = Instant::now();
        ep.step_tick();
        if let Some(rest) = tick_duration.checked_sub(began.elapsed()) {
            thread::sleep(rest);
        }
    }
    Ok(ep.finish())
}
