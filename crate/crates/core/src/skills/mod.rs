//! Tick-granular, interruptible skill programs.
//!
//! An execution is started with [`start_skill`], advanced one tick at a time
//! with [`SkillExecution::step`] (which returns the effects for that tick) and
//! [`SkillExecution::settle`] (which folds the applied results back in), and
//! stopped with [`SkillExecution::abort`].

mod call;

use serde::{Deserialize, Serialize};

pub use call::{ParseSkillError, SkillCall};

use crate::crafting_graph::{resolve, OperationKind, PlanStep, Recipe, ResolvedPlan, TaskVertex};
use crate::item::ItemId;
use crate::memory::AgentId;
use crate::position::Position;
use crate::world_sim::{AgentBody, EffectKind, Rejection, Target, World, HAND_SLOT, SLOT_NAMES};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum SkillStatus {
    Running,
    Succeeded,
    Failed(String),
    Aborted,
}

impl SkillStatus {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, SkillStatus::Running)
    }

    pub fn label(&self) -> String {
        match self {
            SkillStatus::Running => "running".into(),
            SkillStatus::Succeeded => "succeeded".into(),
            SkillStatus::Failed(r) => format!("failed: {r}"),
            SkillStatus::Aborted => "aborted".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkillOptions {
    /// Expand acquisition goals through the recipe graph. When off,
    /// `obtainItem` attempts only the goal's own recipe.
    pub rtdm: bool,
}

impl Default for SkillOptions {
    fn default() -> Self {
        Self { rtdm: true }
    }
}

/// One acquisition sub-goal: reach `target` units of `item` using `recipe`.
#[derive(Debug, Clone, PartialEq)]
struct Acquire {
    recipe: Recipe,
    /// Absolute inventory count to reach; set when the task begins.
    target: Option<u32>,
    units: u32,
    fuel: Option<ItemId>,
    /// Entity kind for collect recipes.
    source: String,
    block: Option<Position>,
    entity: Option<u64>,
    direction: Position,
    explore_left: u64,
}

#[derive(Debug, Clone, PartialEq)]
enum Program {
    Acquire { tasks: Vec<Acquire>, cursor: usize, goal: Option<(ItemId, u32)> },
    Combat { kind: String, weapon: Option<ItemId>, looping: bool, target: Option<u64>, kills: u32 },
    Duel { name: AgentId, weapon: Option<ItemId> },
    OneShot { effects: Vec<EffectKind>, approach: Option<Position>, sent: bool },
    Idle { remaining: u32 },
    Done,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkillExecution {
    pub id: u64,
    pub agent: AgentId,
    pub call: SkillCall,
    pub status: SkillStatus,
    /// Number of step calls that ran while the execution was live.
    pub step_index: u32,
    /// Resolver output for `obtainItem`.
    pub expansion: Option<ResolvedPlan>,
    /// Weapon chosen for combat skills.
    pub weapon: Option<ItemId>,
    pub started_at: u64,
    /// First tick at which the agent is free again.
    pub finished_at: Option<u64>,
    program: Program,
}

/// Starts `call` for `agent` at the world's current tick. Unspecified options
/// take their defaults (sword-class weapon, coal fuel, the world's
/// exploration budget). Calls that cannot start come back already failed.
pub fn start_skill(id: u64, agent: &str, call: SkillCall, world: &World, opts: SkillOptions) -> SkillExecution {
    let mut exec = SkillExecution {
        id,
        agent: agent.to_owned(),
        call: call.clone(),
        status: SkillStatus::Running,
        step_index: 0,
        expansion: None,
        weapon: None,
        started_at: world.tick(),
        finished_at: None,
        program: Program::Done,
    };
    let Some(body) = world.agent(agent) else {
        exec.finish(SkillStatus::Failed(format!("unknown agent {agent}")), world.tick() + 1);
        return exec;
    };
    if body.is_downed() {
        exec.finish(SkillStatus::Failed("agent is downed".into()), world.tick() + 1);
        return exec;
    }
    match build_program(&mut exec, body, &call, world, opts) {
        Ok(p) => exec.program = p,
        Err(reason) => {
            exec.finish(SkillStatus::Failed(reason), world.tick() + 1);
            return exec;
        }
    }
    if exec.goal_holds(world) {
        exec.finish(SkillStatus::Succeeded, world.tick() + 1);
    }
    exec
}

fn explore_budget(world: &World, limit: Option<u64>) -> u64 {
    limit.unwrap_or(world.params().exploration_ticks)
}

fn acquire(recipe: &Recipe, units: u32, world: &World) -> Acquire {
    Acquire {
        recipe: recipe.clone(),
        target: None,
        units,
        fuel: None,
        source: recipe.source().to_owned(),
        block: None,
        entity: None,
        direction: Position::new(1, 0, 0),
        explore_left: explore_budget(world, None),
    }
}

fn choose_weapon(body: &AgentBody, world: &World, spec: Option<&str>) -> Result<Option<ItemId>, String> {
    let table = world.equipment();
    match spec {
        None | Some("sword") => Ok(table.best_weapon(&body.inventory, "sword")),
        Some("hand") | Some("fist") => Ok(None),
        Some(w) if body.inventory.count(w) > 0 => Ok(Some(ItemId::from(w))),
        Some(w) => Err(format!("no {w} in inventory")),
    }
}

fn build_program(
    exec: &mut SkillExecution,
    body: &AgentBody,
    call: &SkillCall,
    world: &World,
    opts: SkillOptions,
) -> Result<Program, String> {
    let graph = world.graph();
    let recipe_for = |item: &ItemId| graph.recipe(item.as_str()).ok_or_else(|| format!("no recipe for {item}"));
    Ok(match call {
        SkillCall::ObtainItem { item, count } => {
            let goal = Some((item.clone(), *count));
            let have = body.inventory.count(item.as_str());
            if have >= *count {
                exec.expansion = Some(ResolvedPlan::default());
                return Ok(Program::Acquire { tasks: Vec::new(), cursor: 0, goal });
            }
            let plan = if opts.rtdm {
                let recipe = recipe_for(item)?;
                let vertex = TaskVertex { item: item.clone(), count: *count, kind: recipe.kind };
                resolve(graph, &vertex, &body.inventory).map_err(|e| e.to_string())?
            } else {
                let recipe = recipe_for(item)?;
                if recipe.kind == OperationKind::Given {
                    return Err(format!("{item} cannot be produced"));
                }
                let need = count - have;
                ResolvedPlan {
                    steps: vec![PlanStep {
                        task: TaskVertex { item: item.clone(), count: need, kind: recipe.kind },
                        operations: need.div_ceil(recipe.n_out),
                    }],
                }
            };
            let tasks = plan
                .steps
                .iter()
                .map(|s| {
                    let r = graph.recipe(s.task.item.as_str()).expect("planned items have recipes");
                    acquire(r, s.operations * r.n_out, world)
                })
                .collect();
            exec.expansion = Some(plan);
            Program::Acquire { tasks, cursor: 0, goal }
        }
        SkillCall::MineItem { item, count, direction, time_limit } => {
            let recipe = graph
                .mined_from(item.as_str())
                .or_else(|| graph.recipe(item.as_str()).filter(|r| r.kind == OperationKind::Mine))
                .ok_or_else(|| format!("{item} cannot be mined"))?;
            let mut t = acquire(recipe, *count, world);
            if let Some(d) = direction {
                t.direction = Position::new(d.x.signum(), d.y.signum(), d.z.signum());
            }
            t.explore_left = explore_budget(world, *time_limit);
            Program::Acquire { tasks: vec![t], cursor: 0, goal: None }
        }
        SkillCall::CraftItem { item, count, use_station } => {
            let recipe = recipe_for(item)?;
            if recipe.kind != OperationKind::Craft {
                return Err(format!("{item} is not crafted"));
            }
            if *use_station == Some(false) && recipe.station.is_some() {
                return Err(format!("{item} needs a station"));
            }
            Program::Acquire { tasks: vec![acquire(recipe, *count, world)], cursor: 0, goal: None }
        }
        SkillCall::SmeltItem { item, count, fuel } => {
            let recipe = recipe_for(item)?;
            if recipe.kind != OperationKind::Smelt {
                return Err(format!("{item} is not smelted"));
            }
            let mut t = acquire(recipe, *count, world);
            t.fuel = fuel.clone();
            Program::Acquire { tasks: vec![t], cursor: 0, goal: None }
        }
        SkillCall::CollectItem { item, count, source } => {
            let recipe = recipe_for(item)?;
            if recipe.kind != OperationKind::Collect {
                return Err(format!("{item} is not collected from a creature"));
            }
            let mut t = acquire(recipe, *count, world);
            if let Some(s) = source {
                t.source = s.clone();
            }
            Program::Acquire { tasks: vec![t], cursor: 0, goal: None }
        }
        SkillCall::CombatWithEntity { kind, weapon, looping } => {
            let w = choose_weapon(body, world, weapon.as_deref())?;
            exec.weapon = w.clone();
            let target = world.nearest_entity(kind, body.position).map(|e| e.id);
            if target.is_none() {
                return Err(format!("no {kind} nearby"));
            }
            Program::Combat { kind: kind.clone(), weapon: w, looping: looping.unwrap_or(false), target, kills: 0 }
        }
        SkillCall::CombatWithPlayer { name, weapon } => {
            if world.agent(name).is_none() {
                return Err(format!("no player {name}"));
            }
            let w = choose_weapon(body, world, weapon.as_deref())?;
            exec.weapon = w.clone();
            Program::Duel { name: name.clone(), weapon: w }
        }
        SkillCall::ChatMessage { text, team } => Program::OneShot {
            effects: vec![EffectKind::Chat { text: text.clone(), team: team.clone() }],
            approach: None,
            sent: false,
        },
        SkillCall::GetFromChest { position, items } => Program::OneShot {
            effects: vec![EffectKind::TakeFromChest { at: *position, items: items.clone() }],
            approach: Some(*position),
            sent: false,
        },
        SkillCall::DepositToChest { position, items } => Program::OneShot {
            effects: vec![EffectKind::PutIntoChest { at: *position, items: items.clone() }],
            approach: Some(*position),
            sent: false,
        },
        SkillCall::EquipBest { slot } => {
            let effects = equip_effects(body, world, slot)?;
            Program::OneShot { effects, approach: None, sent: false }
        }
        SkillCall::ConsumeItem { item } => {
            if body.inventory.count(item.as_str()) == 0 {
                return Err(format!("no {item} to consume"));
            }
            Program::OneShot { effects: vec![EffectKind::Consume { item: item.clone() }], approach: None, sent: false }
        }
        SkillCall::InitialInventory { .. } => {
            return Err("initial inventory is only applied when a scenario starts".into());
        }
        SkillCall::Idle { ticks } => Program::Idle { remaining: *ticks },
    })
}

fn equip_effects(body: &AgentBody, world: &World, slot: &str) -> Result<Vec<EffectKind>, String> {
    let table = world.equipment();
    let mut wanted: Vec<(usize, Option<ItemId>)> = Vec::new();
    match slot {
        "armor" => {
            for (k, name) in SLOT_NAMES.iter().enumerate().take(HAND_SLOT) {
                wanted.push((k, table.best_armor(&body.inventory, name)));
            }
        }
        "hand" | "weapon" | "sword" => wanted.push((HAND_SLOT, table.best_weapon(&body.inventory, "sword"))),
        "bow" => wanted.push((HAND_SLOT, (body.inventory.count("bow") > 0).then(|| ItemId::from("bow")))),
        "off_hand" => wanted.push((5, (body.inventory.count("shield") > 0).then(|| ItemId::from("shield")))),
        other => match SLOT_NAMES.iter().position(|s| *s == other) {
            Some(k) => wanted.push((k, table.best_armor(&body.inventory, other))),
            None => return Err(format!("unknown equipment slot {other}")),
        },
    }
    Ok(wanted
        .into_iter()
        .filter(|(k, item)| item.is_some() && body.equipment[*k] != *item)
        .map(|(slot, item)| EffectKind::Equip { slot, item })
        .collect())
}

/// Next position on the way to within `within` of `to`, preferring to stay
/// at the current height. `None` when already there.
fn approach(from: Position, to: Position, within: u32) -> Option<Position> {
    if from.distance(to) <= within {
        return None;
    }
    let level = Position::new(to.x, from.y, to.z);
    let next = from.step_toward(level);
    Some(if next == from { from.step_toward(to) } else { next })
}

enum Tick {
    Effects(Vec<EffectKind>),
    Wait,
    Done,
    Fail(String),
}

impl Acquire {
    fn done(&self, body: &AgentBody) -> bool {
        self.target.is_some_and(|t| body.inventory.count(self.recipe.output.as_str()) >= t)
    }

    fn begin(&mut self, body: &AgentBody) {
        if self.target.is_none() {
            self.target = Some(body.inventory.count(self.recipe.output.as_str()) + self.units);
        }
    }

    fn step(&mut self, body: &AgentBody, world: &World) -> Tick {
        let r = &self.recipe;
        match r.kind {
            OperationKind::Given => Tick::Fail(format!("{} cannot be produced", r.output)),
            OperationKind::Craft | OperationKind::Smelt => {
                for h in r.held() {
                    if body.inventory.count(h.as_str()) == 0 {
                        return Tick::Fail(format!("{} needs {h}", r.output));
                    }
                }
                for (input, n) in r.consumed() {
                    let input = if r.fuel.as_ref() == Some(input) { self.fuel.as_ref().unwrap_or(input) } else { input };
                    if body.inventory.count(input.as_str()) < n {
                        return Tick::Fail(format!("{} needs {n} {input}", r.output));
                    }
                }
                Tick::Effects(vec![EffectKind::Craft { item: r.output.clone(), fuel: self.fuel.clone() }])
            }
            OperationKind::Mine => {
                if let Some(tool) = &r.tool {
                    if body.inventory.count(tool.as_str()) == 0 {
                        return Tick::Fail(format!("mining {} needs {tool}", r.source()));
                    }
                }
                let source = r.source().to_owned();
                let cached = self.block.filter(|p| world.resources().get(p) == Some(&source));
                let block = cached.or_else(|| world.nearest_block(&source, body.position));
                self.block = block;
                match block {
                    None => self.explore(body),
                    Some(at) => match approach(body.position, at, world.params().reach) {
                        Some(to) => Tick::Effects(vec![EffectKind::Move { to }]),
                        None => Tick::Effects(vec![EffectKind::Mine { at }]),
                    },
                }
            }
            OperationKind::Collect => {
                let cached = self.entity.and_then(|id| world.entity(id)).filter(|e| e.is_alive() && e.kind == self.source);
                let target = cached.or_else(|| world.nearest_entity(&self.source, body.position));
                self.entity = target.map(|e| e.id);
                match target {
                    None => self.explore(body),
                    Some(e) => {
                        let weapon = world.equipment().best_weapon(&body.inventory, "sword");
                        strike(body, world, e.position, Target::Entity(e.id), weapon)
                    }
                }
            }
        }
    }

    fn explore(&mut self, body: &AgentBody) -> Tick {
        if self.explore_left == 0 {
            return Tick::Fail(format!("no {} found", self.source));
        }
        self.explore_left -= 1;
        Tick::Effects(vec![EffectKind::Move { to: body.position.offset(self.direction.x, self.direction.y, self.direction.z) }])
    }
}

/// Moves into weapon range, then attacks when the cooldown allows.
fn strike(body: &AgentBody, world: &World, at: Position, target: Target, weapon: Option<ItemId>) -> Tick {
    let stats = weapon.as_ref().map_or(&world.equipment().unarmed, |w| world.equipment().weapon(w.as_str()));
    if let Some(ammo) = &stats.ammo {
        if body.inventory.count(ammo.as_str()) == 0 {
            return Tick::Fail(format!("out of {ammo}"));
        }
    }
    match approach(body.position, at, stats.range) {
        Some(to) => Tick::Effects(vec![EffectKind::Move { to }]),
        None if body.cooldown_left > 0 => Tick::Wait,
        None => Tick::Effects(vec![EffectKind::Attack { target, weapon }]),
    }
}

impl SkillExecution {
    pub fn is_running(&self) -> bool {
        self.status == SkillStatus::Running
    }

    fn finish(&mut self, status: SkillStatus, free_at: u64) {
        if self.status.is_terminal() {
            return;
        }
        self.status = status;
        self.finished_at = Some(free_at);
        self.program = Program::Done;
    }

    /// Stops a running execution before its next step. Terminal executions
    /// are left as they are.
    pub fn abort(&mut self, tick: u64) {
        self.finish(SkillStatus::Aborted, tick);
    }

    /// Whether the call's goal already holds in `world`.
    fn goal_holds(&mut self, world: &World) -> bool {
        let Some(body) = world.agent(&self.agent) else { return false };
        match &mut self.program {
            Program::Acquire { tasks, cursor, goal } => {
                while let Some(t) = tasks.get_mut(*cursor) {
                    t.begin(body);
                    if !t.done(body) {
                        return false;
                    }
                    *cursor += 1;
                    if let Some(next) = tasks.get_mut(*cursor) {
                        next.begin(body);
                    }
                }
                match goal {
                    Some((item, count)) => body.inventory.count(item.as_str()) >= *count,
                    None => true,
                }
            }
            Program::Combat { kind, looping, target, kills, .. } => {
                let alive = target.and_then(|id| world.entity(id)).is_some_and(|e| e.is_alive());
                if alive {
                    return false;
                }
                if target.is_some() {
                    *kills += 1;
                    *target = None;
                }
                if *looping {
                    match world.nearest_entity(kind, body.position) {
                        Some(e) => {
                            *target = Some(e.id);
                            false
                        }
                        None => true,
                    }
                } else {
                    *kills > 0
                }
            }
            Program::Duel { name, .. } => world.agent(name).is_some_and(AgentBody::is_downed),
            Program::OneShot { effects, sent, .. } => *sent || effects.is_empty(),
            Program::Idle { remaining } => *remaining == 0,
            Program::Done => true,
        }
    }

    /// Advances by one tick of work and returns the effects to submit.
    pub fn step(&mut self, world: &World) -> Vec<EffectKind> {
        if !self.is_running() {
            return Vec::new();
        }
        let tick = world.tick();
        let Some(body) = world.agent(&self.agent) else {
            self.finish(SkillStatus::Failed("agent vanished".into()), tick + 1);
            return Vec::new();
        };
        if body.is_downed() {
            self.finish(SkillStatus::Failed("agent is downed".into()), tick + 1);
            return Vec::new();
        }
        self.step_index += 1;
        if self.goal_holds(world) {
            self.finish(SkillStatus::Succeeded, tick + 1);
            return Vec::new();
        }
        let outcome = match &mut self.program {
            Program::Acquire { tasks, cursor, .. } => match tasks.get_mut(*cursor) {
                Some(t) => t.step(body, world),
                None => Tick::Fail("plan finished short of the goal".into()),
            },
            Program::Combat { target, weapon, .. } => match target.and_then(|id| world.entity(id)) {
                Some(e) => strike(body, world, e.position, Target::Entity(e.id), weapon.clone()),
                None => Tick::Fail("target lost".into()),
            },
            Program::Duel { name, weapon } => match world.agent(name) {
                Some(t) => strike(body, world, t.position, Target::Agent(name.clone()), weapon.clone()),
                None => Tick::Fail(format!("no player {name}")),
            },
            Program::OneShot { effects, approach: near, sent } => {
                match near.and_then(|p| approach(body.position, p, world.params().reach)) {
                    Some(to) => Tick::Effects(vec![EffectKind::Move { to }]),
                    None => {
                        *sent = true;
                        Tick::Effects(effects.clone())
                    }
                }
            }
            Program::Idle { remaining } => {
                *remaining -= 1;
                if *remaining == 0 {
                    Tick::Done
                } else {
                    Tick::Wait
                }
            }
            Program::Done => Tick::Wait,
        };
        match outcome {
            Tick::Effects(e) => e,
            Tick::Wait => Vec::new(),
            Tick::Done => {
                self.finish(SkillStatus::Succeeded, tick + 1);
                Vec::new()
            }
            Tick::Fail(reason) => {
                self.finish(SkillStatus::Failed(reason), tick + 1);
                Vec::new()
            }
        }
    }

    /// Folds this tick's applied results into the execution. Call after the
    /// world has applied the effects from [`step`](Self::step) and before the
    /// tick closes.
    pub fn settle(&mut self, results: &[Result<(), Rejection>], world: &World) {
        if !self.is_running() {
            return;
        }
        let free_at = world.tick() + 1;
        if let Some(rej) = results.iter().filter_map(|r| r.as_ref().err()).find(|r| !r.recoverable) {
            self.finish(SkillStatus::Failed(rej.reason.clone()), free_at);
            return;
        }
        if results.iter().any(Result::is_err) {
            match &mut self.program {
                Program::Acquire { tasks, cursor, .. } => {
                    if let Some(t) = tasks.get_mut(*cursor) {
                        t.block = None;
                        t.entity = None;
                    }
                }
                Program::OneShot { sent, .. } => *sent = false,
                _ => {}
            }
        }
        if self.goal_holds(world) {
            self.finish(SkillStatus::Succeeded, free_at);
        }
    }
}
