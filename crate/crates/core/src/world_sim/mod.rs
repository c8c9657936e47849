//! Deterministic tick-based environment.
//!
//! Skills never touch the world directly: they submit [`Effect`]s, which are
//! applied in (agent id, submission) order before [`World::advance_tick`]
//! runs the environment's own dynamics and closes the tick.

mod config;
mod effect;
mod equipment;
mod event;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{BossSpec, ConfigError, FieldSpec, ScenarioConfig, ScenarioKind, TeamSpec, WorldParams};
pub use effect::{Effect, EffectKind, Rejection, Target};
pub use equipment::{ArmorStats, EquipmentTable, FoodStats, WeaponStats, EQUIPMENT_TABLE, HAND_SLOT, SLOT_NAMES};
pub use event::{to_jsonl, Event, EventBody};

use crate::crafting_graph::{OperationKind, RecipeGraph};
use crate::item::{Inventory, ItemId};
use crate::memory::{AgentId, ObservationRecord, TeamId};
use crate::position::Position;

/// Ground level agents stand on; resource blocks sit one below.
pub const GROUND_Y: i32 = 64;
const ANIMAL_HEALTH: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityRole {
    Boss,
    Crystal,
    Minion,
    Animal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub id: u64,
    pub kind: String,
    pub role: EntityRole,
    pub health: f64,
    pub max_health: f64,
    pub position: Position,
    pub hostile: bool,
    pub attack_damage: f64,
    pub damage_spread: f64,
    pub attack_cooldown: u32,
    pub cooldown_left: u32,
    pub reach: u32,
    pub damage_reduction: f64,
}

impl Entity {
    pub fn is_alive(&self) -> bool {
        self.health > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentBody {
    pub id: AgentId,
    pub team: TeamId,
    pub health: f64,
    pub hunger: f64,
    pub position: Position,
    pub inventory: Inventory,
    pub equipment: Vec<Option<ItemId>>,
    pub cooldown_left: u32,
}

impl AgentBody {
    pub fn is_downed(&self) -> bool {
        self.health <= 0.0
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum WorldError {
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Compact state for external viewers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSummary {
    pub tick: u64,
    pub seed: u64,
    pub scenario: String,
    pub kind: ScenarioKind,
    pub agents: Vec<AgentBody>,
    pub entities: Vec<Entity>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    tick: u64,
    seed: u64,
    rng: ChaCha8Rng,
    config: ScenarioConfig,
    graph: Arc<RecipeGraph>,
    equipment: Arc<EquipmentTable>,
    resources: BTreeMap<Position, String>,
    chests: BTreeMap<Position, Inventory>,
    entities: BTreeMap<u64, Entity>,
    next_entity: u64,
    agents: BTreeMap<AgentId, AgentBody>,
    queue: Vec<Effect>,
    pending_blocks: Vec<String>,
    pending_animals: Vec<String>,
    log: Vec<Event>,
}

/// Builds the tick-0 world for `config` using the bundled recipe corpus.
pub fn init_scenario(config: &ScenarioConfig, seed: u64) -> Result<World, WorldError> {
    World::new(config, seed, Arc::new(RecipeGraph::desk()), Arc::new(EquipmentTable::bundled()))
}

impl World {
    pub fn new(
        config: &ScenarioConfig,
        seed: u64,
        graph: Arc<RecipeGraph>,
        equipment: Arc<EquipmentTable>,
    ) -> Result<Self, WorldError> {
        config.validate()?;
        let mut w = World {
            tick: 0,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            config: config.clone(),
            graph,
            equipment,
            resources: BTreeMap::new(),
            chests: BTreeMap::new(),
            entities: BTreeMap::new(),
            next_entity: 1,
            agents: BTreeMap::new(),
            queue: Vec::new(),
            pending_blocks: Vec::new(),
            pending_animals: Vec::new(),
            log: Vec::new(),
        };
        w.place_field();
        w.place_agents();
        if let Some(boss) = config.boss.clone() {
            w.place_boss(&boss);
        }
        Ok(w)
    }

    fn place_field(&mut self) {
        let field = self.config.field.clone();
        let mut blocks: BTreeSet<String> = BTreeSet::new();
        let mut animals: BTreeSet<String> = BTreeSet::new();
        for r in self.graph.recipes() {
            match r.kind {
                OperationKind::Mine => {
                    blocks.insert(r.source().to_owned());
                }
                OperationKind::Collect => {
                    animals.insert(r.source().to_owned());
                }
                _ => {}
            }
        }
        for block in &blocks {
            for _ in 0..field.blocks_per_kind {
                if let Some(p) = self.free_block_position() {
                    self.resources.insert(p, block.clone());
                }
            }
        }
        for kind in &animals {
            for _ in 0..field.animals_per_kind {
                let p = self.random_field_position(GROUND_Y);
                self.spawn_animal(kind, p);
            }
        }
    }

    fn random_field_position(&mut self, y: i32) -> Position {
        let r = self.config.field.radius.max(1);
        Position::new(self.rng.gen_range(-r..=r), y, self.rng.gen_range(-r..=r))
    }

    fn free_block_position(&mut self) -> Option<Position> {
        for _ in 0..64 {
            let p = self.random_field_position(GROUND_Y - 1);
            if !self.resources.contains_key(&p) {
                return Some(p);
            }
        }
        None
    }

    fn spawn_animal(&mut self, kind: &str, position: Position) -> u64 {
        self.spawn(Entity {
            id: 0,
            kind: kind.to_owned(),
            role: EntityRole::Animal,
            health: ANIMAL_HEALTH,
            max_health: ANIMAL_HEALTH,
            position,
            hostile: false,
            attack_damage: 0.0,
            damage_spread: 0.0,
            attack_cooldown: 0,
            cooldown_left: 0,
            reach: 0,
            damage_reduction: 0.0,
        })
    }

    fn spawn(&mut self, mut e: Entity) -> u64 {
        e.id = self.next_entity;
        self.next_entity += 1;
        self.log(EventBody::EntitySpawned { id: e.id, kind: e.kind.clone(), position: e.position, health: e.health });
        let id = e.id;
        self.entities.insert(id, e);
        id
    }

    fn place_agents(&mut self) {
        let roster = self.config.roster();
        let mut per_team: BTreeMap<TeamId, i32> = BTreeMap::new();
        let team_index: BTreeMap<TeamId, i32> =
            self.config.teams.iter().enumerate().map(|(k, t)| (t.id.clone(), k as i32)).collect();
        for (team, agent) in roster {
            let k = {
                let c = per_team.entry(team.clone()).or_insert(0);
                *c += 1;
                *c - 1
            };
            let ti = team_index[&team];
            let position = match self.config.kind {
                ScenarioKind::ResourceCollection => Position::new(k, GROUND_Y, 0),
                ScenarioKind::BossCombat => {
                    let c = self.config.boss.as_ref().map_or(Position::new(0, GROUND_Y, 0), |b| b.position);
                    c.offset(k % 5 - 2, 0, 8 + k / 5)
                }
                ScenarioKind::Pvp => Position::new(if ti == 0 { -4 } else { 4 }, GROUND_Y, 2 * k),
            };
            let mut body = AgentBody {
                id: agent.clone(),
                team: team.clone(),
                health: self.config.world.health_max,
                hunger: self.config.world.hunger_max,
                position,
                inventory: self.config.initial_inventory.clone(),
                equipment: vec![None; SLOT_NAMES.len()],
                cooldown_left: 0,
            };
            if self.config.auto_equip {
                for (slot, name) in SLOT_NAMES.iter().enumerate().take(4) {
                    body.equipment[slot] = self.equipment.best_armor(&body.inventory, name);
                }
                body.equipment[HAND_SLOT] = self.equipment.best_weapon(&body.inventory, "sword");
            }
            self.log(EventBody::AgentSpawned {
                agent: agent.clone(),
                team,
                position,
                inventory: body.inventory.clone(),
            });
            self.agents.insert(agent, body);
        }
    }

    fn place_boss(&mut self, spec: &BossSpec) {
        self.spawn(Entity {
            id: 0,
            kind: spec.kind.clone(),
            role: EntityRole::Boss,
            health: spec.max_health,
            max_health: spec.max_health,
            position: spec.position,
            hostile: true,
            attack_damage: spec.attack_damage,
            damage_spread: spec.damage_spread,
            attack_cooldown: spec.attack_cooldown,
            cooldown_left: spec.attack_cooldown,
            reach: spec.reach,
            damage_reduction: spec.damage_reduction,
        });
        let n = spec.crystals.max(1) as f64;
        for k in 0..spec.crystals {
            let angle = std::f64::consts::TAU * f64::from(k) / n;
            let r = f64::from(spec.crystal_ring_radius);
            let p = spec.position.offset((r * angle.cos()).round() as i32, 4, (r * angle.sin()).round() as i32);
            self.spawn(Entity {
                id: 0,
                kind: spec.crystal_kind.clone(),
                role: EntityRole::Crystal,
                health: spec.crystal_health,
                max_health: spec.crystal_health,
                position: p,
                hostile: false,
                attack_damage: 0.0,
                damage_spread: 0.0,
                attack_cooldown: 0,
                cooldown_left: 0,
                reach: 0,
                damage_reduction: 0.0,
            });
        }
        for _ in 0..spec.minions {
            let dx = self.rng.gen_range(-4..=4);
            let dz = self.rng.gen_range(-4..=4);
            self.spawn(Entity {
                id: 0,
                kind: spec.minion_kind.clone(),
                role: EntityRole::Minion,
                health: spec.minion_health,
                max_health: spec.minion_health,
                position: spec.position.offset(dx, 0, dz),
                hostile: true,
                attack_damage: spec.minion_damage,
                damage_spread: 0.0,
                attack_cooldown: spec.minion_cooldown,
                cooldown_left: spec.minion_cooldown,
                reach: 1,
                damage_reduction: 0.0,
            });
        }
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn params(&self) -> &WorldParams {
        &self.config.world
    }

    pub fn graph(&self) -> &Arc<RecipeGraph> {
        &self.graph
    }

    pub fn equipment(&self) -> &EquipmentTable {
        &self.equipment
    }

    pub fn agent(&self, id: &str) -> Option<&AgentBody> {
        self.agents.get(id)
    }

    pub fn agents(&self) -> impl Iterator<Item = &AgentBody> {
        self.agents.values()
    }

    pub fn entity(&self, id: u64) -> Option<&Entity> {
        self.entities.get(&id)
    }

    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        self.entities.values()
    }

    pub fn resources(&self) -> &BTreeMap<Position, String> {
        &self.resources
    }

    pub fn chests(&self) -> &BTreeMap<Position, Inventory> {
        &self.chests
    }

    pub fn events(&self) -> &[Event] {
        &self.log
    }

    pub fn boss(&self) -> Option<&Entity> {
        self.entities.values().find(|e| e.role == EntityRole::Boss)
    }

    pub fn crystals_alive(&self) -> usize {
        self.entities.values().filter(|e| e.role == EntityRole::Crystal && e.is_alive()).count()
    }

    /// Sum of the inventories of `team`'s agents.
    pub fn team_inventory(&self, team: &str) -> Inventory {
        let mut total = Inventory::new();
        for a in self.agents.values().filter(|a| a.team == team) {
            total.merge(&a.inventory);
        }
        total
    }

    pub fn team_defeated(&self, team: &str) -> bool {
        self.agents.values().filter(|a| a.team == team).all(AgentBody::is_downed)
    }

    pub fn place_block(&mut self, at: Position, block: impl Into<String>) {
        self.resources.insert(at, block.into());
    }

    pub fn place_chest(&mut self, at: Position, items: Inventory) {
        self.chests.insert(at, items);
    }

    /// Test and scenario hook: overwrite an agent's inventory.
    pub fn set_inventory(&mut self, agent: &str, inventory: Inventory) -> Result<(), WorldError> {
        let a = self.agents.get_mut(agent).ok_or_else(|| WorldError::UnknownAgent(agent.to_owned()))?;
        a.inventory = inventory;
        Ok(())
    }

    pub fn set_agent_position(&mut self, agent: &str, p: Position) -> Result<(), WorldError> {
        let a = self.agents.get_mut(agent).ok_or_else(|| WorldError::UnknownAgent(agent.to_owned()))?;
        a.position = p;
        Ok(())
    }

    pub fn set_agent_health(&mut self, agent: &str, h: f64) -> Result<(), WorldError> {
        let max = self.config.world.health_max;
        let a = self.agents.get_mut(agent).ok_or_else(|| WorldError::UnknownAgent(agent.to_owned()))?;
        a.health = h.clamp(0.0, max);
        Ok(())
    }

    pub fn set_entity_health(&mut self, id: u64, h: f64) {
        if let Some(e) = self.entities.get_mut(&id) {
            e.health = h.clamp(0.0, e.max_health);
        }
    }

    /// Nearest block of `kind` by Chebyshev distance, ties broken by position.
    pub fn nearest_block(&self, kind: &str, from: Position) -> Option<Position> {
        self.resources
            .iter()
            .filter(|(_, b)| b.as_str() == kind)
            .map(|(p, _)| (from.distance(*p), *p))
            .min()
            .map(|(_, p)| p)
    }

    /// Nearest living entity of `kind`, ties broken by id.
    pub fn nearest_entity(&self, kind: &str, from: Position) -> Option<&Entity> {
        self.entities
            .values()
            .filter(|e| e.kind == kind && e.is_alive())
            .min_by_key(|e| (from.distance(e.position), e.id))
    }

    /// Appends a runtime-level event to the log at the current tick.
    pub fn record(&mut self, body: EventBody) {
        self.log(body);
    }

    fn log(&mut self, body: EventBody) {
        self.log.push(Event { tick: self.tick, body });
    }

    pub fn submit(&mut self, effect: Effect) {
        self.queue.push(effect);
    }

    /// Applies every submitted effect, ordered by agent id then submission.
    pub fn apply_pending(&mut self) -> Vec<(Effect, Result<(), Rejection>)> {
        let mut queue = std::mem::take(&mut self.queue);
        queue.sort_by(|a, b| a.agent.cmp(&b.agent));
        queue
            .into_iter()
            .map(|e| {
                let r = self.apply_effect(&e);
                (e, r)
            })
            .collect()
    }

    /// Applies one effect atomically. A rejected effect leaves the world
    /// unchanged apart from a `rejected` log line.
    pub fn apply_effect(&mut self, effect: &Effect) -> Result<(), Rejection> {
        let r = self.try_apply(effect);
        if let Err(rej) = &r {
            self.log(EventBody::Rejected {
                agent: effect.agent.clone(),
                exec: effect.exec,
                effect: effect.kind.name().to_owned(),
                reason: rej.reason.clone(),
            });
        }
        r
    }

    fn try_apply(&mut self, effect: &Effect) -> Result<(), Rejection> {
        let agent_id = effect.agent.as_str();
        let exec = effect.exec;
        let body = self
            .agents
            .get(agent_id)
            .ok_or_else(|| Rejection::fatal(format!("unknown agent {agent_id}")))?;
        if body.is_downed() {
            return Err(Rejection::fatal("agent is downed"));
        }
        let reach = self.config.world.reach;
        let here = body.position;
        match &effect.kind {
            EffectKind::Move { to } => {
                if here.distance(*to) > 1 {
                    return Err(Rejection::fatal(format!("cannot move from {here} to {to} in one tick")));
                }
                self.agents.get_mut(agent_id).unwrap().position = *to;
                self.log(EventBody::Moved { agent: effect.agent.clone(), exec, from: here, to: *to });
                Ok(())
            }
            EffectKind::Mine { at } => {
                let block = self
                    .resources
                    .get(at)
                    .cloned()
                    .ok_or_else(|| Rejection::retry(format!("no block at {at}")))?;
                if here.distance(*at) > reach {
                    return Err(Rejection::retry(format!("{at} out of reach")));
                }
                let recipe = self
                    .graph
                    .mined_from(&block)
                    .ok_or_else(|| Rejection::fatal(format!("{block} yields nothing")))?;
                if let Some(tool) = &recipe.tool {
                    if body.inventory.count(tool.as_str()) == 0 {
                        return Err(Rejection::fatal(format!("mining {block} needs {tool}")));
                    }
                }
                let drops: Inventory = [(recipe.output.clone(), recipe.n_out)].into_iter().collect();
                self.resources.remove(at);
                if self.config.field.respawn {
                    self.pending_blocks.push(block.clone());
                }
                self.agents.get_mut(agent_id).unwrap().inventory.merge(&drops);
                self.log(EventBody::Mined { agent: effect.agent.clone(), exec, position: *at, block, drops });
                Ok(())
            }
            EffectKind::Craft { item, fuel } => {
                let recipe = self
                    .graph
                    .recipe(item.as_str())
                    .ok_or_else(|| Rejection::fatal(format!("no recipe for {item}")))?;
                if !matches!(recipe.kind, OperationKind::Craft | OperationKind::Smelt) {
                    return Err(Rejection::fatal(format!("{item} is not crafted or smelted")));
                }
                for h in recipe.held() {
                    if body.inventory.count(h.as_str()) == 0 {
                        return Err(Rejection::fatal(format!("{item} needs {h}")));
                    }
                }
                let mut consumed = Inventory::new();
                for i in &recipe.inputs {
                    consumed.add(&i.item, i.r);
                }
                if recipe.kind == OperationKind::Smelt {
                    let f = fuel.clone().or_else(|| recipe.fuel.clone()).unwrap_or_else(|| ItemId::from("coal"));
                    if recipe.fuel.as_ref() != Some(&f) && !self.equipment.fuels.contains(&f) {
                        return Err(Rejection::fatal(format!("{f} is not a fuel")));
                    }
                    consumed.add(&f, 1);
                }
                if !body.inventory.covers(&consumed) {
                    return Err(Rejection::fatal(format!("missing inputs for {item}")));
                }
                let a = self.agents.get_mut(agent_id).unwrap();
                for (i, n) in consumed.iter() {
                    a.inventory.remove(i.as_str(), n);
                }
                a.inventory.add(&recipe.output, recipe.n_out);
                let count = recipe.n_out;
                let item = recipe.output.clone();
                self.log(EventBody::Produced { agent: effect.agent.clone(), exec, item, count, consumed });
                Ok(())
            }
            EffectKind::Attack { target, weapon } => self.apply_attack(effect, target, weapon.as_ref()),
            EffectKind::Consume { item } => {
                if body.inventory.count(item.as_str()) == 0 {
                    return Err(Rejection::fatal(format!("no {item} to consume")));
                }
                let food = self
                    .equipment
                    .food
                    .get(item.as_str())
                    .cloned()
                    .ok_or_else(|| Rejection::fatal(format!("{item} is not edible")))?;
                let (hmax, gmax) = (self.config.world.health_max, self.config.world.hunger_max);
                let a = self.agents.get_mut(agent_id).unwrap();
                a.inventory.remove(item.as_str(), 1);
                a.health = (a.health + food.health).min(hmax);
                a.hunger = (a.hunger + food.hunger).min(gmax);
                let (health, hunger) = (a.health, a.hunger);
                self.log(EventBody::Consumed { agent: effect.agent.clone(), exec, item: item.clone(), health, hunger });
                Ok(())
            }
            EffectKind::TakeFromChest { at, items } | EffectKind::PutIntoChest { at, items } => {
                let to_chest = matches!(effect.kind, EffectKind::PutIntoChest { .. });
                if here.distance(*at) > reach {
                    return Err(Rejection::retry(format!("chest at {at} out of reach")));
                }
                let chest = self.chests.get(at).ok_or_else(|| Rejection::fatal(format!("no chest at {at}")))?;
                let source = if to_chest { &body.inventory } else { chest };
                if !source.covers(items) {
                    return Err(Rejection::fatal("not enough items to transfer"));
                }
                let chest = self.chests.get_mut(at).unwrap();
                let inv = &mut self.agents.get_mut(agent_id).unwrap().inventory;
                for (i, n) in items.iter() {
                    if to_chest {
                        inv.remove(i.as_str(), n);
                        chest.add(i, n);
                    } else {
                        chest.remove(i.as_str(), n);
                        inv.add(i, n);
                    }
                }
                self.log(EventBody::Transferred {
                    agent: effect.agent.clone(),
                    exec,
                    position: *at,
                    items: items.clone(),
                    to_chest,
                });
                Ok(())
            }
            EffectKind::Equip { slot, item } => {
                if *slot >= SLOT_NAMES.len() {
                    return Err(Rejection::fatal(format!("no slot {slot}")));
                }
                if let Some(i) = item {
                    if body.inventory.count(i.as_str()) == 0 {
                        return Err(Rejection::fatal(format!("{i} not in inventory")));
                    }
                    if *slot < HAND_SLOT {
                        match self.equipment.armor.get(i.as_str()) {
                            Some(a) if a.slot == SLOT_NAMES[*slot] => {}
                            _ => return Err(Rejection::fatal(format!("{i} does not fit {}", SLOT_NAMES[*slot]))),
                        }
                    }
                }
                self.agents.get_mut(agent_id).unwrap().equipment[*slot] = item.clone();
                self.log(EventBody::Equipped {
                    agent: effect.agent.clone(),
                    exec,
                    slot: SLOT_NAMES[*slot].to_owned(),
                    item: item.clone(),
                });
                Ok(())
            }
            EffectKind::Chat { text, team } => {
                self.log(EventBody::Chat { agent: effect.agent.clone(), exec, team: team.clone(), text: text.clone() });
                Ok(())
            }
        }
    }

    fn apply_attack(&mut self, effect: &Effect, target: &Target, weapon: Option<&ItemId>) -> Result<(), Rejection> {
        let attacker = &self.agents[effect.agent.as_str()];
        if attacker.cooldown_left > 0 {
            return Err(Rejection::retry("attack on cooldown"));
        }
        if let Some(w) = weapon {
            if attacker.inventory.count(w.as_str()) == 0 {
                return Err(Rejection::fatal(format!("{w} not in inventory")));
            }
        }
        let stats = weapon.map_or(self.equipment.unarmed.clone(), |w| self.equipment.weapon(w.as_str()).clone());
        if let Some(ammo) = &stats.ammo {
            if attacker.inventory.count(ammo.as_str()) == 0 {
                return Err(Rejection::fatal(format!("out of {ammo}")));
            }
        }
        let from = attacker.position;
        let team = attacker.team.clone();
        let (target_pos, target_name, reduction) = match target {
            Target::Entity(id) => {
                let e = self.entities.get(id).filter(|e| e.is_alive()).ok_or_else(|| Rejection::retry("target is gone"))?;
                (e.position, e.kind.clone(), e.damage_reduction)
            }
            Target::Agent(a) => {
                let t = self.agents.get(a.as_str()).ok_or_else(|| Rejection::fatal(format!("no player {a}")))?;
                if t.is_downed() {
                    return Err(Rejection::retry(format!("{a} is already down")));
                }
                if t.team == team {
                    return Err(Rejection::fatal(format!("{a} is a teammate")));
                }
                (t.position, a.clone(), self.equipment.reduction(&t.equipment))
            }
        };
        if from.distance(target_pos) > stats.range {
            return Err(Rejection::retry("target out of range"));
        }
        let spread = self.config.world.hit_spread;
        let jitter = if spread > 0.0 { self.rng.gen_range(-spread..=spread) } else { 0.0 };
        let damage = (stats.damage + jitter).max(0.0) * (1.0 - reduction);
        let cooldown = self.config.world.attack_cooldown;
        let a = self.agents.get_mut(effect.agent.as_str()).unwrap();
        a.cooldown_left = cooldown;
        if let Some(ammo) = &stats.ammo {
            a.inventory.remove(ammo.as_str(), 1);
        }
        if let Some(w) = weapon {
            a.equipment[HAND_SLOT] = Some(w.clone());
        }
        let weapon_name = weapon.map_or("hand".to_owned(), |w| w.to_string());
        match target {
            Target::Entity(id) => {
                let e = self.entities.get_mut(id).unwrap();
                e.health = (e.health - damage).max(0.0);
                let (remaining, kind, role) = (e.health, e.kind.clone(), e.role);
                self.log(EventBody::Attacked {
                    attacker: effect.agent.clone(),
                    exec: Some(effect.exec),
                    target: format!("{kind}#{id}"),
                    weapon: weapon_name,
                    damage,
                    remaining,
                });
                if remaining <= 0.0 {
                    let mut drops = Inventory::new();
                    if role == EntityRole::Animal {
                        for r in self.graph.drops_of(&kind) {
                            drops.add(&r.output, r.n_out);
                        }
                        if self.config.field.respawn {
                            self.pending_animals.push(kind.clone());
                        }
                    }
                    self.agents.get_mut(effect.agent.as_str()).unwrap().inventory.merge(&drops);
                    self.log(EventBody::Killed {
                        killer: effect.agent.clone(),
                        target: format!("{kind}#{id}"),
                        kind,
                        drops,
                    });
                }
            }
            Target::Agent(name) => {
                let t = self.agents.get_mut(name.as_str()).unwrap();
                t.health = (t.health - damage).max(0.0);
                let remaining = t.health;
                self.log(EventBody::Attacked {
                    attacker: effect.agent.clone(),
                    exec: Some(effect.exec),
                    target: target_name,
                    weapon: weapon_name,
                    damage,
                    remaining,
                });
                if remaining <= 0.0 {
                    self.log(EventBody::AgentDowned { agent: name.clone() });
                }
            }
        }
        Ok(())
    }

    /// Runs environment dynamics and closes the tick. Returns the events
    /// logged by this call.
    pub fn advance_tick(&mut self) -> Vec<Event> {
        let start = self.log.len();
        self.hostiles_act();
        self.boss_heals();
        let hunger_interval = self.config.world.hunger_decay_interval;
        let next_tick = self.tick + 1;
        let mut hunger_events = Vec::new();
        for a in self.agents.values_mut() {
            a.cooldown_left = a.cooldown_left.saturating_sub(1);
            if hunger_interval > 0 && next_tick.is_multiple_of(hunger_interval) && !a.is_downed() && a.hunger > 0.0 {
                a.hunger = (a.hunger - 1.0).max(0.0);
                hunger_events.push(EventBody::HungerDecayed { agent: a.id.clone(), hunger: a.hunger });
            }
        }
        for e in hunger_events {
            self.log(e);
        }
        let dead: Vec<u64> = self.entities.values().filter(|e| !e.is_alive()).map(|e| e.id).collect();
        for id in dead {
            let e = self.entities.remove(&id).unwrap();
            self.log(EventBody::EntityRemoved { id, kind: e.kind });
        }
        for block in std::mem::take(&mut self.pending_blocks) {
            if let Some(p) = self.free_block_position() {
                self.resources.insert(p, block.clone());
                self.log(EventBody::BlockSpawned { position: p, block });
            }
        }
        for kind in std::mem::take(&mut self.pending_animals) {
            let p = self.random_field_position(GROUND_Y);
            self.spawn_animal(&kind, p);
        }
        self.tick = next_tick;
        self.log[start..].to_vec()
    }

    fn hostiles_act(&mut self) {
        let ids: Vec<u64> = self.entities.values().filter(|e| e.hostile && e.is_alive()).map(|e| e.id).collect();
        for id in ids {
            let e = self.entities[&id].clone();
            let living: Vec<(u32, &AgentBody)> = self
                .agents
                .values()
                .filter(|a| !a.is_downed())
                .map(|a| (e.position.distance(a.position), a))
                .collect();
            let Some(nearest) = living.iter().map(|(d, _)| *d).min() else { break };
            let candidates: Vec<AgentId> =
                living.iter().filter(|(d, _)| *d == nearest).map(|(_, a)| a.id.clone()).collect();
            if e.role == EntityRole::Minion && nearest > e.reach && nearest <= self.config.world.aggro_radius {
                let target = self.agents[&candidates[0]].position;
                self.entities.get_mut(&id).unwrap().position = e.position.step_toward(target);
            }
            let ent = self.entities.get_mut(&id).unwrap();
            if ent.cooldown_left > 0 {
                ent.cooldown_left -= 1;
                continue;
            }
            if nearest > e.reach {
                continue;
            }
            let victim = if candidates.len() == 1 {
                candidates[0].clone()
            } else {
                candidates[self.rng.gen_range(0..candidates.len())].clone()
            };
            let jitter = if e.damage_spread > 0.0 { self.rng.gen_range(-e.damage_spread..=e.damage_spread) } else { 0.0 };
            let raw = (e.attack_damage + jitter).max(0.0);
            let body = self.agents.get_mut(&victim).unwrap();
            let damage = raw * (1.0 - self.equipment.reduction(&body.equipment));
            body.health = (body.health - damage).max(0.0);
            let remaining = body.health;
            self.entities.get_mut(&id).unwrap().cooldown_left = e.attack_cooldown;
            self.log(EventBody::Attacked {
                attacker: format!("{}#{}", e.kind, e.id),
                exec: None,
                target: victim.clone(),
                weapon: e.kind.clone(),
                damage,
                remaining,
            });
            if remaining <= 0.0 {
                self.log(EventBody::AgentDowned { agent: victim });
            }
        }
    }

    fn boss_heals(&mut self) {
        let Some(spec) = self.config.boss.as_ref() else { return };
        let rate = spec.heal_rate;
        if rate <= 0.0 || self.crystals_alive() == 0 {
            return;
        }
        let Some(boss) = self.entities.values_mut().find(|e| e.role == EntityRole::Boss && e.is_alive()) else {
            return;
        };
        let amount = rate.min(boss.max_health - boss.health);
        if amount <= 0.0 {
            return;
        }
        boss.health += amount;
        let (target, health) = (format!("{}#{}", boss.kind, boss.id), boss.health);
        self.log(EventBody::Healed { target, amount, health });
    }

    /// Observation of `agent` at the current tick.
    pub fn observe(&self, agent: &str) -> Result<ObservationRecord, WorldError> {
        let a = self.agents.get(agent).ok_or_else(|| WorldError::UnknownAgent(agent.to_owned()))?;
        let radius = self.config.world.observation_radius;
        let mut blocks: Vec<(u32, &String)> = self
            .resources
            .iter()
            .map(|(p, b)| (a.position.distance(*p), b))
            .filter(|(d, _)| *d <= radius)
            .collect();
        blocks.sort();
        let mut nearby_blocks: Vec<String> = Vec::new();
        for (_, b) in blocks {
            if !nearby_blocks.contains(b) {
                nearby_blocks.push(b.clone());
            }
        }
        let mut ents: Vec<(u32, u64, &String)> = self
            .entities
            .values()
            .filter(|e| e.is_alive())
            .map(|e| (a.position.distance(e.position), e.id, &e.kind))
            .filter(|(d, _, _)| *d <= radius)
            .collect();
        ents.sort();
        let mut nearby_entities: Vec<String> = Vec::new();
        for (_, _, k) in ents {
            if !nearby_entities.contains(k) {
                nearby_entities.push(k.clone());
            }
        }
        let nearby_players = self
            .agents
            .values()
            .filter(|o| o.id != a.id && !o.is_downed() && a.position.distance(o.position) <= radius)
            .map(|o| o.id.clone())
            .collect();
        Ok(ObservationRecord {
            agent: a.id.clone(),
            tick: self.tick,
            time: if self.tick % 24_000 < 13_000 { "day".into() } else { "night".into() },
            health: a.health,
            hunger: a.hunger,
            position: a.position,
            equipment: a.equipment.clone(),
            inventory: a.inventory.clone(),
            nearby_blocks,
            nearby_entities,
            nearby_players,
        })
    }

    pub fn summary(&self) -> WorldSummary {
        WorldSummary {
            tick: self.tick,
            seed: self.seed,
            scenario: self.config.name.clone(),
            kind: self.config.kind,
            agents: self.agents.values().cloned().collect(),
            entities: self
                .entities
                .values()
                .filter(|e| e.role != EntityRole::Animal)
                .cloned()
                .collect(),
        }
    }
}
