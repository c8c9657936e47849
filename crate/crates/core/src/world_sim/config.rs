use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::item::Inventory;
use crate::memory::{AgentId, TeamId};
use crate::position::Position;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    ResourceCollection,
    BossCombat,
    Pvp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamSpec {
    pub id: TeamId,
    pub size: usize,
    /// Agent names; missing entries default to `<team><k>`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub names: Vec<AgentId>,
}

impl TeamSpec {
    pub fn new(id: impl Into<TeamId>, size: usize) -> Self {
        Self { id: id.into(), size, names: Vec::new() }
    }

    pub fn agent_ids(&self) -> Vec<AgentId> {
        (0..self.size)
            .map(|k| self.names.get(k).cloned().unwrap_or_else(|| format!("{}{}", self.id, k + 1)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BossSpec {
    pub kind: String,
    pub max_health: f64,
    /// Health regained per tick while at least one crystal is alive.
    pub heal_rate: f64,
    pub attack_damage: f64,
    /// Uniform jitter added to each hit, in `[-spread, spread]`.
    pub damage_spread: f64,
    pub attack_cooldown: u32,
    pub reach: u32,
    /// Fraction of incoming damage the boss ignores.
    pub damage_reduction: f64,
    pub crystals: u32,
    pub crystal_kind: String,
    pub crystal_health: f64,
    pub crystal_ring_radius: i32,
    pub minions: u32,
    pub minion_kind: String,
    pub minion_health: f64,
    pub minion_damage: f64,
    pub minion_cooldown: u32,
    pub position: Position,
    /// Ticks between boss-health progress messages.
    pub report_interval: u64,
}

impl Default for BossSpec {
    fn default() -> Self {
        Self {
            kind: "ender_dragon".into(),
            max_health: 200.0,
            heal_rate: 1.0,
            attack_damage: 6.0,
            damage_spread: 0.0,
            attack_cooldown: 3,
            reach: 16,
            damage_reduction: 0.0,
            crystals: 10,
            crystal_kind: "end_crystal".into(),
            crystal_health: 1.0,
            crystal_ring_radius: 10,
            minions: 0,
            minion_kind: "enderman".into(),
            minion_health: 20.0,
            minion_damage: 2.0,
            minion_cooldown: 5,
            position: Position::new(0, 64, 0),
            report_interval: 20,
        }
    }
}

/// Environment constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldParams {
    pub health_max: f64,
    pub hunger_max: f64,
    pub attack_cooldown: u32,
    pub observation_radius: u32,
    /// Ticks per point of hunger lost.
    pub hunger_decay_interval: u64,
    /// Chebyshev distance for mining, chests and melee.
    pub reach: u32,
    /// Default exploration budget of a mining skill.
    pub exploration_ticks: u64,
    /// Hostile non-boss mobs chase agents closer than this.
    pub aggro_radius: u32,
    /// Uniform jitter added to each agent hit, in `[-hit_spread, hit_spread]`.
    pub hit_spread: f64,
}

impl Default for WorldParams {
    fn default() -> Self {
        Self {
            health_max: 20.0,
            hunger_max: 20.0,
            attack_cooldown: 3,
            observation_radius: 16,
            hunger_decay_interval: 100,
            reach: 1,
            exploration_ticks: 600,
            aggro_radius: 6,
            hit_spread: 0.0,
        }
    }
}

/// Placement of mineable blocks and huntable animals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldSpec {
    pub blocks_per_kind: u32,
    pub animals_per_kind: u32,
    pub radius: i32,
    /// Mined blocks and killed animals reappear elsewhere in the field.
    pub respawn: bool,
}

impl Default for FieldSpec {
    fn default() -> Self {
        Self { blocks_per_kind: 12, animals_per_kind: 3, radius: 12, respawn: true }
    }
}

impl FieldSpec {
    pub fn empty() -> Self {
        Self { blocks_per_kind: 0, animals_per_kind: 0, radius: 0, respawn: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub kind: ScenarioKind,
    pub teams: Vec<TeamSpec>,
    /// Team-wide item counts to collect.
    #[serde(default)]
    pub requirements: Inventory,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boss: Option<BossSpec>,
    /// Given to every agent at tick 0.
    #[serde(default)]
    pub initial_inventory: Inventory,
    pub tick_limit: u64,
    #[serde(default)]
    pub world: WorldParams,
    #[serde(default)]
    pub field: FieldSpec,
    /// Equip the best armor and weapon from the initial inventory.
    #[serde(default = "default_true")]
    pub auto_equip: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid scenario: {0}")]
pub struct ConfigError(pub String);

impl ScenarioConfig {
    pub fn resource_collection(requirements: Inventory, agents: usize) -> Self {
        Self {
            name: "resource_collection".into(),
            kind: ScenarioKind::ResourceCollection,
            teams: vec![TeamSpec::new("A", agents)],
            requirements,
            boss: None,
            initial_inventory: Inventory::new(),
            tick_limit: 5000,
            world: WorldParams::default(),
            field: FieldSpec::default(),
            auto_equip: true,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |m: &str| Err(ConfigError(m.to_owned()));
        if self.teams.is_empty() {
            return err("at least one team is required");
        }
        if self.teams.iter().any(|t| t.size == 0) {
            return err("every team needs at least one agent");
        }
        if self.tick_limit == 0 {
            return err("tick limit must be positive");
        }
        let mut seen = BTreeSet::new();
        for id in self.agent_ids() {
            if id.contains(':') || id.is_empty() {
                return err("agent names must be nonempty and contain no ':'");
            }
            if !seen.insert(id) {
                return err("agent names must be unique");
            }
        }
        let teams: BTreeSet<_> = self.teams.iter().map(|t| &t.id).collect();
        if teams.len() != self.teams.len() {
            return err("team ids must be unique");
        }
        match self.kind {
            ScenarioKind::BossCombat if self.boss.is_none() => err("boss combat needs a boss"),
            ScenarioKind::Pvp if self.teams.len() != 2 => err("pvp needs exactly two teams"),
            _ => Ok(()),
        }
    }

    /// Agents as `(team, agent)` pairs in team order.
    pub fn roster(&self) -> Vec<(TeamId, AgentId)> {
        self.teams
            .iter()
            .flat_map(|t| t.agent_ids().into_iter().map(move |a| (t.id.clone(), a)))
            .collect()
    }

    pub fn agent_ids(&self) -> Vec<AgentId> {
        self.roster().into_iter().map(|(_, a)| a).collect()
    }

    pub fn with_team_size(mut self, size: usize) -> Self {
        for t in &mut self.teams {
            t.size = size;
        }
        self
    }
}
