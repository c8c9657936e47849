//! Scripted planners for the bundled scenarios.

use std::collections::{BTreeMap, BTreeSet};

use crate::crafting_graph::{resolve, RecipeGraph, TaskVertex};
use crate::item::{Inventory, ItemId};
use crate::memory::AgentId;
use crate::runtime::action::{ActionClass, PlannedAction};
use crate::runtime::planner::{Planner, PlannerContext, PlannerError};
use crate::skills::SkillCall;

/// Splits a requirement dictionary across agents: items in decreasing order
/// of estimated plan length, each to the currently least-loaded agent.
pub fn allocate(
    requirements: &Inventory,
    agents: &[AgentId],
    graph: &RecipeGraph,
) -> BTreeMap<AgentId, Vec<(ItemId, u32)>> {
    let mut out: BTreeMap<AgentId, Vec<(ItemId, u32)>> = agents.iter().map(|a| (a.clone(), Vec::new())).collect();
    if agents.is_empty() {
        return out;
    }
    let mut items: Vec<(u64, ItemId, u32)> = requirements
        .iter()
        .map(|(item, n)| {
            let cost = graph
                .recipe(item.as_str())
                .and_then(|r| {
                    let goal = TaskVertex { item: item.clone(), count: n, kind: r.kind };
                    resolve(graph, &goal, &Inventory::new()).ok()
                })
                .map_or(0, |p| p.total_operations());
            (cost, item.clone(), n)
        })
        .collect();
    items.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    let mut load: Vec<u64> = vec![0; agents.len()];
    for (cost, item, n) in items {
        let (k, _) = load.iter().enumerate().min_by_key(|(k, l)| (**l, *k)).unwrap();
        load[k] += cost.max(1);
        out.get_mut(&agents[k]).unwrap().push((item, n));
    }
    out
}

/// Obtains each assigned item in turn.
#[derive(Debug, Clone)]
pub struct ResourcePolicy {
    assignment: Vec<(ItemId, u32)>,
}

impl ResourcePolicy {
    pub fn new(assignment: Vec<(ItemId, u32)>) -> Self {
        Self { assignment }
    }
}

impl Planner for ResourcePolicy {
    fn plan(&mut self, ctx: &PlannerContext) -> Result<PlannedAction, PlannerError> {
        let inv = &ctx.observation.inventory;
        let busy_with = match ctx.current_skill() {
            Some(SkillCall::ObtainItem { item, .. }) => Some(item.clone()),
            _ => None,
        };
        let missing: Vec<&(ItemId, u32)> = self.assignment.iter().filter(|(i, n)| inv.count(i.as_str()) < *n).collect();
        let pick = missing
            .iter()
            .find(|(i, _)| Some(i) != busy_with.as_ref())
            .or_else(|| missing.first());
        Ok(match pick {
            Some((item, count)) => PlannedAction::new(
                SkillCall::ObtainItem { item: item.clone(), count: *count },
                ActionClass::Routine.priority(),
                format!("I still need {count} {item}."),
            ),
            None => PlannedAction::idle("My share of the requirements is done."),
        })
    }
}

fn heal_action(ctx: &PlannerContext, threshold: f64, item: &str) -> Option<PlannedAction> {
    if ctx.observation.health <= threshold && ctx.observation.inventory.count(item) > 0 {
        Some(PlannedAction::new(
            SkillCall::ConsumeItem { item: item.into() },
            ActionClass::Emergency.priority(),
            format!("My health is down to {:.1}, eating a {item}.", ctx.observation.health),
        ))
    } else {
        None
    }
}

/// Heals when low, clears crystals first, then fights the boss.
#[derive(Debug, Clone)]
pub struct BossPolicy {
    pub boss_kind: String,
    pub crystal_kind: String,
    pub heal_threshold: f64,
    pub heal_item: String,
    /// Weapon for every attack; the skill's default when unset.
    pub weapon: Option<String>,
}

impl BossPolicy {
    pub fn new(boss_kind: impl Into<String>, crystal_kind: impl Into<String>) -> Self {
        Self {
            boss_kind: boss_kind.into(),
            crystal_kind: crystal_kind.into(),
            heal_threshold: 8.0,
            heal_item: "golden_apple".into(),
            weapon: Some("bow".into()),
        }
    }
}

impl Planner for BossPolicy {
    fn plan(&mut self, ctx: &PlannerContext) -> Result<PlannedAction, PlannerError> {
        if let Some(a) = heal_action(ctx, self.heal_threshold, &self.heal_item) {
            return Ok(a);
        }
        let seen = &ctx.observation.nearby_entities;
        let target = if seen.contains(&self.crystal_kind) {
            &self.crystal_kind
        } else if seen.contains(&self.boss_kind) {
            &self.boss_kind
        } else {
            return Ok(PlannedAction::idle("No target in sight."));
        };
        Ok(PlannedAction::new(
            SkillCall::CombatWithEntity { kind: target.clone(), weapon: self.weapon.clone(), looping: Some(true) },
            ActionClass::Combat.priority(),
            format!("Attacking the nearest {target}."),
        ))
    }
}

/// Heals when low, otherwise attacks the first visible enemy by name.
#[derive(Debug, Clone)]
pub struct PvpPolicy {
    teammates: BTreeSet<AgentId>,
    pub heal_threshold: f64,
    pub heal_item: String,
    pub weapon: Option<String>,
}

impl PvpPolicy {
    pub fn new(teammates: impl IntoIterator<Item = AgentId>) -> Self {
        Self {
            teammates: teammates.into_iter().collect(),
            heal_threshold: 8.0,
            heal_item: "golden_apple".into(),
            weapon: Some("bow".into()),
        }
    }
}

impl Planner for PvpPolicy {
    fn plan(&mut self, ctx: &PlannerContext) -> Result<PlannedAction, PlannerError> {
        if let Some(a) = heal_action(ctx, self.heal_threshold, &self.heal_item) {
            return Ok(a);
        }
        let mut enemies: Vec<&AgentId> = ctx
            .observation
            .nearby_players
            .iter()
            .filter(|p| !self.teammates.contains(*p) && **p != ctx.agent)
            .collect();
        enemies.sort();
        Ok(match enemies.first() {
            Some(name) => PlannedAction::new(
                SkillCall::CombatWithPlayer { name: (*name).clone(), weapon: self.weapon.clone() },
                ActionClass::Combat.priority(),
                format!("Engaging {name}."),
            ),
            None => PlannedAction::idle("No enemy in sight."),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::ObservationRecord;
    use crate::position::Position;

    fn ctx(health: f64, inventory: Inventory, entities: &[&str], players: &[&str]) -> PlannerContext {
        PlannerContext {
            system_prompt: String::new(),
            agent: "A1".into(),
            team: "A".into(),
            tick: 0,
            health_max: 20.0,
            observation: ObservationRecord {
                agent: "A1".into(),
                tick: 0,
                time: "day".into(),
                health,
                hunger: 20.0,
                position: Position::default(),
                equipment: vec![None; 6],
                inventory,
                nearby_blocks: vec![],
                nearby_entities: entities.iter().map(|s| s.to_string()).collect(),
                nearby_players: players.iter().map(|s| s.to_string()).collect(),
            },
            recent_chat: vec![],
            last_action: None,
            current_action: None,
            team_digest: vec![],
        }
    }

    #[test]
    fn allocation_balances_by_plan_length() {
        let g = RecipeGraph::desk();
        let req: Inventory = [("iron_pickaxe", 1), ("iron_shovel", 1), ("iron_hoe", 1), ("iron_axe", 1)].into_iter().collect();
        let agents: Vec<AgentId> = vec!["A1".into(), "A2".into()];
        let split = allocate(&req, &agents, &g);
        assert_eq!(split["A1"].len() + split["A2"].len(), 4);
        assert_eq!(split["A1"].len(), 2);
        let one = allocate(&req, &agents[..1], &g);
        assert_eq!(one["A1"].len(), 4);
    }

    #[test]
    fn boss_policy_priorities() {
        let mut p = BossPolicy::new("ender_dragon", "end_crystal");
        let apples: Inventory = [("golden_apple", 2)].into_iter().collect();
        let a = p.plan(&ctx(5.0, apples.clone(), &["end_crystal", "ender_dragon"], &[])).unwrap();
        assert_eq!(a.priority, 3);
        let a = p.plan(&ctx(20.0, apples.clone(), &["end_crystal", "ender_dragon"], &[])).unwrap();
        assert_eq!(a.skill.to_string(), "combatWithEntity(bot, 'end_crystal', 'bow', true)");
        let a = p.plan(&ctx(20.0, apples, &["ender_dragon"], &[])).unwrap();
        assert_eq!(a.skill.to_string(), "combatWithEntity(bot, 'ender_dragon', 'bow', true)");
        let a = p.plan(&ctx(5.0, Inventory::new(), &["ender_dragon"], &[])).unwrap();
        assert_eq!(a.priority, 2);
    }

    #[test]
    fn pvp_policy_targets_first_enemy() {
        let mut p = PvpPolicy::new(["A1".to_string(), "A2".to_string()]);
        let a = p.plan(&ctx(20.0, Inventory::new(), &[], &["A2", "B3", "B2"])).unwrap();
        assert_eq!(a.skill.to_string(), "combatWithPlayer(bot, 'B2', 'bow')");
        let a = p.plan(&ctx(20.0, Inventory::new(), &[], &["A2"])).unwrap();
        assert_eq!(a.priority, 0);
    }

    #[test]
    fn resource_policy_skips_the_item_in_progress() {
        let mut p = ResourcePolicy::new(vec![("stick".into(), 4), ("torch".into(), 4)]);
        let mut c = ctx(20.0, Inventory::new(), &[], &[]);
        assert_eq!(p.plan(&c).unwrap().skill.to_string(), "obtainItem(bot, 4, 'stick')");
        c.current_action = Some(PlannedAction::new("obtainItem(bot, 4, 'stick')".parse().unwrap(), 0, ""));
        assert_eq!(p.plan(&c).unwrap().skill.to_string(), "obtainItem(bot, 4, 'torch')");
        c.observation.inventory = [("stick", 4), ("torch", 4)].into_iter().collect();
        assert_eq!(p.plan(&c).unwrap().skill, SkillCall::idle());
    }
}
