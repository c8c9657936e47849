//! Centralized team memory.
//!
//! Observations keep only the latest record per agent; the chat log and the
//! action history only grow. A memory belongs to one team.

use std::collections::BTreeMap;
use std::sync::Arc;

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::item::{Inventory, ItemId};
use crate::position::Position;
use crate::runtime::{PlannedAction, PlannerContext};

pub type AgentId = String;
pub type TeamId = String;

/// Sender name used for environment progress messages.
pub const SYSTEM_SENDER: &str = "SystemInfo";

/// Default number of chat entries handed to a planner.
pub const DEFAULT_CHAT_WINDOW: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ObservationRecord {
    pub agent: AgentId,
    pub tick: u64,
    pub time: String,
    pub health: f64,
    pub hunger: f64,
    pub position: Position,
    pub equipment: Vec<Option<ItemId>>,
    pub inventory: Inventory,
    pub nearby_blocks: Vec<String>,
    pub nearby_entities: Vec<String>,
    pub nearby_players: Vec<AgentId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatEntry {
    pub tick: u64,
    /// Agent id, [`SYSTEM_SENDER`] or a human name. Never contains `": "`.
    pub sender: String,
    pub text: String,
    pub team: TeamId,
}

impl ChatEntry {
    pub fn new(tick: u64, sender: impl Into<String>, text: impl Into<String>, team: impl Into<String>) -> Self {
        Self { tick, sender: sender.into(), text: text.into(), team: team.into() }
    }

    pub fn system(tick: u64, text: impl Into<String>, team: impl Into<String>) -> Self {
        Self::new(tick, SYSTEM_SENDER, text, team)
    }

    /// `"sender: text"`, the chat-log line form.
    pub fn line(&self) -> String {
        format!("{}: {}", self.sender, self.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionEntry {
    pub tick: u64,
    pub agent: AgentId,
    /// Serialized [`PlannedAction`].
    pub action: String,
}

impl ActionEntry {
    pub fn planned_action(&self) -> Option<PlannedAction> {
        PlannedAction::from_log_string(&self.action).ok()
    }
}

/// Teammate summary included in planner context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TeammateDigest {
    pub agent: AgentId,
    pub position: Position,
    pub health: f64,
    pub current_action: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VitalLimits {
    pub health_max: f64,
    pub hunger_max: f64,
}

impl Default for VitalLimits {
    fn default() -> Self {
        Self { health_max: 20.0, hunger_max: 20.0 }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MemoryError {
    #[error("stale observation for {agent}: tick {offered} < stored {stored}")]
    StaleObservation { agent: AgentId, offered: u64, stored: u64 },
    #[error("observation for {agent} out of bounds: {reason}")]
    OutOfBounds { agent: AgentId, reason: String },
    #[error("no observation recorded for agent {0}")]
    UnknownAgent(AgentId),
    #[error("malformed memory document: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeamMemory {
    team: TeamId,
    limits: VitalLimits,
    observations: BTreeMap<AgentId, ObservationRecord>,
    chat: Vec<ChatEntry>,
    actions: Vec<ActionEntry>,
}

impl TeamMemory {
    pub fn new(team: impl Into<TeamId>) -> Self {
        Self::with_limits(team, VitalLimits::default())
    }

    pub fn with_limits(team: impl Into<TeamId>, limits: VitalLimits) -> Self {
        Self {
            team: team.into(),
            limits,
            observations: BTreeMap::new(),
            chat: Vec::new(),
            actions: Vec::new(),
        }
    }

    pub fn team(&self) -> &str {
        &self.team
    }

    pub fn limits(&self) -> VitalLimits {
        self.limits
    }

    pub fn observations(&self) -> &BTreeMap<AgentId, ObservationRecord> {
        &self.observations
    }

    pub fn observation(&self, agent: &str) -> Option<&ObservationRecord> {
        self.observations.get(agent)
    }

    pub fn chat(&self) -> &[ChatEntry] {
        &self.chat
    }

    pub fn actions(&self) -> &[ActionEntry] {
        &self.actions
    }

    /// Replaces the agent's observation. Older ticks are rejected.
    pub fn update_observation(&mut self, obs: ObservationRecord) -> Result<(), MemoryError> {
        if let Some(prev) = self.observations.get(&obs.agent) {
            if obs.tick < prev.tick {
                return Err(MemoryError::StaleObservation {
                    agent: obs.agent,
                    offered: obs.tick,
                    stored: prev.tick,
                });
            }
        }
        let bad = |reason: String| MemoryError::OutOfBounds { agent: obs.agent.clone(), reason };
        if !(0.0..=self.limits.health_max).contains(&obs.health) {
            return Err(bad(format!("health {}", obs.health)));
        }
        if !(0.0..=self.limits.hunger_max).contains(&obs.hunger) {
            return Err(bad(format!("hunger {}", obs.hunger)));
        }
        self.observations.insert(obs.agent.clone(), obs);
        Ok(())
    }

    /// Appends to the chat log. A tick earlier than the last entry is raised
    /// to it so the log stays ordered when writers race.
    pub fn append_chat(&mut self, mut entry: ChatEntry) {
        debug_assert!(!entry.sender.contains(": "));
        if let Some(last) = self.chat.last() {
            entry.tick = entry.tick.max(last.tick);
        }
        self.chat.push(entry);
    }

    pub fn append_action(&mut self, mut entry: ActionEntry) {
        if let Some(last) = self.actions.last() {
            entry.tick = entry.tick.max(last.tick);
        }
        self.actions.push(entry);
    }

    pub fn last_action_of(&self, agent: &str) -> Option<&ActionEntry> {
        self.actions.iter().rev().find(|a| a.agent == agent)
    }

    /// Planner context for `agent`: its own latest observation, the last
    /// `window` chat entries, its most recent action entry and, when
    /// `digest` is set, a summary of every teammate.
    pub fn snapshot(&self, agent: &str, window: usize, digest: bool) -> Result<PlannerContext, MemoryError> {
        let own = self
            .observations
            .get(agent)
            .ok_or_else(|| MemoryError::UnknownAgent(agent.to_owned()))?;
        let start = self.chat.len().saturating_sub(window);
        let team_digest = if digest {
            self.observations
                .values()
                .filter(|o| o.agent != agent)
                .map(|o| TeammateDigest {
                    agent: o.agent.clone(),
                    position: o.position,
                    health: o.health,
                    current_action: self
                        .last_action_of(&o.agent)
                        .and_then(|a| a.planned_action())
                        .map(|a| a.skill.to_string()),
                })
                .collect()
        } else {
            Vec::new()
        };
        Ok(PlannerContext {
            system_prompt: String::new(),
            agent: agent.to_owned(),
            team: self.team.clone(),
            tick: own.tick,
            health_max: self.limits.health_max,
            observation: own.clone(),
            recent_chat: self.chat[start..].to_vec(),
            last_action: self.last_action_of(agent).cloned(),
            current_action: None,
            team_digest,
        })
    }

    pub fn export(&self) -> MemoryDocument {
        let mut chat_log: Vec<ChatGroup> = Vec::new();
        for entry in &self.chat {
            match chat_log.last_mut() {
                Some(g) if g.tick == entry.tick && g.team == entry.team => g.messages.push(entry.line()),
                _ => chat_log.push(ChatGroup {
                    tick: entry.tick,
                    team: entry.team.clone(),
                    messages: vec![entry.line()],
                }),
            }
        }
        let mut action_log: BTreeMap<AgentId, Vec<ActionLine>> = BTreeMap::new();
        for (seq, a) in self.actions.iter().enumerate() {
            action_log.entry(a.agent.clone()).or_default().push(ActionLine {
                seq,
                tick: a.tick,
                action: a.action.clone(),
            });
        }
        MemoryDocument {
            team: self.team.clone(),
            limits: self.limits,
            observations: self.observations.clone(),
            chat_log,
            action_log,
        }
    }

    pub fn export_json(&self) -> String {
        serde_json::to_string_pretty(&self.export()).expect("memory document serializes")
    }

    pub fn import(doc: MemoryDocument) -> Result<Self, MemoryError> {
        let mut chat = Vec::new();
        for group in doc.chat_log {
            for line in group.messages {
                let (sender, text) = line
                    .split_once(": ")
                    .ok_or_else(|| MemoryError::Malformed(format!("chat line without sender: {line:?}")))?;
                chat.push(ChatEntry::new(group.tick, sender, text, group.team.clone()));
            }
        }
        let mut indexed: Vec<(usize, ActionEntry)> = Vec::new();
        for (agent, lines) in doc.action_log {
            for l in lines {
                indexed.push((l.seq, ActionEntry { tick: l.tick, agent: agent.clone(), action: l.action }));
            }
        }
        indexed.sort_by_key(|(seq, _)| *seq);
        if indexed.iter().enumerate().any(|(k, (seq, _))| k != *seq) {
            return Err(MemoryError::Malformed("action log sequence numbers are not contiguous".into()));
        }
        for (agent, obs) in &doc.observations {
            if *agent != obs.agent {
                return Err(MemoryError::Malformed(format!("observation keyed {agent} belongs to {}", obs.agent)));
            }
        }
        Ok(Self {
            team: doc.team,
            limits: doc.limits,
            observations: doc.observations,
            chat,
            actions: indexed.into_iter().map(|(_, a)| a).collect(),
        })
    }

    pub fn import_json(text: &str) -> Result<Self, MemoryError> {
        let doc: MemoryDocument = serde_json::from_str(text).map_err(|e| MemoryError::Malformed(e.to_string()))?;
        Self::import(doc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatGroup {
    pub tick: u64,
    pub team: TeamId,
    pub messages: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionLine {
    pub seq: usize,
    pub tick: u64,
    pub action: String,
}

/// JSON export: observations keyed by agent, chat as ordered `"sender: text"`
/// lines grouped by tick, actions keyed by agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MemoryDocument {
    pub team: TeamId,
    pub limits: VitalLimits,
    pub observations: BTreeMap<AgentId, ObservationRecord>,
    pub chat_log: Vec<ChatGroup>,
    pub action_log: BTreeMap<AgentId, Vec<ActionLine>>,
}

/// Thread-safe handle. Writes are serialized; readers never see a partial
/// write.
#[derive(Debug, Clone)]
pub struct SharedMemory {
    inner: Arc<RwLock<TeamMemory>>,
}

impl SharedMemory {
    pub fn new(memory: TeamMemory) -> Self {
        Self { inner: Arc::new(RwLock::new(memory)) }
    }

    pub fn read<R>(&self, f: impl FnOnce(&TeamMemory) -> R) -> R {
        f(&self.inner.read())
    }

    pub fn write<R>(&self, f: impl FnOnce(&mut TeamMemory) -> R) -> R {
        f(&mut self.inner.write())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn obs(agent: &str, tick: u64) -> ObservationRecord {
        ObservationRecord {
            agent: agent.into(),
            tick,
            time: "day".into(),
            health: 20.0,
            hunger: 20.0,
            position: Position::new(0, 64, 0),
            equipment: vec![None; 6],
            inventory: Inventory::new(),
            nearby_blocks: vec![],
            nearby_entities: vec![],
            nearby_players: vec![],
        }
    }

    #[test]
    fn first_observation_is_stored() {
        let mut m = TeamMemory::new("A");
        m.update_observation(obs("Steve", 0)).unwrap();
        assert_eq!(m.observations().keys().collect::<Vec<_>>(), vec!["Steve"]);
    }

    #[test]
    fn newer_observation_replaces_older() {
        let mut m = TeamMemory::new("A");
        m.update_observation(obs("Steve", 1)).unwrap();
        m.update_observation(obs("Steve", 2)).unwrap();
        assert_eq!(m.observations().len(), 1);
        assert_eq!(m.observation("Steve").unwrap().tick, 2);
    }

    #[test]
    fn stale_observation_rejected() {
        let mut m = TeamMemory::new("A");
        m.update_observation(obs("Steve", 2)).unwrap();
        let before = m.clone();
        let err = m.update_observation(obs("Steve", 1)).unwrap_err();
        assert!(matches!(err, MemoryError::StaleObservation { offered: 1, stored: 2, .. }));
        assert_eq!(m, before);
    }

    #[test]
    fn out_of_bounds_health_rejected() {
        let mut m = TeamMemory::new("A");
        let mut o = obs("Steve", 0);
        o.health = 25.0;
        assert!(m.update_observation(o).is_err());
    }

    #[test]
    fn chat_keeps_everything_in_order() {
        let mut m = TeamMemory::new("A");
        for k in 0..3 {
            m.append_chat(ChatEntry::new(k, "Steve", format!("m{k}"), "A"));
        }
        let texts: Vec<_> = m.chat().iter().map(|c| c.text.as_str()).collect();
        assert_eq!(texts, vec!["m0", "m1", "m2"]);

        m.append_chat(ChatEntry::system(3, "Boss Health: 200", "A"));
        assert_eq!(m.chat().last().unwrap().line(), "SystemInfo: Boss Health: 200");

        for k in 0..10_000 {
            m.append_chat(ChatEntry::new(4, "Alex", k.to_string(), "A"));
        }
        assert_eq!(m.chat().len(), 10_004);
    }

    #[test]
    fn actions_interleave_by_tick() {
        let mut m = TeamMemory::new("A");
        m.append_action(ActionEntry { tick: 1, agent: "A1".into(), action: "{}".into() });
        m.append_action(ActionEntry { tick: 2, agent: "B1".into(), action: "{}".into() });
        m.append_action(ActionEntry { tick: 3, agent: "A1".into(), action: "{}".into() });
        let agents: Vec<_> = m.actions().iter().map(|a| a.agent.as_str()).collect();
        assert_eq!(agents, vec!["A1", "B1", "A1"]);
    }

    #[test]
    fn snapshot_window_and_freshness() {
        let mut m = TeamMemory::new("A");
        m.update_observation(obs("Steve", 0)).unwrap();
        for k in 0..3 {
            m.append_chat(ChatEntry::new(k, "Alex", format!("m{k}"), "A"));
        }
        assert_eq!(m.snapshot("Steve", 5, true).unwrap().recent_chat.len(), 3);
        for k in 3..5 {
            m.append_chat(ChatEntry::new(k, "Alex", format!("m{k}"), "A"));
        }
        let ctx = m.snapshot("Steve", 2, true).unwrap();
        let texts: Vec<_> = ctx.recent_chat.iter().map(|c| c.text.as_str()).collect();
        assert_eq!(texts, vec!["m3", "m4"]);

        m.update_observation(obs("Steve", 7)).unwrap();
        assert_eq!(m.snapshot("Steve", 2, true).unwrap().observation.tick, 7);
        assert!(matches!(m.snapshot("Nobody", 2, true), Err(MemoryError::UnknownAgent(_))));
    }

    #[test]
    fn snapshot_digest_covers_teammates() {
        let mut m = TeamMemory::new("A");
        m.update_observation(obs("Steve", 0)).unwrap();
        m.update_observation(obs("Alex", 0)).unwrap();
        let action = PlannedAction::new("obtainItem(bot, 1, 'stick')".parse().unwrap(), 0, "");
        m.append_action(ActionEntry { tick: 0, agent: "Alex".into(), action: action.to_log_string() });
        let ctx = m.snapshot("Steve", 16, true).unwrap();
        assert_eq!(ctx.team_digest.len(), 1);
        assert_eq!(ctx.team_digest[0].current_action.as_deref(), Some("obtainItem(bot, 1, 'stick')"));
        assert!(m.snapshot("Steve", 16, false).unwrap().team_digest.is_empty());
    }

    #[test]
    fn empty_memory_exports_empty_document() {
        let doc = TeamMemory::new("A").export();
        assert!(doc.observations.is_empty());
        assert!(doc.chat_log.is_empty());
        assert!(doc.action_log.is_empty());
    }

    #[test]
    fn export_uses_observation_field_names() {
        let mut m = TeamMemory::new("A");
        let mut o = obs("Steve", 3);
        o.health = 12.8;
        o.hunger = 17.0;
        o.position = Position::new(10, 65, -8);
        o.inventory = [("arrow", 187), ("golden_apple", 4)].into_iter().collect();
        o.nearby_blocks = vec!["end_stone".into(), "bedrock".into()];
        o.nearby_entities = vec!["enderman".into(), "ender_dragon".into()];
        m.update_observation(o).unwrap();
        let json: serde_json::Value = serde_json::from_str(&m.export_json()).unwrap();
        let steve = &json["observations"]["Steve"];
        for key in ["time", "health", "hunger", "position", "equipment", "inventory", "nearbyBlocks", "nearbyEntities", "nearbyPlayers"] {
            assert!(steve.get(key).is_some(), "missing {key}");
        }
        assert_eq!(steve["position"], "(10, 65, -8)");
        assert_eq!(steve["inventory"]["arrow"], 187);
    }

    #[test]
    fn action_text_survives_round_trip() {
        let mut m = TeamMemory::new("A");
        let action = PlannedAction::new(
            r#"chatMessage(bot, "Let's prioritize taking down the end_crystals.", 'A')"#.parse().unwrap(),
            1,
            "Communicate the plan.",
        );
        let text = action.to_log_string();
        m.append_action(ActionEntry { tick: 0, agent: "Notch".into(), action: text.clone() });
        let back = TeamMemory::import_json(&m.export_json()).unwrap();
        assert_eq!(back.actions()[0].action.as_bytes(), text.as_bytes());
        assert_eq!(back, m);
    }

    #[test]
    fn malformed_documents_rejected() {
        assert!(TeamMemory::import_json("{").is_err());
        let mut doc = TeamMemory::new("A").export();
        doc.chat_log.push(ChatGroup { tick: 0, team: "A".into(), messages: vec!["no separator".into()] });
        assert!(TeamMemory::import(doc).is_err());
    }
}
