use serde::{Deserialize, Serialize};

use crate::item::{Inventory, ItemId};
use crate::memory::AgentId;
use crate::position::Position;

/// One line of the JSON-lines event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub tick: u64,
    #[serde(flatten)]
    pub body: EventBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventBody {
    AgentSpawned { agent: AgentId, team: String, position: Position, inventory: Inventory },
    EntitySpawned { id: u64, kind: String, position: Position, health: f64 },
    BlockSpawned { position: Position, block: String },
    Moved { agent: AgentId, exec: u64, from: Position, to: Position },
    Mined { agent: AgentId, exec: u64, position: Position, block: String, drops: Inventory },
    Produced { agent: AgentId, exec: u64, item: ItemId, count: u32, consumed: Inventory },
    Attacked { attacker: String, exec: Option<u64>, target: String, weapon: String, damage: f64, remaining: f64 },
    Killed { killer: String, target: String, kind: String, drops: Inventory },
    EntityRemoved { id: u64, kind: String },
    AgentDowned { agent: AgentId },
    Healed { target: String, amount: f64, health: f64 },
    Consumed { agent: AgentId, exec: u64, item: ItemId, health: f64, hunger: f64 },
    Transferred { agent: AgentId, exec: u64, position: Position, items: Inventory, to_chest: bool },
    Equipped { agent: AgentId, exec: u64, slot: String, item: Option<ItemId> },
    Chat { agent: AgentId, exec: u64, team: String, text: String },
    HungerDecayed { agent: AgentId, hunger: f64 },
    Rejected { agent: AgentId, exec: u64, effect: String, reason: String },
    SkillStarted { agent: AgentId, exec: u64, skill: String },
    SkillFinished { agent: AgentId, exec: u64, status: String },
    PlanDelivered { agent: AgentId, action: String },
    PlannerFailed { agent: AgentId, reason: String },
    InterruptRaised { agent: AgentId, current: u8, incoming: u8 },
    ControlChat { sender: String, team: String, text: String },
    Paused,
    Resumed,
    EpisodeEnded { outcome: String },
}

impl EventBody {
    /// Execution id an effect-derived event is attributed to.
    pub fn exec(&self) -> Option<u64> {
        match self {
            EventBody::Moved { exec, .. }
            | EventBody::Mined { exec, .. }
            | EventBody::Produced { exec, .. }
            | EventBody::Consumed { exec, .. }
            | EventBody::Transferred { exec, .. }
            | EventBody::Equipped { exec, .. }
            | EventBody::Chat { exec, .. }
            | EventBody::Rejected { exec, .. } => Some(*exec),
            EventBody::Attacked { exec, .. } => *exec,
            _ => None,
        }
    }

    pub fn is_effect(&self) -> bool {
        !matches!(
            self,
            EventBody::SkillStarted { .. } | EventBody::SkillFinished { .. } | EventBody::Rejected { .. }
        ) && self.exec().is_some()
    }
}

/// Serializes events as JSON lines.
pub fn to_jsonl(events: &[Event]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("event serializes"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_shape_is_tick_kind_payload() {
        let e = Event { tick: 4, body: EventBody::AgentDowned { agent: "Steve".into() } };
        let line = serde_json::to_string(&e).unwrap();
        assert_eq!(line, r#"{"tick":4,"kind":"agent_downed","payload":{"agent":"Steve"}}"#);
        assert_eq!(serde_json::from_str::<Event>(&line).unwrap(), e);
        let unit = Event { tick: 1, body: EventBody::Paused };
        assert_eq!(serde_json::from_str::<Event>(&serde_json::to_string(&unit).unwrap()).unwrap(), unit);
    }
}
