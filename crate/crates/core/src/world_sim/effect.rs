use std::fmt;

use serde::{Deserialize, Serialize};

use crate::item::{Inventory, ItemId};
use crate::memory::AgentId;
use crate::position::Position;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Entity(u64),
    Agent(AgentId),
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Entity(id) => write!(f, "entity#{id}"),
            Target::Agent(a) => f.write_str(a),
        }
    }
}

/// World mutation requested by a skill step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectKind {
    Move { to: Position },
    Mine { at: Position },
    /// One recipe operation (craft or smelt).
    Craft { item: ItemId, fuel: Option<ItemId> },
    Attack { target: Target, weapon: Option<ItemId> },
    Consume { item: ItemId },
    TakeFromChest { at: Position, items: Inventory },
    PutIntoChest { at: Position, items: Inventory },
    Equip { slot: usize, item: Option<ItemId> },
    Chat { text: String, team: String },
}

impl EffectKind {
    pub fn name(&self) -> &'static str {
        match self {
            EffectKind::Move { .. } => "move",
            EffectKind::Mine { .. } => "mine",
            EffectKind::Craft { .. } => "craft",
            EffectKind::Attack { .. } => "attack",
            EffectKind::Consume { .. } => "consume",
            EffectKind::TakeFromChest { .. } => "take_from_chest",
            EffectKind::PutIntoChest { .. } => "put_into_chest",
            EffectKind::Equip { .. } => "equip",
            EffectKind::Chat { .. } => "chat",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Effect {
    pub agent: AgentId,
    /// Execution that emitted the effect.
    pub exec: u64,
    pub kind: EffectKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub reason: String,
    /// True when the same intent may succeed later (a contested block, a
    /// cooldown), false when the skill cannot make progress.
    pub recoverable: bool,
}

impl Rejection {
    pub fn fatal(reason: impl Into<String>) -> Self {
        Self { reason: reason.into(), recoverable: false }
    }

    pub fn retry(reason: impl Into<String>) -> Self {
        Self { reason: reason.into(), recoverable: true }
    }
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.reason)
    }
}

impl std::error::Error for Rejection {}
