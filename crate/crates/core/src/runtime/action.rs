use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use crate::skills::SkillCall;

/// Highest priority a planner may assign by default.
pub const MAX_PRIORITY: u8 = 3;

/// Fixed priority classes used by the scripted planners and the external
/// adapter when a plan carries no explicit interrupt request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ActionClass {
    Routine = 0,
    Communication = 1,
    Combat = 2,
    Emergency = 3,
}

impl ActionClass {
    pub fn priority(self) -> u8 {
        self as u8
    }

    /// Class of `call` given the agent's health fraction.
    pub fn of(call: &SkillCall, health_fraction: f64) -> Self {
        match call {
            SkillCall::ConsumeItem { .. } if health_fraction <= 0.25 => ActionClass::Emergency,
            SkillCall::CombatWithEntity { .. } | SkillCall::CombatWithPlayer { .. } => ActionClass::Combat,
            SkillCall::ChatMessage { .. } => ActionClass::Communication,
            _ => ActionClass::Routine,
        }
    }
}

/// One planner decision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PlannedAction {
    pub skill: SkillCall,
    pub interrupt: bool,
    pub reason: String,
    pub priority: u8,
    pub planned_at: u64,
}

impl PlannedAction {
    pub fn new(skill: SkillCall, priority: u8, reason: impl Into<String>) -> Self {
        Self {
            skill,
            interrupt: false,
            reason: reason.into(),
            priority: priority.min(MAX_PRIORITY),
            planned_at: 0,
        }
    }

    pub fn idle(reason: impl Into<String>) -> Self {
        Self::new(SkillCall::idle(), 0, reason)
    }

    pub fn with_interrupt(mut self, interrupt: bool) -> Self {
        self.interrupt = interrupt;
        self
    }

    /// JSON object in the planner output shape (`skill`, `interrupt`,
    /// `reason`, plus `priority` and `plannedAt`).
    pub fn to_log_string(&self) -> String {
        serde_json::to_string(self).expect("planned action serializes")
    }

    pub fn from_log_string(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// Strict priority rule: only a strictly higher priority preempts.
pub fn should_interrupt(current: &PlannedAction, incoming: &PlannedAction) -> bool {
    incoming.priority > current.priority
}

/// Capacity-one overwrite mailbox between a planning loop and an acting loop.
///
/// Cloning yields another handle to the same slot.
#[derive(Debug, Clone, Default)]
pub struct ActionBuffer {
    slot: Arc<Mutex<Option<PlannedAction>>>,
}

impl ActionBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores `action`, returning the unconsumed occupant it replaced.
    pub fn put(&self, action: PlannedAction) -> Option<PlannedAction> {
        self.slot.lock().replace(action)
    }

    pub fn take(&self) -> Option<PlannedAction> {
        self.slot.lock().take()
    }

    pub fn peek(&self) -> Option<PlannedAction> {
        self.slot.lock().clone()
    }

    pub fn is_empty(&self) -> bool {
        self.slot.lock().is_none()
    }
}

/// Single-consumer interrupt flag raised by the planning loop.
#[derive(Debug, Clone, Default)]
pub struct InterruptSignal {
    flag: Arc<AtomicBool>,
}

impl InterruptSignal {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn raise(&self) {
        self.flag.store(true, Ordering::Release);
    }

    pub fn is_raised(&self) -> bool {
        self.flag.load(Ordering::Acquire)
    }

    /// Consumes the signal; true if it was raised.
    pub fn take(&self) -> bool {
        self.flag.swap(false, Ordering::AcqRel)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn act(p: u8) -> PlannedAction {
        PlannedAction::new(SkillCall::Idle { ticks: u32::from(p) + 1 }, p, "")
    }

    #[test]
    fn put_into_empty_buffer() {
        let b = ActionBuffer::new();
        assert_eq!(b.put(act(0)), None);
        assert_eq!(b.peek(), Some(act(0)));
    }

    #[test]
    fn second_put_discards_first() {
        let b = ActionBuffer::new();
        b.put(act(1));
        assert_eq!(b.put(act(2)), Some(act(1)));
        assert_eq!(b.take(), Some(act(2)));
        assert_eq!(b.take(), None);
    }

    #[test]
    fn put_after_take() {
        let b = ActionBuffer::new();
        assert_eq!(b.take(), None);
        b.put(act(1));
        assert_eq!(b.take(), Some(act(1)));
        b.put(act(2));
        assert_eq!(b.take(), Some(act(2)));
    }

    #[test]
    fn interrupt_rule_is_strict() {
        assert!(should_interrupt(&act(1), &act(2)));
        assert!(!should_interrupt(&act(2), &act(2)));
        assert!(!should_interrupt(&act(3), &act(1)));
    }

    #[test]
    fn signal_is_consumed_once() {
        let s = InterruptSignal::new();
        assert!(!s.take());
        s.raise();
        assert!(s.is_raised());
        assert!(s.take());
        assert!(!s.take());
    }

    #[test]
    fn priority_is_clamped_to_maximum() {
        assert_eq!(PlannedAction::new(SkillCall::idle(), 9, "").priority, MAX_PRIORITY);
    }

    #[test]
    fn log_string_round_trips() {
        let a = PlannedAction::new("combatWithEntity(bot, 'end_crystal', 'bow', true)".parse().unwrap(), 2, "crystals first")
            .with_interrupt(true);
        let text = a.to_log_string();
        assert!(text.contains("\"interrupt\":true"));
        assert_eq!(PlannedAction::from_log_string(&text).unwrap(), a);
    }
}
