//! Live control of a running episode.
//!
//! Commands travel over a channel and are applied by the episode thread
//! between ticks, so a client never touches the world or memory directly.
//! The episode publishes a JSON state document after every tick.

use std::sync::mpsc;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::metrics::EpisodeReport;
use crate::runtime::episode::Episode;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum ControlCommand {
    InjectChat { sender: String, team: String, text: String },
    Pause,
    Resume,
    /// Fresh state for one agent, or for everything when `agent` is unset.
    Snapshot { agent: Option<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ControlError {
    #[error("{0}")]
    Rejected(String),
    #[error("episode is no longer running")]
    Closed,
    #[error("episode did not answer in time")]
    Timeout,
}

struct Request {
    command: ControlCommand,
    reply: mpsc::Sender<Result<Value, String>>,
}

/// Client side. Cheap to clone.
#[derive(Clone)]
pub struct ControlHandle {
    tx: mpsc::Sender<Request>,
    state: Arc<RwLock<Value>>,
    timeout: Duration,
}

/// Episode side.
pub struct ControlEndpoint {
    rx: mpsc::Receiver<Request>,
    state: Arc<RwLock<Value>>,
}

pub fn control_channel() -> (ControlHandle, ControlEndpoint) {
    let (tx, rx) = mpsc::channel();
    let state = Arc::new(RwLock::new(Value::Null));
    (
        ControlHandle { tx, state: state.clone(), timeout: Duration::from_secs(10) },
        ControlEndpoint { rx, state },
    )
}

impl ControlHandle {
    /// Sends a command and waits for the episode to apply it.
    pub fn send(&self, command: ControlCommand) -> Result<Value, ControlError> {
        let (reply, answer) = mpsc::channel();
        self.tx.send(Request { command, reply }).map_err(|_| ControlError::Closed)?;
        match answer.recv_timeout(self.timeout) {
            Ok(r) => r.map_err(ControlError::Rejected),
            Err(mpsc::RecvTimeoutError::Timeout) => Err(ControlError::Timeout),
            Err(mpsc::RecvTimeoutError::Disconnected) => Err(ControlError::Closed),
        }
    }

    /// Last published state. Stays readable after the episode ends.
    pub fn state(&self) -> Value {
        self.state.read().clone()
    }
}

/// JSON state document: tick, pause flag, world summary and each memory's
/// export.
pub fn state_document(ep: &Episode) -> Value {
    let memories: serde_json::Map<String, Value> = ep
        .memories()
        .iter()
        .map(|(k, m)| (k.clone(), m.read(|m| serde_json::to_value(m.export()).unwrap_or(Value::Null))))
        .collect();
    json!({
        "tick": ep.tick(),
        "paused": ep.is_paused(),
        "finished": ep.is_over(),
        "outcome": ep.outcome().map(|o| o.label()),
        "world": ep.summary(),
        "memory": memories,
    })
}

fn agent_document(ep: &Episode, agent: &str) -> Option<Value> {
    let rt = ep.agents().iter().find(|a| a.id == agent)?;
    let body = ep.world().agent(agent)?;
    let obs = ep.world().observe(agent).ok()?;
    Some(json!({
        "tick": ep.tick(),
        "agent": body,
        "observation": obs,
        "current_action": rt.channels.current.lock().clone(),
        "buffered": rt.channels.buffer.peek(),
    }))
}

impl ControlEndpoint {
    /// Applies every queued command. Returns true if any arrived. Replies
    /// go out only after the resulting state is published, so a client
    /// that reads state after an acknowledgement sees its own command.
    pub fn drain(&self, ep: &mut Episode) -> bool {
        let mut replies = Vec::new();
        while let Ok(req) = self.rx.try_recv() {
            let result = match req.command {
                ControlCommand::InjectChat { sender, team, text } => {
                    ep.inject_chat(&sender, &team, &text).map(|_| json!({"ok": true, "tick": ep.tick()}))
                }
                ControlCommand::Pause => {
                    ep.set_paused(true);
                    Ok(json!({"ok": true, "paused": true, "tick": ep.tick()}))
                }
                ControlCommand::Resume => {
                    ep.set_paused(false);
                    Ok(json!({"ok": true, "paused": false, "tick": ep.tick()}))
                }
                ControlCommand::Snapshot { agent: None } => Ok(state_document(ep)),
                ControlCommand::Snapshot { agent: Some(a) } => {
                    agent_document(ep, &a).ok_or_else(|| format!("unknown agent {a}"))
                }
            };
            replies.push((req.reply, result));
        }
        if replies.is_empty() {
            return false;
        }
        self.publish(ep);
        for (reply, result) in replies {
            let _ = reply.send(result);
        }
        true
    }

    pub fn publish(&self, ep: &Episode) {
        *self.state.write() = state_document(ep);
    }
}

/// Runs `ep` with ticks paced at `tick_duration`, applying control
/// commands between ticks. While paused the loop keeps answering commands
/// but the world does not advance. With `linger` set the loop keeps serving
/// commands after the episode ends, until every handle is dropped.
pub fn run_paced(mut ep: Episode, endpoint: ControlEndpoint, tick_duration: Duration, linger: bool) -> EpisodeReport {
    endpoint.publish(&ep);
    loop {
        let began = Instant::now();
        endpoint.drain(&mut ep);
        if ep.is_over() {
            break;
        }
        if !ep.is_paused() {
            ep.step_tick();
            endpoint.publish(&ep);
        }
        if let Some(rest) = tick_duration.checked_sub(began.elapsed()) {
            thread::sleep(rest);
        }
    }
    endpoint.publish(&ep);
    if linger {
        while let Ok(req) = endpoint.rx.recv() {
            let result = match req.command {
                ControlCommand::Snapshot { agent: None } => Ok(state_document(&ep)),
                ControlCommand::Snapshot { agent: Some(a) } => {
                    agent_document(&ep, &a).ok_or_else(|| format!("unknown agent {a}"))
                }
                _ => Err("episode has finished".to_owned()),
            };
            let _ = req.reply.send(result);
        }
    }
    ep.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::item::Inventory;
    use crate::runtime::episode::EpisodeSetup;
    use crate::runtime::planner::{LatencyModel, SequencePlanner};
    use crate::runtime::{Mode, PlannedAction};
    use crate::skills::SkillCall;
    use crate::world_sim::{FieldSpec, ScenarioConfig};

    fn episode(limit: u64) -> Episode {
        let mut cfg = ScenarioConfig::resource_collection(Inventory::new(), 1);
        cfg.field = FieldSpec::empty();
        cfg.tick_limit = limit;
        let plans = (0..100).map(|_| PlannedAction::new(SkillCall::Idle { ticks: 3 }, 0, ""));
        let setup = EpisodeSetup::new(cfg, 1, Mode::Parallel).agent("A1", SequencePlanner::new(plans), LatencyModel::constant(1));
        Episode::new(setup).unwrap()
    }

    #[test]
    fn commands_apply_between_ticks() {
        let (handle, endpoint) = control_channel();
        let runner = thread::spawn(move || run_paced(episode(400), endpoint, Duration::from_millis(2), false));
        let ack = handle.send(ControlCommand::Pause).unwrap();
        let paused_at = ack["tick"].as_u64().unwrap();
        thread::sleep(Duration::from_millis(20));
        assert_eq!(handle.state()["tick"].as_u64().unwrap(), paused_at);
        assert_eq!(handle.state()["tick"].as_u64().unwrap(), paused_at);
        let chat = ControlCommand::InjectChat { sender: "Alex".into(), team: "A".into(), text: "Cease your attack".into() };
        handle.send(chat).unwrap();
        let bad = ControlCommand::InjectChat { sender: "Alex".into(), team: "A".into(), text: "".into() };
        assert!(matches!(handle.send(bad), Err(ControlError::Rejected(_))));
        let one = handle.send(ControlCommand::Snapshot { agent: Some("A1".into()) }).unwrap();
        assert_eq!(one["agent"]["id"], "A1");
        handle.send(ControlCommand::Resume).unwrap();
        let report = runner.join().unwrap();
        let lines: Vec<_> = report
            .event_log
            .iter()
            .filter(|e| matches!(e.body, crate::world_sim::EventBody::ControlChat { .. }))
            .collect();
        assert_eq!(lines.len(), 1);
        assert!(matches!(handle.send(ControlCommand::Pause), Err(ControlError::Closed)));
        assert_eq!(handle.state()["finished"], true);
    }

    #[test]
    fn untouched_control_leaves_the_trajectory_alone() {
        let (_handle, endpoint) = control_channel();
        let paced = run_paced(episode(60), endpoint, Duration::ZERO, false);
        let mut plain = episode(60);
        plain.run();
        let plain = plain.finish();
        assert_eq!(paced, plain);
        assert_eq!(paced.event_log, plain.event_log);
    }
}
