//! Planner backed by an external process over a local TCP socket.
//!
//! Each call opens a connection, writes the planner context as one JSON
//! line and reads one response line of the form
//! `{"skill": "...", "interrupt": bool, "reason": "..."}`. The response may
//! be wrapped in a fenced code block.

use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpStream, ToSocketAddrs};
use std::time::Duration;

use serde::Deserialize;

use crate::runtime::action::{ActionClass, PlannedAction, MAX_PRIORITY};
use crate::runtime::planner::{Planner, PlannerContext, PlannerError};
use crate::skills::SkillCall;

#[derive(Debug, Deserialize)]
struct RawOutput {
    skill: String,
    #[serde(default)]
    interrupt: bool,
    #[serde(default)]
    reason: String,
}

fn strip_fences(text: &str) -> &str {
    let t = text.trim();
    let Some(rest) = t.strip_prefix("```") else { return t };
    let rest = rest.split_once('\n').map_or("", |(_, body)| body);
    rest.trim_end().strip_suffix("```").unwrap_or(rest).trim()
}

/// Turns raw planner text into an action. `interrupt: true` asks for one
/// priority level above the running action; otherwise the skill's class
/// priority applies.
pub fn parse_planner_output(text: &str, ctx: &PlannerContext) -> Result<PlannedAction, PlannerError> {
    let raw: RawOutput =
        serde_json::from_str(strip_fences(text)).map_err(|e| PlannerError::Malformed(e.to_string()))?;
    let skill: SkillCall = raw.skill.parse().map_err(|e: crate::skills::ParseSkillError| PlannerError::Malformed(e.to_string()))?;
    let priority = if raw.interrupt {
        let current = ctx.current_action.as_ref().map_or(0, |a| a.priority);
        (current + 1).min(MAX_PRIORITY)
    } else {
        ActionClass::of(&skill, ctx.health_fraction()).priority()
    };
    Ok(PlannedAction::new(skill, priority, raw.reason).with_interrupt(raw.interrupt))
}

#[derive(Debug, Clone)]
pub struct ExternalPlanner {
    addr: SocketAddr,
    timeout: Duration,
}

impl ExternalPlanner {
    pub fn new(addr: impl ToSocketAddrs, timeout: Duration) -> Result<Self, PlannerError> {
        let addr = addr
            .to_socket_addrs()
            .map_err(|e| PlannerError::Transport(e.to_string()))?
            .next()
            .ok_or_else(|| PlannerError::Transport("address resolved to nothing".into()))?;
        Ok(Self { addr, timeout })
    }

    fn exchange(&self, ctx: &PlannerContext) -> Result<String, PlannerError> {
        let io = |e: std::io::Error| match e.kind() {
            std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock => PlannerError::Timeout,
            _ => PlannerError::Transport(e.to_string()),
        };
        let mut stream = TcpStream::connect_timeout(&self.addr, self.timeout).map_err(io)?;
        stream.set_read_timeout(Some(self.timeout)).map_err(io)?;
        stream.set_write_timeout(Some(self.timeout)).map_err(io)?;
        let mut line = serde_json::to_string(ctx).map_err(|e| PlannerError::Transport(e.to_string()))?;
        line.push('\n');
        stream.write_all(line.as_bytes()).map_err(io)?;
        let mut reply = String::new();
        BufReader::new(stream).read_line(&mut reply).map_err(io)?;
        if reply.trim().is_empty() {
            return Err(PlannerError::Transport("empty response".into()));
        }
        Ok(reply)
    }
}

impl Planner for ExternalPlanner {
    fn plan(&mut self, ctx: &PlannerContext) -> Result<PlannedAction, PlannerError> {
        let reply = self.exchange(ctx)?;
        // A JSON string holding the fenced answer is accepted as well.
        let text = serde_json::from_str::<String>(reply.trim()).unwrap_or(reply);
        parse_planner_output(&text, ctx)
    }
}

#[cfg(test)]
mod tests {
    use std::net::TcpListener;
    use std::thread;

    use super::*;
    use crate::memory::ObservationRecord;
    use crate::position::Position;

    fn ctx(health: f64, current: Option<u8>) -> PlannerContext {
        PlannerContext {
            system_prompt: "be brief".into(),
            agent: "A1".into(),
            team: "A".into(),
            tick: 3,
            health_max: 20.0,
            observation: ObservationRecord {
                agent: "A1".into(),
                tick: 3,
                time: "day".into(),
                health,
                hunger: 20.0,
                position: Position::default(),
                equipment: vec![None; 6],
                inventory: Default::default(),
                nearby_blocks: vec![],
                nearby_entities: vec![],
                nearby_players: vec![],
            },
            recent_chat: vec![],
            last_action: None,
            current_action: current.map(|p| PlannedAction::new(SkillCall::idle(), p, "")),
            team_digest: vec![],
        }
    }

    #[test]
    fn interrupt_flag_raises_priority_above_current() {
        let text = r#"{"skill": "consumeItem(bot, 'golden_apple')", "interrupt": true, "reason": "I am hurt"}"#;
        let a = parse_planner_output(text, &ctx(10.0, Some(2))).unwrap();
        assert_eq!(a.priority, 3);
        assert!(a.interrupt);
        assert_eq!(a.reason, "I am hurt");
        assert_eq!(parse_planner_output(text, &ctx(10.0, Some(3))).unwrap().priority, 3);
        assert_eq!(parse_planner_output(text, &ctx(10.0, None)).unwrap().priority, 1);
    }

    #[test]
    fn class_priority_without_interrupt() {
        let text = "```json\n{\"skill\": \"consumeItem(bot, 'golden_apple')\", \"interrupt\": false, \"reason\": \"\"}\n```";
        assert_eq!(parse_planner_output(text, &ctx(4.0, None)).unwrap().priority, 3);
        assert_eq!(parse_planner_output(text, &ctx(18.0, None)).unwrap().priority, 0);
        let fight = r#"{"skill": "combatWithPlayer(bot, 'B1', 'bow')", "interrupt": false, "reason": ""}"#;
        assert_eq!(parse_planner_output(fight, &ctx(18.0, None)).unwrap().priority, 2);
    }

    #[test]
    fn malformed_output_is_an_error() {
        assert!(matches!(parse_planner_output("sure! I'll mine", &ctx(20.0, None)), Err(PlannerError::Malformed(_))));
        let bad_skill = r#"{"skill": "flyAway(bot)", "interrupt": false, "reason": ""}"#;
        assert!(matches!(parse_planner_output(bad_skill, &ctx(20.0, None)), Err(PlannerError::Malformed(_))));
    }

    #[test]
    fn round_trip_over_tcp() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let server = thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            let req: PlannerContext = serde_json::from_str(&line).unwrap();
            assert_eq!(req.system_prompt, "be brief");
            let mut out = stream;
            writeln!(out, r#"{{"skill": "mineItem(bot, 2, 'oak_log')", "interrupt": false, "reason": "wood"}}"#).unwrap();
        });
        let mut p = ExternalPlanner::new(addr, Duration::from_secs(5)).unwrap();
        let a = p.plan(&ctx(20.0, None)).unwrap();
        assert_eq!(a.skill.to_string(), "mineItem(bot, 2, 'oak_log')");
        server.join().unwrap();
    }

    #[test]
    fn silent_endpoint_times_out() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let hold = thread::spawn(move || {
            let (s, _) = listener.accept().unwrap();
            thread::sleep(Duration::from_millis(300));
            drop(s);
        });
        let mut p = ExternalPlanner::new(addr, Duration::from_millis(50)).unwrap();
        assert_eq!(p.plan(&ctx(20.0, None)), Err(PlannerError::Timeout));
        hold.join().unwrap();
    }
}
