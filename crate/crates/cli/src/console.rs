//! Line-oriented client for the control API.
//!
//! A background thread polls `/state` and prints chat lines as they appear.
//! Typed lines are sent to the team chat; `/pause`, `/resume` and `/quit`
//! are commands.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use anyhow::{anyhow, Result};
use serde_json::{json, Value};

#[derive(Debug, Clone)]
pub struct Console {
    base: String,
    pub sender: String,
    pub team: String,
}

/// What a typed line turned into.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LineAction {
    Nothing,
    Sent(String),
    Quit,
}

fn describe(err: ureq::Error) -> anyhow::Error {
    match err {
        ureq::Error::StatusCode(code) => anyhow!("server answered {code}"),
        other => anyhow!(other),
    }
}

impl Console {
    pub fn new(base: impl Into<String>, sender: impl Into<String>, team: impl Into<String>) -> Self {
        let mut base = base.into();
        if !base.starts_with("http://") && !base.starts_with("https://") {
            base = format!("http://{base}");
        }
        Self { base: base.trim_end_matches('/').to_owned(), sender: sender.into(), team: team.into() }
    }

    pub fn state(&self) -> Result<Value> {
        let mut resp = ureq::get(format!("{}/state", self.base)).call().map_err(describe)?;
        Ok(resp.body_mut().read_json()?)
    }

    fn post(&self, path: &str, body: Value) -> Result<Value> {
        let mut resp = ureq::post(format!("{}{path}", self.base)).send_json(&body).map_err(describe)?;
        Ok(resp.body_mut().read_json()?)
    }

    pub fn handle_line(&self, line: &str) -> Result<LineAction> {
        let line = line.trim();
        match line {
            "" => Ok(LineAction::Nothing),
            "/quit" | "/exit" => Ok(LineAction::Quit),
            "/pause" | "/resume" => {
                let ack = self.post(line, json!({}))?;
                Ok(LineAction::Sent(format!("{} at tick {}", &line[1..], ack["tick"])))
            }
            text => {
                let body = json!({"sender": self.sender, "team": self.team, "text": text});
                let ack = self.post("/chat", body)?;
                Ok(LineAction::Sent(format!("sent at tick {}", ack["tick"])))
            }
        }
    }

    /// Reads commands from `input` until it ends or `/quit`, while a
    /// poller writes new chat lines to `out`.
    pub fn run<R, W>(&self, input: R, out: W, poll: Duration) -> Result<()>
    where
        R: BufRead,
        W: Write + Send + 'static,
    {
        let out = Arc::new(Mutex::new(out));
        let stop = Arc::new(AtomicBool::new(false));
        let poller = {
            let (me, out, stop) = (self.clone(), out.clone(), stop.clone());
            thread::spawn(move || {
                let mut seen = ChatCursor::default();
                let mut last_tick = None;
                while !stop.load(Ordering::Relaxed) {
                    if let Ok(state) = me.state() {
                        let mut w = out.lock().unwrap();
                        for line in seen.advance(&state) {
                            let _ = writeln!(w, "{line}");
                        }
                        let tick = state["tick"].as_u64();
                        if state["finished"] == true && last_tick != tick {
                            let _ = writeln!(w, "episode over at tick {}: {}", state["tick"], state["outcome"]);
                        }
                        last_tick = tick;
                        let _ = w.flush();
                    }
                    thread::sleep(poll);
                }
            })
        };
        let mut result = Ok(());
        for line in input.lines() {
            let line = match line {
                Ok(l) => l,
                Err(e) => {
                    result = Err(e.into());
                    break;
                }
            };
            let msg = match self.handle_line(&line) {
                Ok(LineAction::Quit) => break,
                Ok(LineAction::Nothing) => continue,
                Ok(LineAction::Sent(m)) => m,
                Err(e) => format!("error: {e}"),
            };
            let mut w = out.lock().unwrap();
            let _ = writeln!(w, "{msg}");
            let _ = w.flush();
        }
        stop.store(true, Ordering::Relaxed);
        let _ = poller.join();
        result
    }
}

/// Tracks how much of each memory's chat log has been printed.
#[derive(Debug, Default)]
pub struct ChatCursor {
    seen: BTreeMap<String, usize>,
}

impl ChatCursor {
    /// Chat lines in `state` that were not returned before, as
    /// `[tick] team | sender: text`.
    pub fn advance(&mut self, state: &Value) -> Vec<String> {
        let mut out = Vec::new();
        let Some(memories) = state["memory"].as_object() else { return out };
        for (key, doc) in memories {
            let lines: Vec<String> = doc["chatLog"]
                .as_array()
                .into_iter()
                .flatten()
                .flat_map(|g| {
                    let (tick, team) = (g["tick"].clone(), g["team"].as_str().unwrap_or("").to_owned());
                    g["messages"]
                        .as_array()
                        .into_iter()
                        .flatten()
                        .filter_map(|m| m.as_str())
                        .map(move |m| format!("[{tick}] {team} | {m}"))
                        .collect::<Vec<_>>()
                })
                .collect();
            let seen = self.seen.entry(key.clone()).or_default();
            if lines.len() > *seen {
                out.extend_from_slice(&lines[*seen..]);
                *seen = lines.len();
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cursor_returns_only_new_lines() {
        let mut c = ChatCursor::default();
        let s1 = json!({"memory": {"A": {"chatLog": [{"tick": 1, "team": "A", "messages": ["A1: hi"]}]}}});
        assert_eq!(c.advance(&s1), vec!["[1] A | A1: hi"]);
        assert!(c.advance(&s1).is_empty());
        let s2 = json!({"memory": {"A": {"chatLog": [
            {"tick": 1, "team": "A", "messages": ["A1: hi"]},
            {"tick": 4, "team": "A", "messages": ["Alex: stop", "A2: ok"]}
        ]}}});
        assert_eq!(c.advance(&s2), vec!["[4] A | Alex: stop", "[4] A | A2: ok"]);
    }

    #[test]
    fn blank_lines_are_not_sent() {
        // Nothing listens on this port; a request would fail.
        let c = Console::new("127.0.0.1:9", "Alex", "A");
        assert_eq!(c.handle_line("   ").unwrap(), LineAction::Nothing);
        assert_eq!(c.handle_line("/quit").unwrap(), LineAction::Quit);
        assert!(c.handle_line("hello").is_err());
    }
}
