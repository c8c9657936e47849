use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::memory::{ActionEntry, AgentId, ChatEntry, ObservationRecord, TeamId, TeammateDigest};
use crate::runtime::action::PlannedAction;
use crate::skills::SkillCall;

/// Everything a planner sees for one decision, assembled from a single
/// memory snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PlannerContext {
    pub system_prompt: String,
    pub agent: AgentId,
    pub team: TeamId,
    pub tick: u64,
    pub health_max: f64,
    pub observation: ObservationRecord,
    pub recent_chat: Vec<ChatEntry>,
    /// The agent's most recent action log entry.
    pub last_action: Option<ActionEntry>,
    /// Action the agent is executing right now, if any.
    pub current_action: Option<PlannedAction>,
    pub team_digest: Vec<TeammateDigest>,
}

impl PlannerContext {
    pub fn health_fraction(&self) -> f64 {
        if self.health_max > 0.0 {
            self.observation.health / self.health_max
        } else {
            0.0
        }
    }

    pub fn current_skill(&self) -> Option<&SkillCall> {
        self.current_action.as_ref().map(|a| &a.skill)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlannerError {
    #[error("malformed planner output: {0}")]
    Malformed(String),
    #[error("planner transport failed: {0}")]
    Transport(String),
    #[error("planner timed out")]
    Timeout,
}

/// Produces the next action for one agent.
pub trait Planner: Send {
    fn plan(&mut self, ctx: &PlannerContext) -> Result<PlannedAction, PlannerError>;

    /// True once the planner has nothing further to propose. Scenario
    /// planners never exhaust.
    fn is_exhausted(&self) -> bool {
        false
    }
}

/// Planning latency in ticks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum LatencyModel {
    Constant { ticks: u64 },
    Uniform { min: u64, max: u64 },
    /// Replays recorded latencies in order, wrapping around.
    Trace { ticks: Vec<u64> },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad latency model `{0}`")]
pub struct LatencySpecError(pub String);

impl LatencyModel {
    pub fn constant(ticks: u64) -> Self {
        LatencyModel::Constant { ticks }
    }

    /// Latency of the `call`-th planner invocation (0-based). At least one
    /// tick: a plan is never usable in the tick that requested it.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, call: u64) -> u64 {
        let t = match self {
            LatencyModel::Constant { ticks } => *ticks,
            LatencyModel::Uniform { min, max } => rng.gen_range(*min..=*max),
            LatencyModel::Trace { ticks } if ticks.is_empty() => 1,
            LatencyModel::Trace { ticks } => ticks[(call % ticks.len() as u64) as usize],
        };
        t.max(1)
    }

    /// Parses a JSON-lines trace: each line is a bare integer or an object
    /// with a `ticks` field.
    pub fn parse_trace(text: &str) -> Result<Self, LatencySpecError> {
        let mut ticks = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let v: serde_json::Value = serde_json::from_str(line).map_err(|e| LatencySpecError(e.to_string()))?;
            let t = v
                .as_u64()
                .or_else(|| v.get("ticks").and_then(serde_json::Value::as_u64))
                .ok_or_else(|| LatencySpecError(format!("trace line without ticks: {line}")))?;
            ticks.push(t);
        }
        if ticks.is_empty() {
            return Err(LatencySpecError("empty trace".into()));
        }
        Ok(LatencyModel::Trace { ticks })
    }

    /// `constant:<t>`, `uniform:<a>,<b>` or `trace:<path>`.
    pub fn from_spec(spec: &str) -> Result<Self, LatencySpecError> {
        let bad = || LatencySpecError(spec.to_owned());
        let (kind, arg) = spec.split_once(':').ok_or_else(bad)?;
        match kind {
            "constant" => Ok(Self::constant(arg.trim().parse().map_err(|_| bad())?)),
            "uniform" => {
                let (a, b) = arg.split_once(',').ok_or_else(bad)?;
                let (min, max) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
                if min > max {
                    return Err(bad());
                }
                Ok(LatencyModel::Uniform { min, max })
            }
            "trace" => {
                let text = std::fs::read_to_string(arg).map_err(|e| LatencySpecError(format!("{arg}: {e}")))?;
                Self::parse_trace(&text)
            }
            _ => Err(bad()),
        }
    }
}

impl Default for LatencyModel {
    fn default() -> Self {
        Self::constant(2)
    }
}

/// Returns a fixed list of actions in order, then reports exhaustion.
#[derive(Debug, Clone, Default)]
pub struct SequencePlanner {
    queue: VecDeque<PlannedAction>,
}

impl SequencePlanner {
    pub fn new(actions: impl IntoIterator<Item = PlannedAction>) -> Self {
        Self { queue: actions.into_iter().collect() }
    }
}

impl Planner for SequencePlanner {
    fn plan(&mut self, _ctx: &PlannerContext) -> Result<PlannedAction, PlannerError> {
        Ok(self.queue.pop_front().unwrap_or_else(|| PlannedAction::idle("nothing left to do")))
    }

    fn is_exhausted(&self) -> bool {
        self.queue.is_empty()
    }
}

/// Wraps a closure as a planner.
pub struct FnPlanner<F>(pub F);

impl<F> Planner for FnPlanner<F>
where
    F: FnMut(&PlannerContext) -> Result<PlannedAction, PlannerError> + Send,
{
    fn plan(&mut self, ctx: &PlannerContext) -> Result<PlannedAction, PlannerError> {
        (self.0)(ctx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn latency_specs_parse() {
        assert_eq!(LatencyModel::from_spec("constant:2").unwrap(), LatencyModel::constant(2));
        assert_eq!(LatencyModel::from_spec("uniform:1,5").unwrap(), LatencyModel::Uniform { min: 1, max: 5 });
        assert!(LatencyModel::from_spec("uniform:5,1").is_err());
        assert!(LatencyModel::from_spec("gaussian:1").is_err());
    }

    #[test]
    fn trace_replays_in_order() {
        let m = LatencyModel::parse_trace("3\n{\"ticks\": 7}\n\n1\n").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let got: Vec<u64> = (0..4).map(|k| m.sample(&mut rng, k)).collect();
        assert_eq!(got, vec![3, 7, 1, 3]);
    }

    #[test]
    fn uniform_stays_in_range() {
        let m = LatencyModel::Uniform { min: 2, max: 4 };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert!((0..200).map(|k| m.sample(&mut rng, k)).all(|t| (2..=4).contains(&t)));
    }
}
