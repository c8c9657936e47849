//! Latency predictions, scenario metrics and trial aggregation.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::memory::{AgentId, TeamId};
use crate::runtime::Mode;
use crate::world_sim::{Event, ScenarioKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("latency profile must be non-empty with equal-length, positive entries")]
    BadProfile,
    #[error("no values to aggregate")]
    Empty,
    #[error("metric `{0}` is absent from the reports")]
    UnknownMetric(String),
    #[error("value {value} outside [0, {max}]")]
    OutOfRange { value: f64, max: f64 },
}

/// Per-action planning and acting durations in ticks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyProfile {
    pub t_plan: Vec<u64>,
    pub t_act: Vec<u64>,
}

impl LatencyProfile {
    pub fn new(t_plan: Vec<u64>, t_act: Vec<u64>) -> Result<Self, MetricsError> {
        if t_plan.is_empty() || t_plan.len() != t_act.len() || t_plan.iter().chain(&t_act).any(|&t| t == 0) {
            return Err(MetricsError::BadProfile);
        }
        Ok(Self { t_plan, t_act })
    }

    pub fn constant(n: usize, plan: u64, act: u64) -> Result<Self, MetricsError> {
        Self::new(vec![plan; n], vec![act; n])
    }

    pub fn len(&self) -> usize {
        self.t_plan.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_plan.is_empty()
    }
}

pub fn predict_serialized(p: &LatencyProfile) -> u64 {
    p.t_plan.iter().zip(&p.t_act).map(|(a, b)| a + b).sum()
}

pub fn predict_parallel(p: &LatencyProfile) -> u64 {
    let n = p.len();
    let middle: u64 = (1..n).map(|k| p.t_plan[k].max(p.t_act[k - 1])).sum();
    p.t_plan[0] + middle + p.t_act[n - 1]
}

/// Serialized minus parallel completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyDelta {
    pub exact: u64,
    /// Per-action overlap sum without the index shift between planning
    /// and acting.
    pub approx: u64,
}

pub fn predict_delta(p: &LatencyProfile) -> LatencyDelta {
    let approx = p.t_plan.iter().zip(&p.t_act).map(|(&a, &b)| a + b - a.max(b)).sum();
    LatencyDelta { exact: predict_serialized(p) - predict_parallel(p), approx }
}

/// Mean health as a percentage of `h_max`.
pub fn health_ratio(healths: &[f64], h_max: f64) -> Result<f64, MetricsError> {
    if healths.is_empty() {
        return Err(MetricsError::Empty);
    }
    if let Some(&h) = healths.iter().find(|&&h| !(0.0..=h_max).contains(&h)) {
        return Err(MetricsError::OutOfRange { value: h, max: h_max });
    }
    Ok(healths.iter().map(|h| h / h_max).sum::<f64>() / healths.len() as f64 * 100.0)
}

/// Damage dealt to the boss as a percentage of its maximum health.
pub fn progress(boss_h: f64, boss_h_max: f64) -> Result<f64, MetricsError> {
    if boss_h_max <= 0.0 || !(0.0..=boss_h_max).contains(&boss_h) {
        return Err(MetricsError::OutOfRange { value: boss_h, max: boss_h_max });
    }
    Ok((boss_h_max - boss_h) / boss_h_max * 100.0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "outcome", content = "team")]
pub enum Outcome {
    Success,
    Defeat,
    Timeout,
    /// A team won a head-to-head match.
    Victory(TeamId),
    Draw,
}

impl Outcome {
    pub fn label(&self) -> String {
        match self {
            Outcome::Success => "success".into(),
            Outcome::Defeat => "defeat".into(),
            Outcome::Timeout => "timeout".into(),
            Outcome::Victory(t) => format!("victory:{t}"),
            Outcome::Draw => "draw".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeReport {
    pub scenario: String,
    pub kind: ScenarioKind,
    /// Shared mode when every team ran the same one.
    pub mode: Option<Mode>,
    pub team_modes: BTreeMap<TeamId, Mode>,
    pub seed: u64,
    pub outcome: Outcome,
    pub success: bool,
    pub completion_ticks: Option<u64>,
    pub ticks: u64,
    pub agent_health: BTreeMap<AgentId, f64>,
    pub health_max: f64,
    pub boss_health: Option<f64>,
    pub boss_max_health: Option<f64>,
    pub winner: Option<TeamId>,
    pub planner_calls: u64,
    pub interrupts: u64,
    /// Where the event log was written, when it was.
    pub event_log_path: Option<String>,
    #[serde(skip)]
    pub event_log: Vec<Event>,
}

impl EpisodeReport {
    pub fn health_ratio(&self) -> Option<f64> {
        let h: Vec<f64> = self.agent_health.values().copied().collect();
        health_ratio(&h, self.health_max).ok()
    }

    pub fn progress(&self) -> Option<f64> {
        progress(self.boss_health?, self.boss_max_health?).ok()
    }

    /// Value of a named metric: `time`, `health_ratio`, `progress`,
    /// `planner_calls` or `interrupts`.
    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "time" => self.completion_ticks.map(|t| t as f64),
            "health_ratio" => self.health_ratio(),
            "progress" => self.progress(),
            "planner_calls" => Some(self.planner_calls as f64),
            "interrupts" => Some(self.interrupts as f64),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    /// Number of values that entered the mean.
    pub count: usize,
    pub trials: usize,
    pub success_rate: f64,
}

/// Sample mean and sample (n-1) standard deviation.
pub fn mean_std(values: &[f64]) -> Result<(f64, f64), MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.sqrt()))
}

/// Aggregates `metric` over trials. Reports without the metric (a timed-out
/// run has no completion time) count toward the success rate only.
pub fn summarize(reports: &[EpisodeReport], metric: &str) -> Result<TrialSummary, MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::Empty);
    }
    let values: Vec<f64> = reports.iter().filter_map(|r| r.metric(metric)).collect();
    if values.is_empty() && metric != "time" {
        return Err(MetricsError::UnknownMetric(metric.to_owned()));
    }
    let (mean, std) = if values.is_empty() { (f64::NAN, f64::NAN) } else { mean_std(&values)? };
    let successes = reports.iter().filter(|r| r.success).count();
    Ok(TrialSummary {
        metric: metric.to_owned(),
        mean,
        std,
        count: values.len(),
        trials: reports.len(),
        success_rate: successes as f64 / reports.len() as f64 * 100.0,
    })
}

/// Plain-text table with one row per summary.
pub fn render_table(rows: &[(String, TrialSummary)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<28} {:<14} {:>20} {:>8}", "group", "metric", "mean ± std", "SR");
    for (group, s) in rows {
        let cell = if s.count == 0 { "N/A".to_owned() } else { format!("{:.2} ± {:.2}", s.mean, s.std) };
        let _ = writeln!(out, "{:<28} {:<14} {:>20} {:>7.1}%", group, s.metric, cell, s.success_rate);
    }
    out
}
