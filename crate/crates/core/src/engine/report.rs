use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{EngineError, EntryStatus, InferenceReport, SuspicionEntry};
use crate::kb::ObservationSet;

/// Half-up rounding to two decimals.
pub fn round_half_up_2(w: f64) -> f64 {
    ((w * 100.0) + 0.5 + 1e-9).floor() / 100.0
}

/// Truncation to two decimals (how the published weights are printed).
pub fn truncate_2(w: f64) -> f64 {
    ((w * 100.0) + 1e-9).floor() / 100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertCondition {
    pub condition: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    pub conditions: Vec<AlertCondition>,
    pub observed: Vec<String>,
    pub window: Option<(NaiveDateTime, NaiveDateTime)>,
    pub threshold: f64,
    pub message: String,
}

impl Alert {
    pub(crate) fn new(weights: Vec<(String, f64)>, observed: &ObservationSet, threshold: f64) -> Self {
        let names: Vec<&str> = weights.iter().map(|(c, _)| c.as_str()).collect();
        let top = weights.iter().map(|(_, w)| *w).fold(0.0, f64::max);
        let message = format!(
            "suspected {} (certainty {:.2}) from evidence {{{}}}",
            names.join(", "),
            round_half_up_2(top),
            observed.atoms.iter().cloned().collect::<Vec<_>>().join(", ")
        );
        Alert {
            conditions: weights
                .into_iter()
                .map(|(condition, weight)| AlertCondition { condition, weight })
                .collect(),
            observed: observed.atoms.iter().cloned().collect(),
            window: observed.window,
            threshold,
            message,
        }
    }

    pub fn conditions(&self) -> Vec<&str> {
        self.conditions.iter().map(|c| c.condition.as_str()).collect()
    }
}

/// One report row: full-precision weights plus their two-decimal renderings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryRow {
    pub condition: String,
    pub gamma: f64,
    pub theta: f64,
    pub weight: f64,
    pub weight_rounded: f64,
    pub weight_truncated: f64,
    pub adjusted_weight: f64,
    pub adjusted_rounded: f64,
    pub adjusted_truncated: f64,
    pub status: EntryStatus,
    pub applied_rules: Vec<String>,
}

impl From<&SuspicionEntry> for EntryRow {
    fn from(e: &SuspicionEntry) -> Self {
        EntryRow {
            condition: e.condition.clone(),
            gamma: e.gamma,
            theta: e.theta,
            weight: e.weight,
            weight_rounded: round_half_up_2(e.weight),
            weight_truncated: truncate_2(e.weight),
            adjusted_weight: e.adjusted_weight,
            adjusted_rounded: round_half_up_2(e.adjusted_weight),
            adjusted_truncated: truncate_2(e.adjusted_weight),
            status: e.status,
            applied_rules: e.applied_rules.clone(),
        }
    }
}

/// The on-disk (JSON) form of an inference report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub kb_version: String,
    pub generated_at: DateTime<Utc>,
    pub window: Option<(NaiveDateTime, NaiveDateTime)>,
    pub observed: Vec<String>,
    #[serde(default)]
    pub dropped_atoms: BTreeSet<String>,
    #[serde(default)]
    pub unrecognized_sounds: BTreeSet<String>,
    pub entries: Vec<EntryRow>,
    pub phi: Vec<String>,
    pub alert: Option<Alert>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl From<&InferenceReport> for ReportDocument {
    fn from(r: &InferenceReport) -> Self {
        ReportDocument {
            kb_version: r.kb_version.clone(),
            generated_at: r.generated_at,
            window: r.observed.window,
            observed: r.observed.atoms.iter().cloned().collect(),
            dropped_atoms: r.dropped_atoms.clone(),
            unrecognized_sounds: r.unrecognized_sounds.clone(),
            entries: r.entries.iter().map(EntryRow::from).collect(),
            phi: r.phi.clone(),
            alert: r.alert.clone(),
            warnings: r.warnings.clone(),
        }
    }
}

impl InferenceReport {
    pub fn to_document(&self) -> ReportDocument {
        ReportDocument::from(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("report serializes")
    }
}

fn status_label(s: EntryStatus) -> &'static str {
    match s {
        EntryStatus::Ranked => "ranked",
        EntryStatus::ExcludedNoSymptom => "excluded (no symptom observed)",
        EntryStatus::ExcludedByProfile => "excluded (patient profile)",
    }
}

impl ReportDocument {
    pub fn from_json(src: &str) -> Result<Self, EngineError> {
        serde_json::from_str(src).map_err(|e| EngineError::Report(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EngineError> {
        let path = path.as_ref();
        let src = std::fs::read_to_string(path).map_err(|e| EngineError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        ReportDocument::from_json(&src)
    }

    /// Plain-text rendering: observed evidence, Φ and each W(c).
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "knowledge base  {}", self.kb_version);
        if let Some((a, b)) = self.window {
            let _ = writeln!(out, "window          {a} .. {b}");
        }
        let _ = writeln!(out, "observed (Q)    {{{}}}", self.observed.join(", "));
        if !self.dropped_atoms.is_empty() {
            let dropped: Vec<&str> = self.dropped_atoms.iter().map(String::as_str).collect();
            let _ = writeln!(out, "ignored atoms   {{{}}}", dropped.join(", "));
        }
        let _ = writeln!(out, "most suspected  {{{}}}", self.phi.join(", "));
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:<6} {:>6} {:>6} {:>8} {:>6} {:>6} {:>9}  status",
            "cond", "gamma", "theta", "W", "W~2dp", "W|2dp", "adjusted"
        );
        for e in &self.entries {
            let _ = write!(
                out,
                "{:<6} {:>6.4} {:>6.4} {:>8.6} {:>6.2} {:>6.2} {:>9.6}  {}",
                e.condition,
                e.gamma,
                e.theta,
                e.weight,
                e.weight_rounded,
                e.weight_truncated,
                e.adjusted_weight,
                status_label(e.status)
            );
            if !e.applied_rules.is_empty() {
                let _ = write!(out, " [{}]", e.applied_rules.join(", "));
            }
            let _ = writeln!(out);
        }
        match &self.alert {
            Some(a) => {
                let _ = writeln!(out, "\nALERT: {}", a.message);
            }
            None => {
                let _ = writeln!(out, "\nno alert");
            }
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}
