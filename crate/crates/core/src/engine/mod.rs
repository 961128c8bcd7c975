//! The reasoning loop: observations, suspected conditions, participation
//! ratios, certainty weights, discrimination rules, and selection of the
//! most-suspected set.

mod profile;
mod report;
mod rules;

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{window_evidence, EventWindow, MappingThresholds};
use crate::kb::{certainty_weight, KnowledgeBase, ObservationSet};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub use profile::{
    apply_profile_rule, AsthmaStatus, PatientProfile, ASTHMA, PROFILE_RULE_ASTHMATIC,
    PROFILE_RULE_NON_ASTHMATIC,
};
pub use report::{round_half_up_2, truncate_2, Alert, EntryRow, ReportDocument};
pub use rules::{
    apply_timing_rules, default_rules, load_rules, rules_from_toml_str, DiscriminationRule,
    RulePredicate, DEFAULT_RULES,
};

pub const DEFAULT_ALERT_THRESHOLD: f64 = 0.6;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid profile: {0}")]
    Profile(String),
    #[error("invalid rules: {0}")]
    Rules(String),
    #[error("alert threshold {0} is outside [0, 1]")]
    AlertThreshold(f64),
    #[error("invalid report document: {0}")]
    Report(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryStatus {
    Ranked,
    ExcludedNoSymptom,
    ExcludedByProfile,
}

/// Inference result for one suspected condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuspicionEntry {
    pub condition: String,
    pub gamma: f64,
    pub theta: f64,
    pub weight: f64,
    pub adjusted_weight: f64,
    pub status: EntryStatus,
    pub applied_rules: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceReport {
    pub observed: ObservationSet,
    pub dropped_atoms: BTreeSet<String>,
    pub unrecognized_sounds: BTreeSet<String>,
    pub entries: Vec<SuspicionEntry>,
    pub phi: Vec<String>,
    pub generated_at: DateTime<Utc>,
    pub kb_version: String,
    pub alert: Option<Alert>,
    pub warnings: Vec<String>,
}

impl InferenceReport {
    pub fn entry(&self, condition: &str) -> Option<&SuspicionEntry> {
        self.entries.iter().find(|e| e.condition == condition)
    }

    /// Same report with the timestamp cleared, for determinism checks.
    pub fn without_timestamp(&self) -> InferenceReport {
        InferenceReport {
            generated_at: DateTime::<Utc>::UNIX_EPOCH,
            ..self.clone()
        }
    }
}

/// Weights for every suspected condition, before any rule runs. Entries
/// whose gamma is zero are marked [`EntryStatus::ExcludedNoSymptom`].
pub fn score_conditions(kb: &KnowledgeBase, q: &ObservationSet) -> Vec<SuspicionEntry> {
    let beta = kb.suspected_conditions(q);
    let table = kb.participation_ratios(&beta, q);
    beta.into_iter()
        .map(|c| {
            let (gamma, theta) = kb.gamma_theta(&c, &table, q);
            let weight = certainty_weight(gamma, theta).expect("gamma and theta lie in [0, 1]");
            SuspicionEntry {
                condition: c,
                gamma,
                theta,
                weight,
                adjusted_weight: weight,
                status: if gamma == 0.0 {
                    EntryStatus::ExcludedNoSymptom
                } else {
                    EntryStatus::Ranked
                },
                applied_rules: Vec::new(),
            }
        })
        .collect()
}

/// Ranked entries sharing the maximal adjusted weight, ordered by id.
pub fn select_phi(entries: &[SuspicionEntry]) -> Vec<String> {
    let ranked = entries.iter().filter(|e| e.status == EntryStatus::Ranked);
    let Some(best) = ranked.clone().map(|e| e.adjusted_weight).reduce(f64::max) else {
        return Vec::new();
    };
    let mut phi: Vec<String> = ranked
        .filter(|e| e.adjusted_weight == best)
        .map(|e| e.condition.clone())
        .collect();
    phi.sort();
    phi
}

fn sort_entries(entries: &mut [SuspicionEntry]) {
    entries.sort_by(|a, b| {
        b.adjusted_weight
            .total_cmp(&a.adjusted_weight)
            .then_with(|| a.condition.cmp(&b.condition))
    });
}

/// Alert iff Φ is nonempty and its weight reaches `threshold`.
pub fn build_alert(report: &InferenceReport, threshold: f64) -> Result<Option<Alert>, EngineError> {
    if threshold.is_nan() || !(0.0..=1.0).contains(&threshold) {
        return Err(EngineError::AlertThreshold(threshold));
    }
    let weights: Vec<(String, f64)> = report
        .phi
        .iter()
        .filter_map(|c| report.entry(c).map(|e| (c.clone(), e.adjusted_weight)))
        .collect();
    let Some(top) = weights.iter().map(|(_, w)| *w).reduce(f64::max) else {
        return Ok(None);
    };
    if top < threshold {
        return Ok(None);
    }
    Ok(Some(Alert::new(
        weights,
        &report.observed,
        threshold,
    )))
}

/// Everything besides the KB and the window that shapes a run.
#[derive(Debug, Clone, PartialEq)]
pub struct InferenceConfig {
    pub thresholds: MappingThresholds,
    pub profile: PatientProfile,
    pub rules: Vec<DiscriminationRule>,
    pub alert_threshold: f64,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            thresholds: MappingThresholds::default(),
            profile: PatientProfile::default(),
            rules: Vec::new(),
            alert_threshold: DEFAULT_ALERT_THRESHOLD,
        }
    }
}

impl InferenceConfig {
    pub fn run(&self, kb: &KnowledgeBase, window: &EventWindow) -> Result<InferenceReport, EngineError> {
        self.run_at(kb, window, Utc::now())
    }

    pub fn run_at(
        &self,
        kb: &KnowledgeBase,
        window: &EventWindow,
        generated_at: DateTime<Utc>,
    ) -> Result<InferenceReport, EngineError> {
        self.profile.validate(kb)?;
        let evidence = window_evidence(window, &self.thresholds);
        let (observed, dropped_atoms) = kb.restrict(&evidence.observations);

        let mut entries = score_conditions(kb, &observed);
        apply_profile_rule(&mut entries, &self.profile);
        let warnings = if entries.is_empty() {
            Vec::new()
        } else {
            apply_timing_rules(&mut entries, window, &self.rules)
        };
        sort_entries(&mut entries);
        let phi = select_phi(&entries);

        let mut report = InferenceReport {
            observed,
            dropped_atoms,
            unrecognized_sounds: evidence.unrecognized_sounds,
            entries,
            phi,
            generated_at,
            kb_version: kb.version().to_string(),
            alert: None,
            warnings,
        };
        report.alert = build_alert(&report, self.alert_threshold)?;
        Ok(report)
    }
}

/// One full pass of the reasoning loop over a window.
pub fn run_inference(
    kb: &KnowledgeBase,
    window: &EventWindow,
    thresholds: &MappingThresholds,
    profile: &PatientProfile,
    rules: &[DiscriminationRule],
) -> Result<InferenceReport, EngineError> {
    InferenceConfig {
        thresholds: thresholds.clone(),
        profile: profile.clone(),
        rules: rules.to_vec(),
        alert_threshold: DEFAULT_ALERT_THRESHOLD,
    }
    .run(kb, window)
}

/// Runs the loop over many independent windows (days, patients).
pub fn run_inference_batch(
    kb: &KnowledgeBase,
    windows: &[EventWindow],
    config: &InferenceConfig,
) -> Vec<Result<InferenceReport, EngineError>> {
    #[cfg(feature = "parallel")]
    {
        windows.par_iter().map(|w| config.run(kb, w)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_inference_batch_sequential(kb, windows, config)
    }
}

pub fn run_inference_batch_sequential(
    kb: &KnowledgeBase,
    windows: &[EventWindow],
    config: &InferenceConfig,
) -> Vec<Result<InferenceReport, EngineError>> {
    windows.iter().map(|w| config.run(kb, w)).collect()
}
