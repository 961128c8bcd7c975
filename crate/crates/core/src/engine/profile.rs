use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EngineError, EntryStatus, SuspicionEntry};
use crate::kb::KnowledgeBase;

pub const ASTHMA: &str = "asthma";
pub const EIA: &str = "EIA";
pub const EIB: &str = "EIB";
pub const PROFILE_RULE_ASTHMATIC: &str = "profile:asthmatic";
pub const PROFILE_RULE_NON_ASTHMATIC: &str = "profile:non-asthmatic";

/// Medical history supplied by the user at setup.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatientProfile {
    #[serde(default)]
    pub identifier: String,
    #[serde(default)]
    pub diagnosed_conditions: BTreeSet<String>,
    /// `Some(false)` marks the patient as explicitly non-asthmatic.
    #[serde(default)]
    pub asthmatic: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsthmaStatus {
    Asthmatic,
    NonAsthmatic,
    Unknown,
}

impl PatientProfile {
    pub fn asthmatic(identifier: impl Into<String>) -> Self {
        PatientProfile {
            identifier: identifier.into(),
            diagnosed_conditions: [ASTHMA.to_string()].into(),
            asthmatic: Some(true),
        }
    }

    pub fn non_asthmatic(identifier: impl Into<String>) -> Self {
        PatientProfile {
            identifier: identifier.into(),
            diagnosed_conditions: BTreeSet::new(),
            asthmatic: Some(false),
        }
    }

    fn diagnosed_asthma(&self) -> bool {
        self.diagnosed_conditions
            .iter()
            .any(|c| c.eq_ignore_ascii_case(ASTHMA) || c == EIA)
    }

    pub fn asthma_status(&self) -> AsthmaStatus {
        match (self.asthmatic, self.diagnosed_asthma()) {
            (Some(true), _) | (None, true) => AsthmaStatus::Asthmatic,
            (Some(false), _) => AsthmaStatus::NonAsthmatic,
            (None, false) => AsthmaStatus::Unknown,
        }
    }

    pub fn validate(&self, kb: &KnowledgeBase) -> Result<(), EngineError> {
        for c in &self.diagnosed_conditions {
            if !c.eq_ignore_ascii_case(ASTHMA) && kb.condition(c).is_none() {
                return Err(EngineError::Profile(format!(
                    "diagnosed condition `{c}` is not in the knowledge base"
                )));
            }
        }
        if self.asthmatic == Some(false) && self.diagnosed_asthma() {
            return Err(EngineError::Profile(
                "profile is marked non-asthmatic but lists an asthma diagnosis".into(),
            ));
        }
        Ok(())
    }

    pub fn from_toml_str(src: &str) -> Result<Self, EngineError> {
        toml::from_str(src).map_err(|e| EngineError::Profile(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EngineError> {
        let path = path.as_ref();
        let src = std::fs::read_to_string(path).map_err(|e| EngineError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        PatientProfile::from_toml_str(&src)
    }
}

/// EIA applies only to diagnosed asthmatics and EIB only to non-asthmatics;
/// a known asthma status excludes the other one.
pub fn apply_profile_rule(entries: &mut [SuspicionEntry], profile: &PatientProfile) {
    let (excluded, rule) = match profile.asthma_status() {
        AsthmaStatus::Asthmatic => (EIB, PROFILE_RULE_ASTHMATIC),
        AsthmaStatus::NonAsthmatic => (EIA, PROFILE_RULE_NON_ASTHMATIC),
        AsthmaStatus::Unknown => return,
    };
    for e in entries.iter_mut().filter(|e| e.condition == excluded) {
        if e.status == EntryStatus::Ranked {
            e.status = EntryStatus::ExcludedByProfile;
        }
        e.applied_rules.push(rule.to_string());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_resolution() {
        assert_eq!(PatientProfile::default().asthma_status(), AsthmaStatus::Unknown);
        assert_eq!(
            PatientProfile::asthmatic("p").asthma_status(),
            AsthmaStatus::Asthmatic
        );
        let eia = PatientProfile {
            diagnosed_conditions: ["EIA".to_string()].into(),
            ..Default::default()
        };
        assert_eq!(eia.asthma_status(), AsthmaStatus::Asthmatic);
        assert_eq!(
            PatientProfile::non_asthmatic("p").asthma_status(),
            AsthmaStatus::NonAsthmatic
        );
    }

    #[test]
    fn validation() {
        let kb = KnowledgeBase::builtin();
        assert!(PatientProfile::asthmatic("p").validate(&kb).is_ok());
        let bad = PatientProfile {
            diagnosed_conditions: ["flu".to_string()].into(),
            ..Default::default()
        };
        assert!(bad.validate(&kb).is_err());
        let contradictory = PatientProfile {
            diagnosed_conditions: ["asthma".to_string()].into(),
            asthmatic: Some(false),
            ..Default::default()
        };
        assert!(contradictory.validate(&kb).is_err());
    }

    #[test]
    fn parse_toml() {
        let p = PatientProfile::from_toml_str(
            "identifier = \"student-01\"\ndiagnosed_conditions = [\"asthma\"]\n",
        )
        .unwrap();
        assert_eq!(p.asthma_status(), AsthmaStatus::Asthmatic);
        assert!(PatientProfile::from_toml_str("nickname = 3").is_err());
    }
}
