//! Domain knowledge: evidence atoms, condition profiles, and the
//! set/weighting model evaluated over an observation set.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cf::{propagate_disjunctive, CertaintyValue};

#[derive(Debug, Error)]
pub enum KbError {
    #[error("cannot read knowledge base {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("knowledge base does not parse: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("duplicate atom id `{0}`")]
    DuplicateAtom(String),
    #[error("duplicate condition id `{0}`")]
    DuplicateCondition(String),
    #[error("invalid atom id `{0}`: expected a short lowercase token")]
    InvalidAtomId(String),
    #[error("condition `{condition}` references unknown atom `{atom}`")]
    UnknownAtom { condition: String, atom: String },
    #[error("condition `{condition}` lists `{atom}` as a {listed} but the atom is a {actual}")]
    KindMismatch {
        condition: String,
        atom: String,
        listed: &'static str,
        actual: &'static str,
    },
    #[error("condition `{0}` has neither symptoms nor triggers")]
    EmptyCondition(String),
    #[error("weight input {what} = {value} is outside [0, 1]")]
    WeightRange { what: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceKind {
    Symptom,
    Trigger,
}

impl EvidenceKind {
    fn noun(self) -> &'static str {
        match self {
            EvidenceKind::Symptom => "symptom",
            EvidenceKind::Trigger => "trigger",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceAtom {
    pub id: String,
    pub kind: EvidenceKind,
    pub display_name: String,
    /// Not part of the minimal scenario table; shipped to make the KB complete.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub extended: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionProfile {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub symptoms: BTreeSet<String>,
    #[serde(default)]
    pub triggers: BTreeSet<String>,
}

impl ConditionProfile {
    pub fn evidence(&self) -> impl Iterator<Item = &String> {
        self.symptoms.iter().chain(self.triggers.iter())
    }

    pub fn has_evidence(&self, atom: &str) -> bool {
        self.symptoms.contains(atom) || self.triggers.contains(atom)
    }
}

#[derive(Debug, Deserialize)]
struct KbDocument {
    version: String,
    #[serde(default)]
    atoms: Vec<EvidenceAtom>,
    #[serde(default)]
    conditions: Vec<ConditionProfile>,
}

/// Validated, immutable domain knowledge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnowledgeBase {
    version: String,
    atoms: BTreeMap<String, EvidenceAtom>,
    conditions: Vec<ConditionProfile>,
}

fn valid_atom_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 16
        && id
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

impl KnowledgeBase {
    pub fn new(
        version: impl Into<String>,
        atoms: Vec<EvidenceAtom>,
        conditions: Vec<ConditionProfile>,
    ) -> Result<Self, KbError> {
        let mut registry = BTreeMap::new();
        for atom in atoms {
            if !valid_atom_id(&atom.id) {
                return Err(KbError::InvalidAtomId(atom.id));
            }
            if registry.contains_key(&atom.id) {
                return Err(KbError::DuplicateAtom(atom.id));
            }
            registry.insert(atom.id.clone(), atom);
        }

        let mut seen = BTreeSet::new();
        for c in &conditions {
            if !seen.insert(c.id.as_str()) {
                return Err(KbError::DuplicateCondition(c.id.clone()));
            }
            if c.symptoms.is_empty() && c.triggers.is_empty() {
                return Err(KbError::EmptyCondition(c.id.clone()));
            }
            for (list, listed) in [
                (&c.symptoms, EvidenceKind::Symptom),
                (&c.triggers, EvidenceKind::Trigger),
            ] {
                for id in list {
                    let atom = registry.get(id).ok_or_else(|| KbError::UnknownAtom {
                        condition: c.id.clone(),
                        atom: id.clone(),
                    })?;
                    if atom.kind != listed {
                        return Err(KbError::KindMismatch {
                            condition: c.id.clone(),
                            atom: id.clone(),
                            listed: listed.noun(),
                            actual: atom.kind.noun(),
                        });
                    }
                }
            }
        }

        Ok(KnowledgeBase {
            version: version.into(),
            atoms: registry,
            conditions,
        })
    }

    pub fn from_toml_str(src: &str) -> Result<Self, KbError> {
        let doc: KbDocument = toml::from_str(src)?;
        KnowledgeBase::new(doc.version, doc.atoms, doc.conditions)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, KbError> {
        let path = path.as_ref();
        let src = std::fs::read_to_string(path).map_err(|source| KbError::Io {
            path: path.display().to_string(),
            source,
        })?;
        KnowledgeBase::from_toml_str(&src)
    }

    /// The shipped five-condition exercise-respiratory knowledge base.
    pub fn builtin() -> Self {
        KnowledgeBase::from_toml_str(DEFAULT_KB).expect("bundled knowledge base is valid")
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn atoms(&self) -> impl Iterator<Item = &EvidenceAtom> {
        self.atoms.values()
    }

    pub fn atom(&self, id: &str) -> Option<&EvidenceAtom> {
        self.atoms.get(id)
    }

    pub fn conditions(&self) -> &[ConditionProfile] {
        &self.conditions
    }

    pub fn condition(&self, id: &str) -> Option<&ConditionProfile> {
        self.conditions.iter().find(|c| c.id == id)
    }

    /// Every atom referenced by at least one condition.
    pub fn universe(&self) -> BTreeSet<String> {
        self.conditions
            .iter()
            .flat_map(|c| c.evidence().cloned())
            .collect()
    }

    /// Splits `q` into the part inside the universe and the atoms that were
    /// dropped. Dropped atoms are logged, never fatal.
    pub fn restrict(&self, q: &ObservationSet) -> (ObservationSet, BTreeSet<String>) {
        let universe = self.universe();
        let (kept, dropped): (BTreeSet<_>, BTreeSet<_>) =
            q.atoms.iter().cloned().partition(|a| universe.contains(a));
        for a in &dropped {
            log::warn!("observed atom `{a}` is not in the knowledge base; ignored");
        }
        (
            ObservationSet {
                atoms: kept,
                window: q.window,
            },
            dropped,
        )
    }

    /// Conditions sharing at least one evidence atom with `q`, in KB order.
    pub fn suspected_conditions(&self, q: &ObservationSet) -> Vec<String> {
        self.conditions
            .iter()
            .filter(|c| c.evidence().any(|e| q.atoms.contains(e)))
            .map(|c| c.id.clone())
            .collect()
    }

    /// Counts, for each observed atom in the universe, how many suspected
    /// conditions list it.
    pub fn participation_ratios(&self, beta: &[String], q: &ObservationSet) -> ParticipationTable {
        let suspected: Vec<&ConditionProfile> =
            beta.iter().filter_map(|id| self.condition(id)).collect();
        let counts = q
            .atoms
            .iter()
            .filter_map(|atom| {
                let n = suspected.iter().filter(|c| c.has_evidence(atom)).count();
                (n > 0).then(|| (atom.clone(), n))
            })
            .collect();
        ParticipationTable { counts }
    }

    /// `(gamma, theta)` for one condition: the strongest observed symptom
    /// ratio and the strongest observed trigger ratio (0 when none observed).
    pub fn gamma_theta(
        &self,
        condition: &str,
        table: &ParticipationTable,
        q: &ObservationSet,
    ) -> (f64, f64) {
        let Some(c) = self.condition(condition) else {
            return (0.0, 0.0);
        };
        let strongest = |set: &BTreeSet<String>| {
            let ratios: Vec<CertaintyValue> = set
                .iter()
                .filter(|a| q.atoms.contains(*a))
                .filter_map(|a| table.ratio(a))
                .map(|r| CertaintyValue::new(r).expect("ratios lie in (0, 1]"))
                .collect();
            propagate_disjunctive(&ratios).map_or(0.0, CertaintyValue::value)
        };
        (strongest(&c.symptoms), strongest(&c.triggers))
    }
}

/// Normalized certainty weight of a suspected condition:
/// `(g + t) / max(g + t, 1 - g t)`.
pub fn certainty_weight(gamma: f64, theta: f64) -> Result<f64, KbError> {
    for (what, value) in [("gamma", gamma), ("theta", theta)] {
        if value.is_nan() || !(0.0..=1.0).contains(&value) {
            return Err(KbError::WeightRange { what, value });
        }
    }
    let support = gamma + theta;
    Ok(support / support.max(1.0 - gamma * theta))
}

/// Evidence atoms observed over a time window.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationSet {
    pub atoms: BTreeSet<String>,
    pub window: Option<(NaiveDateTime, NaiveDateTime)>,
}

impl ObservationSet {
    pub fn from_atoms<I, S>(atoms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ObservationSet {
            atoms: atoms.into_iter().map(Into::into).collect(),
            window: None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// Per-atom count of suspected conditions sharing that atom. The ratio is
/// the reciprocal of the count.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipationTable {
    counts: BTreeMap<String, usize>,
}

impl ParticipationTable {
    pub fn ratio(&self, atom: &str) -> Option<f64> {
        self.counts.get(atom).map(|&n| 1.0 / n as f64)
    }

    pub fn count(&self, atom: &str) -> Option<usize> {
        self.counts.get(atom).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.counts.iter().map(|(a, &n)| (a.as_str(), 1.0 / n as f64))
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

pub const DEFAULT_KB: &str = include_str!("../../../kb/default.toml");
