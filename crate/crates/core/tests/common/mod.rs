//! Random knowledge bases and a brute-force recomputation of the weighting
//! model that shares no code with the library's scoring path.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use cfmon_core::kb::{ConditionProfile, EvidenceAtom, EvidenceKind, KnowledgeBase};
use rand::seq::SliceRandom;
use rand::Rng;

pub const GOLDEN_Q: [&str; 5] = ["whz", "cgh", "lt", "lh", "vgr"];

pub fn workspace_file(rel: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

/// Plain-data KB used by the oracle.
#[derive(Debug, Clone)]
pub struct RawKb {
    pub atoms: Vec<(String, bool)>, // (id, is_symptom)
    pub conditions: Vec<(String, Vec<String>, Vec<String>)>,
}

impl RawKb {
    pub fn build(&self) -> KnowledgeBase {
        let atoms = self
            .atoms
            .iter()
            .map(|(id, symptom)| EvidenceAtom {
                id: id.clone(),
                kind: if *symptom {
                    EvidenceKind::Symptom
                } else {
                    EvidenceKind::Trigger
                },
                display_name: id.clone(),
                extended: false,
            })
            .collect();
        let conditions = self
            .conditions
            .iter()
            .map(|(id, s, t)| ConditionProfile {
                id: id.clone(),
                name: id.clone(),
                symptoms: s.iter().cloned().collect(),
                triggers: t.iter().cloned().collect(),
            })
            .collect();
        KnowledgeBase::new("random", atoms, conditions).expect("generated KB is valid")
    }
}

/// Up to `max_conditions` conditions over up to `max_atoms` atoms.
pub fn random_kb<R: Rng>(rng: &mut R, max_conditions: usize, max_atoms: usize) -> RawKb {
    let n_atoms = rng.gen_range(1..=max_atoms);
    let atoms: Vec<(String, bool)> = (0..n_atoms)
        .map(|i| (format!("a{i}"), rng.gen_bool(0.5)))
        .collect();
    let n_conditions = rng.gen_range(0..=max_conditions);
    let conditions = (0..n_conditions)
        .map(|c| {
            let mut members: Vec<&(String, bool)> =
                atoms.iter().filter(|_| rng.gen_bool(0.4)).collect();
            if members.is_empty() {
                members.push(atoms.choose(rng).unwrap());
            }
            let s = members.iter().filter(|a| a.1).map(|a| a.0.clone()).collect();
            let t = members.iter().filter(|a| !a.1).map(|a| a.0.clone()).collect();
            (format!("C{c}"), s, t)
        })
        .collect();
    RawKb { atoms, conditions }
}

pub fn random_q<R: Rng>(rng: &mut R, kb: &RawKb) -> BTreeSet<String> {
    kb.atoms
        .iter()
        .filter(|_| rng.gen_bool(0.35))
        .map(|a| a.0.clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub condition: String,
    pub gamma: f64,
    pub theta: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Oracle {
    pub beta: Vec<String>,
    pub counts: BTreeMap<String, usize>,
    pub rows: Vec<OracleRow>,
}

/// Direct set counting plus a literal evaluation of the weight formula.
pub fn oracle(kb: &RawKb, q: &BTreeSet<String>) -> Oracle {
    // Q restricted to the universe
    let mut universe = Vec::new();
    for (_, s, t) in &kb.conditions {
        for a in s.iter().chain(t.iter()) {
            if !universe.contains(a) {
                universe.push(a.clone());
            }
        }
    }
    let observed: Vec<&String> = q.iter().filter(|a| universe.contains(a)).collect();

    let mut beta = Vec::new();
    for (id, s, t) in &kb.conditions {
        let mut hit = false;
        for a in &observed {
            for e in s.iter().chain(t.iter()) {
                if e == *a {
                    hit = true;
                }
            }
        }
        if hit {
            beta.push(id.clone());
        }
    }

    let mut counts = BTreeMap::new();
    for a in &observed {
        let mut n = 0;
        for (id, s, t) in &kb.conditions {
            if beta.contains(id) && (s.contains(a) || t.contains(a)) {
                n += 1;
            }
        }
        if n > 0 {
            counts.insert((*a).clone(), n);
        }
    }

    let mut rows = Vec::new();
    for (id, s, t) in &kb.conditions {
        if !beta.contains(id) {
            continue;
        }
        let mut gamma: f64 = 0.0;
        let mut theta: f64 = 0.0;
        for a in &observed {
            if let Some(&n) = counts.get(*a) {
                let r = 1.0 / n as f64;
                if s.contains(a) && r > gamma {
                    gamma = r;
                }
                if t.contains(a) && r > theta {
                    theta = r;
                }
            }
        }
        let num = gamma + theta;
        let den = if num > 1.0 - gamma * theta { num } else { 1.0 - gamma * theta };
        rows.push(OracleRow {
            condition: id.clone(),
            gamma,
            theta,
            weight: num / den,
        });
    }
    Oracle { beta, counts, rows }
}
