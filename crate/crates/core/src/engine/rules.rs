use std::collections::BTreeSet;
use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::{EngineError, SuspicionEntry};
use crate::cf::{combine_incremental, CertaintyValue};
use crate::events::{ActivityLevel, EventWindow, SensorRecord};

fn default_cf_delta() -> CertaintyValue {
    CertaintyValue::new(0.2).expect("in range")
}

fn default_activity() -> BTreeSet<ActivityLevel> {
    [ActivityLevel::Vigorous].into()
}

/// Timing knowledge that raises or lowers one condition's suspicion index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationRule {
    pub id: String,
    pub target: String,
    #[serde(default = "default_cf_delta")]
    pub cf_delta: CertaintyValue,
    #[serde(flatten)]
    pub predicate: RulePredicate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RulePredicate {
    /// The first `sound` record comes at least `min_minutes` after the first
    /// record at a qualifying activity level and, when `persist_minutes` is
    /// set, no later than that long after the last qualifying record.
    SymptomAfterOnset {
        sound: String,
        #[serde(default = "default_activity")]
        activity: BTreeSet<ActivityLevel>,
        min_minutes: f64,
        #[serde(default)]
        persist_minutes: Option<f64>,
    },
    /// Some `sound` record lies within `tolerance_seconds` of a record at a
    /// qualifying activity level (the record itself counts).
    SymptomDuringActivity {
        sound: String,
        #[serde(default = "default_activity")]
        activity: BTreeSet<ActivityLevel>,
        #[serde(default)]
        tolerance_seconds: f64,
    },
}

fn has_sound(r: &SensorRecord, sound: &str) -> bool {
    r.sound_detected
        .as_deref()
        .is_some_and(|s| s.trim().eq_ignore_ascii_case(sound))
}

fn at_level(r: &SensorRecord, levels: &BTreeSet<ActivityLevel>) -> bool {
    r.activity_level.is_some_and(|a| levels.contains(&a))
}

fn minutes_between(a: NaiveDateTime, b: NaiveDateTime) -> f64 {
    (b - a).num_milliseconds() as f64 / 60_000.0
}

impl RulePredicate {
    /// Evaluates over time-sorted records.
    pub fn holds(&self, window: &EventWindow) -> bool {
        let records = &window.records;
        match self {
            RulePredicate::SymptomAfterOnset {
                sound,
                activity,
                min_minutes,
                persist_minutes,
            } => {
                let mut active = records.iter().filter(|r| at_level(r, activity));
                let Some(onset) = active.next().map(SensorRecord::timestamp) else {
                    return false;
                };
                let end = active.last().map_or(onset, SensorRecord::timestamp);
                let Some(first) = records.iter().find(|r| has_sound(r, sound)) else {
                    return false;
                };
                let t = first.timestamp();
                let after_onset = minutes_between(onset, t) >= *min_minutes;
                let within = persist_minutes.map_or(true, |p| minutes_between(end, t) <= p);
                after_onset && within
            }
            RulePredicate::SymptomDuringActivity {
                sound,
                activity,
                tolerance_seconds,
            } => {
                let active: Vec<NaiveDateTime> = records
                    .iter()
                    .filter(|r| at_level(r, activity))
                    .map(SensorRecord::timestamp)
                    .collect();
                records.iter().filter(|r| has_sound(r, sound)).any(|r| {
                    let t = r.timestamp();
                    (at_level(r, activity))
                        || active.iter().any(|&a| {
                            ((t - a).num_milliseconds().abs() as f64) / 1000.0
                                <= *tolerance_seconds
                        })
                })
            }
        }
    }
}

#[derive(Debug, Deserialize)]
struct RulesDocument {
    #[serde(default)]
    rules: Vec<DiscriminationRule>,
}

pub fn rules_from_toml_str(src: &str) -> Result<Vec<DiscriminationRule>, EngineError> {
    let doc: RulesDocument = toml::from_str(src).map_err(|e| EngineError::Rules(e.to_string()))?;
    let mut ids = BTreeSet::new();
    for r in &doc.rules {
        if !ids.insert(r.id.as_str()) {
            return Err(EngineError::Rules(format!("duplicate rule id `{}`", r.id)));
        }
    }
    Ok(doc.rules)
}

pub fn load_rules(path: impl AsRef<Path>) -> Result<Vec<DiscriminationRule>, EngineError> {
    let path = path.as_ref();
    let src = std::fs::read_to_string(path).map_err(|e| EngineError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    rules_from_toml_str(&src)
}

pub const DEFAULT_RULES: &str = include_str!("../../../../config/rules.toml");

pub fn default_rules() -> Vec<DiscriminationRule> {
    rules_from_toml_str(DEFAULT_RULES).expect("bundled rules are valid")
}

/// Applies every rule whose predicate holds to its target entry, combining
/// `cf_delta` into the adjusted weight. Returns warnings for skipped rules.
pub fn apply_timing_rules(
    entries: &mut [SuspicionEntry],
    window: &EventWindow,
    rules: &[DiscriminationRule],
) -> Vec<String> {
    let mut warnings = Vec::new();
    for rule in rules {
        let Some(entry) = entries.iter_mut().find(|e| e.condition == rule.target) else {
            let msg = format!(
                "rule `{}` targets `{}`, which is not suspected; skipped",
                rule.id, rule.target
            );
            log::warn!("{msg}");
            warnings.push(msg);
            continue;
        };
        if !rule.predicate.holds(window) {
            continue;
        }
        let current = CertaintyValue::new(entry.adjusted_weight).expect("weights lie in [0, 1]");
        match combine_incremental(current, rule.cf_delta) {
            Ok(v) => {
                entry.adjusted_weight = v.value().max(0.0);
                entry.applied_rules.push(rule.id.clone());
            }
            Err(e) => {
                let msg = format!("rule `{}` on `{}` skipped: {e}", rule.id, rule.target);
                log::warn!("{msg}");
                warnings.push(msg);
            }
        }
    }
    warnings
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::EntryStatus;
    use chrono::{Duration, NaiveDate, NaiveTime};

    fn base() -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2017, 4, 8)
            .unwrap()
            .and_time(NaiveTime::from_hms_opt(4, 0, 0).unwrap())
    }

    fn rec(id: u64, offset_s: i64, sound: Option<&str>, act: Option<ActivityLevel>) -> SensorRecord {
        let ts = base() + Duration::seconds(offset_s);
        SensorRecord {
            id,
            sound_detected: sound.map(str::to_string),
            activity_level: act,
            relative_humidity: 50.0,
            temperature_c: 20.0,
            event_time: ts.time(),
            date: ts.date(),
        }
    }

    fn entry(id: &str, w: f64) -> SuspicionEntry {
        SuspicionEntry {
            condition: id.into(),
            gamma: 0.5,
            theta: 0.25,
            weight: w,
            adjusted_weight: w,
            status: EntryStatus::Ranked,
            applied_rules: vec![],
        }
    }

    fn eib_rule() -> DiscriminationRule {
        DiscriminationRule {
            id: "eib-wheeze-after-5min".into(),
            target: "EIB".into(),
            cf_delta: CertaintyValue::new(0.2).unwrap(),
            predicate: RulePredicate::SymptomAfterOnset {
                sound: "Wheeze".into(),
                activity: default_activity(),
                min_minutes: 5.0,
                persist_minutes: None,
            },
        }
    }

    fn vigorous_then_wheeze(at_minutes: i64) -> EventWindow {
        EventWindow::from_records(vec![
            rec(1, 0, None, Some(ActivityLevel::Vigorous)),
            rec(2, 60, None, Some(ActivityLevel::Vigorous)),
            rec(3, at_minutes * 60, Some("Wheeze"), Some(ActivityLevel::Vigorous)),
        ])
    }

    #[test]
    fn wheeze_after_six_minutes_raises_eib() {
        let w = 0.75 / 0.875;
        let mut entries = vec![entry("EIB", w)];
        let warnings = apply_timing_rules(&mut entries, &vigorous_then_wheeze(6), &[eib_rule()]);
        assert!(warnings.is_empty());
        let expected = w + 0.2 * (1.0 - w);
        assert!((entries[0].adjusted_weight - expected).abs() < 1e-12);
        assert!((entries[0].adjusted_weight - 0.8857).abs() < 1e-4);
        assert_eq!(entries[0].applied_rules, vec!["eib-wheeze-after-5min"]);
        assert_eq!(entries[0].weight, w);
    }

    #[test]
    fn early_wheeze_does_not_fire() {
        let mut entries = vec![entry("EIB", 0.8571)];
        apply_timing_rules(&mut entries, &vigorous_then_wheeze(1), &[eib_rule()]);
        assert_eq!(entries[0].adjusted_weight, 0.8571);
        assert!(entries[0].applied_rules.is_empty());
    }

    #[test]
    fn persist_window_bounds_late_wheeze() {
        let mut rule = eib_rule();
        rule.predicate = RulePredicate::SymptomAfterOnset {
            sound: "Wheeze".into(),
            activity: default_activity(),
            min_minutes: 5.0,
            persist_minutes: Some(10.0),
        };
        let late = EventWindow::from_records(vec![
            rec(1, 0, None, Some(ActivityLevel::Vigorous)),
            rec(2, 6 * 60, None, Some(ActivityLevel::Vigorous)),
            rec(3, 30 * 60, Some("Wheeze"), None),
        ]);
        assert!(!rule.predicate.holds(&late));
        let soon = EventWindow::from_records(vec![
            rec(1, 0, None, Some(ActivityLevel::Vigorous)),
            rec(2, 6 * 60, None, Some(ActivityLevel::Vigorous)),
            rec(3, 12 * 60, Some("Wheeze"), None),
        ]);
        assert!(rule.predicate.holds(&soon));
    }

    #[test]
    fn stridor_rule() {
        let p = RulePredicate::SymptomDuringActivity {
            sound: "Stridor".into(),
            activity: default_activity(),
            tolerance_seconds: 0.0,
        };
        let none = EventWindow::from_records(vec![rec(1, 0, Some("Cough"), Some(ActivityLevel::Vigorous))]);
        assert!(!p.holds(&none));
        let with = EventWindow::from_records(vec![rec(1, 0, Some("Stridor"), Some(ActivityLevel::Vigorous))]);
        assert!(p.holds(&with));
        let apart = EventWindow::from_records(vec![
            rec(1, 0, None, Some(ActivityLevel::Vigorous)),
            rec(2, 4, Some("Stridor"), None),
        ]);
        assert!(!p.holds(&apart));
        let tolerant = RulePredicate::SymptomDuringActivity {
            sound: "Stridor".into(),
            activity: default_activity(),
            tolerance_seconds: 5.0,
        };
        assert!(tolerant.holds(&apart));
    }

    #[test]
    fn missing_target_warns() {
        let mut entries = vec![entry("VCD", 0.5)];
        let warnings = apply_timing_rules(&mut entries, &vigorous_then_wheeze(6), &[eib_rule()]);
        assert_eq!(warnings.len(), 1);
        assert_eq!(entries[0].adjusted_weight, 0.5);
    }

    #[test]
    fn negative_delta_lowers_and_floors() {
        let mut rule = eib_rule();
        rule.cf_delta = CertaintyValue::new(-0.3).unwrap();
        let mut entries = vec![entry("EIB", 0.6)];
        apply_timing_rules(&mut entries, &vigorous_then_wheeze(6), &[rule.clone()]);
        assert!((entries[0].adjusted_weight - 0.3 / 0.7).abs() < 1e-12);

        let mut low = vec![entry("EIB", 0.1)];
        apply_timing_rules(&mut low, &vigorous_then_wheeze(6), &[rule]);
        assert_eq!(low[0].adjusted_weight, 0.0);
    }

    #[test]
    fn degenerate_combination_is_skipped() {
        let mut rule = eib_rule();
        rule.cf_delta = CertaintyValue::new(-1.0).unwrap();
        let mut entries = vec![entry("EIB", 1.0)];
        let warnings = apply_timing_rules(&mut entries, &vigorous_then_wheeze(6), &[rule]);
        assert_eq!(warnings.len(), 1);
        assert_eq!(entries[0].adjusted_weight, 1.0);
        assert!(entries[0].applied_rules.is_empty());
    }

    #[test]
    fn bundled_rules_parse() {
        let rules = default_rules();
        assert!(rules.iter().any(|r| r.target == "EIB"));
        assert!(rules.iter().any(|r| r.target == "VCD"));
        assert!(rules.iter().all(|r| r.cf_delta.value() == 0.2));
    }

    #[test]
    fn rules_file_errors() {
        let dup = r#"
            [[rules]]
            id = "a"
            target = "EIB"
            kind = "symptom_during_activity"
            sound = "Stridor"
            [[rules]]
            id = "a"
            target = "VCD"
            kind = "symptom_during_activity"
            sound = "Stridor"
        "#;
        assert!(rules_from_toml_str(dup).is_err());
        let bad_delta = r#"
            [[rules]]
            id = "a"
            target = "EIB"
            cf_delta = 1.5
            kind = "symptom_during_activity"
            sound = "Stridor"
        "#;
        assert!(rules_from_toml_str(bad_delta).is_err());
    }
}
