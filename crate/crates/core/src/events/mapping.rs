use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::record::{ActivityLevel, SensorRecord, HUMIDITY_RANGE_PCT, TEMP_RANGE_C};
use super::{EventWindow, StoreError};
use crate::kb::ObservationSet;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub const LOW_TEMPERATURE: &str = "lt";
pub const LOW_HUMIDITY: &str = "lh";
pub const VIGOROUS_EXERCISE: &str = "vgr";

/// Cutoffs that turn raw measurements into trigger atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingThresholds {
    pub low_temp_c: f64,
    pub low_humidity_pct: f64,
    pub vigorous_levels: BTreeSet<ActivityLevel>,
}

impl Default for MappingThresholds {
    fn default() -> Self {
        MappingThresholds {
            low_temp_c: 15.0,
            low_humidity_pct: 40.0,
            vigorous_levels: [ActivityLevel::Vigorous].into(),
        }
    }
}

impl MappingThresholds {
    pub fn validate(&self) -> Result<(), StoreError> {
        let (tlo, thi) = TEMP_RANGE_C;
        let (hlo, hhi) = HUMIDITY_RANGE_PCT;
        if !(tlo..=thi).contains(&self.low_temp_c) {
            return Err(StoreError::Config(format!(
                "low_temp_c {} outside [{tlo}, {thi}]",
                self.low_temp_c
            )));
        }
        if !(hlo..=hhi).contains(&self.low_humidity_pct) {
            return Err(StoreError::Config(format!(
                "low_humidity_pct {} outside [{hlo}, {hhi}]",
                self.low_humidity_pct
            )));
        }
        Ok(())
    }

    pub fn from_toml_str(src: &str) -> Result<Self, StoreError> {
        let th: MappingThresholds =
            toml::from_str(src).map_err(|e| StoreError::Config(e.to_string()))?;
        th.validate()?;
        Ok(th)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref();
        let src = std::fs::read_to_string(path).map_err(|source| StoreError::Io {
            path: path.display().to_string(),
            source,
        })?;
        MappingThresholds::from_toml_str(&src)
    }
}

/// Atom id for a classifier sound label, if the label is known.
pub fn sound_atom(label: &str) -> Option<&'static str> {
    match label.trim().to_ascii_lowercase().as_str() {
        "cough" => Some("cgh"),
        "wheeze" => Some("whz"),
        "stridor" => Some("str"),
        "sneeze" => Some("snz"),
        "snuffle" => Some("snf"),
        _ => None,
    }
}

/// Atoms derived from one record, plus the sound label if it was not
/// recognized.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MappedRecord {
    pub atoms: BTreeSet<&'static str>,
    pub unrecognized_sound: Option<String>,
}

pub fn map_record(r: &SensorRecord, th: &MappingThresholds) -> MappedRecord {
    let mut out = MappedRecord::default();
    if let Some(label) = &r.sound_detected {
        match sound_atom(label) {
            Some(a) => {
                out.atoms.insert(a);
            }
            None => {
                log::warn!("record {}: unrecognized sound label `{label}`", r.id);
                out.unrecognized_sound = Some(label.clone());
            }
        }
    }
    if r.activity_level.is_some_and(|a| th.vigorous_levels.contains(&a)) {
        out.atoms.insert(VIGOROUS_EXERCISE);
    }
    if r.temperature_c < th.low_temp_c {
        out.atoms.insert(LOW_TEMPERATURE);
    }
    if r.relative_humidity < th.low_humidity_pct {
        out.atoms.insert(LOW_HUMIDITY);
    }
    out
}

/// Observation set of a window together with unrecognized sound labels.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WindowEvidence {
    pub observations: ObservationSet,
    pub unrecognized_sounds: BTreeSet<String>,
}

#[derive(Default)]
struct Acc {
    atoms: BTreeSet<&'static str>,
    unknown: BTreeSet<String>,
}

impl Acc {
    fn push(mut self, m: MappedRecord) -> Self {
        self.atoms.extend(m.atoms);
        self.unknown.extend(m.unrecognized_sound);
        self
    }

    #[cfg_attr(not(feature = "parallel"), allow(dead_code))]
    fn merge(mut self, other: Acc) -> Self {
        self.atoms.extend(other.atoms);
        self.unknown.extend(other.unknown);
        self
    }

    fn finish(self, w: &EventWindow) -> WindowEvidence {
        WindowEvidence {
            observations: ObservationSet {
                atoms: self.atoms.into_iter().map(str::to_string).collect(),
                window: w.span,
            },
            unrecognized_sounds: self.unknown,
        }
    }
}

/// Union of [`map_record`] over the window. Runs across the rayon pool when
/// the `parallel` feature is enabled.
pub fn window_evidence(w: &EventWindow, th: &MappingThresholds) -> WindowEvidence {
    #[cfg(feature = "parallel")]
    {
        w.records
            .par_iter()
            .fold(Acc::default, |acc, r| acc.push(map_record(r, th)))
            .reduce(Acc::default, Acc::merge)
            .finish(w)
    }
    #[cfg(not(feature = "parallel"))]
    {
        window_evidence_sequential(w, th)
    }
}

pub fn window_evidence_sequential(w: &EventWindow, th: &MappingThresholds) -> WindowEvidence {
    w.records
        .iter()
        .fold(Acc::default(), |acc, r| acc.push(map_record(r, th)))
        .finish(w)
}

pub fn build_observation_set(w: &EventWindow, th: &MappingThresholds) -> ObservationSet {
    window_evidence(w, th).observations
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{NaiveDate, NaiveTime};

    fn rec(sound: Option<&str>, act: Option<ActivityLevel>, hum: f64, temp: f64) -> SensorRecord {
        SensorRecord {
            id: 1,
            sound_detected: sound.map(str::to_string),
            activity_level: act,
            relative_humidity: hum,
            temperature_c: temp,
            event_time: NaiveTime::from_hms_opt(4, 51, 42).unwrap(),
            date: NaiveDate::from_ymd_opt(2017, 4, 8).unwrap(),
        }
    }

    fn atoms(m: MappedRecord) -> Vec<&'static str> {
        m.atoms.into_iter().collect()
    }

    #[test]
    fn map_examples() {
        let th = MappingThresholds::default();
        let row38 = rec(Some("Wheeze"), Some(ActivityLevel::Vigorous), 84.58, 27.0);
        assert_eq!(atoms(map_record(&row38, &th)), vec!["vgr", "whz"]);
        let row31 = rec(None, None, 80.33, 28.44);
        assert!(map_record(&row31, &th).atoms.is_empty());
        let cold = rec(Some("Wheeze"), Some(ActivityLevel::Vigorous), 30.0, 10.0);
        assert_eq!(atoms(map_record(&cold, &th)), vec!["lh", "lt", "vgr", "whz"]);
    }

    #[test]
    fn moderate_is_not_vigorous_by_default() {
        let th = MappingThresholds::default();
        let r = rec(Some("Cough"), Some(ActivityLevel::Moderate), 84.02, 26.93);
        assert_eq!(atoms(map_record(&r, &th)), vec!["cgh"]);
        let mut relaxed = th.clone();
        relaxed.vigorous_levels.insert(ActivityLevel::Moderate);
        assert_eq!(atoms(map_record(&r, &relaxed)), vec!["cgh", "vgr"]);
    }

    #[test]
    fn unknown_sound_is_reported_not_mapped() {
        let th = MappingThresholds::default();
        let m = map_record(&rec(Some("Hiccup"), None, 80.0, 25.0), &th);
        assert!(m.atoms.is_empty());
        assert_eq!(m.unrecognized_sound.as_deref(), Some("Hiccup"));
    }

    #[test]
    fn thresholds_config() {
        let th = MappingThresholds::from_toml_str(
            "low_temp_c = 12.5\nlow_humidity_pct = 35\nvigorous_levels = [\"Vigorous\", \"Moderate\"]\n",
        )
        .unwrap();
        assert_eq!(th.low_temp_c, 12.5);
        assert_eq!(th.vigorous_levels.len(), 2);
        assert!(MappingThresholds::from_toml_str(
            "low_temp_c = 99\nlow_humidity_pct = 35\nvigorous_levels = []\n"
        )
        .is_err());
    }

    #[test]
    fn empty_window_gives_empty_q() {
        let w = EventWindow::default();
        assert!(build_observation_set(&w, &MappingThresholds::default()).is_empty());
    }
}
