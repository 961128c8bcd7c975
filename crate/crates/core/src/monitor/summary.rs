use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{NaiveDate, NaiveTime, Timelike};
use serde::Serialize;

use crate::events::{ActivityLevel, EventWindow};

/// Period scheme for the symptom-frequency chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Bucketing {
    #[default]
    Hourly,
    /// Six-hour quarters: night, morning, afternoon, evening.
    Quarters,
}

impl FromStr for Bucketing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hourly" => Ok(Bucketing::Hourly),
            "quarters" => Ok(Bucketing::Quarters),
            other => Err(format!("unknown bucketing `{other}` (hourly, quarters)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Bucket {
    pub start_hour: u32,
    pub label: String,
}

impl Bucketing {
    pub fn bucket(self, t: NaiveTime) -> Bucket {
        let h = t.hour();
        match self {
            Bucketing::Hourly => Bucket {
                start_hour: h,
                label: format!("{h:02}:00"),
            },
            Bucketing::Quarters => {
                let start_hour = h - h % 6;
                let label = match start_hour {
                    0 => "night",
                    6 => "morning",
                    12 => "afternoon",
                    _ => "evening",
                };
                Bucket {
                    start_hour,
                    label: label.into(),
                }
            }
        }
    }
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

pub type SymptomCounts = BTreeMap<Bucket, BTreeMap<String, usize>>;
pub type ActivityIntensity = BTreeMap<u32, BTreeMap<ActivityLevel, usize>>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmbientSample {
    pub date: NaiveDate,
    pub time: NaiveTime,
    pub temp_c: f64,
    pub humidity_pct: f64,
}

/// Non-null sound labels counted per period bucket.
pub fn summarize_symptoms(window: &EventWindow, bucketing: Bucketing) -> SymptomCounts {
    let mut out = SymptomCounts::new();
    for r in &window.records {
        if let Some(label) = &r.sound_detected {
            *out.entry(bucketing.bucket(r.event_time))
                .or_default()
                .entry(label.clone())
                .or_default() += 1;
        }
    }
    out
}

/// One (time, temperature, humidity) sample per record, in time order.
pub fn summarize_ambient(window: &EventWindow) -> Vec<AmbientSample> {
    let mut recs: Vec<_> = window.records.iter().collect();
    recs.sort_by_key(|r| r.sort_key());
    recs.into_iter()
        .map(|r| AmbientSample {
            date: r.date,
            time: r.event_time,
            temp_c: r.temperature_c,
            humidity_pct: r.relative_humidity,
        })
        .collect()
}

/// Non-null activity levels counted per hour of day.
pub fn summarize_activity(window: &EventWindow) -> ActivityIntensity {
    let mut out = ActivityIntensity::new();
    for r in &window.records {
        if let Some(level) = r.activity_level {
            *out.entry(r.event_time.hour())
                .or_default()
                .entry(level)
                .or_default() += 1;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DailySummary {
    pub symptom_counts: SymptomCounts,
    pub ambient_series: Vec<AmbientSample>,
    pub activity_intensity: ActivityIntensity,
}

impl DailySummary {
    pub fn compute(window: &EventWindow, bucketing: Bucketing) -> Self {
        #[cfg(feature = "parallel")]
        let (symptom_counts, (ambient_series, activity_intensity)) = rayon::join(
            || summarize_symptoms(window, bucketing),
            || rayon::join(|| summarize_ambient(window), || summarize_activity(window)),
        );
        #[cfg(not(feature = "parallel"))]
        let (symptom_counts, ambient_series, activity_intensity) = (
            summarize_symptoms(window, bucketing),
            summarize_ambient(window),
            summarize_activity(window),
        );
        DailySummary {
            symptom_counts,
            ambient_series,
            activity_intensity,
        }
    }

    /// `bucket,label,count`
    pub fn symptoms_csv(&self) -> String {
        let mut out = String::from("bucket,label,count\n");
        for (bucket, labels) in &self.symptom_counts {
            for (label, n) in labels {
                out.push_str(&format!("{bucket},{label},{n}\n"));
            }
        }
        out
    }

    /// `time,temp_c,humidity_pct`
    pub fn ambient_csv(&self) -> String {
        let mut out = String::from("time,temp_c,humidity_pct\n");
        for s in &self.ambient_series {
            out.push_str(&format!(
                "{},{},{}\n",
                s.time.format("%H:%M:%S"),
                s.temp_c,
                s.humidity_pct
            ));
        }
        out
    }

    /// `hour,level,count`
    pub fn activity_csv(&self) -> String {
        let mut out = String::from("hour,level,count\n");
        for (hour, levels) in &self.activity_intensity {
            for (level, n) in levels {
                out.push_str(&format!("{hour:02},{level},{n}\n"));
            }
        }
        out
    }
}
