//! Scenario simulation and the daily chart-data summaries.

mod scenario;
mod summary;

pub use scenario::{
    simulate, simulate_to_writer, ActivityStep, AmbientProfile, ScenarioConfig, ScenarioError,
    ScriptedSound, SoundRate,
};
pub use summary::{
    summarize_activity, summarize_ambient, summarize_symptoms, ActivityIntensity, AmbientSample,
    Bucket, Bucketing, DailySummary, SymptomCounts,
};
