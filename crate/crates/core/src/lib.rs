//! Certainty-factor monitoring of exercise-induced respiratory conditions.
//!
//! Sensor events are mapped to evidence atoms, matched against a declarative
//! knowledge base of conditions, and scored with participation-ratio
//! certainty weights. Timing and profile rules then discriminate between
//! look-alike conditions before the most-suspected set is reported.
//!
//! With the default `parallel` feature, per-record evidence mapping, batch
//! inference and summary computation run on the rayon pool. Disable it for
//! a purely sequential build.

pub mod cf;
pub mod engine;
pub mod events;
pub mod kb;
pub mod monitor;

pub use cf::{CertaintyValue, CfError};
pub use engine::{
    run_inference, EngineError, EntryStatus, InferenceConfig, InferenceReport, PatientProfile,
    SuspicionEntry,
};
pub use events::{EventStore, EventWindow, MappingThresholds, SensorRecord, StoreError};
pub use kb::{KbError, KnowledgeBase, ObservationSet};
