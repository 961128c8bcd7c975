//! Sensor-event records, the append-only event store, and the mapping from
//! raw measurements to evidence atoms.

mod mapping;
mod record;

use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use serde::Serialize;
use thiserror::Error;

pub use mapping::{
    build_observation_set, map_record, sound_atom, window_evidence, window_evidence_sequential,
    MappedRecord, MappingThresholds, WindowEvidence, LOW_HUMIDITY, LOW_TEMPERATURE,
    VIGOROUS_EXERCISE,
};
pub use record::{parse_date, ActivityLevel, SensorRecord, HEADER, HUMIDITY_RANGE_PCT, TEMP_RANGE_C};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("event data unreadable: {0}")]
    Csv(#[from] csv::Error),
    #[error("header mismatch: expected `{}`, found `{found}`", HEADER.join(","))]
    HeaderMismatch { found: String },
    #[error("event log {path} is corrupt at line {line}: {message}")]
    CorruptLog {
        path: String,
        line: u64,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestSummary {
    pub appended: usize,
    pub rejected: Vec<RowError>,
}

/// Sorted records of a time span.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventWindow {
    pub records: Vec<SensorRecord>,
    pub span: Option<(NaiveDateTime, NaiveDateTime)>,
}

impl EventWindow {
    /// Sorts the records and spans them from first to last timestamp.
    pub fn from_records(mut records: Vec<SensorRecord>) -> Self {
        records.sort_by_key(SensorRecord::sort_key);
        let span = match (records.first(), records.last()) {
            (Some(a), Some(b)) => Some((a.timestamp(), b.timestamp())),
            _ => None,
        };
        EventWindow { records, span }
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }
}

#[derive(Default)]
struct Index {
    by_date: BTreeMap<NaiveDate, Vec<SensorRecord>>,
    ids: HashSet<u64>,
}

impl Index {
    fn insert(&mut self, r: SensorRecord) {
        self.ids.insert(r.id);
        let day = self.by_date.entry(r.date).or_default();
        let key = r.sort_key();
        let at = day.partition_point(|x| x.sort_key() <= key);
        day.insert(at, r);
    }
}

/// Append-only event store with a per-date index.
///
/// Writers serialize on an internal lock; a batch becomes visible to
/// readers only once it is fully written, so queries always see whole rows.
pub struct EventStore {
    index: RwLock<Index>,
    log: Option<PathBuf>,
}

impl Default for EventStore {
    fn default() -> Self {
        EventStore::in_memory()
    }
}

impl EventStore {
    pub fn in_memory() -> Self {
        EventStore {
            index: RwLock::new(Index::default()),
            log: None,
        }
    }

    /// Opens (or creates) a newline-delimited event log backing the store.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        let io_err = |source| StoreError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut index = Index::default();
        if path.exists() {
            let src = std::fs::read_to_string(&path).map_err(io_err)?;
            if !src.trim().is_empty() {
                let parsed = parse_rows(&src)?;
                if let Some(bad) = parsed.errors.first() {
                    return Err(StoreError::CorruptLog {
                        path: path.display().to_string(),
                        line: bad.line,
                        message: bad.message.clone(),
                    });
                }
                for r in parsed.records {
                    if index.ids.contains(&r.id) {
                        return Err(StoreError::CorruptLog {
                            path: path.display().to_string(),
                            line: 0,
                            message: format!("duplicate record id {}", r.id),
                        });
                    }
                    index.insert(r);
                }
            } else {
                write_header(&path)?;
            }
        } else {
            write_header(&path)?;
        }
        Ok(EventStore {
            index: RwLock::new(index),
            log: Some(path),
        })
    }

    pub fn len(&self) -> usize {
        self.index.read().expect("store lock").ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.index
            .read()
            .expect("store lock")
            .by_date
            .keys()
            .copied()
            .collect()
    }

    /// Parses delimited event text and appends every valid row.
    ///
    /// Malformed rows (bad fields, out-of-range values, duplicate ids) are
    /// skipped and reported with their line numbers.
    pub fn ingest<R: Read>(&self, mut source: R) -> Result<IngestSummary, StoreError> {
        let mut text = String::new();
        source
            .read_to_string(&mut text)
            .map_err(|source| StoreError::Io {
                path: "<input>".into(),
                source,
            })?;
        let parsed = parse_rows(&text)?;
        let mut rejected = parsed.errors;

        let mut index = self.index.write().expect("store lock");
        let mut batch = Vec::with_capacity(parsed.records.len());
        let mut batch_ids = HashSet::new();
        for (line, r) in parsed.lines.into_iter().zip(parsed.records) {
            if index.ids.contains(&r.id) || !batch_ids.insert(r.id) {
                rejected.push(RowError {
                    line,
                    message: format!("duplicate record id {}", r.id),
                });
                continue;
            }
            batch.push(r);
        }
        rejected.sort_by_key(|e| e.line);

        if let Some(path) = &self.log {
            append_rows(path, &batch)?;
        }
        let appended = batch.len();
        for r in batch {
            index.insert(r);
        }
        for e in &rejected {
            log::warn!("line {}: {}", e.line, e.message);
        }
        Ok(IngestSummary { appended, rejected })
    }

    pub fn ingest_path(&self, path: impl AsRef<Path>) -> Result<IngestSummary, StoreError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| StoreError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.ingest(file)
    }

    /// Records of one date, optionally limited to an inclusive time range.
    pub fn query_window(
        &self,
        date: NaiveDate,
        range: Option<(NaiveTime, NaiveTime)>,
    ) -> EventWindow {
        let (from, to) = range.unwrap_or((
            NaiveTime::MIN,
            NaiveTime::from_hms_opt(23, 59, 59).expect("valid time"),
        ));
        let index = self.index.read().expect("store lock");
        let records = index
            .by_date
            .get(&date)
            .map(|day| {
                day.iter()
                    .filter(|r| r.event_time >= from && r.event_time <= to)
                    .cloned()
                    .collect()
            })
            .unwrap_or_default();
        EventWindow {
            records,
            span: Some((date.and_time(from), date.and_time(to))),
        }
    }

    /// Every record in sort order.
    pub fn all_records(&self) -> EventWindow {
        let index = self.index.read().expect("store lock");
        EventWindow::from_records(index.by_date.values().flatten().cloned().collect())
    }
}

/// Loads an event file into a fresh in-memory store.
pub fn load_events(path: impl AsRef<Path>) -> Result<(EventStore, IngestSummary), StoreError> {
    let store = EventStore::in_memory();
    let summary = store.ingest_path(path)?;
    Ok((store, summary))
}

struct ParsedRows {
    records: Vec<SensorRecord>,
    lines: Vec<u64>,
    errors: Vec<RowError>,
}

fn sniff_delimiter(text: &str) -> u8 {
    let first = text.lines().next().unwrap_or("");
    if first.contains('\t') && !first.contains(',') {
        b'\t'
    } else {
        b','
    }
}

fn parse_rows(text: &str) -> Result<ParsedRows, StoreError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(sniff_delimiter(text))
        .from_reader(text.as_bytes());
    let mut rows = reader.records();

    let header = match rows.next() {
        Some(h) => h?,
        None => {
            return Err(StoreError::HeaderMismatch {
                found: String::new(),
            })
        }
    };
    record::check_header(&header.iter().collect::<Vec<_>>())?;

    let mut out = ParsedRows {
        records: Vec::new(),
        lines: Vec::new(),
        errors: Vec::new(),
    };
    for row in rows {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                out.errors.push(RowError {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line());
        let fields: Vec<&str> = row.iter().collect();
        if fields.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        match SensorRecord::from_fields(&fields) {
            Ok(r) => {
                out.records.push(r);
                out.lines.push(line);
            }
            Err(message) => out.errors.push(RowError { line, message }),
        }
    }
    Ok(out)
}

fn write_header(path: &Path) -> Result<(), StoreError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(HEADER)?;
    w.flush().map_err(|source| StoreError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn append_rows(path: &Path, rows: &[SensorRecord]) -> Result<(), StoreError> {
    let io_err = |source| StoreError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = OpenOptions::new()
        .append(true)
        .open(path)
        .map_err(io_err)?;
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.write_record(r.to_fields())?;
    }
    w.flush().map_err(io_err)?;
    w.into_inner()
        .map_err(|e| io_err(e.into_error()))?
        .sync_data()
        .map_err(io_err)
}

/// Serializes records in the native event-file format.
pub fn write_events<W: Write>(out: W, records: &[SensorRecord]) -> Result<(), StoreError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in records {
        w.write_record(r.to_fields())?;
    }
    w.flush().map_err(|source| StoreError::Io {
        path: "<output>".into(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG3C: &str = include_str!("../../../../fixtures/fig3c.csv");

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn t(s: &str) -> NaiveTime {
        NaiveTime::parse_from_str(s, "%H:%M:%S").unwrap()
    }

    #[test]
    fn ingest_extract() {
        let store = EventStore::in_memory();
        let s = store.ingest(FIG3C.as_bytes()).unwrap();
        assert_eq!(s.appended, 10);
        assert!(s.rejected.is_empty());
        let w = store.query_window(d("2017-04-08"), None);
        assert_eq!(w.len(), 10);
        assert_eq!(
            w.records.iter().filter(|r| r.sound_detected.is_none()).count(),
            2
        );
    }

    #[test]
    fn header_only_file() {
        let store = EventStore::in_memory();
        let s = store.ingest(HEADER.join(",").as_bytes()).unwrap();
        assert_eq!(s.appended, 0);
        assert!(s.rejected.is_empty());
    }

    #[test]
    fn bad_header_and_empty_input() {
        let store = EventStore::in_memory();
        assert!(matches!(
            store.ingest("id,sound\n1,Cough\n".as_bytes()),
            Err(StoreError::HeaderMismatch { .. })
        ));
        assert!(matches!(
            store.ingest("".as_bytes()),
            Err(StoreError::HeaderMismatch { .. })
        ));
    }

    #[test]
    fn malformed_rows_skipped_with_line_numbers() {
        let src = format!(
            "{}\n1,Cough,Vigorous,120,20,01:00:00,2017-04-08\n2,Cough,Vigorous,50,20,01:00:05,2017-04-08\n2,Wheeze,null,50,20,01:00:06,2017-04-08\nbogus\n",
            HEADER.join(",")
        );
        let store = EventStore::in_memory();
        let s = store.ingest(src.as_bytes()).unwrap();
        assert_eq!(s.appended, 1);
        let lines: Vec<u64> = s.rejected.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![2, 4, 5]);
        assert!(s.rejected[0].message.contains("humidity"));
        assert!(s.rejected[1].message.contains("duplicate"));
    }

    #[test]
    fn all_rows_malformed() {
        let src = format!("{}\nx,y\nz\n", HEADER.join(","));
        let s = EventStore::in_memory().ingest(src.as_bytes()).unwrap();
        assert_eq!(s.appended, 0);
        assert_eq!(s.rejected.len(), 2);
    }

    #[test]
    fn time_range_query() {
        let store = EventStore::in_memory();
        store.ingest(FIG3C.as_bytes()).unwrap();
        let w = store.query_window(d("2017-04-08"), Some((t("04:49:00"), t("04:50:30"))));
        let ids: Vec<u64> = w.records.iter().map(|r| r.id).collect();
        assert_eq!(ids, vec![31, 32, 33, 34, 35, 36]);
        assert!(store.query_window(d("2017-04-09"), None).is_empty());
    }

    #[test]
    fn unordered_ingest_is_sorted_on_query() {
        let src = format!(
            "{}\n5,null,null,50,20,03:00:00,2017-04-08\n4,null,null,50,20,01:00:00,2017-04-08\n6,null,null,50,20,02:00:00,2017-04-08\n",
            HEADER.join(",")
        );
        let store = EventStore::in_memory();
        store.ingest(src.as_bytes()).unwrap();
        let ids: Vec<u64> = store
            .query_window(d("2017-04-08"), None)
            .records
            .iter()
            .map(|r| r.id)
            .collect();
        assert_eq!(ids, vec![4, 6, 5]);
    }

    #[test]
    fn tab_delimited_legacy_export() {
        let src = FIG3C.replace(',', "\t").replace("Temperature_C", "Temperature_°C");
        let s = EventStore::in_memory().ingest(src.as_bytes()).unwrap();
        assert_eq!(s.appended, 10);
    }

    #[test]
    fn persistent_log_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.csv");
        {
            let store = EventStore::open(&path).unwrap();
            store.ingest(FIG3C.as_bytes()).unwrap();
            // re-ingesting the same rows is rejected as duplicates
            let again = store.ingest(FIG3C.as_bytes()).unwrap();
            assert_eq!(again.appended, 0);
            assert_eq!(again.rejected.len(), 10);
        }
        let reopened = EventStore::open(&path).unwrap();
        assert_eq!(reopened.len(), 10);
        let original = EventStore::in_memory();
        original.ingest(FIG3C.as_bytes()).unwrap();
        assert_eq!(
            reopened.query_window(d("2017-04-08"), None).records,
            original.query_window(d("2017-04-08"), None).records
        );
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(&HEADER.join(",")));
        assert!(text.contains("38,Wheeze,Vigorous,84.58,27,04:51:42,2017-04-08"));
    }
}
