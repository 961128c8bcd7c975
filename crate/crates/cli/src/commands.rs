use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use chrono::{NaiveDate, NaiveTime};
use cfmon_core::engine::{load_rules, InferenceConfig, ReportDocument};
use cfmon_core::events::{load_events, parse_date, EventStore, EventWindow};
use cfmon_core::monitor::{simulate_to_writer, Bucketing, DailySummary, ScenarioConfig};
use cfmon_core::{KnowledgeBase, MappingThresholds, PatientProfile};

use crate::{Command, InferArgs, KbAction};

pub fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Kb {
            action: KbAction::Validate { path },
        } => kb_validate(&path),
        Command::Ingest { events, store } => ingest(&events, &store),
        Command::Simulate { config, out, seed } => simulate(&config, &out, seed),
        Command::Infer(args) => infer(&args),
        Command::Summarize {
            events,
            date,
            out,
            buckets,
        } => summarize(&events, &date, &out, &buckets),
        Command::Report { input, out } => report(&input, out.as_deref()),
    }
}

/// `kb/default` resolves to `kb/default.toml` when the bare path is absent.
fn resolve_config(path: &Path) -> PathBuf {
    if !path.exists() && path.extension().is_none() {
        let with_ext = path.with_extension("toml");
        if with_ext.exists() {
            return with_ext;
        }
    }
    path.to_path_buf()
}

fn kb_validate(path: &Path) -> Result<ExitCode> {
    let path = resolve_config(path);
    match KnowledgeBase::load(&path) {
        Ok(kb) => {
            println!(
                "{}: ok (version {}, {} conditions, {} atoms, universe of {})",
                path.display(),
                kb.version(),
                kb.conditions().len(),
                kb.atoms().count(),
                kb.universe().len()
            );
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            eprintln!("{}: invalid: {e}", path.display());
            Ok(ExitCode::from(1))
        }
    }
}

fn ingest(events: &Path, store: &Path) -> Result<ExitCode> {
    let log = EventStore::open(store)
        .with_context(|| format!("opening event log {}", store.display()))?;
    let summary = log.ingest_path(events)?;
    println!(
        "appended {} records to {} ({} rejected)",
        summary.appended,
        store.display(),
        summary.rejected.len()
    );
    for e in &summary.rejected {
        eprintln!("line {}: {}", e.line, e.message);
    }
    Ok(if summary.rejected.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn simulate(config: &Path, out: &Path, seed: Option<u64>) -> Result<ExitCode> {
    let mut cfg = ScenarioConfig::load(resolve_config(config))?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let file = fs::File::create(out).with_context(|| format!("creating {}", out.display()))?;
    let n = simulate_to_writer(&cfg, file)?;
    println!("wrote {n} records to {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn parse_time(s: &str) -> Result<NaiveTime> {
    NaiveTime::parse_from_str(s, "%H:%M:%S").with_context(|| format!("bad time `{s}` (HH:MM:SS)"))
}

fn parse_day(s: &str) -> Result<NaiveDate> {
    parse_date(s).map_err(anyhow::Error::msg)
}

fn load_store(events: &Path) -> Result<EventStore> {
    let (store, summary) =
        load_events(events).with_context(|| format!("reading events {}", events.display()))?;
    for e in &summary.rejected {
        log::warn!("{}:{}: {}", events.display(), e.line, e.message);
    }
    Ok(store)
}

fn inference_config(args: &InferArgs) -> Result<InferenceConfig> {
    let thresholds = match &args.thresholds {
        Some(p) => MappingThresholds::load(resolve_config(p))?,
        None => MappingThresholds::default(),
    };
    let profile = match &args.profile {
        Some(p) => PatientProfile::load(resolve_config(p))?,
        None => PatientProfile::default(),
    };
    let rules = match &args.rules {
        Some(p) => load_rules(resolve_config(p))?,
        None => Vec::new(),
    };
    Ok(InferenceConfig {
        thresholds,
        profile,
        rules,
        alert_threshold: args.alert_threshold,
    })
}

fn infer(args: &InferArgs) -> Result<ExitCode> {
    let kb = match &args.kb {
        Some(p) => KnowledgeBase::load(resolve_config(p))?,
        None => KnowledgeBase::builtin(),
    };
    let config = inference_config(args)?;
    if !(0.0..=1.0).contains(&args.alert_threshold) {
        bail!("--alert-threshold must lie in [0, 1]");
    }
    let range = match (&args.from, &args.to) {
        (Some(a), Some(b)) => Some((parse_time(a)?, parse_time(b)?)),
        _ => None,
    };

    if args.all_dates {
        return infer_all_dates(&kb, &config, args, range);
    }

    let date = parse_day(args.date.as_deref().expect("clap requires --date"))?;
    let mut runs = 0usize;
    let mut last_len = None;
    loop {
        let len = fs::metadata(&args.events).map(|m| m.len()).ok();
        if last_len != Some(len) {
            last_len = Some(len);
            let store = load_store(&args.events)?;
            let window = store.query_window(date, range);
            let report = config.run(&kb, &window)?;
            let doc = report.to_document();
            print!("{}", doc.render_text());
            if let Some(out) = &args.out {
                write_file(out, &report.to_json())?;
            }
            runs += 1;
        }
        if !args.watch || args.max_runs.is_some_and(|m| runs >= m) {
            break;
        }
        thread::sleep(Duration::from_secs(args.interval_secs.max(1)));
    }
    Ok(ExitCode::SUCCESS)
}

fn infer_all_dates(
    kb: &KnowledgeBase,
    config: &InferenceConfig,
    args: &InferArgs,
    range: Option<(NaiveTime, NaiveTime)>,
) -> Result<ExitCode> {
    let store = load_store(&args.events)?;
    let dates = store.dates();
    let windows: Vec<EventWindow> = dates.iter().map(|&d| store.query_window(d, range)).collect();
    let reports = cfmon_core::engine::run_inference_batch(kb, &windows, config);
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
    }
    for (date, report) in dates.iter().zip(reports) {
        let report = report?;
        println!("== {date}");
        print!("{}", report.to_document().render_text());
        if let Some(dir) = &args.out {
            write_file(&dir.join(format!("report_{date}.json")), &report.to_json())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn summarize(events: &Path, date: &str, out: &Path, buckets: &str) -> Result<ExitCode> {
    let bucketing: Bucketing = buckets.parse().map_err(anyhow::Error::msg)?;
    let date = parse_day(date)?;
    let store = load_store(events)?;
    let window = store.query_window(date, None);
    let summary = DailySummary::compute(&window, bucketing);
    fs::create_dir_all(out)?;
    let files = [
        (format!("symptoms_{date}.csv"), summary.symptoms_csv()),
        (format!("ambient_{date}.csv"), summary.ambient_csv()),
        (format!("activity_{date}.csv"), summary.activity_csv()),
    ];
    for (name, body) in files {
        let path = out.join(name);
        write_file(&path, &body)?;
        println!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn report(input: &Path, out: Option<&Path>) -> Result<ExitCode> {
    let doc = ReportDocument::load(input)?;
    let text = doc.render_text();
    match out {
        Some(p) => write_file(p, &text)?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}
