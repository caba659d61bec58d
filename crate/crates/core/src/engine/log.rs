//! Per-run append-only event log with a live record and change
//! notification.
//!
//! Layout: `<runs>/<run_id>/events.jsonl` (one canonical JSON event per
//! line) and `<runs>/<run_id>/record.json` (the folded record, replaced
//! atomically after every event).

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};

use chrono::Utc;
use futures::Stream;
use tokio::sync::watch;

use super::run::{EventPayload, RunEvent, SkillRun};
use crate::canonical;

pub const EVENTS_FILE: &str = "events.jsonl";
pub const RECORD_FILE: &str = "record.json";

struct LogInner {
    events: Vec<RunEvent>,
    record: SkillRun,
    file: Option<File>,
}

pub(crate) struct RunLog {
    run_id: String,
    dir: PathBuf,
    inner: Mutex<LogInner>,
    notify: watch::Sender<u64>,
}

impl RunLog {
    /// Creates the run directory and persists the pending record.
    pub(crate) fn create(dir: PathBuf, record: SkillRun) -> io::Result<Self> {
        fs::create_dir_all(&dir)?;
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(dir.join(EVENTS_FILE))?;
        write_record(&dir, &record)?;
        Ok(RunLog {
            run_id: record.run_id.clone(),
            dir,
            inner: Mutex::new(LogInner {
                events: Vec::new(),
                record,
                file: Some(file),
            }),
            notify: watch::channel(0).0,
        })
    }

    /// Reopens a run from its event log; the record is re-derived by
    /// folding, not read back.
    pub(crate) fn load(dir: PathBuf) -> io::Result<Self> {
        let run_id = dir.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        let mut events = Vec::new();
        let path = dir.join(EVENTS_FILE);
        if path.exists() {
            for (n, line) in BufReader::new(File::open(&path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let event: RunEvent = serde_json::from_str(&line).map_err(|e| {
                    io::Error::new(io::ErrorKind::InvalidData, format!("{}:{}: {e}", path.display(), n + 1))
                })?;
                if event.seq != events.len() as u64 || event.run_id != run_id {
                    return Err(io::Error::new(
                        io::ErrorKind::InvalidData,
                        format!("{}:{}: out-of-order or foreign event", path.display(), n + 1),
                    ));
                }
                events.push(event);
            }
        }
        let record = if events.is_empty() {
            let text = fs::read_to_string(dir.join(RECORD_FILE))?;
            serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?
        } else {
            SkillRun::replay(&run_id, &events)
        };
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        let count = events.len() as u64;
        Ok(RunLog {
            run_id,
            dir,
            inner: Mutex::new(LogInner {
                events,
                record,
                file: Some(file),
            }),
            notify: watch::channel(count).0,
        })
    }

    fn lock(&self) -> MutexGuard<'_, LogInner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub(crate) fn run_id(&self) -> &str {
        &self.run_id
    }

    /// Assigns the next seq, persists, folds into the record, then wakes
    /// subscribers. Emission after `run_finished` is ignored.
    pub(crate) fn emit(&self, payload: EventPayload) -> Option<RunEvent> {
        let mut inner = self.lock();
        if inner.events.last().is_some_and(RunEvent::is_terminal) {
            return None;
        }
        let event = RunEvent {
            run_id: self.run_id.clone(),
            seq: inner.events.len() as u64,
            at: Utc::now(),
            event: payload,
        };
        let line = canonical::to_string(&event).expect("event serialization is infallible");
        if let Some(file) = inner.file.as_mut() {
            if let Err(e) = writeln!(file, "{line}").and_then(|_| file.flush()) {
                tracing::error!(run_id = %self.run_id, error = %e, "failed to append run event");
            }
        }
        inner.record.apply(&event);
        if let Err(e) = write_record(&self.dir, &inner.record) {
            tracing::error!(run_id = %self.run_id, error = %e, "failed to write run record");
        }
        inner.events.push(event.clone());
        let count = inner.events.len() as u64;
        if event.is_terminal() {
            inner.file = None;
        }
        drop(inner);
        self.notify.send_replace(count);
        Some(event)
    }

    pub(crate) fn record(&self) -> SkillRun {
        self.lock().record.clone()
    }

    /// Record and events taken under one lock.
    pub(crate) fn view(&self) -> (SkillRun, Vec<RunEvent>) {
        let inner = self.lock();
        (inner.record.clone(), inner.events.clone())
    }

    pub(crate) fn is_finished(&self) -> bool {
        self.lock().events.last().is_some_and(RunEvent::is_terminal)
    }

    /// Events with `seq >= from_seq` in order, live until `run_finished`.
    pub(crate) fn stream(self: &Arc<Self>, from_seq: u64) -> impl Stream<Item = RunEvent> + Send + 'static {
        let rx = self.notify.subscribe();
        futures::stream::unfold((self.clone(), from_seq, rx), |(log, next, mut rx)| async move {
            loop {
                rx.borrow_and_update();
                {
                    let inner = log.lock();
                    if let Some(event) = inner.events.get(next as usize) {
                        let event = event.clone();
                        drop(inner);
                        return Some((event, (log, next + 1, rx)));
                    }
                    if inner.events.last().is_some_and(RunEvent::is_terminal) {
                        return None;
                    }
                }
                if rx.changed().await.is_err() {
                    return None;
                }
            }
        })
    }
}

fn write_record(dir: &Path, record: &SkillRun) -> io::Result<()> {
    let text = canonical::to_string(record).map_err(io::Error::other)?;
    let tmp = dir.join(format!(".{RECORD_FILE}.tmp"));
    fs::write(&tmp, text)?;
    fs::rename(&tmp, dir.join(RECORD_FILE))
}
