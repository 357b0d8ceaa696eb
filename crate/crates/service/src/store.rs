//! Session records and their on-disk layout.
//!
//! Each session lives in its own directory under the data root:
//!
//! ```text
//! <root>/<sessionId>/header.json      id, error mode and log header
//! <root>/<sessionId>/events.jsonl     the session log, appended per event
//! <root>/<sessionId>/frames/NNN.json  detection record for move NNN
//! <root>/<sessionId>/report.json      written when feedback is issued
//! ```
//!
//! On startup every directory is replayed through the session engine, so a
//! restarted service continues from exactly the state it had.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use blockvision_core::assessment::{build_report, session_perceived_errors, AssessmentError, AssessmentReport, ErrorMode};
use blockvision_core::detect::FrameDetection;
use blockvision_core::session::{EventKind, ProgressEvent, Session, SessionConfig, SessionError, SessionHeader, SessionLog};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::Mutex;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Assessment(#[from] AssessmentError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Contents of `header.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RecordHeader {
    pub session_id: String,
    pub error_mode: ErrorMode,
    pub header: SessionHeader,
}

/// A session together with its frames and, once finished, its report.
#[derive(Debug)]
pub struct SessionRecord {
    pub id: String,
    pub error_mode: ErrorMode,
    pub session: Session,
    pub frames: BTreeMap<u64, FrameDetection>,
    pub report: Option<AssessmentReport>,
    dir: Option<PathBuf>,
}

impl SessionRecord {
    /// Moves completed so far.
    pub fn moves(&self) -> u64 {
        self.session.events().iter().filter(|e| e.kind == EventKind::MoveTap).count() as u64
    }

    pub fn build_report(&self, actual_errors: u32) -> Result<AssessmentReport, AssessmentError> {
        let frames: Vec<FrameDetection> = self.frames.values().cloned().collect();
        build_report(&self.session.log(), &frames, actual_errors, self.error_mode)
    }

    pub fn perceived_errors(&self) -> Result<u32, AssessmentError> {
        let frames: Vec<FrameDetection> = self.frames.values().cloned().collect();
        session_perceived_errors(&self.session.log(), &frames, self.error_mode)
    }

    pub fn append_event(&self, e: &ProgressEvent) -> Result<(), StoreError> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let path = dir.join("events.jsonl");
        let mut f = OpenOptions::new().append(true).open(&path).map_err(io_err(&path))?;
        let line = serde_json::to_string(e).expect("event serializes");
        writeln!(f, "{line}").map_err(io_err(&path))?;
        f.sync_data().map_err(io_err(&path))
    }

    /// Stores a detection; a later frame for the same move replaces it.
    pub fn put_frame(&mut self, f: FrameDetection) -> Result<(), StoreError> {
        if let Some(dir) = &self.dir {
            write_json(&dir.join("frames").join(format!("{:03}.json", f.frame_id)), &f.to_json())?;
        }
        self.frames.insert(f.frame_id, f);
        Ok(())
    }

    pub fn put_report(&mut self, r: AssessmentReport) -> Result<(), StoreError> {
        if let Some(dir) = &self.dir {
            write_json(&dir.join("report.json"), &r.to_json())?;
        }
        self.report = Some(r);
        Ok(())
    }
}

fn write_json(path: &Path, text: &str) -> Result<(), StoreError> {
    // Write then rename so a crash never leaves half a record.
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, text).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, StoreError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| StoreError::Corrupt {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

pub type SharedRecord = Arc<Mutex<SessionRecord>>;

/// All sessions, optionally backed by a data directory.
#[derive(Debug, Default)]
pub struct Store {
    root: Option<PathBuf>,
    sessions: std::sync::Mutex<HashMap<String, SharedRecord>>,
}

impl Store {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens `root`, creating it if needed, and replays every stored session.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        let mut sessions = HashMap::new();
        let mut entries: Vec<PathBuf> = fs::read_dir(&root)
            .map_err(io_err(&root))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join("header.json").is_file())
            .collect();
        entries.sort();
        for dir in entries {
            let rec = recover(&dir)?;
            sessions.insert(rec.id.clone(), Arc::new(Mutex::new(rec)));
        }
        log::info!("recovered {} sessions from {}", sessions.len(), root.display());
        Ok(Self {
            root: Some(root),
            sessions: std::sync::Mutex::new(sessions),
        })
    }

    pub fn create(&self, config: SessionConfig, error_mode: ErrorMode) -> Result<SharedRecord, StoreError> {
        let session = Session::new(config)?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let dir = match &self.root {
            Some(root) => {
                let dir = root.join(&id);
                let frames = dir.join("frames");
                fs::create_dir_all(&frames).map_err(io_err(&frames))?;
                let header = RecordHeader {
                    session_id: id.clone(),
                    error_mode,
                    header: session.header(),
                };
                write_json(&dir.join("header.json"), &serde_json::to_string_pretty(&header).expect("header serializes"))?;
                write_json(&dir.join("events.jsonl"), &session.log().to_jsonl())?;
                Some(dir)
            }
            None => None,
        };
        let rec = Arc::new(Mutex::new(SessionRecord {
            id: id.clone(),
            error_mode,
            session,
            frames: BTreeMap::new(),
            report: None,
            dir,
        }));
        self.sessions.lock().expect("store lock").insert(id, rec.clone());
        Ok(rec)
    }

    pub fn get(&self, id: &str) -> Option<SharedRecord> {
        self.sessions.lock().expect("store lock").get(id).cloned()
    }

    pub fn ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.lock().expect("store lock").keys().cloned().collect();
        ids.sort();
        ids
    }
}

fn recover(dir: &Path) -> Result<SessionRecord, StoreError> {
    let head: RecordHeader = read_json(&dir.join("header.json"))?;
    let events_path = dir.join("events.jsonl");
    let text = fs::read_to_string(&events_path).map_err(io_err(&events_path))?;
    // A crash mid-append can leave a partial last line; it never reached a client.
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    if complete.len() < text.len() {
        log::warn!("{}: dropping a partial last line", events_path.display());
        fs::write(&events_path, complete).map_err(io_err(&events_path))?;
    }
    let log = SessionLog::from_jsonl(complete)?;
    if log.header != head.header {
        return Err(StoreError::Corrupt {
            path: events_path,
            reason: "log header differs from header.json".into(),
        });
    }
    let session = Session::replay(&log)?;
    let mut frames = BTreeMap::new();
    let frames_dir = dir.join("frames");
    if frames_dir.is_dir() {
        for entry in fs::read_dir(&frames_dir).map_err(io_err(&frames_dir))? {
            let path = entry.map_err(io_err(&frames_dir))?.path();
            if path.extension().is_some_and(|e| e == "json") {
                let f: FrameDetection = read_json(&path)?;
                frames.insert(f.frame_id, f);
            }
        }
    }
    let report_path = dir.join("report.json");
    let report = if report_path.is_file() { Some(read_json(&report_path)?) } else { None };
    Ok(SessionRecord {
        id: head.session_id,
        error_mode: head.error_mode,
        session,
        frames,
        report,
        dir: Some(dir.to_path_buf()),
    })
}
