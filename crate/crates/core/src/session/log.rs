use serde::{Deserialize, Serialize};

use super::{ProgressEvent, SessionConfig, SessionError};

pub const LOG_VERSION: u32 = 1;

/// First line of a session log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionHeader {
    pub version: u32,
    pub seed: u64,
    pub config: SessionConfig,
}

impl SessionHeader {
    pub fn new(config: SessionConfig) -> Self {
        Self {
            version: LOG_VERSION,
            seed: config.rng_seed,
            config,
        }
    }

    pub(super) fn check_version(&self) -> Result<(), SessionError> {
        if self.version != LOG_VERSION {
            return Err(SessionError::MalformedLog(format!("unsupported log version {}", self.version)));
        }
        if self.seed != self.config.rng_seed {
            return Err(SessionError::MalformedLog("header seed differs from config seed".into()));
        }
        Ok(())
    }
}

/// A session's JSON Lines log: the header, then one event per line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionLog {
    pub header: SessionHeader,
    pub events: Vec<ProgressEvent>,
}

impl SessionLog {
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("event serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, SessionError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines
            .next()
            .ok_or_else(|| SessionError::MalformedLog("empty log".into()))?;
        let header: SessionHeader =
            serde_json::from_str(first).map_err(|e| SessionError::MalformedLog(format!("line 1: {e}")))?;
        let events = lines
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| SessionError::MalformedLog(format!("line {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<ProgressEvent>, _>>()?;
        Ok(Self { header, events })
    }
}
