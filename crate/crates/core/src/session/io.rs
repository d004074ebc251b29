//! `format=sessions/v1` files: raw turn logs and segmented sessions share the
//! header and differ in record shape.

use super::{LogEvent, Session};
use crate::format::{read_records, write_records, FormatError, SESSIONS_V1};

pub fn read_log(text: &str) -> Result<Vec<LogEvent>, FormatError> {
    read_records(text, SESSIONS_V1)
}

pub fn write_log(events: &[LogEvent]) -> Result<String, FormatError> {
    write_records(SESSIONS_V1, events)
}

pub fn read_sessions(text: &str) -> Result<Vec<Session>, FormatError> {
    let sessions: Vec<Session> = read_records(text, SESSIONS_V1)?;
    if let Some(i) = sessions.iter().position(|s| s.turns.is_empty()) {
        return Err(FormatError::line(i + 2, "session has no turns"));
    }
    Ok(sessions)
}

pub fn write_sessions(sessions: &[Session]) -> Result<String, FormatError> {
    write_records(SESSIONS_V1, sessions)
}
