//! Versioned line-delimited record files: a `format=<name>/v<n>` header line
//! followed by one JSON record per line.

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

pub const SESSIONS_V1: &str = "format=sessions/v1";
pub const TEMPLATES_V1: &str = "format=templates/v1";
pub const DAGS_V1: &str = "format=dags/v1";
pub const GRAPH_V1: &str = "format=graph/v1";
pub const SIMLOG_V1: &str = "format=simlog/v1";
pub const EVALSET_V1: &str = "format=evalset/v1";

/// Every format header this build reads and writes.
pub const SUPPORTED: [&str; 6] = [SESSIONS_V1, TEMPLATES_V1, DAGS_V1, GRAPH_V1, SIMLOG_V1, EVALSET_V1];

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("expected header `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

impl FormatError {
    pub fn line(line: usize, message: impl ToString) -> Self {
        Self::Line {
            line,
            message: message.to_string(),
        }
    }
}

/// Checks the header and yields `(line_number, line)` for each non-empty body
/// line. Line numbers are 1-based.
pub fn body_lines<'a>(
    text: &'a str,
    header: &str,
) -> Result<impl Iterator<Item = (usize, &'a str)> + 'a, FormatError> {
    let mut lines = text.lines();
    let found = lines.next().unwrap_or_default().trim_end();
    if found != header {
        return Err(FormatError::Header {
            expected: header.to_string(),
            found: found.to_string(),
        });
    }
    Ok(lines
        .enumerate()
        .map(|(i, line)| (i + 2, line))
        .filter(|(_, line)| !line.trim().is_empty()))
}

pub fn read_records<T: DeserializeOwned>(text: &str, header: &str) -> Result<Vec<T>, FormatError> {
    body_lines(text, header)?
        .map(|(n, line)| serde_json::from_str(line).map_err(|e| FormatError::line(n, e)))
        .collect()
}

pub fn write_records<'a, T, I>(header: &str, records: I) -> Result<String, FormatError>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    let mut out = String::from(header);
    out.push('\n');
    for record in records {
        out.push_str(&serde_json::to_string(record)?);
        out.push('\n');
    }
    Ok(out)
}
