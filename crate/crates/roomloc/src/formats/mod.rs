//! On-disk formats.
//!
//! All text formats are UTF-8 with LF line endings and comma-separated
//! fields; `#`-prefixed lines are comments and blank lines are ignored.
//! Writers emit a canonical form (fixed field order, sorted device keys,
//! shortest round-tripping float notation), so writing parsed data back is
//! byte-identical for canonically formatted files. The model format is
//! binary and versioned; its exact byte layout is documented in [`model`].

pub mod beacon_log;
pub mod matrix;
pub mod model;
pub mod report;
pub mod scenario;
pub mod snapshots;

use roomloc_core::types::{Band, ValidationError};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{origin}:{line}: {reason}")]
    MalformedLine {
        origin: String,
        line: usize,
        reason: String,
    },
    #[error("{origin}:{line}: channel {channel} is not a {band} channel")]
    BandChannelMismatch {
        origin: String,
        line: usize,
        channel: u16,
        band: Band,
    },
    #[error("position {position_id:?} appears with conflicting zones {zone_a:?} and {zone_b:?}")]
    DuplicatePosition {
        position_id: String,
        zone_a: String,
        zone_b: String,
    },
    #[error("session at {position_id:?} has no records")]
    EmptySession { position_id: String },
    #[error("snapshot at {position_id:?} has no readings")]
    EmptyReadings { position_id: String },
    #[error("{what} {value:?} cannot be written (empty, or contains a comma, newline, or leading '#')")]
    Unwritable { what: &'static str, value: String },
    #[error("unsupported format version {found} (this tool reads version {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt model file: {0}")]
    CorruptModel(String),
    #[error("{0}")]
    Invalid(#[from] ValidationError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Lines that carry data: skips comments and blanks, keeps 1-based numbers.
fn data_lines(content: &str) -> impl Iterator<Item = (usize, &str)> {
    content
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn malformed(origin: &str, line: usize, reason: impl Into<String>) -> FormatError {
    FormatError::MalformedLine {
        origin: origin.to_string(),
        line,
        reason: reason.into(),
    }
}

/// A text field must round-trip through the line format: non-empty, no
/// separators or line breaks, and no leading comment marker.
fn check_writable(what: &'static str, value: &str) -> Result<(), FormatError> {
    if value.is_empty()
        || value.contains(',')
        || value.contains('\n')
        || value.contains('\r')
        || value.starts_with('#')
    {
        return Err(FormatError::Unwritable {
            what,
            value: value.to_string(),
        });
    }
    Ok(())
}

/// Like [`check_writable`] but allows the empty string (hidden SSIDs).
fn check_writable_or_empty(what: &'static str, value: &str) -> Result<(), FormatError> {
    if value.is_empty() {
        return Ok(());
    }
    check_writable(what, value)
}

fn parse_rssi(origin: &str, line: usize, field: &str) -> Result<i8, FormatError> {
    let value: i16 = field
        .parse()
        .map_err(|_| malformed(origin, line, format!("invalid rssi {field:?}")))?;
    if value == -100 {
        return Err(malformed(
            origin,
            line,
            "-100 dBm is the reserved fill value, not a reading",
        ));
    }
    if !(-99..=0).contains(&value) {
        return Err(malformed(
            origin,
            line,
            format!("rssi {value} outside [-99, 0]"),
        ));
    }
    Ok(value as i8)
}
