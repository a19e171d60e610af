//! The beacon-log format: the canonical serialization of stream-mode
//! captures.
//!
//! One received beacon frame per line:
//!
//! ```text
//! # roomloc beacon-log v1
//! position_id,zone_label,timestamp_us,bssid,ssid,channel,band,rssi_dbm
//! ```
//!
//! with `band` one of `2.4GHz`/`5GHz`, an empty `ssid` field for hidden
//! networks, and `rssi_dbm` in `[-99, 0]` (−100 is the reserved fill value
//! and is rejected). Records group into one capture session per
//! `position_id`, in first-appearance order; within a session timestamps
//! must be non-decreasing. A session's `duration_us` is not carried by the
//! format and is restored as its last timestamp.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use roomloc_core::types::{Band, BeaconRecord, Bssid, CaptureSession};

use super::{check_writable, check_writable_or_empty, data_lines, malformed, FormatError};

const HEADER: &str = "# roomloc beacon-log v1\n";

pub fn parse_str(content: &str, origin: &str) -> Result<Vec<CaptureSession>, FormatError> {
    struct Group {
        zone_label: String,
        records: Vec<BeaconRecord>,
    }
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Group> = BTreeMap::new();

    for (line_no, line) in data_lines(content) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(malformed(
                origin,
                line_no,
                format!("expected 8 fields, found {}", fields.len()),
            ));
        }
        let [position_id, zone_label, timestamp, bssid, ssid, channel, band, rssi] =
            [0, 1, 2, 3, 4, 5, 6, 7].map(|i| fields[i]);

        if position_id.is_empty() || zone_label.is_empty() {
            return Err(malformed(origin, line_no, "empty position or zone field"));
        }
        let timestamp_us: u64 = timestamp
            .parse()
            .map_err(|_| malformed(origin, line_no, format!("invalid timestamp {timestamp:?}")))?;
        let bssid = Bssid::parse(bssid).map_err(|e| malformed(origin, line_no, e.to_string()))?;
        let channel: u16 = channel
            .parse()
            .map_err(|_| malformed(origin, line_no, format!("invalid channel {channel:?}")))?;
        let band = Band::from_label(band)
            .ok_or_else(|| malformed(origin, line_no, format!("unknown band {band:?}")))?;
        if !band.matches_channel(channel) {
            return Err(FormatError::BandChannelMismatch {
                origin: origin.to_string(),
                line: line_no,
                channel,
                band,
            });
        }
        let rssi_dbm = super::parse_rssi(origin, line_no, rssi)?;
        let ssid = if ssid.is_empty() {
            None
        } else {
            Some(ssid.to_string())
        };
        let record = BeaconRecord {
            timestamp_us,
            bssid,
            ssid,
            channel,
            band,
            rssi_dbm,
        };

        match groups.get_mut(position_id) {
            None => {
                order.push(position_id.to_string());
                groups.insert(
                    position_id.to_string(),
                    Group {
                        zone_label: zone_label.to_string(),
                        records: vec![record],
                    },
                );
            }
            Some(group) => {
                if group.zone_label != zone_label {
                    return Err(FormatError::DuplicatePosition {
                        position_id: position_id.to_string(),
                        zone_a: group.zone_label.clone(),
                        zone_b: zone_label.to_string(),
                    });
                }
                if group.records.last().unwrap().timestamp_us > timestamp_us {
                    return Err(malformed(
                        origin,
                        line_no,
                        format!("timestamp decreases within session {position_id:?}"),
                    ));
                }
                group.records.push(record);
            }
        }
    }

    Ok(order
        .into_iter()
        .map(|position_id| {
            let group = groups.remove(&position_id).unwrap();
            let duration_us = group.records.last().unwrap().timestamp_us;
            CaptureSession {
                position_id,
                zone_label: group.zone_label,
                records: group.records,
                duration_us,
            }
        })
        .collect())
}

pub fn to_string(sessions: &[CaptureSession]) -> Result<String, FormatError> {
    let mut out = String::from(HEADER);
    for session in sessions {
        session.validate()?;
        check_writable("position id", &session.position_id)?;
        check_writable("zone label", &session.zone_label)?;
        for rec in &session.records {
            check_writable_or_empty("ssid", rec.ssid.as_deref().unwrap_or(""))?;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                session.position_id,
                session.zone_label,
                rec.timestamp_us,
                rec.bssid,
                rec.ssid.as_deref().unwrap_or(""),
                rec.channel,
                rec.band,
                rec.rssi_dbm
            )
            .unwrap();
        }
    }
    Ok(out)
}

pub fn read_file(path: &Path) -> Result<Vec<CaptureSession>, FormatError> {
    let content = std::fs::read_to_string(path)?;
    parse_str(&content, &path.display().to_string())
}

pub fn write_file(path: &Path, sessions: &[CaptureSession]) -> Result<(), FormatError> {
    std::fs::write(path, to_string(sessions)?)?;
    Ok(())
}
