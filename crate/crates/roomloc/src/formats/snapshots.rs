//! Snapshot formats.
//!
//! System snapshots (scan-tool readings, integer dBm):
//!
//! ```text
//! # roomloc system-snapshots v1
//! position_id,zone_label,snapshot_index,bssid,rssi_dbm
//! ```
//!
//! Location snapshots (augmented or raw, real-valued dBm), the same layout
//! extended with provenance columns that are empty for raw snapshots:
//!
//! ```text
//! # roomloc snapshots v1
//! position_id,zone_label,snapshot_index,bssid,avg_rssi_dbm,portion_bp,rep_index,frames_used
//! ```
//!
//! Lines with equal `(position_id, snapshot_index)` form one snapshot;
//! writers number snapshots 0.. per position and list devices sorted.
//! Averaged values use the shortest decimal that parses back to the same
//! float. Device visibility (hidden SSIDs) is not carried by either format;
//! parsed snapshots have an empty hidden set.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use roomloc_core::types::{Bssid, Provenance, Snapshot, SystemSnapshot};

use super::{check_writable, data_lines, malformed, FormatError};

const SYSTEM_HEADER: &str = "# roomloc system-snapshots v1\n";
const SNAPSHOT_HEADER: &str = "# roomloc snapshots v1\n";

pub fn parse_system_str(content: &str, origin: &str) -> Result<Vec<SystemSnapshot>, FormatError> {
    let mut out: Vec<SystemSnapshot> = Vec::new();
    let mut current_key: Option<(String, u64)> = None;
    let mut seen: BTreeSet<(String, u64)> = BTreeSet::new();

    for (line_no, line) in data_lines(content) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(malformed(
                origin,
                line_no,
                format!("expected 5 fields, found {}", fields.len()),
            ));
        }
        let (position_id, zone_label, index, bssid, rssi) =
            (fields[0], fields[1], fields[2], fields[3], fields[4]);
        if position_id.is_empty() || zone_label.is_empty() {
            return Err(malformed(origin, line_no, "empty position or zone field"));
        }
        let index: u64 = index
            .parse()
            .map_err(|_| malformed(origin, line_no, format!("invalid snapshot index {index:?}")))?;
        let bssid = Bssid::parse(bssid).map_err(|e| malformed(origin, line_no, e.to_string()))?;
        let rssi = super::parse_rssi(origin, line_no, rssi)?;

        let key = (position_id.to_string(), index);
        if current_key.as_ref() != Some(&key) {
            if seen.contains(&key) {
                return Err(malformed(
                    origin,
                    line_no,
                    format!("snapshot ({position_id}, {index}) appears in two separate blocks"),
                ));
            }
            seen.insert(key.clone());
            current_key = Some(key);
            out.push(SystemSnapshot {
                position_id: position_id.to_string(),
                zone_label: zone_label.to_string(),
                readings: Default::default(),
            });
        }
        let snap = out.last_mut().unwrap();
        if snap.zone_label != zone_label {
            return Err(malformed(
                origin,
                line_no,
                format!("zone changes within snapshot ({position_id}, {index})"),
            ));
        }
        if snap.readings.insert(bssid, rssi).is_some() {
            return Err(malformed(
                origin,
                line_no,
                format!("device {bssid} listed twice in one snapshot"),
            ));
        }
    }
    Ok(out)
}

pub fn system_to_string(snaps: &[SystemSnapshot]) -> Result<String, FormatError> {
    let mut out = String::from(SYSTEM_HEADER);
    let mut index = PerPositionIndex::default();
    for snap in snaps {
        snap.validate()?;
        check_writable("position id", &snap.position_id)?;
        check_writable("zone label", &snap.zone_label)?;
        let idx = index.next(&snap.position_id);
        for (bssid, rssi) in &snap.readings {
            writeln!(
                out,
                "{},{},{},{},{}",
                snap.position_id, snap.zone_label, idx, bssid, rssi
            )
            .unwrap();
        }
    }
    Ok(out)
}

pub fn parse_snapshots_str(content: &str, origin: &str) -> Result<Vec<Snapshot>, FormatError> {
    let mut out: Vec<Snapshot> = Vec::new();
    let mut current_key: Option<(String, u64)> = None;
    let mut seen: BTreeSet<(String, u64)> = BTreeSet::new();

    for (line_no, line) in data_lines(content) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(malformed(
                origin,
                line_no,
                format!("expected 8 fields, found {}", fields.len()),
            ));
        }
        let [position_id, zone_label, index, bssid, avg, portion, rep, frames] =
            [0, 1, 2, 3, 4, 5, 6, 7].map(|i| fields[i]);
        if position_id.is_empty() || zone_label.is_empty() {
            return Err(malformed(origin, line_no, "empty position or zone field"));
        }
        let index: u64 = index
            .parse()
            .map_err(|_| malformed(origin, line_no, format!("invalid snapshot index {index:?}")))?;
        let bssid = Bssid::parse(bssid).map_err(|e| malformed(origin, line_no, e.to_string()))?;
        let avg: f64 = avg
            .parse()
            .map_err(|_| malformed(origin, line_no, format!("invalid averaged rssi {avg:?}")))?;
        if !(-99.0..=0.0).contains(&avg) {
            return Err(malformed(
                origin,
                line_no,
                format!("averaged rssi {avg} outside [-99, 0]"),
            ));
        }
        let provenance = match (portion.is_empty(), rep.is_empty(), frames.is_empty()) {
            (true, true, true) => Provenance::Raw,
            (false, false, false) => {
                let parse_u32 = |what: &str, field: &str| -> Result<u32, FormatError> {
                    field
                        .parse()
                        .map_err(|_| malformed(origin, line_no, format!("invalid {what} {field:?}")))
                };
                Provenance::Augmented {
                    portion_bp: parse_u32("portion", portion)?,
                    rep_index: parse_u32("rep index", rep)?,
                    frames_used: parse_u32("frame count", frames)?,
                }
            }
            _ => {
                return Err(malformed(
                    origin,
                    line_no,
                    "provenance columns must be all empty (raw) or all present",
                ))
            }
        };

        let key = (position_id.to_string(), index);
        if current_key.as_ref() != Some(&key) {
            if seen.contains(&key) {
                return Err(malformed(
                    origin,
                    line_no,
                    format!("snapshot ({position_id}, {index}) appears in two separate blocks"),
                ));
            }
            seen.insert(key.clone());
            current_key = Some(key);
            out.push(Snapshot {
                zone_label: zone_label.to_string(),
                position_id: position_id.to_string(),
                readings: Default::default(),
                hidden: Default::default(),
                provenance,
            });
        }
        let snap = out.last_mut().unwrap();
        if snap.zone_label != zone_label || snap.provenance != provenance {
            return Err(malformed(
                origin,
                line_no,
                format!("zone or provenance changes within snapshot ({position_id}, {index})"),
            ));
        }
        if snap.readings.insert(bssid, avg).is_some() {
            return Err(malformed(
                origin,
                line_no,
                format!("device {bssid} listed twice in one snapshot"),
            ));
        }
    }
    Ok(out)
}

pub fn snapshots_to_string(snaps: &[Snapshot]) -> Result<String, FormatError> {
    let mut out = String::from(SNAPSHOT_HEADER);
    let mut index = PerPositionIndex::default();
    for snap in snaps {
        snap.validate()?;
        check_writable("position id", &snap.position_id)?;
        check_writable("zone label", &snap.zone_label)?;
        let idx = index.next(&snap.position_id);
        let provenance = match snap.provenance {
            Provenance::Raw => ",,".to_string(),
            Provenance::Augmented {
                portion_bp,
                rep_index,
                frames_used,
            } => format!("{portion_bp},{rep_index},{frames_used}"),
        };
        for (bssid, avg) in &snap.readings {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                snap.position_id, snap.zone_label, idx, bssid, avg, provenance
            )
            .unwrap();
        }
    }
    Ok(out)
}

#[derive(Default)]
struct PerPositionIndex {
    counts: std::collections::BTreeMap<String, u64>,
}

impl PerPositionIndex {
    fn next(&mut self, position_id: &str) -> u64 {
        let counter = self.counts.entry(position_id.to_string()).or_insert(0);
        let idx = *counter;
        *counter += 1;
        idx
    }
}

pub fn read_system_file(path: &Path) -> Result<Vec<SystemSnapshot>, FormatError> {
    let content = std::fs::read_to_string(path)?;
    parse_system_str(&content, &path.display().to_string())
}

pub fn write_system_file(path: &Path, snaps: &[SystemSnapshot]) -> Result<(), FormatError> {
    std::fs::write(path, system_to_string(snaps)?)?;
    Ok(())
}

pub fn read_snapshots_file(path: &Path) -> Result<Vec<Snapshot>, FormatError> {
    let content = std::fs::read_to_string(path)?;
    parse_snapshots_str(&content, &path.display().to_string())
}

pub fn write_snapshots_file(path: &Path, snaps: &[Snapshot]) -> Result<(), FormatError> {
    std::fs::write(path, snapshots_to_string(snaps)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use roomloc_core::types::Provenance;

    #[test]
    fn system_snapshot_examples() {
        let text = concat!(
            "# roomloc system-snapshots v1\n",
            "p1,room1,0,02:00:00:00:00:01,-55\n",
            "p1,room1,1,02:00:00:00:00:01,-57\n",
            "p1,room1,1,02:00:00:00:00:02,-60\n",
        );
        let snaps = parse_system_str(text, "test").unwrap();
        assert_eq!(snaps.len(), 2);
        assert_eq!(
            snaps[0].readings[&Bssid::parse("02:00:00:00:00:01").unwrap()],
            -55
        );
        assert_eq!(snaps[1].readings.len(), 2);
    }

    #[test]
    fn system_roundtrip_byte_identical() {
        let text = concat!(
            "# roomloc system-snapshots v1\n",
            "p1,room1,0,02:00:00:00:00:01,-55\n",
            "p1,room1,1,02:00:00:00:00:01,-57\n",
            "p2,room2,0,02:00:00:00:00:02,-61\n",
        );
        let snaps = parse_system_str(text, "test").unwrap();
        assert_eq!(system_to_string(&snaps).unwrap(), text);
    }

    #[test]
    fn system_scale_450() {
        let mut text = String::from("# x\n");
        for i in 0..450 {
            text.push_str(&format!("p{},room{},{},02:00:00:00:00:01,-55\n", i % 30, i % 10, i / 30));
        }
        assert_eq!(parse_system_str(&text, "test").unwrap().len(), 450);
    }

    #[test]
    fn system_rejects_fill_and_split_blocks() {
        assert!(parse_system_str("p1,room1,0,02:00:00:00:00:01,-100\n", "t").is_err());
        let split = concat!(
            "p1,room1,0,02:00:00:00:00:01,-55\n",
            "p1,room1,1,02:00:00:00:00:01,-55\n",
            "p1,room1,0,02:00:00:00:00:02,-55\n",
        );
        assert!(matches!(
            parse_system_str(split, "t").unwrap_err(),
            FormatError::MalformedLine { line: 3, .. }
        ));
    }

    fn snapshot(avg: f64, provenance: Provenance) -> Snapshot {
        Snapshot {
            zone_label: "room1".into(),
            position_id: "p1".into(),
            readings: [(Bssid::parse("02:00:00:00:00:01").unwrap(), avg)]
                .into_iter()
                .collect(),
            hidden: Default::default(),
            provenance,
        }
    }

    #[test]
    fn snapshot_provenance_roundtrip() {
        let snaps = vec![
            snapshot(
                -55.33333333333333,
                Provenance::Augmented {
                    portion_bp: 2000,
                    rep_index: 1,
                    frames_used: 370,
                },
            ),
            snapshot(-61.0, Provenance::Raw),
        ];
        let text = snapshots_to_string(&snaps).unwrap();
        let back = parse_snapshots_str(&text, "test").unwrap();
        assert_eq!(back, snaps);
        assert!(text.contains(",2000,1,370\n"));
        assert!(text.contains(",-61,,,\n"));
    }

    #[test]
    fn snapshot_float_precision_survives() {
        let exact = -62.0 + 1.0 / 3.0;
        let snaps = vec![snapshot(exact, Provenance::Raw)];
        let text = snapshots_to_string(&snaps).unwrap();
        let back = parse_snapshots_str(&text, "test").unwrap();
        let dev = Bssid::parse("02:00:00:00:00:01").unwrap();
        assert_eq!(back[0].readings[&dev].to_bits(), exact.to_bits());
    }

    #[test]
    fn snapshot_rejects_partial_provenance() {
        let text = "p1,room1,0,02:00:00:00:00:01,-55,2000,,\n";
        assert!(matches!(
            parse_snapshots_str(text, "t").unwrap_err(),
            FormatError::MalformedLine { .. }
        ));
    }

    #[test]
    fn empty_sets_write_header_only() {
        assert_eq!(system_to_string(&[]).unwrap(), SYSTEM_HEADER);
        assert_eq!(snapshots_to_string(&[]).unwrap(), SNAPSHOT_HEADER);
        assert!(parse_snapshots_str(SNAPSHOT_HEADER, "t").unwrap().is_empty());
    }
}
