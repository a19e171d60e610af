//! Beacon capture domain types.
//!
//! A [`BeaconRecord`] is one received broadcast beacon frame; a
//! [`CaptureSession`] is the stream of frames captured at one physical
//! position; a [`SystemSnapshot`] is one signal-strength reading per visible
//! device as reported by an OS scan tool; a [`Snapshot`] is a location
//! signature (per-device averaged signal strength) ready for feature
//! building, carrying provenance so augmented and raw data stay
//! distinguishable.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Weakest representable reading; anything below is undetectable.
pub const RSSI_MIN_DBM: i8 = -99;
/// Strongest representable reading.
pub const RSSI_MAX_DBM: i8 = 0;
/// Reserved fill value for devices absent from a snapshot. Never a valid
/// reading; rejected on ingest.
pub const FILL_DBM: f64 = -100.0;

/// WiFi frequency band of a beacon's channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Band {
    Ghz2_4,
    Ghz5,
}

impl Band {
    /// Band implied by a channel number, if the channel is recognized
    /// (1–14 on 2.4 GHz, 32–177 on 5 GHz).
    pub fn for_channel(channel: u16) -> Option<Band> {
        match channel {
            1..=14 => Some(Band::Ghz2_4),
            32..=177 => Some(Band::Ghz5),
            _ => None,
        }
    }

    pub fn matches_channel(self, channel: u16) -> bool {
        Band::for_channel(channel) == Some(self)
    }

    /// Canonical token used in file formats.
    pub fn label(self) -> &'static str {
        match self {
            Band::Ghz2_4 => "2.4GHz",
            Band::Ghz5 => "5GHz",
        }
    }

    pub fn from_label(s: &str) -> Option<Band> {
        match s {
            "2.4GHz" => Some(Band::Ghz2_4),
            "5GHz" => Some(Band::Ghz5),
            _ => None,
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Device identifier: a MAC address in canonical lower-case
/// colon-separated form (`aa:bb:cc:dd:ee:ff`).
///
/// Stored as raw octets; `Ord` on the octets coincides with lexicographic
/// order of the canonical string, so sorted device universes can sort on
/// `Bssid` directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bssid([u8; 6]);

impl Bssid {
    pub fn from_octets(octets: [u8; 6]) -> Self {
        Bssid(octets)
    }

    pub fn octets(&self) -> [u8; 6] {
        self.0
    }

    /// Parses the canonical 17-character form. Upper-case hex, missing
    /// separators, or any other shape is rejected.
    pub fn parse(s: &str) -> Result<Self, ValidationError> {
        let b = s.as_bytes();
        if b.len() != 17 {
            return Err(ValidationError::InvalidBssid(s.into()));
        }
        let mut octets = [0u8; 6];
        for (i, octet) in octets.iter_mut().enumerate() {
            let base = i * 3;
            if i > 0 && b[base - 1] != b':' {
                return Err(ValidationError::InvalidBssid(s.into()));
            }
            let hi = hex_val(b[base]);
            let lo = hex_val(b[base + 1]);
            match (hi, lo) {
                (Some(h), Some(l)) => *octet = (h << 4) | l,
                _ => return Err(ValidationError::InvalidBssid(s.into())),
            }
        }
        Ok(Bssid(octets))
    }
}

fn hex_val(c: u8) -> Option<u8> {
    match c {
        b'0'..=b'9' => Some(c - b'0'),
        b'a'..=b'f' => Some(c - b'a' + 10),
        _ => None, // upper-case is not canonical
    }
}

impl fmt::Display for Bssid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let o = &self.0;
        write!(
            f,
            "{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}",
            o[0], o[1], o[2], o[3], o[4], o[5]
        )
    }
}

/// One received broadcast beacon frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeaconRecord {
    /// Microseconds since the start of the capture session.
    pub timestamp_us: u64,
    pub bssid: Bssid,
    /// Network name; `None` for hidden networks.
    pub ssid: Option<String>,
    pub channel: u16,
    pub band: Band,
    /// Received signal strength, in `[-99, 0]` dBm.
    pub rssi_dbm: i8,
}

impl BeaconRecord {
    /// Builds a record, normalizing an empty SSID to `None` and checking
    /// the rssi range and band/channel consistency.
    pub fn new(
        timestamp_us: u64,
        bssid: Bssid,
        ssid: Option<String>,
        channel: u16,
        band: Band,
        rssi_dbm: i8,
    ) -> Result<Self, ValidationError> {
        let ssid = ssid.filter(|s| !s.is_empty());
        let rec = BeaconRecord {
            timestamp_us,
            bssid,
            ssid,
            channel,
            band,
            rssi_dbm,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.rssi_dbm < RSSI_MIN_DBM || self.rssi_dbm > RSSI_MAX_DBM {
            return Err(ValidationError::RssiOutOfRange(self.rssi_dbm as i16));
        }
        if !self.band.matches_channel(self.channel) {
            return Err(ValidationError::BandChannelMismatch {
                channel: self.channel,
                band: self.band,
            });
        }
        Ok(())
    }

    /// Hidden networks broadcast no SSID.
    pub fn is_hidden(&self) -> bool {
        self.ssid.is_none()
    }
}

/// All beacon frames captured at one physical position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaptureSession {
    /// Unique per physical position.
    pub position_id: String,
    /// Room/corridor class, e.g. `room1`.
    pub zone_label: String,
    /// Frames in capture order (timestamps non-decreasing).
    pub records: Vec<BeaconRecord>,
    pub duration_us: u64,
}

impl CaptureSession {
    pub fn new(
        position_id: String,
        zone_label: String,
        records: Vec<BeaconRecord>,
        duration_us: u64,
    ) -> Result<Self, ValidationError> {
        let session = CaptureSession {
            position_id,
            zone_label,
            records,
            duration_us,
        };
        session.validate()?;
        Ok(session)
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.records.is_empty() {
            return Err(ValidationError::EmptySession(self.position_id.clone()));
        }
        let mut prev = 0u64;
        for rec in &self.records {
            rec.validate()?;
            if rec.timestamp_us < prev {
                return Err(ValidationError::TimestampOrder(self.position_id.clone()));
            }
            if rec.timestamp_us > self.duration_us {
                return Err(ValidationError::TimestampBeyondDuration(
                    self.position_id.clone(),
                ));
            }
            prev = rec.timestamp_us;
        }
        Ok(())
    }

    /// Distinct devices observed in this session, sorted.
    pub fn devices(&self) -> Vec<Bssid> {
        let set: BTreeSet<Bssid> = self.records.iter().map(|r| r.bssid).collect();
        set.into_iter().collect()
    }

    /// Devices that never appeared with an SSID anywhere in the session.
    pub fn hidden_devices(&self) -> BTreeSet<Bssid> {
        let mut visible = BTreeSet::new();
        let mut seen = BTreeSet::new();
        for rec in &self.records {
            seen.insert(rec.bssid);
            if !rec.is_hidden() {
                visible.insert(rec.bssid);
            }
        }
        seen.difference(&visible).copied().collect()
    }
}

/// One scan-tool reading: signal strength per visible device.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemSnapshot {
    pub position_id: String,
    pub zone_label: String,
    pub readings: BTreeMap<Bssid, i8>,
}

impl SystemSnapshot {
    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.readings.is_empty() {
            return Err(ValidationError::EmptyReadings(self.position_id.clone()));
        }
        for &rssi in self.readings.values() {
            if !(RSSI_MIN_DBM..=RSSI_MAX_DBM).contains(&rssi) {
                return Err(ValidationError::RssiOutOfRange(rssi as i16));
            }
        }
        Ok(())
    }
}

/// How a [`Snapshot`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// System-tool snapshot or online no-drop snapshot.
    Raw,
    /// Synthesized from a beacon stream by the portion sweep.
    Augmented {
        /// Portion in basis points (1 bp = 0.01%).
        portion_bp: u32,
        /// 1-based repetition index within the portion.
        rep_index: u32,
        /// Chunk size the averages were computed over.
        frames_used: u32,
    },
}

/// One location signature: per-device averaged signal strength.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub zone_label: String,
    pub position_id: String,
    /// Averaged rssi per device; each value in `[-99, 0]`.
    pub readings: BTreeMap<Bssid, f64>,
    /// Devices whose contributing frames all lacked an SSID. Subset of
    /// `readings`; used when inferring feature universes. Not carried by
    /// file formats.
    pub hidden: BTreeSet<Bssid>,
    pub provenance: Provenance,
}

impl Snapshot {
    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.readings.is_empty() {
            return Err(ValidationError::EmptyReadings(self.position_id.clone()));
        }
        for &rssi in self.readings.values() {
            if !(RSSI_MIN_DBM as f64..=RSSI_MAX_DBM as f64).contains(&rssi) {
                return Err(ValidationError::AveragedRssiOutOfRange(rssi));
            }
        }
        if !self.hidden.iter().all(|d| self.readings.contains_key(d)) {
            return Err(ValidationError::HiddenNotInReadings);
        }
        Ok(())
    }
}

/// Violations of the structural invariants above.
#[derive(Debug, Clone, PartialEq)]
pub enum ValidationError {
    InvalidBssid(String),
    RssiOutOfRange(i16),
    AveragedRssiOutOfRange(f64),
    BandChannelMismatch { channel: u16, band: Band },
    EmptySession(String),
    EmptyReadings(String),
    TimestampOrder(String),
    TimestampBeyondDuration(String),
    HiddenNotInReadings,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationError::InvalidBssid(s) => {
                write!(f, "not a canonical lower-case bssid: {s:?}")
            }
            ValidationError::RssiOutOfRange(v) => {
                write!(f, "rssi {v} dBm outside [{RSSI_MIN_DBM}, {RSSI_MAX_DBM}]")
            }
            ValidationError::AveragedRssiOutOfRange(v) => {
                write!(f, "averaged rssi {v} dBm outside [-99, 0]")
            }
            ValidationError::BandChannelMismatch { channel, band } => {
                write!(f, "channel {channel} is not a {band} channel")
            }
            ValidationError::EmptySession(p) => write!(f, "session at {p:?} has no records"),
            ValidationError::EmptyReadings(p) => write!(f, "snapshot at {p:?} has no readings"),
            ValidationError::TimestampOrder(p) => {
                write!(f, "timestamps decrease within session {p:?}")
            }
            ValidationError::TimestampBeyondDuration(p) => {
                write!(f, "timestamp exceeds session duration at {p:?}")
            }
            ValidationError::HiddenNotInReadings => {
                write!(f, "hidden-device set is not a subset of the readings")
            }
        }
    }
}

impl core::error::Error for ValidationError {}
