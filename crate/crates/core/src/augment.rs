//! Snapshot synthesis from beacon streams.
//!
//! [`dataloc_plus`] sweeps a range of portions over a capture session: for
//! each portion and repetition the session's frames are reshuffled, the
//! first `ceil(portion * N)` frames are kept as a chunk, and one snapshot is
//! emitted holding the per-device mean signal strength over that chunk. The
//! frames dropped each time inject device loss and signal variation into the
//! produced data; low portions drop more, high portions less.
//!
//! [`online_snapshot`] is the no-drop counterpart used at prediction time:
//! the per-device mean over an entire window, equal to the portion-1.0
//! output over the same records.
//!
//! Determinism contract: each (portion, rep) iteration shuffles a fresh copy
//! of the session's original record order with a generator seeded by
//! `SeedMix::new(seed).text("portion-rep").word(portion_bp).word(rep_index)`,
//! so output is a pure function of `(session, range, seed)` and independent
//! of iteration scheduling. Per-device sums accumulate in chunk (shuffled)
//! order.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::rng::SeedMix;
use crate::types::{BeaconRecord, Bssid, CaptureSession, Provenance, Snapshot, SystemSnapshot};

/// Default online window span: several beacon intervals per device across
/// channel hops.
pub const DEFAULT_ONLINE_WINDOW_US: u64 = 10_000_000;

/// A sweep of portions with repetitions: `start, start+step, …` capped at
/// `end`, each repeated `reps` times.
///
/// Portions are carried in integer basis points (1 bp = 0.01%) so the swept
/// sequence — and with it the snapshot count — cannot drift with
/// floating-point rounding. The sequence is not forced to include `end_bp`
/// when the step does not land on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PortionRange {
    pub start_bp: u32,
    pub end_bp: u32,
    pub step_bp: u32,
    pub reps: u32,
}

impl PortionRange {
    pub fn new(start_bp: u32, end_bp: u32, step_bp: u32, reps: u32) -> Result<Self, AugmentError> {
        let range = PortionRange {
            start_bp,
            end_bp,
            step_bp,
            reps,
        };
        range.validate()?;
        Ok(range)
    }

    /// Builds from fractional notation, e.g. `(0.4, 1.0, 0.2, 5)`.
    /// Fractions are rounded to the nearest basis point.
    pub fn from_fractions(start: f64, end: f64, step: f64, reps: u32) -> Result<Self, AugmentError> {
        let to_bp = |x: f64| -> Result<u32, AugmentError> {
            if !(x.is_finite() && (0.0..=1.0).contains(&x)) {
                return Err(AugmentError::InvalidRange("portion outside (0, 1]"));
            }
            Ok(libm::round(x * 10_000.0) as u32)
        };
        PortionRange::new(to_bp(start)?, to_bp(end)?, to_bp(step)?, reps)
    }

    pub fn validate(&self) -> Result<(), AugmentError> {
        if self.start_bp == 0 || self.start_bp > self.end_bp || self.end_bp > 10_000 {
            return Err(AugmentError::InvalidRange(
                "require 0 < start <= end <= 100%",
            ));
        }
        if self.step_bp == 0 {
            return Err(AugmentError::InvalidRange("step must be positive"));
        }
        if self.reps == 0 {
            return Err(AugmentError::InvalidRange("reps must be at least 1"));
        }
        Ok(())
    }

    /// The swept portions, ascending.
    pub fn portions_bp(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.portion_count()).map(move |i| self.start_bp + i * self.step_bp)
    }

    /// `floor((end - start) / step) + 1`
    pub fn portion_count(&self) -> u32 {
        (self.end_bp - self.start_bp) / self.step_bp + 1
    }

    /// Snapshots produced per session: portions × reps.
    pub fn snapshots_per_session(&self) -> u32 {
        self.portion_count() * self.reps
    }
}

impl fmt::Display for PortionRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}, {})",
            self.start_bp as f64 / 10_000.0,
            self.end_bp as f64 / 10_000.0,
            self.step_bp as f64 / 10_000.0,
            self.reps
        )
    }
}

/// Chunk size for a portion over `n` frames: `ceil(portion * n)`, in exact
/// integer arithmetic. Always in `1..=n` for valid portions.
pub fn chunk_len(portion_bp: u32, n: usize) -> usize {
    debug_assert!((1..=10_000).contains(&portion_bp));
    (portion_bp as u64 * n as u64).div_ceil(10_000) as usize
}

/// Sweeps the portion range over a session and emits one snapshot per
/// (portion, rep): shuffle, keep the first `ceil(portion * N)` frames,
/// average rssi per device.
///
/// Output order is portions ascending, reps ascending within each portion.
pub fn dataloc_plus(
    session: &CaptureSession,
    range: &PortionRange,
    seed: u64,
) -> Result<Vec<Snapshot>, AugmentError> {
    range.validate()?;
    let n = session.records.len();
    if n == 0 {
        return Err(AugmentError::EmptySession);
    }

    let mut out = Vec::with_capacity(range.snapshots_per_session() as usize);
    let identity: Vec<u32> = (0..n as u32).collect();

    for portion_bp in range.portions_bp() {
        for rep_index in 1..=range.reps {
            let mut rng = SeedMix::new(seed)
                .text("portion-rep")
                .word(portion_bp as u64)
                .word(rep_index as u64)
                .into_rng();
            let mut order = identity.clone();
            rng.shuffle(&mut order);

            let k = chunk_len(portion_bp, n);
            let (readings, hidden) = average_chunk(
                order[..k].iter().map(|&i| &session.records[i as usize]),
            );

            out.push(Snapshot {
                zone_label: session.zone_label.clone(),
                position_id: session.position_id.clone(),
                readings,
                hidden,
                provenance: Provenance::Augmented {
                    portion_bp,
                    rep_index,
                    frames_used: k as u32,
                },
            });
        }
    }
    Ok(out)
}

/// Per-device mean over an iterator of frames, accumulated in iteration
/// order, plus the set of devices seen only without an SSID.
fn average_chunk<'a>(
    frames: impl Iterator<Item = &'a BeaconRecord>,
) -> (BTreeMap<Bssid, f64>, BTreeSet<Bssid>) {
    let mut sums: BTreeMap<Bssid, (f64, u32)> = BTreeMap::new();
    let mut visible: BTreeSet<Bssid> = BTreeSet::new();
    for rec in frames {
        let entry = sums.entry(rec.bssid).or_insert((0.0, 0));
        entry.0 += rec.rssi_dbm as f64;
        entry.1 += 1;
        if !rec.is_hidden() {
            visible.insert(rec.bssid);
        }
    }
    let readings: BTreeMap<Bssid, f64> = sums
        .into_iter()
        .map(|(dev, (sum, count))| (dev, sum / count as f64))
        .collect();
    let hidden = readings
        .keys()
        .filter(|dev| !visible.contains(dev))
        .copied()
        .collect();
    (readings, hidden)
}

/// No-drop snapshot over a window of frames: per-device mean over the whole
/// window. Zone and position are left empty; the caller labels the result if
/// it knows them.
pub fn online_snapshot(window: &[BeaconRecord]) -> Result<Snapshot, AugmentError> {
    if window.is_empty() {
        return Err(AugmentError::EmptyWindow);
    }
    let (readings, hidden) = average_chunk(window.iter());
    Ok(Snapshot {
        zone_label: String::new(),
        position_id: String::new(),
        readings,
        hidden,
        provenance: Provenance::Raw,
    })
}

/// Records with timestamps in the half-open interval
/// `(now_us - window_us, now_us]`, original order preserved.
pub fn select_window(records: &[BeaconRecord], now_us: u64, window_us: u64) -> Vec<BeaconRecord> {
    debug_assert!(window_us > 0);
    records
        .iter()
        .filter(|r| r.timestamp_us <= now_us && now_us - r.timestamp_us < window_us)
        .cloned()
        .collect()
}

/// 1:1 conversion of system-tool snapshots into the common snapshot type,
/// readings copied verbatim.
pub fn system_snapshots_to_snapshots(snaps: &[SystemSnapshot]) -> Vec<Snapshot> {
    snaps
        .iter()
        .map(|s| Snapshot {
            zone_label: s.zone_label.clone(),
            position_id: s.position_id.clone(),
            readings: s
                .readings
                .iter()
                .map(|(&dev, &rssi)| (dev, rssi as f64))
                .collect(),
            hidden: BTreeSet::new(),
            provenance: Provenance::Raw,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AugmentError {
    EmptySession,
    EmptyWindow,
    InvalidRange(&'static str),
}

impl fmt::Display for AugmentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AugmentError::EmptySession => write!(f, "capture session has no records"),
            AugmentError::EmptyWindow => write!(f, "window contains no records"),
            AugmentError::InvalidRange(why) => write!(f, "invalid portion range: {why}"),
        }
    }
}

impl core::error::Error for AugmentError {}
