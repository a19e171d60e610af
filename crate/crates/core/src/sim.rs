//! Synthetic indoor RF scenario generator.
//!
//! Models the two phenomena the augmentation pipeline targets — signal
//! variation and temporary device loss — with the simplest physics that
//! produces them: log-distance path loss with Gaussian (log-normal)
//! shadowing, per-wall attenuation, and a detection floor below which a
//! beacon is simply not captured. Channel hopping is not simulated as such;
//! its effect (missed beacons) is folded into the floor and interval jitter.
//!
//! Generation is deterministic per scenario seed, with per-(position, AP)
//! sub-streams so sessions for different positions can be generated in
//! parallel.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::rng::{SeedMix, SplitMix64};
use crate::types::{Band, BeaconRecord, Bssid, CaptureSession, SystemSnapshot};

/// Axis-aligned rectangle, `x0 <= x1`, `y0 <= y1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }

    /// The four boundary segments as point pairs.
    pub fn edges(&self) -> [((f64, f64), (f64, f64)); 4] {
        [
            ((self.x0, self.y0), (self.x1, self.y0)),
            ((self.x1, self.y0), (self.x1, self.y1)),
            ((self.x1, self.y1), (self.x0, self.y1)),
            ((self.x0, self.y1), (self.x0, self.y0)),
        ]
    }
}

/// A room (or other labeled zone) on the floorplan.
#[derive(Debug, Clone, PartialEq)]
pub struct Room {
    pub zone_label: String,
    pub rect: Rect,
}

/// A beaconing network device.
#[derive(Debug, Clone, PartialEq)]
pub struct AccessPoint {
    pub bssid: Bssid,
    /// Network name; `None` models a hidden network.
    pub ssid: Option<String>,
    pub x: f64,
    pub y: f64,
    pub tx_power_dbm: f64,
    pub channel: u16,
    pub band: Band,
    pub beacon_interval_ms: f64,
}

/// A measurement position with its ground-truth zone.
#[derive(Debug, Clone, PartialEq)]
pub struct Position {
    pub position_id: String,
    pub zone_label: String,
    pub x: f64,
    pub y: f64,
}

/// Log-distance path-loss parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLoss {
    pub exponent: f64,
    pub reference_distance_m: f64,
    pub reference_loss_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimScenario {
    pub rooms: Vec<Room>,
    pub aps: Vec<AccessPoint>,
    pub positions: Vec<Position>,
    pub pathloss: PathLoss,
    pub shadowing_sigma_db: f64,
    pub detection_floor_dbm: f64,
    pub wall_loss_db: f64,
    pub session_duration_s: f64,
    pub seed: u64,
}

impl SimScenario {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.pathloss.exponent <= 0.0 || self.pathloss.reference_distance_m <= 0.0 {
            return Err(SimError::InvalidScenario(
                "path-loss exponent and reference distance must be positive".into(),
            ));
        }
        if self.detection_floor_dbm >= 0.0 {
            return Err(SimError::InvalidScenario(
                "detection floor must be negative".into(),
            ));
        }
        if self.wall_loss_db < 0.0 || self.shadowing_sigma_db < 0.0 {
            return Err(SimError::InvalidScenario(
                "wall loss and shadowing sigma must be non-negative".into(),
            ));
        }
        if self.session_duration_s <= 0.0 {
            return Err(SimError::InvalidScenario(
                "session duration must be positive".into(),
            ));
        }
        for ap in &self.aps {
            if ap.beacon_interval_ms <= 0.0 {
                return Err(SimError::InvalidScenario(format!(
                    "beacon interval must be positive ({})",
                    ap.bssid
                )));
            }
            if !ap.band.matches_channel(ap.channel) {
                return Err(SimError::InvalidScenario(format!(
                    "channel {} is not a {} channel ({})",
                    ap.channel, ap.band, ap.bssid
                )));
            }
        }
        for pos in &self.positions {
            let inside = self
                .rooms
                .iter()
                .filter(|room| room.rect.contains(pos.x, pos.y))
                .count();
            if inside != 1 {
                return Err(SimError::InvalidScenario(format!(
                    "position {} lies inside {} rooms, expected exactly 1",
                    pos.position_id, inside
                )));
            }
        }
        Ok(())
    }

    pub fn position(&self, position_id: &str) -> Result<&Position, SimError> {
        self.positions
            .iter()
            .find(|p| p.position_id == position_id)
            .ok_or_else(|| SimError::UnknownPosition(position_id.into()))
    }

    /// Distinct zone labels among the measurement positions, sorted.
    pub fn zones(&self) -> Vec<String> {
        let mut zones: Vec<String> = self.positions.iter().map(|p| p.zone_label.clone()).collect();
        zones.sort();
        zones.dedup();
        zones
    }
}

/// Expected (noise-free) received signal strength at a point:
/// `tx - ref_loss - 10·n·log10(max(d, d0)/d0) - wall_loss × walls crossed`.
pub fn rssi_at(scenario: &SimScenario, ap: &AccessPoint, x: f64, y: f64) -> f64 {
    let d = libm::hypot(x - ap.x, y - ap.y);
    let d0 = scenario.pathloss.reference_distance_m;
    let distance_term = 10.0
        * scenario.pathloss.exponent
        * libm::log10(if d > d0 { d } else { d0 } / d0);
    let walls = walls_crossed(scenario, (ap.x, ap.y), (x, y)) as f64;
    ap.tx_power_dbm - scenario.pathloss.reference_loss_db - distance_term
        - scenario.wall_loss_db * walls
}

/// Number of room-boundary segments the open segment `a -> b` properly
/// crosses. Touching or collinear contact does not count.
pub fn walls_crossed(scenario: &SimScenario, a: (f64, f64), b: (f64, f64)) -> usize {
    scenario
        .rooms
        .iter()
        .flat_map(|room| room.rect.edges())
        .filter(|&(c, d)| segments_cross(a, b, c, d))
        .count()
}

fn orient(p: (f64, f64), q: (f64, f64), r: (f64, f64)) -> f64 {
    (q.0 - p.0) * (r.1 - p.1) - (q.1 - p.1) * (r.0 - p.0)
}

fn segments_cross(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}

/// Integer received value for one emission, or `None` when it falls below
/// the detection floor and the frame is not captured.
fn received_dbm(expected: f64, sigma: f64, floor: f64, rng: &mut SplitMix64) -> Option<i8> {
    let noisy = expected + sigma * rng.next_gaussian();
    let quantized = libm::round(noisy).clamp(-99.0, 0.0);
    if quantized < floor {
        None
    } else {
        Some(quantized as i8)
    }
}

/// Simulates one capture session at a position: each AP beacons at its
/// interval (jittered ±10%), each emission draws shadowing noise, and
/// emissions below the detection floor are lost. Frames are ordered by
/// `(timestamp, bssid)`.
pub fn simulate_session(
    scenario: &SimScenario,
    position_id: &str,
) -> Result<CaptureSession, SimError> {
    let pos = scenario.position(position_id)?;
    let duration_us = (scenario.session_duration_s * 1e6) as u64;

    let mut records: Vec<BeaconRecord> = Vec::new();
    for (ap_index, ap) in scenario.aps.iter().enumerate() {
        let mut rng = SeedMix::new(scenario.seed)
            .text("session")
            .text(position_id)
            .word(ap_index as u64)
            .into_rng();
        let expected = rssi_at(scenario, ap, pos.x, pos.y);
        let interval_us = ap.beacon_interval_ms * 1_000.0;

        // phase offset so APs do not beacon in lockstep
        let mut t = rng.next_f64() * interval_us;
        while t <= duration_us as f64 {
            if let Some(rssi) = received_dbm(
                expected,
                scenario.shadowing_sigma_db,
                scenario.detection_floor_dbm,
                &mut rng,
            ) {
                records.push(BeaconRecord {
                    timestamp_us: t as u64,
                    bssid: ap.bssid,
                    ssid: ap.ssid.clone(),
                    channel: ap.channel,
                    band: ap.band,
                    rssi_dbm: rssi,
                });
            }
            t += interval_us * rng.uniform(0.9, 1.1);
        }
    }
    records.sort_by_key(|r| (r.timestamp_us, r.bssid));

    CaptureSession::new(
        pos.position_id.clone(),
        pos.zone_label.clone(),
        records,
        duration_us,
    )
    .map_err(|_| SimError::NoFramesCaptured(position_id.into()))
}

/// Simulates `count` scan-tool snapshots at a position: one independent
/// noisy reading per AP, dropping readings below the detection floor.
pub fn simulate_system_snapshots(
    scenario: &SimScenario,
    position_id: &str,
    count: usize,
) -> Result<Vec<SystemSnapshot>, SimError> {
    let pos = scenario.position(position_id)?;
    let expected: Vec<f64> = scenario
        .aps
        .iter()
        .map(|ap| rssi_at(scenario, ap, pos.x, pos.y))
        .collect();

    let mut rng = SeedMix::new(scenario.seed)
        .text("snapshots")
        .text(position_id)
        .into_rng();
    let mut out = Vec::with_capacity(count);
    for index in 0..count {
        let mut readings: BTreeMap<Bssid, i8> = BTreeMap::new();
        for (ap, &exp) in scenario.aps.iter().zip(&expected) {
            if let Some(rssi) = received_dbm(
                exp,
                scenario.shadowing_sigma_db,
                scenario.detection_floor_dbm,
                &mut rng,
            ) {
                readings.insert(ap.bssid, rssi);
            }
        }
        if readings.is_empty() {
            return Err(SimError::EmptyReadings {
                position_id: position_id.into(),
                snapshot_index: index,
            });
        }
        out.push(SystemSnapshot {
            position_id: pos.position_id.clone(),
            zone_label: pos.zone_label.clone(),
            readings,
        });
    }
    Ok(out)
}

/// An 8-room floorplan sized for fast experiments: two rows of four 5×4 m
/// rooms flanking a 2 m corridor, 20 APs (a couple of them hidden), and 2–3
/// measurement positions per room. Parameters are calibrated so a 60 s
/// session captures on the order of 1000–2500 frames per position.
pub fn default_hospital_like_scenario(seed: u64) -> SimScenario {
    let mut rng = SeedMix::new(seed).text("scenario").into_rng();

    let mut rooms = Vec::new();
    for i in 0..4 {
        let x0 = 5.0 * i as f64;
        rooms.push(Room {
            zone_label: format!("room{}", i + 1),
            rect: Rect {
                x0,
                y0: 0.0,
                x1: x0 + 5.0,
                y1: 4.0,
            },
        });
    }
    for i in 0..4 {
        let x0 = 5.0 * i as f64;
        rooms.push(Room {
            zone_label: format!("room{}", i + 5),
            rect: Rect {
                x0,
                y0: 6.0,
                x1: x0 + 5.0,
                y1: 10.0,
            },
        });
    }

    // No in-room APs: corridor APs grade positions along the corridor,
    // perimeter APs (outside the outer walls) across it, so nearby rooms
    // have genuinely similar signatures.
    let channels_24 = [1u16, 6, 11];
    let channels_5 = [36u16, 40, 44, 48, 149, 153];
    let mut aps = Vec::new();
    for i in 0..20usize {
        let (x, y) = if i < 10 {
            // corridor, evenly spaced
            (
                1.0 + 2.0 * i as f64 + rng.uniform(-0.3, 0.3),
                rng.uniform(4.6, 5.4),
            )
        } else if i < 15 {
            // below the bottom outer wall
            (
                2.0 + 4.0 * (i - 10) as f64 + rng.uniform(-0.5, 0.5),
                rng.uniform(-0.7, -0.3),
            )
        } else {
            // above the top outer wall
            (
                2.0 + 4.0 * (i - 15) as f64 + rng.uniform(-0.5, 0.5),
                rng.uniform(10.3, 10.7),
            )
        };
        let (channel, band) = if i % 2 == 0 {
            (channels_24[i / 2 % channels_24.len()], Band::Ghz2_4)
        } else {
            (channels_5[i / 2 % channels_5.len()], Band::Ghz5)
        };
        let hidden = i == 4 || i == 12;
        aps.push(AccessPoint {
            bssid: Bssid::from_octets([0x02, 0x5c, 0x00, 0x00, 0x00, i as u8]),
            ssid: if hidden { None } else { Some(format!("net-{i:02}")) },
            x,
            y,
            tx_power_dbm: rng.uniform(16.0, 18.0),
            channel,
            band,
            beacon_interval_ms: 100.0,
        });
    }

    let mut positions = Vec::new();
    let mut position_number = 0usize;
    for (room_index, room) in rooms.iter().enumerate() {
        let count = if room_index % 2 == 0 { 3 } else { 2 };
        // positions cluster around one spot per room, as when measuring
        // near a bed or desk; close positions make sub-zones non-trivial
        let anchor_x = (room.rect.x0 + room.rect.x1) / 2.0 + rng.uniform(-0.5, 0.5);
        let anchor_y = (room.rect.y0 + room.rect.y1) / 2.0 + rng.uniform(-0.4, 0.4);
        for _ in 0..count {
            position_number += 1;
            positions.push(Position {
                position_id: format!("p{position_number:02}"),
                zone_label: room.zone_label.clone(),
                x: (anchor_x + rng.uniform(-0.35, 0.35)).clamp(room.rect.x0 + 0.3, room.rect.x1 - 0.3),
                y: (anchor_y + rng.uniform(-0.35, 0.35)).clamp(room.rect.y0 + 0.3, room.rect.y1 - 0.3),
            });
        }
    }

    SimScenario {
        rooms,
        aps,
        positions,
        pathloss: PathLoss {
            exponent: 2.8,
            reference_distance_m: 1.0,
            reference_loss_db: 40.0,
        },
        shadowing_sigma_db: 12.0,
        detection_floor_dbm: -65.0,
        wall_loss_db: 3.0,
        session_duration_s: 60.0,
        seed,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    UnknownPosition(String),
    EmptyReadings {
        position_id: String,
        snapshot_index: usize,
    },
    NoFramesCaptured(String),
    InvalidScenario(String),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::UnknownPosition(p) => write!(f, "unknown position {p:?}"),
            SimError::EmptyReadings {
                position_id,
                snapshot_index,
            } => write!(
                f,
                "snapshot {snapshot_index} at {position_id:?} detected no devices"
            ),
            SimError::NoFramesCaptured(p) => {
                write!(f, "no beacon frames captured at {p:?}")
            }
            SimError::InvalidScenario(why) => write!(f, "invalid scenario: {why}"),
        }
    }
}

impl core::error::Error for SimError {}
