//! Scenario files: a human-editable TOML description of a simulated floor.
//!
//! ```toml
//! seed = 7
//! session_duration_s = 60.0
//! shadowing_sigma_db = 12.0
//! detection_floor_dbm = -65.0
//! wall_loss_db = 3.0
//!
//! [pathloss]
//! exponent = 2.8
//! reference_distance_m = 1.0
//! reference_loss_db = 40.0
//!
//! [[rooms]]
//! label = "room1"
//! rect = [0.0, 0.0, 5.0, 4.0]   # x0, y0, x1, y1 in meters
//!
//! [[aps]]
//! bssid = "02:5c:00:00:00:00"
//! ssid = "net-00"               # omit for a hidden network
//! position = [1.0, 5.0]
//! tx_power_dbm = 17.0
//! channel = 1
//! band = "2.4GHz"
//! beacon_interval_ms = 100.0
//!
//! [[positions]]
//! id = "p01"
//! zone = "room1"
//! position = [2.5, 2.0]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use roomloc_core::sim::{AccessPoint, PathLoss, Position, Rect, Room, SimScenario};
use roomloc_core::types::{Band, Bssid};

use super::{malformed, FormatError};

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioFile {
    seed: u64,
    session_duration_s: f64,
    shadowing_sigma_db: f64,
    detection_floor_dbm: f64,
    wall_loss_db: f64,
    pathloss: PathLossFile,
    rooms: Vec<RoomFile>,
    aps: Vec<ApFile>,
    positions: Vec<PositionFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PathLossFile {
    exponent: f64,
    reference_distance_m: f64,
    reference_loss_db: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct RoomFile {
    label: String,
    rect: [f64; 4],
}

#[derive(Debug, Serialize, Deserialize)]
struct ApFile {
    bssid: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    ssid: Option<String>,
    position: [f64; 2],
    tx_power_dbm: f64,
    channel: u16,
    band: String,
    beacon_interval_ms: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct PositionFile {
    id: String,
    zone: String,
    position: [f64; 2],
}

pub fn parse_str(content: &str, origin: &str) -> Result<SimScenario, FormatError> {
    let file: ScenarioFile =
        toml::from_str(content).map_err(|e| malformed(origin, 0, e.to_string()))?;
    let scenario = SimScenario {
        rooms: file
            .rooms
            .into_iter()
            .map(|r| Room {
                zone_label: r.label,
                rect: Rect {
                    x0: r.rect[0],
                    y0: r.rect[1],
                    x1: r.rect[2],
                    y1: r.rect[3],
                },
            })
            .collect(),
        aps: file
            .aps
            .into_iter()
            .map(|a| {
                Ok(AccessPoint {
                    bssid: Bssid::parse(&a.bssid)
                        .map_err(|e| malformed(origin, 0, e.to_string()))?,
                    ssid: a.ssid.filter(|s| !s.is_empty()),
                    x: a.position[0],
                    y: a.position[1],
                    tx_power_dbm: a.tx_power_dbm,
                    channel: a.channel,
                    band: Band::from_label(&a.band)
                        .ok_or_else(|| malformed(origin, 0, format!("unknown band {:?}", a.band)))?,
                    beacon_interval_ms: a.beacon_interval_ms,
                })
            })
            .collect::<Result<_, FormatError>>()?,
        positions: file
            .positions
            .into_iter()
            .map(|p| Position {
                position_id: p.id,
                zone_label: p.zone,
                x: p.position[0],
                y: p.position[1],
            })
            .collect(),
        pathloss: PathLoss {
            exponent: file.pathloss.exponent,
            reference_distance_m: file.pathloss.reference_distance_m,
            reference_loss_db: file.pathloss.reference_loss_db,
        },
        shadowing_sigma_db: file.shadowing_sigma_db,
        detection_floor_dbm: file.detection_floor_dbm,
        wall_loss_db: file.wall_loss_db,
        session_duration_s: file.session_duration_s,
        seed: file.seed,
    };
    scenario
        .validate()
        .map_err(|e| malformed(origin, 0, e.to_string()))?;
    Ok(scenario)
}

pub fn to_string(scenario: &SimScenario) -> Result<String, FormatError> {
    scenario
        .validate()
        .map_err(|e| malformed("<scenario>", 0, e.to_string()))?;
    let file = ScenarioFile {
        seed: scenario.seed,
        session_duration_s: scenario.session_duration_s,
        shadowing_sigma_db: scenario.shadowing_sigma_db,
        detection_floor_dbm: scenario.detection_floor_dbm,
        wall_loss_db: scenario.wall_loss_db,
        pathloss: PathLossFile {
            exponent: scenario.pathloss.exponent,
            reference_distance_m: scenario.pathloss.reference_distance_m,
            reference_loss_db: scenario.pathloss.reference_loss_db,
        },
        rooms: scenario
            .rooms
            .iter()
            .map(|r| RoomFile {
                label: r.zone_label.clone(),
                rect: [r.rect.x0, r.rect.y0, r.rect.x1, r.rect.y1],
            })
            .collect(),
        aps: scenario
            .aps
            .iter()
            .map(|a| ApFile {
                bssid: a.bssid.to_string(),
                ssid: a.ssid.clone(),
                position: [a.x, a.y],
                tx_power_dbm: a.tx_power_dbm,
                channel: a.channel,
                band: a.band.label().to_string(),
                beacon_interval_ms: a.beacon_interval_ms,
            })
            .collect(),
        positions: scenario
            .positions
            .iter()
            .map(|p| PositionFile {
                id: p.position_id.clone(),
                zone: p.zone_label.clone(),
                position: [p.x, p.y],
            })
            .collect(),
    };
    toml::to_string_pretty(&file).map_err(|e| malformed("<scenario>", 0, e.to_string()))
}

pub fn read_file(path: &Path) -> Result<SimScenario, FormatError> {
    let content = std::fs::read_to_string(path)?;
    parse_str(&content, &path.display().to_string())
}

pub fn write_file(path: &Path, scenario: &SimScenario) -> Result<(), FormatError> {
    std::fs::write(path, to_string(scenario)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use roomloc_core::sim::default_hospital_like_scenario;

    #[test]
    fn roundtrip_default_scenario() {
        let scenario = default_hospital_like_scenario(7);
        let text = to_string(&scenario).unwrap();
        let back = parse_str(&text, "test").unwrap();
        assert_eq!(back, scenario);
    }

    #[test]
    fn hidden_aps_omit_ssid() {
        let scenario = default_hospital_like_scenario(7);
        let text = to_string(&scenario).unwrap();
        let hidden = scenario.aps.iter().filter(|a| a.ssid.is_none()).count();
        let named = scenario.aps.len() - hidden;
        assert_eq!(text.matches("\nssid = ").count(), named);
    }

    #[test]
    fn rejects_invalid_scenarios() {
        let scenario = default_hospital_like_scenario(7);
        let mut text = to_string(&scenario).unwrap();
        text = text.replace("exponent = 2.8", "exponent = -1.0");
        assert!(parse_str(&text, "test").is_err());
        assert!(parse_str("not toml [", "test").is_err());
    }
}
