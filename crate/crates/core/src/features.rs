//! Feature-matrix construction over a fixed device universe.
//!
//! Columns are devices, rows are snapshots; devices a snapshot did not hear
//! get the reserved fill value −100 dBm. Devices only ever seen hidden (no
//! SSID) are excluded when the universe is inferred, but raw snapshots keep
//! them so nothing is lost upstream.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::rng::SeedMix;
use crate::types::{Bssid, CaptureSession, Snapshot, FILL_DBM};

/// Snapshots laid out as rows over an ordered device universe.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    /// Column devices, duplicate-free and sorted.
    pub device_universe: Vec<Bssid>,
    /// One vector per snapshot, aligned with `device_universe`.
    pub rows: Vec<Vec<f64>>,
    /// Class label per row.
    pub labels: Vec<String>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.device_universe.len()
    }

    /// Distinct labels, sorted.
    pub fn classes(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.labels.iter().collect();
        set.into_iter().cloned().collect()
    }

    /// Columns carrying at least one real (non-fill) reading.
    pub fn observed_universe(&self) -> Vec<Bssid> {
        self.device_universe
            .iter()
            .enumerate()
            .filter(|&(j, _)| self.rows.iter().any(|row| row[j] != FILL_DBM))
            .map(|(_, &dev)| dev)
            .collect()
    }

    /// Re-projects every row onto `universe`; devices outside the current
    /// universe read as fill.
    pub fn project(&self, universe: &[Bssid]) -> FeatureMatrix {
        let cols: Vec<Option<usize>> = universe
            .iter()
            .map(|dev| self.device_universe.binary_search(dev).ok())
            .collect();
        let rows = self
            .rows
            .iter()
            .map(|row| cols.iter().map(|c| c.map_or(FILL_DBM, |j| row[j])).collect())
            .collect();
        FeatureMatrix {
            device_universe: universe.to_vec(),
            rows,
            labels: self.labels.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.rows.is_empty() {
            return Err(FeatureError::EmptyInput);
        }
        if self.device_universe.is_empty() {
            return Err(FeatureError::EmptyUniverse);
        }
        if self.device_universe.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FeatureError::UnsortedUniverse);
        }
        if self.rows.len() != self.labels.len() {
            return Err(FeatureError::RowLabelMismatch);
        }
        if self.labels.iter().any(|l| l.is_empty()) {
            return Err(FeatureError::EmptyLabel);
        }
        for row in &self.rows {
            if row.len() != self.device_universe.len() {
                return Err(FeatureError::RowLabelMismatch);
            }
            for &v in row {
                if v != FILL_DBM && !(-99.0..=0.0).contains(&v) {
                    return Err(FeatureError::ValueOutOfRange(v));
                }
            }
        }
        Ok(())
    }
}

/// Builds the matrix. With `universe = None` the columns are the sorted
/// union of devices across snapshots, minus devices that are hidden in
/// every snapshot mentioning them. With a supplied universe, snapshots are
/// projected onto it and unknown devices are ignored.
pub fn build_feature_matrix(
    snapshots: &[Snapshot],
    universe: Option<&[Bssid]>,
) -> Result<FeatureMatrix, FeatureError> {
    if snapshots.is_empty() {
        return Err(FeatureError::EmptyInput);
    }
    let universe: Vec<Bssid> = match universe {
        Some(u) => {
            if u.is_empty() {
                return Err(FeatureError::EmptyUniverse);
            }
            let mut u = u.to_vec();
            u.sort_unstable();
            u.dedup();
            u
        }
        None => infer_universe(snapshots),
    };
    if universe.is_empty() {
        return Err(FeatureError::EmptyUniverse);
    }

    let mut rows = Vec::with_capacity(snapshots.len());
    let mut labels = Vec::with_capacity(snapshots.len());
    for snap in snapshots {
        if snap.zone_label.is_empty() {
            return Err(FeatureError::EmptyLabel);
        }
        let row: Vec<f64> = universe
            .iter()
            .map(|dev| snap.readings.get(dev).copied().unwrap_or(FILL_DBM))
            .collect();
        rows.push(row);
        labels.push(snap.zone_label.clone());
    }
    Ok(FeatureMatrix {
        device_universe: universe,
        rows,
        labels,
    })
}

/// Sorted union of devices across snapshots, excluding devices seen only
/// hidden.
pub fn infer_universe(snapshots: &[Snapshot]) -> Vec<Bssid> {
    let mut seen: BTreeSet<Bssid> = BTreeSet::new();
    let mut visible: BTreeSet<Bssid> = BTreeSet::new();
    for snap in snapshots {
        for dev in snap.readings.keys() {
            seen.insert(*dev);
            if !snap.hidden.contains(dev) {
                visible.insert(*dev);
            }
        }
    }
    seen.into_iter().filter(|d| visible.contains(d)).collect()
}

/// Sorted union of non-hidden devices across capture sessions. Lets
/// file-based pipelines recover the hidden-device exclusion that in-memory
/// snapshots carry with them.
pub fn visible_universe_of_sessions(sessions: &[CaptureSession]) -> Vec<Bssid> {
    let mut seen: BTreeSet<Bssid> = BTreeSet::new();
    let mut hidden: BTreeSet<Bssid> = BTreeSet::new();
    for session in sessions {
        for dev in session.devices() {
            seen.insert(dev);
        }
        for dev in session.hidden_devices() {
            hidden.insert(dev);
        }
    }
    // hidden in one session but named in another counts as visible
    let mut visible: BTreeSet<Bssid> = BTreeSet::new();
    for session in sessions {
        for rec in &session.records {
            if !rec.is_hidden() {
                visible.insert(rec.bssid);
            }
        }
    }
    seen.into_iter().filter(|d| visible.contains(d)).collect()
}

/// Deterministic per-class proportional split.
///
/// Each class contributes `clamp(floor(n_c * test_fraction), 1, n_c - 1)`
/// test rows, chosen by a shuffle seeded from `(seed, label)`; both halves
/// keep original row order and share the full device universe.
pub fn split_stratified(
    matrix: &FeatureMatrix,
    test_fraction: f64,
    seed: u64,
) -> Result<(FeatureMatrix, FeatureMatrix), FeatureError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(FeatureError::InvalidFraction(test_fraction));
    }
    matrix.validate()?;

    let mut test_rows: BTreeSet<usize> = BTreeSet::new();
    for class in matrix.classes() {
        let class_rows: Vec<usize> = matrix
            .labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == class)
            .map(|(i, _)| i)
            .collect();
        let n = class_rows.len();
        if n < 2 {
            return Err(FeatureError::ClassTooSmall(class));
        }
        let take = (libm::floor(n as f64 * test_fraction) as usize).clamp(1, n - 1);
        let mut rng = SeedMix::new(seed).text("split").text(&class).into_rng();
        let picks = rng.sample_indices(n, take);
        test_rows.extend(picks.into_iter().map(|i| class_rows[i]));
    }

    let select = |keep: &dyn Fn(usize) -> bool| -> FeatureMatrix {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..matrix.n_rows() {
            if keep(i) {
                rows.push(matrix.rows[i].clone());
                labels.push(matrix.labels[i].clone());
            }
        }
        FeatureMatrix {
            device_universe: matrix.device_universe.clone(),
            rows,
            labels,
        }
    };
    let test = select(&|i| test_rows.contains(&i));
    let train = select(&|i| !test_rows.contains(&i));
    Ok((train, test))
}

/// Rewrites each element's label to `zone/position`, promoting every fixed
/// position to its own class. Already-subdivided labels are left unchanged,
/// so the operation is idempotent.
pub fn subdivide_sessions(sessions: &[CaptureSession]) -> Result<Vec<CaptureSession>, FeatureError> {
    sessions
        .iter()
        .map(|s| {
            let zone_label = subzone_label(&s.zone_label, &s.position_id)?;
            Ok(CaptureSession {
                zone_label,
                ..s.clone()
            })
        })
        .collect()
}

/// Snapshot flavor of [`subdivide_sessions`].
pub fn subdivide_snapshots(snapshots: &[Snapshot]) -> Result<Vec<Snapshot>, FeatureError> {
    snapshots
        .iter()
        .map(|s| {
            let zone_label = subzone_label(&s.zone_label, &s.position_id)?;
            Ok(Snapshot {
                zone_label,
                ..s.clone()
            })
        })
        .collect()
}

fn subzone_label(zone: &str, position: &str) -> Result<String, FeatureError> {
    if position.is_empty() {
        return Err(FeatureError::MissingPosition);
    }
    let mut label = String::with_capacity(zone.len() + position.len() + 1);
    if zone.ends_with(position) && zone[..zone.len() - position.len()].ends_with('/') {
        label.push_str(zone);
    } else {
        label.push_str(zone);
        label.push('/');
        label.push_str(position);
    }
    Ok(label)
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureError {
    EmptyInput,
    EmptyUniverse,
    EmptyLabel,
    UnsortedUniverse,
    RowLabelMismatch,
    ValueOutOfRange(f64),
    InvalidFraction(f64),
    ClassTooSmall(String),
    MissingPosition,
}

impl fmt::Display for FeatureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureError::EmptyInput => write!(f, "no snapshots to build a matrix from"),
            FeatureError::EmptyUniverse => write!(f, "device universe has zero columns"),
            FeatureError::EmptyLabel => write!(f, "snapshot has an empty class label"),
            FeatureError::UnsortedUniverse => write!(f, "device universe is not sorted"),
            FeatureError::RowLabelMismatch => write!(f, "row/label shapes are inconsistent"),
            FeatureError::ValueOutOfRange(v) => {
                write!(f, "feature value {v} is neither fill nor in [-99, 0]")
            }
            FeatureError::InvalidFraction(x) => {
                write!(f, "test fraction {x} outside (0, 1)")
            }
            FeatureError::ClassTooSmall(label) => {
                write!(f, "class {label:?} has fewer than 2 rows")
            }
            FeatureError::MissingPosition => write!(f, "element has no position id"),
        }
    }
}

impl core::error::Error for FeatureError {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Provenance, Snapshot};
    use alloc::format;
    use alloc::string::ToString;
    use alloc::vec;

    fn bssid(n: u8) -> Bssid {
        Bssid::from_octets([2, 0, 0, 0, 0, n])
    }

    fn snap(zone: &str, pos: &str, readings: &[(u8, f64)]) -> Snapshot {
        Snapshot {
            zone_label: zone.into(),
            position_id: pos.into(),
            readings: readings.iter().map(|&(d, v)| (bssid(d), v)).collect(),
            hidden: BTreeSet::new(),
            provenance: Provenance::Raw,
        }
    }

    #[test]
    fn builds_union_universe_with_fill() {
        let snaps = vec![
            snap("room1", "p1", &[(1, -50.0)]),
            snap("room2", "p2", &[(2, -60.0), (3, -70.0)]),
        ];
        let m = build_feature_matrix(&snaps, None).unwrap();
        assert_eq!(m.device_universe, vec![bssid(1), bssid(2), bssid(3)]);
        assert_eq!(m.rows[0], vec![-50.0, -100.0, -100.0]);
        assert_eq!(m.rows[1], vec![-100.0, -60.0, -70.0]);
        assert_eq!(m.labels, vec!["room1", "room2"]);
        m.validate().unwrap();
    }

    #[test]
    fn supplied_universe_projects_and_ignores_unknowns() {
        let snaps = vec![snap("room1", "p1", &[(1, -50.0), (4, -40.0)])];
        let m = build_feature_matrix(&snaps, Some(&[bssid(1), bssid(2)])).unwrap();
        assert_eq!(m.rows[0], vec![-50.0, -100.0]);
    }

    #[test]
    fn hidden_devices_excluded_from_inferred_universe() {
        let mut a = snap("room1", "p1", &[(1, -50.0), (2, -55.0)]);
        a.hidden.insert(bssid(2));
        // device 2 is visible in another snapshot, device 5 never is
        let mut b = snap("room1", "p2", &[(2, -56.0), (5, -60.0)]);
        b.hidden.insert(bssid(5));
        let m = build_feature_matrix(&[a, b], None).unwrap();
        assert_eq!(m.device_universe, vec![bssid(1), bssid(2)]);
    }

    #[test]
    fn stream_scale_universe() {
        // 280 devices detected across snapshots -> 280 columns
        let snaps: Vec<Snapshot> = (0..70usize)
            .map(|i| Snapshot {
                zone_label: format!("room{}", i % 5),
                position_id: format!("p{i}"),
                readings: (0..4)
                    .map(|j| {
                        let id = i * 4 + j;
                        (
                            Bssid::from_octets([2, 0, 0, 0, (id / 250) as u8, (id % 250) as u8]),
                            -50.0 - j as f64,
                        )
                    })
                    .collect(),
                hidden: BTreeSet::new(),
                provenance: Provenance::Raw,
            })
            .collect();
        let m = build_feature_matrix(&snaps, None).unwrap();
        assert_eq!(m.n_features(), 280);
    }

    #[test]
    fn rejects_empty_inputs() {
        assert_eq!(build_feature_matrix(&[], None), Err(FeatureError::EmptyInput));
        let snaps = vec![snap("room1", "p1", &[(1, -50.0)])];
        assert_eq!(
            build_feature_matrix(&snaps, Some(&[])),
            Err(FeatureError::EmptyUniverse)
        );
    }

    fn matrix_of(rows_per_class: usize, classes: usize) -> FeatureMatrix {
        let snaps: Vec<Snapshot> = (0..classes)
            .flat_map(|c| {
                (0..rows_per_class).map(move |r| {
                    snap(
                        &format!("room{c}"),
                        &format!("p{c}-{r}"),
                        &[(c as u8, -50.0 - r as f64)],
                    )
                })
            })
            .collect();
        build_feature_matrix(&snaps, None).unwrap()
    }

    #[test]
    fn stratified_split_counts() {
        // 10 rows x 3 classes at 0.25 -> 24 train, 6 test, 2 per class
        let m = matrix_of(10, 3);
        let (train, test) = split_stratified(&m, 0.25, 7).unwrap();
        assert_eq!(train.n_rows(), 24);
        assert_eq!(test.n_rows(), 6);
        for class in m.classes() {
            let count = test.labels.iter().filter(|l| **l == class).count();
            assert_eq!(count, 2, "class {class}");
        }
        assert_eq!(train.device_universe, m.device_universe);
        assert_eq!(test.device_universe, m.device_universe);
    }

    #[test]
    fn stratified_split_floor_protection() {
        // fraction small enough that floor would give 0 -> still 1 test row
        let m = matrix_of(3, 2);
        let (train, test) = split_stratified(&m, 0.05, 1).unwrap();
        assert_eq!(test.n_rows(), 2);
        assert_eq!(train.n_rows(), 4);
    }

    #[test]
    fn stratified_split_deterministic_and_disjoint() {
        let m = matrix_of(8, 4);
        let (tr1, te1) = split_stratified(&m, 0.25, 42).unwrap();
        let (tr2, te2) = split_stratified(&m, 0.25, 42).unwrap();
        assert_eq!(tr1, tr2);
        assert_eq!(te1, te2);
        assert_eq!(tr1.n_rows() + te1.n_rows(), m.n_rows());

        // disjointness: row multisets recombine to the original
        let mut all: Vec<(Vec<u64>, String)> = tr1
            .rows
            .iter()
            .zip(&tr1.labels)
            .chain(te1.rows.iter().zip(&te1.labels))
            .map(|(r, l)| (r.iter().map(|v| v.to_bits()).collect(), l.clone()))
            .collect();
        all.sort();
        let mut orig: Vec<(Vec<u64>, String)> = m
            .rows
            .iter()
            .zip(&m.labels)
            .map(|(r, l)| (r.iter().map(|v| v.to_bits()).collect(), l.clone()))
            .collect();
        orig.sort();
        assert_eq!(all, orig);
    }

    #[test]
    fn stratified_split_rejects_small_class() {
        let snaps = vec![
            snap("room1", "p1", &[(1, -50.0)]),
            snap("room2", "p2", &[(1, -51.0)]),
            snap("room2", "p3", &[(1, -52.0)]),
        ];
        let m = build_feature_matrix(&snaps, None).unwrap();
        assert_eq!(
            split_stratified(&m, 0.25, 0),
            Err(FeatureError::ClassTooSmall("room1".to_string()))
        );
    }

    #[test]
    fn subdivision_scales_class_count() {
        // 35 zones x 3 positions -> 105 sub-zone classes
        let snaps: Vec<Snapshot> = (0..35)
            .flat_map(|z| {
                (0..3).map(move |p| {
                    snap(&format!("room{z}"), &format!("p{z}-{p}"), &[(1, -50.0)])
                })
            })
            .collect();
        let sub = subdivide_snapshots(&snaps).unwrap();
        let labels: BTreeSet<&String> = sub.iter().map(|s| &s.zone_label).collect();
        assert_eq!(labels.len(), 105);
        assert_eq!(sub[0].zone_label, "room0/p0-0");
    }

    #[test]
    fn subdivision_single_position_zone() {
        let snaps = vec![snap("hall", "h1", &[(1, -50.0)])];
        let sub = subdivide_snapshots(&snaps).unwrap();
        assert_eq!(sub[0].zone_label, "hall/h1");
        let labels: BTreeSet<&String> = sub.iter().map(|s| &s.zone_label).collect();
        assert_eq!(labels.len(), 1);
    }

    #[test]
    fn subdivision_is_idempotent() {
        let snaps: Vec<Snapshot> = (0..12)
            .map(|i| snap(&format!("room{}", i % 4), &format!("p{i}"), &[(1, -50.0)]))
            .collect();
        let once = subdivide_snapshots(&snaps).unwrap();
        let twice = subdivide_snapshots(&once).unwrap();
        assert_eq!(once, twice);

        let sessions: Vec<CaptureSession> = (0..6)
            .map(|i| {
                CaptureSession::new(
                    format!("p{i}"),
                    format!("room{}", i % 2),
                    vec![crate::types::BeaconRecord::new(
                        0,
                        bssid(1),
                        Some("net".into()),
                        6,
                        crate::types::Band::Ghz2_4,
                        -50,
                    )
                    .unwrap()],
                    10,
                )
                .unwrap()
            })
            .collect();
        let once = subdivide_sessions(&sessions).unwrap();
        let twice = subdivide_sessions(&once).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn subdivision_requires_position() {
        let s = snap("room1", "", &[(1, -50.0)]);
        assert_eq!(
            subdivide_snapshots(&[s]),
            Err(FeatureError::MissingPosition)
        );
    }

    #[test]
    fn observed_universe_and_projection() {
        let snaps = vec![
            snap("room1", "p1", &[(1, -50.0), (3, -60.0)]),
            snap("room2", "p2", &[(1, -52.0)]),
        ];
        let m = build_feature_matrix(&snaps, Some(&[bssid(1), bssid(2), bssid(3)])).unwrap();
        assert_eq!(m.observed_universe(), vec![bssid(1), bssid(3)]);
        let p = m.project(&[bssid(1), bssid(3)]);
        assert_eq!(p.rows[0], vec![-50.0, -60.0]);
        assert_eq!(p.rows[1], vec![-52.0, -100.0]);
        assert_eq!(p.labels, m.labels);
    }

    #[test]
    fn no_fill_for_reported_devices() {
        let snaps = vec![
            snap("room1", "p1", &[(1, -50.0), (2, -61.5)]),
            snap("room1", "p2", &[(2, -62.0)]),
        ];
        let m = build_feature_matrix(&snaps, None).unwrap();
        for (i, s) in snaps.iter().enumerate() {
            for (j, dev) in m.device_universe.iter().enumerate() {
                if let Some(&v) = s.readings.get(dev) {
                    assert_eq!(m.rows[i][j], v);
                }
            }
        }
    }
}
