//! Experiment drivers.
//!
//! [`run_grid`] sweeps forest hyper-parameters (max depth × estimator
//! count) over one stratified split and records train/test accuracy per
//! cell. [`compare_modes`] puts augmented beacon-stream data and raw
//! scan-tool snapshots through the same grid on an equal footing, tuning
//! the portion range so both sides contribute a matching number of samples.
//! [`variability_curves`] measures how the portion setting spreads a
//! device's averaged signal strength and how many devices make it into a
//! snapshot. [`subzone_experiment`] promotes positions to classes and
//! re-runs the grid across escalating augmentation settings.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::augment::{dataloc_plus, AugmentError, PortionRange};
use crate::features::{
    build_feature_matrix, split_stratified, subdivide_sessions, FeatureError, FeatureMatrix,
};
use crate::forest::{evaluate, train_forest, ForestConfig, ForestError};
use crate::parallel::Parallelism;
use crate::rng::SeedMix;
use crate::types::{Bssid, CaptureSession, Snapshot, SystemSnapshot};

/// Hyper-parameter grid: the swept axes plus everything held fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// Strictly increasing swept depths.
    pub max_depths: Vec<usize>,
    /// Strictly increasing swept estimator counts.
    pub n_estimators_list: Vec<usize>,
    /// Remaining forest settings; its `n_estimators`/`max_depth` are
    /// replaced per cell.
    pub base: ForestConfig,
    pub test_fraction: f64,
    pub split_seed: u64,
}

impl GridSpec {
    /// The usual sweep: 10..=30 step 5 on both axes.
    pub fn default_sweep(base: ForestConfig, test_fraction: f64, split_seed: u64) -> Self {
        GridSpec {
            max_depths: alloc::vec![10, 15, 20, 25, 30],
            n_estimators_list: alloc::vec![10, 15, 20, 25, 30],
            base,
            test_fraction,
            split_seed,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.max_depths.is_empty() || self.n_estimators_list.is_empty() {
            return Err(HarnessError::InvalidGrid("empty sweep axis"));
        }
        let increasing = |v: &[usize]| v.windows(2).all(|w| w[0] < w[1]);
        if !increasing(&self.max_depths) || !increasing(&self.n_estimators_list) {
            return Err(HarnessError::InvalidGrid("axes must be strictly increasing"));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.max_depths.len() * self.n_estimators_list.len()
    }
}

/// One grid cell's outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub max_depth: usize,
    pub n_estimators: usize,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

/// What the grid ran on.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetInfo {
    /// `"snapshot"`, `"augmented"`, `"subzone"`, or `"matrix"`.
    pub mode: String,
    pub portion_range: Option<PortionRange>,
    pub sample_count: usize,
    pub class_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    /// Row-major over (depth, estimators), both ascending.
    pub cells: Vec<GridCell>,
    pub dataset: DatasetInfo,
}

impl GridResult {
    /// Cell with the highest test accuracy; ties resolve to the earliest
    /// cell in sweep order (lowest depth, then lowest estimator count).
    pub fn best_cell(&self) -> &GridCell {
        let mut best = &self.cells[0];
        for cell in &self.cells[1..] {
            if cell.test_accuracy > best.test_accuracy {
                best = cell;
            }
        }
        best
    }
}

/// Splits once, then trains and scores a forest per grid cell. The feature
/// schema is narrowed to devices actually observed in the training rows,
/// and the test rows are projected onto it.
pub fn run_grid<P: Parallelism>(
    matrix: &FeatureMatrix,
    spec: &GridSpec,
    par: &P,
) -> Result<GridResult, HarnessError> {
    spec.validate()?;
    let (train, test) = split_stratified(matrix, spec.test_fraction, spec.split_seed)?;
    let universe = train.observed_universe();
    if universe.is_empty() {
        return Err(HarnessError::Feature(FeatureError::EmptyUniverse));
    }
    let train = train.project(&universe);
    let test = test.project(&universe);

    let per_row = spec.n_estimators_list.len();
    let outcomes = par.run(spec.cell_count(), &|i| {
        let max_depth = spec.max_depths[i / per_row];
        let n_estimators = spec.n_estimators_list[i % per_row];
        let config = ForestConfig {
            n_estimators,
            max_depth,
            ..spec.base
        };
        let model = train_forest(&train, &config)?;
        Ok(GridCell {
            max_depth,
            n_estimators,
            train_accuracy: evaluate(&model, &train)?,
            test_accuracy: evaluate(&model, &test)?,
        })
    });
    let cells: Vec<GridCell> = outcomes
        .into_iter()
        .collect::<Result<_, ForestError>>()?;

    Ok(GridResult {
        cells,
        dataset: DatasetInfo {
            mode: String::from("matrix"),
            portion_range: None,
            sample_count: matrix.n_rows(),
            class_count: matrix.classes().len(),
        },
    })
}

/// Runs the portion sweep over every session with a per-session sub-seed
/// derived from `(seed, position_id)`, so output does not depend on session
/// order or parallel generation.
pub fn augment_sessions(
    sessions: &[CaptureSession],
    range: &PortionRange,
    seed: u64,
) -> Result<Vec<Snapshot>, AugmentError> {
    let mut out = Vec::with_capacity(sessions.len() * range.snapshots_per_session() as usize);
    for session in sessions {
        let sub = SeedMix::new(seed)
            .text("session")
            .text(&session.position_id)
            .finish();
        out.extend(dataloc_plus(session, range, sub)?);
    }
    Ok(out)
}

/// Adjusts a portion range so the sweep over `n_sessions` sessions lands
/// within ±5% of `target` samples.
///
/// The step is retuned first (keeping the requested bounds and reps), then
/// the reps (keeping the step); the candidate closest to the target wins.
pub fn tune_range_for_target(
    base: &PortionRange,
    n_sessions: usize,
    target: usize,
) -> Result<PortionRange, HarnessError> {
    base.validate()?;
    if n_sessions == 0 || target == 0 {
        return Err(HarnessError::SampleCountUnreachable { target, closest: 0 });
    }

    let count_of = |r: &PortionRange| n_sessions * r.snapshots_per_session() as usize;
    let mut best: Option<(usize, PortionRange)> = None;
    let mut consider = |r: PortionRange| {
        if r.validate().is_err() {
            return;
        }
        let err = count_of(&r).abs_diff(target);
        if best.as_ref().is_none_or(|(e, _)| err < *e) {
            best = Some((err, r));
        }
    };

    if base.end_bp > base.start_bp {
        let span = base.end_bp - base.start_bp;
        let ideal = target as f64 / (n_sessions * base.reps as usize) as f64;
        let p_star = libm::round(ideal) as i64;
        for p in [p_star - 1, p_star, p_star + 1] {
            if p >= 2 && span as i64 >= p - 1 {
                consider(PortionRange {
                    step_bp: (span / (p as u32 - 1)).max(1),
                    ..*base
                });
            }
        }
    }
    let ideal_reps = target as f64 / (n_sessions * base.portion_count() as usize) as f64;
    let r_star = libm::round(ideal_reps) as i64;
    for reps in [r_star - 1, r_star, r_star + 1] {
        if reps >= 1 {
            consider(PortionRange {
                reps: reps as u32,
                ..*base
            });
        }
    }
    consider(*base);

    let (err, tuned) = best.expect("base range is always a candidate");
    if err * 20 <= target {
        Ok(tuned)
    } else {
        Err(HarnessError::SampleCountUnreachable {
            target,
            closest: count_of(&tuned),
        })
    }
}

/// Per-cell accuracy difference (augmented minus snapshot).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellDelta {
    pub max_depth: usize,
    pub n_estimators: usize,
    pub test_delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub snapshot: GridResult,
    pub augmented: GridResult,
    /// The range actually swept after sample-count matching.
    pub tuned_range: PortionRange,
    pub cell_deltas: Vec<CellDelta>,
    /// Best-cell test accuracy difference, augmented minus snapshot.
    pub best_test_delta: f64,
    /// Mean per-cell test accuracy difference.
    pub mean_test_delta: f64,
}

/// Grid-compares augmented stream data against scan-tool snapshots.
///
/// Both sides share the grid spec, split seed, and class set; the portion
/// range is tuned so the augmented sample count matches the snapshot count
/// within ±5%.
pub fn compare_modes<P: Parallelism>(
    stream_sessions: &[CaptureSession],
    system_snaps: &[SystemSnapshot],
    range: &PortionRange,
    spec: &GridSpec,
    seed: u64,
    par: &P,
) -> Result<CompareReport, HarnessError> {
    let stream_zones: BTreeSet<String> = stream_sessions
        .iter()
        .map(|s| s.zone_label.clone())
        .collect();
    let snap_zones: BTreeSet<String> =
        system_snaps.iter().map(|s| s.zone_label.clone()).collect();
    if stream_zones != snap_zones {
        return Err(HarnessError::LabelSetMismatch {
            streams: stream_zones.into_iter().collect(),
            snapshots: snap_zones.into_iter().collect(),
        });
    }

    let tuned = tune_range_for_target(range, stream_sessions.len(), system_snaps.len())?;
    let augmented_snaps = augment_sessions(stream_sessions, &tuned, seed)?;

    let aug_matrix = build_feature_matrix(&augmented_snaps, None)?;
    let raw = crate::augment::system_snapshots_to_snapshots(system_snaps);
    let snap_matrix = build_feature_matrix(&raw, None)?;

    let mut augmented = run_grid(&aug_matrix, spec, par)?;
    augmented.dataset.mode = String::from("augmented");
    augmented.dataset.portion_range = Some(tuned);
    let mut snapshot = run_grid(&snap_matrix, spec, par)?;
    snapshot.dataset.mode = String::from("snapshot");

    let cell_deltas: Vec<CellDelta> = augmented
        .cells
        .iter()
        .zip(&snapshot.cells)
        .map(|(a, s)| CellDelta {
            max_depth: a.max_depth,
            n_estimators: a.n_estimators,
            test_delta: a.test_accuracy - s.test_accuracy,
        })
        .collect();
    let mean_test_delta =
        cell_deltas.iter().map(|d| d.test_delta).sum::<f64>() / cell_deltas.len() as f64;
    let best_test_delta =
        augmented.best_cell().test_accuracy - snapshot.best_cell().test_accuracy;

    Ok(CompareReport {
        snapshot,
        augmented,
        tuned_range: tuned,
        cell_deltas,
        best_test_delta,
        mean_test_delta,
    })
}

/// One device's averaged reading from one augmentation draw.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceSample {
    pub bssid: Bssid,
    pub rep_index: u32,
    pub avg_rssi: f64,
}

/// Samples collected at one portion setting.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub portion_bp: u32,
    pub device_samples: Vec<DeviceSample>,
    /// Fraction of the session's distinct devices present, one entry per rep.
    pub included_fraction: Vec<f64>,
}

impl CurvePoint {
    pub fn mean_included_fraction(&self) -> f64 {
        self.included_fraction.iter().sum::<f64>() / self.included_fraction.len() as f64
    }

    /// Spread of one device's averaged reading across reps (population
    /// variance), if the device appeared in at least one draw.
    pub fn device_variance(&self, bssid: Bssid) -> Option<f64> {
        let vals: Vec<f64> = self
            .device_samples
            .iter()
            .filter(|s| s.bssid == bssid)
            .map(|s| s.avg_rssi)
            .collect();
        if vals.is_empty() {
            return None;
        }
        if vals.iter().all(|&v| v == vals[0]) {
            return Some(0.0);
        }
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        Some(vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64)
    }
}

/// Runs `reps` augmentation draws at each portion and records every
/// device's averaged reading plus the included-device fraction.
///
/// Draw `(portion, rep)` uses the same sub-seed as the corresponding sweep
/// iteration, so the curves describe exactly what [`dataloc_plus`] emits.
pub fn variability_curves(
    session: &CaptureSession,
    portions_bp: &[u32],
    reps: u32,
    seed: u64,
) -> Result<Vec<CurvePoint>, HarnessError> {
    if reps < 2 {
        return Err(HarnessError::InsufficientReps);
    }
    if portions_bp.is_empty() {
        return Err(HarnessError::InvalidGrid("no portions requested"));
    }
    let total_devices = session.devices().len();
    if total_devices == 0 {
        return Err(HarnessError::Augment(AugmentError::EmptySession));
    }

    let mut points = Vec::with_capacity(portions_bp.len());
    for &portion_bp in portions_bp {
        let range = PortionRange::new(portion_bp, portion_bp, 1, reps)
            .map_err(|_| HarnessError::InvalidPortion(portion_bp))?;
        let snaps = dataloc_plus(session, &range, seed)?;
        let mut device_samples = Vec::new();
        let mut included_fraction = Vec::with_capacity(reps as usize);
        for (rep0, snap) in snaps.iter().enumerate() {
            let rep_index = rep0 as u32 + 1;
            for (&bssid, &avg_rssi) in &snap.readings {
                device_samples.push(DeviceSample {
                    bssid,
                    rep_index,
                    avg_rssi,
                });
            }
            included_fraction.push(snap.readings.len() as f64 / total_devices as f64);
        }
        points.push(CurvePoint {
            portion_bp,
            device_samples,
            included_fraction,
        });
    }
    Ok(points)
}

/// One sub-zone grid run.
#[derive(Debug, Clone, PartialEq)]
pub struct SubzoneRun {
    pub range: PortionRange,
    pub sample_count: usize,
    pub grid: GridResult,
}

/// Promotes every position to its own class, then grid-evaluates each
/// requested augmentation setting on the enlarged problem.
pub fn subzone_experiment<P: Parallelism>(
    sessions: &[CaptureSession],
    ranges: &[PortionRange],
    spec: &GridSpec,
    seed: u64,
    par: &P,
) -> Result<Vec<SubzoneRun>, HarnessError> {
    let mut per_zone: BTreeSet<(&str, &str)> = BTreeSet::new();
    for s in sessions {
        per_zone.insert((&s.zone_label, &s.position_id));
    }
    let zones: BTreeSet<&str> = per_zone.iter().map(|(z, _)| *z).collect();
    let subdividable = zones
        .iter()
        .any(|z| per_zone.iter().filter(|(zone, _)| zone == z).count() >= 2);
    if !subdividable {
        return Err(HarnessError::NoSubdividableZone);
    }

    let sub_sessions = subdivide_sessions(sessions)?;
    let mut runs = Vec::with_capacity(ranges.len());
    for range in ranges {
        let snaps = augment_sessions(&sub_sessions, range, seed)?;
        let matrix = build_feature_matrix(&snaps, None)?;
        let mut grid = run_grid(&matrix, spec, par)?;
        grid.dataset.mode = String::from("subzone");
        grid.dataset.portion_range = Some(*range);
        runs.push(SubzoneRun {
            range: *range,
            sample_count: snaps.len(),
            grid,
        });
    }
    Ok(runs)
}

#[derive(Debug, Clone, PartialEq)]
pub enum HarnessError {
    Augment(AugmentError),
    Feature(FeatureError),
    Forest(ForestError),
    LabelSetMismatch {
        streams: Vec<String>,
        snapshots: Vec<String>,
    },
    SampleCountUnreachable {
        target: usize,
        closest: usize,
    },
    InvalidGrid(&'static str),
    InvalidPortion(u32),
    InsufficientReps,
    NoSubdividableZone,
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Augment(e) => write!(f, "{e}"),
            HarnessError::Feature(e) => write!(f, "{e}"),
            HarnessError::Forest(e) => write!(f, "{e}"),
            HarnessError::LabelSetMismatch { streams, snapshots } => write!(
                f,
                "zone labels differ between modes: stream {streams:?} vs snapshot {snapshots:?}"
            ),
            HarnessError::SampleCountUnreachable { target, closest } => write!(
                f,
                "no tuning reaches {target} samples within 5% (closest {closest})"
            ),
            HarnessError::InvalidGrid(why) => write!(f, "invalid grid spec: {why}"),
            HarnessError::InvalidPortion(bp) => write!(f, "invalid portion: {bp} bp"),
            HarnessError::InsufficientReps => {
                write!(f, "variance estimates need at least 2 reps")
            }
            HarnessError::NoSubdividableZone => {
                write!(f, "no zone has 2 or more positions to subdivide")
            }
        }
    }
}

impl core::error::Error for HarnessError {}

impl From<AugmentError> for HarnessError {
    fn from(e: AugmentError) -> Self {
        HarnessError::Augment(e)
    }
}

impl From<FeatureError> for HarnessError {
    fn from(e: FeatureError) -> Self {
        HarnessError::Feature(e)
    }
}

impl From<ForestError> for HarnessError {
    fn from(e: ForestError) -> Self {
        HarnessError::Forest(e)
    }
}
