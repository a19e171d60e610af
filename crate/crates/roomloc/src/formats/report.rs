//! Experiment report tables (write-only).

use std::fmt::Write as _;

use roomloc_core::harness::{CompareReport, CurvePoint, GridResult, SubzoneRun};

/// `grid.csv`: one row per cell.
pub fn grid_to_string(grid: &GridResult) -> String {
    let mut out = String::from("max_depth,n_estimators,train_accuracy,test_accuracy\n");
    for cell in &grid.cells {
        writeln!(
            out,
            "{},{},{},{}",
            cell.max_depth, cell.n_estimators, cell.train_accuracy, cell.test_accuracy
        )
        .unwrap();
    }
    let best = grid.best_cell();
    writeln!(
        out,
        "# dataset: mode={} samples={} classes={}",
        grid.dataset.mode, grid.dataset.sample_count, grid.dataset.class_count
    )
    .unwrap();
    writeln!(
        out,
        "# best cell: depth={} estimators={} test_accuracy={}",
        best.max_depth, best.n_estimators, best.test_accuracy
    )
    .unwrap();
    out
}

/// `compare.csv`: both modes' cells plus summary comments.
pub fn compare_to_string(report: &CompareReport) -> String {
    let mut out = String::from("mode,max_depth,n_estimators,train_accuracy,test_accuracy\n");
    for (mode, grid) in [
        ("snapshot", &report.snapshot),
        ("augmented", &report.augmented),
    ] {
        for cell in &grid.cells {
            writeln!(
                out,
                "{},{},{},{},{}",
                mode, cell.max_depth, cell.n_estimators, cell.train_accuracy, cell.test_accuracy
            )
            .unwrap();
        }
    }
    let best_snap = report.snapshot.best_cell();
    let best_aug = report.augmented.best_cell();
    writeln!(
        out,
        "# tuned range: {} -> {} augmented samples vs {} snapshots",
        report.tuned_range,
        report.augmented.dataset.sample_count,
        report.snapshot.dataset.sample_count
    )
    .unwrap();
    writeln!(
        out,
        "# best snapshot cell: depth={} estimators={} test_accuracy={}",
        best_snap.max_depth, best_snap.n_estimators, best_snap.test_accuracy
    )
    .unwrap();
    writeln!(
        out,
        "# best augmented cell: depth={} estimators={} test_accuracy={}",
        best_aug.max_depth, best_aug.n_estimators, best_aug.test_accuracy
    )
    .unwrap();
    writeln!(
        out,
        "# best-cell delta={} mean-cell delta={}",
        report.best_test_delta, report.mean_test_delta
    )
    .unwrap();
    out
}

/// `curves.csv`: per-device averaged readings, then a second table with the
/// mean included-device fraction per portion.
pub fn curves_to_string(points: &[CurvePoint]) -> String {
    let mut out = String::from("portion_bp,bssid,rep_index,avg_rssi_dbm\n");
    for point in points {
        for sample in &point.device_samples {
            writeln!(
                out,
                "{},{},{},{}",
                point.portion_bp, sample.bssid, sample.rep_index, sample.avg_rssi
            )
            .unwrap();
        }
    }
    out.push('\n');
    out.push_str("portion_bp,included_fraction\n");
    for point in points {
        writeln!(out, "{},{}", point.portion_bp, point.mean_included_fraction()).unwrap();
    }
    out
}

/// `subzones.csv`: one row per (range, cell).
pub fn subzones_to_string(runs: &[SubzoneRun]) -> String {
    let mut out = String::from(
        "start,end,step,reps,samples_per_session,sample_count,max_depth,n_estimators,train_accuracy,test_accuracy\n",
    );
    for run in runs {
        for cell in &run.grid.cells {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                run.range.start_bp as f64 / 10_000.0,
                run.range.end_bp as f64 / 10_000.0,
                run.range.step_bp as f64 / 10_000.0,
                run.range.reps,
                run.range.snapshots_per_session(),
                run.sample_count,
                cell.max_depth,
                cell.n_estimators,
                cell.train_accuracy,
                cell.test_accuracy
            )
            .unwrap();
        }
    }
    for run in runs {
        let best = run.grid.best_cell();
        writeln!(
            out,
            "# range {}: {} samples, best test_accuracy={}",
            run.range, run.sample_count, best.test_accuracy
        )
        .unwrap();
    }
    out
}
