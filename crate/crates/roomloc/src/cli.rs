//! The `roomloc` command-line pipeline.
//!
//! Subcommands mirror the pipeline stages: `simulate` produces beacon logs
//! and scan snapshots from a synthetic floor, `ingest` validates capture
//! files, `augment` sweeps portions into location snapshots, `featurize`
//! lays snapshots out as a feature matrix, `train`/`predict` handle the
//! classifier, and `grid`/`compare`/`subzones`/`curves` run the experiment
//! drivers.
//!
//! Exit codes: 0 on success, 1 for domain errors (bad data, unreачable
//! targets), 2 for usage errors. Every command that writes files also
//! writes `<primary output>.manifest.json` describing the run. All
//! randomness in one invocation flows from its single `--seed`.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand};

use roomloc_core::augment::{online_snapshot, select_window, PortionRange, DEFAULT_ONLINE_WINDOW_US};
use roomloc_core::features::{build_feature_matrix, infer_universe, subdivide_snapshots, visible_universe_of_sessions};
use roomloc_core::forest::{evaluate, predict, train_forest_with, ForestConfig, MaxFeatures};
use roomloc_core::harness::{augment_sessions, compare_modes, run_grid, subzone_experiment, variability_curves, GridSpec};
use roomloc_core::rng::SeedMix;
use roomloc_core::sim::{default_hospital_like_scenario, simulate_session, simulate_system_snapshots, SimScenario};
use roomloc_core::types::{Bssid, CaptureSession, Snapshot, FILL_DBM};

use crate::formats::{beacon_log, matrix, model, report, scenario, snapshots};
use crate::manifest::RunManifest;
use crate::parallel::{bounded_pool, RayonParallelism};

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

#[derive(Parser)]
#[command(
    name = "roomloc",
    version,
    about = "Room-level indoor localization from WiFi beacon streams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate beacon logs and scan snapshots from a synthetic floor.
    Simulate(SimulateArgs),
    /// Validate capture files and print a summary.
    Ingest(IngestArgs),
    /// Sweep portions over a beacon log into location snapshots.
    Augment(AugmentArgs),
    /// Lay snapshots out as a feature matrix.
    Featurize(FeaturizeArgs),
    /// Train a random-forest room classifier.
    Train(TrainArgs),
    /// Predict zone labels for snapshots or a beacon-log window.
    Predict(PredictArgs),
    /// Sweep forest hyper-parameters over one matrix.
    Grid(GridCmdArgs),
    /// Compare augmented stream data against scan snapshots.
    Compare(CompareArgs),
    /// Scale the problem to sub-zones across augmentation settings.
    Subzones(SubzonesArgs),
    /// Measure per-portion signal spread and device coverage.
    Curves(CurvesArgs),
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Ingest(args) => cmd_ingest(args),
        Command::Augment(args) => cmd_augment(args),
        Command::Featurize(args) => cmd_featurize(args),
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Grid(args) => cmd_grid(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Subzones(args) => cmd_subzones(args),
        Command::Curves(args) => cmd_curves(args),
    }
}

// ---------------------------------------------------------------------------
// argument parsing helpers
// ---------------------------------------------------------------------------

/// Portion range in `start,end,step,reps` notation, e.g. `0.4,1.0,0.2,5`.
fn parse_range_arg(s: &str) -> Result<PortionRange, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err("expected start,end,step,reps (e.g. 0.4,1.0,0.2,5)".into());
    }
    let num = |p: &str| -> Result<f64, String> {
        p.trim()
            .parse()
            .map_err(|_| format!("invalid number {p:?}"))
    };
    let reps: u32 = parts[3].trim().parse().map_err(|_| "invalid reps".to_string())?;
    PortionRange::from_fractions(num(parts[0])?, num(parts[1])?, num(parts[2])?, reps)
        .map_err(|e| e.to_string())
}

#[derive(Clone, Debug)]
struct RangeList(Vec<PortionRange>);

/// Semicolon-separated list of portion ranges.
fn parse_ranges_arg(s: &str) -> Result<RangeList, String> {
    s.split(';')
        .map(parse_range_arg)
        .collect::<Result<Vec<_>, _>>()
        .map(RangeList)
}

#[derive(Clone, Debug)]
struct NumList(Vec<usize>);

fn parse_num_list(s: &str) -> Result<NumList, String> {
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| format!("invalid number {p:?}")))
        .collect::<Result<Vec<_>, _>>()
        .map(NumList)
}

#[derive(Clone, Debug)]
struct PortionList(Vec<u32>);

/// Comma-separated portions as fractions, e.g. `0.2,0.4,1.0`.
fn parse_portion_list(s: &str) -> Result<PortionList, String> {
    s.split(',')
        .map(|p| {
            let x: f64 = p.trim().parse().map_err(|_| format!("invalid portion {p:?}"))?;
            if !(x > 0.0 && x <= 1.0) {
                return Err(format!("portion {x} outside (0, 1]"));
            }
            Ok((x * 10_000.0).round() as u32)
        })
        .collect::<Result<Vec<_>, _>>()
        .map(PortionList)
}

/// `sqrt`, `all`, or a fixed count.
fn parse_max_features(s: &str) -> Result<MaxFeatures, String> {
    match s {
        "sqrt" => Ok(MaxFeatures::Sqrt),
        "all" => Ok(MaxFeatures::All),
        other => other
            .parse::<usize>()
            .map(MaxFeatures::Fixed)
            .map_err(|_| "expected sqrt, all, or a count".to_string()),
    }
}

#[derive(Args)]
struct GridArgs {
    /// Swept max-depth values, comma-separated, increasing.
    #[arg(long, default_value = "10,15,20,25,30", value_parser = parse_num_list)]
    depths: NumList,
    /// Swept estimator counts, comma-separated, increasing.
    #[arg(long, default_value = "10,15,20,25,30", value_parser = parse_num_list)]
    estimators: NumList,
    /// Held-out fraction per class.
    #[arg(long, default_value_t = 0.25)]
    test_fraction: f64,
    /// Candidate features per split: sqrt, all, or a count.
    #[arg(long, default_value = "sqrt", value_parser = parse_max_features)]
    max_features: MaxFeatures,
    /// Minimum rows needed to split a node.
    #[arg(long, default_value_t = 2)]
    min_samples_split: usize,
}

impl GridArgs {
    /// Grid spec with forest and split sub-seeds derived from the run seed.
    fn spec(&self, seed: u64) -> GridSpec {
        GridSpec {
            max_depths: self.depths.0.clone(),
            n_estimators_list: self.estimators.0.clone(),
            base: ForestConfig {
                max_features: self.max_features,
                min_samples_split: self.min_samples_split,
                seed: SeedMix::new(seed).text("forest").finish(),
                ..ForestConfig::default()
            },
            test_fraction: self.test_fraction,
            split_seed: SeedMix::new(seed).text("split").finish(),
        }
    }

    fn record(&self, manifest: &mut RunManifest) {
        manifest
            .param("depths", join_nums(&self.depths.0))
            .param("estimators", join_nums(&self.estimators.0))
            .param("test_fraction", self.test_fraction)
            .param("max_features", max_features_label(self.max_features))
            .param("min_samples_split", self.min_samples_split);
    }
}

fn join_nums(nums: &[usize]) -> String {
    nums.iter()
        .map(|n| n.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn max_features_label(mf: MaxFeatures) -> String {
    match mf {
        MaxFeatures::Sqrt => "sqrt".into(),
        MaxFeatures::All => "all".into(),
        MaxFeatures::Fixed(k) => k.to_string(),
    }
}

fn range_arg_label(r: &PortionRange) -> String {
    format!(
        "{},{},{},{}",
        r.start_bp as f64 / 10_000.0,
        r.end_bp as f64 / 10_000.0,
        r.step_bp as f64 / 10_000.0,
        r.reps
    )
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Args)]
#[command(group = ArgGroup::new("outputs").required(true).multiple(true)
    .args(["out_log", "out_snapshots", "emit_scenario"]))]
struct SimulateArgs {
    /// Scenario file; omitted, a built-in 8-room floor is generated.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Seed for the built-in floor; overrides the scenario file's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the beacon log (stream mode) here.
    #[arg(long)]
    out_log: Option<PathBuf>,
    /// Write scan-tool snapshots (snapshot mode) here.
    #[arg(long)]
    out_snapshots: Option<PathBuf>,
    /// Scan snapshots generated per position.
    #[arg(long, default_value_t = 22)]
    snapshots_per_position: usize,
    /// Write the scenario actually used here (TOML).
    #[arg(long)]
    emit_scenario: Option<PathBuf>,
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let mut scenario: SimScenario = match &args.scenario {
        Some(path) => scenario::read_file(path).context("loading scenario")?,
        None => default_hospital_like_scenario(args.seed.unwrap_or(0)),
    };
    if args.scenario.is_some() {
        if let Some(seed) = args.seed {
            scenario.seed = seed;
        }
    }
    scenario.validate()?;

    let mut manifest = RunManifest::new("simulate");
    manifest
        .param("seed", scenario.seed)
        .param("snapshots_per_position", args.snapshots_per_position)
        .param_opt("scenario", &args.scenario.as_ref().map(display_path));

    if let Some(path) = &args.out_log {
        let sessions: Vec<CaptureSession> = scenario
            .positions
            .iter()
            .map(|p| simulate_session(&scenario, &p.position_id))
            .collect::<Result<_, _>>()?;
        beacon_log::write_file(path, &sessions)?;
        let frames: usize = sessions.iter().map(|s| s.records.len()).sum();
        println!(
            "wrote {} sessions ({} frames) to {}",
            sessions.len(),
            frames,
            path.display()
        );
        manifest.param("out_log", display_path(path));
    }
    if let Some(path) = &args.out_snapshots {
        let mut snaps = Vec::new();
        for p in &scenario.positions {
            snaps.extend(simulate_system_snapshots(
                &scenario,
                &p.position_id,
                args.snapshots_per_position,
            )?);
        }
        snapshots::write_system_file(path, &snaps)?;
        println!("wrote {} snapshots to {}", snaps.len(), path.display());
        manifest.param("out_snapshots", display_path(path));
    }
    if let Some(path) = &args.emit_scenario {
        scenario::write_file(path, &scenario)?;
        println!("wrote scenario to {}", path.display());
        manifest.param("emit_scenario", display_path(path));
    }

    let primary = args
        .out_log
        .as_ref()
        .or(args.out_snapshots.as_ref())
        .or(args.emit_scenario.as_ref())
        .unwrap();
    for path in [&args.out_log, &args.out_snapshots, &args.emit_scenario]
        .into_iter()
        .flatten()
    {
        manifest.record_output(path)?;
    }
    manifest.write_alongside(primary)?;
    Ok(())
}

fn display_path<P: AsRef<std::path::Path>>(p: &P) -> String {
    p.as_ref().display().to_string()
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

#[derive(Args)]
#[command(group = ArgGroup::new("inputs").required(true).multiple(true)
    .args(["log", "snapshots"]))]
struct IngestArgs {
    /// Beacon log to validate.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Scan-snapshot file to validate.
    #[arg(long)]
    snapshots: Option<PathBuf>,
    /// Rewrite the log in canonical form here.
    #[arg(long)]
    out_log: Option<PathBuf>,
    /// Rewrite the snapshots in canonical form here.
    #[arg(long)]
    out_snapshots: Option<PathBuf>,
}

fn cmd_ingest(args: IngestArgs) -> Result<()> {
    let mut manifest = RunManifest::new("ingest");
    let mut outputs: Vec<PathBuf> = Vec::new();

    if let Some(path) = &args.log {
        let sessions = beacon_log::read_file(path)?;
        let zones: BTreeSet<&str> = sessions.iter().map(|s| s.zone_label.as_str()).collect();
        let frames: usize = sessions.iter().map(|s| s.records.len()).sum();
        let mut devices: BTreeSet<Bssid> = BTreeSet::new();
        let mut hidden: BTreeSet<Bssid> = BTreeSet::new();
        for s in &sessions {
            devices.extend(s.devices());
            hidden.extend(s.hidden_devices());
        }
        println!(
            "log {}: {} sessions, {} zones, {} frames, {} devices ({} hidden)",
            path.display(),
            sessions.len(),
            zones.len(),
            frames,
            devices.len(),
            hidden.len()
        );
        manifest.param("log", display_path(path));
        if let Some(out) = &args.out_log {
            beacon_log::write_file(out, &sessions)?;
            manifest.param("out_log", display_path(out));
            outputs.push(out.clone());
        }
    }
    if let Some(path) = &args.snapshots {
        let snaps = snapshots::read_system_file(path)?;
        for snap in &snaps {
            snap.validate()?;
        }
        let zones: BTreeSet<&str> = snaps.iter().map(|s| s.zone_label.as_str()).collect();
        let devices: BTreeSet<Bssid> = snaps
            .iter()
            .flat_map(|s| s.readings.keys().copied())
            .collect();
        println!(
            "snapshots {}: {} snapshots, {} zones, {} devices",
            path.display(),
            snaps.len(),
            zones.len(),
            devices.len()
        );
        manifest.param("snapshots", display_path(path));
        if let Some(out) = &args.out_snapshots {
            snapshots::write_system_file(out, &snaps)?;
            manifest.param("out_snapshots", display_path(out));
            outputs.push(out.clone());
        }
    }

    if let Some(primary) = outputs.first() {
        let primary = primary.clone();
        for path in &outputs {
            manifest.record_output(path)?;
        }
        manifest.write_alongside(&primary)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// augment
// ---------------------------------------------------------------------------

#[derive(Args)]
struct AugmentArgs {
    /// Beacon log to augment.
    #[arg(long = "in")]
    input: PathBuf,
    /// Portion range `start,end,step,reps`, e.g. `0.4,1.0,0.2,5`.
    #[arg(long, value_parser = parse_range_arg)]
    range: PortionRange,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output snapshot file.
    #[arg(long)]
    out: PathBuf,
}

fn cmd_augment(args: AugmentArgs) -> Result<()> {
    let sessions = beacon_log::read_file(&args.input)?;
    let snaps = augment_sessions(&sessions, &args.range, args.seed)?;
    snapshots::write_snapshots_file(&args.out, &snaps)?;
    println!(
        "wrote {} snapshots ({} per session x {} sessions) to {}",
        snaps.len(),
        args.range.snapshots_per_session(),
        sessions.len(),
        args.out.display()
    );

    let mut manifest = RunManifest::new("augment");
    manifest
        .param("in", display_path(&args.input))
        .param("range", range_arg_label(&args.range))
        .param("seed", args.seed)
        .param("out", display_path(&args.out))
        .record_output(&args.out)?;
    manifest.write_alongside(&args.out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// featurize
// ---------------------------------------------------------------------------

#[derive(Args)]
struct FeaturizeArgs {
    /// Snapshot file (augmented or raw).
    #[arg(long)]
    snapshots: PathBuf,
    /// Output matrix file.
    #[arg(long)]
    out: PathBuf,
    /// Rewrite labels to `zone/position` sub-zones first.
    #[arg(long)]
    subdivide: bool,
    /// Originating beacon log; its hidden devices are excluded from the
    /// inferred universe (snapshot files do not carry visibility).
    #[arg(long)]
    log: Option<PathBuf>,
    /// Take the column universe from an existing matrix file.
    #[arg(long)]
    universe_from: Option<PathBuf>,
}

fn cmd_featurize(args: FeaturizeArgs) -> Result<()> {
    let mut snaps = snapshots::read_snapshots_file(&args.snapshots)?;
    if args.subdivide {
        snaps = subdivide_snapshots(&snaps)?;
    }

    let universe: Option<Vec<Bssid>> = if let Some(path) = &args.universe_from {
        Some(matrix::read_file(path)?.device_universe)
    } else if let Some(path) = &args.log {
        let sessions = beacon_log::read_file(path)?;
        let visible: BTreeSet<Bssid> = visible_universe_of_sessions(&sessions).into_iter().collect();
        Some(
            infer_universe(&snaps)
                .into_iter()
                .filter(|dev| visible.contains(dev))
                .collect(),
        )
    } else {
        None
    };

    let m = build_feature_matrix(&snaps, universe.as_deref())?;
    matrix::write_file(&args.out, &m)?;
    println!(
        "wrote {} rows x {} features ({} classes) to {}",
        m.n_rows(),
        m.n_features(),
        m.classes().len(),
        args.out.display()
    );

    let mut manifest = RunManifest::new("featurize");
    manifest
        .param("snapshots", display_path(&args.snapshots))
        .param("subdivide", args.subdivide)
        .param_opt("log", &args.log.as_ref().map(display_path))
        .param_opt("universe_from", &args.universe_from.as_ref().map(display_path))
        .param("out", display_path(&args.out))
        .record_output(&args.out)?;
    manifest.write_alongside(&args.out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

#[derive(Args)]
struct TrainArgs {
    /// Training matrix.
    #[arg(long)]
    matrix: PathBuf,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 30)]
    trees: usize,
    #[arg(long, default_value_t = 20)]
    max_depth: usize,
    /// Candidate features per split: sqrt, all, or a count.
    #[arg(long, default_value = "sqrt", value_parser = parse_max_features)]
    max_features: MaxFeatures,
    #[arg(long, default_value_t = 2)]
    min_samples_split: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Parallel tree-training jobs (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let m = matrix::read_file(&args.matrix)?;
    let config = ForestConfig {
        n_estimators: args.trees,
        max_depth: args.max_depth,
        max_features: args.max_features,
        seed: args.seed,
        min_samples_split: args.min_samples_split,
    };
    let pool = bounded_pool(effective_jobs(args.jobs));
    let trained =
        pool.install(|| train_forest_with(&m, &config, true, &RayonParallelism))?;
    model::write_file(&args.out, &trained)?;
    println!(
        "trained {} trees on {} rows x {} features ({} classes); training accuracy {:.3}",
        trained.trees.len(),
        m.n_rows(),
        m.n_features(),
        trained.classes.len(),
        evaluate(&trained, &m)?
    );

    let mut manifest = RunManifest::new("train");
    manifest
        .param("matrix", display_path(&args.matrix))
        .param("trees", args.trees)
        .param("max_depth", args.max_depth)
        .param("max_features", max_features_label(args.max_features))
        .param("min_samples_split", args.min_samples_split)
        .param("seed", args.seed)
        .param_opt("jobs", &args.jobs)
        .param("out", display_path(&args.out))
        .record_output(&args.out)?;
    manifest.write_alongside(&args.out)?;
    Ok(())
}

fn effective_jobs(jobs: Option<usize>) -> usize {
    jobs.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    })
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

#[derive(Args)]
#[command(group = ArgGroup::new("input").required(true).args(["snapshots", "log"]))]
struct PredictArgs {
    /// Trained model file.
    #[arg(long)]
    model: PathBuf,
    /// Predict one label per snapshot in this file.
    #[arg(long)]
    snapshots: Option<PathBuf>,
    /// Predict one label per session from the most recent window of this
    /// beacon log.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Online window span in microseconds (with --log).
    #[arg(long, default_value_t = DEFAULT_ONLINE_WINDOW_US)]
    window_us: u64,
    /// Also write the labels here, one per line.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let m = model::read_file(&args.model)?;

    let rows: Vec<Vec<f64>> = if let Some(path) = &args.snapshots {
        let snaps = snapshots::read_snapshots_file(path)?;
        if snaps.is_empty() {
            bail!("{}: no snapshots to predict", path.display());
        }
        snaps
            .iter()
            .map(|s| snapshot_row(s, &m.device_universe))
            .collect()
    } else {
        let path = args.log.as_ref().unwrap();
        let sessions = beacon_log::read_file(path)?;
        if sessions.is_empty() {
            bail!("{}: no sessions to predict", path.display());
        }
        sessions
            .iter()
            .map(|session| {
                let now = session.records.last().unwrap().timestamp_us;
                let window = select_window(&session.records, now, args.window_us);
                let snap = online_snapshot(&window)?;
                Ok(m.device_universe
                    .iter()
                    .map(|dev| snap.readings.get(dev).copied().unwrap_or(FILL_DBM))
                    .collect())
            })
            .collect::<Result<_>>()?
    };

    let mut lines = String::new();
    for row in &rows {
        let label = predict(&m, row)?;
        lines.push_str(label);
        lines.push('\n');
    }
    // tolerate a closed pipe (e.g. `roomloc predict ... | head`)
    {
        use std::io::Write;
        if let Err(e) = std::io::stdout().write_all(lines.as_bytes()) {
            if e.kind() != std::io::ErrorKind::BrokenPipe {
                return Err(e.into());
            }
        }
    }

    if let Some(out) = &args.out {
        std::fs::write(out, lines)?;
        let mut manifest = RunManifest::new("predict");
        manifest
            .param("model", display_path(&args.model))
            .param_opt("snapshots", &args.snapshots.as_ref().map(display_path))
            .param_opt("log", &args.log.as_ref().map(display_path))
            .param("window_us", args.window_us)
            .param("out", display_path(out))
            .record_output(out)?;
        manifest.write_alongside(out)?;
    }
    Ok(())
}

fn snapshot_row(snap: &Snapshot, universe: &[Bssid]) -> Vec<f64> {
    universe
        .iter()
        .map(|dev| snap.readings.get(dev).copied().unwrap_or(FILL_DBM))
        .collect()
}

// ---------------------------------------------------------------------------
// grid
// ---------------------------------------------------------------------------

#[derive(Args)]
struct GridCmdArgs {
    /// Feature matrix to sweep over.
    #[arg(long)]
    matrix: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output report (grid.csv).
    #[arg(long)]
    out: PathBuf,
    /// Parallel grid-cell jobs (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

fn cmd_grid(args: GridCmdArgs) -> Result<()> {
    let m = matrix::read_file(&args.matrix)?;
    let spec = args.grid.spec(args.seed);
    let pool = bounded_pool(effective_jobs(args.jobs));
    let result = pool.install(|| run_grid(&m, &spec, &RayonParallelism))?;
    std::fs::write(&args.out, report::grid_to_string(&result))?;
    let best = result.best_cell();
    println!(
        "{} cells on {} rows; best test accuracy {:.3} at depth={} estimators={}",
        result.cells.len(),
        m.n_rows(),
        best.test_accuracy,
        best.max_depth,
        best.n_estimators
    );

    let mut manifest = RunManifest::new("grid");
    manifest
        .param("matrix", display_path(&args.matrix))
        .param("seed", args.seed)
        .param_opt("jobs", &args.jobs)
        .param("out", display_path(&args.out));
    args.grid.record(&mut manifest);
    manifest.record_output(&args.out)?;
    manifest.write_alongside(&args.out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

#[derive(Args)]
struct CompareArgs {
    /// Stream-mode beacon log.
    #[arg(long)]
    log: PathBuf,
    /// Snapshot-mode scan file.
    #[arg(long)]
    snapshots: PathBuf,
    /// Portion range to tune toward the snapshot count.
    #[arg(long, value_parser = parse_range_arg)]
    range: PortionRange,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output report (compare.csv).
    #[arg(long)]
    out: PathBuf,
    /// Parallel grid-cell jobs (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let sessions = beacon_log::read_file(&args.log)?;
    let snaps = snapshots::read_system_file(&args.snapshots)?;
    let spec = args.grid.spec(args.seed);
    let augment_seed = SeedMix::new(args.seed).text("augment").finish();
    let pool = bounded_pool(effective_jobs(args.jobs));
    let rep = pool.install(|| {
        compare_modes(&sessions, &snaps, &args.range, &spec, augment_seed, &RayonParallelism)
    })?;
    std::fs::write(&args.out, report::compare_to_string(&rep))?;

    let best_snap = rep.snapshot.best_cell();
    let best_aug = rep.augmented.best_cell();
    println!(
        "snapshot:  best test accuracy {:.3} at depth={} estimators={} ({} samples)",
        best_snap.test_accuracy,
        best_snap.max_depth,
        best_snap.n_estimators,
        rep.snapshot.dataset.sample_count
    );
    println!(
        "augmented: best test accuracy {:.3} at depth={} estimators={} ({} samples, range {})",
        best_aug.test_accuracy,
        best_aug.max_depth,
        best_aug.n_estimators,
        rep.augmented.dataset.sample_count,
        rep.tuned_range
    );
    println!(
        "best-cell delta {:+.3}, mean-cell delta {:+.3}",
        rep.best_test_delta, rep.mean_test_delta
    );

    let mut manifest = RunManifest::new("compare");
    manifest
        .param("log", display_path(&args.log))
        .param("snapshots", display_path(&args.snapshots))
        .param("range", range_arg_label(&args.range))
        .param("seed", args.seed)
        .param_opt("jobs", &args.jobs)
        .param("out", display_path(&args.out));
    args.grid.record(&mut manifest);
    manifest.record_output(&args.out)?;
    manifest.write_alongside(&args.out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// subzones
// ---------------------------------------------------------------------------

#[derive(Args)]
struct SubzonesArgs {
    /// Stream-mode beacon log.
    #[arg(long)]
    log: PathBuf,
    /// Semicolon-separated portion ranges to evaluate.
    #[arg(
        long,
        default_value = "0.2,1.0,0.2,1;0.2,1.0,0.1,1;0.2,1.0,0.05,1;0.2,1.0,0.05,2",
        value_parser = parse_ranges_arg
    )]
    ranges: RangeList,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output report (subzones.csv).
    #[arg(long)]
    out: PathBuf,
    /// Parallel grid-cell jobs (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

fn cmd_subzones(args: SubzonesArgs) -> Result<()> {
    let sessions = beacon_log::read_file(&args.log)?;
    let spec = args.grid.spec(args.seed);
    let augment_seed = SeedMix::new(args.seed).text("augment").finish();
    let pool = bounded_pool(effective_jobs(args.jobs));
    let runs = pool.install(|| {
        subzone_experiment(&sessions, &args.ranges.0, &spec, augment_seed, &RayonParallelism)
    })?;
    std::fs::write(&args.out, report::subzones_to_string(&runs))?;
    for run in &runs {
        let best = run.grid.best_cell();
        println!(
            "range {}: {} samples, {} classes, best test accuracy {:.3}",
            run.range,
            run.sample_count,
            run.grid.dataset.class_count,
            best.test_accuracy
        );
    }

    let mut manifest = RunManifest::new("subzones");
    manifest
        .param("log", display_path(&args.log))
        .param(
            "ranges",
            args.ranges
                .0
                .iter()
                .map(range_arg_label)
                .collect::<Vec<_>>()
                .join(";"),
        )
        .param("seed", args.seed)
        .param_opt("jobs", &args.jobs)
        .param("out", display_path(&args.out));
    args.grid.record(&mut manifest);
    manifest.record_output(&args.out)?;
    manifest.write_alongside(&args.out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// curves
// ---------------------------------------------------------------------------

#[derive(Args)]
struct CurvesArgs {
    /// Stream-mode beacon log.
    #[arg(long)]
    log: PathBuf,
    /// Session to analyze (default: the log's first position).
    #[arg(long)]
    position: Option<String>,
    /// Portions to sample, comma-separated fractions.
    #[arg(long, default_value = "0.2,0.4,0.6,0.8,1.0", value_parser = parse_portion_list)]
    portions: PortionList,
    /// Augmentation draws per portion.
    #[arg(long, default_value_t = 20)]
    reps: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output report (curves.csv).
    #[arg(long)]
    out: PathBuf,
}

fn cmd_curves(args: CurvesArgs) -> Result<()> {
    let sessions = beacon_log::read_file(&args.log)?;
    let session = match &args.position {
        Some(id) => sessions
            .iter()
            .find(|s| s.position_id == *id)
            .with_context(|| format!("position {id:?} not in {}", args.log.display()))?,
        None => sessions
            .first()
            .with_context(|| format!("{}: empty log", args.log.display()))?,
    };
    let points = variability_curves(session, &args.portions.0, args.reps, args.seed)?;
    std::fs::write(&args.out, report::curves_to_string(&points))?;
    println!(
        "{}: {} devices, {} frames; wrote {} portions x {} reps to {}",
        session.position_id,
        session.devices().len(),
        session.records.len(),
        points.len(),
        args.reps,
        args.out.display()
    );

    let mut manifest = RunManifest::new("curves");
    manifest
        .param("log", display_path(&args.log))
        .param("position", &session.position_id)
        .param(
            "portions",
            args.portions
                .0
                .iter()
                .map(|bp| (*bp as f64 / 10_000.0).to_string())
                .collect::<Vec<_>>()
                .join(","),
        )
        .param("reps", args.reps)
        .param("seed", args.seed)
        .param("out", display_path(&args.out))
        .record_output(&args.out)?;
    manifest.write_alongside(&args.out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_argument_notation() {
        let r = parse_range_arg("0.4,1.0,0.2,5").unwrap();
        assert_eq!((r.start_bp, r.end_bp, r.step_bp, r.reps), (4000, 10000, 2000, 5));
        assert!(parse_range_arg("0.4,1.0,0.2").is_err());
        assert!(parse_range_arg("0,1.0,0.2,5").is_err());
        assert!(parse_range_arg("a,b,c,d").is_err());
    }

    #[test]
    fn list_arguments() {
        assert_eq!(parse_num_list("10,15,20").unwrap().0, vec![10, 15, 20]);
        assert!(parse_num_list("10,x").is_err());
        assert_eq!(parse_portion_list("0.2,1.0").unwrap().0, vec![2000, 10000]);
        assert!(parse_portion_list("0.0").is_err());
        let ranges = parse_ranges_arg("0.2,1.0,0.2,1;0.8,1.0,0.05,1").unwrap();
        assert_eq!(ranges.0.len(), 2);
    }

    #[test]
    fn max_features_argument() {
        assert_eq!(parse_max_features("sqrt").unwrap(), MaxFeatures::Sqrt);
        assert_eq!(parse_max_features("all").unwrap(), MaxFeatures::All);
        assert_eq!(parse_max_features("7").unwrap(), MaxFeatures::Fixed(7));
        assert!(parse_max_features("log2").is_err());
    }

    #[test]
    fn cli_structure_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
