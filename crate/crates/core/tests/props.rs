//! Property tests for the pipeline invariants.

use proptest::prelude::*;
use roomloc_core::augment::{
    dataloc_plus, online_snapshot, select_window, PortionRange,
};
use roomloc_core::features::{build_feature_matrix, split_stratified, FeatureMatrix};
use roomloc_core::forest::{predict_votes, train_forest, ForestConfig, MaxFeatures, TreeNode};
use roomloc_core::types::{Band, BeaconRecord, Bssid, CaptureSession, Provenance};

fn bssid(n: u8) -> Bssid {
    Bssid::from_octets([2, 0, 0, 0, 0, n])
}

fn record(t: u64, dev: u8, rssi: i8) -> BeaconRecord {
    BeaconRecord::new(t, bssid(dev), Some(format!("net{dev}")), 6, Band::Ghz2_4, rssi).unwrap()
}

prop_compose! {
    fn arb_session()(
        n_frames in 1usize..60,
        n_devices in 1u8..6,
        seed in any::<u64>(),
    ) -> CaptureSession {
        let mut rng = roomloc_core::rng::SplitMix64::new(seed);
        let records: Vec<BeaconRecord> = (0..n_frames)
            .map(|t| {
                let dev = rng.bounded(n_devices as u64) as u8;
                let rssi = -30 - rng.bounded(70) as i8;
                record(t as u64, dev, rssi)
            })
            .collect();
        CaptureSession::new("p1".into(), "room1".into(), records, n_frames as u64).unwrap()
    }
}

prop_compose! {
    fn arb_range()(
        start in 1u32..=10_000,
        extra in 0u32..=9_999,
        step in 1u32..=10_000,
        reps in 1u32..=4,
    ) -> PortionRange {
        let end = (start + extra).min(10_000);
        PortionRange::new(start, end, step, reps).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// |output| = reps * (floor((end - start) / step) + 1)
    #[test]
    fn count_law(session in arb_session(), range in arb_range(), seed in any::<u64>()) {
        let snaps = dataloc_plus(&session, &range, seed).unwrap();
        let portions = (range.end_bp - range.start_bp) / range.step_bp + 1;
        prop_assert_eq!(snaps.len() as u32, range.reps * portions);
    }

    /// Every averaged reading lies within the device's observed min/max.
    #[test]
    fn range_law(session in arb_session(), range in arb_range(), seed in any::<u64>()) {
        let snaps = dataloc_plus(&session, &range, seed).unwrap();
        for snap in &snaps {
            snap.validate().unwrap();
            for (dev, &avg) in &snap.readings {
                let observed: Vec<f64> = session
                    .records
                    .iter()
                    .filter(|r| r.bssid == *dev)
                    .map(|r| r.rssi_dbm as f64)
                    .collect();
                let min = observed.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = observed.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(avg >= min && avg <= max);
            }
        }
    }

    /// frames_used = ceil(portion * N), and the provenance tags follow the
    /// sweep order.
    #[test]
    fn frames_used_law(session in arb_session(), range in arb_range(), seed in any::<u64>()) {
        let n = session.records.len() as u64;
        let snaps = dataloc_plus(&session, &range, seed).unwrap();
        for snap in &snaps {
            match snap.provenance {
                Provenance::Augmented { portion_bp, frames_used, .. } => {
                    let expected = (portion_bp as u64 * n).div_ceil(10_000);
                    prop_assert_eq!(frames_used as u64, expected);
                }
                Provenance::Raw => prop_assert!(false, "sweep output tagged raw"),
            }
        }
    }

    /// Same inputs, same output; different seed, (almost always) different
    /// shuffles but always the same shape.
    #[test]
    fn sweep_determinism(session in arb_session(), range in arb_range(), seed in any::<u64>()) {
        let a = dataloc_plus(&session, &range, seed).unwrap();
        let b = dataloc_plus(&session, &range, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    /// The online no-drop snapshot equals the full-portion sweep output.
    #[test]
    fn online_equals_portion_one(session in arb_session(), seed in any::<u64>()) {
        let range = PortionRange::new(10_000, 10_000, 1, 1).unwrap();
        let sweep = dataloc_plus(&session, &range, seed).unwrap();
        let online = online_snapshot(&session.records).unwrap();
        prop_assert_eq!(&sweep[0].readings, &online.readings);
        prop_assert_eq!(&sweep[0].hidden, &online.hidden);
    }

    /// Window selection returns exactly the records in (now - w, now].
    #[test]
    fn window_selection(session in arb_session(), now in 0u64..80, w in 1u64..80) {
        let selected = select_window(&session.records, now, w);
        let expected: Vec<&BeaconRecord> = session
            .records
            .iter()
            .filter(|r| r.timestamp_us <= now && now - r.timestamp_us < w)
            .collect();
        prop_assert_eq!(selected.len(), expected.len());
        for (a, b) in selected.iter().zip(expected) {
            prop_assert_eq!(a, b);
        }
    }
}

fn labeled_matrix(classes: usize, rows_per_class: usize, seed: u64) -> FeatureMatrix {
    let mut rng = roomloc_core::rng::SplitMix64::new(seed);
    let mut snaps = Vec::new();
    for c in 0..classes {
        for r in 0..rows_per_class {
            let readings: std::collections::BTreeMap<Bssid, f64> = (0..3)
                .map(|d| (bssid(d), -20.0 - (c * 7 + d as usize) as f64 - rng.next_f64() * 5.0))
                .collect();
            snaps.push(roomloc_core::types::Snapshot {
                zone_label: format!("room{c}"),
                position_id: format!("p{c}-{r}"),
                readings,
                hidden: Default::default(),
                provenance: Provenance::Raw,
            });
        }
    }
    build_feature_matrix(&snaps, None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Stratified split: disjoint, proportional with floor protection,
    /// label alignment preserved.
    #[test]
    fn split_laws(
        classes in 2usize..5,
        rows_per_class in 2usize..12,
        fraction in 0.05f64..0.95,
        seed in any::<u64>(),
    ) {
        let m = labeled_matrix(classes, rows_per_class, seed);
        let (train, test) = split_stratified(&m, fraction, seed).unwrap();
        prop_assert_eq!(train.n_rows() + test.n_rows(), m.n_rows());
        for class in m.classes() {
            let n = rows_per_class;
            let expected = ((n as f64 * fraction).floor() as usize).clamp(1, n - 1);
            let got = test.labels.iter().filter(|l| **l == class).count();
            prop_assert_eq!(got, expected);
            let train_got = train.labels.iter().filter(|l| **l == class).count();
            prop_assert_eq!(train_got, n - expected);
        }
    }

    /// Vote counts always sum to the estimator count, and every tree
    /// respects the depth bound.
    #[test]
    fn forest_laws(
        n_estimators in 1usize..10,
        max_depth in 1usize..6,
        seed in any::<u64>(),
    ) {
        let m = labeled_matrix(3, 6, seed);
        let config = ForestConfig {
            n_estimators,
            max_depth,
            max_features: MaxFeatures::Sqrt,
            seed,
            min_samples_split: 2,
        };
        let model = train_forest(&m, &config).unwrap();
        prop_assert_eq!(model.trees.len(), n_estimators);
        for tree in &model.trees {
            prop_assert!(tree.depth() <= max_depth);
            for node in &tree.nodes {
                if let TreeNode::Leaf { class_index, class_counts } = node {
                    // leaf label is the argmax with ties to the smallest index
                    let max = class_counts.iter().max().unwrap();
                    let first_max = class_counts.iter().position(|c| c == max).unwrap();
                    prop_assert_eq!(*class_index, first_max);
                }
            }
        }
        let votes = predict_votes(&model, &m.rows[0]).unwrap();
        prop_assert_eq!(votes.iter().sum::<u32>() as usize, n_estimators);
    }
}
