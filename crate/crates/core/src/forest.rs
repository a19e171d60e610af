//! Self-contained random-forest classifier.
//!
//! Each tree is grown greedily on a bootstrap sample (drawn with
//! replacement, same size as the training set) by Gini impurity reduction;
//! at every node a random subset of candidate features is considered and
//! the split threshold is the midpoint between consecutive distinct sorted
//! values. Prediction is majority voting across trees.
//!
//! Determinism is a hard requirement here, so every tie has a rule: equal
//! split gains resolve to the lowest feature index then lowest threshold,
//! and equal leaf/vote counts resolve to the lexicographically smallest
//! class label. Split gains are compared in exact integer arithmetic
//! (cross-multiplied rationals over class counts) rather than floats, so
//! "equal" means exactly equal and results cannot drift across platforms.
//! Tree `t` trains from the sub-seed `(seed, "tree", t)`, which makes tree
//! training order-independent and safely parallel.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::features::{FeatureError, FeatureMatrix};
use crate::parallel::{Parallelism, Sequential};
use crate::rng::{SeedMix, SplitMix64};
use crate::types::Bssid;

/// How many candidate features each split considers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxFeatures {
    /// `floor(sqrt(total features))`, minimum 1. The usual default.
    Sqrt,
    /// Every feature at every split.
    All,
    /// A fixed count in `1..=total features`.
    Fixed(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => n_features.isqrt().max(1),
            MaxFeatures::All => n_features,
            MaxFeatures::Fixed(k) => k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestConfig {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub max_features: MaxFeatures,
    pub seed: u64,
    pub min_samples_split: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_estimators: 30,
            max_depth: 20,
            max_features: MaxFeatures::Sqrt,
            seed: 0,
            min_samples_split: 2,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self, n_features: usize) -> Result<(), ForestError> {
        if self.n_estimators == 0 || self.max_depth == 0 || self.min_samples_split == 0 {
            return Err(ForestError::InvalidConfig(
                "estimators, depth and min_samples_split must be positive",
            ));
        }
        if let MaxFeatures::Fixed(k) = self.max_features {
            if k == 0 || k > n_features {
                return Err(ForestError::InvalidMaxFeatures {
                    requested: k,
                    available: n_features,
                });
            }
        }
        Ok(())
    }
}

/// One tree node; children are indices into the tree's node array.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Internal {
        feature_index: usize,
        /// Rows with `value <= threshold` go left.
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        /// Index into the model's sorted class list; always the argmax of
        /// `class_counts` with ties to the smallest index.
        class_index: usize,
        class_counts: Vec<u32>,
    },
}

/// A grown decision tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    /// Leaf class index for a feature row.
    pub fn predict_index(&self, row: &[f64]) -> usize {
        let mut node = 0usize;
        loop {
            match &self.nodes[node] {
                TreeNode::Internal {
                    feature_index,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature_index] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
                TreeNode::Leaf { class_index, .. } => return *class_index,
            }
        }
    }

    /// Longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            match &nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Internal { left, right, .. } => {
                    1 + walk(nodes, *left).max(walk(nodes, *right))
                }
            }
        }
        walk(&self.nodes, 0)
    }
}

/// A trained ensemble plus the schema it expects at prediction time.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub config: ForestConfig,
    pub trees: Vec<DecisionTree>,
    pub device_universe: Vec<Bssid>,
    /// Sorted class labels; tree leaves index into this list.
    pub classes: Vec<String>,
}

/// Gini impurity `1 - Σ p²` of a class histogram.
pub fn gini_impurity(counts: &[u32]) -> f64 {
    let n: u64 = counts.iter().map(|&c| c as u64).sum();
    if n == 0 {
        return 0.0;
    }
    let sum_sq: u64 = counts.iter().map(|&c| c as u64 * c as u64).sum();
    1.0 - sum_sq as f64 / (n * n) as f64
}

/// Trains with bootstrap sampling on the calling thread.
pub fn train_forest(matrix: &FeatureMatrix, config: &ForestConfig) -> Result<ForestModel, ForestError> {
    train_forest_with(matrix, config, true, &Sequential)
}

/// Full-control trainer: `bootstrap = false` grows every tree on the whole
/// training set (used by equivalence tests against a reference tree), and
/// `par` runs tree jobs in parallel.
pub fn train_forest_with<P: Parallelism>(
    matrix: &FeatureMatrix,
    config: &ForestConfig,
    bootstrap: bool,
    par: &P,
) -> Result<ForestModel, ForestError> {
    matrix.validate().map_err(ForestError::InvalidMatrix)?;
    config.validate(matrix.n_features())?;
    let classes = matrix.classes();
    if classes.len() < 2 {
        return Err(ForestError::SingleClass);
    }

    let y: Vec<u32> = matrix
        .labels
        .iter()
        .map(|l| classes.binary_search(l).unwrap() as u32)
        .collect();
    let ctx = TrainContext {
        matrix,
        y: &y,
        n_classes: classes.len(),
        max_depth: config.max_depth,
        min_samples_split: config.min_samples_split,
        features_per_split: config.max_features.resolve(matrix.n_features()),
    };

    let trees = par.run(config.n_estimators, &|t| {
        let mut rng = SeedMix::new(config.seed)
            .text("tree")
            .word(t as u64)
            .into_rng();
        let n = matrix.n_rows();
        let rows: Vec<u32> = if bootstrap {
            (0..n).map(|_| rng.bounded(n as u64) as u32).collect()
        } else {
            (0..n as u32).collect()
        };
        grow_tree(&ctx, rows, &mut rng)
    });

    Ok(ForestModel {
        config: *config,
        trees,
        device_universe: matrix.device_universe.clone(),
        classes,
    })
}

struct TrainContext<'a> {
    matrix: &'a FeatureMatrix,
    y: &'a [u32],
    n_classes: usize,
    max_depth: usize,
    min_samples_split: usize,
    features_per_split: usize,
}

fn grow_tree(ctx: &TrainContext<'_>, rows: Vec<u32>, rng: &mut SplitMix64) -> DecisionTree {
    let mut nodes = Vec::new();
    grow_node(ctx, rows, 0, rng, &mut nodes);
    DecisionTree { nodes }
}

fn grow_node(
    ctx: &TrainContext<'_>,
    rows: Vec<u32>,
    depth: usize,
    rng: &mut SplitMix64,
    nodes: &mut Vec<TreeNode>,
) -> usize {
    let mut counts = vec![0u32; ctx.n_classes];
    for &r in &rows {
        counts[ctx.y[r as usize] as usize] += 1;
    }
    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
    if pure || depth >= ctx.max_depth || rows.len() < ctx.min_samples_split {
        return push_leaf(nodes, counts);
    }

    let split = match find_best_split(ctx, &rows, &counts, rng) {
        Some(s) => s,
        None => return push_leaf(nodes, counts),
    };

    let (mut left_rows, mut right_rows) = (Vec::new(), Vec::new());
    for &r in &rows {
        if ctx.matrix.rows[r as usize][split.feature] <= split.threshold {
            left_rows.push(r);
        } else {
            right_rows.push(r);
        }
    }
    drop(rows);

    let id = nodes.len();
    nodes.push(TreeNode::Leaf {
        class_index: 0,
        class_counts: Vec::new(),
    }); // placeholder until children exist
    let left = grow_node(ctx, left_rows, depth + 1, rng, nodes);
    let right = grow_node(ctx, right_rows, depth + 1, rng, nodes);
    nodes[id] = TreeNode::Internal {
        feature_index: split.feature,
        threshold: split.threshold,
        left,
        right,
    };
    id
}

fn push_leaf(nodes: &mut Vec<TreeNode>, counts: Vec<u32>) -> usize {
    let class_index = argmax_lowest(&counts);
    nodes.push(TreeNode::Leaf {
        class_index,
        class_counts: counts,
    });
    nodes.len() - 1
}

/// Index of the maximum, ties to the lowest index (and with sorted class
/// lists, to the lexicographically smallest label).
fn argmax_lowest(counts: &[u32]) -> usize {
    let mut best = 0usize;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

struct Split {
    feature: usize,
    threshold: f64,
    /// Weighted-purity score as an exact rational `num/den`; larger is purer.
    num: u128,
    den: u128,
}

/// Best Gini split over a random candidate feature subset.
///
/// The selection maximizes `ssl/nl + ssr/nr` (sums of squared class counts
/// over child sizes), which orders splits identically to minimizing the
/// weighted child Gini. Comparisons cross-multiply in `u128`, so equal
/// gains are detected exactly and fall back to the candidate encountered
/// first (features ascending, thresholds ascending).
fn find_best_split(
    ctx: &TrainContext<'_>,
    rows: &[u32],
    parent_counts: &[u32],
    rng: &mut SplitMix64,
) -> Option<Split> {
    let n_features = ctx.matrix.n_features();
    let candidates: Vec<usize> = if ctx.features_per_split >= n_features {
        (0..n_features).collect()
    } else {
        rng.sample_indices(n_features, ctx.features_per_split)
    };

    let n = rows.len() as u128;
    let parent_ss: u128 = parent_counts.iter().map(|&c| (c as u128) * (c as u128)).sum();

    let mut best: Option<Split> = None;
    let mut sorted: Vec<(f64, u32)> = Vec::with_capacity(rows.len());
    for &feature in &candidates {
        sorted.clear();
        sorted.extend(rows.iter().map(|&r| (ctx.matrix.rows[r as usize][feature], r)));
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut left = vec![0u32; ctx.n_classes];
        let mut ssl: u128 = 0;
        let mut ssr: u128 = parent_ss;
        let mut right = parent_counts.to_vec();

        for i in 0..sorted.len() - 1 {
            let class = ctx.y[sorted[i].1 as usize] as usize;
            ssl += 2 * left[class] as u128 + 1;
            left[class] += 1;
            ssr -= 2 * right[class] as u128 - 1;
            right[class] -= 1;

            let (a, b) = (sorted[i].0, sorted[i + 1].0);
            if a == b {
                continue;
            }
            let nl = (i + 1) as u128;
            let nr = n - nl;
            let num = ssl * nr + ssr * nl;
            let den = nl * nr;
            // must strictly beat the parent purity ssp/n ...
            if num * n <= parent_ss * den {
                continue;
            }
            // ... and strictly beat the best so far
            if let Some(ref cur) = best {
                if num * cur.den <= cur.num * den {
                    continue;
                }
            }
            best = Some(Split {
                feature,
                threshold: midpoint(a, b),
                num,
                den,
            });
        }
    }
    best
}

/// Midpoint of two distinct ordered values, guarded so that rows with
/// `value <= threshold` are exactly the rows at or below `a` even when
/// rounding would push the midpoint onto `b`.
fn midpoint(a: f64, b: f64) -> f64 {
    let mid = a + (b - a) / 2.0;
    if mid >= a && mid < b {
        mid
    } else {
        a
    }
}

/// Per-class vote counts across all trees; sums to `n_estimators`.
pub fn predict_votes(model: &ForestModel, row: &[f64]) -> Result<Vec<u32>, ForestError> {
    if row.len() != model.device_universe.len() {
        return Err(ForestError::DimensionMismatch {
            expected: model.device_universe.len(),
            got: row.len(),
        });
    }
    let mut votes = vec![0u32; model.classes.len()];
    for tree in &model.trees {
        votes[tree.predict_index(row)] += 1;
    }
    Ok(votes)
}

/// Majority-vote class label; ties go to the lexicographically smallest
/// tied label.
pub fn predict<'m>(model: &'m ForestModel, row: &[f64]) -> Result<&'m str, ForestError> {
    let votes = predict_votes(model, row)?;
    Ok(&model.classes[argmax_lowest(&votes)])
}

/// Fraction of rows whose predicted label equals the row label.
pub fn evaluate(model: &ForestModel, matrix: &FeatureMatrix) -> Result<f64, ForestError> {
    if matrix.device_universe != model.device_universe {
        return Err(ForestError::DimensionMismatch {
            expected: model.device_universe.len(),
            got: matrix.device_universe.len(),
        });
    }
    if matrix.rows.is_empty() {
        return Err(ForestError::EmptyMatrix);
    }
    let mut correct = 0usize;
    for (row, label) in matrix.rows.iter().zip(&matrix.labels) {
        if predict(model, row)? == label {
            correct += 1;
        }
    }
    Ok(correct as f64 / matrix.n_rows() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForestError {
    EmptyMatrix,
    SingleClass,
    DimensionMismatch { expected: usize, got: usize },
    InvalidMaxFeatures { requested: usize, available: usize },
    InvalidConfig(&'static str),
    InvalidMatrix(FeatureError),
}

impl fmt::Display for ForestError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForestError::EmptyMatrix => write!(f, "matrix has no rows"),
            ForestError::SingleClass => write!(f, "training data has fewer than 2 classes"),
            ForestError::DimensionMismatch { expected, got } => {
                write!(f, "expected {expected} features, got {got}")
            }
            ForestError::InvalidMaxFeatures {
                requested,
                available,
            } => write!(
                f,
                "fixed feature count {requested} outside 1..={available}"
            ),
            ForestError::InvalidConfig(why) => write!(f, "invalid forest config: {why}"),
            ForestError::InvalidMatrix(e) => write!(f, "invalid training matrix: {e}"),
        }
    }
}

impl core::error::Error for ForestError {}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::string::ToString;

    fn bssid(n: u8) -> Bssid {
        Bssid::from_octets([2, 0, 0, 0, 0, n])
    }

    /// 1-D matrix: class "a" near `x = -90`, class "b" near `x = -10`.
    fn separable_matrix() -> FeatureMatrix {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..5 {
            rows.push(vec![-90.0 + i as f64]);
            labels.push("a".to_string());
            rows.push(vec![-10.0 - i as f64]);
            labels.push("b".to_string());
        }
        FeatureMatrix {
            device_universe: vec![bssid(1)],
            rows,
            labels,
        }
    }

    #[test]
    fn gini_formula() {
        assert_eq!(gini_impurity(&[2, 2]), 0.5);
        assert_eq!(gini_impurity(&[4, 0]), 0.0);
        assert_eq!(gini_impurity(&[0, 0]), 0.0);
        let g = gini_impurity(&[1, 1, 1, 1]);
        assert!((g - 0.75).abs() < 1e-12);
    }

    #[test]
    fn separable_data_trains_to_perfect_accuracy() {
        let m = separable_matrix();
        let config = ForestConfig {
            n_estimators: 5,
            max_depth: 4,
            max_features: MaxFeatures::All,
            seed: 3,
            min_samples_split: 2,
        };
        let model = train_forest(&m, &config).unwrap();
        assert_eq!(evaluate(&model, &m).unwrap(), 1.0);
        assert_eq!(predict(&model, &[-88.0]).unwrap(), "a");
        assert_eq!(predict(&model, &[-12.0]).unwrap(), "b");
    }

    #[test]
    fn three_tree_forest_on_separable_query() {
        let m = separable_matrix();
        let config = ForestConfig {
            n_estimators: 3,
            max_depth: 3,
            max_features: MaxFeatures::All,
            seed: 11,
            min_samples_split: 2,
        };
        let model = train_forest(&m, &config).unwrap();
        // hand-traceable: every tree must put -10 on the "b" side because
        // the only impurity-reducing splits lie between the clusters
        assert_eq!(predict(&model, &[-10.0]).unwrap(), "b");
        let votes = predict_votes(&model, &[-10.0]).unwrap();
        assert_eq!(votes.iter().sum::<u32>(), 3);
        assert_eq!(votes[1], 3);
    }

    #[test]
    fn majority_and_tie_voting() {
        // hand-built forest: two stumps voting differently -> tie -> "r1"
        let stump = |class_index: usize| DecisionTree {
            nodes: vec![TreeNode::Leaf {
                class_index,
                class_counts: vec![1, 1],
            }],
        };
        let model = ForestModel {
            config: ForestConfig::default(),
            trees: vec![stump(0), stump(1)],
            device_universe: vec![bssid(1)],
            classes: vec!["r1".into(), "r2".into()],
        };
        assert_eq!(predict(&model, &[0.0]).unwrap(), "r1");

        let model3 = ForestModel {
            trees: vec![stump(0), stump(0), stump(1)],
            ..model.clone()
        };
        assert_eq!(predict(&model3, &[0.0]).unwrap(), "r1");
        let model3b = ForestModel {
            trees: vec![stump(1), stump(1), stump(0)],
            ..model
        };
        assert_eq!(predict(&model3b, &[0.0]).unwrap(), "r2");
    }

    #[test]
    fn deterministic_training() {
        let m = separable_matrix();
        let config = ForestConfig {
            n_estimators: 7,
            max_depth: 5,
            max_features: MaxFeatures::Sqrt,
            seed: 42,
            min_samples_split: 2,
        };
        let a = train_forest(&m, &config).unwrap();
        let b = train_forest(&m, &config).unwrap();
        assert_eq!(a, b);
        let c = train_forest(
            &m,
            &ForestConfig {
                seed: 43,
                ..config
            },
        )
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn depth_law() {
        let mut rng = SplitMix64::new(9);
        let rows: Vec<Vec<f64>> = (0..120)
            .map(|_| {
                (0..3)
                    .map(|_| -(rng.bounded(90) as f64))
                    .collect()
            })
            .collect();
        let labels: Vec<String> = (0..120).map(|_| format!("c{}", rng.bounded(4))).collect();
        let m = FeatureMatrix {
            device_universe: vec![bssid(1), bssid(2), bssid(3)],
            rows,
            labels,
        };
        for max_depth in [1, 2, 3, 5] {
            let config = ForestConfig {
                n_estimators: 4,
                max_depth,
                max_features: MaxFeatures::Sqrt,
                seed: 1,
                min_samples_split: 2,
            };
            let model = train_forest(&m, &config).unwrap();
            for tree in &model.trees {
                assert!(tree.depth() <= max_depth);
            }
        }
    }

    #[test]
    fn unlimited_depth_all_features_memorizes_consistent_data() {
        // no duplicate feature vectors with conflicting labels -> 1.0 train
        let mut rng = SplitMix64::new(5);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40 {
            rows.push(vec![-(i as f64), -(rng.bounded(70) as f64)]);
            labels.push(format!("c{}", rng.bounded(5)));
        }
        let m = FeatureMatrix {
            device_universe: vec![bssid(1), bssid(2)],
            rows,
            labels,
        };
        let config = ForestConfig {
            n_estimators: 1,
            max_depth: 64,
            max_features: MaxFeatures::All,
            seed: 0,
            min_samples_split: 2,
        };
        let model = train_forest_with(&m, &config, false, &Sequential).unwrap();
        assert_eq!(evaluate(&model, &m).unwrap(), 1.0);
    }

    #[test]
    fn error_paths() {
        let m = separable_matrix();
        let single = FeatureMatrix {
            device_universe: m.device_universe.clone(),
            rows: m.rows.clone(),
            labels: vec!["a".into(); m.n_rows()],
        };
        assert_eq!(
            train_forest(&single, &ForestConfig::default()),
            Err(ForestError::SingleClass)
        );

        let bad = ForestConfig {
            max_features: MaxFeatures::Fixed(5),
            ..ForestConfig::default()
        };
        assert_eq!(
            train_forest(&m, &bad),
            Err(ForestError::InvalidMaxFeatures {
                requested: 5,
                available: 1
            })
        );

        let model = train_forest(&m, &ForestConfig::default()).unwrap();
        assert!(matches!(
            predict(&model, &[0.0, 0.0]),
            Err(ForestError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn vote_count_law() {
        let m = separable_matrix();
        let mut rng = SplitMix64::new(77);
        for _ in 0..20 {
            let config = ForestConfig {
                n_estimators: 1 + rng.bounded(12) as usize,
                max_depth: 1 + rng.bounded(6) as usize,
                max_features: MaxFeatures::Sqrt,
                seed: rng.next_u64(),
                min_samples_split: 2,
            };
            let model = train_forest(&m, &config).unwrap();
            let row = vec![-(rng.bounded(100) as f64)];
            let votes = predict_votes(&model, &row).unwrap();
            assert_eq!(votes.iter().sum::<u32>() as usize, config.n_estimators);
        }
    }

    #[test]
    fn evaluate_extremes() {
        let m = separable_matrix();
        let config = ForestConfig {
            n_estimators: 9,
            max_depth: 6,
            max_features: MaxFeatures::All,
            seed: 2,
            min_samples_split: 2,
        };
        let model = train_forest(&m, &config).unwrap();
        assert_eq!(evaluate(&model, &m).unwrap(), 1.0);

        let all_wrong = FeatureMatrix {
            device_universe: m.device_universe.clone(),
            rows: m.rows.clone(),
            labels: m
                .labels
                .iter()
                .map(|l| if l == "a" { "b".into() } else { "a".into() })
                .collect(),
        };
        assert_eq!(evaluate(&model, &all_wrong).unwrap(), 0.0);
    }
}
