//! Versioned binary model format.
//!
//! All integers are little-endian; thresholds are IEEE-754 `f64` bit
//! patterns. Layout, in order:
//!
//! ```text
//! magic            8 bytes  b"ROOMLOCF"
//! version          u32      currently 1
//! n_estimators     u32
//! max_depth        u32
//! min_samples_split u32
//! max_features     u8       0 = sqrt, 1 = all, 2 = fixed
//! fixed_k          u32      0 unless max_features = 2
//! seed             u64
//! universe_len     u32      then universe_len × 6 raw bssid octets
//! class_count      u32      then per class: u32 byte length + UTF-8 bytes
//! tree_count       u32      then per tree:
//!   node_count     u32      then per node:
//!     tag          u8       0 = internal, 1 = leaf
//!     internal: feature u32, threshold f64, left u32, right u32
//!     leaf:     class_index u32, class_count × u32 counts
//! ```
//!
//! Node indices refer into the tree's own node array; node 0 is the root.
//! Encoding is deterministic, so equal models produce equal bytes.

use std::path::Path;

use roomloc_core::forest::{DecisionTree, ForestConfig, ForestModel, MaxFeatures, TreeNode};
use roomloc_core::types::Bssid;

use super::FormatError;

const MAGIC: &[u8; 8] = b"ROOMLOCF";
const VERSION: u32 = 1;

pub fn encode(model: &ForestModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    push_u32(&mut out, VERSION);
    push_u32(&mut out, model.config.n_estimators as u32);
    push_u32(&mut out, model.config.max_depth as u32);
    push_u32(&mut out, model.config.min_samples_split as u32);
    let (tag, k) = match model.config.max_features {
        MaxFeatures::Sqrt => (0u8, 0u32),
        MaxFeatures::All => (1, 0),
        MaxFeatures::Fixed(k) => (2, k as u32),
    };
    out.push(tag);
    push_u32(&mut out, k);
    out.extend_from_slice(&model.config.seed.to_le_bytes());

    push_u32(&mut out, model.device_universe.len() as u32);
    for dev in &model.device_universe {
        out.extend_from_slice(&dev.octets());
    }
    push_u32(&mut out, model.classes.len() as u32);
    for class in &model.classes {
        push_u32(&mut out, class.len() as u32);
        out.extend_from_slice(class.as_bytes());
    }
    push_u32(&mut out, model.trees.len() as u32);
    for tree in &model.trees {
        push_u32(&mut out, tree.nodes.len() as u32);
        for node in &tree.nodes {
            match node {
                TreeNode::Internal {
                    feature_index,
                    threshold,
                    left,
                    right,
                } => {
                    out.push(0);
                    push_u32(&mut out, *feature_index as u32);
                    out.extend_from_slice(&threshold.to_le_bytes());
                    push_u32(&mut out, *left as u32);
                    push_u32(&mut out, *right as u32);
                }
                TreeNode::Leaf {
                    class_index,
                    class_counts,
                } => {
                    out.push(1);
                    push_u32(&mut out, *class_index as u32);
                    for count in class_counts {
                        push_u32(&mut out, *count);
                    }
                }
            }
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<ForestModel, FormatError> {
    let mut r = Reader { bytes, at: 0 };
    let magic = r.take(8)?;
    if magic != MAGIC {
        return Err(FormatError::CorruptModel("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(FormatError::VersionMismatch {
            found: version,
            expected: VERSION,
        });
    }
    let n_estimators = r.u32()? as usize;
    let max_depth = r.u32()? as usize;
    let min_samples_split = r.u32()? as usize;
    let tag = r.u8()?;
    let k = r.u32()? as usize;
    let max_features = match tag {
        0 => MaxFeatures::Sqrt,
        1 => MaxFeatures::All,
        2 => MaxFeatures::Fixed(k),
        other => {
            return Err(FormatError::CorruptModel(format!(
                "unknown max-features tag {other}"
            )))
        }
    };
    let seed = r.u64()?;

    let universe_len = r.u32()? as usize;
    let mut device_universe = Vec::with_capacity(universe_len.min(1 << 20));
    for _ in 0..universe_len {
        let octets = r.take(6)?;
        device_universe.push(Bssid::from_octets(octets.try_into().unwrap()));
    }
    let class_count = r.u32()? as usize;
    let mut classes = Vec::with_capacity(class_count.min(1 << 20));
    for _ in 0..class_count {
        let len = r.u32()? as usize;
        let raw = r.take(len)?;
        let class = std::str::from_utf8(raw)
            .map_err(|_| FormatError::CorruptModel("class label is not UTF-8".into()))?;
        classes.push(class.to_string());
    }

    let tree_count = r.u32()? as usize;
    let mut trees = Vec::with_capacity(tree_count.min(1 << 20));
    for _ in 0..tree_count {
        let node_count = r.u32()? as usize;
        if node_count == 0 {
            return Err(FormatError::CorruptModel("tree with no nodes".into()));
        }
        let mut nodes = Vec::with_capacity(node_count.min(1 << 20));
        for _ in 0..node_count {
            let node = match r.u8()? {
                0 => {
                    let feature_index = r.u32()? as usize;
                    let threshold = f64::from_le_bytes(r.take(8)?.try_into().unwrap());
                    let left = r.u32()? as usize;
                    let right = r.u32()? as usize;
                    if feature_index >= device_universe.len()
                        || left >= node_count
                        || right >= node_count
                    {
                        return Err(FormatError::CorruptModel(
                            "node index out of range".into(),
                        ));
                    }
                    TreeNode::Internal {
                        feature_index,
                        threshold,
                        left,
                        right,
                    }
                }
                1 => {
                    let class_index = r.u32()? as usize;
                    if class_index >= class_count {
                        return Err(FormatError::CorruptModel("class index out of range".into()));
                    }
                    let mut class_counts = Vec::with_capacity(class_count);
                    for _ in 0..class_count {
                        class_counts.push(r.u32()?);
                    }
                    TreeNode::Leaf {
                        class_index,
                        class_counts,
                    }
                }
                other => {
                    return Err(FormatError::CorruptModel(format!(
                        "unknown node tag {other}"
                    )))
                }
            };
            nodes.push(node);
        }
        trees.push(DecisionTree { nodes });
    }
    if trees.len() != n_estimators {
        return Err(FormatError::CorruptModel(
            "tree count disagrees with configuration".into(),
        ));
    }
    if r.at != bytes.len() {
        return Err(FormatError::CorruptModel("trailing bytes".into()));
    }

    Ok(ForestModel {
        config: ForestConfig {
            n_estimators,
            max_depth,
            max_features,
            seed,
            min_samples_split,
        },
        trees,
        device_universe,
        classes,
    })
}

pub fn read_file(path: &Path) -> Result<ForestModel, FormatError> {
    decode(&std::fs::read(path)?)
}

pub fn write_file(path: &Path, model: &ForestModel) -> Result<(), FormatError> {
    std::fs::write(path, encode(model))?;
    Ok(())
}

fn push_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        if self.at + n > self.bytes.len() {
            return Err(FormatError::CorruptModel("truncated".into()));
        }
        let slice = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
