//! Random forest with axis-aligned information-gain splits and class-count
//! leaves. Trees train on bootstrap samples; split candidates draw
//! ceil(log2 F) random features (per split by default, per tree as the
//! literal-reading variant).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

const MODEL_MAGIC: &[u8; 8] = b"CGNPFOR1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSampling {
    PerSplit,
    PerTree,
}

#[derive(Debug, Clone, Copy)]
pub struct ForestParams {
    pub trees: usize,
    pub sampling: FeatureSampling,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 500,
            sampling: FeatureSampling::PerSplit,
            min_leaf: 1,
            max_depth: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Node {
    /// Goes left when x[feature] <= threshold. Thresholds are data values,
    /// so strictly monotone feature rescaling preserves the partition.
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        pos: u32,
        total: u32,
    },
}

#[derive(Debug, Clone, Default)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    /// Positive-class fraction of the reached leaf.
    fn leaf_fraction(&self, row: &[f64]) -> f64 {
        let mut i = 0usize;
        loop {
            match self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[feature as usize] <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
                Node::Leaf { pos, total } => {
                    return if total == 0 { 0.0 } else { pos as f64 / total as f64 }
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ForestModel {
    pub n_features: usize,
    pub seed: u64,
    pub params: ForestParams,
    trees: Vec<Tree>,
}

fn binary_entropy(pos: usize, total: usize) -> f64 {
    if total == 0 || pos == 0 || pos == total {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

struct TreeBuilder<'a> {
    rows: &'a [Vec<f64>],
    labels: &'a [bool],
    n_features: usize,
    features_per_split: usize,
    tree_features: Option<Vec<usize>>,
    params: ForestParams,
    nodes: Vec<Node>,
}

impl<'a> TreeBuilder<'a> {
    fn build(&mut self, sample: Vec<u32>, rng: &mut ChaCha8Rng) {
        self.grow(sample, 0, rng);
    }

    fn leaf(&mut self, sample: &[u32]) -> usize {
        let pos = sample.iter().filter(|&&i| self.labels[i as usize]).count();
        self.nodes.push(Node::Leaf {
            pos: pos as u32,
            total: sample.len() as u32,
        });
        self.nodes.len() - 1
    }

    fn grow(&mut self, sample: Vec<u32>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let pos = sample.iter().filter(|&&i| self.labels[i as usize]).count();
        let total = sample.len();
        let depth_capped = self.params.max_depth.map(|d| depth >= d).unwrap_or(false);
        if pos == 0 || pos == total || total <= self.params.min_leaf || depth_capped {
            return self.leaf(&sample);
        }

        let candidates: Vec<usize> = match (&self.tree_features, self.params.sampling) {
            (Some(fixed), FeatureSampling::PerTree) => fixed.clone(),
            _ => sample_features(self.n_features, self.features_per_split, rng),
        };

        let parent_entropy = binary_entropy(pos, total);
        let mut best: Option<(f64, usize, f64)> = None; // (gain, feature, threshold)
        let mut scratch: Vec<(f64, bool)> = Vec::with_capacity(total);
        for &feat in &candidates {
            scratch.clear();
            scratch.extend(
                sample
                    .iter()
                    .map(|&i| (self.rows[i as usize][feat], self.labels[i as usize])),
            );
            scratch.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let mut left_pos = 0usize;
            for cut in 1..total {
                if scratch[cut - 1].1 {
                    left_pos += 1;
                }
                if scratch[cut].0 == scratch[cut - 1].0 {
                    continue;
                }
                let left_n = cut;
                let right_n = total - cut;
                let right_pos = pos - left_pos;
                let child = (left_n as f64 * binary_entropy(left_pos, left_n)
                    + right_n as f64 * binary_entropy(right_pos, right_n))
                    / total as f64;
                let gain = parent_entropy - child;
                let better = match best {
                    None => gain > 1e-12,
                    Some((bg, _, _)) => gain > bg + 1e-15,
                };
                if better {
                    best = Some((gain, feat, scratch[cut - 1].0));
                }
            }
        }

        let Some((_, feature, threshold)) = best else {
            return self.leaf(&sample);
        };

        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = sample
            .into_iter()
            .partition(|&i| self.rows[i as usize][feature] <= threshold);

        let idx = self.nodes.len();
        self.nodes.push(Node::Leaf { pos: 0, total: 0 }); // placeholder
        let left = self.grow(left_rows, depth + 1, rng);
        let right = self.grow(right_rows, depth + 1, rng);
        self.nodes[idx] = Node::Split {
            feature: feature as u32,
            threshold,
            left: left as u32,
            right: right as u32,
        };
        idx
    }
}

fn sample_features(n_features: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n_features).collect();
    all.shuffle(rng);
    all.truncate(k.min(n_features));
    all
}

fn features_per_split(n_features: usize) -> usize {
    ((n_features as f64).log2().ceil() as usize).max(1)
}

/// Train a forest. Each tree fits a bootstrap resample; all randomness
/// derives from `seed`, and trees build in parallel deterministically.
pub fn train_forest(
    rows: &[Vec<f64>],
    labels: &[bool],
    params: &ForestParams,
    seed: u64,
) -> Result<ForestModel> {
    if rows.is_empty() || rows.len() != labels.len() {
        return Err(Error::validation("empty or mismatched training data"));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    if pos == 0 || pos == labels.len() {
        return Err(Error::data(
            "training set has a single class; cannot fit a forest",
        ));
    }
    let n_features = rows[0].len();
    let k = features_per_split(n_features);
    let n = rows.len();

    let trees: Vec<Tree> = (0..params.trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(
                (t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            ));
            let sample: Vec<u32> = (0..n).map(|_| rng.random_range(0..n) as u32).collect();
            let tree_features = match params.sampling {
                FeatureSampling::PerTree => Some(sample_features(n_features, k, &mut rng)),
                FeatureSampling::PerSplit => None,
            };
            let mut builder = TreeBuilder {
                rows,
                labels,
                n_features,
                features_per_split: k,
                tree_features,
                params: *params,
                nodes: Vec::new(),
            };
            builder.build(sample, &mut rng);
            Tree {
                nodes: builder.nodes,
            }
        })
        .collect();

    Ok(ForestModel {
        n_features,
        seed,
        params: *params,
        trees,
    })
}

/// Mean over trees of the reached leaf's positive-class fraction.
pub fn predict_proba(model: &ForestModel, row: &[f64]) -> Result<f64> {
    if row.len() != model.n_features {
        return Err(Error::validation(format!(
            "row has {} features, model expects {}",
            row.len(),
            model.n_features
        )));
    }
    let sum: f64 = model.trees.iter().map(|t| t.leaf_fraction(row)).sum();
    Ok(sum / model.trees.len() as f64)
}

impl ForestModel {
    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MODEL_MAGIC)?;
        w.write_u64::<LittleEndian>(self.n_features as u64)?;
        w.write_u64::<LittleEndian>(self.seed)?;
        w.write_u8(match self.params.sampling {
            FeatureSampling::PerSplit => 0,
            FeatureSampling::PerTree => 1,
        })?;
        w.write_u64::<LittleEndian>(self.params.min_leaf as u64)?;
        w.write_u64::<LittleEndian>(self.params.max_depth.map(|d| d as u64 + 1).unwrap_or(0))?;
        w.write_u64::<LittleEndian>(self.trees.len() as u64)?;
        for tree in &self.trees {
            w.write_u64::<LittleEndian>(tree.nodes.len() as u64)?;
            for node in &tree.nodes {
                match *node {
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        w.write_u8(0)?;
                        w.write_u32::<LittleEndian>(feature)?;
                        w.write_f64::<LittleEndian>(threshold)?;
                        w.write_u32::<LittleEndian>(left)?;
                        w.write_u32::<LittleEndian>(right)?;
                    }
                    Node::Leaf { pos, total } => {
                        w.write_u8(1)?;
                        w.write_u32::<LittleEndian>(pos)?;
                        w.write_u32::<LittleEndian>(total)?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ForestModel> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MODEL_MAGIC {
            return Err(Error::data("bad model file header"));
        }
        let n_features = r.read_u64::<LittleEndian>()? as usize;
        let seed = r.read_u64::<LittleEndian>()?;
        let sampling = match r.read_u8()? {
            0 => FeatureSampling::PerSplit,
            1 => FeatureSampling::PerTree,
            other => return Err(Error::data(format!("bad sampling tag {other}"))),
        };
        let min_leaf = r.read_u64::<LittleEndian>()? as usize;
        let max_depth = match r.read_u64::<LittleEndian>()? {
            0 => None,
            d => Some(d as usize - 1),
        };
        let tree_count = r.read_u64::<LittleEndian>()? as usize;
        let mut trees = Vec::with_capacity(tree_count);
        for _ in 0..tree_count {
            let node_count = r.read_u64::<LittleEndian>()? as usize;
            let mut nodes = Vec::with_capacity(node_count);
            for _ in 0..node_count {
                let node = match r.read_u8()? {
                    0 => Node::Split {
                        feature: r.read_u32::<LittleEndian>()?,
                        threshold: r.read_f64::<LittleEndian>()?,
                        left: r.read_u32::<LittleEndian>()?,
                        right: r.read_u32::<LittleEndian>()?,
                    },
                    1 => Node::Leaf {
                        pos: r.read_u32::<LittleEndian>()?,
                        total: r.read_u32::<LittleEndian>()?,
                    },
                    other => return Err(Error::data(format!("bad node tag {other}"))),
                };
                nodes.push(node);
            }
            trees.push(Tree { nodes });
        }
        Ok(ForestModel {
            n_features,
            seed,
            params: ForestParams {
                trees: tree_count,
                sampling,
                min_leaf,
                max_depth,
            },
            trees,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..20 {
            rows.push(vec![i as f64, (i * 7 % 20) as f64]);
            labels.push(i >= 10);
        }
        (rows, labels)
    }

    #[test]
    fn separable_data_fits_exactly() {
        let (rows, labels) = separable();
        let params = ForestParams {
            trees: 50,
            ..Default::default()
        };
        let model = train_forest(&rows, &labels, &params, 7).unwrap();
        for (row, &label) in rows.iter().zip(&labels) {
            let p = predict_proba(&model, row).unwrap();
            assert_eq!(p > 0.5, label, "row {row:?} p={p}");
        }
    }

    #[test]
    fn single_class_rejected() {
        let rows = vec![vec![1.0], vec![2.0]];
        assert!(train_forest(&rows, &[true, true], &ForestParams::default(), 1).is_err());
    }

    #[test]
    fn deterministic_under_seed() {
        let (rows, labels) = separable();
        let params = ForestParams {
            trees: 20,
            ..Default::default()
        };
        let a = train_forest(&rows, &labels, &params, 42).unwrap();
        let b = train_forest(&rows, &labels, &params, 42).unwrap();
        let probe = vec![4.5, 3.0];
        assert_eq!(
            predict_proba(&a, &probe).unwrap(),
            predict_proba(&b, &probe).unwrap()
        );
        for (ta, tb) in a.trees.iter().zip(&b.trees) {
            assert_eq!(ta.nodes, tb.nodes);
        }
    }

    #[test]
    fn duplicated_rows_same_decisions_off_sample() {
        // duplicating every row preserves the class structure; the fitted
        // decision surface classifies held-out probes identically
        let (rows, labels) = separable();
        let mut rows2 = rows.clone();
        rows2.extend(rows.iter().cloned());
        let mut labels2 = labels.clone();
        labels2.extend(labels.iter().copied());
        let params = ForestParams {
            trees: 100,
            ..Default::default()
        };
        let a = train_forest(&rows, &labels, &params, 9).unwrap();
        let b = train_forest(&rows2, &labels2, &params, 9).unwrap();
        for probe in [vec![2.5, 1.0], vec![16.5, 4.0], vec![0.5, 19.0], vec![18.2, 0.0]] {
            let pa = predict_proba(&a, &probe).unwrap();
            let pb = predict_proba(&b, &probe).unwrap();
            assert_eq!(pa > 0.5, pb > 0.5, "probe {probe:?}: {pa} vs {pb}");
        }
    }

    #[test]
    fn arity_mismatch_rejected() {
        let (rows, labels) = separable();
        let model = train_forest(&rows, &labels, &ForestParams { trees: 5, ..Default::default() }, 1)
            .unwrap();
        assert!(predict_proba(&model, &[1.0]).is_err());
    }

    #[test]
    fn single_leaf_trees_return_leaf_fraction() {
        let tree = Tree {
            nodes: vec![Node::Leaf { pos: 3, total: 4 }],
        };
        let model = ForestModel {
            n_features: 1,
            seed: 0,
            params: ForestParams::default(),
            trees: vec![tree.clone(), tree],
        };
        assert_eq!(predict_proba(&model, &[0.0]).unwrap(), 0.75);
    }

    #[test]
    fn symmetric_extreme_trees_average_to_half() {
        let zero = Tree {
            nodes: vec![Node::Leaf { pos: 0, total: 4 }],
        };
        let one = Tree {
            nodes: vec![Node::Leaf { pos: 4, total: 4 }],
        };
        let mut trees = Vec::new();
        for _ in 0..250 {
            trees.push(zero.clone());
            trees.push(one.clone());
        }
        let model = ForestModel {
            n_features: 1,
            seed: 0,
            params: ForestParams::default(),
            trees,
        };
        assert_eq!(predict_proba(&model, &[0.0]).unwrap(), 0.5);
    }

    #[test]
    fn staircase_hand_trace() {
        // single feature; split at 5 then at 2 on the left
        let nodes = vec![
            Node::Split {
                feature: 0,
                threshold: 5.0,
                left: 1,
                right: 2,
            },
            Node::Split {
                feature: 0,
                threshold: 2.0,
                left: 3,
                right: 4,
            },
            Node::Leaf { pos: 9, total: 10 },
            Node::Leaf { pos: 0, total: 10 },
            Node::Leaf { pos: 5, total: 10 },
        ];
        let tree = Tree { nodes };
        assert_eq!(tree.leaf_fraction(&[1.0]), 0.0);
        assert_eq!(tree.leaf_fraction(&[3.0]), 0.5);
        assert_eq!(tree.leaf_fraction(&[7.0]), 0.9);
    }

    #[test]
    fn model_round_trip() {
        let (rows, labels) = separable();
        let params = ForestParams {
            trees: 10,
            ..Default::default()
        };
        let model = train_forest(&rows, &labels, &params, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        model.save(&path).unwrap();
        let loaded = ForestModel::load(&path).unwrap();
        assert_eq!(loaded.n_features, model.n_features);
        assert_eq!(loaded.tree_count(), model.tree_count());
        let probe = vec![8.5, 2.0];
        assert_eq!(
            predict_proba(&model, &probe).unwrap(),
            predict_proba(&loaded, &probe).unwrap()
        );
    }
}
