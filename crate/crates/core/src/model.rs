//! Gradient-boosted trees with logistic loss over binary items.
//!
//! Trees split on item presence only. Leaf weights are second-order Newton
//! steps `-G / (H + λ)` with a fixed `λ = 1`; splits are chosen by exact
//! greedy search and need both children to reach `min_child_weight` total
//! hessian. Training has no stochastic component, so a fixed dataset and
//! configuration always produce the same ensemble.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Item, Label};
use crate::error::{Error, Result};

const L2: f64 = 1.0;
const MIN_GAIN: f64 = 1e-12;

pub const MODEL_FORMAT: &str = "shapfold-model";
pub const MODEL_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_child_weight: f64,
    /// Recorded for provenance. Training is deterministic and draws no
    /// random numbers.
    pub seed: u64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig {
            rounds: 50,
            max_depth: 3,
            learning_rate: 0.3,
            min_child_weight: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        score: f64,
    },
    Split {
        item: usize,
        present: Box<TreeNode>,
        absent: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn leaf(score: f64) -> Self {
        TreeNode::Leaf { score }
    }

    pub fn split(item: usize, present: TreeNode, absent: TreeNode) -> Self {
        TreeNode::Split {
            item,
            present: Box::new(present),
            absent: Box::new(absent),
        }
    }

    pub fn eval(&self, bits: &[bool]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { score } => return *score,
                TreeNode::Split {
                    item,
                    present,
                    absent,
                } => {
                    node = if bits[*item] { present } else { absent };
                }
            }
        }
    }

    /// Number of split levels on the longest path (a lone leaf has depth 0).
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split {
                present, absent, ..
            } => 1 + present.depth().max(absent.depth()),
        }
    }

    /// Items this tree splits on.
    pub fn items(&self, out: &mut BTreeSet<usize>) {
        if let TreeNode::Split {
            item,
            present,
            absent,
        } = self
        {
            out.insert(*item);
            present.items(out);
            absent.items(out);
        }
    }

    fn max_item(&self) -> Option<usize> {
        let mut s = BTreeSet::new();
        self.items(&mut s);
        s.last().copied()
    }
}

/// `sigmoid(base_score + learning_rate * Σ trees)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub trees: Vec<TreeNode>,
    pub base_score: f64,
    pub learning_rate: f64,
    pub item_count: usize,
}

pub fn sigmoid(x: f64) -> f64 {
    let p = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    // largest double strictly below one
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

impl TreeEnsemble {
    fn check(&self, bits: &[bool]) -> Result<()> {
        if bits.len() != self.item_count {
            return Err(Error::DimensionMismatch {
                expected: self.item_count,
                found: bits.len(),
            });
        }
        Ok(())
    }

    /// Raw log-odds output. Panics if `bits` is shorter than the schema.
    pub fn margin(&self, bits: &[bool]) -> f64 {
        self.base_score + self.learning_rate * self.trees.iter().map(|t| t.eval(bits)).sum::<f64>()
    }

    pub fn predict_proba(&self, bits: &[bool]) -> Result<f64> {
        self.check(bits)?;
        Ok(sigmoid(self.margin(bits)))
    }

    pub fn predict(&self, bits: &[bool]) -> Result<Label> {
        Ok(if self.predict_proba(bits)? >= 0.5 {
            Label::Positive
        } else {
            Label::Negative
        })
    }

    /// Items any tree splits on.
    pub fn used_items(&self) -> BTreeSet<usize> {
        let mut s = BTreeSet::new();
        for t in &self.trees {
            t.items(&mut s);
        }
        s
    }

    /// Mean logistic loss after each boosting round; entry 0 is the base
    /// score alone.
    pub fn staged_log_loss(&self, data: &Dataset) -> Vec<f64> {
        let mut margins = vec![self.base_score; data.len()];
        let mut out = Vec::with_capacity(self.trees.len() + 1);
        out.push(mean_log_loss(&margins, data));
        for tree in &self.trees {
            for (m, e) in margins.iter_mut().zip(&data.examples) {
                *m += self.learning_rate * tree.eval(&e.bits);
            }
            out.push(mean_log_loss(&margins, data));
        }
        out
    }

    pub fn accuracy(&self, data: &Dataset) -> Result<f64> {
        let mut hits = 0usize;
        for e in &data.examples {
            if self.predict(&e.bits)? == e.label {
                hits += 1;
            }
        }
        Ok(hits as f64 / data.len().max(1) as f64)
    }
}

fn log1pexp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn mean_log_loss(margins: &[f64], data: &Dataset) -> f64 {
    let total: f64 = margins
        .iter()
        .zip(&data.examples)
        .map(|(&m, e)| {
            if e.label.is_positive() {
                log1pexp(-m)
            } else {
                log1pexp(m)
            }
        })
        .sum();
    total / margins.len().max(1) as f64
}

struct Grower<'a> {
    data: &'a Dataset,
    grad: &'a [f64],
    hess: &'a [f64],
    config: &'a BoostConfig,
}

impl Grower<'_> {
    fn grow(&self, samples: &[usize], depth: usize) -> TreeNode {
        let g: f64 = samples.iter().map(|&i| self.grad[i]).sum();
        let h: f64 = samples.iter().map(|&i| self.hess[i]).sum();
        let leaf = TreeNode::leaf(-g / (h + L2));
        if depth >= self.config.max_depth {
            return leaf;
        }

        let n_items = self.data.item_count();
        let mut g_present = vec![0.0; n_items];
        let mut h_present = vec![0.0; n_items];
        for &i in samples {
            for (j, &bit) in self.data.examples[i].bits.iter().enumerate() {
                if bit {
                    g_present[j] += self.grad[i];
                    h_present[j] += self.hess[i];
                }
            }
        }

        let parent = g * g / (h + L2);
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n_items {
            let (gl, hl) = (g_present[j], h_present[j]);
            let (gr, hr) = (g - gl, h - hl);
            if hl < self.config.min_child_weight || hr < self.config.min_child_weight {
                continue;
            }
            let gain = gl * gl / (hl + L2) + gr * gr / (hr + L2) - parent;
            if gain > MIN_GAIN && best.is_none_or(|(_, b)| gain > b) {
                best = Some((j, gain));
            }
        }

        let Some((item, _)) = best else { return leaf };
        let (present, absent): (Vec<usize>, Vec<usize>) = samples
            .iter()
            .partition(|&&i| self.data.examples[i].bits[item]);
        TreeNode::split(
            item,
            self.grow(&present, depth + 1),
            self.grow(&absent, depth + 1),
        )
    }
}

/// Fits a boosted ensemble with logistic loss.
pub fn train(data: &Dataset, config: &BoostConfig) -> Result<TreeEnsemble> {
    if !(config.learning_rate > 0.0) || config.min_child_weight < 0.0 {
        return Err(Error::InvalidArgument(
            "learning_rate must be positive and min_child_weight non-negative".into(),
        ));
    }
    let n = data.len();
    let n_pos = data
        .examples
        .iter()
        .filter(|e| e.label.is_positive())
        .count();
    if n_pos == 0 || n_pos == n {
        return Err(Error::SingleClass);
    }
    let rate = n_pos as f64 / n as f64;
    let base_score = (rate / (1.0 - rate)).ln();

    let targets: Vec<f64> = data
        .examples
        .iter()
        .map(|e| if e.label.is_positive() { 1.0 } else { 0.0 })
        .collect();
    let mut margins = vec![base_score; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let all: Vec<usize> = (0..n).collect();
    let mut trees = Vec::with_capacity(config.rounds);

    for _ in 0..config.rounds {
        for i in 0..n {
            let p = sigmoid(margins[i]);
            grad[i] = p - targets[i];
            hess[i] = p * (1.0 - p);
        }
        let tree = Grower {
            data,
            grad: &grad,
            hess: &hess,
            config,
        }
        .grow(&all, 0);
        for (m, e) in margins.iter_mut().zip(&data.examples) {
            *m += config.learning_rate * tree.eval(&e.bits);
        }
        trees.push(tree);
    }

    Ok(TreeEnsemble {
        trees,
        base_score,
        learning_rate: config.learning_rate,
        item_count: data.item_count(),
    })
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    format: String,
    version: u64,
    base_score: f64,
    learning_rate: f64,
    item_count: usize,
    items: Vec<Item>,
    trees: Vec<TreeNode>,
}

/// Serializes the ensemble and its item table as a versioned JSON document.
pub fn model_to_json(model: &TreeEnsemble, items: &[Item]) -> Result<String> {
    if !items.is_empty() && items.len() != model.item_count {
        return Err(Error::DimensionMismatch {
            expected: model.item_count,
            found: items.len(),
        });
    }
    let doc = ModelDoc {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        base_score: model.base_score,
        learning_rate: model.learning_rate,
        item_count: model.item_count,
        items: items.to_vec(),
        trees: model.trees.clone(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn model_from_json(text: &str) -> Result<(TreeEnsemble, Vec<Item>)> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
    if value.get("format").and_then(|f| f.as_str()) != Some(MODEL_FORMAT) {
        return Err(Error::ModelFormat("missing or wrong `format` tag".into()));
    }
    let version = value
        .get("version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::ModelFormat("missing `version`".into()))?;
    if version != MODEL_VERSION {
        return Err(Error::ModelVersion {
            found: version,
            supported: MODEL_VERSION,
        });
    }
    let doc: ModelDoc =
        serde_json::from_value(value).map_err(|e| Error::ModelFormat(e.to_string()))?;
    if let Some(bad) = doc
        .trees
        .iter()
        .filter_map(TreeNode::max_item)
        .find(|&i| i >= doc.item_count)
    {
        return Err(Error::ModelFormat(format!(
            "split on item {bad} but item_count is {}",
            doc.item_count
        )));
    }
    Ok((
        TreeEnsemble {
            trees: doc.trees,
            base_score: doc.base_score,
            learning_rate: doc.learning_rate,
            item_count: doc.item_count,
        },
        doc.items,
    ))
}

pub fn save_model(model: &TreeEnsemble, items: &[Item], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model_to_json(model, items)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(TreeEnsemble, Vec<Item>)> {
    let path = path.as_ref();
    model_from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Example;

    fn dataset(rows: &[(&[bool], bool, usize)]) -> Dataset {
        let width = rows[0].0.len();
        let mut examples = Vec::new();
        for &(bits, pos, copies) in rows {
            for _ in 0..copies {
                examples.push(Example {
                    id: examples.len(),
                    label: if pos {
                        Label::Positive
                    } else {
                        Label::Negative
                    },
                    bits: bits.to_vec(),
                });
            }
        }
        Dataset {
            items: (0..width)
                .map(|i| Item::present(format!("f{i}"), "1"))
                .collect(),
            examples,
        }
    }

    /// XOR over two items with unequal pattern counts so the first split has
    /// non-zero gain.
    fn xor() -> Dataset {
        dataset(&[
            (&[false, false], false, 10),
            (&[false, true], true, 20),
            (&[true, false], true, 10),
            (&[true, true], false, 30),
        ])
    }

    #[test]
    fn learns_xor() {
        let cfg = BoostConfig {
            rounds: 20,
            max_depth: 2,
            ..Default::default()
        };
        let model = train(&xor(), &cfg).unwrap();
        for (bits, expect) in [
            ([false, false], false),
            ([false, true], true),
            ([true, false], true),
            ([true, true], false),
        ] {
            let p = model.predict_proba(&bits).unwrap();
            assert_eq!(p >= 0.5, expect, "{bits:?} -> {p}");
        }
        assert_eq!(model.accuracy(&xor()).unwrap(), 1.0);
        assert!(model.trees.iter().all(|t| t.depth() <= 2));
    }

    #[test]
    fn zero_rounds_predicts_positive_rate() {
        let cfg = BoostConfig {
            rounds: 0,
            ..Default::default()
        };
        let model = train(&xor(), &cfg).unwrap();
        let p = model.predict_proba(&[true, false]).unwrap();
        assert!((p - 30.0 / 70.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic() {
        let cfg = BoostConfig::default();
        assert_eq!(train(&xor(), &cfg).unwrap(), train(&xor(), &cfg).unwrap());
    }

    #[test]
    fn single_class_rejected() {
        let ds = dataset(&[(&[true], true, 3)]);
        assert!(matches!(
            train(&ds, &BoostConfig::default()),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn hand_built_predictions() {
        let empty = TreeEnsemble {
            trees: vec![],
            base_score: 0.0,
            learning_rate: 1.0,
            item_count: 4,
        };
        assert_eq!(empty.predict_proba(&[false; 4]).unwrap(), 0.5);

        let saturated = TreeEnsemble {
            trees: vec![TreeNode::leaf(1e6)],
            ..empty.clone()
        };
        let p = saturated.predict_proba(&[false; 4]).unwrap();
        assert!(p > 1.0 - 1e-12 && p < 1.0);

        let stump = TreeEnsemble {
            trees: vec![TreeNode::split(
                3,
                TreeNode::leaf(1.0),
                TreeNode::leaf(-1.0),
            )],
            ..empty
        };
        let on = stump.predict_proba(&[false, false, false, true]).unwrap();
        let off = stump.predict_proba(&[true, true, true, false]).unwrap();
        assert!((on - 0.731_058_578_630_004_9).abs() < 1e-12);
        assert!((off - 0.268_941_421_369_995_1).abs() < 1e-12);
        assert!(matches!(
            stump.predict_proba(&[true]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn loss_never_increases() {
        let model = train(&xor(), &BoostConfig::default()).unwrap();
        let losses = model.staged_log_loss(&xor());
        for w in losses.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{w:?}");
        }
    }

    #[test]
    fn persistence_errors() {
        let model = train(&xor(), &BoostConfig::default()).unwrap();
        let text = model_to_json(&model, &xor().items).unwrap();
        let (back, items) = model_from_json(&text).unwrap();
        assert_eq!(back, model);
        assert_eq!(items, xor().items);

        let truncated = &text[..text.len() / 2];
        assert!(matches!(
            model_from_json(truncated),
            Err(Error::ModelFormat(_))
        ));

        let future = text.replacen("\"version\": 1", "\"version\": 7", 1);
        assert!(matches!(
            model_from_json(&future),
            Err(Error::ModelVersion { found: 7, .. })
        ));

        let bad_item = text.replacen("\"item_count\": 2", "\"item_count\": 0", 1);
        assert!(matches!(
            model_from_json(&bad_item),
            Err(Error::ModelFormat(_))
        ));
    }
}
