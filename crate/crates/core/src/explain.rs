//! Interventional Shapley attributions over items.
//!
//! The value of a coalition `S` is the model output averaged over background
//! rows, with items in `S` taken from the explained example and the remaining
//! players taken from the background row. Items outside the player set keep
//! the example's value.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Item};
use crate::error::{Error, Result};
use crate::model::{TreeEnsemble, TreeNode};

pub const EXACT_CAP: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainConfig {
    /// Largest player count enumerated exactly.
    pub exact_cap: usize,
    pub permutations: usize,
    pub background_size: usize,
    pub seed: u64,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            exact_cap: EXACT_CAP,
            permutations: 2048,
            background_size: 128,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapMode {
    Exact,
    Sampled { permutations: usize, seed: u64 },
}

/// One attribution row per explained example, columns in item order.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapMatrix {
    pub example_ids: Vec<usize>,
    pub attributions: Vec<Vec<f64>>,
    pub base_value: f64,
    pub mode: ShapMode,
    /// Largest per-entry standard error of the sampled estimate (0 when exact).
    pub max_std_error: f64,
}

/// Permutation-sampling estimate and its per-player standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapleyEstimate {
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
}

fn check_inputs(example: &[bool], background: &[Vec<bool>], players: &[usize]) -> Result<()> {
    if background.is_empty() {
        return Err(Error::EmptyBackground);
    }
    for row in background {
        if row.len() != example.len() {
            return Err(Error::DimensionMismatch {
                expected: example.len(),
                found: row.len(),
            });
        }
    }
    if let Some(&bad) = players.iter().find(|&&p| p >= example.len()) {
        return Err(Error::InvalidArgument(format!(
            "player item {bad} out of range"
        )));
    }
    Ok(())
}

/// `|S|! (n - |S| - 1)! / n!` for every coalition size `|S|` in `0..n`.
fn shapley_weights(n: usize) -> Vec<f64> {
    let mut fact = vec![1.0f64; n + 1];
    for k in 1..=n {
        fact[k] = fact[k - 1] * k as f64;
    }
    (0..n)
        .map(|s| fact[s] * fact[n - s - 1] / fact[n])
        .collect()
}

/// Background rows projected onto the players, with multiplicities.
fn grouped_background(background: &[Vec<bool>], players: &[usize]) -> Vec<(Vec<bool>, f64)> {
    let mut groups: BTreeMap<Vec<bool>, usize> = BTreeMap::new();
    for row in background {
        *groups
            .entry(players.iter().map(|&p| row[p]).collect())
            .or_default() += 1;
    }
    let total = background.len() as f64;
    groups
        .into_iter()
        .map(|(k, c)| (k, c as f64 / total))
        .collect()
}

/// Exact attributions for `players` by enumerating every coalition.
pub fn shapley_exact<F>(
    oracle: F,
    example: &[bool],
    background: &[Vec<bool>],
    players: &[usize],
) -> Result<Vec<f64>>
where
    F: Fn(&[bool]) -> f64,
{
    check_inputs(example, background, players)?;
    let n = players.len();
    if n > EXACT_CAP {
        return Err(Error::TooManyItems {
            count: n,
            cap: EXACT_CAP,
        });
    }
    if n == 0 {
        return Ok(vec![]);
    }

    let mut value = vec![0.0f64; 1 << n];
    let mut z = example.to_vec();
    for (row, weight) in grouped_background(background, players) {
        for (mask, v) in value.iter_mut().enumerate() {
            for (k, &p) in players.iter().enumerate() {
                z[p] = if mask >> k & 1 == 1 {
                    example[p]
                } else {
                    row[k]
                };
            }
            *v += weight * oracle(&z);
        }
    }

    let w = shapley_weights(n);
    let mut phi = vec![0.0; n];
    for mask in 0..(1usize << n) {
        let size = mask.count_ones() as usize;
        for (k, slot) in phi.iter_mut().enumerate() {
            if mask >> k & 1 == 0 {
                *slot += w[size] * (value[mask | 1 << k] - value[mask]);
            }
        }
    }
    Ok(phi)
}

/// Monte-Carlo estimate over `permutations` seeded player orderings. Each
/// ordering telescopes from the all-background hybrid to the example, so
/// the efficiency identity holds for every sample.
pub fn shapley_sampled<F>(
    oracle: F,
    example: &[bool],
    background: &[Vec<bool>],
    players: &[usize],
    permutations: usize,
    seed: u64,
) -> Result<ShapleyEstimate>
where
    F: Fn(&[bool]) -> f64,
{
    check_inputs(example, background, players)?;
    if permutations == 0 {
        return Err(Error::InvalidArgument(
            "permutations must be at least 1".into(),
        ));
    }
    let n = players.len();
    let groups = grouped_background(background, players);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut sum = vec![0.0f64; n];
    let mut sum_sq = vec![0.0f64; n];
    let mut contrib = vec![0.0f64; n];
    let mut z = example.to_vec();

    for _ in 0..permutations {
        order.shuffle(&mut rng);
        contrib.iter_mut().for_each(|c| *c = 0.0);
        for (row, weight) in &groups {
            for (k, &p) in players.iter().enumerate() {
                z[p] = row[k];
            }
            let mut prev = oracle(&z);
            for &k in &order {
                let p = players[k];
                if z[p] == example[p] {
                    continue;
                }
                z[p] = example[p];
                let cur = oracle(&z);
                contrib[k] += weight * (cur - prev);
                prev = cur;
            }
        }
        for k in 0..n {
            sum[k] += contrib[k];
            sum_sq[k] += contrib[k] * contrib[k];
        }
    }

    let m = permutations as f64;
    let values: Vec<f64> = sum.iter().map(|s| s / m).collect();
    let std_errors = if permutations > 1 {
        (0..n)
            .map(|k| {
                let var = ((sum_sq[k] - m * values[k] * values[k]) / (m - 1.0)).max(0.0);
                (var / m).sqrt()
            })
            .collect()
    } else {
        vec![0.0; n]
    };
    Ok(ShapleyEstimate { values, std_errors })
}

/// Deterministic background draw of up to `size` rows.
pub fn sample_background(source: &Dataset, size: usize, seed: u64) -> Vec<Vec<bool>> {
    let mut positions: Vec<usize> = (0..source.len()).collect();
    if positions.len() > size {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        positions.shuffle(&mut rng);
        positions.truncate(size);
        positions.sort_unstable();
    }
    positions
        .iter()
        .map(|&p| source.examples[p].bits.clone())
        .collect()
}

/// splitmix64 finalizer; per-example seeds depend only on (seed, id).
fn mix_seed(seed: u64, id: usize) -> u64 {
    let mut z = seed ^ (id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A tree rewritten over its own items, evaluated on a bit pattern.
struct LocalTree {
    items: Vec<usize>,
    root: LocalNode,
}

enum LocalNode {
    Leaf(f64),
    Split(usize, Box<LocalNode>, Box<LocalNode>),
}

impl LocalNode {
    fn from_tree(node: &TreeNode, items: &[usize]) -> Self {
        match node {
            TreeNode::Leaf { score } => LocalNode::Leaf(*score),
            TreeNode::Split {
                item,
                present,
                absent,
            } => LocalNode::Split(
                items.binary_search(item).unwrap(),
                Box::new(Self::from_tree(present, items)),
                Box::new(Self::from_tree(absent, items)),
            ),
        }
    }

    fn eval(&self, pattern: u32) -> f64 {
        let mut node = self;
        loop {
            match node {
                LocalNode::Leaf(s) => return *s,
                LocalNode::Split(k, present, absent) => {
                    node = if pattern >> k & 1 == 1 {
                        present
                    } else {
                        absent
                    };
                }
            }
        }
    }
}

impl LocalTree {
    fn new(tree: &TreeNode) -> Self {
        let mut set = BTreeSet::new();
        tree.items(&mut set);
        let items: Vec<usize> = set.into_iter().collect();
        let root = LocalNode::from_tree(tree, &items);
        LocalTree { items, root }
    }

    fn pattern(&self, bits: &[bool]) -> u32 {
        self.items
            .iter()
            .enumerate()
            .fold(0, |acc, (k, &i)| acc | (bits[i] as u32) << k)
    }

    /// Exact Shapley values of this tree's single-background-row game.
    /// Only items where the two patterns differ are non-null players.
    fn pair_shapley(&self, x: u32, b: u32, weights: &[Vec<f64>], out: &mut [f64], scale: f64) {
        let diff = x ^ b;
        if diff == 0 {
            return;
        }
        let players: Vec<usize> = (0..self.items.len())
            .filter(|k| diff >> k & 1 == 1)
            .collect();
        let n = players.len();
        let w = &weights[n];
        let hybrid = |mask: usize| {
            let mut z = b;
            for (j, &k) in players.iter().enumerate() {
                if mask >> j & 1 == 1 {
                    z ^= 1 << k;
                }
            }
            z
        };
        let values: Vec<f64> = (0..1usize << n)
            .map(|m| self.root.eval(hybrid(m)))
            .collect();
        for mask in 0..(1usize << n) {
            let size = mask.count_ones() as usize;
            for (j, &k) in players.iter().enumerate() {
                if mask >> j & 1 == 0 {
                    out[k] += scale * w[size] * (values[mask | 1 << j] - values[mask]);
                }
            }
        }
    }
}

/// Attributions of the ensemble's log-odds output for every example of
/// `data`, against a seeded background drawn from `background_source`.
///
/// The margin is a sum of trees, so its Shapley values are the sums of the
/// per-tree values. When every tree splits on at most `exact_cap` items the
/// per-tree games are enumerated exactly; otherwise each example is
/// estimated with [`shapley_sampled`] on the full margin.
pub fn explain_dataset(
    model: &TreeEnsemble,
    data: &Dataset,
    background_source: &Dataset,
    config: &ExplainConfig,
) -> Result<ShapMatrix> {
    for ds in [data, background_source] {
        if ds.item_count() != model.item_count {
            return Err(Error::DimensionMismatch {
                expected: model.item_count,
                found: ds.item_count(),
            });
        }
    }
    let background = sample_background(background_source, config.background_size, config.seed);
    if background.is_empty() {
        return Err(Error::EmptyBackground);
    }
    let base_value =
        background.iter().map(|b| model.margin(b)).sum::<f64>() / background.len() as f64;
    let example_ids = data.examples.iter().map(|e| e.id).collect();

    let locals: Vec<LocalTree> = model.trees.iter().map(LocalTree::new).collect();
    let widest = locals.iter().map(|t| t.items.len()).max().unwrap_or(0);

    if widest <= config.exact_cap.min(EXACT_CAP) {
        let weights: Vec<Vec<f64>> = (0..=widest).map(shapley_weights).collect();
        let mut attributions = vec![vec![0.0; model.item_count]; data.len()];
        for tree in &locals {
            let mut bg: BTreeMap<u32, usize> = BTreeMap::new();
            for b in &background {
                *bg.entry(tree.pattern(b)).or_default() += 1;
            }
            let scale = model.learning_rate / background.len() as f64;
            let mut cache: HashMap<u32, Vec<f64>> = HashMap::new();
            for (row, e) in attributions.iter_mut().zip(&data.examples) {
                let x = tree.pattern(&e.bits);
                let local = cache.entry(x).or_insert_with(|| {
                    let mut out = vec![0.0; tree.items.len()];
                    for (&b, &count) in &bg {
                        tree.pair_shapley(x, b, &weights, &mut out, scale * count as f64);
                    }
                    out
                });
                for (k, &item) in tree.items.iter().enumerate() {
                    row[item] += local[k];
                }
            }
        }
        return Ok(ShapMatrix {
            example_ids,
            attributions,
            base_value,
            mode: ShapMode::Exact,
            max_std_error: 0.0,
        });
    }

    let players: Vec<usize> = model.used_items().into_iter().collect();
    let oracle = |bits: &[bool]| model.margin(bits);
    let mut attributions = Vec::with_capacity(data.len());
    let mut max_std_error = 0.0f64;
    for e in &data.examples {
        let est = shapley_sampled(
            oracle,
            &e.bits,
            &background,
            &players,
            config.permutations,
            mix_seed(config.seed, e.id),
        )?;
        let mut row = vec![0.0; model.item_count];
        for (k, &p) in players.iter().enumerate() {
            row[p] = est.values[k];
        }
        max_std_error = est.std_errors.iter().copied().fold(max_std_error, f64::max);
        attributions.push(row);
    }
    Ok(ShapMatrix {
        example_ids,
        attributions,
        base_value,
        mode: ShapMode::Sampled {
            permutations: config.permutations,
            seed: config.seed,
        },
        max_std_error,
    })
}

const BASE_ROW: &str = "base_value";

impl ShapMatrix {
    pub fn item_count(&self) -> usize {
        self.attributions.first().map_or(0, Vec::len)
    }

    /// Rows reordered to follow `data`'s examples, matched by id.
    pub fn aligned_to(&self, data: &Dataset) -> Result<ShapMatrix> {
        if !self.attributions.is_empty() && self.item_count() != data.item_count() {
            return Err(Error::DimensionMismatch {
                expected: data.item_count(),
                found: self.item_count(),
            });
        }
        let index: HashMap<usize, usize> = self
            .example_ids
            .iter()
            .enumerate()
            .map(|(i, &id)| (id, i))
            .collect();
        let mut attributions = Vec::with_capacity(data.len());
        for e in &data.examples {
            let &row = index
                .get(&e.id)
                .ok_or_else(|| Error::Schema(format!("no attribution row for example {}", e.id)))?;
            attributions.push(self.attributions[row].clone());
        }
        Ok(ShapMatrix {
            example_ids: data.examples.iter().map(|e| e.id).collect(),
            attributions,
            ..self.clone()
        })
    }

    /// CSV with a header of item labels, a `base_value` row, then one row
    /// per example: id followed by attributions in item order.
    pub fn write_csv<W: Write>(&self, items: &[Item], writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["example_id".to_string()];
        header.extend(items.iter().map(Item::to_string));
        w.write_record(&header)?;
        let mut base = vec![BASE_ROW.to_string(), format!("{}", self.base_value)];
        base.resize(header.len(), String::new());
        w.write_record(&base)?;
        for (id, row) in self.example_ids.iter().zip(&self.attributions) {
            let mut rec = vec![id.to_string()];
            rec.extend(row.iter().map(|v| format!("{v}")));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }

    /// Reads [`ShapMatrix::write_csv`] output; the `base_value` row is
    /// optional. Imported matrices are tagged exact.
    pub fn read_csv<R: Read>(reader: R, item_count: usize) -> Result<ShapMatrix> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let width = rdr.headers()?.len();
        if width != item_count + 1 {
            return Err(Error::ShapFormat {
                line: 1,
                message: format!("expected {} columns, found {width}", item_count + 1),
            });
        }
        let mut out = ShapMatrix {
            example_ids: vec![],
            attributions: vec![],
            base_value: 0.0,
            mode: ShapMode::Exact,
            max_std_error: 0.0,
        };
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec?;
            let bad = |message: String| Error::ShapFormat { line, message };
            let id = rec.get(0).unwrap_or("").trim();
            if id == BASE_ROW {
                out.base_value = rec
                    .get(1)
                    .unwrap_or("")
                    .trim()
                    .parse()
                    .map_err(|_| bad("unparsable base value".into()))?;
                continue;
            }
            if rec.len() != width {
                return Err(bad(format!("expected {width} cells, found {}", rec.len())));
            }
            out.example_ids.push(
                id.parse()
                    .map_err(|_| bad(format!("bad example id `{id}`")))?,
            );
            let row = rec
                .iter()
                .skip(1)
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|_| bad(format!("bad number `{c}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            out.attributions.push(row);
        }
        Ok(out)
    }
}
