//! Utility transactions built from attributions.
//!
//! Each example becomes one transaction whose entries are the literals that
//! push the model toward the requested class, weighted by their attribution.
//! Attributions are divided by the largest kept value in the whole database
//! and quantized to integers, so scaling the raw attributions by any
//! positive constant leaves the database unchanged.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Polarity};
use crate::error::{Error, Result};
use crate::explain::ShapMatrix;

pub const UTILITY_SCALE: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    TowardPositive,
    TowardNegative,
}

impl Orientation {
    pub fn flip(self) -> Self {
        match self {
            Orientation::TowardPositive => Orientation::TowardNegative,
            Orientation::TowardNegative => Orientation::TowardPositive,
        }
    }

    fn sign(self) -> f64 {
        match self {
            Orientation::TowardPositive => 1.0,
            Orientation::TowardNegative => -1.0,
        }
    }
}

/// How attributions map onto transaction entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiteralMode {
    /// Item attributions are summed per original feature and credited to
    /// the value the example actually has. Literal indices are item indices.
    FeatureValue,
    /// Every item is its own literal: present items keep their index, absent
    /// items with a useful attribution enter as `item_count + index`.
    Signed,
}

/// Decodes a literal index of a [`LiteralMode::Signed`] database.
pub fn signed_literal(index: usize, item_count: usize) -> (usize, Polarity) {
    if index < item_count {
        (index, Polarity::Present)
    } else {
        (index - item_count, Polarity::Absent)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub example_id: usize,
    /// `(literal index, utility)`, sorted by index.
    pub entries: Vec<(usize, u64)>,
}

impl Transaction {
    pub fn utility(&self) -> u64 {
        self.entries.iter().map(|e| e.1).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransactionDB {
    pub transactions: Vec<Transaction>,
    pub item_count: usize,
    pub utility_scale: u64,
    /// Display names for literal indices; empty means "use the index".
    pub item_names: Vec<String>,
}

impl TransactionDB {
    pub fn new(transactions: Vec<Transaction>, item_count: usize) -> Self {
        TransactionDB {
            transactions,
            item_count,
            utility_scale: 1,
            item_names: vec![],
        }
    }

    pub fn name(&self, item: usize) -> String {
        self.item_names
            .get(item)
            .cloned()
            .unwrap_or_else(|| item.to_string())
    }

    /// Renders in the SPMF layout `items:total:utilities`, one line per
    /// non-empty transaction.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in self.transactions.iter().filter(|t| !t.entries.is_empty()) {
            let items: Vec<String> = t.entries.iter().map(|e| self.name(e.0)).collect();
            let utils: Vec<String> = t.entries.iter().map(|e| e.1.to_string()).collect();
            let _ = writeln!(
                out,
                "{}:{}:{}",
                items.join(" "),
                t.utility(),
                utils.join(" ")
            );
        }
        out
    }

    /// Parses the SPMF layout. Spaces around the separators are allowed and
    /// lines starting with `#`, `%` or `@` are skipped. If every item token
    /// is an integer it is used as the index; otherwise tokens are named
    /// items indexed in lexicographic order.
    pub fn parse(text: &str) -> Result<TransactionDB> {
        let mut rows: Vec<(Vec<&str>, Vec<u64>)> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with(['#', '%', '@']) {
                continue;
            }
            let bad = |message: String| Error::DbFormat {
                line: line_no,
                message,
            };
            let parts: Vec<&str> = line.split(':').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(bad(format!(
                    "expected `items:total:utilities`, found {} fields",
                    parts.len()
                )));
            }
            let items: Vec<&str> = parts[0].split_whitespace().collect();
            let total: u64 = parts[1]
                .parse()
                .map_err(|_| bad(format!("bad total utility `{}`", parts[1])))?;
            let utils = parts[2]
                .split_whitespace()
                .map(|u| {
                    u.parse::<u64>()
                        .map_err(|_| bad(format!("bad utility `{u}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            if items.len() != utils.len() {
                return Err(bad(format!(
                    "{} items but {} utilities",
                    items.len(),
                    utils.len()
                )));
            }
            if utils.iter().sum::<u64>() != total {
                return Err(bad(format!(
                    "utilities sum to {}, total says {total}",
                    utils.iter().sum::<u64>()
                )));
            }
            let distinct: BTreeSet<&str> = items.iter().copied().collect();
            if distinct.len() != items.len() {
                return Err(bad("duplicate item in transaction".into()));
            }
            rows.push((items, utils));
        }

        let tokens: BTreeSet<&str> = rows.iter().flat_map(|r| r.0.iter().copied()).collect();
        let numeric: Option<BTreeMap<&str, usize>> = tokens
            .iter()
            .map(|t| t.parse::<usize>().ok().map(|v| (*t, v)))
            .collect();
        let (index, item_count, item_names) = match numeric {
            Some(map) => {
                let count = map.values().max().map_or(0, |m| m + 1);
                (map, count, vec![])
            }
            None => {
                let names: Vec<String> = tokens.iter().map(|t| t.to_string()).collect();
                let map = tokens.iter().enumerate().map(|(i, t)| (*t, i)).collect();
                (map, names.len(), names)
            }
        };

        let transactions = rows
            .into_iter()
            .enumerate()
            .map(|(id, (items, utils))| {
                let mut entries: Vec<(usize, u64)> =
                    items.iter().map(|t| index[t]).zip(utils).collect();
                entries.sort_unstable();
                Transaction {
                    example_id: id,
                    entries,
                }
            })
            .collect();
        Ok(TransactionDB {
            transactions,
            item_count,
            utility_scale: 1,
            item_names,
        })
    }
}

/// Builds the utility database for the examples at `positions` of `data`
/// (`shap` rows aligned with `data`). Examples without any kept literal
/// still get an (empty) transaction.
pub fn build_transactions(
    data: &Dataset,
    positions: &[usize],
    shap: &ShapMatrix,
    orientation: Orientation,
    mode: LiteralMode,
) -> Result<TransactionDB> {
    if shap.attributions.len() != data.len() {
        return Err(Error::DimensionMismatch {
            expected: data.len(),
            found: shap.attributions.len(),
        });
    }
    let n_items = data.item_count();
    if shap.item_count() != n_items && !data.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: n_items,
            found: shap.item_count(),
        });
    }
    let item_features = data.item_features();
    let n_features = item_features.iter().max().map_or(0, |m| m + 1);
    let sign = orientation.sign();

    let mut raw: Vec<(usize, Vec<(usize, f64)>)> = Vec::with_capacity(positions.len());
    for &p in positions {
        let example = &data.examples[p];
        let phi = &shap.attributions[p];
        let mut kept: Vec<(usize, f64)> = Vec::new();
        match mode {
            LiteralMode::FeatureValue => {
                let mut total = vec![0.0f64; n_features];
                let mut chosen: Vec<Option<usize>> = vec![None; n_features];
                for i in 0..n_items {
                    let f = item_features[i];
                    total[f] += sign * phi[i];
                    if example.bits[i] && chosen[f].is_none() {
                        chosen[f] = Some(i);
                    }
                }
                for f in 0..n_features {
                    if let (Some(item), true) = (chosen[f], total[f] > 0.0) {
                        kept.push((item, total[f]));
                    }
                }
            }
            LiteralMode::Signed => {
                for i in 0..n_items {
                    let v = sign * phi[i];
                    if v > 0.0 {
                        let literal = if example.bits[i] { i } else { n_items + i };
                        kept.push((literal, v));
                    }
                }
            }
        }
        kept.sort_by_key(|e| e.0);
        raw.push((example.id, kept));
    }

    let max = raw
        .iter()
        .flat_map(|r| r.1.iter().map(|e| e.1))
        .fold(0.0f64, f64::max);
    if !(max > 0.0) {
        return Err(Error::DegenerateAttributions);
    }

    let transactions = raw
        .into_iter()
        .map(|(example_id, kept)| Transaction {
            example_id,
            entries: kept
                .into_iter()
                .map(|(lit, v)| (lit, (v / max * UTILITY_SCALE as f64).round() as u64))
                .filter(|e| e.1 > 0)
                .collect(),
        })
        .collect();

    let item_count = match mode {
        LiteralMode::FeatureValue => n_items,
        LiteralMode::Signed => 2 * n_items,
    };
    Ok(TransactionDB {
        transactions,
        item_count,
        utility_scale: UTILITY_SCALE,
        item_names: vec![],
    })
}
