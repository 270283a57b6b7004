//! Tabular input: CSV loading, equal-width discretization, one-hot
//! binarization into items, and stratified train/test splitting.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Category assigned to empty and `?` cells.
pub const MISSING: &str = "missing";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

/// A parsed CSV file. `None` cells are missing values.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub column_names: Vec<String>,
    pub column_kinds: Vec<ColumnKind>,
    pub rows: Vec<Vec<Option<String>>>,
    pub label_column: String,
    pub positive_label: String,
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "?"
}

impl RawTable {
    /// Builds a table from already-split cells, validating widths and labels
    /// and inferring column kinds.
    pub fn new(
        column_names: Vec<String>,
        rows: Vec<Vec<Option<String>>>,
        label_column: &str,
        positive_label: &str,
    ) -> Result<Self> {
        let width = column_names.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::WidthMismatch {
                    line: i + 2,
                    expected: width,
                    found: row.len(),
                });
            }
        }
        let label_idx = column_names
            .iter()
            .position(|c| c == label_column)
            .ok_or_else(|| Error::MissingLabelColumn(label_column.to_string()))?;

        let mut values = BTreeSet::new();
        for (i, row) in rows.iter().enumerate() {
            match &row[label_idx] {
                Some(v) => {
                    values.insert(v.as_str());
                }
                None => {
                    return Err(Error::InvalidArgument(format!(
                        "line {}: missing label",
                        i + 2
                    )))
                }
            }
        }
        if values.len() > 2 {
            return Err(Error::TooManyLabels(
                values.into_iter().map(str::to_string).collect(),
            ));
        }
        if !rows.is_empty() && !values.contains(positive_label) {
            return Err(Error::UnknownPositiveLabel(positive_label.to_string()));
        }

        let column_kinds = (0..width)
            .map(|c| {
                let mut seen = false;
                let numeric = c != label_idx
                    && rows.iter().all(|row| match &row[c] {
                        Some(v) => {
                            seen = true;
                            v.parse::<f64>().map(f64::is_finite).unwrap_or(false)
                        }
                        None => true,
                    });
                if numeric && seen {
                    ColumnKind::Numeric
                } else {
                    ColumnKind::Categorical
                }
            })
            .collect();

        Ok(RawTable {
            column_names,
            column_kinds,
            rows,
            label_column: label_column.to_string(),
            positive_label: positive_label.to_string(),
        })
    }

    pub fn label_index(&self) -> usize {
        self.column_names
            .iter()
            .position(|c| *c == self.label_column)
            .expect("label column validated at construction")
    }

    /// Indices of the non-label columns, in file order.
    pub fn feature_columns(&self) -> Vec<usize> {
        let label = self.label_index();
        (0..self.column_names.len())
            .filter(|&c| c != label)
            .collect()
    }

    pub fn labels(&self) -> Vec<Label> {
        let label = self.label_index();
        self.rows
            .iter()
            .map(|row| {
                if row[label].as_deref() == Some(self.positive_label.as_str()) {
                    Label::Positive
                } else {
                    Label::Negative
                }
            })
            .collect()
    }

    /// The other label value, if the table has one.
    pub fn negative_label(&self) -> Option<&str> {
        let label = self.label_index();
        self.rows
            .iter()
            .filter_map(|row| row[label].as_deref())
            .find(|v| *v != self.positive_label)
    }
}

/// Reads a header-first CSV file into a [`RawTable`].
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &str,
    positive_label: &str,
) -> Result<RawTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv(file, label_column, positive_label)
}

/// Same as [`load_csv`] over any reader.
pub fn parse_csv<R: Read>(reader: R, label_column: &str, positive_label: &str) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        rows.push(
            record
                .iter()
                .map(|c| {
                    if is_missing(c) {
                        None
                    } else {
                        Some(c.to_string())
                    }
                })
                .collect(),
        );
    }
    RawTable::new(header, rows, label_column, positive_label)
}

#[derive(Debug, Clone, PartialEq)]
struct Bins {
    min: f64,
    width: f64,
    labels: Vec<String>,
}

impl Bins {
    fn fit(values: impl Iterator<Item = f64>, n_bins: usize) -> Option<Self> {
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            min = min.min(v);
            max = max.max(v);
        }
        if !min.is_finite() {
            return None;
        }
        if min == max {
            let edge = format_edge(min);
            return Some(Bins {
                min,
                width: 0.0,
                labels: vec![format!("[{edge},{edge}]")],
            });
        }
        let width = (max - min) / n_bins as f64;
        let edges: Vec<f64> = (0..=n_bins)
            .map(|k| {
                if k == n_bins {
                    max
                } else {
                    min + k as f64 * width
                }
            })
            .collect();
        let labels = (0..n_bins)
            .map(|k| {
                let (lo, hi) = (format_edge(edges[k]), format_edge(edges[k + 1]));
                if k + 1 == n_bins {
                    format!("[{lo},{hi}]")
                } else {
                    format!("[{lo},{hi})")
                }
            })
            .collect();
        Some(Bins { min, width, labels })
    }

    fn label(&self, v: f64) -> &str {
        if self.width == 0.0 {
            return &self.labels[0];
        }
        let k = ((v - self.min) / self.width).floor();
        let k = if k.is_nan() || k < 0.0 { 0 } else { k as usize };
        &self.labels[k.min(self.labels.len() - 1)]
    }
}

/// Rounds to six decimals so that accumulated float error does not leak
/// into labels (`0.8 * 3` prints as `2.4`).
fn format_edge(x: f64) -> String {
    let r = (x * 1e6).round() / 1e6;
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{r}")
}

/// Equal-width binning of every numeric column, fit on a subset of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretizer {
    columns: Vec<Option<Bins>>,
}

impl Discretizer {
    /// Computes per-column min/max from `rows` only (the training split).
    pub fn fit(table: &RawTable, rows: &[usize], n_bins: usize) -> Result<Self> {
        if n_bins < 2 {
            return Err(Error::InvalidArgument(format!(
                "n_bins must be at least 2, got {n_bins}"
            )));
        }
        let columns = table
            .column_kinds
            .iter()
            .enumerate()
            .map(|(c, kind)| match kind {
                ColumnKind::Categorical => None,
                ColumnKind::Numeric => Bins::fit(
                    rows.iter().filter_map(|&r| {
                        table.rows[r][c]
                            .as_deref()
                            .and_then(|v| v.parse::<f64>().ok())
                    }),
                    n_bins,
                ),
            })
            .collect();
        Ok(Discretizer { columns })
    }

    /// Interval labels of a fitted column, in bin order.
    pub fn bin_labels(&self, column: usize) -> Option<&[String]> {
        self.columns
            .get(column)?
            .as_ref()
            .map(|b| b.labels.as_slice())
    }

    /// Replaces every fitted numeric column by its interval labels. Values
    /// outside the fitted range fall into the first or last bin.
    pub fn apply(&self, table: &RawTable) -> RawTable {
        let mut out = table.clone();
        for (c, bins) in self.columns.iter().enumerate() {
            if table.column_kinds[c] != ColumnKind::Numeric {
                continue;
            }
            out.column_kinds[c] = ColumnKind::Categorical;
            for row in &mut out.rows {
                let Some(cell) = row[c].as_deref() else {
                    continue;
                };
                row[c] = match (bins, cell.parse::<f64>()) {
                    (Some(b), Ok(v)) => Some(b.label(v).to_string()),
                    _ => None,
                };
            }
        }
        out
    }
}

/// Discretizes with bin edges fit on all rows of `table`.
pub fn discretize(table: &RawTable, n_bins: usize) -> Result<RawTable> {
    let rows: Vec<usize> = (0..table.rows.len()).collect();
    Ok(Discretizer::fit(table, &rows, n_bins)?.apply(table))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Present,
    Absent,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Item {
    pub feature: String,
    pub value: String,
    pub polarity: Polarity,
}

impl Item {
    pub fn present(feature: impl Into<String>, value: impl Into<String>) -> Self {
        Item {
            feature: feature.into(),
            value: value.into(),
            polarity: Polarity::Present,
        }
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.polarity {
            Polarity::Present => write!(f, "{}={}", self.feature, self.value),
            Polarity::Absent => write!(f, "{}!={}", self.feature, self.value),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(if self.is_positive() { 1 } else { -1 })
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match i8::deserialize(d)? {
            1 => Ok(Label::Positive),
            -1 => Ok(Label::Negative),
            other => Err(serde::de::Error::custom(format!(
                "label must be 1 or -1, got {other}"
            ))),
        }
    }
}

mod bits01 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(bits: &[bool], s: S) -> Result<S::Ok, S::Error> {
        bits.iter()
            .map(|&b| b as u8)
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<bool>, D::Error> {
        Vec::<u8>::deserialize(d)?
            .into_iter()
            .map(|b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(serde::de::Error::custom(format!(
                    "bit must be 0 or 1, got {other}"
                ))),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub id: usize,
    pub label: Label,
    #[serde(with = "bits01")]
    pub bits: Vec<bool>,
}

/// Binarized examples over an ordered item schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub items: Vec<Item>,
    pub examples: Vec<Example>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn item_count(&self) -> usize {
        self.items.len()
    }

    /// Feature names in schema order.
    pub fn features(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for item in &self.items {
            if !out.contains(&item.feature.as_str()) {
                out.push(&item.feature);
            }
        }
        out
    }

    /// For each item, the index of its feature in [`Dataset::features`].
    pub fn item_features(&self) -> Vec<usize> {
        let features = self.features();
        self.items
            .iter()
            .map(|it| features.iter().position(|f| *f == it.feature).unwrap())
            .collect()
    }

    pub fn find_item(&self, feature: &str, value: &str) -> Option<usize> {
        self.items.iter().position(|it| {
            it.feature == feature && it.value == value && it.polarity == Polarity::Present
        })
    }

    /// Positions (not ids) of examples with the given label.
    pub fn positions_with(&self, label: Label) -> Vec<usize> {
        self.examples
            .iter()
            .enumerate()
            .filter(|(_, e)| e.label == label)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.examples.iter().map(|e| e.label).collect()
    }

    /// Examples at `positions`, in the given order, sharing the item schema.
    pub fn subset(&self, positions: &[usize]) -> Dataset {
        Dataset {
            items: self.items.clone(),
            examples: positions
                .iter()
                .map(|&p| self.examples[p].clone())
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ds: Dataset = serde_json::from_str(text)?;
        for e in &ds.examples {
            if e.bits.len() != ds.items.len() {
                return Err(Error::DimensionMismatch {
                    expected: ds.items.len(),
                    found: e.bits.len(),
                });
            }
        }
        Ok(ds)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

/// One-hot encodes every feature column. Each distinct cell string
/// (missing cells become [`MISSING`]) yields one present-polarity item;
/// items are ordered by column, then by value.
pub fn binarize(table: &RawTable) -> Dataset {
    let columns = table.feature_columns();
    let mut items = Vec::new();
    let mut offsets = Vec::with_capacity(columns.len());
    let mut values_per_column = Vec::with_capacity(columns.len());
    for &c in &columns {
        let values: BTreeSet<&str> = table
            .rows
            .iter()
            .map(|row| row[c].as_deref().unwrap_or(MISSING))
            .collect();
        offsets.push(items.len());
        for v in &values {
            items.push(Item::present(table.column_names[c].clone(), *v));
        }
        values_per_column.push(values.into_iter().collect::<Vec<_>>());
    }

    let labels = table.labels();
    let examples = table
        .rows
        .iter()
        .enumerate()
        .map(|(id, row)| {
            let mut bits = vec![false; items.len()];
            for (k, &c) in columns.iter().enumerate() {
                let v = row[c].as_deref().unwrap_or(MISSING);
                let pos = values_per_column[k].binary_search(&v).unwrap();
                bits[offsets[k] + pos] = true;
            }
            Example {
                id,
                label: labels[id],
                bits,
            }
        })
        .collect();
    Dataset { items, examples }
}

/// Stratified partition of positions `0..labels.len()` into (train, test).
/// Both lists come back in ascending order.
pub fn split_indices(
    labels: &[Label],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test_fraction must lie in (0,1), got {test_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (label, name) in [(Label::Positive, "positive"), (Label::Negative, "negative")] {
        let mut class: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == label).collect();
        if class.len() < 2 {
            return Err(Error::ClassTooSmall {
                label: name,
                count: class.len(),
            });
        }
        class.shuffle(&mut rng);
        let n_test =
            ((class.len() as f64 * test_fraction).round() as usize).clamp(1, class.len() - 1);
        test.extend_from_slice(&class[..n_test]);
        train.extend_from_slice(&class[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Stratified, seeded train/test split of a dataset.
pub fn split(dataset: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(&dataset.labels(), test_fraction, seed)?;
    Ok((dataset.subset(&train), dataset.subset(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(csv: &str) -> RawTable {
        parse_csv(csv.as_bytes(), "y", "yes").unwrap()
    }

    #[test]
    fn infers_numeric_columns() {
        let t = table("age,colour,y\n1,red,yes\n2,blue,no\n3,red,yes\n");
        assert_eq!(
            t.column_kinds,
            vec![
                ColumnKind::Numeric,
                ColumnKind::Categorical,
                ColumnKind::Categorical
            ]
        );
    }

    #[test]
    fn missing_cells_do_not_block_numeric_inference() {
        let t = table("age,y\n1,yes\n?,no\n,yes\n");
        assert_eq!(t.column_kinds[0], ColumnKind::Numeric);
        assert_eq!(t.rows[1][0], None);
        assert_eq!(t.rows[2][0], None);
    }

    #[test]
    fn width_mismatch_is_reported() {
        let err = parse_csv("a,b,y\n1,2,yes\n1,no\n".as_bytes(), "y", "yes").unwrap_err();
        assert!(
            matches!(
                err,
                Error::WidthMismatch {
                    line: 3,
                    expected: 3,
                    found: 2
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn label_errors() {
        let err = parse_csv("a,y\n1,yes\n".as_bytes(), "z", "yes").unwrap_err();
        assert!(matches!(err, Error::MissingLabelColumn(_)));
        let err = parse_csv("a,y\n1,yes\n2,no\n3,maybe\n".as_bytes(), "y", "yes").unwrap_err();
        assert!(matches!(err, Error::TooManyLabels(v) if v.len() == 3));
        let err = parse_csv("a,y\n1,no\n".as_bytes(), "y", "yes").unwrap_err();
        assert!(matches!(err, Error::UnknownPositiveLabel(_)));
    }

    #[test]
    fn equal_width_bins() {
        let t = table("x,y\n0,yes\n1,no\n2,yes\n3,no\n4,yes\n");
        let d = discretize(&t, 5).unwrap();
        let labels: Vec<_> = d.rows.iter().map(|r| r[0].clone().unwrap()).collect();
        assert_eq!(
            labels,
            ["[0,0.8)", "[0.8,1.6)", "[1.6,2.4)", "[2.4,3.2)", "[3.2,4]"]
        );
        assert_eq!(d.column_kinds[0], ColumnKind::Categorical);
    }

    #[test]
    fn constant_column_collapses_to_one_bin() {
        let t = table("x,y\n7,yes\n7,no\n7,yes\n");
        let d = discretize(&t, 5).unwrap();
        assert!(d.rows.iter().all(|r| r[0].as_deref() == Some("[7,7]")));
    }

    #[test]
    fn bins_fit_on_train_rows_clamp_the_rest() {
        let t = table("x,y\n0,yes\n10,no\n-5,yes\n20,no\n");
        let disc = Discretizer::fit(&t, &[0, 1], 2).unwrap();
        let d = disc.apply(&t);
        assert_eq!(d.rows[2][0].as_deref(), Some("[0,5)"));
        assert_eq!(d.rows[3][0].as_deref(), Some("[5,10]"));
    }

    #[test]
    fn rejects_single_bin() {
        let t = table("x,y\n0,yes\n1,no\n");
        assert!(discretize(&t, 1).is_err());
    }

    #[test]
    fn binarize_one_hot_items() {
        let t = table("chest_pain,thal,y\n1,3,yes\n2,6,no\n3,7,yes\n4,7,no\n");
        let ds = binarize(&t);
        let names: Vec<_> = ds.items.iter().map(|i| i.to_string()).collect();
        assert_eq!(
            names,
            [
                "chest_pain=1",
                "chest_pain=2",
                "chest_pain=3",
                "chest_pain=4",
                "thal=3",
                "thal=6",
                "thal=7"
            ]
        );
        let thal7 = ds.find_item("thal", "7").unwrap();
        assert!(ds.examples[2].bits[thal7]);
        assert!(!ds.examples[1].bits[thal7]);
        for e in &ds.examples {
            assert_eq!(e.bits.iter().filter(|b| **b).count(), 2);
        }
    }

    #[test]
    fn single_value_column_is_always_present() {
        let t = table("k,y\nz,yes\nz,no\n");
        let ds = binarize(&t);
        assert_eq!(ds.items.len(), 1);
        assert!(ds.examples.iter().all(|e| e.bits[0]));
    }

    #[test]
    fn missing_becomes_category() {
        let t = table("k,y\na,yes\n?,no\n");
        let ds = binarize(&t);
        assert!(ds.find_item("k", MISSING).is_some());
    }

    fn labelled(pos: usize, neg: usize) -> Vec<Label> {
        let mut v = vec![Label::Positive; pos];
        v.extend(vec![Label::Negative; neg]);
        v
    }

    #[test]
    fn split_is_stratified() {
        let labels = labelled(60, 40);
        let (train, test) = split_indices(&labels, 0.2, 1).unwrap();
        let pos = test.iter().filter(|&&i| labels[i].is_positive()).count();
        assert_eq!((pos, test.len() - pos), (12, 8));
        assert_eq!(train.len(), 80);
        assert_eq!(split_indices(&labels, 0.2, 1).unwrap(), (train, test));
    }

    #[test]
    fn split_half_of_four() {
        let labels = labelled(2, 2);
        let (train, test) = split_indices(&labels, 0.5, 9).unwrap();
        for side in [&train, &test] {
            assert_eq!(side.iter().filter(|&&i| labels[i].is_positive()).count(), 1);
            assert_eq!(side.len(), 2);
        }
    }

    #[test]
    fn split_errors() {
        assert!(matches!(
            split_indices(&labelled(1, 5), 0.2, 0),
            Err(Error::ClassTooSmall {
                label: "positive",
                count: 1
            })
        ));
        assert!(split_indices(&labelled(5, 5), 1.5, 0).is_err());
        assert!(split_indices(&labelled(5, 5), 0.0, 0).is_err());
    }

    #[test]
    fn json_dump_reloads() {
        let t = table("a,b,y\nx,1,yes\ny,2,no\n");
        let ds = binarize(&t);
        let text = ds.to_json().unwrap();
        assert!(text.contains("\"bits\":[1,0,1,0]"), "{text}");
        assert_eq!(Dataset::from_json(&text).unwrap(), ds);
        let bad = text.replacen("[1,0,1,0]", "[1,0]", 1);
        assert!(Dataset::from_json(&bad).is_err());
    }
}
