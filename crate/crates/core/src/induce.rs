//! Sequential covering with top-1 high-utility itemsets as clause bodies and
//! recursive exception learning.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Label, Polarity};
use crate::error::{Error, Result};
use crate::explain::ShapMatrix;
use crate::huim::mine_top_k;
use crate::theory::{covers, Abnormals, Clause, DefaultTheory, Head, Literal};
use crate::transact::{build_transactions, signed_literal, LiteralMode, Orientation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InduceConfig {
    /// Clauses whose training precision falls strictly below this get
    /// exceptions.
    pub accuracy_gate: f64,
    pub max_exception_depth: usize,
    /// Per covering loop, so each exception set has its own budget.
    pub max_clauses: usize,
    pub literal_mode: LiteralMode,
}

impl Default for InduceConfig {
    fn default() -> Self {
        InduceConfig {
            accuracy_gate: 0.85,
            max_exception_depth: 3,
            max_clauses: 50,
            literal_mode: LiteralMode::Signed,
        }
    }
}

impl InduceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.accuracy_gate > 0.5 && self.accuracy_gate <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "accuracy_gate must be in (0.5, 1], got {}",
                self.accuracy_gate
            )));
        }
        if self.max_clauses == 0 {
            return Err(Error::InvalidArgument(
                "max_clauses must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// A clause kept even though its precision stayed below the gate.
#[derive(Debug, Clone, PartialEq)]
pub struct FlaggedClause {
    /// Exception nesting depth (0 for default clauses).
    pub depth: usize,
    pub body: Vec<Literal>,
    pub precision: f64,
}

#[derive(Debug, Clone)]
pub struct Induction {
    pub theory: DefaultTheory,
    /// Example ids of the positives no default clause covers.
    pub uncovered: Vec<usize>,
    /// The top-level loop stopped before covering every positive.
    pub stalled: bool,
    pub warnings: Vec<String>,
    pub low_precision: Vec<FlaggedClause>,
}

struct FoilOutcome {
    clauses: Vec<Clause>,
    uncovered: Vec<usize>,
    stalled: bool,
}

struct Inducer<'a> {
    data: &'a Dataset,
    shap: &'a ShapMatrix,
    config: InduceConfig,
    abnormals: Abnormals,
    next_ab: usize,
    warnings: Vec<String>,
    low_precision: Vec<FlaggedClause>,
}

fn precision(tp: usize, fp: usize) -> f64 {
    if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    }
}

impl Inducer<'_> {
    fn ids(&self, positions: &[usize]) -> Vec<usize> {
        positions
            .iter()
            .map(|&p| self.data.examples[p].id)
            .collect()
    }

    /// Covering loop. For an exception loop, `parent_tp` is the number of
    /// true positives of the clause being repaired (the loop's negatives);
    /// the loop then stops as soon as that clause's precision reaches the
    /// gate.
    fn foil(
        &mut self,
        pos: &[usize],
        neg: &[usize],
        orientation: Orientation,
        depth: usize,
        parent_tp: Option<usize>,
    ) -> Result<FoilOutcome> {
        let mut remaining = pos.to_vec();
        let mut clauses = Vec::new();
        let mut stalled = false;
        let mut lost: BTreeSet<usize> = BTreeSet::new();
        while !remaining.is_empty() {
            if let Some(tp) = parent_tp {
                let kept = tp - lost.len();
                if precision(kept, remaining.len()) >= self.config.accuracy_gate {
                    break;
                }
            }
            if clauses.len() >= self.config.max_clauses {
                self.warnings.push(format!(
                    "depth {depth}: clause cap {} reached with {} examples left",
                    self.config.max_clauses,
                    remaining.len()
                ));
                stalled = true;
                break;
            }
            let saved = (
                self.abnormals.clone(),
                self.next_ab,
                self.low_precision.len(),
            );
            let clause = match self.learn_one_rule(&remaining, neg, orientation, depth)? {
                Some(c) => c,
                None => {
                    self.warnings.push(format!(
                        "depth {depth}: no itemset with positive utility for {} examples",
                        remaining.len()
                    ));
                    stalled = true;
                    break;
                }
            };
            let covered = covers(&clause, &remaining, self.data, &self.abnormals)?;
            if covered.is_empty() {
                (self.abnormals, self.next_ab) = (saved.0, saved.1);
                self.low_precision.truncate(saved.2);
                self.warnings.push(format!(
                    "depth {depth}: learned clause covers none of the {} remaining examples",
                    remaining.len()
                ));
                stalled = true;
                break;
            }
            remaining.retain(|p| covered.binary_search(p).is_err());
            if parent_tp.is_some() {
                lost.extend(covers(&clause, neg, self.data, &self.abnormals)?);
            }
            clauses.push(clause);
        }
        Ok(FoilOutcome {
            clauses,
            uncovered: remaining,
            stalled,
        })
    }

    /// Literals for a mined itemset. An absent test on a feature that also
    /// has a present test in the body is implied by one-hot encoding and
    /// left out.
    fn body_of(&self, itemset: &[usize]) -> Vec<Literal> {
        let n = self.data.item_count();
        let decoded: Vec<(usize, Polarity)> = itemset
            .iter()
            .map(|&lit| match self.config.literal_mode {
                LiteralMode::FeatureValue => (lit, Polarity::Present),
                LiteralMode::Signed => signed_literal(lit, n),
            })
            .collect();
        let fixed: BTreeSet<&str> = decoded
            .iter()
            .filter(|(_, p)| *p == Polarity::Present)
            .map(|&(i, _)| self.data.items[i].feature.as_str())
            .collect();
        decoded
            .into_iter()
            .filter(|&(i, p)| {
                p == Polarity::Present || !fixed.contains(self.data.items[i].feature.as_str())
            })
            .map(|(item, polarity)| Literal::Item { item, polarity })
            .collect()
    }

    /// `None` when the mined database has no itemset at all.
    fn learn_one_rule(
        &mut self,
        pos: &[usize],
        neg: &[usize],
        orientation: Orientation,
        depth: usize,
    ) -> Result<Option<Clause>> {
        let db = match build_transactions(
            self.data,
            pos,
            self.shap,
            orientation,
            self.config.literal_mode,
        ) {
            Ok(db) => db,
            Err(Error::DegenerateAttributions) => return Ok(None),
            Err(e) => return Err(e),
        };
        let Some(best) = mine_top_k(&db, 1).into_iter().next() else {
            return Ok(None);
        };
        let clause = Clause::new(Head::Target, self.body_of(&best.items));

        let tp = covers(&clause, pos, self.data, &self.abnormals)?;
        let fp = covers(&clause, neg, self.data, &self.abnormals)?;
        let prec = precision(tp.len(), fp.len());
        if prec >= self.config.accuracy_gate || fp.is_empty() {
            return Ok(Some(clause));
        }
        if depth >= self.config.max_exception_depth {
            self.low_precision.push(FlaggedClause {
                depth,
                body: clause.body.clone(),
                precision: prec,
            });
            return Ok(Some(clause));
        }
        self.learn_exceptions(clause, &fp, &tp, orientation, depth, prec)
            .map(Some)
    }

    /// Exceptions are only kept when they raise the clause's precision;
    /// otherwise everything learned below is dropped and the clause is
    /// flagged.
    fn learn_exceptions(
        &mut self,
        clause: Clause,
        false_pos: &[usize],
        true_pos: &[usize],
        orientation: Orientation,
        depth: usize,
        prec: f64,
    ) -> Result<Clause> {
        let saved = (
            self.abnormals.clone(),
            self.next_ab,
            self.low_precision.len(),
        );
        let inner = self.foil(
            false_pos,
            true_pos,
            orientation.flip(),
            depth + 1,
            Some(true_pos.len()),
        )?;
        if inner.stalled {
            self.warnings.push(format!(
                "depth {}: exceptions left {} of {} false positives ({:?}) uncovered",
                depth + 1,
                inner.uncovered.len(),
                false_pos.len(),
                self.ids(&inner.uncovered)
            ));
        }
        if !inner.clauses.is_empty() {
            let ab = self.next_ab;
            let exceptions = inner
                .clauses
                .into_iter()
                .map(|c| Clause::new(Head::Ab(ab), c.body))
                .collect();
            self.abnormals.insert(ab, exceptions);
            let mut repaired = clause.clone();
            repaired.body.push(Literal::NotAb(ab));
            let tp = covers(&repaired, true_pos, self.data, &self.abnormals)?.len();
            let fp = covers(&repaired, false_pos, self.data, &self.abnormals)?.len();
            if precision(tp, fp) > prec {
                self.next_ab += 1;
                return Ok(repaired);
            }
            self.warnings.push(format!(
                "depth {depth}: exceptions did not raise precision {prec:.3}; dropped"
            ));
        }
        (self.abnormals, self.next_ab) = (saved.0, saved.1);
        self.low_precision.truncate(saved.2);
        self.low_precision.push(FlaggedClause {
            depth,
            body: clause.body.clone(),
            precision: prec,
        });
        Ok(clause)
    }
}

/// Induces a default theory for the positive class of `data`. `shap` must
/// be row-aligned with `data`.
pub fn induce(
    data: &Dataset,
    shap: &ShapMatrix,
    target_name: &str,
    config: &InduceConfig,
) -> Result<Induction> {
    config.validate()?;
    let pos = data.positions_with(Label::Positive);
    let neg = data.positions_with(Label::Negative);
    let mut theory = DefaultTheory::new(target_name);
    if pos.is_empty() {
        return Ok(Induction {
            theory,
            uncovered: vec![],
            stalled: false,
            warnings: vec!["no positive examples".into()],
            low_precision: vec![],
        });
    }
    let mut inducer = Inducer {
        data,
        shap,
        config: *config,
        abnormals: Abnormals::new(),
        next_ab: 0,
        warnings: vec![],
        low_precision: vec![],
    };
    let outcome = inducer.foil(&pos, &neg, Orientation::TowardPositive, 0, None)?;
    let uncovered = inducer.ids(&outcome.uncovered);
    theory.defaults = outcome.clauses;
    theory.abnormals = inducer.abnormals;
    theory.validate()?;
    Ok(Induction {
        theory,
        uncovered,
        stalled: outcome.stalled,
        warnings: inducer.warnings,
        low_precision: inducer.low_precision,
    })
}

/// The item tests of a clause body, without its abnormality literals.
pub fn item_tests(clause: &Clause) -> impl Iterator<Item = (usize, Polarity)> + '_ {
    clause.body.iter().filter_map(|l| match *l {
        Literal::Item { item, polarity } => Some((item, polarity)),
        Literal::NotAb(_) => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Example, Item};
    use crate::explain::ShapMode;
    use crate::theory::clause_covers;

    fn shap_for(rows: Vec<Vec<f64>>) -> ShapMatrix {
        ShapMatrix {
            example_ids: (0..rows.len()).collect(),
            attributions: rows,
            base_value: 0.0,
            mode: ShapMode::Exact,
            max_std_error: 0.0,
        }
    }

    /// 20 examples over items bird (0), penguin (1), mammal (2) with
    /// attributions that point at the causal items.
    fn birds() -> (Dataset, ShapMatrix) {
        let mut examples = Vec::new();
        let mut rows = Vec::new();
        for id in 0..20 {
            let (bird, penguin) = match id {
                0..=11 => (true, false),
                12..=14 => (true, true),
                _ => (false, false),
            };
            let flies = bird && !penguin;
            examples.push(Example {
                id,
                label: if flies {
                    Label::Positive
                } else {
                    Label::Negative
                },
                bits: vec![bird, penguin, !bird],
            });
            rows.push(vec![
                if bird { 0.6 } else { -0.6 },
                if penguin { -1.0 } else { 0.1 },
                if bird { 0.05 } else { -0.2 },
            ]);
        }
        let items = vec![
            Item::present("bird", "yes"),
            Item::present("penguin", "yes"),
            Item::present("mammal", "yes"),
        ];
        (Dataset { items, examples }, shap_for(rows))
    }

    fn feature_value() -> InduceConfig {
        InduceConfig {
            literal_mode: LiteralMode::FeatureValue,
            ..InduceConfig::default()
        }
    }

    fn signed() -> InduceConfig {
        InduceConfig {
            literal_mode: LiteralMode::Signed,
            ..InduceConfig::default()
        }
    }

    #[test]
    fn learns_default_with_exception() {
        let (data, shap) = birds();
        for cfg in [feature_value(), signed()] {
            let out = induce(&data, &shap, "flies", &cfg).unwrap();
            assert!(!out.stalled, "{:?}", out.warnings);
            assert!(out.uncovered.is_empty());
            let t = &out.theory;
            for e in &data.examples {
                assert_eq!(t.classify(&e.bits).unwrap(), e.label, "example {}", e.id);
            }
        }
        let t = induce(&data, &shap, "flies", &feature_value())
            .unwrap()
            .theory;
        assert_eq!(
            t.defaults,
            [Clause::new(
                Head::Target,
                vec![Literal::present(0), Literal::NotAb(0)]
            )]
        );
        assert_eq!(
            t.abnormals[&0],
            [Clause::new(Head::Ab(0), vec![Literal::present(1)])]
        );
    }

    #[test]
    fn exceptions_reach_full_training_precision() {
        let (data, shap) = birds();
        // a body that is too general on its own
        let mut inducer = Inducer {
            data: &data,
            shap: &shap,
            config: signed(),
            abnormals: Abnormals::new(),
            next_ab: 0,
            warnings: vec![],
            low_precision: vec![],
        };
        let base = Clause::new(Head::Target, vec![Literal::present(0)]);
        let pos = data.positions_with(Label::Positive);
        let neg = data.positions_with(Label::Negative);
        let tp = covers(&base, &pos, &data, &Abnormals::new()).unwrap();
        let fp = covers(&base, &neg, &data, &Abnormals::new()).unwrap();
        assert_eq!((tp.len(), fp.len()), (12, 3));
        let clause = inducer
            .learn_exceptions(base, &fp, &tp, Orientation::TowardPositive, 0, 0.8)
            .unwrap();
        assert_eq!(clause.body.last(), Some(&Literal::NotAb(0)));
        let fp_after = covers(&clause, &neg, &data, &inducer.abnormals).unwrap();
        let tp_after = covers(&clause, &pos, &data, &inducer.abnormals).unwrap();
        assert!(fp_after.is_empty());
        assert_eq!(tp_after.len(), 12);
    }

    #[test]
    fn gate_boundary_is_strict() {
        // 17 true positives and 3 false positives: precision exactly 0.85
        let mut examples = Vec::new();
        let mut rows = Vec::new();
        for id in 0..20 {
            examples.push(Example {
                id,
                label: if id < 17 {
                    Label::Positive
                } else {
                    Label::Negative
                },
                bits: vec![true, id >= 17],
            });
            rows.push(vec![1.0, if id >= 17 { -1.0 } else { 0.0 }]);
        }
        let data = Dataset {
            items: vec![Item::present("a", "1"), Item::present("b", "1")],
            examples,
        };
        let shap = shap_for(rows);
        let out = induce(&data, &shap, "t", &InduceConfig::default()).unwrap();
        assert_eq!(out.theory.defaults.len(), 1);
        assert!(out.theory.abnormals.is_empty());

        let strict = InduceConfig {
            accuracy_gate: 0.86,
            ..InduceConfig::default()
        };
        let out = induce(&data, &shap, "t", &strict).unwrap();
        assert_eq!(out.theory.abnormals.len(), 1);
    }

    #[test]
    fn depth_cap_keeps_clause_and_flags_it() {
        let (data, shap) = birds();
        let cfg = InduceConfig {
            max_exception_depth: 0,
            ..feature_value()
        };
        let out = induce(&data, &shap, "flies", &cfg).unwrap();
        assert!(out.theory.abnormals.is_empty());
        assert!(!out.low_precision.is_empty());
        assert!(out
            .low_precision
            .iter()
            .all(|f| f.precision < cfg.accuracy_gate));
    }

    #[test]
    fn degenerate_attributions_stall_with_everything_uncovered() {
        let (data, _) = birds();
        let shap = shap_for(vec![vec![-0.5, -0.5, -0.5]; data.len()]);
        let out = induce(&data, &shap, "flies", &InduceConfig::default()).unwrap();
        assert!(out.stalled);
        assert!(out.theory.defaults.is_empty());
        assert_eq!(out.uncovered, (0..12).collect::<Vec<_>>());
    }

    #[test]
    fn single_clause_when_first_covers_all() {
        let (data, shap) = birds();
        let only_flyers = data.subset(&(0..12).chain(15..20).collect::<Vec<_>>());
        let shap = ShapMatrix {
            example_ids: only_flyers.examples.iter().map(|e| e.id).collect(),
            attributions: only_flyers
                .examples
                .iter()
                .map(|e| shap.attributions[e.id].clone())
                .collect(),
            ..shap
        };
        let out = induce(&only_flyers, &shap, "flies", &InduceConfig::default()).unwrap();
        assert_eq!(out.theory.defaults.len(), 1);
        assert!(out.uncovered.is_empty());
    }

    #[test]
    fn clause_bodies_are_satisfied_by_a_covered_positive() {
        let (data, shap) = birds();
        let out = induce(&data, &shap, "flies", &signed()).unwrap();
        for c in &out.theory.defaults {
            let ok = data.examples.iter().any(|e| {
                e.label == Label::Positive
                    && clause_covers(c, &e.bits, &out.theory.abnormals).unwrap()
                    && item_tests(c).all(|(i, p)| e.bits[i] == (p == Polarity::Present))
            });
            assert!(ok);
        }
    }

    #[test]
    fn rejects_bad_gate() {
        let (data, shap) = birds();
        for gate in [0.5, 1.01, f64::NAN] {
            let cfg = InduceConfig {
                accuracy_gate: gate,
                ..InduceConfig::default()
            };
            assert!(induce(&data, &shap, "t", &cfg).is_err());
        }
    }
}
