//! Default theories: target clauses guarded by negated abnormality
//! predicates, evaluated under negation as failure with an empty
//! background theory.

use std::collections::{BTreeMap, BTreeSet};

use crate::dataset::{Dataset, Label, Polarity};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    /// `feature(A,value)`, or `not feature(A,value)` when absent.
    Item { item: usize, polarity: Polarity },
    /// `not abN(A)`.
    NotAb(usize),
}

impl Literal {
    pub fn present(item: usize) -> Self {
        Literal::Item {
            item,
            polarity: Polarity::Present,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Head {
    Target,
    Ab(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Clause {
    pub head: Head,
    pub body: Vec<Literal>,
}

impl Clause {
    pub fn new(head: Head, body: Vec<Literal>) -> Self {
        Clause { head, body }
    }

    /// Abnormality predicates this clause negates.
    pub fn ab_refs(&self) -> impl Iterator<Item = usize> + '_ {
        self.body.iter().filter_map(|l| match l {
            Literal::NotAb(ab) => Some(*ab),
            Literal::Item { .. } => None,
        })
    }

    fn max_item(&self) -> Option<usize> {
        self.body
            .iter()
            .filter_map(|l| match l {
                Literal::Item { item, .. } => Some(*item),
                Literal::NotAb(_) => None,
            })
            .max()
    }
}

pub type Abnormals = BTreeMap<usize, Vec<Clause>>;

/// Whether one clause of `ab` fires on `bits`. `fuel` bounds the nesting so
/// a cyclic map surfaces as an error instead of overflowing the stack.
fn ab_holds(ab: usize, bits: &[bool], abnormals: &Abnormals, fuel: usize) -> Result<bool> {
    let clauses = abnormals.get(&ab).ok_or(Error::DanglingAbnormality(ab))?;
    if fuel == 0 {
        return Err(Error::Schema(format!(
            "abnormality ab{ab} is defined cyclically"
        )));
    }
    for c in clauses {
        if body_holds(&c.body, bits, abnormals, fuel - 1)? {
            return Ok(true);
        }
    }
    Ok(false)
}

fn body_holds(body: &[Literal], bits: &[bool], abnormals: &Abnormals, fuel: usize) -> Result<bool> {
    for lit in body {
        if let Literal::Item { item, polarity } = lit {
            if bits[*item] != (*polarity == Polarity::Present) {
                return Ok(false);
            }
        }
    }
    for lit in body {
        if let Literal::NotAb(ab) = lit {
            if ab_holds(*ab, bits, abnormals, fuel)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Whether `clause`'s body is satisfied by one example.
pub fn clause_covers(clause: &Clause, bits: &[bool], abnormals: &Abnormals) -> Result<bool> {
    body_holds(&clause.body, bits, abnormals, abnormals.len() + 1)
}

/// The positions among `positions` whose examples satisfy `clause`.
pub fn covers(
    clause: &Clause,
    positions: &[usize],
    data: &Dataset,
    abnormals: &Abnormals,
) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for &p in positions {
        if clause_covers(clause, &data.examples[p].bits, abnormals)? {
            out.push(p);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefaultTheory {
    pub target_name: String,
    pub defaults: Vec<Clause>,
    pub abnormals: Abnormals,
}

impl DefaultTheory {
    pub fn new(target_name: impl Into<String>) -> Self {
        DefaultTheory {
            target_name: target_name.into(),
            defaults: vec![],
            abnormals: BTreeMap::new(),
        }
    }

    pub fn clause_count(&self) -> usize {
        self.defaults.len() + self.abnormals.values().map(Vec::len).sum::<usize>()
    }

    fn all_clauses(&self) -> impl Iterator<Item = &Clause> {
        self.defaults
            .iter()
            .chain(self.abnormals.values().flatten())
    }

    /// Checks the structural invariants: every referenced abnormality is
    /// defined, indices are dense from 0, bodies are non-empty, and the
    /// reference graph is acyclic. Returns a topological order of the
    /// abnormality predicates (referenced before referencing).
    pub fn validate(&self) -> Result<Vec<usize>> {
        for (k, (&ab, clauses)) in self.abnormals.iter().enumerate() {
            if ab != k {
                return Err(Error::Schema(format!(
                    "abnormality indices are not dense: found ab{ab} at position {k}"
                )));
            }
            if clauses.is_empty() {
                return Err(Error::DanglingAbnormality(ab));
            }
        }
        for c in self.all_clauses() {
            if c.body.is_empty() {
                return Err(Error::Schema("clause with empty body".into()));
            }
            if let Some(ab) = c.ab_refs().find(|ab| !self.abnormals.contains_key(ab)) {
                return Err(Error::DanglingAbnormality(ab));
            }
        }

        // Kahn's algorithm over ab -> referenced ab edges
        let mut out_deg: BTreeMap<usize, usize> = BTreeMap::new();
        let mut rev: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for (&ab, clauses) in &self.abnormals {
            let refs: BTreeSet<usize> = clauses.iter().flat_map(Clause::ab_refs).collect();
            out_deg.insert(ab, refs.len());
            for r in refs {
                rev.entry(r).or_default().insert(ab);
            }
        }
        let mut ready: Vec<usize> = out_deg
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&a, _)| a)
            .collect();
        let mut order = Vec::new();
        while let Some(ab) = ready.pop() {
            order.push(ab);
            for &parent in rev.get(&ab).into_iter().flatten() {
                let d = out_deg.get_mut(&parent).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.push(parent);
                }
            }
        }
        if order.len() != self.abnormals.len() {
            return Err(Error::Schema(
                "abnormality predicates reference each other cyclically".into(),
            ));
        }
        Ok(order)
    }

    /// Largest item index any clause tests, if any.
    pub fn max_item(&self) -> Option<usize> {
        self.all_clauses().filter_map(Clause::max_item).max()
    }

    fn check_schema(&self, bits: &[bool]) -> Result<()> {
        match self.max_item() {
            Some(m) if m >= bits.len() => Err(Error::Schema(format!(
                "theory tests item {m} but examples have {} items",
                bits.len()
            ))),
            _ => Ok(()),
        }
    }

    /// Positive iff at least one default clause covers the example.
    pub fn classify(&self, bits: &[bool]) -> Result<Label> {
        self.check_schema(bits)?;
        for c in &self.defaults {
            if clause_covers(c, bits, &self.abnormals)? {
                return Ok(Label::Positive);
            }
        }
        Ok(Label::Negative)
    }
}
