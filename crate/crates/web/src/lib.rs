//! Browser bindings: mine a transaction table, explain a cars row, induce
//! a cars theory.

use std::fmt::Write as _;

use wasm_bindgen::prelude::*;

use shapfold::dataset::parse_csv;
use shapfold::explain::{explain_dataset, ShapMatrix};
use shapfold::huim::{mine, Threshold};
use shapfold::model::{train, TreeEnsemble};
use shapfold::pipeline::{prepare, run_prepared, PipelineConfig, Prepared};
use shapfold::prolog::render_theory;
use shapfold::transact::TransactionDB;

const CARS: &str = include_str!("../../../data/cars.csv");

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Mined itemsets, one `{items} utility` line each. `k` wins over
/// `min_util` when both are given.
#[wasm_bindgen]
pub fn mine_text(db: &str, k: Option<usize>, min_util: Option<u64>) -> Result<String, JsError> {
    let db = TransactionDB::parse(db).map_err(js)?;
    let threshold = match (k, min_util) {
        (Some(0), _) => return Err(JsError::new("k must be at least 1")),
        (Some(k), _) => Threshold::TopK(k),
        (None, Some(u)) => Threshold::MinUtil(u),
        (None, None) => return Err(JsError::new("give k or min_util")),
    };
    Ok(mine(&db, threshold)
        .iter()
        .map(|s| s.display(&db) + "\n")
        .collect())
}

/// The cars data split, model and training attributions for one seed.
#[wasm_bindgen]
pub struct CarsDemo {
    config: PipelineConfig,
    prepared: Prepared,
    model: TreeEnsemble,
    shap: ShapMatrix,
    target: String,
}

#[wasm_bindgen]
impl CarsDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u64) -> Result<CarsDemo, JsError> {
        let table = parse_csv(CARS.as_bytes(), "acceptability", "acceptable").map_err(js)?;
        let config = PipelineConfig::seeded(seed);
        let prepared = prepare(&table, &config).map_err(js)?;
        let model = train(&prepared.train, &config.boost).map_err(js)?;
        let shap = explain_dataset(&model, &prepared.train, &prepared.train, &config.explain)
            .map_err(js)?;
        Ok(CarsDemo {
            config,
            prepared,
            model,
            shap,
            target: table.positive_label,
        })
    }

    #[wasm_bindgen(getter)]
    pub fn train_rows(&self) -> usize {
        self.prepared.train.len()
    }

    /// Feature values, prediction and the `top` largest attributions of a
    /// training row.
    pub fn explain(&self, row: usize, top: usize) -> Result<String, JsError> {
        let e = self
            .prepared
            .train
            .examples
            .get(row)
            .ok_or_else(|| JsError::new(&format!("row {row} out of range")))?;
        let items = &self.prepared.items;
        let mut out = String::new();
        let values: Vec<String> = items
            .iter()
            .zip(&e.bits)
            .filter(|p| *p.1)
            .map(|p| p.0.to_string())
            .collect();
        let _ = writeln!(out, "row {} ({:?}): {}", e.id, e.label, values.join(", "));
        let p = self.model.predict_proba(&e.bits).map_err(js)?;
        let _ = writeln!(
            out,
            "model P({}) = {p:.3}, base margin {:.3}",
            self.target, self.shap.base_value
        );
        let mut phi: Vec<(usize, f64)> = self.shap.attributions[row]
            .iter()
            .copied()
            .enumerate()
            .filter(|p| p.1 != 0.0)
            .collect();
        phi.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
        for (i, v) in phi.into_iter().take(top) {
            let state = if e.bits[i] { "" } else { " (absent)" };
            let _ = writeln!(out, "{v:+.4}  {}{state}", items[i]);
        }
        Ok(out)
    }

    /// Induces a theory with the given gate and exception depth and
    /// reports it with its held-out metrics.
    pub fn induce(
        &self,
        accuracy_gate: f64,
        max_exception_depth: usize,
    ) -> Result<String, JsError> {
        let mut config = self.config.clone();
        config.induce.accuracy_gate = accuracy_gate;
        config.induce.max_exception_depth = max_exception_depth;
        config.induce.validate().map_err(js)?;
        let out = run_prepared(
            self.prepared.clone(),
            &self.target,
            &config,
            Some(self.shap.clone()),
            || 0.0,
        )
        .map_err(|(stage, e)| JsError::new(&format!("{stage}: {e}")))?;
        let mut text = render_theory(&out.induction.theory, &out.prepared.train);
        let m = &out.metrics;
        let _ = writeln!(
            text,
            "\naccuracy {:.3}  precision {:.3}  recall {:.3}  f1 {:.3}  clauses {}",
            m.accuracy, m.precision, m.recall, m.f1, m.clause_count
        );
        if out.induction.stalled {
            let _ = writeln!(
                text,
                "stalled with {} training positives uncovered",
                out.induction.uncovered.len()
            );
        }
        Ok(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_runs_natively() {
        let demo = CarsDemo::new(42).unwrap();
        assert!(demo.explain(0, 5).unwrap().lines().count() >= 3);
        let text = demo.induce(0.85, 3).unwrap();
        assert!(text.starts_with("acceptable(A) :-"), "{text}");
        assert!(text.contains("accuracy"));
    }
}
