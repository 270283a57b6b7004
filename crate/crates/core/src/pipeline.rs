//! The end-to-end run: discretize, binarize, split, train, explain, induce,
//! evaluate.

use crate::dataset::{binarize, split_indices, Dataset, Discretizer, Item, RawTable};
use crate::error::Result;
use crate::eval::{evaluate, Metrics};
use crate::explain::{explain_dataset, ExplainConfig, ShapMatrix};
use crate::induce::{induce, InduceConfig, Induction};
use crate::model::{train, BoostConfig, TreeEnsemble};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub n_bins: usize,
    pub test_fraction: f64,
    pub seed: u64,
    pub boost: BoostConfig,
    pub explain: ExplainConfig,
    pub induce: InduceConfig,
}

impl PipelineConfig {
    /// Defaults with every stage seeded from `seed`.
    pub fn seeded(seed: u64) -> Self {
        PipelineConfig {
            n_bins: 5,
            test_fraction: 0.2,
            seed,
            boost: BoostConfig {
                seed,
                ..BoostConfig::default()
            },
            explain: ExplainConfig {
                seed,
                ..ExplainConfig::default()
            },
            induce: InduceConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub items: Vec<Item>,
    pub train: Dataset,
    pub test: Dataset,
    pub discretizer: Discretizer,
}

/// Splits rows first so bin edges only see training values.
pub fn prepare(table: &RawTable, config: &PipelineConfig) -> Result<Prepared> {
    let (train_rows, test_rows) =
        split_indices(&table.labels(), config.test_fraction, config.seed)?;
    let discretizer = Discretizer::fit(table, &train_rows, config.n_bins)?;
    let full = binarize(&discretizer.apply(table));
    Ok(Prepared {
        items: full.items.clone(),
        train: full.subset(&train_rows),
        test: full.subset(&test_rows),
        discretizer,
    })
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub prepared: Prepared,
    pub model: TreeEnsemble,
    pub shap: ShapMatrix,
    pub induction: Induction,
    pub metrics: Metrics,
}

/// Stage names used in error reports.
pub const STAGES: [&str; 5] = ["prepare", "train", "explain", "induce", "evaluate"];

pub type StageError = (&'static str, crate::error::Error);

/// Runs every stage. `clock` returns seconds and times the induction step;
/// errors carry the failing stage's name.
pub fn run(
    table: &RawTable,
    config: &PipelineConfig,
    clock: impl FnMut() -> f64,
) -> std::result::Result<RunOutput, StageError> {
    let prepared = prepare(table, config).map_err(|e| (STAGES[0], e))?;
    run_prepared(prepared, &table.positive_label, config, None, clock)
}

/// The stages after [`prepare`]. `shap` replaces the explainer when given;
/// its rows are matched to training examples by id.
pub fn run_prepared(
    prepared: Prepared,
    target: &str,
    config: &PipelineConfig,
    shap: Option<ShapMatrix>,
    mut clock: impl FnMut() -> f64,
) -> std::result::Result<RunOutput, StageError> {
    let model = train(&prepared.train, &config.boost).map_err(|e| (STAGES[1], e))?;
    let shap = match shap {
        Some(s) => s.aligned_to(&prepared.train),
        None => explain_dataset(&model, &prepared.train, &prepared.train, &config.explain),
    }
    .map_err(|e| (STAGES[2], e))?;
    let start = clock();
    let induction =
        induce(&prepared.train, &shap, target, &config.induce).map_err(|e| (STAGES[3], e))?;
    let elapsed = clock() - start;
    let mut metrics = evaluate(&induction.theory, &prepared.test).map_err(|e| (STAGES[4], e))?;
    metrics.time_s = elapsed;
    Ok(RunOutput {
        prepared,
        model,
        shap,
        induction,
        metrics,
    })
}
