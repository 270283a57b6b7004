//! Default theories with exceptions induced from a boosted tree ensemble:
//! per-example Shapley attributions become utility transactions, the top
//! high-utility itemset becomes a clause body, and false positives are
//! handled by recursively learned abnormality clauses.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod explain;
pub mod huim;
pub mod induce;
pub mod model;
pub mod pipeline;
pub mod prolog;
pub mod theory;
pub mod transact;

pub use dataset::{
    binarize, discretize, load_csv, split, Dataset, Example, Item, Label, Polarity, RawTable,
};
pub use error::{Error, Result};
pub use eval::{evaluate, Metrics};
pub use explain::{explain_dataset, ExplainConfig, ShapMatrix, ShapMode};
pub use huim::{mine_min_util, mine_top_k, MinedItemset};
pub use induce::{induce, InduceConfig, Induction};
pub use model::{train, BoostConfig, TreeEnsemble};
pub use prolog::{parse_theory, render_theory};
pub use theory::{Clause, DefaultTheory, Head, Literal};
pub use transact::{build_transactions, LiteralMode, Orientation, TransactionDB};
