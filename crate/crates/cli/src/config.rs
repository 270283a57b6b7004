//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use shapfold::explain::ExplainConfig;
use shapfold::induce::InduceConfig;
use shapfold::model::BoostConfig;
use shapfold::pipeline::PipelineConfig;
use shapfold::transact::LiteralMode;

const KEYS: &[&str] = &[
    "data",
    "label",
    "positive",
    "n_bins",
    "test_fraction",
    "seed",
    "rounds",
    "max_depth",
    "learning_rate",
    "min_child_weight",
    "exact_cap",
    "permutations",
    "background_size",
    "accuracy_gate",
    "max_exception_depth",
    "max_clauses",
    "literal_mode",
    "shap_csv",
    "out_dir",
    "model_out",
    "theory_out",
    "metrics_out",
    "shap_out",
];

const PATH_KEYS: &[&str] = &[
    "data",
    "shap_csv",
    "out_dir",
    "model_out",
    "theory_out",
    "metrics_out",
    "shap_out",
];

/// Raw key/value pairs. Paths read from a file are resolved against the
/// file's directory; paths given with `--set` are taken as is.
#[derive(Debug, Default, Clone)]
pub struct KeyValues(BTreeMap<String, String>);

impl KeyValues {
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self, String> {
        let mut kv = KeyValues::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected `key = value`", n + 1))?;
            kv.set(k.trim(), v.trim(), base)
                .map_err(|e| format!("config line {}: {e}", n + 1))?;
        }
        Ok(kv)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text, path.parent())
    }

    pub fn set(&mut self, key: &str, value: &str, base: Option<&Path>) -> Result<(), String> {
        if !KEYS.contains(&key) {
            return Err(format!("unknown config key `{key}`"));
        }
        let value = match base {
            Some(dir)
                if PATH_KEYS.contains(&key)
                    && !value.is_empty()
                    && Path::new(value).is_relative() =>
            {
                dir.join(value).to_string_lossy().into_owned()
            }
            _ => value.to_string(),
        };
        self.0.insert(key.to_string(), value);
        Ok(())
    }

    /// Applies `key=value` overrides.
    pub fn apply_overrides(&mut self, pairs: &[String]) -> Result<(), String> {
        for p in pairs {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| format!("--set expects key=value, got `{p}`"))?;
            self.set(k.trim(), v.trim(), None)?;
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn required(&self, key: &str) -> Result<&str, String> {
        self.get(key)
            .filter(|v| !v.is_empty())
            .ok_or_else(|| format!("missing required config key `{key}`"))
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, String> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| format!("config key `{key}`: cannot parse `{v}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub data: PathBuf,
    pub label: String,
    pub positive: String,
    pub pipeline: PipelineConfig,
    pub shap_csv: Option<PathBuf>,
    pub model_out: PathBuf,
    pub theory_out: PathBuf,
    pub metrics_out: PathBuf,
    pub shap_out: PathBuf,
}

fn fraction(key: &str, v: f64) -> Result<f64, String> {
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("config key `{key}` must lie in (0,1), got {v}"))
    }
}

impl RunConfig {
    pub fn from_kv(kv: &KeyValues) -> Result<Self, String> {
        let seed: u64 = kv
            .required("seed")?
            .parse()
            .map_err(|_| "config key `seed` must be a non-negative integer".to_string())?;
        let mut p = PipelineConfig::seeded(seed);
        p.n_bins = kv.parsed("n_bins", p.n_bins)?;
        if p.n_bins < 2 {
            return Err("config key `n_bins` must be at least 2".into());
        }
        p.test_fraction = fraction(
            "test_fraction",
            kv.parsed("test_fraction", p.test_fraction)?,
        )?;

        let b = BoostConfig::default();
        p.boost = BoostConfig {
            rounds: kv.parsed("rounds", b.rounds)?,
            max_depth: kv.parsed("max_depth", b.max_depth)?,
            learning_rate: kv.parsed("learning_rate", b.learning_rate)?,
            min_child_weight: kv.parsed("min_child_weight", b.min_child_weight)?,
            seed,
        };
        if !(p.boost.learning_rate > 0.0 && p.boost.learning_rate <= 1.0) {
            return Err(format!(
                "config key `learning_rate` must lie in (0,1], got {}",
                p.boost.learning_rate
            ));
        }
        let e = ExplainConfig::default();
        p.explain = ExplainConfig {
            exact_cap: kv.parsed("exact_cap", e.exact_cap)?,
            permutations: kv.parsed("permutations", e.permutations)?,
            background_size: kv.parsed("background_size", e.background_size)?,
            seed,
        };
        let i = InduceConfig::default();
        p.induce = InduceConfig {
            accuracy_gate: kv.parsed("accuracy_gate", i.accuracy_gate)?,
            max_exception_depth: kv.parsed("max_exception_depth", i.max_exception_depth)?,
            max_clauses: kv.parsed("max_clauses", i.max_clauses)?,
            literal_mode: match kv.get("literal_mode") {
                None => i.literal_mode,
                Some("feature_value") => LiteralMode::FeatureValue,
                Some("signed") => LiteralMode::Signed,
                Some(other) => return Err(format!(
                    "config key `literal_mode`: expected feature_value or signed, got `{other}`"
                )),
            },
        };
        p.induce.validate().map_err(|e| e.to_string())?;

        let out_dir = PathBuf::from(kv.get("out_dir").unwrap_or("out"));
        let path_or = |key: &str, file: &str| {
            kv.get(key)
                .map_or_else(|| out_dir.join(file), PathBuf::from)
        };
        Ok(RunConfig {
            data: PathBuf::from(kv.required("data")?),
            label: kv.required("label")?.to_string(),
            positive: kv.required("positive")?.to_string(),
            pipeline: p,
            shap_csv: kv
                .get("shap_csv")
                .filter(|v| !v.is_empty())
                .map(PathBuf::from),
            model_out: path_or("model_out", "model.json"),
            theory_out: path_or("theory_out", "theory.pl"),
            metrics_out: path_or("metrics_out", "metrics.json"),
            shap_out: path_or("shap_out", "shap.csv"),
        })
    }
}
