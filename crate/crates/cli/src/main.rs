mod config;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use shapfold::dataset::{load_csv, Dataset};
use shapfold::error::Error;
use shapfold::eval::evaluate;
use shapfold::explain::{explain_dataset, ShapMatrix};
use shapfold::huim::{mine, Threshold};
use shapfold::model::{model_to_json, train};
use shapfold::pipeline::{prepare, run_prepared, Prepared};
use shapfold::prolog::{parse_theory, render_theory};
use shapfold::transact::TransactionDB;

use config::{KeyValues, RunConfig};

/// Exit statuses.
const OK: u8 = 0;
const VALIDATION: u8 = 1;
const DATA: u8 = 2;
const STALL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "shapfold",
    version,
    about = "Induce default theories from boosted-tree attributions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Flat `key = value` configuration file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rows {
    Train,
    Test,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Train, explain, induce and evaluate; writes model, theory and metrics.
    Run(ConfigArgs),
    /// Mine high-utility itemsets from a transaction database file.
    Mine {
        db: PathBuf,
        #[arg(
            short,
            long,
            conflicts_with = "min_util",
            required_unless_present = "min_util"
        )]
        k: Option<usize>,
        #[arg(long)]
        min_util: Option<u64>,
    },
    /// Evaluate a saved theory on a dataset.
    Eval {
        #[arg(short, long)]
        theory: PathBuf,
        #[arg(long, value_enum, default_value = "test")]
        rows: Rows,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Write the attribution matrix of the training rows as CSV.
    Explain {
        #[arg(long, value_enum, default_value = "train")]
        rows: Rows,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

struct Failure {
    code: u8,
    message: String,
}

fn validation(message: impl Into<String>) -> Failure {
    Failure {
        code: VALIDATION,
        message: message.into(),
    }
}

fn stage(name: &str, e: Error) -> Failure {
    let code = match e {
        Error::InvalidArgument(_) => VALIDATION,
        Error::DegenerateAttributions => STALL,
        _ => DATA,
    };
    Failure {
        code,
        message: format!("{name}: {e}"),
    }
}

fn load_config(args: &ConfigArgs) -> Result<RunConfig, Failure> {
    let mut kv = match &args.config {
        Some(path) => KeyValues::load(path).map_err(validation)?,
        None => KeyValues::default(),
    };
    kv.apply_overrides(&args.set).map_err(validation)?;
    let mut flags = Vec::new();
    if let Some(s) = args.seed {
        flags.push(format!("seed={s}"));
    }
    if let Some(d) = &args.data {
        flags.push(format!("data={}", d.display()));
    }
    if let Some(o) = &args.out_dir {
        flags.push(format!("out_dir={}", o.display()));
    }
    kv.apply_overrides(&flags).map_err(validation)?;
    RunConfig::from_kv(&kv).map_err(validation)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| {
            stage(
                "write",
                Error::Io {
                    path: dir.into(),
                    source: e,
                },
            )
        })?;
    }
    fs::write(path, contents).map_err(|e| {
        stage(
            "write",
            Error::Io {
                path: path.into(),
                source: e,
            },
        )
    })
}

fn load_prepared(cfg: &RunConfig) -> Result<(Prepared, String), Failure> {
    let table = load_csv(&cfg.data, &cfg.label, &cfg.positive).map_err(|e| stage("load", e))?;
    let prepared = prepare(&table, &cfg.pipeline).map_err(|e| stage("prepare", e))?;
    Ok((prepared, table.positive_label))
}

fn select(prepared: &Prepared, rows: Rows) -> Dataset {
    match rows {
        Rows::Train => prepared.train.clone(),
        Rows::Test => prepared.test.clone(),
        Rows::All => {
            let mut all = prepared.train.clone();
            all.examples.extend(prepared.test.examples.iter().cloned());
            all.examples.sort_by_key(|e| e.id);
            all
        }
    }
}

fn cmd_run(args: &ConfigArgs) -> Result<u8, Failure> {
    let cfg = load_config(args)?;
    let (prepared, target) = load_prepared(&cfg)?;
    let shap = match &cfg.shap_csv {
        Some(path) => {
            let file = fs::File::open(path).map_err(|e| {
                stage(
                    "load",
                    Error::Io {
                        path: path.clone(),
                        source: e,
                    },
                )
            })?;
            Some(ShapMatrix::read_csv(file, prepared.items.len()).map_err(|e| stage("load", e))?)
        }
        None => None,
    };
    let clock = Instant::now();
    let out = run_prepared(prepared, &target, &cfg.pipeline, shap, || {
        clock.elapsed().as_secs_f64()
    })
    .map_err(|(name, e)| stage(name, e))?;

    let text = render_theory(&out.induction.theory, &out.prepared.train);
    let model = model_to_json(&out.model, &out.prepared.items).map_err(|e| stage("write", e))?;
    write_file(&cfg.model_out, model.as_bytes())?;
    write_file(&cfg.theory_out, text.as_bytes())?;
    let json = out.metrics.to_json().map_err(|e| stage("write", e))?;
    write_file(&cfg.metrics_out, json.as_bytes())?;

    print!("{text}");
    println!();
    println!("{}", out.metrics);
    for w in &out.induction.warnings {
        eprintln!("warning: {w}");
    }
    for f in &out.induction.low_precision {
        eprintln!(
            "warning: kept a clause at depth {} with training precision {:.3}",
            f.depth, f.precision
        );
    }
    if out.induction.stalled {
        eprintln!(
            "stall: {} positive training examples left uncovered: {:?}",
            out.induction.uncovered.len(),
            out.induction.uncovered
        );
        return Ok(STALL);
    }
    Ok(OK)
}

fn cmd_mine(db: &Path, k: Option<usize>, min_util: Option<u64>) -> Result<u8, Failure> {
    let text = fs::read_to_string(db).map_err(|e| {
        stage(
            "load",
            Error::Io {
                path: db.into(),
                source: e,
            },
        )
    })?;
    let db = TransactionDB::parse(&text).map_err(|e| stage("load", e))?;
    let threshold = match (k, min_util) {
        (Some(0), _) => return Err(validation("k must be at least 1")),
        (Some(k), _) => Threshold::TopK(k),
        (None, Some(u)) => Threshold::MinUtil(u),
        (None, None) => return Err(validation("one of --k or --min-util is required")),
    };
    let mut stdout = std::io::stdout().lock();
    for set in mine(&db, threshold) {
        let _ = writeln!(stdout, "{}", set.display(&db));
    }
    Ok(OK)
}

fn cmd_eval(theory: &Path, rows: Rows, args: &ConfigArgs) -> Result<u8, Failure> {
    let cfg = load_config(args)?;
    let (prepared, _) = load_prepared(&cfg)?;
    let text = fs::read_to_string(theory).map_err(|e| {
        stage(
            "load",
            Error::Io {
                path: theory.into(),
                source: e,
            },
        )
    })?;
    let parsed = parse_theory(&text, &prepared.train).map_err(|e| stage("parse", e))?;
    let data = select(&prepared, rows);
    let metrics = evaluate(&parsed, &data).map_err(|e| stage("evaluate", e))?;
    println!("{metrics}");
    println!(
        "{}",
        metrics
            .to_json()
            .map_err(|e| stage("evaluate", e))?
            .trim_end()
    );
    Ok(OK)
}

fn cmd_explain(rows: Rows, args: &ConfigArgs) -> Result<u8, Failure> {
    let cfg = load_config(args)?;
    let (prepared, _) = load_prepared(&cfg)?;
    let model = train(&prepared.train, &cfg.pipeline.boost).map_err(|e| stage("train", e))?;
    let data = select(&prepared, rows);
    let shap = explain_dataset(&model, &data, &prepared.train, &cfg.pipeline.explain)
        .map_err(|e| stage("explain", e))?;
    let mut buf = Vec::new();
    shap.write_csv(&prepared.items, &mut buf)
        .map_err(|e| stage("write", e))?;
    write_file(&cfg.shap_out, &buf)?;
    let json = model_to_json(&model, &prepared.items).map_err(|e| stage("write", e))?;
    write_file(&cfg.model_out, json.as_bytes())?;
    println!(
        "wrote {} attribution rows ({:?}, max std error {:.2e}) to {}",
        shap.attributions.len(),
        shap.mode,
        shap.max_std_error,
        cfg.shap_out.display()
    );
    Ok(OK)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { VALIDATION } else { OK });
        }
    };
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Mine { db, k, min_util } => cmd_mine(db, *k, *min_util),
        Command::Eval {
            theory,
            rows,
            config,
        } => cmd_eval(theory, *rows, config),
        Command::Explain { rows, config } => cmd_explain(*rows, config),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
