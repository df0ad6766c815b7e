//! The `maxup-lab` command line: `train`, `verify` and `bench`.
//!
//! A run is described by one JSON document ([`RunConfig`]). `--set a.b=v`
//! overrides any dot-path before the document is checked; `v` is read as JSON
//! when it parses and as a string otherwise. The top-level `seed` is copied
//! into every section, so one number fixes all randomness.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error (nothing
//! is written), 3 at least one verification check did not pass.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::data::{generate, Dataset, DatasetMeta, DatasetSpec};
use crate::error::Error;
use crate::math::stats::median;
use crate::math::RngStream;
use crate::models::{Activation, Model, ModelKind};
use crate::trainers::{mean_input_grad_norm, train, Method, TrainConfig, TrainTrace};
use crate::verify::{
    run_check, summary_table, to_jsonl, CheckOutput, VerifyOptions, CHECK_NAMES, DEFAULT_SAMPLES,
};

const MODEL_STREAM: u64 = 0x30de1;
pub const THREADS_ENV: &str = "MAXUP_LAB_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "linear_kind")]
    pub kind: ModelKind,
    /// Hidden widths for `mlp`.
    #[serde(default)]
    pub hidden: Vec<usize>,
    #[serde(default = "tanh")]
    pub activation: Activation,
}

fn linear_kind() -> ModelKind {
    ModelKind::Linear
}

fn tanh() -> Activation {
    Activation::Tanh
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Linear,
            hidden: Vec::new(),
            activation: Activation::Tanh,
        }
    }
}

impl ModelConfig {
    /// Fresh parameters for `d` inputs and `outputs` scores.
    pub fn build(&self, d: usize, outputs: usize, seed: u64) -> crate::Result<Model> {
        let mut rng = RngStream::derived(seed, &[MODEL_STREAM]);
        match self.kind {
            ModelKind::Linear => Ok(Model::linear_init(d, outputs, &mut rng)),
            ModelKind::Mlp => {
                let mut dims = vec![d];
                dims.extend(&self.hidden);
                dims.push(outputs);
                Model::mlp(&dims, self.activation, &mut rng)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "all_checks")]
    pub checks: Vec<String>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn all_checks() -> Vec<String> {
    CHECK_NAMES.iter().map(|s| s.to_string()).collect()
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            checks: all_checks(),
            samples: DEFAULT_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default = "all_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "one")]
    pub repeats: usize,
}

fn all_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn one() -> usize {
    1
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            methods: all_methods(),
            repeats: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DatasetSpec>,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub bench: BenchConfig,
}

/// Why a command stopped.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(Error),
    ChecksFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Config(_) => 2,
            CliError::ChecksFailed(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Runtime(e) => write!(f, "error: {e}"),
            CliError::ChecksFailed(n) => write!(f, "{n} check(s) did not pass"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::ConfigInvalid { .. } => CliError::Config(e.to_string()),
            other => CliError::Runtime(other),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "maxup-lab",
    version,
    about = "Worst-case augmentation training and smoothing checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one model and write its trace, checkpoint and resolved config.
    Train(CommonArgs),
    /// Run numerical checks and write JSON-lines reports.
    Verify(VerifyArgs),
    /// Train every method on shared data and compare.
    Bench(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a dot-path, e.g. `train.m=8`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated check names.
    #[arg(long, value_delimiter = ',')]
    checks: Vec<String>,
    /// Monte-Carlo draws per estimate.
    #[arg(long)]
    samples: Option<usize>,
}

/// Parse arguments, run the command and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("{e}");
        return e.exit_code();
    }
    let result = match cli.command {
        Command::Train(a) => load_config(&a, &[]).and_then(|c| cmd_train(&c, &a.out)),
        Command::Bench(a) => load_config(&a, &[]).and_then(|c| cmd_bench(&c, &a.out)),
        Command::Verify(v) => {
            let mut extra = Vec::new();
            if !v.checks.is_empty() {
                extra.push(("verify.checks".to_string(), Value::from(v.checks.clone())));
            }
            if let Some(s) = v.samples {
                extra.push(("verify.samples".to_string(), Value::from(s)));
            }
            load_config(&v.common, &extra).and_then(|c| cmd_verify(&c, &v.common.out))
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Config(format!(
            "{THREADS_ENV} must be a positive integer, got `{raw}`"
        ))
    })?;
    // A second initialization (e.g. in tests) keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

/// Insert `value` at the dot-separated `path`, creating objects as needed.
pub fn set_path(root: &mut Value, path: &str, value: Value) -> CliResult<()> {
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("bad override key `{path}`")));
    }
    let mut cur = root;
    for (i, part) in parts.iter().enumerate() {
        let Value::Object(map) = cur else {
            return Err(CliError::Config(format!(
                "`{}` is not an object, cannot set `{path}`",
                parts[..i].join(".")
            )));
        };
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        cur = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("path has at least one part")
}

fn parse_override(raw: &str) -> CliResult<(String, Value)> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{raw}` is not KEY=VALUE")))?;
    let value = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
    Ok((key.trim().to_string(), value))
}

/// Build the resolved configuration from an optional file, overrides and a seed.
pub fn resolve_config(
    config: Option<&Path>,
    overrides: &[String],
    seed: Option<u64>,
    extra: &[(String, Value)],
) -> CliResult<RunConfig> {
    let mut root = match config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Default::default()),
    };
    for raw in overrides {
        let (k, v) = parse_override(raw)?;
        set_path(&mut root, &k, v)?;
    }
    for (k, v) in extra {
        set_path(&mut root, k, v.clone())?;
    }
    if let Some(s) = seed {
        set_path(&mut root, "seed", Value::from(s))?;
    }
    let mut cfg: RunConfig = serde_path_to_error::deserialize(root).map_err(|e| {
        let key = e.path().to_string();
        CliError::Config(format!("at `{key}`: {}", e.inner()))
    })?;
    if let Some(t) = cfg.train.as_mut() {
        t.seed = cfg.seed;
    }
    if let Some(d) = cfg.data.as_mut() {
        d.seed = cfg.seed;
    }
    Ok(cfg)
}

fn load_config(a: &CommonArgs, extra: &[(String, Value)]) -> CliResult<RunConfig> {
    resolve_config(a.config.as_deref(), &a.set, a.seed, extra)
}

fn training_parts(cfg: &RunConfig) -> CliResult<(&TrainConfig, &DatasetSpec)> {
    let t = cfg
        .train
        .as_ref()
        .ok_or_else(|| CliError::Config("missing section `train`".into()))?;
    let d = cfg
        .data
        .as_ref()
        .ok_or_else(|| CliError::Config("missing section `data`".into()))?;
    t.validate()?;
    d.validate()
        .map_err(|e| CliError::Config(format!("at `data`: {e}")))?;
    if cfg.model.kind == ModelKind::Mlp && cfg.model.hidden.contains(&0) {
        return Err(CliError::Config(
            "at `model.hidden`: widths must be positive".into(),
        ));
    }
    Ok((t, d))
}

fn fresh_model(cfg: &RunConfig, train_set: &Dataset, seed: u64) -> crate::Result<Model> {
    let outputs = train_set.num_classes().unwrap_or(1);
    cfg.model.build(train_set.dim(), outputs, seed)
}

fn write_resolved(cfg: &RunConfig, out: &Path) -> crate::Result<()> {
    std::fs::write(
        out.join("resolved_config.json"),
        serde_json::to_string_pretty(cfg)? + "\n",
    )?;
    Ok(())
}

pub fn cmd_train(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let (tcfg, dspec) = training_parts(cfg)?;
    let (train_set, test_set) = generate(dspec)?;
    let model = fresh_model(cfg, &train_set, cfg.seed)?;
    let (model, trace) = train(&model, &train_set, &test_set, tcfg)?;
    std::fs::create_dir_all(out).map_err(Error::from)?;
    trace.save_csv(&out.join("trace.csv"))?;
    model.save_json(&out.join("model.json"))?;
    write_resolved(cfg, out)?;
    DatasetMeta::describe(dspec, &train_set, &test_set).save(&out.join("data_meta.json"))?;
    if let Some(r) = trace.last() {
        println!(
            "{} m={} epochs={}: train_loss={:.6} test_loss={:.6} test_acc={:.4} grad_norm={:.6}",
            tcfg.method.name(),
            tcfg.m,
            tcfg.epochs,
            r.train_loss,
            r.test_loss,
            r.test_acc,
            r.mean_input_grad_norm
        );
    }
    Ok(())
}

pub fn cmd_verify(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    if let Some(bad) = cfg
        .verify
        .checks
        .iter()
        .find(|c| !CHECK_NAMES.contains(&c.as_str()))
    {
        return Err(CliError::Config(format!(
            "at `verify.checks`: unknown check `{bad}`; valid checks: {}",
            CHECK_NAMES.join(", ")
        )));
    }
    if cfg.verify.samples < 2 {
        return Err(CliError::Config(
            "at `verify.samples`: need at least 2".into(),
        ));
    }
    let opts = VerifyOptions {
        samples: cfg.verify.samples,
        seed: cfg.seed,
    };
    let outputs = cfg
        .verify
        .checks
        .par_iter()
        .map(|name| run_check(name, &opts))
        .collect::<crate::Result<Vec<CheckOutput>>>()?;
    let reports: Vec<_> = outputs
        .iter()
        .flat_map(|o| o.reports.iter().cloned())
        .collect();
    let mut residuals = String::from("probe,scale,residual,standard_error,leading_term\n");
    for row in outputs.iter().flat_map(|o| &o.residual_rows) {
        residuals.push_str(row);
        residuals.push('\n');
    }
    let table = summary_table(&reports);
    std::fs::create_dir_all(out).map_err(Error::from)?;
    std::fs::write(out.join("reports.jsonl"), to_jsonl(&reports)?).map_err(Error::from)?;
    std::fs::write(out.join("summary.txt"), &table).map_err(Error::from)?;
    std::fs::write(out.join("residuals.csv"), residuals).map_err(Error::from)?;
    if let Some(gap) = outputs.iter().find_map(|o| o.gap_table.as_ref()) {
        std::fs::write(out.join("gap_table.csv"), gap.to_csv()).map_err(Error::from)?;
    }
    write_resolved(cfg, out)?;
    print!("{table}");
    let failed = reports.iter().filter(|r| !r.passed()).count();
    if failed > 0 {
        return Err(CliError::ChecksFailed(failed));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub repeat: usize,
    pub method: Method,
    pub seed: u64,
    pub dataset_hash: String,
    pub m: usize,
    pub epochs: usize,
    pub final_train_loss: f64,
    pub final_test_loss: f64,
    pub final_test_acc: f64,
    pub mean_input_grad_norm: f64,
    pub forward_count: u64,
    pub backward_count: u64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
}

impl BenchTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "repeat,method,seed,dataset_hash,m,epochs,final_train_loss,final_test_loss,final_test_acc,\
             mean_input_grad_norm,forward_count,backward_count,wall_seconds\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{:?},{:?},{:?},{:?},{},{},{:.6}",
                r.repeat,
                r.method.name(),
                r.seed,
                r.dataset_hash,
                r.m,
                r.epochs,
                r.final_train_loss,
                r.final_test_loss,
                r.final_test_acc,
                r.mean_input_grad_norm,
                r.forward_count,
                r.backward_count,
                r.wall_seconds
            );
        }
        s
    }

    pub fn rows_for(&self, method: Method) -> impl Iterator<Item = &BenchRow> {
        self.rows.iter().filter(move |r| r.method == method)
    }

    /// Per-method medians over repeats, in first-appearance order.
    pub fn medians_csv(&self) -> String {
        let mut s = String::from(
            "method,repeats,final_test_loss,final_test_acc,mean_input_grad_norm,forward_count,backward_count,wall_seconds\n",
        );
        let mut methods: Vec<Method> = Vec::new();
        for r in &self.rows {
            if !methods.contains(&r.method) {
                methods.push(r.method);
            }
        }
        for m in methods {
            let col = |f: &dyn Fn(&BenchRow) -> f64| {
                median(&mut self.rows_for(m).map(f).collect::<Vec<_>>())
            };
            let _ = writeln!(
                s,
                "{},{},{:?},{:?},{:?},{:?},{:?},{:.6}",
                m.name(),
                self.rows_for(m).count(),
                col(&|r| r.final_test_loss),
                col(&|r| r.final_test_acc),
                col(&|r| r.mean_input_grad_norm),
                col(&|r| r.forward_count as f64),
                col(&|r| r.backward_count as f64),
                col(&|r| r.wall_seconds)
            );
        }
        s
    }
}

/// Every configured method on the same data and initial model, `repeats` times
/// with seeds `seed, seed + 1, ...`.
pub fn run_bench(cfg: &RunConfig) -> CliResult<BenchTable> {
    let (tcfg, dspec) = training_parts(cfg)?;
    if cfg.bench.repeats == 0 {
        return Err(CliError::Config(
            "at `bench.repeats`: must be positive".into(),
        ));
    }
    if cfg.bench.methods.is_empty() {
        return Err(CliError::Config("at `bench.methods`: list is empty".into()));
    }
    let per_repeat = (0..cfg.bench.repeats)
        .into_par_iter()
        .map(|repeat| -> crate::Result<Vec<BenchRow>> {
            let seed = cfg.seed.wrapping_add(repeat as u64);
            let spec = DatasetSpec {
                seed,
                ..dspec.clone()
            };
            let (train_set, test_set) = generate(&spec)?;
            let hash = train_set.content_hash();
            let model = fresh_model(cfg, &train_set, seed)?;
            cfg.bench
                .methods
                .iter()
                .map(|&method| {
                    let run_cfg = TrainConfig {
                        method,
                        seed,
                        ..tcfg.clone()
                    };
                    let start = Instant::now();
                    let (trained, trace) = train(&model, &train_set, &test_set, &run_cfg)?;
                    let wall_seconds = start.elapsed().as_secs_f64();
                    bench_row(
                        repeat,
                        &run_cfg,
                        &hash,
                        &trained,
                        &trace,
                        &train_set,
                        wall_seconds,
                    )
                })
                .collect()
        })
        .collect::<crate::Result<Vec<_>>>()?;
    Ok(BenchTable {
        rows: per_repeat.into_iter().flatten().collect(),
    })
}

fn bench_row(
    repeat: usize,
    cfg: &TrainConfig,
    hash: &str,
    model: &Model,
    trace: &TrainTrace,
    train_set: &Dataset,
    wall_seconds: f64,
) -> crate::Result<BenchRow> {
    let totals = trace.totals();
    let last = trace.last();
    Ok(BenchRow {
        repeat,
        method: cfg.method,
        seed: cfg.seed,
        dataset_hash: hash.to_string(),
        m: cfg.m,
        epochs: cfg.epochs,
        final_train_loss: last.map_or(f64::NAN, |r| r.train_loss),
        final_test_loss: last.map_or(f64::NAN, |r| r.test_loss),
        final_test_acc: last.map_or(f64::NAN, |r| r.test_acc),
        mean_input_grad_norm: last.map_or_else(
            || mean_input_grad_norm(model, &cfg.loss, train_set),
            |r| Ok(r.mean_input_grad_norm),
        )?,
        forward_count: totals.forward,
        backward_count: totals.backward,
        wall_seconds,
    })
}

pub fn cmd_bench(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let table = run_bench(cfg)?;
    std::fs::create_dir_all(out).map_err(Error::from)?;
    std::fs::write(out.join("bench.csv"), table.to_csv()).map_err(Error::from)?;
    let medians = table.medians_csv();
    std::fs::write(out.join("bench_medians.csv"), &medians).map_err(Error::from)?;
    write_resolved(cfg, out)?;
    print!("{medians}");
    Ok(())
}
