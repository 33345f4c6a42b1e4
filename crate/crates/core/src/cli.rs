//! Command-line front end: config loading, subcommands and report emission.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::chain::{build_chain, builtin_chain, BuiltinKind, Chain, ChainDescription};
use crate::densechain::{build_dense, check_splitting, DecompositionSpec, TRUNCATION_NOTE};
use crate::error::JsumError;
use crate::estimates::{run_suite_with, SuiteOptions, SuiteReport};
use crate::extraction::{
    attach_functionals, default_threshold, select_sequence, skipped_blocks_basis, verify_block_system, SubspaceM,
};
use crate::jnorm::{self, jnorm, jnorm_oracle_with_limit, DEFAULT_ORACLE_LIMIT};
use crate::projections::{apply_projection, ProjectionSpec};
use crate::random::{random_vector, rng_for, GENERATOR};
use crate::vector::{JVector, JVectorData, Tail};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Stream reserved for subspace generators, apart from per-trial streams.
const GENERATOR_STREAM: u64 = 0xB10C;

#[derive(Debug, Parser)]
#[command(
    name = "jsum",
    version,
    about = "Norms, projections and inequality checks for J-sums of finite chains"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Evaluate the J-norm of one vector.
    Norm,
    /// Apply a projection to one vector.
    Project,
    /// Run the randomized check suite.
    Suite,
    /// Extract a block system from a subspace.
    Extract,
    /// Dense subspace chain experiment.
    Dense,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Norm => "norm",
            Command::Project => "project",
            Command::Suite => "suite",
            Command::Extract => "extract",
            Command::Dense => "dense",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// JSON experiment config; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Also run the brute-force evaluation.
    #[arg(long, global = true)]
    pub oracle: bool,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Override the outer exponent of the chain.
    #[arg(long, global = true)]
    pub q: Option<f64>,
    /// Builtin chain: james:N, lpn:N:p1,p2,...:dims or random:seed:N:max_dim.
    #[arg(long, global = true)]
    pub chain: Option<String>,
    /// Vector blocks separated by ';', coordinates by ',', e.g. "1;0;1".
    #[arg(long, global = true)]
    pub vector: Option<String>,
    /// Tail of the vector: zero or eventually-constant.
    #[arg(long, global = true)]
    pub tail: Option<String>,
    /// Projection as JSON, e.g. '{"P":{"lo":1,"hi":2}}'.
    #[arg(long, global = true)]
    pub projection: Option<String>,
    /// Subspace generator: skipped-blocks:COUNT or unit:I,J,...
    #[arg(long, global = true)]
    pub subspace: Option<String>,
    /// Decomposition as JSON, e.g. '{"D":2,"p":2,"blocks":[[1],[2]]}'.
    #[arg(long, global = true)]
    pub dense: Option<String>,
    #[arg(long, global = true)]
    pub k_max: Option<usize>,
    /// Scale one map, INDEX:FACTOR; the chain switches to asserted mode.
    #[arg(long, global = true)]
    pub perturb: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChainSource {
    Builtin(BuiltinKind),
    Inline(ChainDescription),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case")]
pub enum SubspaceGenerator {
    SkippedBlocks {
        count: usize,
        #[serde(default = "default_leak")]
        leak: f64,
    },
    /// Span of unit vectors `e_i` (first coordinate of block `i`).
    Unit { indices: Vec<usize> },
}

fn default_leak() -> f64 {
    5e-4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SubspaceSource {
    Generator(SubspaceGenerator),
    Basis { basis: Vec<JVectorData> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapPerturbation {
    pub map: usize,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub chain: Option<ChainSource>,
    pub vector: Option<Vec<Vec<f64>>>,
    pub tail: Option<Tail>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub oracle: Option<bool>,
    pub oracle_limit: Option<usize>,
    pub q: Option<f64>,
    pub projection: Option<ProjectionSpec>,
    pub subspace: Option<SubspaceSource>,
    pub k_max: Option<usize>,
    pub n1: Option<usize>,
    pub dense: Option<DecompositionSpec>,
    /// Request the embedding certificate in dense runs.
    pub certificate: Option<bool>,
    pub perturb: Option<MapPerturbation>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Check(_) => EXIT_CHECK_FAILED,
        }
    }
}

impl From<JsumError> for CliError {
    fn from(e: JsumError) -> Self {
        CliError::Usage(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub artifact: String,
    pub version: String,
    pub command: String,
    pub chain_hash: Option<String>,
    pub seed: Option<u64>,
    pub generator: String,
}

/// Parse `argv` (program name first), run, and return the exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(stderr, "{e}")
            } else {
                write!(stdout, "{e}")
            };
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

/// Run a parsed command, writing the report; returns the exit code.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> CliResult<i32> {
    let cfg = load_config(cli.opts.config.as_deref())?;
    let cfg = merge(cfg, &cli.opts)?;
    let (header, body, csv, code) = match cli.command {
        Command::Norm => cmd_norm(&cfg)?,
        Command::Project => cmd_project(&cfg)?,
        Command::Suite => cmd_suite(&cfg)?,
        Command::Extract => cmd_extract(&cfg)?,
        Command::Dense => cmd_dense(&cfg)?,
    };
    let header = ReportHeader {
        artifact: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: cli.command.name().to_string(),
        chain_hash: header.0,
        seed: header.1,
        generator: GENERATOR.to_string(),
    };
    let report = json!({ "header": header, "result": body });
    let text = serde_json::to_string_pretty(&report).expect("reports serialize") + "\n";
    match &cfg.out {
        Some(path) => {
            write_file(path, &text)?;
            if let Some(csv) = csv {
                write_file(&path.with_extension("csv"), &csv)?;
            }
            let _ = writeln!(stdout, "wrote {}", path.display());
        }
        None => {
            let _ = stdout.write_all(text.as_bytes());
        }
    }
    if code == EXIT_CHECK_FAILED {
        if let Some(msg) = body.get("diagnostic").and_then(Value::as_str) {
            return Err(CliError::Check(msg.to_string()));
        }
    }
    Ok(code)
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).or_else(|e| usage(format!("cannot write {}: {e}", path.display())))
}

pub fn load_config(path: Option<&Path>) -> CliResult<ExperimentConfig> {
    let Some(path) = path else {
        return Ok(ExperimentConfig::default());
    };
    let text = std::fs::read_to_string(path).or_else(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).or_else(|e| usage(format!("malformed config {}: {e}", path.display())))
}

fn parse_json<T: for<'de> Deserialize<'de>>(what: &str, s: &str) -> CliResult<T> {
    serde_json::from_str(s).or_else(|e| usage(format!("malformed {what}: {e}")))
}

fn parse_vector(s: &str) -> CliResult<Vec<Vec<f64>>> {
    s.split(';')
        .map(|block| {
            block
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .or_else(|_| usage(format!("bad coordinate {t:?}")))
                })
                .collect()
        })
        .collect()
}

fn parse_tail(s: &str) -> CliResult<Tail> {
    match s {
        "zero" => Ok(Tail::Zero),
        "eventually-constant" | "constant" => Ok(Tail::EventuallyConstant),
        _ => usage(format!("unknown tail {s:?}")),
    }
}

fn parse_subspace(s: &str) -> CliResult<SubspaceSource> {
    let bad = || CliError::Usage(format!("unrecognised subspace {s:?}"));
    let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
    let gen = match kind {
        "skipped-blocks" => SubspaceGenerator::SkippedBlocks {
            count: rest.parse().map_err(|_| bad())?,
            leak: default_leak(),
        },
        "unit" => SubspaceGenerator::Unit {
            indices: rest
                .split(',')
                .map(|t| t.trim().parse().map_err(|_| bad()))
                .collect::<CliResult<_>>()?,
        },
        _ => return Err(bad()),
    };
    Ok(SubspaceSource::Generator(gen))
}

fn parse_perturb(s: &str) -> CliResult<MapPerturbation> {
    let bad = || CliError::Usage(format!("perturbation must be INDEX:FACTOR, got {s:?}"));
    let (m, f) = s.split_once(':').ok_or_else(bad)?;
    Ok(MapPerturbation {
        map: m.parse().map_err(|_| bad())?,
        scale: f.parse().map_err(|_| bad())?,
    })
}

/// Flags take precedence over config fields.
pub fn merge(mut cfg: ExperimentConfig, o: &Options) -> CliResult<ExperimentConfig> {
    if let Some(c) = &o.chain {
        cfg.chain = Some(ChainSource::Named(c.clone()));
    }
    if let Some(v) = &o.vector {
        cfg.vector = Some(parse_vector(v)?);
    }
    if let Some(t) = &o.tail {
        cfg.tail = Some(parse_tail(t)?);
    }
    if let Some(p) = &o.projection {
        cfg.projection = Some(parse_json("projection", p)?);
    }
    if let Some(s) = &o.subspace {
        cfg.subspace = Some(parse_subspace(s)?);
    }
    if let Some(d) = &o.dense {
        cfg.dense = Some(parse_json("decomposition", d)?);
    }
    if let Some(p) = &o.perturb {
        cfg.perturb = Some(parse_perturb(p)?);
    }
    cfg.seed = o.seed.or(cfg.seed);
    cfg.trials = o.trials.or(cfg.trials);
    cfg.q = o.q.or(cfg.q);
    cfg.k_max = o.k_max.or(cfg.k_max);
    cfg.out = o.out.clone().or(cfg.out);
    if o.oracle {
        cfg.oracle = Some(true);
    }
    Ok(cfg)
}

pub fn resolve_chain(cfg: &ExperimentConfig) -> CliResult<Chain> {
    let chain = match &cfg.chain {
        None => return usage("no chain given (use --chain or the config's \"chain\" field)"),
        Some(ChainSource::Builtin(kind)) => builtin_chain(kind)?,
        Some(ChainSource::Named(name)) => builtin_chain(&name.parse()?)?,
        Some(ChainSource::Inline(desc)) => build_chain(desc)?,
    };
    let chain = match cfg.q {
        Some(q) => chain.with_q(q)?,
        None => chain,
    };
    Ok(match cfg.perturb {
        Some(MapPerturbation { map, scale }) => chain.with_scaled_map(map, scale)?,
        None => chain,
    })
}

fn require_seed(cfg: &ExperimentConfig, why: &str) -> CliResult<u64> {
    cfg.seed
        .ok_or_else(|| CliError::Usage(format!("a seed is required {why}")))
}

fn resolve_vector(cfg: &ExperimentConfig, chain: &Chain) -> CliResult<JVector> {
    let tail = cfg.tail.unwrap_or_default();
    match &cfg.vector {
        Some(blocks) => Ok(JVector::from_vecs(chain, blocks, tail)?),
        None => {
            let seed = require_seed(cfg, "to generate a vector")?;
            Ok(random_vector(&mut rng_for(seed, 0), chain, tail))
        }
    }
}

type Outcome = ((Option<String>, Option<u64>), Value, Option<String>, i32);

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

pub fn cmd_norm(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let chain = resolve_chain(cfg)?;
    let x = resolve_vector(cfg, &chain)?;
    let cert = jnorm(&chain, &x)?;
    let mut body = json!({ "vector": x.data(), "certificate": cert });
    if cfg.oracle.unwrap_or(false) {
        let limit = cfg.oracle_limit.unwrap_or(DEFAULT_ORACLE_LIMIT);
        let oracle = jnorm_oracle_with_limit(&chain, &x, limit)?;
        body["difference"] = json!((cert.value - oracle.value).abs());
        body["oracle"] = to_value(&oracle);
    }
    Ok(((Some(chain.hash()), cfg.seed), body, None, EXIT_OK))
}

pub fn cmd_project(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let chain = resolve_chain(cfg)?;
    let x = resolve_vector(cfg, &chain)?;
    let spec = cfg
        .projection
        .as_ref()
        .ok_or_else(|| CliError::Usage("no projection given".into()))?;
    let y = apply_projection(&chain, &x, spec)?;
    let body = json!({
        "projection": spec,
        "input": x.data(),
        "output": y.data(),
        "input_norm": jnorm::norm(&chain, &x)?,
        "output_norm": jnorm::norm(&chain, &y)?,
    });
    Ok(((Some(chain.hash()), cfg.seed), body, None, EXIT_OK))
}

pub fn cmd_suite(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let chain = resolve_chain(cfg)?;
    let seed = require_seed(cfg, "for the suite")?;
    let mut opts = SuiteOptions::new(cfg.trials.unwrap_or(100), seed);
    if let Some(limit) = cfg.oracle_limit {
        opts.oracle_limit = limit;
    }
    let report = run_suite_with(&chain, opts);
    let code = if report.all_passed() {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    };
    let csv = report.to_csv();
    Ok(((Some(chain.hash()), Some(seed)), to_value(&report), Some(csv), code))
}

fn resolve_subspace(cfg: &ExperimentConfig, chain: &Chain, seed: u64) -> CliResult<SubspaceM> {
    let source = cfg
        .subspace
        .as_ref()
        .ok_or_else(|| CliError::Usage("no subspace given".into()))?;
    let basis = match source {
        SubspaceSource::Basis { basis } => basis
            .iter()
            .map(|d| JVector::from_data(chain, d))
            .collect::<crate::error::Result<Vec<_>>>()?,
        SubspaceSource::Generator(SubspaceGenerator::SkippedBlocks { count, leak }) => {
            skipped_blocks_basis(&mut rng_for(seed, GENERATOR_STREAM), chain, *count, *leak)?
        }
        SubspaceSource::Generator(SubspaceGenerator::Unit { indices }) => indices
            .iter()
            .map(|&i| {
                if i == 0 || i > chain.len() {
                    return Err(JsumError::IndexOutOfRange {
                        index: i,
                        max: chain.len(),
                    });
                }
                let mut v = nalgebra::DVector::zeros(chain.dim(i));
                v[0] = 1.0;
                JVector::single(chain, i, v)
            })
            .collect::<crate::error::Result<Vec<_>>>()?,
    };
    Ok(SubspaceM::new(chain, basis)?)
}

pub fn cmd_extract(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let chain = resolve_chain(cfg)?;
    let seed = require_seed(cfg, "for extraction")?;
    let m = resolve_subspace(cfg, &chain, seed)?;
    let k_max = cfg.k_max.unwrap_or(6);
    let n1 = cfg.n1.unwrap_or(1);
    let hdr = (Some(chain.hash()), Some(seed));
    let failed = |e: JsumError| {
        let diagnostic = match &e {
            JsumError::ThresholdUnreachable {
                k,
                ratio,
                threshold,
                stage,
            } => {
                format!("ratio {ratio} at k={k} ({stage} threshold {threshold})")
            }
            other => other.to_string(),
        };
        (json!({ "diagnostic": diagnostic }), EXIT_CHECK_FAILED)
    };
    let system = match select_sequence(&chain, &m, k_max, n1, &default_threshold) {
        Ok(s) => s,
        Err(e @ JsumError::ThresholdUnreachable { .. }) => {
            let (body, code) = failed(e);
            return Ok((hdr, body, None, code));
        }
        Err(e) => return Err(e.into()),
    };
    let system = match attach_functionals(&chain, system) {
        Ok(s) => s,
        Err(e @ JsumError::BlockTooSmall { .. }) => {
            let (body, code) = failed(e);
            return Ok((hdr, body, None, code));
        }
        Err(e) => return Err(e.into()),
    };
    let verification = verify_block_system(&chain, &m, &system, cfg.trials.unwrap_or(100), seed)?;
    let code = if verification.all_passed() {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    };
    let body = json!({
        "block_system": system.data(),
        "verification": { "counts": verification.counts, "worst": verification.worst },
        "failures": verification.failures().collect::<Vec<_>>(),
    });
    Ok((hdr, body, Some(verification.to_csv()), code))
}

pub fn cmd_dense(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let spec = cfg
        .dense
        .as_ref()
        .ok_or_else(|| CliError::Usage("no decomposition given".into()))?;
    let seed = require_seed(cfg, "for dense sampling")?;
    let dense = build_dense(spec)?;
    let mut reports = check_splitting(&dense, cfg.trials.unwrap_or(100), seed)?;
    if !cfg.certificate.unwrap_or(true) {
        reports.retain(|r| !r.check.starts_with("dense_certificate") && r.check != "dense_norm_bound");
    }
    let report = SuiteReport::from_reports(reports);
    let code = if report.all_passed() {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    };
    let mut body = to_value(&report);
    body["note"] = json!(TRUNCATION_NOTE);
    Ok((
        (Some(dense.chain().hash()), Some(seed)),
        body,
        Some(report.to_csv()),
        code,
    ))
}
