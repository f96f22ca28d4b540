//! Experiment orchestration: a single JSON config describes the stream,
//! the pipeline knobs, the methods to compare, and the seed list; the
//! commands here generate stream files, run every method over every seed,
//! chart divergence evolution along the chains, and assemble bound
//! reports. Every emitted file is a deterministic function of the config:
//! no wall-clock values, no environment variables, no map-order
//! dependence. Floats are written with 17 significant digits so a parsed
//! value is bitwise the value that was written.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{run_baseline, BaselineKind, BaselineSpec};
use crate::bounds::{
    compute_bound, random_instance, verify_chain_inequality, BoundParams, BoundReport,
    ChainDivergences, DivKind, LinkDivergence,
};
use crate::divergence::mmd2_biased;
use crate::error::{Error, Result};
use crate::meta::{evaluate, run_l2e, HistoricalReport, L2ECfg, RunResult};
use crate::numerics::{forward, Arch, ModelParams};
use crate::taskstream::{gen_stream, save_csv, DynamicStream, StreamCfg, TaskSnapshot};

/// The whole experiment in one document. Unknown keys are rejected so a
/// typo cannot silently fall back to a default.
///
/// Per run, both the stream seed and the model seed are set to the run
/// seed, making every seed a fully independent replicate; the `seed`
/// fields inside `stream` and `l2e` only matter for library use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub stream: StreamCfg,
    pub l2e: L2ECfg,
    /// Methods to run: `l2e` and/or baseline names.
    pub methods: Vec<String>,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub report: ReportOptions,
    pub bound: BoundSection,
    pub divergence: DivergenceSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            stream: StreamCfg::default(),
            l2e: L2ECfg::default(),
            methods: vec!["l2e".into(), "source_only".into()],
            seeds: vec![0, 1, 2, 3, 4],
            out_dir: PathBuf::from("out"),
            report: ReportOptions::default(),
            bound: BoundSection::default(),
            divergence: DivergenceSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("seeds list must not be empty"));
        }
        if self.methods.is_empty() {
            return Err(Error::config("methods list must not be empty"));
        }
        for name in &self.methods {
            Method::parse(name)?;
        }
        self.stream.validate()?;
        self.l2e.validate()?;
        self.bound.validate()
    }

    pub fn resolved_methods(&self) -> Result<Vec<Method>> {
        self.methods.iter().map(|m| Method::parse(m)).collect()
    }

    fn stream_for_seed(&self, seed: u64) -> StreamCfg {
        StreamCfg { seed, ..self.stream.clone() }
    }

    fn l2e_for_seed(&self, seed: u64) -> L2ECfg {
        L2ECfg { seed, ..self.l2e.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportOptions {
    /// Save initialization and final-model checkpoints per run.
    pub save_checkpoints: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions { save_checkpoints: true }
    }
}

/// Inputs for `cmd_divergence`. With a checkpoint the table gains
/// embedding-level columns next to the raw-feature ones.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DivergenceSection {
    pub checkpoint: Option<PathBuf>,
}

/// Inputs for `cmd_bound`: either a self-contained oracle sweep over
/// random discrete instances, or plug-in evaluation of a trained
/// checkpoint on the configured stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundSection {
    pub mode: BoundMode,
    /// Divergence notion used for the plug-in report.
    pub kind: DivKind,
    pub mu: f64,
    pub delta: f64,
    /// Adaptation sample size; `None` takes the stream's snapshot size.
    pub m_tilde: Option<usize>,
    pub mmd_scale: f64,
    /// Complexity estimate to include; `None` leaves the term out and
    /// notes its absence in the report.
    pub r_tilde: Option<f64>,
    /// Trained model for plug-in mode.
    pub checkpoint: Option<PathBuf>,
    pub oracle: OracleSection,
}

impl Default for BoundSection {
    fn default() -> Self {
        BoundSection {
            mode: BoundMode::Oracle,
            kind: DivKind::Mmd,
            mu: 1.0,
            delta: 0.05,
            m_tilde: None,
            mmd_scale: 1.0,
            r_tilde: None,
            checkpoint: None,
            oracle: OracleSection::default(),
        }
    }
}

impl BoundSection {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config(format!(
                "bound delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if !(self.mu > 0.0) || !(self.mmd_scale > 0.0) {
            return Err(Error::config("bound mu and mmd_scale must be positive"));
        }
        if self.mode == BoundMode::Oracle && self.oracle.instances == 0 {
            return Err(Error::config("oracle sweep needs at least one instance"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMode {
    Oracle,
    Plugin,
}

/// Shape of the random discrete instances for the oracle sweep; instance
/// `i` uses seed `seed + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub instances: usize,
    pub seed: u64,
    pub max_support: usize,
    pub max_steps: usize,
    pub max_hypotheses: usize,
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection {
            instances: 200,
            seed: 0,
            max_support: 6,
            max_steps: 4,
            max_hypotheses: 32,
        }
    }
}

/// A runnable method name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    L2e,
    Baseline(BaselineKind),
}

impl Method {
    pub fn parse(name: &str) -> Result<Method> {
        if name == "l2e" {
            return Ok(Method::L2e);
        }
        BaselineKind::from_str(name)
            .map(Method::Baseline)
            .map_err(|_| {
                Error::config(format!(
                    "unknown method '{name}'; expected l2e or one of {}",
                    BaselineKind::ALL.map(|k| k.as_str()).join(", ")
                ))
            })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::L2e => "l2e",
            Method::Baseline(kind) => kind.as_str(),
        }
    }
}

/// Command-line overrides applied on top of the loaded config.
#[derive(Debug, Clone, Default)]
pub struct CliOverrides {
    pub out: Option<PathBuf>,
    pub seed_override: Option<u64>,
    pub methods: Option<Vec<String>>,
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| {
        Error::config(format!("config {}: {e}", path.display()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn apply_overrides(cfg: &mut ExperimentConfig, ov: &CliOverrides) -> Result<()> {
    if let Some(out) = &ov.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = ov.seed_override {
        cfg.seeds = vec![seed];
    }
    if let Some(methods) = &ov.methods {
        cfg.methods = methods.clone();
    }
    cfg.validate()
}

/// Hex SHA-256 over the run-determining config sections (stream, l2e,
/// methods, seeds), recorded in results and checkpoints so artifacts can
/// be traced back to their recipe. Output paths and report toggles do not
/// change what a run computes, so they stay out of the hash.
pub fn config_hash(cfg: &ExperimentConfig) -> Result<String> {
    let canonical = serde_json::to_string(&serde_json::json!({
        "stream": &cfg.stream,
        "l2e": &cfg.l2e,
        "methods": &cfg.methods,
        "seeds": &cfg.seeds,
    }))?;
    let digest = Sha256::digest(canonical.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn to_pretty_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

// ============================================================================
// generate
// ============================================================================

/// Manifest written next to the generated CSVs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StreamManifest {
    pub n: usize,
    pub num_classes: usize,
    pub feature_dim: usize,
    pub seed: u64,
    pub stream: StreamCfg,
    pub files: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct GenerateOutputs {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
}

/// Writes one CSV per snapshot (`source_j.csv`, `target_j.csv`; targets
/// keep their ground-truth labels in the label column for later scoring)
/// plus a `stream.json` manifest. The stream uses the first seed in the
/// config's list.
pub fn cmd_generate(cfg: &ExperimentConfig) -> Result<GenerateOutputs> {
    cfg.validate()?;
    let effective = cfg.stream_for_seed(cfg.seeds[0]);
    let stream = gen_stream(&effective)?;
    let dir = cfg.out_dir.clone();
    fs::create_dir_all(&dir)?;

    let mut files = Vec::new();
    let mut names = Vec::new();
    let mut emit = |snapshot: &TaskSnapshot| -> Result<()> {
        let name = format!("{}_{}.csv", snapshot.role.as_str(), snapshot.time_index);
        let path = dir.join(&name);
        save_csv(snapshot, &path)?;
        names.push(name);
        files.push(path);
        Ok(())
    };
    for snapshot in &stream.sources {
        emit(snapshot)?;
    }
    for snapshot in &stream.targets {
        emit(snapshot)?;
    }

    let manifest = StreamManifest {
        n: stream.n(),
        num_classes: stream.num_classes,
        feature_dim: stream.feature_dim,
        seed: effective.seed,
        stream: effective,
        files: names,
    };
    let manifest_path = dir.join("stream.json");
    write_text(&manifest_path, &to_pretty_json(&manifest)?)?;
    Ok(GenerateOutputs { dir, files, manifest: manifest_path })
}

// ============================================================================
// run
// ============================================================================

/// One run's serialized record. Failed runs keep their error string and
/// leave the metrics empty; wall time is deliberately absent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: String,
    pub seed: u64,
    pub acc: Option<f64>,
    pub h_acc: Option<f64>,
    pub per_target_acc: Vec<f64>,
    pub historical: Option<HistoricalReport>,
    pub pseudo_acc: Vec<f64>,
    /// Selected-row count per pseudo-labeled task, oldest first.
    pub pseudo_selected: Vec<usize>,
    /// Sequencing evidence: highest pair index the labeling initialization
    /// was trained on, per task.
    pub trained_upto: Vec<i64>,
    pub error: Option<String>,
}

impl RunRecord {
    fn from_result(method: Method, seed: u64, result: &RunResult) -> RunRecord {
        RunRecord {
            method: method.as_str().to_string(),
            seed,
            acc: Some(result.acc_newest),
            h_acc: Some(result.h_acc),
            per_target_acc: result.per_target_acc.clone(),
            historical: Some(result.historical.clone()),
            pseudo_acc: result.pseudo_acc.clone(),
            pseudo_selected: result.pseudo_sets.iter().map(|s| s.selected_count()).collect(),
            trained_upto: result.pseudo_sets.iter().map(|s| s.trained_upto_k).collect(),
            error: None,
        }
    }

    fn from_error(method: Method, seed: u64, error: &Error) -> RunRecord {
        RunRecord {
            method: method.as_str().to_string(),
            seed,
            acc: None,
            h_acc: None,
            per_target_acc: Vec::new(),
            historical: None,
            pseudo_acc: Vec::new(),
            pseudo_selected: Vec::new(),
            trained_upto: Vec::new(),
            error: Some(error.to_string()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultsFile {
    pub config_hash: String,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone)]
pub struct RunOutputs {
    pub summary: PathBuf,
    pub results: PathBuf,
    pub checkpoints: Vec<PathBuf>,
    pub records: Vec<RunRecord>,
    pub failures: usize,
}

/// Runs every configured method over every seed, then writes
/// `summary.csv` (per-run rows plus one `mean±std` row per method, all
/// values at 17 significant digits), `results.json`, and per-run
/// checkpoints of the shared initialization and the final adapted model.
/// A failing run is recorded and the remaining runs continue.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<RunOutputs> {
    cfg.validate()?;
    let methods = cfg.resolved_methods()?;
    let hash = config_hash(cfg)?;
    let dir = &cfg.out_dir;
    fs::create_dir_all(dir)?;

    let mut records: Vec<RunRecord> = Vec::new();
    let mut checkpoints = Vec::new();
    let mut failures = 0usize;
    for &seed in &cfg.seeds {
        let stream = gen_stream(&cfg.stream_for_seed(seed))?;
        let l2e_cfg = cfg.l2e_for_seed(seed);
        for &method in &methods {
            let outcome = match method {
                Method::L2e => run_l2e(&stream, &l2e_cfg),
                Method::Baseline(kind) => {
                    run_baseline(&BaselineSpec { kind, cfg: l2e_cfg.clone() }, &stream)
                }
            };
            match outcome {
                Ok(result) => {
                    println!(
                        "{} seed {seed}: acc {:.4} h_acc {:.4}",
                        method.as_str(),
                        result.acc_newest,
                        result.h_acc
                    );
                    if cfg.report.save_checkpoints {
                        for (tag, params) in
                            [("init", &result.theta_init), ("final", &result.theta_final)]
                        {
                            let path = dir.join(format!(
                                "checkpoint_{}_seed{}_{}.json",
                                method.as_str(),
                                seed,
                                tag
                            ));
                            save_checkpoint(&path, params, &hash, seed)?;
                            checkpoints.push(path);
                        }
                    }
                    records.push(RunRecord::from_result(method, seed, &result));
                }
                Err(e) => {
                    eprintln!("{} seed {seed} failed: {e}", method.as_str());
                    failures += 1;
                    records.push(RunRecord::from_error(method, seed, &e));
                }
            }
        }
    }

    // Rows grouped by method in config order, seeds in config order, then
    // one aggregate row per method over its successful runs.
    let mut csv = String::from("method,seed,acc,h_acc\n");
    let by_method = |m: Method| {
        records
            .iter()
            .filter(move |r| r.method == m.as_str())
    };
    for &method in &methods {
        for record in by_method(method) {
            if let (Some(acc), Some(h_acc)) = (record.acc, record.h_acc) {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    record.method,
                    record.seed,
                    fmt_f64(acc),
                    fmt_f64(h_acc)
                ));
            }
        }
    }
    for &method in &methods {
        let accs: Vec<f64> = by_method(method).filter_map(|r| r.acc).collect();
        let h_accs: Vec<f64> = by_method(method).filter_map(|r| r.h_acc).collect();
        if accs.is_empty() {
            continue;
        }
        let (acc_mean, acc_std) = mean_std(&accs);
        let (h_mean, h_std) = mean_std(&h_accs);
        csv.push_str(&format!(
            "{},mean±std,{}±{},{}±{}\n",
            method.as_str(),
            fmt_f64(acc_mean),
            fmt_f64(acc_std),
            fmt_f64(h_mean),
            fmt_f64(h_std)
        ));
    }

    let summary = dir.join("summary.csv");
    write_text(&summary, &csv)?;
    let results = dir.join("results.json");
    write_text(
        &results,
        &to_pretty_json(&ResultsFile { config_hash: hash, runs: records.clone() })?,
    )?;
    Ok(RunOutputs { summary, results, checkpoints, records, failures })
}

/// Mean and sample standard deviation (0 for a single value), computed by
/// left-to-right summation so a reader can reproduce them exactly from
/// the printed rows.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

// ============================================================================
// divergence
// ============================================================================

/// One row of the evolution table. `source_chain` is empty at `j = N`
/// because the source chain has only `N - 1` links; the embedding columns
/// are present only when a checkpoint was supplied.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceRow {
    pub j: usize,
    pub source_chain: Option<f64>,
    pub source_target: f64,
    pub target_chain: f64,
    pub source_chain_embed: Option<f64>,
    pub source_target_embed: Option<f64>,
    pub target_chain_embed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceTable {
    pub has_embedding: bool,
    pub rows: Vec<DivergenceRow>,
}

/// Biased squared MMD along the three chains: consecutive source links,
/// same-step source-to-target links, and consecutive target links; on raw
/// features, and additionally on the model's embeddings when given.
pub fn divergence_table(
    stream: &DynamicStream,
    kernel: &crate::divergence::KernelCfg,
    model: Option<&ModelParams>,
) -> Result<DivergenceTable> {
    stream.validate()?;
    let n = stream.n();
    let link = |a: ArrayView2<f64>, b: ArrayView2<f64>| -> Result<f64> {
        Ok(mmd2_biased(a, b, kernel)?.value)
    };
    let embeddings = |snaps: &[TaskSnapshot]| -> Result<Vec<ndarray::Array2<f64>>> {
        snaps
            .iter()
            .map(|s| Ok(forward(model.expect("embedding pass"), s.features.view())?.embedding))
            .collect()
    };
    let (src_emb, tgt_emb) = if model.is_some() {
        (embeddings(&stream.sources)?, embeddings(&stream.targets)?)
    } else {
        (Vec::new(), Vec::new())
    };

    let mut rows = Vec::with_capacity(n);
    for j in 1..=n {
        let source_chain = if j < n {
            Some(link(
                stream.source(j).features.view(),
                stream.source(j + 1).features.view(),
            )?)
        } else {
            None
        };
        let source_target = link(
            stream.source(j).features.view(),
            stream.target(j).features.view(),
        )?;
        let target_chain = link(
            stream.target(j).features.view(),
            stream.target(j + 1).features.view(),
        )?;
        let (sce, ste, tce) = if model.is_some() {
            (
                if j < n {
                    Some(link(src_emb[j - 1].view(), src_emb[j].view())?)
                } else {
                    None
                },
                Some(link(src_emb[j - 1].view(), tgt_emb[j - 1].view())?),
                Some(link(tgt_emb[j - 1].view(), tgt_emb[j].view())?),
            )
        } else {
            (None, None, None)
        };
        rows.push(DivergenceRow {
            j,
            source_chain,
            source_target,
            target_chain,
            source_chain_embed: sce,
            source_target_embed: ste,
            target_chain_embed: tce,
        });
    }
    Ok(DivergenceTable { has_embedding: model.is_some(), rows })
}

#[derive(Debug, Clone)]
pub struct DivergenceOutputs {
    pub path: PathBuf,
    pub table: DivergenceTable,
}

/// Writes `divergence.csv` for the stream under the first configured
/// seed. Cells for absent links are left empty.
pub fn cmd_divergence(cfg: &ExperimentConfig) -> Result<DivergenceOutputs> {
    cfg.validate()?;
    let stream = gen_stream(&cfg.stream_for_seed(cfg.seeds[0]))?;
    let model = match &cfg.divergence.checkpoint {
        Some(path) => Some(load_checkpoint(path)?.to_model()?),
        None => None,
    };
    let table = divergence_table(&stream, &cfg.l2e.kernel, model.as_ref())?;

    let cell = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let mut csv = String::new();
    if table.has_embedding {
        csv.push_str("j,source_chain,source_target,target_chain,source_chain_embed,source_target_embed,target_chain_embed\n");
    } else {
        csv.push_str("j,source_chain,source_target,target_chain\n");
    }
    for row in &table.rows {
        csv.push_str(&format!(
            "{},{},{},{}",
            row.j,
            cell(row.source_chain),
            fmt_f64(row.source_target),
            fmt_f64(row.target_chain)
        ));
        if table.has_embedding {
            csv.push_str(&format!(
                ",{},{},{}",
                cell(row.source_chain_embed),
                cell(row.source_target_embed),
                cell(row.target_chain_embed)
            ));
        }
        csv.push('\n');
    }
    let path = cfg.out_dir.join("divergence.csv");
    write_text(&path, &csv)?;
    Ok(DivergenceOutputs { path, table })
}

// ============================================================================
// bound
// ============================================================================

/// Outcome of the oracle sweep over random discrete instances.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleSweep {
    pub instances: usize,
    pub holds: usize,
    pub failures: Vec<u64>,
    pub min_slack: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BoundFile {
    Oracle { sweep: OracleSweep },
    Plugin { report: BoundReport },
}

#[derive(Debug, Clone)]
pub struct BoundOutputs {
    pub path: PathBuf,
    pub file: BoundFile,
}

/// Oracle mode sweeps seeded random discrete instances and checks the
/// population-level chain inequality for every hypothesis, reporting
/// `holds: x/y`. Plug-in mode loads a checkpoint, measures empirical
/// errors and embedding-level link divergences on the configured stream,
/// and assembles the bound; link labeling discrepancies are set to zero
/// (they are not estimable without target labels) and noted as such.
pub fn cmd_bound(cfg: &ExperimentConfig) -> Result<BoundOutputs> {
    cfg.validate()?;
    let file = match cfg.bound.mode {
        BoundMode::Oracle => {
            let o = &cfg.bound.oracle;
            let mut failures = Vec::new();
            let mut min_slack = f64::INFINITY;
            for i in 0..o.instances {
                let seed = o.seed + i as u64;
                let instance =
                    random_instance(seed, o.max_support, o.max_steps, o.max_hypotheses);
                let check = verify_chain_inequality(&instance)?;
                min_slack = min_slack.min(check.min_slack);
                if !check.all_hold {
                    failures.push(seed);
                }
            }
            let sweep = OracleSweep {
                instances: o.instances,
                holds: o.instances - failures.len(),
                failures,
                min_slack,
            };
            println!("holds: {}/{}", sweep.holds, sweep.instances);
            BoundFile::Oracle { sweep }
        }
        BoundMode::Plugin => {
            let path = cfg.bound.checkpoint.as_ref().ok_or_else(|| {
                Error::config("plug-in bound mode needs bound.checkpoint to point at a trained model")
            })?;
            let model = load_checkpoint(path)?.to_model()?;
            let stream = gen_stream(&cfg.stream_for_seed(cfg.seeds[0]))?;
            let report = plugin_bound_report(cfg, &model, &stream)?;
            println!("bound total: {}", report.total);
            BoundFile::Plugin { report }
        }
    };
    let path = cfg.out_dir.join("bound.json");
    write_text(&path, &to_pretty_json(&file)?)?;
    Ok(BoundOutputs { path, file })
}

fn plugin_bound_report(
    cfg: &ExperimentConfig,
    model: &ModelParams,
    stream: &DynamicStream,
) -> Result<BoundReport> {
    let n = stream.n();
    let mut source_errors = Vec::with_capacity(n);
    let mut target_errors = Vec::with_capacity(n);
    for j in 1..=n {
        source_errors.push(1.0 - evaluate(model, stream.source(j))?);
        target_errors.push(1.0 - evaluate(model, stream.target(j))?);
    }
    let embed = |s: &TaskSnapshot| -> Result<ndarray::Array2<f64>> {
        Ok(forward(model, s.features.view())?.embedding)
    };
    let kernel = &cfg.l2e.kernel;
    let link = |a: &ndarray::Array2<f64>, b: &ndarray::Array2<f64>| -> Result<LinkDivergence> {
        Ok(LinkDivergence {
            d: mmd2_biased(a.view(), b.view(), kernel)?.value.sqrt(),
            lambda: 0.0,
        })
    };
    let src_emb: Vec<_> = stream.sources.iter().map(embed).collect::<Result<_>>()?;
    let tgt_emb: Vec<_> = stream.targets.iter().map(embed).collect::<Result<_>>()?;
    let chain = ChainDivergences {
        source_links: (1..n).map(|j| link(&src_emb[j - 1], &src_emb[j])).collect::<Result<_>>()?,
        cross_link: link(&src_emb[0], &tgt_emb[0])?,
        target_links: (1..=n).map(|j| link(&tgt_emb[j - 1], &tgt_emb[j])).collect::<Result<_>>()?,
    };
    let params = BoundParams {
        kind: cfg.bound.kind,
        mu: cfg.bound.mu,
        delta: cfg.bound.delta,
        m_tilde: cfg.bound.m_tilde.unwrap_or(stream.target(n + 1).num_rows()),
        mmd_scale: cfg.bound.mmd_scale,
        r_tilde: cfg.bound.r_tilde,
    };
    let mut report = compute_bound(&source_errors, &target_errors, &chain, &params)?;
    report
        .notes
        .push("link labeling discrepancies set to zero: target labels are unavailable".into());
    Ok(report)
}

// ============================================================================
// checkpoints
// ============================================================================

pub const CHECKPOINT_VERSION: u32 = 1;

/// Serialized model: architecture plus the flat parameter vector, tagged
/// with a format version and the producing run's config hash and seed.
/// JSON float round-tripping is exact, so save then load reproduces the
/// model bitwise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub arch: Arch,
    pub params: Vec<f64>,
    pub config_hash: String,
    pub seed: u64,
}

impl Checkpoint {
    pub fn from_model(model: &ModelParams, config_hash: &str, seed: u64) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            arch: model.arch().clone(),
            params: model.to_flat(),
            config_hash: config_hash.to_string(),
            seed,
        }
    }

    pub fn to_model(&self) -> Result<ModelParams> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::format(format!(
                "checkpoint version {} is not supported (expected {CHECKPOINT_VERSION})",
                self.version
            )));
        }
        ModelParams::from_flat(&self.arch, &self.params)
            .map_err(|e| Error::format(format!("checkpoint parameters: {e}")))
    }
}

pub fn save_checkpoint(
    path: impl AsRef<Path>,
    model: &ModelParams,
    config_hash: &str,
    seed: u64,
) -> Result<()> {
    let ck = Checkpoint::from_model(model, config_hash, seed);
    write_text(path.as_ref(), &to_pretty_json(&ck)?)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::format(format!("checkpoint {}: {e}", path.display())))
}

// ============================================================================
// Tests
// ============================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::init_params;

    #[test]
    fn empty_json_gives_the_default_config() {
        let cfg: ExperimentConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_config_key_is_rejected() {
        let err = serde_json::from_str::<ExperimentConfig>("{\"momentum\": 0.9}").unwrap_err();
        assert!(err.to_string().contains("momentum"));
    }

    #[test]
    fn unknown_nested_key_is_rejected() {
        let err =
            serde_json::from_str::<ExperimentConfig>("{\"l2e\": {\"learning_rate\": 0.1}}")
                .unwrap_err();
        assert!(err.to_string().contains("learning_rate"));
    }

    #[test]
    fn method_parsing() {
        assert_eq!(Method::parse("l2e").unwrap(), Method::L2e);
        assert_eq!(
            Method::parse("source_only").unwrap(),
            Method::Baseline(BaselineKind::SourceOnly)
        );
        let err = Method::parse("oracle").unwrap_err().to_string();
        assert!(err.contains("l2e") && err.contains("source_only"));
    }

    #[test]
    fn overrides_replace_out_seeds_and_methods() {
        let mut cfg = ExperimentConfig::default();
        apply_overrides(
            &mut cfg,
            &CliOverrides {
                out: Some(PathBuf::from("elsewhere")),
                seed_override: Some(77),
                methods: Some(vec!["l2e".into()]),
            },
        )
        .unwrap();
        assert_eq!(cfg.out_dir, PathBuf::from("elsewhere"));
        assert_eq!(cfg.seeds, vec![77]);
        assert_eq!(cfg.methods, vec!["l2e".to_string()]);
    }

    #[test]
    fn config_hash_is_stable_and_sensitive() {
        let cfg = ExperimentConfig::default();
        let h1 = config_hash(&cfg).unwrap();
        let h2 = config_hash(&cfg).unwrap();
        assert_eq!(h1, h2);
        assert_eq!(h1.len(), 64);
        let mut other = cfg.clone();
        other.seeds = vec![9];
        assert_ne!(h1, config_hash(&other).unwrap());
    }

    #[test]
    fn fmt_f64_round_trips_bitwise() {
        for v in [0.0, 1.0 / 3.0, -2.5e-17, 123456.789, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn mean_std_hand_values() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert!((m - 2.5).abs() < 1e-15);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn checkpoint_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let arch = Arch::new(3, vec![4], 2, 2);
        let model = init_params(&arch, 42).unwrap();
        let path = dir.path().join("ck.json");
        save_checkpoint(&path, &model, "abc123", 7).unwrap();
        let ck = load_checkpoint(&path).unwrap();
        assert_eq!(ck.version, CHECKPOINT_VERSION);
        assert_eq!(ck.config_hash, "abc123");
        assert_eq!(ck.seed, 7);
        let restored = ck.to_model().unwrap();
        assert_eq!(restored.to_flat(), model.to_flat());
    }

    #[test]
    fn checkpoint_version_and_length_mismatches_are_format_errors() {
        let arch = Arch::new(2, vec![], 2, 2);
        let model = init_params(&arch, 1).unwrap();
        let mut ck = Checkpoint::from_model(&model, "h", 0);
        ck.version = 99;
        assert!(matches!(ck.to_model(), Err(Error::Format(_))));
        let mut short = Checkpoint::from_model(&model, "h", 0);
        short.params.pop();
        assert!(matches!(short.to_model(), Err(Error::Format(_))));
    }

    #[test]
    fn truncated_checkpoint_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        fs::write(&path, "{\"version\": 1, \"arch\"").unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Format(_))));
    }
}
