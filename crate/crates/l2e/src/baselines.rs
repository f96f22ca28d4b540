//! Comparison methods for the pipeline: two plain trainers that never
//! meta-learn, and four ablations that run the exact same stage loop with a
//! different pair set. Every method starts from the same seeded weights as
//! the pipeline it is compared against, and the ablations inherit all
//! optimizer knobs unchanged; the only degree of freedom is which pairs
//! exist.
//!
//! The plain trainers get the same total gradient-step budget the pipeline
//! spends in its final meta-training stage: `outer_epochs * (2N - 1) *
//! inner_steps` full-batch steps at the outer learning rate.

use ndarray::{concatenate, Axis};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

use crate::divergence::{median_heuristic, KernelCfg};
use crate::error::{Error, Result};
use crate::meta::{
    build_meta_pairs, evaluate, pipeline_init, run_pipeline, HistoricalReport, L2ECfg, MetaPair,
    RunResult,
};
use crate::numerics::{loss_and_grad, sgd_step, Batch};
use crate::taskstream::{DynamicStream, TaskRole, TaskSnapshot};

/// The six comparison methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    /// Plain classifier on the union of all labeled source snapshots; no
    /// divergence term, no target data of any kind during training.
    SourceOnly,
    /// Static domain adaptation: classifier on the merged sources plus
    /// `gamma * MMD^2` between the merged sources and the newest target.
    MergedSourceDa,
    /// Pipeline without the source chain: only the cross pair `k = 0`
    /// (first source) and the target pairs survive.
    L2eNoSourceEvolution,
    /// Pipeline with all sources concatenated into one snapshot, so the
    /// source side contributes a single cross pair and no drift signal.
    L2eMergedSource,
    /// Pipeline without target history: source-chain pairs plus one
    /// adaptation pair from the newest source to the newest target. No
    /// pseudo-labeling happens, and historical scores are the final model
    /// evaluated directly.
    L2eNoHistoricalTarget,
    /// Pipeline over every within-role task pair, not just consecutive
    /// ones. Extra pairs take classification data from the newer task and
    /// divergence features along (older, newer); consecutive pairs keep
    /// the standard wiring so sequencing is unchanged.
    L2eAllPairs,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 6] = [
        BaselineKind::SourceOnly,
        BaselineKind::MergedSourceDa,
        BaselineKind::L2eNoSourceEvolution,
        BaselineKind::L2eMergedSource,
        BaselineKind::L2eNoHistoricalTarget,
        BaselineKind::L2eAllPairs,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            BaselineKind::SourceOnly => "source_only",
            BaselineKind::MergedSourceDa => "merged_source_da",
            BaselineKind::L2eNoSourceEvolution => "l2e_no_source_evolution",
            BaselineKind::L2eMergedSource => "l2e_merged_source",
            BaselineKind::L2eNoHistoricalTarget => "l2e_no_historical_target",
            BaselineKind::L2eAllPairs => "l2e_all_pairs",
        }
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown baseline '{s}'; expected one of {}",
                    BaselineKind::ALL.map(|k| k.as_str()).join(", ")
                ))
            })
    }
}

/// One comparison method plus the shared pipeline configuration. The
/// configuration must equal the one used for the pipeline run it is
/// compared against; nothing here re-tunes it.
#[derive(Debug, Clone)]
pub struct BaselineSpec {
    pub kind: BaselineKind,
    pub cfg: L2ECfg,
}

/// Total gradient steps the pipeline's final meta-training stage spends:
/// `outer_epochs` passes over the `2N - 1` training pairs, `inner_steps`
/// steps each. The plain trainers run exactly this many steps.
pub fn l2e_step_budget(n: usize, cfg: &L2ECfg) -> usize {
    cfg.outer_epochs * (2 * n - 1) * cfg.inner_steps
}

/// All source snapshots stacked in time order into one labeled snapshot
/// (role source, time 1).
pub fn merged_source(stream: &DynamicStream) -> Result<TaskSnapshot> {
    let views: Vec<_> = stream.sources.iter().map(|s| s.features.view()).collect();
    let features = concatenate(Axis(0), &views)
        .map_err(|e| Error::shape(format!("stacking source snapshots: {e}")))?;
    let mut labels = Vec::with_capacity(features.nrows());
    for s in &stream.sources {
        labels.extend_from_slice(s.labels.as_ref().ok_or_else(|| {
            Error::data(format!("source snapshot {} has no labels", s.time_index))
        })?);
    }
    Ok(TaskSnapshot {
        features,
        labels: Some(labels),
        eval_labels: None,
        time_index: 1,
        role: TaskRole::Source,
    })
}

/// Pair set for [`BaselineKind::L2eNoSourceEvolution`]: the standard pairs
/// with every source-to-source pair (`k < 0`) dropped.
pub fn no_source_evolution_pairs(stream: &DynamicStream, cfg: &L2ECfg) -> Result<Vec<MetaPair>> {
    let pairs = build_meta_pairs(stream, cfg)?;
    Ok(pairs.into_iter().filter(|p| p.k() >= 0).collect())
}

/// Pair set for [`BaselineKind::L2eMergedSource`]: one cross pair from the
/// merged sources to the first target, then the standard target pairs.
pub fn merged_source_pairs(stream: &DynamicStream, cfg: &L2ECfg) -> Result<Vec<MetaPair>> {
    cfg.validate()?;
    stream.validate()?;
    let merged = merged_source(stream)?;
    let n = stream.n();
    let mut pairs = Vec::with_capacity(n + 1);
    pairs.push(MetaPair::new(0, &merged, &merged, stream.target(1), false, cfg)?);
    for j in 1..=n {
        pairs.push(MetaPair::new(
            j as i64,
            stream.target(j),
            stream.target(j),
            stream.target(j + 1),
            true,
            cfg,
        )?);
    }
    Ok(pairs)
}

/// Pair set for [`BaselineKind::L2eNoHistoricalTarget`]: the source-chain
/// pairs plus a single labeled adaptation pair from the newest source to
/// the newest target, sitting in the reserved slot `k = N`.
pub fn no_historical_target_pairs(stream: &DynamicStream, cfg: &L2ECfg) -> Result<Vec<MetaPair>> {
    cfg.validate()?;
    stream.validate()?;
    let n = stream.n();
    let mut pairs = Vec::with_capacity(n);
    for j in (1..n).rev() {
        pairs.push(MetaPair::new(
            -(j as i64),
            stream.source(j + 1),
            stream.source(j),
            stream.source(j + 1),
            false,
            cfg,
        )?);
    }
    pairs.push(MetaPair::new(
        n as i64,
        stream.source(n),
        stream.source(n),
        stream.target(n + 1),
        false,
        cfg,
    )?);
    Ok(pairs)
}

/// Pair set for [`BaselineKind::L2eAllPairs`]: the standard pairs plus one
/// extra pair for every non-adjacent within-role task pair `(i, j)`,
/// `j - i >= 2`. An extra pair shares its `k` with the standard pair whose
/// classification task it reuses, so it enters meta-training at the same
/// stage; within one `k`, pairs are ordered by time span, shortest first.
///
/// The count is `2 * C(N, 2) + 2`: all within-role pairs over each chain's
/// first `N` tasks, the cross pair, and the reserved pair.
pub fn all_pairs(stream: &DynamicStream, cfg: &L2ECfg) -> Result<Vec<MetaPair>> {
    let mut pairs = build_meta_pairs(stream, cfg)?;
    let n = stream.n();
    for j in 3..=n {
        for i in 1..=(j - 2) {
            pairs.push(MetaPair::new(
                -(j as i64 - 1),
                stream.source(j),
                stream.source(i),
                stream.source(j),
                false,
                cfg,
            )?);
            pairs.push(MetaPair::new(
                j as i64,
                stream.target(j),
                stream.target(i),
                stream.target(j),
                true,
                cfg,
            )?);
        }
    }
    pairs.sort_by_key(|p| (p.k(), p.div_times().1 - p.div_times().0));
    assert_eq!(pairs.len(), n * (n - 1) + 2, "within-role pair count");
    Ok(pairs)
}

/// Runs one comparison method on a stream. The result has the same shape
/// as a pipeline run; methods without pseudo-labeling leave the pseudo
/// fields empty.
pub fn run_baseline(spec: &BaselineSpec, stream: &DynamicStream) -> Result<RunResult> {
    let cfg = &spec.cfg;
    match spec.kind {
        BaselineKind::SourceOnly => run_plain(stream, cfg, false),
        BaselineKind::MergedSourceDa => run_plain(stream, cfg, true),
        BaselineKind::L2eNoSourceEvolution => {
            run_pipeline(stream, cfg, no_source_evolution_pairs(stream, cfg)?)
        }
        BaselineKind::L2eMergedSource => {
            run_pipeline(stream, cfg, merged_source_pairs(stream, cfg)?)
        }
        BaselineKind::L2eNoHistoricalTarget => {
            run_pipeline(stream, cfg, no_historical_target_pairs(stream, cfg)?)
        }
        BaselineKind::L2eAllPairs => run_pipeline(stream, cfg, all_pairs(stream, cfg)?),
    }
}

/// Shared body of the two plain trainers. With `with_da` false the
/// training loop's inputs are the merged source batch alone; target
/// snapshots are not reachable from it. With `with_da` true the newest
/// target's features join through the divergence term, with the kernel
/// bandwidth frozen from the raw features up front.
fn run_plain(stream: &DynamicStream, cfg: &L2ECfg, with_da: bool) -> Result<RunResult> {
    cfg.validate()?;
    stream.validate()?;
    let start = std::time::Instant::now();
    let n = stream.n();
    let arch = cfg.arch_for(stream);
    arch.validate()?;
    let merged = merged_source(stream)?;
    let batch = Batch::new(merged.features.clone(), merged.labels.clone(), None)?;
    let mut theta = pipeline_init(&arch, cfg)?;

    let newest = stream.target(n + 1);
    let (gamma, kernel) = if with_da {
        let bandwidth = match cfg.kernel.bandwidth {
            Some(b) => b,
            None => median_heuristic(merged.features.view(), newest.features.view())?,
        };
        let kernel = KernelCfg {
            bandwidth: Some(bandwidth),
            multipliers: cfg.kernel.multipliers.clone(),
        };
        (cfg.gamma, kernel)
    } else {
        (0.0, KernelCfg::fixed(1.0))
    };
    for _ in 0..l2e_step_budget(n, cfg) {
        let div = with_da.then(|| (merged.features.view(), newest.features.view()));
        let (_, grad) = loss_and_grad(&theta, &batch, div, gamma, &kernel)?;
        theta = sgd_step(&theta, &grad, cfg.outer_lr)?;
    }

    let acc_newest = evaluate(&theta, newest)?;
    let mut per_target_acc = Vec::with_capacity(n + 1);
    for j in 1..=(n + 1) {
        per_target_acc.push(evaluate(&theta, stream.target(j))?);
    }
    let direct: Vec<f64> = per_target_acc[..n].to_vec();
    let historical = HistoricalReport {
        h_acc: direct.iter().sum::<f64>() / n as f64,
        adapted: direct.clone(),
        unadapted: direct,
    };
    Ok(RunResult {
        theta_final: theta.clone(),
        theta_init: theta,
        acc_newest,
        h_acc: historical.h_acc,
        per_target_acc,
        historical,
        pseudo_sets: Vec::new(),
        pseudo_acc: Vec::new(),
        wall_time: start.elapsed(),
    })
}

// ============================================================================
// Tests
// ============================================================================
