//! The L2E engine: meta-pairs of adjacent tasks, first-order meta-training
//! of a shared initialization, sequential entropy-selected pseudo-labeling
//! of target tasks, and a final fast adaptation to the newest target task.
//!
//! A stream with `N` source and `N + 1` target snapshots yields `2N`
//! meta-pairs indexed by `k`:
//!
//! ```text
//! k = -j (1 <= j <= N-1): cls = source j+1, div = (source j, source j+1)
//! k =  0:                 cls = source 1,   div = (source 1, target 1)
//! k =  j (1 <= j <= N):   cls = target j,   div = (target j, target j+1)
//! ```
//!
//! Pairs with `k <= N-1` are the meta-training set; `k = N` is reserved for
//! the final adaptation. Each pair's objective is `zeta = CE(cls) + gamma *
//! MMD^2` between the embedded divergence sides.
//!
//! Target pairs start unresolved: their classification labels appear only
//! when [`pseudo_label`] produces them, task by task in time order, each
//! task labeled exactly once. Information hygiene is structural: pairs copy
//! features and training labels only, so nothing reachable from the
//! training path carries target eval labels.

use ndarray::Array2;

use crate::derive_seed;
use crate::divergence::{median_heuristic, KernelCfg};
use crate::error::{Error, Result};
use crate::numerics::{
    forward, init_params, loss_and_grad, predict_entropy, sgd_step, Arch, Batch, GradVector,
    ModelParams,
};
use crate::taskstream::{split_indices, DynamicStream, TaskRole, TaskSnapshot};
use serde::{Deserialize, Serialize};

/// Which rows of a pair's classification data an objective evaluation sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    All,
}

/// One meta-pair: classification data from one snapshot, divergence
/// features from an adjacent ordered snapshot pair, and a seeded train/val
/// split. Pseudo pairs hold no labels until resolved.
#[derive(Debug, Clone)]
pub struct MetaPair {
    k: i64,
    cls_features: Array2<f64>,
    cls_labels: Option<Vec<usize>>,
    /// Selection mask over cls rows; `None` means all rows participate.
    selected: Option<Vec<bool>>,
    /// Per-row loss weight applied to resolved pseudo labels.
    cls_weight: f64,
    cls_role: TaskRole,
    cls_time: usize,
    div_a: Array2<f64>,
    div_b: Array2<f64>,
    div_roles: (TaskRole, TaskRole),
    div_times: (usize, usize),
    /// Pair-local kernel with the bandwidth frozen at construction.
    kernel: KernelCfg,
    train_idx: Vec<usize>,
    val_idx: Vec<usize>,
    pseudo: bool,
}

impl MetaPair {
    /// Builds one pair, splitting the classification rows with a seed
    /// derived from `cfg.seed` and `k`, and freezing the kernel bandwidth
    /// from the pooled raw divergence features.
    pub(crate) fn new(
        k: i64,
        cls: &TaskSnapshot,
        div_a: &TaskSnapshot,
        div_b: &TaskSnapshot,
        pseudo: bool,
        cfg: &L2ECfg,
    ) -> Result<MetaPair> {
        let m = cls.num_rows();
        if cfg.val_count >= m {
            return Err(Error::config(format!(
                "val_count {} must be below the snapshot size {m} (pair k = {k})",
                cfg.val_count
            )));
        }
        let (train_idx, val_idx) =
            split_indices(m, cfg.val_count, derive_seed(cfg.seed, SPLIT_TAG ^ k as u64))?;
        let bandwidth = match cfg.kernel.bandwidth {
            Some(b) => b,
            None => median_heuristic(div_a.features.view(), div_b.features.view())?,
        };
        let kernel = KernelCfg {
            bandwidth: Some(bandwidth),
            multipliers: cfg.kernel.multipliers.clone(),
        };
        let cls_labels = if pseudo { None } else { cls.labels.clone() };
        if !pseudo && cls_labels.is_none() {
            return Err(Error::data(format!(
                "pair k = {k} needs labeled classification data"
            )));
        }
        Ok(MetaPair {
            k,
            cls_features: cls.features.clone(),
            cls_labels,
            selected: None,
            cls_weight: 1.0,
            cls_role: cls.role,
            cls_time: cls.time_index,
            div_a: div_a.features.clone(),
            div_b: div_b.features.clone(),
            div_roles: (div_a.role, div_b.role),
            div_times: (div_a.time_index, div_b.time_index),
            kernel,
            train_idx,
            val_idx,
            pseudo,
        })
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn pseudo(&self) -> bool {
        self.pseudo
    }

    pub fn cls_role(&self) -> TaskRole {
        self.cls_role
    }

    pub fn cls_time(&self) -> usize {
        self.cls_time
    }

    pub fn cls_rows(&self) -> usize {
        self.cls_features.nrows()
    }

    pub fn div_sides(&self) -> (&Array2<f64>, &Array2<f64>) {
        (&self.div_a, &self.div_b)
    }

    pub fn div_roles(&self) -> (TaskRole, TaskRole) {
        self.div_roles
    }

    pub fn div_times(&self) -> (usize, usize) {
        self.div_times
    }

    pub fn frozen_bandwidth(&self) -> Option<f64> {
        self.kernel.bandwidth
    }

    /// Row indices of the cls task used for inner adaptation.
    pub fn train_indices(&self) -> &[usize] {
        &self.train_idx
    }

    /// Row indices of the cls task held out for the outer objective.
    pub fn val_indices(&self) -> &[usize] {
        &self.val_idx
    }

    pub fn resolved(&self) -> bool {
        self.cls_labels.is_some()
    }

    /// Installs pseudo-labels and the selection mask. Each pair resolves
    /// exactly once; labeling a task twice is a sequencing bug.
    pub fn resolve(&mut self, labels: Vec<usize>, selected: Vec<bool>, weight: f64) -> Result<()> {
        if !self.pseudo {
            return Err(Error::state(format!(
                "pair k = {} carries real labels and cannot be re-labeled",
                self.k
            )));
        }
        if self.resolved() {
            return Err(Error::state(format!(
                "pair k = {} is already resolved",
                self.k
            )));
        }
        if labels.len() != self.cls_rows() || selected.len() != self.cls_rows() {
            return Err(Error::shape(format!(
                "{} labels / {} mask entries for {} rows (pair k = {})",
                labels.len(),
                selected.len(),
                self.cls_rows(),
                self.k
            )));
        }
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::config(format!("pseudo weight must be positive, got {weight}")));
        }
        self.cls_labels = Some(labels);
        self.selected = Some(selected);
        self.cls_weight = weight;
        Ok(())
    }

    /// Row indices the given split contributes, after pseudo selection.
    fn effective_rows(&self, split: Split) -> Vec<usize> {
        let base: Box<dyn Iterator<Item = usize> + '_> = match split {
            Split::Train => Box::new(self.train_idx.iter().copied()),
            Split::Val => Box::new(self.val_idx.iter().copied()),
            Split::All => Box::new(0..self.cls_rows()),
        };
        match &self.selected {
            Some(mask) => base.filter(|&i| mask[i]).collect(),
            None => base.collect(),
        }
    }
}

/// Index of pair `k` in the ascending-`k` pair vector for a length-`n`
/// stream.
pub fn pair_index(k: i64, n: usize) -> usize {
    (k + n as i64 - 1) as usize
}

/// The pair whose divergence side ends at target task `j` and whose index
/// is `k = j - 1`: the pair used to adapt toward task `j` (the cross pair
/// for `j = 1`, the consecutive target pair otherwise). Lookup is by
/// predicate so pair sets with extra non-consecutive pairs still resolve
/// to the consecutive one.
pub fn find_adaptation_pair(pairs: &[MetaPair], j: usize) -> Result<&MetaPair> {
    pairs
        .iter()
        .find(|p| {
            p.k == j as i64 - 1 && p.div_roles.1 == TaskRole::Target && p.div_times.1 == j
        })
        .ok_or_else(|| {
            Error::state(format!(
                "no pair with k = {} adapts toward target task {j}",
                j as i64 - 1
            ))
        })
}

/// The reserved meta-test pair: `k = N`, divergence side ending at the
/// newest target task `N + 1`.
pub fn find_reserved_pair(pairs: &[MetaPair], n: usize) -> Result<&MetaPair> {
    pairs
        .iter()
        .find(|p| p.k == n as i64 && p.div_roles.1 == TaskRole::Target && p.div_times.1 == n + 1)
        .ok_or_else(|| {
            Error::state(format!(
                "no reserved pair k = {n} points at target task {}",
                n + 1
            ))
        })
}

const SPLIT_TAG: u64 = 0x5eed_0001;
const INIT_TAG: u64 = 0x5eed_0002;
const BATCH_TAG: u64 = 0x5eed_0003;

/// Shared starting weights: every method run on the same stream and seed
/// starts here, so score differences come from training, not the draw.
pub(crate) fn pipeline_init(arch: &Arch, cfg: &L2ECfg) -> Result<ModelParams> {
    init_params(arch, derive_seed(cfg.seed, INIT_TAG))
}

/// Pseudo-label record for one target task, including where its labels
/// came from: the highest pair index the supplying initialization was
/// meta-trained on (sequencing evidence).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PseudoLabelSet {
    pub time_index: usize,
    pub labels: Vec<usize>,
    pub entropies: Vec<f64>,
    pub selected: Vec<bool>,
    pub p_percent: f64,
    pub trained_upto_k: i64,
}

impl PseudoLabelSet {
    pub fn selected_count(&self) -> usize {
        self.selected.iter().filter(|&&s| s).count()
    }
}

/// All knobs of the pipeline. `gamma` scales the divergence term,
/// `p_percent` the pseudo-label selection ratio; the rest are optimizer,
/// split, and architecture choices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct L2ECfg {
    pub gamma: f64,
    pub p_percent: f64,
    pub inner_lr: f64,
    pub inner_steps: usize,
    pub outer_lr: f64,
    pub outer_epochs: usize,
    /// `None` runs full-batch inner steps; `Some(b)` runs seeded minibatch
    /// passes of size `b` (the divergence term always sees full features).
    pub batch_size: Option<usize>,
    pub val_count: usize,
    pub seed: u64,
    pub kernel: KernelCfg,
    pub pseudo_weight: f64,
    /// Start each meta-training stage from the previous stage's result
    /// instead of the original initialization.
    pub warm_start: bool,
    pub hidden_dims: Vec<usize>,
    pub embed_dim: usize,
}

impl Default for L2ECfg {
    fn default() -> Self {
        L2ECfg {
            gamma: 0.1,
            p_percent: 80.0,
            inner_lr: 0.5,
            inner_steps: 4,
            outer_lr: 0.1,
            outer_epochs: 25,
            batch_size: None,
            val_count: 50,
            seed: 0,
            kernel: KernelCfg::default(),
            pseudo_weight: 1.0,
            warm_start: true,
            hidden_dims: vec![32],
            embed_dim: 8,
        }
    }
}

impl L2ECfg {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::config("gamma must be finite and >= 0"));
        }
        if !(self.p_percent > 0.0 && self.p_percent <= 100.0) {
            return Err(Error::config(format!(
                "p_percent must lie in (0, 100], got {}",
                self.p_percent
            )));
        }
        if !(self.inner_lr >= 0.0) || !(self.outer_lr >= 0.0) {
            return Err(Error::config("learning rates must be >= 0"));
        }
        if self.inner_steps == 0 {
            return Err(Error::config("inner_steps must be at least 1"));
        }
        if self.val_count == 0 {
            return Err(Error::config("val_count must be at least 1"));
        }
        if self.batch_size == Some(0) {
            return Err(Error::config("batch_size must be at least 1 when set"));
        }
        if !(self.pseudo_weight > 0.0) || !self.pseudo_weight.is_finite() {
            return Err(Error::config("pseudo_weight must be positive"));
        }
        if self.embed_dim == 0 {
            return Err(Error::config("embed_dim must be at least 1"));
        }
        self.kernel.validate()
    }

    pub fn arch_for(&self, stream: &DynamicStream) -> Arch {
        Arch::new(
            stream.feature_dim,
            self.hidden_dims.clone(),
            self.embed_dim,
            stream.num_classes,
        )
    }
}

/// Builds all `2N` pairs in ascending-`k` order. Target pairs are left
/// unresolved placeholders until pseudo-labeling reaches them.
pub fn build_meta_pairs(stream: &DynamicStream, cfg: &L2ECfg) -> Result<Vec<MetaPair>> {
    cfg.validate()?;
    stream.validate()?;
    let n = stream.n();
    let mut pairs = Vec::with_capacity(2 * n);
    for j in (1..n).rev() {
        // k = -j: classification on source j+1, divergence along the
        // source step j -> j+1.
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
        0,
        stream.source(1),
        stream.source(1),
        stream.target(1),
        false,
        cfg,
    )?);
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
    debug_assert!(pairs.windows(2).all(|w| w[0].k + 1 == w[1].k));
    Ok(pairs)
}

/// Objective of one pair on one split: weighted CE over the split's
/// (selected) rows plus `gamma * MMD^2` over the full divergence features.
/// Pseudo-labeled rows carry the pair's pseudo weight; labeled rows weigh 1.
pub fn zeta(
    params: &ModelParams,
    pair: &MetaPair,
    split: Split,
    cfg: &L2ECfg,
) -> Result<(f64, GradVector)> {
    let rows = pair.effective_rows(split);
    zeta_rows(params, pair, &rows, cfg)
}

fn zeta_rows(
    params: &ModelParams,
    pair: &MetaPair,
    rows: &[usize],
    cfg: &L2ECfg,
) -> Result<(f64, GradVector)> {
    if pair.pseudo && !pair.resolved() {
        return Err(Error::state(format!(
            "pair k = {} has no pseudo-labels yet",
            pair.k
        )));
    }
    let labels = pair.cls_labels.as_ref().expect("resolved above");
    let mut feats = Array2::zeros((rows.len(), pair.cls_features.ncols()));
    let mut batch_labels = Vec::with_capacity(rows.len());
    for (r, &i) in rows.iter().enumerate() {
        feats.row_mut(r).assign(&pair.cls_features.row(i));
        batch_labels.push(labels[i]);
    }
    let weights = if pair.pseudo && (pair.cls_weight - 1.0).abs() > 0.0 {
        Some(vec![pair.cls_weight; rows.len()])
    } else {
        None
    };
    let batch = Batch::new(feats, Some(batch_labels), weights)?;
    loss_and_grad(
        params,
        &batch,
        Some((pair.div_a.view(), pair.div_b.view())),
        cfg.gamma,
        &pair.kernel,
    )
}

fn adapt_with_split(
    params: &ModelParams,
    pair: &MetaPair,
    split: Split,
    cfg: &L2ECfg,
) -> Result<ModelParams> {
    let rows = pair.effective_rows(split);
    let mut theta = params.clone();
    for step in 0..cfg.inner_steps {
        match cfg.batch_size {
            None => {
                let (_, g) = zeta_rows(&theta, pair, &rows, cfg)?;
                theta = sgd_step(&theta, &g, cfg.inner_lr)?;
            }
            Some(b) => {
                // One seeded minibatch pass per step; the divergence term
                // stays full-batch inside each update.
                let mut order = rows.clone();
                let seed =
                    derive_seed(cfg.seed, BATCH_TAG ^ (pair.k as u64) ^ ((step as u64) << 32));
                shuffle(&mut order, seed);
                if order.is_empty() {
                    let (_, g) = zeta_rows(&theta, pair, &order, cfg)?;
                    theta = sgd_step(&theta, &g, cfg.inner_lr)?;
                } else {
                    for chunk in order.chunks(b) {
                        let (_, g) = zeta_rows(&theta, pair, chunk, cfg)?;
                        theta = sgd_step(&theta, &g, cfg.inner_lr)?;
                    }
                }
            }
        }
    }
    Ok(theta)
}

fn shuffle(idx: &mut [usize], seed: u64) {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
}

/// Fast adaptation: `inner_steps` gradient steps on the pair's training
/// split. The input is never mutated; with a zero inner rate the result is
/// bitwise identical to the input.
pub fn inner_adapt(params: &ModelParams, pair: &MetaPair, cfg: &L2ECfg) -> Result<ModelParams> {
    adapt_with_split(params, pair, Split::Train, cfg)
}

/// First-order meta-training over all pairs with `k <= upto_k`: per epoch,
/// adapt on each pair's train split, accumulate the val-split gradient at
/// the adapted parameters (no differentiation through the adaptation), and
/// apply one outer step with the summed gradient.
pub fn meta_train(
    pairs: &[MetaPair],
    upto_k: i64,
    init: &ModelParams,
    cfg: &L2ECfg,
) -> Result<ModelParams> {
    let mut theta = init.clone();
    for _ in 0..cfg.outer_epochs {
        let mut total = GradVector::zeros_like(&theta);
        for pair in pairs.iter().filter(|p| p.k <= upto_k) {
            let adapted = inner_adapt(&theta, pair, cfg)?;
            let (_, g) = zeta(&adapted, pair, Split::Val, cfg)?;
            total.add_scaled(&g, 1.0)?;
        }
        theta = sgd_step(&theta, &total, cfg.outer_lr)?;
    }
    Ok(theta)
}

/// Labels target task `j` with the previous stage's initialization: adapt
/// on pair `k = j-1`, take argmax labels on the task's features, select the
/// `ceil(p% * m)` lowest-entropy rows (ties to the lower row index).
///
/// `trained_upto_k` states how far the supplied initialization was
/// meta-trained; anything past `j - 2` would leak later pseudo-labels into
/// this task's labels and is rejected.
pub fn pseudo_label(
    pairs: &[MetaPair],
    j: usize,
    theta_star_prev: &ModelParams,
    trained_upto_k: i64,
    cfg: &L2ECfg,
) -> Result<PseudoLabelSet> {
    if j == 0 {
        return Err(Error::config("task index 0 is not a target task"));
    }
    if trained_upto_k > j as i64 - 2 {
        return Err(Error::state(format!(
            "initialization for task {j} was trained up to k = {trained_upto_k}, past k = {}",
            j as i64 - 2
        )));
    }
    let prev = find_adaptation_pair(pairs, j)?;
    if prev.pseudo && !prev.resolved() {
        return Err(Error::state(format!(
            "pseudo-labeling task {j} requires pair k = {} to be resolved",
            j as i64 - 1
        )));
    }
    let adapted = inner_adapt(theta_star_prev, prev, cfg)?;
    let pair_j = pairs
        .iter()
        .find(|p| p.pseudo && p.cls_role == TaskRole::Target && p.cls_time == j)
        .ok_or_else(|| Error::state(format!("target task {j} has no pseudo pair")))?;
    let fwd = forward(&adapted, pair_j.cls_features.view())?;
    let labels: Vec<usize> = fwd
        .probs
        .rows()
        .into_iter()
        .map(|row| argmax(row.iter().copied()))
        .collect();
    let entropies = predict_entropy(fwd.probs.view());
    let m = labels.len();
    let count = ((cfg.p_percent / 100.0) * m as f64).ceil() as usize;
    let mut order: Vec<usize> = (0..m).collect();
    // Stable sort keeps lower indices first among equal entropies.
    order.sort_by(|&a, &b| entropies[a].partial_cmp(&entropies[b]).expect("finite"));
    let mut selected = vec![false; m];
    for &i in order.iter().take(count) {
        selected[i] = true;
    }
    Ok(PseudoLabelSet {
        time_index: j,
        labels,
        entropies,
        selected,
        p_percent: cfg.p_percent,
        trained_upto_k,
    })
}

fn argmax(iter: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in iter.enumerate() {
        if v > best_v {
            best_v = v;
            best = i;
        }
    }
    best
}

/// Final adaptation to the newest target task: `inner_steps` gradient steps
/// on the full reserved pair (no split).
pub fn meta_test(theta_star_n: &ModelParams, pair_n: &MetaPair, cfg: &L2ECfg) -> Result<ModelParams> {
    adapt_with_split(theta_star_n, pair_n, Split::All, cfg)
}

/// Fraction of argmax predictions matching the snapshot's labels (training
/// labels if present, else eval labels).
pub fn evaluate(params: &ModelParams, snapshot: &TaskSnapshot) -> Result<f64> {
    let labels = snapshot
        .labels
        .as_ref()
        .or(snapshot.eval_labels.as_ref())
        .ok_or_else(|| {
            Error::data(format!(
                "{} snapshot {} has no labels to evaluate against",
                snapshot.role.as_str(),
                snapshot.time_index
            ))
        })?;
    let fwd = forward(params, snapshot.features.view())?;
    let correct = fwd
        .probs
        .rows()
        .into_iter()
        .zip(labels.iter())
        .filter(|(row, &y)| argmax(row.iter().copied()) == y)
        .count();
    Ok(correct as f64 / labels.len() as f64)
}

/// Historical-task scores: each target task `j = 1..N` is scored after a
/// fresh adaptation of the shared initialization on pair `k = j-1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistoricalReport {
    pub h_acc: f64,
    pub adapted: Vec<f64>,
    /// Scores of the unadapted initialization, for comparison.
    pub unadapted: Vec<f64>,
}

/// Mean accuracy over historical target tasks, each evaluated after
/// adapting `theta_init` on the pair pointing at that task (`k = j-1`,
/// whose divergence side ends at target `j`).
pub fn evaluate_historical(
    theta_init: &ModelParams,
    stream: &DynamicStream,
    pairs: &[MetaPair],
    cfg: &L2ECfg,
) -> Result<HistoricalReport> {
    let n = stream.n();
    let mut adapted_accs = Vec::with_capacity(n);
    let mut unadapted_accs = Vec::with_capacity(n);
    for j in 1..=n {
        let pair = find_adaptation_pair(pairs, j)?;
        let adapted = inner_adapt(theta_init, pair, cfg)?;
        adapted_accs.push(evaluate(&adapted, stream.target(j))?);
        unadapted_accs.push(evaluate(theta_init, stream.target(j))?);
    }
    Ok(HistoricalReport {
        h_acc: adapted_accs.iter().sum::<f64>() / n as f64,
        adapted: adapted_accs,
        unadapted: unadapted_accs,
    })
}

/// Everything a single pipeline run produces. Wall time is in-memory
/// diagnostics only; serialized reports omit it so outputs stay bitwise
/// reproducible.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub theta_final: ModelParams,
    pub theta_init: ModelParams,
    pub acc_newest: f64,
    pub h_acc: f64,
    /// Final-model accuracy on every target task, oldest first.
    pub per_target_acc: Vec<f64>,
    pub historical: HistoricalReport,
    pub pseudo_sets: Vec<PseudoLabelSet>,
    /// Selected-row agreement with eval labels per task (diagnostics; eval
    /// labels are read only after training finishes).
    pub pseudo_acc: Vec<f64>,
    pub wall_time: std::time::Duration,
}

/// The full pipeline: build pairs, alternate meta-training and sequential
/// pseudo-labeling over `j = 1..N`, train the final initialization on all
/// `2N - 1` training pairs, adapt on the reserved pair, and score.
pub fn run_l2e(stream: &DynamicStream, cfg: &L2ECfg) -> Result<RunResult> {
    let pairs = build_meta_pairs(stream, cfg)?;
    run_pipeline(stream, cfg, pairs)
}

/// Runs the stage loop over an explicit pair set, so callers can swap in
/// reduced or enlarged pair constructions while keeping the optimizer, the
/// sequencing rules, and the scoring identical. Tasks are pseudo-labeled in
/// time order; every pseudo pair carrying a task's data is resolved with
/// that task's labels.
pub(crate) fn run_pipeline(
    stream: &DynamicStream,
    cfg: &L2ECfg,
    mut pairs: Vec<MetaPair>,
) -> Result<RunResult> {
    let start = std::time::Instant::now();
    let n = stream.n();
    let arch = cfg.arch_for(stream);
    arch.validate()?;
    let theta_0 = pipeline_init(&arch, cfg)?;

    let mut label_tasks: Vec<usize> = pairs
        .iter()
        .filter(|p| p.pseudo)
        .map(|p| p.cls_time)
        .collect();
    label_tasks.sort_unstable();
    label_tasks.dedup();

    let mut theta = theta_0.clone();
    let mut pseudo_sets = Vec::with_capacity(label_tasks.len());
    for &j in &label_tasks {
        let upto = j as i64 - 2;
        let base = if cfg.warm_start { &theta } else { &theta_0 };
        theta = meta_train(&pairs, upto, base, cfg)
            .map_err(|e| Error::state(format!("meta-training before task {j}: {e}")))?;
        let set = pseudo_label(&pairs, j, &theta, upto, cfg)
            .map_err(|e| Error::state(format!("pseudo-labeling task {j}: {e}")))?;
        for pair in pairs.iter_mut() {
            if pair.pseudo && pair.cls_role == TaskRole::Target && pair.cls_time == j {
                pair.resolve(set.labels.clone(), set.selected.clone(), cfg.pseudo_weight)?;
            }
        }
        pseudo_sets.push(set);
    }
    let base = if cfg.warm_start { &theta } else { &theta_0 };
    let theta_init = meta_train(&pairs, n as i64 - 1, base, cfg)
        .map_err(|e| Error::state(format!("final meta-training: {e}")))?;
    let theta_final = meta_test(&theta_init, find_reserved_pair(&pairs, n)?, cfg)
        .map_err(|e| Error::state(format!("final adaptation on pair k = {n}: {e}")))?;

    let acc_newest = evaluate(&theta_final, stream.target(n + 1))?;
    let mut per_target_acc = Vec::with_capacity(n + 1);
    for j in 1..=(n + 1) {
        per_target_acc.push(evaluate(&theta_final, stream.target(j))?);
    }
    let historical = if (1..=n).all(|j| find_adaptation_pair(&pairs, j).is_ok()) {
        evaluate_historical(&theta_init, stream, &pairs, cfg)?
    } else {
        // Without per-task adaptation pairs the honest historical score is
        // the final model evaluated directly on each task.
        let mut adapted = Vec::with_capacity(n);
        let mut unadapted = Vec::with_capacity(n);
        for j in 1..=n {
            adapted.push(evaluate(&theta_final, stream.target(j))?);
            unadapted.push(evaluate(&theta_init, stream.target(j))?);
        }
        HistoricalReport {
            h_acc: adapted.iter().sum::<f64>() / n as f64,
            adapted,
            unadapted,
        }
    };

    // Diagnostics: how well did the pseudo-labels match the ground truth
    // on the rows that were actually used.
    let mut pseudo_acc = Vec::with_capacity(n);
    for set in &pseudo_sets {
        let truth = stream
            .target(set.time_index)
            .eval_labels
            .as_ref()
            .ok_or_else(|| Error::data("target snapshot has no eval labels"))?;
        let (mut hit, mut total) = (0usize, 0usize);
        for i in 0..truth.len() {
            if set.selected[i] {
                total += 1;
                hit += usize::from(set.labels[i] == truth[i]);
            }
        }
        pseudo_acc.push(hit as f64 / total.max(1) as f64);
    }

    Ok(RunResult {
        theta_final,
        theta_init,
        acc_newest,
        h_acc: historical.h_acc,
        per_target_acc,
        historical,
        pseudo_sets,
        pseudo_acc,
        wall_time: start.elapsed(),
    })
}

// ============================================================================
// Tests
// ============================================================================
