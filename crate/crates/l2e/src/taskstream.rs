//! Drifting task streams: `N` labeled source snapshots and `N + 1` unlabeled
//! target snapshots over a shared feature space.
//!
//! Synthetic streams draw one base dataset per role and evolve it by
//! per-step rotation plus a Gaussian noise schedule, so consecutive
//! snapshots are close and divergence grows with time distance. Target
//! labels are kept as `eval_labels`, which exist purely for scoring: nothing
//! in the training path reads them, and the pair-construction code in
//! [`crate::meta`] never copies them.
//!
//! Real data enters through CSV files (`f0,...,f{d-1}[,label]`), one file
//! per snapshot.

use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::derive_seed;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskRole {
    Source,
    Target,
}

impl TaskRole {
    pub fn as_str(&self) -> &'static str {
        match self {
            TaskRole::Source => "source",
            TaskRole::Target => "target",
        }
    }
}

/// One snapshot of one domain at one time step. Source snapshots carry
/// training `labels`; target snapshots carry `eval_labels` only, reserved
/// for scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSnapshot {
    pub features: Array2<f64>,
    pub labels: Option<Vec<usize>>,
    pub eval_labels: Option<Vec<usize>>,
    /// 1-based position in its chain.
    pub time_index: usize,
    pub role: TaskRole,
}

impl TaskSnapshot {
    pub fn num_rows(&self) -> usize {
        self.features.nrows()
    }

    /// Re-tags a loaded snapshot. Converting to target moves `labels` into
    /// `eval_labels` so the training-visible side stays unlabeled.
    pub fn with_role_time(mut self, role: TaskRole, time_index: usize) -> Self {
        if role == TaskRole::Target {
            if self.eval_labels.is_none() {
                self.eval_labels = self.labels.take();
            } else {
                self.labels = None;
            }
        }
        self.role = role;
        self.time_index = time_index;
        self
    }

    fn validate(&self, feature_dim: usize, num_classes: usize) -> Result<()> {
        if self.features.ncols() != feature_dim {
            return Err(Error::shape(format!(
                "{} snapshot {} has {} feature columns, stream has {}",
                self.role.as_str(),
                self.time_index,
                self.features.ncols(),
                feature_dim
            )));
        }
        if self.num_rows() == 0 {
            return Err(Error::data(format!(
                "{} snapshot {} is empty",
                self.role.as_str(),
                self.time_index
            )));
        }
        let check_labels = |labels: &Option<Vec<usize>>, what: &str| -> Result<()> {
            if let Some(l) = labels {
                if l.len() != self.num_rows() {
                    return Err(Error::shape(format!(
                        "{} snapshot {}: {} {what} for {} rows",
                        self.role.as_str(),
                        self.time_index,
                        l.len(),
                        self.num_rows()
                    )));
                }
                if let Some(&bad) = l.iter().find(|&&y| y >= num_classes) {
                    return Err(Error::data(format!(
                        "{} snapshot {}: {what} {} out of range for {} classes",
                        self.role.as_str(),
                        self.time_index,
                        bad,
                        num_classes
                    )));
                }
            }
            Ok(())
        };
        check_labels(&self.labels, "labels")?;
        check_labels(&self.eval_labels, "eval labels")?;
        match self.role {
            TaskRole::Source => {
                if self.labels.is_none() {
                    return Err(Error::data(format!(
                        "source snapshot {} has no labels",
                        self.time_index
                    )));
                }
            }
            TaskRole::Target => {
                if self.labels.is_some() {
                    return Err(Error::data(format!(
                        "target snapshot {} carries training labels; targets are unlabeled",
                        self.time_index
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The full problem instance: source chain `1..=N`, target chain `1..=N+1`.
#[derive(Debug, Clone)]
pub struct DynamicStream {
    pub sources: Vec<TaskSnapshot>,
    pub targets: Vec<TaskSnapshot>,
    pub num_classes: usize,
    pub feature_dim: usize,
}

impl DynamicStream {
    /// Number of source snapshots (`N`); targets run to `N + 1`.
    pub fn n(&self) -> usize {
        self.sources.len()
    }

    /// 1-based accessors matching the time indices.
    pub fn source(&self, j: usize) -> &TaskSnapshot {
        &self.sources[j - 1]
    }

    pub fn target(&self, j: usize) -> &TaskSnapshot {
        &self.targets[j - 1]
    }

    pub fn validate(&self) -> Result<()> {
        if self.sources.is_empty() {
            return Err(Error::data("stream has no source snapshots"));
        }
        if self.targets.len() != self.sources.len() + 1 {
            return Err(Error::data(format!(
                "stream has {} target snapshots for {} sources, expected one more",
                self.targets.len(),
                self.sources.len()
            )));
        }
        for (i, s) in self.sources.iter().enumerate() {
            if s.role != TaskRole::Source || s.time_index != i + 1 {
                return Err(Error::data(format!(
                    "source chain broken at position {}: role {:?}, time {}",
                    i + 1,
                    s.role,
                    s.time_index
                )));
            }
            s.validate(self.feature_dim, self.num_classes)?;
        }
        for (i, t) in self.targets.iter().enumerate() {
            if t.role != TaskRole::Target || t.time_index != i + 1 {
                return Err(Error::data(format!(
                    "target chain broken at position {}: role {:?}, time {}",
                    i + 1,
                    t.role,
                    t.time_index
                )));
            }
            t.validate(self.feature_dim, self.num_classes)?;
        }
        Ok(())
    }
}

/// Linear noise schedule: standard deviation `base + per_step * (j - 1)` at
/// time step `j`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSchedule {
    pub base: f64,
    pub per_step: f64,
}

impl NoiseSchedule {
    pub const ZERO: NoiseSchedule = NoiseSchedule {
        base: 0.0,
        per_step: 0.0,
    };

    pub fn at(&self, j: usize) -> f64 {
        self.base + self.per_step * (j - 1) as f64
    }
}

/// Base dataset family for synthetic streams, or CSV files for real data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorCfg {
    /// Two interleaved half-circle arcs with Gaussian jitter `noise`.
    TwoMoons { noise: f64 },
    /// `num_classes` isotropic Gaussians with means evenly spaced on a
    /// circle of the given radius.
    GaussianMixture {
        num_classes: usize,
        radius: f64,
        sigma: f64,
    },
    /// Pre-existing snapshots: `n_steps` source files and `n_steps + 1`
    /// target files. Rotation and noise schedules do not apply.
    Csv {
        source_paths: Vec<String>,
        target_paths: Vec<String>,
        num_classes: usize,
        /// Whether target files carry a label column (kept as eval labels).
        target_has_labels: bool,
    },
}

/// Full recipe for a drifting stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StreamCfg {
    pub generator: GeneratorCfg,
    pub m_per_snapshot: usize,
    /// Number of source steps `N`; the target chain has `N + 1`.
    pub n_steps: usize,
    /// Rotation per step in degrees, applied as `rot * (j - 1)` at step `j`.
    pub rot_source_deg: f64,
    pub rot_target_deg: f64,
    pub noise_source: NoiseSchedule,
    pub noise_target: NoiseSchedule,
    pub seed: u64,
    /// Draw the same base dataset for both roles (useful for no-drift
    /// controls where source and target should coincide).
    pub shared_base: bool,
    /// Redraw the base dataset at every step instead of evolving one draw.
    pub resample_per_step: bool,
}

impl Default for StreamCfg {
    fn default() -> Self {
        StreamCfg {
            generator: GeneratorCfg::TwoMoons { noise: 0.1 },
            m_per_snapshot: 200,
            n_steps: 5,
            rot_source_deg: -30.0,
            rot_target_deg: 15.0,
            noise_source: NoiseSchedule::ZERO,
            noise_target: NoiseSchedule {
                base: 0.0,
                per_step: 0.05,
            },
            seed: 0,
            shared_base: false,
            resample_per_step: false,
        }
    }
}

impl StreamCfg {
    pub fn validate(&self) -> Result<()> {
        if self.n_steps < 2 {
            return Err(Error::config(format!(
                "stream needs at least 2 steps, got {}",
                self.n_steps
            )));
        }
        if !self.rot_source_deg.is_finite() || !self.rot_target_deg.is_finite() {
            return Err(Error::config("rotation must be finite"));
        }
        for j in 1..=(self.n_steps + 1) {
            if self.noise_source.at(j) < 0.0 || self.noise_target.at(j) < 0.0 {
                return Err(Error::config(format!(
                    "noise schedule is negative at step {j}"
                )));
            }
        }
        match &self.generator {
            GeneratorCfg::TwoMoons { noise } => {
                if *noise < 0.0 || !noise.is_finite() {
                    return Err(Error::config("two-moons noise must be nonnegative"));
                }
                if self.m_per_snapshot < 8 {
                    return Err(Error::config(format!(
                        "synthetic snapshots need at least 8 rows, got {}",
                        self.m_per_snapshot
                    )));
                }
            }
            GeneratorCfg::GaussianMixture {
                num_classes,
                radius,
                sigma,
            } => {
                if *num_classes < 2 {
                    return Err(Error::config("mixture needs at least 2 classes"));
                }
                if !(*radius > 0.0) || *sigma < 0.0 {
                    return Err(Error::config("mixture needs radius > 0 and sigma >= 0"));
                }
                if self.m_per_snapshot < 8 || self.m_per_snapshot < *num_classes {
                    return Err(Error::config(format!(
                        "synthetic snapshots need at least max(8, num_classes) rows, got {}",
                        self.m_per_snapshot
                    )));
                }
            }
            GeneratorCfg::Csv {
                source_paths,
                target_paths,
                num_classes,
                ..
            } => {
                if source_paths.len() != self.n_steps {
                    return Err(Error::config(format!(
                        "{} source CSVs for n_steps = {}",
                        source_paths.len(),
                        self.n_steps
                    )));
                }
                if target_paths.len() != self.n_steps + 1 {
                    return Err(Error::config(format!(
                        "{} target CSVs, expected n_steps + 1 = {}",
                        target_paths.len(),
                        self.n_steps + 1
                    )));
                }
                if *num_classes < 2 {
                    return Err(Error::config("CSV stream needs at least 2 classes"));
                }
            }
        }
        Ok(())
    }
}

/// Two interleaved half-circles: `ceil(m/2)` points `(cos t, sin t)` with
/// label 0 and `floor(m/2)` points `(1 - cos t, 0.5 - sin t)` with label 1,
/// `t` on a uniform grid over `[0, pi]`, plus isotropic Gaussian jitter.
pub fn make_moons(m: usize, noise: f64, seed: u64) -> Result<(Array2<f64>, Vec<usize>)> {
    if m < 2 {
        return Err(Error::config(format!("two moons need at least 2 points, got {m}")));
    }
    if noise < 0.0 || !noise.is_finite() {
        return Err(Error::config("two-moons noise must be nonnegative"));
    }
    let k0 = m.div_ceil(2);
    let k1 = m / 2;
    let grid = |i: usize, k: usize| -> f64 {
        if k > 1 {
            std::f64::consts::PI * i as f64 / (k - 1) as f64
        } else {
            0.0
        }
    };
    let mut feats = Array2::zeros((m, 2));
    let mut labels = Vec::with_capacity(m);
    for i in 0..k0 {
        let t = grid(i, k0);
        feats[[i, 0]] = t.cos();
        feats[[i, 1]] = t.sin();
        labels.push(0);
    }
    for i in 0..k1 {
        let t = grid(i, k1);
        feats[[k0 + i, 0]] = 1.0 - t.cos();
        feats[[k0 + i, 1]] = 0.5 - t.sin();
        labels.push(1);
    }
    if noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise).expect("noise validated");
        for v in feats.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    Ok((feats, labels))
}

/// Isotropic Gaussian blobs with means spaced evenly on a circle;
/// near-balanced class counts (sizes differ by at most one).
pub fn make_gaussian_mixture(
    m: usize,
    num_classes: usize,
    radius: f64,
    sigma: f64,
    seed: u64,
) -> Result<(Array2<f64>, Vec<usize>)> {
    if num_classes < 2 {
        return Err(Error::config("mixture needs at least 2 classes"));
    }
    if m < num_classes {
        return Err(Error::config(format!(
            "mixture needs at least one point per class: m = {m}, classes = {num_classes}"
        )));
    }
    if !(radius > 0.0) || sigma < 0.0 || !radius.is_finite() || !sigma.is_finite() {
        return Err(Error::config("mixture needs radius > 0 and sigma >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut feats = Array2::zeros((m, 2));
    let mut labels = Vec::with_capacity(m);
    let mut row = 0;
    for c in 0..num_classes {
        let count = m / num_classes + usize::from(c < m % num_classes);
        let angle = 2.0 * std::f64::consts::PI * c as f64 / num_classes as f64;
        let (mx, my) = (radius * angle.cos(), radius * angle.sin());
        for _ in 0..count {
            let (dx, dy) = if sigma > 0.0 {
                (sigma * normal.sample(&mut rng), sigma * normal.sample(&mut rng))
            } else {
                (0.0, 0.0)
            };
            feats[[row, 0]] = mx + dx;
            feats[[row, 1]] = my + dy;
            labels.push(c);
            row += 1;
        }
    }
    Ok((feats, labels))
}

/// Rotates 2-D row vectors counterclockwise by the given angle in degrees.
pub fn rotate(features: ArrayView2<f64>, degrees: f64) -> Result<Array2<f64>> {
    if features.ncols() != 2 {
        return Err(Error::shape(format!(
            "rotation is defined for 2-D features, got {} columns",
            features.ncols()
        )));
    }
    let theta = degrees.to_radians();
    let (s, c) = theta.sin_cos();
    let mut out = Array2::zeros(features.raw_dim());
    for (i, row) in features.rows().into_iter().enumerate() {
        out[[i, 0]] = c * row[0] - s * row[1];
        out[[i, 1]] = s * row[0] + c * row[1];
    }
    Ok(out)
}

fn add_noise(feats: &mut Array2<f64>, sigma: f64, seed: u64) {
    if sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sigma).expect("sigma validated");
        for v in feats.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
}

/// Generates the full stream described by `cfg`. Deterministic per seed:
/// base draws, per-snapshot noise, and therefore every byte of any saved
/// artifact reproduce exactly.
pub fn gen_stream(cfg: &StreamCfg) -> Result<DynamicStream> {
    cfg.validate()?;
    let n = cfg.n_steps;
    match &cfg.generator {
        GeneratorCfg::Csv {
            source_paths,
            target_paths,
            num_classes,
            target_has_labels,
        } => {
            let mut sources = Vec::with_capacity(n);
            for (i, p) in source_paths.iter().enumerate() {
                sources.push(load_csv(p, true)?.with_role_time(TaskRole::Source, i + 1));
            }
            let mut targets = Vec::with_capacity(n + 1);
            for (i, p) in target_paths.iter().enumerate() {
                targets
                    .push(load_csv(p, *target_has_labels)?.with_role_time(TaskRole::Target, i + 1));
            }
            let feature_dim = sources[0].features.ncols();
            let stream = DynamicStream {
                sources,
                targets,
                num_classes: *num_classes,
                feature_dim,
            };
            stream.validate()?;
            Ok(stream)
        }
        _ => {
            let make_base = |seed: u64| -> Result<(Array2<f64>, Vec<usize>)> {
                match &cfg.generator {
                    GeneratorCfg::TwoMoons { noise } => {
                        make_moons(cfg.m_per_snapshot, *noise, seed)
                    }
                    GeneratorCfg::GaussianMixture {
                        num_classes,
                        radius,
                        sigma,
                    } => make_gaussian_mixture(
                        cfg.m_per_snapshot,
                        *num_classes,
                        *radius,
                        *sigma,
                        seed,
                    ),
                    GeneratorCfg::Csv { .. } => unreachable!("handled above"),
                }
            };
            let num_classes = match &cfg.generator {
                GeneratorCfg::TwoMoons { .. } => 2,
                GeneratorCfg::GaussianMixture { num_classes, .. } => *num_classes,
                GeneratorCfg::Csv { .. } => unreachable!("handled above"),
            };
            let src_seed = derive_seed(cfg.seed, 1);
            let tgt_seed = if cfg.shared_base {
                src_seed
            } else {
                derive_seed(cfg.seed, 2)
            };
            let base_s = make_base(src_seed)?;
            let base_t = make_base(tgt_seed)?;

            let snapshot = |role: TaskRole, j: usize| -> Result<TaskSnapshot> {
                let (rot, schedule, base, base_seed_tag, noise_tag) = match role {
                    TaskRole::Source => {
                        (cfg.rot_source_deg, &cfg.noise_source, &base_s, 1000, 3000)
                    }
                    TaskRole::Target => {
                        (cfg.rot_target_deg, &cfg.noise_target, &base_t, 2000, 4000)
                    }
                };
                let fresh;
                let (feats0, labels) = if cfg.resample_per_step {
                    fresh = make_base(derive_seed(cfg.seed, base_seed_tag + j as u64))?;
                    (&fresh.0, &fresh.1)
                } else {
                    (&base.0, &base.1)
                };
                let mut feats = rotate(feats0.view(), rot * (j - 1) as f64)?;
                add_noise(&mut feats, schedule.at(j), derive_seed(cfg.seed, noise_tag + j as u64));
                Ok(match role {
                    TaskRole::Source => TaskSnapshot {
                        features: feats,
                        labels: Some(labels.clone()),
                        eval_labels: None,
                        time_index: j,
                        role,
                    },
                    TaskRole::Target => TaskSnapshot {
                        features: feats,
                        labels: None,
                        eval_labels: Some(labels.clone()),
                        time_index: j,
                        role,
                    },
                })
            };

            let mut sources = Vec::with_capacity(n);
            for j in 1..=n {
                sources.push(snapshot(TaskRole::Source, j)?);
            }
            let mut targets = Vec::with_capacity(n + 1);
            for j in 1..=(n + 1) {
                targets.push(snapshot(TaskRole::Target, j)?);
            }
            let stream = DynamicStream {
                sources,
                targets,
                num_classes,
                feature_dim: 2,
            };
            stream.validate()?;
            Ok(stream)
        }
    }
}

/// Reads a snapshot from `f0,...,f{d-1}[,label]` CSV. The caller assigns
/// role and time via [`TaskSnapshot::with_role_time`].
pub fn load_csv(path: impl AsRef<Path>, has_labels: bool) -> Result<TaskSnapshot> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let path_str = path.display().to_string();
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::format(format!("{path_str}: empty file")))?;
    let cols: Vec<&str> = header.split(',').collect();
    let has_label_col = cols.last() == Some(&"label");
    let d = if has_label_col { cols.len() - 1 } else { cols.len() };
    if has_labels && !has_label_col {
        return Err(Error::format(format!(
            "{path_str}: expected a trailing 'label' column, header is '{header}'"
        )));
    }
    if !has_labels && has_label_col {
        return Err(Error::format(format!(
            "{path_str}: found a 'label' column but labels were not expected"
        )));
    }
    for (i, c) in cols.iter().take(d).enumerate() {
        if *c != format!("f{i}") {
            return Err(Error::format(format!(
                "{path_str}: header column {i} is '{c}', expected 'f{i}'"
            )));
        }
    }
    if d == 0 {
        return Err(Error::format(format!("{path_str}: no feature columns")));
    }

    let mut rows: Vec<f64> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut m = 0usize;
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        let expected = if has_labels { d + 1 } else { d };
        if cells.len() != expected {
            return Err(Error::Parse {
                path: path_str,
                line: lineno,
                msg: format!("{} cells, expected {expected}", cells.len()),
            });
        }
        for cell in &cells[..d] {
            let v: f64 = cell.parse().map_err(|e| Error::Parse {
                path: path_str.clone(),
                line: lineno,
                msg: format!("bad number '{cell}': {e}"),
            })?;
            rows.push(v);
        }
        if has_labels {
            let y: usize = cells[d].parse().map_err(|e| Error::Parse {
                path: path_str.clone(),
                line: lineno,
                msg: format!("bad label '{}': {e}", cells[d]),
            })?;
            labels.push(y);
        }
        m += 1;
    }
    if m == 0 {
        return Err(Error::data(format!("{path_str}: no data rows")));
    }
    let features = Array2::from_shape_vec((m, d), rows).expect("row width checked");
    Ok(TaskSnapshot {
        features,
        labels: if has_labels { Some(labels) } else { None },
        eval_labels: None,
        time_index: 1,
        role: TaskRole::Source,
    })
}

/// Writes the mirror image of [`load_csv`]: floats at 17 significant digits
/// so a reload reproduces every value bit for bit. Training labels are
/// written when present, otherwise eval labels (so generated target
/// snapshots keep their ground truth on disk).
pub fn save_csv(snapshot: &TaskSnapshot, path: impl AsRef<Path>) -> Result<()> {
    let d = snapshot.features.ncols();
    let labels = snapshot.labels.as_ref().or(snapshot.eval_labels.as_ref());
    let mut out = String::new();
    for i in 0..d {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format!("f{i}"));
    }
    if labels.is_some() {
        out.push_str(",label");
    }
    out.push('\n');
    for i in 0..snapshot.num_rows() {
        for c in 0..d {
            if c > 0 {
                out.push(',');
            }
            out.push_str(&format!("{:.16e}", snapshot.features[[i, c]]));
        }
        if let Some(l) = labels {
            out.push_str(&format!(",{}", l[i]));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Seeded index split: `val_count` validation rows, the rest training, both
/// sorted ascending. Disjoint and exhaustive by construction.
pub(crate) fn split_indices(m: usize, val_count: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if val_count == 0 || val_count >= m {
        return Err(Error::config(format!(
            "val_count must be in [1, {}) for {m} rows, got {val_count}",
            m
        )));
    }
    let mut perm: Vec<usize> = (0..m).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    perm.shuffle(&mut rng);
    let mut val: Vec<usize> = perm[..val_count].to_vec();
    let mut train: Vec<usize> = perm[val_count..].to_vec();
    val.sort_unstable();
    train.sort_unstable();
    Ok((train, val))
}

fn take_rows(snapshot: &TaskSnapshot, idx: &[usize]) -> TaskSnapshot {
    let mut features = Array2::zeros((idx.len(), snapshot.features.ncols()));
    for (r, &i) in idx.iter().enumerate() {
        features.row_mut(r).assign(&snapshot.features.row(i));
    }
    let pick = |l: &Option<Vec<usize>>| l.as_ref().map(|l| idx.iter().map(|&i| l[i]).collect());
    TaskSnapshot {
        features,
        labels: pick(&snapshot.labels),
        eval_labels: pick(&snapshot.eval_labels),
        time_index: snapshot.time_index,
        role: snapshot.role,
    }
}

/// Splits one snapshot into `(train, val)` with a seeded permutation.
/// Labels and eval labels partition consistently with the features.
pub fn split(
    snapshot: &TaskSnapshot,
    val_count: usize,
    seed: u64,
) -> Result<(TaskSnapshot, TaskSnapshot)> {
    let (train, val) = split_indices(snapshot.num_rows(), val_count, seed)?;
    Ok((take_rows(snapshot, &train), take_rows(snapshot, &val)))
}

// ============================================================================
// Tests
// ============================================================================
