//! Distribution distances between task snapshots.
//!
//! Two families live here:
//!
//! - Sample-based estimators used on feature matrices: squared maximum mean
//!   discrepancy (biased and unbiased, RBF kernels), a label-conditional MMD,
//!   and a trained domain-classifier proxy. The biased MMD also exposes the
//!   exact gradient with respect to the input rows, which is what lets the
//!   training loss in [`crate::numerics`] backpropagate an alignment term
//!   through the feature extractor.
//! - Exact divergences on small discrete distributions (L1 and
//!   Jensen-Shannon), used by the bound calculator in [`crate::bounds`].
//!
//! The proxy estimator trains a throwaway logistic separator and is a
//! measurement tool only; nothing here feeds it back into a training loss.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// RBF kernel configuration. `bandwidth: None` selects the median heuristic
/// on the data the estimator is called with; `Some(b)` fixes it. When
/// `multipliers` is present the kernel is the mean of RBF kernels at
/// `multiplier * bandwidth` for each entry, which makes the estimate less
/// sensitive to the single-bandwidth choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelCfg {
    pub bandwidth: Option<f64>,
    pub multipliers: Option<Vec<f64>>,
}

impl Default for KernelCfg {
    fn default() -> Self {
        KernelCfg {
            bandwidth: None,
            multipliers: None,
        }
    }
}

impl KernelCfg {
    pub fn fixed(bandwidth: f64) -> Self {
        KernelCfg {
            bandwidth: Some(bandwidth),
            multipliers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(b) = self.bandwidth {
            if !(b > 0.0) || !b.is_finite() {
                return Err(Error::config(format!(
                    "kernel bandwidth must be positive and finite, got {b}"
                )));
            }
        }
        if let Some(ms) = &self.multipliers {
            if ms.is_empty() {
                return Err(Error::config("kernel multiplier list must be nonempty"));
            }
            for &m in ms {
                if !(m > 0.0) || !m.is_finite() {
                    return Err(Error::config(format!(
                        "kernel multipliers must be positive and finite, got {m}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Resolves the base bandwidth against concrete data (median heuristic
    /// when unset) and expands the multiplier list. The returned base is the
    /// pre-multiplier bandwidth.
    pub fn resolve(&self, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<(f64, Vec<f64>)> {
        self.validate()?;
        let base = match self.bandwidth {
            Some(b) => b,
            None => median_heuristic(x, y)?,
        };
        let bws = match &self.multipliers {
            Some(ms) => ms.iter().map(|m| m * base).collect(),
            None => vec![base],
        };
        Ok((base, bws))
    }
}

/// Which estimator produced a [`DivergenceEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    MmdBiased,
    MmdUnbiased,
    ProxyDomainClassifier,
    CondMmd,
    L1Discrete,
}

impl EstimatorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorKind::MmdBiased => "mmd_biased",
            EstimatorKind::MmdUnbiased => "mmd_unbiased",
            EstimatorKind::ProxyDomainClassifier => "proxy_domain_classifier",
            EstimatorKind::CondMmd => "cond_mmd",
            EstimatorKind::L1Discrete => "l1_discrete",
        }
    }
}

/// A divergence value plus the context needed to interpret it.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceEstimate {
    pub value: f64,
    pub estimator: EstimatorKind,
    /// Row counts of the two samples.
    pub sizes: (usize, usize),
    /// Base bandwidth actually used; `None` for estimators without a kernel.
    pub bandwidth: Option<f64>,
    /// Classes dropped by [`cond_mmd`] because they appear on one side only.
    pub skipped_classes: usize,
}

fn check_same_dim(x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<()> {
    if x.ncols() != y.ncols() {
        return Err(Error::shape(format!(
            "samples have different feature dimensions: {} vs {}",
            x.ncols(),
            y.ncols()
        )));
    }
    Ok(())
}

fn sq_dist(u: ArrayView1<f64>, v: ArrayView1<f64>) -> f64 {
    u.iter()
        .zip(v.iter())
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum()
}

fn kernel_mean(d2: f64, bws: &[f64]) -> f64 {
    let s: f64 = bws.iter().map(|b| (-d2 / (2.0 * b * b)).exp()).sum();
    s / bws.len() as f64
}

/// Median of the pairwise Euclidean distances of the pooled rows of `x` and
/// `y`, ignoring zero distances. Falls back to 1.0 when every pairwise
/// distance is zero (all points coincide) or when fewer than two points are
/// pooled but at least one exists.
pub fn median_heuristic(x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<f64> {
    check_same_dim(x, y)?;
    let total = x.nrows() + y.nrows();
    if total == 0 {
        return Err(Error::data("median heuristic on an empty pooled sample"));
    }
    let row = |i: usize| -> ArrayView1<f64> {
        if i < x.nrows() {
            x.row(i)
        } else {
            y.row(i - x.nrows())
        }
    };
    let mut dists = Vec::with_capacity(total * (total - 1) / 2);
    for i in 0..total {
        for j in (i + 1)..total {
            let d = sq_dist(row(i), row(j)).sqrt();
            if d > 0.0 {
                dists.push(d);
            }
        }
    }
    if dists.is_empty() {
        return Ok(1.0);
    }
    dists.sort_by(|a, b| a.partial_cmp(b).expect("distances are finite"));
    let n = dists.len();
    let med = if n % 2 == 1 {
        dists[n / 2]
    } else {
        0.5 * (dists[n / 2 - 1] + dists[n / 2])
    };
    Ok(med)
}

pub(crate) fn mmd2_biased_with(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    bws: &[f64],
) -> Result<f64> {
    let (ma, mb) = (x.nrows(), y.nrows());
    let mut sxx = 0.0;
    for i in 0..ma {
        for j in 0..ma {
            sxx += kernel_mean(sq_dist(x.row(i), x.row(j)), bws);
        }
    }
    let mut syy = 0.0;
    for i in 0..mb {
        for j in 0..mb {
            syy += kernel_mean(sq_dist(y.row(i), y.row(j)), bws);
        }
    }
    let mut sxy = 0.0;
    for i in 0..ma {
        for j in 0..mb {
            sxy += kernel_mean(sq_dist(x.row(i), y.row(j)), bws);
        }
    }
    let v = sxx / (ma * ma) as f64 + syy / (mb * mb) as f64 - 2.0 * sxy / (ma * mb) as f64;
    if !v.is_finite() {
        return Err(Error::numerical("biased MMD^2 is not finite"));
    }
    if v < -1e-12 {
        return Err(Error::numerical(format!(
            "biased MMD^2 is negative beyond rounding: {v}"
        )));
    }
    Ok(v.max(0.0))
}

/// Biased (V-statistic) squared MMD between the rows of `x` and `y`.
/// Nonnegative by construction; values in `[-1e-12, 0)` from rounding are
/// clamped to zero, anything lower is reported as a numerical error.
pub fn mmd2_biased(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    kernel: &KernelCfg,
) -> Result<DivergenceEstimate> {
    check_same_dim(x, y)?;
    if x.nrows() == 0 || y.nrows() == 0 {
        return Err(Error::data("biased MMD^2 requires nonempty samples"));
    }
    let (base, bws) = kernel.resolve(x, y)?;
    let value = mmd2_biased_with(x, y, &bws)?;
    Ok(DivergenceEstimate {
        value,
        estimator: EstimatorKind::MmdBiased,
        sizes: (x.nrows(), y.nrows()),
        bandwidth: Some(base),
        skipped_classes: 0,
    })
}

/// Unbiased (U-statistic) squared MMD: diagonal terms are excluded, so the
/// value may legitimately be negative for similar samples.
pub fn mmd2_unbiased(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    kernel: &KernelCfg,
) -> Result<DivergenceEstimate> {
    check_same_dim(x, y)?;
    let (ma, mb) = (x.nrows(), y.nrows());
    if ma < 2 || mb < 2 {
        return Err(Error::data(format!(
            "unbiased MMD^2 requires at least two rows per side, got {ma} and {mb}"
        )));
    }
    let (base, bws) = kernel.resolve(x, y)?;
    let mut sxx = 0.0;
    for i in 0..ma {
        for j in 0..ma {
            if i != j {
                sxx += kernel_mean(sq_dist(x.row(i), x.row(j)), &bws);
            }
        }
    }
    let mut syy = 0.0;
    for i in 0..mb {
        for j in 0..mb {
            if i != j {
                syy += kernel_mean(sq_dist(y.row(i), y.row(j)), &bws);
            }
        }
    }
    let mut sxy = 0.0;
    for i in 0..ma {
        for j in 0..mb {
            sxy += kernel_mean(sq_dist(x.row(i), y.row(j)), &bws);
        }
    }
    let value = sxx / (ma * (ma - 1)) as f64 + syy / (mb * (mb - 1)) as f64
        - 2.0 * sxy / (ma * mb) as f64;
    if !value.is_finite() {
        return Err(Error::numerical("unbiased MMD^2 is not finite"));
    }
    Ok(DivergenceEstimate {
        value,
        estimator: EstimatorKind::MmdUnbiased,
        sizes: (ma, mb),
        bandwidth: Some(base),
        skipped_classes: 0,
    })
}

pub(crate) fn mmd2_grad_with(
    za: ArrayView2<f64>,
    zb: ArrayView2<f64>,
    bws: &[f64],
) -> (Array2<f64>, Array2<f64>) {
    let (ma, mb) = (za.nrows(), zb.nrows());
    let dim = za.ncols();
    let nk = bws.len() as f64;
    // d k(u, v) / d u = -k_b(u, v) * (u - v) / b^2, averaged over bandwidths.
    let weight = |d2: f64| -> f64 {
        bws.iter()
            .map(|b| (-d2 / (2.0 * b * b)).exp() / (b * b))
            .sum::<f64>()
            / nk
    };
    let mut ga = Array2::zeros((ma, dim));
    let mut gb = Array2::zeros((mb, dim));
    // Accumulate the within-sample and cross-sample sums separately and
    // combine once per row: when the two inputs are identical the sums are
    // bitwise equal, so the gradient cancels to exactly zero.
    let mut within = vec![0.0; dim];
    let mut cross = vec![0.0; dim];
    for i in 0..ma {
        within.iter_mut().for_each(|v| *v = 0.0);
        cross.iter_mut().for_each(|v| *v = 0.0);
        for l in 0..ma {
            let w = weight(sq_dist(za.row(i), za.row(l)));
            for c in 0..dim {
                within[c] += w * (za[[i, c]] - za[[l, c]]);
            }
        }
        for l in 0..mb {
            let w = weight(sq_dist(za.row(i), zb.row(l)));
            for c in 0..dim {
                cross[c] += w * (za[[i, c]] - zb[[l, c]]);
            }
        }
        for c in 0..dim {
            ga[[i, c]] =
                2.0 * (cross[c] / (ma * mb) as f64 - within[c] / (ma * ma) as f64);
        }
    }
    for j in 0..mb {
        within.iter_mut().for_each(|v| *v = 0.0);
        cross.iter_mut().for_each(|v| *v = 0.0);
        for l in 0..mb {
            let w = weight(sq_dist(zb.row(j), zb.row(l)));
            for c in 0..dim {
                within[c] += w * (zb[[j, c]] - zb[[l, c]]);
            }
        }
        for l in 0..ma {
            let w = weight(sq_dist(zb.row(j), za.row(l)));
            for c in 0..dim {
                cross[c] += w * (zb[[j, c]] - za[[l, c]]);
            }
        }
        for c in 0..dim {
            gb[[j, c]] =
                2.0 * (cross[c] / (ma * mb) as f64 - within[c] / (mb * mb) as f64);
        }
    }
    (ga, gb)
}

/// Exact gradient of the biased squared MMD with respect to every row of
/// both inputs. Row `i` of the first output is `d mmd2 / d za[i]`.
pub fn mmd2_grad_embeddings(
    za: ArrayView2<f64>,
    zb: ArrayView2<f64>,
    kernel: &KernelCfg,
) -> Result<(Array2<f64>, Array2<f64>)> {
    check_same_dim(za, zb)?;
    if za.nrows() == 0 || zb.nrows() == 0 {
        return Err(Error::data("MMD^2 gradient requires nonempty samples"));
    }
    let (_, bws) = kernel.resolve(za, zb)?;
    Ok(mmd2_grad_with(za, zb, &bws))
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Proxy A-distance style statistic: train a logistic separator to tell the
/// two samples apart on a held-out half and report `2 * (1 - 2 * err)`,
/// clamped to `[0, 2]`. Near 0 means indistinguishable, near 2 means
/// separable. Split, training, and therefore the value are deterministic per
/// seed. This is a diagnostic; it is never used as a training objective.
pub fn proxy_domain_divergence(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    seed: u64,
) -> Result<DivergenceEstimate> {
    check_same_dim(x, y)?;
    let (ma, mb) = (x.nrows(), y.nrows());
    if ma < 4 || mb < 4 {
        return Err(Error::data(format!(
            "proxy divergence requires at least 4 rows per side, got {ma} and {mb}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm_a: Vec<usize> = (0..ma).collect();
    perm_a.shuffle(&mut rng);
    let mut perm_b: Vec<usize> = (0..mb).collect();
    perm_b.shuffle(&mut rng);
    // Stratified 50/50 split: half of each side goes to train, half to test.
    let (tr_a, te_a) = perm_a.split_at(ma / 2);
    let (tr_b, te_b) = perm_b.split_at(mb / 2);
    if tr_a.is_empty() || tr_b.is_empty() || te_a.is_empty() || te_b.is_empty() {
        return Err(Error::data("degenerate train/test split in proxy divergence"));
    }

    let dim = x.ncols();
    let n_train = tr_a.len() + tr_b.len();
    let mut feats = Array2::zeros((n_train, dim));
    let mut labels = Vec::with_capacity(n_train);
    for (r, &i) in tr_a.iter().enumerate() {
        feats.row_mut(r).assign(&x.row(i));
        labels.push(0.0);
    }
    for (r, &i) in tr_b.iter().enumerate() {
        feats.row_mut(tr_a.len() + r).assign(&y.row(i));
        labels.push(1.0);
    }

    // Standardize with train statistics so the fixed step size behaves the
    // same regardless of feature scale.
    let mut mean = Array1::zeros(dim);
    let mut std = Array1::zeros(dim);
    for c in 0..dim {
        let col = feats.column(c);
        let m = col.sum() / n_train as f64;
        let v = col.iter().map(|&a| (a - m) * (a - m)).sum::<f64>() / n_train as f64;
        mean[c] = m;
        std[c] = if v.sqrt() > 0.0 { v.sqrt() } else { 1.0 };
    }

    let score = |w: &Array1<f64>, row: ArrayView1<f64>| -> f64 {
        let mut t = w[dim]; // bias
        for c in 0..dim {
            t += w[c] * (row[c] - mean[c]) / std[c];
        }
        t
    };

    // Fixed small budget of full-batch gradient steps on the logistic loss.
    let mut w: Array1<f64> = Array1::zeros(dim + 1);
    let lr = 0.5;
    for _ in 0..300 {
        let mut grad: Array1<f64> = Array1::zeros(dim + 1);
        for r in 0..n_train {
            let err = sigmoid(score(&w, feats.row(r))) - labels[r];
            for c in 0..dim {
                grad[c] += err * (feats[[r, c]] - mean[c]) / std[c];
            }
            grad[dim] += err;
        }
        grad.mapv_inplace(|g| g / n_train as f64);
        w = &w - &(grad * lr);
    }

    let mut wrong = 0usize;
    let mut total = 0usize;
    for &i in te_a {
        if score(&w, x.row(i)) >= 0.0 {
            wrong += 1;
        }
        total += 1;
    }
    for &i in te_b {
        if score(&w, y.row(i)) < 0.0 {
            wrong += 1;
        }
        total += 1;
    }
    let err = wrong as f64 / total as f64;
    let value = (2.0 * (1.0 - 2.0 * err)).clamp(0.0, 2.0);
    Ok(DivergenceEstimate {
        value,
        estimator: EstimatorKind::ProxyDomainClassifier,
        sizes: (ma, mb),
        bandwidth: None,
        skipped_classes: 0,
    })
}

/// Label-conditional MMD: biased squared MMD per shared class, combined as a
/// class-frequency-weighted mean (weights proportional to the combined row
/// count of the class over both sides). Classes present on only one side are
/// skipped and counted in `skipped_classes`. The kernel bandwidth is
/// resolved once on the full pooled features so small classes do not get
/// unstable per-class bandwidths.
pub fn cond_mmd(
    xa: ArrayView2<f64>,
    ya: &[usize],
    xb: ArrayView2<f64>,
    yb: &[usize],
    kernel: &KernelCfg,
) -> Result<DivergenceEstimate> {
    check_same_dim(xa, xb)?;
    if ya.len() != xa.nrows() || yb.len() != xb.nrows() {
        return Err(Error::shape(format!(
            "label length mismatch: {} labels for {} rows, {} labels for {} rows",
            ya.len(),
            xa.nrows(),
            yb.len(),
            xb.nrows()
        )));
    }
    if xa.nrows() == 0 || xb.nrows() == 0 {
        return Err(Error::data("conditional MMD requires nonempty samples"));
    }
    let (base, bws) = kernel.resolve(xa, xb)?;

    let classes: std::collections::BTreeSet<usize> =
        ya.iter().chain(yb.iter()).copied().collect();
    let take = |x: ArrayView2<f64>, y: &[usize], c: usize| -> Array2<f64> {
        let rows: Vec<usize> = (0..x.nrows()).filter(|&i| y[i] == c).collect();
        let mut out = Array2::zeros((rows.len(), x.ncols()));
        for (r, &i) in rows.iter().enumerate() {
            out.row_mut(r).assign(&x.row(i));
        }
        out
    };

    let mut weighted = 0.0;
    let mut weight_total = 0.0;
    let mut skipped = 0usize;
    let mut shared = 0usize;
    for &c in &classes {
        let a = take(xa, ya, c);
        let b = take(xb, yb, c);
        if a.nrows() == 0 || b.nrows() == 0 {
            skipped += 1;
            continue;
        }
        shared += 1;
        let w = (a.nrows() + b.nrows()) as f64;
        weighted += w * mmd2_biased_with(a.view(), b.view(), &bws)?;
        weight_total += w;
    }
    if shared == 0 {
        return Err(Error::data("conditional MMD: no class present on both sides"));
    }
    Ok(DivergenceEstimate {
        value: weighted / weight_total,
        estimator: EstimatorKind::CondMmd,
        sizes: (xa.nrows(), xb.nrows()),
        bandwidth: Some(base),
        skipped_classes: skipped,
    })
}

fn check_distribution(p: &[f64], name: &str) -> Result<()> {
    for &v in p {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::data(format!(
                "{name} has a negative or non-finite entry: {v}"
            )));
        }
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::data(format!("{name} sums to {s}, expected 1 within 1e-9")));
    }
    Ok(())
}

/// Exact L1 distance `sum_x |p(x) - q(x)|` between two discrete
/// distributions on the same support. Twice the total variation distance;
/// always in `[0, 2]`.
pub fn l1_divergence_discrete(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::shape(format!(
            "distributions have different support sizes: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    if p.is_empty() {
        return Err(Error::data("empty distributions"));
    }
    check_distribution(p, "first distribution")?;
    check_distribution(q, "second distribution")?;
    Ok(p.iter().zip(q.iter()).map(|(a, b)| (a - b).abs()).sum())
}

/// Exact Jensen-Shannon divergence (natural log) between two discrete
/// distributions on the same support. Symmetric and bounded by `ln 2`.
pub fn js_divergence_discrete(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::shape(format!(
            "distributions have different support sizes: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    if p.is_empty() {
        return Err(Error::data("empty distributions"));
    }
    check_distribution(p, "first distribution")?;
    check_distribution(q, "second distribution")?;
    let term = |a: f64, m: f64| if a > 0.0 { a * (a / m).ln() } else { 0.0 };
    let mut js = 0.0;
    for (&a, &b) in p.iter().zip(q.iter()) {
        let m = 0.5 * (a + b);
        js += 0.5 * term(a, m) + 0.5 * term(b, m);
    }
    // Rounding can leave a tiny negative residue when p == q.
    Ok(js.max(0.0))
}

// ============================================================================
// Tests
// ============================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::Rng;

    fn rand_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-2.0..2.0))
    }

    // Independent double-loop oracle: build the three kernel matrices
    // explicitly and average them.
    fn mmd2_biased_oracle(x: &Array2<f64>, y: &Array2<f64>, bws: &[f64]) -> f64 {
        let k = |u: ArrayView1<f64>, v: ArrayView1<f64>| -> f64 {
            let d2: f64 = u
                .iter()
                .zip(v.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            bws.iter().map(|s| (-d2 / (2.0 * s * s)).exp()).sum::<f64>() / bws.len() as f64
        };
        let (ma, mb) = (x.nrows(), y.nrows());
        let mut kxx = Array2::<f64>::zeros((ma, ma));
        let mut kyy = Array2::<f64>::zeros((mb, mb));
        let mut kxy = Array2::<f64>::zeros((ma, mb));
        for i in 0..ma {
            for j in 0..ma {
                kxx[[i, j]] = k(x.row(i), x.row(j));
            }
        }
        for i in 0..mb {
            for j in 0..mb {
                kyy[[i, j]] = k(y.row(i), y.row(j));
            }
        }
        for i in 0..ma {
            for j in 0..mb {
                kxy[[i, j]] = k(x.row(i), y.row(j));
            }
        }
        kxx.sum() / (ma * ma) as f64 + kyy.sum() / (mb * mb) as f64
            - 2.0 * kxy.sum() / (ma * mb) as f64
    }

    fn mmd2_unbiased_oracle(x: &Array2<f64>, y: &Array2<f64>, bw: f64) -> f64 {
        let k = |u: ArrayView1<f64>, v: ArrayView1<f64>| -> f64 {
            let d2: f64 = u
                .iter()
                .zip(v.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (-d2 / (2.0 * bw * bw)).exp()
        };
        let (ma, mb) = (x.nrows(), y.nrows());
        let mut sxx = 0.0;
        let mut syy = 0.0;
        let mut sxy = 0.0;
        for i in 0..ma {
            for j in 0..ma {
                if i != j {
                    sxx += k(x.row(i), x.row(j));
                }
            }
        }
        for i in 0..mb {
            for j in 0..mb {
                if i != j {
                    syy += k(y.row(i), y.row(j));
                }
            }
        }
        for i in 0..ma {
            for j in 0..mb {
                sxy += k(x.row(i), y.row(j));
            }
        }
        sxx / (ma * (ma - 1)) as f64 + syy / (mb * (mb - 1)) as f64 - 2.0 * sxy / (ma * mb) as f64
    }

    // ----- median heuristic -----

    #[test]
    fn median_repeated_point_falls_back_to_one() {
        let x = array![[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]];
        let y = array![[1.0, 1.0]];
        assert_eq!(median_heuristic(x.view(), y.view()).unwrap(), 1.0);
    }

    #[test]
    fn median_hand_case_three_points() {
        // Pooled 1-D points {0, 1, 3}: distances {1, 2, 3}, median 2.
        let x = array![[0.0], [1.0]];
        let y = array![[3.0]];
        assert_eq!(median_heuristic(x.view(), y.view()).unwrap(), 2.0);
    }

    #[test]
    fn median_empty_pool_is_data_error() {
        let x = Array2::<f64>::zeros((0, 2));
        let y = Array2::<f64>::zeros((0, 2));
        assert!(matches!(
            median_heuristic(x.view(), y.view()),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn median_even_count_averages_middle_pair() {
        // Pooled 1-D points {0, 1}: single distance 1 -> median 1.
        // Pooled {0, 1, 2, 4}: distances {1, 1, 2, 2, 3, 4} -> (2 + 2) / 2.
        let x = array![[0.0], [1.0], [2.0], [4.0]];
        let y = Array2::<f64>::zeros((0, 1));
        assert_eq!(median_heuristic(x.view(), y.view()).unwrap(), 2.0);
    }

    // ----- biased MMD^2 -----

    #[test]
    fn mmd2_biased_self_distance_is_zero() {
        let x = rand_matrix(12, 3, 7);
        let est = mmd2_biased(x.view(), x.view(), &KernelCfg::default()).unwrap();
        assert!(est.value.abs() <= 1e-12, "self distance {}", est.value);
    }

    #[test]
    fn mmd2_biased_two_singletons_closed_form() {
        // X = {0}, Y = {t}: mmd2 = 2 - 2 exp(-t^2 / (2 s^2)); t = s = 1.
        let x = array![[0.0]];
        let y = array![[1.0]];
        let est = mmd2_biased(x.view(), y.view(), &KernelCfg::fixed(1.0)).unwrap();
        let expect = 2.0 - 2.0 * (-0.5f64).exp();
        assert!((est.value - expect).abs() <= 1e-12);
        assert!((expect - 0.7869).abs() < 1e-4);
        assert_eq!(est.sizes, (1, 1));
        assert_eq!(est.bandwidth, Some(1.0));
    }

    #[test]
    fn mmd2_biased_matches_double_loop_oracle() {
        for seed in 0..5u64 {
            let x = rand_matrix(9, 4, seed);
            let y = rand_matrix(14, 4, seed + 100);
            let cfg = KernelCfg {
                bandwidth: Some(0.8),
                multipliers: if seed % 2 == 0 {
                    Some(vec![0.5, 1.0, 2.0])
                } else {
                    None
                },
            };
            let (_, bws) = cfg.resolve(x.view(), y.view()).unwrap();
            let got = mmd2_biased(x.view(), y.view(), &cfg).unwrap().value;
            let want = mmd2_biased_oracle(&x, &y, &bws);
            assert!((got - want).abs() <= 1e-12, "seed {seed}: {got} vs {want}");
        }
    }

    #[test]
    fn mmd2_biased_empty_side_is_data_error() {
        let x = Array2::<f64>::zeros((0, 2));
        let y = rand_matrix(3, 2, 1);
        assert!(matches!(
            mmd2_biased(x.view(), y.view(), &KernelCfg::default()),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn mmd2_dim_mismatch_is_shape_error() {
        let x = rand_matrix(3, 2, 1);
        let y = rand_matrix(3, 3, 2);
        assert!(matches!(
            mmd2_biased(x.view(), y.view(), &KernelCfg::default()),
            Err(Error::Shape(_))
        ));
    }

    // ----- unbiased MMD^2 -----

    #[test]
    fn mmd2_unbiased_three_points_matches_oracle() {
        let x = array![[0.0], [1.0]];
        let y = array![[0.5], [2.0], [3.0]];
        let got = mmd2_unbiased(x.view(), y.view(), &KernelCfg::fixed(1.3))
            .unwrap()
            .value;
        let want = mmd2_unbiased_oracle(&x, &y, 1.3);
        assert!((got - want).abs() <= 1e-12);
    }

    #[test]
    fn mmd2_unbiased_same_distribution_is_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let draw = |rng: &mut ChaCha8Rng| {
            Array2::from_shape_fn((500, 2), |_| rng.gen_range(-1.0..1.0))
        };
        let x = draw(&mut rng);
        let y = draw(&mut rng);
        let v = mmd2_unbiased(x.view(), y.view(), &KernelCfg::default())
            .unwrap()
            .value;
        assert!(v.abs() < 0.05, "same-distribution unbiased MMD^2 {v}");
    }

    #[test]
    fn mmd2_unbiased_single_row_is_data_error() {
        let x = array![[0.0]];
        let y = array![[1.0], [2.0]];
        assert!(matches!(
            mmd2_unbiased(x.view(), y.view(), &KernelCfg::fixed(1.0)),
            Err(Error::Data(_))
        ));
    }

    // ----- gradient -----

    #[test]
    fn mmd2_grad_zero_for_identical_samples() {
        let z = rand_matrix(6, 3, 3);
        let (ga, gb) = mmd2_grad_embeddings(z.view(), z.view(), &KernelCfg::fixed(1.0)).unwrap();
        for g in ga.iter().chain(gb.iter()) {
            assert!(g.abs() <= 1e-12);
        }
        // With identical inputs the two sides also mirror each other exactly.
        for (a, b) in ga.iter().zip(gb.iter()) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn mmd2_grad_zero_when_all_points_coincide() {
        let za = Array2::from_elem((4, 2), 0.7);
        let zb = Array2::from_elem((3, 2), 0.7);
        let (ga, gb) = mmd2_grad_embeddings(za.view(), zb.view(), &KernelCfg::fixed(0.5)).unwrap();
        for g in ga.iter().chain(gb.iter()) {
            assert_eq!(*g, 0.0);
        }
    }

    #[test]
    fn mmd2_grad_matches_finite_differences() {
        for (seed, cfg) in [
            (11u64, KernelCfg::fixed(0.9)),
            (
                12u64,
                KernelCfg {
                    bandwidth: Some(0.7),
                    multipliers: Some(vec![0.5, 1.0, 2.0]),
                },
            ),
        ] {
            let za = rand_matrix(4, 2, seed);
            let zb = rand_matrix(5, 2, seed + 50);
            let (ga, gb) = mmd2_grad_embeddings(za.view(), zb.view(), &cfg).unwrap();
            let (_, bws) = cfg.resolve(za.view(), zb.view()).unwrap();
            let eps = 1e-6;
            let check = |z: &Array2<f64>, other: &Array2<f64>, grad: &Array2<f64>, first: bool| {
                for i in 0..z.nrows() {
                    for c in 0..z.ncols() {
                        let mut zp = z.clone();
                        let mut zm = z.clone();
                        zp[[i, c]] += eps;
                        zm[[i, c]] -= eps;
                        let (fp, fm) = if first {
                            (
                                mmd2_biased_with(zp.view(), other.view(), &bws).unwrap(),
                                mmd2_biased_with(zm.view(), other.view(), &bws).unwrap(),
                            )
                        } else {
                            (
                                mmd2_biased_with(other.view(), zp.view(), &bws).unwrap(),
                                mmd2_biased_with(other.view(), zm.view(), &bws).unwrap(),
                            )
                        };
                        let num = (fp - fm) / (2.0 * eps);
                        assert!(
                            (num - grad[[i, c]]).abs() <= 1e-5,
                            "fd {num} vs analytic {}",
                            grad[[i, c]]
                        );
                    }
                }
            };
            check(&za, &zb, &ga, true);
            check(&zb, &za, &gb, false);
        }
    }

    // ----- proxy divergence -----

    #[test]
    fn proxy_separated_samples_score_high() {
        let mut x = rand_matrix(60, 2, 5);
        let mut y = rand_matrix(60, 2, 6);
        x.mapv_inplace(|v| v * 0.3);
        y.mapv_inplace(|v| v * 0.3 + 8.0);
        let est = proxy_domain_divergence(x.view(), y.view(), 0).unwrap();
        assert!(est.value > 1.7, "separated proxy value {}", est.value);
    }

    #[test]
    fn proxy_identical_distribution_scores_low() {
        let x = rand_matrix(100, 2, 9);
        let y = rand_matrix(100, 2, 10);
        let est = proxy_domain_divergence(x.view(), y.view(), 0).unwrap();
        assert!(est.value < 0.3, "identical-distribution proxy value {}", est.value);
    }

    #[test]
    fn proxy_same_sample_scores_near_zero() {
        let x = rand_matrix(80, 3, 21);
        let est = proxy_domain_divergence(x.view(), x.view(), 1).unwrap();
        assert!(est.value < 0.3, "same-sample proxy value {}", est.value);
    }

    #[test]
    fn proxy_is_deterministic_per_seed() {
        let x = rand_matrix(40, 2, 1);
        let y = rand_matrix(40, 2, 2);
        let a = proxy_domain_divergence(x.view(), y.view(), 7).unwrap();
        let b = proxy_domain_divergence(x.view(), y.view(), 7).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn proxy_too_small_is_data_error() {
        let x = rand_matrix(3, 2, 1);
        let y = rand_matrix(10, 2, 2);
        assert!(matches!(
            proxy_domain_divergence(x.view(), y.view(), 0),
            Err(Error::Data(_))
        ));
    }

    // ----- conditional MMD -----

    #[test]
    fn cond_mmd_identical_labeled_sets_is_zero() {
        let x = rand_matrix(10, 2, 30);
        let y: Vec<usize> = (0..10).map(|i| i % 3).collect();
        let est = cond_mmd(x.view(), &y, x.view(), &y, &KernelCfg::fixed(1.0)).unwrap();
        assert!(est.value.abs() <= 1e-12);
        assert_eq!(est.skipped_classes, 0);
    }

    #[test]
    fn cond_mmd_single_shared_class_equals_plain_mmd() {
        let xa = rand_matrix(8, 2, 31);
        let xb = rand_matrix(9, 2, 32);
        let ya = vec![0usize; 8];
        let mut yb = vec![0usize; 9];
        yb[8] = 5; // class 5 exists only on side b and must be skipped
        let xb_shared = {
            let mut m = Array2::zeros((8, 2));
            for r in 0..8 {
                m.row_mut(r).assign(&xb.row(r));
            }
            m
        };
        let cfg = KernelCfg::fixed(1.1);
        let est = cond_mmd(xa.view(), &ya, xb.view(), &yb, &cfg).unwrap();
        let plain = mmd2_biased(xa.view(), xb_shared.view(), &cfg).unwrap();
        assert!((est.value - plain.value).abs() <= 1e-12);
        assert_eq!(est.skipped_classes, 1);
    }

    #[test]
    fn cond_mmd_hand_weighted_two_classes() {
        // Class 0: {0} vs {1} at bandwidth 1 -> 2 - 2 exp(-0.5).
        // Class 1: {10} vs {10} -> 0. Weights: 2/4 and 2/4.
        let xa = array![[0.0], [10.0]];
        let xb = array![[1.0], [10.0]];
        let ya = vec![0usize, 1];
        let yb = vec![0usize, 1];
        let est = cond_mmd(xa.view(), &ya, xb.view(), &yb, &KernelCfg::fixed(1.0)).unwrap();
        let expect = 0.5 * (2.0 - 2.0 * (-0.5f64).exp());
        assert!((est.value - expect).abs() <= 1e-12);
    }

    #[test]
    fn cond_mmd_no_shared_class_is_data_error() {
        let xa = rand_matrix(4, 2, 33);
        let xb = rand_matrix(4, 2, 34);
        let ya = vec![0usize; 4];
        let yb = vec![1usize; 4];
        assert!(matches!(
            cond_mmd(xa.view(), &ya, xb.view(), &yb, &KernelCfg::fixed(1.0)),
            Err(Error::Data(_))
        ));
    }

    // ----- discrete divergences -----

    #[test]
    fn l1_hand_case() {
        let p = [0.5, 0.5, 0.0];
        let q = [0.25, 0.25, 0.5];
        assert!((l1_divergence_discrete(&p, &q).unwrap() - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn l1_identical_and_disjoint() {
        let p = [0.3, 0.7];
        assert_eq!(l1_divergence_discrete(&p, &p).unwrap(), 0.0);
        let a = [1.0, 0.0];
        let b = [0.0, 1.0];
        assert_eq!(l1_divergence_discrete(&a, &b).unwrap(), 2.0);
    }

    #[test]
    fn l1_unnormalized_is_data_error() {
        let p = [0.5, 0.6];
        let q = [0.5, 0.5];
        assert!(matches!(
            l1_divergence_discrete(&p, &q),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn js_hand_case() {
        // p = (1, 0), q = (1/2, 1/2), m = (3/4, 1/4):
        // JS = 1/2 ln(4/3) + 1/4 ln(2/3) + 1/4 ln 2.
        let p = [1.0, 0.0];
        let q = [0.5, 0.5];
        let expect = 0.5 * (4.0f64 / 3.0).ln() + 0.25 * (2.0f64 / 3.0).ln() + 0.25 * 2.0f64.ln();
        let got = js_divergence_discrete(&p, &q).unwrap();
        assert!((got - expect).abs() <= 1e-15);
    }

    #[test]
    fn js_symmetric_and_bounded() {
        let p = [0.1, 0.2, 0.7];
        let q = [0.6, 0.3, 0.1];
        let a = js_divergence_discrete(&p, &q).unwrap();
        let b = js_divergence_discrete(&q, &p).unwrap();
        assert!((a - b).abs() <= 1e-15);
        assert!(a <= 2.0f64.ln() + 1e-15);
        // Maximal at disjoint support.
        let d = js_divergence_discrete(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((d - 2.0f64.ln()).abs() <= 1e-15);
    }

    // ----- property tests -----

    fn dist_strategy(k: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.01f64..1.0, k).prop_map(|v| {
            let s: f64 = v.iter().sum();
            v.into_iter().map(|a| a / s).collect()
        })
    }

    proptest! {
        #[test]
        fn prop_mmd2_biased_symmetric(seed in 0u64..500) {
            let x = rand_matrix(5, 2, seed);
            let y = rand_matrix(7, 2, seed + 1000);
            let cfg = KernelCfg::fixed(1.0);
            let a = mmd2_biased(x.view(), y.view(), &cfg).unwrap().value;
            let b = mmd2_biased(y.view(), x.view(), &cfg).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-12);
        }

        #[test]
        fn prop_mmd2_biased_self_zero(seed in 0u64..500) {
            let x = rand_matrix(6, 3, seed);
            let v = mmd2_biased(x.view(), x.view(), &KernelCfg::default()).unwrap().value;
            prop_assert!(v.abs() <= 1e-12);
        }

        #[test]
        fn prop_median_scaling_homogeneous(seed in 0u64..200, c in 0.1f64..10.0) {
            let x = rand_matrix(6, 2, seed);
            let y = rand_matrix(4, 2, seed + 77);
            let m = median_heuristic(x.view(), y.view()).unwrap();
            let xs = x.mapv(|v| v * c);
            let ys = y.mapv(|v| v * c);
            let ms = median_heuristic(xs.view(), ys.view()).unwrap();
            prop_assert!((ms - c * m).abs() <= 1e-9 * (1.0 + c * m));
        }

        #[test]
        fn prop_l1_symmetric_and_in_range(p in dist_strategy(5), q in dist_strategy(5)) {
            let a = l1_divergence_discrete(&p, &q).unwrap();
            let b = l1_divergence_discrete(&q, &p).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
            prop_assert!((0.0..=2.0 + 1e-12).contains(&a));
        }

        #[test]
        fn prop_js_bounded_by_ln2(p in dist_strategy(4), q in dist_strategy(4)) {
            let v = js_divergence_discrete(&p, &q).unwrap();
            prop_assert!(v >= 0.0);
            prop_assert!(v <= 2.0f64.ln() + 1e-12);
        }
    }
}
