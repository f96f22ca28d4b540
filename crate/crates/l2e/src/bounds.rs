//! Generalization-bound calculator for drifting task chains, plus
//! brute-force oracles on finite instances.
//!
//! The bound for the newest target task reads
//!
//! ```text
//! err_newest(h) <= (1/2N) * sum_j (err_s_j(h) + err_t_j(h))
//!                + ((N+2)/2) * (d_tilde + lambda_tilde)
//!                + R_tilde
//!                + (mu/N) * sqrt(ln(1/delta) / (2 * m_tilde))
//! ```
//!
//! where `d_tilde` and `lambda_tilde` are maxima over the 2N chain links
//! (source steps `j -> j+1`, the source-to-target crossing at time 1, and
//! target steps `j -> j+1`). Several divergence kinds instantiate the pair
//! `(d, lambda)` per link; see [`DivKind`].
//!
//! Everything here is exact on [`DiscreteInstance`] values: distributions
//! are vectors over a finite support, labelings and hypotheses are explicit
//! binary functions, so link divergences, lambda values, and per-task
//! errors admit independent recomputation. [`verify_chain_inequality`]
//! checks the deterministic population-level part of the bound (sampling
//! terms are legitimately zero there because every quantity is an exact
//! expectation, not an estimate).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::divergence::{js_divergence_discrete, l1_divergence_discrete};
use crate::error::{Error, Result};

/// How each chain link's divergence `d` and labeling term `lambda` are
/// computed, and which admissibility factors enter the assembled bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivKind {
    /// L1 distance between marginals; `lambda` is the smaller of the two
    /// expected labeling disagreements. Both get the `mu` factor.
    L1,
    /// Jensen-Shannon divergence between marginals, used raw (no `mu`);
    /// `lambda` is `min_h (err_A(h) + err_B(h))` by brute force over `H`.
    FJs,
    /// L1 distance between the joint (symbol, label) distributions, with
    /// the `mu` factor; labeling drift is inside the joint, so `lambda = 0`.
    CDiv,
    /// Discrepancy distance `max_{h,h'} |E_A[h != h'] - E_B[h != h']|` by
    /// brute force over `H`; `lambda` is the three-term optimal-hypothesis
    /// sum. No extra factor.
    Disc,
    /// Kernel mean discrepancy between marginals under the identity kernel
    /// on the finite support (`mmd^2 = ||p - q||_2^2`), scaled by a
    /// user-supplied constant; `lambda` as for [`DivKind::Disc`].
    Mmd,
}

impl DivKind {
    pub const ALL: [DivKind; 5] = [
        DivKind::L1,
        DivKind::FJs,
        DivKind::CDiv,
        DivKind::Disc,
        DivKind::Mmd,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DivKind::L1 => "l1",
            DivKind::FJs => "f_js",
            DivKind::CDiv => "c_div",
            DivKind::Disc => "disc",
            DivKind::Mmd => "mmd",
        }
    }
}

impl std::str::FromStr for DivKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(DivKind::L1),
            "f_js" => Ok(DivKind::FJs),
            "c_div" => Ok(DivKind::CDiv),
            "disc" => Ok(DivKind::Disc),
            "mmd" => Ok(DivKind::Mmd),
            other => Err(Error::config(format!(
                "unknown divergence kind '{other}', expected one of l1, f_js, c_div, disc, mmd"
            ))),
        }
    }
}

/// One task over the finite support `[0, K)`: a distribution and a binary
/// labeling function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteTask {
    pub p: Vec<f64>,
    pub f: Vec<u8>,
}

impl DiscreteTask {
    /// Draws `m` labeled points by inverse-CDF sampling; deterministic per
    /// seed.
    pub fn sample(&self, m: usize, seed: u64) -> (Vec<usize>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = Vec::with_capacity(m);
        let mut ys = Vec::with_capacity(m);
        for _ in 0..m {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut x = self.p.len() - 1;
            for (i, &pi) in self.p.iter().enumerate() {
                acc += pi;
                if u < acc {
                    x = i;
                    break;
                }
            }
            xs.push(x);
            ys.push(self.f[x]);
        }
        (xs, ys)
    }
}

/// A full chain over a finite support: `N` source tasks, `N + 1` target
/// tasks, and an explicit hypothesis set. Small enough that every quantity
/// in the bound can be brute-forced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteInstance {
    pub k: usize,
    pub sources: Vec<DiscreteTask>,
    pub targets: Vec<DiscreteTask>,
    pub hypotheses: Vec<Vec<u8>>,
}

impl DiscreteInstance {
    pub fn n(&self) -> usize {
        self.sources.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::config("support size must be positive"));
        }
        if self.sources.is_empty() {
            return Err(Error::config("instance needs at least one source task"));
        }
        if self.targets.len() != self.sources.len() + 1 {
            return Err(Error::config(format!(
                "{} target tasks for {} sources, expected one more",
                self.targets.len(),
                self.sources.len()
            )));
        }
        if self.hypotheses.is_empty() {
            return Err(Error::config("hypothesis set is empty"));
        }
        let check_task = |t: &DiscreteTask, what: &str| -> Result<()> {
            if t.p.len() != self.k || t.f.len() != self.k {
                return Err(Error::shape(format!(
                    "{what} task has support {} / labeling {}, instance has K = {}",
                    t.p.len(),
                    t.f.len(),
                    self.k
                )));
            }
            if t.p.iter().any(|&v| v < 0.0 || !v.is_finite()) {
                return Err(Error::data(format!("{what} task has a negative probability")));
            }
            let total: f64 = t.p.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::data(format!(
                    "{what} task distribution sums to {total}, expected 1"
                )));
            }
            if t.f.iter().any(|&y| y > 1) {
                return Err(Error::data(format!("{what} task labeling is not binary")));
            }
            Ok(())
        };
        for t in &self.sources {
            check_task(t, "source")?;
        }
        for t in &self.targets {
            check_task(t, "target")?;
        }
        for h in &self.hypotheses {
            if h.len() != self.k {
                return Err(Error::shape(format!(
                    "hypothesis has {} entries, instance has K = {}",
                    h.len(),
                    self.k
                )));
            }
            if h.iter().any(|&y| y > 1) {
                return Err(Error::data("hypothesis is not binary"));
            }
        }
        Ok(())
    }
}

/// Expected 0-1 loss of `h` under one task: `sum_x p(x) * [h(x) != f(x)]`.
pub fn task_error(task: &DiscreteTask, h: &[u8]) -> f64 {
    task.p
        .iter()
        .zip(task.f.iter().zip(h.iter()))
        .map(|(&p, (&f, &hx))| if hx != f { p } else { 0.0 })
        .sum()
}

/// Expected disagreement of two binary functions under `p`.
fn exp_disagreement(p: &[f64], a: &[u8], b: &[u8]) -> f64 {
    p.iter()
        .zip(a.iter().zip(b.iter()))
        .map(|(&p, (&x, &y))| if x != y { p } else { 0.0 })
        .sum()
}

/// Exact 0-1 errors of `h` on every task: `(source errors, target errors)`
/// in chain order.
pub fn exact_errors(instance: &DiscreteInstance, h: &[u8]) -> Result<(Vec<f64>, Vec<f64>)> {
    if h.len() != instance.k {
        return Err(Error::shape(format!(
            "hypothesis has {} entries for support size {}",
            h.len(),
            instance.k
        )));
    }
    let s = instance.sources.iter().map(|t| task_error(t, h)).collect();
    let t = instance.targets.iter().map(|t| task_error(t, h)).collect();
    Ok((s, t))
}

/// Divergence `d` and labeling term `lambda` for one chain link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkDivergence {
    pub d: f64,
    pub lambda: f64,
}

/// All 2N links of the chain walked by the bound's proof path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDivergences {
    /// `d(s_j, s_{j+1})` for `j = 1..N-1`.
    pub source_links: Vec<LinkDivergence>,
    /// `d(s_1, t_1)`.
    pub cross_link: LinkDivergence,
    /// `d(t_j, t_{j+1})` for `j = 1..N`.
    pub target_links: Vec<LinkDivergence>,
}

impl ChainDivergences {
    pub fn links(&self) -> impl Iterator<Item = &LinkDivergence> {
        self.source_links
            .iter()
            .chain(std::iter::once(&self.cross_link))
            .chain(self.target_links.iter())
    }

    /// Max link divergence before any admissibility factor.
    pub fn max_d(&self) -> f64 {
        self.links().map(|l| l.d).fold(0.0, f64::max)
    }

    /// Max link lambda before any admissibility factor.
    pub fn max_lambda(&self) -> f64 {
        self.links().map(|l| l.lambda).fold(0.0, f64::max)
    }
}

fn argmin_error<'h>(hypotheses: &'h [Vec<u8>], task: &DiscreteTask) -> &'h [u8] {
    let mut best = &hypotheses[0];
    let mut best_err = task_error(task, best);
    for h in &hypotheses[1..] {
        let e = task_error(task, h);
        if e < best_err {
            best_err = e;
            best = h;
        }
    }
    best
}

fn joint_distribution(task: &DiscreteTask) -> Vec<f64> {
    // Entry 2x + y is the mass of (symbol x, label y).
    let mut joint = vec![0.0; 2 * task.p.len()];
    for (x, (&p, &y)) in task.p.iter().zip(task.f.iter()).enumerate() {
        joint[2 * x + y as usize] = p;
    }
    joint
}

fn link_divergence(a: &DiscreteTask, b: &DiscreteTask, hypotheses: &[Vec<u8>], kind: DivKind) -> Result<LinkDivergence> {
    let d = match kind {
        DivKind::L1 => l1_divergence_discrete(&a.p, &b.p)?,
        DivKind::FJs => js_divergence_discrete(&a.p, &b.p)?,
        DivKind::CDiv => l1_divergence_discrete(&joint_distribution(a), &joint_distribution(b))?,
        DivKind::Disc => {
            let mut max = 0.0f64;
            for h in hypotheses {
                for h2 in hypotheses {
                    let gap = (exp_disagreement(&a.p, h, h2) - exp_disagreement(&b.p, h, h2)).abs();
                    max = max.max(gap);
                }
            }
            max
        }
        DivKind::Mmd => {
            let sq: f64 = a
                .p
                .iter()
                .zip(b.p.iter())
                .map(|(&x, &y)| (x - y) * (x - y))
                .sum();
            sq.sqrt()
        }
    };
    let lambda = match kind {
        DivKind::L1 => {
            exp_disagreement(&a.p, &a.f, &b.f).min(exp_disagreement(&b.p, &a.f, &b.f))
        }
        DivKind::FJs => {
            let mut best = f64::INFINITY;
            for h in hypotheses {
                best = best.min(task_error(a, h) + task_error(b, h));
            }
            best
        }
        DivKind::CDiv => 0.0,
        DivKind::Disc | DivKind::Mmd => {
            let ha = argmin_error(hypotheses, a);
            let hb = argmin_error(hypotheses, b);
            task_error(a, ha) + task_error(b, hb) + exp_disagreement(&b.p, hb, ha)
        }
    };
    Ok(LinkDivergence { d, lambda })
}

/// Exact divergence and lambda for every chain link under one kind.
pub fn chain_divergences(instance: &DiscreteInstance, kind: DivKind) -> Result<ChainDivergences> {
    instance.validate()?;
    let n = instance.n();
    let h = &instance.hypotheses;
    let mut source_links = Vec::with_capacity(n.saturating_sub(1));
    for j in 0..n - 1 {
        source_links.push(link_divergence(
            &instance.sources[j],
            &instance.sources[j + 1],
            h,
            kind,
        )?);
    }
    let cross_link = link_divergence(&instance.sources[0], &instance.targets[0], h, kind)?;
    let mut target_links = Vec::with_capacity(n);
    for j in 0..n {
        target_links.push(link_divergence(
            &instance.targets[j],
            &instance.targets[j + 1],
            h,
            kind,
        )?);
    }
    Ok(ChainDivergences {
        source_links,
        cross_link,
        target_links,
    })
}

/// Monte-Carlo estimate of the empirical Rademacher complexity of the loss
/// class `{(x, y) -> [h(x) != y] : h in H}` on one labeled sample: mean
/// over seeded sign vectors of `sup_h (2/m) sum_i sigma_i * loss_i`.
pub fn rademacher_mc(
    hypotheses: &[Vec<u8>],
    xs: &[usize],
    ys: &[u8],
    n_draws: usize,
    seed: u64,
) -> Result<f64> {
    if hypotheses.is_empty() {
        return Err(Error::config("hypothesis set is empty"));
    }
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::config(format!(
            "need a nonempty sample with matching labels, got {} points and {} labels",
            xs.len(),
            ys.len()
        )));
    }
    if n_draws == 0 {
        return Err(Error::config("need at least one sign draw"));
    }
    let m = xs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0;
    let mut sigma = vec![1.0f64; m];
    for _ in 0..n_draws {
        for s in sigma.iter_mut() {
            *s = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        }
        let mut sup = f64::NEG_INFINITY;
        for h in hypotheses {
            let mut dot = 0.0;
            for i in 0..m {
                if h[xs[i]] != ys[i] {
                    dot += sigma[i];
                }
            }
            sup = sup.max(2.0 * dot / m as f64);
        }
        acc += sup;
    }
    Ok(acc / n_draws as f64)
}

/// Scalar inputs for assembling the bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub kind: DivKind,
    /// Loss admissibility constant; 1 for 0-1 loss.
    pub mu: f64,
    pub delta: f64,
    /// Total labeled sample count behind the empirical errors.
    pub m_tilde: usize,
    /// Kernel-to-discrepancy scale for [`DivKind::Mmd`]; ignored otherwise.
    pub mmd_scale: f64,
    /// Averaged complexity term; `None` reports the bound without it.
    pub r_tilde: Option<f64>,
}

impl BoundParams {
    pub fn new(kind: DivKind) -> Self {
        BoundParams {
            kind,
            mu: 1.0,
            delta: 0.05,
            m_tilde: 1,
            mmd_scale: 1.0,
            r_tilde: Some(0.0),
        }
    }
}

/// The assembled bound with every term spelled out. `total` is always the
/// exact sum `mean_empirical_error + drift_term + rademacher +
/// concentration`, with `drift_term = ((N+2)/2) * (d_tilde + lambda_tilde)`
/// after the kind's factors are applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: DivKind,
    pub n: usize,
    pub mu: f64,
    pub delta: f64,
    pub m_tilde: usize,
    pub mean_empirical_error: f64,
    /// Max link divergence with the kind's factor applied.
    pub d_tilde: f64,
    /// Max link lambda with the kind's factor applied.
    pub lambda_tilde: f64,
    pub drift_term: f64,
    pub rademacher: f64,
    /// False when no complexity estimate was supplied (term contributes 0).
    pub rademacher_included: bool,
    pub concentration: f64,
    pub total: f64,
    /// Caveats about the kind's instantiation, e.g. the raw Jensen-Shannon
    /// value being used without the transform its proof route implies.
    pub notes: Vec<String>,
}

/// Assembles the bound from per-task empirical errors (`j = 1..N` for both
/// roles) and the chain divergences.
pub fn compute_bound(
    source_errors: &[f64],
    target_errors: &[f64],
    chain: &ChainDivergences,
    params: &BoundParams,
) -> Result<BoundReport> {
    let n = source_errors.len();
    if n == 0 {
        return Err(Error::config("need at least one source task"));
    }
    if target_errors.len() != n {
        return Err(Error::config(format!(
            "{} historical target errors for {} source errors",
            target_errors.len(),
            n
        )));
    }
    if chain.source_links.len() != n - 1 || chain.target_links.len() != n {
        return Err(Error::shape(format!(
            "chain has {} source links and {} target links for N = {n}",
            chain.source_links.len(),
            chain.target_links.len()
        )));
    }
    if !(params.delta > 0.0 && params.delta < 1.0) {
        return Err(Error::config(format!(
            "delta must lie in (0, 1), got {}",
            params.delta
        )));
    }
    if params.m_tilde == 0 {
        return Err(Error::config("m_tilde must be at least 1"));
    }
    if !(params.mu > 0.0) || !(params.mmd_scale > 0.0) {
        return Err(Error::config("mu and mmd_scale must be positive"));
    }
    for &e in source_errors.iter().chain(target_errors.iter()) {
        if !(e >= 0.0) || !e.is_finite() {
            return Err(Error::data(format!("empirical errors must be nonnegative, got {e}")));
        }
    }

    let err_sum: f64 = source_errors.iter().sum::<f64>() + target_errors.iter().sum::<f64>();
    let mean_empirical_error = err_sum / (2.0 * n as f64);

    let (d_factor, lambda_factor) = match params.kind {
        DivKind::L1 => (params.mu, params.mu),
        DivKind::FJs => (1.0, 1.0),
        DivKind::CDiv => (params.mu, 0.0),
        DivKind::Disc => (1.0, 1.0),
        DivKind::Mmd => (params.mmd_scale, 1.0),
    };
    let d_tilde = d_factor * chain.max_d();
    let lambda_tilde = lambda_factor * chain.max_lambda();
    let drift_term = (n as f64 + 2.0) / 2.0 * (d_tilde + lambda_tilde);

    let rademacher = params.r_tilde.unwrap_or(0.0);
    if !(rademacher >= 0.0) {
        return Err(Error::data("complexity term must be nonnegative"));
    }
    let concentration = params.mu / n as f64
        * ((1.0 / params.delta).ln() / (2.0 * params.m_tilde as f64)).sqrt();

    let mut notes = Vec::new();
    if params.kind == DivKind::FJs {
        notes.push("raw Jensen-Shannon link values used without a transform".to_string());
    }
    if params.r_tilde.is_none() {
        notes.push("no complexity estimate supplied; term reported as 0".to_string());
    }

    Ok(BoundReport {
        kind: params.kind,
        n,
        mu: params.mu,
        delta: params.delta,
        m_tilde: params.m_tilde,
        mean_empirical_error,
        d_tilde,
        lambda_tilde,
        drift_term,
        rademacher,
        rademacher_included: params.r_tilde.is_some(),
        concentration,
        total: mean_empirical_error + drift_term + rademacher + concentration,
        notes,
    })
}

/// Outcome of the population-level inequality for one hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainCheckReport {
    pub per_hypothesis: Vec<HypothesisCheck>,
    pub min_slack: f64,
    pub all_hold: bool,
}

/// Checks, for every hypothesis, that the newest-target error is at most
/// the averaged chain errors plus the drift term, using exact L1 link
/// divergences and the labeling-difference lambda. All quantities are
/// population expectations, so the sampling and complexity terms of the
/// full bound are identically zero and do not appear.
pub fn verify_chain_inequality(instance: &DiscreteInstance) -> Result<ChainCheckReport> {
    let chain = chain_divergences(instance, DivKind::L1)?;
    let n = instance.n() as f64;
    let drift = (n + 2.0) / 2.0 * (chain.max_d() + chain.max_lambda());
    let newest = instance.targets.last().expect("validated nonempty");
    let mut per_hypothesis = Vec::with_capacity(instance.hypotheses.len());
    let mut min_slack = f64::INFINITY;
    for h in &instance.hypotheses {
        let (es, et) = exact_errors(instance, h)?;
        let mean_err = (es.iter().sum::<f64>()
            + et[..instance.n()].iter().sum::<f64>())
            / (2.0 * n);
        let lhs = task_error(newest, h);
        let rhs = mean_err + drift;
        let slack = rhs - lhs;
        min_slack = min_slack.min(slack);
        per_hypothesis.push(HypothesisCheck {
            lhs,
            rhs,
            slack,
            holds: slack >= -1e-12,
        });
    }
    Ok(ChainCheckReport {
        min_slack,
        all_hold: per_hypothesis.iter().all(|c| c.holds),
        per_hypothesis,
    })
}

/// Seeded random instance for oracle sweeps: support size in `[2, max_k]`,
/// chain length in `[1, max_n]`, up to `max_h` random hypotheses, simplex-
/// uniform distributions, independent random labelings.
pub fn random_instance(seed: u64, max_k: usize, max_n: usize, max_h: usize) -> DiscreteInstance {
    assert!(max_k >= 2 && max_n >= 1 && max_h >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.gen_range(2..=max_k);
    let n = rng.gen_range(1..=max_n);
    let num_h = rng.gen_range(1..=max_h);
    let task = |rng: &mut ChaCha8Rng| -> DiscreteTask {
        // Exponential draws normalized: uniform on the simplex.
        let raw: Vec<f64> = (0..k).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
        let total: f64 = raw.iter().sum();
        DiscreteTask {
            p: raw.iter().map(|v| v / total).collect(),
            f: (0..k).map(|_| rng.gen_range(0..=1u8)).collect(),
        }
    };
    let sources = (0..n).map(|_| task(&mut rng)).collect();
    let targets = (0..n + 1).map(|_| task(&mut rng)).collect();
    let hypotheses = (0..num_h)
        .map(|_| (0..k).map(|_| rng.gen_range(0..=1u8)).collect())
        .collect();
    DiscreteInstance {
        k,
        sources,
        targets,
        hypotheses,
    }
}

// ============================================================================
// Tests
// ============================================================================
