//! Acceptance gate: eight end-to-end criteria, one test each, every test
//! printing a single PASS line with its headline numbers. Bodies take a
//! shared lock so wall-clock budgets are measured on a quiet core.

mod common;

use std::sync::{Mutex, MutexGuard, PoisonError};
use std::time::Instant;

use l2e::baselines::{run_baseline, BaselineKind, BaselineSpec};
use l2e::bounds::{
    chain_divergences, compute_bound, exact_errors, random_instance, verify_chain_inequality,
    BoundParams, DivKind,
};
use l2e::cli::{cmd_run, load_config};
use l2e::divergence::{mmd2_biased, mmd2_grad_embeddings, mmd2_unbiased, KernelCfg};
use l2e::meta::{build_meta_pairs, meta_train, pseudo_label, run_l2e, L2ECfg};
use l2e::numerics::{
    fd_gradient, init_params, loss_and_grad, sgd_step, Arch, Batch, GradVector,
};
use l2e::taskstream::{gen_stream, GeneratorCfg, NoiseSchedule, StreamCfg, TaskRole};
use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{mean, spearman, trend_stream_cfg};

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(PoisonError::into_inner)
}

// ============================================================================
// 1. Gradient suite
// ============================================================================

#[test]
fn criterion_1_gradient_suite() {
    let _lock = serial();
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0001);
    let mut worst = 0.0f64;
    for trial in 0..100u64 {
        let input_dim = rng.gen_range(1..=4);
        let depth = rng.gen_range(0..=2);
        let hidden: Vec<usize> = (0..depth).map(|_| rng.gen_range(2..=6)).collect();
        let arch = Arch::new(input_dim, hidden, rng.gen_range(1..=5), rng.gen_range(2..=4));
        let params = init_params(&arch, trial).unwrap();

        let rows = rng.gen_range(1..=8);
        let feats = Array2::from_shape_fn((rows, input_dim), |_| rng.gen_range(-2.0..2.0));
        let labels: Vec<usize> = (0..rows)
            .map(|_| rng.gen_range(0..arch.num_classes))
            .collect();
        let weights = rng
            .gen_bool(0.5)
            .then(|| (0..rows).map(|_| rng.gen_range(0.1..2.0)).collect());
        let cls = Batch::new(feats, Some(labels), weights).unwrap();

        // Half the trials check plain cross-entropy, half the joint
        // objective with an active divergence term.
        let gamma = if trial % 2 == 0 { 0.0 } else { rng.gen_range(0.05..1.0) };
        let div = (gamma > 0.0).then(|| {
            let (ma, mb) = (rng.gen_range(2..=6), rng.gen_range(2..=6));
            (
                Array2::from_shape_fn((ma, input_dim), |_| rng.gen_range(-2.0..2.0)),
                Array2::from_shape_fn((mb, input_dim), |_| rng.gen_range(-2.0..2.0)),
            )
        });
        let kernel = KernelCfg::fixed(rng.gen_range(0.5..2.0));

        let analytic = loss_and_grad(
            &params,
            &cls,
            div.as_ref().map(|(a, b)| (a.view(), b.view())),
            gamma,
            &kernel,
        )
        .unwrap()
        .1
        .to_flat();
        let numeric = fd_gradient(
            &params,
            |p| {
                loss_and_grad(
                    p,
                    &cls,
                    div.as_ref().map(|(a, b)| (a.view(), b.view())),
                    gamma,
                    &kernel,
                )
                .map(|(loss, _)| loss)
            },
            1e-5,
        )
        .unwrap();

        for (i, (a, n)) in analytic.iter().zip(numeric.iter()).enumerate() {
            let abs = (a - n).abs();
            let rel = abs / n.abs().max(1e-12);
            assert!(
                abs < 1e-7 || rel < 1e-4,
                "trial {trial} coordinate {i}: analytic {a}, finite difference {n}"
            );
            if abs >= 1e-7 {
                worst = worst.max(rel);
            }
        }
    }
    let dt = t0.elapsed();
    println!(
        "PASS criterion 1 (gradient suite): 100 configurations, worst rel err {worst:.2e}, {dt:.2?}"
    );
    assert!(dt.as_secs_f64() < 30.0, "gradient suite took {dt:.2?}, budget 30s");
}

// ============================================================================
// 2. MMD suite
// ============================================================================

fn rbf_mean(a: ArrayView1<f64>, b: ArrayView1<f64>, bws: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum();
    bws.iter().map(|bw| (-d2 / (2.0 * bw * bw)).exp()).sum::<f64>() / bws.len() as f64
}

fn brute_biased(x: ArrayView2<f64>, y: ArrayView2<f64>, bws: &[f64]) -> f64 {
    let (m, n) = (x.nrows() as f64, y.nrows() as f64);
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for i in 0..x.nrows() {
        for j in 0..x.nrows() {
            sxx += rbf_mean(x.row(i), x.row(j), bws);
        }
    }
    for i in 0..y.nrows() {
        for j in 0..y.nrows() {
            syy += rbf_mean(y.row(i), y.row(j), bws);
        }
    }
    for i in 0..x.nrows() {
        for j in 0..y.nrows() {
            sxy += rbf_mean(x.row(i), y.row(j), bws);
        }
    }
    sxx / (m * m) + syy / (n * n) - 2.0 * sxy / (m * n)
}

fn brute_unbiased(x: ArrayView2<f64>, y: ArrayView2<f64>, bws: &[f64]) -> f64 {
    let (m, n) = (x.nrows() as f64, y.nrows() as f64);
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for i in 0..x.nrows() {
        for j in 0..x.nrows() {
            if i != j {
                sxx += rbf_mean(x.row(i), x.row(j), bws);
            }
        }
    }
    for i in 0..y.nrows() {
        for j in 0..y.nrows() {
            if i != j {
                syy += rbf_mean(y.row(i), y.row(j), bws);
            }
        }
    }
    for i in 0..x.nrows() {
        for j in 0..y.nrows() {
            sxy += rbf_mean(x.row(i), y.row(j), bws);
        }
    }
    sxx / (m * (m - 1.0)) + syy / (n * (n - 1.0)) - 2.0 * sxy / (m * n)
}

#[test]
fn criterion_2_mmd_suite() {
    let _lock = serial();
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0002);
    let kernel = KernelCfg::default();

    // Self-distance and symmetry.
    for trial in 0..5 {
        let m = rng.gen_range(3..=30);
        let d = rng.gen_range(1..=4);
        let x = Array2::from_shape_fn((m, d), |_| rng.gen_range(-3.0..3.0));
        let y = Array2::from_shape_fn((m + 2, d), |_| rng.gen_range(-3.0..3.0));
        let self_dist = mmd2_biased(x.view(), x.view(), &kernel).unwrap().value;
        assert!(self_dist.abs() <= 1e-12, "trial {trial}: self-distance {self_dist}");
        let xy = mmd2_biased(x.view(), y.view(), &kernel).unwrap().value;
        let yx = mmd2_biased(y.view(), x.view(), &kernel).unwrap().value;
        assert!((xy - yx).abs() <= 1e-12, "trial {trial}: asymmetry {xy} vs {yx}");
    }

    // Brute-force equivalence on sets of at most 20 points, single and
    // multi-bandwidth.
    let mut worst_brute = 0.0f64;
    for trial in 0..20 {
        let (m, n) = (rng.gen_range(2..=20), rng.gen_range(2..=20));
        let d = rng.gen_range(1..=3);
        let x = Array2::from_shape_fn((m, d), |_| rng.gen_range(-3.0..3.0));
        let y = Array2::from_shape_fn((n, d), |_| rng.gen_range(-3.0..3.0));
        let bw = rng.gen_range(0.5..2.0);
        let cfg = if trial % 2 == 0 {
            KernelCfg::fixed(bw)
        } else {
            KernelCfg {
                bandwidth: Some(bw),
                multipliers: Some(vec![0.5, 1.0, 2.0]),
            }
        };
        let bws: Vec<f64> = match &cfg.multipliers {
            Some(ms) => ms.iter().map(|m| m * bw).collect(),
            None => vec![bw],
        };
        let biased = mmd2_biased(x.view(), y.view(), &cfg).unwrap().value;
        let unbiased = mmd2_unbiased(x.view(), y.view(), &cfg).unwrap().value;
        let err_b = (biased - brute_biased(x.view(), y.view(), &bws)).abs();
        let err_u = (unbiased - brute_unbiased(x.view(), y.view(), &bws)).abs();
        assert!(err_b <= 1e-12, "trial {trial}: biased off by {err_b}");
        assert!(err_u <= 1e-12, "trial {trial}: unbiased off by {err_u}");
        worst_brute = worst_brute.max(err_b).max(err_u);
    }

    // Closed form: two points at distance 1, bandwidth 1.
    let a = ndarray::array![[0.0, 0.0]];
    let b = ndarray::array![[1.0, 0.0]];
    let two_point = mmd2_biased(a.view(), b.view(), &KernelCfg::fixed(1.0))
        .unwrap()
        .value;
    let expected = 2.0 - 2.0 * (-0.5f64).exp();
    assert!(
        (two_point - expected).abs() <= 1e-12,
        "two-point value {two_point} vs {expected}"
    );

    // Embedding-gradient finite-difference check.
    let mut worst_grad = 0.0f64;
    for _ in 0..5 {
        let (m, n, d) = (rng.gen_range(2..=6), rng.gen_range(2..=6), rng.gen_range(1..=3));
        let za = Array2::from_shape_fn((m, d), |_| rng.gen_range(-2.0..2.0));
        let zb = Array2::from_shape_fn((n, d), |_| rng.gen_range(-2.0..2.0));
        let cfg = KernelCfg::fixed(rng.gen_range(0.7..1.5));
        let (ga, gb) = mmd2_grad_embeddings(za.view(), zb.view(), &cfg).unwrap();
        let eps = 1e-6;
        let mut check = |which: usize, i: usize, j: usize, analytic: f64| {
            let mut plus = (za.clone(), zb.clone());
            let mut minus = (za.clone(), zb.clone());
            if which == 0 {
                plus.0[[i, j]] += eps;
                minus.0[[i, j]] -= eps;
            } else {
                plus.1[[i, j]] += eps;
                minus.1[[i, j]] -= eps;
            }
            let fp = mmd2_biased(plus.0.view(), plus.1.view(), &cfg).unwrap().value;
            let fm = mmd2_biased(minus.0.view(), minus.1.view(), &cfg).unwrap().value;
            let numeric = (fp - fm) / (2.0 * eps);
            let err = (analytic - numeric).abs();
            assert!(err <= 1e-5, "embedding grad [{which}][{i},{j}]: {analytic} vs {numeric}");
            worst_grad = worst_grad.max(err);
        };
        for i in 0..m {
            for j in 0..d {
                check(0, i, j, ga[[i, j]]);
            }
        }
        for i in 0..n {
            for j in 0..d {
                check(1, i, j, gb[[i, j]]);
            }
        }
    }

    let dt = t0.elapsed();
    println!(
        "PASS criterion 2 (MMD suite): brute-force err {worst_brute:.2e}, embed-grad err {worst_grad:.2e}, {dt:.2?}"
    );
    assert!(dt.as_secs_f64() < 10.0, "MMD suite took {dt:.2?}, budget 10s");
}

// ============================================================================
// 3. Meta-structure suite
// ============================================================================

fn structure_stream(n: usize, m: usize, seed: u64) -> l2e::taskstream::DynamicStream {
    gen_stream(&StreamCfg {
        generator: GeneratorCfg::TwoMoons { noise: 0.1 },
        m_per_snapshot: m,
        n_steps: n,
        rot_source_deg: -8.0,
        rot_target_deg: 8.0,
        noise_source: NoiseSchedule::ZERO,
        noise_target: NoiseSchedule::ZERO,
        seed,
        shared_base: false,
        resample_per_step: false,
    })
    .unwrap()
}

#[test]
fn criterion_3_meta_structure_suite() {
    let _lock = serial();
    let t0 = Instant::now();

    // Pair cardinality and wiring for every chain length in [2, 10].
    for n in 2..=10usize {
        let stream = structure_stream(n, 16, n as u64);
        let cfg = L2ECfg {
            val_count: 4,
            hidden_dims: vec![4],
            embed_dim: 3,
            ..L2ECfg::default()
        };
        let pairs = build_meta_pairs(&stream, &cfg).unwrap();
        assert_eq!(pairs.len(), 2 * n, "N={n}: expected 2N pairs");
        let training = pairs.iter().filter(|p| p.k() < n as i64).count();
        assert_eq!(training, 2 * n - 1, "N={n}: expected 2N-1 training pairs");
        let ks: Vec<i64> = pairs.iter().map(|p| p.k()).collect();
        let want: Vec<i64> = (1 - n as i64..=n as i64).collect();
        assert_eq!(ks, want, "N={n}: pair indices");
        for pair in &pairs {
            let k = pair.k();
            if k < 0 {
                let j = (-k) as usize;
                assert_eq!(pair.cls_role(), TaskRole::Source);
                assert_eq!(pair.cls_time(), j + 1);
                assert_eq!(pair.div_roles(), (TaskRole::Source, TaskRole::Source));
                assert_eq!(pair.div_times(), (j, j + 1));
                assert!(!pair.pseudo());
            } else if k == 0 {
                assert_eq!(pair.cls_role(), TaskRole::Source);
                assert_eq!(pair.cls_time(), 1);
                assert_eq!(pair.div_roles(), (TaskRole::Source, TaskRole::Target));
                assert_eq!(pair.div_times(), (1, 1));
                assert!(!pair.pseudo());
            } else {
                let j = k as usize;
                assert_eq!(pair.cls_role(), TaskRole::Target);
                assert_eq!(pair.cls_time(), j);
                assert_eq!(pair.div_roles(), (TaskRole::Target, TaskRole::Target));
                assert_eq!(pair.div_times(), (j, j + 1));
                assert!(pair.pseudo());
            }
        }
    }

    // With a zero inner rate, meta-training must collapse to joint
    // training on the val splits: same trajectory over five epochs.
    let stream = structure_stream(3, 24, 77);
    let base = L2ECfg {
        inner_lr: 0.0,
        inner_steps: 3,
        outer_lr: 0.05,
        outer_epochs: 0,
        val_count: 6,
        hidden_dims: vec![6],
        embed_dim: 4,
        seed: 21,
        ..L2ECfg::default()
    };
    let pairs = build_meta_pairs(&stream, &base).unwrap();
    let init = init_params(&base.arch_for(&stream), 33).unwrap();
    let mut theta = init.clone();
    let mut oracle = Vec::new();
    for _ in 0..5 {
        let mut total = GradVector::zeros_like(&theta);
        for pair in pairs.iter().filter(|p| p.k() <= 0) {
            let snapshot = stream.source(pair.cls_time());
            let all_labels = snapshot.labels.as_ref().unwrap();
            let idx = pair.val_indices();
            let mut feats = Array2::zeros((idx.len(), stream.feature_dim));
            let mut labels = Vec::with_capacity(idx.len());
            for (r, &i) in idx.iter().enumerate() {
                feats.row_mut(r).assign(&snapshot.features.row(i));
                labels.push(all_labels[i]);
            }
            let batch = Batch::new(feats, Some(labels), None).unwrap();
            let (da, db) = pair.div_sides();
            let kernel = KernelCfg::fixed(pair.frozen_bandwidth().unwrap());
            let (_, g) = loss_and_grad(
                &theta,
                &batch,
                Some((da.view(), db.view())),
                base.gamma,
                &kernel,
            )
            .unwrap();
            total.add_scaled(&g, 1.0).unwrap();
        }
        theta = sgd_step(&theta, &total, base.outer_lr).unwrap();
        oracle.push(theta.to_flat());
    }
    let mut worst_collapse = 0.0f64;
    for epochs in 1..=5usize {
        let cfg = L2ECfg {
            outer_epochs: epochs,
            ..base.clone()
        };
        let got = meta_train(&pairs, 0, &init, &cfg).unwrap().to_flat();
        let diff = got
            .iter()
            .zip(oracle[epochs - 1].iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(diff <= 1e-9, "epoch {epochs}: trajectory off by {diff}");
        worst_collapse = worst_collapse.max(diff);
    }

    // Pseudo-selection contracts on 100 random instances: exact count,
    // entropy dominance, ties to the lower row index.
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0003);
    for trial in 0..100u64 {
        let m = rng.gen_range(8..=40);
        let p = rng.gen_range(1..=1000) as f64 / 10.0;
        let stream = structure_stream(2, m, 3000 + trial);
        let cfg = L2ECfg {
            p_percent: p,
            val_count: 2,
            inner_steps: 2,
            hidden_dims: vec![4],
            embed_dim: 3,
            seed: trial,
            ..L2ECfg::default()
        };
        let pairs = build_meta_pairs(&stream, &cfg).unwrap();
        let theta = init_params(&cfg.arch_for(&stream), 500 + trial).unwrap();
        let set = pseudo_label(&pairs, 1, &theta, -1, &cfg).unwrap();

        let want_count = (p / 100.0 * m as f64).ceil() as usize;
        assert_eq!(set.selected_count(), want_count, "trial {trial}: count at p={p} m={m}");

        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| set.entropies[i].total_cmp(&set.entropies[j]).then(i.cmp(&j)));
        let mut want = vec![false; m];
        for &i in &order[..want_count] {
            want[i] = true;
        }
        assert_eq!(set.selected, want, "trial {trial}: selection mask");
    }

    let dt = t0.elapsed();
    println!(
        "PASS criterion 3 (meta-structure): wiring N=2..10, zero-rate collapse {worst_collapse:.1e}, 100 selection instances, {dt:.2?}"
    );
    assert!(dt.as_secs_f64() < 30.0, "meta-structure took {dt:.2?}, budget 30s");
}

// ============================================================================
// 4. Bound oracle
// ============================================================================

#[test]
fn criterion_4_bound_oracle() {
    let _lock = serial();
    let t0 = Instant::now();
    let mut min_slack = f64::INFINITY;
    let mut worst_sum = 0.0f64;
    for seed in 0..200u64 {
        let instance = random_instance(seed, 6, 4, 32);
        let check = verify_chain_inequality(&instance).unwrap();
        assert!(
            check.all_hold,
            "seed {seed}: population inequality violated, min slack {}",
            check.min_slack
        );
        min_slack = min_slack.min(check.min_slack);

        // Term-sum consistency of the assembled report, cycling through
        // the divergence notions.
        let kind = DivKind::ALL[seed as usize % DivKind::ALL.len()];
        let chain = chain_divergences(&instance, kind).unwrap();
        let h = &instance.hypotheses[0];
        let (es, et) = exact_errors(&instance, h).unwrap();
        let params = BoundParams {
            m_tilde: 100,
            r_tilde: (seed % 3 == 0).then(|| 0.1 + seed as f64 / 1000.0),
            ..BoundParams::new(kind)
        };
        let report = compute_bound(&es, &et[..instance.n()], &chain, &params).unwrap();
        let sum = report.mean_empirical_error
            + report.drift_term
            + report.rademacher
            + report.concentration;
        let err = (report.total - sum).abs();
        assert!(err <= 1e-12, "seed {seed}: total {} vs term sum {sum}", report.total);
        worst_sum = worst_sum.max(err);
    }
    let dt = t0.elapsed();
    println!(
        "PASS criterion 4 (bound oracle): 200/200 hold, min slack {min_slack:.4}, term-sum err {worst_sum:.1e}, {dt:.2?}"
    );
    assert!(dt.as_secs_f64() < 60.0, "bound oracle took {dt:.2?}, budget 60s");
}

// ============================================================================
// 5. Trend reproduction
// ============================================================================

#[test]
fn criterion_5_trend_reproduction() {
    let _lock = serial();
    let t0 = Instant::now();
    let seeds = [1u64, 2, 3, 4, 5];
    let mut l2e_acc = Vec::new();
    let mut l2e_hacc = Vec::new();
    let mut so_acc = Vec::new();
    let mut so_hacc = Vec::new();
    let mut nht_acc = Vec::new();
    for &seed in &seeds {
        let stream = gen_stream(&trend_stream_cfg(seed)).unwrap();
        let cfg = L2ECfg {
            seed,
            ..L2ECfg::default()
        };
        let l2e = run_l2e(&stream, &cfg).unwrap();
        l2e_acc.push(l2e.acc_newest);
        l2e_hacc.push(l2e.h_acc);
        let so = run_baseline(
            &BaselineSpec {
                kind: BaselineKind::SourceOnly,
                cfg: cfg.clone(),
            },
            &stream,
        )
        .unwrap();
        so_acc.push(so.acc_newest);
        so_hacc.push(so.h_acc);
        let nht = run_baseline(
            &BaselineSpec {
                kind: BaselineKind::L2eNoHistoricalTarget,
                cfg: cfg.clone(),
            },
            &stream,
        )
        .unwrap();
        nht_acc.push(nht.acc_newest);
    }
    let (ml, ms, mn) = (mean(&l2e_acc), mean(&so_acc), mean(&nht_acc));
    let (mlh, msh) = (mean(&l2e_hacc), mean(&so_hacc));
    assert!(
        ml >= ms + 0.05,
        "mean acc: pipeline {ml:.3} vs source-only {ms:.3}, need +0.05 margin"
    );
    assert!(ml > mn, "mean acc: pipeline {ml:.3} vs no-historical-target {mn:.3}, need strict win");
    assert!(mlh >= msh, "mean h_acc: pipeline {mlh:.3} vs source-only {msh:.3}");
    let dt = t0.elapsed();
    println!(
        "PASS criterion 5 (trend): acc {ml:.3} vs source-only {ms:.3} vs no-historical {mn:.3}; h_acc {mlh:.3} vs {msh:.3}; {dt:.2?}"
    );
    assert!(dt.as_secs_f64() < 300.0, "trend took {dt:.2?}, budget 5min");
}

// ============================================================================
// 6. Divergence-evolution reproduction
// ============================================================================

#[test]
fn criterion_6_divergence_evolution() {
    let _lock = serial();
    let t0 = Instant::now();
    let kernel = KernelCfg::default();
    let mut min_rho = f64::INFINITY;
    for seed in 1..=10u64 {
        let stream = gen_stream(&trend_stream_cfg(seed)).unwrap();
        let table = l2e::cli::divergence_table(&stream, &kernel, None).unwrap();
        let n = stream.n();
        for j in 1..=n + 1 - 3 {
            let one = table.rows[j - 1].target_chain;
            let three = mmd2_biased(
                stream.target(j).features.view(),
                stream.target(j + 3).features.view(),
                &kernel,
            )
            .unwrap()
            .value;
            assert!(
                one < three,
                "seed {seed} j={j}: one-step {one:.3e} not below three-step {three:.3e}"
            );
        }
        let st: Vec<f64> = table.rows.iter().map(|r| r.source_target).collect();
        let idx: Vec<f64> = (1..=st.len()).map(|j| j as f64).collect();
        let rho = spearman(&idx, &st);
        assert!(rho > 0.8, "seed {seed}: source-target Spearman {rho:.3}");
        min_rho = min_rho.min(rho);
    }
    let dt = t0.elapsed();
    println!(
        "PASS criterion 6 (divergence evolution): 10 seeds, min Spearman {min_rho:.3}, {dt:.2?}"
    );
    assert!(dt.as_secs_f64() < 60.0, "divergence evolution took {dt:.2?}, budget 60s");
}

// ============================================================================
// 7. Determinism
// ============================================================================

#[test]
fn criterion_7_run_determinism() {
    let _lock = serial();
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    std::fs::write(
        &config_path,
        serde_json::json!({
            "stream": {
                "generator": {"kind": "two_moons", "noise": 0.1},
                "m_per_snapshot": 24,
                "n_steps": 2,
                "rot_source_deg": -8.0,
                "rot_target_deg": 8.0,
                "noise_target": {"per_step": 0.05}
            },
            "l2e": {
                "outer_epochs": 2,
                "inner_steps": 2,
                "val_count": 6,
                "hidden_dims": [8],
                "embed_dim": 4
            },
            "methods": ["l2e", "source_only"],
            "seeds": [1, 2]
        })
        .to_string(),
    )
    .unwrap();

    let mut outputs = Vec::new();
    for sub in ["a", "b"] {
        let mut cfg = load_config(&config_path).unwrap();
        cfg.out_dir = dir.path().join(sub);
        let out = cmd_run(&cfg).unwrap();
        assert_eq!(out.failures, 0);
        outputs.push(out);
    }
    let summary_a = std::fs::read(&outputs[0].summary).unwrap();
    let summary_b = std::fs::read(&outputs[1].summary).unwrap();
    assert_eq!(summary_a, summary_b, "summary.csv differs between reruns");
    let results_a = std::fs::read(&outputs[0].results).unwrap();
    let results_b = std::fs::read(&outputs[1].results).unwrap();
    assert_eq!(results_a, results_b, "results.json differs between reruns");
    println!(
        "PASS criterion 7 (determinism): summary.csv {} bytes and results.json {} bytes byte-identical",
        summary_a.len(),
        results_a.len()
    );
}

// ============================================================================
// 8. No-drift no-harm
// ============================================================================

#[test]
fn criterion_8_no_drift_no_harm() {
    let _lock = serial();
    let t0 = Instant::now();
    let seeds = [1u64, 2, 3, 4, 5];
    let mut l2e_acc = Vec::new();
    let mut so_acc = Vec::new();
    for &seed in &seeds {
        let stream = gen_stream(&StreamCfg {
            generator: GeneratorCfg::TwoMoons { noise: 0.1 },
            m_per_snapshot: 120,
            n_steps: 3,
            rot_source_deg: 0.0,
            rot_target_deg: 0.0,
            noise_source: NoiseSchedule::ZERO,
            noise_target: NoiseSchedule::ZERO,
            seed,
            shared_base: true,
            resample_per_step: false,
        })
        .unwrap();
        let cfg = L2ECfg {
            seed,
            ..L2ECfg::default()
        };
        l2e_acc.push(run_l2e(&stream, &cfg).unwrap().acc_newest);
        so_acc.push(
            run_baseline(
                &BaselineSpec {
                    kind: BaselineKind::SourceOnly,
                    cfg,
                },
                &stream,
            )
            .unwrap()
            .acc_newest,
        );
    }
    let (ml, ms) = (mean(&l2e_acc), mean(&so_acc));
    assert!(
        (ml - ms).abs() <= 0.05,
        "no-drift gap too large: pipeline {ml:.3} vs source-only {ms:.3}"
    );
    let dt = t0.elapsed();
    println!(
        "PASS criterion 8 (no-drift no-harm): pipeline {ml:.3} vs source-only {ms:.3}, gap {:.3}, {dt:.2?}",
        (ml - ms).abs()
    );
}
