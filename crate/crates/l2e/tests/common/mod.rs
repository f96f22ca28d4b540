//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use l2e::taskstream::{GeneratorCfg, NoiseSchedule, StreamCfg};

/// The rotating two-moons recipe used by the trend and divergence checks:
/// sources rotate -8 degrees per step, targets +8, with target noise
/// growing by 0.05 per step.
pub fn trend_stream_cfg(seed: u64) -> StreamCfg {
    StreamCfg {
        generator: GeneratorCfg::TwoMoons { noise: 0.1 },
        m_per_snapshot: 200,
        n_steps: 5,
        rot_source_deg: -8.0,
        rot_target_deg: 8.0,
        noise_source: NoiseSchedule::ZERO,
        noise_target: NoiseSchedule {
            base: 0.0,
            per_step: 0.05,
        },
        seed,
        shared_base: false,
        resample_per_step: false,
    }
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    pearson(&ra, &rb)
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Tied block [i, j] shares the mean of its 1-based rank range.
        let rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    cov / (va.sqrt() * vb.sqrt())
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
