//! Scratch harness for hyperparameter sweeps; not part of the crate's
//! example set (deleted before release).

use l2e::baselines::{run_baseline, BaselineKind, BaselineSpec};
use l2e::meta::{run_l2e, L2ECfg};
use l2e::taskstream::{gen_stream, GeneratorCfg, NoiseSchedule, StreamCfg};

fn main() -> l2e::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let get = |i: usize, default: f64| -> f64 {
        args.get(i).and_then(|s| s.parse().ok()).unwrap_or(default)
    };
    let seed = get(1, 1.0) as u64;
    let n = get(2, 5.0) as usize;
    let m = get(3, 200.0) as usize;
    let rot_t = get(4, 8.0);
    let noise_step = get(5, 0.05);
    let shared = get(6, 0.0) as usize == 1;
    let outer_epochs = get(7, 25.0) as usize;
    let inner_steps = get(8, 4.0) as usize;
    let inner_lr = get(9, 0.5);
    let outer_lr = get(10, 0.1);
    let hidden = get(11, 32.0) as usize;
    let val_count = get(12, 50.0) as usize;
    let pseudo_weight = get(13, 1.0);
    let embed = get(14, 8.0) as usize;
    let hidden2 = get(15, 0.0) as usize;

    let stream_cfg = StreamCfg {
        generator: GeneratorCfg::TwoMoons { noise: 0.1 },
        m_per_snapshot: m,
        n_steps: n,
        rot_source_deg: -rot_t,
        rot_target_deg: rot_t,
        noise_source: NoiseSchedule::ZERO,
        noise_target: NoiseSchedule {
            base: 0.0,
            per_step: noise_step,
        },
        seed,
        shared_base: shared,
        resample_per_step: false,
    };
    let stream = gen_stream(&stream_cfg)?;
    let cfg = L2ECfg {
        seed,
        outer_lr,
        inner_lr,
        inner_steps,
        outer_epochs,
        hidden_dims: if hidden2 == 0 { vec![hidden] } else { vec![hidden, hidden2] },
        embed_dim: embed,
        val_count,
        pseudo_weight,
        ..L2ECfg::default()
    };

    let t0 = std::time::Instant::now();
    let r = run_l2e(&stream, &cfg)?;
    let l2e_secs = t0.elapsed().as_secs_f64();
    let so = run_baseline(
        &BaselineSpec {
            kind: BaselineKind::SourceOnly,
            cfg: cfg.clone(),
        },
        &stream,
    )?;
    let nht = run_baseline(
        &BaselineSpec {
            kind: BaselineKind::L2eNoHistoricalTarget,
            cfg: cfg.clone(),
        },
        &stream,
    )?;

    let full: Vec<String> = r
        .pseudo_sets
        .iter()
        .map(|set| {
            let eval = stream.target(set.time_index).eval_labels.as_ref().unwrap();
            let agree = set
                .labels
                .iter()
                .zip(eval.iter())
                .filter(|(a, b)| a == b)
                .count();
            format!("{:.3}", agree as f64 / eval.len() as f64)
        })
        .collect();
    let unad = r.historical.unadapted.iter().sum::<f64>() / r.historical.unadapted.len() as f64;
    println!(
        "s={seed} n={n} m={m} rot={rot_t} oe={outer_epochs} is={inner_steps} ilr={inner_lr} olr={outer_lr} pw={pseudo_weight} h={hidden}/{hidden2} e={embed} vc={val_count} | l2e {:.3}/{:.3} so {:.3}/{:.3} nht {:.3} | margin {:+.3} dh {:+.3} | unad {unad:.3} full=[{}] | {l2e_secs:.1}s",
        r.acc_newest,
        r.h_acc,
        so.acc_newest,
        so.h_acc,
        nht.acc_newest,
        r.acc_newest - so.acc_newest,
        r.h_acc - so.h_acc,
        full.join(" ")
    );
    Ok(())
}
