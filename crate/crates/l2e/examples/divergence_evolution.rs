//! Tracks how domain divergence evolves along a drifting stream: the three
//! chains of the squared-MMD table, the gap between one-step and three-step
//! target hops, and what a trained feature extractor does to the picture.
//!
//! ```text
//! cargo run --release --example divergence_evolution
//! ```

use l2e::cli::divergence_table;
use l2e::divergence::mmd2_biased;
use l2e::meta::{run_l2e, L2ECfg};
use l2e::taskstream::{gen_stream, GeneratorCfg, NoiseSchedule, StreamCfg};

fn main() -> l2e::Result<()> {
    let stream_cfg = StreamCfg {
        generator: GeneratorCfg::TwoMoons { noise: 0.1 },
        m_per_snapshot: 150,
        n_steps: 5,
        rot_source_deg: -8.0,
        rot_target_deg: 8.0,
        noise_source: NoiseSchedule::ZERO,
        noise_target: NoiseSchedule {
            base: 0.0,
            per_step: 0.05,
        },
        seed: 5,
        shared_base: false,
        resample_per_step: false,
    };
    let stream = gen_stream(&stream_cfg)?;
    let cfg = L2ECfg {
        seed: 5,
        ..L2ECfg::default()
    };

    let raw = divergence_table(&stream, &cfg.kernel, None)?;
    println!("squared MMD on raw features:");
    println!(
        "{:>3}  {:>14}  {:>14}  {:>14}",
        "j", "s_j -> s_j+1", "s_j -> t_j", "t_j -> t_j+1"
    );
    for row in &raw.rows {
        println!(
            "{:>3}  {:>14}  {:>14.6e}  {:>14.6e}",
            row.j,
            row.source_chain
                .map(|v| format!("{v:.6e}"))
                .unwrap_or_else(|| "-".into()),
            row.source_target,
            row.target_chain,
        );
    }

    println!("\none-step vs. three-step hops along the target chain:");
    println!("{:>3}  {:>14}  {:>14}", "j", "t_j -> t_j+1", "t_j -> t_j+3");
    for j in 1..=stream.n() - 2 {
        let one = mmd2_biased(
            stream.target(j).features.view(),
            stream.target(j + 1).features.view(),
            &cfg.kernel,
        )?
        .value;
        let three = mmd2_biased(
            stream.target(j).features.view(),
            stream.target(j + 3).features.view(),
            &cfg.kernel,
        )?
        .value;
        println!("{j:>3}  {one:>14.6e}  {three:>14.6e}");
    }
    println!("consecutive snapshots stay closer than distant ones, which is");
    println!("what makes chaining adaptations across neighbors worthwhile.");

    let result = run_l2e(&stream, &cfg)?;
    let learned = divergence_table(&stream, &cfg.kernel, Some(&result.theta_final))?;
    println!("\nsquared MMD in the trained extractor's embedding space:");
    println!(
        "{:>3}  {:>14}  {:>14}  {:>14}",
        "j", "s_j -> s_j+1", "s_j -> t_j", "t_j -> t_j+1"
    );
    for row in &learned.rows {
        println!(
            "{:>3}  {:>14}  {:>14.6e}  {:>14.6e}",
            row.j,
            row.source_chain_embed
                .map(|v| format!("{v:.6e}"))
                .unwrap_or_else(|| "-".into()),
            row.source_target_embed.unwrap(),
            row.target_chain_embed.unwrap(),
        );
    }
    Ok(())
}
