//! Checks the analytic gradient of the joint objective against central
//! finite differences across random architectures, batch shapes, and
//! divergence settings.
//!
//! ```text
//! cargo run --release --example gradient_check
//! ```

use l2e::divergence::KernelCfg;
use l2e::numerics::{fd_gradient, init_params, loss_and_grad, Arch, Batch};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> l2e::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let trials = 25;
    let mut worst = 0.0f64;

    println!("{:>5}  {:>24}  {:>6}  {:>5}  {:>12}", "trial", "arch", "rows", "gamma", "rel err");
    for trial in 0..trials {
        let input_dim = rng.gen_range(1..=4);
        let depth = rng.gen_range(0..=2);
        let hidden: Vec<usize> = (0..depth).map(|_| rng.gen_range(2..=6)).collect();
        let embed_dim = rng.gen_range(1..=5);
        let num_classes = rng.gen_range(2..=4);
        let arch = Arch::new(input_dim, hidden.clone(), embed_dim, num_classes);
        let params = init_params(&arch, 1000 + trial)?;

        let rows = rng.gen_range(1..=8);
        let features = Array2::from_shape_fn((rows, input_dim), |_| rng.gen_range(-2.0..2.0));
        let labels: Vec<usize> = (0..rows).map(|_| rng.gen_range(0..num_classes)).collect();
        let weights: Option<Vec<f64>> = if rng.gen_bool(0.5) {
            Some((0..rows).map(|_| rng.gen_range(0.1..2.0)).collect())
        } else {
            None
        };
        let cls = Batch::new(features, Some(labels), weights)?;

        let gamma = [0.0, 0.1, 1.0][rng.gen_range(0..3)];
        let div = if gamma > 0.0 {
            let (ma, mb) = (rng.gen_range(2..=6), rng.gen_range(2..=6));
            Some((
                Array2::from_shape_fn((ma, input_dim), |_| rng.gen_range(-2.0..2.0)),
                Array2::from_shape_fn((mb, input_dim), |_| rng.gen_range(-2.0..2.0)),
            ))
        } else {
            None
        };
        let kernel = KernelCfg::fixed(rng.gen_range(0.5..2.0));

        let analytic = {
            let (_, g) = loss_and_grad(
                &params,
                &cls,
                div.as_ref().map(|(a, b)| (a.view(), b.view())),
                gamma,
                &kernel,
            )?;
            g.to_flat()
        };
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
        )?;

        let rel = analytic
            .iter()
            .zip(numeric.iter())
            .map(|(a, n)| (a - n).abs() / n.abs().max(1.0))
            .fold(0.0f64, f64::max);
        worst = worst.max(rel);

        let arch_str = format!("{}-{:?}-{}-{}", input_dim, hidden, embed_dim, num_classes);
        println!("{trial:>5}  {arch_str:>24}  {rows:>6}  {gamma:>5}  {rel:>12.3e}");
    }

    println!("\nworst relative error over {trials} trials: {worst:.3e}");
    if worst < 1e-4 {
        println!("PASS: analytic gradient matches finite differences");
        Ok(())
    } else {
        println!("FAIL: gradient mismatch");
        std::process::exit(1);
    }
}
