//! Train the conditional estimator on forward-noised ferromagnet samples.
//!
//! cargo run --release --example denoiser_training -- [L] [records]

use corrdiff::datastore::{
    build_training_set, generate_equilibrium_dataset, DiffusionMode, Protocol,
};
use corrdiff::denoiser::{train, TrainingConfig};
use corrdiff::pbit::ScheduleSpec;
use corrdiff::spin::build_ferro_2d;
use corrdiff::RandomStream;

fn main() -> corrdiff::Result<()> {
    let mut args = std::env::args().skip(1);
    let l: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(6);
    let records: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(300);
    let graph = build_ferro_2d(l, 1.0)?;
    let n = graph.n_sites();
    let beta = 0.4407;
    let data = generate_equilibrium_dataset(
        &graph,
        beta,
        &Protocol::desk_randomize(n),
        records,
        &RandomStream::new(1, 1),
        "example",
    )?;
    let schedule = ScheduleSpec::BetaLinear {
        t_steps: 10,
        start: beta,
        end: 0.01,
    }
    .betas()?;
    let pairs = build_training_set(
        &data,
        &graph,
        &schedule,
        DiffusionMode::Correlated,
        &RandomStream::new(1, 2),
    )?;
    println!(
        "{} records -> {} training pairs, {} sites",
        data.len(),
        pairs.len(),
        n
    );

    let config = TrainingConfig {
        learning_rate: 1e-3,
        max_epochs: 30,
        early_stop_patience: 5,
        ..Default::default()
    };
    let outcome = train(&pairs, 64, &config, &RandomStream::new(1, 3))?;
    print!("{}", outcome.curve_csv());
    println!(
        "best epoch {} (uninformed loss would be {:.2})",
        outcome.best_epoch,
        n as f64 * std::f64::consts::LN_2
    );
    Ok(())
}
