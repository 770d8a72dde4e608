//! The whole pipeline from one config: data, training, sampling, evaluation.
//!
//! cargo run --release --example end_to_end -- [config.toml]
//!
//! Defaults to the small smoke config; the desk configs take minutes to hours.

use corrdiff::commands::{final_samples, generate, sample_trajectories, train_denoiser};
use corrdiff::datastore::{DiffusionMode, RunConfig};
use corrdiff::eval::{evaluate, timestep_stats, EvalBins};
use corrdiff::RandomStream;

fn main() -> corrdiff::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/smoke.toml").into());
    let cfg = RunConfig::load(path.as_ref())?;
    let graph = cfg.graph()?;
    let (data, reference) = generate(&cfg)?;
    let reference = reference.unwrap_or_else(|| data.clone());
    println!(
        "{}: {} records of {} sites",
        cfg.lattice.describe(),
        data.len(),
        data.n_sites()
    );

    for mode in [DiffusionMode::Independent, DiffusionMode::Correlated] {
        let trained = train_denoiser(&cfg, mode, &data)?;
        let trajs = sample_trajectories(&cfg, mode, &trained.params, cfg.diffusion.samples)?;
        let stats = timestep_stats(&trajs, &graph)?;
        let generated = final_samples(&trajs, cfg.seeds.inference, mode.name())?;
        let report = evaluate(
            &generated,
            &reference,
            &graph,
            EvalBins::default(),
            &RandomStream::new(0, 0),
        )?;
        println!("\n{} ({} epochs)", mode.name(), trained.curve.len());
        for s in stats.iter().step_by((stats.len() / 5).max(1)) {
            println!(
                "  t={:>3}  E/N {:+.4}  |m| {:.4}",
                s.t, s.energy.0, s.abs_m.0
            );
        }
        print!("{}", report.summary_text());
    }
    Ok(())
}
