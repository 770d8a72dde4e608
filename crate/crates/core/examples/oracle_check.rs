//! Exact transition matrices for a tiny system, checked against the sampler.
//!
//! cargo run --release --example oracle_check

use corrdiff::checks::{run_oracle_check, OracleCheckConfig};
use corrdiff::oracle::{boltzmann, exact_reverse_posterior, sweep_matrix};
use corrdiff::pbit::{BetaSchedule, SweepOrder};
use corrdiff::{CouplingGraph, SpinConfiguration};

fn main() -> corrdiff::Result<()> {
    let graph = CouplingGraph::new(2, vec![(0, 1, 1.0)], vec![0.0, 0.0])?;
    let order = SweepOrder::identity(2);
    let w = sweep_matrix(&graph, 1.0, &order)?;
    println!("one-sweep matrix at beta = 1 (columns: source state, rows: next state)");
    print!("{}", w.to_text());

    let pi = boltzmann(&graph, 1.0)?;
    let moved = w.apply(&pi);
    println!("Boltzmann    {:?}", pi.probs());
    println!("after sweep  {:?}", moved.probs());

    let schedule = BetaSchedule::new(vec![1.0, 0.8, 0.6])?;
    let s0 = SpinConfiguration::new(vec![1, -1])?;
    let s3 = SpinConfiguration::new(vec![1, 1])?;
    let post = exact_reverse_posterior(&graph, &s3, &s0, 3, &schedule, &order)?;
    println!("P(s_2 | s_3 = ++, s_0 = +-) = {:?}", post.probs());

    for cfg in [
        OracleCheckConfig::default(),
        OracleCheckConfig {
            n_sites: 3,
            beta: 0.7,
            ..Default::default()
        },
        OracleCheckConfig {
            permute_order: true,
            ..Default::default()
        },
    ] {
        let report = run_oracle_check(&cfg)?;
        println!(
            "\nn = {}, beta = {}, permuted = {}",
            cfg.n_sites, cfg.beta, cfg.permute_order
        );
        print!("{}", report.to_csv());
    }
    Ok(())
}
