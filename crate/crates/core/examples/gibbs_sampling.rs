//! Equilibrium Gibbs sampling of a 2D ferromagnet across temperatures.
//!
//! cargo run --release --example gibbs_sampling -- [L] [sweeps]

use std::time::Instant;

use corrdiff::pbit::{gibbs_sweep_in_place, sample_uniform_config, SweepOrder};
use corrdiff::spin::{build_ferro_2d, energy, magnetization};
use corrdiff::{RandomStream, SpinConfiguration};

fn main() -> corrdiff::Result<()> {
    let mut args = std::env::args().skip(1);
    let l: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(16);
    let sweeps: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(20_000);
    let graph = build_ferro_2d(l, 1.0)?;
    let n = graph.n_sites();
    let order = SweepOrder::identity(n);

    println!("beta,energy_per_spin,abs_m,sweeps_per_sec");
    for beta in [0.2, 0.3, 0.4, 0.4407, 0.5, 0.6] {
        let mut rng = RandomStream::new(7, (beta * 1e4) as u64);
        let mut s = sample_uniform_config(n, &mut rng)?.spins().to_vec();
        for _ in 0..sweeps / 5 {
            gibbs_sweep_in_place(&graph, &mut s, beta, &order, &mut rng);
        }
        let (mut e_sum, mut m_sum) = (0.0, 0.0);
        let start = Instant::now();
        for _ in 0..sweeps {
            gibbs_sweep_in_place(&graph, &mut s, beta, &order, &mut rng);
            let c = SpinConfiguration::new(s.clone())?;
            e_sum += energy(&c, &graph)? / n as f64;
            m_sum += magnetization(&c).abs();
        }
        let rate = sweeps as f64 / start.elapsed().as_secs_f64();
        println!(
            "{beta},{:.4},{:.4},{rate:.0}",
            e_sum / sweeps as f64,
            m_sum / sweeps as f64
        );
    }
    Ok(())
}
