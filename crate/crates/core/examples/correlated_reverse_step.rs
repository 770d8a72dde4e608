//! One correlated reverse step on a small lattice: the candidate ensemble and
//! how its effective sample size grows with the number of chains.

use corrdiff::correlated::{forward_noise, gibbs_cost, reverse_step};
use corrdiff::denoiser::ConstantDenoiser;
use corrdiff::pbit::{ScheduleSpec, SweepOrder};
use corrdiff::spin::{build_ferro_2d, overlap};
use corrdiff::{RandomStream, SpinConfiguration};

fn main() -> corrdiff::Result<()> {
    let graph = build_ferro_2d(3, 1.0)?;
    let n = graph.n_sites();
    let order = SweepOrder::identity(n);
    let schedule = ScheduleSpec::BetaLinear {
        t_steps: 6,
        start: 0.6,
        end: 0.05,
    }
    .betas()?;
    let s0 = SpinConfiguration::all_up(n);
    let mut rng = RandomStream::new(5, 0);
    let fwd = forward_noise(&graph, &s0, &schedule, &order, &mut rng)?;
    let t = 4;
    let st = &fwd.states[t];
    println!("s_{t} overlap with s_0: {:+.3}", overlap(st, &s0)?);

    let den = ConstantDenoiser::pinned(&s0);
    println!("n_chains,distinct_candidates,ess,overlap(s_t-1, s_0)");
    for n_chains in [1, 4, 16, 64, 256] {
        let stream = RandomStream::new(6, n_chains as u64);
        let (prev, ens) = reverse_step(st, t, &den, &graph, &schedule, &order, n_chains, &stream)?;
        println!(
            "{n_chains},{},{:.2},{:+.3}",
            ens.len(),
            ens.effective_sample_size(),
            overlap(&prev, &s0)?
        );
    }
    println!(
        "sweeps per generated sample at T=100, 10 chains: {}",
        gibbs_cost(100, 10)
    );
    Ok(())
}
