//! Site-wise diffusion: closed-form kernels and a reverse run with a pinned denoiser.

use corrdiff::denoiser::ConstantDenoiser;
use corrdiff::independent::{
    build_cumulative, forward_kernel_prob, forward_sample_independent,
    independent_reverse_trajectory, ForwardMode,
};
use corrdiff::pbit::{eta_to_beta, ScheduleSpec};
use corrdiff::spin::overlap;
use corrdiff::{RandomStream, SpinConfiguration};

fn main() -> corrdiff::Result<()> {
    let spec = ScheduleSpec::EtaLinear {
        t_steps: 20,
        start: 0.01,
        end: 0.5,
    };
    let etas = spec.etas()?;
    let kernel = build_cumulative(&etas);
    println!("t,eta,beta,lambda,P(same spin)");
    for t in 1..=kernel.t_steps() {
        let eta = etas.for_step(t);
        println!(
            "{t},{eta:.4},{:.4},{:.5},{:.5}",
            eta_to_beta(eta)?,
            kernel.lambda(t),
            forward_kernel_prob(&kernel, t, 1, 1)?
        );
    }

    let mut rng = RandomStream::new(3, 0);
    let s0 = SpinConfiguration::new((0..64).map(|i| if i % 3 == 0 { -1 } else { 1 }).collect())?;
    for t in [1, 5, 10, 20] {
        let st = forward_sample_independent(&s0, &kernel, t, &mut rng, ForwardMode::Direct)?;
        println!(
            "forward t={t}: overlap with s_0 {:+.3} (expected {:+.3})",
            overlap(&st, &s0)?,
            kernel.lambda(t)
        );
    }

    // with a denoiser that always predicts s_0, the reverse chain lands on s_0
    let den = ConstantDenoiser::pinned(&s0);
    let traj = independent_reverse_trajectory(&den, &kernel, &mut rng)?;
    for (k, s) in traj.iter().enumerate().step_by(5) {
        println!("reverse s_{k}: overlap with s_0 {:+.3}", overlap(s, &s0)?);
    }
    Ok(())
}
