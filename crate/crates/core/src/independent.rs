//! Site-factorized (zero-coupling) diffusion with closed-form kernels.

use crate::denoiser::{sample_s0_hat, Denoiser};
use crate::error::{Error, Result};
use crate::pbit::{sample_uniform_config, EtaSchedule};
use crate::rng::RandomStream;
use crate::spin::SpinConfiguration;

/// Per-step contractions `a_t = 1 - 2η_t` and their running products `λ_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct CumulativeKernel {
    // a[k] belongs to step k+1
    a: Vec<f64>,
    // lambda[t], lambda[0] = 1
    lambda: Vec<f64>,
}

impl CumulativeKernel {
    /// Builds the kernel from raw flip probabilities in `[0, 0.5]`.
    ///
    /// Unlike [`EtaSchedule`], zero is allowed here (a noiseless step).
    pub fn from_etas(etas: &[f64]) -> Result<Self> {
        if let Some(e) = etas.iter().find(|e| !(**e >= 0.0 && **e <= 0.5)) {
            return Err(Error::EtaOutOfRange(*e));
        }
        let a: Vec<f64> = etas.iter().map(|e| 1.0 - 2.0 * e).collect();
        let mut lambda = Vec::with_capacity(a.len() + 1);
        lambda.push(1.0);
        for &ak in &a {
            let last = *lambda.last().unwrap();
            lambda.push(last * ak);
        }
        Ok(Self { a, lambda })
    }

    pub fn t_steps(&self) -> usize {
        self.a.len()
    }

    /// `a_t` for 1-based step `t`.
    pub fn a(&self, t: usize) -> f64 {
        self.a[t - 1]
    }

    pub fn lambda(&self, t: usize) -> f64 {
        self.lambda[t]
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambda
    }
}

pub fn build_cumulative(schedule: &EtaSchedule) -> CumulativeKernel {
    CumulativeKernel::from_etas(schedule.etas()).expect("validated schedule")
}

/// `P(s_t | s_0) = (1 + λ_t s_t s_0) / 2`.
pub fn forward_kernel_prob(kernel: &CumulativeKernel, t: usize, s_t: i8, s_0: i8) -> Result<f64> {
    if t > kernel.t_steps() {
        return Err(Error::InvalidArgument(format!(
            "t = {t} exceeds {} steps",
            kernel.t_steps()
        )));
    }
    Ok(0.5 * (1.0 + kernel.lambda(t) * (s_t as f64) * (s_0 as f64)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ForwardMode {
    /// `t` successive per-site flips with probabilities `η_1..η_t`.
    PerStep,
    /// One flip per site with probability `(1 - λ_t) / 2`.
    Direct,
}

/// Noises `s_0` to time `t` with independent per-site flips.
pub fn forward_sample_independent(
    s0: &SpinConfiguration,
    kernel: &CumulativeKernel,
    t: usize,
    rng: &mut RandomStream,
    mode: ForwardMode,
) -> Result<SpinConfiguration> {
    if t == 0 || t > kernel.t_steps() {
        return Err(Error::InvalidArgument(format!(
            "t = {t} outside 1..={}",
            kernel.t_steps()
        )));
    }
    let mut out = s0.clone();
    match mode {
        ForwardMode::PerStep => {
            for step in 1..=t {
                let eta = 0.5 * (1.0 - kernel.a(step));
                for i in 0..out.len() {
                    if rng.uniform_open01() < eta {
                        out.flip(i);
                    }
                }
            }
        }
        ForwardMode::Direct => {
            let flip = 0.5 * (1.0 - kernel.lambda(t));
            for i in 0..out.len() {
                if rng.uniform_open01() < flip {
                    out.flip(i);
                }
            }
        }
    }
    Ok(out)
}

/// Closed-form `P(s_{t-1} = +1 | s_t, s_0)` for one site.
pub fn reverse_posterior_independent(a_t: f64, lambda_prev: f64, s_t: i8, s_0: i8) -> Result<f64> {
    let (st, s0) = (s_t as f64, s_0 as f64);
    let denom = 1.0 + a_t * lambda_prev * st * s0;
    if denom <= 0.0 {
        return Err(Error::InconsistentEvidence(format!(
            "s_t = {s_t} is unreachable from s_0 = {s_0} (a_t = {a_t}, lambda = {lambda_prev})"
        )));
    }
    Ok(0.5 * (1.0 + (a_t * st + lambda_prev * s0) / denom))
}

/// One reverse step: predict, sample `ŝ_0`, then sample each site from the
/// closed-form posterior.
pub fn independent_reverse_step<D: Denoiser + ?Sized>(
    s_t: &SpinConfiguration,
    t: usize,
    denoiser: &D,
    kernel: &CumulativeKernel,
    rng: &mut RandomStream,
) -> Result<SpinConfiguration> {
    if denoiser.n_sites() != s_t.len() {
        return Err(Error::SizeMismatch {
            expected: s_t.len(),
            got: denoiser.n_sites(),
        });
    }
    let p = denoiser.predict(s_t)?;
    let s0_hat = sample_s0_hat(&p, rng);
    let a_t = kernel.a(t);
    let lambda_prev = kernel.lambda(t - 1);
    let mut out = s_t.clone();
    for i in 0..s_t.len() {
        // a zero-probability evidence pair keeps the observed spin
        let post = reverse_posterior_independent(a_t, lambda_prev, s_t.get(i), s0_hat.get(i))
            .unwrap_or_else(|_| if s_t.get(i) > 0 { 1.0 } else { 0.0 });
        out.set(i, if rng.uniform_open01() < post { 1 } else { -1 });
    }
    Ok(out)
}

/// Full reverse trajectory from a uniform `s_T`; returns `[s_0, …, s_T]`.
pub fn independent_reverse_trajectory<D: Denoiser + ?Sized>(
    denoiser: &D,
    kernel: &CumulativeKernel,
    rng: &mut RandomStream,
) -> Result<Vec<SpinConfiguration>> {
    let t_max = kernel.t_steps();
    let mut states = vec![sample_uniform_config(denoiser.n_sites(), rng)?];
    for t in (1..=t_max).rev() {
        let next = independent_reverse_step(states.last().unwrap(), t, denoiser, kernel, rng)?;
        states.push(next);
    }
    states.reverse();
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cumulative_examples() {
        let k = CumulativeKernel::from_etas(&[0.5, 0.5, 0.5]).unwrap();
        assert_eq!(k.lambda(0), 1.0);
        assert!((1..=3).all(|t| k.lambda(t) == 0.0 && k.a(t) == 0.0));
        let k = CumulativeKernel::from_etas(&[0.1, 0.1]).unwrap();
        assert!((k.a(1) - 0.8).abs() < 1e-15);
        assert!((k.lambda(2) - 0.64).abs() < 1e-15);
        assert!(CumulativeKernel::from_etas(&[0.6]).is_err());
    }

    #[test]
    fn kernel_prob_examples() {
        let k = CumulativeKernel::from_etas(&[0.1, 0.1]).unwrap();
        assert_eq!(forward_kernel_prob(&k, 0, 1, 1).unwrap(), 1.0);
        // two steps, brute force over flip/keep paths
        let keep = 0.9f64;
        let flip = 0.1f64;
        let brute = keep * keep + flip * flip;
        assert!((forward_kernel_prob(&k, 2, -1, -1).unwrap() - brute).abs() < 1e-15);
        assert!((brute - 0.82).abs() < 1e-15);
        let z = CumulativeKernel::from_etas(&[0.5]).unwrap();
        for (a, b) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
            assert_eq!(forward_kernel_prob(&z, 1, a, b).unwrap(), 0.5);
        }
    }

    fn brute_posterior(a_t: f64, lam: f64, s_t: i8, s_0: i8) -> f64 {
        let step = |to: i8, from: i8| 0.5 * (1.0 + a_t * (to as f64) * (from as f64));
        let prior = |x: i8| 0.5 * (1.0 + lam * (x as f64) * (s_0 as f64));
        let up = step(s_t, 1) * prior(1);
        let down = step(s_t, -1) * prior(-1);
        up / (up + down)
    }

    #[test]
    fn posterior_examples() {
        for a in [0.0, 0.3, 0.9] {
            for st in [-1i8, 1] {
                let p = reverse_posterior_independent(a, 0.0, st, 1).unwrap();
                assert!((p - 0.5 * (1.0 + a * st as f64)).abs() < 1e-15);
            }
        }
        for lam in [0.0, 0.4, 1.0] {
            assert_eq!(reverse_posterior_independent(1.0, lam, 1, 1).unwrap(), 1.0);
        }
        let p = reverse_posterior_independent(0.8, 0.64, 1, 1).unwrap();
        assert!((p - brute_posterior(0.8, 0.64, 1, 1)).abs() < 1e-12);
        assert!(matches!(
            reverse_posterior_independent(1.0, 1.0, -1, 1),
            Err(Error::InconsistentEvidence(_))
        ));
    }

    #[test]
    fn direct_mode_with_zero_noise_is_identity() {
        let k = CumulativeKernel::from_etas(&[0.0, 0.0]).unwrap();
        let s0 = SpinConfiguration::new(vec![1, -1, 1, 1, -1]).unwrap();
        let mut rng = RandomStream::new(0, 0);
        let out = forward_sample_independent(&s0, &k, 2, &mut rng, ForwardMode::Direct).unwrap();
        assert_eq!(out, s0);
    }

    #[test]
    fn rejects_bad_t() {
        let k = CumulativeKernel::from_etas(&[0.1]).unwrap();
        let s0 = SpinConfiguration::all_up(2);
        let mut rng = RandomStream::new(0, 0);
        assert!(forward_sample_independent(&s0, &k, 0, &mut rng, ForwardMode::Direct).is_err());
        assert!(forward_sample_independent(&s0, &k, 2, &mut rng, ForwardMode::PerStep).is_err());
        assert!(forward_kernel_prob(&k, 2, 1, 1).is_err());
    }
}
