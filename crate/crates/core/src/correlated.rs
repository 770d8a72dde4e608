//! Structure-aware forward noising and the importance-weighted reverse step.
//!
//! Forward: `s_t` is one ordered Gibbs sweep of `s_{t-1}` at `β_{t-1}`.
//!
//! Reverse step at time `t`: predict `p = f(s_t)`, draw one `ŝ_0`, run
//! `n_chains` independent chains of `t-1` sweeps from `ŝ_0` (chain sweep `τ`
//! uses `β_{τ-1}`), weight each endpoint by the one-sweep likelihood of
//! reaching `s_t` at `β_{t-1}`, merge duplicates and draw `s_{t-1}`.
//!
//! Randomness is keyed rather than threaded: chain `c` at step `t` uses the
//! substream `[t, c]` of the caller's stream, so results do not depend on how
//! many threads run the chains.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::denoiser::{sample_s0_hat, Denoiser};
use crate::error::{Error, Result};
use crate::pbit::{
    gibbs_sweep_in_place, log_prob_spin, pbit_update, sample_uniform_config,
    sweep_log_likelihood_with, BetaSchedule, SweepOrder,
};
use crate::rng::RandomStream;
use crate::spin::{energy, magnetization, CouplingGraph, SpinConfiguration};

const TAG_S0_HAT: u64 = u64::MAX;
const TAG_SELECT: u64 = u64::MAX - 1;
const TAG_INIT: u64 = u64::MAX - 2;

/// The Gibbs dynamics used for one forward transition.
#[derive(Clone, Copy, Debug)]
pub enum ForwardKernel<'a> {
    /// Full local field of a coupling graph.
    Coupled(&'a CouplingGraph),
    /// Zero couplings with bias `h = s_{t-1}`: site-independent flips with
    /// probability `(1 - tanh β) / 2`.
    SelfBias,
}

impl ForwardKernel<'_> {
    pub fn sweep_in_place(
        &self,
        spins: &mut [i8],
        beta: f64,
        order: &SweepOrder,
        rng: &mut RandomStream,
    ) {
        match self {
            ForwardKernel::Coupled(g) => gibbs_sweep_in_place(g, spins, beta, order, rng),
            ForwardKernel::SelfBias => {
                for &i in order.sites() {
                    let field = spins[i] as f64;
                    spins[i] = pbit_update(field, beta, rng.uniform_pm1());
                }
            }
        }
    }

    /// `ln P(next | prev)` for one sweep; `work` is scratch of length N.
    fn log_likelihood(
        &self,
        work: &mut Vec<i8>,
        prev: &[i8],
        next: &[i8],
        beta: f64,
        order: &SweepOrder,
    ) -> f64 {
        match self {
            ForwardKernel::Coupled(g) => {
                work.clear();
                work.extend_from_slice(prev);
                sweep_log_likelihood_with(g, work, next, beta, order)
            }
            ForwardKernel::SelfBias => prev
                .iter()
                .zip(next)
                .map(|(&p, &n)| log_prob_spin(n, p as f64, beta))
                .sum(),
        }
    }

    fn check(&self, n: usize, order: &SweepOrder) -> Result<()> {
        if let ForwardKernel::Coupled(g) = self {
            if g.n_sites() != n {
                return Err(Error::SizeMismatch {
                    expected: g.n_sites(),
                    got: n,
                });
            }
        }
        if order.len() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                got: order.len(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Reverse,
}

/// States `s_0 … s_T`, indexed by diffusion time.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionTrajectory {
    pub states: Vec<SpinConfiguration>,
    pub direction: Direction,
    /// Effective sample size of the candidate weights used to produce
    /// `s_{t-1}`, indexed by `t - 1`; empty for forward trajectories.
    pub ess: Vec<f64>,
}

impl DiffusionTrajectory {
    pub fn t_steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn final_sample(&self) -> &SpinConfiguration {
        match self.direction {
            Direction::Forward => self.states.last().unwrap(),
            Direction::Reverse => &self.states[0],
        }
    }
}

/// Forward noising by one Gibbs sweep per step.
pub fn forward_noise(
    graph: &CouplingGraph,
    s0: &SpinConfiguration,
    schedule: &BetaSchedule,
    order: &SweepOrder,
    rng: &mut RandomStream,
) -> Result<DiffusionTrajectory> {
    forward_noise_with(ForwardKernel::Coupled(graph), s0, schedule, order, rng)
}

pub fn forward_noise_with(
    kernel: ForwardKernel<'_>,
    s0: &SpinConfiguration,
    schedule: &BetaSchedule,
    order: &SweepOrder,
    rng: &mut RandomStream,
) -> Result<DiffusionTrajectory> {
    kernel.check(s0.len(), order)?;
    let mut states = Vec::with_capacity(schedule.len() + 1);
    states.push(s0.clone());
    let mut spins: Vec<i8> = s0.spins().to_vec();
    for &beta in schedule.betas() {
        kernel.sweep_in_place(&mut spins, beta, order, rng);
        states.push(SpinConfiguration::new(spins.clone()).expect("±1"));
    }
    Ok(DiffusionTrajectory {
        states,
        direction: Direction::Forward,
        ess: Vec::new(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub config: SpinConfiguration,
    /// Log-sum-exp of the log-likelihoods of every chain that ended here.
    pub log_weight: f64,
    pub chains: Vec<usize>,
}

/// Distinct chain endpoints of one reverse step with merged weights.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateEnsemble {
    pub candidates: Vec<Candidate>,
    chain_log_weights: Vec<f64>,
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl CandidateEnsemble {
    /// Merges chain endpoints; candidates keep first-appearance order.
    pub fn aggregate(endpoints: Vec<(SpinConfiguration, f64)>) -> Self {
        let chain_log_weights: Vec<f64> = endpoints.iter().map(|(_, w)| *w).collect();
        let mut slot: HashMap<Vec<u8>, usize> = HashMap::new();
        let mut members: Vec<(SpinConfiguration, Vec<f64>, Vec<usize>)> = Vec::new();
        for (chain, (config, lw)) in endpoints.into_iter().enumerate() {
            match slot.get(config.as_bytes()) {
                Some(&k) => {
                    members[k].1.push(lw);
                    members[k].2.push(chain);
                }
                None => {
                    slot.insert(config.as_bytes().to_vec(), members.len());
                    members.push((config, vec![lw], vec![chain]));
                }
            }
        }
        let candidates = members
            .into_iter()
            .map(|(config, lws, chains)| Candidate {
                config,
                log_weight: log_sum_exp(&lws),
                chains,
            })
            .collect();
        Self {
            candidates,
            chain_log_weights,
        }
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn n_chains(&self) -> usize {
        self.chain_log_weights.len()
    }

    pub fn normalized_weights(&self) -> Vec<f64> {
        let lws: Vec<f64> = self.candidates.iter().map(|c| c.log_weight).collect();
        let z = log_sum_exp(&lws);
        lws.iter().map(|w| (w - z).exp()).collect()
    }

    /// Kish effective sample size of the per-chain weights.
    pub fn effective_sample_size(&self) -> f64 {
        let m = self
            .chain_log_weights
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = self
            .chain_log_weights
            .iter()
            .map(|x| (x - m).exp())
            .collect();
        let s: f64 = w.iter().sum();
        let s2: f64 = w.iter().map(|x| x * x).sum();
        s * s / s2
    }

    /// Draws a candidate index with probability proportional to its weight.
    pub fn sample_index(&self, rng: &mut RandomStream) -> usize {
        let w = self.normalized_weights();
        let u = rng.uniform_open01();
        let mut acc = 0.0;
        for (k, wk) in w.iter().enumerate() {
            acc += wk;
            if u < acc {
                return k;
            }
        }
        // rounding left u above the running sum
        w.iter().rposition(|&x| x > 0.0).unwrap_or(0)
    }
}

/// One reverse step on a coupling graph.
pub fn reverse_step<D: Denoiser + ?Sized>(
    s_t: &SpinConfiguration,
    t: usize,
    denoiser: &D,
    graph: &CouplingGraph,
    schedule: &BetaSchedule,
    order: &SweepOrder,
    n_chains: usize,
    rng: &RandomStream,
) -> Result<(SpinConfiguration, CandidateEnsemble)> {
    reverse_step_with(
        s_t,
        t,
        denoiser,
        ForwardKernel::Coupled(graph),
        schedule,
        order,
        n_chains,
        rng,
    )
}

/// Chain endpoints and their log-likelihoods for a fixed `ŝ_0`.
pub fn candidate_chains(
    s_t: &SpinConfiguration,
    t: usize,
    s0_hat: &SpinConfiguration,
    kernel: ForwardKernel<'_>,
    schedule: &BetaSchedule,
    order: &SweepOrder,
    n_chains: usize,
    rng: &RandomStream,
) -> Vec<(SpinConfiguration, f64)> {
    let beta_like = schedule.for_step(t);
    let run_chain = |c: usize| {
        let mut chain_rng = rng.substream(&[t as u64, c as u64]);
        let mut x: Vec<i8> = s0_hat.spins().to_vec();
        for &beta in &schedule.betas()[..t - 1] {
            kernel.sweep_in_place(&mut x, beta, order, &mut chain_rng);
        }
        let mut work = Vec::with_capacity(x.len());
        let lw = kernel.log_likelihood(&mut work, &x, s_t.spins(), beta_like, order);
        (SpinConfiguration::new(x).expect("±1"), lw)
    };
    // short inner loops are cheaper serially
    if t > 2 && n_chains > 1 {
        (0..n_chains).into_par_iter().map(run_chain).collect()
    } else {
        (0..n_chains).map(run_chain).collect()
    }
}

/// One reverse step with an arbitrary forward kernel.
pub fn reverse_step_with<D: Denoiser + ?Sized>(
    s_t: &SpinConfiguration,
    t: usize,
    denoiser: &D,
    kernel: ForwardKernel<'_>,
    schedule: &BetaSchedule,
    order: &SweepOrder,
    n_chains: usize,
    rng: &RandomStream,
) -> Result<(SpinConfiguration, CandidateEnsemble)> {
    if t == 0 || t > schedule.len() {
        return Err(Error::InvalidArgument(format!(
            "t = {t} outside 1..={}",
            schedule.len()
        )));
    }
    if n_chains == 0 {
        return Err(Error::InvalidArgument("n_chains must be >= 1".into()));
    }
    kernel.check(s_t.len(), order)?;
    if denoiser.n_sites() != s_t.len() {
        return Err(Error::SizeMismatch {
            expected: s_t.len(),
            got: denoiser.n_sites(),
        });
    }
    let p = denoiser.predict(s_t)?;
    let s0_hat = sample_s0_hat(&p, &mut rng.substream(&[t as u64, TAG_S0_HAT]));
    let endpoints = candidate_chains(s_t, t, &s0_hat, kernel, schedule, order, n_chains, rng);
    let ensemble = CandidateEnsemble::aggregate(endpoints);
    if ensemble
        .candidates
        .iter()
        .all(|c| c.log_weight == f64::NEG_INFINITY)
    {
        return Err(Error::InconsistentEvidence(
            "every candidate has zero likelihood of reaching s_t".into(),
        ));
    }
    let k = ensemble.sample_index(&mut rng.substream(&[t as u64, TAG_SELECT]));
    Ok((ensemble.candidates[k].config.clone(), ensemble))
}

/// Full reverse trajectory from a uniform `s_T`.
pub fn reverse_trajectory<D: Denoiser + ?Sized>(
    denoiser: &D,
    graph: &CouplingGraph,
    schedule: &BetaSchedule,
    order: &SweepOrder,
    n_chains: usize,
    rng: &RandomStream,
) -> Result<DiffusionTrajectory> {
    reverse_trajectory_with(
        denoiser,
        ForwardKernel::Coupled(graph),
        schedule,
        order,
        n_chains,
        rng,
    )
}

pub fn reverse_trajectory_with<D: Denoiser + ?Sized>(
    denoiser: &D,
    kernel: ForwardKernel<'_>,
    schedule: &BetaSchedule,
    order: &SweepOrder,
    n_chains: usize,
    rng: &RandomStream,
) -> Result<DiffusionTrajectory> {
    let n = denoiser.n_sites();
    let t_max = schedule.len();
    let mut states = vec![sample_uniform_config(n, &mut rng.substream(&[TAG_INIT]))?];
    let mut ess = vec![0.0; t_max];
    for t in (1..=t_max).rev() {
        let (prev, ens) = reverse_step_with(
            states.last().unwrap(),
            t,
            denoiser,
            kernel,
            schedule,
            order,
            n_chains,
            rng,
        )?;
        ess[t - 1] = ens.effective_sample_size();
        states.push(prev);
    }
    states.reverse();
    Ok(DiffusionTrajectory {
        states,
        direction: Direction::Reverse,
        ess,
    })
}

/// Gibbs sweeps per generated sample: `n_chains * Σ_{t=1..T} (t-1)`.
pub fn gibbs_cost(t_steps: usize, n_chains: usize) -> u64 {
    let t = t_steps as u64;
    n_chains as u64 * t * t.saturating_sub(1) / 2
}

/// Packs spins MSB-first, +1 as a set bit, hex encoded.
pub fn pack_spins_hex(config: &SpinConfiguration) -> String {
    let mut out = String::with_capacity(config.len().div_ceil(8) * 2);
    for chunk in config.spins().chunks(8) {
        let mut byte = 0u8;
        for (k, &s) in chunk.iter().enumerate() {
            if s > 0 {
                byte |= 0x80 >> k;
            }
        }
        write!(out, "{byte:02x}").unwrap();
    }
    out
}

pub fn unpack_spins_hex(hex: &str, n: usize) -> Result<SpinConfiguration> {
    if hex.len() != n.div_ceil(8) * 2 {
        return Err(Error::Format(format!(
            "packed spins: expected {} hex digits",
            n.div_ceil(8) * 2
        )));
    }
    let mut spins = Vec::with_capacity(n);
    for k in 0..n {
        let byte = u8::from_str_radix(&hex[(k / 8) * 2..(k / 8) * 2 + 2], 16)
            .map_err(|e| Error::Format(e.to_string()))?;
        spins.push(if byte & (0x80 >> (k % 8)) != 0 { 1 } else { -1 });
    }
    SpinConfiguration::new(spins)
}

pub const TRAJECTORY_CSV_HEADER: &str = "trajectory,t,energy_per_spin,magnetization,ess,spins";

/// Appends one CSV row per timestep (`t` descending for reverse runs).
pub fn write_trajectory_csv(
    out: &mut String,
    id: usize,
    traj: &DiffusionTrajectory,
    graph: &CouplingGraph,
) -> Result<()> {
    let n = graph.n_sites() as f64;
    let ts: Vec<usize> = match traj.direction {
        Direction::Forward => (0..traj.states.len()).collect(),
        Direction::Reverse => (0..traj.states.len()).rev().collect(),
    };
    for t in ts {
        let s = &traj.states[t];
        let e = energy(s, graph)? / n;
        let ess = if t < traj.ess.len() {
            format!("{:.6}", traj.ess[t])
        } else {
            String::new()
        };
        writeln!(
            out,
            "{id},{t},{e:?},{:?},{ess},{}",
            magnetization(s),
            pack_spins_hex(s)
        )
        .unwrap();
    }
    Ok(())
}
