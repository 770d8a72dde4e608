//! Cross-module consistency suite on small systems: the sampler, the
//! likelihood and the posterior are compared with exact transition matrices.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::oracle::{boltzmann, exact_reverse_posterior, sweep_matrix, TransitionMatrix};
use crate::pbit::{beta_to_eta, gibbs_sweep, sweep_log_likelihood, BetaSchedule, SweepOrder};
use crate::rng::RandomStream;
use crate::spin::{CouplingGraph, SpinConfiguration};

pub const MAX_CHECK_SITES: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleCheckConfig {
    pub n_sites: usize,
    /// Sweeps sampled per source state in the frequency check.
    pub trials: usize,
    pub beta: f64,
    /// Coupling on every pair of sites.
    pub coupling: f64,
    pub seed: u64,
    /// Evaluate likelihoods in reversed site order against identity-order
    /// matrices. A correct suite must then report a failure.
    pub permute_order: bool,
}

impl Default for OracleCheckConfig {
    fn default() -> Self {
        Self {
            n_sites: 2,
            trials: 100_000,
            beta: 1.0,
            coupling: 1.0,
            seed: 0,
            permute_order: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub max_deviation: f64,
    pub tolerance: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.max_deviation <= self.tolerance
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleCheckReport {
    pub results: Vec<CheckResult>,
}

impl OracleCheckReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(CheckResult::passed)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("check,max_deviation,tolerance,passed\n");
        for r in &self.results {
            writeln!(
                s,
                "{},{:e},{:e},{}",
                r.name,
                r.max_deviation,
                r.tolerance,
                r.passed()
            )
            .unwrap();
        }
        s
    }
}

fn complete_graph(n: usize, j: f64) -> Result<CouplingGraph> {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            edges.push((a, b, j));
        }
    }
    CouplingGraph::new(n, edges, vec![0.0; n])
}

fn likelihood_matrix(
    graph: &CouplingGraph,
    beta: f64,
    order: &SweepOrder,
) -> Result<TransitionMatrix> {
    let n = graph.n_sites();
    let dim = 1usize << n;
    let mut rows = Vec::with_capacity(dim * dim);
    for next in 0..dim {
        for src in 0..dim {
            let ll = sweep_log_likelihood(
                graph,
                &SpinConfiguration::from_index(src, n),
                &SpinConfiguration::from_index(next, n),
                beta,
                order,
            )?;
            rows.push(ll.exp());
        }
    }
    TransitionMatrix::from_row_major(dim, rows)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Posterior by brute-force path sums over the sampler's own likelihoods.
fn brute_posterior(lik: &[TransitionMatrix], s_t: usize, s0: usize, t: usize) -> Vec<f64> {
    let dim = lik[0].dim();
    let mut prior = vec![0.0; dim];
    prior[s0] = 1.0;
    for m in &lik[..t - 1] {
        let mut next = vec![0.0; dim];
        for (x, p) in prior.iter().enumerate() {
            for (y, slot) in next.iter_mut().enumerate() {
                *slot += m.get(y, x) * p;
            }
        }
        prior = next;
    }
    let un: Vec<f64> = (0..dim)
        .map(|x| lik[t - 1].get(s_t, x) * prior[x])
        .collect();
    let z: f64 = un.iter().sum();
    un.into_iter().map(|v| v / z).collect()
}

pub fn run_oracle_check(cfg: &OracleCheckConfig) -> Result<OracleCheckReport> {
    let n = cfg.n_sites;
    if !(1..=MAX_CHECK_SITES).contains(&n) {
        return Err(Error::TooLarge {
            n_sites: n,
            max: MAX_CHECK_SITES,
        });
    }
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let dim = 1usize << n;
    let graph = complete_graph(n, cfg.coupling)?;
    let identity = SweepOrder::identity(n);
    let lik_order = if cfg.permute_order {
        SweepOrder::new((0..n).rev().collect())?
    } else {
        identity.clone()
    };
    let w = sweep_matrix(&graph, cfg.beta, &identity)?;
    let mut results = Vec::new();

    // likelihood vs matrix entries
    let lm = likelihood_matrix(&graph, cfg.beta, &lik_order)?;
    results.push(CheckResult {
        name: "likelihood_vs_matrix",
        max_deviation: max_abs_diff(lm.data(), w.data()),
        tolerance: 1e-12,
    });

    // likelihood normalization
    let col_dev = lm
        .column_sums()
        .iter()
        .map(|c| (c - 1.0).abs())
        .fold(0.0, f64::max);
    results.push(CheckResult {
        name: "likelihood_normalization",
        max_deviation: col_dev,
        tolerance: 1e-10,
    });

    // sampler frequencies vs matrix columns
    let rng = RandomStream::new(cfg.seed, 0x5eed);
    let mut worst_tv: f64 = 0.0;
    for src in 0..dim {
        let start = SpinConfiguration::from_index(src, n);
        let mut r = rng.substream(&[src as u64]);
        let mut counts = vec![0usize; dim];
        for _ in 0..cfg.trials {
            counts[gibbs_sweep(&graph, &start, cfg.beta, &identity, &mut r)?.to_index()] += 1;
        }
        let col = w.column(src);
        let tv = 0.5
            * counts
                .iter()
                .zip(&col)
                .map(|(&c, p)| (c as f64 / cfg.trials as f64 - p).abs())
                .sum::<f64>();
        worst_tv = worst_tv.max(tv);
    }
    results.push(CheckResult {
        name: "sampler_vs_matrix_tv",
        max_deviation: worst_tv,
        tolerance: (2.0 * dim as f64 / cfg.trials as f64).sqrt().max(0.01),
    });

    // Boltzmann stationarity
    let pi = boltzmann(&graph, cfg.beta)?;
    let moved = w.apply(&pi);
    results.push(CheckResult {
        name: "boltzmann_stationary",
        max_deviation: max_abs_diff(moved.probs(), pi.probs()),
        tolerance: 1e-12,
    });

    // posterior vs Bayes over the sampler's likelihoods
    let schedule = BetaSchedule::new(vec![cfg.beta, 0.5 * cfg.beta, 0.25 * cfg.beta])?;
    let liks = schedule
        .betas()
        .iter()
        .map(|&b| likelihood_matrix(&graph, b, &lik_order))
        .collect::<Result<Vec<_>>>()?;
    let mut post_dev: f64 = 0.0;
    for t in 1..=schedule.len() {
        for s0 in 0..dim {
            for st in 0..dim {
                let exact = exact_reverse_posterior(
                    &graph,
                    &SpinConfiguration::from_index(st, n),
                    &SpinConfiguration::from_index(s0, n),
                    t,
                    &schedule,
                    &identity,
                )?;
                let brute = brute_posterior(&liks, st, s0, t);
                post_dev = post_dev.max(max_abs_diff(exact.probs(), &brute));
            }
        }
    }
    results.push(CheckResult {
        name: "posterior_vs_bayes",
        max_deviation: post_dev,
        tolerance: 1e-12,
    });

    // zero couplings with self bias reduce to independent flips
    let eta = beta_to_eta(cfg.beta);
    let mut indep_dev: f64 = 0.0;
    for src in 0..dim {
        let prev = SpinConfiguration::from_index(src, n);
        let g0 = CouplingGraph::self_bias(&prev);
        for next in 0..dim {
            let nx = SpinConfiguration::from_index(next, n);
            let ll = sweep_log_likelihood(&g0, &prev, &nx, cfg.beta, &lik_order)?;
            let flips = (src ^ next).count_ones() as i32;
            let expect = eta.powi(flips) * (1.0 - eta).powi(n as i32 - flips);
            indep_dev = indep_dev.max((ll.exp() - expect).abs());
        }
    }
    results.push(CheckResult {
        name: "independent_limit",
        max_deviation: indep_dev,
        tolerance: 1e-12,
    });

    Ok(OracleCheckReport { results })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let cfg = OracleCheckConfig {
            trials: 20_000,
            ..Default::default()
        };
        let rep = run_oracle_check(&cfg).unwrap();
        assert!(rep.passed(), "{}", rep.to_csv());
    }

    #[test]
    fn zero_beta_passes() {
        let cfg = OracleCheckConfig {
            trials: 20_000,
            beta: 0.0,
            n_sites: 3,
            ..Default::default()
        };
        assert!(run_oracle_check(&cfg).unwrap().passed());
    }

    #[test]
    fn permuted_order_is_caught() {
        let cfg = OracleCheckConfig {
            trials: 1000,
            permute_order: true,
            ..Default::default()
        };
        let rep = run_oracle_check(&cfg).unwrap();
        assert!(!rep.passed());
        assert!(!rep.results[0].passed());
    }

    #[test]
    fn rejects_large_systems() {
        let cfg = OracleCheckConfig {
            n_sites: 5,
            ..Default::default()
        };
        assert!(run_oracle_check(&cfg).is_err());
    }
}
