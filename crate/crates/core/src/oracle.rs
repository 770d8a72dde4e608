//! Dense transition-matrix formulation of the correlated forward process for
//! small systems.
//!
//! State index convention: the most significant of the `N` bits is site 0 and
//! a set bit is spin +1 (see [`SpinConfiguration::from_index`]). Matrices are
//! column-stochastic with entry `[next, src]`.
//!
//! Conditionals here come from Boltzmann weights of [`crate::spin::energy`],
//! not from the p-bit kernel, so the two routes check each other.

use crate::error::{Error, Result};
use crate::pbit::{BetaSchedule, SweepOrder};
use crate::spin::{energy, CouplingGraph, SpinConfiguration};

/// Largest system the oracle will enumerate.
pub const MAX_ORACLE_SITES: usize = 12;

fn guard(graph: &CouplingGraph) -> Result<usize> {
    let n = graph.n_sites();
    if n > MAX_ORACLE_SITES {
        return Err(Error::TooLarge {
            n_sites: n,
            max: MAX_ORACLE_SITES,
        });
    }
    Ok(n)
}

/// Probability vector over all `2^N` configurations.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_sites: usize,
    probs: Vec<f64>,
}

impl StateVector {
    pub fn onehot(config: &SpinConfiguration) -> Self {
        let n = config.len();
        let mut probs = vec![0.0; 1 << n];
        probs[config.to_index()] = 1.0;
        Self { n_sites: n, probs }
    }

    pub fn uniform(n_sites: usize) -> Self {
        let dim = 1usize << n_sites;
        Self {
            n_sites,
            probs: vec![1.0 / dim as f64; dim],
        }
    }

    pub fn from_probs(n_sites: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != 1 << n_sites {
            return Err(Error::SizeMismatch {
                expected: 1 << n_sites,
                got: probs.len(),
            });
        }
        Ok(Self { n_sites, probs })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob_of(&self, config: &SpinConfiguration) -> f64 {
        self.probs[config.to_index()]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Marginal probability that `site` is +1.
    pub fn site_marginal_plus(&self, site: usize) -> f64 {
        let bit = self.n_sites - 1 - site;
        self.probs
            .iter()
            .enumerate()
            .filter(|(x, _)| (x >> bit) & 1 == 1)
            .map(|(_, p)| p)
            .sum()
    }

    /// Total-variation distance to another vector over the same states.
    pub fn tv_distance(&self, other: &[f64]) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

/// Dense `2^N × 2^N` column-stochastic matrix, row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for k in 0..dim {
            data[k * dim + k] = 1.0;
        }
        Self { dim, data }
    }

    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::SizeMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major entries, `[next * dim + src]`.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, next: usize, src: usize) -> f64 {
        self.data[next * self.dim + src]
    }

    pub fn row(&self, next: usize) -> &[f64] {
        &self.data[next * self.dim..(next + 1) * self.dim]
    }

    pub fn column(&self, src: usize) -> Vec<f64> {
        (0..self.dim).map(|r| self.get(r, src)).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|c| (0..self.dim).map(|r| self.get(r, c)).sum())
            .collect()
    }

    /// Dense product `self * rhs`.
    pub fn matmul(&self, rhs: &TransitionMatrix) -> TransitionMatrix {
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for r in 0..d {
            for k in 0..d {
                let a = self.data[r * d + k];
                if a == 0.0 {
                    continue;
                }
                for c in 0..d {
                    out[r * d + c] += a * rhs.data[k * d + c];
                }
            }
        }
        TransitionMatrix { dim: d, data: out }
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        let d = self.dim;
        let probs = (0..d)
            .map(|r| self.row(r).iter().zip(&v.probs).map(|(a, b)| a * b).sum())
            .collect();
        StateVector {
            n_sites: v.n_sites,
            probs,
        }
    }

    /// Renders the matrix as whitespace-separated text, one row per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in 0..self.dim {
            let line: Vec<String> = self.row(r).iter().map(|x| format!("{x:.12}")).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }
}

/// `P(site = +1 | all other sites as in state x)` for every state `x`,
/// from Boltzmann weights at `beta`.
fn plus_probs(graph: &CouplingGraph, site: usize, beta: f64) -> Vec<f64> {
    let n = graph.n_sites();
    let bit = n - 1 - site;
    (0..1usize << n)
        .map(|x| {
            let up = SpinConfiguration::from_index(x | (1 << bit), n);
            let down = SpinConfiguration::from_index(x & !(1 << bit), n);
            let e_up = energy(&up, graph).expect("sizes match");
            let e_down = energy(&down, graph).expect("sizes match");
            // exp(-βE+) / (exp(-βE+) + exp(-βE-))
            1.0 / (1.0 + (-beta * (e_down - e_up)).exp())
        })
        .collect()
}

/// Matrix of a single Gibbs update of `site` at `beta`.
pub fn site_update_matrix(
    graph: &CouplingGraph,
    site: usize,
    beta: f64,
) -> Result<TransitionMatrix> {
    let n = guard(graph)?;
    if site >= n {
        return Err(Error::IndexOutOfRange {
            index: site,
            n_sites: n,
        });
    }
    let dim = 1usize << n;
    let bit = n - 1 - site;
    let plus = plus_probs(graph, site, beta);
    let mut data = vec![0.0; dim * dim];
    for src in 0..dim {
        let up = src | (1 << bit);
        let down = src & !(1 << bit);
        data[up * dim + src] = plus[src];
        data[down * dim + src] = 1.0 - plus[src];
    }
    Ok(TransitionMatrix { dim, data })
}

/// Left-multiplies `m` by the update matrix of `site`, exploiting its two
/// nonzeros per column.
fn left_apply_site(m: &mut [f64], dim: usize, cols: usize, plus: &[f64], bit: usize) {
    for x0 in 0..dim {
        if (x0 >> bit) & 1 == 1 {
            continue;
        }
        let x1 = x0 | (1 << bit);
        // the conditional does not depend on the site's own value
        let p = plus[x0];
        for c in 0..cols {
            let mass = m[x0 * cols + c] + m[x1 * cols + c];
            m[x0 * cols + c] = (1.0 - p) * mass;
            m[x1 * cols + c] = p * mass;
        }
    }
}

/// Full ordered sweep: `W = S_{π(N)} ⋯ S_{π(1)}` (last updated site leftmost).
pub fn sweep_matrix(
    graph: &CouplingGraph,
    beta: f64,
    order: &SweepOrder,
) -> Result<TransitionMatrix> {
    let n = guard(graph)?;
    if order.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: order.len(),
        });
    }
    let dim = 1usize << n;
    let mut m = TransitionMatrix::identity(dim);
    for &site in order.sites() {
        let plus = plus_probs(graph, site, beta);
        left_apply_site(&mut m.data, dim, dim, &plus, n - 1 - site);
    }
    Ok(m)
}

fn push_sweep(graph: &CouplingGraph, v: &mut StateVector, beta: f64, order: &SweepOrder) {
    let n = graph.n_sites();
    let dim = 1usize << n;
    for &site in order.sites() {
        let plus = plus_probs(graph, site, beta);
        left_apply_site(&mut v.probs, dim, 1, &plus, n - 1 - site);
    }
}

/// Exact `P(s_t | s_0)`: `W(β_{t-1}) ⋯ W(β_0) onehot(s_0)`.
pub fn exact_forward_marginal(
    graph: &CouplingGraph,
    s0: &SpinConfiguration,
    schedule: &BetaSchedule,
    t: usize,
    order: &SweepOrder,
) -> Result<StateVector> {
    let n = guard(graph)?;
    if s0.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: s0.len(),
        });
    }
    if order.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: order.len(),
        });
    }
    if t > schedule.len() {
        return Err(Error::InvalidArgument(format!(
            "t = {t} exceeds schedule length {}",
            schedule.len()
        )));
    }
    let mut v = StateVector::onehot(s0);
    for &beta in &schedule.betas()[..t] {
        push_sweep(graph, &mut v, beta, order);
    }
    Ok(v)
}

/// Exact `P(s_{t-1} | s_t, s_0)` by Bayes: likelihood row of `W(β_{t-1})`
/// times the prior at `t-1`, normalized.
pub fn exact_reverse_posterior(
    graph: &CouplingGraph,
    s_t: &SpinConfiguration,
    s0: &SpinConfiguration,
    t: usize,
    schedule: &BetaSchedule,
    order: &SweepOrder,
) -> Result<StateVector> {
    let n = guard(graph)?;
    if s_t.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: s_t.len(),
        });
    }
    if t == 0 || t > schedule.len() {
        return Err(Error::InvalidArgument(format!(
            "t = {t} outside 1..={}",
            schedule.len()
        )));
    }
    let prior = exact_forward_marginal(graph, s0, schedule, t - 1, order)?;
    let w = sweep_matrix(graph, schedule.for_step(t), order)?;
    let likelihood = w.row(s_t.to_index());
    let unnorm: Vec<f64> = likelihood
        .iter()
        .zip(&prior.probs)
        .map(|(l, p)| l * p)
        .collect();
    let z: f64 = unnorm.iter().sum();
    if !(z > 0.0) {
        return Err(Error::InconsistentEvidence(
            "observed s_t has zero probability given s_0".into(),
        ));
    }
    Ok(StateVector {
        n_sites: n,
        probs: unnorm.into_iter().map(|x| x / z).collect(),
    })
}

/// Exact Boltzmann distribution `exp(-βE)/Z`.
pub fn boltzmann(graph: &CouplingGraph, beta: f64) -> Result<StateVector> {
    let n = guard(graph)?;
    let energies: Vec<f64> = (0..1usize << n)
        .map(|x| energy(&SpinConfiguration::from_index(x, n), graph).expect("sizes match"))
        .collect();
    let e_min = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = energies
        .iter()
        .map(|e| (-beta * (e - e_min)).exp())
        .collect();
    let z: f64 = w.iter().sum();
    Ok(StateVector {
        n_sites: n,
        probs: w.into_iter().map(|x| x / z).collect(),
    })
}
