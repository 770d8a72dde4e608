//! Gaussian stochastic units (g-bits).
//!
//! A network of g-bits samples the quadratic energy
//! `E(g) = Σ_i (g_i - b_i)^2 / (2σ_i^2) - Σ_{i<j} W_ij g_i g_j / (σ_i σ_j)`
//! by Gibbs updates `g_i ~ N(I_i, σ_i^2)` with `I_i = b_i + σ_i Σ_j W_ij g_j / σ_j`.
//!
//! A single g-bit can also be built from bipolar p-bits whose weighted sum
//! `G = dᵀm` with binary weights `d = (2^{a-1}, …, 1, 1/2, …, 2^{-b})`
//! follows a discretized normal distribution.

use crate::error::{Error, Result};
use crate::pbit::{gibbs_sweep_in_place, SweepOrder};
use crate::rng::RandomStream;
use crate::spin::CouplingGraph;

#[derive(Clone, Debug, PartialEq)]
pub struct GbitNetwork {
    b: Vec<f64>,
    sigma: Vec<f64>,
    // row-major n×n, symmetric, zero diagonal
    w: Vec<f64>,
}

impl GbitNetwork {
    pub fn new(b: Vec<f64>, sigma: Vec<f64>, w: Vec<Vec<f64>>) -> Result<Self> {
        let n = b.len();
        if sigma.len() != n || w.len() != n || w.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument(
                "g-bit network dimensions disagree".into(),
            ));
        }
        if sigma.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidArgument(
                "g-bit sigma must be positive".into(),
            ));
        }
        for i in 0..n {
            if w[i][i] != 0.0 {
                return Err(Error::InvalidArgument(
                    "g-bit couplings need a zero diagonal".into(),
                ));
            }
            for j in 0..i {
                if w[i][j] != w[j][i] {
                    return Err(Error::InvalidArgument(
                        "g-bit couplings must be symmetric".into(),
                    ));
                }
            }
        }
        Ok(Self {
            b,
            sigma,
            w: w.into_iter().flatten().collect(),
        })
    }

    pub fn uncoupled(b: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        let n = b.len();
        Self::new(b, sigma, vec![vec![0.0; n]; n])
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    #[inline]
    fn coupling(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n() + j]
    }

    /// Network at inverse temperature `beta`: every σ_i becomes σ_i/√β.
    pub fn annealed(&self, beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::InvalidArgument(
                "annealing beta must be positive".into(),
            ));
        }
        let scale = beta.sqrt();
        Ok(Self {
            b: self.b.clone(),
            sigma: self.sigma.iter().map(|s| s / scale).collect(),
            w: self.w.clone(),
        })
    }

    /// Conditional mean `I_i` of unit `i` given the others.
    pub fn conditional_mean(&self, state: &[f64], i: usize) -> f64 {
        let coupled: f64 = (0..self.n())
            .filter(|&j| j != i)
            .map(|j| self.coupling(i, j) * state[j] / self.sigma[j])
            .sum();
        self.b[i] + self.sigma[i] * coupled
    }

    pub fn energy(&self, state: &[f64]) -> f64 {
        let n = self.n();
        let mut e = 0.0;
        for i in 0..n {
            e += (state[i] - self.b[i]).powi(2) / (2.0 * self.sigma[i].powi(2));
            for j in (i + 1)..n {
                e -= self.coupling(i, j) * state[i] * state[j] / (self.sigma[i] * self.sigma[j]);
            }
        }
        e
    }

    /// Density of moving unit `k` to `value` given the rest of `state`.
    pub fn transition_density(&self, state: &[f64], k: usize, value: f64) -> f64 {
        let mu = self.conditional_mean(state, k);
        let s = self.sigma[k];
        (-(value - mu).powi(2) / (2.0 * s * s)).exp() / (2.0 * std::f64::consts::PI * s * s).sqrt()
    }
}

/// Resamples unit `i` in place and returns its new value.
pub fn gbit_gibbs_update(
    net: &GbitNetwork,
    state: &mut [f64],
    i: usize,
    rng: &mut RandomStream,
) -> Result<f64> {
    if state.len() != net.n() {
        return Err(Error::SizeMismatch {
            expected: net.n(),
            got: state.len(),
        });
    }
    if i >= net.n() {
        return Err(Error::IndexOutOfRange {
            index: i,
            n_sites: net.n(),
        });
    }
    let mean = net.conditional_mean(state, i);
    state[i] = mean + net.sigma[i] * rng.standard_normal();
    Ok(state[i])
}

/// Updates every unit once in index order.
pub fn gbit_sweep(net: &GbitNetwork, state: &mut [f64], rng: &mut RandomStream) -> Result<()> {
    for i in 0..net.n() {
        gbit_gibbs_update(net, state, i, rng)?;
    }
    Ok(())
}

/// A g-bit realized by `a_bits + b_bits` bipolar p-bits.
#[derive(Clone, Debug, PartialEq)]
pub struct GbitInternalRep {
    pub a_bits: usize,
    pub b_bits: usize,
    pub mu: f64,
    pub sigma: f64,
    /// Binary weights, most significant first.
    pub d: Vec<f64>,
    /// `-D/σ²`, with `D` the outer product of `d` with zeroed diagonal.
    pub j_int: Vec<Vec<f64>>,
    /// `μ d / σ²`.
    pub h_int: Vec<f64>,
}

impl GbitInternalRep {
    /// `a' = 1/σ` of the standardization `X = a' G + b'`.
    pub fn a_prime(&self) -> f64 {
        1.0 / self.sigma
    }

    /// `b' = -μ/σ`.
    pub fn b_prime(&self) -> f64 {
        -self.mu / self.sigma
    }

    pub fn n_bits(&self) -> usize {
        self.d.len()
    }

    /// The p-bit network as a coupling graph.
    pub fn graph(&self) -> CouplingGraph {
        let n = self.n_bits();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                edges.push((i, j, self.j_int[i][j]));
            }
        }
        CouplingGraph::new(n, edges, self.h_int.clone()).expect("complete graph on n bits")
    }

    /// `G = dᵀm` for bipolar states `m`.
    pub fn value(&self, m: &[i8]) -> f64 {
        self.d.iter().zip(m).map(|(d, &s)| d * s as f64).sum()
    }

    /// Bipolar state whose `G` is closest to `target` (greedy from the MSB).
    pub fn nearest_state(&self, target: f64) -> Vec<i8> {
        let mut rest = target;
        self.d
            .iter()
            .map(|&dk| {
                let s: i8 = if rest >= 0.0 { 1 } else { -1 };
                rest -= dk * s as f64;
                s
            })
            .collect()
    }
}

pub fn build_internal_rep(
    a_bits: usize,
    b_bits: usize,
    mu: f64,
    sigma: f64,
) -> Result<GbitInternalRep> {
    if a_bits + b_bits == 0 {
        return Err(Error::InvalidArgument(
            "g-bit needs at least one p-bit".into(),
        ));
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let d: Vec<f64> = (0..a_bits)
        .map(|k| 2f64.powi((a_bits - 1 - k) as i32))
        .chain((1..=b_bits).map(|k| 2f64.powi(-(k as i32))))
        .collect();
    let n = d.len();
    let s2 = sigma * sigma;
    let j_int = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { 0.0 } else { -d[i] * d[j] / s2 })
                .collect()
        })
        .collect();
    let h_int = d.iter().map(|dk| mu * dk / s2).collect();
    Ok(GbitInternalRep {
        a_bits,
        b_bits,
        mu,
        sigma,
        d,
        j_int,
        h_int,
    })
}

/// Runs p-bit Gibbs sweeps at β = 1 and records `G` after each sweep.
///
/// The chain starts from the state nearest to μ: single-bit moves cannot
/// cross the energy barrier of the most significant bits at useful rates.
pub fn sample_internal_g(
    rep: &GbitInternalRep,
    n_sweeps: usize,
    rng: &mut RandomStream,
) -> Vec<f64> {
    let graph = rep.graph();
    let order = SweepOrder::identity(rep.n_bits());
    let mut m = rep.nearest_state(rep.mu);
    (0..n_sweeps)
        .map(|_| {
            gibbs_sweep_in_place(&graph, &mut m, 1.0, &order, rng);
            rep.value(&m)
        })
        .collect()
}

/// Bipolar ±1 to unipolar {0, 1}.
pub fn to_unipolar(m: &[i8]) -> Vec<u8> {
    m.iter().map(|&s| u8::from(s > 0)).collect()
}

/// Unipolar {0, 1} to bipolar ±1.
pub fn from_unipolar(x: &[u8]) -> Vec<i8> {
    x.iter().map(|&b| if b != 0 { 1 } else { -1 }).collect()
}
