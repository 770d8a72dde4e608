//! p-bit update rule, sequential Gibbs sweeps, β/η schedules and the exact
//! one-sweep likelihood.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::spin::{CouplingGraph, SpinConfiguration};

/// Smallest flip probability a schedule may use; η → 0 sends β to infinity.
pub const ETA_FLOOR: f64 = 1e-3;

/// Cap applied to β derived from η.
pub const BETA_CAP: f64 = 25.0;

/// `sign(tanh(beta*field) + u)` with `u` in (-1, 1); a zero argument gives +1.
#[inline]
pub fn pbit_update(field: f64, beta: f64, u: f64) -> i8 {
    if (beta * field).tanh() + u >= 0.0 {
        1
    } else {
        -1
    }
}

/// `ln P(spin | field)` for one p-bit, computed as a log-sigmoid so that
/// saturated fields stay finite.
#[inline]
pub fn log_prob_spin(spin: i8, field: f64, beta: f64) -> f64 {
    // (1 + s tanh x)/2 = sigmoid(2 s x)
    let z = 2.0 * beta * field * spin as f64;
    -softplus(-z)
}

#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `P(s_i = +1 | rest) = (1 + tanh(beta * I_i)) / 2`.
pub fn conditional_prob_plus(
    graph: &CouplingGraph,
    config: &SpinConfiguration,
    i: usize,
    beta: f64,
) -> Result<f64> {
    let field = crate::spin::local_field(config, graph, i)?;
    Ok(0.5 * (1.0 + (beta * field).tanh()))
}

/// Flip probability to inverse temperature: `arctanh(1 - 2 eta)`, capped at
/// [`BETA_CAP`].
pub fn eta_to_beta(eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= 0.5) {
        return Err(Error::EtaOutOfRange(eta));
    }
    Ok((1.0 - 2.0 * eta).atanh().min(BETA_CAP))
}

/// Inverse temperature to flip probability: `(1 - tanh beta) / 2`.
pub fn beta_to_eta(beta: f64) -> f64 {
    0.5 * (1.0 - beta.tanh())
}

/// Fixed permutation of sites visited by a sweep.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepOrder(Vec<usize>);

impl SweepOrder {
    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &i in &order {
            if i >= n || seen[i] {
                return Err(Error::InvalidArgument(format!(
                    "sweep order is not a permutation of 0..{n}"
                )));
            }
            seen[i] = true;
        }
        Ok(Self(order))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sites(&self) -> &[usize] {
        &self.0
    }
}

/// Per-step inverse temperatures `β_0 … β_{T-1}`; nonnegative, nonincreasing.
#[derive(Clone, Debug, PartialEq)]
pub struct BetaSchedule(Vec<f64>);

impl BetaSchedule {
    pub fn new(betas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::InvalidSchedule("empty schedule".into()));
        }
        if let Some(b) = betas.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
            return Err(Error::InvalidSchedule(format!(
                "beta {b} is not a finite nonnegative value"
            )));
        }
        if betas.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidSchedule(
                "beta schedule must be nonincreasing".into(),
            ));
        }
        Ok(Self(betas))
    }

    /// Constant schedule of length `t_steps`.
    pub fn constant(beta: f64, t_steps: usize) -> Result<Self> {
        Self::new(vec![beta; t_steps])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn betas(&self) -> &[f64] {
        &self.0
    }

    /// β used by the forward transition `s_{t-1} → s_t` (t is 1-based).
    pub fn for_step(&self, t: usize) -> f64 {
        self.0[t - 1]
    }

    /// Equivalent flip probabilities, floored at [`ETA_FLOOR`].
    pub fn to_eta_schedule(&self) -> EtaSchedule {
        EtaSchedule(
            self.0
                .iter()
                .map(|&b| beta_to_eta(b).max(ETA_FLOOR))
                .collect(),
        )
    }
}

/// Per-step flip probabilities `η_0 … η_{T-1}` in `[ETA_FLOOR, 0.5]`, nondecreasing.
#[derive(Clone, Debug, PartialEq)]
pub struct EtaSchedule(Vec<f64>);

impl EtaSchedule {
    pub fn new(etas: Vec<f64>) -> Result<Self> {
        if etas.is_empty() {
            return Err(Error::InvalidSchedule("empty schedule".into()));
        }
        if let Some(e) = etas.iter().find(|e| !(**e >= ETA_FLOOR && **e <= 0.5)) {
            return Err(Error::InvalidSchedule(format!(
                "eta {e} outside [{ETA_FLOOR}, 0.5]"
            )));
        }
        if etas.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidSchedule(
                "eta schedule must be nondecreasing".into(),
            ));
        }
        Ok(Self(etas))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn etas(&self) -> &[f64] {
        &self.0
    }

    /// Flip probability of the step `s_{t-1} → s_t` (t is 1-based).
    pub fn for_step(&self, t: usize) -> f64 {
        self.0[t - 1]
    }

    pub fn to_beta_schedule(&self) -> BetaSchedule {
        BetaSchedule(
            self.0
                .iter()
                .map(|&e| eta_to_beta(e).expect("validated eta"))
                .collect(),
        )
    }
}

/// Serializable schedule description.
///
/// `explicit` lists β values directly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScheduleSpec {
    EtaLinear {
        t_steps: usize,
        start: f64,
        end: f64,
    },
    BetaLinear {
        t_steps: usize,
        start: f64,
        end: f64,
    },
    Explicit {
        t_steps: usize,
        values: Vec<f64>,
    },
}

fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    (0..n)
        .map(|k| start + (end - start) * k as f64 / (n - 1) as f64)
        .collect()
}

impl ScheduleSpec {
    pub fn t_steps(&self) -> usize {
        match *self {
            ScheduleSpec::EtaLinear { t_steps, .. }
            | ScheduleSpec::BetaLinear { t_steps, .. }
            | ScheduleSpec::Explicit { t_steps, .. } => t_steps,
        }
    }

    fn check_len(&self) -> Result<()> {
        if self.t_steps() == 0 {
            return Err(Error::InvalidSchedule("t_steps must be >= 1".into()));
        }
        if let ScheduleSpec::Explicit { t_steps, values } = self {
            if values.len() != *t_steps {
                return Err(Error::InvalidSchedule(format!(
                    "explicit schedule has {} values, t_steps = {t_steps}",
                    values.len()
                )));
            }
        }
        Ok(())
    }

    pub fn betas(&self) -> Result<BetaSchedule> {
        self.check_len()?;
        match self {
            ScheduleSpec::EtaLinear { .. } => Ok(self.etas()?.to_beta_schedule()),
            ScheduleSpec::BetaLinear {
                t_steps,
                start,
                end,
            } => BetaSchedule::new(linspace(*start, *end, *t_steps)),
            ScheduleSpec::Explicit { values, .. } => BetaSchedule::new(values.clone()),
        }
    }

    pub fn etas(&self) -> Result<EtaSchedule> {
        self.check_len()?;
        match self {
            ScheduleSpec::EtaLinear {
                t_steps,
                start,
                end,
            } => EtaSchedule::new(linspace(*start, *end, *t_steps)),
            _ => Ok(self.betas()?.to_eta_schedule()),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("schedule serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }
}

/// One sequential Gibbs sweep in place. Consumes exactly `n` uniform variates.
pub fn gibbs_sweep_in_place(
    graph: &CouplingGraph,
    spins: &mut [i8],
    beta: f64,
    order: &SweepOrder,
    rng: &mut RandomStream,
) {
    debug_assert_eq!(spins.len(), graph.n_sites());
    let mut cache = TanhCache::new(beta);
    for &i in order.sites() {
        let field = graph.field_unchecked(spins, i);
        let u = rng.uniform_pm1();
        spins[i] = if cache.tanh(field) + u >= 0.0 { 1 } else { -1 };
    }
}

/// Memoized `tanh(beta * field)`. Lattice fields take few distinct values, so
/// a small direct-mapped table removes most `tanh` calls; hits return the
/// exact value a fresh call would.
struct TanhCache {
    beta: f64,
    keys: [u64; 16],
    values: [f64; 16],
}

impl TanhCache {
    fn new(beta: f64) -> Self {
        Self {
            beta,
            // NaN bits never equal a finite field's bits
            keys: [f64::NAN.to_bits(); 16],
            values: [0.0; 16],
        }
    }

    #[inline]
    fn tanh(&mut self, field: f64) -> f64 {
        let key = field.to_bits();
        let slot = ((key ^ (key >> 29) ^ (key >> 47)) & 15) as usize;
        if self.keys[slot] != key {
            self.keys[slot] = key;
            self.values[slot] = (self.beta * field).tanh();
        }
        self.values[slot]
    }
}

fn check_sizes(graph: &CouplingGraph, n: usize, order: &SweepOrder) -> Result<()> {
    if n != graph.n_sites() {
        return Err(Error::SizeMismatch {
            expected: graph.n_sites(),
            got: n,
        });
    }
    if order.len() != graph.n_sites() {
        return Err(Error::SizeMismatch {
            expected: graph.n_sites(),
            got: order.len(),
        });
    }
    Ok(())
}

/// One sequential Gibbs sweep in the fixed `order`, each site resampled from
/// its conditional given the partially updated configuration.
pub fn gibbs_sweep(
    graph: &CouplingGraph,
    config: &SpinConfiguration,
    beta: f64,
    order: &SweepOrder,
    rng: &mut RandomStream,
) -> Result<SpinConfiguration> {
    check_sizes(graph, config.len(), order)?;
    let mut spins: Vec<i8> = config.spins().to_vec();
    gibbs_sweep_in_place(graph, &mut spins, beta, order, rng);
    Ok(SpinConfiguration::new(spins).expect("sweep emits ±1"))
}

/// Natural log of the probability that one ordered sweep at `beta` maps
/// `prev` to `next`.
pub fn sweep_log_likelihood(
    graph: &CouplingGraph,
    prev: &SpinConfiguration,
    next: &SpinConfiguration,
    beta: f64,
    order: &SweepOrder,
) -> Result<f64> {
    check_sizes(graph, prev.len(), order)?;
    check_sizes(graph, next.len(), order)?;
    let mut work: Vec<i8> = prev.spins().to_vec();
    Ok(sweep_log_likelihood_with(
        graph,
        &mut work,
        next.spins(),
        beta,
        order,
    ))
}

/// Likelihood kernel over a scratch buffer holding `prev`; on return the
/// buffer holds `next`.
pub(crate) fn sweep_log_likelihood_with(
    graph: &CouplingGraph,
    work: &mut [i8],
    next: &[i8],
    beta: f64,
    order: &SweepOrder,
) -> f64 {
    let mut ll = 0.0;
    for &i in order.sites() {
        let field = graph.field_unchecked(work, i);
        ll += log_prob_spin(next[i], field, beta);
        work[i] = next[i];
    }
    ll
}

/// Uniformly random configuration of `n` spins.
pub fn sample_uniform_config(n: usize, rng: &mut RandomStream) -> Result<SpinConfiguration> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "configuration size must be >= 1".into(),
        ));
    }
    let spins = (0..n)
        .map(|_| if rng.next_u64() >> 63 == 1 { 1 } else { -1 })
        .collect();
    Ok(SpinConfiguration::new(spins).expect("±1 by construction"))
}
