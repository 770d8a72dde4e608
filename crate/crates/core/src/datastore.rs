//! Spin datasets, run configuration and equilibrium data generation.
//!
//! Dataset layout (little endian):
//!
//! ```text
//! magic      8 bytes  "CDSPINS\0"
//! version    u32      1
//! n_sites    u32
//! count      u64
//! seed       u64
//! meta_len   u32
//! metadata   meta_len bytes, UTF-8
//! payload    count * n_sites bytes, record-major, +1 = 0x01, -1 = 0xFF
//! ```
//!
//! A plain-text sidecar `<file>.meta` repeats the header as `key = value` lines.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlated::{forward_noise_with, ForwardKernel};
use crate::denoiser::{TrainingConfig, TrainingPair};
use crate::error::{Error, Result};
use crate::pbit::{
    gibbs_sweep_in_place, sample_uniform_config, BetaSchedule, ScheduleSpec, SweepOrder,
};
use crate::rng::RandomStream;
use crate::spin::{CouplingGraph, LatticeSpec, SpinConfiguration};

pub const DATASET_MAGIC: &[u8; 8] = b"CDSPINS\0";
pub const DATASET_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinDataset {
    n_sites: usize,
    seed: u64,
    metadata: String,
    spins: Vec<i8>,
}

impl SpinDataset {
    pub fn new(n_sites: usize, seed: u64, metadata: impl Into<String>) -> Self {
        Self {
            n_sites,
            seed,
            metadata: metadata.into(),
            spins: Vec::new(),
        }
    }

    pub fn from_records(
        records: &[SpinConfiguration],
        seed: u64,
        metadata: impl Into<String>,
    ) -> Result<Self> {
        let n = records
            .first()
            .map(|r| r.len())
            .ok_or_else(|| Error::InvalidArgument("dataset needs at least one record".into()))?;
        let mut ds = Self::new(n, seed, metadata);
        for r in records {
            ds.push(r)?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, record: &SpinConfiguration) -> Result<()> {
        if record.len() != self.n_sites {
            return Err(Error::SizeMismatch {
                expected: self.n_sites,
                got: record.len(),
            });
        }
        self.spins.extend_from_slice(record.spins());
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn len(&self) -> usize {
        self.spins.len().checked_div(self.n_sites).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn metadata(&self) -> &str {
        &self.metadata
    }

    pub fn record_spins(&self, i: usize) -> &[i8] {
        &self.spins[i * self.n_sites..(i + 1) * self.n_sites]
    }

    pub fn record(&self, i: usize) -> SpinConfiguration {
        SpinConfiguration::new(self.record_spins(i).to_vec()).expect("stored spins are ±1")
    }

    pub fn records(&self) -> impl Iterator<Item = SpinConfiguration> + '_ {
        (0..self.len()).map(|i| self.record(i))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let meta = self.metadata.as_bytes();
        let mut out = Vec::with_capacity(36 + meta.len() + self.spins.len());
        out.extend_from_slice(DATASET_MAGIC);
        out.extend_from_slice(&DATASET_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n_sites as u32).to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(meta);
        out.extend(self.spins.iter().map(|&s| s as u8));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(8)? != DATASET_MAGIC {
            return Err(Error::Format("not a spin dataset (bad magic)".into()));
        }
        let version = u32::from_le_bytes(cur.array()?);
        if version != DATASET_VERSION {
            return Err(Error::Format(format!(
                "unsupported dataset version {version}"
            )));
        }
        let n_sites = u32::from_le_bytes(cur.array()?) as usize;
        let count = u64::from_le_bytes(cur.array()?) as usize;
        let seed = u64::from_le_bytes(cur.array()?);
        let meta_len = u32::from_le_bytes(cur.array()?) as usize;
        let metadata = String::from_utf8(cur.take(meta_len)?.to_vec())
            .map_err(|_| Error::Format("dataset metadata is not UTF-8".into()))?;
        let payload = cur.take(count * n_sites)?;
        if cur.pos != bytes.len() {
            return Err(Error::Format("trailing bytes after dataset payload".into()));
        }
        let spins = payload
            .iter()
            .map(|&b| match b {
                0x01 => Ok(1i8),
                0xFF => Ok(-1i8),
                other => Err(Error::Format(format!("invalid spin byte {other:#04x}"))),
            })
            .collect::<Result<Vec<i8>>>()?;
        Ok(Self {
            n_sites,
            seed,
            metadata,
            spins,
        })
    }

    pub fn sidecar_text(&self) -> String {
        format!(
            "format = spin-dataset\nversion = {DATASET_VERSION}\nn_sites = {}\ncount = {}\nseed = {}\nmetadata = {}\n",
            self.n_sites,
            self.len(),
            self.seed,
            self.metadata
        )
    }

    /// Writes the binary file and its `.meta` sidecar.
    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        fs::write(sidecar_path(path), self.sidecar_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    /// Checks the header against a lattice.
    pub fn check_sites(&self, n_sites: usize) -> Result<()> {
        if self.n_sites != n_sites {
            return Err(Error::SizeMismatch {
                expected: n_sites,
                got: self.n_sites,
            });
        }
        Ok(())
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format("truncated file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const K: usize>(&mut self) -> Result<[u8; K]> {
        Ok(self.take(K)?.try_into().expect("length checked"))
    }
}

/// How each equilibrium record is produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Protocol {
    /// Uniform random start, `burn_in` sweeps at the target β, one read-out.
    RandomizeHold { burn_in: usize },
    /// All-up start, `ramp` sweeps with β rising linearly from 0 to the
    /// target, then `hold` sweeps at the target.
    RampHold { ramp: usize, hold: usize },
}

impl Protocol {
    /// Desk-scale 2D default: 100·N burn-in sweeps.
    pub fn desk_randomize(n_sites: usize) -> Self {
        Protocol::RandomizeHold {
            burn_in: 100 * n_sites,
        }
    }

    /// Desk-scale 3D default: 100·N sweeps split 1:9 between ramp and hold.
    pub fn desk_ramp(n_sites: usize) -> Self {
        Protocol::RampHold {
            ramp: 10 * n_sites,
            hold: 90 * n_sites,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Protocol::RandomizeHold { burn_in } => format!("randomize-hold burn_in={burn_in}"),
            Protocol::RampHold { ramp, hold } => format!("ramp-hold ramp={ramp} hold={hold}"),
        }
    }
}

fn equilibrium_record(
    graph: &CouplingGraph,
    beta: f64,
    protocol: &Protocol,
    order: &SweepOrder,
    rng: &mut RandomStream,
) -> Vec<i8> {
    let n = graph.n_sites();
    match *protocol {
        Protocol::RandomizeHold { burn_in } => {
            let mut s = sample_uniform_config(n, rng)
                .expect("n >= 1")
                .spins()
                .to_vec();
            for _ in 0..burn_in {
                gibbs_sweep_in_place(graph, &mut s, beta, order, rng);
            }
            s
        }
        Protocol::RampHold { ramp, hold } => {
            let mut s = vec![1i8; n];
            for k in 0..ramp {
                let b = if ramp == 1 {
                    beta
                } else {
                    beta * k as f64 / (ramp - 1) as f64
                };
                gibbs_sweep_in_place(graph, &mut s, b, order, rng);
            }
            for _ in 0..hold {
                gibbs_sweep_in_place(graph, &mut s, beta, order, rng);
            }
            s
        }
    }
}

/// Independent equilibrium records; record `r` uses substream `[r]`.
pub fn generate_equilibrium_dataset(
    graph: &CouplingGraph,
    beta_target: f64,
    protocol: &Protocol,
    count: usize,
    rng: &RandomStream,
    metadata: impl Into<String>,
) -> Result<SpinDataset> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be >= 1".into()));
    }
    if graph.n_sites() == 0 {
        return Err(Error::InvalidArgument("graph has no sites".into()));
    }
    if !(beta_target >= 0.0 && beta_target.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "beta must be finite and >= 0, got {beta_target}"
        )));
    }
    let order = SweepOrder::identity(graph.n_sites());
    let records: Vec<Vec<i8>> = (0..count)
        .into_par_iter()
        .map(|r| {
            let mut rr = rng.substream(&[r as u64]);
            equilibrium_record(graph, beta_target, protocol, &order, &mut rr)
        })
        .collect();
    let mut ds = SpinDataset::new(graph.n_sites(), rng.seed(), metadata);
    ds.spins = records.concat();
    Ok(ds)
}

/// Which forward process noises the data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DiffusionMode {
    /// Site-wise flips, couplings ignored.
    Independent,
    /// Gibbs sweeps on the coupling graph.
    Correlated,
}

impl DiffusionMode {
    pub fn name(self) -> &'static str {
        match self {
            DiffusionMode::Independent => "independent",
            DiffusionMode::Correlated => "correlated",
        }
    }

    pub fn kernel(self, graph: &CouplingGraph) -> ForwardKernel<'_> {
        match self {
            DiffusionMode::Independent => ForwardKernel::SelfBias,
            DiffusionMode::Correlated => ForwardKernel::Coupled(graph),
        }
    }
}

/// One `(s_t, s_0)` pair per record and timestep. Record `r` noises with
/// substream `[r]`; pairs are ordered record-major, then by `t`.
pub fn build_training_set(
    dataset: &SpinDataset,
    graph: &CouplingGraph,
    schedule: &BetaSchedule,
    mode: DiffusionMode,
    rng: &RandomStream,
) -> Result<Vec<TrainingPair>> {
    dataset.check_sites(graph.n_sites())?;
    let order = SweepOrder::identity(graph.n_sites());
    let kernel = mode.kernel(graph);
    let per_record: Vec<Vec<TrainingPair>> = (0..dataset.len())
        .into_par_iter()
        .map(|r| {
            let s0 = dataset.record(r);
            let traj = forward_noise_with(
                kernel,
                &s0,
                schedule,
                &order,
                &mut rng.substream(&[r as u64]),
            )?;
            Ok(traj
                .states
                .into_iter()
                .skip(1)
                .map(|noisy| TrainingPair {
                    noisy,
                    clean: s0.clone(),
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_record.concat())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Generation inverse temperature; also the top of the default
    /// correlated schedule.
    pub beta: f64,
    pub count: usize,
    /// Size of the held-out MCMC reference ensemble used by `eval`.
    #[serde(default)]
    pub reference_count: usize,
    /// Defaults to the desk-scale protocol of the lattice family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<Protocol>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionConfig {
    pub t_steps: usize,
    pub n_chains: usize,
    /// Reverse trajectories generated by `sample`.
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub independent_schedule: Option<ScheduleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlated_schedule: Option<ScheduleSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenoiserConfig {
    pub width: usize,
    #[serde(default)]
    pub training: TrainingConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub data: u64,
    pub train: u64,
    pub inference: u64,
}

impl Seeds {
    pub fn all(seed: u64) -> Self {
        Self {
            data: seed,
            train: seed,
            inference: seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    /// Output directory, relative to the config file unless absolute.
    pub out_dir: PathBuf,
    /// Optional externally produced dataset to train on instead of `gen-data`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("out"),
            dataset: None,
        }
    }
}

/// Everything one pipeline run needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeSpec,
    pub seeds: Seeds,
    pub data: DataConfig,
    pub diffusion: DiffusionConfig,
    pub denoiser: DenoiserConfig,
    #[serde(default)]
    pub paths: PathsConfig,
}

pub const DEFAULT_ETA_START: f64 = 0.01;
pub const DEFAULT_ETA_END: f64 = 0.5;
pub const DEFAULT_BETA_END: f64 = 0.01;

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Loads a config and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.paths.out_dir.is_relative() {
            cfg.paths.out_dir = base.join(&cfg.paths.out_dir);
        }
        if let Some(ds) = &cfg.paths.dataset {
            let ds = if ds.is_relative() {
                base.join(ds)
            } else {
                ds.clone()
            };
            if !ds.is_file() {
                return Err(Error::Config(format!(
                    "dataset {} does not exist",
                    ds.display()
                )));
            }
            cfg.paths.dataset = Some(ds);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.into()));
        if self.lattice.n_sites() == 0 {
            return bad("lattice has no sites");
        }
        if !(self.data.beta >= 0.0 && self.data.beta.is_finite()) {
            return bad("data.beta must be finite and >= 0");
        }
        if self.data.count == 0 {
            return bad("data.count must be >= 1");
        }
        if self.diffusion.t_steps == 0 {
            return bad("diffusion.t_steps must be >= 1");
        }
        if self.diffusion.n_chains == 0 {
            return bad("diffusion.n_chains must be >= 1");
        }
        if self.denoiser.width == 0 {
            return bad("denoiser.width must be >= 1");
        }
        self.denoiser.training.validate()?;
        for mode in [DiffusionMode::Independent, DiffusionMode::Correlated] {
            let s = self.schedule(mode)?;
            if s.t_steps() != self.diffusion.t_steps {
                return Err(Error::Config(format!(
                    "{} schedule has {} steps, diffusion.t_steps = {}",
                    mode.name(),
                    s.t_steps(),
                    self.diffusion.t_steps
                )));
            }
            s.betas().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn protocol(&self) -> Protocol {
        self.data
            .protocol
            .clone()
            .unwrap_or_else(|| match self.lattice {
                LatticeSpec::Ferro2d { .. } => Protocol::desk_randomize(self.lattice.n_sites()),
                LatticeSpec::Ea3d { .. } => Protocol::desk_ramp(self.lattice.n_sites()),
            })
    }

    /// The configured schedule, or the default for `mode`: η linear from
    /// 0.01 to 0.5 (independent) or β linear from the data β down to 0.01
    /// (correlated).
    pub fn schedule(&self, mode: DiffusionMode) -> Result<ScheduleSpec> {
        let t_steps = self.diffusion.t_steps;
        let given = match mode {
            DiffusionMode::Independent => &self.diffusion.independent_schedule,
            DiffusionMode::Correlated => &self.diffusion.correlated_schedule,
        };
        Ok(given.clone().unwrap_or(match mode {
            DiffusionMode::Independent => ScheduleSpec::EtaLinear {
                t_steps,
                start: DEFAULT_ETA_START,
                end: DEFAULT_ETA_END,
            },
            DiffusionMode::Correlated => ScheduleSpec::BetaLinear {
                t_steps,
                start: self.data.beta,
                end: DEFAULT_BETA_END.min(self.data.beta),
            },
        }))
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        self.paths.out_dir.join(name)
    }

    pub fn graph(&self) -> Result<CouplingGraph> {
        self.lattice.build()
    }
}
