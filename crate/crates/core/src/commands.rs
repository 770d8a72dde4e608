//! Pipeline stages and the command-line front end.
//!
//! Every stage is a plain function over a [`RunConfig`] so examples and tests
//! can drive the pipeline without touching the file system; the `cmd_*`
//! wrappers add file I/O and printed summaries.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::checks::{run_oracle_check, OracleCheckConfig};
use crate::correlated::{
    forward_noise_with, reverse_trajectory_with, write_trajectory_csv, DiffusionTrajectory,
    Direction, TRAJECTORY_CSV_HEADER,
};
use crate::datastore::{
    build_training_set, generate_equilibrium_dataset, DiffusionMode, RunConfig, Seeds, SpinDataset,
};
use crate::denoiser::{train, DenoiserParameters, TrainingOutcome};
use crate::error::{Error, Result};
use crate::eval::{evaluate, mean_se, timestep_csv, timestep_stats, EvalBins, TimestepStats};
use crate::independent::{independent_reverse_trajectory, CumulativeKernel};
use crate::lfsr::{bench_for, BenchGenerator};
use crate::pbit::SweepOrder;
use crate::rng::{derive_stream_id, RandomStream};
use crate::spin::{energy, CouplingGraph};

const STREAM_DATA: u64 = 1;
const STREAM_REFERENCE: u64 = 2;
const STREAM_NOISE: u64 = 3;
const STREAM_TRAIN: u64 = 4;
const STREAM_SAMPLE: u64 = 5;
const STREAM_EVAL: u64 = 6;
const STREAM_FORWARD_REF: u64 = 7;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_ORACLE: i32 = 3;

fn mode_key(mode: DiffusionMode) -> u64 {
    match mode {
        DiffusionMode::Independent => 0,
        DiffusionMode::Correlated => 1,
    }
}

fn stream(seed: u64, parts: &[u64]) -> RandomStream {
    RandomStream::new(seed, derive_stream_id(parts))
}

/// Training data and, when configured, a held-out reference ensemble.
pub fn generate(cfg: &RunConfig) -> Result<(SpinDataset, Option<SpinDataset>)> {
    let graph = cfg.graph()?;
    let protocol = cfg.protocol();
    let meta = format!(
        "{} beta={:?} {}",
        cfg.lattice.describe(),
        cfg.data.beta,
        protocol.describe()
    );
    let data = generate_equilibrium_dataset(
        &graph,
        cfg.data.beta,
        &protocol,
        cfg.data.count,
        &stream(cfg.seeds.data, &[STREAM_DATA]),
        meta.clone(),
    )?;
    let reference = if cfg.data.reference_count > 0 {
        Some(generate_equilibrium_dataset(
            &graph,
            cfg.data.beta,
            &protocol,
            cfg.data.reference_count,
            &stream(cfg.seeds.data, &[STREAM_REFERENCE]),
            meta,
        )?)
    } else {
        None
    };
    Ok((data, reference))
}

/// Noises `dataset` with the mode's forward process and fits a denoiser.
pub fn train_denoiser(
    cfg: &RunConfig,
    mode: DiffusionMode,
    dataset: &SpinDataset,
) -> Result<TrainingOutcome> {
    let graph = cfg.graph()?;
    dataset.check_sites(graph.n_sites())?;
    let schedule = cfg.schedule(mode)?.betas()?;
    let pairs = build_training_set(
        dataset,
        &graph,
        &schedule,
        mode,
        &stream(cfg.seeds.train, &[STREAM_NOISE, mode_key(mode)]),
    )?;
    train(
        &pairs,
        cfg.denoiser.width,
        &cfg.denoiser.training,
        &stream(cfg.seeds.train, &[STREAM_TRAIN, mode_key(mode)]),
    )
}

/// `count` reverse trajectories; trajectory `k` uses its own substream so
/// the result does not depend on the worker count.
pub fn sample_trajectories(
    cfg: &RunConfig,
    mode: DiffusionMode,
    params: &DenoiserParameters,
    count: usize,
) -> Result<Vec<DiffusionTrajectory>> {
    let graph = cfg.graph()?;
    if params.n_sites() != graph.n_sites() {
        return Err(Error::SizeMismatch {
            expected: graph.n_sites(),
            got: params.n_sites(),
        });
    }
    let spec = cfg.schedule(mode)?;
    let base = stream(cfg.seeds.inference, &[STREAM_SAMPLE, mode_key(mode)]);
    let order = SweepOrder::identity(graph.n_sites());
    match mode {
        DiffusionMode::Independent => {
            let kernel = CumulativeKernel::from_etas(spec.etas()?.etas())?;
            (0..count)
                .into_par_iter()
                .map(|k| {
                    let states = independent_reverse_trajectory(
                        params,
                        &kernel,
                        &mut base.substream(&[k as u64]),
                    )?;
                    Ok(DiffusionTrajectory {
                        states,
                        direction: Direction::Reverse,
                        ess: Vec::new(),
                    })
                })
                .collect()
        }
        DiffusionMode::Correlated => {
            let schedule = spec.betas()?;
            (0..count)
                .into_par_iter()
                .map(|k| {
                    reverse_trajectory_with(
                        params,
                        mode.kernel(&graph),
                        &schedule,
                        &order,
                        cfg.diffusion.n_chains,
                        &base.substream(&[k as u64]),
                    )
                })
                .collect()
        }
    }
}

/// Forward trajectories of `reference` records under the mode's process,
/// the baseline for per-timestep comparisons.
pub fn forward_reference(
    cfg: &RunConfig,
    mode: DiffusionMode,
    reference: &SpinDataset,
) -> Result<Vec<DiffusionTrajectory>> {
    let graph = cfg.graph()?;
    reference.check_sites(graph.n_sites())?;
    let schedule = cfg.schedule(mode)?.betas()?;
    let order = SweepOrder::identity(graph.n_sites());
    let base = stream(cfg.seeds.inference, &[STREAM_FORWARD_REF, mode_key(mode)]);
    (0..reference.len())
        .into_par_iter()
        .map(|r| {
            forward_noise_with(
                mode.kernel(&graph),
                &reference.record(r),
                &schedule,
                &order,
                &mut base.substream(&[r as u64]),
            )
        })
        .collect()
}

pub fn final_samples(
    trajs: &[DiffusionTrajectory],
    seed: u64,
    metadata: &str,
) -> Result<SpinDataset> {
    let finals: Vec<_> = trajs.iter().map(|t| t.final_sample().clone()).collect();
    SpinDataset::from_records(&finals, seed, metadata)
}

/// Generated minus forward-reference mean magnetization at each `t`.
pub fn magnetization_bias(generated: &[TimestepStats], reference: &[TimestepStats]) -> Vec<f64> {
    generated
        .iter()
        .zip(reference)
        .map(|(g, r)| g.m.0 - r.m.0)
        .collect()
}

// ---- command line ----

#[derive(Parser, Debug)]
#[command(
    name = "corrdiff",
    version,
    about = "Correlated diffusion on Ising spin systems"
)]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides every seed in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate the equilibrium training dataset (and reference ensemble).
    GenData,
    /// Train a denoiser for one diffusion mode.
    Train(ModeArgs),
    /// Generate samples by reverse diffusion.
    Sample(SampleArgs),
    /// Compare generated samples with the reference ensemble.
    Eval(EvalArgs),
    /// Run the exact small-system consistency suite.
    OracleCheck(OracleArgs),
    /// Measure random-number throughput.
    RngBench(BenchArgs),
}

#[derive(Args, Debug)]
pub struct ModeArgs {
    #[arg(long, value_enum, default_value = "correlated")]
    pub mode: DiffusionMode,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long, value_enum, default_value = "correlated")]
    pub mode: DiffusionMode,
    /// Number of trajectories (default: diffusion.samples).
    #[arg(long)]
    pub count: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long, value_enum, default_value = "correlated")]
    pub mode: DiffusionMode,
    /// Generated dataset (default: generated-<mode>.bin in the output directory).
    #[arg(long)]
    pub generated: Option<PathBuf>,
    /// Reference dataset (default: reference.bin in the output directory).
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long, default_value_t = 12)]
    pub energy_bins: usize,
    #[arg(long, default_value_t = 16)]
    pub overlap_bins: usize,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 2)]
    pub n_sites: usize,
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub coupling: f64,
    /// Negative control: evaluate likelihoods in a permuted order.
    #[arg(long)]
    pub permute_order: bool,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value = "lfsr32")]
    pub generator: BenchGenerator,
    #[arg(long, default_value_t = 1.0)]
    pub seconds: f64,
}

struct Ctx {
    cfg: Option<RunConfig>,
}

impl Ctx {
    fn cfg(&self) -> Result<&RunConfig> {
        self.cfg
            .as_ref()
            .ok_or_else(|| Error::Config("this command needs --config".into()))
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Diverged { .. } | Error::InconsistentEvidence(_) => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cli: &Cli) -> Result<i32> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::InvalidArgument("--threads must be >= 1".into()));
        }
        // a pool configured earlier in the process is kept
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    let cfg = match &cli.config {
        Some(p) => {
            let mut c = RunConfig::load(p)?;
            if let Some(s) = cli.seed {
                c.seeds = Seeds::all(s);
            }
            if let Some(o) = &cli.out {
                c.paths.out_dir = o.clone();
            }
            Some(c)
        }
        None => None,
    };
    let ctx = Ctx { cfg };
    match &cli.command {
        Command::GenData => cmd_gen_data(ctx.cfg()?),
        Command::Train(a) => cmd_train(ctx.cfg()?, a.mode),
        Command::Sample(a) => cmd_sample(ctx.cfg()?, a.mode, a.count),
        Command::Eval(a) => cmd_eval(ctx.cfg()?, a),
        Command::OracleCheck(a) => cmd_oracle_check(a, cli.seed.unwrap_or(0)),
        Command::RngBench(a) => cmd_rng_bench(a, cli.seed.unwrap_or(1)),
    }
}

fn ensure_out(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.paths.out_dir)?;
    Ok(())
}

fn dataset_summary(
    tag: &str,
    path: &Path,
    ds: &SpinDataset,
    graph: &CouplingGraph,
) -> Result<String> {
    let e: Vec<f64> = ds
        .records()
        .map(|r| energy(&r, graph).map(|e| e / ds.n_sites() as f64))
        .collect::<Result<_>>()?;
    let am: Vec<f64> = ds
        .records()
        .map(|r| crate::spin::magnetization(&r).abs())
        .collect();
    let (em, ese) = mean_se(&e);
    let (amm, amse) = mean_se(&am);
    Ok(format!(
        "{tag}.path = {}\n{tag}.count = {}\n{tag}.energy_per_spin = {em:.6}\n{tag}.energy_per_spin_se = {ese:.6}\n{tag}.abs_m = {amm:.6}\n{tag}.abs_m_se = {amse:.6}\n",
        path.display(),
        ds.len()
    ))
}

pub fn cmd_gen_data(cfg: &RunConfig) -> Result<i32> {
    ensure_out(cfg)?;
    let graph = cfg.graph()?;
    let (data, reference) = generate(cfg)?;
    let path = cfg.out_path("dataset.bin");
    data.write(&path)?;
    let mut out = dataset_summary("dataset", &path, &data, &graph)?;
    if let Some(r) = reference {
        let rp = cfg.out_path("reference.bin");
        r.write(&rp)?;
        out.push_str(&dataset_summary("reference", &rp, &r, &graph)?);
    }
    fs::write(cfg.out_path("couplings.txt"), graph.to_text())?;
    print!("{out}");
    Ok(EXIT_OK)
}

fn load_dataset(cfg: &RunConfig) -> Result<SpinDataset> {
    let path = cfg
        .paths
        .dataset
        .clone()
        .unwrap_or_else(|| cfg.out_path("dataset.bin"));
    if !path.is_file() {
        return Err(Error::Config(format!(
            "dataset {} not found (run gen-data first)",
            path.display()
        )));
    }
    let ds = SpinDataset::read(&path)?;
    ds.check_sites(cfg.lattice.n_sites())?;
    Ok(ds)
}

fn checkpoint_path(cfg: &RunConfig, mode: DiffusionMode) -> PathBuf {
    cfg.out_path(&format!("checkpoint-{}.bin", mode.name()))
}

pub fn cmd_train(cfg: &RunConfig, mode: DiffusionMode) -> Result<i32> {
    ensure_out(cfg)?;
    let ds = load_dataset(cfg)?;
    let outcome = train_denoiser(cfg, mode, &ds)?;
    let ck = checkpoint_path(cfg, mode);
    fs::write(&ck, outcome.params.to_bytes())?;
    let curve = cfg.out_path(&format!("loss-{}.csv", mode.name()));
    fs::write(&curve, outcome.curve_csv())?;
    let best = outcome.curve.iter().find(|e| e.epoch == outcome.best_epoch);
    println!("checkpoint = {}", ck.display());
    println!("loss_csv = {}", curve.display());
    println!("epochs = {}", outcome.curve.len());
    println!("best_epoch = {}", outcome.best_epoch);
    if let Some(b) = best {
        println!("best_val_bce = {:.6}", b.val_bce);
    }
    Ok(EXIT_OK)
}

fn load_checkpoint(cfg: &RunConfig, mode: DiffusionMode) -> Result<DenoiserParameters> {
    let ck = checkpoint_path(cfg, mode);
    if !ck.is_file() {
        return Err(Error::Config(format!(
            "checkpoint {} not found (run train first)",
            ck.display()
        )));
    }
    let params = DenoiserParameters::from_bytes(&fs::read(&ck)?)?;
    if params.n_sites() != cfg.lattice.n_sites() {
        return Err(Error::Config(format!(
            "checkpoint has {} sites, lattice has {}",
            params.n_sites(),
            cfg.lattice.n_sites()
        )));
    }
    Ok(params)
}

pub fn cmd_sample(cfg: &RunConfig, mode: DiffusionMode, count: Option<usize>) -> Result<i32> {
    ensure_out(cfg)?;
    let graph = cfg.graph()?;
    if mode == DiffusionMode::Independent && !graph.edges().is_empty() {
        eprintln!("warning: independent mode ignores the lattice couplings");
    }
    let params = load_checkpoint(cfg, mode)?;
    let count = count.unwrap_or(cfg.diffusion.samples);
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    let trajs = sample_trajectories(cfg, mode, &params, count)?;
    let meta = format!("generated {} from {}", mode.name(), cfg.lattice.describe());
    let gen = final_samples(&trajs, cfg.seeds.inference, &meta)?;
    let gp = cfg.out_path(&format!("generated-{}.bin", mode.name()));
    gen.write(&gp)?;

    let mut csv = format!("{TRAJECTORY_CSV_HEADER}\n");
    for (k, tr) in trajs.iter().enumerate() {
        write_trajectory_csv(&mut csv, k, tr, &graph)?;
    }
    let tp = cfg.out_path(&format!("trajectories-{}.csv", mode.name()));
    fs::write(&tp, csv)?;
    let sp = cfg.out_path(&format!("timesteps-{}.csv", mode.name()));
    fs::write(&sp, timestep_csv(&timestep_stats(&trajs, &graph)?))?;
    print!("{}", dataset_summary("generated", &gp, &gen, &graph)?);
    println!("trajectories_csv = {}", tp.display());
    println!("timesteps_csv = {}", sp.display());
    Ok(EXIT_OK)
}

pub fn cmd_eval(cfg: &RunConfig, args: &EvalArgs) -> Result<i32> {
    ensure_out(cfg)?;
    let graph = cfg.graph()?;
    let gp = args
        .generated
        .clone()
        .unwrap_or_else(|| cfg.out_path(&format!("generated-{}.bin", args.mode.name())));
    let rp = args
        .reference
        .clone()
        .unwrap_or_else(|| cfg.out_path("reference.bin"));
    for p in [&gp, &rp] {
        if !p.is_file() {
            return Err(Error::Config(format!("{} not found", p.display())));
        }
    }
    let generated = SpinDataset::read(&gp)?;
    let reference = SpinDataset::read(&rp)?;
    let bins = EvalBins {
        energy: args.energy_bins,
        overlap: args.overlap_bins,
    };
    let report = evaluate(
        &generated,
        &reference,
        &graph,
        bins,
        &stream(cfg.seeds.inference, &[STREAM_EVAL]),
    )?;
    let hp = cfg.out_path(&format!("eval-{}.csv", args.mode.name()));
    fs::write(&hp, report.histogram_csv())?;
    let mut summary = report.summary_text();
    writeln!(summary, "histogram_csv = {}", hp.display()).unwrap();

    let ref_stats = timestep_stats(&forward_reference(cfg, args.mode, &reference)?, &graph)?;
    let rsp = cfg.out_path(&format!("timesteps-reference-{}.csv", args.mode.name()));
    fs::write(&rsp, timestep_csv(&ref_stats))?;
    writeln!(summary, "reference_timesteps_csv = {}", rsp.display()).unwrap();
    fs::write(
        cfg.out_path(&format!("eval-{}.txt", args.mode.name())),
        &summary,
    )?;
    print!("{summary}");
    Ok(EXIT_OK)
}

pub fn cmd_oracle_check(args: &OracleArgs, seed: u64) -> Result<i32> {
    let cfg = OracleCheckConfig {
        n_sites: args.n_sites,
        trials: args.trials,
        beta: args.beta,
        coupling: args.coupling,
        seed,
        permute_order: args.permute_order,
    };
    let report = run_oracle_check(&cfg)?;
    print!("{}", report.to_csv());
    println!("status = {}", if report.passed() { "pass" } else { "fail" });
    Ok(if report.passed() {
        EXIT_OK
    } else {
        EXIT_ORACLE
    })
}

pub fn cmd_rng_bench(args: &BenchArgs, seed: u64) -> Result<i32> {
    let (draws, rate) = bench_for(args.generator, args.seconds, seed)?;
    let name = args.generator.name();
    println!("generator,samples,samples_per_sec");
    println!("{name},{draws},{rate:.0}");
    Ok(EXIT_OK)
}
