//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! `cargo test --test acceptance` runs everything; pass criterion numbers
//! (`cargo test --test acceptance -- 1 4 7`) to run a subset.

#![allow(clippy::needless_range_loop)]

use std::process::ExitCode;
use std::time::Instant;

use corrdiff::checks::{run_oracle_check, OracleCheckConfig};
use corrdiff::commands::{
    final_samples, forward_reference, generate, magnetization_bias, sample_trajectories,
    train_denoiser,
};
use corrdiff::correlated::{gibbs_cost, reverse_step};
use corrdiff::datastore::{DiffusionMode, RunConfig};
use corrdiff::denoiser::{ConstantDenoiser, DenoiserParameters};
use corrdiff::eval::{evaluate, timestep_stats, EvalBins};
use corrdiff::gbit::{
    build_internal_rep, gbit_gibbs_update, gbit_sweep, sample_internal_g, GbitNetwork,
};
use corrdiff::independent::reverse_posterior_independent;
use corrdiff::lfsr::{bench_for, BenchGenerator, Lfsr32, Lfsr8};
use corrdiff::oracle::{exact_reverse_posterior, sweep_matrix};
use corrdiff::pbit::{
    beta_to_eta, eta_to_beta, gibbs_sweep, sweep_log_likelihood, BetaSchedule, SweepOrder,
};
use corrdiff::{CouplingGraph, RandomStream, SpinConfiguration};
use ndarray::Array2;
use statrs::distribution::{ContinuousCDF, Normal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---- independent reference helpers ----

/// Conditional `P(s_i = v | rest)` from the Boltzmann energy difference.
fn site_prob(graph: &CouplingGraph, spins: &[i8], i: usize, v: i8, beta: f64) -> f64 {
    let mut field = graph.biases()[i];
    for e in graph.edges() {
        if e.i == i {
            field += e.coupling * spins[e.j] as f64;
        } else if e.j == i {
            field += e.coupling * spins[e.i] as f64;
        }
    }
    // exp(β v I) / (exp(β I) + exp(-β I))
    let x = beta * field * v as f64;
    1.0 / (1.0 + (-2.0 * x).exp())
}

/// One identity-order sweep probability, by direct multiplication.
fn sweep_prob(graph: &CouplingGraph, prev: usize, next: usize, beta: f64) -> f64 {
    let n = graph.n_sites();
    let mut cur = SpinConfiguration::from_index(prev, n).spins().to_vec();
    let target = SpinConfiguration::from_index(next, n);
    let mut p = 1.0;
    for i in 0..n {
        p *= site_prob(graph, &cur, i, target.get(i), beta);
        cur[i] = target.get(i);
    }
    p
}

fn random_graph(n: usize, rng: &mut RandomStream) -> CouplingGraph {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            edges.push((a, b, rng.uniform_pm1()));
        }
    }
    CouplingGraph::new(n, edges, vec![0.0; n]).unwrap()
}

// ---- criteria ----

fn c1_oracle_equivalence() -> Outcome {
    let mut rng = RandomStream::new(101, 0);
    let mut lik_dev: f64 = 0.0;
    let mut post_dev: f64 = 0.0;
    for n in [2usize, 3] {
        for _ in 0..5 {
            let g = random_graph(n, &mut rng);
            let order = SweepOrder::identity(n);
            let dim = 1usize << n;
            for beta in [0.0, 0.5, 1.0, 2.0] {
                let w = sweep_matrix(&g, beta, &order).unwrap();
                for src in 0..dim {
                    for dst in 0..dim {
                        let ll = sweep_log_likelihood(
                            &g,
                            &SpinConfiguration::from_index(src, n),
                            &SpinConfiguration::from_index(dst, n),
                            beta,
                            &order,
                        )
                        .unwrap();
                        lik_dev = lik_dev.max((ll.exp() - w.get(dst, src)).abs());
                    }
                }
            }
            // posterior against explicit path sums
            let betas = vec![2.0, 1.0, 0.5];
            let sched = BetaSchedule::new(betas.clone()).unwrap();
            for t in 1..=3usize {
                for s0 in 0..dim {
                    for st in 0..dim {
                        let mut un = vec![0.0; dim];
                        // all paths s0 -> x1 -> ... -> x_{t-1}
                        let paths = dim.pow((t - 1) as u32);
                        for code in 0..paths {
                            let mut prev = s0;
                            let mut p = 1.0;
                            let mut c = code;
                            for &beta in betas.iter().take(t - 1) {
                                let x = c % dim;
                                c /= dim;
                                p *= sweep_prob(&g, prev, x, beta);
                                prev = x;
                            }
                            un[prev] += p * sweep_prob(&g, prev, st, betas[t - 1]);
                        }
                        let z: f64 = un.iter().sum();
                        let exact = exact_reverse_posterior(
                            &g,
                            &SpinConfiguration::from_index(st, n),
                            &SpinConfiguration::from_index(s0, n),
                            t,
                            &sched,
                            &order,
                        )
                        .unwrap();
                        for x in 0..dim {
                            post_dev = post_dev.max((un[x] / z - exact.probs()[x]).abs());
                        }
                    }
                }
            }
        }
    }
    outcome(
        lik_dev < 1e-12 && post_dev < 1e-12,
        format!(
            "max |likelihood - matrix| = {lik_dev:.2e}, max |posterior - paths| = {post_dev:.2e}"
        ),
    )
}

fn c2_sampler_vs_matrix() -> Outcome {
    let g = CouplingGraph::new(2, vec![(0, 1, 1.0)], vec![0.0; 2]).unwrap();
    let order = SweepOrder::identity(2);
    let w = sweep_matrix(&g, 1.0, &order).unwrap();
    let q = (1.0 + 1f64.tanh()) / 2.0;
    let corner = (w.get(3, 3) - q * q).abs();
    let trials = 100_000;
    let mut worst: f64 = 0.0;
    for src in 0..4 {
        let start = SpinConfiguration::from_index(src, 2);
        let mut rng = RandomStream::new(202, src as u64);
        let mut counts = [0usize; 4];
        for _ in 0..trials {
            counts[gibbs_sweep(&g, &start, 1.0, &order, &mut rng)
                .unwrap()
                .to_index()] += 1;
        }
        let tv: f64 = (0..4)
            .map(|x| (counts[x] as f64 / trials as f64 - w.get(x, src)).abs())
            .sum::<f64>()
            / 2.0;
        worst = worst.max(tv);
    }
    outcome(
        worst < 0.01 && corner < 1e-12,
        format!(
            "max column TV = {worst:.4} (< 0.01), W(++,++) = {:.6} vs q^2 = {:.6}",
            w.get(3, 3),
            q * q
        ),
    )
}

fn c3_independent_limit() -> Outcome {
    let n = 8;
    let trials = 100_000usize;
    let order = SweepOrder::identity(n);
    let beta = 0.6;
    let eta = beta_to_eta(beta);
    let mut rng = RandomStream::new(303, 0);
    let mut flips = vec![0usize; n];
    let mut prev = SpinConfiguration::all_up(n);
    for k in 0..trials {
        if k % 2 == 1 {
            prev = corrdiff::pbit::sample_uniform_config(n, &mut rng).unwrap();
        }
        let g = CouplingGraph::self_bias(&prev);
        let next = gibbs_sweep(&g, &prev, beta, &order, &mut rng).unwrap();
        for i in 0..n {
            flips[i] += usize::from(next.get(i) != prev.get(i));
        }
    }
    let sd = (eta * (1.0 - eta) / trials as f64).sqrt();
    let worst_z = flips
        .iter()
        .map(|&f| ((f as f64 / trials as f64) - eta).abs() / sd)
        .fold(0.0, f64::max);

    // composed kernel over an η schedule
    let etas = [0.05, 0.1, 0.2, 0.3];
    let betas: Vec<f64> = etas.iter().map(|&e| eta_to_beta(e).unwrap()).collect();
    let mut same = vec![vec![0usize; n]; etas.len()];
    for _ in 0..trials {
        let s0 = corrdiff::pbit::sample_uniform_config(n, &mut rng).unwrap();
        let mut cur = s0.clone();
        for (t, &b) in betas.iter().enumerate() {
            let g = CouplingGraph::self_bias(&cur);
            cur = gibbs_sweep(&g, &cur, b, &order, &mut rng).unwrap();
            for i in 0..n {
                same[t][i] += usize::from(cur.get(i) == s0.get(i));
            }
        }
    }
    let mut lambda = 1.0;
    let mut worst_z2: f64 = 0.0;
    for (t, &e) in etas.iter().enumerate() {
        lambda *= 1.0 - 2.0 * e;
        let p = (1.0 + lambda) / 2.0;
        let sd = (p * (1.0 - p) / trials as f64).sqrt();
        for &c in &same[t] {
            worst_z2 = worst_z2.max(((c as f64 / trials as f64) - p).abs() / sd);
        }
    }
    // 8 sites x 4 steps of 3-sigma tests: allow no exceedance
    outcome(
        worst_z < 3.0 && worst_z2 < 3.0,
        format!("flip frequency max |z| = {worst_z:.2}, composed kernel max |z| = {worst_z2:.2} (both < 3)"),
    )
}

fn c4_closed_form_posterior() -> Outcome {
    let mut worst: f64 = 0.0;
    let step = |to: i8, from: i8, a: f64| 0.5 * (1.0 + a * (to * from) as f64);
    for ia in 0..100 {
        let a = ia as f64 / 100.0;
        for il in 0..=100 {
            let lam = il as f64 / 100.0;
            for st in [-1i8, 1] {
                for s0 in [-1i8, 1] {
                    let num = step(st, 1, a) * step(1, s0, lam);
                    let den = num + step(st, -1, a) * step(-1, s0, lam);
                    if den == 0.0 {
                        continue;
                    }
                    let got = reverse_posterior_independent(a, lam, st, s0).unwrap();
                    worst = worst.max((got - num / den).abs());
                }
            }
        }
    }
    outcome(
        worst < 1e-12,
        format!("max deviation from Bayes = {worst:.2e} over 40400 grid points"),
    )
}

fn c5_eta_beta() -> Outcome {
    let mut worst: f64 = 0.0;
    let k = 100_000;
    for i in 0..=k {
        let eta = 1e-3 + (0.5 - 1e-3) * i as f64 / k as f64;
        let back = beta_to_eta(eta_to_beta(eta).unwrap());
        worst = worst.max((back - eta).abs());
    }
    let b = eta_to_beta(0.25).unwrap();
    outcome(
        worst < 1e-12 && (b - 0.5f64.atanh()).abs() < 1e-15,
        format!("max round-trip error = {worst:.2e}, beta(0.25) = {b:.6}"),
    )
}

fn c6_algorithm_consistency() -> Outcome {
    let g = CouplingGraph::new(2, vec![(0, 1, 1.0)], vec![0.0; 2]).unwrap();
    let order = SweepOrder::identity(2);
    let sched = BetaSchedule::new(vec![1.0, 0.8, 0.6]).unwrap();
    let s0 = SpinConfiguration::new(vec![1, -1]).unwrap();
    let st = SpinConfiguration::new(vec![1, 1]).unwrap();
    let t = 3;
    let den = ConstantDenoiser::pinned(&s0);
    let exact = exact_reverse_posterior(&g, &st, &s0, t, &sched, &order).unwrap();

    let steps = 10_000;
    let mut counts = [0usize; 4];
    for k in 0..steps {
        let rng = RandomStream::new(606, k as u64);
        let (prev, _) = reverse_step(&st, t, &den, &g, &sched, &order, 512, &rng).unwrap();
        counts[prev.to_index()] += 1;
    }
    let tv: f64 = (0..4)
        .map(|x| (counts[x] as f64 / steps as f64 - exact.probs()[x]).abs())
        .sum::<f64>()
        / 2.0;

    // ensemble-weight TV against the exact posterior, averaged per seed
    let chain_counts = [16usize, 32, 64, 128, 256, 512];
    let seeds = 20;
    let per_seed = 50;
    let mut means = Vec::new();
    let mut ses = Vec::new();
    for &nc in &chain_counts {
        let vals: Vec<f64> = (0..seeds)
            .map(|s| {
                (0..per_seed)
                    .map(|k| {
                        let rng = RandomStream::new(6060 + s as u64, (nc * 1000 + k) as u64);
                        let (_, ens) =
                            reverse_step(&st, t, &den, &g, &sched, &order, nc, &rng).unwrap();
                        let mut dist = [0.0; 4];
                        for (c, w) in ens.candidates.iter().zip(ens.normalized_weights()) {
                            dist[c.config.to_index()] += w;
                        }
                        (0..4)
                            .map(|x| (dist[x] - exact.probs()[x]).abs())
                            .sum::<f64>()
                            / 2.0
                    })
                    .sum::<f64>()
                    / per_seed as f64
            })
            .collect();
        let m = vals.iter().sum::<f64>() / seeds as f64;
        let var = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (seeds - 1) as f64;
        means.push(m);
        ses.push((var / seeds as f64).sqrt());
    }
    let monotone = (1..means.len())
        .all(|k| means[k] <= means[k - 1] + 2.0 * (ses[k].powi(2) + ses[k - 1].powi(2)).sqrt());
    let trend: Vec<String> = chain_counts
        .iter()
        .zip(&means)
        .map(|(nc, m)| format!("{nc}:{m:.4}"))
        .collect();
    outcome(
        tv < 0.05 && monotone,
        format!(
            "output TV = {tv:.4} (< 0.05); mean ensemble TV by n_chains {}",
            trend.join(" ")
        ),
    )
}

fn c7_cost() -> Outcome {
    let c = gibbs_cost(100, 10);
    outcome(c == 49_500, format!("gibbs_cost(100, 10) = {c}"))
}

fn c8_gradient_check() -> Outcome {
    let (n, width, batch) = (8, 16, 6);
    let mut rng = RandomStream::new(808, 0);
    let params = DenoiserParameters::init(n, width, &mut rng);
    let x = Array2::from_shape_fn((batch, n), |_| {
        if rng.next_u64() >> 63 == 1 {
            1.0
        } else {
            -1.0
        }
    });
    let y = Array2::from_shape_fn((batch, n), |_| (rng.next_u64() >> 63) as f64);
    let (_, grad) = params.loss_and_grad(x.view(), y.view());

    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut worst_abs: f64 = 0.0;
    let fd = |p: &DenoiserParameters| p.loss_and_grad(x.view(), y.view()).0;
    macro_rules! check {
        ($field:ident) => {
            for k in 0..params.$field.len() {
                let mut plus = params.clone();
                let mut minus = params.clone();
                plus.$field.as_slice_mut().unwrap()[k] += h;
                minus.$field.as_slice_mut().unwrap()[k] -= h;
                let num = (fd(&plus) - fd(&minus)) / (2.0 * h);
                let ana = grad.$field.as_slice().unwrap()[k];
                let scale = num.abs().max(ana.abs());
                worst_abs = worst_abs.max((num - ana).abs());
                // below 1e-6 the finite difference itself is the noise
                if scale > 1e-6 {
                    worst = worst.max((num - ana).abs() / scale);
                }
            }
        };
    }
    check!(w1);
    check!(b1);
    check!(w2);
    check!(b2);
    check!(w3);
    check!(b3);
    outcome(
        worst < 1e-4,
        format!("max relative error = {worst:.2e}, max absolute error = {worst_abs:.2e}"),
    )
}

fn desk_config(text: &str) -> RunConfig {
    let mut cfg = RunConfig::from_toml(text).expect("desk config parses");
    cfg.paths.out_dir = std::env::temp_dir();
    cfg
}

fn c9_desk_2d() -> Outcome {
    let cfg = desk_config(include_str!("../configs/desk_ferro2d.toml"));
    let graph = cfg.graph().unwrap();
    let clock = Instant::now();
    let (data, reference) = generate(&cfg).unwrap();
    let reference = reference.expect("config sets reference_count");
    eprintln!(
        "  [9] data generated in {:.0} s",
        clock.elapsed().as_secs_f64()
    );

    let mut gen = Vec::new();
    let mut bias = Vec::new();
    for mode in [DiffusionMode::Correlated, DiffusionMode::Independent] {
        let clock = Instant::now();
        let trained = train_denoiser(&cfg, mode, &data).unwrap();
        eprintln!(
            "  [9] {} denoiser: {} epochs, best val BCE {:.3} ({:.0} s)",
            mode.name(),
            trained.curve.len(),
            trained.curve[trained.best_epoch - 1].val_bce,
            clock.elapsed().as_secs_f64()
        );
        let trajs =
            sample_trajectories(&cfg, mode, &trained.params, cfg.diffusion.samples).unwrap();
        let stats = timestep_stats(&trajs, &graph).unwrap();
        let fwd =
            timestep_stats(&forward_reference(&cfg, mode, &reference).unwrap(), &graph).unwrap();
        for t in 0..4 {
            eprintln!(
                "  [9] {} t={t}: E/N {:.4} (fwd ref {:.4}), m {:+.4} (fwd ref {:+.4})",
                mode.name(),
                stats[t].energy.0,
                fwd[t].energy.0,
                stats[t].m.0,
                fwd[t].m.0
            );
        }
        bias.push(magnetization_bias(&stats, &fwd));
        gen.push(final_samples(&trajs, 0, mode.name()).unwrap());
    }
    let rep = evaluate(
        &gen[0],
        &reference,
        &graph,
        EvalBins::default(),
        &RandomStream::new(9, 9),
    )
    .unwrap();
    let ind = evaluate(
        &gen[1],
        &reference,
        &graph,
        EvalBins::default(),
        &RandomStream::new(9, 9),
    )
    .unwrap();
    let e_ok = rep.energy_rel_error() < 0.05;
    let m_bias = (rep.generated.m.0 - rep.reference.m.0).abs();
    let m_ok = m_bias <= rep.reference.m_spread;
    let small_t_ok = (0..3).all(|t| bias[0][t].abs() < bias[1][t].abs());
    outcome(
        e_ok && m_ok && small_t_ok,
        format!(
            "E/N correlated {:.4} vs reference {:.4} (rel err {:.3}, < 0.05), independent {:.4}; |m bias| {:.3} vs spread {:.3}; |bias| t=0..2 correlated [{:.3} {:.3} {:.3}] independent [{:.3} {:.3} {:.3}]",
            rep.generated.energy.0,
            rep.reference.energy.0,
            rep.energy_rel_error(),
            ind.generated.energy.0,
            m_bias,
            rep.reference.m_spread,
            bias[0][0].abs(),
            bias[0][1].abs(),
            bias[0][2].abs(),
            bias[1][0].abs(),
            bias[1][1].abs(),
            bias[1][2].abs()
        ),
    )
}

fn c10_desk_3d() -> Outcome {
    let cfg = desk_config(include_str!("../configs/desk_ea3d.toml"));
    let graph = cfg.graph().unwrap();
    let bonds = graph.edges().len();
    let clock = Instant::now();
    let (data, reference) = generate(&cfg).unwrap();
    let reference = reference.expect("config sets reference_count");
    eprintln!(
        "  [10] data generated in {:.0} s",
        clock.elapsed().as_secs_f64()
    );
    let clock = Instant::now();
    let trained = train_denoiser(&cfg, DiffusionMode::Correlated, &data).unwrap();
    eprintln!(
        "  [10] denoiser: {} epochs, best val BCE {:.3} ({:.0} s)",
        trained.curve.len(),
        trained.curve[trained.best_epoch - 1].val_bce,
        clock.elapsed().as_secs_f64()
    );
    let clock = Instant::now();
    let trajs = sample_trajectories(
        &cfg,
        DiffusionMode::Correlated,
        &trained.params,
        cfg.diffusion.samples,
    )
    .unwrap();
    eprintln!(
        "  [10] {} samples in {:.0} s",
        trajs.len(),
        clock.elapsed().as_secs_f64()
    );
    let gen = final_samples(&trajs, 0, "correlated").unwrap();
    let rep = evaluate(
        &gen,
        &reference,
        &graph,
        EvalBins::default(),
        &RandomStream::new(10, 10),
    )
    .unwrap();
    let ok = bonds == 144
        && rep.energy_tv < 0.15
        && rep.generated.mean_q.abs() < 0.1
        && rep.overlap_tv < 0.25;
    outcome(
        ok,
        format!(
            "{bonds} bonds; energy TV {:.3} (< 0.15), E/N {:.4} vs {:.4}; mean q {:+.3} (|.| < 0.1); P(q) TV {:.3} (< 0.25)",
            rep.energy_tv, rep.generated.energy.0, rep.reference.energy.0, rep.generated.mean_q, rep.overlap_tv
        ),
    )
}

fn c11_gbit() -> Outcome {
    // normality of an uncoupled unit
    let net = GbitNetwork::uncoupled(vec![0.5], vec![2.0]).unwrap();
    let mut rng = RandomStream::new(1111, 0);
    let mut state = vec![0.0];
    let n = 100_000;
    let mut xs: Vec<f64> = (0..n)
        .map(|_| gbit_gibbs_update(&net, &mut state, 0, &mut rng).unwrap())
        .collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let normal = Normal::new(0.5, 2.0).unwrap();
    let ks = xs
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let c = normal.cdf(x);
            (c - k as f64 / n as f64)
                .abs()
                .max(((k + 1) as f64 / n as f64 - c).abs())
        })
        .fold(0.0, f64::max);
    let ks_crit = 1.628 / (n as f64).sqrt();

    // two coupled units: covariance is the inverse precision [[1,-.5],[-.5,1]]
    let net = GbitNetwork::new(
        vec![0.0; 2],
        vec![1.0; 2],
        vec![vec![0.0, 0.5], vec![0.5, 0.0]],
    )
    .unwrap();
    let mut g = vec![0.0; 2];
    let sweeps = 1_000_000;
    let (mut s0, mut s1, mut s00, mut s11, mut s01) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..sweeps {
        gbit_sweep(&net, &mut g, &mut rng).unwrap();
        s0 += g[0];
        s1 += g[1];
        s00 += g[0] * g[0];
        s11 += g[1] * g[1];
        s01 += g[0] * g[1];
    }
    let m = sweeps as f64;
    let var0 = s00 / m - (s0 / m).powi(2);
    let var1 = s11 / m - (s1 / m).powi(2);
    let cov = s01 / m - (s0 / m) * (s1 / m);
    let cov_ok = [(var0, 4.0 / 3.0), (var1, 4.0 / 3.0), (cov, 2.0 / 3.0)]
        .iter()
        .all(|(got, want)| ((got - want) / want).abs() < 0.02);

    // internal p-bit representation
    let rep = build_internal_rep(3, 4, 2.0, 1.0).unwrap();
    let gs = sample_internal_g(&rep, 1_000_000, &mut rng);
    let gm = gs.iter().sum::<f64>() / gs.len() as f64;
    let gv = gs.iter().map(|x| (x - gm).powi(2)).sum::<f64>() / gs.len() as f64;
    let g_ok = ((gm - 2.0) / 2.0).abs() < 0.05 && (gv - 1.0).abs() < 0.15;
    outcome(
        ks < ks_crit && cov_ok && g_ok,
        format!(
            "KS {ks:.5} (< {ks_crit:.5}); Var {var0:.4} {var1:.4} Cov {cov:.4} (4/3, 2/3 within 2%); internal G mean {gm:.4} (mu 2, within 5%), var {gv:.4} (1, within 15%)"
        ),
    )
}

fn c12_rng() -> Outcome {
    let mut l8 = Lfsr8::new(1).unwrap();
    let mut period = 0;
    loop {
        l8.step();
        period += 1;
        if l8.state() == 1 || period > 300 {
            break;
        }
    }
    let run = |seed| {
        let mut r = Lfsr32::new(seed).unwrap();
        (0..1000).map(|_| r.step()).collect::<Vec<u32>>()
    };
    let deterministic = run(0xace1) == run(0xace1) && run(0xace1) != run(0xace2);
    let (_, lfsr_rate) = bench_for(BenchGenerator::Lfsr32, 0.2, 1).unwrap();
    let (_, stream_rate) = bench_for(BenchGenerator::Stream, 0.2, 1).unwrap();
    outcome(
        period == 255 && deterministic,
        format!(
            "LFSR8 period {period}; LFSR32 deterministic per seed: {deterministic}; throughput lfsr32 {:.2e}/s, stream {:.2e}/s (reported only)",
            lfsr_rate, stream_rate
        ),
    )
}

fn c0_oracle_suite_smoke() -> Outcome {
    // the command-line oracle suite, run here so its negative control is exercised too
    let ok = run_oracle_check(&OracleCheckConfig::default())
        .unwrap()
        .passed();
    let caught = !run_oracle_check(&OracleCheckConfig {
        permute_order: true,
        trials: 1000,
        ..Default::default()
    })
    .unwrap()
    .passed();
    outcome(
        ok && caught,
        format!("default suite passes: {ok}; permuted order flagged: {caught}"),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

const CRITERIA: &[Criterion] = &[
    (1, "oracle equivalence", c1_oracle_equivalence),
    (2, "sampler vs matrix", c2_sampler_vs_matrix),
    (3, "independent-limit recovery", c3_independent_limit),
    (4, "closed-form reverse posterior", c4_closed_form_posterior),
    (5, "eta/beta mapping", c5_eta_beta),
    (6, "reverse step consistency", c6_algorithm_consistency),
    (7, "sweep cost", c7_cost),
    (8, "gradient check", c8_gradient_check),
    (9, "desk-scale 2D end to end", c9_desk_2d),
    (10, "desk-scale 3D end to end", c10_desk_3d),
    (11, "g-bit checks", c11_gbit),
    (12, "RNG microbenchmark", c12_rng),
];

fn main() -> ExitCode {
    let wanted: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    if wanted.is_empty() {
        let o = c0_oracle_suite_smoke();
        println!(
            "oracle-check suite: {} ({})",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    for &(id, name, f) in CRITERIA {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let clock = Instant::now();
        let o = f();
        println!(
            "criterion {id} ({name}): {} [{:.1} s] {}",
            if o.pass { "PASS" } else { "FAIL" },
            clock.elapsed().as_secs_f64(),
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance check(s) failed");
        ExitCode::FAILURE
    }
}
