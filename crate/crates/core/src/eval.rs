//! Ensemble comparison: observables, shared-bin histograms, total-variation
//! distances and the overlap distribution.

use std::fmt::Write as _;

use crate::correlated::DiffusionTrajectory;
use crate::datastore::SpinDataset;
use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::spin::{CouplingGraph, SpinConfiguration};

/// Above this many unordered pairs the overlap uses a random subset.
pub const MAX_OVERLAP_PAIRS: usize = 10_000;

/// Sample mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn energy_per_spin(spins: &[i8], graph: &CouplingGraph) -> f64 {
    let mut e = 0.0;
    for edge in graph.edges() {
        e -= edge.coupling * (spins[edge.i] * spins[edge.j]) as f64;
    }
    for (h, &s) in graph.biases().iter().zip(spins) {
        e -= h * s as f64;
    }
    e / spins.len() as f64
}

fn magnetization_of(spins: &[i8]) -> f64 {
    spins.iter().map(|&s| s as f64).sum::<f64>() / spins.len() as f64
}

fn overlap_of(a: &[i8], b: &[i8]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x * y) as f64).sum::<f64>() / a.len() as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    /// Probability mass per bin, summing to 1.
    pub mass: Vec<f64>,
}

impl Histogram {
    /// Values outside the edges land in the first or last bin.
    pub fn new(values: &[f64], edges: &[f64]) -> Result<Self> {
        if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(
                "histogram edges must be increasing".into(),
            ));
        }
        if values.is_empty() {
            return Err(Error::InvalidArgument("histogram of no values".into()));
        }
        let k = edges.len() - 1;
        let mut counts = vec![0usize; k];
        for &v in values {
            let bin = edges[1..k].partition_point(|&e| e <= v);
            counts[bin] += 1;
        }
        let n = values.len() as f64;
        Ok(Self {
            edges: edges.to_vec(),
            mass: counts.into_iter().map(|c| c as f64 / n).collect(),
        })
    }

    pub fn tv(&self, other: &Histogram) -> Result<f64> {
        if self.edges != other.edges {
            return Err(Error::InvalidArgument(
                "histograms do not share bin edges".into(),
            ));
        }
        Ok(0.5
            * self
                .mass
                .iter()
                .zip(&other.mass)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }
}

/// `n_bins` equal bins spanning both samples.
pub fn shared_edges(a: &[f64], b: &[f64], n_bins: usize) -> Vec<f64> {
    let (lo, hi) = a
        .iter()
        .chain(b)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let (lo, hi) = if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    };
    let pad = 1e-9 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    (0..=n_bins)
        .map(|k| lo + (hi - lo) * k as f64 / n_bins as f64)
        .collect()
}

/// Edges for overlaps of `n_sites` spins: `n_bins` equal bins over [-1, 1].
pub fn overlap_edges(n_bins: usize) -> Vec<f64> {
    (0..=n_bins)
        .map(|k| -1.0 - 1e-9 + (2.0 + 2e-9) * k as f64 / n_bins as f64)
        .collect()
}

/// Overlaps of all unordered pairs, or of `MAX_OVERLAP_PAIRS` random pairs
/// when there are more. The flag reports sampling.
pub fn pair_overlaps(ds: &SpinDataset, rng: &mut RandomStream) -> (Vec<f64>, bool) {
    let n = ds.len();
    let total = n * n.saturating_sub(1) / 2;
    if total <= MAX_OVERLAP_PAIRS {
        let mut q = Vec::with_capacity(total);
        for a in 0..n {
            for b in (a + 1)..n {
                q.push(overlap_of(ds.record_spins(a), ds.record_spins(b)));
            }
        }
        (q, false)
    } else {
        let q = (0..MAX_OVERLAP_PAIRS)
            .map(|_| {
                let a = rng.below(n);
                let mut b = rng.below(n - 1);
                if b >= a {
                    b += 1;
                }
                overlap_of(ds.record_spins(a), ds.record_spins(b))
            })
            .collect();
        (q, true)
    }
}

pub fn energies(ds: &SpinDataset, graph: &CouplingGraph) -> Vec<f64> {
    (0..ds.len())
        .map(|i| energy_per_spin(ds.record_spins(i), graph))
        .collect()
}

pub fn magnetizations(ds: &SpinDataset) -> Vec<f64> {
    (0..ds.len())
        .map(|i| magnetization_of(ds.record_spins(i)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimestepStats {
    pub t: usize,
    pub energy: (f64, f64),
    pub abs_m: (f64, f64),
    pub m: (f64, f64),
}

/// Mean and standard error of E/N, |m| and m at every diffusion time.
pub fn timestep_stats(
    trajs: &[DiffusionTrajectory],
    graph: &CouplingGraph,
) -> Result<Vec<TimestepStats>> {
    let first = trajs
        .first()
        .ok_or_else(|| Error::InvalidArgument("no trajectories".into()))?;
    let t_max = first.t_steps();
    if trajs.iter().any(|tr| tr.t_steps() != t_max) {
        return Err(Error::InvalidArgument(
            "trajectories differ in length".into(),
        ));
    }
    Ok((0..=t_max)
        .map(|t| {
            let states: Vec<&SpinConfiguration> = trajs.iter().map(|tr| &tr.states[t]).collect();
            let e: Vec<f64> = states
                .iter()
                .map(|s| energy_per_spin(s.spins(), graph))
                .collect();
            let m: Vec<f64> = states.iter().map(|s| magnetization_of(s.spins())).collect();
            let am: Vec<f64> = m.iter().map(|v| v.abs()).collect();
            TimestepStats {
                t,
                energy: mean_se(&e),
                abs_m: mean_se(&am),
                m: mean_se(&m),
            }
        })
        .collect())
}

pub const TIMESTEP_CSV_HEADER: &str = "t,energy_per_spin,energy_se,abs_m,abs_m_se,m,m_se";

pub fn timestep_csv(stats: &[TimestepStats]) -> String {
    let mut s = format!("{TIMESTEP_CSV_HEADER}\n");
    for r in stats {
        writeln!(
            s,
            "{},{:?},{:?},{:?},{:?},{:?},{:?}",
            r.t, r.energy.0, r.energy.1, r.abs_m.0, r.abs_m.1, r.m.0, r.m.1
        )
        .unwrap();
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalBins {
    pub energy: usize,
    pub overlap: usize,
}

impl Default for EvalBins {
    fn default() -> Self {
        Self {
            energy: 12,
            overlap: 16,
        }
    }
}

/// Ensemble observable summary for one dataset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleSummary {
    pub count: usize,
    pub energy: (f64, f64),
    pub abs_m: (f64, f64),
    pub m: (f64, f64),
    /// Standard deviation of m across records.
    pub m_spread: f64,
    pub mean_q: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub generated: EnsembleSummary,
    pub reference: EnsembleSummary,
    pub energy_hist: (Histogram, Histogram),
    pub overlap_hist: (Histogram, Histogram),
    pub energy_tv: f64,
    pub overlap_tv: f64,
    /// True when either overlap set used a random subset of pairs.
    pub overlap_sampled: bool,
}

fn summarize(ds: &SpinDataset, e: &[f64], q: &[f64]) -> EnsembleSummary {
    let m = magnetizations(ds);
    let am: Vec<f64> = m.iter().map(|v| v.abs()).collect();
    let (mm, m_se) = mean_se(&m);
    EnsembleSummary {
        count: ds.len(),
        energy: mean_se(e),
        abs_m: mean_se(&am),
        m: (mm, m_se),
        m_spread: m_se * (m.len() as f64).sqrt(),
        mean_q: if q.is_empty() {
            f64::NAN
        } else {
            q.iter().sum::<f64>() / q.len() as f64
        },
    }
}

/// Compares a generated ensemble with a reference on shared bins.
pub fn evaluate(
    generated: &SpinDataset,
    reference: &SpinDataset,
    graph: &CouplingGraph,
    bins: EvalBins,
    rng: &RandomStream,
) -> Result<EvalReport> {
    if generated.n_sites() != reference.n_sites() {
        return Err(Error::SizeMismatch {
            expected: reference.n_sites(),
            got: generated.n_sites(),
        });
    }
    generated.check_sites(graph.n_sites())?;
    if generated.len() < 2 || reference.len() < 2 {
        return Err(Error::InvalidArgument(
            "eval needs at least two records per ensemble".into(),
        ));
    }
    let eg = energies(generated, graph);
    let er = energies(reference, graph);
    let edges = shared_edges(&eg, &er, bins.energy);
    let energy_hist = (Histogram::new(&eg, &edges)?, Histogram::new(&er, &edges)?);

    let (qg, sg) = pair_overlaps(generated, &mut rng.substream(&[0]));
    let (qr, sr) = pair_overlaps(reference, &mut rng.substream(&[1]));
    let qedges = overlap_edges(bins.overlap);
    let overlap_hist = (Histogram::new(&qg, &qedges)?, Histogram::new(&qr, &qedges)?);

    Ok(EvalReport {
        generated: summarize(generated, &eg, &qg),
        reference: summarize(reference, &er, &qr),
        energy_tv: energy_hist.0.tv(&energy_hist.1)?,
        overlap_tv: overlap_hist.0.tv(&overlap_hist.1)?,
        energy_hist,
        overlap_hist,
        overlap_sampled: sg || sr,
    })
}

impl EvalReport {
    /// Relative deviation of generated from reference ⟨E⟩/N.
    pub fn energy_rel_error(&self) -> f64 {
        ((self.generated.energy.0 - self.reference.energy.0) / self.reference.energy.0).abs()
    }

    pub fn histogram_csv(&self) -> String {
        let mut s = String::from("observable,bin_lo,bin_hi,generated,reference\n");
        for (name, (g, r)) in [
            ("energy_per_spin", &self.energy_hist),
            ("overlap", &self.overlap_hist),
        ] {
            for k in 0..g.mass.len() {
                writeln!(
                    s,
                    "{name},{:?},{:?},{:?},{:?}",
                    g.edges[k],
                    g.edges[k + 1],
                    g.mass[k],
                    r.mass[k]
                )
                .unwrap();
            }
        }
        s
    }

    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        for (tag, e) in [
            ("generated", &self.generated),
            ("reference", &self.reference),
        ] {
            writeln!(s, "{tag}.count = {}", e.count).unwrap();
            writeln!(s, "{tag}.energy_per_spin = {:.6}", e.energy.0).unwrap();
            writeln!(s, "{tag}.energy_per_spin_se = {:.6}", e.energy.1).unwrap();
            writeln!(s, "{tag}.abs_m = {:.6}", e.abs_m.0).unwrap();
            writeln!(s, "{tag}.m = {:.6}", e.m.0).unwrap();
            writeln!(s, "{tag}.m_spread = {:.6}", e.m_spread).unwrap();
            writeln!(s, "{tag}.mean_q = {:.6}", e.mean_q).unwrap();
        }
        writeln!(s, "energy_rel_error = {:.6}", self.energy_rel_error()).unwrap();
        writeln!(s, "energy_tv = {:.6}", self.energy_tv).unwrap();
        writeln!(s, "overlap_tv = {:.6}", self.overlap_tv).unwrap();
        writeln!(s, "overlap_sampled = {}", self.overlap_sampled).unwrap();
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{build_ferro_2d, energy};

    fn dataset(seed: u64, n: usize, count: usize) -> SpinDataset {
        let mut rng = RandomStream::new(seed, 0);
        let recs: Vec<SpinConfiguration> = (0..count)
            .map(|_| crate::pbit::sample_uniform_config(n, &mut rng).unwrap())
            .collect();
        SpinDataset::from_records(&recs, seed, "").unwrap()
    }

    #[test]
    fn histogram_mass_sums_to_one() {
        let h = Histogram::new(&[0.1, 0.5, 0.9, -3.0, 7.0], &[0.0, 0.25, 0.5, 1.0]).unwrap();
        assert!((h.mass.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert_eq!(h.mass, vec![0.4, 0.0, 0.6]);
    }

    #[test]
    fn self_comparison_has_zero_distance() {
        let g = build_ferro_2d(3, 1.0).unwrap();
        let ds = dataset(1, 9, 40);
        let rep = evaluate(&ds, &ds, &g, EvalBins::default(), &RandomStream::new(0, 0)).unwrap();
        assert_eq!(rep.energy_tv, 0.0);
        assert_eq!(rep.overlap_tv, 0.0);
    }

    #[test]
    fn tv_is_symmetric() {
        let g = build_ferro_2d(3, 1.0).unwrap();
        let a = dataset(1, 9, 40);
        let b = dataset(2, 9, 30);
        let rng = RandomStream::new(0, 0);
        let ab = evaluate(&a, &b, &g, EvalBins::default(), &rng).unwrap();
        let ba = evaluate(&b, &a, &g, EvalBins::default(), &rng).unwrap();
        assert!((ab.energy_tv - ba.energy_tv).abs() < 1e-15);
        assert!((ab.overlap_tv - ba.overlap_tv).abs() < 1e-15);
    }

    #[test]
    fn identical_records_give_point_mass_at_one() {
        let recs = vec![SpinConfiguration::new(vec![1, -1, 1, 1]).unwrap(); 5];
        let ds = SpinDataset::from_records(&recs, 0, "").unwrap();
        let (q, sampled) = pair_overlaps(&ds, &mut RandomStream::new(0, 0));
        assert!(!sampled);
        assert_eq!(q.len(), 10);
        let h = Histogram::new(&q, &overlap_edges(16)).unwrap();
        assert_eq!(h.mass[15], 1.0);
    }

    #[test]
    fn large_sets_sample_pairs() {
        let ds = dataset(3, 4, 200);
        let (q, sampled) = pair_overlaps(&ds, &mut RandomStream::new(0, 0));
        assert!(sampled);
        assert_eq!(q.len(), MAX_OVERLAP_PAIRS);
    }

    #[test]
    fn energy_helper_agrees() {
        let g = build_ferro_2d(3, 1.0).unwrap();
        let ds = dataset(4, 9, 10);
        for r in ds.records() {
            let e = energy(&r, &g).unwrap() / 9.0;
            assert!((e - energy_per_spin(r.spins(), &g)).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_se_basics() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
