//! Ising model representation, lattice builders and observables.
//!
//! Site indexing: 2D lattices are row-major (`i = x*L + y`); 3D lattices are
//! x-fastest lexicographic (`i = x + L*y + L*L*z`). The default sweep order
//! visits sites in increasing index, so these conventions fix the order in
//! which a sweep touches the lattice.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derive_stream_id;

/// A vector of ±1 spins.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpinConfiguration(Vec<i8>);

impl SpinConfiguration {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(&bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidSpin(bad as i64));
        }
        Ok(Self(spins))
    }

    pub fn all_up(n: usize) -> Self {
        Self(vec![1; n])
    }

    pub fn all_down(n: usize) -> Self {
        Self(vec![-1; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> i8 {
        self.0[i]
    }

    /// Sets site `i`; `value` is mapped through its sign (>= 0 is +1).
    #[inline]
    pub fn set(&mut self, i: usize, value: i8) {
        self.0[i] = if value >= 0 { 1 } else { -1 };
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.0[i] = -self.0[i];
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    /// Raw byte view, used as an exact hashing key.
    pub fn as_bytes(&self) -> &[u8] {
        // SAFETY: i8 and u8 share size and alignment.
        unsafe { std::slice::from_raw_parts(self.0.as_ptr() as *const u8, self.0.len()) }
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|&s| -s).collect())
    }

    /// Spins as ±1.0 reals.
    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&s| s as f64).collect()
    }

    /// Decodes a state index where the most significant of `n` bits is site 0
    /// and a set bit means +1.
    pub fn from_index(index: usize, n: usize) -> Self {
        Self(
            (0..n)
                .map(|k| {
                    if (index >> (n - 1 - k)) & 1 == 1 {
                        1
                    } else {
                        -1
                    }
                })
                .collect(),
        )
    }

    /// Inverse of [`SpinConfiguration::from_index`].
    pub fn to_index(&self) -> usize {
        self.0
            .iter()
            .fold(0usize, |acc, &s| (acc << 1) | usize::from(s > 0))
    }
}

impl From<SpinConfiguration> for Vec<i8> {
    fn from(c: SpinConfiguration) -> Self {
        c.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub coupling: f64,
}

/// Sparse symmetric couplings plus per-site biases.
///
/// Edges are kept sorted by `(i, j)` with `i < j`. The neighbor index is
/// always rebuilt from the edge list.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingGraph {
    n_sites: usize,
    edges: Vec<Edge>,
    biases: Vec<f64>,
    // CSR adjacency
    offsets: Vec<usize>,
    neighbors: Vec<(usize, f64)>,
}

impl CouplingGraph {
    pub fn new(n_sites: usize, edges: Vec<(usize, usize, f64)>, biases: Vec<f64>) -> Result<Self> {
        if biases.len() != n_sites {
            return Err(Error::SizeMismatch {
                expected: n_sites,
                got: biases.len(),
            });
        }
        let mut norm: Vec<Edge> = Vec::with_capacity(edges.len());
        for (a, b, coupling) in edges {
            if a == b {
                return Err(Error::InvalidGraph(format!("self-edge at site {a}")));
            }
            if a >= n_sites || b >= n_sites {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) out of range for {n_sites} sites"
                )));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            norm.push(Edge { i, j, coupling });
        }
        norm.sort_by_key(|e| (e.i, e.j));
        if let Some(w) = norm
            .windows(2)
            .find(|w| (w[0].i, w[0].j) == (w[1].i, w[1].j))
        {
            return Err(Error::InvalidGraph(format!(
                "duplicate edge ({}, {})",
                w[0].i, w[0].j
            )));
        }

        let mut degree = vec![0usize; n_sites];
        for e in &norm {
            degree[e.i] += 1;
            degree[e.j] += 1;
        }
        let mut offsets = vec![0usize; n_sites + 1];
        for k in 0..n_sites {
            offsets[k + 1] = offsets[k] + degree[k];
        }
        let mut fill = offsets.clone();
        let mut neighbors = vec![(0usize, 0.0f64); offsets[n_sites]];
        for e in &norm {
            neighbors[fill[e.i]] = (e.j, e.coupling);
            fill[e.i] += 1;
            neighbors[fill[e.j]] = (e.i, e.coupling);
            fill[e.j] += 1;
        }

        Ok(Self {
            n_sites,
            edges: norm,
            biases,
            offsets,
            neighbors,
        })
    }

    /// Graph with no couplings and the given biases.
    pub fn uncoupled(biases: Vec<f64>) -> Self {
        let n = biases.len();
        Self::new(n, Vec::new(), biases).expect("uncoupled graph is always valid")
    }

    /// The zero-coupling graph whose biases equal `config`: one sweep of it
    /// reproduces site-independent flip noise.
    pub fn self_bias(config: &SpinConfiguration) -> Self {
        Self::uncoupled(config.to_f64())
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Same couplings, new biases.
    pub fn with_biases(&self, biases: Vec<f64>) -> Result<Self> {
        let edges = self.edges.iter().map(|e| (e.i, e.j, e.coupling)).collect();
        Self::new(self.n_sites, edges, biases)
    }

    /// Same biases, all couplings removed.
    pub fn without_couplings(&self) -> Self {
        Self::uncoupled(self.biases.clone())
    }

    fn check_len(&self, config: &SpinConfiguration) -> Result<()> {
        if config.len() != self.n_sites {
            return Err(Error::SizeMismatch {
                expected: self.n_sites,
                got: config.len(),
            });
        }
        Ok(())
    }

    /// Local field without bounds or length checks; callers guarantee both.
    #[inline]
    pub(crate) fn field_unchecked(&self, spins: &[i8], i: usize) -> f64 {
        let mut acc = self.biases[i];
        for &(j, c) in self.neighbors(i) {
            acc += c * spins[j] as f64;
        }
        acc
    }

    /// Serializes to the text coupling format: a `# n_sites=<N>` header,
    /// `# bias i h_i` lines for nonzero biases, then one `i j J_ij` per bond.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# n_sites={}", self.n_sites).unwrap();
        for (i, h) in self.biases.iter().enumerate() {
            if h.to_bits() != 0 {
                writeln!(out, "# bias {i} {h:?}").unwrap();
            }
        }
        for e in &self.edges {
            writeln!(out, "{} {} {:?}", e.i, e.j, e.coupling).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad =
            |line: usize, msg: &str| Error::Format(format!("coupling file line {line}: {msg}"));
        let mut n_sites: Option<usize> = None;
        let mut biases: Vec<(usize, f64)> = Vec::new();
        let mut edges = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let ln = ln + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(v) = rest.strip_prefix("n_sites=") {
                    n_sites = Some(v.trim().parse().map_err(|_| bad(ln, "bad n_sites"))?);
                } else if let Some(v) = rest.strip_prefix("bias") {
                    let mut it = v.split_whitespace();
                    let i: usize = parse_field(it.next(), ln)?;
                    let h: f64 = parse_field(it.next(), ln)?;
                    biases.push((i, h));
                }
                continue;
            }
            if n_sites.is_none() {
                return Err(bad(ln, "bond before '# n_sites=' header"));
            }
            let mut it = line.split_whitespace();
            let i: usize = parse_field(it.next(), ln)?;
            let j: usize = parse_field(it.next(), ln)?;
            let c: f64 = parse_field(it.next(), ln)?;
            if it.next().is_some() {
                return Err(bad(ln, "trailing fields"));
            }
            edges.push((i, j, c));
        }
        let n = n_sites.ok_or_else(|| Error::Format("missing '# n_sites=' header".into()))?;
        let mut h = vec![0.0; n];
        for (i, v) in biases {
            if i >= n {
                return Err(Error::Format(format!("bias index {i} out of range")));
            }
            h[i] = v;
        }
        Self::new(n, edges, h)
    }
}

fn parse_field<T: FromStr>(tok: Option<&str>, line: usize) -> Result<T> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Format(format!("coupling file line {line}: malformed field")))
}

/// Lattice families used by the experiments. Boundaries are always open.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum LatticeSpec {
    Ferro2d {
        l: usize,
        #[serde(default = "one")]
        j: f64,
    },
    Ea3d {
        l: usize,
        disorder_seed: u64,
    },
}

fn one() -> f64 {
    1.0
}

impl LatticeSpec {
    pub fn build(&self) -> Result<CouplingGraph> {
        match *self {
            LatticeSpec::Ferro2d { l, j } => build_ferro_2d(l, j),
            LatticeSpec::Ea3d { l, disorder_seed } => build_ea_3d(l, disorder_seed),
        }
    }

    pub fn n_sites(&self) -> usize {
        match *self {
            LatticeSpec::Ferro2d { l, .. } => l * l,
            LatticeSpec::Ea3d { l, .. } => l * l * l,
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            LatticeSpec::Ferro2d { l, j } => format!("ferro2d L={l} J={j:?} open"),
            LatticeSpec::Ea3d { l, disorder_seed } => {
                format!("ea3d L={l} disorder_seed={disorder_seed} open")
            }
        }
    }
}

/// Nearest-neighbor square lattice with uniform coupling `j`, zero field.
pub fn build_ferro_2d(l: usize, j: f64) -> Result<CouplingGraph> {
    if l == 0 {
        return Err(Error::InvalidArgument("lattice side must be >= 1".into()));
    }
    let idx = |x: usize, y: usize| x * l + y;
    let mut edges = Vec::with_capacity(2 * l * (l - 1));
    for x in 0..l {
        for y in 0..l {
            if x + 1 < l {
                edges.push((idx(x, y), idx(x + 1, y), j));
            }
            if y + 1 < l {
                edges.push((idx(x, y), idx(x, y + 1), j));
            }
        }
    }
    CouplingGraph::new(l * l, edges, vec![0.0; l * l])
}

/// ±J bond value for the bond leaving `site` along axis `axis`.
fn ea_bond(disorder_seed: u64, site: usize, axis: usize) -> f64 {
    let bond_index = 3 * site as u64 + axis as u64;
    if derive_stream_id(&[disorder_seed, bond_index]) & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Edwards-Anderson cubic lattice with ±1 couplings, zero field.
///
/// Each bond is a pure function of `(disorder_seed, 3*site + axis)`.
pub fn build_ea_3d(l: usize, disorder_seed: u64) -> Result<CouplingGraph> {
    if l == 0 {
        return Err(Error::InvalidArgument("lattice side must be >= 1".into()));
    }
    let idx = |x: usize, y: usize, z: usize| x + l * y + l * l * z;
    let mut edges = Vec::with_capacity(3 * l * l * (l - 1));
    for z in 0..l {
        for y in 0..l {
            for x in 0..l {
                let s = idx(x, y, z);
                if x + 1 < l {
                    edges.push((s, idx(x + 1, y, z), ea_bond(disorder_seed, s, 0)));
                }
                if y + 1 < l {
                    edges.push((s, idx(x, y + 1, z), ea_bond(disorder_seed, s, 1)));
                }
                if z + 1 < l {
                    edges.push((s, idx(x, y, z + 1), ea_bond(disorder_seed, s, 2)));
                }
            }
        }
    }
    let n = l * l * l;
    CouplingGraph::new(n, edges, vec![0.0; n])
}

/// Ising energy `-Σ_{i<j} J_ij s_i s_j - Σ_i h_i s_i`.
pub fn energy(config: &SpinConfiguration, graph: &CouplingGraph) -> Result<f64> {
    graph.check_len(config)?;
    let s = config.spins();
    let bonds: f64 = graph
        .edges
        .iter()
        .map(|e| e.coupling * (s[e.i] as f64) * (s[e.j] as f64))
        .sum();
    let field: f64 = graph
        .biases
        .iter()
        .zip(s)
        .map(|(h, &si)| h * si as f64)
        .sum();
    Ok(-bonds - field)
}

pub fn magnetization(config: &SpinConfiguration) -> f64 {
    if config.is_empty() {
        return 0.0;
    }
    config.spins().iter().map(|&s| s as f64).sum::<f64>() / config.len() as f64
}

/// Site-averaged overlap `q = (1/N) Σ a_i b_i`.
pub fn overlap(a: &SpinConfiguration, b: &SpinConfiguration) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let dot: i64 = a
        .spins()
        .iter()
        .zip(b.spins())
        .map(|(&x, &y)| (x as i64) * (y as i64))
        .sum();
    Ok(dot as f64 / a.len() as f64)
}

/// `I_i = Σ_j J_ij s_j + h_i`.
pub fn local_field(config: &SpinConfiguration, graph: &CouplingGraph, i: usize) -> Result<f64> {
    graph.check_len(config)?;
    if i >= graph.n_sites {
        return Err(Error::IndexOutOfRange {
            index: i,
            n_sites: graph.n_sites,
        });
    }
    Ok(graph.field_unchecked(config.spins(), i))
}
