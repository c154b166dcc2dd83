//! Error metrics, noise-sweep benchmarks and the PCA reordering experiment.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{bad_param, dim_err, Error, Result};
use crate::matrix::{pca_fit, pca_reconstruction_error, PcaModel};
use crate::model::{gen_ground_truth, gen_noisy_tensor, EtaGraph, PointSets, Solution};
use crate::rng::{seeded_rng, Stream};
use crate::solver::{Algorithm, SolverConfig};
use crate::spantree::min_bottleneck_weight;
use crate::sync::SyncConfig;

/// Mean over ordered pairs (i, j), i ≠ j, of the fraction of elements where
/// the predicted map Aᵢᵀ Aⱼ disagrees with the true one. Zero when n = 1.
pub fn avg_error_rate(s: &Solution, truth: &Solution) -> Result<f64> {
    if s.n() != truth.n() || s.m() != truth.m() {
        return Err(dim_err!(
            "solution is {}x{}, truth is {}x{}",
            s.n(),
            s.m(),
            truth.n(),
            truth.m()
        ));
    }
    let (n, m) = (s.n(), s.m());
    if n < 2 {
        return Ok(0.0);
    }
    let mut wrong = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (s.pairwise_map(i, j), truth.pairwise_map(i, j));
            wrong += a
                .as_slice()
                .iter()
                .zip(b.as_slice())
                .filter(|(x, y)| x != y)
                .count();
        }
    }
    // (j, i) disagrees on exactly as many elements as (i, j)
    Ok(wrong as f64 / ((n * (n - 1) / 2) * m) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TopologyKind {
    /// Random center joined to every other set.
    Star,
    /// Random visiting order.
    Path,
    /// Uniform labeled tree from a random Prüfer sequence.
    RandomTree,
    /// No distinguished tree; every pair gets `eta_off`.
    Uniform,
}

impl TopologyKind {
    pub fn name(self) -> &'static str {
        match self {
            TopologyKind::Star => "star",
            TopologyKind::Path => "path",
            TopologyKind::RandomTree => "random-tree",
            TopologyKind::Uniform => "uniform",
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "star" => Ok(TopologyKind::Star),
            "path" => Ok(TopologyKind::Path),
            "random-tree" | "random_tree" => Ok(TopologyKind::RandomTree),
            "uniform" => Ok(TopologyKind::Uniform),
            _ => Err(bad_param!("unknown topology '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaTopology {
    pub kind: TopologyKind,
    pub eta_tree: f64,
    pub eta_off: f64,
}

impl EtaTopology {
    pub fn new(kind: TopologyKind, eta_tree: f64, eta_off: f64) -> Result<Self> {
        for (name, v) in [("eta_tree", eta_tree), ("eta_off", eta_off)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(bad_param!("{name} must be >= 0, got {v}"));
            }
        }
        Ok(Self {
            kind,
            eta_tree,
            eta_off,
        })
    }

    /// Tree edges for `n` sets, drawn from the topology stream of `seed`.
    pub fn tree_edges(&self, n: usize, seed: u64) -> Vec<(usize, usize)> {
        let mut rng = seeded_rng(seed, Stream::Topology);
        if n < 2 {
            return Vec::new();
        }
        match self.kind {
            TopologyKind::Uniform => Vec::new(),
            TopologyKind::Star => {
                let c = rng.random_range(0..n);
                (0..n).filter(|&v| v != c).map(|v| (c, v)).collect()
            }
            TopologyKind::Path => {
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(&mut rng);
                order.windows(2).map(|w| (w[0], w[1])).collect()
            }
            TopologyKind::RandomTree => {
                let code: Vec<usize> = (0..n.saturating_sub(2))
                    .map(|_| rng.random_range(0..n))
                    .collect();
                prufer_decode(n, &code)
            }
        }
    }

    /// η graph: tree edges get `eta_tree`, all other pairs `eta_off`.
    pub fn build(&self, n: usize, seed: u64) -> Result<EtaGraph> {
        let mut on_tree = vec![false; n * n];
        for (u, v) in self.tree_edges(n, seed) {
            on_tree[u * n + v] = true;
            on_tree[v * n + u] = true;
        }
        EtaGraph::from_fn(n, |i, j| {
            if on_tree[i * n + j] {
                self.eta_tree
            } else {
                self.eta_off
            }
        })
    }
}

/// Tree on 0..n encoded by a Prüfer sequence of length n − 2.
pub fn prufer_decode(n: usize, code: &[usize]) -> Vec<(usize, usize)> {
    if n < 2 {
        return Vec::new();
    }
    let mut degree = vec![1usize; n];
    for &c in code {
        degree[c] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &c in code {
        let leaf = (0..n)
            .find(|&v| degree[v] == 1)
            .expect("a leaf always exists");
        edges.push((leaf, c));
        degree[leaf] -= 1;
        degree[c] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

/// 1 / (4(3 + γ) ln m + 4) with γ = ln n / ln m, written as
/// 1 / (12 ln m + 4 ln n + 4) so that m = 1 is well defined.
pub fn theorem2_bound(n: usize, m: usize) -> f64 {
    let (ln_n, ln_m) = ((n as f64).ln(), (m as f64).ln());
    1.0 / (12.0 * ln_m + 4.0 * ln_n + 4.0)
}

/// γ = ln n / ln m (infinite for m = 1).
pub fn theorem2_gamma(n: usize, m: usize) -> f64 {
    (n as f64).ln() / (m as f64).ln()
}

/// The recovery guarantee's conditions for a given η graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Theorem2Check {
    pub n: usize,
    pub m: usize,
    pub gamma: f64,
    pub bound: f64,
    pub bottleneck: f64,
    pub max_eta: f64,
    pub enough_sets: bool,
    pub eta_capped: bool,
    pub bottleneck_ok: bool,
}

impl Theorem2Check {
    pub fn new(etas: &EtaGraph, m: usize) -> Result<Self> {
        let n = etas.n();
        let bottleneck = min_bottleneck_weight(etas)?;
        let bound = theorem2_bound(n, m);
        let max_eta = etas.max_off_diagonal();
        Ok(Self {
            n,
            m,
            gamma: theorem2_gamma(n, m),
            bound,
            bottleneck,
            max_eta,
            enough_sets: n as f64 >= 20.0 * (m as f64).ln(),
            eta_capped: max_eta <= 1.0 / 3.0,
            bottleneck_ok: bottleneck <= bound,
        })
    }

    pub fn satisfied(&self) -> bool {
        self.enough_sets && self.eta_capped && self.bottleneck_ok
    }

    /// Human-readable reasons the conditions fail.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.enough_sets {
            out.push(format!(
                "n = {} is below 20 ln m = {:.3}",
                self.n,
                20.0 * (self.m as f64).ln()
            ));
        }
        if !self.eta_capped {
            out.push(format!("max eta {} exceeds 1/3", self.max_eta));
        }
        if !self.bottleneck_ok {
            out.push(format!(
                "bottleneck {} exceeds the recovery bound {:.6}",
                self.bottleneck, self.bound
            ));
        }
        out
    }
}

/// One (algorithm, seed) run of a noise sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub algo: String,
    pub n: usize,
    pub m: usize,
    pub topology: String,
    pub eta_tree: f64,
    pub eta_off: f64,
    pub seed: u64,
    pub error_rate: f64,
    pub objective: f64,
    pub exact_recovery: bool,
    pub wall_time_ms: f64,
    pub theorem2_bound: f64,
    pub theorem2_satisfied: bool,
}

impl BenchRecord {
    fn sort_key_cmp(&self, other: &Self) -> Ordering {
        self.algo
            .cmp(&other.algo)
            .then(self.n.cmp(&other.n))
            .then(self.m.cmp(&other.m))
            .then(self.eta_tree.total_cmp(&other.eta_tree))
            .then(self.eta_off.total_cmp(&other.eta_off))
            .then(self.seed.cmp(&other.seed))
    }
}

/// Sorts by (algo, n, m, eta_tree, eta_off, seed).
pub fn sort_records(records: &mut [BenchRecord]) {
    records.sort_by(BenchRecord::sort_key_cmp);
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub solver: SolverConfig,
    pub sync: SyncConfig,
    /// Record wall time; when false every `wall_time_ms` is 0.
    pub timing: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            sync: SyncConfig::default(),
            timing: true,
        }
    }
}

/// Runs every algorithm on seeds 0..seeds. Seeds run on the current rayon
/// pool; the result is sorted and independent of scheduling.
pub fn noise_sweep(
    topology: &EtaTopology,
    n: usize,
    m: usize,
    algos: &[Algorithm],
    seeds: u64,
    opts: &SweepOptions,
) -> Result<Vec<BenchRecord>> {
    if n < 2 || m < 1 {
        return Err(bad_param!(
            "sweeps need n >= 2 and m >= 1, got n={n}, m={m}"
        ));
    }
    if algos.is_empty() {
        return Err(bad_param!("no algorithms requested"));
    }
    let per_seed: Vec<Vec<BenchRecord>> = (0..seeds)
        .into_par_iter()
        .map(|seed| run_seed(topology, n, m, algos, seed, opts))
        .collect::<Result<_>>()?;
    let mut records: Vec<BenchRecord> = per_seed.into_iter().flatten().collect();
    sort_records(&mut records);
    Ok(records)
}

fn run_seed(
    topology: &EtaTopology,
    n: usize,
    m: usize,
    algos: &[Algorithm],
    seed: u64,
    opts: &SweepOptions,
) -> Result<Vec<BenchRecord>> {
    let truth = gen_ground_truth(n, m, seed)?;
    let etas = topology.build(n, seed)?;
    let check = Theorem2Check::new(&etas, m)?;
    let t = gen_noisy_tensor(&truth, &etas, seed)?;
    let cfg = SolverConfig {
        seed,
        ..opts.solver.clone()
    };
    algos
        .iter()
        .map(|&algo| {
            let start = Instant::now();
            let report = algo.run(&t, &cfg, &opts.sync)?;
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            let error_rate = avg_error_rate(&report.solution, &truth)?;
            Ok(BenchRecord {
                algo: algo.name().to_string(),
                n,
                m,
                topology: topology.kind.name().to_string(),
                eta_tree: topology.eta_tree,
                eta_off: topology.eta_off,
                seed,
                error_rate,
                objective: report.final_objective(),
                exact_recovery: error_rate == 0.0,
                wall_time_ms: if opts.timing { elapsed } else { 0.0 },
                theorem2_bound: check.bound,
                theorem2_satisfied: check.satisfied(),
            })
        })
        .collect()
}

/// Summary of the records for one algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgoSummary {
    pub runs: usize,
    pub exact: usize,
    pub mean_error: f64,
}

pub fn summarize(records: &[BenchRecord], algo: Algorithm) -> AlgoSummary {
    let rows: Vec<&BenchRecord> = records.iter().filter(|r| r.algo == algo.name()).collect();
    let runs = rows.len();
    let exact = rows.iter().filter(|r| r.exact_recovery).count();
    let mean_error = if runs == 0 {
        0.0
    } else {
        rows.iter().map(|r| r.error_rate).sum::<f64>() / runs as f64
    };
    AlgoSummary {
        runs,
        exact,
        mean_error,
    }
}

/// Flattens each set into one sample of length d·m: row s is the point the
/// solution places in slot s, i.e. element σᵢ(s). `None` keeps file order.
pub fn aligned_samples(ps: &PointSets, s: Option<&Solution>) -> Result<Vec<Vec<f64>>> {
    if let Some(s) = s {
        s.check_shape(ps.n(), ps.m())?;
    }
    Ok((0..ps.n())
        .map(|i| {
            (0..ps.m())
                .flat_map(|slot| {
                    let p = s.map_or(slot, |s| s.perm(i).apply(slot));
                    ps.point(i, p).iter().copied()
                })
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaRow {
    pub method: String,
    pub k: usize,
    pub reconstruction_error: f64,
}

/// Largest admissible k: min(n, d·m).
pub fn pca_k_max(ps: &PointSets) -> usize {
    ps.n().min(ps.d() * ps.m())
}

/// Reconstruction error of every (method, k). A method whose solution is
/// `None` uses the sets in file order.
pub fn pca_experiment(
    ps: &PointSets,
    methods: &[(String, Option<Solution>)],
    k_values: &[usize],
) -> Result<Vec<PcaRow>> {
    let k_max = pca_k_max(ps);
    if let Some(&k) = k_values.iter().find(|&&k| k == 0 || k > k_max) {
        return Err(bad_param!("k = {k} outside 1..={k_max}"));
    }
    let Some(&k_top) = k_values.iter().max() else {
        return Ok(Vec::new());
    };
    let mut rows = Vec::new();
    for (name, sol) in methods {
        let samples = aligned_samples(ps, sol.as_ref())?;
        // principal subspaces are nested, so fit once and truncate
        let full = pca_fit(&samples, k_top)?;
        for &k in k_values {
            let model = PcaModel {
                mean: full.mean.clone(),
                basis: full.basis[..k].to_vec(),
            };
            rows.push(PcaRow {
                method: name.clone(),
                k,
                reconstruction_error: pca_reconstruction_error(&samples, &model)?,
            });
        }
    }
    Ok(rows)
}
