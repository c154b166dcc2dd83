//! Problem data: similarity tensors, solutions, the noise model and the
//! multi-way matching objective.
//!
//! A solution holds one [`Perm`] σᵢ per set, standing for Aᵢ = P(σᵢ). Slot `s`
//! of set `i` holds element σᵢ(s), so elements σᵢ(s) and σⱼ(s) are matched
//! and the objective is Σ_{i≠j} Σ_s Tᵢⱼ[σᵢ(s), σⱼ(s)] = Σ_{i≠j} tr(Aᵢ Tᵢⱼ Aⱼᵀ).

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::assignment::Perm;
use crate::error::{bad_param, dim_err, invalid, Result};
use crate::matrix::DenseMatrix;
use crate::rng::{seeded_rng, Stream};

/// Cap on the number of inter-set pairs examined by [`median_heuristic_sigma`].
pub const MEDIAN_MAX_PAIRS: usize = 100_000;

/// Seed for the subsample drawn by [`median_heuristic_sigma`].
pub const MEDIAN_SUBSAMPLE_SEED: u64 = 0x5eed;

pub(crate) fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// The off-diagonal blocks Tᵢⱼ of an n×n grid of m×m similarity matrices.
///
/// Only blocks with i < j are stored; (j, i) reads the transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityTensor {
    n: usize,
    m: usize,
    blocks: Vec<DenseMatrix>,
}

/// Read-only view of Tᵢⱼ for either orientation.
#[derive(Debug, Clone, Copy)]
pub struct BlockRef<'a> {
    mat: &'a DenseMatrix,
    transposed: bool,
}

impl BlockRef<'_> {
    #[inline]
    pub fn get(&self, p: usize, q: usize) -> f64 {
        if self.transposed {
            self.mat[(q, p)]
        } else {
            self.mat[(p, q)]
        }
    }

    pub fn to_matrix(&self) -> DenseMatrix {
        if self.transposed {
            self.mat.transpose()
        } else {
            self.mat.clone()
        }
    }
}

impl SimilarityTensor {
    /// `blocks` lists Tᵢⱼ for i < j in lexicographic order of (i, j).
    pub fn new(n: usize, m: usize, blocks: Vec<DenseMatrix>) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(bad_param!(
                "tensor needs n >= 1 and m >= 1, got n={n}, m={m}"
            ));
        }
        let expected = n * (n - 1) / 2;
        if blocks.len() != expected {
            return Err(dim_err!(
                "{} blocks supplied, {n} sets need {expected}",
                blocks.len()
            ));
        }
        for (idx, b) in blocks.iter().enumerate() {
            if b.rows() != m || b.cols() != m {
                return Err(dim_err!(
                    "block {idx} is {}x{}, expected {m}x{m}",
                    b.rows(),
                    b.cols()
                ));
            }
            if b.data().iter().any(|v| !v.is_finite()) {
                return Err(invalid!("block {idx} has non-finite entries"));
            }
        }
        Ok(Self { n, m, blocks })
    }

    /// Builds a tensor from a function giving Tᵢⱼ for each i < j.
    pub fn from_fn(
        n: usize,
        m: usize,
        mut block: impl FnMut(usize, usize) -> DenseMatrix,
    ) -> Result<Self> {
        let mut blocks = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                blocks.push(block(i, j));
            }
        }
        Self::new(n, m, blocks)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Tᵢⱼ for i ≠ j.
    pub fn block(&self, i: usize, j: usize) -> BlockRef<'_> {
        assert!(i != j && i < self.n && j < self.n, "no block ({i}, {j})");
        if i < j {
            BlockRef {
                mat: &self.blocks[pair_index(self.n, i, j)],
                transposed: false,
            }
        } else {
            BlockRef {
                mat: &self.blocks[pair_index(self.n, j, i)],
                transposed: true,
            }
        }
    }

    /// Stored blocks with their (i, j), i < j.
    pub fn upper_blocks(&self) -> impl Iterator<Item = ((usize, usize), &DenseMatrix)> {
        let n = self.n;
        (0..n)
            .flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
            .zip(self.blocks.iter())
    }

    /// Strict check that every entry lies in [0, 1].
    pub fn validate_unit_range(&self) -> Result<()> {
        for ((i, j), b) in self.upper_blocks() {
            if let Some(v) = b.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(invalid!("block ({i}, {j}) has entry {v} outside [0, 1]"));
            }
        }
        Ok(())
    }
}

/// One permutation per set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    perms: Vec<Perm>,
}

impl Solution {
    pub fn new(perms: Vec<Perm>) -> Result<Self> {
        if let Some(first) = perms.first() {
            let m = first.len();
            if let Some(i) = perms.iter().position(|p| p.len() != m) {
                return Err(dim_err!(
                    "permutation {i} has size {}, expected {m}",
                    perms[i].len()
                ));
            }
        }
        Ok(Self { perms })
    }

    pub fn identity(n: usize, m: usize) -> Self {
        Self {
            perms: vec![Perm::identity(m); n],
        }
    }

    pub fn n(&self) -> usize {
        self.perms.len()
    }

    pub fn m(&self) -> usize {
        self.perms.first().map_or(0, Perm::len)
    }

    pub fn perm(&self, i: usize) -> &Perm {
        &self.perms[i]
    }

    pub fn perms(&self) -> &[Perm] {
        &self.perms
    }

    pub fn set_perm(&mut self, i: usize, p: Perm) {
        assert_eq!(p.len(), self.m(), "permutation size mismatch");
        self.perms[i] = p;
    }

    /// Aᵢᵀ Aⱼ as a permutation: element p of set i matches element τ(p) of set j.
    pub fn pairwise_map(&self, i: usize, j: usize) -> Perm {
        self.perms[i].inverse().then(&self.perms[j])
    }

    pub fn check_shape(&self, n: usize, m: usize) -> Result<()> {
        if self.n() != n || (n > 0 && self.m() != m) {
            return Err(dim_err!(
                "solution is {}x{}, expected {n} sets of {m} elements",
                self.n(),
                self.m()
            ));
        }
        Ok(())
    }
}

/// Replaces every Aᵢ by P(g)·Aᵢ; pairwise maps are unchanged.
pub fn left_compose(s: &Solution, g: &Perm) -> Result<Solution> {
    if g.len() != s.m() {
        return Err(dim_err!(
            "gauge permutation has size {}, solution has m={}",
            g.len(),
            s.m()
        ));
    }
    Ok(Solution {
        perms: s.perms.iter().map(|p| g * p).collect(),
    })
}

/// Symmetric matrix of per-pair noise variances.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaGraph {
    n: usize,
    eta: Vec<f64>,
}

impl EtaGraph {
    /// Fills η_ij for i < j from `f`; the diagonal is zero.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut eta = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                if !v.is_finite() || v < 0.0 {
                    return Err(bad_param!(
                        "noise variance for ({i}, {j}) must be >= 0, got {v}"
                    ));
                }
                eta[i * n + j] = v;
                eta[j * n + i] = v;
            }
        }
        Ok(Self { n, eta })
    }

    pub fn uniform(n: usize, value: f64) -> Result<Self> {
        Self::from_fn(n, |_, _| value)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.eta[i * self.n + j]
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i + 1..self.n {
                worst = worst.max(self.get(i, j));
            }
        }
        worst
    }
}

/// n sets of m points in ℝᵈ.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSets {
    sets: Vec<Vec<Vec<f64>>>,
    m: usize,
    d: usize,
}

impl PointSets {
    pub fn new(sets: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let m = sets.first().map_or(0, Vec::len);
        let d = sets.first().and_then(|s| s.first()).map_or(0, Vec::len);
        for (i, set) in sets.iter().enumerate() {
            if set.len() != m {
                return Err(dim_err!("set {i} has {} points, expected {m}", set.len()));
            }
            for (p, pt) in set.iter().enumerate() {
                if pt.len() != d {
                    return Err(dim_err!(
                        "point {p} of set {i} has dimension {}, expected {d}",
                        pt.len()
                    ));
                }
                if pt.iter().any(|v| !v.is_finite()) {
                    return Err(invalid!("point {p} of set {i} has non-finite coordinates"));
                }
            }
        }
        Ok(Self { sets, m, d })
    }

    pub fn n(&self) -> usize {
        self.sets.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn sets(&self) -> &[Vec<Vec<f64>>] {
        &self.sets
    }

    pub fn point(&self, i: usize, p: usize) -> &[f64] {
        &self.sets[i][p]
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// RBF similarities: [Tᵢⱼ]_{p,q} = exp(-‖xⁱ_p - xʲ_q‖² / (2σ²)).
pub fn tensor_from_points(ps: &PointSets, sigma: f64) -> Result<SimilarityTensor> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(bad_param!("RBF bandwidth must be positive, got {sigma}"));
    }
    let denom = 2.0 * sigma * sigma;
    SimilarityTensor::from_fn(ps.n(), ps.m(), |i, j| {
        DenseMatrix::from_fn(ps.m(), ps.m(), |p, q| {
            (-squared_distance(ps.point(i, p), ps.point(j, q)) / denom).exp()
        })
    })
}

/// Median distance between points of different sets, over all such pairs or
/// a seeded subsample of [`MEDIAN_MAX_PAIRS`] when there are more.
pub fn median_heuristic_sigma(ps: &PointSets) -> Result<f64> {
    let (n, m) = (ps.n(), ps.m());
    let total = n * n.saturating_sub(1) / 2 * m * m;
    if total == 0 {
        return Err(bad_param!(
            "median heuristic needs points in at least two sets"
        ));
    }
    let mut dists = Vec::with_capacity(total.min(MEDIAN_MAX_PAIRS));
    if total <= MEDIAN_MAX_PAIRS {
        for i in 0..n {
            for j in i + 1..n {
                for p in 0..m {
                    for q in 0..m {
                        dists.push(squared_distance(ps.point(i, p), ps.point(j, q)).sqrt());
                    }
                }
            }
        }
    } else {
        let mut rng = seeded_rng(MEDIAN_SUBSAMPLE_SEED, Stream::Subsample);
        while dists.len() < MEDIAN_MAX_PAIRS {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if i == j {
                continue;
            }
            let p = rng.random_range(0..m);
            let q = rng.random_range(0..m);
            dists.push(squared_distance(ps.point(i, p), ps.point(j, q)).sqrt());
        }
    }
    dists.sort_by(f64::total_cmp);
    let mid = dists.len() / 2;
    let median = if dists.len() % 2 == 1 {
        dists[mid]
    } else {
        0.5 * (dists[mid - 1] + dists[mid])
    };
    if median > 0.0 {
        Ok(median)
    } else {
        Err(bad_param!(
            "median inter-set distance is zero; points are not distinct enough"
        ))
    }
}

/// n independent uniform permutations of 0..m.
pub fn gen_ground_truth(n: usize, m: usize, seed: u64) -> Result<Solution> {
    if n == 0 || m == 0 {
        return Err(bad_param!("ground truth needs n >= 1 and m >= 1"));
    }
    let mut rng = seeded_rng(seed, Stream::Truth);
    Ok(random_solution(n, m, &mut rng))
}

pub(crate) fn random_solution(n: usize, m: usize, rng: &mut impl Rng) -> Solution {
    let perms = (0..n)
        .map(|_| {
            let mut map: Vec<usize> = (0..m).collect();
            map.shuffle(rng);
            Perm::new(map).expect("shuffle of 0..m is a bijection")
        })
        .collect();
    Solution { perms }
}

/// Noisy observation of the truth: for i < j, entries where T̂ᵢⱼ = Aᵢᵀ Aⱼ is
/// 1 become 1 − Z² and all others Z², with independent Z ~ N(0, ηᵢⱼ).
/// Entries are not clipped to [0, 1].
pub fn gen_noisy_tensor(truth: &Solution, etas: &EtaGraph, seed: u64) -> Result<SimilarityTensor> {
    let (n, m) = (truth.n(), truth.m());
    if etas.n() != n {
        return Err(dim_err!(
            "eta graph has {} vertices, truth has {n} sets",
            etas.n()
        ));
    }
    let mut rng = seeded_rng(seed, Stream::Noise);
    SimilarityTensor::from_fn(n, m, |i, j| {
        let tau = truth.pairwise_map(i, j);
        let sd = etas.get(i, j).sqrt();
        DenseMatrix::from_fn(m, m, |p, q| {
            let z: f64 = rng.sample::<f64, _>(StandardNormal) * sd;
            let z2 = z * z;
            if tau.apply(p) == q {
                1.0 - z2
            } else {
                z2
            }
        })
    })
}

/// Noiseless tensor Tᵢⱼ = Aᵢᵀ Aⱼ for the given solution.
pub fn consistent_tensor(truth: &Solution) -> SimilarityTensor {
    SimilarityTensor::from_fn(truth.n(), truth.m(), |i, j| {
        truth.pairwise_map(i, j).to_matrix()
    })
    .expect("permutation blocks are well formed")
}

/// Σ_{i≠j} tr(Aᵢ Tᵢⱼ Aⱼᵀ), leaving out the constant diagonal terms.
pub fn objective(t: &SimilarityTensor, s: &Solution) -> Result<f64> {
    s.check_shape(t.n(), t.m())?;
    let mut total = 0.0;
    for ((i, j), _) in t.upper_blocks() {
        total += pair_score(t, s, i, j);
    }
    Ok(2.0 * total)
}

/// tr(Aᵢ Tᵢⱼ Aⱼᵀ) = Σ_s Tᵢⱼ[σᵢ(s), σⱼ(s)].
pub(crate) fn pair_score(t: &SimilarityTensor, s: &Solution, i: usize, j: usize) -> f64 {
    let b = t.block(i, j);
    let (si, sj) = (s.perm(i).as_slice(), s.perm(j).as_slice());
    si.iter().zip(sj).map(|(&p, &q)| b.get(p, q)).sum()
}

/// Sets sharing one jittered template: slot s of set i holds template point s
/// plus N(0, jitter²) noise, stored at element index σᵢ(s) of a random σᵢ.
/// Returns the point sets and that ground truth.
pub fn template_point_sets(
    n: usize,
    m: usize,
    d: usize,
    jitter: f64,
    seed: u64,
) -> Result<(PointSets, Solution)> {
    if !(jitter >= 0.0 && jitter.is_finite()) {
        return Err(bad_param!("jitter must be >= 0, got {jitter}"));
    }
    let truth = gen_ground_truth(n, m, seed)?;
    let mut rng = seeded_rng(seed, Stream::Points);
    let template: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..d).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    let mut sets = vec![vec![Vec::new(); m]; n];
    for (i, set) in sets.iter_mut().enumerate() {
        for (s, base) in template.iter().enumerate() {
            set[truth.perm(i).apply(s)] = base
                .iter()
                .map(|&x| x + jitter * rng.sample::<f64, _>(StandardNormal))
                .collect();
        }
    }
    Ok((PointSets::new(sets)?, truth))
}
