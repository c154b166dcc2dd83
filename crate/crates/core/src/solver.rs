//! Multi-way matching solvers.
//!
//! * [`pairwise_alignment`] anchors every set to set 0 by independent
//!   assignments.
//! * [`coordinate_ascent`] repeatedly re-solves one Aᵢ with the others fixed.
//! * [`solve_alg1`] seeds the ascent by merging sets along a maximum spanning
//!   tree of the alignment graph.
//! * [`solve_alg2`] interleaves the merges with coordinate updates restricted
//!   to the merged group.
//!
//! With Aⱼ fixed, the objective depends on Aᵢ through 2·tr(Aᵢᵀ C) where
//! C = Σ_{j≠i} Aⱼ Tⱼᵢ, i.e. C[s, p] = Σⱼ Tᵢⱼ[p, σⱼ(s)]. Updates take the
//! assignment optimum of C and are accepted only when they raise the
//! objective by more than [`IMPROVEMENT_TOL`].

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::assignment::{assignment_value, lap_max, Perm};
use crate::error::{bad_param, invalid, Error, Result};
use crate::matrix::DenseMatrix;
use crate::model::{objective, random_solution, SimilarityTensor, Solution};
use crate::rng::{seeded_rng, Stream};
use crate::spantree::{
    basic_order, build_align_graph, max_spanning_tree, prim_order, DisjointSets, EdgeOrder,
};
use crate::sync::{permutation_synchronization, SyncConfig};

/// Minimum objective gain for an update to count as an improvement.
pub const IMPROVEMENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeOrdering {
    /// Tree edges sorted by vertex pair.
    Basic,
    Prim,
    /// Descending weight.
    Kruskal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// Round-robin over indices.
    Sweep,
    /// Uniformly random index per step, seeded.
    Random,
}

/// Which coefficient matrix drives a coordinate update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientForm {
    /// Σⱼ Aⱼ Tⱼᵢ, the exact gradient of the symmetric objective.
    Derived,
    /// Σⱼ Aⱼ Tᵢⱼ; equal to `Derived` only for symmetric blocks.
    AsWritten,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub order: EdgeOrdering,
    pub schedule: Schedule,
    pub max_sweeps: usize,
    pub seed: u64,
    pub inner_max_sweeps: usize,
    pub coefficient: CoefficientForm,
    /// Run a global coordinate ascent after the last merge of `solve_alg2`.
    pub final_polish: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            order: EdgeOrdering::Kruskal,
            schedule: Schedule::Sweep,
            max_sweeps: 1000,
            seed: 0,
            inner_max_sweeps: 1000,
            coefficient: CoefficientForm::Derived,
            final_polish: false,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if self.max_sweeps == 0 || self.inner_max_sweeps == 0 {
            return Err(bad_param!("sweep limits must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: Solution,
    /// Objective after initialization, then after each global sweep.
    pub objective_trace: Vec<f64>,
    pub sweeps_run: usize,
    /// Sweeps spent inside merge groups (`solve_alg2` only).
    pub inner_sweeps: usize,
    pub converged: bool,
}

impl SolveReport {
    pub fn final_objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(0.0)
    }

    pub fn is_non_decreasing(&self, tol: f64) -> bool {
        self.objective_trace.windows(2).all(|w| w[1] >= w[0] - tol)
    }

    fn single(t: &SimilarityTensor, solution: Solution) -> Result<Self> {
        let obj = objective(t, &solution)?;
        Ok(Self {
            solution,
            objective_trace: vec![obj],
            sweeps_run: 0,
            inner_sweeps: 0,
            converged: true,
        })
    }
}

/// A₀ = I and Aᵢ = argmax_P tr(Pᵀ T₀ᵢ).
pub fn pairwise_alignment(t: &SimilarityTensor) -> Result<Solution> {
    let mut perms = vec![Perm::identity(t.m())];
    for i in 1..t.n() {
        perms.push(lap_max(&t.block(0, i).to_matrix())?.perm);
    }
    Solution::new(perms)
}

/// Coefficient matrix for Aᵢ restricted to `group` (which may contain i).
fn coefficient_matrix(
    t: &SimilarityTensor,
    s: &Solution,
    i: usize,
    group: &[usize],
    form: CoefficientForm,
) -> DenseMatrix {
    let m = t.m();
    let mut c = DenseMatrix::zeros(m, m);
    for &j in group {
        if j == i {
            continue;
        }
        let sigma_j = s.perm(j).as_slice();
        match form {
            CoefficientForm::Derived => {
                // C[s, p] += Tⱼᵢ[σⱼ(s), p]
                let b = t.block(j, i);
                for (row, &q) in sigma_j.iter().enumerate() {
                    for p in 0..m {
                        c[(row, p)] += b.get(q, p);
                    }
                }
            }
            CoefficientForm::AsWritten => {
                let b = t.block(i, j);
                for (row, &q) in sigma_j.iter().enumerate() {
                    for p in 0..m {
                        c[(row, p)] += b.get(q, p);
                    }
                }
            }
        }
    }
    c
}

/// Result of one coordinate update.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateStep {
    pub perm: Perm,
    pub improved: bool,
    /// Objective increase when the update is applied (0 when not improved).
    pub gain: f64,
}

fn update_within(
    t: &SimilarityTensor,
    s: &Solution,
    i: usize,
    group: &[usize],
    form: CoefficientForm,
) -> Result<CoordinateStep> {
    let exact = coefficient_matrix(t, s, i, group, CoefficientForm::Derived);
    let candidate = match form {
        CoefficientForm::Derived => lap_max(&exact)?.perm,
        CoefficientForm::AsWritten => lap_max(&coefficient_matrix(t, s, i, group, form))?.perm,
    };
    let current = s.perm(i);
    // both ordered terms (i, j) and (j, i) move together
    let gain = 2.0 * (assignment_value(&exact, &candidate) - assignment_value(&exact, current));
    if gain > IMPROVEMENT_TOL {
        Ok(CoordinateStep {
            perm: candidate,
            improved: true,
            gain,
        })
    } else {
        Ok(CoordinateStep {
            perm: current.clone(),
            improved: false,
            gain: 0.0,
        })
    }
}

/// Best Aᵢ with every other Aⱼ fixed.
pub fn coordinate_update(t: &SimilarityTensor, s: &Solution, i: usize) -> Result<CoordinateStep> {
    coordinate_update_with(t, s, i, CoefficientForm::Derived)
}

pub fn coordinate_update_with(
    t: &SimilarityTensor,
    s: &Solution,
    i: usize,
    form: CoefficientForm,
) -> Result<CoordinateStep> {
    s.check_shape(t.n(), t.m())?;
    if i >= t.n() {
        return Err(Error::Index {
            index: i,
            len: t.n(),
        });
    }
    let all: Vec<usize> = (0..t.n()).collect();
    update_within(t, s, i, &all, form)
}

struct AscentOutcome {
    sweeps: usize,
    converged: bool,
}

/// Coordinate ascent over `group` until one full pass makes no improvement.
/// `after_sweep` runs after every completed sweep.
fn ascend_group(
    t: &SimilarityTensor,
    s: &mut Solution,
    group: &[usize],
    cfg: &SolverConfig,
    max_sweeps: usize,
    rng: &mut ChaCha8Rng,
    mut after_sweep: impl FnMut(&Solution) -> Result<()>,
) -> Result<AscentOutcome> {
    let k = group.len();
    if k < 2 {
        return Ok(AscentOutcome {
            sweeps: 0,
            converged: true,
        });
    }
    let mut sweeps = 0;
    match cfg.schedule {
        Schedule::Sweep => {
            while sweeps < max_sweeps {
                sweeps += 1;
                let mut any = false;
                for &i in group {
                    let step = update_within(t, s, i, group, cfg.coefficient)?;
                    if step.improved {
                        s.set_perm(i, step.perm);
                        any = true;
                    }
                }
                after_sweep(s)?;
                if !any {
                    return Ok(AscentOutcome {
                        sweeps,
                        converged: true,
                    });
                }
            }
        }
        Schedule::Random => {
            // converged once every index has been tried since the last change
            let mut clean = vec![false; k];
            let mut clean_count = 0;
            while sweeps < max_sweeps {
                sweeps += 1;
                for _ in 0..k {
                    let pos = rng.random_range(0..k);
                    let i = group[pos];
                    let step = update_within(t, s, i, group, cfg.coefficient)?;
                    if step.improved {
                        s.set_perm(i, step.perm);
                        clean.fill(false);
                        clean_count = 0;
                    }
                    if !clean[pos] {
                        clean[pos] = true;
                        clean_count += 1;
                    }
                    if clean_count == k {
                        after_sweep(s)?;
                        return Ok(AscentOutcome {
                            sweeps,
                            converged: true,
                        });
                    }
                }
                after_sweep(s)?;
            }
        }
    }
    Ok(AscentOutcome {
        sweeps,
        converged: false,
    })
}

/// Coordinate ascent over all sets from the starting solution `s`.
pub fn coordinate_ascent(
    t: &SimilarityTensor,
    s: &Solution,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    s.check_shape(t.n(), t.m())?;
    let mut rng = seeded_rng(cfg.seed, Stream::Schedule);
    let mut solution = s.clone();
    run_ascent(t, &mut solution, cfg, &mut rng, 0)
}

fn run_ascent(
    t: &SimilarityTensor,
    solution: &mut Solution,
    cfg: &SolverConfig,
    rng: &mut ChaCha8Rng,
    inner_sweeps: usize,
) -> Result<SolveReport> {
    let all: Vec<usize> = (0..t.n()).collect();
    let mut trace = vec![objective(t, solution)?];
    let outcome = ascend_group(t, solution, &all, cfg, cfg.max_sweeps, rng, |s| {
        trace.push(objective(t, s)?);
        Ok(())
    })?;
    Ok(SolveReport {
        solution: solution.clone(),
        objective_trace: trace,
        sweeps_run: outcome.sweeps,
        inner_sweeps,
        converged: outcome.converged,
    })
}

/// Joins the groups of `u` and `v` along tree edge (u, v). The group holding
/// the smaller vertex index keeps its permutations; the other group is
/// relabeled by P̂ = argmax_P tr(Pᵀ A_a T_ab A_bᵀ) with a on the fixed side.
fn merge_along_edge(
    t: &SimilarityTensor,
    s: &mut Solution,
    groups: &mut DisjointSets,
    u: usize,
    v: usize,
) -> Result<()> {
    let (a, b) = if groups.smallest(u) <= groups.smallest(v) {
        (u, v)
    } else {
        (v, u)
    };
    let m = t.m();
    let block = t.block(a, b);
    let (sa, sb) = (s.perm(a).clone(), s.perm(b).clone());
    // (A_a T_ab A_bᵀ)[x, y] = T_ab[σ_a(x), σ_b(y)]
    let aligned = DenseMatrix::from_fn(m, m, |x, y| block.get(sa.apply(x), sb.apply(y)));
    let relabel = lap_max(&aligned)?.perm;
    let moving = groups.members(b).to_vec();
    for k in moving {
        let updated = &relabel * s.perm(k);
        s.set_perm(k, updated);
    }
    groups
        .union(a, b)
        .ok_or_else(|| invalid!("edge ({u}, {v}) closes a cycle"))?;
    Ok(())
}

fn check_order(t: &SimilarityTensor, order: &EdgeOrder) -> Result<()> {
    if !order.is_spanning_tree(t.n()) {
        return Err(invalid!(
            "edge order with {} edges does not span {} sets as a tree",
            order.edges.len(),
            t.n()
        ));
    }
    Ok(())
}

/// Merges sets along `order` starting from identity permutations.
pub fn mst_initialize(t: &SimilarityTensor, order: &EdgeOrder) -> Result<Solution> {
    check_order(t, order)?;
    let mut s = Solution::identity(t.n(), t.m());
    let mut groups = DisjointSets::new(t.n());
    for &(u, v) in &order.edges {
        merge_along_edge(t, &mut s, &mut groups, u, v)?;
    }
    Ok(s)
}

/// Maximum-spanning-tree edges of the alignment graph in the requested order.
pub fn tree_order(t: &SimilarityTensor, ordering: EdgeOrdering) -> Result<EdgeOrder> {
    let g = build_align_graph(t)?;
    Ok(match ordering {
        EdgeOrdering::Basic => basic_order(&g),
        EdgeOrdering::Prim => prim_order(&g),
        EdgeOrdering::Kruskal => max_spanning_tree(&g),
    })
}

/// Spanning-tree initialization followed by global coordinate ascent.
pub fn solve_alg1(t: &SimilarityTensor, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let order = tree_order(t, cfg.order)?;
    let init = mst_initialize(t, &order)?;
    coordinate_ascent(t, &init, cfg)
}

/// Spanning-tree merges, each followed by coordinate ascent inside the merged
/// group. Only Prim and Kruskal orders are accepted.
pub fn solve_alg2(t: &SimilarityTensor, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    if cfg.order == EdgeOrdering::Basic {
        return Err(bad_param!(
            "the interleaved solver needs Prim or Kruskal order"
        ));
    }
    let order = tree_order(t, cfg.order)?;
    check_order(t, &order)?;
    let mut rng = seeded_rng(cfg.seed, Stream::Schedule);
    let mut s = Solution::identity(t.n(), t.m());
    let mut groups = DisjointSets::new(t.n());
    let mut inner_sweeps = 0;
    let mut all_converged = true;
    for &(u, v) in &order.edges {
        merge_along_edge(t, &mut s, &mut groups, u, v)?;
        let mut group = groups.members(u).to_vec();
        group.sort_unstable();
        let outcome = ascend_group(
            t,
            &mut s,
            &group,
            cfg,
            cfg.inner_max_sweeps,
            &mut rng,
            |_| Ok(()),
        )?;
        inner_sweeps += outcome.sweeps;
        all_converged &= outcome.converged;
    }
    if cfg.final_polish {
        let mut report = run_ascent(t, &mut s, cfg, &mut rng, inner_sweeps)?;
        report.converged &= all_converged;
        return Ok(report);
    }
    Ok(SolveReport {
        objective_trace: vec![objective(t, &s)?],
        solution: s,
        sweeps_run: 0,
        inner_sweeps,
        converged: all_converged,
    })
}

/// Coordinate ascent from uniformly random permutations (seeded).
pub fn solve_coordinate_random_init(
    t: &SimilarityTensor,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    let mut rng = seeded_rng(cfg.seed, Stream::Initialization);
    let init = random_solution(t.n(), t.m(), &mut rng);
    coordinate_ascent(t, &init, cfg)
}

/// Named solvers exposed to the CLI and benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Pairwise,
    Coord,
    Alg1,
    Alg2Prim,
    Alg2Kruskal,
    Sync,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Pairwise,
        Algorithm::Coord,
        Algorithm::Alg1,
        Algorithm::Alg2Prim,
        Algorithm::Alg2Kruskal,
        Algorithm::Sync,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Pairwise => "pairwise",
            Algorithm::Coord => "coord",
            Algorithm::Alg1 => "alg1",
            Algorithm::Alg2Prim => "alg2-prim",
            Algorithm::Alg2Kruskal => "alg2-kruskal",
            Algorithm::Sync => "sync",
        }
    }

    pub fn run(
        self,
        t: &SimilarityTensor,
        cfg: &SolverConfig,
        sync: &SyncConfig,
    ) -> Result<SolveReport> {
        match self {
            Algorithm::Pairwise => SolveReport::single(t, pairwise_alignment(t)?),
            Algorithm::Coord => solve_coordinate_random_init(t, cfg),
            Algorithm::Alg1 => solve_alg1(t, cfg),
            Algorithm::Alg2Prim => solve_alg2(
                t,
                &SolverConfig {
                    order: EdgeOrdering::Prim,
                    ..cfg.clone()
                },
            ),
            Algorithm::Alg2Kruskal => solve_alg2(
                t,
                &SolverConfig {
                    order: EdgeOrdering::Kruskal,
                    ..cfg.clone()
                },
            ),
            Algorithm::Sync => SolveReport::single(t, permutation_synchronization(t, sync)?),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| bad_param!("unknown algorithm '{s}'"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::{for_each_perm, lap_brute};
    use crate::model::{consistent_tensor, gen_ground_truth, gen_noisy_tensor, EtaGraph};

    fn noisy(n: usize, m: usize, eta: f64, seed: u64) -> (Solution, SimilarityTensor) {
        let truth = gen_ground_truth(n, m, seed).unwrap();
        let t = gen_noisy_tensor(&truth, &EtaGraph::uniform(n, eta).unwrap(), seed).unwrap();
        (truth, t)
    }

    fn same_pairwise_maps(a: &Solution, b: &Solution) -> bool {
        (0..a.n()).all(|i| (0..a.n()).all(|j| a.pairwise_map(i, j) == b.pairwise_map(i, j)))
    }

    #[test]
    fn pairwise_alignment_recovers_noiseless_truth() {
        let truth = gen_ground_truth(6, 5, 3).unwrap();
        let s = pairwise_alignment(&consistent_tensor(&truth)).unwrap();
        assert!(s.perm(0).is_identity());
        assert!(same_pairwise_maps(&s, &truth));
    }

    #[test]
    fn pairwise_alignment_matches_brute_force_blocks() {
        let (_, t) = noisy(3, 5, 0.1, 4);
        let s = pairwise_alignment(&t).unwrap();
        for i in 1..3 {
            let b = lap_brute(&t.block(0, i).to_matrix()).unwrap();
            assert_eq!(s.perm(i), &b.perm);
        }
    }

    #[test]
    fn coordinate_update_is_fixed_at_optimum() {
        let truth = gen_ground_truth(4, 5, 1).unwrap();
        let t = consistent_tensor(&truth);
        for i in 0..4 {
            let step = coordinate_update(&t, &truth, i).unwrap();
            assert!(!step.improved);
            assert_eq!(&step.perm, truth.perm(i));
        }
        assert!(matches!(
            coordinate_update(&t, &truth, 4),
            Err(Error::Index { index: 4, len: 4 })
        ));
    }

    #[test]
    fn coordinate_update_two_sets() {
        let (_, t) = noisy(2, 5, 0.2, 6);
        let s = Solution::identity(2, 5);
        let step = coordinate_update(&t, &s, 0).unwrap();
        let mut updated = s.clone();
        updated.set_perm(0, step.perm);
        let f = crate::assignment::f_score(&t.block(0, 1).to_matrix()).unwrap();
        assert!((objective(&t, &updated).unwrap() - 2.0 * f).abs() < 1e-12);
    }

    #[test]
    fn coordinate_update_matches_enumeration() {
        for seed in 0..30 {
            let (_, t) = noisy(3, 4, 0.3, seed);
            let s = gen_ground_truth(3, 4, seed + 1000).unwrap();
            for i in 0..3 {
                let step = coordinate_update(&t, &s, i).unwrap();
                let mut best = f64::NEG_INFINITY;
                for_each_perm(4, |p| {
                    let mut trial = s.clone();
                    trial.set_perm(i, p.clone());
                    best = best.max(objective(&t, &trial).unwrap());
                });
                let mut got = s.clone();
                got.set_perm(i, step.perm.clone());
                assert!((objective(&t, &got).unwrap() - best).abs() < 1e-9);
                let before = objective(&t, &s).unwrap();
                assert!((objective(&t, &got).unwrap() - before - step.gain).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn ascent_from_optimum_converges_in_one_sweep() {
        let truth = gen_ground_truth(5, 4, 2).unwrap();
        let t = consistent_tensor(&truth);
        let r = coordinate_ascent(&t, &truth, &SolverConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.sweeps_run, 1);
        assert_eq!(r.solution, truth);
    }

    #[test]
    fn ascent_is_monotone_for_both_schedules() {
        for seed in 0..10 {
            let (_, t) = noisy(6, 6, 0.25, seed);
            for schedule in [Schedule::Sweep, Schedule::Random] {
                let cfg = SolverConfig {
                    schedule,
                    seed,
                    ..Default::default()
                };
                let r = solve_coordinate_random_init(&t, &cfg).unwrap();
                assert!(r.is_non_decreasing(1e-9), "{:?}", r.objective_trace);
                assert!(r.converged);
            }
        }
    }

    #[test]
    fn identity_start_on_scrambled_truth_still_ascends() {
        let truth = gen_ground_truth(8, 6, 5).unwrap();
        let t = consistent_tensor(&truth);
        let r = coordinate_ascent(&t, &Solution::identity(8, 6), &SolverConfig::default()).unwrap();
        assert!(r.is_non_decreasing(1e-9));
    }

    #[test]
    fn mst_initialize_recovers_noiseless_truth_for_any_order() {
        let truth = gen_ground_truth(7, 5, 8).unwrap();
        let t = consistent_tensor(&truth);
        let orders = [
            EdgeOrder {
                edges: vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6)],
            },
            EdgeOrder {
                edges: vec![(6, 5), (3, 4), (0, 6), (4, 6), (2, 1), (1, 3)],
            },
        ];
        for order in &orders {
            let s = mst_initialize(&t, order).unwrap();
            assert!(same_pairwise_maps(&s, &truth));
        }
        let bad = EdgeOrder {
            edges: vec![(0, 1)],
        };
        assert!(matches!(
            mst_initialize(&t, &bad),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn mst_initialize_two_sets() {
        let (_, t) = noisy(2, 6, 0.2, 3);
        let s = mst_initialize(
            &t,
            &EdgeOrder {
                edges: vec![(0, 1)],
            },
        )
        .unwrap();
        assert_eq!(
            s.pairwise_map(0, 1),
            lap_max(&t.block(0, 1).to_matrix()).unwrap().perm
        );
    }

    #[test]
    fn mst_initialize_path_tree_edges_are_pairwise_optima() {
        for seed in 0..10 {
            let (_, t) = noisy(4, 6, 0.2, seed);
            let order = EdgeOrder {
                edges: vec![(2, 3), (0, 1), (1, 2)],
            };
            let s = mst_initialize(&t, &order).unwrap();
            for &(i, j) in &order.edges {
                let best = lap_brute(&t.block(i, j).to_matrix()).unwrap();
                assert_eq!(s.pairwise_map(i, j), best.perm);
            }
        }
    }

    #[test]
    fn alg1_and_alg2_exact_on_noiseless() {
        let truth = gen_ground_truth(7, 6, 4).unwrap();
        let t = consistent_tensor(&truth);
        let expected = (7 * 6 * 6) as f64;
        let r = solve_alg1(&t, &SolverConfig::default()).unwrap();
        assert_eq!(r.objective_trace[0], expected);
        assert!(same_pairwise_maps(&r.solution, &truth));
        for order in [EdgeOrdering::Prim, EdgeOrdering::Kruskal] {
            let cfg = SolverConfig {
                order,
                ..Default::default()
            };
            let r = solve_alg2(&t, &cfg).unwrap();
            assert_eq!(r.final_objective(), expected);
            assert!(same_pairwise_maps(&r.solution, &truth));
        }
        let basic = SolverConfig {
            order: EdgeOrdering::Basic,
            ..Default::default()
        };
        assert!(matches!(solve_alg2(&t, &basic), Err(Error::Parameter(_))));
        assert!(same_pairwise_maps(
            &solve_alg1(&t, &basic).unwrap().solution,
            &truth
        ));
    }

    #[test]
    fn alg1_dominates_pairwise_alignment() {
        for seed in 0..20 {
            let (_, t) = noisy(8, 6, 0.3, seed);
            let pw = objective(&t, &pairwise_alignment(&t).unwrap()).unwrap();
            let r = solve_alg1(&t, &SolverConfig::default()).unwrap();
            assert!(r.final_objective() >= pw - 1e-9, "seed {seed}");
        }
    }

    #[test]
    fn alg2_final_polish_extends_trace() {
        let (_, t) = noisy(10, 6, 0.3, 2);
        let cfg = SolverConfig {
            order: EdgeOrdering::Prim,
            final_polish: true,
            ..Default::default()
        };
        let r = solve_alg2(&t, &cfg).unwrap();
        assert!(r.objective_trace.len() >= 2);
        assert!(r.is_non_decreasing(1e-9));
    }

    #[test]
    fn as_written_coefficients_still_ascend() {
        let (_, t) = noisy(6, 5, 0.3, 9);
        let cfg = SolverConfig {
            coefficient: CoefficientForm::AsWritten,
            ..Default::default()
        };
        let r = solve_alg1(&t, &cfg).unwrap();
        assert!(r.is_non_decreasing(1e-9));
    }

    #[test]
    fn gauge_shifted_start_gives_same_pairwise_maps() {
        let (_, t) = noisy(6, 5, 0.2, 12);
        let init = pairwise_alignment(&t).unwrap();
        let g = gen_ground_truth(1, 5, 42).unwrap().perm(0).clone();
        let shifted = crate::model::left_compose(&init, &g).unwrap();
        let a = coordinate_ascent(&t, &init, &SolverConfig::default()).unwrap();
        let b = coordinate_ascent(&t, &shifted, &SolverConfig::default()).unwrap();
        assert!(same_pairwise_maps(&a.solution, &b.solution));
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("magic".parse::<Algorithm>().is_err());
    }

    #[test]
    fn zero_sweep_limits_are_rejected() {
        let (_, t) = noisy(3, 3, 0.1, 1);
        let cfg = SolverConfig {
            max_sweeps: 0,
            ..Default::default()
        };
        assert!(solve_alg1(&t, &cfg).is_err());
    }
}
