//! Spectral permutation synchronization baseline.
//!
//! The nm×nm matrix W with blocks Tᵢⱼ (identity on the diagonal) is rank m
//! with eigenvalue n when the blocks are consistent, W = B Bᵀ with Bᵢ = Aᵢᵀ.
//! Its top-m eigenvectors U, split into m×m row blocks Uᵢ, give U₀ Uᵢᵀ ∝ A₀ᵀ Aᵢ,
//! which is rounded to a permutation by maximum-weight assignment.

use crate::assignment::{lap_max, Perm};
use crate::error::{bad_param, Error, Result};
use crate::matrix::{sym_eigs_topk_with, DenseMatrix, EigMethod, EigOptions};
use crate::model::{SimilarityTensor, Solution};

/// Largest n·m accepted.
pub const MAX_SYNC_DIM: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncConfig {
    pub eig_tolerance: f64,
    pub eig_max_iters: usize,
}

impl Default for SyncConfig {
    fn default() -> Self {
        let eig = EigOptions::default();
        Self {
            eig_tolerance: eig.tolerance,
            eig_max_iters: eig.max_iterations,
        }
    }
}

/// Builds W: block (i, j) is Tᵢⱼ, diagonal blocks are the identity.
pub fn block_matrix(t: &SimilarityTensor) -> DenseMatrix {
    let (n, m) = (t.n(), t.m());
    let dim = n * m;
    let mut w = DenseMatrix::zeros(dim, dim);
    for i in 0..n {
        for p in 0..m {
            w[(i * m + p, i * m + p)] = 1.0;
        }
    }
    for ((i, j), b) in t.upper_blocks() {
        for p in 0..m {
            for q in 0..m {
                let v = b[(p, q)];
                w[(i * m + p, j * m + q)] = v;
                w[(j * m + q, i * m + p)] = v;
            }
        }
    }
    w
}

pub fn permutation_synchronization(t: &SimilarityTensor, cfg: &SyncConfig) -> Result<Solution> {
    if cfg.eig_tolerance.is_nan() || cfg.eig_tolerance <= 0.0 || cfg.eig_max_iters == 0 {
        return Err(bad_param!(
            "eigensolver tolerance and iteration cap must be positive"
        ));
    }
    let (n, m) = (t.n(), t.m());
    if n * m > MAX_SYNC_DIM {
        return Err(Error::Size(format!(
            "synchronization limited to n*m <= {MAX_SYNC_DIM}, got {}",
            n * m
        )));
    }
    let w = block_matrix(t);
    let opts = EigOptions {
        method: EigMethod::Auto,
        tolerance: cfg.eig_tolerance,
        max_iterations: cfg.eig_max_iters,
    };
    let eig = sym_eigs_topk_with(&w, m, &opts)?;
    let u = &eig.vectors;
    let mut perms = vec![Perm::identity(m)];
    for i in 1..n {
        // (U₀ Uᵢᵀ)[s, p] = Σ_c U[s, c] U[i·m + p, c]
        let score = DenseMatrix::from_fn(m, m, |s, p| {
            (0..m).map(|c| u[(s, c)] * u[(i * m + p, c)]).sum()
        });
        perms.push(lap_max(&score)?.perm);
    }
    Solution::new(perms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::sym_eigs_topk;
    use crate::model::{consistent_tensor, gen_ground_truth, gen_noisy_tensor, EtaGraph};

    #[test]
    fn noiseless_spectrum_and_recovery() {
        let truth = gen_ground_truth(4, 3, 2).unwrap();
        let t = consistent_tensor(&truth);
        let w = block_matrix(&t);
        let eig = sym_eigs_topk(&w, 12).unwrap();
        for (k, v) in eig.values.iter().enumerate() {
            let want = if k < 3 { 4.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-10, "eigenvalue {k} = {v}");
        }
        let s = permutation_synchronization(&t, &SyncConfig::default()).unwrap();
        assert!(s.perm(0).is_identity());
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(s.pairwise_map(i, j), truth.pairwise_map(i, j));
            }
        }
    }

    #[test]
    fn noiseless_recovery_through_tridiagonal_path() {
        let truth = gen_ground_truth(12, 8, 5).unwrap();
        let s = permutation_synchronization(&consistent_tensor(&truth), &SyncConfig::default())
            .unwrap();
        for i in 0..12 {
            assert_eq!(s.pairwise_map(0, i), truth.pairwise_map(0, i));
        }
    }

    #[test]
    fn two_sets_match_the_pairwise_assignment() {
        let truth = gen_ground_truth(2, 5, 1).unwrap();
        let t = gen_noisy_tensor(&truth, &EtaGraph::uniform(2, 0.02).unwrap(), 3).unwrap();
        let s = permutation_synchronization(&t, &SyncConfig::default()).unwrap();
        assert_eq!(
            s.perm(1),
            &lap_max(&t.block(0, 1).to_matrix()).unwrap().perm
        );
    }

    #[test]
    fn size_cap() {
        let t = SimilarityTensor::from_fn(2, 2001, |_, _| DenseMatrix::zeros(2001, 2001)).unwrap();
        assert!(matches!(
            permutation_synchronization(&t, &SyncConfig::default()),
            Err(Error::Size(_))
        ));
    }
}
