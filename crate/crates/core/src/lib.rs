//! Consistent multi-way matching.
//!
//! Given n sets of m elements and a noisy similarity matrix Tᵢⱼ for every
//! pair of sets, find one permutation per set so that the induced pairwise
//! correspondences are cycle consistent and maximize total similarity.
//!
//! ```
//! use mwmatch::{consistent_tensor, gen_ground_truth, solve_alg2, SolverConfig, avg_error_rate};
//!
//! let truth = gen_ground_truth(6, 4, 1).unwrap();
//! let t = consistent_tensor(&truth);
//! let report = solve_alg2(&t, &SolverConfig::default()).unwrap();
//! assert_eq!(avg_error_rate(&report.solution, &truth).unwrap(), 0.0);
//! ```

pub mod assignment;
pub mod cli;
pub mod error;
pub mod eval;
pub mod io;
pub mod matrix;
pub mod model;
pub mod rng;
pub mod solver;
pub mod spantree;
pub mod sync;

pub use assignment::{lap_brute, lap_max, AssignmentResult, Perm};
pub use error::{Error, Result};
pub use eval::{
    avg_error_rate, noise_sweep, pca_experiment, BenchRecord, EtaTopology, TopologyKind,
};
pub use matrix::DenseMatrix;
pub use model::{
    consistent_tensor, gen_ground_truth, gen_noisy_tensor, objective, tensor_from_points, EtaGraph,
    PointSets, SimilarityTensor, Solution,
};
pub use solver::{
    coordinate_ascent, coordinate_update, mst_initialize, pairwise_alignment, solve_alg1,
    solve_alg2, Algorithm, SolveReport, SolverConfig,
};
pub use sync::{permutation_synchronization, SyncConfig};
