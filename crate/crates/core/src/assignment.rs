//! Permutations and exact maximum-weight linear assignment.
//!
//! A [`Perm`] stores `map[p] = σ(p)` and stands for the permutation matrix
//! `P(σ)` with `P[p][q] = 1` iff `σ(p) = q`. Under that convention the matrix
//! product is `P(a)·P(b) = P(p ↦ b(a(p)))`, which is what `&a * &b` computes,
//! and `P(σ)ᵀ = P(σ⁻¹)`.

use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matrix::DenseMatrix;

/// Largest size accepted by [`lap_brute`].
pub const BRUTE_FORCE_MAX: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Perm(Vec<usize>);

impl Perm {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let m = map.len();
        let mut seen = vec![false; m];
        for (p, &q) in map.iter().enumerate() {
            if q >= m {
                return Err(invalid!("image {q} of {p} is outside 0..{m}"));
            }
            if std::mem::replace(&mut seen[q], true) {
                return Err(invalid!("{q} appears twice; not a bijection"));
            }
        }
        Ok(Self(map))
    }

    pub fn identity(m: usize) -> Self {
        Self((0..m).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(p, &q)| p == q)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn apply(&self, p: usize) -> usize {
        self.0[p]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.len()];
        for (p, &q) in self.0.iter().enumerate() {
            inv[q] = p;
        }
        Self(inv)
    }

    /// `p ↦ next(self(p))`.
    pub fn then(&self, next: &Perm) -> Self {
        assert_eq!(
            self.len(),
            next.len(),
            "composing permutations of different sizes"
        );
        Self(self.0.iter().map(|&q| next.0[q]).collect())
    }

    pub fn to_matrix(&self) -> DenseMatrix {
        let m = self.len();
        let mut out = DenseMatrix::zeros(m, m);
        for (p, &q) in self.0.iter().enumerate() {
            out[(p, q)] = 1.0;
        }
        out
    }

    /// Reads a permutation matrix back, failing unless `mat` is exactly 0/1
    /// with one 1 per row and column.
    pub fn from_matrix(mat: &DenseMatrix) -> Result<Self> {
        if !mat.is_square() {
            return Err(invalid!("permutation matrix must be square"));
        }
        let mut map = Vec::with_capacity(mat.rows());
        for r in 0..mat.rows() {
            let row = mat.row(r);
            if row.iter().any(|&v| v != 0.0 && v != 1.0) {
                return Err(invalid!("row {r} has entries other than 0/1"));
            }
            let ones: Vec<usize> = (0..row.len()).filter(|&c| row[c] == 1.0).collect();
            if ones.len() != 1 {
                return Err(invalid!("row {r} has {} ones", ones.len()));
            }
            map.push(ones[0]);
        }
        Self::new(map)
    }
}

impl TryFrom<Vec<usize>> for Perm {
    type Error = Error;

    fn try_from(map: Vec<usize>) -> Result<Self> {
        Self::new(map)
    }
}

impl From<Perm> for Vec<usize> {
    fn from(p: Perm) -> Self {
        p.0
    }
}

/// Matrix product of the represented permutation matrices.
impl Mul for &Perm {
    type Output = Perm;

    fn mul(self, rhs: &Perm) -> Perm {
        self.then(rhs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentResult {
    pub perm: Perm,
    pub value: f64,
}

/// Σ_p C[p, perm(p)], summed in row order.
pub fn assignment_value(c: &DenseMatrix, perm: &Perm) -> f64 {
    perm.as_slice()
        .iter()
        .enumerate()
        .map(|(p, &q)| c[(p, q)])
        .sum()
}

fn validate_square(c: &DenseMatrix) -> Result<()> {
    if !c.is_square() {
        return Err(invalid!(
            "assignment needs a square matrix, got {}x{}",
            c.rows(),
            c.cols()
        ));
    }
    if c.data().iter().any(|v| !v.is_finite()) {
        return Err(invalid!("assignment matrix has non-finite entries"));
    }
    Ok(())
}

/// Kuhn-Munkres (shortest augmenting path form) maximizing Σ_p C[p, σ(p)].
pub fn lap_max(c: &DenseMatrix) -> Result<AssignmentResult> {
    validate_square(c)?;
    let n = c.rows();
    if n == 0 {
        return Ok(AssignmentResult {
            perm: Perm::identity(0),
            value: 0.0,
        });
    }
    // minimize the negated weights; index 0 is the virtual column/row
    let cost = |r: usize, col: usize| -c[(r - 1, col - 1)];
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![f64::INFINITY; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0usize;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut map = vec![0usize; n];
    for j in 1..=n {
        map[row_of[j] - 1] = j - 1;
    }
    let perm = Perm(map);
    let value = assignment_value(c, &perm);
    Ok(AssignmentResult { perm, value })
}

/// Exhaustive search over all m! permutations (m ≤ 8). Among maximizers the
/// lexicographically smallest map wins.
pub fn lap_brute(c: &DenseMatrix) -> Result<AssignmentResult> {
    validate_square(c)?;
    let m = c.rows();
    if m > BRUTE_FORCE_MAX {
        return Err(Error::Size(format!(
            "brute-force assignment limited to m <= {BRUTE_FORCE_MAX}, got {m}"
        )));
    }
    let mut best: Option<AssignmentResult> = None;
    for_each_perm(m, |perm| {
        let value = assignment_value(c, perm);
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(AssignmentResult {
                perm: perm.clone(),
                value,
            });
        }
    });
    Ok(best.expect("at least one permutation of any size"))
}

/// Visits every permutation of 0..m in lexicographic order.
pub fn for_each_perm(m: usize, mut visit: impl FnMut(&Perm)) {
    let mut map: Vec<usize> = (0..m).collect();
    loop {
        visit(&Perm(map.clone()));
        // next lexicographic permutation
        let Some(i) = (1..m).rev().find(|&i| map[i - 1] < map[i]) else {
            return;
        };
        let j = (i..m).rev().find(|&j| map[j] > map[i - 1]).unwrap();
        map.swap(i - 1, j);
        map[i..].reverse();
    }
}

/// max_P tr(Pᵀ T): the best single-pair matching score.
pub fn f_score(t: &DenseMatrix) -> Result<f64> {
    Ok(lap_max(t)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(m: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        DenseMatrix::from_fn(m, m, |_, _| rng.random_range(0.0..1.0))
    }

    #[test]
    fn matrix_product_convention_matches_explicit_product() {
        let a = Perm::new(vec![1, 2, 0]).unwrap();
        let b = Perm::new(vec![0, 2, 1]).unwrap();
        let explicit = a.to_matrix().matmul(&b.to_matrix()).unwrap();
        assert_eq!(Perm::from_matrix(&explicit).unwrap(), &a * &b);
        // P(a)P(b) = P(p -> b(a(p)))
        assert_eq!((&a * &b).as_slice(), &[2, 1, 0]);
        assert_eq!(a.to_matrix().transpose(), a.inverse().to_matrix());
        assert!((&a * &a.inverse()).is_identity());
    }

    #[test]
    fn perm_validation() {
        assert!(Perm::new(vec![0, 0]).is_err());
        assert!(Perm::new(vec![0, 2]).is_err());
        assert!(Perm::new(vec![]).unwrap().is_empty());
        let parsed: std::result::Result<Perm, _> = serde_json::from_str("[1,1]");
        assert!(parsed.is_err());
    }

    #[test]
    fn identity_and_permutation_matrices() {
        let r = lap_max(&DenseMatrix::identity(3)).unwrap();
        assert!(r.perm.is_identity());
        assert_eq!(r.value, 3.0);
        let sigma = Perm::new(vec![3, 0, 4, 1, 2]).unwrap();
        let r = lap_max(&sigma.to_matrix()).unwrap();
        assert_eq!(r.perm, sigma);
        assert_eq!(r.value, 5.0);
    }

    #[test]
    fn two_by_two_enumeration() {
        let c = DenseMatrix::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let r = lap_max(&c).unwrap();
        assert!(r.perm.is_identity());
        assert!((r.value - 1.7).abs() < 1e-15);
        assert_eq!(lap_brute(&c).unwrap(), r);
    }

    #[test]
    fn brute_force_edge_cases() {
        let c = DenseMatrix::from_rows(&[vec![-4.5]]).unwrap();
        let r = lap_brute(&c).unwrap();
        assert_eq!(r.perm.as_slice(), &[0]);
        assert_eq!(r.value, -4.5);
        assert!(matches!(
            lap_brute(&DenseMatrix::zeros(9, 9)),
            Err(Error::Size(_))
        ));
        // ties resolve to the lexicographically smallest map
        let r = lap_brute(&DenseMatrix::zeros(3, 3)).unwrap();
        assert!(r.perm.is_identity());
    }

    #[test]
    fn rejects_invalid_matrices() {
        assert!(matches!(
            lap_max(&DenseMatrix::zeros(2, 3)),
            Err(Error::Validation(_))
        ));
        let mut c = DenseMatrix::zeros(2, 2);
        c[(0, 1)] = f64::INFINITY;
        assert!(matches!(lap_max(&c), Err(Error::Validation(_))));
    }

    #[test]
    fn f_score_examples() {
        let p = Perm::new(vec![2, 0, 1, 3]).unwrap();
        assert_eq!(f_score(&p.to_matrix()).unwrap(), 4.0);
        assert_eq!(f_score(&DenseMatrix::zeros(4, 4)).unwrap(), 0.0);
    }

    #[test]
    fn lexicographic_enumeration_counts() {
        let mut seen = Vec::new();
        for_each_perm(4, |p| seen.push(p.clone()));
        assert_eq!(seen.len(), 24);
        assert!(seen.windows(2).all(|w| w[0] < w[1]));
        let mut count = 0;
        for_each_perm(0, |_| count += 1);
        assert_eq!(count, 1);
    }

    #[test]
    fn agrees_with_brute_force_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for m in 1..=7 {
            for _ in 0..100 {
                let c = random_matrix(m, &mut rng);
                assert_eq!(lap_max(&c).unwrap().value, lap_brute(&c).unwrap().value);
            }
        }
    }

    #[test]
    fn value_invariant_under_row_and_column_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let m = 6;
            let c = random_matrix(m, &mut rng);
            let mut rows: Vec<usize> = (0..m).collect();
            let mut cols: Vec<usize> = (0..m).collect();
            rows.shuffle(&mut rng);
            cols.shuffle(&mut rng);
            let shuffled = DenseMatrix::from_fn(m, m, |r, k| c[(rows[r], cols[k])]);
            let a = lap_max(&c).unwrap().value;
            let b = lap_max(&shuffled).unwrap().value;
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_shift_moves_value_by_m_times_c() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let m = 5;
            let c = random_matrix(m, &mut rng);
            let shifted = DenseMatrix::from_fn(m, m, |r, k| c[(r, k)] + 2.5);
            let a = lap_max(&c).unwrap();
            let b = lap_max(&shifted).unwrap();
            assert!((b.value - a.value - 2.5 * m as f64).abs() < 1e-12);
            assert_eq!(a.perm, b.perm);
        }
    }
}
