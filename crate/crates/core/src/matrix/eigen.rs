//! Symmetric eigensolvers.
//!
//! Small matrices use cyclic Jacobi rotations. Larger ones are reduced to
//! tridiagonal form with Householder reflectors and diagonalized by implicit
//! QL. The QL plane rotations are recorded instead of being accumulated into a
//! full basis, so only the `k` requested eigenvectors are ever formed; this
//! keeps a top-`k` solve at roughly the cost of the tridiagonal reduction.

use super::DenseMatrix;
use crate::error::{dim_err, invalid, Error, Result};

/// Dimension up to which [`EigMethod::Auto`] picks Jacobi.
pub const JACOBI_MAX_DIM: usize = 64;

const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigMethod {
    #[default]
    Auto,
    Jacobi,
    Tridiagonal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigOptions {
    pub method: EigMethod,
    /// Jacobi stops once the off-diagonal norm is below `tolerance * ||M||_F`.
    pub tolerance: f64,
    /// Jacobi sweep cap, or QL iterations allowed per eigenvalue.
    pub max_iterations: usize,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            method: EigMethod::Auto,
            tolerance: 1e-15,
            max_iterations: 100,
        }
    }
}

/// Leading eigenpairs: `values` descending, `vectors` is `dim x k` with one
/// unit eigenvector per column.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

pub fn sym_eigs_topk(m: &DenseMatrix, k: usize) -> Result<SymEigen> {
    sym_eigs_topk_with(m, k, &EigOptions::default())
}

pub fn sym_eigs_topk_with(m: &DenseMatrix, k: usize, opts: &EigOptions) -> Result<SymEigen> {
    if !m.is_square() {
        return Err(dim_err!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        ));
    }
    let n = m.rows();
    if k > n {
        return Err(dim_err!("requested {k} eigenpairs of a {n}x{n} matrix"));
    }
    let scale = m.max_abs().max(1.0);
    let asym = m.asymmetry();
    if asym > SYMMETRY_TOL * scale {
        return Err(invalid!("matrix is not symmetric (max asymmetry {asym:e})"));
    }
    if opts.tolerance.is_nan() || opts.tolerance <= 0.0 || opts.max_iterations == 0 {
        return Err(Error::Parameter(
            "eigensolver tolerance and iteration cap must be positive".into(),
        ));
    }
    if n == 0 || k == 0 {
        return Ok(SymEigen {
            values: Vec::new(),
            vectors: DenseMatrix::zeros(n, 0),
        });
    }
    let use_jacobi = match opts.method {
        EigMethod::Auto => n <= JACOBI_MAX_DIM,
        EigMethod::Jacobi => true,
        EigMethod::Tridiagonal => false,
    };
    if use_jacobi {
        jacobi(m, k, opts)
    } else {
        tridiagonal_ql(m, k, opts)
    }
}

/// Indices of the `k` largest values, descending, ties by index.
fn top_indices(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

fn jacobi(m: &DenseMatrix, k: usize, opts: &EigOptions) -> Result<SymEigen> {
    let n = m.rows();
    // symmetrize so tiny input asymmetry cannot bias the rotations
    let mut a = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let mut v = DenseMatrix::identity(n);
    let threshold = opts.tolerance * a.frobenius_norm();

    let off_norm = |a: &DenseMatrix| {
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                s += 2.0 * a[(i, j)] * a[(i, j)];
            }
        }
        s.sqrt()
    };

    let mut converged = off_norm(&a) <= threshold;
    let mut sweeps = 0;
    while !converged {
        if sweeps == opts.max_iterations {
            return Err(Error::Convergence(format!(
                "Jacobi did not converge in {sweeps} sweeps"
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    a[(r, p)] = c * arp - s * arq;
                    a[(r, q)] = s * arp + c * arq;
                }
                for r in 0..n {
                    let apr = a[(p, r)];
                    let aqr = a[(q, r)];
                    a[(p, r)] = c * apr - s * aqr;
                    a[(q, r)] = s * apr + c * aqr;
                }
                for r in 0..n {
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = c * vrp - s * vrq;
                    v[(r, q)] = s * vrp + c * vrq;
                }
            }
        }
        converged = off_norm(&a) <= threshold;
    }

    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    let idx = top_indices(&diag, k);
    let values = idx.iter().map(|&i| diag[i]).collect();
    let vectors = DenseMatrix::from_fn(n, k, |r, c| v[(r, idx[c])]);
    Ok(SymEigen { values, vectors })
}

/// Householder reduction `A = Q T Qᵀ`. Returns (diagonal, subdiagonal,
/// reflectors); reflector `r` acts on indices `r+1..n` and is stored as a
/// unit vector, or `None` when that column was already reduced.
fn householder_tridiagonalize(m: &DenseMatrix) -> (Vec<f64>, Vec<f64>, Vec<Option<Vec<f64>>>) {
    let n = m.rows();
    let mut a: Vec<f64> = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            0.5 * (m[(i, j)] + m[(j, i)])
        })
        .collect();
    let mut diag = vec![0.0; n];
    let mut sub = vec![0.0; n.saturating_sub(1)];
    let mut reflectors = Vec::with_capacity(n.saturating_sub(2));

    for k in 0..n.saturating_sub(2) {
        diag[k] = a[k * n + k];
        let len = n - k - 1;
        let mut v: Vec<f64> = (0..len).map(|r| a[(k + 1 + r) * n + k]).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let tail = v[1..].iter().map(|x| x * x).sum::<f64>();
        if norm == 0.0 || tail == 0.0 {
            sub[k] = v[0];
            reflectors.push(None);
            continue;
        }
        let alpha = if v[0] > 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= vnorm);
        sub[k] = alpha;

        // trailing block B <- H B H with H = I - 2 v vᵀ,
        // expanded as B - 2 v wᵀ - 2 w vᵀ where w = Bv - (vᵀBv) v
        let off = k + 1;
        let mut p = vec![0.0; len];
        for (r, pr) in p.iter_mut().enumerate() {
            let row = &a[(off + r) * n + off..(off + r) * n + n];
            *pr = row.iter().zip(&v).map(|(x, y)| x * y).sum();
        }
        let kappa: f64 = p.iter().zip(&v).map(|(x, y)| x * y).sum();
        let w: Vec<f64> = p.iter().zip(&v).map(|(pi, vi)| pi - kappa * vi).collect();
        for r in 0..len {
            let (vr, wr) = (2.0 * v[r], 2.0 * w[r]);
            let row = &mut a[(off + r) * n + off..(off + r) * n + n];
            for ((x, vc), wc) in row.iter_mut().zip(&v).zip(&w) {
                *x -= vr * wc + wr * vc;
            }
        }
        reflectors.push(Some(v));
    }
    if n >= 2 {
        diag[n - 2] = a[(n - 2) * n + n - 2];
        sub[n - 2] = a[(n - 1) * n + n - 2];
    }
    diag[n - 1] = a[(n - 1) * n + n - 1];
    (diag, sub, reflectors)
}

struct QlSweep {
    low: usize,
    high: usize,
    start: usize,
}

/// Implicit QL on a symmetric tridiagonal matrix (EISPACK tql2 ordering).
/// Returns the eigenvalues in their final diagonal positions together with
/// the rotation log needed to rebuild any eigenvector.
fn tridiagonal_ql(m: &DenseMatrix, k: usize, opts: &EigOptions) -> Result<SymEigen> {
    let n = m.rows();
    let (mut d, sub, reflectors) = householder_tridiagonalize(m);
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(&sub);

    let mut sweeps: Vec<QlSweep> = Vec::new();
    let mut rotations: Vec<(f64, f64)> = Vec::new();
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut mm = l;
        while mm < n - 1 && e[mm].abs() > eps * tst1 {
            mm += 1;
        }
        if mm > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > opts.max_iterations {
                    return Err(Error::Convergence(format!(
                        "QL iteration exceeded {} steps at eigenvalue {l}",
                        opts.max_iterations
                    )));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[mm];
                let (mut c, mut c2, mut c3) = (1.0, 1.0, 1.0);
                let el1 = e[l + 1];
                let (mut s, mut s2) = (0.0, 0.0);
                sweeps.push(QlSweep {
                    low: l,
                    high: mm,
                    start: rotations.len(),
                });
                for i in (l..mm).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    rotations.push((c, s));
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    let idx = top_indices(&d, k);
    let values = idx.iter().map(|&i| d[i]).collect();
    let mut vectors = DenseMatrix::zeros(n, k);
    for (col, &j) in idx.iter().enumerate() {
        // eigenvector of T: G_1 G_2 ... G_r e_j, rotations replayed newest first
        let mut y = vec![0.0; n];
        y[j] = 1.0;
        for sweep in sweeps.iter().rev() {
            let count = sweep.high - sweep.low;
            let rots = &rotations[sweep.start..sweep.start + count];
            // within a sweep rotation t acts on (high-1-t, high-t)
            for (t, &(c, s)) in rots.iter().enumerate().rev() {
                let i = sweep.high - 1 - t;
                let (yi, yi1) = (y[i], y[i + 1]);
                y[i] = c * yi + s * yi1;
                y[i + 1] = -s * yi + c * yi1;
            }
        }
        // back to the original basis: x = H_0 H_1 ... H_{n-3} y
        for (r, refl) in reflectors.iter().enumerate().rev() {
            if let Some(v) = refl {
                let seg = &mut y[r + 1..];
                let dot: f64 = seg.iter().zip(v).map(|(a, b)| a * b).sum();
                for (yi, vi) in seg.iter_mut().zip(v) {
                    *yi -= 2.0 * dot * vi;
                }
            }
        }
        for (row, val) in y.into_iter().enumerate() {
            vectors[(row, col)] = val;
        }
    }
    Ok(SymEigen { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v: f64 = rng.random_range(-1.0..1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    fn projector(vectors: &DenseMatrix, cols: &[usize]) -> DenseMatrix {
        let n = vectors.rows();
        DenseMatrix::from_fn(n, n, |r, c| {
            cols.iter()
                .map(|&k| vectors[(r, k)] * vectors[(c, k)])
                .sum()
        })
    }

    fn check_pairs(m: &DenseMatrix, eig: &SymEigen) {
        let norm = m.frobenius_norm().max(1e-300);
        let k = eig.values.len();
        for c in 0..k {
            let v = eig.vectors.column(c);
            let mv: Vec<f64> = (0..m.rows())
                .map(|r| m.row(r).iter().zip(&v).map(|(a, b)| a * b).sum())
                .collect();
            let res: f64 = mv
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - eig.values[c] * b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(res <= 1e-6 * norm, "residual {res} for pair {c}");
            for c2 in 0..k {
                let dot: f64 = v
                    .iter()
                    .zip(eig.vectors.column(c2))
                    .map(|(a, b)| a * b)
                    .sum();
                let want = if c == c2 { 1.0 } else { 0.0 };
                assert!((dot - want).abs() <= 1e-8, "orthonormality {c},{c2}: {dot}");
            }
        }
        for w in eig.values.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn diagonal_case() {
        let m = DenseMatrix::from_rows(&[
            vec![3.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 2.0],
        ])
        .unwrap();
        for method in [EigMethod::Jacobi, EigMethod::Tridiagonal] {
            let opts = EigOptions {
                method,
                ..Default::default()
            };
            let eig = sym_eigs_topk_with(&m, 2, &opts).unwrap();
            assert_eq!(eig.values, vec![3.0, 2.0]);
            assert!((eig.vectors[(0, 0)].abs() - 1.0).abs() < 1e-12);
            assert!((eig.vectors[(2, 1)].abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_gives_any_unit_vector() {
        let eig = sym_eigs_topk(&DenseMatrix::identity(3), 1).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-14);
        let norm: f64 = eig.vectors.column(0).iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_closed_form() {
        let m = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        for method in [EigMethod::Jacobi, EigMethod::Tridiagonal] {
            let opts = EigOptions {
                method,
                ..Default::default()
            };
            let eig = sym_eigs_topk_with(&m, 2, &opts).unwrap();
            assert!((eig.values[0] - 3.0).abs() < 1e-12);
            assert!((eig.values[1] - 1.0).abs() < 1e-12);
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let want = DenseMatrix::from_rows(&[vec![h, h], vec![h, -h]]).unwrap();
            for c in 0..2 {
                let got = projector(&eig.vectors, &[c]);
                let exp = projector(&want, &[c]);
                let dist: f64 = got
                    .data()
                    .iter()
                    .zip(exp.data())
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert!(dist < 1e-10);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        let asym = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(sym_eigs_topk(&asym, 1), Err(Error::Validation(_))));
        assert!(matches!(
            sym_eigs_topk(&DenseMatrix::identity(2), 3),
            Err(Error::Dimension(_))
        ));
        assert!(sym_eigs_topk(&DenseMatrix::zeros(2, 3), 1).is_err());
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let m = random_symmetric(12, 3);
        let opts = EigOptions {
            method: EigMethod::Jacobi,
            max_iterations: 1,
            ..Default::default()
        };
        assert!(matches!(
            sym_eigs_topk_with(&m, 3, &opts),
            Err(Error::Convergence(_))
        ));
    }

    #[test]
    fn both_methods_agree_on_random_matrices() {
        for (n, seed) in [(1, 1), (2, 2), (5, 3), (17, 4), (40, 5)] {
            let m = random_symmetric(n, seed);
            let j = sym_eigs_topk_with(
                &m,
                n,
                &EigOptions {
                    method: EigMethod::Jacobi,
                    ..Default::default()
                },
            )
            .unwrap();
            let t = sym_eigs_topk_with(
                &m,
                n,
                &EigOptions {
                    method: EigMethod::Tridiagonal,
                    ..Default::default()
                },
            )
            .unwrap();
            check_pairs(&m, &j);
            check_pairs(&m, &t);
            for (a, b) in j.values.iter().zip(&t.values) {
                assert!((a - b).abs() < 1e-10, "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn large_matrix_topk_through_tridiagonal_path() {
        let m = random_symmetric(150, 9);
        let eig = sym_eigs_topk(&m, 10).unwrap();
        check_pairs(&m, &eig);
        let all = sym_eigs_topk(&m, 150).unwrap();
        assert!((all.values.iter().sum::<f64>() - m.trace()).abs() < 1e-8);
        assert_eq!(&all.values[..10], &eig.values[..]);
    }

    #[test]
    fn degenerate_low_rank_spectrum() {
        // B Bᵀ with orthogonal-ish blocks: eigenvalue 3 with multiplicity 2, rest 0
        let b = DenseMatrix::from_fn(90, 2, |r, c| if r % 2 == c { 1.0 } else { 0.0 });
        let m = b.matmul(&b.transpose()).unwrap();
        let eig = sym_eigs_topk(&m, 2).unwrap();
        assert!((eig.values[0] - 45.0).abs() < 1e-9);
        assert!((eig.values[1] - 45.0).abs() < 1e-9);
        check_pairs(&m, &eig);
        let got = projector(&eig.vectors, &[0, 1]);
        let want =
            DenseMatrix::from_fn(90, 90, |r, c| if r % 2 == c % 2 { 1.0 / 45.0 } else { 0.0 });
        let dist: f64 = got
            .data()
            .iter()
            .zip(want.data())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(dist < 1e-9);
    }
}
