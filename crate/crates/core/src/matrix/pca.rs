use super::{sym_eigs_topk, DenseMatrix};
use crate::error::{bad_param, dim_err, Result};

/// Mean vector plus `k` orthonormal principal directions.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub basis: Vec<Vec<f64>>,
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn k(&self) -> usize {
        self.basis.len()
    }

    /// mean + B Bᵀ (x - mean)
    pub fn reconstruct(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(dim_err!(
                "sample has dimension {}, model expects {}",
                x.len(),
                self.dim()
            ));
        }
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        let mut out = self.mean.clone();
        for b in &self.basis {
            let coef: f64 = b.iter().zip(&centered).map(|(u, v)| u * v).sum();
            for (o, u) in out.iter_mut().zip(b) {
                *o += coef * u;
            }
        }
        Ok(out)
    }
}

/// Fits a rank-`k` PCA model; the covariance is normalized by the sample count.
pub fn pca_fit(samples: &[Vec<f64>], k: usize) -> Result<PcaModel> {
    let first = samples
        .first()
        .ok_or_else(|| bad_param!("PCA needs at least one sample"))?;
    let d = first.len();
    if k > d {
        return Err(dim_err!("cannot keep {k} components in dimension {d}"));
    }
    if let Some(i) = samples.iter().position(|s| s.len() != d) {
        return Err(dim_err!(
            "sample {i} has dimension {}, expected {d}",
            samples[i].len()
        ));
    }
    let count = samples.len() as f64;
    let mut mean = vec![0.0; d];
    for s in samples {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= count);

    let mut cov = DenseMatrix::zeros(d, d);
    for s in samples {
        let c: Vec<f64> = s.iter().zip(&mean).map(|(a, b)| a - b).collect();
        for r in 0..d {
            if c[r] == 0.0 {
                continue;
            }
            for col in r..d {
                cov[(r, col)] += c[r] * c[col];
            }
        }
    }
    for r in 0..d {
        for col in r..d {
            let v = cov[(r, col)] / count;
            cov[(r, col)] = v;
            cov[(col, r)] = v;
        }
    }
    let eig = sym_eigs_topk(&cov, k)?;
    let basis = (0..k).map(|c| eig.vectors.column(c)).collect();
    Ok(PcaModel { mean, basis })
}

/// Mean over samples of the squared reconstruction residual norm.
pub fn pca_reconstruction_error(samples: &[Vec<f64>], model: &PcaModel) -> Result<f64> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for s in samples {
        let rec = model.reconstruct(s)?;
        total += s
            .iter()
            .zip(&rec)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>();
    }
    Ok(total / samples.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_samples_have_zero_error() {
        let samples = vec![vec![1.0, -2.0, 3.0]; 4];
        for k in 0..=3 {
            let model = pca_fit(&samples, k).unwrap();
            assert_eq!(model.mean, vec![1.0, -2.0, 3.0]);
            assert_eq!(pca_reconstruction_error(&samples, &model).unwrap(), 0.0);
        }
    }

    #[test]
    fn line_samples_span_the_direction() {
        let dir = [0.6, 0.8];
        let samples: Vec<Vec<f64>> = [-2.0, -0.5, 1.0, 3.0]
            .iter()
            .map(|t| vec![1.0 + t * dir[0], -1.0 + t * dir[1]])
            .collect();
        let model = pca_fit(&samples, 1).unwrap();
        let b = &model.basis[0];
        assert!(((b[0] * dir[0] + b[1] * dir[1]).abs() - 1.0).abs() < 1e-10);
        assert!(pca_reconstruction_error(&samples, &model).unwrap() < 1e-20);
    }

    #[test]
    fn full_basis_reproduces_random_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let samples: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let model = pca_fit(&samples, 4).unwrap();
        assert!(pca_reconstruction_error(&samples, &model).unwrap() < 1e-8);
    }

    #[test]
    fn single_sample_rank_zero() {
        let samples = vec![vec![0.5, 0.25]];
        let model = pca_fit(&samples, 0).unwrap();
        assert_eq!(model.k(), 0);
        assert_eq!(pca_reconstruction_error(&samples, &model).unwrap(), 0.0);
    }

    // Oracle: the residual of a rank-1 fit equals the sum of the discarded
    // covariance eigenvalues. For the toy set below the centered data is
    // (-1,-1), (-1,1), (2,0) giving covariance [[2,0],[0,2/3]], so the
    // eigenvalues are 2 and 2/3 and the rank-1 error is exactly 2/3.
    #[test]
    fn toy_set_rank_one_error_matches_hand_eigensolve() {
        let samples = vec![vec![0.0, 0.0], vec![0.0, 2.0], vec![3.0, 1.0]];
        let model = pca_fit(&samples, 1).unwrap();
        assert_eq!(model.mean, vec![1.0, 1.0]);
        let err = pca_reconstruction_error(&samples, &model).unwrap();
        assert!((err - 2.0 / 3.0).abs() < 1e-12, "{err}");
    }

    #[test]
    fn errors_non_increasing_in_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples: Vec<Vec<f64>> = (0..12)
            .map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let errs: Vec<f64> = (0..=6)
            .map(|k| pca_reconstruction_error(&samples, &pca_fit(&samples, k).unwrap()).unwrap())
            .collect();
        for w in errs.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn dimension_errors() {
        let samples = vec![vec![1.0, 2.0]];
        assert!(matches!(
            pca_fit(&samples, 3),
            Err(crate::Error::Dimension(_))
        ));
        let model = pca_fit(&samples, 1).unwrap();
        assert!(pca_reconstruction_error(&[vec![1.0]], &model).is_err());
        assert!(pca_fit(&[], 0).is_err());
    }
}
