use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

/// Eigen-factorization of a covariance matrix used for sampling and for
/// Mahalanobis distances. Negative eigenvalues from round-off are clamped to
/// zero, so rank-deficient matrices still sample (inside their support).
#[derive(Debug, Clone)]
pub(crate) struct Factorization {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    // eigenvectors * diag(sqrt(eigenvalues))
    transform: DMatrix<f64>,
}

impl Factorization {
    pub(crate) fn new(covariance: &DMatrix<f64>) -> Self {
        let symmetric = (covariance + covariance.transpose()) * 0.5;
        let eig = SymmetricEigen::new(symmetric);
        let eigenvalues = eig.eigenvalues.map(|v| if v > 0.0 { v } else { 0.0 });
        let mut transform = eig.eigenvectors.clone();
        for (j, mut col) in transform.column_iter_mut().enumerate() {
            col *= eigenvalues[j].sqrt();
        }
        Self {
            eigenvalues,
            eigenvectors: eig.eigenvectors,
            transform,
        }
    }

    pub(crate) fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.max()
    }

    pub(crate) fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.min()
    }

    pub(crate) fn condition_number(&self) -> f64 {
        let min = self.min_eigenvalue();
        if min > 0.0 {
            self.max_eigenvalue() / min
        } else {
            f64::INFINITY
        }
    }

    /// Draws `z ~ N(0, covariance)` into `out`.
    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let d = out.len();
        let standard = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let z = &self.transform * standard;
        out.copy_from_slice(z.as_slice());
    }

    /// Squared Mahalanobis norm of `v`; infinite when `v` leaves the support.
    pub(crate) fn mahalanobis_squared(&self, v: &[f64]) -> f64 {
        let v = DVector::from_column_slice(v);
        let projected = self.eigenvectors.transpose() * v;
        projected
            .iter()
            .zip(self.eigenvalues.iter())
            .map(|(p, &lambda)| {
                if lambda > 0.0 {
                    p * p / lambda
                } else if *p == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .sum()
    }
}

pub(crate) fn mean_of<'a>(points: impl IntoIterator<Item = &'a [f64]>, d: usize) -> Vec<f64> {
    let mut mean = vec![0.0; d];
    let mut n = 0usize;
    for p in points {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v;
        }
        n += 1;
    }
    if n > 0 {
        for m in &mut mean {
            *m /= n as f64;
        }
    }
    mean
}

/// Covariance about `mean` with the given divisor; `diagonal_only` zeroes
/// every off-diagonal entry.
pub(crate) fn scatter<'a>(
    points: impl IntoIterator<Item = &'a [f64]>,
    mean: &[f64],
    divisor: f64,
    diagonal_only: bool,
) -> DMatrix<f64> {
    let d = mean.len();
    let mut cov = DMatrix::zeros(d, d);
    for p in points {
        for i in 0..d {
            let di = p[i] - mean[i];
            if diagonal_only {
                cov[(i, i)] += di * di;
                continue;
            }
            for j in 0..=i {
                cov[(i, j)] += di * (p[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in 0..=i {
            cov[(i, j)] /= divisor;
            cov[(j, i)] = cov[(i, j)];
        }
    }
    cov
}
