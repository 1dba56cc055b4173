//! Gaussian feature statistics and the Fréchet distance between them.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::MetricError;

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-6;
/// Eigenvalues above this (but below zero) are rounding noise and clipped.
const NEGATIVE_EIGEN_FLOOR: f64 = -1e-8;
const EIGEN_EPS: f64 = 1e-14;
const EIGEN_MAX_ITER: usize = 10_000;

/// Mean and unbiased covariance of a feature set.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub count: usize,
}

impl FeatureStats {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Column means and `(n − 1)`-normalised covariance of an `n × d` matrix.
pub fn fit_gaussian(features: &DMatrix<f64>) -> Result<FeatureStats, MetricError> {
    let n = features.nrows();
    if n < 2 {
        return Err(MetricError::TooFewSamples(n));
    }
    if !features.iter().all(|x| x.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    let mean = features.row_mean().transpose();
    let mut centered = features.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = centered.transpose() * &centered / (n - 1) as f64;
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok(FeatureStats {
        mean,
        cov,
        count: n,
    })
}

/// Eigenvalues and eigenvectors of a symmetric PSD matrix, retrying with a
/// growing diagonal jitter when the decomposition fails or is clearly
/// indefinite. Small negative eigenvalues are clipped to zero.
fn psd_eigen(m: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>, MetricError> {
    let d = m.nrows();
    let mut jitter = 0.0;
    loop {
        let shifted = if jitter > 0.0 {
            m + DMatrix::identity(d, d) * jitter
        } else {
            m.clone()
        };
        if let Some(mut eig) = shifted.try_symmetric_eigen(EIGEN_EPS, EIGEN_MAX_ITER) {
            let ok = eig
                .eigenvalues
                .iter()
                .all(|&l| l.is_finite() && l > NEGATIVE_EIGEN_FLOOR);
            if ok {
                eig.eigenvalues.apply(|l| *l = l.max(0.0));
                return Ok(eig);
            }
        }
        jitter = if jitter == 0.0 {
            JITTER_START
        } else {
            jitter * 10.0
        };
        if jitter > JITTER_MAX * (1.0 + 1e-9) {
            return Err(MetricError::NumericalFailure);
        }
    }
}

fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>, MetricError> {
    let eig = psd_eigen(m)?;
    let roots = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    Ok(&eig.eigenvectors * roots * eig.eigenvectors.transpose())
}

/// `‖μ₁ − μ₂‖² + Tr(Σ₁ + Σ₂ − 2 (Σ₁Σ₂)^{1/2})`.
///
/// The trace of the cross term is taken from the symmetric form
/// `(√Σ₁ Σ₂ √Σ₁)^{1/2}`, which shares its spectrum with `(Σ₁Σ₂)^{1/2}`.
pub fn frechet_distance(s1: &FeatureStats, s2: &FeatureStats) -> Result<f64, MetricError> {
    if s1.dim() != s2.dim() || s1.cov.shape() != s2.cov.shape() {
        return Err(MetricError::DimensionMismatch(s1.dim(), s2.dim()));
    }
    let mean_term = (&s1.mean - &s2.mean).norm_squared();
    let root1 = psd_sqrt(&s1.cov)?;
    let inner = &root1 * &s2.cov * &root1;
    let inner = (&inner + inner.transpose()) * 0.5;
    let cross = psd_eigen(&inner)?
        .eigenvalues
        .iter()
        .map(|l| l.sqrt())
        .sum::<f64>();
    let value = mean_term + s1.cov.trace() + s2.cov.trace() - 2.0 * cross;
    Ok(value.max(0.0))
}

/// Fréchet emotion distance between two feature matrices.
pub fn fed(features_real: &DMatrix<f64>, features_gen: &DMatrix<f64>) -> Result<f64, MetricError> {
    frechet_distance(&fit_gaussian(features_real)?, &fit_gaussian(features_gen)?)
}
