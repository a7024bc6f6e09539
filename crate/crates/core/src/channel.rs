//! Covariance-level model of the random-displacement channel.
//!
//! Quadratures are ordered `(x_1, p_1, ..., x_n, p_n)` with
//! `a = (x + i p) / sqrt 2`, so the vacuum has covariance `I / 2` and a
//! displacement by `z` shifts `(x, p)` by `(sqrt 2 Re z, sqrt 2 Im z)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::noise_process::{derive_seed, sample_path, sample_path_with, GaussianNoiseDist, MarkovParams};
use crate::spectral::{build_m, eigenvectors, noise_spectrum};

const ORTHO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::InvalidCovariance(format!("odd or empty phase-space dimension {dim}")));
        }
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: cov.nrows(),
            });
        }
        let asym = (&cov - cov.transpose()).abs().max();
        if asym > 1e-12 * cov.abs().max().max(1.0) {
            return Err(Error::InvalidCovariance(format!("asymmetric by {asym:e}")));
        }
        if cov.clone().cholesky().is_none() {
            return Err(Error::InvalidCovariance("not positive definite".into()));
        }
        Ok(Self { mean, cov })
    }

    pub fn vacuum(modes: usize) -> Self {
        Self {
            mean: DVector::zeros(2 * modes),
            cov: DMatrix::identity(2 * modes, 2 * modes) * 0.5,
        }
    }

    /// Product of coherent states with the given amplitudes.
    pub fn coherent(amplitudes: &[Complex64]) -> Self {
        let mut s = Self::vacuum(amplitudes.len());
        for (k, a) in amplitudes.iter().enumerate() {
            s.mean[2 * k] = SQRT_2 * a.re;
            s.mean[2 * k + 1] = SQRT_2 * a.im;
        }
        s
    }

    pub fn modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn photon_numbers(&self) -> Vec<f64> {
        (0..self.modes())
            .map(|k| {
                let (x, p) = (2 * k, 2 * k + 1);
                0.5 * (self.cov[(x, x)] + self.cov[(p, p)] - 1.0)
                    + 0.5 * (self.mean[x] * self.mean[x] + self.mean[p] * self.mean[p])
            })
            .collect()
    }

    pub fn total_photon_number(&self) -> f64 {
        self.photon_numbers().iter().sum()
    }

    /// `det(2 V)`; equals 1 for pure Gaussian states.
    pub fn purity_det(&self) -> f64 {
        (&self.cov * 2.0).determinant()
    }
}

/// Covariance of the displacement vector `(sqrt 2 Re z_k, sqrt 2 Im z_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseCovariance {
    cov: DMatrix<f64>,
}

impl NoiseCovariance {
    pub fn new(cov: DMatrix<f64>) -> Result<Self> {
        let dim = cov.nrows();
        if dim == 0 || !dim.is_multiple_of(2) || cov.ncols() != dim {
            return Err(Error::InvalidCovariance(format!("shape {}x{}", cov.nrows(), cov.ncols())));
        }
        let asym = (&cov - cov.transpose()).abs().max();
        let scale = cov.abs().max().max(1.0);
        if asym > 1e-12 * scale {
            return Err(Error::InvalidCovariance(format!("asymmetric by {asym:e}")));
        }
        let min_eig = SymmetricEigen::new(cov.clone()).eigenvalues.min();
        if min_eig < -1e-12 * scale {
            return Err(Error::InvalidCovariance(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(Self { cov })
    }

    pub fn zeros(modes: usize) -> Self {
        Self {
            cov: DMatrix::zeros(2 * modes, 2 * modes),
        }
    }

    /// Same `block` on the x and p quadratures, no x-p correlations.
    pub fn from_quadrature_block(block: &DMatrix<f64>) -> Self {
        let n = block.nrows();
        let mut cov = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                cov[(2 * i, 2 * j)] = block[(i, j)];
                cov[(2 * i + 1, 2 * j + 1)] = block[(i, j)];
            }
        }
        Self { cov }
    }

    pub fn modes(&self) -> usize {
        self.cov.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// The x-quadrature block.
    pub fn quadrature_block(&self) -> DMatrix<f64> {
        let n = self.modes();
        DMatrix::from_fn(n, n, |i, j| self.cov[(2 * i, 2 * j)])
    }
}

/// Averaging over Gaussian displacements adds their covariance.
pub fn apply_additive_noise(state: &GaussianState, noise: &NoiseCovariance) -> Result<GaussianState> {
    if noise.modes() != state.modes() {
        return Err(Error::DimensionMismatch {
            expected: state.modes(),
            got: noise.modes(),
        });
    }
    Ok(GaussianState {
        mean: state.mean.clone(),
        cov: &state.cov + &noise.cov,
    })
}

/// Stationary displacement covariance over `n` uses: `(1 - mu^2) sigma M^{-1}`
/// on each quadrature, built column by column from tridiagonal solves.
pub fn stationary_noise_cov(n: usize, mu: f64, sigma: f64) -> Result<NoiseCovariance> {
    if !(0.0..=1.0).contains(&mu) || !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("mu = {mu}, sigma = {sigma} out of range")));
    }
    if mu == 1.0 || sigma == 0.0 {
        return Err(Error::SingularRegion { mu, sigma });
    }
    let m = build_m(n, mu)?;
    let scale = (1.0 - mu * mu) * sigma;
    let mut block = DMatrix::zeros(n, n);
    let mut unit = vec![0.0; n];
    for col in 0..n {
        unit[col] = 1.0;
        for (row, v) in m.solve(&unit).into_iter().enumerate() {
            block[(row, col)] = scale * v;
        }
        unit[col] = 0.0;
    }
    // Symmetrise away rounding so downstream checks see an exact symmetric matrix.
    let block = (&block + block.transpose()) * 0.5;
    Ok(NoiseCovariance::from_quadrature_block(&block))
}

fn orthogonality_residual(o: &DMatrix<f64>) -> f64 {
    let n = o.nrows();
    (o.transpose() * o - DMatrix::identity(n, n)).abs().max()
}

/// Applies the passive transformation `a_j -> sum_k O_jk a_k` (the same real
/// rotation on x and p quadratures).
pub fn encode_orthogonal(state: &GaussianState, o: &DMatrix<f64>) -> Result<GaussianState> {
    if !o.is_square() || o.nrows() != state.modes() {
        return Err(Error::DimensionMismatch {
            expected: state.modes(),
            got: o.nrows(),
        });
    }
    let residual = orthogonality_residual(o);
    if residual > ORTHO_TOL {
        return Err(Error::NotOrthogonal { residual });
    }
    let s = NoiseCovariance::from_quadrature_block(o).cov;
    Ok(GaussianState {
        mean: &s * &state.mean,
        cov: &s * &state.cov * s.transpose(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoupleReport {
    /// Largest off-diagonal entry of the rotated noise covariance.
    pub max_offdiag: f64,
    /// Largest deviation of the rotated diagonal from the collective spectrum.
    pub max_variance_error: f64,
    /// Rotated per-quadrature noise variances, one per collective mode.
    pub variances: Vec<f64>,
}

impl DecoupleReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_offdiag < tol && self.max_variance_error < tol
    }
}

/// Rotates the stationary noise covariance into the eigenbasis of `M`.
pub fn decouple_check(n: usize, mu: f64, sigma: f64) -> Result<DecoupleReport> {
    let noise = stationary_noise_cov(n, mu, sigma)?;
    let spectrum = noise_spectrum(n, mu, sigma)?;
    let o = eigenvectors(&build_m(n, mu)?);
    let s = NoiseCovariance::from_quadrature_block(&o).cov;
    let rotated = &s * noise.matrix() * s.transpose();
    let dim = 2 * n;
    let mut max_offdiag: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            if i != j {
                max_offdiag = max_offdiag.max(rotated[(i, j)].abs());
            }
        }
    }
    let variances: Vec<f64> = (0..n).map(|k| rotated[(2 * k, 2 * k)]).collect();
    let max_variance_error = (0..n)
        .map(|k| {
            let want = spectrum.variances[k];
            (rotated[(2 * k, 2 * k)] - want)
                .abs()
                .max((rotated[(2 * k + 1, 2 * k + 1)] - want).abs())
        })
        .fold(0.0, f64::max);
    Ok(DecoupleReport {
        max_offdiag,
        max_variance_error,
        variances,
    })
}

/// `z~_j = n^{-1/2} sum_k exp(i 2 pi (j-1) k / n) z_k`, `j = 1..n`, with
/// `k = 1..n`.
pub fn collective_dft(path: &[Complex64]) -> Vec<Complex64> {
    let n = path.len();
    let norm = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|j| {
            path.iter()
                .enumerate()
                .map(|(k, z)| {
                    let phase = 2.0 * PI * ((j * (k + 1)) % n) as f64 / n as f64;
                    z * Complex64::from_polar(1.0, phase)
                })
                .sum::<Complex64>()
                * norm
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnravelReport {
    pub n: usize,
    /// Per path: did the geometric-sum identity hold?
    pub passed: Vec<bool>,
    /// Largest `|z~_j|`, `j >= 2`, relative to `sqrt n |z_1|`.
    pub max_leak: f64,
    /// Largest relative error of `z~_1` against `sqrt n z_1`.
    pub max_head_error: f64,
}

impl UnravelReport {
    pub fn all_passed(&self) -> bool {
        self.passed.iter().all(|p| *p)
    }
}

/// Checks that for constant paths the first collective variable carries the
/// whole noise (`sqrt n z_1`) and the other `n - 1` vanish.
pub fn dft_unravel(n: usize, paths: &[Vec<Complex64>]) -> Result<UnravelReport> {
    if n < 2 {
        return Err(Error::InvalidParameter("n must be >= 2".into()));
    }
    let tol = 1e-12;
    let root_n = (n as f64).sqrt();
    let mut passed = Vec::with_capacity(paths.len());
    let (mut max_leak, mut max_head_error) = (0.0f64, 0.0f64);
    for path in paths {
        if path.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: path.len(),
            });
        }
        let collective = collective_dft(path);
        let scale = root_n * path[0].norm();
        let head_err = (collective[0] - path[0] * root_n).norm();
        let leak = collective[1..].iter().map(|z| z.norm()).fold(0.0, f64::max);
        let ok = head_err <= tol * scale && leak <= tol * scale;
        if scale > 0.0 {
            max_leak = max_leak.max(leak / scale);
            max_head_error = max_head_error.max(head_err / scale);
        }
        passed.push(ok);
    }
    Ok(UnravelReport {
        n,
        passed,
        max_leak,
        max_head_error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceCheck {
    pub empirical: f64,
    pub expected: f64,
    pub std_error: f64,
}

impl VarianceCheck {
    pub fn z_score(&self) -> f64 {
        (self.empirical - self.expected) / self.std_error
    }
}

/// Samples `paths` perfectly correlated (`mu = 1`) noise sequences started
/// from `(0, sigma)` and estimates `E|z~_1 / sqrt n|^2`, which should equal
/// `sigma`.
pub fn unravel_variance_check(n: usize, sigma: f64, paths: usize, seed: u64) -> Result<VarianceCheck> {
    if paths < 2 {
        return Err(Error::InvalidParameter("need at least two paths".into()));
    }
    let params = MarkovParams::new(1.0, sigma)?;
    let initial = GaussianNoiseDist::new(Complex64::new(0.0, 0.0), sigma)?;
    let heads: Vec<Complex64> = (0..paths as u64)
        .map(|i| collective_dft(&sample_path(&params, &initial, n, derive_seed(seed, i)))[0] / (n as f64).sqrt())
        .collect();
    let count = paths as f64;
    let mean = heads.iter().sum::<Complex64>() / count;
    let sq: Vec<f64> = heads.iter().map(|h| (h - mean).norm_sqr()).collect();
    let empirical = sq.iter().sum::<f64>() / (count - 1.0);
    let spread = sq.iter().map(|s| (s - empirical).powi(2)).sum::<f64>() / (count - 1.0);
    Ok(VarianceCheck {
        empirical,
        expected: sigma,
        std_error: (spread / count).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats {
    pub shots: usize,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub mean_se: DVector<f64>,
    pub cov_se: DMatrix<f64>,
}

impl ChannelStats {
    /// Largest `|empirical - reference| / se` over all covariance entries.
    pub fn max_cov_z(&self, reference: &DMatrix<f64>) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.cov.nrows() {
            for j in 0..self.cov.ncols() {
                let d = (self.cov[(i, j)] - reference[(i, j)]).abs();
                let z = if self.cov_se[(i, j)] > 0.0 {
                    d / self.cov_se[(i, j)]
                } else if d == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                worst = worst.max(z);
            }
        }
        worst
    }

    pub fn max_mean_z(&self, reference: &DVector<f64>) -> f64 {
        (0..self.mean.len())
            .map(|i| {
                let d = (self.mean[i] - reference[i]).abs();
                if self.mean_se[i] > 0.0 {
                    d / self.mean_se[i]
                } else if d == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Monte Carlo estimate of the channel output moments.
///
/// Each shot draws a stationary noise path from its own seed
/// `derive_seed(seed, shot)`, so the result is independent of how shots are
/// scheduled across threads.
pub fn monte_carlo_channel(
    params: &MarkovParams,
    state: &GaussianState,
    n: usize,
    shots: usize,
    seed: u64,
) -> Result<ChannelStats> {
    if shots < 1000 {
        return Err(Error::InvalidParameter(format!("shots = {shots} must be >= 1000")));
    }
    if state.modes() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: state.modes(),
        });
    }
    let initial = GaussianNoiseDist::stationary(params);
    let dim = 2 * n;
    let displacements: Vec<f64> = (0..shots as u64)
        .into_par_iter()
        .flat_map_iter(|shot| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, shot));
            sample_path_with(params, &initial, n, &mut rng)
                .into_iter()
                .flat_map(|z| [SQRT_2 * z.re, SQRT_2 * z.im])
        })
        .collect();

    let count = shots as f64;
    let rows = || displacements.chunks_exact(dim);
    let mut d_mean = DVector::zeros(dim);
    for row in rows() {
        for (a, v) in row.iter().enumerate() {
            d_mean[a] += v;
        }
    }
    d_mean /= count;

    let mut sum = DMatrix::<f64>::zeros(dim, dim);
    let mut sum_sq = DMatrix::<f64>::zeros(dim, dim);
    let mut centered = vec![0.0; dim];
    for row in rows() {
        for a in 0..dim {
            centered[a] = row[a] - d_mean[a];
        }
        for a in 0..dim {
            for b in a..dim {
                let p = centered[a] * centered[b];
                sum[(a, b)] += p;
                sum_sq[(a, b)] += p * p;
            }
        }
    }
    let mut d_cov = DMatrix::zeros(dim, dim);
    let mut cov_se = DMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in a..dim {
            let c = sum[(a, b)] / (count - 1.0);
            let second = sum_sq[(a, b)] / count;
            let se = ((second - c * c).max(0.0) / count).sqrt();
            d_cov[(a, b)] = c;
            d_cov[(b, a)] = c;
            cov_se[(a, b)] = se;
            cov_se[(b, a)] = se;
        }
    }
    let mean_se = DVector::from_fn(dim, |a, _| (d_cov[(a, a)] / count).sqrt());
    Ok(ChannelStats {
        shots,
        mean: &state.mean + d_mean,
        cov: &state.cov + d_cov,
        mean_se,
        cov_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        a.qr().q()
    }

    #[test]
    fn vacuum_and_coherent_conventions() {
        let v = GaussianState::vacuum(3);
        assert_eq!(v.total_photon_number(), 0.0);
        assert!((v.purity_det() - 1.0).abs() < 1e-14);
        let c = GaussianState::coherent(&[Complex64::new(1.0, 2.0)]);
        assert!((c.photon_numbers()[0] - 5.0).abs() < 1e-14);
    }

    #[test]
    fn state_validation() {
        assert!(GaussianState::new(DVector::zeros(3), DMatrix::identity(3, 3)).is_err());
        assert!(GaussianState::new(DVector::zeros(2), DMatrix::identity(4, 4)).is_err());
        let mut bad = DMatrix::identity(2, 2);
        bad[(0, 1)] = 0.3;
        assert!(GaussianState::new(DVector::zeros(2), bad).is_err());
        assert!(GaussianState::new(DVector::zeros(2), -DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn zero_noise_is_identity() {
        let s = GaussianState::coherent(&[Complex64::new(0.3, -0.2), Complex64::new(1.0, 0.0)]);
        assert_eq!(apply_additive_noise(&s, &NoiseCovariance::zeros(2)).unwrap(), s);
    }

    #[test]
    fn noise_dimension_mismatch() {
        assert!(matches!(
            apply_additive_noise(&GaussianState::vacuum(2), &NoiseCovariance::zeros(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn stationary_noise_adds_sigma_photons_per_mode() {
        let s = GaussianState::coherent(&[Complex64::new(1.0, 1.0), Complex64::new(0.0, -0.5)]);
        let noise = stationary_noise_cov(2, 0.4, 2.5).unwrap();
        let out = apply_additive_noise(&s, &noise).unwrap();
        let before = s.photon_numbers();
        for (a, b) in out.photon_numbers().iter().zip(&before) {
            assert!((a - b - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn single_use_follows_unit_precision_convention() {
        // n = 1 takes M = (1), so the lone mode sees (1 - mu^2) sigma.
        let noise = stationary_noise_cov(1, 0.4, 2.5).unwrap();
        assert!((noise.quadrature_block()[(0, 0)] - 0.84 * 2.5).abs() < 1e-15);
    }

    #[test]
    fn memoryless_noise_is_diagonal() {
        let noise = stationary_noise_cov(2, 0.0, 1.5).unwrap();
        assert!((noise.matrix() - DMatrix::identity(4, 4) * 1.5).abs().max() < 1e-15);
    }

    #[test]
    fn stationary_block_small_case() {
        let noise = stationary_noise_cov(2, 0.5, 1.0).unwrap();
        // 0.75 * [[1, -0.5], [-0.5, 1]]^{-1} = [[1, 0.5], [0.5, 1]]
        let want = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        assert!((noise.quadrature_block() - want).abs().max() < 1e-14);
        // No x-p cross terms.
        assert_eq!(noise.matrix()[(0, 1)], 0.0);
        assert_eq!(noise.matrix()[(0, 3)], 0.0);
    }

    #[test]
    fn stationary_block_is_ar1_autocovariance() {
        let (mu, sigma) = (0.7, 2.0);
        let block = stationary_noise_cov(10, mu, sigma).unwrap().quadrature_block();
        for i in 0..10 {
            for j in 0..10 {
                let want = sigma * mu.powi((i as i32 - j as i32).abs());
                assert!((block[(i, j)] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stationary_block_spectrum_matches_collective_variances() {
        let block = stationary_noise_cov(24, 0.8, 1.3).unwrap().quadrature_block();
        let mut eig: Vec<f64> = SymmetricEigen::new(block).eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        let spec = noise_spectrum(24, 0.8, 1.3).unwrap();
        for (a, b) in eig.iter().zip(&spec.variances) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn singular_noise_rejected() {
        assert!(matches!(stationary_noise_cov(4, 1.0, 1.0), Err(Error::SingularRegion { .. })));
        assert!(matches!(stationary_noise_cov(4, 0.2, 0.0), Err(Error::SingularRegion { .. })));
    }

    #[test]
    fn encoding_identity_and_coherent() {
        let s = GaussianState::coherent(&[Complex64::new(0.5, 0.1), Complex64::new(-1.0, 2.0)]);
        assert_eq!(encode_orthogonal(&s, &DMatrix::identity(2, 2)).unwrap(), s);
        let o = random_orthogonal(5, 3);
        let v = GaussianState::coherent(&[Complex64::new(1.0, 0.0); 5]);
        let out = encode_orthogonal(&v, &o).unwrap();
        assert!((out.cov() - DMatrix::identity(10, 10) * 0.5).abs().max() < 1e-14);
        assert!((out.total_photon_number() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn encoding_rejects_non_orthogonal() {
        let mut o = DMatrix::identity(2, 2);
        o[(0, 1)] = 0.1;
        assert!(matches!(
            encode_orthogonal(&GaussianState::vacuum(2), &o),
            Err(Error::NotOrthogonal { .. })
        ));
        assert!(matches!(
            encode_orthogonal(&GaussianState::vacuum(2), &DMatrix::identity(3, 3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn decouple_small_cases() {
        let r = decouple_check(5, 0.0, 2.0).unwrap();
        assert_eq!(r.max_offdiag, 0.0);
        let r = decouple_check(2, 0.5, 1.0).unwrap();
        assert!((r.variances[0] - 1.5).abs() < 1e-12);
        assert!((r.variances[1] - 0.5).abs() < 1e-12);
        assert!(r.passed(1e-10));
    }

    #[test]
    fn dft_of_constant_paths() {
        let c = Complex64::new(1.0, 1.0);
        let z = collective_dft(&[c; 4]);
        assert!((z[0] - c * 2.0).norm() < 1e-15);
        assert!(z[1..].iter().all(|w| w.norm() < 1e-15));
        let r = dft_unravel(3, &[vec![Complex64::new(-0.4, 2.2); 3]]).unwrap();
        assert!(r.all_passed());
        // The zero path passes trivially.
        assert!(dft_unravel(3, &[vec![Complex64::new(0.0, 0.0); 3]]).unwrap().all_passed());
    }

    #[test]
    fn dft_detects_uncorrelated_paths() {
        let path = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(1.0, 1.0)];
        let r = dft_unravel(3, &[path]).unwrap();
        assert!(!r.all_passed());
        assert!(dft_unravel(1, &[]).is_err());
        assert!(dft_unravel(3, &[vec![Complex64::new(0.0, 0.0); 2]]).is_err());
    }

    #[test]
    fn monte_carlo_rejects_few_shots() {
        let p = MarkovParams::new(0.5, 1.0).unwrap();
        assert!(monte_carlo_channel(&p, &GaussianState::vacuum(2), 2, 999, 0).is_err());
        assert!(monte_carlo_channel(&p, &GaussianState::vacuum(2), 3, 1000, 0).is_err());
    }

    #[test]
    fn monte_carlo_deterministic() {
        let p = MarkovParams::new(0.5, 1.0).unwrap();
        let a = monte_carlo_channel(&p, &GaussianState::vacuum(3), 3, 2000, 9).unwrap();
        let b = monte_carlo_channel(&p, &GaussianState::vacuum(3), 3, 2000, 9).unwrap();
        assert_eq!(a, b);
    }
}
