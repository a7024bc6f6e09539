//! Spectrum of the stationary noise.
//!
//! Over `n` uses the stationary joint density is proportional to
//! `exp(-z^H M z / ((1 - mu^2) sigma))` with `M` the tridiagonal matrix built
//! by [`build_m`]. Diagonalising `M` yields independent collective noise
//! variables with variances `(1 - mu^2) sigma / m_j`. As `n` grows their
//! empirical distribution follows the symbol
//! `sigma(lambda) = sigma (1 - mu^2) / |1 - mu e^{i lambda}|^2`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breaks, QuadConfig, QuadResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidParameter("matrix must have n >= 1".into()));
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(Error::DimensionMismatch {
                expected: diag.len() - 1,
                got: offdiag.len(),
            });
        }
        Ok(Self { diag, offdiag })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
        }
        for (i, &e) in self.offdiag.iter().enumerate() {
            m[(i, i + 1)] = e;
            m[(i + 1, i)] = e;
        }
        m
    }

    /// Solves `T x = rhs` by the Thomas algorithm (no pivoting; `T` is
    /// assumed positive definite).
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n();
        assert_eq!(rhs.len(), n);
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diag[0];
        d[0] = rhs[0] / denom;
        for i in 1..n {
            c[i - 1] = self.offdiag[i - 1] / denom;
            denom = self.diag[i] - self.offdiag[i - 1] * c[i - 1];
            d[i] = (rhs[i] - self.offdiag[i - 1] * d[i - 1]) / denom;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        d
    }
}

/// Precision matrix of the stationary noise over `n` uses.
pub fn build_m(n: usize, mu: f64) -> Result<SymTridiagonal> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::InvalidParameter(format!("mu = {mu} outside [0, 1]")));
    }
    let mut diag = vec![1.0 + mu * mu; n];
    diag[0] = 1.0;
    diag[n - 1] = 1.0;
    SymTridiagonal::new(diag, vec![-mu; n - 1])
}

/// Implicit QL with Wilkinson shifts. `z`, when given, accumulates the
/// rotations so that its columns end up as eigenvectors.
fn tql(d: &mut [f64], e_in: &[f64], mut z: Option<&mut DMatrix<f64>>) {
    let n = d.len();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(e_in);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 100, "tridiagonal QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for k in 0..n {
                        let f = z[(k, i + 1)];
                        z[(k, i + 1)] = s * z[(k, i)] + c * f;
                        z[(k, i)] = c * z[(k, i)] - s * f;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

/// All eigenvalues, nondecreasing.
pub fn eigenvalues(m: &SymTridiagonal) -> Vec<f64> {
    let mut d = m.diag.clone();
    tql(&mut d, &m.offdiag, None);
    d.sort_by(f64::total_cmp);
    d
}

/// Orthogonal `O` whose rows are eigenvectors, ordered like [`eigenvalues`],
/// so that `O M O^T = diag(m_j)`.
pub fn eigenvectors(m: &SymTridiagonal) -> DMatrix<f64> {
    let n = m.n();
    let mut d = m.diag.clone();
    let mut z = DMatrix::identity(n, n);
    tql(&mut d, &m.offdiag, Some(&mut z));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    DMatrix::from_fn(n, n, |row, col| z[(col, order[row])])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpectrum {
    pub mu: f64,
    pub sigma: f64,
    /// Collective-mode noise variances, nonincreasing.
    pub variances: Vec<f64>,
}

impl NoiseSpectrum {
    pub fn n(&self) -> usize {
        self.variances.len()
    }

    pub fn mean(&self) -> f64 {
        self.variances.iter().sum::<f64>() / self.n() as f64
    }
}

fn check_regular(mu: f64, sigma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&mu) || !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= mu <= 1 and sigma >= 0 (got mu = {mu}, sigma = {sigma})"
        )));
    }
    if mu == 1.0 || sigma == 0.0 {
        return Err(Error::SingularRegion { mu, sigma });
    }
    Ok(())
}

pub fn noise_spectrum(n: usize, mu: f64, sigma: f64) -> Result<NoiseSpectrum> {
    check_regular(mu, sigma)?;
    let scale = (1.0 - mu * mu) * sigma;
    // Eigenvalues ascend, so the variances come out nonincreasing.
    let variances = eigenvalues(&build_m(n, mu)?)
        .into_iter()
        .map(|m| scale / m)
        .collect();
    Ok(NoiseSpectrum { mu, sigma, variances })
}

/// `|1 - mu e^{i lambda}|^2`, written to stay accurate near `lambda = 0`
/// when `mu` is close to 1.
pub fn symbol_m(lambda: f64, mu: f64) -> f64 {
    let h = (0.5 * lambda).sin();
    (1.0 - mu) * (1.0 - mu) + 4.0 * mu * h * h
}

pub fn symbol_sigma(lambda: f64, mu: f64, sigma: f64) -> Result<f64> {
    let m = symbol_m(lambda, mu);
    if mu == 1.0 && lambda == 0.0 {
        return Err(Error::SingularRegion { mu, sigma });
    }
    Ok(sigma * (1.0 - mu * mu) / m)
}

/// Asymptotic noise-variance profile on `[0, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralSymbol {
    pub mu: f64,
    pub sigma: f64,
}

impl SpectralSymbol {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        check_regular(mu, sigma)?;
        Ok(Self { mu, sigma })
    }

    pub fn m(&self, lambda: f64) -> f64 {
        symbol_m(lambda, self.mu)
    }

    pub fn at(&self, lambda: f64) -> f64 {
        self.sigma * (1.0 - self.mu * self.mu) / self.m(lambda)
    }

    pub fn max(&self) -> f64 {
        self.sigma * (1.0 + self.mu) / (1.0 - self.mu)
    }

    pub fn min(&self) -> f64 {
        self.sigma * (1.0 - self.mu) / (1.0 + self.mu)
    }

    /// Smallest `lambda` with `sigma(lambda) <= level`; the symbol is
    /// nonincreasing, so `[crossing, pi]` is where it sits below `level`.
    pub fn crossing(&self, level: f64) -> f64 {
        if self.mu == 0.0 {
            return if self.sigma <= level { 0.0 } else { PI };
        }
        let mu = self.mu;
        // sin^2(lambda / 2) at which the symbol equals `level`.
        let h2 = (self.sigma * (1.0 - mu * mu) / level - (1.0 - mu) * (1.0 - mu)) / (4.0 * mu);
        2.0 * h2.clamp(0.0, 1.0).sqrt().asin()
    }

    /// Quadrature breakpoints clustering near the peak at `lambda = 0`.
    pub(crate) fn peak_breaks(&self, from: f64) -> Vec<f64> {
        let mut pts = vec![from];
        let mut p = 1.0 - self.mu;
        while p < PI {
            if p > from {
                pts.push(p);
            }
            p *= 4.0;
        }
        pts.push(PI);
        pts
    }
}

/// Mean absolute gap between the sorted collective variances and the
/// symbol sampled at `pi j / n`, `j = 1..n`.
pub fn szego_deviation(n: usize, mu: f64, sigma: f64) -> Result<f64> {
    let spectrum = noise_spectrum(n, mu, sigma)?;
    let symbol = SpectralSymbol::new(mu, sigma)?;
    let nf = n as f64;
    let total: f64 = spectrum
        .variances
        .iter()
        .enumerate()
        .map(|(j, v)| (v - symbol.at(PI * (j + 1) as f64 / nf)).abs())
        .sum();
    Ok(total / nf)
}

/// `∫_0^pi F(sigma(lambda)) dlambda / pi`.
pub fn symbol_average<F: Fn(f64) -> f64>(
    f: F,
    mu: f64,
    sigma: f64,
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    let symbol = SpectralSymbol::new(mu, sigma)?;
    let r = integrate_with_breaks(|l| f(symbol.at(l)), &symbol.peak_breaks(0.0), cfg)?;
    Ok(QuadResult {
        value: r.value / PI,
        abs_error: r.abs_error / PI,
        evaluations: r.evaluations,
    })
}
