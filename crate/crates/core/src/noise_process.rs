//! Gauss-Markov noise process driving the channel.
//!
//! The noise amplitude `z` evolves as `z' = mu * z + w` with `w` an isotropic
//! complex Gaussian of variance `(1 - mu^2) sigma`. Throughout, "variance" of
//! a complex variable means `E|z - mean|^2`, the total over both quadratures.
//! Gaussian laws are closed under the kernel, so propagation is done on
//! `(mean, variance)` pairs rather than on densities.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breaks, QuadConfig};

pub const DEFAULT_MAX_STEPS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkovParams {
    mu: f64,
    sigma: f64,
}

impl MarkovParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mu) {
            return Err(Error::InvalidParameter(format!("mu = {mu} outside [0, 1]")));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma = {sigma} must be >= 0")));
        }
        Ok(Self { mu, sigma })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Variance of the innovation added at each step.
    pub fn innovation_variance(&self) -> f64 {
        (1.0 - self.mu * self.mu) * self.sigma
    }
}

/// Isotropic complex Gaussian; `variance == 0` is a Dirac delta at `mean`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianNoiseDist {
    pub mean: Complex64,
    pub variance: f64,
}

impl GaussianNoiseDist {
    pub fn new(mean: Complex64, variance: f64) -> Result<Self> {
        if !(variance >= 0.0 && variance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "variance = {variance} must be >= 0"
            )));
        }
        if !(mean.re.is_finite() && mean.im.is_finite()) {
            return Err(Error::InvalidParameter("mean must be finite".into()));
        }
        Ok(Self { mean, variance })
    }

    pub fn stationary(params: &MarkovParams) -> Self {
        Self {
            mean: Complex64::new(0.0, 0.0),
            variance: params.sigma,
        }
    }

    pub fn is_singular(&self) -> bool {
        self.variance == 0.0
    }

    /// Density with respect to `d^2 z = d(Re z) d(Im z)`.
    pub fn density(&self, z: Complex64) -> f64 {
        let r2 = (z - self.mean).norm_sqr();
        (-r2 / self.variance).exp() / (std::f64::consts::PI * self.variance)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        self.mean + complex_normal(rng, self.variance)
    }
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

/// One application of the transition kernel.
pub fn transition_step(dist: &GaussianNoiseDist, params: &MarkovParams) -> GaussianNoiseDist {
    if params.mu == 1.0 {
        return *dist;
    }
    let mu2 = params.mu * params.mu;
    GaussianNoiseDist {
        mean: dist.mean * params.mu,
        variance: params.sigma + mu2 * (dist.variance - params.sigma),
    }
}

/// `steps` applications of the kernel, in closed form.
pub fn evolve(dist: &GaussianNoiseDist, params: &MarkovParams, steps: u64) -> GaussianNoiseDist {
    let decay = params.mu.powf(steps as f64);
    if decay == 1.0 {
        return *dist;
    }
    let decay2 = decay * decay;
    GaussianNoiseDist {
        mean: dist.mean * decay,
        variance: params.sigma + decay2 * (dist.variance - params.sigma),
    }
}

/// Draws `z_1, ..., z_n` with `z_1 ~ initial` and AR(1) increments.
pub fn sample_path(
    params: &MarkovParams,
    initial: &GaussianNoiseDist,
    n: usize,
    seed: u64,
) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_path_with(params, initial, n, &mut rng)
}

pub fn sample_path_with<R: Rng + ?Sized>(
    params: &MarkovParams,
    initial: &GaussianNoiseDist,
    n: usize,
    rng: &mut R,
) -> Vec<Complex64> {
    assert!(n >= 1, "path length must be positive");
    let innovation = params.innovation_variance();
    let mut path = Vec::with_capacity(n);
    let mut z = initial.sample(rng);
    path.push(z);
    for _ in 1..n {
        z = z * params.mu + complex_normal(rng, innovation);
        path.push(z);
    }
    path
}

/// SplitMix64 finalizer; maps `(master, index)` to an independent stream seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut x = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// `∫ |p1(z) - p2(z)| d^2 z`, in `[0, 2]`.
///
/// The pair is translated and rotated so that `d1` sits at the origin and
/// `d2` on the positive real axis. The sign of `p1 - p2` then changes across
/// a single circle (or a vertical line for equal variances), whose position
/// is found in closed form and used to split both quadrature directions into
/// panels on which the integrand has a fixed sign.
pub fn l1_distance(d1: &GaussianNoiseDist, d2: &GaussianNoiseDist) -> Result<f64> {
    if d1.is_singular() || d2.is_singular() {
        return Err(Error::ZeroVariance);
    }
    let (v1, v2) = (d1.variance, d2.variance);
    let gap = (d2.mean - d1.mean).norm();
    if gap == 0.0 && v1 == v2 {
        return Ok(0.0);
    }

    let pad = 8.0 * v1.max(v2).sqrt();
    let norm1 = 1.0 / (std::f64::consts::PI * v1);
    let norm2 = 1.0 / (std::f64::consts::PI * v2);
    let diff = |x: f64, y: f64| {
        let y2 = y * y;
        norm1 * (-(x * x + y2) / v1).exp() - norm2 * (-((x - gap) * (x - gap) + y2) / v2).exp()
    };

    // log(p1/p2) = a(x) + b * y^2
    let b = 1.0 / v2 - 1.0 / v1;
    let log_ratio = (v2 / v1).ln();
    let a_of = |x: f64| -x * x / v1 + (x - gap) * (x - gap) / v2 + log_ratio;

    let inner_cfg = QuadConfig {
        abs_tol: 1e-12,
        rel_tol: 1e-10,
        max_subdivisions: 400,
    };
    let inner = |x: f64| -> f64 {
        let mut breaks = vec![0.0];
        if b != 0.0 {
            let y2 = -a_of(x) / b;
            if y2 > 0.0 && y2.sqrt() < pad {
                breaks.push(y2.sqrt());
            }
        }
        breaks.push(pad);
        breaks
            .windows(2)
            .map(|w| {
                integrate_with_breaks(|y| diff(x, y), w, &inner_cfg)
                    .map(|r| r.value.abs())
                    .unwrap_or_else(|e| match e {
                        Error::Quadrature { estimate, .. } => estimate.abs(),
                        _ => unreachable!(),
                    })
            })
            .sum::<f64>()
            * 2.0
    };

    let (x_lo, x_hi) = (-pad, gap + pad);
    let mut breaks = vec![x_lo];
    // Roots of a(x) = 0: where the sign-change circle meets the real axis.
    let (qa, qb, qc) = (
        1.0 / v2 - 1.0 / v1,
        -2.0 * gap / v2,
        gap * gap / v2 + log_ratio,
    );
    let mut roots = Vec::new();
    if qa == 0.0 {
        if qb != 0.0 {
            roots.push(-qc / qb);
        }
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc > 0.0 {
            let s = disc.sqrt();
            let q = -0.5 * (qb + qb.signum() * s);
            if q != 0.0 {
                roots.push(q / qa);
                roots.push(qc / q);
            } else {
                roots.push(-qb / (2.0 * qa));
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    breaks.extend(roots.into_iter().filter(|r| *r > x_lo && *r < x_hi));
    breaks.push(x_hi);

    let outer_cfg = QuadConfig {
        abs_tol: 1e-10,
        rel_tol: 1e-12,
        max_subdivisions: 400,
    };
    let total = integrate_with_breaks(inner, &breaks, &outer_cfg)?;
    Ok(total.value.clamp(0.0, 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "nu")]
pub enum Horizon {
    /// Smallest `n` whose distance is below the threshold.
    Forgotten(u64),
    NotForgetful,
}

impl Horizon {
    pub fn steps(&self) -> Option<u64> {
        match self {
            Horizon::Forgotten(n) => Some(*n),
            Horizon::NotForgetful => None,
        }
    }
}

/// Distance between the two laws at step `n` (`n = 1` compares the initials).
pub fn distance_at(
    params: &MarkovParams,
    d1: &GaussianNoiseDist,
    d2: &GaussianNoiseDist,
    n: u64,
) -> Result<f64> {
    assert!(n >= 1, "steps are counted from 1");
    let p1 = evolve(d1, params, n - 1);
    let p2 = evolve(d2, params, n - 1);
    if p1 == p2 {
        return Ok(0.0);
    }
    l1_distance(&p1, &p2)
}

/// Distances for `n = 1..=steps`.
pub fn distance_trace(
    params: &MarkovParams,
    d1: &GaussianNoiseDist,
    d2: &GaussianNoiseDist,
    steps: u64,
) -> Result<Vec<f64>> {
    (1..=steps).map(|n| distance_at(params, d1, d2, n)).collect()
}

/// Smallest `n <= max_steps` with `||P_n - P'_n||_1 < epsilon`.
pub fn forgetfulness_horizon(
    params: &MarkovParams,
    d1: &GaussianNoiseDist,
    d2: &GaussianNoiseDist,
    epsilon: f64,
    max_steps: u64,
) -> Result<Horizon> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must be > 0")));
    }
    if max_steps < 1 {
        return Err(Error::InvalidParameter("max_steps must be >= 1".into()));
    }
    // For mu = 1 the kernel is the identity; for sigma = 0 (0 < mu < 1) the
    // step-n pair is the initial pair scaled by mu^(n-1), and L1 is
    // scale-invariant. Either way the distance never changes.
    let frozen = params.mu == 1.0 || (params.sigma == 0.0 && params.mu > 0.0);
    if frozen {
        let d = distance_at(params, d1, d2, 1)?;
        return Ok(if d < epsilon {
            Horizon::Forgotten(1)
        } else {
            Horizon::NotForgetful
        });
    }
    for n in 1..=max_steps {
        if distance_at(params, d1, d2, n)? < epsilon {
            return Ok(Horizon::Forgotten(n));
        }
    }
    Ok(Horizon::NotForgetful)
}
