//! Water-filling and the classical capacity of the memory channel.
//!
//! Capacities are in bits per mode. A set of modes with noise variances
//! `s_k` under a mean photon budget `N` gets `N_k = (W - s_k)_+`, with the
//! water level `W` fixed by `mean_k N_k = N`, and carries
//! `mean_k [g(N_k + s_k) - g(s_k)]`. The memory channel is the continuum
//! limit of this over the symbol of [`crate::spectral`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breaks, QuadConfig};
use crate::spectral::{noise_spectrum, SpectralSymbol};

pub const DEFAULT_TOL: f64 = 1e-10;
const DISCRETE_TOL: f64 = 1e-12;
const MAX_BISECTIONS: usize = 400;

/// Entropy (bits) of a thermal state with mean photon number `x`.
pub fn g(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("g(x) needs x >= 0, got {x}")));
    }
    Ok(thermal_entropy(x))
}

fn thermal_entropy(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    ((x + 1.0) * x.ln_1p() - x * x.ln()) / LN_2
}

fn lagrange_of(water_level: f64) -> f64 {
    (1.0 / water_level).ln_1p() / LN_2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub mu: f64,
    pub sigma: f64,
    /// Mean photon number budget per mode.
    #[serde(rename = "N")]
    pub n_photons: f64,
}

impl ChannelParams {
    pub fn new(mu: f64, sigma: f64, n_photons: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mu) {
            return Err(Error::InvalidParameter(format!("mu = {mu} outside [0, 1]")));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma = {sigma} must be >= 0")));
        }
        if !(n_photons > 0.0 && n_photons.is_finite()) {
            return Err(Error::InvalidParameter(format!("N = {n_photons} must be > 0")));
        }
        Ok(Self { mu, sigma, n_photons })
    }

    pub fn region(&self) -> Region {
        if self.sigma == 0.0 {
            Region::SigmaZero
        } else if self.mu == 1.0 {
            Region::MuOne
        } else {
            Region::Regular
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Regular,
    SigmaZero,
    MuOne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Allocation {
    /// Photon number per mode.
    Discrete(Vec<f64>),
    /// Modes with `lambda` in `[crossing, pi]` are filled.
    Continuous { crossing: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaterFillSolution {
    pub water_level: f64,
    /// `L = log2(1 + 1/W)`, i.e. `W = 1 / (2^L - 1)`.
    pub lagrange: f64,
    pub allocation: Allocation,
    pub capacity: f64,
    /// Signed constraint residual `mean allocation - N`.
    pub residual: f64,
}

fn check_budget(n_photons: f64) -> Result<()> {
    if n_photons > 0.0 && n_photons.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("N = {n_photons} must be > 0")))
    }
}

/// Bisection for the water level of a finite set of modes.
pub fn waterfill_discrete(variances: &[f64], n_photons: f64) -> Result<WaterFillSolution> {
    check_budget(n_photons)?;
    if variances.is_empty() {
        return Err(Error::InvalidParameter("need at least one mode".into()));
    }
    if let Some(bad) = variances.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter(format!("noise variance {bad} must be finite and >= 0")));
    }
    let count = variances.len() as f64;
    let filled = |w: f64| variances.iter().map(|s| (w - s).max(0.0)).sum::<f64>() / count;
    let max_noise = variances.iter().copied().fold(0.0, f64::max);

    let (mut lo, mut hi) = (n_photons, n_photons + max_noise);
    let mut w = hi;
    let mut residual = filled(w) - n_photons;
    for _ in 0..MAX_BISECTIONS {
        if residual.abs() <= DISCRETE_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let r = filled(mid) - n_photons;
        if r < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        (w, residual) = (mid, r);
    }
    if residual.abs() > DISCRETE_TOL * n_photons.max(1.0) {
        return Err(Error::NoConvergence {
            residual,
            tol: DISCRETE_TOL,
        });
    }

    let allocation: Vec<f64> = variances.iter().map(|s| (w - s).max(0.0)).collect();
    let capacity = allocation
        .iter()
        .zip(variances)
        .map(|(n, s)| thermal_entropy(n + s) - thermal_entropy(*s))
        .sum::<f64>()
        / count;
    Ok(WaterFillSolution {
        water_level: w,
        lagrange: lagrange_of(w),
        allocation: Allocation::Discrete(allocation),
        capacity,
        residual,
    })
}

pub fn capacity_discrete(variances: &[f64], n_photons: f64) -> Result<f64> {
    waterfill_discrete(variances, n_photons).map(|s| s.capacity)
}

/// Absolute targets are kept above the Kronrod round-off floor
/// (`50 eps` times the integral of `|f|`), which `scale` bounds.
fn quad_cfg(target: f64, scale: f64) -> QuadConfig {
    QuadConfig {
        abs_tol: target.max(200.0 * f64::EPSILON * scale),
        rel_tol: 0.0,
        max_subdivisions: 2000,
    }
}

/// `∫_0^pi (W - sigma(lambda))_+ dlambda / pi` with the breakpoint placed
/// analytically. Only the symbol is integrated numerically; the constant
/// `W (pi - crossing)` is added exactly.
fn filled_continuous(symbol: &SpectralSymbol, w: f64, tol: f64) -> Result<(f64, f64)> {
    let crossing = symbol.crossing(w);
    if crossing >= PI {
        return Ok((0.0, crossing));
    }
    let cfg = quad_cfg(0.01 * tol, PI * symbol.sigma);
    let noise = integrate_with_breaks(|l| symbol.at(l), &symbol.peak_breaks(crossing), &cfg)?;
    Ok(((w * (PI - crossing) - noise.value) / PI, crossing))
}

/// Water level for the continuum of collective modes.
pub fn waterfill_continuous(mu: f64, sigma: f64, n_photons: f64, tol: f64) -> Result<WaterFillSolution> {
    check_budget(n_photons)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol = {tol} must be > 0")));
    }
    let symbol = SpectralSymbol::new(mu, sigma)?;
    // Quadrature error in the objective is held to 1% of tol.
    let slack = tol;

    let (mut lo, mut hi) = (n_photons, n_photons + symbol.max());
    let (mut f_lo, _) = filled_continuous(&symbol, lo, tol)?;
    let (mut f_hi, mut crossing) = filled_continuous(&symbol, hi, tol)?;
    let mut w = hi;
    let mut residual = f_hi - n_photons;
    for _ in 0..MAX_BISECTIONS {
        if residual.abs() <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (f_mid, c_mid) = filled_continuous(&symbol, mid, tol)?;
        if f_mid < f_lo - slack || f_mid > f_hi + slack {
            return Err(Error::NonMonotone { water_level: mid });
        }
        if f_mid < n_photons {
            (lo, f_lo) = (mid, f_mid);
        } else {
            (hi, f_hi) = (mid, f_mid);
        }
        (w, residual, crossing) = (mid, f_mid - n_photons, c_mid);
    }
    if residual.abs() > tol {
        return Err(Error::NoConvergence { residual, tol });
    }

    // Integrand g(W) - g(sigma(lambda)) on the filled set; the g(W) part is exact.
    let cfg = quad_cfg(1e-11, PI * thermal_entropy(symbol.max()));
    let noise_entropy = integrate_with_breaks(
        |l| thermal_entropy(symbol.at(l)),
        &symbol.peak_breaks(crossing),
        &cfg,
    )?;
    let capacity = (thermal_entropy(w) * (PI - crossing) - noise_entropy.value) / PI;
    Ok(WaterFillSolution {
        water_level: w,
        lagrange: lagrange_of(w),
        allocation: Allocation::Continuous { crossing },
        capacity,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryCapacity {
    pub capacity: f64,
    pub water_level: f64,
    pub lagrange: f64,
    pub region: Region,
}

/// Capacity with the water level and parameter region that produced it.
///
/// In the singular regions the channel reduces to a noiseless one, so the
/// water level there is `N` itself.
pub fn solve_memory(params: &ChannelParams, tol: f64) -> Result<MemoryCapacity> {
    let region = params.region();
    match region {
        Region::SigmaZero | Region::MuOne => {
            let w = params.n_photons;
            Ok(MemoryCapacity {
                capacity: thermal_entropy(w),
                water_level: w,
                lagrange: lagrange_of(w),
                region,
            })
        }
        Region::Regular => {
            let sol = waterfill_continuous(params.mu, params.sigma, params.n_photons, tol)?;
            Ok(MemoryCapacity {
                capacity: sol.capacity,
                water_level: sol.water_level,
                lagrange: sol.lagrange,
                region,
            })
        }
    }
}

pub fn capacity_memory(params: &ChannelParams, tol: f64) -> Result<f64> {
    solve_memory(params, tol).map(|m| m.capacity)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityBounds {
    pub lower: f64,
    pub upper: f64,
}

impl CapacityBounds {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Block sandwich: each of `blocks` consecutive groups of collective modes
/// is replaced by its worst (lower bound) or best (upper bound) variance.
pub fn capacity_bounds(params: &ChannelParams, n: usize, blocks: usize) -> Result<CapacityBounds> {
    if blocks == 0 || n == 0 || !n.is_multiple_of(blocks) {
        return Err(Error::BlockMismatch { n, blocks });
    }
    let spectrum = noise_spectrum(n, params.mu, params.sigma)?;
    let len = n / blocks;
    let (worst, best): (Vec<f64>, Vec<f64>) = spectrum
        .variances
        .chunks(len)
        .map(|b| (b[0], b[len - 1]))
        .unzip();
    Ok(CapacityBounds {
        lower: capacity_discrete(&worst, params.n_photons)?,
        upper: capacity_discrete(&best, params.n_photons)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub mus: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub n_photons: f64,
    /// `cells[i][j]` is the capacity at `(mus[i], sigmas[j])`.
    pub cells: Vec<Vec<Result<f64>>>,
}

impl Sweep {
    pub fn failures(&self) -> usize {
        self.cells.iter().flatten().filter(|c| c.is_err()).count()
    }
}

/// Capacity over a `mu x sigma` grid. Cells run in parallel on the current
/// rayon pool; each cell is computed independently, so results do not depend
/// on scheduling.
pub fn sweep(mus: &[f64], sigmas: &[f64], n_photons: f64, tol: f64) -> Sweep {
    let cells = mus
        .par_iter()
        .map(|&mu| {
            sigmas
                .par_iter()
                .map(|&sigma| {
                    ChannelParams::new(mu, sigma, n_photons).and_then(|p| capacity_memory(&p, tol))
                })
                .collect()
        })
        .collect();
    Sweep {
        mus: mus.to_vec(),
        sigmas: sigmas.to_vec(),
        n_photons,
        cells,
    }
}
