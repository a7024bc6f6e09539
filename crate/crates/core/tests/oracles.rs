//! Independent reference computations checked against the library.

use std::f64::consts::PI;

use memchan::noise_process::{
    distance_at, evolve, forgetfulness_horizon, l1_distance, GaussianNoiseDist, Horizon, MarkovParams,
    DEFAULT_MAX_STEPS,
};
use memchan::spectral::{build_m, eigenvalues, eigenvectors, noise_spectrum, symbol_average};
use memchan::quadrature::QuadConfig;
use memchan::waterfill::{capacity_memory, waterfill_continuous, ChannelParams, DEFAULT_TOL};
use num_complex::Complex64;

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let n = 2 * panels;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}

fn dist(re: f64, im: f64, v: f64) -> GaussianNoiseDist {
    GaussianNoiseDist::new(Complex64::new(re, im), v).unwrap()
}

/// `exp(-x) I_0(x)`: periodic trapezoid rule on the integral form for
/// moderate `x`, the asymptotic series beyond.
fn bessel_i0_scaled(x: f64) -> f64 {
    if x > 50.0 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..8 {
            let odd = (2 * k - 1) as f64;
            term *= odd * odd / (8.0 * k as f64 * x);
            sum += term;
        }
        return sum / (2.0 * PI * x).sqrt();
    }
    let k = 256;
    let h = PI / k as f64;
    let mut s = 0.5 * (1.0 + (-2.0 * x).exp());
    for i in 1..k {
        s += (x * ((i as f64 * h).cos() - 1.0)).exp();
    }
    s / k as f64
}

/// Probability that an isotropic complex Gaussian with total variance `v`,
/// centred at distance `a` from the origin, lands inside radius `r`.
fn disk_probability(a: f64, v: f64, r: f64) -> f64 {
    let s2 = 0.5 * v;
    let density = |t: f64| {
        if t == 0.0 {
            return 0.0;
        }
        t / s2 * (-(t - a) * (t - a) / (2.0 * s2)).exp() * bessel_i0_scaled(t * a / s2)
    };
    let reach = 12.0 * s2.sqrt();
    let (lo, hi) = ((a - reach).max(0.0), r.min(a + reach));
    if hi <= lo {
        return if r >= a { 1.0 } else { 0.0 };
    }
    simpson(density, lo, hi, 20_000)
}

fn erf(x: f64) -> f64 {
    2.0 / PI.sqrt() * simpson(|t| (-t * t).exp(), 0.0, x, 20_000)
}

/// L1 distance between isotropic complex Gaussians. With equal variances it
/// is `2 erf(d / (2 sqrt v))`; otherwise `p1 > p2` exactly on a disk and the
/// distance is twice the difference of the two disk probabilities.
fn l1_oracle(m1: Complex64, v1: f64, m2: Complex64, v2: f64) -> f64 {
    if v1 == v2 {
        return 2.0 * erf((m1 - m2).norm() / (2.0 * v1.sqrt()));
    }
    let (m1, v1, m2, v2) = if v1 < v2 { (m1, v1, m2, v2) } else { (m2, v2, m1, v1) };
    let (a, b) = (1.0 / v1, 1.0 / v2);
    let c = (m1 * a - m2 * b) / (a - b);
    let r2 = ((a / b).ln() + (a - b) * c.norm_sqr() - a * m1.norm_sqr() + b * m2.norm_sqr()) / (a - b);
    if r2 <= 0.0 {
        return 0.0;
    }
    let r = r2.sqrt();
    2.0 * (disk_probability((m1 - c).norm(), v1, r) - disk_probability((m2 - c).norm(), v2, r))
}

#[test]
fn l1_concentric_matches_radial_integral() {
    let (v1, v2) = (1.0f64, 2.0f64);
    let radial = simpson(
        |r| {
            let p1 = (-r * r / v1).exp() / (PI * v1);
            let p2 = (-r * r / v2).exp() / (PI * v2);
            2.0 * PI * r * (p1 - p2).abs()
        },
        0.0,
        20.0,
        200_000,
    );
    let got = l1_distance(&dist(0.0, 0.0, v1), &dist(0.0, 0.0, v2)).unwrap();
    assert!((got - radial).abs() < 1e-6, "{got} vs {radial}");
    assert!((got - 0.5).abs() < 1e-6);
}

#[test]
fn l1_matches_disk_oracle() {
    let cases = [
        (Complex64::new(0.0, 0.0), 1.0, Complex64::new(10.0, 0.0), 1.0),
        (Complex64::new(0.0, 0.0), 1.0, Complex64::new(1.0, 0.0), 1.0),
        (Complex64::new(0.5, -0.3), 0.7, Complex64::new(-0.2, 1.1), 0.7),
        (Complex64::new(2.0, 0.0), 3.0, Complex64::new(-1.0, 0.0), 0.5),
        (Complex64::new(0.3, 0.4), 1.0, Complex64::new(-0.5, 0.2), 2.5),
        (Complex64::new(1.0, 1.0), 0.2, Complex64::new(1.2, 0.9), 5.0),
        (Complex64::new(0.0, 0.0), 1.0, Complex64::new(0.0, 0.0), 1.0 + 1e-4),
    ];
    for (m1, v1, m2, v2) in cases {
        let want = l1_oracle(m1, v1, m2, v2);
        let got = l1_distance(&GaussianNoiseDist::new(m1, v1).unwrap(), &GaussianNoiseDist::new(m2, v2).unwrap())
            .unwrap();
        assert!((got - want).abs() < 1e-6, "{m1} {v1} / {m2} {v2}: {got} vs {want}");
    }
}

#[test]
fn l1_far_apart_is_two() {
    let got = l1_distance(&dist(0.0, 0.0, 1.0), &dist(10.0, 0.0, 1.0)).unwrap();
    assert!((got - 2.0).abs() < 1e-6, "{got}");
}

#[test]
fn horizon_regression_anchor() {
    let params = MarkovParams::new(0.5, 1.0).unwrap();
    let d1 = dist(2.0, 0.0, 3.0);
    let d2 = dist(-1.0, 0.0, 0.5);
    let epsilon = 1e-3;
    let nu = match forgetfulness_horizon(&params, &d1, &d2, epsilon, DEFAULT_MAX_STEPS).unwrap() {
        Horizon::Forgotten(nu) => nu,
        Horizon::NotForgetful => panic!("expected a finite horizon"),
    };

    // Late in the decay the distance is linear in the gaps, which shrink
    // like mu^(n-1); the oracle fixes the constant.
    let late = 10;
    let p1 = evolve(&d1, &params, late - 1);
    let p2 = evolve(&d2, &params, late - 1);
    let late_distance = l1_oracle(p1.mean, p1.variance, p2.mean, p2.variance);
    let lib = distance_at(&params, &d1, &d2, late).unwrap();
    assert!((lib - late_distance).abs() < 1e-6, "{lib} vs {late_distance}");
    let c = late_distance / 0.5f64.powi(late as i32 - 1);
    let bound = 1 + ((epsilon / c).ln() / 0.5f64.ln()).ceil() as u64;
    assert!(nu <= bound, "nu {nu}, bound {bound}");

    assert_eq!(nu, 13);
    let at_nu = distance_at(&params, &d1, &d2, nu).unwrap();
    assert!((at_nu - 8.264495298572852e-4).abs() < 1e-9, "{at_nu}");
}

/// Characteristic polynomial of a symmetric tridiagonal matrix at `x`.
fn char_poly(diag: &[f64], off: &[f64], x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, diag[0] - x);
    for k in 1..diag.len() {
        let next = (diag[k] - x) * cur - off[k - 1] * off[k - 1] * prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn poly_roots(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let (lo, hi) = (-1.0, 4.0);
    let steps = 50_000;
    let h = (hi - lo) / steps as f64;
    let mut roots = Vec::new();
    for i in 0..steps {
        let (mut a, mut b) = (lo + h * i as f64, lo + h * (i + 1) as f64);
        let (fa, fb) = (char_poly(diag, off, a), char_poly(diag, off, b));
        if fa == 0.0 {
            roots.push(a);
            continue;
        }
        if fb == 0.0 || fa * fb > 0.0 {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if char_poly(diag, off, a) * char_poly(diag, off, mid) <= 0.0 {
                b = mid;
            } else {
                a = mid;
            }
        }
        roots.push(0.5 * (a + b));
    }
    roots
}

#[test]
fn eigenvalues_match_characteristic_polynomial() {
    let m = build_m(3, 0.5).unwrap();
    let want = poly_roots(m.diag(), m.offdiag());
    assert_eq!(want.len(), 3);
    let got = eigenvalues(&m);
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() <= 1e-10 * w.abs(), "{got:?} vs {want:?}");
    }
    for mu in [0.2, 0.7, 0.95] {
        let m = build_m(9, mu).unwrap();
        let want = poly_roots(m.diag(), m.offdiag());
        let got = eigenvalues(&m);
        assert_eq!(want.len(), 9, "mu {mu}");
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-10 * w.abs(), "mu {mu}: {got:?} vs {want:?}");
        }
    }
}

/// Determinant of the precision matrix. The joint covariance determinant
/// factorises as `sigma ((1 - mu^2) sigma)^(n-1)`, which forces
/// `det M = 1 - mu^2` for every `n >= 2`.
#[test]
fn precision_determinant_is_one_minus_mu_squared() {
    for mu in [0.3, 0.7, 0.95] {
        for n in 2..=64 {
            let m = build_m(n, mu).unwrap();
            let (mut prev, mut cur) = (1.0, m.diag()[0]);
            for k in 1..n {
                let next = m.diag()[k] * cur - mu * mu * prev;
                prev = cur;
                cur = next;
            }
            let want = 1.0 - mu * mu;
            let by_eig: f64 = eigenvalues(&m).iter().product();
            assert!((cur - want).abs() < 1e-12, "n {n}, mu {mu}: {cur}");
            assert!((by_eig - want).abs() < 1e-8 * want, "n {n}, mu {mu}: {by_eig}");
        }
    }
}

#[test]
fn two_mode_closed_forms() {
    let mu = 0.5;
    let m = build_m(2, mu).unwrap();
    let eig = eigenvalues(&m);
    assert!((eig[0] - (1.0 - mu)).abs() < 1e-14 && (eig[1] - (1.0 + mu)).abs() < 1e-14);
    let o = eigenvectors(&m);
    let r = 1.0 / 2f64.sqrt();
    assert!((o[(0, 0)].abs() - r).abs() < 1e-12 && (o[(0, 1)] - o[(0, 0)]).abs() < 1e-12);
    assert!((o[(1, 0)].abs() - r).abs() < 1e-12 && (o[(1, 1)] + o[(1, 0)]).abs() < 1e-12);
    let s = noise_spectrum(2, mu, 1.0).unwrap();
    assert!((s.variances[0] - 1.5).abs() < 1e-14 && (s.variances[1] - 0.5).abs() < 1e-14);
}

#[test]
fn random_eigenvectors_diagonalise() {
    let m = build_m(8, 0.7).unwrap();
    let o = eigenvectors(&m);
    let eig = eigenvalues(&m);
    let d = &o * m.to_dense() * o.transpose();
    for i in 0..8 {
        for j in 0..8 {
            let want = if i == j { eig[i] } else { 0.0 };
            assert!((d[(i, j)] - want).abs() < 1e-8);
        }
    }
    let id = o.transpose() * &o;
    for i in 0..8 {
        for j in 0..8 {
            assert!((id[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10);
        }
    }
}

#[test]
fn symbol_average_matches_finite_spectrum() {
    let cfg = QuadConfig::with_abs_tol(1e-12);
    for (mu, sigma) in [(0.5, 1.0), (0.9, 3.0)] {
        let avg = symbol_average(|x| x, mu, sigma, &cfg).unwrap().value;
        assert!((avg - sigma).abs() < 1e-9);
        let finite = noise_spectrum(4096, mu, sigma).unwrap().mean();
        assert!((finite - avg).abs() < 0.01, "{finite} vs {avg}");
    }
}

/// `∫_{l}^{pi} sigma(lambda) dlambda` from the antiderivative
/// `2 sigma atan((1 + mu)/(1 - mu) tan(lambda / 2))`.
fn symbol_tail(mu: f64, sigma: f64, l: f64) -> f64 {
    sigma * (PI - 2.0 * ((1.0 + mu) / (1.0 - mu) * (0.5 * l).tan()).atan())
}

fn water_level_oracle(mu: f64, sigma: f64, n: f64) -> f64 {
    let filled = |w: f64| {
        let cos = (1.0 + mu * mu - sigma * (1.0 - mu * mu) / w) / (2.0 * mu);
        let l = cos.clamp(-1.0, 1.0).acos();
        (w * (PI - l) - symbol_tail(mu, sigma, l)) / PI
    };
    let (mut lo, mut hi) = (n, n + sigma * (1.0 + mu) / (1.0 - mu));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if filled(mid) < n {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn continuous_water_level_matches_closed_form() {
    for (mu, sigma, n) in [(0.5, 4.0, 8.0), (0.3, 1.0, 1.0), (0.9, 6.0, 8.0), (0.99, 2.0, 3.0)] {
        let want = water_level_oracle(mu, sigma, n);
        let got = waterfill_continuous(mu, sigma, n, DEFAULT_TOL).unwrap();
        assert!((got.water_level - want).abs() < 1e-8 * want, "{mu} {sigma} {n}: {} vs {want}", got.water_level);
        assert!(got.residual.abs() <= DEFAULT_TOL);
    }
}

#[test]
fn capacity_matches_high_precision_reference() {
    let p = ChannelParams::new(0.5, 4.0, 8.0).unwrap();
    let c = capacity_memory(&p, DEFAULT_TOL).unwrap();
    assert!((c - 1.8006592669892636).abs() < 1e-9, "{c}");
    let sol = waterfill_continuous(0.5, 4.0, 8.0, DEFAULT_TOL).unwrap();
    assert!((sol.water_level - 12.0).abs() < 1e-8);
}
