//! Small numerical toolkit: normal distribution helpers, Bernoulli divergence,
//! scalar root finding and maximization, compensated summation and
//! Gauss-Legendre quadrature.

use statrs::function::erf::{erfc, erfc_inv};
use std::f64::consts::{PI, SQRT_2};

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal upper tail `P(Z > x)`.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Upper `p`-quantile `z_p` of the standard normal, i.e. `P(Z > z_p) = p`.
pub fn upper_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    SQRT_2 * erfc_inv(2.0 * p)
}

/// Kullback-Leibler divergence between Bernoulli(x) and Bernoulli(y).
///
/// Uses the `0 log 0 = 0` convention at the endpoints of `x`; returns `+inf`
/// when `x` is outside `[0, 1]` or `y` is degenerate where `x` is not.
pub fn bernoulli_kl(x: f64, y: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return f64::INFINITY;
    }
    let term = |a: f64, b: f64| -> f64 {
        if a == 0.0 {
            0.0
        } else if b == 0.0 {
            f64::INFINITY
        } else {
            a * (a / b).ln()
        }
    };
    term(x, y) + term(1.0 - x, 1.0 - y)
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
///
/// Stops when `|f(mid)| <= ftol` or the bracket is narrower than `xtol`.
/// Returns `None` when `f(lo)` and `f(hi)` share a strict sign.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    xtol: f64,
    ftol: f64,
) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.abs() <= ftol || (hi - lo).abs() <= xtol || mid == lo || mid == hi {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
/// Returns `(argmax, max)`.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iter = 0;
    while (b - a).abs() > tol && iter < 500 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        iter += 1;
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    // the midpoint can lose to an interior probe when the optimum sits on a boundary
    if fc > fx && fc >= fd {
        (c, fc)
    } else if fd > fx {
        (d, fd)
    } else {
        (x, fx)
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = CompensatedSum::default();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * f(mid + half * x));
        }
        half * acc.value()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Mean and standard error of a sample.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut s = CompensatedSum::default();
    for &x in xs {
        s.add(x);
    }
    let mean = s.value() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let mut ss = CompensatedSum::default();
    for &x in xs {
        ss.add((x - mean) * (x - mean));
    }
    let var = ss.value() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_quantiles_match_tables() {
        assert!((upper_quantile(0.05) - 1.644_853_626_951_472).abs() < 1e-12);
        assert!((upper_quantile(5e-5) - 3.890_591_886_413_094).abs() < 1e-9);
        assert!((upper_quantile(1e-8) - 5.612_001_244_174_789).abs() < 1e-9);
        assert!((norm_cdf(-1.658_312_395_177_7) - 0.048_624).abs() < 1e-5);
        let z = upper_quantile(1e-24);
        assert!((norm_sf(z) / 1e-24 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn bernoulli_kl_basics() {
        assert_eq!(bernoulli_kl(0.3, 0.3), 0.0);
        assert!(bernoulli_kl(0.0, 0.5) > 0.0);
        assert_eq!(bernoulli_kl(1.2, 0.5), f64::INFINITY);
        let v = bernoulli_kl(0.25, 0.75);
        assert!((v - 0.5 * 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_is_exact_on_polynomials() {
        let gl = GaussLegendre::new(128);
        let s: f64 = gl.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-13);
        let v = gl.integrate(|x| x.powi(10), 0.0, 2.0);
        assert!((v - 2f64.powi(11) / 11.0).abs() < 1e-10);
        let g = gl.integrate(norm_pdf, -12.0, 12.0);
        assert!((g - 1.0).abs() < 1e-13);
    }

    #[test]
    fn golden_and_bisect() {
        let (x, fx) = golden_max(|t| -(t - 0.3) * (t - 0.3) + 2.0, -5.0, 5.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6 && (fx - 2.0).abs() < 1e-12);
        let r = bisect(|t| t * t - 2.0, 0.0, 2.0, 1e-15, 0.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
        assert!(bisect(|t| t * t + 1.0, 0.0, 2.0, 1e-15, 0.0).is_none());
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }
}
