//! Large-deviation rate functions of the fixed-sample test statistic.
//!
//! `psi0(k)` and `psi1(k)` are the exponential decay rates of
//! `P0(T_n > k)` and `P1(T_n <= k)`. They come either from closed forms
//! (Gaussian, binarized Gaussian, Yule-Walker) or from numeric
//! Legendre-Fenchel transforms of the limiting cumulant generating functions
//! `phi_i(theta) = lim n^-1 log E_i exp(theta n T_n)`.

use crate::error::{Error, Result};
use crate::models::{Hypothesis, ModelKind, ModelSpec, Statistic};
use crate::numeric::{bernoulli_kl, bisect, golden_max, norm_sf};

/// Largest `|theta|` probed before a Legendre transform is declared infinite.
const THETA_CAP: f64 = 1e6;

/// Effective domain `{theta : phi(theta) < inf}` as an interval.
/// Infinite endpoints mean the domain is unbounded on that side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Domain {
    pub fn contains(&self, theta: f64) -> bool {
        theta > self.lo && theta < self.hi
    }

    pub fn is_bounded_below(&self) -> bool {
        self.lo.is_finite()
    }

    pub fn is_bounded_above(&self) -> bool {
        self.hi.is_finite()
    }
}

/// Limiting cumulant generating function `phi_i` of `T_n` under `P_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantLimit {
    model: ModelSpec,
    hyp: Hypothesis,
    domain: Domain,
}

impl CumulantLimit {
    /// Cumulant of the model's own statistic under `hyp`.
    ///
    /// The Yule-Walker ratio has no cumulant of this form and yields
    /// [`Error::NotApplicable`]; its rate functions are available in closed form.
    pub fn new(model: &ModelSpec, hyp: Hypothesis) -> Result<Self> {
        if model.statistic() == Statistic::YuleWalker {
            return Err(Error::NotApplicable(
                "the Yule-Walker ratio has no limiting cumulant; use the closed-form rate".into(),
            ));
        }
        let mut c = Self {
            model: *model,
            hyp,
            domain: Domain {
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
            },
        };
        if let ModelKind::Ar1 { .. } = model.kind() {
            c.domain = Domain {
                lo: c.domain_edge(-1.0),
                hi: c.domain_edge(1.0),
            };
        }
        Ok(c)
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn hypothesis(&self) -> Hypothesis {
        self.hyp
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// `phi_i(theta)`, `+inf` outside the effective domain.
    pub fn eval(&self, theta: f64) -> f64 {
        let mu = self.model.param(self.hyp);
        let (m0, m1) = self.model.hypothesis_params();
        match (self.model.kind(), self.model.statistic()) {
            (ModelKind::GaussianMean { .. }, Statistic::AvgLlr) => {
                let mean = (m1 - m0) * mu - (m1 * m1 - m0 * m0) / 2.0;
                let var = (m1 - m0) * (m1 - m0);
                theta * mean + 0.5 * theta * theta * var
            }
            (ModelKind::GaussianMean { .. }, Statistic::SampleMean) => {
                theta * mu + 0.5 * theta * theta
            }
            (ModelKind::GaussianMean { .. }, Statistic::Binarized { threshold }) => {
                let j = norm_sf(threshold - mu);
                log_bernoulli_mgf(j, theta)
            }
            (ModelKind::Ar1 { .. }, Statistic::AvgLlr) => ar1_llr_cumulant(theta, mu, m0, m1),
            (ModelKind::TwoStateMarkov { p, .. }, stat) => {
                let f = |from: usize, to: usize| -> f64 {
                    match stat {
                        Statistic::SampleMean => to as f64,
                        _ if from == 0 => 0.0,
                        _ if to == 1 => (m1 / m0).ln(),
                        _ => ((1.0 - m1) / (1.0 - m0)).ln(),
                    }
                };
                let trans = [[p, 1.0 - p], [1.0 - mu, mu]];
                log_perron_root(&trans, &f, theta)
            }
            _ => f64::INFINITY,
        }
    }

    /// Central-difference derivative with step `1e-5 * max(1, |theta|)`.
    pub fn slope(&self, theta: f64) -> f64 {
        let h = 1e-5 * theta.abs().max(1.0);
        (self.eval(theta + h) - self.eval(theta - h)) / (2.0 * h)
    }

    // Boundary of the effective domain in direction `dir`, by expansion then bisection.
    fn domain_edge(&self, dir: f64) -> f64 {
        let mut inside = 0.0;
        let mut step = 0.25;
        let outside = loop {
            let t = inside + dir * step;
            if t.abs() > THETA_CAP {
                return dir * f64::INFINITY;
            }
            if self.eval(t).is_finite() {
                inside = t;
                step *= 2.0;
            } else {
                break t;
            }
        };
        let (mut a, mut b) = (inside, outside);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m == a || m == b {
                break;
            }
            if self.eval(m).is_finite() {
                a = m;
            } else {
                b = m;
            }
        }
        b
    }

    // Largest finite point on the segment from `inside` toward `outside`.
    fn last_finite(&self, inside: f64, outside: f64) -> f64 {
        let (mut a, mut b) = (inside, outside);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m == a || m == b {
                break;
            }
            if self.eval(m).is_finite() {
                a = m;
            } else {
                b = m;
            }
        }
        a
    }
}

fn log_bernoulli_mgf(j: f64, theta: f64) -> f64 {
    // log(j e^theta + 1 - j) without overflow for large |theta|
    if theta > 0.0 {
        theta + (j + (1.0 - j) * (-theta).exp()).ln()
    } else {
        (j * theta.exp() + 1.0 - j).ln()
    }
}

fn ar1_admissible(p: f64, q: f64, mu: f64) -> bool {
    let m2 = mu * mu;
    let d1 = m2 < p && p <= 2.0 * m2 && q * q <= m2 * (p - m2);
    let d2 = 2.0 * m2 < p && p < 2.0 && p > 2.0 * q.abs();
    let d3 = p >= 2.0 && q * q <= p - 1.0;
    d1 || d2 || d3
}

fn ar1_llr_cumulant(theta: f64, mu: f64, mu0: f64, mu1: f64) -> f64 {
    let p = 1.0 + mu * mu + (mu1 - mu0) * (mu1 + mu0) * theta;
    let q = -mu - (mu1 - mu0) * theta;
    if !ar1_admissible(p, q, mu) {
        return f64::INFINITY;
    }
    let disc = (p * p - 4.0 * q * q).max(0.0);
    let arg = 0.5 * p + 0.5 * disc.sqrt();
    if arg <= 0.0 {
        return f64::INFINITY;
    }
    -0.5 * arg.ln()
}

/// Log of the Perron root of the tilted pair-chain matrix
/// `M((a, b), (c, d)) = Pi(c, d) 1{b = c} exp(theta f(c, d))`.
fn log_perron_root<F: Fn(usize, usize) -> f64>(trans: &[[f64; 2]; 2], f: &F, theta: f64) -> f64 {
    let mut shift = f64::NEG_INFINITY;
    for c in 0..2 {
        for d in 0..2 {
            if trans[c][d] > 0.0 {
                shift = shift.max(theta * f(c, d));
            }
        }
    }
    let mut m = [[0.0f64; 4]; 4];
    for a in 0..2 {
        for b in 0..2 {
            for d in 0..2 {
                let (row, col) = (2 * a + b, 2 * b + d);
                m[row][col] = trans[b][d] * (theta * f(b, d) - shift).exp();
            }
        }
    }
    let mut v = [1.0f64; 4];
    let mut lambda = 1.0;
    for _ in 0..100_000 {
        let mut w = [0.0f64; 4];
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = (0..4).map(|j| m[i][j] * v[j]).sum();
        }
        // Collatz-Wielandt bounds bracket the Perron root
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..4 {
            let r = w[i] / v[i];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        lambda = 0.5 * (lo + hi);
        let norm: f64 = w.iter().sum();
        for i in 0..4 {
            v[i] = w[i] / norm;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    shift + lambda.ln()
}

/// `sup_theta {theta kappa - phi(theta)}`, `+inf` when the supremum diverges.
pub fn legendre(cumulant: &CumulantLimit, kappa: f64) -> f64 {
    let obj = |t: f64| {
        let v = cumulant.eval(t);
        if v.is_finite() {
            t * kappa - v
        } else {
            f64::NEG_INFINITY
        }
    };
    let s0 = cumulant.slope(0.0);
    if (kappa - s0).abs() < 1e-14 {
        return 0.0;
    }
    let dir = if kappa > s0 { 1.0 } else { -1.0 };
    let (mut a, mut b) = (0.0f64, 0.0f64);
    let mut gb = obj(0.0);
    let mut step = 0.1;
    loop {
        let c = b + dir * step;
        if c.abs() > THETA_CAP {
            return f64::INFINITY;
        }
        let gc = obj(c);
        if gc == f64::NEG_INFINITY {
            let edge = cumulant.last_finite(b, c);
            let (lo, hi) = if a < edge { (a, edge) } else { (edge, a) };
            let (_, v) = golden_max(obj, lo, hi, 1e-10);
            return v.max(gb).max(obj(edge)).max(0.0);
        }
        if gc < gb {
            let (lo, hi) = if a < c { (a, c) } else { (c, a) };
            let (_, v) = golden_max(obj, lo, hi, 1e-10);
            return v.max(gb).max(0.0);
        }
        a = b;
        b = c;
        gb = gc;
        step *= 2.0;
    }
}

/// Inverse of `phi'`: the `theta` with `phi'(theta) = kappa`.
pub fn theta_of_slope(cumulant: &CumulantLimit, kappa: f64) -> Result<f64> {
    let s0 = cumulant.slope(0.0);
    if (s0 - kappa).abs() <= 1e-8 {
        return Ok(0.0);
    }
    let dir = if kappa > s0 { 1.0 } else { -1.0 };
    let dom = cumulant.domain();
    let mut inner = 0.0;
    let mut step = 0.1;
    let outer = loop {
        let mut t = inner + dir * step;
        let mut at_edge = false;
        if !dom.contains(t) {
            let edge = if dir > 0.0 { dom.hi } else { dom.lo };
            t = inner + 0.999_999 * (edge - inner);
            at_edge = (t - inner).abs() < 1e-12;
        }
        let s = cumulant.slope(t);
        if !s.is_finite() || at_edge || t.abs() > THETA_CAP {
            let (lo, hi) = attainable_slopes(cumulant);
            return Err(Error::Range {
                what: "kappa",
                value: kappa,
                lo,
                hi,
            });
        }
        if (s - kappa) * dir >= 0.0 {
            break t;
        }
        inner = t;
        step *= 2.0;
    };
    let (lo, hi) = if inner < outer { (inner, outer) } else { (outer, inner) };
    bisect(|t| cumulant.slope(t) - kappa, lo, hi, 1e-15, 1e-9)
        .ok_or_else(|| Error::Numeric(format!("slope inversion failed at kappa = {kappa}")))
}

fn attainable_slopes(cumulant: &CumulantLimit) -> (f64, f64) {
    let dom = cumulant.domain();
    let probe = |edge: f64, dir: f64| -> f64 {
        if edge.is_finite() {
            let t = edge - dir * 1e-6 * edge.abs().max(1.0);
            cumulant.slope(t)
        } else {
            cumulant.slope(dir * 50.0)
        }
    };
    (probe(dom.lo, -1.0), probe(dom.hi, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
enum RateKind {
    GaussianLlr { i: f64 },
    GaussianMean { mu0: f64, mu1: f64 },
    Bernoulli,
    YuleWalker { mu0: f64, mu1: f64 },
    Numeric(Box<[CumulantLimit; 2]>),
}

/// The pair `(psi0, psi1)` for a model and its statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFunctions {
    model: ModelSpec,
    j0: f64,
    j1: f64,
    kind: RateKind,
}

impl RateFunctions {
    /// Closed forms where available, numeric Legendre transforms otherwise.
    pub fn new(model: &ModelSpec) -> Result<Self> {
        let (j0, j1) = model.limits();
        let (m0, m1) = model.hypothesis_params();
        let kind = match (model.kind(), model.statistic()) {
            (ModelKind::GaussianMean { eta }, Statistic::AvgLlr) => RateKind::GaussianLlr {
                i: 2.0 * eta * eta,
            },
            (ModelKind::GaussianMean { .. }, Statistic::SampleMean) => {
                RateKind::GaussianMean { mu0: m0, mu1: m1 }
            }
            (ModelKind::GaussianMean { .. }, Statistic::Binarized { .. }) => RateKind::Bernoulli,
            (ModelKind::Ar1 { .. }, Statistic::YuleWalker) => {
                RateKind::YuleWalker { mu0: m0, mu1: m1 }
            }
            _ => return Self::numeric(model),
        };
        Ok(Self {
            model: *model,
            j0,
            j1,
            kind,
        })
    }

    /// Numeric Legendre transforms of the limiting cumulants.
    pub fn numeric(model: &ModelSpec) -> Result<Self> {
        let (j0, j1) = model.limits();
        let c0 = CumulantLimit::new(model, Hypothesis::Null)?;
        let c1 = CumulantLimit::new(model, Hypothesis::Alt)?;
        Ok(Self {
            model: *model,
            j0,
            j1,
            kind: RateKind::Numeric(Box::new([c0, c1])),
        })
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    /// `(J0, J1)`.
    pub fn limits(&self) -> (f64, f64) {
        (self.j0, self.j1)
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, RateKind::Numeric(_))
    }

    /// `(I0, I1)` when the statistic is the average LLR.
    pub fn kl_rates(&self) -> Option<(f64, f64)> {
        (self.model.statistic() == Statistic::AvgLlr).then(|| self.model.kl_rates())
    }

    /// `psi_i(kappa)`; `+inf` where the rate is infinite.
    pub fn psi(&self, hyp: Hypothesis, kappa: f64) -> f64 {
        let i = hyp.index();
        match &self.kind {
            RateKind::GaussianLlr { i: info } => {
                let s = if i == 0 { kappa + info } else { info - kappa };
                s * s / (4.0 * info)
            }
            RateKind::GaussianMean { mu0, mu1 } => {
                let m = if i == 0 { *mu0 } else { *mu1 };
                0.5 * (kappa - m) * (kappa - m)
            }
            RateKind::Bernoulli => {
                let j = if i == 0 { self.j0 } else { self.j1 };
                bernoulli_kl(kappa, j)
            }
            RateKind::YuleWalker { mu0, mu1 } => {
                if kappa.abs() >= 1.0 {
                    return f64::INFINITY;
                }
                let m = if i == 0 { *mu0 } else { *mu1 };
                (0.5 * ((1.0 + m * m - 2.0 * m * kappa) / (1.0 - kappa * kappa)).ln()).max(0.0)
            }
            RateKind::Numeric(c) => legendre(&c[i], kappa),
        }
    }

    pub fn psi0(&self, kappa: f64) -> f64 {
        self.psi(Hypothesis::Null, kappa)
    }

    pub fn psi1(&self, kappa: f64) -> f64 {
        self.psi(Hypothesis::Alt, kappa)
    }

    /// `g(kappa) = psi0(kappa) / psi1(kappa)`.
    pub fn g(&self, kappa: f64) -> f64 {
        self.psi0(kappa) / self.psi1(kappa)
    }

    /// Chernoff information `C` and the crossing point `kappa_c` where `psi0 = psi1`.
    pub fn chernoff_info(&self) -> Result<(f64, f64)> {
        let k = bisect(
            |k| self.psi0(k) - self.psi1(k),
            self.j0,
            self.j1,
            1e-15,
            1e-9,
        )
        .ok_or_else(|| Error::Numeric("psi0 - psi1 has no sign change on (J0, J1)".into()))?;
        Ok((self.psi0(k), k))
    }

    /// `kappa` in `(J0, J1)` with `g(kappa) = r`.
    pub fn g_inverse(&self, r: f64) -> Result<f64> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Domain(format!("g_inverse needs r > 0, got {r}")));
        }
        let tol = 1e-8 * r.max(1.0);
        let span = self.j1 - self.j0;
        let lo = self.j0 + 1e-300_f64.max(span * 1e-15);
        let hi = self.j1 - span * 1e-15;
        bisect(|k| self.g(k) - r, lo, hi, 0.0, tol)
            .ok_or_else(|| Error::Range {
                what: "r",
                value: r,
                lo: self.g(lo),
                hi: self.g(hi),
            })
    }

    /// `(psi1(J0) / I0, psi0(J1) / I1)`.
    pub fn are(&self) -> Result<(f64, f64)> {
        if self.model.statistic() == Statistic::AvgLlr {
            return Err(Error::NotApplicable(
                "relative efficiencies of the LLR statistic are identically 1".into(),
            ));
        }
        let (i0, i1) = self.model.kl_rates();
        Ok((self.psi1(self.j0) / i0, self.psi0(self.j1) / i1))
    }
}

/// `-inf_theta phi(theta)`, by golden-section search on the slope bracket.
///
/// For the LLR statistic this is the Chernoff information, with the
/// minimizer in `(0, 1)` for `phi0`.
pub fn neg_min_cumulant(cumulant: &CumulantLimit) -> f64 {
    let (lo, hi) = match (cumulant.model().statistic(), cumulant.hypothesis()) {
        (Statistic::AvgLlr, Hypothesis::Null) => (0.0, 1.0),
        (Statistic::AvgLlr, Hypothesis::Alt) => (-1.0, 0.0),
        _ => {
            let t = theta_of_slope(cumulant, 0.0).unwrap_or(0.0);
            (t - 1.0, t + 1.0)
        }
    };
    let (_, v) = golden_max(|t| -cumulant.eval(t), lo, hi, 1e-12);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::norm_cdf;

    fn gauss() -> ModelSpec {
        ModelSpec::gaussian(0.5, Statistic::AvgLlr).unwrap()
    }

    fn ar1() -> ModelSpec {
        ModelSpec::ar1(-0.5, 0.5, Statistic::AvgLlr).unwrap()
    }

    fn markov() -> ModelSpec {
        ModelSpec::markov(0.5, 0.25, 0.75, Statistic::AvgLlr).unwrap()
    }

    fn grid(j0: f64, j1: f64, n: usize) -> Vec<f64> {
        (1..=n).map(|k| j0 + (j1 - j0) * k as f64 / (n + 1) as f64).collect()
    }

    #[test]
    fn gaussian_legendre_at_zero() {
        let c = CumulantLimit::new(&gauss(), Hypothesis::Null).unwrap();
        assert!((legendre(&c, 0.0) - 0.125).abs() < 1e-10);
        let rf = RateFunctions::new(&gauss()).unwrap();
        assert!((rf.psi0(0.0) - 0.125).abs() < 1e-15);
        assert!((rf.psi1(0.0) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn envelope_identity() {
        for model in [gauss(), ar1(), markov()] {
            let c = CumulantLimit::new(&model, Hypothesis::Null).unwrap();
            for &t in &[0.2, 0.5, 0.8] {
                let k = c.slope(t);
                let expect = t * k - c.eval(t);
                assert!((legendre(&c, k) - expect).abs() < 1e-7, "{model:?} {t}");
            }
        }
    }

    #[test]
    fn ar1_chernoff_at_zero() {
        let c = CumulantLimit::new(&ar1(), Hypothesis::Null).unwrap();
        let expect = 0.5 * 1.25f64.ln();
        assert!((legendre(&c, 0.0) - expect).abs() < 1e-9);
        assert!((expect - 0.11157).abs() < 1e-5);
        let d = c.domain();
        assert!((d.lo + 0.125).abs() < 1e-9 && (d.hi - 1.125).abs() < 1e-9);
    }

    #[test]
    fn slope_inversion() {
        let c = CumulantLimit::new(&gauss(), Hypothesis::Null).unwrap();
        assert!((theta_of_slope(&c, 0.0).unwrap() - 0.5).abs() < 1e-7);
        let s0 = c.slope(0.0);
        assert_eq!(theta_of_slope(&c, s0).unwrap(), 0.0);

        let b = ModelSpec::gaussian(0.5, Statistic::Binarized { threshold: 0.0 }).unwrap();
        let cb = CumulantLimit::new(&b, Hypothesis::Null).unwrap();
        match theta_of_slope(&cb, 1.5) {
            Err(Error::Range { lo, hi, .. }) => assert!(lo < 0.01 && hi > 0.99),
            other => panic!("expected range error, got {other:?}"),
        }
    }

    #[test]
    fn markov_slope_root_matches_chernoff() {
        let c = CumulantLimit::new(&markov(), Hypothesis::Null).unwrap();
        let t = theta_of_slope(&c, 0.0).unwrap();
        assert!((c.slope(t)).abs() <= 1e-8);
        let rf = RateFunctions::new(&markov()).unwrap();
        let (cc, kc) = rf.chernoff_info().unwrap();
        assert!(kc.abs() < 1e-6);
        assert!((cc + c.eval(t)).abs() < 1e-8);
        assert!((cc - neg_min_cumulant(&c)).abs() < 1e-7);
    }

    #[test]
    fn markov_perron_root_at_zero() {
        for stat in [Statistic::AvgLlr, Statistic::SampleMean] {
            let m = ModelSpec::markov(0.3, 0.2, 0.9, stat).unwrap();
            for h in [Hypothesis::Null, Hypothesis::Alt] {
                let c = CumulantLimit::new(&m, h).unwrap();
                assert!(c.eval(0.0).abs() < 1e-10);
            }
        }
        let c = CumulantLimit::new(&markov(), Hypothesis::Null).unwrap();
        assert!(c.eval(1.0).abs() < 1e-10);
        let c1 = CumulantLimit::new(&markov(), Hypothesis::Alt).unwrap();
        assert!(c1.eval(-1.0).abs() < 1e-10);
    }

    #[test]
    fn llr_cumulant_shift() {
        for model in [gauss(), ar1(), markov()] {
            let c0 = CumulantLimit::new(&model, Hypothesis::Null).unwrap();
            let c1 = CumulantLimit::new(&model, Hypothesis::Alt).unwrap();
            assert!(c0.eval(1.0).abs() < 1e-10);
            assert!(c1.eval(-1.0).abs() < 1e-10);
            for &t in &[-1.0, -0.5, -0.1, 0.0, 0.1] {
                assert!((c1.eval(t) - c0.eval(t + 1.0)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn cumulants_are_convex() {
        for model in [gauss(), ar1(), markov()] {
            let c = CumulantLimit::new(&model, Hypothesis::Null).unwrap();
            let h = 0.01;
            for k in 0..=100 {
                let t = -0.1 + 1.2 * k as f64 / 100.0;
                let d2 = c.eval(t + h) - 2.0 * c.eval(t) + c.eval(t - h);
                assert!(d2 > 0.0, "{model:?} at {t}");
            }
        }
    }

    #[test]
    fn rate_function_invariants() {
        let models = [
            gauss(),
            ar1(),
            markov(),
            ModelSpec::gaussian(0.5, Statistic::Binarized { threshold: 0.0 }).unwrap(),
            ModelSpec::gaussian(0.5, Statistic::SampleMean).unwrap(),
            ModelSpec::ar1(-0.5, 0.5, Statistic::YuleWalker).unwrap(),
            ModelSpec::markov(0.5, 0.25, 0.75, Statistic::SampleMean).unwrap(),
        ];
        for model in models {
            let rf = RateFunctions::new(&model).unwrap();
            let (j0, j1) = rf.limits();
            assert!(rf.psi0(j0).abs() <= 1e-9, "{model:?}");
            assert!(rf.psi1(j1).abs() <= 1e-9, "{model:?}");
            let g = grid(j0, j1, 200);
            let v0: Vec<f64> = g.iter().map(|&k| rf.psi0(k)).collect();
            let v1: Vec<f64> = g.iter().map(|&k| rf.psi1(k)).collect();
            for w in v0.windows(2) {
                assert!(w[1] > w[0]);
            }
            for w in v1.windows(2) {
                assert!(w[1] < w[0]);
            }
            for v in [&v0, &v1] {
                assert!(v.iter().all(|&x| x >= 0.0));
                for w in v.windows(3) {
                    assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-8, "{model:?}");
                }
            }
            if model.statistic() == Statistic::AvgLlr {
                for &k in &g {
                    assert!((rf.psi1(k) - (rf.psi0(k) - k)).abs() <= 1e-7);
                }
            }
            for r in [0.1, 0.5, 1.0, 2.0, 10.0] {
                let k = rf.g_inverse(r).unwrap();
                assert!((rf.g(k) - r).abs() <= 1e-7 * r.max(1.0), "{model:?} r={r}");
            }
        }
    }

    #[test]
    fn numeric_matches_closed_form() {
        for model in [
            gauss(),
            ModelSpec::gaussian(0.5, Statistic::SampleMean).unwrap(),
            ModelSpec::gaussian(0.5, Statistic::Binarized { threshold: 0.0 }).unwrap(),
            ModelSpec::gaussian(0.8, Statistic::Binarized { threshold: 0.3 }).unwrap(),
        ] {
            let closed = RateFunctions::new(&model).unwrap();
            let numeric = RateFunctions::numeric(&model).unwrap();
            let (j0, j1) = closed.limits();
            for k in grid(j0, j1, 200) {
                assert!((closed.psi0(k) - numeric.psi0(k)).abs() <= 1e-6);
                assert!((closed.psi1(k) - numeric.psi1(k)).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn gaussian_g_inverse() {
        let rf = RateFunctions::new(&gauss()).unwrap();
        assert!((rf.g_inverse(4.0).unwrap() - 0.5 / 3.0).abs() < 1e-7);
        let (_, kc) = rf.chernoff_info().unwrap();
        assert!((rf.g_inverse(1.0).unwrap() - kc).abs() < 1e-7);
        let b = ModelSpec::gaussian(0.5, Statistic::Binarized { threshold: 0.0 }).unwrap();
        let rb = RateFunctions::new(&b).unwrap();
        assert!((rb.g_inverse(1e-9).unwrap() - norm_cdf(-0.5)).abs() < 1e-3);
    }

    #[test]
    fn binarized_chernoff_and_are() {
        let b = ModelSpec::gaussian(0.5, Statistic::Binarized { threshold: 0.0 }).unwrap();
        let rf = RateFunctions::new(&b).unwrap();
        let j0 = norm_cdf(-0.5);
        let expect = -(4.0 * j0 * (1.0 - j0)).sqrt().ln();
        let (c, _) = rf.chernoff_info().unwrap();
        assert!((c - expect).abs() < 1e-9);
        assert!((c - 0.0793).abs() < 1e-4);
        let (a0, a1) = rf.are().unwrap();
        let oracle = bernoulli_kl(norm_cdf(-0.5), norm_cdf(0.5)) / 0.5;
        assert!((a0 - oracle).abs() < 1e-12 && (a1 - oracle).abs() < 1e-12);
        assert!((a0 - 0.6180).abs() < 1e-3);
        assert!(RateFunctions::new(&gauss()).unwrap().are().is_err());
    }

    #[test]
    fn yule_walker_rates() {
        let m = ModelSpec::ar1(-0.5, 0.5, Statistic::YuleWalker).unwrap();
        let rf = RateFunctions::new(&m).unwrap();
        assert!((rf.psi0(0.0) - 0.5 * 1.25f64.ln()).abs() < 1e-14);
        let (c, kc) = rf.chernoff_info().unwrap();
        assert!(kc.abs() < 1e-9 && (c - 0.11157).abs() < 1e-5);
        let (a0, a1) = rf.are().unwrap();
        let (i0, _) = m.kl_rates();
        assert!((a0 - rf.psi1(-0.5) / i0).abs() < 1e-14);
        assert!((a0 - a1).abs() < 1e-12);
        assert!(RateFunctions::numeric(&m).is_err());
    }
}
