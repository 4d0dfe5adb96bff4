//! Three-stage and four-stage group-sequential tests built from fixed-sample
//! designs, plus the SPRT baseline.
//!
//! A multistage test is a list of checkpoints. At an early-accept checkpoint
//! `(n, k)` the test stops and accepts when `T_n <= k`; at an early-reject
//! checkpoint it stops and rejects when `T_n > k`. A test that passes every
//! checkpoint continues to the final sample size `N` and rejects iff `T_N > K`.
//!
//! * `ThreeStageDesign`: accept at `(n0, kappa0)`, reject at `(n1, kappa1)`.
//! * `FourStageHatDesign`: adds a second accept checkpoint `(N0, K0)`.
//! * `FourStageCheckDesign`: adds a second reject checkpoint `(N1, K1)`.
//!
//! Free parameters (`gamma`, `delta` and their primed versions) are the
//! nominal levels of the early checkpoints and are chosen to minimise the
//! closed-form upper bounds on the expected sample size.

use rand::Rng;

use crate::error::{Error, Result};
use crate::fss::{FssDesign, FssSolver};
use crate::models::{simulate_step, Hypothesis, ModelSpec, PathState};

/// Points in each one-dimensional free-parameter grid.
pub const GRID_1D: usize = 200;
/// Points per axis in the two-dimensional grids.
pub const GRID_2D: usize = 80;
/// SPRT runs are cut off after this many observations.
pub const SPRT_CAP: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Accept,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOutcome {
    pub decision: Decision,
    pub sample_size: usize,
    /// Number of distinct checkpoints visited, including the stopping one.
    pub stage_reached: usize,
    /// The SPRT hit its safety cap; the decision is then the sign of the LLR.
    pub capped: bool,
}

/// Source of observations for running a test along one path.
pub trait PathFeed {
    /// Extend the path to `n` observations (`n` never decreases) and return its state.
    fn advance_to(&mut self, n: usize) -> Result<&PathState>;
}

/// Fresh observations simulated under a fixed parameter.
pub struct SimulatedFeed<R> {
    model: ModelSpec,
    param: f64,
    state: PathState,
    rng: R,
}

impl<R: Rng> SimulatedFeed<R> {
    pub fn new(model: &ModelSpec, param: f64, rng: R) -> Result<Self> {
        model.check_param(param)?;
        Ok(Self {
            model: *model,
            param,
            state: PathState::new(),
            rng,
        })
    }
}

impl<R: Rng> PathFeed for SimulatedFeed<R> {
    fn advance_to(&mut self, n: usize) -> Result<&PathState> {
        while self.state.n() < n {
            simulate_step(&self.model, self.param, &mut self.state, &mut self.rng)?;
        }
        Ok(&self.state)
    }
}

/// A prerecorded path.
pub struct VecFeed {
    model: ModelSpec,
    path: Vec<f64>,
    state: PathState,
}

impl VecFeed {
    pub fn new(model: &ModelSpec, path: Vec<f64>) -> Self {
        Self {
            model: *model,
            path,
            state: PathState::new(),
        }
    }
}

impl PathFeed for VecFeed {
    fn advance_to(&mut self, n: usize) -> Result<&PathState> {
        if n > self.path.len() {
            return Err(Error::TruncatedFeed {
                needed: n,
                available: self.path.len(),
            });
        }
        while self.state.n() < n {
            let x = self.path[self.state.n()];
            self.state.push(&self.model, x)?;
        }
        Ok(&self.state)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    /// Stop and accept when `T_n <= threshold`.
    Accept,
    /// Stop and reject when `T_n > threshold`.
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check {
    pub n: usize,
    pub kind: CheckKind,
    pub threshold: f64,
}

/// Shared behaviour of the multistage designs.
pub trait StagedTest {
    /// Early checkpoints ordered by sample size. Checks sharing a sample size
    /// keep their construction order (accept before reject).
    fn checks(&self) -> Vec<Check>;
    /// `(N, K)`.
    fn final_stage(&self) -> (usize, f64);
    /// Closed-form `(lower, upper)` bounds on the expected sample size under `hyp`.
    fn ess_bounds(&self, hyp: Hypothesis) -> (f64, f64);
    fn label(&self) -> &'static str;
}

fn sorted(mut checks: Vec<Check>) -> Vec<Check> {
    checks.sort_by_key(|c| c.n);
    checks
}

/// Run any staged test along a path.
pub fn run_staged<T: StagedTest + ?Sized, F: PathFeed + ?Sized>(test: &T, feed: &mut F) -> Result<RunOutcome> {
    let (big_n, big_k) = test.final_stage();
    let mut stage = 0;
    let mut last_n = 0;
    for c in test.checks() {
        let t = feed.advance_to(c.n)?.statistic_value();
        if c.n != last_n {
            stage += 1;
            last_n = c.n;
        }
        let stop = match c.kind {
            CheckKind::Accept => (t <= c.threshold).then_some(Decision::Accept),
            CheckKind::Reject => (t > c.threshold).then_some(Decision::Reject),
        };
        if let Some(decision) = stop {
            return Ok(RunOutcome {
                decision,
                sample_size: c.n,
                stage_reached: stage,
                capped: false,
            });
        }
    }
    let t = feed.advance_to(big_n)?.statistic_value();
    Ok(RunOutcome {
        decision: if t > big_k { Decision::Reject } else { Decision::Accept },
        sample_size: big_n,
        stage_reached: stage + 1,
        capped: false,
    })
}

/// `count` points uniform in `log` strictly between `log(lo)` and `0`.
pub fn log_grid(lo: f64, count: usize) -> Vec<f64> {
    let l = lo.ln();
    (1..=count)
        .map(|k| (l * (1.0 - k as f64 / (count + 1) as f64)).exp())
        .collect()
}

fn argmin<T: Copy>(cands: impl Iterator<Item = (T, f64)>) -> Option<(T, f64)> {
    let mut best: Option<(T, f64)> = None;
    for (x, v) in cands {
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((x, v));
        }
    }
    best
}

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThreeStageDesign {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub n0: usize,
    pub n1: usize,
    pub n_final: usize,
    pub kappa0: f64,
    pub kappa1: f64,
    pub k_final: f64,
    /// Fixed-sample designs behind `(n0, kappa0)`, `(n1, kappa1)` and `(N, K)`.
    pub provenance: Vec<FssDesign>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourStageHatDesign {
    pub base: ThreeStageDesign,
    pub gamma_prime: f64,
    /// `N0`, the second accept checkpoint.
    pub n0_second: usize,
    /// `K0`.
    pub kappa0_second: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourStageCheckDesign {
    pub base: ThreeStageDesign,
    pub delta_prime: f64,
    /// `N1`, the second reject checkpoint.
    pub n1_second: usize,
    /// `K1`.
    pub kappa1_second: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SprtDesign {
    /// Lower boundary magnitude, `|log beta|`.
    pub a: f64,
    /// Upper boundary, `|log alpha|`.
    pub b: f64,
}

impl SprtDesign {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Range {
                    what: name,
                    value: v,
                    lo: 0.0,
                    hi: 1.0,
                });
            }
        }
        Ok(Self {
            a: beta.ln().abs(),
            b: alpha.ln().abs(),
        })
    }
}

/// Three-stage design with given free parameters; plug-in levels are `(alpha/2, beta/2)`.
pub fn three_stage_from(solver: &FssSolver, alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<ThreeStageDesign> {
    let (ap, bp) = (alpha / 2.0, beta / 2.0);
    build_three(solver, alpha, beta, ap, bp, gamma, delta)
}

fn build_three(
    solver: &FssSolver,
    alpha: f64,
    beta: f64,
    ap: f64,
    bp: f64,
    gamma: f64,
    delta: f64,
) -> Result<ThreeStageDesign> {
    let d0 = solver.design(gamma, bp)?;
    let d1 = solver.design(ap, delta)?;
    let df = solver.design(ap, bp)?;
    let mut d = ThreeStageDesign {
        alpha,
        beta,
        gamma,
        delta,
        n0: d0.n_star,
        n1: d1.n_star,
        n_final: df.n_star,
        kappa0: d0.kappa_star.min(d1.kappa_star),
        kappa1: d1.kappa_star,
        k_final: df.kappa_star,
        provenance: vec![d0, d1, df],
    };
    let need = d.n0.max(d.n1) + 1;
    if d.n_final < need {
        d.n_final = need;
        d.k_final = solver.threshold_at(need, ap, bp)?;
    }
    Ok(d)
}

/// Three-stage test with plug-in levels `(alpha/2, beta/2)` and free
/// parameters minimising the expected-sample-size upper bounds.
pub fn design_three_stage(solver: &FssSolver, alpha: f64, beta: f64) -> Result<ThreeStageDesign> {
    let (ap, bp) = (alpha / 2.0, beta / 2.0);
    let big_n = solver.design(ap, bp)?.n_star as f64;
    let gamma = minimise_1d(ap, |g| {
        let n0 = (solver.design(g, bp)?.n_star as f64).min(big_n);
        Ok(n0 + (big_n - n0) * g)
    })?;
    let delta = minimise_1d(bp, |dl| {
        let n1 = (solver.design(ap, dl)?.n_star as f64).min(big_n);
        Ok(n1 + (big_n - n1) * dl)
    })?;
    build_three(solver, alpha, beta, ap, bp, gamma, delta)
}

fn minimise_1d<F: FnMut(f64) -> Result<f64>>(lo: f64, mut f: F) -> Result<f64> {
    let mut vals = Vec::with_capacity(GRID_1D);
    for g in log_grid(lo, GRID_1D) {
        vals.push((g, f(g)?));
    }
    Ok(argmin(vals.into_iter()).expect("non-empty grid").0)
}

fn minimise_2d<F: FnMut(f64, f64) -> Result<f64>>(lo: f64, mut f: F) -> Result<(f64, f64)> {
    let grid = log_grid(lo, GRID_2D);
    let mut vals = Vec::new();
    for &g in &grid {
        for &gp in grid.iter().filter(|&&gp| gp < g) {
            vals.push(((g, gp), f(g, gp)?));
        }
    }
    Ok(argmin(vals.into_iter()).expect("non-empty grid").0)
}

/// Four-stage test with an extra accept checkpoint and given free parameters;
/// plug-in levels are `(alpha/2, beta/3)`.
pub fn four_stage_hat_from(
    solver: &FssSolver,
    alpha: f64,
    beta: f64,
    gamma: f64,
    gamma_prime: f64,
    delta: f64,
) -> Result<FourStageHatDesign> {
    let (ap, bp) = (alpha / 2.0, beta / 3.0);
    let mut base = build_three(solver, alpha, beta, ap, bp, gamma, delta)?;
    let dm = solver.design(gamma_prime, bp)?;
    let mut n0_second = dm.n_star;
    let mut kappa0_second = dm.kappa_star;
    if n0_second <= base.n0 {
        n0_second = base.n0 + 1;
        kappa0_second = solver.threshold_at(n0_second, gamma_prime, bp)?;
    }
    if base.n_final <= n0_second {
        base.n_final = n0_second + 1;
        base.k_final = solver.threshold_at(base.n_final, ap, bp)?;
    }
    base.provenance.push(dm);
    let kappa0_second = kappa0_second.min(base.kappa1);
    Ok(FourStageHatDesign {
        base,
        gamma_prime,
        n0_second,
        kappa0_second,
    })
}

/// Four-stage test with a second accept checkpoint, plug-in levels `(alpha/2, beta/3)`.
pub fn design_four_stage_hat(solver: &FssSolver, alpha: f64, beta: f64) -> Result<FourStageHatDesign> {
    let (ap, bp) = (alpha / 2.0, beta / 3.0);
    let big_n = solver.design(ap, bp)?.n_star as f64;
    let (gamma, gamma_prime) = minimise_2d(ap, |g, gp| {
        let n0 = (solver.design(g, bp)?.n_star as f64).min(big_n);
        let nm = (solver.design(gp, bp)?.n_star as f64).clamp(n0, big_n);
        Ok(n0 + (nm - n0) * g + (big_n - nm) * gp)
    })?;
    let delta = minimise_1d(bp, |dl| {
        let n1 = (solver.design(ap, dl)?.n_star as f64).min(big_n);
        Ok(n1 + (big_n - n1) * dl)
    })?;
    four_stage_hat_from(solver, alpha, beta, gamma, gamma_prime, delta)
}

/// Four-stage test with an extra reject checkpoint and given free parameters;
/// plug-in levels are `(alpha/3, beta/2)`.
pub fn four_stage_check_from(
    solver: &FssSolver,
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
    delta_prime: f64,
) -> Result<FourStageCheckDesign> {
    let (ap, bp) = (alpha / 3.0, beta / 2.0);
    let mut base = build_three(solver, alpha, beta, ap, bp, gamma, delta)?;
    let dm = solver.design(ap, delta_prime)?;
    let mut n1_second = dm.n_star;
    let mut kappa1_second = dm.kappa_star;
    if n1_second <= base.n1 {
        n1_second = base.n1 + 1;
        kappa1_second = solver.threshold_at(n1_second, ap, delta_prime)?;
    }
    if base.n_final <= n1_second {
        base.n_final = n1_second + 1;
        base.k_final = solver.threshold_at(base.n_final, ap, bp)?;
    }
    base.provenance.push(dm);
    let kappa1_second = kappa1_second.max(base.kappa0);
    Ok(FourStageCheckDesign {
        base,
        delta_prime,
        n1_second,
        kappa1_second,
    })
}

/// Four-stage test with a second reject checkpoint, plug-in levels `(alpha/3, beta/2)`.
pub fn design_four_stage_check(solver: &FssSolver, alpha: f64, beta: f64) -> Result<FourStageCheckDesign> {
    let (ap, bp) = (alpha / 3.0, beta / 2.0);
    let big_n = solver.design(ap, bp)?.n_star as f64;
    let gamma = minimise_1d(ap, |g| {
        let n0 = (solver.design(g, bp)?.n_star as f64).min(big_n);
        Ok(n0 + (big_n - n0) * g)
    })?;
    let (delta, delta_prime) = minimise_2d(bp, |dl, dp| {
        let n1 = (solver.design(ap, dl)?.n_star as f64).min(big_n);
        let nm = (solver.design(ap, dp)?.n_star as f64).clamp(n1, big_n);
        Ok(n1 + (nm - n1) * dl + (big_n - nm) * dp)
    })?;
    four_stage_check_from(solver, alpha, beta, gamma, delta, delta_prime)
}

impl StagedTest for ThreeStageDesign {
    fn checks(&self) -> Vec<Check> {
        sorted(vec![
            Check {
                n: self.n0,
                kind: CheckKind::Accept,
                threshold: self.kappa0,
            },
            Check {
                n: self.n1,
                kind: CheckKind::Reject,
                threshold: self.kappa1,
            },
        ])
    }

    fn final_stage(&self) -> (usize, f64) {
        (self.n_final, self.k_final)
    }

    fn ess_bounds(&self, hyp: Hypothesis) -> (f64, f64) {
        let big_n = self.n_final as f64;
        match hyp {
            Hypothesis::Null => {
                let (n0, a, g) = (self.n0 as f64, self.alpha / 2.0, self.gamma);
                (n0 * (1.0 - a) + (big_n - n0) * (g - a), n0 + (big_n - n0) * g)
            }
            Hypothesis::Alt => {
                let (n1, b, d) = (self.n1 as f64, self.beta / 2.0, self.delta);
                (n1 * (1.0 - b) + (big_n - n1) * (d - b), n1 + (big_n - n1) * d)
            }
        }
    }

    fn label(&self) -> &'static str {
        "three"
    }
}

impl StagedTest for FourStageHatDesign {
    fn checks(&self) -> Vec<Check> {
        let mut c = self.base.checks();
        c.push(Check {
            n: self.n0_second,
            kind: CheckKind::Accept,
            threshold: self.kappa0_second,
        });
        sorted(c)
    }

    fn final_stage(&self) -> (usize, f64) {
        self.base.final_stage()
    }

    fn ess_bounds(&self, hyp: Hypothesis) -> (f64, f64) {
        let b = &self.base;
        let big_n = b.n_final as f64;
        match hyp {
            Hypothesis::Null => {
                let (n0, nm) = (b.n0 as f64, self.n0_second as f64);
                let (a, g, gp) = (b.alpha / 2.0, b.gamma, self.gamma_prime);
                let lower = n0 * (1.0 - a)
                    + (nm - n0) * (g - a)
                    + (big_n - nm) * pos((1.0 - a) - (1.0 - g) - (1.0 - gp));
                (lower, n0 + (nm - n0) * g + (big_n - nm) * gp)
            }
            Hypothesis::Alt => {
                let (n1, bb, d) = (b.n1 as f64, 2.0 * b.beta / 3.0, b.delta);
                (n1 * (1.0 - bb) + (big_n - n1) * (d - bb), n1 + (big_n - n1) * d)
            }
        }
    }

    fn label(&self) -> &'static str {
        "four-hat"
    }
}

impl StagedTest for FourStageCheckDesign {
    fn checks(&self) -> Vec<Check> {
        let mut c = self.base.checks();
        c.push(Check {
            n: self.n1_second,
            kind: CheckKind::Reject,
            threshold: self.kappa1_second,
        });
        sorted(c)
    }

    fn final_stage(&self) -> (usize, f64) {
        self.base.final_stage()
    }

    fn ess_bounds(&self, hyp: Hypothesis) -> (f64, f64) {
        let b = &self.base;
        let big_n = b.n_final as f64;
        match hyp {
            Hypothesis::Null => {
                let (n0, aa, g) = (b.n0 as f64, 2.0 * b.alpha / 3.0, b.gamma);
                (n0 * (1.0 - aa) + (big_n - n0) * (g - aa), n0 + (big_n - n0) * g)
            }
            Hypothesis::Alt => {
                let (n1, nm) = (b.n1 as f64, self.n1_second as f64);
                let (bb, d, dp) = (b.beta / 2.0, b.delta, self.delta_prime);
                let lower = n1 * (1.0 - bb)
                    + (nm - n1) * (d - bb)
                    + (big_n - nm) * pos((1.0 - bb) - (1.0 - d) - (1.0 - dp));
                (lower, n1 + (nm - n1) * d + (big_n - nm) * dp)
            }
        }
    }

    fn label(&self) -> &'static str {
        "four-check"
    }
}

pub fn run_three_stage<F: PathFeed + ?Sized>(design: &ThreeStageDesign, feed: &mut F) -> Result<RunOutcome> {
    run_staged(design, feed)
}

pub fn run_four_stage_hat<F: PathFeed + ?Sized>(design: &FourStageHatDesign, feed: &mut F) -> Result<RunOutcome> {
    run_staged(design, feed)
}

pub fn run_four_stage_check<F: PathFeed + ?Sized>(design: &FourStageCheckDesign, feed: &mut F) -> Result<RunOutcome> {
    run_staged(design, feed)
}

/// Wald's SPRT: stop at the first `n` with `Lambda_n` outside `(-A, B)`.
pub fn run_sprt<F: PathFeed + ?Sized>(design: &SprtDesign, feed: &mut F) -> Result<RunOutcome> {
    let mut n = 0;
    loop {
        n += 1;
        let llr = feed.advance_to(n)?.llr_value();
        let decision = if llr >= design.b {
            Some(Decision::Reject)
        } else if llr <= -design.a {
            Some(Decision::Accept)
        } else {
            None
        };
        if let Some(decision) = decision {
            return Ok(RunOutcome {
                decision,
                sample_size: n,
                stage_reached: n,
                capped: false,
            });
        }
        if n >= SPRT_CAP {
            return Ok(RunOutcome {
                decision: if llr > 0.0 { Decision::Reject } else { Decision::Accept },
                sample_size: n,
                stage_reached: n,
                capped: true,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fss::SimBudget;
    use crate::models::Statistic;

    fn gauss() -> ModelSpec {
        ModelSpec::gaussian(0.5, Statistic::AvgLlr).unwrap()
    }

    fn solver() -> FssSolver {
        FssSolver::new(&gauss(), SimBudget::default())
    }

    fn toy_three() -> ThreeStageDesign {
        ThreeStageDesign {
            alpha: 0.05,
            beta: 0.05,
            gamma: 0.3,
            delta: 0.3,
            n0: 2,
            n1: 3,
            n_final: 5,
            kappa0: -0.1,
            kappa1: 0.4,
            k_final: 0.0,
            provenance: vec![],
        }
    }

    // Path whose statistic (the average LLR = mean of observations for eta = 0.5)
    // takes the given values at each n.
    fn path_with_means(means: &[f64]) -> Vec<f64> {
        let mut out = Vec::new();
        let mut prev = 0.0;
        for (i, &m) in means.iter().enumerate() {
            let s = m * (i + 1) as f64;
            out.push(s - prev);
            prev = s;
        }
        out
    }

    #[test]
    fn log_grid_shape() {
        let g = log_grid(1e-4, 200);
        assert_eq!(g.len(), 200);
        assert!(g[0] > 1e-4 && g[199] < 1.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn three_stage_gaussian_reference() {
        let d = design_three_stage(&solver(), 1e-4, 1e-4).unwrap();
        assert_eq!(d.n_final, 61);
        assert!(d.k_final.abs() < 1e-12);
        assert_eq!(d.n0, d.n1);
        assert!((d.gamma - d.delta).abs() < 1e-15);
        assert!(d.n0.max(d.n1) < d.n_final && d.kappa0 <= d.kappa1);
        let (lo, hi) = d.ess_bounds(Hypothesis::Null);
        assert!(lo <= hi);
    }

    #[test]
    fn four_stage_gaussian_reference() {
        let s = solver();
        let h = design_four_stage_hat(&s, 1e-4, 1e-4).unwrap();
        assert_eq!(h.base.n_final, 63);
        assert!(h.gamma_prime < h.base.gamma);
        assert!(h.gamma_prime > 1e-4 / 2.0 && h.base.gamma < 1.0);
        assert!(h.base.n0 < h.n0_second && h.n0_second < h.base.n_final);
        assert!(h.kappa0_second <= h.base.kappa1);
        let c = design_four_stage_check(&s, 1e-4, 1e-4).unwrap();
        assert_eq!(c.base.n_final, 63);
        assert!(c.delta_prime < c.base.delta);
        assert_eq!(c.n1_second, h.n0_second);
        assert_eq!(c.base.n0, h.base.n1);
        assert!((c.kappa1_second + h.kappa0_second).abs() < 1e-12);
        assert!((c.base.kappa0 + h.base.kappa1).abs() < 1e-12);
    }

    #[test]
    fn forced_collision_bumps_and_resolves() {
        let s = solver();
        let g = 0.2;
        let gp = 0.199;
        let h = four_stage_hat_from(&s, 1e-4, 1e-4, g, gp, 0.2).unwrap();
        assert_eq!(s.design(gp, 1e-4 / 3.0).unwrap().n_star, h.base.n0);
        assert_eq!(h.n0_second, h.base.n0 + 1);
        let k = s.threshold_at(h.n0_second, gp, 1e-4 / 3.0).unwrap();
        assert_eq!(h.kappa0_second, k.min(h.base.kappa1));
    }

    #[test]
    fn ess_bound_endpoints() {
        let mut d = toy_three();
        d.alpha = 0.1;
        d.gamma = 0.05;
        let (lo, hi) = d.ess_bounds(Hypothesis::Null);
        assert!((lo - 2.0 * 0.95).abs() < 1e-12);
        assert!((hi - (2.0 + 3.0 * 0.05)).abs() < 1e-12);
    }

    #[test]
    fn three_stage_runs_follow_the_steps() {
        let d = toy_three();
        let m = gauss();
        let r = run_three_stage(&d, &mut VecFeed::new(&m, path_with_means(&[0.0, -0.2]))).unwrap();
        assert_eq!((r.decision, r.sample_size, r.stage_reached), (Decision::Accept, 2, 1));
        let r = run_three_stage(&d, &mut VecFeed::new(&m, path_with_means(&[0.0, 0.0, 0.5]))).unwrap();
        assert_eq!((r.decision, r.sample_size, r.stage_reached), (Decision::Reject, 3, 2));
        let r = run_three_stage(&d, &mut VecFeed::new(&m, path_with_means(&[0.0, 0.0, 0.1, 0.0, -0.05]))).unwrap();
        assert_eq!((r.decision, r.sample_size, r.stage_reached), (Decision::Accept, 5, 3));
        let r = run_three_stage(&d, &mut VecFeed::new(&m, path_with_means(&[0.0, 0.0, 0.1, 0.0, 0.05]))).unwrap();
        assert_eq!(r.decision, Decision::Reject);
        let e = run_three_stage(&d, &mut VecFeed::new(&m, path_with_means(&[0.0, 0.0, 0.1])));
        assert_eq!(e, Err(Error::TruncatedFeed { needed: 5, available: 3 }));
    }

    #[test]
    fn reversed_order_and_shared_stage() {
        let mut d = toy_three();
        d.n0 = 3;
        d.n1 = 2;
        let m = gauss();
        // reject at n1 = 2 happens before the accept check at 3
        let r = run_three_stage(&d, &mut VecFeed::new(&m, path_with_means(&[0.0, 0.5]))).unwrap();
        assert_eq!((r.decision, r.sample_size, r.stage_reached), (Decision::Reject, 2, 1));
        d.n1 = 3;
        let r = run_three_stage(&d, &mut VecFeed::new(&m, path_with_means(&[0.0, 0.0, 0.2, 0.0, 0.0]))).unwrap();
        assert_eq!(r.stage_reached, 2);
        assert_eq!(r.sample_size, 5);
    }

    fn toy_hat(n0: usize, n1: usize, nm: usize) -> FourStageHatDesign {
        let mut b = toy_three();
        b.n0 = n0;
        b.n1 = n1;
        b.n_final = 10;
        FourStageHatDesign {
            base: b,
            gamma_prime: 0.1,
            n0_second: nm,
            kappa0_second: 0.1,
        }
    }

    #[test]
    fn hat_interleavings() {
        let m = gauss();
        // n0 <= n1 <= N0: accept at N0 after surviving both earlier checks
        let h = toy_hat(2, 4, 6);
        let r = run_four_stage_hat(&h, &mut VecFeed::new(&m, path_with_means(&[0.0, 0.0, 0.0, 0.2, 0.0, 0.05]))).unwrap();
        assert_eq!((r.decision, r.sample_size, r.stage_reached), (Decision::Accept, 6, 3));
        // n0 <= N0 <= n1: second accept comes before the reject check
        let h = toy_hat(2, 6, 4);
        let r = run_four_stage_hat(&h, &mut VecFeed::new(&m, path_with_means(&[0.0, 0.0, 0.0, 0.05]))).unwrap();
        assert_eq!((r.decision, r.sample_size, r.stage_reached), (Decision::Accept, 4, 2));
        // n1 <= n0 <= N0: reject check first
        let h = toy_hat(4, 2, 6);
        let r = run_four_stage_hat(&h, &mut VecFeed::new(&m, path_with_means(&[0.0, 0.45]))).unwrap();
        assert_eq!((r.decision, r.sample_size, r.stage_reached), (Decision::Reject, 2, 1));
        let r = run_four_stage_hat(&h, &mut VecFeed::new(&m, vec![0.3; 10])).unwrap();
        assert_eq!((r.decision, r.sample_size, r.stage_reached), (Decision::Reject, 10, 4));
    }

    #[test]
    fn check_early_reject_at_second_checkpoint() {
        let mut b = toy_three();
        b.n_final = 10;
        let c = FourStageCheckDesign {
            base: b,
            delta_prime: 0.1,
            n1_second: 6,
            kappa1_second: 0.1,
        };
        let m = gauss();
        let r = run_four_stage_check(&c, &mut VecFeed::new(&m, path_with_means(&[0.0, 0.0, 0.2, 0.0, 0.0, 0.15]))).unwrap();
        assert_eq!((r.decision, r.sample_size, r.stage_reached), (Decision::Reject, 6, 3));
    }

    #[test]
    fn sprt_immediate_reject() {
        let s = SprtDesign::new(0.5, 0.5).unwrap();
        let m = gauss();
        let r = run_sprt(&s, &mut VecFeed::new(&m, vec![1.0])).unwrap();
        assert_eq!((r.decision, r.sample_size, r.capped), (Decision::Reject, 1, false));
        assert!(SprtDesign::new(0.0, 0.5).is_err());
        assert!(run_sprt(&s, &mut VecFeed::new(&m, vec![0.0; 3])).is_err());
    }
}
