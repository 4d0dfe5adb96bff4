//! Fixed-sample-size designs: the smallest `n` and a threshold `kappa` such
//! that the test rejecting iff `T_n > kappa` has type-I error at most `alpha`
//! and type-II error at most `beta`.
//!
//! The Gaussian mean model (with the LLR or the sample mean) is solved in
//! closed form. Everything else is solved by simulation: `n` is searched by
//! doubling then bisection, and at each probed `n` the threshold is the
//! smallest sample value whose estimated type-I error, plus two standard
//! errors, stays below `alpha`. Probabilities below `1e-3` are re-estimated
//! by importance sampling.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::models::{Hypothesis, ModelKind, ModelSpec, Statistic};
use crate::numeric::{norm_cdf, norm_sf, upper_quantile};
use crate::rng::StreamKey;
use crate::sampler::{attainable_limits, param_for_limit, Tail, WeightedSample};

/// Plain Monte Carlo estimates below this are redone by importance sampling.
pub const IS_SWITCH: f64 = 1e-3;

/// Simulation budget for probability estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimBudget {
    /// Replications per probability estimate.
    pub reps: usize,
    pub seed: u64,
    /// Largest sample size probed before giving up.
    pub max_n: usize,
    /// Use the simulation search even where a closed form exists.
    pub force_simulation: bool,
}

impl Default for SimBudget {
    fn default() -> Self {
        Self {
            reps: 10_000,
            seed: 0,
            max_n: 1 << 14,
            force_simulation: false,
        }
    }
}

impl SimBudget {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    MonteCarlo,
    ImportanceSampling,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::ClosedForm => "closed-form",
            Method::MonteCarlo => "monte-carlo",
            Method::ImportanceSampling => "importance-sampling",
        }
    }
}

/// Error estimates at one probed `(n, kappa)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evidence {
    pub n: usize,
    pub kappa: f64,
    /// `P0(T_n > kappa)`.
    pub type1: Tail,
    /// `P1(T_n <= kappa)`.
    pub type2: Tail,
    pub method: Method,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FssDesign {
    pub alpha: f64,
    pub beta: f64,
    pub n_star: usize,
    pub kappa_star: f64,
    pub method: Method,
    /// Every probe made during the search, in probe order.
    pub evidence: Vec<Evidence>,
}

type BankKey = (usize, usize, u64);

/// Design solver for one model. Simulated samples are cached by
/// `(n, hypothesis, simulation parameter)` and each is drawn from its own
/// seed stream, so every result is a pure function of the inputs.
pub struct FssSolver {
    model: ModelSpec,
    budget: SimBudget,
    bank: Mutex<HashMap<BankKey, Arc<WeightedSample>>>,
    memo: Mutex<HashMap<(u64, u64), FssDesign>>,
}

fn check_level(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Range {
            what: name,
            value: v,
            lo: 0.0,
            hi: 1.0,
        })
    }
}

impl FssSolver {
    pub fn new(model: &ModelSpec, budget: SimBudget) -> Self {
        Self {
            model: *model,
            budget,
            bank: Mutex::new(HashMap::new()),
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn budget(&self) -> &SimBudget {
        &self.budget
    }

    /// `Some(I)` when the closed form applies.
    fn closed_form_info(&self) -> Option<f64> {
        if self.budget.force_simulation {
            return None;
        }
        match (self.model.kind(), self.model.statistic()) {
            (ModelKind::GaussianMean { eta }, Statistic::AvgLlr | Statistic::SampleMean) => {
                Some(2.0 * eta * eta)
            }
            _ => None,
        }
    }

    // LLR-scale thresholds map to sample-mean thresholds by dividing by 2 eta.
    fn to_statistic_scale(&self, kappa_llr: f64) -> f64 {
        match (self.model.kind(), self.model.statistic()) {
            (ModelKind::GaussianMean { eta }, Statistic::SampleMean) => kappa_llr / (2.0 * eta),
            _ => kappa_llr,
        }
    }

    fn gaussian_evidence(&self, info: f64, n: usize, kappa_llr: f64, alpha: f64, beta: f64) -> Evidence {
        let s = (n as f64 / (2.0 * info)).sqrt();
        let e1 = norm_sf((kappa_llr + info) * s);
        let e2 = norm_cdf((kappa_llr - info) * s);
        let tail = |estimate| Tail {
            estimate,
            se: 0.0,
            hits: 0,
        };
        Evidence {
            n,
            kappa: self.to_statistic_scale(kappa_llr),
            type1: tail(e1),
            type2: tail(e2),
            method: Method::ClosedForm,
            feasible: e1 <= alpha * (1.0 + 1e-9) && e2 <= beta * (1.0 + 1e-9),
        }
    }

    // Closed-form threshold at sample size n (LLR scale).
    fn gaussian_threshold(&self, info: f64, n: usize, alpha: f64, beta: f64) -> f64 {
        let (za, zb) = (upper_quantile(alpha), upper_quantile(beta));
        let r = (2.0 * info / n as f64).sqrt();
        let lo = -info + za * r;
        let hi = info - zb * r;
        let k = if za + zb > 0.0 { info * (za - zb) / (za + zb) } else { lo };
        let slack = 1e-12 * info;
        if k >= lo - slack && k <= hi + slack {
            k
        } else {
            lo
        }
    }

    fn gaussian_design(&self, info: f64, alpha: f64, beta: f64) -> FssDesign {
        let (za, zb) = (upper_quantile(alpha), upper_quantile(beta));
        let s = za + zb;
        let n = if s > 0.0 {
            ((s * s / (2.0 * info)).ceil() as usize).max(1)
        } else {
            1
        };
        let k = self.gaussian_threshold(info, n, alpha, beta);
        let mut evidence = Vec::new();
        if n > 1 {
            let kp = self.gaussian_threshold(info, n - 1, alpha, beta);
            evidence.push(self.gaussian_evidence(info, n - 1, kp, alpha, beta));
        }
        evidence.push(self.gaussian_evidence(info, n, k, alpha, beta));
        FssDesign {
            alpha,
            beta,
            n_star: n,
            kappa_star: self.to_statistic_scale(k),
            method: Method::ClosedForm,
            evidence,
        }
    }

    /// Sample of `reps` paths of length `n` simulated under `sim_param`,
    /// weighted towards hypothesis `hyp`.
    pub fn sample(&self, n: usize, hyp: Hypothesis, sim_param: f64) -> Result<Arc<WeightedSample>> {
        let key = (n, hyp.index(), sim_param.to_bits());
        if let Some(s) = self.bank.lock().expect("bank lock").get(&key) {
            return Ok(Arc::clone(s));
        }
        let stream = StreamKey::derive(self.budget.seed, "fss", &[n as u64, hyp.index() as u64, key.2]);
        let s = Arc::new(WeightedSample::simulate(
            &self.model,
            sim_param,
            hyp,
            n,
            self.budget.reps,
            &stream,
        )?);
        self.bank.lock().expect("bank lock").insert(key, Arc::clone(&s));
        Ok(s)
    }

    /// Simulation parameter for a tilt towards `kappa`, with `kappa` rounded
    /// to a grid of spacing `(J1 - J0) / 100` so that nearby requests share samples.
    fn tilt_param(&self, kappa: f64) -> Result<f64> {
        let (j0, j1) = self.model.limits();
        let h = (j1 - j0) / 100.0;
        let mut kq = j0 + ((kappa - j0) / h).round() * h;
        let (alo, ahi) = attainable_limits(&self.model);
        if alo.is_finite() {
            kq = kq.max(alo + 1e-3 * (j1 - j0));
        }
        if ahi.is_finite() {
            kq = kq.min(ahi - 1e-3 * (j1 - j0));
        }
        param_for_limit(&self.model, kq)
    }

    /// Estimate of `P0(T_n > kappa)` or `P1(T_n <= kappa)` (for `Null`/`Alt`).
    pub fn error_prob(&self, hyp: Hypothesis, n: usize, kappa: f64) -> Result<(Tail, Method)> {
        let pick = |s: &WeightedSample| match hyp {
            Hypothesis::Null => s.above(kappa),
            Hypothesis::Alt => s.at_or_below(kappa),
        };
        let plain = self.sample(n, hyp, self.model.param(hyp))?;
        let t = pick(&plain);
        if t.estimate > IS_SWITCH {
            return Ok((t, Method::MonteCarlo));
        }
        let tilted = self.sample(n, hyp, self.tilt_param(kappa)?)?;
        Ok((pick(&tilted), Method::ImportanceSampling))
    }

    /// Threshold search and feasibility check at a fixed `n`.
    pub fn probe(&self, n: usize, alpha: f64, beta: f64) -> Result<Evidence> {
        if let Some(info) = self.closed_form_info() {
            let k = self.gaussian_threshold(info, n, alpha, beta);
            return Ok(self.gaussian_evidence(info, n, k, alpha, beta));
        }
        let null = self.model.param(Hypothesis::Null);
        let (mut kappa, mut t1) = self.sample(n, Hypothesis::Null, null)?.upper_quantile_scan(alpha);
        let mut method = Method::MonteCarlo;
        if t1.estimate <= IS_SWITCH {
            method = Method::ImportanceSampling;
            let mut last = f64::NAN;
            for _ in 0..3 {
                let tp = self.tilt_param(kappa)?;
                if tp == last {
                    break;
                }
                last = tp;
                let s = self.sample(n, Hypothesis::Null, tp)?;
                (kappa, t1) = s.upper_quantile_scan(alpha);
            }
        }
        let (t2, m2) = self.error_prob(Hypothesis::Alt, n, kappa)?;
        if m2 == Method::ImportanceSampling {
            method = Method::ImportanceSampling;
        }
        Ok(Evidence {
            n,
            kappa,
            type1: t1,
            type2: t2,
            method,
            feasible: t1.upper() <= alpha && t2.upper() <= beta,
        })
    }

    /// `(n*, kappa*)` for the given levels.
    pub fn design(&self, alpha: f64, beta: f64) -> Result<FssDesign> {
        check_level("alpha", alpha)?;
        check_level("beta", beta)?;
        let key = (alpha.to_bits(), beta.to_bits());
        if let Some(d) = self.memo.lock().expect("memo lock").get(&key) {
            return Ok(d.clone());
        }
        let d = match self.closed_form_info() {
            Some(info) => self.gaussian_design(info, alpha, beta),
            None => self.search(alpha, beta)?,
        };
        self.memo.lock().expect("memo lock").insert(key, d.clone());
        Ok(d)
    }

    fn search(&self, alpha: f64, beta: f64) -> Result<FssDesign> {
        let mut evidence = Vec::new();
        let mut lo = 0usize;
        let mut n = 1usize;
        let mut hi_ev = loop {
            let ev = self.probe(n, alpha, beta)?;
            evidence.push(ev);
            if ev.feasible {
                break ev;
            }
            lo = n;
            n *= 2;
            if n > self.budget.max_n {
                return Err(Error::InfeasibleBudget {
                    reason: format!(
                        "no feasible threshold up to n = {} at alpha = {alpha}, beta = {beta}",
                        self.budget.max_n
                    ),
                    best_n: ev.n,
                    best_kappa: ev.kappa,
                });
            }
        };
        while hi_ev.n - lo > 1 {
            let mid = lo + (hi_ev.n - lo) / 2;
            let ev = self.probe(mid, alpha, beta)?;
            evidence.push(ev);
            if ev.feasible {
                hi_ev = ev;
            } else {
                lo = mid;
            }
        }
        Ok(FssDesign {
            alpha,
            beta,
            n_star: hi_ev.n,
            kappa_star: hi_ev.kappa,
            method: hi_ev.method,
            evidence,
        })
    }

    /// Threshold at a prescribed `n` for the level pair `(alpha, beta)`.
    pub fn threshold_at(&self, n: usize, alpha: f64, beta: f64) -> Result<f64> {
        check_level("alpha", alpha)?;
        check_level("beta", beta)?;
        Ok(self.probe(n, alpha, beta)?.kappa)
    }
}

/// One-shot fixed-sample design.
pub fn design_fss(model: &ModelSpec, alpha: f64, beta: f64, budget: SimBudget) -> Result<FssDesign> {
    FssSolver::new(model, budget).design(alpha, beta)
}

/// `P0(T_n > kappa)` or `P1(T_n <= kappa)` with its standard error.
pub fn tail_prob(model: &ModelSpec, hyp: Hypothesis, n: usize, kappa: f64, budget: SimBudget) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::Domain("sample size must be at least 1".into()));
    }
    let (t, _) = FssSolver::new(model, budget).error_prob(hyp, n, kappa)?;
    Ok((t.estimate, t.se))
}
