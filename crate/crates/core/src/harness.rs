//! Monte Carlo evaluation of designed tests: expected sample size and
//! rejection rate per true parameter, regime sweeps against the SPRT, and an
//! exact expected-sample-size oracle for three-stage tests on Gaussian data.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fss::{FssDesign, FssSolver};
use crate::models::{Hypothesis, ModelKind, ModelSpec, Statistic};
use crate::multistage::{
    design_four_stage_check, design_four_stage_hat, design_three_stage, run_sprt, run_staged,
    Decision, FourStageCheckDesign, FourStageHatDesign, PathFeed, RunOutcome, SimulatedFeed,
    SprtDesign, StagedTest, ThreeStageDesign,
};
use crate::numeric::{mean_se, norm_cdf, norm_sf, GaussLegendre};
use crate::rng::StreamKey;

/// Column order of evaluation CSV files.
pub const EVAL_COLUMNS: [&str; 14] = [
    "test",
    "model",
    "statistic",
    "alpha",
    "beta",
    "true_param",
    "reps",
    "ess",
    "ess_se",
    "reject_rate",
    "reject_se",
    "bound_lower",
    "bound_upper",
    "seed",
];

/// Extra columns of sweep CSV files, appended after [`EVAL_COLUMNS`].
pub const SWEEP_EXTRA_COLUMNS: [&str; 6] = [
    "regime",
    "hypothesis",
    "ratio_to_sprt",
    "ratio_se",
    "ratio_lower",
    "ratio_upper",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TestKind {
    Fixed,
    Three,
    FourHat,
    FourCheck,
    Sprt,
}

impl TestKind {
    pub const ALL: [TestKind; 5] = [
        TestKind::Fixed,
        TestKind::Three,
        TestKind::FourHat,
        TestKind::FourCheck,
        TestKind::Sprt,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            TestKind::Fixed => "fixed",
            TestKind::Three => "three",
            TestKind::FourHat => "four-hat",
            TestKind::FourCheck => "four-check",
            TestKind::Sprt => "sprt",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.label() == s)
    }

    pub fn design(&self, solver: &FssSolver, alpha: f64, beta: f64) -> Result<TestDesign> {
        Ok(match self {
            TestKind::Fixed => TestDesign::Fixed(solver.design(alpha, beta)?),
            TestKind::Three => TestDesign::Three(design_three_stage(solver, alpha, beta)?),
            TestKind::FourHat => TestDesign::FourHat(design_four_stage_hat(solver, alpha, beta)?),
            TestKind::FourCheck => TestDesign::FourCheck(design_four_stage_check(solver, alpha, beta)?),
            TestKind::Sprt => TestDesign::Sprt {
                design: SprtDesign::new(alpha, beta)?,
                alpha,
                beta,
            },
        })
    }
}

/// Any of the tests under study.
#[derive(Debug, Clone, PartialEq)]
pub enum TestDesign {
    Fixed(FssDesign),
    Three(ThreeStageDesign),
    FourHat(FourStageHatDesign),
    FourCheck(FourStageCheckDesign),
    Sprt { design: SprtDesign, alpha: f64, beta: f64 },
}

impl TestDesign {
    pub fn kind(&self) -> TestKind {
        match self {
            TestDesign::Fixed(_) => TestKind::Fixed,
            TestDesign::Three(_) => TestKind::Three,
            TestDesign::FourHat(_) => TestKind::FourHat,
            TestDesign::FourCheck(_) => TestKind::FourCheck,
            TestDesign::Sprt { .. } => TestKind::Sprt,
        }
    }

    pub fn levels(&self) -> (f64, f64) {
        match self {
            TestDesign::Fixed(d) => (d.alpha, d.beta),
            TestDesign::Three(d) => (d.alpha, d.beta),
            TestDesign::FourHat(d) => (d.base.alpha, d.base.beta),
            TestDesign::FourCheck(d) => (d.base.alpha, d.base.beta),
            TestDesign::Sprt { alpha, beta, .. } => (*alpha, *beta),
        }
    }

    /// Largest possible sample size, `None` for the SPRT.
    pub fn max_sample_size(&self) -> Option<usize> {
        match self {
            TestDesign::Fixed(d) => Some(d.n_star),
            TestDesign::Three(d) => Some(d.n_final),
            TestDesign::FourHat(d) => Some(d.base.n_final),
            TestDesign::FourCheck(d) => Some(d.base.n_final),
            TestDesign::Sprt { .. } => None,
        }
    }

    pub fn ess_bounds(&self, hyp: Hypothesis) -> Option<(f64, f64)> {
        match self {
            TestDesign::Three(d) => Some(d.ess_bounds(hyp)),
            TestDesign::FourHat(d) => Some(d.ess_bounds(hyp)),
            TestDesign::FourCheck(d) => Some(d.ess_bounds(hyp)),
            _ => None,
        }
    }

    pub fn run<F: PathFeed + ?Sized>(&self, feed: &mut F) -> Result<RunOutcome> {
        match self {
            TestDesign::Fixed(d) => {
                let t = feed.advance_to(d.n_star)?.statistic_value();
                Ok(RunOutcome {
                    decision: if t > d.kappa_star { Decision::Reject } else { Decision::Accept },
                    sample_size: d.n_star,
                    stage_reached: 1,
                    capped: false,
                })
            }
            TestDesign::Three(d) => run_staged(d, feed),
            TestDesign::FourHat(d) => run_staged(d, feed),
            TestDesign::FourCheck(d) => run_staged(d, feed),
            TestDesign::Sprt { design, .. } => run_sprt(design, feed),
        }
    }

    /// Structured `key = value` description.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        let (alpha, beta) = self.levels();
        let _ = writeln!(s, "test = {}", self.kind().label());
        let _ = writeln!(s, "alpha = {alpha}");
        let _ = writeln!(s, "beta = {beta}");
        let three = |s: &mut String, d: &ThreeStageDesign| {
            let _ = writeln!(s, "gamma = {}", d.gamma);
            let _ = writeln!(s, "delta = {}", d.delta);
            let _ = writeln!(s, "n0 = {}", d.n0);
            let _ = writeln!(s, "kappa0 = {}", d.kappa0);
            let _ = writeln!(s, "n1 = {}", d.n1);
            let _ = writeln!(s, "kappa1 = {}", d.kappa1);
            let _ = writeln!(s, "N = {}", d.n_final);
            let _ = writeln!(s, "K = {}", d.k_final);
        };
        match self {
            TestDesign::Fixed(d) => {
                let _ = writeln!(s, "n_star = {}", d.n_star);
                let _ = writeln!(s, "kappa_star = {}", d.kappa_star);
                let _ = writeln!(s, "method = {}", d.method.label());
            }
            TestDesign::Three(d) => three(&mut s, d),
            TestDesign::FourHat(d) => {
                three(&mut s, &d.base);
                let _ = writeln!(s, "gamma_prime = {}", d.gamma_prime);
                let _ = writeln!(s, "N0 = {}", d.n0_second);
                let _ = writeln!(s, "K0 = {}", d.kappa0_second);
            }
            TestDesign::FourCheck(d) => {
                three(&mut s, &d.base);
                let _ = writeln!(s, "delta_prime = {}", d.delta_prime);
                let _ = writeln!(s, "N1 = {}", d.n1_second);
                let _ = writeln!(s, "K1 = {}", d.kappa1_second);
            }
            TestDesign::Sprt { design, .. } => {
                let _ = writeln!(s, "A = {}", design.a);
                let _ = writeln!(s, "B = {}", design.b);
            }
        }
        if let Some(n) = self.max_sample_size() {
            let _ = writeln!(s, "max_sample_size = {n}");
        }
        for hyp in [Hypothesis::Null, Hypothesis::Alt] {
            if let Some((lo, hi)) = self.ess_bounds(hyp) {
                let tag = if hyp == Hypothesis::Null { "null" } else { "alt" };
                let _ = writeln!(s, "ess_bound_{tag} = [{lo}, {hi}]");
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub test: TestKind,
    pub model: ModelSpec,
    pub alpha: f64,
    pub beta: f64,
    pub true_param: f64,
    pub reps: usize,
    pub ess: f64,
    pub ess_se: f64,
    pub reject_rate: f64,
    pub reject_se: f64,
    /// `(stage, frequency)`, ascending in stage.
    pub stage_freq: Vec<(usize, f64)>,
    pub min_sample_size: usize,
    pub max_sample_size: usize,
    pub capped: usize,
    /// Closed-form bounds when the true parameter is one of the hypotheses.
    pub bounds: Option<(f64, f64)>,
    pub seed: u64,
}

/// Simulate `reps` paths under `true_param` and run `test` on each.
///
/// Replication `r` uses stream `r` of a key derived from the seed and the
/// true parameter only, so different tests see the same paths.
pub fn evaluate(test: &TestDesign, model: &ModelSpec, true_param: f64, reps: usize, seed: u64) -> Result<EvalReport> {
    if reps < 100 {
        return Err(Error::Domain(format!("at least 100 replications required, got {reps}")));
    }
    model.check_param(true_param)?;
    let key = StreamKey::derive(seed, "eval", &[true_param.to_bits()]);
    let outcomes: Vec<RunOutcome> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut feed = SimulatedFeed::new(model, true_param, key.replication(r))?;
            test.run(&mut feed)
        })
        .collect::<Result<_>>()?;
    let sizes: Vec<f64> = outcomes.iter().map(|o| o.sample_size as f64).collect();
    let rejects: Vec<f64> = outcomes
        .iter()
        .map(|o| if o.decision == Decision::Reject { 1.0 } else { 0.0 })
        .collect();
    let (ess, ess_se) = mean_se(&sizes);
    let (reject_rate, reject_se) = mean_se(&rejects);
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    for o in &outcomes {
        *hist.entry(o.stage_reached).or_default() += 1;
    }
    let stage_freq = hist
        .into_iter()
        .map(|(s, c)| (s, c as f64 / reps as f64))
        .collect();
    let (alpha, beta) = test.levels();
    let (m0, m1) = model.hypothesis_params();
    let bounds = if true_param == m0 {
        test.ess_bounds(Hypothesis::Null)
    } else if true_param == m1 {
        test.ess_bounds(Hypothesis::Alt)
    } else {
        None
    };
    Ok(EvalReport {
        test: test.kind(),
        model: *model,
        alpha,
        beta,
        true_param,
        reps,
        ess,
        ess_se,
        reject_rate,
        reject_se,
        stage_freq,
        min_sample_size: outcomes.iter().map(|o| o.sample_size).min().unwrap_or(0),
        max_sample_size: outcomes.iter().map(|o| o.sample_size).max().unwrap_or(0),
        capped: outcomes.iter().filter(|o| o.capped).count(),
        bounds,
        seed,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl EvalReport {
    pub fn csv_fields(&self) -> Vec<String> {
        vec![
            self.test.label().to_string(),
            self.model.kind().label().to_string(),
            self.model.statistic().label().to_string(),
            self.alpha.to_string(),
            self.beta.to_string(),
            self.true_param.to_string(),
            self.reps.to_string(),
            self.ess.to_string(),
            self.ess_se.to_string(),
            self.reject_rate.to_string(),
            self.reject_se.to_string(),
            fmt_opt(self.bounds.map(|b| b.0)),
            fmt_opt(self.bounds.map(|b| b.1)),
            self.seed.to_string(),
        ]
    }
}

pub fn write_eval_csv<W: Write>(out: &mut W, reports: &[EvalReport]) -> Result<()> {
    writeln!(out, "{}", EVAL_COLUMNS.join(","))?;
    for r in reports {
        writeln!(out, "{}", r.csv_fields().join(","))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `alpha = beta`.
    Equal,
    /// `alpha = beta^4`.
    Power4,
    /// `|log alpha| = |log beta|^1.5`.
    LogPower,
    /// `|log alpha| = |log beta| / beta^0.08`.
    LogOverBeta,
}

impl Regime {
    pub const ALL: [Regime; 4] = [Regime::Equal, Regime::Power4, Regime::LogPower, Regime::LogOverBeta];

    pub fn label(&self) -> &'static str {
        match self {
            Regime::Equal => "equal",
            Regime::Power4 => "power4",
            Regime::LogPower => "log-power",
            Regime::LogOverBeta => "log-over-beta",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.label() == s)
    }

    pub fn alpha_for(&self, beta: f64) -> f64 {
        let lb = beta.ln().abs();
        match self {
            Regime::Equal => beta,
            Regime::Power4 => beta.powi(4),
            Regime::LogPower => (-lb.powf(1.5)).exp(),
            Regime::LogOverBeta => (-lb / beta.powf(0.08)).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeSpec {
    pub regime: Regime,
    pub betas: Vec<f64>,
}

impl RegimeSpec {
    /// `beta` in `{1e-1, ..., 1e-6}`.
    pub fn standard(regime: Regime) -> Self {
        Self::decades(regime, 6)
    }

    /// `beta` in `{1e-1, ..., 1e-k}`.
    pub fn decades(regime: Regime, k: i32) -> Self {
        Self {
            regime,
            betas: (1..=k).map(|e| 10f64.powi(-e)).collect(),
        }
    }

    pub fn levels(&self) -> Result<Vec<(f64, f64)>> {
        self.betas
            .iter()
            .map(|&b| {
                let a = self.regime.alpha_for(b);
                if a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0 {
                    Ok((a, b))
                } else {
                    Err(Error::Domain(format!(
                        "regime {} gives alpha = {a} at beta = {b}",
                        self.regime.label()
                    )))
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub regime: Regime,
    pub hypothesis: Hypothesis,
    pub report: EvalReport,
    /// `ESS / ESS(SPRT)` at the same levels and parameter.
    pub ratio: f64,
    pub ratio_se: f64,
    /// Closed-form bounds divided by the SPRT ESS.
    pub ratio_bounds: Option<(f64, f64)>,
}

/// Evaluate `tests` and the SPRT under both hypotheses at every level pair of the regime.
pub fn sweep(
    spec: &RegimeSpec,
    solver: &FssSolver,
    tests: &[TestKind],
    reps: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    let model = *solver.model();
    let mut rows = Vec::new();
    for (alpha, beta) in spec.levels()? {
        let sprt = TestKind::Sprt.design(solver, alpha, beta)?;
        let mut designs = Vec::new();
        for t in tests.iter().filter(|&&t| t != TestKind::Sprt) {
            designs.push(t.design(solver, alpha, beta)?);
        }
        for hyp in [Hypothesis::Null, Hypothesis::Alt] {
            let param = model.param(hyp);
            let base = evaluate(&sprt, &model, param, reps, seed)?;
            let mut push = |report: EvalReport| {
                let ratio = report.ess / base.ess;
                let ratio_se = ratio * ((report.ess_se / report.ess).powi(2) + (base.ess_se / base.ess).powi(2)).sqrt();
                let ratio_bounds = report.bounds.map(|(lo, hi)| (lo / base.ess, hi / base.ess));
                rows.push(SweepRow {
                    regime: spec.regime,
                    hypothesis: hyp,
                    report,
                    ratio,
                    ratio_se,
                    ratio_bounds,
                });
            };
            for d in &designs {
                push(evaluate(d, &model, param, reps, seed)?);
            }
            push(base.clone());
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(out: &mut W, rows: &[SweepRow]) -> Result<()> {
    writeln!(out, "{},{}", EVAL_COLUMNS.join(","), SWEEP_EXTRA_COLUMNS.join(","))?;
    for r in rows {
        let hyp = if r.hypothesis == Hypothesis::Null { "null" } else { "alt" };
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.report.csv_fields().join(","),
            r.regime.label(),
            hyp,
            r.ratio,
            r.ratio_se,
            fmt_opt(r.ratio_bounds.map(|b| b.0)),
            fmt_opt(r.ratio_bounds.map(|b| b.1)),
        )?;
    }
    Ok(())
}

/// Expected sample size of a three-stage test on Gaussian data with mean
/// `true_mu`, computed from the joint normal law of the partial sums.
pub fn gaussian_exact_ess(design: &ThreeStageDesign, model: &ModelSpec, true_mu: f64) -> Result<f64> {
    let (m0, m1) = model.hypothesis_params();
    // T_n = slope * mean - shift, so T_n > k iff S_n > n (k + shift) / slope
    let (slope, shift) = match (model.kind(), model.statistic()) {
        (ModelKind::GaussianMean { .. }, Statistic::AvgLlr) => (m1 - m0, (m1 * m1 - m0 * m0) / 2.0),
        (ModelKind::GaussianMean { .. }, Statistic::SampleMean) => (1.0, 0.0),
        _ => {
            return Err(Error::NotApplicable(
                "exact expected sample size needs the Gaussian model with the LLR or sample mean".into(),
            ))
        }
    };
    let to_sum = |k: f64| (k + shift) / slope;
    let (n0, n1, big_n) = (design.n0 as f64, design.n1 as f64, design.n_final as f64);
    let c0 = n0 * to_sum(design.kappa0);
    let c1 = n1 * to_sum(design.kappa1);
    let gl = GaussLegendre::new(128);
    let sd = |n: f64| n.sqrt();
    // P(S_a in first, S_b in second) for a < b; `above` selects S > c, else S <= c.
    let joint = |a: f64, ca: f64, a_above: bool, b: f64, cb: f64, b_above: bool| -> f64 {
        let (ma, sa) = (a * true_mu, sd(a));
        let (md, sdd) = ((b - a) * true_mu, sd(b - a));
        let (lo, hi) = if a_above {
            (ca.max(ma - 12.0 * sa), ma + 12.0 * sa)
        } else {
            (ma - 12.0 * sa, ca.min(ma + 12.0 * sa))
        };
        if hi <= lo {
            return 0.0;
        }
        gl.integrate(
            |s| {
                let dens = (-0.5 * ((s - ma) / sa).powi(2)).exp() / (sa * (2.0 * std::f64::consts::PI).sqrt());
                let z = (cb - s - md) / sdd;
                dens * if b_above { norm_sf(z) } else { norm_cdf(z) }
            },
            lo,
            hi,
        )
    };
    let above = |n: f64, c: f64| norm_sf((c - n * true_mu) / sd(n));
    let ess = if design.n0 < design.n1 {
        n0 + (n1 - n0) * above(n0, c0) + (big_n - n1) * joint(n0, c0, true, n1, c1, false)
    } else if design.n1 < design.n0 {
        n1 + (n0 - n1) * (1.0 - above(n1, c1)) + (big_n - n0) * joint(n1, c1, false, n0, c0, true)
    } else {
        let p = (above(n0, c0) - above(n0, c1)).max(0.0);
        n0 + (big_n - n0) * p
    };
    Ok(ess)
}
