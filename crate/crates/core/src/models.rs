//! The three statistical models (iid Gaussian mean, Gaussian AR(1), two-state
//! Markov chain), their test statistics, path simulation, and the
//! log-likelihood bookkeeping needed for importance sampling.
//!
//! Every model is indexed by a scalar parameter `mu`. The two hypotheses fix
//! `mu = mu0` (under `P0`) and `mu = mu1` (under `P1`), with `mu0 < mu1`.

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numeric::{bernoulli_kl, norm_sf, CompensatedSum};

/// Which of the two simple hypotheses a probability refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    /// The null distribution `P0`.
    Null,
    /// The alternative distribution `P1`.
    Alt,
}

impl Hypothesis {
    pub fn index(self) -> usize {
        match self {
            Hypothesis::Null => 0,
            Hypothesis::Alt => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    /// iid `N(mu, 1)` observations, `mu0 = -eta`, `mu1 = eta`.
    GaussianMean { eta: f64 },
    /// `X_n = mu X_{n-1} + e_n`, `X_0 = 0`, standard Gaussian innovations.
    Ar1 { mu0: f64, mu1: f64 },
    /// Chain on `{0, 1}` started at 0 with transition matrix
    /// `[[p, 1 - p], [1 - mu, mu]]`.
    TwoStateMarkov { p: f64, mu0: f64, mu1: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Statistic {
    /// Average log-likelihood ratio `Lambda_n / n`.
    AvgLlr,
    /// Sample mean of the observations (of the states, for the Markov chain).
    SampleMean,
    /// Fraction of observations above `threshold`.
    Binarized { threshold: f64 },
    /// `sum X_{i-1} X_i / sum X_i^2`.
    YuleWalker,
}

impl Statistic {
    pub fn label(&self) -> &'static str {
        match self {
            Statistic::AvgLlr => "avg-llr",
            Statistic::SampleMean => "sample-mean",
            Statistic::Binarized { .. } => "binarized",
            Statistic::YuleWalker => "yule-walker",
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statistic::Binarized { threshold } => write!(f, "binarized({threshold})"),
            other => f.write_str(other.label()),
        }
    }
}

impl ModelKind {
    pub fn label(&self) -> &'static str {
        match self {
            ModelKind::GaussianMean { .. } => "gaussian",
            ModelKind::Ar1 { .. } => "ar1",
            ModelKind::TwoStateMarkov { .. } => "markov",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::GaussianMean { eta } => write!(f, "gaussian(eta={eta})"),
            ModelKind::Ar1 { mu0, mu1 } => write!(f, "ar1(mu0={mu0}, mu1={mu1})"),
            ModelKind::TwoStateMarkov { p, mu0, mu1 } => {
                write!(f, "markov(p={p}, mu0={mu0}, mu1={mu1})")
            }
        }
    }
}

/// A model together with the test statistic used by the fixed-sample test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    kind: ModelKind,
    statistic: Statistic,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, statistic: Statistic) -> Result<Self> {
        validate_kind(&kind)?;
        let ok = matches!(
            (&kind, &statistic),
            (ModelKind::GaussianMean { .. }, Statistic::AvgLlr)
                | (ModelKind::GaussianMean { .. }, Statistic::SampleMean)
                | (ModelKind::GaussianMean { .. }, Statistic::Binarized { .. })
                | (ModelKind::Ar1 { .. }, Statistic::AvgLlr)
                | (ModelKind::Ar1 { .. }, Statistic::YuleWalker)
                | (ModelKind::TwoStateMarkov { .. }, Statistic::AvgLlr)
                | (ModelKind::TwoStateMarkov { .. }, Statistic::SampleMean)
        );
        if !ok {
            return Err(Error::InvalidModel(format!(
                "statistic {} is not available for the {} model",
                statistic.label(),
                kind.label()
            )));
        }
        if let Statistic::Binarized { threshold } = statistic {
            if !threshold.is_finite() {
                return Err(Error::InvalidModel("binarization threshold must be finite".into()));
            }
        }
        Ok(Self { kind, statistic })
    }

    pub fn gaussian(eta: f64, statistic: Statistic) -> Result<Self> {
        Self::new(ModelKind::GaussianMean { eta }, statistic)
    }

    pub fn ar1(mu0: f64, mu1: f64, statistic: Statistic) -> Result<Self> {
        Self::new(ModelKind::Ar1 { mu0, mu1 }, statistic)
    }

    pub fn markov(p: f64, mu0: f64, mu1: f64, statistic: Statistic) -> Result<Self> {
        Self::new(ModelKind::TwoStateMarkov { p, mu0, mu1 }, statistic)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn statistic(&self) -> Statistic {
        self.statistic
    }

    /// The same model with another statistic.
    pub fn with_statistic(&self, statistic: Statistic) -> Result<Self> {
        Self::new(self.kind, statistic)
    }

    /// `mu0` or `mu1`.
    pub fn param(&self, hyp: Hypothesis) -> f64 {
        let (m0, m1) = self.hypothesis_params();
        match hyp {
            Hypothesis::Null => m0,
            Hypothesis::Alt => m1,
        }
    }

    pub fn hypothesis_params(&self) -> (f64, f64) {
        match self.kind {
            ModelKind::GaussianMean { eta } => (-eta, eta),
            ModelKind::Ar1 { mu0, mu1 } => (mu0, mu1),
            ModelKind::TwoStateMarkov { mu0, mu1, .. } => (mu0, mu1),
        }
    }

    /// Open parameter space.
    pub fn param_space(&self) -> (f64, f64) {
        match self.kind {
            ModelKind::GaussianMean { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            ModelKind::Ar1 { .. } => (-1.0, 1.0),
            ModelKind::TwoStateMarkov { .. } => (0.0, 1.0),
        }
    }

    pub fn check_param(&self, param: f64) -> Result<()> {
        let (lo, hi) = self.param_space();
        if param.is_finite() && param > lo && param < hi {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "parameter {param} outside ({lo}, {hi}) for the {} model",
                self.kind.label()
            )))
        }
    }

    /// Whether `mu0 = -mu1` and the statistic is odd under the reflection,
    /// so that `J0 = -J1` and the two error constraints mirror each other.
    pub fn is_symmetric(&self) -> bool {
        match (self.kind, self.statistic) {
            (ModelKind::GaussianMean { .. }, Statistic::Binarized { threshold }) => threshold == 0.0,
            (ModelKind::GaussianMean { .. }, _) => true,
            (ModelKind::Ar1 { mu0, mu1 }, _) => mu0 == -mu1,
            (ModelKind::TwoStateMarkov { .. }, _) => false,
        }
    }

    /// Almost-sure limit of `T_n` under parameter `param`, for this model's statistic.
    pub fn statistic_limit(&self, param: f64) -> Result<f64> {
        statistic_limit(self, self.statistic, param)
    }

    /// `J0` and `J1`, the limits of the statistic under `P0` and `P1`.
    pub fn limits(&self) -> (f64, f64) {
        let (m0, m1) = self.hypothesis_params();
        let j0 = statistic_limit(self, self.statistic, m0).expect("validated parameters");
        let j1 = statistic_limit(self, self.statistic, m1).expect("validated parameters");
        (j0, j1)
    }

    /// `I0` and `I1`, the Kullback-Leibler rates of the average LLR.
    pub fn kl_rates(&self) -> (f64, f64) {
        let (m0, m1) = self.hypothesis_params();
        let i0 = -statistic_limit(self, Statistic::AvgLlr, m0).expect("validated parameters");
        let i1 = statistic_limit(self, Statistic::AvgLlr, m1).expect("validated parameters");
        (i0, i1)
    }

    /// Log-density ratio `log dP_a/dP_b` of the first `n` observations of a path.
    pub fn log_density_ratio(&self, a: f64, b: f64, state: &PathState) -> f64 {
        if a == b {
            return 0.0;
        }
        match self.kind {
            ModelKind::GaussianMean { .. } => {
                (a - b) * state.sum_x.value() - state.n as f64 * (a * a - b * b) / 2.0
            }
            ModelKind::Ar1 { .. } => {
                (a - b) * state.sum_cross.value() - (a * a - b * b) / 2.0 * state.sum_lag_sq.value()
            }
            ModelKind::TwoStateMarkov { .. } => {
                let stay = state.counts[1][1] as f64;
                let leave = state.counts[1][0] as f64;
                let mut v = 0.0;
                if stay > 0.0 {
                    v += stay * (a / b).ln();
                }
                if leave > 0.0 {
                    v += leave * ((1.0 - a) / (1.0 - b)).ln();
                }
                v
            }
        }
    }

    /// Draw `X_{n+1}` given the current path under parameter `param`.
    fn draw<R: Rng + ?Sized>(&self, param: f64, last: f64, rng: &mut R) -> f64 {
        match self.kind {
            ModelKind::GaussianMean { .. } => {
                let e: f64 = rng.sample(StandardNormal);
                param + e
            }
            ModelKind::Ar1 { .. } => {
                let e: f64 = rng.sample(StandardNormal);
                param * last + e
            }
            ModelKind::TwoStateMarkov { p, .. } => {
                let u: f64 = rng.random();
                let stay = if last == 0.0 { p } else { param };
                let next_is_same = u < stay;
                match (last == 0.0, next_is_same) {
                    (true, true) | (false, false) => 0.0,
                    _ => 1.0,
                }
            }
        }
    }
}

fn validate_kind(kind: &ModelKind) -> Result<()> {
    match *kind {
        ModelKind::GaussianMean { eta } => {
            if !(eta.is_finite() && eta > 0.0) {
                return Err(Error::InvalidModel(format!("eta must be positive, got {eta}")));
            }
        }
        ModelKind::Ar1 { mu0, mu1 } => {
            if !(mu0 > -1.0 && mu1 < 1.0 && mu0 < mu1) {
                return Err(Error::InvalidModel(format!(
                    "AR(1) needs -1 < mu0 < mu1 < 1, got mu0={mu0}, mu1={mu1}"
                )));
            }
        }
        ModelKind::TwoStateMarkov { p, mu0, mu1 } => {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidModel(format!("p must lie in (0, 1), got {p}")));
            }
            if !(mu0 > 0.0 && mu1 < 1.0 && mu0 < mu1) {
                return Err(Error::InvalidModel(format!(
                    "Markov model needs 0 < mu0 < mu1 < 1, got mu0={mu0}, mu1={mu1}"
                )));
            }
        }
    }
    Ok(())
}

/// Almost-sure limit of the given statistic under parameter `param`.
pub fn statistic_limit(model: &ModelSpec, statistic: Statistic, param: f64) -> Result<f64> {
    model.check_param(param)?;
    let (m0, m1) = model.hypothesis_params();
    let v = match (model.kind, statistic) {
        (ModelKind::GaussianMean { .. }, Statistic::AvgLlr) => {
            (m1 - m0) * param - (m1 * m1 - m0 * m0) / 2.0
        }
        (ModelKind::GaussianMean { .. }, Statistic::SampleMean) => param,
        (ModelKind::GaussianMean { .. }, Statistic::Binarized { threshold }) => {
            norm_sf(threshold - param)
        }
        (ModelKind::Ar1 { .. }, Statistic::AvgLlr) => {
            (m1 - m0) / (1.0 - param * param) * (param - (m1 + m0) / 2.0)
        }
        (ModelKind::Ar1 { .. }, Statistic::YuleWalker) => param,
        (ModelKind::TwoStateMarkov { p, .. }, Statistic::AvgLlr) => {
            (1.0 - p) / (2.0 - p - param) * (bernoulli_kl(param, m0) - bernoulli_kl(param, m1))
        }
        (ModelKind::TwoStateMarkov { p, .. }, Statistic::SampleMean) => (1.0 - p) / (2.0 - p - param),
        (kind, stat) => {
            return Err(Error::InvalidModel(format!(
                "statistic {} is not available for the {} model",
                stat.label(),
                kind.label()
            )))
        }
    };
    Ok(v)
}

/// Incremental state of one simulated (or replayed) path.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PathState {
    n: usize,
    statistic_value: f64,
    llr_value: f64,
    last: f64,
    sum_x: CompensatedSum,
    sum_sq: CompensatedSum,
    sum_lag_sq: CompensatedSum,
    sum_cross: CompensatedSum,
    exceedances: u64,
    counts: [[u64; 2]; 2],
}

impl PathState {
    /// Empty path with `X_0 = 0`.
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Current `T_n`.
    pub fn statistic_value(&self) -> f64 {
        self.statistic_value
    }

    /// Current `Lambda_n`.
    pub fn llr_value(&self) -> f64 {
        self.llr_value
    }

    /// Current `Lambda_n / n`.
    pub fn avg_llr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.llr_value / self.n as f64
        }
    }

    pub fn last(&self) -> f64 {
        self.last
    }

    /// Transition counts `N_n(i, j)`.
    pub fn transition_counts(&self) -> [[u64; 2]; 2] {
        self.counts
    }

    /// Append an observed `x` and refresh `T_n` and `Lambda_n`.
    pub fn push(&mut self, model: &ModelSpec, x: f64) -> Result<()> {
        if let ModelKind::TwoStateMarkov { .. } = model.kind {
            if x != 0.0 && x != 1.0 {
                return Err(Error::Domain(format!("Markov state must be 0 or 1, got {x}")));
            }
            self.counts[self.last as usize][x as usize] += 1;
        }
        self.sum_x.add(x);
        self.sum_sq.add(x * x);
        self.sum_lag_sq.add(self.last * self.last);
        self.sum_cross.add(self.last * x);
        if let Statistic::Binarized { threshold } = model.statistic {
            if x > threshold {
                self.exceedances += 1;
            }
        }
        self.last = x;
        self.n += 1;
        let (m0, m1) = model.hypothesis_params();
        self.llr_value = model.log_density_ratio(m1, m0, self);
        let nf = self.n as f64;
        self.statistic_value = match model.statistic {
            Statistic::AvgLlr => self.llr_value / nf,
            Statistic::SampleMean => self.sum_x.value() / nf,
            Statistic::Binarized { .. } => self.exceedances as f64 / nf,
            Statistic::YuleWalker => {
                let d = self.sum_sq.value();
                if d > 0.0 {
                    self.sum_cross.value() / d
                } else {
                    0.0
                }
            }
        };
        Ok(())
    }
}

/// Advance `state` by one observation drawn under `param`. Returns the observation.
pub fn simulate_step<R: Rng + ?Sized>(
    model: &ModelSpec,
    param: f64,
    state: &mut PathState,
    rng: &mut R,
) -> Result<f64> {
    model.check_param(param)?;
    let x = model.draw(param, state.last, rng);
    state.push(model, x)?;
    Ok(x)
}

/// `log dP_base/dQ` on the current path, where `Q` is the model at `tilt_param`.
pub fn tilt_llr(model: &ModelSpec, tilt_param: f64, base: Hypothesis, state: &PathState) -> f64 {
    model.log_density_ratio(model.param(base), tilt_param, state)
}

/// `T_n` evaluated directly on a whole path (no incremental state).
pub fn batch_statistic(model: &ModelSpec, path: &[f64]) -> f64 {
    let n = path.len() as f64;
    match model.statistic {
        Statistic::AvgLlr => batch_llr(model, path) / n,
        Statistic::SampleMean => path.iter().sum::<f64>() / n,
        Statistic::Binarized { threshold } => {
            path.iter().filter(|&&x| x > threshold).count() as f64 / n
        }
        Statistic::YuleWalker => {
            let mut prev = 0.0;
            let mut num = 0.0;
            let mut den = 0.0;
            for &x in path {
                num += prev * x;
                den += x * x;
                prev = x;
            }
            if den > 0.0 {
                num / den
            } else {
                0.0
            }
        }
    }
}

/// `Lambda_n` evaluated directly on a whole path.
pub fn batch_llr(model: &ModelSpec, path: &[f64]) -> f64 {
    let (m0, m1) = model.hypothesis_params();
    match model.kind {
        ModelKind::GaussianMean { .. } => path
            .iter()
            .map(|&x| -0.5 * (x - m1).powi(2) + 0.5 * (x - m0).powi(2))
            .sum(),
        ModelKind::Ar1 { .. } => {
            let mut prev = 0.0;
            let mut acc = 0.0;
            for &x in path {
                acc += -0.5 * (x - m1 * prev).powi(2) + 0.5 * (x - m0 * prev).powi(2);
                prev = x;
            }
            acc
        }
        ModelKind::TwoStateMarkov { p, .. } => {
            let prob = |mu: f64, from: f64, to: f64| -> f64 {
                match (from == 0.0, to == 0.0) {
                    (true, true) => p,
                    (true, false) => 1.0 - p,
                    (false, true) => 1.0 - mu,
                    (false, false) => mu,
                }
            };
            let mut prev = 0.0;
            let mut acc = 0.0;
            for &x in path {
                acc += (prob(m1, prev, x) / prob(m0, prev, x)).ln();
                prev = x;
            }
            acc
        }
    }
}
