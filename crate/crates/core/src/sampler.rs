//! Importance sampling for tail probabilities of `T_n`.
//!
//! Paths are simulated under a tilted parameter whose almost-sure statistic
//! limit equals the target level, and each path carries the log-likelihood
//! ratio `log dP_base/dQ` of the hypothesis of interest against the tilt.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::{simulate_step, tilt_llr, Hypothesis, ModelKind, ModelSpec, PathState, Statistic};
use crate::numeric::{bisect, upper_quantile};
use crate::rng::StreamKey;

/// Fewer hits than this and an estimate is flagged unreliable.
pub const MIN_HITS: usize = 20;

/// A change of measure aimed at the level `target_level`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltSpec {
    pub model: ModelSpec,
    pub target_level: f64,
    /// Parameter whose statistic limit equals `target_level`.
    pub tilt_param: f64,
    pub base: Hypothesis,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Event {
    /// `T_n > kappa`.
    Above(f64),
    /// `T_n <= kappa`.
    AtOrBelow(f64),
}

/// Tail estimate from a (possibly weighted) sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tail {
    pub estimate: f64,
    pub se: f64,
    pub hits: usize,
}

impl Tail {
    /// `estimate + 2 se`, the quantity compared against an error level.
    pub fn upper(&self) -> f64 {
        self.estimate + 2.0 * self.se
    }

    pub fn reliable(&self) -> bool {
        self.hits >= MIN_HITS
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsEstimate {
    pub estimate: f64,
    pub se: f64,
    /// `n^-1 log` of the estimated second moment of the weighted indicator.
    pub log_efficiency: f64,
    pub hits: usize,
    pub reliable: bool,
}

/// Open interval of statistic limits reachable by moving the model parameter.
pub fn attainable_limits(model: &ModelSpec) -> (f64, f64) {
    let (lo, hi) = model.param_space();
    match (model.kind(), model.statistic()) {
        (ModelKind::GaussianMean { .. }, Statistic::Binarized { .. }) => (0.0, 1.0),
        (ModelKind::GaussianMean { .. }, _) => (f64::NEG_INFINITY, f64::INFINITY),
        (ModelKind::Ar1 { .. }, Statistic::YuleWalker) => (-1.0, 1.0),
        (ModelKind::Ar1 { .. }, _) => (f64::NEG_INFINITY, f64::INFINITY),
        (ModelKind::TwoStateMarkov { .. }, _) => {
            let eps = 1e-12;
            (
                model.statistic_limit(lo + eps).unwrap_or(f64::NAN),
                model.statistic_limit(hi - eps).unwrap_or(f64::NAN),
            )
        }
    }
}

/// Parameter whose statistic limit is `kappa`, searched over the whole parameter space.
pub fn param_for_limit(model: &ModelSpec, kappa: f64) -> Result<f64> {
    let (m0, m1) = model.hypothesis_params();
    let (alo, ahi) = attainable_limits(model);
    if !(kappa > alo && kappa < ahi) {
        return Err(Error::Range {
            what: "kappa",
            value: kappa,
            lo: alo,
            hi: ahi,
        });
    }
    let mu = match (model.kind(), model.statistic()) {
        (ModelKind::GaussianMean { .. }, Statistic::AvgLlr) => {
            (kappa + (m1 * m1 - m0 * m0) / 2.0) / (m1 - m0)
        }
        (ModelKind::GaussianMean { .. }, Statistic::SampleMean) => kappa,
        (ModelKind::GaussianMean { .. }, Statistic::Binarized { threshold }) => {
            threshold - upper_quantile(kappa)
        }
        (ModelKind::Ar1 { .. }, Statistic::YuleWalker) => kappa,
        (ModelKind::TwoStateMarkov { p, .. }, Statistic::SampleMean) => 2.0 - p - (1.0 - p) / kappa,
        _ => {
            let (lo, hi) = model.param_space();
            let span = hi - lo;
            bisect(
                |m| model.statistic_limit(m).unwrap_or(f64::NAN) - kappa,
                lo + span * 1e-15,
                hi - span * 1e-15,
                1e-15,
                0.0,
            )
            .ok_or_else(|| Error::Numeric(format!("no parameter with statistic limit {kappa}")))?
        }
    };
    model.check_param(mu)?;
    Ok(mu)
}

/// Tilt whose statistic limit equals `kappa`, for `kappa` strictly between `J0` and `J1`.
pub fn tilt_for_level(model: &ModelSpec, kappa: f64, base: Hypothesis) -> Result<TiltSpec> {
    let (j0, j1) = model.limits();
    if !(kappa > j0 && kappa < j1) {
        return Err(Error::Range {
            what: "kappa",
            value: kappa,
            lo: j0,
            hi: j1,
        });
    }
    Ok(TiltSpec {
        model: *model,
        target_level: kappa,
        tilt_param: param_for_limit(model, kappa)?,
        base,
    })
}

/// Terminal statistic values of simulated paths with their log-weights,
/// sorted by decreasing statistic so that tails are prefix or suffix sums.
#[derive(Debug, Clone)]
pub struct WeightedSample {
    n: usize,
    reps: usize,
    values: Vec<f64>,
    log_weights: Vec<f64>,
    // prefix[k] = sum over the k largest values
    prefix_w: Vec<f64>,
    prefix_w2: Vec<f64>,
    // suffix[k] = sum over entries k.. (the smallest values)
    suffix_w: Vec<f64>,
    suffix_w2: Vec<f64>,
}

impl WeightedSample {
    /// Simulate `reps` paths of length `n` under `sim_param`, weighting each by
    /// `log dP_base/dQ`. Replication `r` uses stream `r` of `key`.
    pub fn simulate(
        model: &ModelSpec,
        sim_param: f64,
        base: Hypothesis,
        n: usize,
        reps: usize,
        key: &StreamKey,
    ) -> Result<Self> {
        model.check_param(sim_param)?;
        if n == 0 {
            return Err(Error::Domain("sample size must be at least 1".into()));
        }
        let pairs: Vec<(f64, f64)> = (0..reps as u64)
            .into_par_iter()
            .map(|r| {
                let mut rng = key.replication(r);
                let mut state = PathState::new();
                for _ in 0..n {
                    simulate_step(model, sim_param, &mut state, &mut rng).expect("checked parameter");
                }
                (state.statistic_value(), tilt_llr(model, sim_param, base, &state))
            })
            .collect();
        Ok(Self::from_pairs(n, pairs))
    }

    /// Build from `(statistic, log-weight)` pairs.
    pub fn from_pairs(n: usize, mut pairs: Vec<(f64, f64)>) -> Self {
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let reps = pairs.len();
        let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let log_weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let mut prefix_w = vec![0.0; reps + 1];
        let mut prefix_w2 = vec![0.0; reps + 1];
        for k in 0..reps {
            let w = log_weights[k].exp();
            prefix_w[k + 1] = prefix_w[k] + w;
            prefix_w2[k + 1] = prefix_w2[k] + w * w;
        }
        let mut suffix_w = vec![0.0; reps + 1];
        let mut suffix_w2 = vec![0.0; reps + 1];
        for k in (0..reps).rev() {
            let w = log_weights[k].exp();
            suffix_w[k] = suffix_w[k + 1] + w;
            suffix_w2[k] = suffix_w2[k + 1] + w * w;
        }
        Self {
            n,
            reps,
            values,
            log_weights,
            prefix_w,
            prefix_w2,
            suffix_w,
            suffix_w2,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn reps(&self) -> usize {
        self.reps
    }

    // Number of entries with value > kappa.
    fn count_above(&self, kappa: f64) -> usize {
        self.values.partition_point(|&v| v > kappa)
    }

    fn tail(&self, sum_w: f64, sum_w2: f64, hits: usize) -> Tail {
        let r = self.reps as f64;
        let est = sum_w / r;
        let var = (sum_w2 / r - est * est).max(0.0);
        let se = if self.reps > 1 { (var / (r - 1.0)).sqrt() } else { f64::NAN };
        Tail {
            estimate: est,
            se,
            hits,
        }
    }

    /// Weighted estimate of `P_base(T_n > kappa)`.
    pub fn above(&self, kappa: f64) -> Tail {
        let k = self.count_above(kappa);
        self.tail(self.prefix_w[k], self.prefix_w2[k], k)
    }

    /// Weighted estimate of `P_base(T_n <= kappa)`.
    pub fn at_or_below(&self, kappa: f64) -> Tail {
        let k = self.count_above(kappa);
        self.tail(self.suffix_w[k], self.suffix_w2[k], self.reps - k)
    }

    pub fn estimate(&self, event: Event) -> Tail {
        match event {
            Event::Above(k) => self.above(k),
            Event::AtOrBelow(k) => self.at_or_below(k),
        }
    }

    /// `n^-1 log` of the mean squared weighted indicator, computed in log space.
    pub fn log_second_moment(&self, event: Event) -> f64 {
        let k = self.count_above(match event {
            Event::Above(x) | Event::AtOrBelow(x) => x,
        });
        let range = match event {
            Event::Above(_) => 0..k,
            Event::AtOrBelow(_) => k..self.reps,
        };
        let lw = &self.log_weights[range];
        if lw.is_empty() {
            return f64::NEG_INFINITY;
        }
        let m = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = lw.iter().map(|&x| (2.0 * (x - m)).exp()).sum();
        (2.0 * m + (s / self.reps as f64).ln()) / self.n as f64
    }

    /// Smallest sample value `kappa` with `above(kappa).upper() <= level`,
    /// scanning down from the largest value and stopping at the first failure.
    pub fn upper_quantile_scan(&self, level: f64) -> (f64, Tail) {
        let mut best = (self.values[0], self.above(self.values[0]));
        let mut k = 0;
        while k < self.reps {
            let v = self.values[k];
            let t = self.tail(self.prefix_w[k], self.prefix_w2[k], k);
            if t.upper() > level {
                break;
            }
            best = (v, t);
            while k < self.reps && self.values[k] == v {
                k += 1;
            }
        }
        best
    }
}

/// Importance-sampling estimate of `P_base(event)` after `n` observations.
pub fn is_estimate(tilt: &TiltSpec, event: Event, n: usize, reps: usize, key: &StreamKey) -> Result<IsEstimate> {
    if reps < 100 {
        return Err(Error::Domain(format!("at least 100 replications required, got {reps}")));
    }
    let sample = WeightedSample::simulate(&tilt.model, tilt.tilt_param, tilt.base, n, reps, key)?;
    let t = sample.estimate(event);
    let (estimate, se) = if t.hits == 0 { (0.0, 0.0) } else { (t.estimate, t.se) };
    Ok(IsEstimate {
        estimate,
        se,
        log_efficiency: sample.log_second_moment(event),
        hits: t.hits,
        reliable: t.reliable(),
    })
}
