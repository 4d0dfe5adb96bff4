//! Command-line front end.
//!
//! Every subcommand resolves a [`RunConfig`] from an optional TOML file and
//! flags (flags win), builds the model, and writes its output either to
//! stdout or to files under `--out`.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fss::{FssSolver, SimBudget};
use crate::harness::{
    evaluate, sweep, write_eval_csv, write_sweep_csv, EvalReport, Regime, RegimeSpec, TestKind,
};
use crate::models::{Hypothesis, ModelKind, ModelSpec, Statistic};
use crate::multistage::{Decision, SimulatedFeed};
use crate::ratefn::RateFunctions;
use crate::rng::StreamKey;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

const DEFAULT_REPS: usize = 10_000;
const MULTISTAGE: [TestKind; 3] = [TestKind::Three, TestKind::FourHat, TestKind::FourCheck];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelBlock,
    #[serde(default)]
    pub levels: LevelsBlock,
    #[serde(default)]
    pub budget: BudgetBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    /// `gaussian`, `ar1` or `markov`.
    pub kind: Option<String>,
    pub eta: Option<f64>,
    pub mu0: Option<f64>,
    pub mu1: Option<f64>,
    pub p: Option<f64>,
    /// `avg-llr`, `sample-mean`, `binarized` or `yule-walker`.
    pub statistic: Option<String>,
    pub x_star: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelsBlock {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub regime: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetBlock {
    pub reps: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: Option<PathBuf>,
    pub prefix: Option<String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config file: {}", e.message())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Overwrite fields with the flags that were given.
    fn merge(&mut self, f: &CommonArgs) {
        fn set<T: Clone>(slot: &mut Option<T>, v: &Option<T>) {
            if v.is_some() {
                *slot = v.clone();
            }
        }
        set(&mut self.model.kind, &f.model);
        set(&mut self.model.eta, &f.eta);
        set(&mut self.model.mu0, &f.mu0);
        set(&mut self.model.mu1, &f.mu1);
        set(&mut self.model.p, &f.p);
        set(&mut self.model.statistic, &f.statistic);
        set(&mut self.model.x_star, &f.x_star);
        set(&mut self.levels.alpha, &f.alpha);
        set(&mut self.levels.beta, &f.beta);
        set(&mut self.levels.regime, &f.regime);
        set(&mut self.budget.reps, &f.reps);
        set(&mut self.budget.seed, &f.seed);
        set(&mut self.output.dir, &f.out);
        set(&mut self.output.prefix, &f.prefix);
    }

    fn require(v: Option<f64>, key: &str, flag: &str) -> Result<f64> {
        v.ok_or_else(|| Error::Config(format!("missing required key {key} (flag --{flag})")))
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        let m = &self.model;
        let kind = m
            .kind
            .as_deref()
            .ok_or_else(|| Error::Config("missing required key model.kind (flag --model)".into()))?;
        let kind = match kind {
            "gaussian" => ModelKind::GaussianMean {
                eta: Self::require(m.eta, "model.eta", "eta")?,
            },
            "ar1" => ModelKind::Ar1 {
                mu0: Self::require(m.mu0, "model.mu0", "mu0")?,
                mu1: Self::require(m.mu1, "model.mu1", "mu1")?,
            },
            "markov" => ModelKind::TwoStateMarkov {
                p: Self::require(m.p, "model.p", "p")?,
                mu0: Self::require(m.mu0, "model.mu0", "mu0")?,
                mu1: Self::require(m.mu1, "model.mu1", "mu1")?,
            },
            other => {
                return Err(Error::Config(format!(
                    "model.kind: unknown model {other:?} (expected gaussian, ar1 or markov)"
                )))
            }
        };
        let statistic = match m.statistic.as_deref().unwrap_or("avg-llr") {
            "avg-llr" => Statistic::AvgLlr,
            "sample-mean" => Statistic::SampleMean,
            "binarized" => Statistic::Binarized {
                threshold: m.x_star.unwrap_or(0.0),
            },
            "yule-walker" => Statistic::YuleWalker,
            other => {
                return Err(Error::Config(format!(
                    "model.statistic: unknown statistic {other:?} \
                     (expected avg-llr, sample-mean, binarized or yule-walker)"
                )))
            }
        };
        ModelSpec::new(kind, statistic).map_err(|e| Error::Config(format!("model: {e}")))
    }

    pub fn levels(&self) -> Result<(f64, f64)> {
        let alpha = Self::require(self.levels.alpha, "levels.alpha", "alpha")?;
        let beta = Self::require(self.levels.beta, "levels.beta", "beta")?;
        for (key, v) in [("levels.alpha", alpha), ("levels.beta", beta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("{key}: level {v} outside (0, 1)")));
            }
        }
        Ok((alpha, beta))
    }

    pub fn regime(&self) -> Result<Regime> {
        let r = self
            .levels
            .regime
            .as_deref()
            .ok_or_else(|| Error::Config("missing required key levels.regime (flag --regime)".into()))?;
        Regime::parse(r).ok_or_else(|| {
            Error::Config(format!(
                "levels.regime: unknown regime {r:?} (expected equal, power4, log-power or log-over-beta)"
            ))
        })
    }

    pub fn reps(&self) -> usize {
        self.budget.reps.unwrap_or(DEFAULT_REPS)
    }

    pub fn seed(&self) -> u64 {
        self.budget.seed.unwrap_or(0)
    }

    pub fn budget(&self) -> SimBudget {
        SimBudget {
            reps: self.reps(),
            seed: self.seed(),
            ..SimBudget::default()
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "stagetest", version, about = "Design and evaluate multistage sequential tests")]
pub struct Cli {
    /// TOML file with [model], [levels], [budget] and [output] sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Maximum number of worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// gaussian, ar1 or markov.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub eta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu1: Option<f64>,
    /// Stay probability of state 0 for the Markov chain.
    #[arg(long)]
    pub p: Option<f64>,
    /// avg-llr, sample-mean, binarized or yule-walker.
    #[arg(long)]
    pub statistic: Option<String>,
    /// Threshold of the binarized statistic.
    #[arg(long, allow_negative_numbers = true)]
    pub x_star: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// equal, power4, log-power or log-over-beta.
    #[arg(long)]
    pub regime: Option<String>,
    /// Replications for evaluation and for simulation-based designs.
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Prefix for output file names.
    #[arg(long)]
    pub prefix: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Design a test and print it.
    Design {
        /// fss, three, four-hat, four-check or sprt.
        #[arg(value_parser = parse_design_kind)]
        kind: TestKind,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run a design once on a simulated path.
    Run {
        #[arg(value_parser = parse_design_kind)]
        kind: TestKind,
        /// Parameter of the simulated path; defaults to the null value.
        #[arg(long, allow_negative_numbers = true)]
        true_param: Option<f64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Monte Carlo ESS and rejection rate (eval.csv).
    Evaluate {
        /// Comma-separated tests; all five by default.
        #[arg(long, value_delimiter = ',', value_parser = parse_design_kind)]
        tests: Vec<TestKind>,
        /// Comma-separated true parameters; both hypotheses by default.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        true_param: Vec<f64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// ESS ratios against the SPRT across a regime (sweep_<regime>.csv).
    Sweep {
        #[arg(long, value_delimiter = ',', value_parser = parse_design_kind)]
        tests: Vec<TestKind>,
        /// Smallest beta is 10^-decades.
        #[arg(long, default_value_t = 6)]
        decades: i32,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Rate functions on a grid over (J0, J1) (rates.csv).
    Rates {
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// All CSV data behind the figures: rates, AREs, sweeps and robustness.
    Figures {
        #[arg(long, default_value_t = 6)]
        decades: i32,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn parse_design_kind(s: &str) -> std::result::Result<TestKind, String> {
    if s == "fss" {
        return Ok(TestKind::Fixed);
    }
    TestKind::parse(s).ok_or_else(|| format!("unknown test {s:?} (expected fss, three, four-hat, four-check or sprt)"))
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InfeasibleBudget { .. } => EXIT_INFEASIBLE,
        Error::Numeric(_) | Error::Io(_) | Error::TruncatedFeed { .. } => EXIT_NUMERIC,
        Error::Config(_)
        | Error::Domain(_)
        | Error::Range { .. }
        | Error::InvalidModel(_)
        | Error::NotApplicable(_) => EXIT_CONFIG,
    }
}

/// Parse `args` (including the program name), execute, and return the exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli, &mut std::io::stdout()) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Run a parsed command, writing stdout output to `out`.
pub fn execute(cli: &Cli, out: &mut (dyn Write + Send)) -> Result<()> {
    match cli.threads {
        Some(0) => Err(Error::Config("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?
            .install(|| dispatch(cli, out)),
        None => dispatch(cli, out),
    }
}

fn resolve(cli: &Cli, common: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.merge(common);
    Ok(cfg)
}

/// Write `content` to `<dir>/<prefix><name>` or to `out` when no directory is set.
fn emit(cfg: &RunConfig, name: &str, content: &str, out: &mut (dyn Write + Send)) -> Result<()> {
    match &cfg.output.dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let prefix = cfg.output.prefix.as_deref().unwrap_or("");
            fs::write(dir.join(format!("{prefix}{name}")), content)?;
            Ok(())
        }
        None => Ok(out.write_all(content.as_bytes())?),
    }
}

fn model_lines(model: &ModelSpec) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "model = {}", model.kind().label());
    match model.kind() {
        ModelKind::GaussianMean { eta } => {
            let _ = writeln!(s, "eta = {eta}");
        }
        ModelKind::Ar1 { mu0, mu1 } => {
            let _ = writeln!(s, "mu0 = {mu0}\nmu1 = {mu1}");
        }
        ModelKind::TwoStateMarkov { p, mu0, mu1 } => {
            let _ = writeln!(s, "p = {p}\nmu0 = {mu0}\nmu1 = {mu1}");
        }
    }
    let _ = writeln!(s, "statistic = {}", model.statistic().label());
    if let Statistic::Binarized { threshold } = model.statistic() {
        let _ = writeln!(s, "x_star = {threshold}");
    }
    s
}

fn dispatch(cli: &Cli, out: &mut (dyn Write + Send)) -> Result<()> {
    match &cli.command {
        Command::Design { kind, common } => {
            let cfg = resolve(cli, common)?;
            let model = cfg.model_spec()?;
            let (alpha, beta) = cfg.levels()?;
            let solver = FssSolver::new(&model, cfg.budget());
            let design = kind.design(&solver, alpha, beta)?;
            let mut text = model_lines(&model);
            text.push_str(&design.describe());
            let _ = writeln!(text, "seed = {}", cfg.seed());
            if cfg.output.dir.is_some() {
                out.write_all(text.as_bytes())?;
            }
            emit(&cfg, "design.txt", &text, out)
        }
        Command::Run { kind, true_param, common } => {
            let cfg = resolve(cli, common)?;
            let model = cfg.model_spec()?;
            let (alpha, beta) = cfg.levels()?;
            let solver = FssSolver::new(&model, cfg.budget());
            let design = kind.design(&solver, alpha, beta)?;
            let param = true_param.unwrap_or(model.param(Hypothesis::Null));
            let rng = StreamKey::derive(cfg.seed(), "run", &[param.to_bits()]).replication(0);
            let mut feed = SimulatedFeed::new(&model, param, rng)?;
            let o = design.run(&mut feed)?;
            let mut text = String::new();
            let _ = writeln!(text, "test = {}", kind.label());
            let _ = writeln!(text, "true_param = {param}");
            let _ = writeln!(
                text,
                "decision = {}",
                if o.decision == Decision::Reject { "reject" } else { "accept" }
            );
            let _ = writeln!(text, "sample_size = {}", o.sample_size);
            let _ = writeln!(text, "stage_reached = {}", o.stage_reached);
            let _ = writeln!(text, "capped = {}", o.capped);
            let _ = writeln!(text, "seed = {}", cfg.seed());
            emit(&cfg, "run.txt", &text, out)
        }
        Command::Evaluate { tests, true_param, common } => {
            let cfg = resolve(cli, common)?;
            let model = cfg.model_spec()?;
            let (alpha, beta) = cfg.levels()?;
            let solver = FssSolver::new(&model, cfg.budget());
            let tests = if tests.is_empty() { TestKind::ALL.to_vec() } else { tests.clone() };
            let params = if true_param.is_empty() {
                let (m0, m1) = model.hypothesis_params();
                vec![m0, m1]
            } else {
                true_param.clone()
            };
            let mut reports = Vec::new();
            for t in &tests {
                let d = t.design(&solver, alpha, beta)?;
                for &p in &params {
                    reports.push(evaluate(&d, &model, p, cfg.reps(), cfg.seed())?);
                }
            }
            emit(&cfg, "eval.csv", &eval_csv(&reports)?, out)
        }
        Command::Sweep { tests, decades, common } => {
            let cfg = resolve(cli, common)?;
            let model = cfg.model_spec()?;
            let regime = cfg.regime()?;
            let tests = if tests.is_empty() { MULTISTAGE.to_vec() } else { tests.clone() };
            let solver = FssSolver::new(&model, cfg.budget());
            let spec = RegimeSpec::decades(regime, *decades);
            let rows = sweep(&spec, &solver, &tests, cfg.reps(), cfg.seed())?;
            let mut buf = Vec::new();
            write_sweep_csv(&mut buf, &rows)?;
            emit(&cfg, &format!("sweep_{}.csv", regime.label()), &to_string(buf), out)
        }
        Command::Rates { points, common } => {
            let cfg = resolve(cli, common)?;
            let model = cfg.model_spec()?;
            emit(&cfg, "rates.csv", &rates_csv(&model, *points)?, out)
        }
        Command::Figures { decades, common } => {
            let cfg = resolve(cli, common)?;
            if cfg.output.dir.is_none() {
                return Err(Error::Config("missing required key output.dir (flag --out)".into()));
            }
            let model = cfg.model_spec()?;
            let (alpha, beta) = cfg.levels()?;
            emit(&cfg, "rates.csv", &rates_csv(&model, 101)?, out)?;
            if let ModelKind::GaussianMean { .. } = model.kind() {
                emit(&cfg, "are.csv", &are_csv()?, out)?;
            }
            let solver = FssSolver::new(&model, cfg.budget());
            for regime in Regime::ALL {
                let spec = RegimeSpec::decades(regime, *decades);
                let rows = sweep(&spec, &solver, &MULTISTAGE, cfg.reps(), cfg.seed())?;
                let mut buf = Vec::new();
                write_sweep_csv(&mut buf, &rows)?;
                emit(&cfg, &format!("sweep_{}.csv", regime.label()), &to_string(buf), out)?;
            }
            let reports = robustness(&solver, alpha, beta, cfg.reps(), cfg.seed())?;
            emit(&cfg, "robustness.csv", &eval_csv(&reports)?, out)
        }
    }
}

fn to_string(buf: Vec<u8>) -> String {
    String::from_utf8(buf).expect("csv writers emit utf-8")
}

fn eval_csv(reports: &[EvalReport]) -> Result<String> {
    let mut buf = Vec::new();
    write_eval_csv(&mut buf, reports)?;
    Ok(to_string(buf))
}

/// Rate functions on an evenly spaced interior grid of `(J0, J1)`. For
/// statistics other than the LLR, the LLR rates follow on their own grid.
pub fn rates_csv(model: &ModelSpec, points: usize) -> Result<String> {
    if points < 3 {
        return Err(Error::Config(format!("points: need at least 3, got {points}")));
    }
    let rf = RateFunctions::new(model)?;
    let llr = if model.statistic() == Statistic::AvgLlr {
        None
    } else {
        Some(RateFunctions::new(&model.with_statistic(Statistic::AvgLlr)?)?)
    };
    let grid = |(j0, j1): (f64, f64), i: usize| j0 + (j1 - j0) * i as f64 / (points + 1) as f64;
    let mut s = String::from("kappa,psi0,psi1");
    if llr.is_some() {
        s.push_str(",kappa_llr,zeta0,zeta1");
    }
    s.push('\n');
    for i in 1..=points {
        let k = grid(rf.limits(), i);
        let _ = write!(s, "{k},{},{}", rf.psi0(k), rf.psi1(k));
        if let Some(l) = &llr {
            let kl = grid(l.limits(), i);
            let _ = write!(s, ",{kl},{},{}", l.psi0(kl), l.psi1(kl));
        }
        s.push('\n');
    }
    Ok(s)
}

/// Asymptotic relative efficiencies of the sample mean and the sign
/// statistic against the LLR, for Gaussian means `+-eta`.
pub fn are_csv() -> Result<String> {
    let mut s = String::from("statistic,eta,are0,are1\n");
    for stat in [Statistic::SampleMean, Statistic::Binarized { threshold: 0.0 }] {
        for i in 1..=40 {
            let eta = 0.05 * i as f64;
            let (a0, a1) = RateFunctions::new(&ModelSpec::gaussian(eta, stat)?)?.are()?;
            let _ = writeln!(s, "{},{eta},{a0},{a1}", stat.label());
        }
    }
    Ok(s)
}

/// Every multistage test and the SPRT at the given levels, evaluated on 21
/// parameters spanning half the hypothesis gap beyond each hypothesis.
pub fn robustness(solver: &FssSolver, alpha: f64, beta: f64, reps: usize, seed: u64) -> Result<Vec<EvalReport>> {
    let model = *solver.model();
    let (m0, m1) = model.hypothesis_params();
    let d = m1 - m0;
    let params: Vec<f64> = (0..=20)
        .map(|i| m0 - d / 2.0 + 2.0 * d * i as f64 / 20.0)
        .filter(|&p| model.check_param(p).is_ok())
        .collect();
    let mut reports = Vec::new();
    for t in [TestKind::Three, TestKind::FourHat, TestKind::FourCheck, TestKind::Sprt] {
        let design = t.design(solver, alpha, beta)?;
        for &p in &params {
            reports.push(evaluate(&design, &model, p, reps, seed)?);
        }
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (Result<()>, String) {
        let cli = Cli::try_parse_from(std::iter::once("stagetest").chain(args.iter().copied())).unwrap();
        let mut buf = Vec::new();
        let r = execute(&cli, &mut buf);
        (r, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn config_round_trip() {
        let text = r#"
[model]
kind = "markov"
p = 0.3
mu0 = 0.2
mu1 = 0.8
statistic = "sample-mean"

[levels]
alpha = 0.001
beta = 0.01
regime = "power4"

[budget]
reps = 500
seed = 11

[output]
dir = "out"
prefix = "m_"
"#;
        let a = RunConfig::parse(text).unwrap();
        let b = RunConfig::parse(&a.to_toml().unwrap()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.regime().unwrap(), Regime::Power4);
        assert!(a.model_spec().is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = RunConfig::parse("[model]\nkind = \"gaussian\"\nsigma = 2.0\n").unwrap_err();
        assert!(e.to_string().contains("sigma"));
        assert_eq!(exit_code(&e), EXIT_CONFIG);
        assert!(RunConfig::parse("[extra]\nx = 1\n").is_err());
    }

    #[test]
    fn missing_key_is_named() {
        let (r, _) = run(&["design", "fss", "--model", "gaussian", "--alpha", "0.01", "--beta", "0.01"]);
        let e = r.unwrap_err();
        assert_eq!(exit_code(&e), EXIT_CONFIG);
        assert!(e.to_string().contains("model.eta"));
    }

    #[test]
    fn design_three_prints_n61() {
        let (r, out) = run(&[
            "design", "three", "--alpha", "1e-4", "--beta", "1e-4", "--model", "gaussian", "--eta", "0.5", "--seed", "7",
        ]);
        r.unwrap();
        assert!(out.lines().any(|l| l == "N = 61"), "{out}");
        assert!(out.lines().any(|l| l == "seed = 7"));
    }

    #[test]
    fn design_fss_keys() {
        let (r, out) = run(&["design", "fss", "--alpha", "1e-4", "--beta", "1e-4", "--model", "gaussian", "--eta", "0.5"]);
        r.unwrap();
        for key in ["model", "statistic", "alpha", "beta", "n_star", "kappa_star", "method", "seed"] {
            assert!(out.lines().any(|l| l.starts_with(&format!("{key} = "))), "{key} missing in\n{out}");
        }
        assert!(out.contains("n_star = 56"));
    }

    #[test]
    fn rates_ar1_cross_at_chernoff() {
        let (r, out) = run(&["rates", "--model", "ar1", "--mu0", "-0.5", "--mu1", "0.5"]);
        r.unwrap();
        let row: Vec<f64> = out
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect::<Vec<f64>>())
            .min_by(|a, b| a[0].abs().total_cmp(&b[0].abs()))
            .unwrap();
        assert!(row[0].abs() < 1e-12);
        assert!((row[1] - 0.11157).abs() < 1e-4 && (row[2] - 0.11157).abs() < 1e-4);
    }

    #[test]
    fn rates_extra_columns_for_other_statistics() {
        let m = ModelSpec::gaussian(0.5, Statistic::SampleMean).unwrap();
        let s = rates_csv(&m, 5).unwrap();
        assert!(s.starts_with("kappa,psi0,psi1,kappa_llr,zeta0,zeta1\n"));
        assert_eq!(s.lines().count(), 6);
    }

    #[test]
    fn error_kinds_map_to_exit_codes() {
        let infeasible = Error::InfeasibleBudget {
            reason: "max_n reached".into(),
            best_n: 4,
            best_kappa: 0.0,
        };
        assert_eq!(exit_code(&infeasible), EXIT_INFEASIBLE);
        assert_eq!(exit_code(&Error::Numeric("nan".into())), EXIT_NUMERIC);
        assert_eq!(exit_code(&Error::Domain("p".into())), EXIT_CONFIG);
    }

    #[test]
    fn bad_flag_is_config_error() {
        assert_eq!(main(["stagetest", "design", "three", "--bogus"]), EXIT_CONFIG);
        assert_eq!(
            main(["stagetest", "design", "three", "--model", "cauchy", "--alpha", "0.1", "--beta", "0.1"]),
            EXIT_CONFIG
        );
    }
}
