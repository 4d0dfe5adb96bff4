use stagetest::fss::{design_fss, tail_prob, FssSolver, Method, SimBudget};
use stagetest::models::{Hypothesis, ModelSpec, Statistic};
use stagetest::rng::StreamKey;
use stagetest::sampler::WeightedSample;

#[test]
fn forced_simulation_reproduces_gaussian_closed_form() {
    let m = ModelSpec::gaussian(0.5, Statistic::AvgLlr).unwrap();
    let budget = SimBudget {
        force_simulation: true,
        seed: 3,
        ..SimBudget::default()
    };
    let d = design_fss(&m, 0.05, 0.05, budget).unwrap();
    assert_ne!(d.method, Method::ClosedForm);
    assert!((d.n_star as i64 - 11).abs() <= 1, "n* = {}", d.n_star);
    assert!(d.kappa_star.abs() <= 0.05, "kappa* = {}", d.kappa_star);
}

#[test]
fn n_star_is_monotone_in_both_levels() {
    let levels = [0.2, 0.1, 0.05, 0.01];
    let models = [
        ModelSpec::gaussian(0.5, Statistic::AvgLlr).unwrap(),
        ModelSpec::ar1(-0.5, 0.5, Statistic::AvgLlr).unwrap(),
    ];
    for m in &models {
        let solver = FssSolver::new(m, SimBudget::with_seed(5));
        let n = |a: f64, b: f64| solver.design(a, b).unwrap().n_star;
        for i in 0..levels.len() {
            for j in 0..levels.len() {
                let here = n(levels[i], levels[j]);
                if i > 0 {
                    assert!(n(levels[i - 1], levels[j]) <= here, "{} alpha {} -> {}", m.kind(), levels[i - 1], levels[i]);
                }
                if j > 0 {
                    assert!(n(levels[i], levels[j - 1]) <= here, "{} beta {} -> {}", m.kind(), levels[j - 1], levels[j]);
                }
            }
        }
    }
}

#[test]
fn symmetric_models_center_the_threshold() {
    for m in [
        ModelSpec::gaussian(0.5, Statistic::AvgLlr).unwrap(),
        ModelSpec::ar1(-0.5, 0.5, Statistic::AvgLlr).unwrap(),
    ] {
        let (j0, j1) = m.limits();
        for level in [0.1, 0.05, 0.01] {
            let d = design_fss(&m, level, level, SimBudget::with_seed(1)).unwrap();
            assert!(d.kappa_star.abs() <= 0.02 * (j1 - j0), "{} at {level}: {}", m.kind(), d.kappa_star);
        }
    }
}

#[test]
fn ar1_importance_sampling_matches_plain_monte_carlo() {
    let m = ModelSpec::ar1(-0.5, 0.5, Statistic::AvgLlr).unwrap();
    let (n, reps) = (100, 100_000);
    let (is, is_se) = tail_prob(&m, Hypothesis::Alt, n, 0.0, SimBudget::with_seed(8)).unwrap();
    let key = StreamKey::derive(99, "plain", &[]);
    let mc = WeightedSample::simulate(&m, 0.5, Hypothesis::Alt, n, reps, &key)
        .unwrap()
        .at_or_below(0.0);
    // the plain frequency has too few hits for a useful sample SE, so use its
    // exact binomial SE at the IS value
    let mc_se = (is * (1.0 - is) / reps as f64).sqrt();
    let combined = (is_se * is_se + mc_se * mc_se).sqrt();
    assert!(is > 0.0 && is_se / is < 0.2, "IS {is} +- {is_se}");
    assert!(
        (is - mc.estimate).abs() <= 3.0 * combined,
        "IS {is} +- {is_se}, MC {} ({} hits)",
        mc.estimate,
        mc.hits
    );
}

#[test]
fn designs_certify_both_constraints() {
    let m = ModelSpec::markov(0.5, 0.25, 0.75, Statistic::SampleMean).unwrap();
    let solver = FssSolver::new(&m, SimBudget::with_seed(2));
    let d = solver.design(0.01, 0.05).unwrap();
    let (j0, j1) = m.limits();
    assert!(d.kappa_star > j0 && d.kappa_star < j1);
    let at = d.evidence.iter().find(|e| e.n == d.n_star).unwrap();
    assert!(at.feasible && at.type1.upper() <= 0.01 && at.type2.upper() <= 0.05);
    if let Some(prev) = d.evidence.iter().find(|e| e.n == d.n_star - 1) {
        assert!(!prev.feasible);
    }
}
