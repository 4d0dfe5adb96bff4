use stagetest::models::{simulate_step, Hypothesis, ModelSpec, PathState, Statistic};
use stagetest::numeric::{mean_se, norm_sf};
use stagetest::rng::StreamKey;
use stagetest::sampler::{is_estimate, tilt_for_level, Event, WeightedSample};

#[test]
fn is_agrees_with_plain_mc_at_moderate_probabilities() {
    let models = [
        (ModelSpec::gaussian(0.5, Statistic::AvgLlr).unwrap(), -0.2),
        (ModelSpec::ar1(-0.5, 0.5, Statistic::AvgLlr).unwrap(), -0.2),
        (ModelSpec::markov(0.5, 0.25, 0.75, Statistic::AvgLlr).unwrap(), -0.05),
    ];
    for (m, kappa) in models {
        let tilt = tilt_for_level(&m, kappa, Hypothesis::Null).unwrap();
        let mut agree = 0;
        for trial in 0..20u64 {
            let is = is_estimate(&tilt, Event::Above(kappa), 20, 2000, &StreamKey::derive(trial, "is", &[])).unwrap();
            let mc = WeightedSample::simulate(&m, m.param(Hypothesis::Null), Hypothesis::Null, 20, 2000, &StreamKey::derive(trial, "mc", &[]))
                .unwrap()
                .above(kappa);
            assert!(mc.estimate > 0.02, "{}: event too rare for the check ({})", m.kind(), mc.estimate);
            let se = (is.se * is.se + mc.se * mc.se).sqrt();
            if (is.estimate - mc.estimate).abs() <= 3.0 * se {
                agree += 1;
            }
        }
        assert!(agree >= 18, "{}: {agree}/20 trials agree", m.kind());
    }
}

#[test]
fn tilted_paths_concentrate_at_the_target() {
    let cases = [
        (ModelSpec::gaussian(0.5, Statistic::AvgLlr).unwrap(), 0.2),
        (ModelSpec::ar1(-0.5, 0.5, Statistic::AvgLlr).unwrap(), 0.1),
        (ModelSpec::ar1(-0.5, 0.5, Statistic::YuleWalker).unwrap(), -0.3),
        (ModelSpec::markov(0.5, 0.25, 0.75, Statistic::SampleMean).unwrap(), 0.55),
    ];
    for (m, kappa) in cases {
        let tilt = tilt_for_level(&m, kappa, Hypothesis::Null).unwrap();
        let key = StreamKey::derive(4, "tilt-check", &[]);
        let values: Vec<f64> = (0..500)
            .map(|r| {
                let mut rng = key.replication(r);
                let mut state = PathState::new();
                for _ in 0..2000 {
                    simulate_step(&m, tilt.tilt_param, &mut state, &mut rng).unwrap();
                }
                state.statistic_value()
            })
            .collect();
        let (mean, se) = mean_se(&values);
        assert!((mean - kappa).abs() <= 4.0 * se, "{} {}: mean {mean} se {se}", m.kind(), m.statistic().label());
    }
}

#[test]
fn relative_error_grows_slowly_as_probability_falls() {
    let m = ModelSpec::gaussian(0.5, Statistic::AvgLlr).unwrap();
    let tilt = tilt_for_level(&m, 0.0, Hypothesis::Null).unwrap();
    let mut rel = Vec::new();
    // exact P0(mean LLR > 0) = Phi(-sqrt(n)/2): about 1e-3 at n = 38 and 1e-6 at n = 90
    for n in [38usize, 52, 70, 90] {
        let exact = norm_sf(0.5 * (n as f64).sqrt());
        let est = is_estimate(&tilt, Event::Above(0.0), n, 10_000, &StreamKey::derive(12, "rel", &[n as u64])).unwrap();
        assert!((est.estimate - exact).abs() <= 3.0 * est.se, "n = {n}: {} vs {exact}", est.estimate);
        rel.push(est.se / est.estimate);
    }
    let hi = rel.iter().cloned().fold(0.0, f64::max);
    let lo = rel.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(hi / lo <= 5.0, "relative SEs {rel:?}");
}
