use stagetest::models::{Hypothesis, ModelSpec, Statistic};
use stagetest::rng::StreamKey;
use stagetest::sampler::WeightedSample;

/// Weighted indicators under a shifted simulation law estimate the base-law
/// probability of the same event.
#[test]
fn weighted_expectation_identity() {
    let cases = [
        (ModelSpec::gaussian(0.5, Statistic::Binarized { threshold: 0.0 }).unwrap(), 0.5),
        (ModelSpec::ar1(-0.5, 0.5, Statistic::AvgLlr).unwrap(), 0.0),
        (ModelSpec::ar1(-0.5, 0.5, Statistic::YuleWalker).unwrap(), 0.0),
        (ModelSpec::markov(0.5, 0.25, 0.75, Statistic::SampleMean).unwrap(), 0.5),
        (ModelSpec::markov(0.3, 0.2, 0.6, Statistic::AvgLlr).unwrap(), 0.0),
    ];
    let n = 20;
    for (i, (m, kappa)) in cases.into_iter().enumerate() {
        let (m0, m1) = m.hypothesis_params();
        for base in [Hypothesis::Null, Hypothesis::Alt] {
            // shift the simulation law 30% of the way toward the midpoint
            let sim = m.param(base) + 0.3 * ((m0 + m1) / 2.0 - m.param(base));
            let tag = [i as u64, base.index() as u64];
            let weighted = WeightedSample::simulate(&m, sim, base, n, 20_000, &StreamKey::derive(1, "q", &tag)).unwrap();
            let direct = WeightedSample::simulate(&m, m.param(base), base, n, 20_000, &StreamKey::derive(1, "p", &tag)).unwrap();
            for (w, d) in [
                (weighted.above(kappa), direct.above(kappa)),
                (weighted.at_or_below(kappa), direct.at_or_below(kappa)),
            ] {
                if d.estimate < 0.05 {
                    continue;
                }
                let se = w.se.hypot(d.se);
                assert!(
                    (w.estimate - d.estimate).abs() <= 3.0 * se,
                    "{} {} base {base:?}: weighted {} vs direct {}",
                    m.kind(),
                    m.statistic().label(),
                    w.estimate,
                    d.estimate
                );
            }
        }
    }
}
