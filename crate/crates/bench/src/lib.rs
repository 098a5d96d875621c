//! Shared inputs for the benchmarks.

use std::collections::BTreeMap;

use relcrowd_core::corpus::synthetic::{generate, SyntheticSpec};
use relcrowd_core::rational::ratio;
use relcrowd_core::rng::{seeded, uniform_below};
use relcrowd_core::{Corpus, Judgment, Rational, RelationType};

/// Judgments on one unit by `voters` workers with accuracies drawn from p/q, q <= 20.
pub fn vote_set(voters: usize, seed: u64) -> (Vec<Judgment>, BTreeMap<String, Rational>) {
    let mut rng = seeded(seed);
    let mut judgments = Vec::with_capacity(voters);
    let mut accuracies = BTreeMap::new();
    for v in 0..voters {
        let id = format!("w{v:03}");
        let q = 1 + uniform_below(&mut rng, 20);
        let p = 1 + uniform_below(&mut rng, q);
        judgments.push(Judgment {
            worker_id: id.clone(),
            unit_id: "u0001".into(),
            relation: RelationType::ALL[uniform_below(&mut rng, 4) as usize],
            qualifier: None,
            submitted_at: String::new(),
        });
        accuracies.insert(id, ratio(p, q));
    }
    (judgments, accuracies)
}

/// 81 unanimous and 163 majority units.
pub fn corpus_244() -> Corpus {
    generate(&SyntheticSpec { unanimous: 81, majority: 163, ..SyntheticSpec::default() }, 0)
}

/// Agreement-like scores in [0.25, 1].
pub fn scores(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = seeded(seed);
    (0..n).map(|_| 0.25 + 0.75 * uniform_below(&mut rng, 10_000) as f64 / 10_000.0).collect()
}
