use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use dimwit::behaviour::PmScenario;
use dimwit::experiments::{negligibility_experiment, ExperimentScenario, NegligibilityConfig};
use dimwit::linalg::RankMethod;
use dimwit::sampling::{sample_classical_behaviour, Seed};
use dimwit::search::{factorize_classical, FactorizeOptions};

fn negligibility(c: &mut Criterion) {
    let mut group = c.benchmark_group("negligibility_pm_8x6_n400");
    group.sample_size(10);
    for (name, parallel) in [("parallel", true), ("sequential", false)] {
        let cfg = NegligibilityConfig {
            scenario: ExperimentScenario::Pm { n_inputs_a: 8, n_inputs_b: 6 },
            samples: 400,
            seed: Seed(1),
            rank: RankMethod::default(),
            include: vec![],
            parallel,
        };
        group.bench_function(name, |b| b.iter(|| negligibility_experiment(black_box(&cfg)).unwrap()));
    }
    group.finish();
}

fn factorize_restarts(c: &mut Criterion) {
    let s = PmScenario::new(8, 5).unwrap();
    let beh = sample_classical_behaviour(s, 3, None, Seed(2)).unwrap();
    let mut group = c.benchmark_group("factorize_8x5_d2_16_restarts");
    group.sample_size(10);
    for (name, parallel) in [("parallel", true), ("sequential", false)] {
        // d = 2 against a rank-3 input never converges, so every restart runs to the limit.
        let opts = FactorizeOptions { restarts: 16, iterations: 200, seed: Seed(3), parallel, ..FactorizeOptions::default() };
        group.bench_function(name, |b| b.iter(|| factorize_classical(black_box(&beh), 2, &opts).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, negligibility, factorize_restarts);
criterion_main!(benches);
