//! Sequential vs parallel execution of the three data-parallel paths:
//! batch trace replay, branch-and-bound subtree splitting, and suite runs.
//! Build without the `parallel` feature and both arms run sequentially.

use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mocopp::bench::{generate_suite, run_suite, write_suite, Method, SuiteSettings};
use mocopp::ip::{encode, EncodeOptions};
use mocopp::problem::{gen_boxpush, BoxPushConfig};
use mocopp::solver::{solve, SolverConfig};
use mocopp::{run_traces, Execution, Plan, ProblemFile};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn random_plans(p: &ProblemFile, n: usize, len: usize, seed: u64) -> Vec<Plan> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut s = p.domain.initial().clone();
            let mut steps = Vec::new();
            for _ in 0..len {
                let succ: Vec<_> = p.domain.successors(&s).collect();
                let (a, next) = succ[rng.gen_range(0..succ.len())].clone();
                steps.push(a);
                s = next;
            }
            Plan::new(steps)
        })
        .collect()
}

fn traces(c: &mut Criterion) {
    let p = gen_boxpush(&BoxPushConfig::standard()).unwrap();
    let plans = random_plans(&p, 256, 12, 3);
    let mut g = c.benchmark_group("run_traces");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, plans.len()), |b| {
            b.iter(|| run_traces(&p.domain, &p.sensors, black_box(&plans), exec))
        });
    }
    g.finish();
}

fn branch_and_bound(c: &mut Criterion) {
    let p = gen_boxpush(&BoxPushConfig::standard()).unwrap();
    let m = encode(&p, 12, &EncodeOptions::default()).unwrap();
    let mut g = c.benchmark_group("solve_boxpush_t12");
    g.sample_size(10);
    for (name, exec) in MODES {
        let cfg = SolverConfig { execution: exec, ..Default::default() };
        g.bench_function(name, |b| b.iter(|| solve(black_box(&m), &cfg)));
    }
    g.finish();
}

fn suite(c: &mut Criterion) {
    let dir = tempfile::tempdir().unwrap();
    write_suite(dir.path(), &generate_suite("gridworld", 8, 2020).unwrap()).unwrap();
    let mut g = c.benchmark_group("run_suite_gridworld");
    g.sample_size(10).measurement_time(Duration::from_secs(10));
    for (name, exec) in MODES {
        let s = SuiteSettings { execution: exec, ..Default::default() };
        g.bench_function(name, |b| b.iter(|| run_suite(dir.path(), &[Method::Baseline, Method::Search], &s).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, traces, branch_and_bound, suite);
criterion_main!(benches);
