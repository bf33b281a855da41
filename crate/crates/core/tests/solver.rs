mod common;

use common::{exhaustive, random_model};
use mocopp::solver::{enumerate, solve, verify, SolveStatus, SolverConfig};
use mocopp::Execution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn matches_exhaustive_enumeration_on_random_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut feasible = 0;
    for case in 0..50 {
        let n = rng.gen_range(2..=22);
        let m = random_model(&mut rng, n);
        let (opt, count) = exhaustive(&m);
        let r = solve(&m, &SolverConfig::default());
        assert_eq!(r.objective, opt, "case {case} ({n} vars)");
        match opt {
            Some(_) => {
                feasible += 1;
                assert_eq!(r.status, SolveStatus::Optimal);
                let a = r.assignment.as_ref().unwrap();
                assert!(verify(&m, a).feasible);
                assert_eq!(Some(m.objective_value(a)), r.objective);
            }
            None => assert_eq!(r.status, SolveStatus::Infeasible),
        }
        assert_eq!(enumerate(&m, usize::MAX).len(), count, "case {case}");
        let again = solve(&m, &SolverConfig::default());
        assert_eq!((again.status, &again.assignment, again.stats.nodes), (r.status, &r.assignment, r.stats.nodes));
        let par = solve(&m, &SolverConfig { execution: Execution::Parallel, ..Default::default() });
        assert_eq!(par.objective, r.objective);
    }
    assert!(feasible >= 10, "generator should produce a mix: {feasible} feasible");
}
