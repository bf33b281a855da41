mod common;

use std::collections::{BTreeSet, HashSet, VecDeque};

use common::{all_plans, apply, goals_in, oracle_beliefs, oracle_step, padded};
use mocopp::problem::{gen_boxpush, gen_gridworld, random_gridworld, BoxPushConfig};
use mocopp::search::{baseline_gbfs, goal_test, heuristic, search, GoalSpec, SearchConfig, SearchNode, SENTINEL};
use mocopp::{ObserverId, ProblemFile, SearchError, State};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cell(p: &ProblemFile, r: usize, c: usize) -> State {
    p.domain.state([format!("at_{r}_{c}")]).unwrap()
}

fn node(state: State, x: &[State], c: &[State]) -> SearchNode {
    SearchNode {
        state,
        full_x: x.iter().cloned().collect(),
        full_c: c.iter().cloned().collect(),
        approx_x: x.to_vec(),
        approx_c: c.to_vec(),
        g_cost: 0.0,
    }
}

/// Independent Φ check on a replay.
fn check_bounds(p: &ProblemFile, plan: &[usize], k: usize, j: usize) -> (usize, usize) {
    let steps = padded(plan, plan.len());
    let bx = oracle_beliefs(&p.domain, p.sensor(ObserverId::Adversary).unwrap(), &steps);
    let bc = oracle_beliefs(&p.domain, p.sensor(ObserverId::Cooperative).unwrap(), &steps);
    let gx = goals_in(bx.last().unwrap(), &p.goals).len();
    let gc = goals_in(bc.last().unwrap(), &p.goals).len();
    assert!(gx >= k && gc <= j, "replay gives ({gx}, {gc}) against (>={k}, <={j})");
    (gx, gc)
}

#[test]
fn goal_test_cases() {
    let p = gen_gridworld(3, 3, (2, 0), &[(0, 0), (0, 2), (2, 2)], 1).unwrap();
    let phi = GoalSpec::new(&p, 2, 2).unwrap();
    let all = [cell(&p, 0, 0), cell(&p, 0, 2), cell(&p, 2, 2)];
    assert!(goal_test(&node(cell(&p, 0, 2), &all, &[cell(&p, 0, 2)]), &p, &phi));
    assert!(!goal_test(&node(cell(&p, 1, 1), &all, &[cell(&p, 0, 2)]), &p, &phi));
    // Too few adversary goals, or too many cooperative ones.
    assert!(!goal_test(&node(cell(&p, 0, 2), &all[1..2], &[cell(&p, 0, 2)]), &p, &phi));
    assert!(!goal_test(&node(cell(&p, 0, 2), &all, &all), &p, &phi));
}

#[test]
fn heuristic_boundary_composition() {
    // Target goal (1,1) sits behind a one-way door nobody can pass.
    let text = "(fluents a b z)(init a)(actions (go :pre (a) :add (b) :del (a)))
        (goals (ga b) (gd a) (gz z) :true ga)
        (sensor C (catchall c))(sensor X (catchall x))";
    let p = mocopp::parse(text).unwrap();
    let phi = GoalSpec { k: 2, j: 2, decoys_x: vec![1], targets_c: vec![2] };
    let b = p.domain.state(["b"]).unwrap();
    let a = p.domain.state(["a"]).unwrap();
    let n = node(b.clone(), &[b.clone(), a], std::slice::from_ref(&b));
    assert_eq!(heuristic(&n, &p, &phi), 0.0 + 0.0 - SENTINEL);

    // Singleton beliefs reduce to plain h_add.
    let g = gen_gridworld(5, 5, (4, 0), &[(0, 4), (0, 0), (4, 4)], 0).unwrap();
    let phi = GoalSpec { k: 2, j: 2, decoys_x: vec![1], targets_c: vec![2] };
    let s = cell(&g, 2, 1);
    let n = node(s.clone(), std::slice::from_ref(&s), std::slice::from_ref(&s));
    // to (0,4): 2+3; to (0,0): 2+1; to (4,4): 2+3
    assert_eq!(heuristic(&n, &g, &phi), 5.0 + 3.0 - 5.0);
}

#[test]
fn default_spec_picks_near_decoys_and_far_targets() {
    let p = gen_gridworld(7, 7, (6, 0), &[(2, 2), (0, 6), (4, 6), (6, 6)], 1).unwrap();
    let phi = GoalSpec::new(&p, 3, 2).unwrap();
    // From (6,0): (2,2) is 6 away, (4,6) 8, (6,6) 6.
    assert_eq!(phi.decoys_x, vec![0, 3]);
    // Non-decoys first: (4,6); then the decoys farthest from (0,6), both 6 away.
    assert_eq!(phi.targets_c, vec![2, 0]);
    assert!(GoalSpec::new(&p, 0, 1).is_err());
    assert!(GoalSpec::new(&p, 1, 5).is_err());
}

#[test]
fn vacuous_bounds_reduce_to_planning() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let p = random_gridworld(5, 5, 3, &mut rng).unwrap();
        let phi = GoalSpec::new(&p, 1, 3).unwrap();
        let out = search(&p, &phi, &SearchConfig::default()).unwrap();
        let end = p.domain.simulate(&out.plan).unwrap();
        assert!(p.goals.true_goal().is_subset(end.last().unwrap()));
        let (base, _) = baseline_gbfs(&p).unwrap();
        assert!(p.goals.true_goal().is_subset(p.domain.simulate(&base).unwrap().last().unwrap()));
    }
}

#[test]
fn seven_by_seven_meets_both_bounds() {
    let p = gen_gridworld(7, 7, (6, 0), &[(2, 2), (0, 6), (4, 6)], 1).unwrap();
    for (k, j) in [(2, 2), (3, 3), (1, 1), (3, 1)] {
        let phi = GoalSpec::new(&p, k, j).unwrap();
        let out = search(&p, &phi, &SearchConfig::default()).unwrap();
        let (gx, gc) = check_bounds(&p, &out.plan.steps, k, j);
        assert_eq!((out.goals_x.len(), out.goals_c.len()), (gx, gc));
    }
}

#[test]
fn boxpush_meets_bounds() {
    let p = gen_boxpush(&BoxPushConfig::standard()).unwrap();
    let phi = GoalSpec::new(&p, 2, 2).unwrap();
    let out = search(&p, &phi, &SearchConfig::default()).unwrap();
    check_bounds(&p, &out.plan.steps, 2, 2);
}

#[test]
fn infeasible_spec_is_exhausted() {
    // A single action: once the goal holds, X's belief is exactly {b}, so
    // at least two adversary goals can never be reached.
    let text = "(fluents a b)(init a)(actions (go :pre (a) :add (b) :del (a)))
        (goals (ga b) (gb a) :true ga)
        (sensor C (catchall c))(sensor X (catchall x))";
    let p = mocopp::parse(text).unwrap();
    let phi = GoalSpec::new(&p, 2, 2).unwrap();
    assert_eq!(search(&p, &phi, &SearchConfig::default()), Err(SearchError::Exhausted));
}

#[test]
fn baseline_cases() {
    let p = gen_gridworld(7, 7, (6, 0), &[(0, 6), (2, 2)], 0).unwrap();
    let (plan, trace) = baseline_gbfs(&p).unwrap();
    assert_eq!(plan.len(), 12);
    assert_eq!(trace.horizon(), 12);

    let q = gen_gridworld(3, 3, (1, 1), &[(1, 1), (0, 0)], 0).unwrap();
    assert!(baseline_gbfs(&q).unwrap().0.is_empty());

    // Shortest paths on random grids, checked against plain BFS.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let p = random_gridworld(7, 7, 3, &mut rng).unwrap();
        let (plan, _) = baseline_gbfs(&p).unwrap();
        let shortest = all_plans(&p.domain, plan.len())
            .into_iter()
            .filter(|(_, end)| p.goals.true_goal().is_subset(end))
            .map(|(pl, _)| pl.len())
            .min()
            .unwrap();
        assert_eq!(plan.len(), shortest);
    }
}

type Key = (State, BTreeSet<State>, BTreeSet<State>);

/// Exact number of steps from a node to any node passing the goal test.
fn true_remaining(p: &ProblemFile, phi: &GoalSpec, from: &Key, cap: usize) -> Option<usize> {
    let x = p.sensor(ObserverId::Adversary).unwrap();
    let c = p.sensor(ObserverId::Cooperative).unwrap();
    let mut seen: HashSet<Key> = HashSet::from([from.clone()]);
    let mut q = VecDeque::from([(from.clone(), 0)]);
    while let Some(((s, bx, bc), d)) = q.pop_front() {
        if p.goals.true_goal().is_subset(&s)
            && goals_in(&bx, &p.goals).len() >= phi.k
            && goals_in(&bc, &p.goals).len() <= phi.j
        {
            return Some(d);
        }
        if d == cap {
            continue;
        }
        for (a, act) in p.domain.actions().iter().enumerate() {
            if act.pre.is_subset(&s) {
                let next = apply(act, &s);
                let key =
                    (next.clone(), oracle_step(&p.domain, x, &bx, a, &next), oracle_step(&p.domain, c, &bc, a, &next));
                if seen.insert(key.clone()) {
                    q.push_back((key, d + 1));
                }
            }
        }
    }
    None
}

/// Pairs of nodes with different true cost, how many the heuristic orders
/// the same way (ties count against it), over nodes reachable in `depth`.
fn ordering_agreement(p: &ProblemFile, phi: &GoalSpec, depth: usize) -> (usize, usize) {
    let x = p.sensor(ObserverId::Adversary).unwrap();
    let c = p.sensor(ObserverId::Cooperative).unwrap();
    let mut nodes: BTreeSet<Key> = BTreeSet::new();
    for (plan, end) in all_plans(&p.domain, depth) {
        let steps = padded(&plan, plan.len());
        let bx = oracle_beliefs(&p.domain, x, &steps).pop().unwrap();
        let bc = oracle_beliefs(&p.domain, c, &steps).pop().unwrap();
        nodes.insert((end, bx, bc));
    }
    let scored: Vec<(usize, f64)> = nodes
        .iter()
        .filter_map(|k| {
            let cost = true_remaining(p, phi, k, 14)?;
            let n = SearchNode {
                state: k.0.clone(),
                full_x: k.1.clone(),
                full_c: k.2.clone(),
                approx_x: k.1.iter().cloned().collect(),
                approx_c: k.2.iter().cloned().collect(),
                g_cost: 0.0,
            };
            Some((cost, heuristic(&n, p, phi)))
        })
        .collect();
    let (mut agree, mut total) = (0, 0);
    for (i, a) in scored.iter().enumerate() {
        for b in &scored[i + 1..] {
            if a.0 != b.0 {
                total += 1;
                if a.1 != b.1 && (a.0 < b.0) == (a.1 < b.1) {
                    agree += 1;
                }
            }
        }
    }
    (agree, total)
}

#[test]
fn heuristic_orders_nodes_like_true_cost() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut agree, mut total) = (0, 0);
    for _ in 0..8 {
        let p = random_gridworld(5, 5, 3, &mut rng).unwrap();
        let phi = GoalSpec::new(&p, 2, 2).unwrap();
        let (a, t) = ordering_agreement(&p, &phi, 4);
        agree += a;
        total += t;
    }
    let ratio = agree as f64 / total as f64;
    eprintln!("heuristic ordering agreement: {agree}/{total} = {ratio:.3}");
    assert!(total > 1000);
    assert!(ratio >= 0.7, "{ratio}");
}
