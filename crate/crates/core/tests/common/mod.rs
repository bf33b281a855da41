//! Brute-force oracles shared by the integration tests. Nothing here calls
//! the library's belief or search code.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use mocopp::ip::{AuxKind, Cmp, IpModel, VarKind};
use mocopp::{Action, ActionId, CandidateGoalSet, ObserverId, PlanningDomain, ProblemFile, SensorModel, State};

/// Beliefs `b_0..b_T` of one observer: every (believed state, action,
/// successor) triple whose modelled symbol equals the emitted one.
pub fn oracle_beliefs(d: &PlanningDomain, m: &SensorModel, steps: &[Option<ActionId>]) -> Vec<BTreeSet<State>> {
    let mut s = d.initial().clone();
    let mut b = BTreeSet::from([s.clone()]);
    let mut out = vec![b.clone()];
    for step in steps {
        if let Some(a) = *step {
            let act = &d.actions()[a];
            assert!(act.pre.is_subset(&s), "oracle: inapplicable step");
            s = apply(act, &s);
            let emitted = m.emit(a, &s);
            let mut next = BTreeSet::new();
            for prev in &b {
                for (ai, cand) in d.actions().iter().enumerate() {
                    if cand.pre.is_subset(prev) {
                        let succ = apply(cand, prev);
                        if m.interpret(ai, &succ) == emitted {
                            next.insert(succ);
                        }
                    }
                }
            }
            b = next;
        }
        out.push(b.clone());
    }
    out
}

pub fn goals_in(b: &BTreeSet<State>, goals: &CandidateGoalSet) -> Vec<usize> {
    (0..goals.len()).filter(|&i| b.iter().any(|s| goals.goals()[i].is_subset(s))).collect()
}

/// Every executable action sequence of length at most `max_len`.
pub fn all_plans(d: &PlanningDomain, max_len: usize) -> Vec<(Vec<ActionId>, State)> {
    fn go(
        d: &PlanningDomain,
        s: &State,
        prefix: &mut Vec<ActionId>,
        max_len: usize,
        out: &mut Vec<(Vec<ActionId>, State)>,
    ) {
        out.push((prefix.clone(), s.clone()));
        if prefix.len() == max_len {
            return;
        }
        for (a, act) in d.actions().iter().enumerate() {
            if act.pre.is_subset(s) {
                prefix.push(a);
                go(d, &apply(act, s), prefix, max_len, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(d, d.initial(), &mut Vec::new(), max_len, &mut out);
    out
}

pub fn padded(plan: &[ActionId], horizon: usize) -> Vec<Option<ActionId>> {
    let mut v: Vec<Option<ActionId>> = plan.iter().copied().map(Some).collect();
    v.resize(horizon, None);
    v
}

/// `(s \ del) ∪ add`, written out fluent by fluent.
pub fn apply(a: &Action, s: &State) -> State {
    let kept = s.iter().filter(|f| !a.del.contains(*f));
    State::from_fluents(s.width(), kept.chain(a.add.iter()))
}

/// One exact belief update for the transition `s --a--> next`.
pub fn oracle_step(
    d: &PlanningDomain,
    m: &SensorModel,
    b: &BTreeSet<State>,
    a: ActionId,
    next: &State,
) -> BTreeSet<State> {
    let emitted = m.emit(a, next);
    let mut out = BTreeSet::new();
    for prev in b {
        for (ai, cand) in d.actions().iter().enumerate() {
            if cand.pre.is_subset(prev) {
                let succ = apply(cand, prev);
                if m.interpret(ai, &succ) == emitted {
                    out.insert(succ);
                }
            }
        }
    }
    out
}

/// Random 0/1 model: mixed-sign rows of width ≤ 6, half-integer objective.
pub fn random_model(rng: &mut ChaCha8Rng, n: usize) -> IpModel {
    let mut m = IpModel::empty();
    for i in 0..n {
        m.add_var(VarKind::Aux(AuxKind::Free { index: i }));
    }
    let rows = rng.gen_range(1..=n);
    for _ in 0..rows {
        let width = rng.gen_range(1..=n.min(6));
        let mut terms: Vec<(usize, f64)> = Vec::new();
        while terms.len() < width {
            let v = rng.gen_range(0..n);
            if terms.iter().all(|t| t.0 != v) {
                let c = [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0][rng.gen_range(0..6)];
                terms.push((v, c));
            }
        }
        let cmp = [Cmp::Le, Cmp::Ge, Cmp::Eq][rng.gen_range(0..3)];
        let rhs = rng.gen_range(-2..=3) as f64;
        m.add_constraint(terms, cmp, rhs, "rand");
    }
    for v in 0..n {
        if rng.gen_bool(0.7) {
            let c = rng.gen_range(-4..=4) as f64 * 0.5;
            if c != 0.0 {
                m.objective.push((v, c));
            }
        }
    }
    m
}

/// Minimum over all 2^n assignments, and the number of feasible ones.
pub fn exhaustive(m: &IpModel) -> (Option<f64>, usize) {
    let n = m.num_vars();
    let mut best: Option<f64> = None;
    let mut count = 0;
    let mut a = vec![false; n];
    for mask in 0u32..(1 << n) {
        for (i, slot) in a.iter_mut().enumerate() {
            *slot = mask >> i & 1 == 1;
        }
        if m.constraints.iter().all(|c| c.is_satisfied(&a)) {
            count += 1;
            let v = m.objective_value(&a);
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
    }
    (best, count)
}

/// Minimum of `β|G_C| − (1−β)|G_X|` over every plan of length ≤ T that
/// ends in the true goal, along with the number of such plans.
pub fn brute_force(p: &ProblemFile, horizon: usize, beta: f64, k: Option<usize>) -> (Option<f64>, usize) {
    let c = p.sensor(ObserverId::Cooperative).unwrap();
    let x = p.sensor(ObserverId::Adversary).unwrap();
    let mut best: Option<f64> = None;
    let mut count = 0;
    for (plan, end) in all_plans(&p.domain, horizon) {
        if !p.goals.true_goal().is_subset(&end) {
            continue;
        }
        count += 1;
        let steps = padded(&plan, horizon);
        let gc = goals_in(oracle_beliefs(&p.domain, c, &steps).last().unwrap(), &p.goals).len();
        let gx = goals_in(oracle_beliefs(&p.domain, x, &steps).last().unwrap(), &p.goals).len();
        if k.is_some_and(|k| gx < k) {
            continue;
        }
        let v = beta * gc as f64 - (1.0 - beta) * gx as f64;
        best = Some(best.map_or(v, |b: f64| b.min(v)));
    }
    (best, count)
}
