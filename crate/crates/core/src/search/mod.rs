//! Satisficing belief-space search.
//!
//! Nodes carry the actor's state and each observer's exact belief. The
//! heuristic is evaluated on an approximate belief of at most Δ states; the
//! outer loop widens Δ whenever the inner best-first search runs out of
//! budget.

mod hadd;

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};
use std::time::{Duration, Instant};

pub use hadd::HAdd;

use crate::error::SearchError;
use crate::model::{satisfies, ActionId, Plan, State};
use crate::observer::{possible_goals_of, run_trace, BeliefTrace, ObserverId, SensorModel, SymbolId};
use crate::problem::ProblemFile;

/// Value substituted for an infinite heuristic component.
pub const SENTINEL: f64 = 1e6;

/// Goal specification Φ: bounds plus the goals that steer the heuristic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoalSpec {
    /// The adversary must keep at least `k` goals possible.
    pub k: usize,
    /// The cooperator may keep at most `j` goals possible.
    pub j: usize,
    pub decoys_x: Vec<usize>,
    pub targets_c: Vec<usize>,
}

impl GoalSpec {
    /// Bounds with default heuristic goals: the `k−1` other goals nearest
    /// the initial state as decoys, and the `|G|−j` goals farthest from the
    /// true goal as legibility targets, non-decoys first.
    pub fn new(p: &ProblemFile, k: usize, j: usize) -> Result<Self, SearchError> {
        let n = p.goals.len();
        for (name, v) in [("k", k), ("j", j)] {
            if v < 1 || v > n {
                return Err(SearchError::InvalidSpec(format!("{name} = {v} is outside [1, {n}]")));
            }
        }
        let tg = p.goals.true_goal_index();
        let h = HAdd::new(&p.domain, p.goals.goals());
        let by = |from: &State| -> Vec<(f64, usize)> {
            (0..n).filter(|&g| g != tg).map(|g| (h.to_state(from, &p.goals.goals()[g]), g)).collect()
        };
        let mut near = by(p.domain.initial());
        near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let decoys_x: Vec<usize> = near.iter().take(k - 1).map(|x| x.1).collect();
        // Prefer targets that are not also decoys; the heuristic would
        // otherwise pull a goal into X's belief and push it out of C's.
        let mut far = by(p.goals.true_goal());
        far.sort_by(|a, b| {
            (decoys_x.contains(&a.1), b.0, a.1).partial_cmp(&(decoys_x.contains(&b.1), a.0, b.1)).expect("finite order")
        });
        let targets_c = far.iter().take(n - j).map(|x| x.1).collect();
        Ok(GoalSpec { k, j, decoys_x, targets_c })
    }

    pub fn validate(&self, p: &ProblemFile) -> Result<(), SearchError> {
        let n = p.goals.len();
        let bad = |m: String| Err(SearchError::InvalidSpec(m));
        if self.k < 1 || self.k > n || self.j < 1 || self.j > n {
            return bad(format!("bounds ({}, {}) outside [1, {n}]", self.k, self.j));
        }
        if self.decoys_x.iter().chain(&self.targets_c).any(|&g| g >= n) {
            return bad("goal index out of range".into());
        }
        if self.decoys_x.len() + 1 < self.k {
            return bad(format!("need at least {} decoys", self.k - 1));
        }
        if self.targets_c.contains(&p.goals.true_goal_index()) {
            return bad("the true goal cannot be a legibility target".into());
        }
        if p.sensor(ObserverId::Adversary).is_none() || p.sensor(ObserverId::Cooperative).is_none() {
            return bad("search needs sensor models for both C and X".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub delta_max: usize,
    /// Expansions allowed per Δ round.
    pub node_limit: usize,
    pub time_limit: Duration,
    /// Δ-subsets examined per node before settling for the best so far.
    pub combination_cap: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { delta_max: 3, node_limit: 200_000, time_limit: Duration::from_secs(900), combination_cap: 2048 }
    }
}

/// A node as seen by the goal test and heuristic.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchNode {
    pub state: State,
    pub full_x: BTreeSet<State>,
    pub full_c: BTreeSet<State>,
    /// Subsets of the full beliefs, at most Δ states each.
    pub approx_x: Vec<State>,
    pub approx_c: Vec<State>,
    pub g_cost: f64,
}

pub fn goal_test(node: &SearchNode, p: &ProblemFile, phi: &GoalSpec) -> bool {
    passes(p, phi, &node.state, &node.full_x, &node.full_c)
}

fn passes<'a, I>(p: &ProblemFile, phi: &GoalSpec, state: &State, x: I, c: I) -> bool
where
    I: IntoIterator<Item = &'a State> + Clone,
{
    satisfies(state, p.goals.true_goal())
        && possible_goals_of(x, &p.goals).len() >= phi.k
        && possible_goals_of(c, &p.goals).len() <= phi.j
}

fn finite(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        SENTINEL
    }
}

/// `min over s ∈ b` of `h_add(s → goal)`.
fn dist<'a>(h: &mut HAdd<'_>, b: impl IntoIterator<Item = &'a State>, goal: usize) -> f64 {
    finite(b.into_iter().map(|s| h.goal_costs(s)[goal]).fold(f64::INFINITY, f64::min))
}

fn x_term<'a>(h: &mut HAdd<'_>, phi: &GoalSpec, b: impl IntoIterator<Item = &'a State> + Clone) -> f64 {
    phi.decoys_x.iter().map(|&g| dist(h, b.clone(), g)).fold(0.0, f64::max)
}

fn c_term<'a>(h: &mut HAdd<'_>, phi: &GoalSpec, b: impl IntoIterator<Item = &'a State> + Clone) -> f64 {
    let m = phi.targets_c.iter().map(|&g| dist(h, b.clone(), g)).fold(f64::INFINITY, f64::min);
    if m.is_infinite() {
        0.0
    } else {
        -m
    }
}

/// `h_add(state → G_A) + max_decoys dist(approx_X) − min_targets dist(approx_C)`.
pub fn heuristic(node: &SearchNode, p: &ProblemFile, phi: &GoalSpec) -> f64 {
    let mut h = HAdd::new(&p.domain, p.goals.goals());
    let own = finite(h.goal_costs(&node.state)[p.goals.true_goal_index()]);
    own + x_term(&mut h, phi, &node.approx_x) + c_term(&mut h, phi, &node.approx_c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub plan: Plan,
    pub trace: BeliefTrace,
    /// Δ of the round that found the plan.
    pub delta: usize,
    pub expanded: usize,
    pub goals_x: Vec<usize>,
    pub goals_c: Vec<usize>,
}

type Sid = u32;
/// Duplicate-detection key: actor state, full X belief, full C belief.
type NodeKey = (Sid, Box<[Sid]>, Box<[Sid]>);

struct Succ {
    action: ActionId,
    to: Sid,
    emit: [SymbolId; 2],
    interp: [SymbolId; 2],
}

/// Interned states with cached successor lists. Observer slot 0 is X,
/// slot 1 is C.
struct Space<'a> {
    p: &'a ProblemFile,
    sensors: [&'a SensorModel; 2],
    states: Vec<State>,
    ids: HashMap<State, Sid>,
    succ: Vec<Option<Vec<Succ>>>,
}

impl<'a> Space<'a> {
    fn new(p: &'a ProblemFile) -> Self {
        let sensors = [
            p.sensor(ObserverId::Adversary).expect("validated"),
            p.sensor(ObserverId::Cooperative).expect("validated"),
        ];
        let mut s = Space { p, sensors, states: Vec::new(), ids: HashMap::new(), succ: Vec::new() };
        s.intern(p.domain.initial().clone());
        s
    }

    fn intern(&mut self, s: State) -> Sid {
        if let Some(&id) = self.ids.get(&s) {
            return id;
        }
        let id = self.states.len() as Sid;
        self.ids.insert(s.clone(), id);
        self.states.push(s);
        self.succ.push(None);
        id
    }

    fn successors(&mut self, id: Sid) -> &[Succ] {
        if self.succ[id as usize].is_none() {
            let from = self.states[id as usize].clone();
            let list: Vec<Succ> = self
                .p
                .domain
                .successors(&from)
                .map(|(a, next)| {
                    let emit = [self.sensors[0].emit(a, &next), self.sensors[1].emit(a, &next)];
                    let interp = [self.sensors[0].interpret(a, &next), self.sensors[1].interpret(a, &next)];
                    Succ { action: a, to: self.intern(next), emit, interp }
                })
                .collect();
            self.succ[id as usize] = Some(list);
        }
        self.succ[id as usize].as_deref().expect("filled")
    }

    fn update(&mut self, belief: &[Sid], obs: usize, sym: SymbolId) -> Box<[Sid]> {
        let mut next = Vec::new();
        for &s in belief {
            next.extend(self.successors(s).iter().filter(|x| x.interp[obs] == sym).map(|x| x.to));
        }
        next.sort_unstable();
        next.dedup();
        next.into_boxed_slice()
    }

    fn st(&self, id: Sid) -> &State {
        &self.states[id as usize]
    }
}

struct Node {
    state: Sid,
    full: [Box<[Sid]>; 2],
    g: f64,
    parent: Option<(usize, ActionId)>,
}

#[derive(PartialEq)]
struct Open {
    f: f64,
    seq: u64,
    node: usize,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, o: &Self) -> Ordering {
        // BinaryHeap is a max-heap: invert for lowest f, then earliest seq.
        o.f.total_cmp(&self.f).then(o.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Lexicographic Δ-combinations of `0..n`, at most `cap` of them.
fn combinations(n: usize, delta: usize, cap: usize, mut visit: impl FnMut(&[usize])) {
    let k = delta.min(n);
    if k == 0 {
        visit(&[]);
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    for _ in 0..cap {
        visit(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else { return };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

struct Evaluator<'a> {
    h: HAdd<'a>,
    phi: &'a GoalSpec,
    true_goal: usize,
    cap: usize,
}

impl Evaluator<'_> {
    /// Heuristic of a node whose approximate beliefs are the best Δ-subsets
    /// of its full beliefs. Exploring every subset as its own node under
    /// duplicate detection on full beliefs would expand exactly this one
    /// first, so only it is kept.
    fn eval(&mut self, space: &Space<'_>, state: Sid, full: &[Box<[Sid]>; 2], delta: usize) -> f64 {
        let own = finite(self.h.goal_costs(space.st(state))[self.true_goal]);
        let phi = self.phi;

        let x = &full[0];
        let mut best_x = f64::INFINITY;
        if phi.decoys_x.is_empty() {
            best_x = 0.0;
        } else {
            // Per-state costs once, then cheap subset scoring.
            let costs: Vec<Vec<f64>> = x
                .iter()
                .map(|&s| {
                    let c = self.h.goal_costs(space.st(s));
                    phi.decoys_x.iter().map(|&g| finite(c[g])).collect()
                })
                .collect();
            combinations(x.len(), delta, self.cap, |idx| {
                let v = (0..phi.decoys_x.len())
                    .map(|g| idx.iter().map(|&i| costs[i][g]).fold(f64::INFINITY, f64::min))
                    .fold(0.0, f64::max);
                best_x = best_x.min(v);
            });
        }

        // The C term only depends on each state's nearest target, so the
        // best subset is the Δ states farthest from every target.
        let c_val = if phi.targets_c.is_empty() {
            0.0
        } else {
            let mut near: Vec<f64> = full[1]
                .iter()
                .map(|&s| {
                    let c = self.h.goal_costs(space.st(s));
                    phi.targets_c.iter().map(|&g| finite(c[g])).fold(f64::INFINITY, f64::min)
                })
                .collect();
            near.sort_by(|a, b| b.total_cmp(a));
            near.truncate(delta.max(1));
            -near.iter().copied().fold(f64::INFINITY, f64::min)
        };
        own + best_x + c_val
    }
}

fn ids_to_set<'s>(space: &'s Space<'_>, ids: &'s [Sid]) -> impl Iterator<Item = &'s State> + Clone + 's {
    let states = &space.states;
    ids.iter().map(move |&i| &states[i as usize])
}

/// Δ-loop best-first search for a plan satisfying Φ. The returned plan has
/// been replayed independently and re-checked against Φ.
pub fn search(p: &ProblemFile, phi: &GoalSpec, cfg: &SearchConfig) -> Result<SearchOutcome, SearchError> {
    phi.validate(p)?;
    if cfg.delta_max < 1 {
        return Err(SearchError::InvalidSpec("delta_max must be at least 1".into()));
    }
    let start = Instant::now();
    let mut space = Space::new(p);
    let mut ev = Evaluator {
        h: HAdd::new(&p.domain, p.goals.goals()),
        phi,
        true_goal: p.goals.true_goal_index(),
        cap: cfg.combination_cap.max(1),
    };
    let mut expanded_total = 0;

    for delta in 1..=cfg.delta_max {
        let root_full: [Box<[Sid]>; 2] = [Box::new([0]), Box::new([0])];
        let mut nodes = vec![Node { state: 0, full: root_full.clone(), g: 0.0, parent: None }];
        let mut seen: HashSet<NodeKey> = HashSet::new();
        seen.insert((0, root_full[0].clone(), root_full[1].clone()));
        let mut open = BinaryHeap::new();
        let mut seq = 0u64;
        let f0 = ev.eval(&space, 0, &root_full, delta);
        open.push(Open { f: f0, seq, node: 0 });
        let mut expanded = 0;

        let found = loop {
            let Some(Open { node: ni, .. }) = open.pop() else { break None };
            let (state, full, g) = {
                let n = &nodes[ni];
                (n.state, n.full.clone(), n.g)
            };
            if passes(p, phi, space.st(state), ids_to_set(&space, &full[0]), ids_to_set(&space, &full[1])) {
                break Some(ni);
            }
            expanded += 1;
            if expanded > cfg.node_limit {
                break None;
            }
            if expanded % 256 == 0 && start.elapsed() > cfg.time_limit {
                return Err(SearchError::TimeLimit);
            }
            let succs: Vec<(ActionId, Sid, [SymbolId; 2])> =
                space.successors(state).iter().map(|s| (s.action, s.to, s.emit)).collect();
            for (a, to, emit) in succs {
                let nx = space.update(&full[0], 0, emit[0]);
                let nc = space.update(&full[1], 1, emit[1]);
                let key = (to, nx, nc);
                if seen.contains(&key) {
                    continue;
                }
                let (_, nx, nc) = key.clone();
                seen.insert(key);
                let full = [nx, nc];
                let g2 = g + p.domain.action(a).cost;
                let h = ev.eval(&space, to, &full, delta);
                nodes.push(Node { state: to, full, g: g2, parent: Some((ni, a)) });
                seq += 1;
                open.push(Open { f: g2 + h, seq, node: nodes.len() - 1 });
            }
        };
        expanded_total += expanded;

        match found {
            Some(ni) => {
                let mut steps = Vec::new();
                let mut cur = ni;
                while let Some((parent, a)) = nodes[cur].parent {
                    steps.push(a);
                    cur = parent;
                }
                steps.reverse();
                return verified(p, phi, Plan::new(steps), delta, expanded_total);
            }
            // Open list exhausted: the reachable belief space holds no
            // solution, whatever Δ.
            None if expanded <= cfg.node_limit => return Err(SearchError::Exhausted),
            None => continue,
        }
    }
    Err(SearchError::NodeLimit)
}

/// Replays `plan` with the observer module and checks Φ on the result.
fn verified(
    p: &ProblemFile,
    phi: &GoalSpec,
    plan: Plan,
    delta: usize,
    expanded: usize,
) -> Result<SearchOutcome, SearchError> {
    let trace = run_trace(&p.domain, &p.sensors, &plan).map_err(|e| SearchError::Verification(e.to_string()))?;
    let goals_x = trace.final_goals(ObserverId::Adversary, &p.goals);
    let goals_c = trace.final_goals(ObserverId::Cooperative, &p.goals);
    let end = trace.states.last().expect("initial state");
    if !satisfies(end, p.goals.true_goal()) || goals_x.len() < phi.k || goals_c.len() > phi.j {
        return Err(SearchError::Verification(format!(
            "replay gives |G_X| = {}, |G_C| = {}",
            goals_x.len(),
            goals_c.len()
        )));
    }
    Ok(SearchOutcome { plan, trace, delta, expanded, goals_x, goals_c })
}

/// Greedy best-first search on `h_add` to the true goal alone, with the
/// belief trace computed afterwards for reporting.
pub fn baseline_gbfs(p: &ProblemFile) -> Result<(Plan, BeliefTrace), SearchError> {
    baseline_gbfs_limited(p, usize::MAX)
}

pub fn baseline_gbfs_limited(p: &ProblemFile, node_limit: usize) -> Result<(Plan, BeliefTrace), SearchError> {
    let d = &p.domain;
    let goal = p.goals.true_goal();
    let tg = p.goals.true_goal_index();
    let mut h = HAdd::new(d, p.goals.goals());
    let mut nodes: Vec<(State, Option<(usize, ActionId)>)> = vec![(d.initial().clone(), None)];
    let mut seen: HashSet<State> = HashSet::from([d.initial().clone()]);
    let mut open = BinaryHeap::new();
    open.push(Open { f: h.goal_costs(d.initial())[tg], seq: 0, node: 0 });
    let mut seq = 0;
    let mut expanded = 0;
    while let Some(Open { node: ni, .. }) = open.pop() {
        if satisfies(&nodes[ni].0, goal) {
            let mut steps = Vec::new();
            let mut cur = ni;
            while let Some((parent, a)) = nodes[cur].1 {
                steps.push(a);
                cur = parent;
            }
            steps.reverse();
            let plan = Plan::new(steps);
            let trace = run_trace(d, &p.sensors, &plan).map_err(|e| SearchError::Verification(e.to_string()))?;
            return Ok((plan, trace));
        }
        expanded += 1;
        if expanded > node_limit {
            return Err(SearchError::NodeLimit);
        }
        let from = nodes[ni].0.clone();
        for (a, next) in d.successors(&from) {
            if seen.insert(next.clone()) {
                let v = h.goal_costs(&next)[tg];
                if v.is_infinite() {
                    continue;
                }
                seq += 1;
                nodes.push((next, Some((ni, a))));
                open.push(Open { f: v, seq, node: nodes.len() - 1 });
            }
        }
    }
    Err(SearchError::Exhausted)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_are_lexicographic_and_capped() {
        let mut all = Vec::new();
        combinations(4, 2, 100, |c| all.push(c.to_vec()));
        assert_eq!(all, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        let mut n = 0;
        combinations(10, 3, 5, |_| n += 1);
        assert_eq!(n, 5);
        let mut small = Vec::new();
        combinations(2, 5, 100, |c| small.push(c.to_vec()));
        assert_eq!(small, vec![vec![0, 1]]);
    }

    #[test]
    fn open_list_is_min_f_then_fifo() {
        let mut h = BinaryHeap::new();
        h.push(Open { f: 2.0, seq: 0, node: 0 });
        h.push(Open { f: 1.0, seq: 2, node: 1 });
        h.push(Open { f: 1.0, seq: 1, node: 2 });
        let order: Vec<usize> = std::iter::from_fn(|| h.pop().map(|o| o.node)).collect();
        assert_eq!(order, vec![2, 1, 0]);
    }
}
