//! Ground STRIPS planning core: fluents, states, actions, the transition
//! function and plans.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use crate::error::ModelError;

pub type FluentId = usize;
pub type ActionId = usize;

/// A ground proposition.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fluent(pub String);

impl fmt::Display for Fluent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A set of fluents over a fixed universe, stored as a bitset.
///
/// Used both for complete world states and for partial goal states.
/// Ordering is lexicographic over the sorted fluent indices, which gives a
/// deterministic total order independent of hashing.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct State {
    bits: Box<[u64]>,
}

impl State {
    pub fn empty(universe: usize) -> Self {
        State { bits: vec![0u64; universe.div_ceil(64)].into_boxed_slice() }
    }

    pub fn from_fluents<I: IntoIterator<Item = FluentId>>(universe: usize, fluents: I) -> Self {
        let mut s = State::empty(universe);
        for f in fluents {
            s.insert(f);
        }
        s
    }

    /// Number of 64-bit words backing the set; two states are comparable
    /// only when this matches.
    pub fn width(&self) -> usize {
        self.bits.len()
    }

    pub fn insert(&mut self, f: FluentId) {
        self.bits[f / 64] |= 1u64 << (f % 64);
    }

    pub fn remove(&mut self, f: FluentId) {
        self.bits[f / 64] &= !(1u64 << (f % 64));
    }

    pub fn contains(&self, f: FluentId) -> bool {
        self.bits.get(f / 64).is_some_and(|w| w & (1u64 << (f % 64)) != 0)
    }

    pub fn is_subset(&self, other: &State) -> bool {
        self.bits.iter().zip(other.bits.iter()).all(|(a, b)| a & !b == 0)
            && self.bits.iter().skip(other.bits.len()).all(|&w| w == 0)
    }

    pub fn is_disjoint(&self, other: &State) -> bool {
        self.bits.iter().zip(other.bits.iter()).all(|(a, b)| a & b == 0)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = FluentId> + '_ {
        self.bits.iter().enumerate().flat_map(|(i, &w)| {
            let mut word = w;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let tz = word.trailing_zeros() as usize;
                word &= word - 1;
                Some(i * 64 + tz)
            })
        })
    }

    /// `(self \ del) ∪ add`, word by word.
    fn successor(&self, add: &State, del: &State) -> State {
        let bits = self.bits.iter().zip(add.bits.iter().zip(del.bits.iter())).map(|(s, (a, d))| (s & !d) | a).collect();
        State { bits }
    }
}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        self.iter().cmp(other.iter())
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub name: String,
    pub pre: State,
    pub add: State,
    pub del: State,
    pub cost: f64,
}

impl Action {
    pub fn is_applicable(&self, s: &State) -> bool {
        self.pre.is_subset(s)
    }

    /// Successor without the applicability check.
    pub fn successor(&self, s: &State) -> State {
        s.successor(&self.add, &self.del)
    }
}

/// Fluent universe, ground actions and a complete initial state.
#[derive(Debug, Clone)]
pub struct PlanningDomain {
    fluents: Vec<Fluent>,
    fluent_index: HashMap<String, FluentId>,
    actions: Vec<Action>,
    action_index: HashMap<String, ActionId>,
    initial: State,
}

/// Builder-side description of an action, by fluent name.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpec {
    pub name: String,
    pub pre: Vec<String>,
    pub add: Vec<String>,
    pub del: Vec<String>,
    pub cost: f64,
}

impl ActionSpec {
    pub fn new(name: impl Into<String>) -> Self {
        ActionSpec { name: name.into(), pre: vec![], add: vec![], del: vec![], cost: 1.0 }
    }

    pub fn pre<S: Into<String>>(mut self, fs: impl IntoIterator<Item = S>) -> Self {
        self.pre.extend(fs.into_iter().map(Into::into));
        self
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add<S: Into<String>>(mut self, fs: impl IntoIterator<Item = S>) -> Self {
        self.add.extend(fs.into_iter().map(Into::into));
        self
    }

    pub fn del<S: Into<String>>(mut self, fs: impl IntoIterator<Item = S>) -> Self {
        self.del.extend(fs.into_iter().map(Into::into));
        self
    }

    pub fn cost(mut self, c: f64) -> Self {
        self.cost = c;
        self
    }
}

impl PlanningDomain {
    pub fn new<S: AsRef<str>, I: AsRef<str>>(
        fluents: impl IntoIterator<Item = S>,
        actions: impl IntoIterator<Item = ActionSpec>,
        initial: impl IntoIterator<Item = I>,
    ) -> Result<Self, ModelError> {
        let mut fluent_vec = Vec::new();
        let mut fluent_index = HashMap::new();
        for f in fluents {
            let name = f.as_ref();
            if name.is_empty() {
                return Err(ModelError::EmptyFluentName);
            }
            if fluent_index.insert(name.to_string(), fluent_vec.len()).is_some() {
                return Err(ModelError::DuplicateFluent(name.to_string()));
            }
            fluent_vec.push(Fluent(name.to_string()));
        }
        let n = fluent_vec.len();
        let lookup =
            |name: &str| fluent_index.get(name).copied().ok_or_else(|| ModelError::UnknownFluent(name.to_string()));
        let set = |names: &[String]| -> Result<State, ModelError> {
            let mut s = State::empty(n);
            for nm in names {
                s.insert(lookup(nm)?);
            }
            Ok(s)
        };

        let mut action_vec = Vec::new();
        let mut action_index = HashMap::new();
        for spec in actions {
            if spec.name.is_empty() {
                return Err(ModelError::EmptyActionName);
            }
            if !(spec.cost >= 0.0 && spec.cost.is_finite()) {
                return Err(ModelError::NegativeCost { action: spec.name, cost: spec.cost });
            }
            let action = Action {
                pre: set(&spec.pre)?,
                add: set(&spec.add)?,
                del: set(&spec.del)?,
                cost: spec.cost,
                name: spec.name,
            };
            if !action.add.is_disjoint(&action.del) {
                return Err(ModelError::AddDeleteOverlap(action.name));
            }
            if action_index.insert(action.name.clone(), action_vec.len()).is_some() {
                return Err(ModelError::DuplicateAction(action.name));
            }
            action_vec.push(action);
        }
        let mut init = State::empty(n);
        for f in initial {
            init.insert(lookup(f.as_ref())?);
        }
        Ok(PlanningDomain { fluents: fluent_vec, fluent_index, actions: action_vec, action_index, initial: init })
    }

    pub fn fluents(&self) -> &[Fluent] {
        &self.fluents
    }

    pub fn num_fluents(&self) -> usize {
        self.fluents.len()
    }

    pub fn fluent_id(&self, name: &str) -> Option<FluentId> {
        self.fluent_index.get(name).copied()
    }

    pub fn fluent_name(&self, id: FluentId) -> &str {
        &self.fluents[id].0
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn action(&self, id: ActionId) -> &Action {
        &self.actions[id]
    }

    pub fn action_id(&self, name: &str) -> Option<ActionId> {
        self.action_index.get(name).copied()
    }

    pub fn initial(&self) -> &State {
        &self.initial
    }

    /// Builds a state from fluent names.
    pub fn state<S: AsRef<str>>(&self, names: impl IntoIterator<Item = S>) -> Result<State, ModelError> {
        let mut s = State::empty(self.num_fluents());
        for n in names {
            let n = n.as_ref();
            s.insert(self.fluent_id(n).ok_or_else(|| ModelError::UnknownFluent(n.to_string()))?);
        }
        Ok(s)
    }

    pub fn fluent_names<'a>(&'a self, s: &'a State) -> impl Iterator<Item = &'a str> + 'a {
        s.iter().map(move |f| self.fluent_name(f))
    }

    fn check(&self, s: &State, a: ActionId) -> Result<(), ModelError> {
        if s.width() != self.initial.width() || s.iter().any(|f| f >= self.num_fluents()) {
            return Err(ModelError::DomainMismatch("state is not over this domain's fluent universe".into()));
        }
        if a >= self.actions.len() {
            return Err(ModelError::DomainMismatch(format!("action id {a} out of range")));
        }
        Ok(())
    }

    pub fn applicable(&self, s: &State, a: ActionId) -> Result<bool, ModelError> {
        self.check(s, a)?;
        Ok(self.actions[a].is_applicable(s))
    }

    pub fn apply(&self, s: &State, a: ActionId) -> Result<State, ModelError> {
        if !self.applicable(s, a)? {
            return Err(ModelError::Inapplicable { action: self.actions[a].name.clone(), step: None });
        }
        Ok(self.actions[a].successor(s))
    }

    /// Applicable actions with their successors, in action-id order.
    pub fn successors<'a>(&'a self, s: &'a State) -> impl Iterator<Item = (ActionId, State)> + 'a {
        self.actions.iter().enumerate().filter(move |(_, a)| a.is_applicable(s)).map(move |(i, a)| (i, a.successor(s)))
    }

    /// States `[s_0, …, s_n]` visited by executing `plan` from the initial state.
    pub fn simulate(&self, plan: &Plan) -> Result<Vec<State>, ModelError> {
        let mut states = Vec::with_capacity(plan.len() + 1);
        states.push(self.initial.clone());
        for (i, &a) in plan.steps.iter().enumerate() {
            let cur = states.last().expect("non-empty");
            if a >= self.actions.len() {
                return Err(ModelError::DomainMismatch(format!("action id {a} out of range")));
            }
            let action = &self.actions[a];
            if !action.is_applicable(cur) {
                return Err(ModelError::Inapplicable { action: action.name.clone(), step: Some(i) });
            }
            let next = action.successor(cur);
            states.push(next);
        }
        Ok(states)
    }

    pub fn plan_cost(&self, plan: &Plan) -> f64 {
        plan.steps.iter().map(|&a| self.actions[a].cost).sum()
    }

    /// Parses action names into a plan. Unknown names are reported with
    /// their line number (1-based).
    pub fn plan_from_names<S: AsRef<str>>(&self, names: impl IntoIterator<Item = S>) -> Result<Plan, ModelError> {
        let mut steps = Vec::new();
        for (i, n) in names.into_iter().enumerate() {
            let n = n.as_ref();
            let id = self.action_id(n).ok_or_else(|| ModelError::UnknownAction { name: n.to_string(), step: i })?;
            steps.push(id);
        }
        Ok(Plan { steps })
    }
}

/// Partial-state goal satisfaction: every goal fluent holds in `s`.
pub fn satisfies(s: &State, goal: &State) -> bool {
    goal.is_subset(s)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Plan {
    pub steps: Vec<ActionId>,
}

impl Plan {
    pub fn new(steps: Vec<ActionId>) -> Self {
        Plan { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn concat(&self, other: &Plan) -> Plan {
        Plan { steps: self.steps.iter().chain(other.steps.iter()).copied().collect() }
    }

    /// One action name per line.
    pub fn to_text(&self, d: &PlanningDomain) -> String {
        let mut out = String::new();
        for &a in &self.steps {
            out.push_str(&d.action(a).name);
            out.push('\n');
        }
        out
    }

    /// Reads the `.plan` format: one action name per line, blank lines and
    /// `;` comments ignored.
    pub fn from_text(d: &PlanningDomain, text: &str) -> Result<Plan, ModelError> {
        let names = text
            .lines()
            .map(|l| l.split(';').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(|l| l.trim_start_matches('(').trim_end_matches(')').trim().to_string());
        d.plan_from_names(names)
    }
}

/// Ordered candidate goals with the index of the actor's true goal.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateGoalSet {
    goals: Vec<State>,
    labels: Vec<String>,
    true_goal: usize,
}

impl CandidateGoalSet {
    pub fn new(goals: Vec<State>, labels: Vec<String>, true_goal: usize) -> Result<Self, ModelError> {
        if goals.is_empty() {
            return Err(ModelError::NoGoals);
        }
        if labels.len() != goals.len() {
            return Err(ModelError::GoalLabels);
        }
        if true_goal >= goals.len() {
            return Err(ModelError::TrueGoalOutOfRange { index: true_goal, len: goals.len() });
        }
        for i in 0..goals.len() {
            for j in 0..i {
                if goals[i] == goals[j] {
                    return Err(ModelError::DuplicateGoal { first: j, second: i });
                }
            }
        }
        Ok(CandidateGoalSet { goals, labels, true_goal })
    }

    /// Goals labelled `g1`, `g2`, … in order.
    pub fn unlabelled(goals: Vec<State>, true_goal: usize) -> Result<Self, ModelError> {
        let labels = (1..=goals.len()).map(|i| format!("g{i}")).collect();
        Self::new(goals, labels, true_goal)
    }

    pub fn goals(&self) -> &[State] {
        &self.goals
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.goals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.goals.is_empty()
    }

    pub fn true_goal_index(&self) -> usize {
        self.true_goal
    }

    pub fn true_goal(&self) -> &State {
        &self.goals[self.true_goal]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy() -> PlanningDomain {
        PlanningDomain::new(
            ["p", "q", "r"],
            [
                ActionSpec::new("pq").pre(["p"]).add(["q"]).del(["p"]),
                ActionSpec::new("noop"),
                ActionSpec::new("qr").pre(["q"]).add(["r"]).cost(0.5),
                ActionSpec::new("expensive").cost(2.0),
            ],
            ["p"],
        )
        .unwrap()
    }

    #[test]
    fn applicable_is_precondition_subset() {
        let d = toy();
        let p = d.state(["p"]).unwrap();
        let empty = State::empty(3);
        assert!(d.applicable(&p, 0).unwrap());
        assert!(!d.applicable(&empty, 0).unwrap());
        assert!(d.applicable(&empty, 1).unwrap());
    }

    #[test]
    fn apply_set_algebra() {
        let d = toy();
        let p = d.state(["p"]).unwrap();
        assert_eq!(d.apply(&p, 0).unwrap(), d.state(["q"]).unwrap());
        assert_eq!(d.apply(&p, 1).unwrap(), p);
        assert!(matches!(d.apply(&p, 2), Err(ModelError::Inapplicable { .. })));
    }

    #[test]
    fn domain_mismatch_detected() {
        let d = toy();
        let other = State::empty(100);
        assert!(matches!(d.applicable(&other, 0), Err(ModelError::DomainMismatch(_))));
        assert!(matches!(d.applicable(d.initial(), 99), Err(ModelError::DomainMismatch(_))));
    }

    #[test]
    fn simulate_reports_failing_step() {
        let d = toy();
        assert_eq!(d.simulate(&Plan::default()).unwrap(), vec![d.initial().clone()]);
        let two_noops = Plan::new(vec![1, 1]);
        assert_eq!(d.simulate(&two_noops).unwrap(), vec![d.initial().clone(); 3]);
        let bad = Plan::new(vec![1, 2]);
        match d.simulate(&bad) {
            Err(ModelError::Inapplicable { step: Some(1), .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn satisfies_subset_semantics() {
        let d = toy();
        let pq = d.state(["p", "q"]).unwrap();
        let p = d.state(["p"]).unwrap();
        assert!(satisfies(&pq, &p));
        assert!(!satisfies(&p, &pq));
    }

    #[test]
    fn plan_costs() {
        let d = toy();
        assert_eq!(d.plan_cost(&Plan::default()), 0.0);
        assert_eq!(d.plan_cost(&Plan::new(vec![1, 1, 1])), 3.0);
        assert_eq!(d.plan_cost(&Plan::new(vec![1, 2, 3])), 3.5);
    }

    #[test]
    fn builder_rejects_bad_input() {
        assert!(matches!(PlanningDomain::new(["p", "p"], [], ["p"]), Err(ModelError::DuplicateFluent(_))));
        assert!(matches!(
            PlanningDomain::new(["p"], [ActionSpec::new("a"), ActionSpec::new("a")], ["p"]),
            Err(ModelError::DuplicateAction(_))
        ));
        assert!(matches!(
            PlanningDomain::new(["p"], [ActionSpec::new("a").add(["p"]).del(["p"])], ["p"]),
            Err(ModelError::AddDeleteOverlap(_))
        ));
        assert!(matches!(
            PlanningDomain::new(["p"], [ActionSpec::new("a").cost(-1.0)], ["p"]),
            Err(ModelError::NegativeCost { .. })
        ));
        assert!(matches!(PlanningDomain::new(["p"], [], ["z"]), Err(ModelError::UnknownFluent(_))));
    }

    #[test]
    fn goal_set_invariants() {
        let d = toy();
        let p = d.state(["p"]).unwrap();
        assert!(CandidateGoalSet::unlabelled(vec![], 0).is_err());
        assert!(CandidateGoalSet::unlabelled(vec![p.clone()], 1).is_err());
        assert!(CandidateGoalSet::unlabelled(vec![p.clone(), p.clone()], 0).is_err());
    }

    #[test]
    fn plan_text_round_trip() {
        let d = toy();
        let plan = Plan::new(vec![0, 2, 1]);
        let text = plan.to_text(&d);
        assert_eq!(Plan::from_text(&d, &format!("; comment\n{text}\n")).unwrap(), plan);
        assert!(Plan::from_text(&d, "pq\nbogus\n").is_err());
    }

    proptest! {
        #[test]
        fn state_order_matches_sorted_index_lists(a in proptest::collection::btree_set(0usize..130, 0..8),
                                                  b in proptest::collection::btree_set(0usize..130, 0..8)) {
            let sa = State::from_fluents(130, a.iter().copied());
            let sb = State::from_fluents(130, b.iter().copied());
            let va: Vec<_> = a.iter().copied().collect();
            let vb: Vec<_> = b.iter().copied().collect();
            prop_assert_eq!(sa.cmp(&sb), va.cmp(&vb));
            prop_assert_eq!(sa.is_subset(&sb), a.is_subset(&b));
        }

        #[test]
        fn satisfies_is_monotone(s in proptest::collection::btree_set(0usize..20, 0..10),
                                 extra in proptest::collection::btree_set(0usize..20, 0..10),
                                 g in proptest::collection::btree_set(0usize..20, 0..4)) {
            let small = State::from_fluents(20, s.iter().copied());
            let big = State::from_fluents(20, s.iter().chain(extra.iter()).copied());
            let goal = State::from_fluents(20, g.iter().copied());
            if satisfies(&small, &goal) {
                prop_assert!(satisfies(&big, &goal));
            }
        }

        #[test]
        fn simulate_is_stepwise_apply(steps in proptest::collection::vec(0usize..4, 0..8)) {
            let d = toy();
            let plan = Plan::new(steps);
            if let Ok(states) = d.simulate(&plan) {
                for (i, &a) in plan.steps.iter().enumerate() {
                    prop_assert_eq!(&d.apply(&states[i], a).unwrap(), &states[i + 1]);
                    prop_assert!(states[i + 1].iter().all(|f| f < d.num_fluents()));
                }
            }
        }

        #[test]
        fn cost_is_additive(a in proptest::collection::vec(0usize..4, 0..6),
                            b in proptest::collection::vec(0usize..4, 0..6)) {
            let d = toy();
            let (pa, pb) = (Plan::new(a), Plan::new(b));
            let joined = d.plan_cost(&pa.concat(&pb));
            prop_assert!((joined - d.plan_cost(&pa) - d.plan_cost(&pb)).abs() < 1e-12);
        }
    }
}
