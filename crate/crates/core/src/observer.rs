//! Deterministic rule-based sensor models, exact belief update and
//! possible-goal counting.
//!
//! A sensor maps `(action, successor state)` to an observation symbol with
//! first-match-wins rules closed by a mandatory catch-all. Observers know
//! their own sensor model; an optional list of *misreport* rules describes
//! transitions whose physically emitted symbol differs from what the
//! observer's model predicts, which is how an erroneous sensor is expressed.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use crate::error::{ModelError, SensorError};
use crate::model::{satisfies, ActionId, CandidateGoalSet, Plan, PlanningDomain, State};
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObserverId {
    /// The actor itself; full observability.
    Actor,
    Cooperative,
    Adversary,
}

impl ObserverId {
    pub fn letter(self) -> char {
        match self {
            ObserverId::Actor => 'A',
            ObserverId::Cooperative => 'C',
            ObserverId::Adversary => 'X',
        }
    }

    pub fn from_letter(c: &str) -> Option<Self> {
        match c {
            "A" => Some(ObserverId::Actor),
            "C" => Some(ObserverId::Cooperative),
            "X" => Some(ObserverId::Adversary),
            _ => None,
        }
    }
}

impl fmt::Display for ObserverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

pub type SymbolId = usize;

/// One sensor rule as written in a problem file.
///
/// `actions` holds exact action names or prefix globs ending in `*`; an
/// empty list matches every action. `state_has` lists fluents that must hold
/// in the successor state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensorRule {
    pub actions: Vec<String>,
    pub state_has: Vec<String>,
    pub symbol: String,
}

impl SensorRule {
    pub fn on_actions<S: Into<String>>(actions: impl IntoIterator<Item = S>, symbol: impl Into<String>) -> Self {
        SensorRule { actions: actions.into_iter().map(Into::into).collect(), state_has: vec![], symbol: symbol.into() }
    }

    pub fn with_state<S: Into<String>>(mut self, fluents: impl IntoIterator<Item = S>) -> Self {
        self.state_has.extend(fluents.into_iter().map(Into::into));
        self
    }
}

#[derive(Debug, Clone)]
struct CompiledRule {
    /// Action ids as a bitset over the domain's actions.
    actions: State,
    any_action: bool,
    state_has: State,
    symbol: SymbolId,
}

impl CompiledRule {
    fn matches(&self, a: ActionId, next: &State) -> bool {
        (self.any_action || self.actions.contains(a)) && self.state_has.is_subset(next)
    }

    fn covers(&self, other: &CompiledRule) -> bool {
        let actions_cover = self.any_action || (!other.any_action && other.actions.is_subset(&self.actions));
        actions_cover && self.state_has.is_subset(&other.state_has)
    }

    fn matches_nothing(&self) -> bool {
        !self.any_action && self.actions.is_empty()
    }
}

/// A compiled sensor model bound to one planning domain.
#[derive(Debug, Clone)]
pub struct SensorModel {
    observer: ObserverId,
    rules: Vec<SensorRule>,
    catchall: String,
    misreports: Vec<SensorRule>,
    alphabet: Vec<String>,
    compiled: Vec<CompiledRule>,
    compiled_misreports: Vec<CompiledRule>,
    catchall_id: SymbolId,
    /// Per action, indices of rules whose action set contains it.
    by_action: Vec<Vec<usize>>,
}

impl SensorModel {
    pub fn new(
        domain: &PlanningDomain,
        observer: ObserverId,
        rules: Vec<SensorRule>,
        catchall: Option<String>,
        misreports: Vec<SensorRule>,
    ) -> Result<Self, SensorError> {
        let letter = observer.letter();
        if observer == ObserverId::Actor {
            return Err(SensorError::ActorSensor);
        }
        let catchall = catchall.ok_or(SensorError::MissingCatchall { observer: letter })?;

        let mut alphabet: Vec<String> = Vec::new();
        let intern = |s: &str, alphabet: &mut Vec<String>| match alphabet.iter().position(|x| x == s) {
            Some(i) => i,
            None => {
                alphabet.push(s.to_string());
                alphabet.len() - 1
            }
        };

        let compile = |r: &SensorRule, symbol: SymbolId| -> Result<CompiledRule, SensorError> {
            let mut actions = State::empty(domain.actions().len());
            for pat in &r.actions {
                if let Some(prefix) = pat.strip_suffix('*') {
                    for (i, a) in domain.actions().iter().enumerate() {
                        if a.name.starts_with(prefix) {
                            actions.insert(i);
                        }
                    }
                } else {
                    let id = domain
                        .action_id(pat)
                        .ok_or_else(|| SensorError::UnknownAction { observer: letter, name: pat.clone() })?;
                    actions.insert(id);
                }
            }
            let mut state_has = State::empty(domain.num_fluents());
            for f in &r.state_has {
                let id = domain
                    .fluent_id(f)
                    .ok_or_else(|| SensorError::UnknownFluent { observer: letter, name: f.clone() })?;
                state_has.insert(id);
            }
            Ok(CompiledRule { actions, any_action: r.actions.is_empty(), state_has, symbol })
        };

        let mut compiled = Vec::with_capacity(rules.len());
        for r in &rules {
            let sym = intern(&r.symbol, &mut alphabet);
            compiled.push(compile(r, sym)?);
        }
        let catchall_id = intern(&catchall, &mut alphabet);

        for later in 0..compiled.len() {
            if compiled[later].matches_nothing() {
                continue;
            }
            // An earlier rule can only cover this one if it shares its first action.
            let first = compiled[later].actions.iter().next();
            for earlier in 0..later {
                if first.is_some_and(|a| !compiled[earlier].any_action && !compiled[earlier].actions.contains(a)) {
                    continue;
                }
                if compiled[earlier].covers(&compiled[later]) && compiled[earlier].symbol != compiled[later].symbol {
                    return Err(SensorError::ShadowedRule { observer: letter, earlier, later });
                }
            }
        }

        let mut compiled_misreports = Vec::with_capacity(misreports.len());
        for r in &misreports {
            let sym = alphabet
                .iter()
                .position(|x| *x == r.symbol)
                .ok_or_else(|| SensorError::UnknownSymbol { observer: letter, symbol: r.symbol.clone() })?;
            compiled_misreports.push(compile(r, sym)?);
        }

        let mut by_action = vec![Vec::new(); domain.actions().len()];
        for (i, r) in compiled.iter().enumerate() {
            if r.any_action {
                by_action.iter_mut().for_each(|list| list.push(i));
            } else {
                r.actions.iter().for_each(|a| by_action[a].push(i));
            }
        }

        Ok(SensorModel {
            observer,
            rules,
            catchall,
            misreports,
            alphabet,
            compiled,
            compiled_misreports,
            catchall_id,
            by_action,
        })
    }

    pub fn observer(&self) -> ObserverId {
        self.observer
    }

    pub fn rules(&self) -> &[SensorRule] {
        &self.rules
    }

    pub fn catchall(&self) -> &str {
        &self.catchall
    }

    pub fn misreports(&self) -> &[SensorRule] {
        &self.misreports
    }

    pub fn has_misreports(&self) -> bool {
        !self.misreports.is_empty()
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn symbol_name(&self, id: SymbolId) -> &str {
        &self.alphabet[id]
    }

    pub fn symbol_id(&self, name: &str) -> Option<SymbolId> {
        self.alphabet.iter().position(|s| s == name)
    }

    /// The symbol the observer's own model associates with a transition.
    pub fn interpret(&self, a: ActionId, next: &State) -> SymbolId {
        self.by_action[a]
            .iter()
            .map(|&i| &self.compiled[i])
            .find(|r| r.state_has.is_subset(next))
            .map_or(self.catchall_id, |r| r.symbol)
    }

    /// The symbol physically emitted for a transition. Equal to
    /// [`interpret`](Self::interpret) unless a misreport rule matches.
    pub fn emit(&self, a: ActionId, next: &State) -> SymbolId {
        self.compiled_misreports
            .iter()
            .find(|r| r.matches(a, next))
            .map_or_else(|| self.interpret(a, next), |r| r.symbol)
    }
}

/// Observation emitted to the observer owning `m` when the actor executes
/// `a` and reaches `next`.
pub fn observe(m: &SensorModel, a: ActionId, next: &State) -> SymbolId {
    m.emit(a, next)
}

/// Set of states an observer considers possible at a time step.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Belief {
    pub owner: ObserverId,
    pub time: usize,
    pub states: BTreeSet<State>,
}

impl Belief {
    pub fn initial(owner: ObserverId, domain: &PlanningDomain) -> Self {
        Belief { owner, time: 0, states: BTreeSet::from([domain.initial().clone()]) }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn contains(&self, s: &State) -> bool {
        self.states.contains(s)
    }
}

/// Exact belief update: every successor of a believed state, under any
/// action, whose modelled symbol equals `o`.
pub fn belief_update(domain: &PlanningDomain, m: &SensorModel, prev: &Belief, o: SymbolId) -> Belief {
    debug_assert_eq!(prev.owner, m.observer());
    Belief { owner: prev.owner, time: prev.time + 1, states: update_states(domain, m, &prev.states, o) }
}

pub(crate) fn update_states(
    domain: &PlanningDomain,
    m: &SensorModel,
    prev: &BTreeSet<State>,
    o: SymbolId,
) -> BTreeSet<State> {
    let mut next = BTreeSet::new();
    for s in prev {
        for (a, succ) in domain.successors(s) {
            if m.interpret(a, &succ) == o {
                next.insert(succ);
            }
        }
    }
    next
}

/// Indices of candidate goals satisfied by at least one believed state.
pub fn possible_goals(b: &Belief, goals: &CandidateGoalSet) -> Vec<usize> {
    possible_goals_of(&b.states, goals)
}

pub(crate) fn possible_goals_of<'a, I>(states: I, goals: &CandidateGoalSet) -> Vec<usize>
where
    I: IntoIterator<Item = &'a State> + Clone,
{
    goals
        .goals()
        .iter()
        .enumerate()
        .filter(|(_, g)| states.clone().into_iter().any(|s| satisfies(s, g)))
        .map(|(i, _)| i)
        .collect()
}

/// Belief evolution of one observer along a plan.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverTrace {
    pub observer: ObserverId,
    /// `beliefs[t]` for `t = 0..=T`.
    pub beliefs: Vec<Belief>,
    /// `symbols[t - 1]` is the symbol received at step `t`; `None` on a
    /// padding step.
    pub symbols: Vec<Option<String>>,
}

impl ObserverTrace {
    pub fn final_belief(&self) -> &Belief {
        self.beliefs.last().expect("trace has an initial belief")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefTrace {
    /// True states `s_0 … s_T`.
    pub states: Vec<State>,
    /// Actions taken, `None` for padding steps.
    pub steps: Vec<Option<ActionId>>,
    /// The actor's own trace first, then one per sensor in input order.
    pub observers: Vec<ObserverTrace>,
}

impl BeliefTrace {
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn observer(&self, id: ObserverId) -> Option<&ObserverTrace> {
        self.observers.iter().find(|o| o.observer == id)
    }

    /// Possible goals in the final belief of `id`.
    pub fn final_goals(&self, id: ObserverId, goals: &CandidateGoalSet) -> Vec<usize> {
        self.observer(id).map(|o| possible_goals(o.final_belief(), goals)).unwrap_or_default()
    }

    /// Line-oriented export: `t observer symbol |belief| goal_indices`,
    /// one line per step per observer. `-` stands for no symbol or no goals;
    /// goal indices are 0-based and comma separated.
    pub fn to_lines(&self, goals: &CandidateGoalSet) -> String {
        let mut out = String::new();
        for t in 0..=self.horizon() {
            for o in &self.observers {
                let sym = if t == 0 { None } else { o.symbols[t - 1].as_deref() };
                let pg = possible_goals(&o.beliefs[t], goals);
                let pg = if pg.is_empty() {
                    "-".to_string()
                } else {
                    pg.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(",")
                };
                let _ = writeln!(out, "{t} {} {} {} {pg}", o.observer, sym.unwrap_or("-"), o.beliefs[t].len());
            }
        }
        out
    }
}

/// Replays `plan` and records the belief of the actor and each observer.
pub fn run_trace(domain: &PlanningDomain, sensors: &[SensorModel], plan: &Plan) -> Result<BeliefTrace, ModelError> {
    let steps: Vec<Option<ActionId>> = plan.steps.iter().copied().map(Some).collect();
    run_trace_padded(domain, sensors, &steps)
}

/// Like [`run_trace`], with `None` marking padding steps on which nothing is
/// observed and every belief is carried forward.
pub fn run_trace_padded(
    domain: &PlanningDomain,
    sensors: &[SensorModel],
    steps: &[Option<ActionId>],
) -> Result<BeliefTrace, ModelError> {
    let mut states = vec![domain.initial().clone()];
    let mut actor = ObserverTrace {
        observer: ObserverId::Actor,
        beliefs: vec![Belief::initial(ObserverId::Actor, domain)],
        symbols: vec![],
    };
    let mut observers: Vec<ObserverTrace> = sensors
        .iter()
        .map(|m| ObserverTrace {
            observer: m.observer(),
            beliefs: vec![Belief::initial(m.observer(), domain)],
            symbols: vec![],
        })
        .collect();

    for (t, step) in steps.iter().enumerate() {
        let cur = states.last().expect("non-empty").clone();
        match *step {
            None => {
                states.push(cur);
                for tr in std::iter::once(&mut actor).chain(observers.iter_mut()) {
                    let mut b = tr.beliefs.last().expect("non-empty").clone();
                    b.time += 1;
                    tr.beliefs.push(b);
                    tr.symbols.push(None);
                }
            }
            Some(a) => {
                if a >= domain.actions().len() {
                    return Err(ModelError::DomainMismatch(format!("action id {a} out of range")));
                }
                let action = domain.action(a);
                if !action.is_applicable(&cur) {
                    return Err(ModelError::Inapplicable { action: action.name.clone(), step: Some(t) });
                }
                let next = action.successor(&cur);
                actor.beliefs.push(Belief {
                    owner: ObserverId::Actor,
                    time: t + 1,
                    states: BTreeSet::from([next.clone()]),
                });
                actor.symbols.push(Some(action.name.clone()));
                for (m, tr) in sensors.iter().zip(observers.iter_mut()) {
                    let o = observe(m, a, &next);
                    let b = belief_update(domain, m, tr.beliefs.last().expect("non-empty"), o);
                    tr.beliefs.push(b);
                    tr.symbols.push(Some(m.symbol_name(o).to_string()));
                }
                states.push(next);
            }
        }
    }
    let mut all = vec![actor];
    all.extend(observers);
    Ok(BeliefTrace { states, steps: steps.to_vec(), observers: all })
}

/// Traces for a batch of independent plans.
pub fn run_traces(
    domain: &PlanningDomain,
    sensors: &[SensorModel],
    plans: &[Plan],
    exec: Execution,
) -> Vec<Result<BeliefTrace, ModelError>> {
    par::map(exec, plans, |p| run_trace(domain, sensors, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ActionSpec;

    fn line() -> PlanningDomain {
        // a -> b -> c on a line, with a self-loop `wait`.
        PlanningDomain::new(
            ["a", "b", "c"],
            [
                ActionSpec::new("ab").pre(["a"]).add(["b"]).del(["a"]),
                ActionSpec::new("bc").pre(["b"]).add(["c"]).del(["b"]),
                ActionSpec::new("ba").pre(["b"]).add(["a"]).del(["b"]),
                ActionSpec::new("wait"),
            ],
            ["a"],
        )
        .unwrap()
    }

    fn coarse(d: &PlanningDomain) -> SensorModel {
        SensorModel::new(
            d,
            ObserverId::Adversary,
            vec![SensorRule::on_actions(["wait"], "idle")],
            Some("move".into()),
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn catchall_is_mandatory() {
        let d = line();
        let err = SensorModel::new(&d, ObserverId::Adversary, vec![], None, vec![]).unwrap_err();
        assert_eq!(err, SensorError::MissingCatchall { observer: 'X' });
    }

    #[test]
    fn single_catchall_emits_everywhere() {
        let d = line();
        let m = SensorModel::new(&d, ObserverId::Cooperative, vec![], Some("blip".into()), vec![]).unwrap();
        for (a, s) in d.successors(d.initial()) {
            assert_eq!(m.symbol_name(observe(&m, a, &s)), "blip");
        }
    }

    #[test]
    fn shadowed_rule_rejected() {
        let d = line();
        let rules = vec![SensorRule::on_actions(["a*", "b*"], "p"), SensorRule::on_actions(["ab"], "q")];
        let err = SensorModel::new(&d, ObserverId::Adversary, rules, Some("r".into()), vec![]).unwrap_err();
        assert!(matches!(err, SensorError::ShadowedRule { earlier: 0, later: 1, .. }));
        // A narrower state pattern on the later rule is still shadowed; a
        // narrower one on the earlier rule is not.
        let ok = vec![SensorRule::on_actions(["ab"], "p").with_state(["b"]), SensorRule::on_actions(["ab"], "q")];
        assert!(SensorModel::new(&d, ObserverId::Adversary, ok, Some("r".into()), vec![]).is_ok());
    }

    #[test]
    fn state_patterns_and_first_match() {
        let d = line();
        let rules = vec![SensorRule::on_actions(Vec::<String>::new(), "at-c").with_state(["c"])];
        let m = SensorModel::new(&d, ObserverId::Adversary, rules, Some("else".into()), vec![]).unwrap();
        let c = d.state(["c"]).unwrap();
        let b = d.state(["b"]).unwrap();
        assert_eq!(m.symbol_name(m.interpret(1, &c)), "at-c");
        assert_eq!(m.symbol_name(m.interpret(0, &b)), "else");
    }

    #[test]
    fn misreport_changes_emission_only() {
        let d = line();
        let m = SensorModel::new(
            &d,
            ObserverId::Adversary,
            vec![SensorRule::on_actions(["wait"], "idle")],
            Some("move".into()),
            vec![SensorRule::on_actions(["ab"], "idle")],
        )
        .unwrap();
        let b = d.state(["b"]).unwrap();
        assert_eq!(m.symbol_name(m.interpret(0, &b)), "move");
        assert_eq!(m.symbol_name(m.emit(0, &b)), "idle");
        // The observer then believes the actor waited and excludes the truth.
        let tr = run_trace(&d, &[m], &Plan::new(vec![0])).unwrap();
        let x = tr.observer(ObserverId::Adversary).unwrap();
        assert!(!x.final_belief().contains(&b));
        assert!(x.final_belief().contains(d.initial()));
    }

    #[test]
    fn belief_update_enumerates_matching_successors() {
        let d = line();
        let m = coarse(&d);
        let b0 = Belief::initial(ObserverId::Adversary, &d);
        let mv = m.symbol_id("move").unwrap();
        let b1 = belief_update(&d, &m, &b0, mv);
        assert_eq!(b1.states, BTreeSet::from([d.state(["b"]).unwrap()]));
        let b2 = belief_update(&d, &m, &b1, mv);
        assert_eq!(b2.states, BTreeSet::from([d.state(["a"]).unwrap(), d.state(["c"]).unwrap()]));
        assert_eq!(b2.time, 2);
    }

    #[test]
    fn empty_plan_trace_is_initial() {
        let d = line();
        let tr = run_trace(&d, &[coarse(&d)], &Plan::default()).unwrap();
        assert_eq!(tr.observers.len(), 2);
        for o in &tr.observers {
            assert_eq!(o.beliefs, vec![Belief::initial(o.observer, &d)]);
        }
    }

    #[test]
    fn padding_freezes_beliefs() {
        let d = line();
        let tr = run_trace_padded(&d, &[coarse(&d)], &[Some(0), None, Some(1)]).unwrap();
        let x = tr.observer(ObserverId::Adversary).unwrap();
        assert_eq!(x.beliefs[1].states, x.beliefs[2].states);
        assert_eq!(x.symbols[1], None);
        assert_eq!(tr.states[1], tr.states[2]);
    }

    #[test]
    fn actor_trace_is_singleton_truth() {
        let d = line();
        let plan = Plan::new(vec![0, 2, 0, 1]);
        let tr = run_trace(&d, &[coarse(&d)], &plan).unwrap();
        let a = tr.observer(ObserverId::Actor).unwrap();
        for (t, b) in a.beliefs.iter().enumerate() {
            assert_eq!(b.states, BTreeSet::from([tr.states[t].clone()]));
        }
    }

    #[test]
    fn possible_goals_of_initial() {
        let d = line();
        let goals = CandidateGoalSet::unlabelled(vec![d.state(["c"]).unwrap(), d.state(["b"]).unwrap()], 0).unwrap();
        let b0 = Belief::initial(ObserverId::Cooperative, &d);
        assert!(possible_goals(&b0, &goals).is_empty());
        let empty = Belief { owner: ObserverId::Cooperative, time: 0, states: BTreeSet::new() };
        assert!(possible_goals(&empty, &goals).is_empty());
    }

    #[test]
    fn trace_lines_format() {
        let d = line();
        let goals = CandidateGoalSet::unlabelled(vec![d.state(["b"]).unwrap()], 0).unwrap();
        let tr = run_trace(&d, &[coarse(&d)], &Plan::new(vec![0])).unwrap();
        assert_eq!(tr.to_lines(&goals), "0 A - 1 -\n0 X - 1 -\n1 A ab 1 0\n1 X move 1 0\n");
    }
}
