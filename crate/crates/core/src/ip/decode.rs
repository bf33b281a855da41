use super::model::{IpModel, VarKind};
use crate::error::DecodeError;
use crate::model::{ActionId, Plan};
use crate::observer::{possible_goals, run_trace_padded, BeliefTrace, ObserverId};
use crate::problem::ProblemFile;

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    /// Executed actions in order, padding removed.
    pub plan: Plan,
    /// One entry per time step, `None` for padding.
    pub steps: Vec<Option<ActionId>>,
    pub trace: BeliefTrace,
    pub goals_x: Vec<usize>,
    pub goals_c: Vec<usize>,
    /// `β|goals_C| − (1−β)|goals_X|`, recomputed from the trace.
    pub objective: f64,
}

/// Reads the plan out of an assignment, replays it, and checks every
/// observation, belief and goal variable against the replay.
pub fn decode(p: &ProblemFile, m: &IpModel, assignment: &[bool]) -> Result<Decoded, DecodeError> {
    if assignment.len() != m.num_vars() {
        return Err(DecodeError::Length { got: assignment.len(), expected: m.num_vars() });
    }
    let horizon = m
        .info
        .as_ref()
        .map(|i| i.horizon)
        .ok_or_else(|| DecodeError::Soundness("model carries no encoding info".into()))?;

    let mut steps: Vec<Option<ActionId>> = vec![None; horizon];
    for (v, kind) in m.vars.iter().enumerate() {
        if let (VarKind::Action { action, t }, true) = (*kind, assignment[v]) {
            if steps[t - 1].replace(action).is_some() {
                return Err(DecodeError::MultipleActions(t));
            }
        }
    }
    let trace = run_trace_padded(&p.domain, &p.sensors, &steps)?;
    let sensor = |id: ObserverId| p.sensor(id).expect("encoded observers have sensors");

    // Count of 1-valued belief variables per (observer, t), to catch states
    // the model believes but the replay does not.
    let mut b_ones: std::collections::HashMap<(ObserverId, usize), usize> = Default::default();
    let mismatch = |what: String| Err(DecodeError::Soundness(what));
    for (v, kind) in m.vars.iter().enumerate() {
        let val = assignment[v];
        match *kind {
            VarKind::State { state, t } => {
                if val != (trace.states[t] == m.states[state]) {
                    return mismatch(format!("{kind} = {val} disagrees with the replayed state"));
                }
            }
            VarKind::Obs { observer, symbol, t } => {
                let o = trace.observer(observer).expect("traced");
                let got = o.symbols[t - 1].as_deref() == Some(sensor(observer).symbol_name(symbol));
                if val != got {
                    return mismatch(format!("{kind} = {val} disagrees with the emitted symbol"));
                }
            }
            VarKind::Belief { observer, state, t } => {
                let o = trace.observer(observer).expect("traced");
                if val != o.beliefs[t].contains(&m.states[state]) {
                    return mismatch(format!("{kind} = {val} disagrees with the replayed belief"));
                }
                *b_ones.entry((observer, t)).or_default() += val as usize;
            }
            VarKind::Goal { observer, goal } => {
                let o = trace.observer(observer).expect("traced");
                let got = possible_goals(o.final_belief(), &p.goals).contains(&goal);
                if val != got {
                    return mismatch(format!("{kind} = {val} disagrees with the replayed goals"));
                }
            }
            _ => {}
        }
    }
    for (&(observer, t), &ones) in &b_ones {
        let len = trace.observer(observer).expect("traced").beliefs[t].len();
        if ones != len {
            return mismatch(format!(
                "observer {observer} at t={t}: {ones} belief variables set, replay has {len} states"
            ));
        }
    }

    let goals_x = trace.final_goals(ObserverId::Adversary, &p.goals);
    let goals_c = trace.final_goals(ObserverId::Cooperative, &p.goals);
    let objective = m.beta * goals_c.len() as f64 - (1.0 - m.beta) * goals_x.len() as f64;
    let plan = Plan::new(steps.iter().flatten().copied().collect());
    Ok(Decoded { plan, steps, trace, goals_x, goals_c, objective })
}

/// The assignment a padded plan induces: the inverse of [`decode`]. Fails
/// when the plan touches a state or action the model has no variable for.
pub fn assignment_for(p: &ProblemFile, m: &IpModel, steps: &[Option<ActionId>]) -> Result<Vec<bool>, DecodeError> {
    use super::model::AuxKind;
    let trace = run_trace_padded(&p.domain, &p.sensors, steps)?;
    let horizon = m.info.as_ref().map_or(0, |i| i.horizon);
    if steps.len() != horizon {
        return Err(DecodeError::Length { got: steps.len(), expected: horizon });
    }
    let sensor = |id: ObserverId| p.sensor(id).expect("encoded observers have sensors");
    let believes =
        |id: ObserverId, s: usize, t: usize| trace.observer(id).expect("traced").beliefs[t].contains(&m.states[s]);
    let mut x_set = vec![false; horizon + 1];
    let values: Vec<bool> = m
        .vars
        .iter()
        .map(|kind| match *kind {
            VarKind::Action { action, t } => {
                let on = steps[t - 1] == Some(action);
                x_set[t] |= on;
                on
            }
            VarKind::State { state, t } => trace.states[t] == m.states[state],
            VarKind::Obs { observer, symbol, t } => {
                trace.observer(observer).expect("traced").symbols[t - 1].as_deref()
                    == Some(sensor(observer).symbol_name(symbol))
            }
            VarKind::Belief { observer, state, t } => believes(observer, state, t),
            VarKind::Applicable { observer, state, action, t } => {
                let o = trace.observer(observer).expect("traced");
                let Some(sym) = o.symbols[t - 1].as_deref() else { return false };
                let next = p.domain.action(action).successor(&m.states[state]);
                believes(observer, state, t - 1)
                    && sensor(observer).symbol_name(sensor(observer).interpret(action, &next)) == sym
            }
            VarKind::Goal { observer, goal } => trace.final_goals(observer, &p.goals).contains(&goal),
            VarKind::Aux(AuxKind::Pad { t }) => steps[t - 1].is_none(),
            VarKind::Aux(AuxKind::Transition { state, action, t }) => {
                steps[t - 1] == Some(action) && trace.states[t - 1] == m.states[state]
            }
            VarKind::Aux(AuxKind::Frame { state, t }) => {
                steps[t - 1].is_none() && trace.states[t - 1] == m.states[state]
            }
            VarKind::Aux(AuxKind::BeliefFrame { observer, state, t }) => {
                steps[t - 1].is_none() && believes(observer, state, t - 1)
            }
            VarKind::Aux(AuxKind::Free { .. }) => false,
        })
        .collect();
    for (t, step) in steps.iter().enumerate() {
        if step.is_some() && !x_set[t + 1] {
            return Err(DecodeError::Soundness(format!("no variable for the action at step {}", t + 1)));
        }
    }
    Ok(values)
}
