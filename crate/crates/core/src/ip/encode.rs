use std::collections::{HashMap, VecDeque};

use super::model::{AuxKind, Cmp, EncodingInfo, IpModel, StateIdx, VarId, VarKind};
use crate::error::EncodeError;
use crate::model::{satisfies, ActionId, State};
use crate::observer::{ObserverId, SensorModel};
use crate::problem::ProblemFile;

pub const DEFAULT_STATE_CAP: usize = 20_000;

#[derive(Debug, Clone, PartialEq)]
pub struct EncodeOptions {
    /// Adversary must keep at least `k` goals possible.
    pub k_obfuscation: Option<usize>,
    /// Cooperator may see at most `j` goals possible.
    pub j_legibility: Option<usize>,
    /// Forbid the true goal from the adversary's final belief.
    pub exploit_error: bool,
    /// Overrides the problem file's `beta`.
    pub beta: Option<f64>,
    pub state_cap: usize,
    /// `y[s,t] <= b[i,s,t]` for observers whose sensor never misreports.
    /// Valid because the true state is always believed possible by such an
    /// observer; tightens the objective bound considerably.
    pub belief_sound_cuts: bool,
    /// Padding steps only after the last action. Every padded plan has a
    /// trailing-padded twin with identical beliefs.
    pub trailing_padding: bool,
    /// Restrict actor state variables to states that can still reach the
    /// true goal in the remaining steps.
    pub prune_actor: bool,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions {
            k_obfuscation: None,
            j_legibility: None,
            exploit_error: false,
            beta: None,
            state_cap: DEFAULT_STATE_CAP,
            belief_sound_cuts: true,
            trailing_padding: true,
            prune_actor: true,
        }
    }
}

/// States reachable from the initial state within the horizon, with their
/// BFS depth and the transitions out of every non-frontier state.
pub(crate) struct Reachable {
    pub states: Vec<State>,
    pub depth: Vec<usize>,
    pub edges: Vec<Vec<(ActionId, StateIdx)>>,
}

pub(crate) fn explore(p: &ProblemFile, horizon: usize, cap: usize) -> Result<Reachable, EncodeError> {
    let d = &p.domain;
    let mut index: HashMap<State, StateIdx> = HashMap::new();
    let mut layers: Vec<Vec<State>> = vec![vec![d.initial().clone()]];
    index.insert(d.initial().clone(), 0);
    let mut count = 1;
    for _ in 0..horizon {
        let mut next: Vec<State> = Vec::new();
        for s in layers.last().expect("non-empty") {
            for (_, succ) in d.successors(s) {
                if !index.contains_key(&succ) {
                    index.insert(succ.clone(), usize::MAX);
                    next.push(succ);
                    count += 1;
                    if count > cap {
                        return Err(EncodeError::Capacity { cap, horizon });
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort();
        layers.push(next);
    }

    let mut states = Vec::with_capacity(count);
    let mut depth = Vec::with_capacity(count);
    for (k, layer) in layers.into_iter().enumerate() {
        for s in layer {
            depth.push(k);
            states.push(s);
        }
    }
    for (i, s) in states.iter().enumerate() {
        index.insert(s.clone(), i);
    }
    let edges = states
        .iter()
        .zip(&depth)
        .map(|(s, &k)| {
            if k >= horizon {
                return Vec::new();
            }
            d.successors(s).map(|(a, succ)| (a, index[&succ])).collect()
        })
        .collect();
    Ok(Reachable { states, depth, edges })
}

/// Breadth-first closure of the states reachable within `horizon` steps,
/// ordered by BFS layer and then lexicographically.
pub fn reachable_states(p: &ProblemFile, horizon: usize, cap: usize) -> Result<Vec<State>, EncodeError> {
    Ok(explore(p, horizon, cap)?.states)
}

/// Steps needed from each state to reach a state satisfying `goal`, over
/// the reachable graph; `usize::MAX` if never.
fn distance_to(r: &Reachable, goal: &State) -> Vec<usize> {
    let n = r.states.len();
    let mut rev: Vec<Vec<StateIdx>> = vec![Vec::new(); n];
    for (s, out) in r.edges.iter().enumerate() {
        for &(_, t) in out {
            rev[t].push(s);
        }
    }
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for (i, s) in r.states.iter().enumerate() {
        if satisfies(s, goal) {
            dist[i] = 0;
            queue.push_back(i);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &u in &rev[v] {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    dist
}

fn check_bound(name: &'static str, value: Option<usize>, goals: usize) -> Result<(), EncodeError> {
    match value {
        Some(v) if v < 1 || v > goals => Err(EncodeError::Bounds { name, value: v, goals }),
        _ => Ok(()),
    }
}

/// Per-observer data used while emitting rows.
struct Obs<'a> {
    id: ObserverId,
    m: &'a SensorModel,
    /// `b[t][s]`.
    b: Vec<Vec<Option<VarId>>>,
}

/// Compiles `p` at horizon `horizon` into a 0/1 program.
///
/// Variables are created t-major and, within a step, in the kind order
/// `x < y < w < b < h < g < z`, which is also the solver's branching order.
pub fn encode(p: &ProblemFile, horizon: usize, opts: &EncodeOptions) -> Result<IpModel, EncodeError> {
    let beta = opts.beta.or(p.beta).unwrap_or(0.5);
    if !(0.0..=1.0).contains(&beta) {
        return Err(EncodeError::Beta(beta));
    }
    let n_goals = p.goals.len();
    check_bound("k", opts.k_obfuscation, n_goals)?;
    check_bound("j", opts.j_legibility, n_goals)?;
    let (Some(mc), Some(mx)) = (p.sensor(ObserverId::Cooperative), p.sensor(ObserverId::Adversary)) else {
        return Err(EncodeError::MissingObserver);
    };

    let r = explore(p, horizon, opts.state_cap)?;
    let n = r.states.len();
    let t_max = horizon;
    let in_f = |s: StateIdx, t: usize| r.depth[s] <= t;
    let dist = distance_to(&r, p.goals.true_goal());
    let in_y = |s: StateIdx, t: usize| in_f(s, t) && (!opts.prune_actor || dist[s] <= t_max - t);
    if !in_y(0, 0) {
        return Err(EncodeError::GoalUnreachable(horizon));
    }

    let mut m = IpModel::empty();
    m.beta = beta;
    let mut obs = [
        Obs { id: ObserverId::Cooperative, m: mc, b: Vec::new() },
        Obs { id: ObserverId::Adversary, m: mx, b: Vec::new() },
    ];

    // t = 0
    let mut y: Vec<Vec<Option<VarId>>> = Vec::with_capacity(t_max + 1);
    let mut row0 = vec![None; n];
    row0[0] = Some(m.add_var(VarKind::State { state: 0, t: 0 }));
    y.push(row0);
    for o in &mut obs {
        let mut row = vec![None; n];
        row[0] = Some(m.add_var(VarKind::Belief { observer: o.id, state: 0, t: 0 }));
        o.b.push(row);
    }
    m.add_constraint(vec![(y[0][0].unwrap(), 1.0)], Cmp::Eq, 1.0, "Eq.2");
    for o in &obs {
        m.add_constraint(vec![(o.b[0][0].unwrap(), 1.0)], Cmp::Eq, 1.0, "Eq.5");
    }
    if opts.belief_sound_cuts {
        for o in obs.iter().filter(|o| !o.m.has_misreports()) {
            m.add_constraint(vec![(y[0][0].unwrap(), 1.0), (o.b[0][0].unwrap(), -1.0)], Cmp::Le, 0.0, "BeliefSound");
        }
    }

    let mut prev_pad: Option<VarId> = None;
    let mut g_vars: Vec<(ObserverId, usize, VarId)> = Vec::new();

    for t in 1..=t_max {
        // Actor transitions surviving the reachability/goal-distance filter.
        let mut trans: Vec<(StateIdx, ActionId, StateIdx)> = Vec::new();
        for s in (0..n).filter(|&s| y[t - 1][s].is_some()) {
            for &(a, s2) in &r.edges[s] {
                if in_y(s2, t) {
                    trans.push((s, a, s2));
                }
            }
        }
        let mut acts: Vec<ActionId> = trans.iter().map(|&(_, a, _)| a).collect();
        acts.sort_unstable();
        acts.dedup();

        // x
        let x: HashMap<ActionId, VarId> =
            acts.iter().map(|&a| (a, m.add_var(VarKind::Action { action: a, t }))).collect();
        // y
        let mut yt = vec![None; n];
        for (s, slot) in yt.iter_mut().enumerate() {
            if in_y(s, t) {
                *slot = Some(m.add_var(VarKind::State { state: s, t }));
            }
        }
        y.push(yt);
        // w
        let w: Vec<Vec<VarId>> = obs
            .iter()
            .map(|o| {
                (0..o.m.alphabet().len())
                    .map(|sym| m.add_var(VarKind::Obs { observer: o.id, symbol: sym, t }))
                    .collect()
            })
            .collect();
        // b
        for o in &mut obs {
            let mut row = vec![None; n];
            for (s, slot) in row.iter_mut().enumerate() {
                if in_f(s, t) {
                    *slot = Some(m.add_var(VarKind::Belief { observer: o.id, state: s, t }));
                }
            }
            o.b.push(row);
        }
        // h: every transition out of the previous belief layer.
        let mut h: Vec<Vec<(StateIdx, ActionId, StateIdx, VarId)>> = Vec::new();
        for o in &obs {
            let mut hs = Vec::new();
            for s in (0..n).filter(|&s| in_f(s, t - 1)) {
                for &(a, s2) in &r.edges[s] {
                    let v = m.add_var(VarKind::Applicable { observer: o.id, state: s, action: a, t });
                    hs.push((s, a, s2, v));
                }
            }
            h.push(hs);
        }
        // g
        if t == t_max {
            for o in &obs {
                for gi in 0..n_goals {
                    g_vars.push((o.id, gi, m.add_var(VarKind::Goal { observer: o.id, goal: gi })));
                }
            }
        }
        // z
        let pad = m.add_var(VarKind::Aux(AuxKind::Pad { t }));
        let tr: Vec<VarId> = trans
            .iter()
            .map(|&(s, a, _)| m.add_var(VarKind::Aux(AuxKind::Transition { state: s, action: a, t })))
            .collect();
        let mut fr = vec![None; n];
        for s in (0..n).filter(|&s| y[t - 1][s].is_some() && y[t][s].is_some()) {
            fr[s] = Some(m.add_var(VarKind::Aux(AuxKind::Frame { state: s, t })));
        }
        let bfr: Vec<Vec<Option<VarId>>> = obs
            .iter()
            .map(|o| {
                (0..n)
                    .map(|s| {
                        o.b[t - 1][s]
                            .map(|_| m.add_var(VarKind::Aux(AuxKind::BeliefFrame { observer: o.id, state: s, t })))
                    })
                    .collect()
            })
            .collect();

        // One action or a padding step.
        let xs: Vec<(VarId, f64)> = acts.iter().map(|a| (x[a], 1.0)).collect();
        if !xs.is_empty() {
            m.add_constraint(xs.clone(), Cmp::Le, 1.0, "Eq.17");
        }
        let mut row = xs;
        row.push((pad, 1.0));
        m.add_constraint(row, Cmp::Eq, 1.0, "Pad");
        if opts.trailing_padding {
            if let Some(pp) = prev_pad {
                m.add_constraint(vec![(pp, 1.0), (pad, -1.0)], Cmp::Le, 0.0, "PadTrailing");
            }
        }
        prev_pad = Some(pad);

        // Applicability.
        for &a in &acts {
            let action = p.domain.action(a);
            let mut row = vec![(x[&a], 1.0)];
            for s in (0..n).filter(|&s| y[t - 1][s].is_some() && action.is_applicable(&r.states[s])) {
                row.push((y[t - 1][s].unwrap(), -1.0));
            }
            m.add_constraint(row, Cmp::Le, 0.0, "Eq.8");
        }

        // Transition products.
        let mut into: Vec<Vec<VarId>> = vec![Vec::new(); n];
        let mut by_action: HashMap<ActionId, Vec<VarId>> = HashMap::new();
        for (&(s, a, s2), &z) in trans.iter().zip(&tr) {
            product(&mut m, z, x[&a], y[t - 1][s].unwrap());
            m.add_constraint(vec![(z, 1.0), (y[t][s2].unwrap(), -1.0)], Cmp::Le, 0.0, "Eq.10");
            into[s2].push(z);
            by_action.entry(a).or_default().push(z);
        }
        for &a in &acts {
            let mut row = vec![(x[&a], 1.0)];
            row.extend(by_action[&a].iter().map(|&z| (z, -1.0)));
            m.add_constraint(row, Cmp::Eq, 0.0, "Eq.10");
        }
        for s in 0..n {
            if let Some(ys) = y[t - 1][s] {
                match fr[s] {
                    Some(f) => {
                        product(&mut m, f, ys, pad);
                        m.add_constraint(vec![(f, 1.0), (y[t][s].unwrap(), -1.0)], Cmp::Le, 0.0, "Frame");
                    }
                    // The state cannot be kept: it would miss the goal.
                    None => m.add_constraint(vec![(ys, 1.0), (pad, 1.0)], Cmp::Le, 1.0, "Frame"),
                }
            }
        }
        for s2 in 0..n {
            if let Some(ys2) = y[t][s2] {
                let mut row = vec![(ys2, 1.0)];
                row.extend(into[s2].iter().map(|&z| (z, -1.0)));
                if let Some(f) = fr[s2] {
                    row.push((f, -1.0));
                }
                m.add_constraint(row, Cmp::Le, 0.0, "Eq.9");
            }
        }
        let ys: Vec<(VarId, f64)> = y[t].iter().flatten().map(|&v| (v, 1.0)).collect();
        m.add_constraint(ys, Cmp::Eq, 1.0, "OneHot");

        // Observations: emitted symbol of the executed transition.
        for (oi, o) in obs.iter().enumerate() {
            let mut by_sym: Vec<Vec<VarId>> = vec![Vec::new(); o.m.alphabet().len()];
            for (&(_, a, s2), &z) in trans.iter().zip(&tr) {
                by_sym[o.m.emit(a, &r.states[s2])].push(z);
            }
            for (sym, zs) in by_sym.into_iter().enumerate() {
                let mut row = vec![(w[oi][sym], 1.0)];
                row.extend(zs.into_iter().map(|z| (z, -1.0)));
                m.add_constraint(row, Cmp::Eq, 0.0, "Eq.11");
            }
        }

        // Belief update: interpreted symbol through the observer's model.
        for (oi, o) in obs.iter().enumerate() {
            let mut into_b: Vec<Vec<VarId>> = vec![Vec::new(); n];
            for &(s, a, s2, hv) in &h[oi] {
                let bp = o.b[t - 1][s].unwrap();
                let bn = o.b[t][s2].unwrap();
                let wm = w[oi][o.m.interpret(a, &r.states[s2])];
                m.add_constraint(vec![(bp, 1.0), (wm, 1.0), (hv, -1.0)], Cmp::Le, 1.0, "Eq.12");
                m.add_constraint(vec![(hv, 1.0), (bp, -1.0)], Cmp::Le, 0.0, "Eq.13");
                m.add_constraint(vec![(hv, 1.0), (wm, -1.0)], Cmp::Le, 0.0, "Eq.14");
                m.add_constraint(vec![(hv, 1.0), (bn, -1.0)], Cmp::Le, 0.0, "Eq.15");
                into_b[s2].push(hv);
            }
            for (s, f) in bfr[oi].iter().enumerate() {
                if let Some(f) = *f {
                    product(&mut m, f, o.b[t - 1][s].unwrap(), pad);
                    m.add_constraint(vec![(f, 1.0), (o.b[t][s].unwrap(), -1.0)], Cmp::Le, 0.0, "BeliefFrame");
                }
            }
            for s2 in 0..n {
                if let Some(bn) = o.b[t][s2] {
                    let mut row = vec![(bn, 1.0)];
                    row.extend(into_b[s2].iter().map(|&hv| (hv, -1.0)));
                    if let Some(f) = bfr[oi][s2] {
                        row.push((f, -1.0));
                    }
                    m.add_constraint(row, Cmp::Le, 0.0, "Eq.16");
                }
            }
        }
        if opts.belief_sound_cuts {
            for o in obs.iter().filter(|o| !o.m.has_misreports()) {
                for (s, ys) in y[t].iter().enumerate() {
                    if let Some(ys) = *ys {
                        m.add_constraint(vec![(ys, 1.0), (o.b[t][s].unwrap(), -1.0)], Cmp::Le, 0.0, "BeliefSound");
                    }
                }
            }
        }
    }

    // Goal rows at the horizon. With a zero horizon the goal variables have
    // not been created yet.
    if t_max == 0 {
        for o in &obs {
            for gi in 0..n_goals {
                g_vars.push((o.id, gi, m.add_var(VarKind::Goal { observer: o.id, goal: gi })));
            }
        }
    }
    let true_goal = p.goals.true_goal();
    let row: Vec<(VarId, f64)> =
        (0..n).filter_map(|s| y[t_max][s].filter(|_| satisfies(&r.states[s], true_goal)).map(|v| (v, 1.0))).collect();
    if row.is_empty() {
        return Err(EncodeError::GoalUnreachable(horizon));
    }
    m.add_constraint(row, Cmp::Ge, 1.0, "Eq.4");

    for &(oid, gi, gv) in &g_vars {
        let o = obs.iter().find(|o| o.id == oid).expect("observer");
        let goal = &p.goals.goals()[gi];
        let sat: Vec<VarId> = (0..n).filter_map(|s| o.b[t_max][s].filter(|_| satisfies(&r.states[s], goal))).collect();
        for &bv in &sat {
            m.add_constraint(vec![(gv, 1.0), (bv, -1.0)], Cmp::Ge, 0.0, "Eq.7");
        }
        let mut row = vec![(gv, 1.0)];
        row.extend(sat.iter().map(|&bv| (bv, -1.0)));
        m.add_constraint(row, Cmp::Le, 0.0, "Eq.7");
    }

    // A sound observer always believes the true final state, which
    // satisfies the true goal.
    if opts.belief_sound_cuts {
        for &(oid, gi, gv) in &g_vars {
            let o = obs.iter().find(|o| o.id == oid).expect("observer");
            if gi == p.goals.true_goal_index() && !o.m.has_misreports() {
                m.add_constraint(vec![(gv, 1.0)], Cmp::Eq, 1.0, "BeliefSound");
            }
        }
    }

    let gx: Vec<(VarId, f64)> = g_vars.iter().filter(|g| g.0 == ObserverId::Adversary).map(|g| (g.2, 1.0)).collect();
    let gc: Vec<(VarId, f64)> = g_vars.iter().filter(|g| g.0 == ObserverId::Cooperative).map(|g| (g.2, 1.0)).collect();
    if let Some(k) = opts.k_obfuscation {
        m.add_constraint(gx.clone(), Cmp::Ge, k as f64, "Eq.18");
    }
    if let Some(j) = opts.j_legibility {
        m.add_constraint(gc.clone(), Cmp::Le, j as f64, "Eq.19");
    }
    if opts.exploit_error {
        m.add_constraint(vec![(gx[p.goals.true_goal_index()].0, 1.0)], Cmp::Eq, 0.0, "Eq.20");
    }

    m.objective = gc.iter().map(|&(v, _)| (v, beta)).chain(gx.iter().map(|&(v, _)| (v, beta - 1.0))).collect();
    m.objective.retain(|(_, c)| *c != 0.0);
    m.states = r.states;
    m.info = Some(EncodingInfo {
        horizon,
        observers: vec![ObserverId::Cooperative, ObserverId::Adversary],
        exploit_error: opts.exploit_error,
    });
    Ok(m)
}

/// `z = u·v` for binaries.
fn product(m: &mut IpModel, z: VarId, u: VarId, v: VarId) {
    m.add_constraint(vec![(z, 1.0), (u, -1.0)], Cmp::Le, 0.0, "Lin");
    m.add_constraint(vec![(z, 1.0), (v, -1.0)], Cmp::Le, 0.0, "Lin");
    m.add_constraint(vec![(z, 1.0), (u, -1.0), (v, -1.0)], Cmp::Ge, -1.0, "Lin");
}
