use std::fmt;

use crate::model::{ActionId, State};
use crate::observer::{ObserverId, SymbolId};

pub type VarId = usize;
/// Index into [`IpModel::states`].
pub type StateIdx = usize;

/// What a binary variable stands for. Time indices follow the encoding:
/// actions live on steps `1..=T`, states and beliefs on `0..=T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    /// `x`: action taken at step `t`.
    Action {
        action: ActionId,
        t: usize,
    },
    /// `y`: the actor is in state `s` at time `t`.
    State {
        state: StateIdx,
        t: usize,
    },
    /// `w`: observer receives `symbol` at step `t`.
    Obs {
        observer: ObserverId,
        symbol: SymbolId,
        t: usize,
    },
    /// `b`: state `s` is in the observer's belief at time `t`.
    Belief {
        observer: ObserverId,
        state: StateIdx,
        t: usize,
    },
    /// `h`: the observer's belief transition `state --action-->` is live at step `t`.
    Applicable {
        observer: ObserverId,
        state: StateIdx,
        action: ActionId,
        t: usize,
    },
    /// `g`: candidate goal is possible in the observer's final belief.
    Goal {
        observer: ObserverId,
        goal: usize,
    },
    Aux(AuxKind),
}

/// Auxiliary variables introduced by linearisation and padding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AuxKind {
    /// No action at step `t`.
    Pad { t: usize },
    /// `x[a,t] · y[s,t-1]`: the actor executes `a` from `s` at step `t`.
    Transition { state: StateIdx, action: ActionId, t: usize },
    /// `y[s,t-1] · pad[t]`.
    Frame { state: StateIdx, t: usize },
    /// `b[i,s,t-1] · pad[t]`.
    BeliefFrame { observer: ObserverId, state: StateIdx, t: usize },
    /// Unstructured variable for hand-built models.
    Free { index: usize },
}

impl VarKind {
    /// Time index used for branching order; goal variables sit at the
    /// horizon.
    pub fn time(&self, horizon: usize) -> usize {
        match *self {
            VarKind::Action { t, .. }
            | VarKind::State { t, .. }
            | VarKind::Obs { t, .. }
            | VarKind::Belief { t, .. }
            | VarKind::Applicable { t, .. } => t,
            VarKind::Goal { .. } => horizon,
            VarKind::Aux(a) => match a {
                AuxKind::Pad { t }
                | AuxKind::Transition { t, .. }
                | AuxKind::Frame { t, .. }
                | AuxKind::BeliefFrame { t, .. } => t,
                AuxKind::Free { .. } => 0,
            },
        }
    }

    /// Kind rank `x < y < w < b < h < g < z`.
    pub fn rank(&self) -> u8 {
        match self {
            VarKind::Action { .. } => 0,
            VarKind::State { .. } => 1,
            VarKind::Obs { .. } => 2,
            VarKind::Belief { .. } => 3,
            VarKind::Applicable { .. } => 4,
            VarKind::Goal { .. } => 5,
            VarKind::Aux(_) => 6,
        }
    }
}

impl fmt::Display for VarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            VarKind::Action { action, t } => write!(f, "x_a{action}_t{t}"),
            VarKind::State { state, t } => write!(f, "y_s{state}_t{t}"),
            VarKind::Obs { observer, symbol, t } => write!(f, "w_{observer}_o{symbol}_t{t}"),
            VarKind::Belief { observer, state, t } => write!(f, "b_{observer}_s{state}_t{t}"),
            VarKind::Applicable { observer, state, action, t } => write!(f, "h_{observer}_s{state}_a{action}_t{t}"),
            VarKind::Goal { observer, goal } => write!(f, "g_{observer}_G{goal}"),
            VarKind::Aux(AuxKind::Pad { t }) => write!(f, "z_pad_t{t}"),
            VarKind::Aux(AuxKind::Transition { state, action, t }) => write!(f, "z_tr_s{state}_a{action}_t{t}"),
            VarKind::Aux(AuxKind::Frame { state, t }) => write!(f, "z_fr_s{state}_t{t}"),
            VarKind::Aux(AuxKind::BeliefFrame { observer, state, t }) => write!(f, "z_bfr_{observer}_s{state}_t{t}"),
            VarKind::Aux(AuxKind::Free { index }) => write!(f, "z_v{index}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Cmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cmp::Le => "<=",
            Cmp::Ge => ">=",
            Cmp::Eq => "=",
        })
    }
}

/// `Σ coef·var  cmp  rhs`, tagged with the equation family it encodes.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub terms: Vec<(VarId, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
    pub tag: &'static str,
}

impl LinearConstraint {
    pub fn activity(&self, assignment: &[bool]) -> f64 {
        self.terms.iter().filter(|(v, _)| assignment[*v]).map(|(_, c)| c).sum()
    }

    pub fn is_satisfied(&self, assignment: &[bool]) -> bool {
        const EPS: f64 = 1e-9;
        let lhs = self.activity(assignment);
        match self.cmp {
            Cmp::Le => lhs <= self.rhs + EPS,
            Cmp::Ge => lhs >= self.rhs - EPS,
            Cmp::Eq => (lhs - self.rhs).abs() <= EPS,
        }
    }
}

/// Problem data the decoder needs to map an assignment back to a plan.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingInfo {
    pub horizon: usize,
    pub observers: Vec<ObserverId>,
    pub exploit_error: bool,
}

/// A pure 0/1 linear program: minimise `objective` subject to `constraints`.
#[derive(Debug, Clone, PartialEq)]
pub struct IpModel {
    pub vars: Vec<VarKind>,
    pub constraints: Vec<LinearConstraint>,
    pub objective: Vec<(VarId, f64)>,
    pub beta: f64,
    /// Reachable states referenced by `StateIdx`, in BFS-layer order.
    pub states: Vec<State>,
    pub info: Option<EncodingInfo>,
}

impl IpModel {
    /// An empty model for hand-built or randomly generated programs.
    pub fn empty() -> Self {
        IpModel { vars: vec![], constraints: vec![], objective: vec![], beta: 0.5, states: vec![], info: None }
    }

    pub fn add_var(&mut self, kind: VarKind) -> VarId {
        self.vars.push(kind);
        self.vars.len() - 1
    }

    /// Adds a constraint, dropping zero coefficients. Panics on an empty
    /// row, which would be a bug in the caller.
    pub fn add_constraint(&mut self, terms: Vec<(VarId, f64)>, cmp: Cmp, rhs: f64, tag: &'static str) {
        let terms: Vec<_> = terms.into_iter().filter(|(_, c)| *c != 0.0).collect();
        assert!(!terms.is_empty(), "constraint {tag} has no non-zero coefficient");
        debug_assert!(terms.iter().all(|(v, _)| *v < self.vars.len()));
        self.constraints.push(LinearConstraint { terms, cmp, rhs, tag });
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn objective_value(&self, assignment: &[bool]) -> f64 {
        self.objective.iter().filter(|(v, _)| assignment[*v]).map(|(_, c)| c).sum()
    }

    pub fn var_name(&self, v: VarId) -> String {
        self.vars[v].to_string()
    }

    /// Debug listing: one line per row, `index tag: row`.
    pub fn dump_constraints(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        for (i, c) in self.constraints.iter().enumerate() {
            let _ = write!(out, "{i} {}:", c.tag);
            for (v, coef) in &c.terms {
                let _ = write!(out, " {coef:+} {}", self.var_name(*v));
            }
            let _ = writeln!(out, " {} {}", c.cmp, c.rhs);
        }
        out
    }
}
