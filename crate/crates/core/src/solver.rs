//! Exact branch-and-bound for pure 0/1 programs.
//!
//! No LP relaxation: the bound is the objective's optimistic completion
//! (every free variable at its sign-preferred value), maintained
//! incrementally. Propagation is the usual pseudo-Boolean min-activity rule
//! on rows normalised to `Σ c·x ≤ r`.

use std::fmt;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use crate::ip::{Cmp, IpModel};
use crate::par::{self, Execution};

const EPS: f64 = 1e-9;

/// Reported once per improving solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Incumbent {
    pub time_s: f64,
    pub nodes: u64,
    pub objective: f64,
}

pub type IncumbentCallback = Arc<dyn Fn(&Incumbent) + Send + Sync>;

#[derive(Clone)]
pub struct SolverConfig {
    pub time_limit: Duration,
    pub node_limit: u64,
    pub execution: Execution,
    pub on_incumbent: Option<IncumbentCallback>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            time_limit: Duration::from_secs(900),
            node_limit: 200_000_000,
            execution: Execution::Sequential,
            on_incumbent: None,
        }
    }
}

impl fmt::Debug for SolverConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SolverConfig")
            .field("time_limit", &self.time_limit)
            .field("node_limit", &self.node_limit)
            .field("execution", &self.execution)
            .field("on_incumbent", &self.on_incumbent.is_some())
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Search finished; the incumbent is optimal.
    Optimal,
    /// A limit stopped the search after an incumbent was found.
    Feasible,
    /// Search finished without any feasible assignment.
    Infeasible,
    /// A limit stopped the search before any incumbent.
    LimitReached,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::LimitReached => "limit",
        }
    }

    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Feasible)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolveStats {
    pub nodes: u64,
    pub propagations: u64,
    pub time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub assignment: Option<Vec<bool>>,
    pub objective: Option<f64>,
    pub stats: SolveStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub feasible: bool,
    /// `(row index, provenance tag)` of every violated row.
    pub violated: Vec<(usize, &'static str)>,
}

/// Checks every row of `m` directly, sharing nothing with the solver.
pub fn verify(m: &IpModel, assignment: &[bool]) -> Verification {
    assert_eq!(assignment.len(), m.num_vars(), "assignment length");
    let violated: Vec<_> = m
        .constraints
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_satisfied(assignment))
        .map(|(i, c)| (i, c.tag))
        .collect();
    Verification { feasible: violated.is_empty(), violated }
}

struct Row {
    terms: Vec<(usize, f64)>,
    rhs: f64,
    max_abs: f64,
}

/// Rows in `≤` form plus occurrence lists.
struct Compiled {
    rows: Vec<Row>,
    occ: Vec<Vec<(usize, f64)>>,
    obj: Vec<f64>,
}

impl Compiled {
    fn new(m: &IpModel) -> Self {
        let n = m.num_vars();
        let mut rows = Vec::new();
        let mut push = |terms: Vec<(usize, f64)>, rhs: f64| {
            let max_abs = terms.iter().map(|t| t.1.abs()).fold(0.0, f64::max);
            rows.push(Row { terms, rhs, max_abs });
        };
        for c in &m.constraints {
            let neg = || c.terms.iter().map(|&(v, k)| (v, -k)).collect::<Vec<_>>();
            match c.cmp {
                Cmp::Le => push(c.terms.clone(), c.rhs),
                Cmp::Ge => push(neg(), -c.rhs),
                Cmp::Eq => {
                    push(c.terms.clone(), c.rhs);
                    push(neg(), -c.rhs);
                }
            }
        }
        let mut occ = vec![Vec::new(); n];
        for (r, row) in rows.iter().enumerate() {
            for &(v, k) in &row.terms {
                occ[v].push((r, k));
            }
        }
        let mut obj = vec![0.0; n];
        for &(v, k) in &m.objective {
            obj[v] += k;
        }
        Compiled { rows, occ, obj }
    }
}

const FREE: i8 = -1;

struct Frame {
    var: usize,
    trail_len: usize,
    first: bool,
    flipped: bool,
}

enum Stop {
    Done,
    Limit,
}

/// Incumbent shared between workers. The objective is mirrored in an
/// atomic so bound checks never lock.
struct Shared {
    best_bits: AtomicU64,
    best: Mutex<Option<(f64, Vec<bool>)>>,
    nodes: AtomicU64,
    propagations: AtomicU64,
    stop: AtomicBool,
    start: Instant,
}

impl Shared {
    fn new() -> Self {
        Shared {
            best_bits: AtomicU64::new(f64::INFINITY.to_bits()),
            best: Mutex::new(None),
            nodes: AtomicU64::new(0),
            propagations: AtomicU64::new(0),
            stop: AtomicBool::new(false),
            start: Instant::now(),
        }
    }

    fn best(&self) -> f64 {
        f64::from_bits(self.best_bits.load(Ordering::Acquire))
    }

    fn offer(&self, obj: f64, assignment: Vec<bool>, cfg: &SolverConfig) {
        let mut best = self.best.lock().expect("incumbent lock");
        if best.as_ref().is_some_and(|(b, _)| obj >= *b - EPS) {
            return;
        }
        *best = Some((obj, assignment));
        self.best_bits.store(obj.to_bits(), Ordering::Release);
        if let Some(cb) = &cfg.on_incumbent {
            cb(&Incumbent {
                time_s: self.start.elapsed().as_secs_f64(),
                nodes: self.nodes.load(Ordering::Relaxed),
                objective: obj,
            });
        }
    }
}

struct Search<'a> {
    c: &'a Compiled,
    val: Vec<i8>,
    min_act: Vec<f64>,
    trail: Vec<usize>,
    queue: Vec<usize>,
    queued: Vec<bool>,
    bound: f64,
    nodes: u64,
    propagations: u64,
}

impl<'a> Search<'a> {
    fn new(c: &'a Compiled) -> Self {
        let n = c.obj.len();
        let min_act = c.rows.iter().map(|r| r.terms.iter().map(|t| t.1.min(0.0)).sum()).collect();
        let bound = c.obj.iter().map(|&k| k.min(0.0)).sum();
        Search {
            c,
            val: vec![FREE; n],
            min_act,
            trail: Vec::with_capacity(n),
            queue: (0..c.rows.len()).collect(),
            queued: vec![true; c.rows.len()],
            bound,
            nodes: 0,
            propagations: 0,
        }
    }

    fn fix(&mut self, v: usize, b: bool) {
        debug_assert_eq!(self.val[v], FREE);
        self.val[v] = b as i8;
        self.trail.push(v);
        let k = self.c.obj[v];
        self.bound += if b { k } else { 0.0 } - k.min(0.0);
        for &(r, coef) in &self.c.occ[v] {
            let delta = if b { coef.max(0.0) } else { (-coef).max(0.0) };
            if delta > 0.0 {
                self.min_act[r] += delta;
                let row = &self.c.rows[r];
                if !self.queued[r] && row.rhs - self.min_act[r] < row.max_abs - EPS {
                    self.queued[r] = true;
                    self.queue.push(r);
                }
            }
        }
    }

    fn undo(&mut self, len: usize) {
        while self.trail.len() > len {
            let v = self.trail.pop().expect("trail");
            let b = self.val[v] == 1;
            self.val[v] = FREE;
            let k = self.c.obj[v];
            self.bound -= if b { k } else { 0.0 } - k.min(0.0);
            for &(r, coef) in &self.c.occ[v] {
                self.min_act[r] -= if b { coef.max(0.0) } else { (-coef).max(0.0) };
            }
        }
    }

    fn clear_queue(&mut self) {
        for r in self.queue.drain(..) {
            self.queued[r] = false;
        }
    }

    /// Returns false on conflict.
    fn propagate(&mut self) -> bool {
        while let Some(r) = self.queue.pop() {
            self.queued[r] = false;
            let c = self.c;
            let row = &c.rows[r];
            let slack = row.rhs - self.min_act[r];
            if slack < -EPS {
                self.clear_queue();
                return false;
            }
            if row.max_abs <= slack + EPS {
                continue;
            }
            for &(v, coef) in &row.terms {
                if self.val[v] == FREE && coef.abs() > slack + EPS {
                    self.fix(v, coef < 0.0);
                    self.propagations += 1;
                }
            }
            // Fixings above only move other rows; this one may now be violated
            // only through a later fixing, which requeues it.
        }
        true
    }

    fn assignment(&self) -> Vec<bool> {
        self.val.iter().map(|&v| v == 1).collect()
    }

    fn first_value(&self, v: usize) -> bool {
        self.c.obj[v] <= 0.0
    }

    fn next_free(&self, from: usize) -> Option<usize> {
        (from..self.val.len()).find(|&v| self.val[v] == FREE)
    }

    /// Depth-first search below the current (propagated) state.
    /// `best` supplies the pruning threshold; `None` disables pruning.
    fn dfs(
        &mut self,
        best: &dyn Fn() -> Option<f64>,
        on_solution: &mut dyn FnMut(&Self),
        out_of_budget: &mut dyn FnMut(u64) -> bool,
    ) -> Stop {
        let base = self.trail.len();
        let mut frames: Vec<Frame> = Vec::new();
        let mut descend = true;
        loop {
            if descend {
                let pruned = best().is_some_and(|b| self.bound >= b - EPS);
                if !pruned {
                    let from = frames.last().map_or(0, |f| f.var + 1);
                    match self.next_free(from) {
                        None => on_solution(self),
                        Some(v) => {
                            self.nodes += 1;
                            if out_of_budget(self.nodes) {
                                self.undo(base);
                                return Stop::Limit;
                            }
                            let first = self.first_value(v);
                            frames.push(Frame { var: v, trail_len: self.trail.len(), first, flipped: false });
                            self.fix(v, first);
                            descend = self.propagate();
                            continue;
                        }
                    }
                }
            }
            // Backtrack to the deepest frame with an untried value.
            loop {
                let Some(f) = frames.last_mut() else {
                    self.undo(base);
                    return Stop::Done;
                };
                self.undo(f.trail_len);
                if f.flipped {
                    frames.pop();
                    continue;
                }
                f.flipped = true;
                let (v, val) = (f.var, !f.first);
                self.fix(v, val);
                descend = self.propagate();
                break;
            }
        }
    }
}

fn budget<'s>(cfg: &'s SolverConfig, shared: &'s Shared) -> impl FnMut(u64) -> bool + 's {
    let mut last = 0u64;
    move |nodes| {
        let step = nodes - last;
        last = nodes;
        let total = shared.nodes.fetch_add(step, Ordering::Relaxed) + step;
        if total > cfg.node_limit
            || (total.is_multiple_of(1024) && shared.start.elapsed() > cfg.time_limit)
            || shared.stop.load(Ordering::Relaxed)
        {
            shared.stop.store(true, Ordering::Relaxed);
            return true;
        }
        false
    }
}

/// Minimises `m`. In parallel mode the first decisions are split into
/// independent subtrees that share only the incumbent, so the optimal
/// objective matches sequential mode but the returned optimum may differ
/// among ties.
pub fn solve(m: &IpModel, cfg: &SolverConfig) -> SolveResult {
    let c = Compiled::new(m);
    let shared = Shared::new();
    let mut root = Search::new(&c);
    let mut limited = false;
    if root.propagate() {
        let subtrees = if cfg.execution.is_parallel() { split(&mut root) } else { Vec::new() };
        if subtrees.is_empty() {
            limited = run_subtree(&mut root, cfg, &shared);
        } else {
            let flags = par::map(cfg.execution, &subtrees, |prefix| {
                let mut s = Search::new(&c);
                let ok = s.propagate()
                    && prefix.iter().all(|&(v, b)| {
                        if s.val[v] != FREE {
                            return s.val[v] == b as i8;
                        }
                        s.fix(v, b);
                        s.propagate()
                    });
                let limited = ok && run_subtree(&mut s, cfg, &shared);
                shared.propagations.fetch_add(s.propagations, Ordering::Relaxed);
                limited
            });
            limited = flags.into_iter().any(|f| f);
        }
    }
    shared.propagations.fetch_add(root.propagations, Ordering::Relaxed);

    let stats = SolveStats {
        nodes: shared.nodes.load(Ordering::Relaxed),
        propagations: shared.propagations.load(Ordering::Relaxed),
        time_s: shared.start.elapsed().as_secs_f64(),
    };
    let best = shared.best.into_inner().expect("incumbent lock");
    let status = match (&best, limited) {
        (Some(_), false) => SolveStatus::Optimal,
        (Some(_), true) => SolveStatus::Feasible,
        (None, false) => SolveStatus::Infeasible,
        (None, true) => SolveStatus::LimitReached,
    };
    let (objective, assignment) = best.map_or((None, None), |(o, a)| (Some(o), Some(a)));
    SolveResult { status, assignment, objective, stats }
}

/// Returns true when stopped by a limit.
fn run_subtree(s: &mut Search<'_>, cfg: &SolverConfig, shared: &Shared) -> bool {
    let best = || Some(shared.best()).filter(|b| b.is_finite());
    let mut on_solution = |s: &Search<'_>| shared.offer(s.bound, s.assignment(), cfg);
    let mut out = budget(cfg, shared);
    matches!(s.dfs(&best, &mut on_solution, &mut out), Stop::Limit)
}

/// Prefixes over the first free variables in branching order, enough to
/// keep every worker busy. Empty if the tree is too small to split.
fn split(root: &mut Search<'_>) -> Vec<Vec<(usize, bool)>> {
    let threads = rayon_threads();
    let mut depth = 0;
    while (1usize << depth) < 8 * threads && depth < 12 {
        depth += 1;
    }
    let vars: Vec<usize> = (0..root.val.len()).filter(|&v| root.val[v] == FREE).take(depth).collect();
    if vars.len() < depth || depth == 0 {
        return Vec::new();
    }
    (0..1usize << depth)
        .map(|mask| {
            vars.iter()
                .enumerate()
                .map(|(i, &v)| {
                    let bit = mask >> (depth - 1 - i) & 1 == 1;
                    // Bit 0 means "preferred value first", keeping subtree
                    // order aligned with sequential exploration.
                    (v, if bit { !root.first_value(v) } else { root.first_value(v) })
                })
                .collect()
        })
        .collect()
}

#[cfg(feature = "parallel")]
fn rayon_threads() -> usize {
    rayon::current_num_threads()
}

#[cfg(not(feature = "parallel"))]
fn rayon_threads() -> usize {
    1
}

/// Every feasible assignment, in branching order, up to `limit`. Intended
/// for small models and tests.
pub fn enumerate(m: &IpModel, limit: usize) -> Vec<Vec<bool>> {
    let c = Compiled::new(m);
    let mut s = Search::new(&c);
    let mut found = Vec::new();
    if !s.propagate() {
        return found;
    }
    let none = || None;
    let mut on_solution = |s: &Search<'_>| {
        if found.len() < limit {
            found.push(s.assignment());
        }
    };
    let mut out = |_| false;
    s.dfs(&none, &mut on_solution, &mut out);
    found
}
