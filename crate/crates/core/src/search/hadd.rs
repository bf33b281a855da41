use std::collections::HashMap;

use crate::model::{PlanningDomain, State};

/// Additive delete-relaxation heuristic with a per-state cache of the cost
/// of every candidate goal.
pub struct HAdd<'a> {
    domain: &'a PlanningDomain,
    goals: Vec<Vec<usize>>,
    cache: HashMap<State, Box<[f64]>>,
}

impl<'a> HAdd<'a> {
    pub fn new(domain: &'a PlanningDomain, goals: &[State]) -> Self {
        HAdd { domain, goals: goals.iter().map(|g| g.iter().collect()).collect(), cache: HashMap::new() }
    }

    /// Relaxed cost of every fluent from `s`; `INFINITY` if unreachable.
    pub fn fluent_costs(domain: &PlanningDomain, s: &State) -> Vec<f64> {
        let mut cost = vec![f64::INFINITY; domain.num_fluents()];
        for f in s.iter() {
            cost[f] = 0.0;
        }
        loop {
            let mut changed = false;
            for a in domain.actions() {
                let mut pre = 0.0;
                for p in a.pre.iter() {
                    pre += cost[p];
                    if pre.is_infinite() {
                        break;
                    }
                }
                if pre.is_infinite() {
                    continue;
                }
                let via = pre + a.cost;
                for f in a.add.iter() {
                    if via < cost[f] {
                        cost[f] = via;
                        changed = true;
                    }
                }
            }
            if !changed {
                return cost;
            }
        }
    }

    /// `h_add(s → goal)` for an arbitrary partial goal.
    pub fn to_state(&self, s: &State, goal: &State) -> f64 {
        let cost = Self::fluent_costs(self.domain, s);
        goal.iter().map(|f| cost[f]).sum()
    }

    /// Costs from `s` to each candidate goal, in goal order.
    pub fn goal_costs(&mut self, s: &State) -> &[f64] {
        if !self.cache.contains_key(s) {
            let cost = Self::fluent_costs(self.domain, s);
            let v: Box<[f64]> = self.goals.iter().map(|g| g.iter().map(|&f| cost[f]).sum()).collect();
            self.cache.insert(s.clone(), v);
        }
        &self.cache[s]
    }
}
