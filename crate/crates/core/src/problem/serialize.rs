use std::fmt::Write as _;

use super::ProblemFile;
use crate::model::{PlanningDomain, State};
use crate::observer::SensorRule;

fn names(d: &PlanningDomain, s: &State) -> String {
    d.fluent_names(s).collect::<Vec<_>>().join(" ")
}

fn wrapped(out: &mut String, items: impl Iterator<Item = String>, per_line: usize) {
    for (i, item) in items.enumerate() {
        if i % per_line == 0 {
            out.push_str("\n ");
        }
        out.push(' ');
        out.push_str(&item);
    }
}

fn rule(out: &mut String, head: &str, r: &SensorRule) {
    let _ = write!(out, "\n  ({head}");
    if !r.actions.is_empty() {
        let _ = write!(out, " :action-in ({})", r.actions.join(" "));
    }
    if !r.state_has.is_empty() {
        let _ = write!(out, " :state-has ({})", r.state_has.join(" "));
    }
    let _ = write!(out, " :emit {})", r.symbol);
}

/// Deterministic text form; `parse(&serialize(p))` reproduces `p`.
pub fn serialize(p: &ProblemFile) -> String {
    let d = &p.domain;
    let mut out = String::new();
    if let Some(n) = &p.name {
        let _ = writeln!(out, "(problem {n})");
    }
    if let Some(f) = &p.family {
        let _ = writeln!(out, "(domain {f})");
    }
    out.push_str("(fluents");
    wrapped(&mut out, d.fluents().iter().map(|f| f.0.clone()), 8);
    out.push_str(")\n");
    if d.initial().is_empty() {
        out.push_str("(init)\n");
    } else {
        let _ = writeln!(out, "(init {})", names(d, d.initial()));
    }
    out.push_str("(actions");
    for a in d.actions() {
        let _ = write!(out, "\n  ({}", a.name);
        for (k, s) in [(":pre", &a.pre), (":add", &a.add), (":del", &a.del)] {
            if !s.is_empty() {
                let _ = write!(out, " {k} ({})", names(d, s));
            }
        }
        if a.cost != 1.0 {
            let _ = write!(out, " :cost {}", a.cost);
        }
        out.push(')');
    }
    out.push_str(")\n");
    out.push_str("(goals");
    for (label, g) in p.goals.labels().iter().zip(p.goals.goals()) {
        let _ = write!(out, "\n  ({label}");
        if !g.is_empty() {
            let _ = write!(out, " {}", names(d, g));
        }
        out.push(')');
    }
    let _ = writeln!(out, "\n  :true {})", p.goals.labels()[p.goals.true_goal_index()]);
    for s in &p.sensors {
        let _ = write!(out, "(sensor {}", s.observer());
        for r in s.rules() {
            rule(&mut out, "rule", r);
        }
        for r in s.misreports() {
            rule(&mut out, "misreport", r);
        }
        let _ = writeln!(out, "\n  (catchall {}))", s.catchall());
    }
    if let Some(h) = p.horizon_hint {
        let _ = writeln!(out, "(horizon {h})");
    }
    if let Some(b) = p.beta {
        let _ = writeln!(out, "(beta {b})");
    }
    out
}
