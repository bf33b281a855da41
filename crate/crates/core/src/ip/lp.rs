use std::fmt::Write as _;

use super::model::{Cmp, IpModel, VarId};

const TERMS_PER_LINE: usize = 8;

fn terms(out: &mut String, m: &IpModel, terms: &[(VarId, f64)]) {
    for (i, &(v, c)) in terms.iter().enumerate() {
        if i > 0 && i % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if c < 0.0 { '-' } else { '+' };
        let a = c.abs();
        if a == 1.0 {
            let _ = write!(out, " {sign} {}", m.var_name(v));
        } else {
            let _ = write!(out, " {sign} {a} {}", m.var_name(v));
        }
    }
}

/// CPLEX-style LP text. Rows are named `r<index>_<tag>` so the equation
/// each one encodes survives the round trip through external solvers.
pub fn export_lp(m: &IpModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ {} binary variables, {} constraints", m.num_vars(), m.constraints.len());
    out.push_str("Minimize\n obj:");
    terms(&mut out, m, &m.objective);
    out.push('\n');
    if !m.constraints.is_empty() {
        out.push_str("Subject To\n");
        for (i, c) in m.constraints.iter().enumerate() {
            let _ = write!(out, " r{i}_{}:", c.tag);
            terms(&mut out, m, &c.terms);
            let cmp = match c.cmp {
                Cmp::Le => "<=",
                Cmp::Ge => ">=",
                Cmp::Eq => "=",
            };
            let _ = writeln!(out, " {cmp} {}", c.rhs);
        }
    }
    out.push_str("Binary\n");
    for v in 0..m.num_vars() {
        let _ = writeln!(out, " {}", m.var_name(v));
    }
    out.push_str("End\n");
    out
}
