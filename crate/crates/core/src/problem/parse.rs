use std::collections::{HashMap, HashSet};

use super::sexpr::{read_all, Pos, Sexp};
use super::ProblemFile;
use crate::error::{ParseError, ParseErrorKind};
use crate::model::{ActionSpec, CandidateGoalSet, PlanningDomain, State};
use crate::observer::{ObserverId, SensorModel, SensorRule};

type Res<T> = Result<T, ParseError>;

fn syntax(pos: Pos, msg: impl Into<String>) -> ParseError {
    pos.error(ParseErrorKind::Syntax(msg.into()))
}

fn atom(e: &Sexp, what: &str) -> Res<String> {
    e.as_atom().map(str::to_string).ok_or_else(|| syntax(e.pos(), format!("expected {what}")))
}

fn atom_list(e: &Sexp, what: &str) -> Res<Vec<(String, Pos)>> {
    let items = e.as_list().ok_or_else(|| syntax(e.pos(), format!("expected a list of {what}")))?;
    items.iter().map(|i| Ok((atom(i, what)?, i.pos()))).collect()
}

/// Splits `:key value` pairs that follow a fixed number of leading items.
fn keywords<'a>(items: &'a [Sexp], allowed: &[&str]) -> Res<HashMap<&'a str, &'a Sexp>> {
    let mut out = HashMap::new();
    let mut it = items.iter();
    while let Some(k) = it.next() {
        let key = k.as_atom().filter(|s| s.starts_with(':')).ok_or_else(|| syntax(k.pos(), "expected a `:keyword`"))?;
        if !allowed.contains(&key) {
            return Err(syntax(k.pos(), format!("unexpected keyword `{key}`")));
        }
        let v = it.next().ok_or_else(|| syntax(k.pos(), format!("missing value for `{key}`")))?;
        if out.insert(key, v).is_some() {
            return Err(syntax(k.pos(), format!("repeated keyword `{key}`")));
        }
    }
    Ok(out)
}

/// A rule with the source positions of its action and fluent names.
type RawRule = (SensorRule, Vec<(String, Pos)>, Vec<(String, Pos)>);

struct RawSensor {
    pos: Pos,
    observer: ObserverId,
    rules: Vec<RawRule>,
    misreports: Vec<RawRule>,
    catchall: Option<String>,
}

fn parse_rule(items: &[Sexp]) -> Res<RawRule> {
    let kw = keywords(items, &[":action-in", ":state-has", ":emit"])?;
    let actions = kw.get(":action-in").map(|e| atom_list(e, "action names")).transpose()?.unwrap_or_default();
    let state_has = kw.get(":state-has").map(|e| atom_list(e, "fluents")).transpose()?.unwrap_or_default();
    let emit = kw
        .get(":emit")
        .ok_or_else(|| syntax(items.first().map_or(Pos { line: 0, col: 0 }, Sexp::pos), "rule needs `:emit`"))?;
    let symbol = atom(emit, "an observation symbol")?;
    let rule = SensorRule {
        actions: actions.iter().map(|(a, _)| a.clone()).collect(),
        state_has: state_has.iter().map(|(f, _)| f.clone()).collect(),
        symbol,
    };
    Ok((rule, actions, state_has))
}

fn parse_sensor(items: &[Sexp], pos: Pos) -> Res<RawSensor> {
    let who = items.first().ok_or_else(|| syntax(pos, "sensor needs an observer id"))?;
    let observer = who
        .as_atom()
        .and_then(ObserverId::from_letter)
        .filter(|o| *o != ObserverId::Actor)
        .ok_or_else(|| syntax(who.pos(), "sensor observer must be `C` or `X`"))?;
    let mut raw = RawSensor { pos, observer, rules: vec![], misreports: vec![], catchall: None };
    for e in &items[1..] {
        let list =
            e.as_list().ok_or_else(|| syntax(e.pos(), "expected `(rule …)`, `(misreport …)` or `(catchall …)`"))?;
        let head = list.first().and_then(Sexp::as_atom).unwrap_or("");
        match head {
            "rule" => {
                if raw.catchall.is_some() {
                    return Err(syntax(e.pos(), "rule after the catch-all is unreachable"));
                }
                raw.rules.push(parse_rule(&list[1..])?);
            }
            "misreport" => raw.misreports.push(parse_rule(&list[1..])?),
            "catchall" => {
                if raw.catchall.is_some() {
                    return Err(syntax(e.pos(), "duplicate catch-all"));
                }
                if list.len() != 2 {
                    return Err(syntax(e.pos(), "`(catchall symbol)` takes exactly one symbol"));
                }
                raw.catchall = Some(atom(&list[1], "an observation symbol")?);
            }
            _ => return Err(syntax(e.pos(), format!("unknown sensor entry `{head}`"))),
        }
    }
    Ok(raw)
}

struct RawAction {
    spec: ActionSpec,
    pos: Pos,
    refs: Vec<(String, Pos)>,
}

fn parse_action(e: &Sexp) -> Res<RawAction> {
    let items = e.as_list().ok_or_else(|| syntax(e.pos(), "expected `(name :pre … :add … :del …)`"))?;
    let name = atom(items.first().ok_or_else(|| syntax(e.pos(), "empty action"))?, "an action name")?;
    let kw = keywords(&items[1..], &[":pre", ":add", ":del", ":cost"])?;
    let mut refs = Vec::new();
    let mut field = |k: &str| -> Res<Vec<String>> {
        let list = kw.get(k).map(|e| atom_list(e, "fluents")).transpose()?.unwrap_or_default();
        refs.extend(list.iter().cloned());
        Ok(list.into_iter().map(|(f, _)| f).collect())
    };
    let pre = field(":pre")?;
    let add = field(":add")?;
    let del = field(":del")?;
    let cost = match kw.get(":cost") {
        None => 1.0,
        Some(c) => {
            let s = atom(c, "a cost")?;
            let v: f64 = parse_number(&s)
                .ok_or_else(|| c.pos().error(ParseErrorKind::InvalidValue(format!("bad cost `{s}`"))))?;
            if v < 0.0 || !v.is_finite() {
                return Err(c.pos().error(ParseErrorKind::InvalidValue(format!("cost must be non-negative, got {s}"))));
            }
            v
        }
    };
    Ok(RawAction { spec: ActionSpec { name, pre, add, del, cost }, pos: e.pos(), refs })
}

/// Decimal or `p/q` rational.
fn parse_number(s: &str) -> Option<f64> {
    if let Some((p, q)) = s.split_once('/') {
        let p: f64 = p.parse().ok()?;
        let q: f64 = q.parse().ok()?;
        (q != 0.0).then_some(p / q)
    } else {
        s.parse().ok()
    }
}

/// Parses a `.copp` problem file.
pub fn parse(text: &str) -> Result<ProblemFile, ParseError> {
    let top = read_all(text)?;
    let mut seen: HashSet<String> = HashSet::new();
    let mut name = None;
    let mut family = None;
    let mut fluents: Option<(Vec<(String, Pos)>, Pos)> = None;
    let mut init: Option<Vec<(String, Pos)>> = None;
    let mut actions: Vec<RawAction> = Vec::new();
    let mut goals_raw: Option<(&[Sexp], Pos)> = None;
    let mut sensors: Vec<RawSensor> = Vec::new();
    let mut horizon = None;
    let mut beta = None;

    for sec in &top {
        let items = sec.as_list().expect("top level holds lists");
        let head = items.first().ok_or_else(|| syntax(sec.pos(), "empty section"))?;
        let head = atom(head, "a section name")?;
        let key = if head == "sensor" {
            format!("sensor {}", items.get(1).and_then(Sexp::as_atom).unwrap_or(""))
        } else {
            head.clone()
        };
        if !seen.insert(key.clone()) {
            return Err(sec.pos().error(ParseErrorKind::DuplicateSection(key)));
        }
        let rest = &items[1..];
        let single = |what: &str| -> Res<&Sexp> {
            match rest {
                [one] => Ok(one),
                _ => Err(syntax(sec.pos(), format!("`({head} …)` takes exactly one {what}"))),
            }
        };
        match head.as_str() {
            "problem" => name = Some(atom(single("name")?, "a problem name")?),
            "domain" => family = Some(atom(single("name")?, "a domain name")?),
            "fluents" => {
                let list = rest.iter().map(|e| Ok((atom(e, "a fluent name")?, e.pos()))).collect::<Res<Vec<_>>>()?;
                fluents = Some((list, sec.pos()));
            }
            "init" => {
                init = Some(rest.iter().map(|e| Ok((atom(e, "a fluent name")?, e.pos()))).collect::<Res<Vec<_>>>()?)
            }
            "actions" => {
                for a in rest {
                    actions.push(parse_action(a)?);
                }
            }
            "goals" => goals_raw = Some((rest, sec.pos())),
            "sensor" => sensors.push(parse_sensor(rest, sec.pos())?),
            "horizon" => {
                let e = single("integer")?;
                let s = atom(e, "an integer")?;
                let v: usize = s.parse().ok().filter(|&v| v > 0).ok_or_else(|| {
                    e.pos()
                        .error(ParseErrorKind::InvalidValue(format!("horizon must be a positive integer, got `{s}`")))
                })?;
                horizon = Some(v);
            }
            "beta" => {
                let e = single("number")?;
                let s = atom(e, "a number")?;
                let v = parse_number(&s).filter(|v| (0.0..=1.0).contains(v)).ok_or_else(|| {
                    e.pos().error(ParseErrorKind::InvalidValue(format!("beta must be in [0, 1], got `{s}`")))
                })?;
                beta = Some(v);
            }
            _ => return Err(sec.pos().error(ParseErrorKind::UnknownSection(head))),
        }
    }

    let eof = Pos { line: text.lines().count().max(1), col: 1 };
    let (fluents, _) = fluents.ok_or_else(|| eof.error(ParseErrorKind::MissingSection("fluents".into())))?;
    let init = init.ok_or_else(|| eof.error(ParseErrorKind::MissingSection("init".into())))?;
    let (goal_items, goals_pos) = goals_raw.ok_or_else(|| eof.error(ParseErrorKind::MissingSection("goals".into())))?;

    let mut known: HashSet<&str> = HashSet::new();
    for (f, p) in &fluents {
        if !known.insert(f) {
            return Err(p.error(ParseErrorKind::Model(crate::error::ModelError::DuplicateFluent(f.clone()))));
        }
    }
    let check_fluent = |f: &str, p: Pos| -> Res<()> {
        if known.contains(f) {
            Ok(())
        } else {
            Err(p.error(ParseErrorKind::DanglingReference(format!("undeclared fluent `{f}`"))))
        }
    };
    for (f, p) in &init {
        check_fluent(f, *p)?;
    }
    let mut action_names = HashSet::new();
    for a in &actions {
        for (f, p) in &a.refs {
            check_fluent(f, *p)?;
        }
        if !action_names.insert(a.spec.name.as_str()) {
            return Err(a
                .pos
                .error(ParseErrorKind::Model(crate::error::ModelError::DuplicateAction(a.spec.name.clone()))));
        }
    }

    let domain = PlanningDomain::new(
        fluents.iter().map(|(f, _)| f.as_str()),
        actions.iter().map(|a| a.spec.clone()),
        init.iter().map(|(f, _)| f.as_str()),
    )
    .map_err(|e| goals_pos.error(ParseErrorKind::Model(e)))?;

    // goals: (label f …)… :true label-or-index
    let mut goals: Vec<State> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let mut true_goal: Option<(String, Pos)> = None;
    let mut it = goal_items.iter();
    while let Some(e) = it.next() {
        match e {
            Sexp::Atom(k, p) if k == ":true" => {
                let v = it.next().ok_or_else(|| syntax(*p, "missing value for `:true`"))?;
                true_goal = Some((atom(v, "a goal label or index")?, v.pos()));
            }
            Sexp::List(items, p) => {
                let label = atom(items.first().ok_or_else(|| syntax(*p, "empty goal"))?, "a goal label")?;
                if labels.contains(&label) {
                    return Err(syntax(*p, format!("duplicate goal label `{label}`")));
                }
                let mut g = State::empty(domain.num_fluents());
                for f in &items[1..] {
                    let name = atom(f, "a fluent name")?;
                    check_fluent(&name, f.pos())?;
                    g.insert(domain.fluent_id(&name).expect("checked"));
                }
                goals.push(g);
                labels.push(label);
            }
            other => return Err(syntax(other.pos(), "expected `(label fluent …)` or `:true`")),
        }
    }
    let (tg, tg_pos) = true_goal.ok_or_else(|| syntax(goals_pos, "goals need `:true <label>`"))?;
    let true_index = match labels.iter().position(|l| *l == tg) {
        Some(i) => i,
        None => match tg.parse::<usize>() {
            Ok(i) if i >= 1 && i <= labels.len() => i - 1,
            _ => return Err(tg_pos.error(ParseErrorKind::DanglingReference(format!("no goal `{tg}`")))),
        },
    };
    let goals =
        CandidateGoalSet::new(goals, labels, true_index).map_err(|e| goals_pos.error(ParseErrorKind::Model(e)))?;

    let mut models = Vec::new();
    for s in sensors {
        for (_, acts, fls) in s.rules.iter().chain(s.misreports.iter()) {
            for (a, p) in acts {
                let resolves = match a.strip_suffix('*') {
                    Some(_) => true,
                    None => domain.action_id(a).is_some(),
                };
                if !resolves {
                    return Err(p.error(ParseErrorKind::DanglingReference(format!("undeclared action `{a}`"))));
                }
            }
            for (f, p) in fls {
                check_fluent(f, *p)?;
            }
        }
        let m = SensorModel::new(
            &domain,
            s.observer,
            s.rules.into_iter().map(|r| r.0).collect(),
            s.catchall,
            s.misreports.into_iter().map(|r| r.0).collect(),
        )
        .map_err(|e| s.pos.error(ParseErrorKind::Sensor(e)))?;
        models.push(m);
    }

    Ok(ProblemFile { name, family, domain, goals, sensors: models, horizon_hint: horizon, beta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::SensorError;

    const MINIMAL: &str = "
(fluents p)
(init)
(actions (make-p :add (p)))
(goals (g1 p) :true g1)
(sensor X (catchall blip))
";

    #[test]
    fn minimal_file() {
        let p = parse(MINIMAL).unwrap();
        assert_eq!(p.domain.num_fluents(), 1);
        assert_eq!(p.domain.actions().len(), 1);
        assert_eq!(p.domain.action(0).cost, 1.0);
        assert_eq!(p.goals.len(), 1);
        assert_eq!(p.sensors.len(), 1);
        assert_eq!(p.horizon_hint, None);
    }

    #[test]
    fn dangling_goal_fluent_located() {
        let text = "(fluents p)\n(init p)\n(goals\n  (g1 q) :true g1)\n";
        let err = parse(text).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::DanglingReference(_)), "{err}");
        assert_eq!((err.line, err.col), (4, 7));
    }

    #[test]
    fn dangling_sensor_action() {
        let text = "(fluents p)(init p)(goals (g p) :true g)(sensor C (rule :action-in (nope) :emit a) (catchall b))";
        let err = parse(text).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::DanglingReference(_)));
    }

    #[test]
    fn unknown_section() {
        let err = parse("(fluents p)(init)(goals (g p) :true 1)(bogus)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownSection("bogus".into()));
    }

    #[test]
    fn overlapping_rules_rejected() {
        let text = "(fluents p)(init)(actions (a :add (p)))(goals (g p) :true g)
                    (sensor X (rule :action-in (a) :emit s1) (rule :action-in (a) :emit s2) (catchall s1))";
        let err = parse(text).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Sensor(SensorError::ShadowedRule { .. })));
    }

    #[test]
    fn numeric_true_goal_and_options() {
        let text = "(fluents p q)(init)(goals (a p) (b q) :true 2)(horizon 7)(beta 1/4)";
        let p = parse(text).unwrap();
        assert_eq!(p.goals.true_goal_index(), 1);
        assert_eq!(p.horizon_hint, Some(7));
        assert_eq!(p.beta, Some(0.25));
        assert!(parse("(fluents p)(init)(goals (a p) :true 1)(beta 2)").is_err());
        assert!(parse("(fluents p)(init)(goals (a p) :true 1)(horizon 0)").is_err());
    }

    #[test]
    fn missing_and_duplicate_sections() {
        assert!(matches!(parse("(fluents p)(init)").unwrap_err().kind, ParseErrorKind::MissingSection(_)));
        assert!(matches!(
            parse("(fluents p)(fluents q)(init)(goals (a p) :true 1)").unwrap_err().kind,
            ParseErrorKind::DuplicateSection(_)
        ));
    }
}
