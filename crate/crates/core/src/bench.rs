//! Experiment harness: runs the baseline, IP and search planners over a
//! directory of problem files and reports goal counts from an independent
//! replay of each plan.

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{EncodeError, SearchError};
use crate::ip::{decode, encode, EncodeOptions};
use crate::model::Plan;
use crate::observer::{run_trace, ObserverId};
use crate::par::{self, Execution};
use crate::problem::{parse, random_boxpush, random_gridworld, random_recycling, serialize, ProblemFile};
use crate::search::{baseline_gbfs_limited, search, GoalSpec, SearchConfig};
use crate::solver::{solve, SolveStatus, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Baseline,
    Ip,
    Search,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Baseline, Method::Ip, Method::Search];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::Ip => "ip",
            Method::Search => "search",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Method::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| format!("unknown method {s:?}"))
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub problem: String,
    pub method: Method,
    pub k: Option<usize>,
    pub j: Option<usize>,
    pub beta: Option<f64>,
    pub delta: Option<usize>,
    pub status: String,
    pub time_s: f64,
    pub plan_len: Option<usize>,
    #[serde(rename = "goals_X")]
    pub goals_x: Option<usize>,
    #[serde(rename = "goals_C")]
    pub goals_c: Option<usize>,
}

impl RunRecord {
    pub fn solved(&self) -> bool {
        self.plan_len.is_some()
    }
}

pub const CSV_HEADER: &str = "problem,method,k,j,beta,delta,status,time_s,plan_len,goals_X,goals_C";

#[derive(Debug, Clone)]
pub struct SuiteSettings {
    /// Φ for the search planner.
    pub k: usize,
    pub j: usize,
    /// Optional obfuscation/legibility bounds for the IP planner.
    pub ip_k: Option<usize>,
    pub ip_j: Option<usize>,
    pub beta: Option<f64>,
    /// First IP horizon; `None` uses the problem's hint or the domain default.
    pub horizon: Option<usize>,
    pub horizon_step: usize,
    /// Largest horizon tried.
    pub max_horizon: usize,
    pub ip_time_limit: Duration,
    pub search: SearchConfig,
    pub baseline_node_limit: usize,
    /// Problems run concurrently in parallel mode.
    pub execution: Execution,
}

impl Default for SuiteSettings {
    fn default() -> Self {
        SuiteSettings {
            k: 2,
            j: 2,
            ip_k: None,
            ip_j: None,
            beta: None,
            horizon: None,
            horizon_step: 2,
            max_horizon: 20,
            ip_time_limit: Duration::from_secs(900),
            search: SearchConfig::default(),
            baseline_node_limit: 1_000_000,
            execution: Execution::default(),
        }
    }
}

/// Starting IP horizon per domain family.
pub fn default_horizon(p: &ProblemFile) -> usize {
    if let Some(h) = p.horizon_hint {
        return h;
    }
    match p.family.as_deref() {
        Some("recycling") => 10,
        _ => 12,
    }
}

fn record(problem: &str, method: Method, status: impl Into<String>, time: Duration) -> RunRecord {
    RunRecord {
        problem: problem.to_string(),
        method,
        k: None,
        j: None,
        beta: None,
        delta: None,
        status: status.into(),
        time_s: time.as_secs_f64(),
        plan_len: None,
        goals_x: None,
        goals_c: None,
    }
}

/// Fills plan length and goal counts from a fresh replay of `plan`.
fn with_replay(mut r: RunRecord, p: &ProblemFile, plan: &Plan) -> RunRecord {
    match run_trace(&p.domain, &p.sensors, plan) {
        Ok(trace) => {
            r.plan_len = Some(plan.len());
            r.goals_x = Some(trace.final_goals(ObserverId::Adversary, &p.goals).len());
            r.goals_c = Some(trace.final_goals(ObserverId::Cooperative, &p.goals).len());
        }
        Err(e) => r.status = format!("replay-error: {e}"),
    }
    r
}

pub fn run_baseline(name: &str, p: &ProblemFile, s: &SuiteSettings) -> RunRecord {
    let start = Instant::now();
    match baseline_gbfs_limited(p, s.baseline_node_limit) {
        Ok((plan, _)) => with_replay(record(name, Method::Baseline, "solved", start.elapsed()), p, &plan),
        Err(e) => record(name, Method::Baseline, search_status(&e), start.elapsed()),
    }
}

pub fn run_search(name: &str, p: &ProblemFile, s: &SuiteSettings) -> RunRecord {
    let start = Instant::now();
    let out = GoalSpec::new(p, s.k, s.j).and_then(|phi| search(p, &phi, &s.search));
    let mut r = match out {
        Ok(o) => {
            let mut r = with_replay(record(name, Method::Search, "solved", start.elapsed()), p, &o.plan);
            r.delta = Some(o.delta);
            r
        }
        Err(e) => record(name, Method::Search, search_status(&e), start.elapsed()),
    };
    r.k = Some(s.k);
    r.j = Some(s.j);
    r
}

/// Solves at increasing horizons until a plan is found or the cap is hit.
pub fn run_ip(name: &str, p: &ProblemFile, s: &SuiteSettings) -> RunRecord {
    let start = Instant::now();
    let opts = EncodeOptions { k_obfuscation: s.ip_k, j_legibility: s.ip_j, beta: s.beta, ..Default::default() };
    let mut horizon = s.horizon.unwrap_or_else(|| default_horizon(p));
    let deadline = start + s.ip_time_limit;
    let mut r = loop {
        if horizon > s.max_horizon {
            break record(name, Method::Ip, "no-solution", start.elapsed());
        }
        let m = match encode(p, horizon, &opts) {
            Ok(m) => m,
            Err(EncodeError::GoalUnreachable(_)) => {
                horizon += s.horizon_step;
                continue;
            }
            Err(e) => break record(name, Method::Ip, encode_status(&e), start.elapsed()),
        };
        let cfg =
            SolverConfig { time_limit: deadline.saturating_duration_since(Instant::now()), ..SolverConfig::default() };
        let res = solve(&m, &cfg);
        match res.status {
            SolveStatus::Infeasible => horizon += s.horizon_step,
            SolveStatus::LimitReached => break record(name, Method::Ip, "limit", start.elapsed()),
            SolveStatus::Optimal | SolveStatus::Feasible => {
                let a = res.assignment.as_ref().expect("solution");
                let status = if res.status == SolveStatus::Optimal { "optimal" } else { "feasible" };
                break match decode(p, &m, a) {
                    Ok(d) => with_replay(record(name, Method::Ip, status, start.elapsed()), p, &d.plan),
                    Err(e) => record(name, Method::Ip, format!("decode-error: {e}"), start.elapsed()),
                };
            }
        }
    };
    r.k = s.ip_k;
    r.j = s.ip_j;
    r.beta = Some(s.beta.or(p.beta).unwrap_or(0.5));
    r
}

fn search_status(e: &SearchError) -> String {
    match e {
        SearchError::NodeLimit | SearchError::TimeLimit => "limit".into(),
        SearchError::Exhausted => "no-solution".into(),
        other => format!("error: {other}"),
    }
}

fn encode_status(e: &EncodeError) -> String {
    match e {
        EncodeError::Capacity { .. } => "capacity".into(),
        other => format!("error: {other}"),
    }
}

pub fn run_method(method: Method, name: &str, p: &ProblemFile, s: &SuiteSettings) -> RunRecord {
    match method {
        Method::Baseline => run_baseline(name, p, s),
        Method::Ip => run_ip(name, p, s),
        Method::Search => run_search(name, p, s),
    }
}

/// `.copp` files directly inside `dir`, sorted by name.
pub fn problem_files(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "copp") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Runs every method on every problem in `dir`. Failures become records;
/// the suite always completes. Output order is (file name, method order).
pub fn run_suite(dir: &Path, methods: &[Method], s: &SuiteSettings) -> io::Result<Vec<RunRecord>> {
    let files = problem_files(dir)?;
    let per_file = par::map(s.execution, &files, |path| {
        let name = path.file_stem().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let parsed =
            std::fs::read_to_string(path).map_err(|e| e.to_string()).and_then(|t| parse(&t).map_err(|e| e.to_string()));
        methods
            .iter()
            .map(|&m| match &parsed {
                Ok(p) => run_method(m, &name, p, s),
                Err(e) => record(&name, m, format!("parse-error: {e}"), Duration::ZERO),
            })
            .collect::<Vec<_>>()
    });
    Ok(per_file.into_iter().flatten().collect())
}

pub fn write_csv<W: io::Write>(records: &[RunRecord], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    if records.is_empty() {
        out.write_record(CSV_HEADER.split(','))?;
    }
    for r in records {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// Per (domain, method) means over solved runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub domain: String,
    pub method: Method,
    pub runs: usize,
    pub solved: usize,
    pub mean_time_s: f64,
    pub mean_plan_len: f64,
    pub mean_goals_x: f64,
    pub mean_goals_c: f64,
    /// `mean_goals_x − mean_goals_c`.
    pub goal_difference: f64,
}

/// Domain of a record: the problem name up to its last `-` (so
/// `gridworld-03` belongs to `gridworld`), or the name itself.
pub fn domain_of(problem: &str) -> &str {
    problem.rsplit_once('-').map_or(problem, |(d, _)| d)
}

pub fn aggregate(records: &[RunRecord]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<(String, Method), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((domain_of(&r.problem).to_string(), r.method)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((domain, method), rs)| {
            let solved: Vec<&&RunRecord> = rs.iter().filter(|r| r.solved()).collect();
            let mean = |f: &dyn Fn(&RunRecord) -> f64| {
                if solved.is_empty() {
                    f64::NAN
                } else {
                    solved.iter().map(|r| f(r)).sum::<f64>() / solved.len() as f64
                }
            };
            let mean_goals_x = mean(&|r| r.goals_x.unwrap_or(0) as f64);
            let mean_goals_c = mean(&|r| r.goals_c.unwrap_or(0) as f64);
            Aggregate {
                domain,
                method,
                runs: rs.len(),
                solved: solved.len(),
                mean_time_s: mean(&|r| r.time_s),
                mean_plan_len: mean(&|r| r.plan_len.unwrap_or(0) as f64),
                mean_goals_x,
                mean_goals_c,
                goal_difference: mean_goals_x - mean_goals_c,
            }
        })
        .collect()
}

/// Three tables, one per panel (time, plan length, goal difference): a row
/// per domain, a column per method.
pub fn plot_tables(aggs: &[Aggregate]) -> Vec<(&'static str, String)> {
    let mut methods: Vec<Method> = aggs.iter().map(|a| a.method).collect();
    methods.sort();
    methods.dedup();
    let mut domains: Vec<&str> = aggs.iter().map(|a| a.domain.as_str()).collect();
    domains.dedup();
    let panel = |f: &dyn Fn(&Aggregate) -> f64| {
        let mut out = String::from("domain");
        for m in &methods {
            out.push('\t');
            out.push_str(m.as_str());
        }
        out.push('\n');
        for d in &domains {
            out.push_str(d);
            for m in &methods {
                out.push('\t');
                if let Some(a) = aggs.iter().find(|a| a.domain == *d && a.method == *m) {
                    out.push_str(&format!("{:.4}", f(a)));
                }
            }
            out.push('\n');
        }
        out
    };
    vec![
        ("time.tsv", panel(&|a| a.mean_time_s)),
        ("plan_length.tsv", panel(&|a| a.mean_plan_len)),
        ("goal_difference.tsv", panel(&|a| a.goal_difference)),
    ]
}

/// Problem families the suite generator knows.
pub const FAMILIES: [&str; 3] = ["gridworld", "boxpush", "recycling"];

/// `count` random instances of `family` at the evaluation sizes (7x7 grid,
/// 3x3 box pushing, 3x3 recycling with 5 battery levels), 3 goals each,
/// reproducible from `seed`.
pub fn generate_suite(family: &str, count: usize, seed: u64) -> Result<Vec<(String, ProblemFile)>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let p = match family {
                "gridworld" => random_gridworld(7, 7, 3, &mut rng),
                "boxpush" => random_boxpush(3, 3, 3, &mut rng),
                "recycling" => random_recycling(3, 3, 5, 3, &mut rng),
                other => return Err(format!("unknown family {other:?}")),
            }
            .map_err(|e| e.to_string())?;
            let name = format!("{family}-{i:02}");
            Ok((name.clone(), ProblemFile { name: Some(name), ..p }))
        })
        .collect()
}

/// Writes a generated suite as `<name>.copp` files.
pub fn write_suite(dir: &Path, suite: &[(String, ProblemFile)]) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, p) in suite {
        std::fs::write(dir.join(format!("{name}.copp")), serialize(p))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_matches_records() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{CSV_HEADER}\n"));

        let r = RunRecord {
            problem: "gridworld-00".into(),
            method: Method::Search,
            k: Some(2),
            j: Some(2),
            beta: None,
            delta: Some(1),
            status: "solved".into(),
            time_s: 0.5,
            plan_len: Some(7),
            goals_x: Some(3),
            goals_c: Some(1),
        };
        let mut buf = Vec::new();
        write_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), Some("gridworld-00,search,2,2,,1,solved,0.5,7,3,1"));
    }

    #[test]
    fn aggregates_and_domains() {
        assert_eq!(domain_of("gridworld-03"), "gridworld");
        assert_eq!(domain_of("logistics-2factories"), "logistics");
        assert_eq!(domain_of("plain"), "plain");
        let mk = |p: &str, x: usize, c: usize| RunRecord {
            problem: p.into(),
            method: Method::Ip,
            k: None,
            j: None,
            beta: Some(0.5),
            delta: None,
            status: "optimal".into(),
            time_s: 1.0,
            plan_len: Some(4),
            goals_x: Some(x),
            goals_c: Some(c),
        };
        let mut failed = mk("grid-2", 0, 0);
        failed.plan_len = None;
        let aggs = aggregate(&[mk("grid-0", 3, 1), mk("grid-1", 2, 2), failed]);
        assert_eq!(aggs.len(), 1);
        assert_eq!((aggs[0].runs, aggs[0].solved), (3, 2));
        assert_eq!(aggs[0].goal_difference, 2.5 - 1.5);
        let tables = plot_tables(&aggs);
        assert_eq!(tables[2].1, "domain\tip\ngrid\t1.0000\n");
    }

    #[test]
    fn methods_parse() {
        assert_eq!("ip".parse::<Method>(), Ok(Method::Ip));
        assert!("gurobi".parse::<Method>().is_err());
    }

    #[test]
    fn suite_generation_is_seeded() {
        for fam in FAMILIES {
            let a = generate_suite(fam, 3, 42).unwrap();
            let b = generate_suite(fam, 3, 42).unwrap();
            assert_eq!(a, b);
            assert_eq!(a[0].0, format!("{fam}-00"));
        }
        assert!(generate_suite("sokoban", 1, 0).is_err());
    }
}
