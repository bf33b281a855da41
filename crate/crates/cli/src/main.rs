use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use mocopp::bench::{self, Method, RunRecord, SuiteSettings};
use mocopp::ip::{decode, encode, export_lp, EncodeOptions};
use mocopp::problem::{gen_boxpush, gen_gridworld, gen_recycling, BoxPushConfig, Cell, RecyclingConfig};
use mocopp::search::{baseline_gbfs, search, GoalSpec, SearchConfig};
use mocopp::solver::{solve, verify, Incumbent, SolveStatus, SolverConfig};
use mocopp::{
    parse, run_trace, serialize, BeliefTrace, EncodeError, Execution, ObserverId, Plan, ProblemFile, SearchError,
};

#[derive(Parser)]
#[command(name = "mocopp", version, about = "Plans that hide the goal from one observer and show it to another")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the integer-program encoding to optimality at a fixed horizon.
    SolveIp {
        file: PathBuf,
        #[arg(long)]
        horizon: usize,
        /// Adversary must keep at least K goals possible.
        #[arg(long)]
        k: Option<usize>,
        /// Cooperator may see at most J goals possible.
        #[arg(long)]
        j: Option<usize>,
        #[arg(long)]
        beta: Option<f64>,
        /// Forbid the true goal from the adversary's final belief.
        #[arg(long)]
        exploit_error: bool,
        /// Print node counts and each improving incumbent to stderr.
        #[arg(long)]
        solver_stats: bool,
        /// Print every constraint row with its tag, then exit.
        #[arg(long)]
        dump_constraints: bool,
        #[arg(long, default_value_t = 900)]
        time_limit: u64,
        /// Branch on subtrees in parallel.
        #[arg(long)]
        parallel: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Belief-space best-first search under goal-count bounds.
    SolveSearch {
        file: PathBuf,
        #[arg(long)]
        at_least: usize,
        #[arg(long)]
        at_most: usize,
        #[arg(long, default_value_t = 3)]
        delta_max: usize,
        /// Expansions per Δ round.
        #[arg(long, default_value_t = 200_000)]
        node_limit: usize,
        #[arg(long, default_value_t = 900)]
        time_limit: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Cheapest plan to the true goal, ignoring both observers.
    Baseline {
        file: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Write the encoding in CPLEX LP format.
    ExportLp {
        file: PathBuf,
        #[arg(long)]
        horizon: usize,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        j: Option<usize>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        exploit_error: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Generate a problem file (or a seeded suite with --count).
    Gen {
        family: Family,
        /// Random instance(s) from this seed; without it, the standard instance.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of random instances, written into the --output directory.
        #[arg(long, requires = "seed")]
        count: Option<usize>,
        /// Gridworld size as WxH.
        #[arg(long, value_parser = parse_size)]
        size: Option<(usize, usize)>,
        /// Gridworld start cell as ROW,COL.
        #[arg(long, value_parser = parse_cell)]
        start: Option<Cell>,
        /// Gridworld goal cells, e.g. "2,2 0,6 4,6".
        #[arg(long)]
        goals: Option<String>,
        /// 0-based index of the true goal.
        #[arg(long, default_value_t = 0)]
        true_goal: usize,
        /// File (single instance) or directory (--count); stdout if absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run methods over every .copp file in a directory.
    Bench {
        dir: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "baseline,ip,search")]
        methods: Vec<Method>,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Directory for per-panel TSVs (time, plan length, goal difference).
        #[arg(long)]
        plot_data: Option<PathBuf>,
        /// Regenerate the suite into DIR first: FAMILY[,FAMILY…].
        #[arg(long, value_delimiter = ',')]
        generate: Vec<Family>,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 2020)]
        seed: u64,
        /// Search bounds.
        #[arg(long, default_value_t = 2)]
        at_least: usize,
        #[arg(long, default_value_t = 2)]
        at_most: usize,
        /// IP bounds (unconstrained by default).
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        j: Option<usize>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 3)]
        delta_max: usize,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, default_value_t = 20)]
        max_horizon: usize,
        /// Seconds per run.
        #[arg(long, default_value_t = 900)]
        time_limit: u64,
        /// Run problems one at a time.
        #[arg(long)]
        sequential: bool,
    },
    /// Replay a plan file and print each observer's belief evolution.
    Trace { file: PathBuf, plan: PathBuf },
}

#[derive(clap::Args)]
struct Output {
    /// Write the plan (one action per line) to this file.
    #[arg(short = 'o', long = "plan-out")]
    plan_out: Option<PathBuf>,
    /// Print the belief trace.
    #[arg(long)]
    trace: bool,
    /// Print the run record as JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Gridworld,
    Boxpush,
    Recycling,
}

impl Family {
    fn name(self) -> &'static str {
        match self {
            Family::Gridworld => "gridworld",
            Family::Boxpush => "boxpush",
            Family::Recycling => "recycling",
        }
    }
}

fn parse_cell(s: &str) -> Result<Cell, String> {
    let (r, c) = s.split_once(',').ok_or("expected ROW,COL")?;
    Ok((r.trim().parse().map_err(|_| "bad row")?, c.trim().parse().map_err(|_| "bad column")?))
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once('x').ok_or("expected WxH")?;
    Ok((w.parse().map_err(|_| "bad width")?, h.parse().map_err(|_| "bad height")?))
}

/// Failure classes, mapped to exit codes.
#[derive(Debug)]
enum Failure {
    NoSolution(String),
    Usage(anyhow::Error),
    Verification(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

fn search_failure(e: SearchError) -> Failure {
    match e {
        SearchError::InvalidSpec(m) => Failure::Usage(anyhow!("{m}")),
        SearchError::Verification(m) => Failure::Verification(m),
        other => Failure::NoSolution(other.to_string()),
    }
}

fn load(path: &Path) -> Result<ProblemFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn problem_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn goal_labels(p: &ProblemFile, ids: &[usize]) -> String {
    if ids.is_empty() {
        return "-".into();
    }
    ids.iter().map(|&g| p.goals.labels()[g].as_str()).collect::<Vec<_>>().join(",")
}

/// Replays `plan` afresh and reports it.
fn report(p: &ProblemFile, mut rec: RunRecord, plan: &Plan, out: &Output) -> Result<(), Failure> {
    let trace = run_trace(&p.domain, &p.sensors, plan).map_err(|e| Failure::Verification(e.to_string()))?;
    let gx = trace.final_goals(ObserverId::Adversary, &p.goals);
    let gc = trace.final_goals(ObserverId::Cooperative, &p.goals);
    rec.plan_len = Some(plan.len());
    rec.goals_x = Some(gx.len());
    rec.goals_c = Some(gc.len());
    if let Some(path) = &out.plan_out {
        fs::write(path, plan.to_text(&p.domain)).with_context(|| format!("writing {}", path.display()))?;
    }
    if out.json {
        println!("{}", serde_json::to_string(&rec).expect("record serializes"));
    } else {
        println!("; {} {} plan_len {} goals_X {} goals_C {}", rec.method, rec.status, plan.len(), gx.len(), gc.len());
        print!("{}", plan.to_text(&p.domain));
    }
    if out.trace {
        print_trace(p, &trace);
    }
    Ok(())
}

fn print_trace(p: &ProblemFile, trace: &BeliefTrace) {
    println!("; t observer symbol |belief| goals");
    print!("{}", trace.to_lines(&p.goals));
    for id in [ObserverId::Cooperative, ObserverId::Adversary] {
        if trace.observer(id).is_some() {
            let g = trace.final_goals(id, &p.goals);
            println!("goals_{} {} {}", id, g.len(), goal_labels(p, &g));
        }
    }
}

fn record(name: String, method: Method, status: &str, elapsed: Duration) -> RunRecord {
    RunRecord {
        problem: name,
        method,
        k: None,
        j: None,
        beta: None,
        delta: None,
        status: status.into(),
        time_s: elapsed.as_secs_f64(),
        plan_len: None,
        goals_x: None,
        goals_c: None,
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::SolveIp {
            file,
            horizon,
            k,
            j,
            beta,
            exploit_error,
            solver_stats,
            dump_constraints,
            time_limit,
            parallel,
            out,
        } => {
            let p = load(&file)?;
            let opts = EncodeOptions { k_obfuscation: k, j_legibility: j, beta, exploit_error, ..Default::default() };
            let start = Instant::now();
            let m = encode(&p, horizon, &opts).map_err(|e| match e {
                EncodeError::GoalUnreachable(_) => Failure::NoSolution(e.to_string()),
                other => Failure::Usage(other.into()),
            })?;
            if dump_constraints {
                print!("{}", m.dump_constraints());
                return Ok(());
            }
            let mut cfg = SolverConfig {
                time_limit: Duration::from_secs(time_limit),
                execution: if parallel { Execution::Parallel } else { Execution::Sequential },
                ..Default::default()
            };
            if solver_stats {
                eprintln!("; {} variables, {} constraints", m.num_vars(), m.constraints.len());
                cfg.on_incumbent = Some(std::sync::Arc::new(|i: &Incumbent| {
                    eprintln!("; incumbent {:.4} after {} nodes, {:.3}s", i.objective, i.nodes, i.time_s)
                }));
            }
            let res = solve(&m, &cfg);
            if solver_stats {
                eprintln!(
                    "; {} after {} nodes, {} propagations, {:.3}s",
                    res.status.as_str(),
                    res.stats.nodes,
                    res.stats.propagations,
                    res.stats.time_s
                );
            }
            let Some(a) = res.assignment.as_ref() else {
                return Err(Failure::NoSolution(format!("solver status {}", res.status.as_str())));
            };
            let v = verify(&m, a);
            if !v.feasible {
                return Err(Failure::Verification(format!("assignment violates rows {:?}", v.violated)));
            }
            let d = decode(&p, &m, a).map_err(|e| Failure::Verification(e.to_string()))?;
            let mut rec = record(problem_name(&file), Method::Ip, res.status.as_str(), start.elapsed());
            (rec.k, rec.j, rec.beta) = (k, j, Some(beta.or(p.beta).unwrap_or(0.5)));
            if !out.json {
                println!("; horizon {horizon} objective {:.4}", d.objective);
            }
            report(&p, rec, &d.plan, &out)?;
            if exploit_error && d.goals_x.contains(&p.goals.true_goal_index()) {
                return Err(Failure::Verification("true goal survives in the adversary's belief".into()));
            }
            if res.status == SolveStatus::LimitReached {
                eprintln!("warning: limit reached; plan is not proven optimal");
            }
            Ok(())
        }
        Cmd::SolveSearch { file, at_least, at_most, delta_max, node_limit, time_limit, out } => {
            let p = load(&file)?;
            let phi = GoalSpec::new(&p, at_least, at_most).map_err(search_failure)?;
            let cfg = SearchConfig {
                delta_max,
                node_limit,
                time_limit: Duration::from_secs(time_limit),
                ..Default::default()
            };
            let start = Instant::now();
            let o = search(&p, &phi, &cfg).map_err(search_failure)?;
            let mut rec = record(problem_name(&file), Method::Search, "solved", start.elapsed());
            (rec.k, rec.j, rec.delta) = (Some(at_least), Some(at_most), Some(o.delta));
            report(&p, rec, &o.plan, &out)
        }
        Cmd::Baseline { file, out } => {
            let p = load(&file)?;
            let start = Instant::now();
            let (plan, _) = baseline_gbfs(&p).map_err(search_failure)?;
            report(&p, record(problem_name(&file), Method::Baseline, "solved", start.elapsed()), &plan, &out)
        }
        Cmd::ExportLp { file, horizon, k, j, beta, exploit_error, output } => {
            let p = load(&file)?;
            let opts = EncodeOptions { k_obfuscation: k, j_legibility: j, beta, exploit_error, ..Default::default() };
            let m = encode(&p, horizon, &opts).map_err(|e| Failure::Usage(e.into()))?;
            fs::write(&output, export_lp(&m)).with_context(|| format!("writing {}", output.display()))?;
            eprintln!("{} variables, {} constraints -> {}", m.num_vars(), m.constraints.len(), output.display());
            Ok(())
        }
        Cmd::Gen { family, seed, count, size, start, goals, true_goal, output } => {
            gen(family, seed, count, size, start, goals, true_goal, output).map_err(Failure::Usage)
        }
        Cmd::Bench {
            dir,
            methods,
            csv,
            plot_data,
            generate,
            count,
            seed,
            at_least,
            at_most,
            k,
            j,
            beta,
            delta_max,
            horizon,
            max_horizon,
            time_limit,
            sequential,
        } => {
            for fam in &generate {
                let suite = bench::generate_suite(fam.name(), count, seed).map_err(|e| anyhow!(e))?;
                bench::write_suite(&dir, &suite).with_context(|| format!("writing suite to {}", dir.display()))?;
            }
            let limit = Duration::from_secs(time_limit);
            let settings = SuiteSettings {
                k: at_least,
                j: at_most,
                ip_k: k,
                ip_j: j,
                beta,
                horizon,
                max_horizon,
                ip_time_limit: limit,
                search: SearchConfig { delta_max, time_limit: limit, ..Default::default() },
                execution: if sequential { Execution::Sequential } else { Execution::Parallel },
                ..Default::default()
            };
            let records =
                bench::run_suite(&dir, &methods, &settings).with_context(|| format!("reading {}", dir.display()))?;
            match &csv {
                Some(path) => {
                    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
                    bench::write_csv(&records, f).context("writing CSV")?;
                }
                None => bench::write_csv(&records, std::io::stdout()).context("writing CSV")?,
            }
            let aggs = bench::aggregate(&records);
            eprintln!(
                "{:<12} {:<9} {:>6} {:>9} {:>9} {:>8} {:>8} {:>6}",
                "domain", "method", "solved", "time_s", "plan_len", "goals_X", "goals_C", "diff"
            );
            for a in &aggs {
                eprintln!(
                    "{:<12} {:<9} {:>3}/{:<2} {:>9.3} {:>9.2} {:>8.2} {:>8.2} {:>6.2}",
                    a.domain,
                    a.method,
                    a.solved,
                    a.runs,
                    a.mean_time_s,
                    a.mean_plan_len,
                    a.mean_goals_x,
                    a.mean_goals_c,
                    a.goal_difference
                );
            }
            if let Some(pd) = plot_data {
                fs::create_dir_all(&pd).with_context(|| format!("creating {}", pd.display()))?;
                for (name, body) in bench::plot_tables(&aggs) {
                    fs::write(pd.join(name), body).with_context(|| format!("writing {name}"))?;
                }
            }
            Ok(())
        }
        Cmd::Trace { file, plan } => {
            let p = load(&file)?;
            let text = fs::read_to_string(&plan).with_context(|| format!("reading {}", plan.display()))?;
            let plan = Plan::from_text(&p.domain, &text).map_err(|e| Failure::Usage(e.into()))?;
            let trace = run_trace(&p.domain, &p.sensors, &plan).map_err(|e| Failure::Usage(e.into()))?;
            print_trace(&p, &trace);
            Ok(())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn gen(
    family: Family,
    seed: Option<u64>,
    count: Option<usize>,
    size: Option<(usize, usize)>,
    start: Option<Cell>,
    goals: Option<String>,
    true_goal: usize,
    output: Option<PathBuf>,
) -> Result<()> {
    if let (Some(seed), Some(n)) = (seed, count) {
        let dir = output.ok_or_else(|| anyhow!("--count needs an --output directory"))?;
        let suite = bench::generate_suite(family.name(), n, seed).map_err(|e| anyhow!(e))?;
        bench::write_suite(&dir, &suite)?;
        eprintln!("wrote {n} {} problems to {}", family.name(), dir.display());
        return Ok(());
    }
    let p = match (family, seed) {
        (_, Some(seed)) => bench::generate_suite(family.name(), 1, seed).map_err(|e| anyhow!(e))?.remove(0).1,
        (Family::Gridworld, None) => {
            let (w, h) = size.unwrap_or((7, 7));
            let goals: Vec<Cell> = match goals {
                Some(g) => g.split_whitespace().map(parse_cell).collect::<Result<_, _>>().map_err(|e| anyhow!(e))?,
                None => vec![(2, 2), (0, 6), (4, 6)],
            };
            gen_gridworld(w, h, start.unwrap_or((h - 1, 0)), &goals, true_goal)?
        }
        (Family::Boxpush, None) => gen_boxpush(&BoxPushConfig::standard())?,
        (Family::Recycling, None) => gen_recycling(&RecyclingConfig::standard())?,
    };
    let text = serialize(&p);
    match output {
        Some(path) => fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::NoSolution(m)) => {
            eprintln!("no solution: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Verification(m)) => {
            eprintln!("verification failure: {m}");
            ExitCode::from(3)
        }
    }
}
