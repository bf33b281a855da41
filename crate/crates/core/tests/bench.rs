use mocopp::bench::{
    aggregate, generate_suite, run_suite, write_csv, write_suite, Method, RunRecord, SuiteSettings, CSV_HEADER,
};
use mocopp::Execution;

fn csv_without_time(records: &[RunRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(records, &mut buf).unwrap();
    String::from_utf8(buf)
        .unwrap()
        .lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            f[7] = "";
            f.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn empty_directory_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let records = run_suite(dir.path(), &Method::ALL, &SuiteSettings::default()).unwrap();
    assert!(records.is_empty());
    let mut buf = Vec::new();
    write_csv(&records, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().trim_end(), CSV_HEADER);
}

#[test]
fn seeded_suite_is_reproducible_and_respects_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let suite = generate_suite("gridworld", 4, 11).unwrap();
    write_suite(dir.path(), &suite).unwrap();
    std::fs::write(dir.path().join("broken.copp"), "(fluents").unwrap();
    std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();

    let methods = [Method::Baseline, Method::Search];
    let seq = SuiteSettings { execution: Execution::Sequential, ..Default::default() };
    let a = run_suite(dir.path(), &methods, &seq).unwrap();
    let b = run_suite(dir.path(), &methods, &SuiteSettings::default()).unwrap();
    assert_eq!(a.len(), 5 * methods.len(), "one row per (problem, method)");
    assert_eq!(csv_without_time(&a), csv_without_time(&b));

    assert!(a.iter().filter(|r| r.problem == "broken").all(|r| r.status.starts_with("parse-error")));
    for r in a.iter().filter(|r| r.method == Method::Search && r.solved()) {
        assert!(r.goals_x.unwrap() >= 2 && r.goals_c.unwrap() <= 2, "{r:?}");
        assert!(r.goals_x.unwrap() <= 3);
    }
    let aggs = aggregate(&a);
    let grid: Vec<_> = aggs.iter().filter(|g| g.domain == "gridworld").collect();
    assert_eq!(grid.len(), 2);
    for g in grid {
        assert_eq!(g.runs, 4);
        assert!((g.goal_difference - (g.mean_goals_x - g.mean_goals_c)).abs() < 1e-12);
    }
}

#[test]
fn ip_runs_increase_the_horizon_until_feasible() {
    let dir = tempfile::tempdir().unwrap();
    let p = mocopp::problem::gen_gridworld(3, 3, (2, 0), &[(0, 0), (0, 2), (2, 2)], 1).unwrap();
    std::fs::write(dir.path().join("grid-0.copp"), mocopp::serialize(&p)).unwrap();
    // Corner to corner takes 4 steps; starting at 1 the policy tries 1 and 3 first.
    let s = SuiteSettings { horizon: Some(1), max_horizon: 6, ..Default::default() };
    let r = &run_suite(dir.path(), &[Method::Ip], &s).unwrap()[0];
    assert_eq!(r.status, "optimal");
    assert!(r.plan_len.unwrap() <= 5);
    let capped = SuiteSettings { horizon: Some(1), max_horizon: 3, ..Default::default() };
    let r = &run_suite(dir.path(), &[Method::Ip], &capped).unwrap()[0];
    assert_eq!((r.status.as_str(), r.plan_len), ("no-solution", None));
}
