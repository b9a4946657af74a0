use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proxemia_core::io::read_metrics;
use proxemia_core::navigation::PlannerKind;

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn proxemia(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_proxemia")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn benchmark_writes_one_proxemic_row_per_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let o = proxemia(&["benchmark", "--scenario", path(&scenarios()), "--out", path(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_metrics(dir.path().join("metrics.csv")).unwrap();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.planner == PlannerKind::Proxemic && r.goal_reached && r.comfort_intrusions == 0));
    assert!(dir.path().join("timing.csv").exists());
    assert!(dir.path().join("traces/corridor_baseline_robot.csv").exists());
}

#[test]
fn navigate_reports_both_planners() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = scenarios().join("head_on.toml");
    let o = proxemia(&["navigate", "--scenario", path(&scenario), "--out", path(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_metrics(dir.path().join("metrics.csv")).unwrap();
    let planners: Vec<_> = rows.iter().map(|r| r.planner).collect();
    assert_eq!(planners, [PlannerKind::Proxemic, PlannerKind::Baseline]);
    assert_eq!(rows[1].additional_time_fraction, 0.0);
    assert!(rows[1].comfort_intrusions >= 1);
}

#[test]
fn compare_prints_summary_table() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = scenarios().join("corridor.toml");
    let o = proxemia(&["compare", "--scenario", path(&scenario), "--out", path(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.contains("proxemic") && text.contains("baseline"));
}

#[test]
fn simulate_then_estimate_produces_a_row_per_sample() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = scenarios().join("queue.toml");
    let o = proxemia(&["simulate", "--scenario", path(&scenario), "--out", path(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let observations = dir.path().join("observations.csv");
    let samples = fs::read_to_string(&observations).unwrap().lines().count() - 1;

    let est = dir.path().join("est");
    let o = proxemia(&[
        "estimate",
        "--trajectories",
        path(&observations),
        "--scenario",
        path(&scenario),
        "--out",
        path(&est),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let timeline = fs::read_to_string(est.join("timeline.csv")).unwrap();
    assert_eq!(timeline.lines().count() - 1, samples);
    assert!(timeline.starts_with("time,id,x,y,vx,vy,planning_horizon,radius,preferred_speed"));
}

#[test]
fn invalid_scenario_exits_with_two_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.toml");
    fs::write(
        &file,
        "[robot]\nstart = [0.0, 0.0]\ngoal = [5.0, 0.0]\n\n[[pedestrians]]\nid = \"a\"\nstart = [2.0, 1.0]\ngoal = [2.0, -5.0]\nparams = [1.25, -0.2, 1.39]\n",
    )
    .unwrap();
    let o = proxemia(&["navigate", "--scenario", path(&file), "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("radius"), "{}", stderr(&o));
}

#[test]
fn unknown_scenario_key_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("typo.toml");
    fs::write(&file, "[sim]\ndtt = 0.1\n").unwrap();
    let o = proxemia(&["simulate", "--scenario", path(&file), "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn out_of_range_override_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = scenarios().join("head_on.toml");
    let o = proxemia(&["navigate", "--scenario", path(&scenario), "--theta", "1.5", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn mostly_malformed_stream_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("obs.csv");
    fs::write(&file, "time,id,x,y\n0,a,0,0\n0.1,a,zero,0\n0.2,a,0.2,oops\n0.3,a,0.3,0\n").unwrap();
    let o = proxemia(&["estimate", "--trajectories", path(&file), "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn out_of_order_stream_names_the_pedestrian() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("obs.csv");
    fs::write(&file, "time,id,x,y\n0,a,0,0\n0.2,walker,0,0\n0.1,walker,0,0.1\n0.1,a,0.1,0\n").unwrap();
    let o = proxemia(&["estimate", "--trajectories", path(&file), "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("walker"), "{}", stderr(&o));
}

#[test]
fn unreachable_goal_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("short.toml");
    fs::write(&file, "[sim]\nmax_steps = 5\n\n[robot]\nstart = [0.0, 0.0]\ngoal = [20.0, 0.0]\n").unwrap();
    let o = proxemia(&["navigate", "--scenario", path(&file), "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(dir.path().join("metrics.csv").exists());
}

#[test]
fn missing_scenario_file_exits_with_three() {
    let o = proxemia(&["simulate", "--scenario", "/nonexistent/scenario.toml"]);
    assert_eq!(o.status.code(), Some(3));
}

fn table(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn metrics_are_recomputable_from_traces() {
    let dir = tempfile::tempdir().unwrap();
    let o = proxemia(&["benchmark", "--scenario", path(&scenarios()), "--planner", "both", "--out", path(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let traces = dir.path().join("traces");
    for row in read_metrics(dir.path().join("metrics.csv")).unwrap() {
        let prefix = format!("{}_{}", row.scenario, row.planner);
        let robot = table(&traces.join(format!("{prefix}_robot.csv")));
        let crowd = table(&traces.join(format!("{prefix}_crowd.csv")));
        let peds = table(&traces.join(format!("{prefix}_pedestrians.csv")));
        let f = |s: &str| s.parse::<f64>().unwrap();
        let mut closest = f64::INFINITY;
        let mut intrusions = 0;
        for ped in &peds {
            let (radius, comfort) = (f(&ped[2]), f(&ped[3]));
            let mut inside = false;
            for r in &robot {
                let Some(c) = crowd.iter().find(|c| c[0] == r[0] && c[2] == ped[0]) else {
                    inside = false;
                    continue;
                };
                let gap = (f(&r[2]) - f(&c[3])).hypot(f(&r[3]) - f(&c[4])) - radius;
                closest = closest.min(gap);
                let now = gap < comfort;
                intrusions += usize::from(now && !inside);
                inside = now;
            }
        }
        assert_eq!(intrusions, row.comfort_intrusions, "{prefix}");
        assert!((closest - row.closest_approach).abs() < 1e-4, "{prefix}: {closest} vs {}", row.closest_approach);
        let end = robot.last().map(|r| f(&r[1])).unwrap();
        assert!((end - row.travel_time).abs() < 1e-9, "{prefix}");
    }
}
