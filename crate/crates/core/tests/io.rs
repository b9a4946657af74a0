use std::path::Path;

use proptest::prelude::*;
use proxemia_core::io::{format_real, load_scenario, read_metrics, write_metrics, MetricsRow};
use proxemia_core::navigation::{NavMetrics, PlannerKind};

fn scenario_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

#[test]
fn every_shipped_scenario_loads() {
    let mut names = Vec::new();
    for entry in std::fs::read_dir(scenario_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let s = load_scenario(&path).unwrap();
            assert!(s.robot.is_some(), "{}", s.name);
            assert!(!s.pedestrians.is_empty() && s.pedestrians.len() <= 20, "{}", s.name);
            names.push(s.name);
        }
    }
    names.sort();
    assert_eq!(names.len(), 8, "{names:?}");
    let single = load_scenario(scenario_dir().join("single/single_pass.toml")).unwrap();
    assert_eq!(single.pedestrians.len(), 1);
}

fn metrics(scenario: &str, t: f64, base: f64, closest: f64) -> NavMetrics {
    NavMetrics {
        scenario: scenario.into(),
        planner: PlannerKind::Proxemic,
        goal_reached: true,
        travel_time: t,
        baseline_travel_time: base,
        additional_time_fraction: (t - base) / base,
        comfort_intrusions: 0,
        reachability_intrusions: 2,
        intrusions_avoided: 3,
        closest_approach: closest,
        emergency_stops: 1,
        decision_time: 1e-3,
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 5e-6 * b.abs().max(1e-300)
}

proptest! {
    #[test]
    fn metrics_round_trip_to_six_significant_digits(t in 0.1f64..500.0, base in 0.1f64..500.0, closest in 0.0f64..30.0) {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("m.csv");
        let row = metrics("plaza", t, base, closest);
        write_metrics(std::slice::from_ref(&row), &file).unwrap();
        let back: Vec<MetricsRow> = read_metrics(&file).unwrap();
        prop_assert_eq!(back.len(), 1);
        let b = &back[0];
        prop_assert_eq!(&b.scenario, "plaza");
        prop_assert_eq!(b.planner, PlannerKind::Proxemic);
        prop_assert!(close(b.travel_time, t) && close(b.baseline_travel_time, base));
        prop_assert!(close(b.additional_time_fraction, row.additional_time_fraction));
        prop_assert!(close(b.closest_approach, closest));
        prop_assert_eq!((b.reachability_intrusions, b.intrusions_avoided, b.emergency_stops), (2, 3, 1));
    }

    #[test]
    fn formatting_is_stable_under_reparse(x in -1e6f64..1e6) {
        let once = format_real(x);
        prop_assert_eq!(format_real(once.parse().unwrap()), once);
    }
}
