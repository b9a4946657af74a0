use std::path::PathBuf;

use proptest::prelude::*;
use proxemia_core::io::load_scenario;
use proxemia_core::navigation::{
    baseline_margins, control_samples, is_feasible, margins_for, plan_step, plan_step_baseline, plan_with_margins,
    proxemic_margins, run_pair, run_single, run_trial, Forecast, Margins, PlannerKind, TrialRun,
};
use proxemia_core::prediction::PredictedPath;
use proxemia_core::sim::{PedestrianSpec, RobotSpec};
use proxemia_core::{
    proxemic_profile, EmotionLabel, EmotionVector, MotionParams, PedestrianObservation, PedestrianState,
    PlannerConfig, RobotState, Scenario, Vec2,
};

const DT: f64 = 0.1;

fn scenario_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(rel)
}

fn emotion_for(label: EmotionLabel) -> EmotionVector {
    let v = match label {
        EmotionLabel::Happy => [0.9, 0.0, 0.0],
        EmotionLabel::Angry => [0.0, 0.9, 0.0],
        EmotionLabel::Sad => [0.0, 0.0, 0.9],
        EmotionLabel::Neutral => [0.1, 0.1, 0.1],
    };
    EmotionVector::from_array(v).unwrap()
}

fn pedestrian(label: EmotionLabel, position: Vec2, velocity: Vec2) -> PedestrianState {
    let state = PedestrianState::new(
        PedestrianObservation {
            id: "p".into(),
            position,
            current_velocity: velocity,
            predicted_velocity: velocity,
            params: MotionParams::average(),
            emotion_trajectory: emotion_for(label),
            emotion_face: None,
            tracking_confidence: 1.0,
        },
        0.55,
    )
    .unwrap();
    assert_eq!(state.label(), label);
    state
}

fn straight_path(start: Vec2, velocity: Vec2, horizon: f64) -> PredictedPath {
    let steps = (horizon / DT).round() as usize;
    PredictedPath {
        id: "p".into(),
        horizon,
        samples: (0..=steps).map(|k| (k as f64 * DT, start + velocity * (k as f64 * DT))).collect(),
    }
}

fn robot(position: Vec2, velocity: Vec2, goal: Vec2) -> RobotState {
    let mut r = RobotState::new(position, goal, 1.2, 2.0, 0.3).unwrap();
    r.current_velocity = velocity;
    let to = goal - position;
    r.preferred_velocity = to * (1.2 / to.length());
    r
}

/// Smallest pedestrian-surface to robot-center distance for one pedestrian, from the logs.
fn closest_approach(run: &TrialRun, id: &str) -> f64 {
    let truth = run.truth.iter().find(|t| t.id.as_str() == id).unwrap();
    run.crowd
        .records
        .iter()
        .filter(|r| r.agent.as_str() == id)
        .map(|r| r.position.distance(run.robot[r.step].position) - truth.radius)
        .fold(f64::INFINITY, f64::min)
}

fn max_lateral(run: &TrialRun) -> f64 {
    run.robot.iter().map(|r| r.position.y.abs()).fold(0.0, f64::max)
}

fn standing_scenario(label: EmotionLabel) -> Scenario {
    let ped = PedestrianSpec::new("p", Vec2::ZERO, Vec2::ZERO, MotionParams::average()).with_emotion(emotion_for(label));
    let mut s = Scenario::new(vec![ped], DT, 400).unwrap();
    s.robot = Some(RobotSpec {
        start: Vec2::new(-8.0, 0.0),
        goal: Vec2::new(8.0, 0.0),
        max_speed: 1.2,
        max_accel: 2.0,
        radius: 0.3,
    });
    s
}

#[test]
fn no_pedestrians_returns_preferred_velocity_exactly() {
    let config = PlannerConfig::default();
    let r = robot(Vec2::new(-3.0, 1.0), Vec2::new(1.0, 0.1), Vec2::new(5.0, 2.0));
    let ours = plan_step(&r, &[], &[], DT, &config);
    let theirs = plan_step_baseline(&r, &[], &[], DT, &config);
    assert_eq!(ours.velocity, r.preferred_velocity);
    assert!(!ours.emergency);
    assert_eq!(ours, theirs);
}

#[test]
fn standing_pedestrian_is_passed_outside_its_comfort_distance() {
    let neutral = run_single(&standing_scenario(EmotionLabel::Neutral), PlannerKind::Proxemic).unwrap();
    let sad = run_single(&standing_scenario(EmotionLabel::Sad), PlannerKind::Proxemic).unwrap();
    assert!(neutral.goal_reached && sad.goal_reached);
    let (dn, ds) = (closest_approach(&neutral, "p"), closest_approach(&sad, "p"));
    assert!(dn >= 0.9203, "neutral closest approach {dn}");
    assert!(ds >= 1.1271, "sad closest approach {ds}");
    assert!(max_lateral(&sad) > max_lateral(&neutral));
    assert_eq!(neutral.comfort_intrusions, 0);
    assert_eq!(sad.comfort_intrusions, 0);
}

#[test]
fn empty_scenario_has_no_intrusions_or_overhead() {
    let mut s = Scenario::new(Vec::new(), DT, 300).unwrap();
    s.robot = Some(RobotSpec {
        start: Vec2::new(0.0, 0.0),
        goal: Vec2::new(10.0, 0.0),
        max_speed: 1.2,
        max_accel: 2.0,
        radius: 0.3,
    });
    let m = run_trial(&s, PlannerKind::Proxemic).unwrap();
    assert!(m.goal_reached);
    assert_eq!(m.comfort_intrusions + m.reachability_intrusions, 0);
    assert_eq!(m.additional_time_fraction, 0.0);
}

#[test]
fn corridor_baseline_intrudes_where_proxemic_does_not() {
    let s = load_scenario(scenario_path("corridor.toml")).unwrap();
    let (ours, base) = run_pair(&s).unwrap();
    let intruded = |run: &TrialRun| {
        run.truth
            .iter()
            .any(|t| closest_approach(run, t.id.as_str()) < t.comfort)
    };
    assert!(intruded(&base));
    assert!(!intruded(&ours));
    assert!(base.travel_time <= ours.travel_time);
}

#[test]
fn crossing_is_intrusion_free_within_overhead() {
    let s = load_scenario(scenario_path("crossing.toml")).unwrap();
    assert_eq!(s.pedestrians.len(), 8);
    let m = run_trial(&s, PlannerKind::Proxemic).unwrap();
    assert!(m.goal_reached);
    assert_eq!(m.comfort_intrusions, 0);
    assert!(m.additional_time_fraction < 0.25, "{}", m.additional_time_fraction);
}

#[test]
fn single_pass_baseline_is_not_slower() {
    let s = load_scenario(scenario_path("single/single_pass.toml")).unwrap();
    let (ours, base) = run_pair(&s).unwrap();
    assert!(base.travel_time <= ours.travel_time);
}

#[test]
fn sad_margins_exceed_happy_margins() {
    let config = PlannerConfig::default();
    let r = robot(Vec2::ZERO, Vec2::ZERO, Vec2::new(5.0, 0.0));
    let happy = proxemic_margins(EmotionLabel::Happy, 0.61, &r, &config);
    let sad = proxemic_margins(EmotionLabel::Sad, 0.61, &r, &config);
    assert!(sad.hard > happy.hard && sad.soft > happy.soft);
    let expected = 0.61 + proxemic_profile(EmotionLabel::Sad).comfort_distance() + config.safety_buffer;
    assert!((sad.hard - expected).abs() < 1e-12);
}

/// A robot heading right and one pedestrian somewhere ahead of it.
fn encounter() -> impl Strategy<Value = (RobotState, Vec2, Vec2)> {
    (
        (-0.6..1.2f64, -0.5..0.5f64),
        (1.0..6.0f64, -3.0..3.0f64),
        (-1.4..1.4f64, -1.4..1.4f64),
    )
        .prop_map(|((vx, vy), (px, py), (ux, uy))| {
            let r = robot(Vec2::ZERO, Vec2::new(vx, vy).clamp_length(1.2), Vec2::new(10.0, 0.0));
            (r, Vec2::new(px, py), Vec2::new(ux, uy).clamp_length(1.3))
        })
        .prop_filter("pedestrian not overlapping the robot", |(_, p, _)| p.length() > 1.0)
}

fn label() -> impl Strategy<Value = EmotionLabel> {
    prop_oneof![
        Just(EmotionLabel::Happy),
        Just(EmotionLabel::Angry),
        Just(EmotionLabel::Sad),
        Just(EmotionLabel::Neutral),
    ]
}

fn min_distance(r: &RobotState, v: Vec2, path: &PredictedPath, horizon: f64) -> f64 {
    let steps = (horizon / DT - 1e-9).ceil() as usize;
    (1..=steps)
        .map(|k| {
            let t = k as f64 * DT;
            (r.position + v * t).distance(path.position_at(t))
        })
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn chosen_velocity_respects_hard_constraints((r, p, u) in encounter(), l in label()) {
        let config = PlannerConfig::default();
        let ped = pedestrian(l, p, u);
        let path = straight_path(p, u, 3.0);
        let out = plan_step(&r, &[Forecast::new(ped.clone(), path.clone())], &[], DT, &config);
        let v = out.velocity;
        prop_assert!(v.length() <= r.max_speed + 1e-9);
        prop_assert!((v - r.current_velocity).length() <= r.max_accel * DT + 1e-9);
        if !out.emergency {
            let hard = proxemic_margins(l, ped.radius(), &r, &config).hard;
            prop_assert!(min_distance(&r, v, &path, out.horizon) >= hard);
            // one step ahead, against the committed prediction
            prop_assert!((r.position + v * DT).distance(path.position_at(DT)) >= hard);
        }
    }

    #[test]
    fn proxemic_feasible_set_is_within_baseline_set((r, p, u) in encounter(), l in label()) {
        let config = PlannerConfig::default();
        let path = straight_path(p, u, 3.0);
        let ours = [(proxemic_margins(l, 0.61, &r, &config), &path)];
        let theirs = [(baseline_margins(0.61, &r, &config), &path)];
        for v in control_samples(&r, DT, &config) {
            if is_feasible(&r, v, &ours, &[], DT, 3.0, &config) {
                prop_assert!(is_feasible(&r, v, &theirs, &[], DT, 3.0, &config));
            }
        }
    }

    #[test]
    fn proxemic_radii_at_robot_radius_match_baseline((r, p, u) in encounter(), l in label()) {
        let config = PlannerConfig::default();
        let ped = pedestrian(l, p, u);
        let forecast = [Forecast::new(ped.clone(), straight_path(p, u, 3.0))];
        let m = margins_for(ped.radius(), r.radius, r.radius, &r, &config);
        prop_assert_eq!(
            plan_with_margins(&r, &[(m, &forecast[0].path)], &[], DT, &config),
            plan_step_baseline(&r, &forecast, &[], DT, &config)
        );
    }

    #[test]
    fn happy_to_sad_never_brings_the_plan_closer((r, p, u) in encounter()) {
        let config = PlannerConfig::default();
        let path = straight_path(p, u, 3.0);
        let plan = |l: EmotionLabel| {
            let m: Margins = proxemic_margins(l, 0.61, &r, &config);
            plan_with_margins(&r, &[(m, &path)], &[], DT, &config)
        };
        let (happy, sad) = (plan(EmotionLabel::Happy), plan(EmotionLabel::Sad));
        if !happy.emergency && !sad.emergency && happy.horizon == sad.horizon {
            let dh = min_distance(&r, happy.velocity, &path, happy.horizon);
            let ds = min_distance(&r, sad.velocity, &path, sad.horizon);
            prop_assert!(ds >= dh - 1e-12, "sad {} < happy {}", ds, dh);
        }
    }
}
