//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use proxemia_cli::scenario_files;
use proxemia_core::domain::{param_range, VALID_RANGE_MARGIN};
use proxemia_core::estimation::{GoalHint, PedestrianEstimator};
use proxemia_core::io::load_scenario;
use proxemia_core::navigation::{run_pair, run_single, PlannerKind, TrialRun};
use proxemia_core::prediction::{clamp_params, compute_bounds};
use proxemia_core::sim::PedestrianSpec;
use proxemia_core::{
    fuse_emotions, label_emotion, simulate, tem_forward, tem_forward_raw, tem_inverse, CrowdState, EmotionLabel,
    EmotionVector, EstimatorConfig, MotionParams, Scenario, Segment, TemMatrix, Vec2,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const THETA: f64 = 0.55;
/// Written out by hand so the checks do not read the matrix back from the code under test.
const MATRIX: [[f64; 3]; 3] = [[-0.15, 0.0, -0.12], [0.24, -0.61, 0.20], [-0.02, 0.79, 0.11]];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn scenarios_dir() -> PathBuf {
    workspace_root().join("scenarios")
}

fn random_emotion(rng: &mut ChaCha8Rng) -> EmotionVector {
    // Half the draws sit on a coarse grid so that ties and exact threshold hits occur.
    let coarse = rng.random_bool(0.5);
    let v: [f64; 3] = std::array::from_fn(|_| {
        if coarse {
            f64::from(rng.random_range(0..=20u8)) * 0.05
        } else {
            rng.random_range(0.0..=1.0)
        }
    });
    EmotionVector::from_array(v).unwrap()
}

fn random_params(rng: &mut ChaCha8Rng) -> MotionParams {
    let (lo, hi) = param_range(VALID_RANGE_MARGIN);
    MotionParams::from_array(std::array::from_fn(|i| rng.random_range(lo[i]..=hi[i]))).unwrap()
}

fn oracle_label(h: f64, a: f64, s: f64, theta: f64) -> EmotionLabel {
    if h > a && h > s && h > theta {
        EmotionLabel::Happy
    } else if a > h && a > s && a > theta {
        EmotionLabel::Angry
    } else if s > h && s > a && s > theta {
        EmotionLabel::Sad
    } else {
        EmotionLabel::Neutral
    }
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let samples: Vec<EmotionVector> = (0..10_000).map(|_| random_emotion(&mut rng)).collect();
    let start = Instant::now();
    let mut mismatches = 0;
    for e in &samples {
        let [h, a, s] = e.to_array();
        if label_emotion(e, THETA).unwrap() != oracle_label(h, a, s, THETA) {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        mismatches == 0 && elapsed < 1.0,
        format!("labeling oracle, {mismatches} mismatches in 10000, {elapsed:.4} s"),
    )
}

fn criterion_2() -> Outcome {
    let p = [1.25, 0.61, 1.39];
    let hand: [f64; 3] = std::array::from_fn(|i| MATRIX[i][0] * p[0] + MATRIX[i][1] * p[1] + MATRIX[i][2] * p[2]);
    let expected = [-0.3543, 0.2059, 0.6098];
    let (raw, clamped) = tem_forward(&MotionParams::from_array(p).unwrap(), &TemMatrix::default());
    let err = (0..3).map(|i| (raw.0[i] - expected[i]).abs().max((raw.0[i] - hand[i]).abs())).fold(0.0, f64::max);
    let label = clamped.label(THETA).unwrap();
    outcome(
        err <= 1e-4 && label == EmotionLabel::Sad,
        format!("fixed point raw {:?}, max error {err:.2e}, label {label}", raw.0),
    )
}

fn criterion_3() -> Outcome {
    let m = TemMatrix::default();
    let h = 1e-3;
    let mut worst: f64 = 0.0;
    for base in [[1.25, 0.61, 1.39], [0.5, 0.4, 1.0], [2.0, 0.85, 2.2]] {
        for j in 0..3 {
            let (mut up, mut down) = (base, base);
            up[j] += h;
            down[j] -= h;
            let fu = tem_forward_raw(&MotionParams::from_array(up).unwrap(), &m).0;
            let fd = tem_forward_raw(&MotionParams::from_array(down).unwrap(), &m).0;
            for i in 0..3 {
                worst = worst.max(((fu[i] - fd[i]) / (2.0 * h) - MATRIX[i][j]).abs());
            }
        }
    }
    outcome(worst <= 1e-8, format!("finite-difference partials, max deviation {worst:.2e}"))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut gated, mut mixed, mut failures) = (0, 0, 0);
    for k in 0..1000 {
        let t = random_emotion(&mut rng);
        let face = if k % 2 == 0 {
            EmotionVector::from_array(std::array::from_fn(|_| rng.random_range(0.0..0.5))).unwrap()
        } else {
            random_emotion(&mut rng)
        };
        let alpha: f64 = rng.random_range(0.0..=1.0);
        let fused = fuse_emotions(&t, Some(&face), alpha).unwrap().emotion.to_array();
        let (ta, fa) = (t.to_array(), face.to_array());
        if face.max_component() < 0.5 {
            gated += 1;
            if fused != ta {
                failures += 1;
            }
        } else if alpha > 0.0 {
            mixed += 1;
            let outside = (0..3).any(|i| fused[i] < ta[i].min(fa[i]) - 1e-12 || fused[i] > ta[i].max(fa[i]) + 1e-12);
            if outside {
                failures += 1;
            }
        }
    }
    outcome(
        failures == 0 && gated > 0 && mixed > 0,
        format!("fusion gate, {gated} gated and {mixed} mixed cases, {failures} failures"),
    )
}

fn criterion_5() -> Outcome {
    let m = TemMatrix::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let p = random_params(&mut rng);
        let back = tem_inverse(&tem_forward_raw(&p, &m), &m).unwrap().0;
        let v = p.to_array();
        for i in 0..3 {
            worst = worst.max((back[i] - v[i]).abs());
        }
    }
    outcome(worst <= 1e-9, format!("inverse after forward, max error {worst:.2e} over 1000"))
}

fn criterion_6() -> Outcome {
    let m = TemMatrix::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failures = 0;
    for _ in 0..10_000 {
        let anchor = random_params(&mut rng);
        let (raw, clamped) = tem_forward(&anchor, &m);
        let label = clamped.label(THETA).unwrap();
        let gamma = rng.random_range(0.0..0.5);
        let bounds = compute_bounds(&raw, label, gamma, &m).unwrap();
        let p = random_params(&mut rng);
        let once = clamp_params(&p, &bounds);
        let twice = clamp_params(&once, &bounds);
        let (v, lo, hi) = (once.to_array(), bounds.lower.to_array(), bounds.upper.to_array());
        if once != twice || (0..3).any(|i| v[i] < lo[i] || v[i] > hi[i]) {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("clamp idempotence and containment, {failures} failures in 10000"))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Relative error of each parameter after 50 noisy observations of a walk towards a wall.
fn recovery_error(truth: MotionParams, seed: u64) -> [f64; 3] {
    let steps = 50;
    let goal = Vec2::new(3.0, -6.0);
    let mut scenario = Scenario::new(vec![PedestrianSpec::new("p", Vec2::new(-3.0, 3.0), goal, truth)], 0.1, steps).unwrap();
    scenario.obstacles.push(Segment::new(Vec2::new(-30.0, 0.0), Vec2::new(30.0, 0.0)));
    let log = simulate(&scenario);
    let mut context = CrowdState::from_scenario(&scenario);
    context.agents.clear();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.05).unwrap();
    let mut est = PedestrianEstimator::new("p".into(), GoalHint::Known(goal), EstimatorConfig::default(), seed);
    for r in log.track(&"p".into()) {
        let obs = r.position + Vec2::new(noise.sample(&mut rng), noise.sample(&mut rng));
        est.observe(r.time, obs, &context, None).unwrap();
    }
    assert_eq!(est.state().unwrap().updates, steps);
    let (e, t) = (est.params().to_array(), truth.to_array());
    std::array::from_fn(|i| ((e[i] - t[i]) / t[i]).abs())
}

fn criterion_7() -> Outcome {
    let avg = MotionParams::average().to_array();
    let errors: Vec<[f64; 3]> = (0..30)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(700 + seed);
            let truth =
                MotionParams::from_array(std::array::from_fn(|i| avg[i] * (1.0 + rng.random_range(-0.25..0.25)))).unwrap();
            recovery_error(truth, seed)
        })
        .collect();
    let medians: [f64; 3] = std::array::from_fn(|i| median(errors.iter().map(|e| e[i]).collect()));
    outcome(
        medians.iter().all(|&m| m <= 0.15),
        format!(
            "median relative error over 30 seeds: horizon {:.3}, radius {:.3}, speed {:.3}",
            medians[0], medians[1], medians[2]
        ),
    )
}

/// Comfort intrusions recomputed from the recorded positions: rising edges of
/// surface distance below the comfort distance.
fn oracle_intrusions(run: &TrialRun) -> usize {
    let mut count = 0;
    for truth in &run.truth {
        let mut inside = false;
        for robot in &run.robot {
            let Some(ped) = run.crowd.records.iter().find(|r| r.step == robot.step && r.agent == truth.id) else {
                inside = false;
                continue;
            };
            let gap = (robot.position - ped.position).length() - truth.radius;
            let now = gap < truth.comfort;
            if now && !inside {
                count += 1;
            }
            inside = now;
        }
    }
    count
}

struct Benchmark {
    rows: Vec<(String, usize, usize, f64)>,
    elapsed: f64,
}

fn run_benchmark() -> Benchmark {
    let start = Instant::now();
    let rows = scenario_files(&scenarios_dir())
        .unwrap()
        .iter()
        .map(|file| {
            let s = load_scenario(file).unwrap();
            let (ours, base) = run_pair(&s).unwrap();
            assert!(ours.goal_reached && base.goal_reached, "{}: goal not reached", s.name);
            let fraction = (ours.travel_time - base.travel_time) / base.travel_time;
            (s.name, oracle_intrusions(&ours), oracle_intrusions(&base), fraction)
        })
        .collect();
    Benchmark { rows, elapsed: start.elapsed().as_secs_f64() }
}

fn criterion_8(b: &Benchmark) -> Outcome {
    let ours: usize = b.rows.iter().map(|r| r.1).sum();
    let baseline_hit = b.rows.iter().filter(|r| r.2 >= 1).count();
    let per: Vec<String> = b.rows.iter().map(|r| format!("{}={}/{}", r.0, r.1, r.2)).collect();
    outcome(
        b.rows.len() == 8 && ours == 0 && baseline_hit >= 6 && b.elapsed < 60.0,
        format!(
            "{} scenarios, proxemic intrusions {ours}, baseline intrudes in {baseline_hit}, {:.1} s [{}]",
            b.rows.len(),
            b.elapsed,
            per.join(" ")
        ),
    )
}

fn criterion_9(b: &Benchmark) -> Outcome {
    let under = b.rows.iter().filter(|r| r.3 < 0.25).count();
    let per: Vec<String> = b.rows.iter().map(|r| format!("{}={:.3}", r.0, r.3)).collect();
    outcome(
        under >= 7,
        format!("overhead below 0.25 in {under} of {} [{}]", b.rows.len(), per.join(" ")),
    )
}

fn closest_approach(run: &TrialRun) -> f64 {
    let mut best = f64::INFINITY;
    for robot in &run.robot {
        for ped in run.crowd.records.iter().filter(|r| r.step == robot.step) {
            let radius = run.truth.iter().find(|t| t.id == ped.agent).unwrap().radius;
            best = best.min((robot.position - ped.position).length() - radius);
        }
    }
    best
}

fn criterion_10() -> Outcome {
    let base = load_scenario(scenarios_dir().join("single/single_pass.toml")).unwrap();
    let cases = [
        (EmotionLabel::Happy, [0.9, 0.0, 0.0], 0.9004),
        (EmotionLabel::Neutral, [0.0, 0.0, 0.0], 0.9203),
        (EmotionLabel::Angry, [0.0, 0.9, 0.0], 0.9975),
        (EmotionLabel::Sad, [0.0, 0.0, 0.9], 1.1271),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    let mut approach = std::collections::BTreeMap::new();
    for (label, emotion, threshold) in cases {
        let mut s = base.clone();
        s.pedestrians[0].emotion = Some(EmotionVector::from_array(emotion).unwrap());
        let run = run_single(&s, PlannerKind::Proxemic).unwrap();
        let d = closest_approach(&run);
        pass &= run.goal_reached && run.truth[0].label == label && d >= threshold;
        approach.insert(label.as_str(), d);
        parts.push(format!("{label}={d:.4}>={threshold}"));
    }
    pass &= approach["sad"] > approach["happy"];
    outcome(pass, format!("single pass closest approach [{}]", parts.join(" ")))
}

fn criterion_11() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_proxemia"))
            .arg("benchmark")
            .arg("--scenario")
            .arg(scenarios_dir())
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        if !status.success() {
            return outcome(false, format!("benchmark run {run} exited with {status}"));
        }
        files.push(std::fs::read(out.join("metrics.csv")).unwrap());
    }
    outcome(
        files[0] == files[1] && !files[0].is_empty(),
        format!("two benchmark runs, metrics.csv of {} bytes, identical {}", files[0].len(), files[0] == files[1]),
    )
}

fn main() {
    let bench = run_benchmark();
    let results = [
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(&bench),
        criterion_9(&bench),
        criterion_10(),
        criterion_11(),
    ];
    for (i, r) in results.iter().enumerate() {
        println!("{} criterion {}: {}", if r.pass { "PASS" } else { "FAIL" }, i + 1, r.detail);
    }
    let failed = results.iter().filter(|r| !r.pass).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
