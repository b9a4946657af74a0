//! TOML scenario files.

use std::path::Path;

use serde::Deserialize;

use crate::config::Settings;
use crate::domain::{EmotionLabel, EmotionVector, MotionParams, ProxemicProfile};
use crate::emotion::TemMatrix;
use crate::error::{Error, Result};
use crate::geometry::{Segment, Vec2};
use crate::sim::{ParamSource, PedestrianSpec, RobotSpec, Scenario};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: Option<String>,
    sim: Option<SimSection>,
    #[serde(default)]
    world: WorldSection,
    robot: Option<RobotSection>,
    planner: Option<PlannerSection>,
    estimator: Option<EstimatorSection>,
    #[serde(default)]
    pedestrians: Vec<PedestrianSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimSection {
    dt: Option<f64>,
    max_steps: Option<usize>,
    seed: Option<u64>,
    observation_noise: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct WorldSection {
    #[serde(default)]
    obstacles: Vec<[[f64; 2]; 2]>,
    /// Informational extent `[[xmin, ymin], [xmax, ymax]]`.
    #[allow(dead_code)]
    bounds: Option<[[f64; 2]; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotSection {
    start: [f64; 2],
    goal: [f64; 2],
    max_speed: Option<f64>,
    max_accel: Option<f64>,
    radius: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlannerSection {
    gamma: Option<f64>,
    theta: Option<f64>,
    lambda: Option<f64>,
    grid_angles: Option<usize>,
    grid_speeds: Option<usize>,
    horizon: Option<f64>,
    obstacle_horizon: Option<f64>,
    safety_buffer: Option<f64>,
    prediction_horizon: Option<f64>,
    tem: Option<[[f64; 3]; 3]>,
    /// Label name to `[comfort, reachability]` in centimeters.
    proxemics: Option<std::collections::BTreeMap<String, [f64; 2]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimatorSection {
    ensemble_size: Option<usize>,
    window: Option<usize>,
    em_interval: Option<usize>,
    param_drift: Option<f64>,
    initial_obs_var: Option<f64>,
    initial_process_var: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ParamsField {
    Values([f64; 3]),
    Keyword(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PedestrianSection {
    id: String,
    start: [f64; 2],
    goal: [f64; 2],
    params: Option<ParamsField>,
    /// Parameters driving the simulated pedestrian when `params = "estimate"`.
    true_params: Option<[f64; 3]>,
    emotion: Option<[f64; 3]>,
    face: Option<[f64; 3]>,
    tracking_confidence: Option<f64>,
}

pub const DEFAULT_DT: f64 = 0.1;
pub const DEFAULT_MAX_STEPS: usize = 1000;
pub const DEFAULT_ROBOT_SPEED: f64 = 1.2;
pub const DEFAULT_ROBOT_ACCEL: f64 = 2.0;
pub const DEFAULT_ROBOT_RADIUS: f64 = 0.3;

/// Prefixes the field name of a validation error.
fn within(prefix: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Validation { field, reason } => Error::Validation {
            field: format!("{prefix}.{field}"),
            reason,
        },
        other => other,
    }
}

fn unit_vector(field: &str, v: [f64; 3]) -> Result<EmotionVector> {
    if v.iter().any(|c| !(0.0..=1.0).contains(c)) {
        return Err(Error::validation(field, format!("{v:?} has components outside [0, 1]")));
    }
    EmotionVector::from_array(v)
}

fn build(file: ScenarioFile) -> Result<Scenario> {
    let mut settings = Settings::default();
    if let Some(p) = file.planner {
        if let Some(v) = p.gamma {
            settings.gamma = v;
        }
        if let Some(v) = p.theta {
            settings.theta = v;
        }
        if let Some(v) = p.lambda {
            settings.planner.lambda = v;
        }
        if let Some(v) = p.grid_angles {
            settings.planner.grid_angles = v;
        }
        if let Some(v) = p.grid_speeds {
            settings.planner.grid_speeds = v;
        }
        if let Some(v) = p.horizon {
            settings.planner.horizon = v;
        }
        if let Some(v) = p.obstacle_horizon {
            settings.planner.obstacle_horizon = v;
        }
        if let Some(v) = p.safety_buffer {
            settings.planner.safety_buffer = v;
        }
        if let Some(v) = p.prediction_horizon {
            settings.prediction_horizon = v;
        }
        if let Some(rows) = p.tem {
            settings.tem = TemMatrix::new(rows)?;
        }
        for (name, [comfort, reach]) in p.proxemics.unwrap_or_default() {
            let label: EmotionLabel = name.parse().map_err(within("planner.proxemics"))?;
            let profile = ProxemicProfile::new(comfort / 100.0, reach / 100.0)
                .map_err(within(&format!("planner.proxemics.{name}")))?;
            settings.planner.proxemics.set(label, profile);
        }
    }
    if let Some(e) = file.estimator {
        let est = &mut settings.estimator;
        if let Some(v) = e.ensemble_size {
            est.ensemble_size = v;
        }
        if let Some(v) = e.window {
            est.window = v;
        }
        if let Some(v) = e.em_interval {
            est.em_interval = v;
        }
        if let Some(v) = e.param_drift {
            est.param_drift = v;
        }
        if let Some(v) = e.initial_obs_var {
            est.initial_obs_var = v;
        }
        if let Some(v) = e.initial_process_var {
            est.initial_process_var = v;
        }
    }

    let mut pedestrians = Vec::with_capacity(file.pedestrians.len());
    for p in file.pedestrians {
        let prefix = format!("pedestrians[{}]", p.id);
        let (params, source) = match p.params {
            None => (MotionParams::average(), ParamSource::Known),
            Some(ParamsField::Values(v)) => (
                MotionParams::from_array(v).map_err(within(&format!("{prefix}.params")))?,
                ParamSource::Known,
            ),
            Some(ParamsField::Keyword(k)) if k == "estimate" => {
                let truth = match p.true_params {
                    Some(v) => MotionParams::from_array(v).map_err(within(&format!("{prefix}.true_params")))?,
                    None => MotionParams::average(),
                };
                (truth, ParamSource::Estimate)
            }
            Some(ParamsField::Keyword(k)) => {
                return Err(Error::validation(
                    format!("{prefix}.params"),
                    format!("expected three numbers or \"estimate\", got {k:?}"),
                ));
            }
        };
        let mut spec = PedestrianSpec::new(p.id.as_str(), Vec2::from(p.start), Vec2::from(p.goal), params);
        spec.source = source;
        if let Some(e) = p.emotion {
            spec.emotion = Some(unit_vector(&format!("{prefix}.emotion"), e)?);
        }
        if let Some(f) = p.face {
            spec.face = Some(unit_vector(&format!("{prefix}.face"), f)?);
        }
        if let Some(a) = p.tracking_confidence {
            spec.tracking_confidence = a;
        }
        pedestrians.push(spec);
    }

    let robot = file.robot.map(|r| RobotSpec {
        start: Vec2::from(r.start),
        goal: Vec2::from(r.goal),
        max_speed: r.max_speed.unwrap_or(DEFAULT_ROBOT_SPEED),
        max_accel: r.max_accel.unwrap_or(DEFAULT_ROBOT_ACCEL),
        radius: r.radius.unwrap_or(DEFAULT_ROBOT_RADIUS),
    });
    let sim = file.sim.unwrap_or(SimSection {
        dt: None,
        max_steps: None,
        seed: None,
        observation_noise: None,
    });
    let scenario = Scenario {
        name: file.name.unwrap_or_else(|| "unnamed".into()),
        obstacles: file.world.obstacles.into_iter().map(Segment::from).collect(),
        pedestrians,
        robot,
        dt: sim.dt.unwrap_or(DEFAULT_DT),
        max_steps: sim.max_steps.unwrap_or(DEFAULT_MAX_STEPS),
        seed: sim.seed.unwrap_or(0),
        observation_noise: sim.observation_noise.unwrap_or(0.0),
        settings,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Parses and validates a scenario document. `source_name` labels diagnostics.
pub fn parse_scenario(text: &str, source_name: &str) -> Result<Scenario> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse {
        source_name: source_name.to_string(),
        message: e.to_string(),
    })?;
    build(file)
}

/// Loads and validates a scenario file. Unnamed scenarios take the file stem.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut scenario = parse_scenario(&text, &path.display().to_string())?;
    if scenario.name == "unnamed" {
        if let Some(stem) = path.file_stem() {
            scenario.name = stem.to_string_lossy().into_owned();
        }
    }
    Ok(scenario)
}
