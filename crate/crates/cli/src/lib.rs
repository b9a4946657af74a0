//! Command-line driver: argument definitions and subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use proxemia_core::estimation::estimate_timeline;
use proxemia_core::io::{
    ingest_streams, load_scenario, write_metrics, write_observations, write_timeline, write_timing,
    write_trajectory_log, write_trial_traces,
};
use proxemia_core::navigation::{run_pair, run_single, NavMetrics, PlannerKind, TrialRun};
use proxemia_core::{simulate, Error, Result, Scenario, Settings};

#[derive(Debug, Parser)]
#[command(name = "proxemia", version, about = "Emotion-aware crowd simulation and robot navigation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the crowd of a scenario and write its trajectories.
    Simulate(RunArgs),
    /// Estimate motion parameters and emotions from recorded streams.
    Estimate(EstimateArgs),
    /// Drive the robot through one scenario.
    Navigate(RunArgs),
    /// Run both planners over every scenario in a directory (or a single file).
    Benchmark(RunArgs),
    /// Run both planners on one scenario and print a side-by-side summary.
    Compare(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlannerChoice {
    Proxemic,
    Baseline,
    Both,
}

/// Settings overrides shared by all subcommands.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Relative emotion perturbation for parameter bounds.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Emotion labeling threshold.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Reachability penalty weight.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Prediction and planning horizon (s).
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Simulation time step (s).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Ensemble size of the parameter estimator.
    #[arg(long)]
    pub ensemble: Option<usize>,
}

impl Overrides {
    pub fn apply_settings(&self, s: &mut Settings) -> Result<()> {
        if let Some(v) = self.gamma {
            s.gamma = v;
        }
        if let Some(v) = self.theta {
            s.theta = v;
        }
        if let Some(v) = self.lambda {
            s.planner.lambda = v;
        }
        if let Some(v) = self.horizon {
            s.prediction_horizon = v;
            s.planner.horizon = v;
        }
        if let Some(v) = self.ensemble {
            s.estimator.ensemble_size = v;
        }
        s.validate()
    }

    pub fn apply(&self, scenario: &mut Scenario) -> Result<()> {
        if let Some(v) = self.seed {
            scenario.seed = v;
        }
        if let Some(v) = self.dt {
            scenario.dt = v;
        }
        self.apply_settings(&mut scenario.settings)?;
        scenario.validate()
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Scenario file; for `benchmark`, a directory of `.toml` files is also accepted.
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Metrics rows to report; `navigate` defaults to both, `benchmark` to proxemic.
    #[arg(long, value_enum)]
    pub planner: Option<PlannerChoice>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    /// Trajectory stream: `time,id,x,y`.
    #[arg(long)]
    pub trajectories: PathBuf,
    /// Face-emotion stream: `time,id,h,a,s[,confidence]`.
    #[arg(long)]
    pub faces: Option<PathBuf>,
    /// Scenario supplying obstacles and settings.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Estimate(a) => cmd_estimate(&a),
        Command::Navigate(a) => cmd_navigate(&a),
        Command::Benchmark(a) => cmd_benchmark(&a),
        Command::Compare(a) => cmd_compare(&a),
    }
}

fn load(args: &RunArgs) -> Result<Scenario> {
    let mut s = load_scenario(&args.scenario)?;
    args.overrides.apply(&mut s)?;
    Ok(s)
}

fn kinds(choice: PlannerChoice) -> Vec<PlannerKind> {
    match choice {
        PlannerChoice::Proxemic => vec![PlannerKind::Proxemic],
        PlannerChoice::Baseline => vec![PlannerKind::Baseline],
        PlannerChoice::Both => vec![PlannerKind::Proxemic, PlannerKind::Baseline],
    }
}

fn cmd_simulate(args: &RunArgs) -> Result<()> {
    let s = load(args)?;
    fs::create_dir_all(&args.out)?;
    let log = simulate(&s);
    write_trajectory_log(&log, args.out.join("trajectory.csv"))?;
    write_observations(&log, s.observation_noise, s.seed, args.out.join("observations.csv"))?;
    log::info!("{}: {} steps simulated", s.name, log.steps);
    if log.truncated {
        return Err(Error::Timeout { steps: s.max_steps });
    }
    Ok(())
}

fn cmd_estimate(args: &EstimateArgs) -> Result<()> {
    let (mut settings, obstacles, dt) = match &args.scenario {
        Some(path) => {
            let s = load_scenario(path)?;
            (s.settings, s.obstacles, Some(s.dt))
        }
        None => (Settings::default(), Vec::new(), None),
    };
    args.overrides.apply_settings(&mut settings)?;
    let dt = args.overrides.dt.or(dt);
    let streams = ingest_streams(&args.trajectories, args.faces.as_deref(), dt)?;
    if streams.malformed_rows > 0 {
        log::warn!("skipped {} malformed rows", streams.malformed_rows);
    }
    let rows = estimate_timeline(&streams, &settings, &obstacles, args.overrides.seed.unwrap_or(0))?;
    fs::create_dir_all(&args.out)?;
    write_timeline(&rows, args.out.join("timeline.csv"))
}

/// Runs the requested planners; the baseline always runs because it is the
/// reference. Returns the metrics rows and every run performed.
fn trial_metrics(s: &Scenario, choice: PlannerChoice) -> Result<(Vec<NavMetrics>, Vec<TrialRun>)> {
    let (ours, base) = match choice {
        PlannerChoice::Baseline => {
            let base = run_single(s, PlannerKind::Baseline)?;
            (None, base)
        }
        _ => {
            let (ours, base) = run_pair(s)?;
            (Some(ours), base)
        }
    };
    let metrics = kinds(choice)
        .into_iter()
        .map(|kind| match kind {
            PlannerKind::Proxemic => NavMetrics::compare(ours.as_ref().expect("proxemic run present"), &base),
            PlannerKind::Baseline => NavMetrics::compare(&base, &base),
        })
        .collect();
    Ok((metrics, ours.into_iter().chain([base]).collect()))
}

fn timeout_check(metrics: &[NavMetrics], max_steps: usize) -> Result<()> {
    for m in metrics {
        if !m.goal_reached {
            log::error!("{}: {} planner did not reach the goal", m.scenario, m.planner);
            return Err(Error::Timeout { steps: max_steps });
        }
    }
    Ok(())
}

fn cmd_navigate(args: &RunArgs) -> Result<()> {
    let s = load(args)?;
    let (metrics, runs) = trial_metrics(&s, args.planner.unwrap_or(PlannerChoice::Both))?;
    fs::create_dir_all(&args.out)?;
    write_metrics(&metrics, args.out.join("metrics.csv"))?;
    write_timing(&metrics, args.out.join("timing.csv"))?;
    for run in &runs {
        write_trial_traces(run, args.out.join("traces"))?;
    }
    timeout_check(&metrics, s.max_steps)
}

/// Scenario files named by `path`: the file itself, or the sorted `.toml` files of a directory.
pub fn scenario_files(path: &Path) -> Result<Vec<PathBuf>> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Config(format!("no scenario files in {}", path.display())));
    }
    Ok(files)
}

fn cmd_benchmark(args: &RunArgs) -> Result<()> {
    let mut all = Vec::new();
    let mut max_steps = 0;
    fs::create_dir_all(&args.out)?;
    for file in scenario_files(&args.scenario)? {
        let mut s = load_scenario(&file)?;
        args.overrides.apply(&mut s)?;
        max_steps = max_steps.max(s.max_steps);
        let (metrics, runs) = trial_metrics(&s, args.planner.unwrap_or(PlannerChoice::Proxemic))?;
        for run in &runs {
            write_trial_traces(run, args.out.join("traces"))?;
        }
        log::info!("{}: done", s.name);
        all.extend(metrics);
    }
    write_metrics(&all, args.out.join("metrics.csv"))?;
    write_timing(&all, args.out.join("timing.csv"))?;
    timeout_check(&all, max_steps)
}

fn cmd_compare(args: &RunArgs) -> Result<()> {
    let s = load(args)?;
    let (metrics, _) = trial_metrics(&s, PlannerChoice::Both)?;
    fs::create_dir_all(&args.out)?;
    write_metrics(&metrics, args.out.join("metrics.csv"))?;
    println!("{}", summary(&metrics));
    timeout_check(&metrics, s.max_steps)
}

/// Human-readable side-by-side table.
pub fn summary(metrics: &[NavMetrics]) -> String {
    let mut out = format!(
        "{:<14}{:<10}{:>8}{:>10}{:>9}{:>7}{:>10}{:>12}",
        "scenario", "planner", "reached", "time(s)", "overhead", "comf", "reach", "closest(m)"
    );
    for m in metrics {
        out.push_str(&format!(
            "\n{:<14}{:<10}{:>8}{:>10.2}{:>8.1}%{:>7}{:>10}{:>12.3}",
            m.scenario,
            m.planner,
            m.goal_reached,
            m.travel_time,
            m.additional_time_fraction * 100.0,
            m.comfort_intrusions,
            m.reachability_intrusions,
            m.closest_approach
        ));
    }
    out
}
