use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use predplan_core::field::{compute_edt, GridGeometry, OccupancyGrid};
use predplan_core::intent::{GoalSet, TrackHistory};
use predplan_core::planner::PlannerConfig;
use predplan_core::predict::PredictionConfig;
use predplan_core::Vec2;
use predplan_sim::bench::{bench_composite, BenchConfig};
use predplan_sim::corpus::{curved_corpus, discover_goals};
use predplan_sim::eval::{run_prediction_eval, EvalConfig, Method};
use predplan_sim::export::export_files;
use predplan_sim::human::ScriptedHuman;
use predplan_sim::{run_closed_loop, Scenario, ScenarioSpec, SimConfig, SimMode};

#[derive(Parser)]
#[command(name = "predplan", version, about = "Prediction-aware planning: simulation, evaluation and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario in closed loop.
    Sim(SimArgs),
    /// Sliding-window ADE/FDE evaluation of the predictors on track files.
    Eval(EvalArgs),
    /// Time full EDT recomputation against composite fields.
    Bench(BenchArgs),
    /// Discover goals from slow visits in track files.
    Goals(GoalsArgs),
    /// Write the synthetic curved-walk corpus (map, goals, tracks).
    Corpus(CorpusArgs),
}

#[derive(Args)]
struct PlannerArgs {
    /// Planner support spacing (s).
    #[arg(long, default_value_t = 0.5)]
    dt: f64,
    /// Minimum planner horizon in intervals.
    #[arg(long, default_value_t = 20)]
    n: usize,
    /// Relative improvement needed to adopt a reoptimized plan.
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    /// Obstacle hinge margin beyond the robot radius (m).
    #[arg(long, default_value_t = 0.4)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    sigma_obs: f64,
    /// GP power spectral density.
    #[arg(long, default_value_t = 0.2)]
    qc: f64,
}

impl PlannerArgs {
    fn config(&self) -> PlannerConfig {
        PlannerConfig { dt: self.dt, n: self.n, rho: self.rho, epsilon: self.epsilon, sigma_obs: self.sigma_obs, qc: self.qc, ..PlannerConfig::default() }
    }
}

#[derive(Args)]
struct PredictArgs {
    /// Prediction support spacing (s).
    #[arg(long = "pred-dt", default_value_t = 0.5)]
    pred_dt: f64,
    /// Comma-separated prediction horizons (s).
    #[arg(long, value_delimiter = ',', default_value = "1.6,3.2,4.8,8.0")]
    horizons: Vec<f64>,
    /// Softmax sensitivity of the goal posterior.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Minimum MAP probability for goal-directed prediction.
    #[arg(long, default_value_t = 0.4)]
    p_min: f64,
    /// Visit speed threshold (m/s).
    #[arg(long, default_value_t = 0.3)]
    v_thres: f64,
    /// Robot hinge margin (m).
    #[arg(long, default_value_t = 0.8)]
    epsilon_robot: f64,
}

impl PredictArgs {
    fn config(&self) -> PredictionConfig {
        let mut c = PredictionConfig { dt: self.pred_dt, horizons: self.horizons.clone(), p_min: self.p_min, epsilon_robot: self.epsilon_robot, ..PredictionConfig::default() };
        c.intent.lambda = self.lambda;
        c.intent.v_thres = self.v_thres;
        c
    }
}

#[derive(Args)]
struct SimArgs {
    /// Scenario TOML file.
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value = "proposed")]
    mode: SimMode,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the scenario duration (s).
    #[arg(long)]
    duration: Option<f64>,
    /// Overrides the perception noise standard deviation (m).
    #[arg(long)]
    noise: Option<f64>,
    /// Also write the environment distance field.
    #[arg(long)]
    write_field: bool,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    planner: PlannerArgs,
    #[command(flatten)]
    predict: PredictArgs,
}

#[derive(Args)]
struct EvalArgs {
    /// Track CSV files (t,x,y).
    #[arg(long, num_args = 1.., required = true)]
    tracks: Vec<PathBuf>,
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    goals: Option<PathBuf>,
    /// Robot track CSV; its position at each prediction time feeds the robot factor.
    #[arg(long)]
    robot_track: Option<PathBuf>,
    /// Observed seconds before each prediction.
    #[arg(long, default_value_t = 2.0)]
    observation: f64,
    /// Seconds between prediction times.
    #[arg(long, default_value_t = 1.0)]
    stride: f64,
    /// Comma-separated subset of cvm,lvm,proposed,proposed_no_intent,proposed_no_robot.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    predict: PredictArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated grid side lengths in cells.
    #[arg(long, value_delimiter = ',', default_value = "64,128,256")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    obstacles: usize,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GoalsArgs {
    /// Track CSV files (t,x,y).
    #[arg(long, num_args = 1.., required = true)]
    tracks: Vec<PathBuf>,
    /// Map whose extent the visit grid covers.
    #[arg(long)]
    map: PathBuf,
    /// Visit grid cell size (m).
    #[arg(long, default_value_t = 0.5)]
    cell: f64,
    #[arg(long, default_value_t = 0.3)]
    v_thres: f64,
    /// Output goal file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CorpusArgs {
    #[arg(long, default_value_t = 20)]
    tracks: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_tracks(paths: &[PathBuf]) -> Result<Vec<TrackHistory>> {
    paths
        .iter()
        .map(|p| TrackHistory::from_csv(&read(p)?).with_context(|| format!("parsing {}", p.display())))
        .collect()
}

fn sim(args: SimArgs) -> Result<()> {
    let mut spec = ScenarioSpec::from_toml(&read(&args.scenario)?)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(d) = args.duration {
        spec.duration = d;
    }
    if let Some(n) = args.noise {
        spec.perception_noise = n;
    }
    let base = args.scenario.parent().unwrap_or(Path::new("."));
    let scenario = Scenario::resolve(spec, base)?;
    let config = SimConfig { planner: args.planner.config(), prediction: args.predict.config(), ..SimConfig::default() };
    let log = run_closed_loop(&scenario, args.mode, &config)?;
    let mut files = vec![
        ("ticks.csv", log.ticks_csv()),
        ("planner_log.csv", log.cycles_csv()),
        ("predictions.csv", log.predictions_csv()),
        ("summary.csv", log.summary_csv()),
    ];
    if args.write_field {
        files.push(("field.csv", scenario.env.to_csv()));
    }
    export_files(&args.out, &files)?;
    let s = &log.summary;
    eprintln!(
        "{} [{}]: min distance {:.3} m, collision {}, reached goal {}",
        scenario.spec.name,
        args.mode.as_str(),
        s.min_distance,
        s.collision,
        s.reached_goal
    );
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let tracks = read_tracks(&args.tracks)?;
    let env = Arc::new(compute_edt(&OccupancyGrid::from_text(&read(&args.map)?)?));
    let goals = match &args.goals {
        Some(p) => GoalSet::from_text(&read(p)?)?,
        None => GoalSet::default(),
    };
    let robot = match &args.robot_track {
        Some(p) => Some(ScriptedHuman::replay(&read_tracks(std::slice::from_ref(p))?[0], 0.3)?),
        None => None,
    };
    let robot_at = robot.as_ref().map(|r| move |t: f64| -> Vec2 { r.position_at(t) });
    let config = EvalConfig {
        prediction: args.predict.config(),
        observation: args.observation,
        stride: args.stride,
        methods: args.methods.unwrap_or_else(|| Method::ALL.to_vec()),
    };
    let report = run_prediction_eval(&tracks, &env, &goals, robot_at.as_ref().map(|f| f as &dyn Fn(f64) -> Vec2), &config)?;
    for &i in &report.skipped {
        eprintln!("warning: {} is too short for one window; skipped", args.tracks[i].display());
    }
    export_files(&args.out, &[("ade.csv", report.ade_csv()), ("fde.csv", report.fde_csv())])?;
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let config = BenchConfig { sizes: args.sizes, n: args.n, obstacles: args.obstacles, repetitions: args.reps, seed: args.seed, ..BenchConfig::default() };
    let report = bench_composite(&config)?;
    export_files(&args.out, &[("bench.csv", report.to_csv())])?;
    for r in &report.rows {
        eprintln!("size {}: full {:.3} ms, composite {:.3} ms, ratio {:.2}", r.size, r.full_ms, r.composite_ms, r.ratio);
    }
    Ok(())
}

fn goals(args: GoalsArgs) -> Result<()> {
    if !(args.cell > 0.0) {
        bail!("--cell must be positive");
    }
    let tracks = read_tracks(&args.tracks)?;
    let grid = OccupancyGrid::from_text(&read(&args.map)?)?;
    let area: &GridGeometry = grid.geometry();
    let goals = discover_goals(&tracks, area, args.cell, args.v_thres)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(&args.out, goals.to_text()).with_context(|| format!("writing {}", args.out.display()))?;
    eprintln!("{} goals", goals.len());
    Ok(())
}

fn corpus(args: CorpusArgs) -> Result<()> {
    let c = curved_corpus(args.tracks, args.seed)?;
    let mut files = vec![("room.map".to_string(), c.grid.to_text()), ("room.goals".to_string(), c.goals.to_text())];
    for (i, t) in c.tracks.iter().enumerate() {
        files.push((format!("track_{i:02}.csv"), t.to_csv()));
    }
    let refs: Vec<(&str, String)> = files.iter().map(|(n, s)| (n.as_str(), s.clone())).collect();
    export_files(&args.out, &refs)?;
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Sim(a) => sim(a),
        Command::Eval(a) => eval(a),
        Command::Bench(a) => bench(a),
        Command::Goals(a) => goals(a),
        Command::Corpus(a) => corpus(a),
    }
}
