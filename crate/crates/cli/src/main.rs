//! `scenforge`: train DQN testers, run evaluations and baselines, compare
//! run sets and replay execution logs.

mod report;
mod rundir;
mod settings;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use report::{comparison_table, runs_table, totals, RunSummary};
use rundir::RunDir;
use scenforge_core::baselines::{run_greedy, run_random};
use scenforge_core::config::Settings;
use scenforge_core::dqn::driving::{run_policy, DrivingTask};
use scenforge_core::dqn::{run_training, Agent, TrainingLog};
use scenforge_core::env::EnvConfig;
use scenforge_core::scenario::log::{replay, ExecutionLog, Strategy};
use scenforge_core::{Error, Result, RewardKind, RouteId, WeatherPreset};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "scenforge", version, about = "Environment-configuration testing of a driving autopilot")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a DQN tester and write its checkpoint and training log.
    Train(TrainArgs),
    /// Run seeded evaluation episodes of a trained checkpoint.
    Eval(EvalArgs),
    /// Run seeded episodes of the random or greedy strategy.
    Baseline(BaselineArgs),
    /// Compare two sets of execution logs metric by metric.
    Analyze(AnalyzeArgs),
    /// Re-execute a log and check every world hash.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct EnvArgs {
    /// Flat `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    route: Option<RouteId>,
    /// Weather preset: RD, RN, SD or SN.
    #[arg(long)]
    weather: Option<WeatherPreset>,
    /// Reward the tester maximizes: ttc, dto or jerk.
    #[arg(long)]
    reward: Option<RewardKind>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BatchArgs {
    /// Number of seeded runs, using seeds seed, seed+1, ...
    #[arg(long)]
    runs: Option<usize>,
    /// Runs executed concurrently.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    parallel: u16,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    env: EnvArgs,
    /// Observed states to train for.
    #[arg(long)]
    states: Option<usize>,
    /// Replay memory capacity.
    #[arg(long)]
    memory: Option<usize>,
    /// Stop after this many episodes even if the state budget remains.
    #[arg(long)]
    episodes: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    env: EnvArgs,
    #[command(flatten)]
    batch: BatchArgs,
    #[arg(long)]
    checkpoint: PathBuf,
    /// Exploration rate; defaults to the checkpoint's evaluation rate.
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    env: EnvArgs,
    #[command(flatten)]
    batch: BatchArgs,
    /// rs (random) or gs (greedy).
    #[arg(long)]
    strategy: Option<BaselineStrategy>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum BaselineStrategy {
    Rs,
    Gs,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Run directory or log file of the first set.
    a: PathBuf,
    /// Run directory or log file of the second set.
    b: PathBuf,
    /// Also write the table to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    log: PathBuf,
}

impl EnvArgs {
    /// Config file entries with the flags laid over them.
    fn settings(&self) -> Result<Settings> {
        let mut s = settings::load(self.config.as_deref())?;
        if let Some(v) = self.route {
            s.set("route", v);
        }
        if let Some(v) = self.weather {
            s.set("weather", v);
        }
        if let Some(v) = self.reward {
            s.set("reward", v);
        }
        if let Some(v) = self.seed {
            s.set("seed", v);
        }
        Ok(s)
    }

    fn out_dir(&self, command: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| Path::new("runs").join(command))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Baseline(a) => cmd_baseline(&a),
        Command::Analyze(a) => cmd_analyze(&a),
        Command::Replay(a) => cmd_replay(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let mut s = args.env.settings()?;
    if let Some(v) = args.states {
        s.set("states", v);
    }
    if let Some(v) = args.memory {
        s.set("memory", v);
    }
    if let Some(v) = args.episodes {
        s.set("episodes", v);
    }
    let env_cfg = EnvConfig::from_settings(&s)?;
    let train_cfg = settings::train_config(&s)?;
    let run = RunDir::create(&args.env.out_dir("train"))?;
    run.write("config.txt", s.to_text())?;

    let mut log = TrainingLog {
        header: env_cfg.to_settings().entries().to_vec(),
        ..TrainingLog::default()
    };
    let mut task = DrivingTask::new(env_cfg)?;
    let trained = run_training(&mut task, &train_cfg, &mut log);
    run.write("training.log", log.to_text())?;
    let agent = trained?;
    agent.save(&run.path("checkpoint.bin"))?;
    run.seal()?;

    let collisions = log.episodes.iter().filter(|e| e.end == "Collision").count();
    println!("episodes\t{}", log.episodes.len());
    println!("observed_states\t{}", log.observed());
    println!("training_collisions\t{collisions}");
    println!("checkpoint\t{}", run.path("checkpoint.bin").display());
    Ok(())
}

fn batch_seeds(s: &Settings, batch: &BatchArgs) -> Result<(EnvConfig, Vec<u64>)> {
    let base = EnvConfig::from_settings(s)?;
    let runs = match batch.runs {
        Some(n) => n,
        None => s.get_or("runs", settings::DEFAULT_RUNS)?,
    };
    if runs == 0 {
        return Err(Error::Config("runs must be positive".into()));
    }
    Ok((base.clone(), (0..runs as u64).map(|k| base.seed + k).collect()))
}

/// Runs one episode per seed on a pool of `parallel` threads; results come back in seed order.
fn run_batch<F>(parallel: u16, seeds: &[u64], run: F) -> Result<Vec<ExecutionLog>>
where
    F: Fn(u64) -> Result<ExecutionLog> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel as usize)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| seeds.par_iter().map(|&seed| run(seed)).collect())
}

fn write_batch(run: &RunDir, s: &Settings, logs: &[ExecutionLog]) -> Result<()> {
    run.write("config.txt", s.to_text())?;
    let mut summaries = Vec::with_capacity(logs.len());
    for log in logs {
        let summary = RunSummary::of(log)?;
        log.write(&run.path(&format!("run-{}.log", summary.seed)))?;
        summaries.push(summary);
    }
    run.write("summary.tsv", runs_table(&summaries))?;
    run.seal()?;
    print!("{}", totals(&summaries));
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let mut s = args.env.settings()?;
    let agent = Agent::load(&args.checkpoint)?;
    let eps = match args.epsilon {
        Some(e) => e,
        None => s.get_or("epsilon", agent.cfg.epsilon.eval)?,
    };
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Config(format!("epsilon {eps} outside [0, 1]")));
    }
    s.set("strategy", Strategy::Dqn);
    s.set("epsilon", eps);
    let (base, seeds) = batch_seeds(&s, &args.batch)?;
    let net = &agent.net.mlp;
    let logs = run_batch(args.batch.parallel, &seeds, |seed| run_policy(&base.with_seed(seed), net, eps))?;
    write_batch(&RunDir::create(&args.env.out_dir("eval"))?, &s, &logs)
}

fn cmd_baseline(args: &BaselineArgs) -> Result<()> {
    let mut s = args.env.settings()?;
    let strategy = match args.strategy {
        Some(BaselineStrategy::Rs) => Strategy::Random,
        Some(BaselineStrategy::Gs) => Strategy::Greedy,
        None => s.get_or("strategy", Strategy::Random)?,
    };
    let runner = match strategy {
        Strategy::Random => run_random,
        Strategy::Greedy => run_greedy,
        Strategy::Dqn => return Err(Error::Config("baseline strategy must be rs or gs".into())),
    };
    s.set("strategy", strategy);
    let (base, seeds) = batch_seeds(&s, &args.batch)?;
    let logs = run_batch(args.batch.parallel, &seeds, |seed| runner(&base.with_seed(seed)))?;
    write_batch(&RunDir::create(&args.env.out_dir("baseline"))?, &s, &logs)
}

/// Logs of a run directory in name order, or a single log file.
fn read_set(path: &Path) -> Result<Vec<RunSummary>> {
    let files = if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        files.retain(|p| p.extension().is_some_and(|x| x == "log"));
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };
    if files.is_empty() {
        return Err(Error::Config(format!("no execution logs under {}", path.display())));
    }
    files
        .iter()
        .map(|f| {
            let log = ExecutionLog::read(f).map_err(|e| Error::Config(format!("{}: {e}", f.display())))?;
            RunSummary::of(&log)
        })
        .collect()
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<()> {
    let table = comparison_table(&read_set(&args.a)?, &read_set(&args.b)?)?;
    if let Some(out) = &args.out {
        std::fs::write(out, &table)?;
    }
    print!("{table}");
    Ok(())
}

fn cmd_replay(args: &ReplayArgs) -> Result<()> {
    let log = ExecutionLog::read(&args.log)?;
    let report = replay(&log)?;
    print!("{report}");
    println!("steps_checked\t{}", report.steps_checked);
    println!("divergences\t{}", report.divergences.len());
    report.into_result().map(|_| ())
}
