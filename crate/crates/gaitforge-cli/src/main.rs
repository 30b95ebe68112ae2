//! Command-line entry point: `train`, `eval`, and `inspect`.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gaitforge_core::policy::{checkpoint, Dims, Policy};
use gaitforge_core::trainer::{
    derive_seed, evaluate, train_loop, BipedEnv, Environment, Schedule,
};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "gaitforge", about = "Multi-gait biped locomotion training", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Run configuration file (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dotted-path override, e.g. --set ppo.gamma=0.98 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Master seed; overrides the config value.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config value and GAITFORGE_OUT.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the training loop, writing stats, checkpoints, and the resolved
    /// config to the output directory.
    Train(ConfigArgs),
    /// Evaluate a checkpoint against a commanded-velocity schedule and write
    /// the trace CSV.
    Eval {
        #[command(flatten)]
        config: ConfigArgs,
        /// Checkpoint file to load.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Built-in name ("fig4": 0→3→0 m/s ramp) or a CSV file of
        /// time,v_cmd breakpoints.
        #[arg(long, default_value = "fig4")]
        schedule: String,
        /// Total ramp duration for built-in schedules, s.
        #[arg(long, default_value_t = 30.0)]
        duration: f64,
    },
    /// Print a checkpoint's header and parameter-block checksums.
    Inspect {
        /// Checkpoint file to inspect.
        path: PathBuf,
    },
}

fn resolve_out(args: &ConfigArgs, config: &RunConfig) -> PathBuf {
    args.out
        .clone()
        .or_else(|| std::env::var_os("GAITFORGE_OUT").map(PathBuf::from))
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn load_config(args: &ConfigArgs) -> anyhow::Result<RunConfig> {
    let mut config = config::load(args.config.as_deref(), &args.overrides)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn make_envs(config: &RunConfig) -> Vec<Box<dyn Environment>> {
    (0..config.ppo.env_count)
        .map(|i| {
            let mut env = BipedEnv::train(
                config.model.clone(),
                config.randomization,
                config.gait,
                config.rewards.clone(),
                derive_seed(config.seed, 0, i as u64),
            );
            env.use_curriculum_commands();
            Box::new(env) as Box<dyn Environment>
        })
        .collect()
}

fn cmd_train(args: &ConfigArgs) -> anyhow::Result<()> {
    let config = load_config(args)?;
    let out = resolve_out(args, &config);
    std::fs::create_dir_all(&out)?;
    config::write_resolved(&config, &out)?;

    let dims = Dims {
        hidden: config.policy.hidden,
        ..Dims::default()
    };
    let mut policy = Policy::init(dims, config.seed);
    let mut envs = make_envs(&config);
    let outcome = train_loop(
        &mut policy,
        &mut envs,
        &config.curriculum,
        &config.ppo,
        &config.trainer,
        &out,
        config.seed,
    )?;
    for event in &outcome.events {
        eprintln!("note: {event}");
    }
    println!(
        "trained {} iteration(s), final phase {}, stats in {}",
        outcome.stats.len(),
        config.curriculum[outcome.curriculum.phase].index,
        out.join("stats.csv").display()
    );
    if outcome.events.iter().any(|e| e.contains("stopping")) {
        anyhow::bail!("training hard-stopped after repeated aborted updates");
    }
    Ok(())
}

fn cmd_eval(
    args: &ConfigArgs,
    ckpt: &Path,
    schedule_spec: &str,
    duration: f64,
) -> anyhow::Result<()> {
    let config = load_config(args)?;
    let out = resolve_out(args, &config);
    std::fs::create_dir_all(&out)?;

    let policy = checkpoint::load(ckpt)?;
    let expected = Dims::default();
    if policy.dims.obs != expected.obs || policy.dims.action != expected.action {
        anyhow::bail!(
            "checkpoint dimensions (obs {}, action {}) do not match the robot (obs {}, action {})",
            policy.dims.obs,
            policy.dims.action,
            expected.obs,
            expected.action
        );
    }

    let schedule = match schedule_spec {
        "fig4" => Schedule::ramp(3.0, duration),
        path => Schedule::from_csv(Path::new(path))?,
    };
    let mut env = BipedEnv::eval(
        config.model.clone(),
        config.gait,
        config.rewards.clone(),
        config.seed,
    );
    let trace = evaluate(&policy, &mut env, &schedule);
    let path = out.join("eval_trace.csv");
    trace.write_csv(&path)?;
    println!(
        "wrote {} row(s) to {}{}",
        trace.rows.len(),
        path.display(),
        if trace.fell { " (fall: trace truncated)" } else { "" }
    );
    Ok(())
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x100_0000_01b3);
    }
    hash
}

fn cmd_inspect(path: &Path) -> anyhow::Result<()> {
    let policy = checkpoint::load(path)?;
    println!("format version: {}", checkpoint::VERSION);
    println!("obs dim: {}", policy.dims.obs);
    println!("hidden dim: {}", policy.dims.hidden);
    println!("action dim: {}", policy.dims.action);
    println!("parameters: {}", policy.param_count());
    let mut flat = Vec::new();
    policy.flatten_into(&mut flat);
    let mut offset = 0usize;
    for (name, len) in policy.block_layout() {
        let bytes: Vec<u8> = flat[offset..offset + len]
            .iter()
            .flat_map(|v| v.to_le_bytes())
            .collect();
        println!("{name}: {len} values, checksum {:016x}", fnv1a(&bytes));
        offset += len;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Eval { config, checkpoint, schedule, duration } => {
            cmd_eval(config, checkpoint, schedule, *duration)
        }
        Command::Inspect { path } => cmd_inspect(path),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if usage_error(&e) {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

/// Exit 1 for configuration and input problems, 2 for runtime failures.
fn usage_error(e: &anyhow::Error) -> bool {
    let text = format!("{e:#}");
    text.contains("config")
        || text.contains("override")
        || text.contains("schedule")
        || text.contains("checkpoint")
        || text.contains("dimensions")
}
