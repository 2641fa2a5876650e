use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use oarl::agent::AgentKind;
use oarl::env::{EnvId, ObservationMode};
use oarl::harness::{self, stream_rng, Checkpoint, RunConfig, SeedStatus, Stream};

#[derive(Parser)]
#[command(name = "oarl", version, about = "Obstacle-avoidance RL workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one agent on one environment for every listed seed.
    Train {
        /// Flat TOML file with any configuration keys.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        env: Option<EnvId>,
        #[arg(long)]
        mode: Option<ObservationMode>,
        #[arg(long)]
        agent: Option<AgentKind>,
        #[arg(long)]
        steps: Option<u64>,
        /// Comma-separated list, e.g. 1,2,3.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Any configuration key, e.g. `--override tau=0.005`.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Evaluate a saved agent with exploration disabled.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 10)]
        episodes: usize,
        /// Draw episodes from this seed instead of the checkpoint's evaluation stream.
        #[arg(long)]
        seed: Option<u64>,
        /// Write a per-step CSV trace of the first episode (complex-oa).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Aggregate evaluation curves across seeds into a CSV and an SVG plot.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = harness::report::DEFAULT_SMOOTHING)]
        smooth: f64,
    },
}

#[allow(clippy::too_many_arguments)]
fn train_config(
    config: Option<PathBuf>,
    env: Option<EnvId>,
    mode: Option<ObservationMode>,
    agent: Option<AgentKind>,
    steps: Option<u64>,
    seeds: Option<String>,
    out: Option<PathBuf>,
    overrides: &[String],
) -> Result<RunConfig> {
    let mut cfg = match config {
        Some(path) => RunConfig::from_file(&path)?,
        None => RunConfig::default(),
    };
    cfg = cfg.with_env_vars(std::env::vars())?;
    if let Some(v) = env {
        cfg.env = v;
    }
    if let Some(v) = mode {
        cfg.mode = v;
    }
    if let Some(v) = agent {
        cfg.agent = v;
    }
    if let Some(v) = steps {
        cfg.steps = v;
    }
    if let Some(v) = seeds {
        cfg.seeds = harness::parse_seeds(&v)?;
    }
    if let Some(v) = out {
        cfg.out = v;
    }
    cfg = cfg.with_overrides(overrides)?;
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Train {
            config,
            env,
            mode,
            agent,
            steps,
            seeds,
            out,
            overrides,
        } => {
            let cfg = train_config(config, env, mode, agent, steps, seeds, out, &overrides)?;
            eprintln!(
                "training {} on {}/{} for {} steps, seeds {:?} -> {}",
                cfg.agent,
                cfg.env,
                cfg.mode,
                cfg.steps,
                cfg.seeds,
                cfg.out.display()
            );
            let manifest = harness::train_with_progress(&cfg, &|r| {
                eprintln!("seed {} step {}: mean return {:.1}", r.seed, r.step, r.mean_return)
            })?;
            for s in &manifest.seeds {
                match s.status {
                    SeedStatus::Completed => println!(
                        "seed {}: completed in {:.0}s, final mean return {}",
                        s.seed,
                        s.wall_seconds,
                        s.final_mean_return.map_or("n/a".into(), |m| format!("{m:.1}"))
                    ),
                    SeedStatus::Failed => println!(
                        "seed {}: FAILED after {} steps: {}",
                        s.seed,
                        s.steps_done,
                        s.error.as_deref().unwrap_or("unknown error")
                    ),
                }
            }
            Ok(if manifest.all_completed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::Evaluate {
            checkpoint,
            episodes,
            seed,
            trace,
        } => {
            let ck = Checkpoint::load(&checkpoint)?;
            let env = ck.config.environment()?;
            let mut rng = match seed {
                Some(s) => stream_rng(s, Stream::Eval),
                None => ck.rngs.eval.clone(),
            };
            let returns = harness::evaluate(&ck.agent, &env, episodes, &mut rng)?;
            for (i, r) in returns.iter().enumerate() {
                println!("episode {}: return {r}", i + 1);
            }
            let mean = returns.iter().sum::<f64>() / returns.len().max(1) as f64;
            println!("mean return over {} episodes: {mean}", returns.len());
            if let Some(path) = trace {
                if ck.config.env != EnvId::ComplexOa {
                    bail!("--trace is only available for complex-oa checkpoints");
                }
                let mut trace_rng = match seed {
                    Some(s) => stream_rng(s, Stream::Eval),
                    None => ck.rngs.eval.clone(),
                };
                let first = harness::eval::episode_seeds(&mut trace_rng, 1)[0];
                harness::eval::write_trace(&ck.agent, &env, first, &path)
                    .with_context(|| format!("writing trace to {}", path.display()))?;
                println!("trace of episode 1 written to {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { runs, out, smooth } => {
            let rows = harness::report(&runs, &out, smooth)?;
            if let Some(last) = rows.last() {
                println!(
                    "{} eval points over {} seed(s); final step {}: mean {:.1} (smoothed {:.1}, band [{:.1}, {:.1}])",
                    rows.len(),
                    last.seeds,
                    last.step,
                    last.mean,
                    last.smoothed_mean,
                    last.smoothed_lower,
                    last.smoothed_upper
                );
            }
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
