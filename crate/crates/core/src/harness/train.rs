//! Seeded training loop and run directories.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::checkpoint::{Checkpoint, RngStates, CHECKPOINT_FILE, CHECKPOINT_VERSION};
use super::config::{EvalSeeding, RunConfig};
use super::eval::{evaluate, EvalRecord};
use super::records::{
    write_diagnostics, write_eval_csv, write_eval_times, DiagnosticsRow, DIAGNOSTICS_FILE, EVAL_FILE, EVAL_TIMES_FILE,
};
use super::rng::{stream_rng, Stream};
use crate::agent::{ActionSource, HistoryWindow, ReplayBuffer, Td3Agent, Transition, UpdateStats};
use crate::error::{Error, Result};
use crate::par;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.toml";

/// Hook for instrumentation; called synchronously from the training loop.
#[derive(Debug)]
pub enum TrainEvent<'a> {
    Action {
        step: u64,
        action: f64,
        source: ActionSource,
    },
    Update {
        step: u64,
        stats: &'a UpdateStats,
    },
    Eval(&'a EvalRecord),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedStatus {
    Completed,
    Failed,
}

/// Outcome of one seed; on failure everything up to the failing step is kept.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub status: SeedStatus,
    pub error: Option<String>,
    pub steps_done: u64,
    pub records: Vec<EvalRecord>,
    pub diagnostics: Vec<DiagnosticsRow>,
    pub checkpoint: Checkpoint,
}

#[derive(Default)]
struct Window {
    actions: Vec<f64>,
    random: u64,
    critic_losses: Vec<f64>,
    actor_losses: Vec<f64>,
    returns: Vec<f64>,
    clamped: u64,
}

fn mean_opt(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

impl Window {
    fn flush(&mut self, step: u64, episodes: u64, updates: u64) -> DiagnosticsRow {
        let n = self.actions.len().max(1) as f64;
        let mean = self.actions.iter().sum::<f64>() / n;
        let var = self.actions.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
        let row = DiagnosticsRow {
            step,
            episodes,
            updates,
            critic_loss: mean_opt(&self.critic_losses),
            actor_loss: mean_opt(&self.actor_losses),
            action_mean: mean,
            action_std: var.sqrt(),
            random_actions: self.random,
            clamped_actions: self.clamped,
            episode_return: mean_opt(&self.returns),
        };
        *self = Window::default();
        row
    }
}

/// Trains one seed in memory; no files are touched.
pub fn train_seed(cfg: &RunConfig, seed: u64, observer: &mut dyn FnMut(TrainEvent<'_>)) -> Result<SeedRun> {
    cfg.validate()?;
    let env = cfg.environment()?;
    let dim = env.observation_dim();
    let mut env_rng = stream_rng(seed, Stream::Env);
    let mut explore_rng = stream_rng(seed, Stream::Exploration);
    let mut replay_rng = stream_rng(seed, Stream::Replay);
    let mut eval_rng = match cfg.eval_seeding {
        EvalSeeding::PerSeed => stream_rng(seed, Stream::Eval),
        EvalSeeding::Shared => stream_rng(cfg.eval_seed, Stream::Eval),
    };
    let mut agent = Td3Agent::new(
        cfg.agent,
        dim,
        cfg.hyper.clone(),
        &mut stream_rng(seed, Stream::AgentInit),
    )?;
    let mut buffer = ReplayBuffer::new(cfg.hyper.buffer_size)?;
    let mut history = HistoryWindow::new(agent.history_len(), dim);

    let (mut episode, mut obs) = env.reset(&mut env_rng);
    let mut episode_id = 0u64;
    let mut episode_step = 0usize;
    let mut episode_return = 0.0;
    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    let mut window = Window::default();
    let mut error = None;
    let mut steps_done = 0;

    for t in 0..cfg.steps {
        let outcome: Result<()> = (|| {
            let (action, source) = agent.act_training(t, obs.as_slice(), &history.frames(), &mut explore_rng)?;
            observer(TrainEvent::Action {
                step: t,
                action,
                source,
            });
            window.actions.push(action);
            if source == ActionSource::Random {
                window.random += 1;
            }
            let clamped_before = episode.clamped_actions();
            let res = env.step(&mut episode, action)?;
            window.clamped += (episode.clamped_actions() - clamped_before) as u64;
            episode_return += res.reward;
            buffer.push(Transition {
                obs: obs.values.clone(),
                action,
                reward: res.reward,
                next_obs: res.observation.values.clone(),
                done: res.done && !episode.is_truncated(),
                episode: episode_id,
                step: episode_step,
            });
            if res.done {
                window.returns.push(episode_return);
                episode_return = 0.0;
                episode_id += 1;
                episode_step = 0;
                history.reset();
                let (e, o) = env.reset(&mut env_rng);
                episode = e;
                obs = o;
            } else {
                history.push(obs.as_slice());
                obs = res.observation;
                episode_step += 1;
            }
            if agent.should_update(t, &buffer) {
                let stats = agent.update(&buffer, &mut replay_rng)?;
                window.critic_losses.push(stats.critic_loss);
                if let Some(l) = stats.actor_loss {
                    window.actor_losses.push(l);
                }
                observer(TrainEvent::Update { step: t, stats: &stats });
            }
            Ok(())
        })();
        if let Err(e) = outcome {
            error = Some(format!("step {t}: {e}"));
            break;
        }
        steps_done = t + 1;
        if steps_done % cfg.diagnostics_period == 0 {
            diagnostics.push(window.flush(steps_done, episode_id, agent.counters().update_calls));
        }
        if steps_done % cfg.eval_period == 0 {
            let returns = evaluate(&agent, &env, cfg.eval_episodes, &mut eval_rng)?;
            let record = EvalRecord::new(steps_done, seed, returns);
            observer(TrainEvent::Eval(&record));
            records.push(record);
        }
    }
    if steps_done % cfg.diagnostics_period != 0 && !window.actions.is_empty() {
        diagnostics.push(window.flush(steps_done, episode_id, agent.counters().update_calls));
    }

    Ok(SeedRun {
        seed,
        status: if error.is_some() {
            SeedStatus::Failed
        } else {
            SeedStatus::Completed
        },
        error,
        steps_done,
        records,
        diagnostics,
        checkpoint: Checkpoint {
            version: CHECKPOINT_VERSION,
            config: cfg.clone(),
            seed,
            step: steps_done,
            episodes: episode_id,
            agent,
            rngs: RngStates {
                env: env_rng,
                exploration: explore_rng,
                replay: replay_rng,
                eval: eval_rng,
            },
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedEntry {
    pub seed: u64,
    pub status: SeedStatus,
    pub error: Option<String>,
    pub steps_done: u64,
    pub eval_points: usize,
    pub final_mean_return: Option<f64>,
    pub wall_seconds: f64,
    pub dir: PathBuf,
}

/// Top-level index of a training output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: RunConfig,
    pub parallel: bool,
    pub seeds: Vec<SeedEntry>,
}

impl Manifest {
    pub fn load(out: &Path) -> Result<Self> {
        let path = out.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn all_completed(&self) -> bool {
        self.seeds.iter().all(|s| s.status == SeedStatus::Completed)
    }
}

pub fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed_{seed}"))
}

fn write_seed(dir: &Path, run: &SeedRun) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_eval_csv(&dir.join(EVAL_FILE), &run.records)?;
    write_eval_times(&dir.join(EVAL_TIMES_FILE), &run.records)?;
    write_diagnostics(&dir.join(DIAGNOSTICS_FILE), &run.diagnostics)?;
    run.checkpoint.save(&dir.join(CHECKPOINT_FILE))
}

/// Trains every seed of `cfg` (as parallel workers when built with
/// `parallel`) and writes `out/seed_<s>/…` plus `out/manifest.json`.
///
/// A seed that hits a non-finite training signal is recorded as failed;
/// the remaining seeds still run. Returns the manifest.
pub fn train(cfg: &RunConfig) -> Result<Manifest> {
    train_with_progress(cfg, &|_| {})
}

/// As [`train`], reporting every evaluation point as it happens.
pub fn train_with_progress(cfg: &RunConfig, progress: &(dyn Fn(&EvalRecord) + Sync)) -> Result<Manifest> {
    cfg.validate()?;
    let out = &cfg.out;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    std::fs::write(out.join(CONFIG_FILE), cfg.to_toml()).map_err(|e| Error::io(out.join(CONFIG_FILE), e))?;
    let entries = par::map(cfg.seeds.len(), |i| -> Result<SeedEntry> {
        let seed = cfg.seeds[i];
        let started = Instant::now();
        let run = train_seed(cfg, seed, &mut |event| {
            if let TrainEvent::Eval(r) = event {
                progress(r);
            }
        })?;
        let dir = seed_dir(out, seed);
        write_seed(&dir, &run)?;
        Ok(SeedEntry {
            seed,
            status: run.status,
            error: run.error.clone(),
            steps_done: run.steps_done,
            eval_points: run.records.len(),
            final_mean_return: run.records.last().map(|r| r.mean_return),
            wall_seconds: started.elapsed().as_secs_f64(),
            dir,
        })
    });
    let manifest = Manifest {
        config: cfg.clone(),
        parallel: par::is_parallel(),
        seeds: entries.into_iter().collect::<Result<_>>()?,
    };
    let path = out.join(MANIFEST_FILE);
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::Hyperparams;
    use crate::env::EnvId;

    fn tiny(steps: u64) -> RunConfig {
        RunConfig {
            steps,
            eval_period: 500,
            eval_episodes: 4,
            diagnostics_period: 250,
            seeds: vec![1, 2],
            hyper: Hyperparams {
                batch_size: 8,
                buffer_size: 1000,
                start_steps: 300,
                update_after: 300,
                mlp_hidden: vec![16, 16],
                recurrent_width: 8,
                ..Hyperparams::default()
            },
            ..RunConfig::default()
        }
    }

    #[test]
    fn eval_cadence_and_simple_returns() {
        let cfg = tiny(1000);
        let run = train_seed(&cfg, 5, &mut |_| {}).unwrap();
        assert_eq!(run.status, SeedStatus::Completed);
        let steps: Vec<u64> = run.records.iter().map(|r| r.step).collect();
        assert_eq!(steps, vec![500, 1000]);
        for r in &run.records {
            assert!(r.returns.iter().all(|x| x.abs() == 100.0));
            assert_eq!(r.mean_return, r.returns.iter().sum::<f64>() / 4.0);
        }
        assert_eq!(run.diagnostics.len(), 4);
        assert_eq!(run.checkpoint.agent.counters().update_calls, 700);
    }

    #[test]
    fn warm_up_and_update_schedule() {
        let cfg = tiny(600);
        let mut sources = Vec::new();
        let mut update_steps = Vec::new();
        train_seed(&cfg, 3, &mut |e| match e {
            TrainEvent::Action { source, .. } => sources.push(source),
            TrainEvent::Update { step, .. } => update_steps.push(step),
            TrainEvent::Eval(_) => {}
        })
        .unwrap();
        assert_eq!(sources.iter().filter(|s| **s == ActionSource::Random).count(), 300);
        assert!(sources[..300].iter().all(|s| *s == ActionSource::Random));
        assert_eq!(update_steps, (300..600).collect::<Vec<_>>());
    }

    #[test]
    fn same_seed_same_records() {
        let mut cfg = tiny(1000);
        cfg.agent = crate::agent::AgentKind::LstmTd3;
        cfg.mode = crate::env::ObservationMode::Rv;
        let a = train_seed(&cfg, 7, &mut |_| {}).unwrap();
        let b = train_seed(&cfg, 7, &mut |_| {}).unwrap();
        let returns = |r: &SeedRun| r.records.iter().map(|x| x.returns.clone()).collect::<Vec<_>>();
        assert_eq!(returns(&a), returns(&b));
        assert_eq!(a.checkpoint.agent, b.checkpoint.agent);
    }

    #[test]
    fn run_directory_layout_and_failure_isolation() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny(500);
        cfg.out = dir.path().to_path_buf();
        cfg.env = EnvId::ComplexOa;
        cfg.eval_episodes = 1;
        let manifest = train(&cfg).unwrap();
        assert!(manifest.all_completed());
        for s in &cfg.seeds {
            let d = seed_dir(dir.path(), *s);
            for f in [EVAL_FILE, DIAGNOSTICS_FILE, CHECKPOINT_FILE] {
                assert!(d.join(f).exists(), "{f}");
            }
        }
        assert_eq!(Manifest::load(dir.path()).unwrap(), manifest);

        // A learning rate this large drives the critics to overflow.
        let mut bad = tiny(500);
        bad.out = dir.path().join("bad");
        bad.hyper.critic_lr = 1e300;
        bad.hyper.actor_lr = 1e300;
        let manifest = train(&bad).unwrap();
        assert!(manifest.seeds.iter().all(|s| s.status == SeedStatus::Failed));
        assert!(manifest.seeds[0].error.as_deref().unwrap().contains("non-finite"));
    }
}
