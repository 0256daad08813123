//! Training loop, greedy evaluation and checkpoints.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::agent::{Agent, AgentConfig, UpdateStats};
use super::buffer::{ReplayBuffer, Transition};
use super::env::{Environment, STATE_DIM};
use super::nn::Mlp;
use super::policy::{orientation_of, ActionBox};
use crate::error::{Error, Result};
use crate::geometry::Orientation;
use crate::harness::config::RlConfig;
use crate::harness::sweep::run_pool;
use crate::harness::Multipath;
use crate::numerics::RngStream;

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub agent: Agent,
    /// Mean reward per step of each episode.
    pub rewards: Vec<f64>,
    /// Trailing sliding-window mean of `rewards`.
    pub smoothed: Vec<f64>,
    /// Share of gated steps per episode.
    pub gated: Vec<f64>,
    /// Last update statistics of each episode; `None` during warm-up.
    pub stats: Vec<Option<UpdateStats>>,
    pub updates: u64,
}

/// Trailing mean over at most `window` values.
pub fn smooth(xs: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    (0..xs.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(w);
            xs[lo..=i].iter().sum::<f64>() / (i + 1 - lo) as f64
        })
        .collect()
}

/// Mean of the first and last `fraction` of a curve.
pub fn head_tail(xs: &[f64], fraction: f64) -> (f64, f64) {
    let k = ((xs.len() as f64 * fraction).round() as usize).clamp(1, xs.len().max(1));
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    (mean(&xs[..k]), mean(&xs[xs.len() - k..]))
}

fn with_episode(e: Error, episode: usize) -> Error {
    match e {
        Error::NonFinite { what, .. } => Error::NonFinite { what, episode },
        other => other,
    }
}

/// Trains an agent on `env` for `rl.episodes` episodes of one Eve
/// trajectory each. Single-threaded and reproducible per `seed`.
pub fn train(env: &Environment, rl: &RlConfig, seed: u64) -> Result<TrainReport> {
    let root = RngStream::new(seed).substream("dsact");
    let bounds = ActionBox::rotation(&env.scenario.rotation);
    let mut agent = Agent::new(STATE_DIM, bounds.clone(), AgentConfig::from(rl), &mut root.substream("init"));
    let mut buffer = ReplayBuffer::new(rl.buffer_capacity);
    let mut act_rng = root.substream("act");
    let mut update_rng = root.substream("update");
    let slots = env.scenario.slots();
    let mut steps = 0usize;
    let mut rewards = Vec::with_capacity(rl.episodes);
    let mut gated = Vec::with_capacity(rl.episodes);
    let mut stats = Vec::with_capacity(rl.episodes);

    for episode in 0..rl.episodes {
        let multipath = env.scenario.draw_multipath(&mut root.indexed("multipath", episode as u64));
        let mut state = env.initial_state();
        let mut total = 0.0;
        let mut blocked = 0usize;
        let mut last = None;
        for slot in 0..slots {
            let features = env.features(&state);
            let action = if steps < rl.warmup_steps {
                bounds.uniform(&mut act_rng)
            } else {
                agent.act(&features, &mut act_rng).action
            };
            let mut sense = root.indexed("sense", (episode * slots + slot) as u64);
            let out = env.step(slot, &orientation_of(&action), &multipath, &state, &mut sense)?;
            total += out.reward;
            blocked += usize::from(!out.feasible);
            let next = env.features(&out.state);
            buffer
                .push(Transition {
                    state: features,
                    action,
                    reward: rl.reward_scale * out.reward,
                    next_state: next,
                    // The trajectory window is a time limit, not a terminal
                    // state, so targets bootstrap through its last slot.
                    done: false,
                })
                .map_err(|_| Error::NonFinite { what: "transition".into(), episode })?;
            state = out.state;
            steps += 1;
            if steps >= rl.warmup_steps && buffer.len() >= rl.batch_size {
                for _ in 0..rl.updates_per_step {
                    let batch = buffer.sample(rl.batch_size, &mut update_rng);
                    last = Some(agent.update(&batch, &mut update_rng).map_err(|e| with_episode(e, episode))?);
                }
            }
        }
        rewards.push(total / slots as f64);
        gated.push(blocked as f64 / slots as f64);
        stats.push(last);
    }
    Ok(TrainReport {
        smoothed: smooth(&rewards, rl.smoothing_window),
        updates: agent.updates,
        agent,
        rewards,
        gated,
        stats,
    })
}

/// How the RIS is turned in each slot of an evaluation run.
#[derive(Debug, Clone, Copy)]
pub enum OrientationPolicy<'a> {
    /// Greedy learned policy.
    Learned(&'a Agent),
    /// Facing Eve's previous-slot position.
    EveAligned,
    Fixed(Orientation),
}

/// Gated secrecy rate per slot of one trajectory under `policy`.
pub fn rollout(env: &Environment, policy: OrientationPolicy<'_>, multipath: &Multipath, sense: &RngStream) -> Result<Vec<f64>> {
    let mut state = env.initial_state();
    let mut out = Vec::with_capacity(env.scenario.slots());
    for slot in 0..env.scenario.slots() {
        let o = match policy {
            OrientationPolicy::Learned(agent) => orientation_of(&agent.greedy(&env.features(&state))),
            OrientationPolicy::EveAligned => env.scenario.eve_aligned(slot),
            OrientationPolicy::Fixed(o) => o,
        };
        let step = env.step(slot, &o, multipath, &state, &mut sense.indexed("slot", slot as u64))?;
        out.push(step.secrecy_rate);
        state = step.state;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Mean gated SR per evaluation seed.
    pub policy: Vec<f64>,
    pub baseline: Vec<f64>,
}

impl EvalReport {
    pub fn policy_mean(&self) -> f64 {
        self.policy.iter().sum::<f64>() / self.policy.len() as f64
    }

    pub fn baseline_mean(&self) -> f64 {
        self.baseline.iter().sum::<f64>() / self.baseline.len() as f64
    }
}

/// Compares a policy with the Eve-aligned baseline on `seeds` fresh
/// multipath draws; both see the same channels and sensing randomness.
/// Seeds run on scoped threads; results keep seed order.
pub fn evaluate(env: &Environment, policy: OrientationPolicy<'_>, seeds: usize, seed: u64) -> Result<EvalReport> {
    let root = RngStream::new(seed).substream("eval");
    let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    let per_seed = |s: usize| -> Result<(f64, f64)> {
        let multipath = env.scenario.draw_multipath(&mut root.indexed("multipath", s as u64));
        let sense = root.indexed("sense", s as u64);
        let p = rollout(env, policy, &multipath, &sense)?;
        let b = rollout(env, OrientationPolicy::EveAligned, &multipath, &sense)?;
        Ok((mean(p), mean(b)))
    };
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let results = run_pool(seeds, workers, per_seed);
    let mut report = EvalReport { policy: Vec::new(), baseline: Vec::new() };
    for r in results {
        let (p, b) = r?;
        report.policy.push(p);
        report.baseline.push(b);
    }
    Ok(report)
}

pub const CHECKPOINT_FORMAT: &str = "ris-dm-lab-dsact-v1";

/// Name and shape of one tensor in a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorShape {
    pub name: String,
    pub shape: Vec<usize>,
}

/// JSON weight dump. Each network's `params` is a flat vector laid out
/// layer by layer as `out x in` row-major weights followed by `out`
/// biases; `manifest` lists those tensors in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub manifest: Vec<TensorShape>,
    pub config: AgentConfig,
    pub bounds: ActionBox,
    pub state_dim: usize,
    pub log_temperature: f64,
    pub actor: Mlp,
    pub critics: [Mlp; 2],
}

fn manifest_of(prefix: &str, net: &Mlp) -> Vec<TensorShape> {
    (0..net.layers())
        .flat_map(|l| {
            let (inp, out) = (net.sizes[l], net.sizes[l + 1]);
            [
                TensorShape { name: format!("{prefix}.{l}.weight"), shape: vec![out, inp] },
                TensorShape { name: format!("{prefix}.{l}.bias"), shape: vec![out] },
            ]
        })
        .collect()
}

impl Checkpoint {
    pub fn from_agent(agent: &Agent) -> Self {
        let mut manifest = manifest_of("actor", &agent.actor);
        manifest.extend(manifest_of("critic0", &agent.critics[0]));
        manifest.extend(manifest_of("critic1", &agent.critics[1]));
        Self {
            format: CHECKPOINT_FORMAT.into(),
            manifest,
            config: agent.config.clone(),
            bounds: agent.bounds.clone(),
            state_dim: agent.state_dim,
            log_temperature: agent.log_temperature,
            actor: agent.actor.clone(),
            critics: agent.critics.clone(),
        }
    }

    fn check(&self) -> Result<()> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unknown format `{}`", self.format)));
        }
        let mut expect = manifest_of("actor", &self.actor);
        expect.extend(manifest_of("critic0", &self.critics[0]));
        expect.extend(manifest_of("critic1", &self.critics[1]));
        if expect != self.manifest {
            return Err(Error::Checkpoint("manifest does not match the stored networks".into()));
        }
        let ad = self.bounds.dim();
        let sized = |n: &Mlp, inp: usize, out: usize| {
            n.sizes.first() == Some(&inp)
                && n.sizes.last() == Some(&out)
                && n.params.len() == (0..n.layers()).map(|l| n.sizes[l + 1] * (n.sizes[l] + 1)).sum::<usize>()
        };
        if !sized(&self.actor, self.state_dim, 2 * ad)
            || !self.critics.iter().all(|c| sized(c, self.state_dim + ad, 2))
        {
            return Err(Error::Checkpoint("network shapes do not match the state and action sizes".into()));
        }
        if !self.actor.params.iter().chain(&self.critics[0].params).chain(&self.critics[1].params).all(|p| p.is_finite()) {
            return Err(Error::Checkpoint("non-finite weight".into()));
        }
        Ok(())
    }

    pub fn into_agent(self) -> Result<Agent> {
        self.check()?;
        let mut agent = Agent::new(
            self.state_dim,
            self.bounds,
            AgentConfig { hidden: 1, ..self.config.clone() },
            &mut RngStream::new(0),
        );
        agent.config = self.config;
        agent.restore(self.actor, self.critics, self.log_temperature);
        Ok(agent)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self).map_err(|e| Error::Checkpoint(e.to_string()))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let c: Self = serde_json::from_str(&text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        c.check()?;
        Ok(c)
    }
}
