//! Distributional soft actor-critic with twin value distributions.
//!
//! Each critic outputs the mean and std of a Gaussian return
//! `N(Q(s, a), sigma(s, a)^2)`. The mean is trained on the twin-min soft
//! target, the std on a sampled return clipped to `Q +- b`, and both
//! gradients are rescaled by a running estimate of the return variance.

use serde::{Deserialize, Serialize};

use super::buffer::Transition;
use super::nn::{Adam, Mlp};
use super::policy::{squash, squashed_gaussian_sample, ActionBox, SquashedSample, LOG_STD_MAX, LOG_STD_MIN, SQUASH_EPS};
use crate::error::{Error, Result};
use crate::harness::config::RlConfig;
use crate::numerics::RngStream;

/// Floor added to the softplus std head.
pub const VALUE_STD_MIN: f64 = 1e-2;
/// Upper end of the value-distribution range.
pub const VALUE_STD_MAX: f64 = 30.0;
/// Regulariser in the `sigma^2` and `sigma^3` denominators.
pub const LOSS_EPS: f64 = 0.1;
/// Added to the gradient weight so it never vanishes.
pub const OMEGA_EPS: f64 = 0.1;
/// Target-return noise is clamped to this many standard deviations.
pub const TARGET_NOISE_CLAMP: f64 = 3.0;
/// Clip bounds stay within `[0.5, 2]` times `clip_scale * E[sigma]`.
pub const BOUND_RANGE: (f64, f64) = (0.5, 2.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub hidden: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub temperature_lr: f64,
    pub gamma: f64,
    pub tau: f64,
    pub temperature: f64,
    pub adaptive_temperature: bool,
    pub target_entropy: f64,
    pub bound_rate: f64,
    pub clip_scale: f64,
}

impl From<&RlConfig> for AgentConfig {
    fn from(c: &RlConfig) -> Self {
        Self {
            hidden: c.hidden,
            actor_lr: c.actor_lr,
            critic_lr: c.critic_lr,
            temperature_lr: c.temperature_lr,
            gamma: c.gamma,
            tau: c.soft_update,
            temperature: c.temperature,
            adaptive_temperature: c.adaptive_temperature,
            target_entropy: c.target_entropy,
            bound_rate: c.bound_rate,
            clip_scale: c.clip_scale,
        }
    }
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self::from(&RlConfig::default())
    }
}

/// Instrumentation of one critic step.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticStats {
    /// Mean squared error against the mean target, per critic.
    pub td_error: [f64; 2],
    pub q_mean: [f64; 2],
    pub sigma_mean: [f64; 2],
    /// Clip bounds used in this step.
    pub clip_bounds: [f64; 2],
    pub omega: [f64; 2],
    /// Target critic selected for each sample and both target means.
    pub target_choice: Vec<usize>,
    pub target_q: Vec<[f64; 2]>,
    /// Largest `|C(y1) - Q|` per critic.
    pub clipped_gap: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActorStats {
    pub objective: f64,
    pub entropy: f64,
    pub temperature: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub critic_td: f64,
    pub q_mean: f64,
    pub entropy: f64,
    pub temperature: f64,
}

#[derive(Debug, Clone)]
pub struct Agent {
    pub config: AgentConfig,
    pub bounds: ActionBox,
    pub state_dim: usize,
    pub actor: Mlp,
    pub target_actor: Mlp,
    pub critics: [Mlp; 2],
    pub target_critics: [Mlp; 2],
    actor_opt: Adam,
    critic_opts: [Adam; 2],
    pub log_temperature: f64,
    /// Clip bounds `b` and gradient weights `omega`, set on the first batch.
    pub clip_bounds: Option<[f64; 2]>,
    pub omega: Option<[f64; 2]>,
    pub updates: u64,
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Mean, std and `d std / d raw` of a critic output pair.
fn value_head(out: &[f64]) -> (f64, f64, f64) {
    let sigma = softplus(out[1]) + VALUE_STD_MIN;
    if sigma > VALUE_STD_MAX {
        (out[0], VALUE_STD_MAX, 0.0)
    } else {
        (out[0], sigma, sigmoid(out[1]))
    }
}

fn non_finite(what: &str) -> Error {
    Error::NonFinite {
        what: what.into(),
        episode: 0,
    }
}

impl Agent {
    pub fn new(state_dim: usize, bounds: ActionBox, config: AgentConfig, rng: &mut RngStream) -> Self {
        let ad = bounds.dim();
        let h = config.hidden;
        let actor = Mlp::new(&[state_dim, h, h, 2 * ad], 0.1, rng);
        let critics = [
            Mlp::new(&[state_dim + ad, h, h, 2], 1.0, rng),
            Mlp::new(&[state_dim + ad, h, h, 2], 1.0, rng),
        ];
        Self {
            actor_opt: Adam::new(actor.params.len(), config.actor_lr),
            critic_opts: [
                Adam::new(critics[0].params.len(), config.critic_lr),
                Adam::new(critics[1].params.len(), config.critic_lr),
            ],
            log_temperature: config.temperature.ln(),
            target_actor: actor.clone(),
            target_critics: critics.clone(),
            actor,
            critics,
            config,
            bounds,
            state_dim,
            clip_bounds: None,
            omega: None,
            updates: 0,
        }
    }

    pub fn action_dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn temperature(&self) -> f64 {
        self.log_temperature.exp()
    }

    /// Policy mean and clamped log-std at one state, in pre-squash space.
    pub fn policy_params(&self, state: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let out = self.actor.forward(state, 1);
        let out = out.output();
        let ad = self.action_dim();
        let log_std = out[ad..].iter().map(|l| l.clamp(LOG_STD_MIN, LOG_STD_MAX)).collect();
        (out[..ad].to_vec(), log_std)
    }

    /// Exploratory action.
    pub fn act(&self, state: &[f64], rng: &mut RngStream) -> SquashedSample {
        let (mean, log_std) = self.policy_params(state);
        squashed_gaussian_sample(&mean, &log_std, &self.bounds, rng)
    }

    /// Policy mean mapped into the box; no exploration noise.
    pub fn greedy(&self, state: &[f64]) -> Vec<f64> {
        let (mean, _) = self.policy_params(state);
        let unit: Vec<f64> = mean.iter().map(|m| m.tanh()).collect();
        self.bounds.from_unit(&unit)
    }

    /// Mean and std of both critics at `(state, action)`.
    pub fn q_values(&self, state: &[f64], action: &[f64]) -> [(f64, f64); 2] {
        let mut input = state.to_vec();
        input.extend(self.bounds.to_unit(action));
        let eval = |c: &Mlp| {
            let t = c.forward(&input, 1);
            let (q, s, _) = value_head(t.output());
            (q, s)
        };
        [eval(&self.critics[0]), eval(&self.critics[1])]
    }

    fn critic_input(&self, states: &[&[f64]], units: &[Vec<f64>]) -> Vec<f64> {
        let mut x = Vec::with_capacity(states.len() * (self.state_dim + self.action_dim()));
        for (s, u) in states.iter().zip(units) {
            x.extend_from_slice(s);
            x.extend_from_slice(u);
        }
        x
    }

    /// One step on both critics.
    pub fn critic_update(&mut self, batch: &[&Transition], rng: &mut RngStream) -> Result<CriticStats> {
        let b = batch.len();
        if b == 0 {
            return Err(Error::InvalidArgument("empty batch".into()));
        }
        let ad = self.action_dim();
        let iota = self.temperature();
        let gamma = self.config.gamma;

        let next: Vec<f64> = batch.iter().flat_map(|t| t.next_state.iter().copied()).collect();
        let next_out = self.target_actor.forward(&next, b);
        let next_out = next_out.output();
        let mut next_units = Vec::with_capacity(b);
        let mut next_logp = Vec::with_capacity(b);
        for i in 0..b {
            let o = &next_out[i * 2 * ad..(i + 1) * 2 * ad];
            let s = squashed_gaussian_sample(&o[..ad], &o[ad..], &self.bounds, rng);
            next_units.push(s.unit);
            next_logp.push(s.log_prob);
        }
        let next_states: Vec<&[f64]> = batch.iter().map(|t| t.next_state.as_slice()).collect();
        let next_in = self.critic_input(&next_states, &next_units);
        let t0 = self.target_critics[0].forward(&next_in, b);
        let t1 = self.target_critics[1].forward(&next_in, b);

        let mut target_choice = Vec::with_capacity(b);
        let mut target_q = Vec::with_capacity(b);
        let mut y_mean = Vec::with_capacity(b);
        let mut y_sample = Vec::with_capacity(b);
        for i in 0..b {
            let h0 = value_head(&t0.output()[2 * i..2 * i + 2]);
            let h1 = value_head(&t1.output()[2 * i..2 * i + 2]);
            let (j, (q, s, _)) = if h0.0 <= h1.0 { (0, h0) } else { (1, h1) };
            target_choice.push(j);
            target_q.push([h0.0, h1.0]);
            let t = batch[i];
            let cont = if t.done { 0.0 } else { gamma };
            let z = q + s * rng.gaussian().clamp(-TARGET_NOISE_CLAMP, TARGET_NOISE_CLAMP);
            y_mean.push(t.reward + cont * (q - iota * next_logp[i]));
            y_sample.push(t.reward + cont * (z - iota * next_logp[i]));
        }

        let states: Vec<&[f64]> = batch.iter().map(|t| t.state.as_slice()).collect();
        let units: Vec<Vec<f64>> = batch.iter().map(|t| self.bounds.to_unit(&t.action)).collect();
        let input = self.critic_input(&states, &units);
        let tapes = [self.critics[0].forward(&input, b), self.critics[1].forward(&input, b)];
        let heads: [Vec<(f64, f64, f64)>; 2] = [0, 1].map(|c| {
            (0..b).map(|i| value_head(&tapes[c].output()[2 * i..2 * i + 2])).collect()
        });
        let mean_of = |c: usize, f: &dyn Fn(&(f64, f64, f64)) -> f64| heads[c].iter().map(f).sum::<f64>() / b as f64;
        let sigma_mean = [mean_of(0, &|h| h.1), mean_of(1, &|h| h.1)];
        let var_mean = [mean_of(0, &|h| h.1 * h.1), mean_of(1, &|h| h.1 * h.1)];
        let xi = self.config.clip_scale;
        let bounds = *self.clip_bounds.get_or_insert([xi * sigma_mean[0], xi * sigma_mean[1]]);
        let omega = *self.omega.get_or_insert(var_mean);

        let mut stats = CriticStats {
            td_error: [0.0; 2],
            q_mean: [mean_of(0, &|h| h.0), mean_of(1, &|h| h.0)],
            sigma_mean,
            clip_bounds: bounds,
            omega,
            target_choice,
            target_q,
            clipped_gap: [0.0; 2],
        };
        for c in 0..2 {
            let weight = omega[c] + OMEGA_EPS;
            let mut grad_out = vec![0.0; 2 * b];
            for i in 0..b {
                let (q, s, ds) = heads[c][i];
                let clipped = y_sample[i].clamp(q - bounds[c], q + bounds[c]);
                stats.clipped_gap[c] = stats.clipped_gap[c].max((clipped - q).abs());
                stats.td_error[c] += (y_mean[i] - q).powi(2) / b as f64;
                grad_out[2 * i] = -weight * (y_mean[i] - q) / (s * s + LOSS_EPS) / b as f64;
                let d_sigma = -weight * ((clipped - q).powi(2) - s * s) / (s.powi(3) + LOSS_EPS) / b as f64;
                grad_out[2 * i + 1] = d_sigma * ds;
            }
            let (grads, _) = self.critics[c].backward(&tapes[c], &grad_out);
            if grads.iter().any(|g| !g.is_finite()) {
                return Err(non_finite("critic gradient"));
            }
            self.critic_opts[c].step(&mut self.critics[c].params, &grads);
        }

        let rate = self.config.bound_rate;
        let mut new_bounds = bounds;
        let mut new_omega = omega;
        for c in 0..2 {
            new_omega[c] = rate * var_mean[c] + (1.0 - rate) * omega[c];
            let anchor = xi * sigma_mean[c];
            new_bounds[c] = (rate * anchor + (1.0 - rate) * bounds[c]).clamp(BOUND_RANGE.0 * anchor, BOUND_RANGE.1 * anchor);
        }
        self.clip_bounds = Some(new_bounds);
        self.omega = Some(new_omega);
        Ok(stats)
    }

    /// One step on the actor and, when adaptive, on the temperature.
    pub fn actor_update(&mut self, batch: &[&Transition], rng: &mut RngStream) -> Result<ActorStats> {
        let b = batch.len();
        if b == 0 {
            return Err(Error::InvalidArgument("empty batch".into()));
        }
        let ad = self.action_dim();
        let sd = self.state_dim;
        let iota = self.temperature();
        let states: Vec<f64> = batch.iter().flat_map(|t| t.state.iter().copied()).collect();
        let tape = self.actor.forward(&states, b);
        let out = tape.output();
        let samples: Vec<SquashedSample> = (0..b)
            .map(|i| {
                let o = &out[i * 2 * ad..(i + 1) * 2 * ad];
                let noise = (0..ad).map(|_| rng.gaussian()).collect();
                squash(&o[..ad], &o[ad..], noise, &self.bounds)
            })
            .collect();
        let state_refs: Vec<&[f64]> = batch.iter().map(|t| t.state.as_slice()).collect();
        let units: Vec<Vec<f64>> = samples.iter().map(|s| s.unit.clone()).collect();
        let input = self.critic_input(&state_refs, &units);
        let tapes = [self.critics[0].forward(&input, b), self.critics[1].forward(&input, b)];
        let q = |c: usize, i: usize| tapes[c].output()[2 * i];
        let choice: Vec<usize> = (0..b).map(|i| if q(0, i) <= q(1, i) { 0 } else { 1 }).collect();

        // dQ_min / d unit-action through the selected critic.
        let mut dq = vec![0.0; b * ad];
        for c in 0..2 {
            let mut g = vec![0.0; 2 * b];
            for i in 0..b {
                if choice[i] == c {
                    g[2 * i] = 1.0;
                }
            }
            let (_, dx) = self.critics[c].backward(&tapes[c], &g);
            for i in 0..b {
                for k in 0..ad {
                    dq[i * ad + k] += dx[i * (sd + ad) + sd + k];
                }
            }
        }

        let mut grad_out = vec![0.0; b * 2 * ad];
        let mut objective = 0.0;
        let mut entropy = 0.0;
        for (i, s) in samples.iter().enumerate() {
            objective += (q(choice[i], i) - iota * s.log_prob) / b as f64;
            entropy -= s.log_prob / b as f64;
            for k in 0..ad {
                let raw_ls = out[i * 2 * ad + ad + k];
                let sigma = raw_ls.clamp(LOG_STD_MIN, LOG_STD_MAX).exp();
                let t = s.unit[k];
                let sech2 = 1.0 - t * t;
                let dlogp_du = 2.0 * t * sech2 / (sech2 + SQUASH_EPS);
                let g = dq[i * ad + k];
                let du_dls = sigma * s.noise[k];
                grad_out[i * 2 * ad + k] = (iota * dlogp_du - g * sech2) / b as f64;
                if (LOG_STD_MIN..=LOG_STD_MAX).contains(&raw_ls) {
                    grad_out[i * 2 * ad + ad + k] = (iota * (-1.0 + dlogp_du * du_dls) - g * sech2 * du_dls) / b as f64;
                }
            }
        }
        let (grads, _) = self.actor.backward(&tape, &grad_out);
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(non_finite("actor gradient"));
        }
        self.actor_opt.step(&mut self.actor.params, &grads);
        if self.config.adaptive_temperature {
            self.log_temperature -= self.config.temperature_lr * (entropy - self.config.target_entropy);
        }
        Ok(ActorStats {
            objective,
            entropy,
            temperature: self.temperature(),
        })
    }

    pub fn soft_update_targets(&mut self) {
        let tau = self.config.tau;
        for c in 0..2 {
            self.target_critics[c].soft_update(&self.critics[c], tau);
        }
        self.target_actor.soft_update(&self.actor, tau);
    }

    /// Critic step, actor step, then target tracking.
    pub fn update(&mut self, batch: &[&Transition], rng: &mut RngStream) -> Result<UpdateStats> {
        let c = self.critic_update(batch, rng)?;
        let a = self.actor_update(batch, rng)?;
        self.soft_update_targets();
        self.updates += 1;
        Ok(UpdateStats {
            critic_td: 0.5 * (c.td_error[0] + c.td_error[1]),
            q_mean: 0.5 * (c.q_mean[0] + c.q_mean[1]),
            entropy: a.entropy,
            temperature: a.temperature,
        })
    }

    pub(crate) fn restore(&mut self, actor: Mlp, critics: [Mlp; 2], log_temperature: f64) {
        self.target_actor = actor.clone();
        self.target_critics = critics.clone();
        self.actor = actor;
        self.critics = critics;
        self.log_temperature = log_temperature;
    }
}
