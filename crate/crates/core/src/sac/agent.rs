use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::buffer::{Batch, ReplayBuffer, Transition};
use super::env::{
    action_to_allocation, raw_features, reward_from_report, RawAction, ScenarioSampler, StateScaler, STATE_DIM,
};
use super::losses::{actor_loss, bellman_targets, critic_loss, greedy_actions, sample_policy, temperature_loss};
use super::nn::{soft_update, Adam, Matrix, Mlp};
use crate::error::{domain, Result};
use crate::rates::{full_report, Allocation, RateReport, Scenario};

/// Hyperparameters. Defaults follow the usual SAC settings with a
/// contextual-bandit episode of 200 steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SacConfig {
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub alpha_lr: f64,
    pub alpha0: f64,
    pub tau: f64,
    pub gamma_discount: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub hidden_sizes: Vec<usize>,
    /// `None` means `−dim(A)`.
    pub target_entropy: Option<f64>,
    pub psi: f64,
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub seed: u64,
    /// Proper signaling only: κ is pinned to 0 and the action loses a dimension.
    pub pgs: bool,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            actor_lr: 3e-4,
            critic_lr: 3e-4,
            alpha_lr: 3e-4,
            alpha0: 0.2,
            tau: 0.005,
            gamma_discount: 0.99,
            buffer_capacity: 1_000_000,
            batch_size: 256,
            hidden_sizes: vec![256, 256],
            target_entropy: None,
            psi: 10.0,
            episodes: 2000,
            steps_per_episode: 200,
            seed: 0,
            pgs: false,
        }
    }
}

impl SacConfig {
    pub fn action_dim(&self) -> usize {
        if self.pgs {
            3
        } else {
            4
        }
    }

    pub fn target_entropy(&self) -> f64 {
        self.target_entropy.unwrap_or(-(self.action_dim() as f64))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("actor_lr", self.actor_lr),
            ("critic_lr", self.critic_lr),
            ("alpha_lr", self.alpha_lr),
            ("alpha0", self.alpha0),
            ("tau", self.tau),
            ("psi", self.psi),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(domain(format!("{name} must be positive, got {v}")));
            }
        }
        if self.tau > 1.0 {
            return Err(domain(format!("tau must lie in (0, 1], got {}", self.tau)));
        }
        if !(0.0..1.0).contains(&self.gamma_discount) {
            return Err(domain(format!("gamma_discount must lie in [0, 1), got {}", self.gamma_discount)));
        }
        if self.buffer_capacity == 0 || self.batch_size == 0 || self.steps_per_episode == 0 {
            return Err(domain("buffer_capacity, batch_size and steps_per_episode must be positive"));
        }
        if self.hidden_sizes.is_empty() || self.hidden_sizes.contains(&0) {
            return Err(domain("hidden_sizes must be a non-empty list of positive widths"));
        }
        if self.target_entropy.is_some_and(|h| !h.is_finite()) {
            return Err(domain("target_entropy must be finite"));
        }
        Ok(())
    }
}

/// Losses and temperature from one update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub critic1: f64,
    pub critic2: f64,
    pub actor: f64,
    pub temperature: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone)]
pub struct SacAgent {
    config: SacConfig,
    scaler: StateScaler,
    pub actor: Mlp,
    pub critics: [Mlp; 2],
    pub targets: [Mlp; 2],
    pub log_alpha: f64,
    actor_opt: Adam,
    critic_opts: [Adam; 2],
    alpha_opt: Adam,
    rng: ChaCha8Rng,
}

impl SacAgent {
    pub fn new(config: SacConfig, scaler: StateScaler) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let a = config.action_dim();
        let mut sizes = vec![STATE_DIM];
        sizes.extend(&config.hidden_sizes);
        sizes.push(2 * a);
        let mut actor = Mlp::new(&sizes, &mut rng);
        actor.zero_output_layer();
        sizes[0] = STATE_DIM + a;
        *sizes.last_mut().unwrap() = 1;
        let critics = [Mlp::new(&sizes, &mut rng), Mlp::new(&sizes, &mut rng)];
        let targets = critics.clone();
        let n_actor = actor.params().len();
        let n_critic = critics[0].params().len();
        Ok(Self {
            actor_opt: Adam::new(n_actor, config.actor_lr),
            critic_opts: [Adam::new(n_critic, config.critic_lr), Adam::new(n_critic, config.critic_lr)],
            alpha_opt: Adam::new(1, config.alpha_lr),
            log_alpha: config.alpha0.ln(),
            config,
            scaler,
            actor,
            critics,
            targets,
            rng,
        })
    }

    /// Rebuilds an agent from stored networks; optimizer moments start fresh.
    pub(crate) fn from_parts(
        config: SacConfig,
        scaler: StateScaler,
        actor: Mlp,
        critics: [Mlp; 2],
        targets: [Mlp; 2],
        log_alpha: f64,
    ) -> Result<Self> {
        let mut agent = Self::new(config, scaler)?;
        let shapes_ok = actor.sizes() == agent.actor.sizes()
            && critics.iter().chain(&targets).all(|c| c.sizes() == agent.critics[0].sizes());
        if !shapes_ok {
            return Err(crate::RsmaError::Checkpoint("network shapes do not match the stored config".into()));
        }
        agent.actor = actor;
        agent.critics = critics;
        agent.targets = targets;
        agent.log_alpha = log_alpha;
        Ok(agent)
    }

    pub fn config(&self) -> &SacConfig {
        &self.config
    }

    pub fn scaler(&self) -> &StateScaler {
        &self.scaler
    }

    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp()
    }

    fn noise(&mut self, rows: usize) -> Matrix {
        let cols = self.config.action_dim();
        let data = (0..rows * cols).map(|_| StandardNormal.sample(&mut self.rng)).collect();
        Matrix::from_vec(rows, cols, data).expect("sized by construction")
    }

    pub fn state_of(&self, scenario: &Scenario) -> [f64; STATE_DIM] {
        self.scaler.normalize(&raw_features(scenario))
    }

    /// Draws an exploratory action.
    pub fn act(&mut self, state: &[f64]) -> Vec<f64> {
        let s = Matrix::from_vec(1, state.len(), state.to_vec()).expect("row vector");
        let noise = self.noise(1);
        sample_policy(&self.actor, &s, &noise).actions.row(0).to_vec()
    }

    pub fn greedy(&self, state: &[f64]) -> Vec<f64> {
        let s = Matrix::from_vec(1, state.len(), state.to_vec()).expect("row vector");
        greedy_actions(&self.actor, &s).row(0).to_vec()
    }

    pub fn critic_update(&mut self, batch: &Batch) -> (f64, f64) {
        let noise = self.noise(batch.len());
        let next = sample_policy(&self.actor, &batch.next_states, &noise);
        let y = bellman_targets(
            [&self.targets[0], &self.targets[1]],
            &batch.rewards,
            &batch.dones,
            &batch.next_states,
            &next,
            self.alpha(),
            self.config.gamma_discount,
        );
        let mut losses = [0.0; 2];
        for ((critic, opt), out) in self.critics.iter_mut().zip(&mut self.critic_opts).zip(&mut losses) {
            let (loss, grad) = critic_loss(critic, &batch.states, &batch.actions, &y);
            opt.step(critic.params_mut(), &grad);
            *out = loss;
        }
        (losses[0], losses[1])
    }

    /// One actor step; also returns the batch log-probabilities for the temperature step.
    pub fn actor_update(&mut self, batch: &Batch) -> (f64, Vec<f64>) {
        let noise = self.noise(batch.len());
        let out = actor_loss(&self.actor, [&self.critics[0], &self.critics[1]], &batch.states, &noise, self.alpha());
        self.actor_opt.step(self.actor.params_mut(), &out.grad);
        (out.loss, out.log_probs)
    }

    /// One temperature step on fresh policy samples at the batch states.
    pub fn temperature_update(&mut self, batch: &Batch) -> f64 {
        let noise = self.noise(batch.len());
        let lp = sample_policy(&self.actor, &batch.states, &noise).log_probs;
        self.temperature_step(&lp);
        self.alpha()
    }

    fn temperature_step(&mut self, log_probs: &[f64]) -> f64 {
        let (loss, grad) = temperature_loss(self.log_alpha, log_probs, self.config.target_entropy());
        let mut p = [self.log_alpha];
        self.alpha_opt.step(&mut p, &[grad]);
        self.log_alpha = p[0];
        loss
    }

    pub fn soft_update_targets(&mut self) {
        for i in 0..2 {
            soft_update(self.critics[i].params(), self.targets[i].params_mut(), self.config.tau)
                .expect("targets share the critic shape");
        }
    }

    /// Critic, actor and temperature steps followed by target averaging.
    pub fn update(&mut self, batch: &Batch) -> UpdateStats {
        let (critic1, critic2) = self.critic_update(batch);
        let (actor, log_probs) = self.actor_update(batch);
        let temperature = self.temperature_step(&log_probs);
        self.soft_update_targets();
        UpdateStats { critic1, critic2, actor, temperature, alpha: self.alpha() }
    }

    pub fn policy(&self) -> TrainedPolicy {
        TrainedPolicy { actor: self.actor.clone(), scaler: self.scaler }
    }
}

/// Per-episode training trace; every vector has one entry per episode.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub mean_reward: Vec<f64>,
    pub mean_sum_rate: Vec<f64>,
    pub mean_violation: Vec<f64>,
    /// Sum rate of the greedy action at the end of the episode.
    pub greedy_sum_rate: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Mean losses over the episode's updates; 0 when none fired.
    pub critic1_loss: Vec<f64>,
    pub critic2_loss: Vec<f64>,
    pub actor_loss: Vec<f64>,
    pub temperature_loss: Vec<f64>,
    pub updates: Vec<usize>,
    pub buffer_len: usize,
}

impl TrainingLog {
    pub fn episodes(&self) -> usize {
        self.mean_reward.len()
    }
}

/// Deterministic policy: the squashed mean action.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedPolicy {
    pub actor: Mlp,
    pub scaler: StateScaler,
}

impl TrainedPolicy {
    pub fn raw_action(&self, scenario: &Scenario) -> RawAction {
        let s = self.scaler.normalize(&raw_features(scenario));
        let x = Matrix::from_vec(1, STATE_DIM, s.to_vec()).expect("row vector");
        let a = greedy_actions(&self.actor, &x);
        let clamped: Vec<f64> = a.row(0).iter().map(|v| v.clamp(-1.0, 1.0)).collect();
        RawAction::from_policy(&clamped).expect("actor emits 3 or 4 action dimensions")
    }
}

pub fn evaluate_policy(policy: &TrainedPolicy, scenario: &Scenario) -> Result<(Allocation, RateReport)> {
    let alloc = action_to_allocation(&policy.raw_action(scenario), scenario);
    let report = full_report(scenario, &alloc)?;
    Ok((alloc, report))
}

fn env_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15)
}

/// Runs the training loop and returns the agent itself along with the log.
pub fn train_agent(sampler: &mut dyn ScenarioSampler, config: SacConfig) -> Result<(SacAgent, TrainingLog)> {
    let mut agent = SacAgent::new(config, sampler.scaler())?;
    let cfg = agent.config.clone();
    let mut env = env_rng(cfg.seed);
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity, STATE_DIM, cfg.action_dim());
    let mut log = TrainingLog::default();
    for _ in 0..cfg.episodes {
        let scenario = sampler.sample(&mut env);
        let state = agent.state_of(&scenario).to_vec();
        let (mut reward_sum, mut rate_sum, mut viol_sum) = (0.0, 0.0, 0.0);
        let mut loss_sum = [0.0; 4];
        let mut updates = 0usize;
        for t in 0..cfg.steps_per_episode {
            let action = agent.act(&state);
            let alloc = action_to_allocation(&RawAction::from_policy(&action)?, &scenario);
            let report = full_report(&scenario, &alloc)?;
            let reward = reward_from_report(&report, scenario.r_min(), cfg.psi);
            reward_sum += reward;
            rate_sum += report.r_tot;
            viol_sum += report.violation(scenario.r_min());
            buffer.push(&Transition {
                state: state.clone(),
                action,
                reward,
                next_state: state.clone(),
                done: t + 1 == cfg.steps_per_episode,
            })?;
            if buffer.len() >= cfg.batch_size {
                let batch = buffer.sample(cfg.batch_size, &mut agent.rng)?;
                let s = agent.update(&batch);
                for (acc, v) in loss_sum.iter_mut().zip([s.critic1, s.critic2, s.actor, s.temperature]) {
                    *acc += v;
                }
                updates += 1;
            }
        }
        let steps = cfg.steps_per_episode as f64;
        let per_update = |v: f64| if updates > 0 { v / updates as f64 } else { 0.0 };
        log.mean_reward.push(reward_sum / steps);
        log.mean_sum_rate.push(rate_sum / steps);
        log.mean_violation.push(viol_sum / steps);
        log.greedy_sum_rate.push(evaluate_policy(&agent.policy(), &scenario)?.1.r_tot);
        log.alpha.push(agent.alpha());
        log.critic1_loss.push(per_update(loss_sum[0]));
        log.critic2_loss.push(per_update(loss_sum[1]));
        log.actor_loss.push(per_update(loss_sum[2]));
        log.temperature_loss.push(per_update(loss_sum[3]));
        log.updates.push(updates);
    }
    log.buffer_len = buffer.len();
    Ok((agent, log))
}

/// Trains on scenarios from `sampler` and returns the greedy policy.
pub fn train(sampler: &mut dyn ScenarioSampler, config: SacConfig) -> Result<(TrainedPolicy, TrainingLog)> {
    let (agent, log) = train_agent(sampler, config)?;
    Ok((agent.policy(), log))
}
