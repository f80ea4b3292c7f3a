//! Soft actor-critic objectives and their exact parameter gradients.
//!
//! The actor outputs `[μ | log σ]` per action dimension. Actions are
//! `a = tanh(μ + σ ε)` with `ε ~ N(0, I)` supplied by the caller, so every
//! function here is deterministic given its noise.

use super::nn::{Matrix, Mlp, MlpCache};

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `ln(1 − tanh²u)` without cancellation for large `|u|`.
fn log_one_minus_tanh_sq(u: f64) -> f64 {
    2.0 * (std::f64::consts::LN_2 - u - softplus(-2.0 * u))
}

/// Reparameterized draws from the squashed Gaussian policy.
#[derive(Debug, Clone)]
pub struct PolicySample {
    pub actions: Matrix,
    pub log_probs: Vec<f64>,
    cache: MlpCache,
    noise: Matrix,
    std: Matrix,
    /// `true` where the raw log-std fell outside the clamp window.
    clamped: Vec<bool>,
}

pub fn sample_policy(actor: &Mlp, states: &Matrix, noise: &Matrix) -> PolicySample {
    let dim = actor.output_dim() / 2;
    assert_eq!(noise.cols(), dim);
    assert_eq!(noise.rows(), states.rows());
    let (out, cache) = actor.forward(states);
    let batch = states.rows();
    let mut actions = Matrix::zeros(batch, dim);
    let mut std = Matrix::zeros(batch, dim);
    let mut clamped = vec![false; batch * dim];
    let mut log_probs = vec![0.0; batch];
    for b in 0..batch {
        let row = out.row(b);
        let mut lp = 0.0;
        for d in 0..dim {
            let raw = row[dim + d];
            let ls = raw.clamp(LOG_STD_MIN, LOG_STD_MAX);
            clamped[b * dim + d] = raw != ls;
            let sigma = ls.exp();
            let eps = noise.get(b, d);
            let u = row[d] + sigma * eps;
            actions.row_mut(b)[d] = u.tanh();
            std.row_mut(b)[d] = sigma;
            lp += -0.5 * eps * eps - ls - HALF_LN_2PI - log_one_minus_tanh_sq(u);
        }
        log_probs[b] = lp;
    }
    PolicySample { actions, log_probs, cache, noise: noise.clone(), std, clamped }
}

/// Deterministic action `tanh(μ)`.
pub fn greedy_actions(actor: &Mlp, states: &Matrix) -> Matrix {
    let dim = actor.output_dim() / 2;
    let out = actor.predict(states);
    let mut a = Matrix::zeros(states.rows(), dim);
    for b in 0..states.rows() {
        for d in 0..dim {
            a.row_mut(b)[d] = out.get(b, d).tanh();
        }
    }
    a
}

/// `y = r + γ (1 − done) (min_j Q̄_j(s′, ã) − α log π(ã|s′))`.
pub fn bellman_targets(
    targets: [&Mlp; 2],
    rewards: &[f64],
    dones: &[bool],
    next_states: &Matrix,
    next: &PolicySample,
    alpha: f64,
    gamma: f64,
) -> Vec<f64> {
    let input = next_states.hcat(&next.actions);
    let q1 = targets[0].predict(&input);
    let q2 = targets[1].predict(&input);
    (0..rewards.len())
        .map(|b| {
            if dones[b] {
                rewards[b]
            } else {
                let soft = q1.get(b, 0).min(q2.get(b, 0)) - alpha * next.log_probs[b];
                rewards[b] + gamma * soft
            }
        })
        .collect()
}

/// Mean squared Bellman residual and its gradient in the critic parameters.
pub fn critic_loss(critic: &Mlp, states: &Matrix, actions: &Matrix, targets: &[f64]) -> (f64, Vec<f64>) {
    let input = states.hcat(actions);
    let (q, cache) = critic.forward(&input);
    let n = targets.len() as f64;
    let mut d_out = Matrix::zeros(targets.len(), 1);
    let mut loss = 0.0;
    for (b, y) in targets.iter().enumerate() {
        let r = q.get(b, 0) - y;
        loss += r * r / n;
        d_out.row_mut(b)[0] = 2.0 * r / n;
    }
    let mut grad = vec![0.0; critic.params().len()];
    critic.backward(&cache, &d_out, Some(&mut grad), false);
    (loss, grad)
}

#[derive(Debug, Clone)]
pub struct ActorLoss {
    pub loss: f64,
    pub grad: Vec<f64>,
    pub log_probs: Vec<f64>,
}

/// `mean(α log π(a|s) − min_i Q_i(s, a))` with reparameterized `a`.
pub fn actor_loss(actor: &Mlp, critics: [&Mlp; 2], states: &Matrix, noise: &Matrix, alpha: f64) -> ActorLoss {
    let sample = sample_policy(actor, states, noise);
    let batch = states.rows();
    let dim = sample.actions.cols();
    let n = batch as f64;
    let input = states.hcat(&sample.actions);
    let (q1, c1) = critics[0].forward(&input);
    let (q2, c2) = critics[1].forward(&input);

    let mut loss = 0.0;
    let mut d1 = Matrix::zeros(batch, 1);
    let mut d2 = Matrix::zeros(batch, 1);
    for b in 0..batch {
        let (a, c) = (q1.get(b, 0), q2.get(b, 0));
        loss += (alpha * sample.log_probs[b] - a.min(c)) / n;
        if a <= c {
            d1.row_mut(b)[0] = -1.0 / n;
        } else {
            d2.row_mut(b)[0] = -1.0 / n;
        }
    }
    let g1 = critics[0].backward(&c1, &d1, None, true).expect("input gradient");
    let g2 = critics[1].backward(&c2, &d2, None, true).expect("input gradient");
    let s_dim = states.cols();

    let mut d_out = Matrix::zeros(batch, 2 * dim);
    for b in 0..batch {
        for d in 0..dim {
            let a = sample.actions.get(b, d);
            let g_a = g1.get(b, s_dim + d) + g2.get(b, s_dim + d);
            // ∂L/∂u through the critic and through the squashing correction
            let du = g_a * (1.0 - a * a) + alpha / n * 2.0 * a;
            let sigma_eps = sample.std.get(b, d) * sample.noise.get(b, d);
            let row = d_out.row_mut(b);
            row[d] = du;
            row[dim + d] = if sample.clamped[b * dim + d] { 0.0 } else { du * sigma_eps - alpha / n };
        }
    }
    let mut grad = vec![0.0; actor.params().len()];
    actor.backward(&sample.cache, &d_out, Some(&mut grad), false);
    ActorLoss { loss, grad, log_probs: sample.log_probs }
}

/// `mean(−α (log π + H0))` and its derivative in `log α`.
pub fn temperature_loss(log_alpha: f64, log_probs: &[f64], target_entropy: f64) -> (f64, f64) {
    let alpha = log_alpha.exp();
    let m = log_probs.iter().map(|lp| lp + target_entropy).sum::<f64>() / log_probs.len() as f64;
    (-alpha * m, -alpha * m)
}
