//! Fixed-capacity FIFO experience replay.

use rand::Rng;

use super::nn::Matrix;
use crate::error::{Result, RsmaError};

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

/// A sampled minibatch, one row per transition.
#[derive(Debug, Clone)]
pub struct Batch {
    pub states: Matrix,
    pub actions: Matrix,
    pub rewards: Vec<f64>,
    pub next_states: Matrix,
    pub dones: Vec<bool>,
    pub indices: Vec<usize>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn from_transitions(transitions: &[Transition]) -> Result<Self> {
        let first = transitions.first().ok_or(RsmaError::ShapeMismatch { expected: 1, got: 0 })?;
        let (sd, ad) = (first.state.len(), first.action.len());
        let n = transitions.len();
        let mut states = Vec::with_capacity(n * sd);
        let mut actions = Vec::with_capacity(n * ad);
        let mut next_states = Vec::with_capacity(n * sd);
        for t in transitions {
            states.extend_from_slice(&t.state);
            actions.extend_from_slice(&t.action);
            next_states.extend_from_slice(&t.next_state);
        }
        Ok(Self {
            states: Matrix::from_vec(n, sd, states)?,
            actions: Matrix::from_vec(n, ad, actions)?,
            rewards: transitions.iter().map(|t| t.reward).collect(),
            next_states: Matrix::from_vec(n, sd, next_states)?,
            dones: transitions.iter().map(|t| t.done).collect(),
            indices: (0..n).collect(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    state_dim: usize,
    action_dim: usize,
    states: Vec<f64>,
    actions: Vec<f64>,
    rewards: Vec<f64>,
    next_states: Vec<f64>,
    dones: Vec<bool>,
    len: usize,
    head: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, state_dim: usize, action_dim: usize) -> Self {
        assert!(capacity > 0);
        Self {
            capacity,
            state_dim,
            action_dim,
            states: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            next_states: Vec::new(),
            dones: Vec::new(),
            len: 0,
            head: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Stores a transition, overwriting the oldest one once full.
    pub fn push(&mut self, t: &Transition) -> Result<()> {
        if t.state.len() != self.state_dim || t.next_state.len() != self.state_dim {
            return Err(RsmaError::ShapeMismatch { expected: self.state_dim, got: t.state.len() });
        }
        if t.action.len() != self.action_dim {
            return Err(RsmaError::ShapeMismatch { expected: self.action_dim, got: t.action.len() });
        }
        if !t.reward.is_finite() {
            return Err(crate::error::domain(format!("non-finite reward {}", t.reward)));
        }
        if self.len < self.capacity {
            self.states.extend_from_slice(&t.state);
            self.actions.extend_from_slice(&t.action);
            self.rewards.push(t.reward);
            self.next_states.extend_from_slice(&t.next_state);
            self.dones.push(t.done);
            self.len += 1;
        } else {
            let i = self.head;
            self.states[i * self.state_dim..(i + 1) * self.state_dim].copy_from_slice(&t.state);
            self.actions[i * self.action_dim..(i + 1) * self.action_dim].copy_from_slice(&t.action);
            self.rewards[i] = t.reward;
            self.next_states[i * self.state_dim..(i + 1) * self.state_dim].copy_from_slice(&t.next_state);
            self.dones[i] = t.done;
        }
        self.head = (self.head + 1) % self.capacity;
        Ok(())
    }

    pub fn get(&self, i: usize) -> Option<Transition> {
        if i >= self.len {
            return None;
        }
        Some(Transition {
            state: self.states[i * self.state_dim..(i + 1) * self.state_dim].to_vec(),
            action: self.actions[i * self.action_dim..(i + 1) * self.action_dim].to_vec(),
            reward: self.rewards[i],
            next_state: self.next_states[i * self.state_dim..(i + 1) * self.state_dim].to_vec(),
            done: self.dones[i],
        })
    }

    /// Uniform sampling with replacement.
    pub fn sample(&self, batch_size: usize, rng: &mut impl Rng) -> Result<Batch> {
        if self.len == 0 {
            return Err(RsmaError::ShapeMismatch { expected: batch_size, got: 0 });
        }
        let indices: Vec<usize> = (0..batch_size).map(|_| rng.random_range(0..self.len)).collect();
        let mut states = Vec::with_capacity(batch_size * self.state_dim);
        let mut actions = Vec::with_capacity(batch_size * self.action_dim);
        let mut next_states = Vec::with_capacity(batch_size * self.state_dim);
        for &i in &indices {
            states.extend_from_slice(&self.states[i * self.state_dim..(i + 1) * self.state_dim]);
            actions.extend_from_slice(&self.actions[i * self.action_dim..(i + 1) * self.action_dim]);
            next_states.extend_from_slice(&self.next_states[i * self.state_dim..(i + 1) * self.state_dim]);
        }
        Ok(Batch {
            states: Matrix::from_vec(batch_size, self.state_dim, states)?,
            actions: Matrix::from_vec(batch_size, self.action_dim, actions)?,
            rewards: indices.iter().map(|&i| self.rewards[i]).collect(),
            next_states: Matrix::from_vec(batch_size, self.state_dim, next_states)?,
            dones: indices.iter().map(|&i| self.dones[i]).collect(),
            indices,
        })
    }
}
