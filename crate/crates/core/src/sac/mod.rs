//! Soft actor-critic for the sum-rate problem.

mod agent;
pub mod buffer;
pub mod checkpoint;
pub mod env;
pub mod losses;
pub mod nn;

pub use agent::{evaluate_policy, train, train_agent, SacAgent, SacConfig, TrainedPolicy, TrainingLog, UpdateStats};
pub use buffer::{Batch, ReplayBuffer, Transition};
pub use checkpoint::Checkpoint;
pub use env::{
    action_to_allocation, reward, reward_from_report, FixedScenario, RawAction, ScenarioSampler, StateScaler,
    UniformSampler,
};
